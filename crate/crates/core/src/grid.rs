//! Table model: 1-based cell coordinates, directions, ingestion and serialization.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker for a missing cell value.
pub const MISSING: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
}

impl CellRef {
    pub const fn new(row: usize, col: usize) -> Self {
        CellRef { row, col }
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    U,
    D,
    L,
    R,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::U, Direction::D, Direction::L, Direction::R];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::U => (-1, 0),
            Direction::D => (1, 0),
            Direction::L => (0, -1),
            Direction::R => (0, 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::U => "u",
            Direction::D => "d",
            Direction::L => "l",
            Direction::R => "r",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "u" => Some(Direction::U),
            "d" => Some(Direction::D),
            "l" => Some(Direction::L),
            "r" => Some(Direction::R),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("row {0} has a different number of cells than row 1")]
    RaggedRows(usize),
    #[error("table is empty")]
    EmptyTable,
    #[error("malformed table: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup<'a> {
    Value(&'a str),
    OutOfRange,
}

impl<'a> Lookup<'a> {
    pub fn value(self) -> Option<&'a str> {
        match self {
            Lookup::Value(v) => Some(v),
            Lookup::OutOfRange => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotSameLine;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    rows: usize,
    cols: usize,
    values: Vec<String>,
}

#[derive(Deserialize, Serialize)]
struct JsonTable {
    rows: Vec<Vec<String>>,
}

impl Grid {
    pub fn from_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Grid, GridError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(GridError::EmptyTable);
        }
        let cols = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(GridError::RaggedRows(i + 1));
            }
            values.extend(row.iter().map(|s| s.as_ref().to_string()));
        }
        Ok(Grid { rows: rows.len(), cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn contains(&self, c: CellRef) -> bool {
        c.row >= 1 && c.col >= 1 && c.row <= self.rows && c.col <= self.cols
    }

    pub fn value_at(&self, c: CellRef) -> Lookup<'_> {
        if self.contains(c) {
            Lookup::Value(&self.values[(c.row - 1) * self.cols + c.col - 1])
        } else {
            Lookup::OutOfRange
        }
    }

    /// Value of an in-range cell; panics otherwise.
    pub fn get(&self, c: CellRef) -> &str {
        self.value_at(c).value().expect("cell out of range")
    }

    pub fn is_missing(&self, c: CellRef) -> bool {
        self.value_at(c) == Lookup::Value(MISSING)
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellRef> + '_ {
        (1..=self.rows).flat_map(move |r| (1..=self.cols).map(move |c| CellRef::new(r, c)))
    }

    pub fn step(&self, c: CellRef, dir: Direction) -> Option<CellRef> {
        let (dr, dc) = dir.delta();
        let r = c.row as isize + dr;
        let k = c.col as isize + dc;
        if r < 1 || k < 1 {
            return None;
        }
        let n = CellRef::new(r as usize, k as usize);
        self.contains(n).then_some(n)
    }

    /// Cells from `start` (inclusive) walking in `dir` to the table edge.
    pub fn walk(&self, start: CellRef, dir: Direction) -> Vec<CellRef> {
        let mut out = Vec::new();
        let mut cur = Some(start).filter(|c| self.contains(*c));
        while let Some(c) = cur {
            out.push(c);
            cur = self.step(c, dir);
        }
        out
    }

    pub fn line_range(&self, from: CellRef, to: CellRef) -> Result<Vec<CellRef>, NotSameLine> {
        if from.row == to.row {
            Ok(span(from.col, to.col).map(|c| CellRef::new(from.row, c)).collect())
        } else if from.col == to.col {
            Ok(span(from.row, to.row).map(|r| CellRef::new(r, from.col)).collect())
        } else {
            Err(NotSameLine)
        }
    }

    pub fn distinct_values(&self) -> Vec<String> {
        let mut v: Vec<String> = self.values.clone();
        v.sort();
        v.dedup();
        v
    }

    pub fn to_rows(&self) -> Vec<Vec<String>> {
        self.values.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    pub fn with_values(&self, updates: &[(CellRef, String)]) -> Grid {
        let mut g = self.clone();
        for (c, v) in updates {
            if self.contains(*c) {
                g.values[(c.row - 1) * self.cols + c.col - 1] = v.clone();
            }
        }
        g
    }

    /// Replace every value equal to `token` by the missing marker.
    pub fn remap_missing(&self, token: &str) -> Grid {
        let mut g = self.clone();
        for v in &mut g.values {
            if v == token {
                *v = MISSING.to_string();
            }
        }
        g
    }

    pub fn serialize(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
                for row in self.to_rows() {
                    w.write_record(&row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
            }
            Format::Json => serde_json::to_string(&JsonTable { rows: self.to_rows() }).expect("json"),
        }
    }
}

fn span(a: usize, b: usize) -> Box<dyn Iterator<Item = usize>> {
    if a <= b {
        Box::new(a..=b)
    } else {
        Box::new((b..=a).rev())
    }
}

pub fn parse_table(text: &str, format: Format) -> Result<Grid, GridError> {
    let rows: Vec<Vec<String>> = match format {
        Format::Csv => {
            let mut r = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(text.as_bytes());
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(|e| GridError::Malformed(e.to_string()))?;
                rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
            }
            rows
        }
        Format::Json => {
            let t: JsonTable =
                serde_json::from_str(text).map_err(|e| GridError::Malformed(e.to_string()))?;
            t.rows
        }
    };
    Grid::from_rows(&rows)
}

/// Parses a spreadsheet column label (`A`, `B`, ..., `AA`) or a decimal index.
pub fn parse_col(s: &str) -> Option<usize> {
    let s = s.trim();
    if let Ok(n) = s.parse::<usize>() {
        return (n >= 1).then_some(n);
    }
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let mut n = 0usize;
    for ch in s.chars() {
        n = n.checked_mul(26)? + (ch.to_ascii_uppercase() as usize - 'A' as usize + 1);
    }
    Some(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex62() -> Grid {
        parse_table("4,5\n6,?", Format::Csv).unwrap()
    }

    #[test]
    fn parse_examples() {
        let g = ex62();
        assert_eq!((g.rows(), g.cols()), (2, 2));
        assert_eq!(g.value_at(CellRef::new(2, 2)), Lookup::Value("?"));
        let one = parse_table("x", Format::Csv).unwrap();
        assert_eq!((one.rows(), one.cols()), (1, 1));
        assert_eq!(parse_table("a,b\nc", Format::Csv), Err(GridError::RaggedRows(2)));
        assert_eq!(parse_table("", Format::Csv), Err(GridError::EmptyTable));
        let j = parse_table(r#"{"rows":[["4","5"],["6","?"]]}"#, Format::Json).unwrap();
        assert_eq!(j, g);
    }

    #[test]
    fn trims_cells() {
        let g = parse_table(" a , b \n c,d", Format::Csv).unwrap();
        assert_eq!(g.get(CellRef::new(1, 2)), "b");
        assert_eq!(g.get(CellRef::new(2, 1)), "c");
    }

    #[test]
    fn value_at_examples() {
        let g = ex62();
        assert_eq!(g.value_at(CellRef::new(1, 2)), Lookup::Value("5"));
        assert_eq!(g.value_at(CellRef::new(3, 1)), Lookup::OutOfRange);
        assert_eq!(g.value_at(CellRef::new(0, 0)), Lookup::OutOfRange);
    }

    #[test]
    fn line_range_examples() {
        let g = parse_table("a,b,c\nd,e,f\ng,h,i", Format::Csv).unwrap();
        let c = CellRef::new;
        assert_eq!(g.line_range(c(1, 1), c(1, 3)), Ok(vec![c(1, 1), c(1, 2), c(1, 3)]));
        assert_eq!(g.line_range(c(3, 2), c(1, 2)), Ok(vec![c(3, 2), c(2, 2), c(1, 2)]));
        assert_eq!(g.line_range(c(1, 1), c(2, 2)), Err(NotSameLine));
        assert_eq!(g.line_range(c(2, 2), c(2, 2)), Ok(vec![c(2, 2)]));
    }

    #[test]
    fn column_labels() {
        assert_eq!(parse_col("A"), Some(1));
        assert_eq!(parse_col("D"), Some(4));
        assert_eq!(parse_col("AA"), Some(27));
        assert_eq!(parse_col("3"), Some(3));
        assert_eq!(parse_col("0"), None);
        assert_eq!(parse_col("A1"), None);
    }

    #[test]
    fn remaps_token() {
        let g = parse_table("1,NA\n,2", Format::Csv).unwrap();
        assert!(g.remap_missing("NA").is_missing(CellRef::new(1, 2)));
        assert!(g.remap_missing("").is_missing(CellRef::new(2, 1)));
    }
}
