//! Recursive-descent parser for the concrete program syntax. Printing lives in
//! the `Display` impls of the AST types.

use thiserror::Error;

use super::{Atom, CellProg, ExtractorProgram, Mapper, Predicate, SimpleProg};
use crate::grid::Direction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("GetCell nesting depth {depth} exceeds the cap of {cap}")]
    DepthExceeded { depth: usize, cap: usize },
}

pub fn parse_program(text: &str) -> Result<ExtractorProgram, ParseError> {
    let mut p = Parser::new(text);
    let prog = p.prog()?;
    p.end()?;
    Ok(prog)
}

/// Like [`parse_program`] but rejects programs nesting `GetCell` deeper than `cap`.
pub fn parse_program_capped(text: &str, cap: usize) -> Result<ExtractorProgram, ParseError> {
    let prog = parse_program(text)?;
    let depth = prog.max_depth();
    if depth > cap {
        return Err(ParseError::DepthExceeded { depth, cap });
    }
    Ok(prog)
}

pub fn parse_cellprog(text: &str) -> Result<CellProg, ParseError> {
    let mut p = Parser::new(text);
    let c = p.cell()?;
    p.end()?;
    Ok(c)
}

pub fn parse_predicate(text: &str) -> Result<Predicate, ParseError> {
    let mut p = Parser::new(text);
    let c = p.pred()?;
    p.end()?;
    Ok(c)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek_kw(&mut self, kw: &str) -> bool {
        self.ws();
        self.rest().starts_with(kw)
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek_kw(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(format!("expected `{tok}`"))
        }
    }

    fn end(&mut self) -> Result<(), ParseError> {
        self.ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn prog(&mut self) -> Result<ExtractorProgram, ParseError> {
        let mut branches = Vec::new();
        let mut open = 0;
        while self.eat("Seq(") {
            branches.push(self.simple()?);
            self.expect(",")?;
            open += 1;
        }
        branches.push(self.simple()?);
        for _ in 0..open {
            self.expect(")")?;
        }
        Ok(ExtractorProgram::new(branches))
    }

    fn simple(&mut self) -> Result<SimpleProg, ParseError> {
        if self.eat("List(") {
            let mut cells = vec![self.cell()?];
            while self.eat(",") {
                cells.push(self.cell()?);
            }
            self.expect(")")?;
            Ok(SimpleProg::List(cells))
        } else if self.eat("Filter(") {
            let src = self.cell()?;
            self.expect(",")?;
            let from = self.cell()?;
            self.expect(",")?;
            let to = self.cell()?;
            self.expect(",")?;
            let pred = self.pred()?;
            self.expect(")")?;
            Ok(SimpleProg::Filter { src, from, to, pred })
        } else {
            Ok(SimpleProg::List(vec![self.cell()?]))
        }
    }

    fn cell(&mut self) -> Result<CellProg, ParseError> {
        if self.eat("GetCell(") {
            let inner = self.cell()?;
            self.expect(",")?;
            let dir = self.dir()?;
            self.expect(",")?;
            let k = self.int()?;
            if k == 0 || k.abs() > 3 {
                return self.err(format!("k must be one of ±1, ±2, ±3, got {k}"));
            }
            self.expect(",")?;
            let pred = self.pred()?;
            self.expect(")")?;
            Ok(CellProg::get_cell(inner, dir, k as i8, pred))
        } else if self.peek_kw("x") && !self.rest()[1..].starts_with(|c: char| c.is_alphanumeric()) {
            self.pos += 1;
            Ok(CellProg::X)
        } else {
            self.err("expected `x` or `GetCell(`")
        }
    }

    fn dir(&mut self) -> Result<Direction, ParseError> {
        self.ws();
        let d = self.rest().get(..1).and_then(Direction::parse);
        match d {
            Some(d) => {
                self.pos += 1;
                Ok(d)
            }
            None => self.err("expected direction u, d, l or r"),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        self.ws();
        let r = self.rest();
        let mut n = 0;
        if r.starts_with('-') {
            n = 1;
        }
        n += r[n..].bytes().take_while(u8::is_ascii_digit).count();
        match r[..n].parse::<i64>() {
            Ok(v) => {
                self.pos += n;
                Ok(v)
            }
            Err(_) => self.err("expected integer"),
        }
    }

    fn pred(&mut self) -> Result<Predicate, ParseError> {
        self.expect("\\y.")?;
        self.expect("\\z.")?;
        let mut atoms = vec![self.atom()?];
        while self.eat("&&") {
            atoms.push(self.atom()?);
        }
        let has_true = atoms.contains(&Atom::True);
        if has_true && atoms.iter().any(|a| *a != Atom::True) {
            return self.err("`True` cannot be conjoined with other atoms");
        }
        Ok(Predicate::new(atoms))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        if self.eat("True") {
            return Ok(Atom::True);
        }
        self.expect("Val(")?;
        let at = self.pos;
        let (var, m) = self.mapper()?;
        self.expect(")")?;
        let eq = if self.eat("==") {
            true
        } else if self.eat("!=") {
            false
        } else {
            return self.err("expected `==` or `!=`");
        };
        if self.peek_kw("\"") {
            if var != 'z' {
                self.pos = at;
                return self.err("constant comparisons must use a mapper over z");
            }
            let s = self.string()?;
            return Ok(if eq { Atom::EqConst(m, s) } else { Atom::NeqConst(m, s) });
        }
        if !eq {
            return self.err("cell comparisons only support `==`");
        }
        if var != 'y' {
            self.pos = at;
            return self.err("cell comparisons start with a mapper over y");
        }
        self.expect("Val(")?;
        let at2 = self.pos;
        let (var2, m2) = self.mapper()?;
        if var2 != 'z' || m2 != m {
            self.pos = at2;
            return self.err("both sides of a cell comparison must use the same mapper");
        }
        self.expect(")")?;
        Ok(Atom::EqCells(m))
    }

    fn mapper(&mut self) -> Result<(char, Mapper), ParseError> {
        self.ws();
        for v in ['y', 'z'] {
            if self.rest().starts_with(v) {
                self.pos += 1;
                return Ok((v, Mapper::Identity));
            }
        }
        self.expect("(")?;
        if self.eat("row(") {
            let v = self.var()?;
            self.expect(")")?;
            self.expect(",")?;
            let k = self.index()?;
            self.expect(")")?;
            return Ok((v, Mapper::SetCol(k)));
        }
        let k = self.index()?;
        self.expect(",")?;
        self.expect("col(")?;
        let v = self.var()?;
        self.expect(")")?;
        self.expect(")")?;
        Ok((v, Mapper::SetRow(k)))
    }

    fn var(&mut self) -> Result<char, ParseError> {
        self.ws();
        match self.rest().chars().next() {
            Some(v @ ('y' | 'z')) => {
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected `y` or `z`"),
        }
    }

    fn index(&mut self) -> Result<usize, ParseError> {
        let v = self.int()?;
        if v < 1 {
            return self.err("indices are 1-based");
        }
        Ok(v as usize)
    }

    fn string(&mut self) -> Result<String, ParseError> {
        self.expect("\"")?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, ch)) = chars.next() {
            match ch {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    _ => {
                        self.pos += i;
                        return self.err("bad escape in string");
                    }
                },
                c => out.push(c),
            }
        }
        self.err("unterminated string")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX25: &str =
        r#"Seq(GetCell(x, u, 1, \y.\z. Val(z) != "?"), GetCell(x, d, 1, \y.\z. Val(z) != "?"))"#;

    #[test]
    fn example_25_round_trip() {
        let p = parse_program(EX25).unwrap();
        assert_eq!(p.branches().len(), 2);
        assert_eq!(p.to_string(), EX25);
    }

    #[test]
    fn grammar_forms() {
        let texts = [
            r#"GetCell(x, u, 1, \y.\z. Val(z) != "?" && Val((row(y), 1)) == Val((row(z), 1)))"#,
            r#"Filter(x, GetCell(x, u, 1, \y.\z. Val(z) == ""), x, \y.\z. Val(z) != "")"#,
            r#"List(x, GetCell(x, r, -3, \y.\z. Val((2, col(z))) == "a\"b"))"#,
            r#"Seq(x, Seq(List(x, x), Filter(x, x, x, \y.\z. True)))"#,
        ];
        for t in texts {
            assert_eq!(parse_program(t).unwrap().to_string(), t);
        }
    }

    #[test]
    fn list_keyword_optional_for_singletons() {
        let a = parse_program("List(GetCell(x, u, 2, \\y.\\z. True))").unwrap();
        let b = parse_program("GetCell(x, u, 2, \\y.\\z. True)").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "GetCell(x, u, 2, \\y.\\z. True)");
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse_program("GetCel(x)"), Err(ParseError::Syntax { pos: 0, .. })));
        assert!(matches!(
            parse_program("GetCell(x, q, 1, \\y.\\z. True)"),
            Err(ParseError::Syntax { pos: 11, .. })
        ));
        assert!(parse_program("GetCell(x, u, 0, \\y.\\z. True)").is_err());
        assert!(parse_program("GetCell(x, u, 4, \\y.\\z. True)").is_err());
        assert!(parse_program("x x").is_err());
        assert!(parse_program("Val(y) == Val(z)").is_err());
        assert!(parse_predicate("\\y.\\z. Val(y) == Val((row(z), 1))").is_err());
        assert!(parse_predicate("\\y.\\z. True && Val(z) == \"a\"").is_err());
    }

    #[test]
    fn depth_cap() {
        let deep = "GetCell(GetCell(x, u, 1, \\y.\\z. True), u, 1, \\y.\\z. True)";
        assert!(parse_program_capped(deep, 2).is_ok());
        assert_eq!(
            parse_program_capped(deep, 1),
            Err(ParseError::DepthExceeded { depth: 2, cap: 1 })
        );
    }
}
