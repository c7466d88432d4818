use std::sync::Arc;

use proptest::prelude::*;

use dacex_core::fta::{build_base, build_fta, intersect, Fta};
use dacex_core::grid::{parse_table, CellRef, Direction, Format, Grid};
use dacex_core::harness::{check_intersection, check_rank, check_soundness_completeness, Instance};
use dacex_core::lang::{
    parse_program, select, Atom, CellProg, ExtractorProgram, Mapper, Predicate, SimpleProg, K_VALUES,
};
use dacex_core::preds::DEFAULT_MAX_PREDICATES;
use dacex_core::score::ScoreConfig;
use dacex_core::sketch::{parse_sketch, Func, Sketch};
use dacex_core::synth::{ExampleSet, SynthConfig, Synthesizer};

fn value() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => prop::sample::select(vec!["a", "b", "?", "1", "2", ""]).prop_map(String::from),
        1 => "[a-z0-9 ,\"?]{0,5}".prop_map(|s| s.trim().to_string()),
    ]
}

fn grid(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Grid> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(value(), c), r)
            .prop_map(|rows| Grid::from_rows(&rows).expect("rectangular"))
    })
}

fn small_grid() -> impl Strategy<Value = Grid> {
    (1..=3usize, 1..=3usize).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(prop::sample::select(vec!["a", "b", "?"]), c), r)
            .prop_map(|rows| Grid::from_rows(&rows).expect("rectangular"))
    })
}

fn direction() -> impl Strategy<Value = Direction> {
    prop::sample::select(Direction::ALL.to_vec())
}

fn mapper() -> impl Strategy<Value = Mapper> {
    prop_oneof![Just(Mapper::Identity), (1..5usize).prop_map(Mapper::SetRow), (1..5usize).prop_map(Mapper::SetCol)]
}

fn atom() -> impl Strategy<Value = Atom> {
    let s = "[a-z?\"\\\\ ]{0,3}";
    prop_oneof![
        Just(Atom::True),
        (mapper(), s).prop_map(|(m, s)| Atom::EqConst(m, s)),
        (mapper(), s).prop_map(|(m, s)| Atom::NeqConst(m, s)),
        mapper().prop_map(Atom::EqCells),
    ]
}

fn predicate() -> impl Strategy<Value = Predicate> {
    prop::collection::vec(atom(), 1..=3).prop_map(Predicate::new)
}

fn cellprog() -> impl Strategy<Value = CellProg> {
    Just(CellProg::X).prop_recursive(4, 8, 1, |inner| {
        (inner, direction(), prop::sample::select(K_VALUES.to_vec()), predicate())
            .prop_map(|(t, d, k, p)| CellProg::get_cell(t, d, k, p))
    })
}

fn simple() -> impl Strategy<Value = SimpleProg> {
    prop_oneof![
        prop::collection::vec(cellprog(), 1..=3).prop_map(SimpleProg::List),
        (cellprog(), cellprog(), cellprog(), predicate())
            .prop_map(|(src, from, to, pred)| SimpleProg::Filter { src, from, to, pred }),
    ]
}

fn program() -> impl Strategy<Value = ExtractorProgram> {
    prop::collection::vec(simple(), 1..=3).prop_map(ExtractorProgram::new)
}

fn sketch() -> impl Strategy<Value = Sketch> {
    let leaf = prop_oneof![
        (1..20u32).prop_map(Sketch::Hole),
        "[a-z0-9 .\"\\\\-]{0,4}".prop_map(Sketch::Const),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        (prop::sample::select(Func::ALL.to_vec()), prop::collection::vec(inner, 1..=3)).prop_filter_map(
            "arity",
            |(f, args)| {
                let args = match f {
                    Func::Minus if args.len() != 2 => return None,
                    Func::Id if args.len() != 1 => return None,
                    _ => args,
                };
                Some(Sketch::Func(f, args))
            },
        )
    })
}

fn cell_in(g: &Grid) -> impl Strategy<Value = CellRef> + Clone {
    (1..=g.rows(), 1..=g.cols()).prop_map(|(r, c)| CellRef::new(r, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_and_json_tables_round_trip(g in grid(4, 4)) {
        for f in [Format::Csv, Format::Json] {
            prop_assert_eq!(&parse_table(&g.serialize(f), f).unwrap(), &g);
        }
    }

    #[test]
    fn line_range_reverses((g, a, b) in grid(4, 4).prop_flat_map(|g| {
        let (r, c) = (g.rows(), g.cols());
        (Just(g), (1..=r, 1..=c), (1..=r, 1..=c))
    })) {
        let (a, b) = (CellRef::new(a.0, a.1), CellRef::new(b.0, b.1));
        match (g.line_range(a, b), g.line_range(b, a)) {
            (Ok(fwd), Ok(back)) => {
                prop_assert_eq!(fwd.first(), Some(&a));
                prop_assert_eq!(fwd.last(), Some(&b));
                let mut rev = back.clone();
                rev.reverse();
                prop_assert_eq!(fwd, rev);
            }
            (Err(_), Err(_)) => prop_assert!(a.row != b.row && a.col != b.col),
            _ => prop_assert!(false, "asymmetric line_range"),
        }
    }

    #[test]
    fn walks_start_at_the_cell((g, c) in grid(4, 4).prop_flat_map(|g| { let s = cell_in(&g); (Just(g), s) }), d in direction()) {
        let w = g.walk(c, d);
        prop_assert_eq!(w.first(), Some(&c));
        prop_assert_eq!(select(&g, c, d, 1, &Predicate::truth()), Some(c));
        prop_assert_eq!(select(&g, c, d, -1, &Predicate::truth()), w.last().copied());
    }

    #[test]
    fn programs_print_and_parse_back(p in program()) {
        let text = p.to_string();
        prop_assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn sketches_print_and_parse_back(s in sketch()) {
        prop_assert_eq!(parse_sketch(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn seq_falls_through_on_bottom(
        (g, c) in grid(3, 3).prop_flat_map(|g| { let s = cell_in(&g); (Just(g), s) }),
        a in simple(),
        b in simple(),
    ) {
        let seq = ExtractorProgram::new(vec![a.clone(), b.clone()]);
        let want = a.eval(&g, c).or_else(|| b.eval(&g, c));
        prop_assert_eq!(seq.eval(&g, c), want);
    }

    #[test]
    fn list_is_pointwise(
        (g, c) in grid(3, 3).prop_flat_map(|g| { let s = cell_in(&g); (Just(g), s) }),
        cs in prop::collection::vec(cellprog(), 1..=3),
    ) {
        let got = SimpleProg::List(cs.clone()).eval(&g, c);
        let want: Option<Vec<CellRef>> = cs.iter().map(|t| t.eval(&g, c)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn results_stay_in_the_table(
        (g, c) in grid(3, 3).prop_flat_map(|g| { let s = cell_in(&g); (Just(g), s) }),
        p in program(),
    ) {
        if let Some(out) = p.eval(&g, c) {
            prop_assert!(out.iter().all(|x| g.contains(*x)));
        }
    }
}

fn instance() -> impl Strategy<Value = Instance> {
    any::<u64>().prop_map(|seed| {
        use rand::SeedableRng;
        Instance::random(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn automaton_agrees_with_evaluation(inst in instance()) {
        prop_assert_eq!(check_soundness_completeness(&inst).discrepancies, 0);
    }

    #[test]
    fn intersection_is_conjunction(inst in instance()) {
        prop_assert_eq!(check_intersection(&inst).discrepancies, 0);
    }

    #[test]
    fn rank_is_minimal(inst in instance()) {
        prop_assert_eq!(check_rank(&inst, &ScoreConfig::default()).discrepancies, 0);
    }
}

fn examples_on(g: &Grid) -> impl Strategy<Value = Vec<(CellRef, CellRef)>> {
    let cell = cell_in(g);
    prop::collection::vec((cell.clone(), cell), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn memo_does_not_change_results((g, ex) in small_grid().prop_flat_map(|g| { let e = examples_on(&g); (Just(g), e) })) {
        let mut e = ExampleSet::new();
        for (i, o) in ex {
            let _ = e.insert(i, vec![o]);
        }
        let cfg = SynthConfig { max_conj: 1, depth_cap: 2, ..SynthConfig::default() };
        let base = build_base(&g, cfg.max_conj, DEFAULT_MAX_PREDICATES).unwrap();
        let with = Synthesizer::with_base(Arc::clone(&base), cfg.clone()).learn(&e).unwrap();
        let without = Synthesizer::with_base(base, cfg).without_memo().learn(&e).unwrap();
        prop_assert_eq!(&with, &without);
        if let Some(p) = &with {
            prop_assert!(e.satisfied_by(&g, p));
        }
    }

    #[test]
    fn intersection_commutes((g, a, b) in small_grid().prop_flat_map(|g| {
        let c = cell_in(&g);
        (Just(g), (c.clone(), c.clone()), (c.clone(), c))
    })) {
        let base = build_base(&g, 1, DEFAULT_MAX_PREDICATES).unwrap();
        let fa = build_fta(&base, a.0, Some(&[a.1]), 1).unwrap();
        let fb = build_fta(&base, b.0, Some(&[b.1]), 1).unwrap();
        let rank = |f: &Fta| f.rank(&ScoreConfig::default(), 2, dacex_core::deadline::Deadline::none()).unwrap();
        prop_assert_eq!(rank(&intersect(&fa, &fb).unwrap()), rank(&intersect(&fb, &fa).unwrap()));
        prop_assert_eq!(rank(&intersect(&fa, &fa).unwrap()), rank(&fa));
    }
}
