mod common;

use common::*;
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use qso_core::fragment::{boolean_member, is_sigma_qso, leaves_within};
use qso_core::horn::is_horn_formula;
use qso_core::oracles::*;
use qso_core::rewrite::{is_pnf, is_snf};
use qso_core::*;
use rand::Rng;
use std::collections::BTreeSet;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn x_sig() -> ParseOptions {
    ParseOptions {
        free_so: vec![SoVar::new("X", 1)],
        free_fns: vec![("h".into(), 1)],
        ..Default::default()
    }
}

fn var() -> impl Strategy<Value = String> {
    prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(String::from)
}

fn fo_leaf() -> impl Strategy<Value = BFormula> {
    prop_oneof![
        Just(BFormula::tru()),
        (var(), var()).prop_map(|(a, b)| BFormula::eq(&a, &b)),
        (var(), var()).prop_map(|(a, b)| BFormula::less(&a, &b)),
        (var(), var()).prop_map(|(a, b)| BFormula::rel("E", &[&a, &b])),
    ]
}

fn connectives(inner: BoxedStrategy<BFormula>) -> impl Strategy<Value = BFormula> {
    prop_oneof![
        inner.clone().prop_map(BFormula::not),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| BFormula::and(a, b)),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| BFormula::or(a, b)),
        (inner.clone(), inner.clone()).prop_map(|(a, b)| BFormula::implies(a, b)),
        (var(), inner.clone()).prop_map(|(x, a)| BFormula::exists(&x, a)),
        (var(), inner).prop_map(|(x, a)| BFormula::forall(&x, a)),
    ]
}

fn fo_formula() -> impl Strategy<Value = BFormula> {
    fo_leaf().prop_recursive(3, 16, 2, |inner| connectives(inner.boxed()))
}

fn so_formula() -> impl Strategy<Value = BFormula> {
    let leaf = prop_oneof![fo_leaf(), var().prop_map(|x| BFormula::so("X", &[&x]))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            4 => connectives(inner.clone().boxed()),
            1 => inner.clone().prop_map(|a| BFormula::exists_so(SoVar::new("Y", 2), a)),
            1 => inner.prop_map(|a| BFormula::forall_so(SoVar::new("X", 1), a)),
        ]
    })
}

fn lsfp_body() -> impl Strategy<Value = QFormula> {
    let leaf = prop_oneof![
        fo_formula().prop_map(QFormula::boolean),
        (0i64..4).prop_map(QFormula::constant),
        (var(), var()).prop_map(|(a, b)| QFormula::func("g", &[&a, &b])),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| QFormula::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| QFormula::mul(a, b)),
            (var(), inner.clone()).prop_map(|(x, a)| QFormula::sum(&x, a)),
            (var(), inner).prop_map(|(x, a)| QFormula::prod(&x, a)),
        ]
    })
}

fn agg() -> impl Strategy<Value = Agg> {
    prop_oneof![Just(Agg::Sum), Just(Agg::Prod), Just(Agg::Max), Just(Agg::Min)]
}

fn bin_op() -> impl Strategy<Value = BinOp> {
    prop_oneof![Just(BinOp::Add), Just(BinOp::Mul), Just(BinOp::Max), Just(BinOp::Min)]
}

/// Arbitrary well-scoped formulas over `{E:2}` with a free `X:1` and `h:1`.
fn qformula() -> impl Strategy<Value = QFormula> {
    let leaf = prop_oneof![
        so_formula().prop_map(QFormula::boolean),
        (0i64..5).prop_map(QFormula::constant),
        var().prop_map(|x| QFormula::func("h", &[&x])),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            3 => (bin_op(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| QFormula::bin(op, a, b)),
            3 => (agg(), var(), inner.clone()).prop_map(|(op, x, a)| QFormula::agg(op, Binder::Fo(x), a)),
            1 => (agg(), inner.clone()).prop_map(|(op, a)| QFormula::agg(op, Binder::So(SoVar::new("W", 1)), a)),
            1 => (so_formula(), inner).prop_map(|(phi, a)| QFormula::cond(phi, a)),
            1 => lsfp_body().prop_map(|b| QFormula::lsfp("g", &["x", "y"], b)),
            1 => fo_formula().prop_map(|b| QFormula::path(&["x"], &["y"], b)),
        ]
    })
}

fn forbidden_in_sigma(f: &QFormula) -> bool {
    let here = match &f.kind {
        QKind::Agg(op, _, _) => *op != Agg::Sum,
        QKind::Bin(op, _, _) => matches!(op, BinOp::Max | BinOp::Min),
        QKind::Lsfp { .. } | QKind::Path { .. } => true,
        _ => false,
    };
    here || f.children().into_iter().any(forbidden_in_sigma)
}

fn random_structure(seed: u64, max_n: usize) -> Structure {
    let mut r = rng(seed);
    let n = r.gen_range(0..=max_n);
    digraph(n, &random_edges(&mut r, n, 0.4))
}

fn all_values(structures: &[Structure], f: &QFormula) -> Vec<Value> {
    structures.iter().map(|s| value(s, f)).collect()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn tuples_lex_strictly_increasing(n in 0usize..5, k in 1usize..4) {
        let ts = tuples_lex(n, k);
        prop_assert_eq!(ts.len(), n.pow(k as u32));
        prop_assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumerate_relations_distinct(n in 0usize..4, k in 1usize..3) {
        prop_assume!(n.pow(k as u32) <= 9);
        let sets: Vec<_> = enumerate_relations(n, k, &Config::default()).unwrap().map(|r| r.tuples()).collect();
        let distinct: BTreeSet<_> = sets.iter().cloned().collect();
        prop_assert_eq!(sets.len(), 1usize << n.pow(k as u32));
        prop_assert_eq!(distinct.len(), sets.len());
    }

    #[test]
    fn encode_length(n in 0usize..5, arities in prop::collection::vec(1usize..4, 0..4), seed: u64) {
        let rels: Vec<(String, usize)> = arities.iter().enumerate().map(|(i, &k)| (format!("R{i}"), k)).collect();
        let mut s = Structure::new(Signature::new(rels.clone()).unwrap(), n);
        let mut r = rng(seed);
        for (name, k) in &rels {
            for t in tuples_lex(n, *k) {
                if r.gen_bool(0.5) {
                    s.insert(name, &t).unwrap();
                }
            }
        }
        let want = n + 1 + arities.iter().map(|&k| n.pow(k as u32)).sum::<usize>();
        prop_assert_eq!(encode_structure(&s).len(), want);
    }

    #[test]
    fn render_parse_roundtrip(f in qformula()) {
        let text = render_formula(&f);
        let back = parse_formula_with(&text, &e_sig(), &x_sig());
        prop_assert!(back.is_ok(), "`{}`: {:?}", text, back.err());
        prop_assert_eq!(back.unwrap(), f, "`{}`", text);
    }

    #[test]
    fn sigma_qso_has_no_forbidden_nodes(f in qformula()) {
        if classify(&f).quantitative_shape == Shape::SigmaQSO {
            prop_assert!(!forbidden_in_sigma(&f), "`{}`", render_formula(&f));
            prop_assert!(is_sigma_qso(&f));
        }
    }

    #[test]
    fn classification_is_monotone(phi in so_formula()) {
        let c = classify_boolean(&phi);
        prop_assert!(boolean_member(&phi, c));
        for d in BooleanCore::ALL {
            if c.within(d) {
                prop_assert!(boolean_member(&phi, d), "{} classified {} but rejected by {}", render_boolean(&phi), c, d);
            }
        }
    }

    #[test]
    fn boolean_leaves_are_zero_or_one(phi in fo_formula(), seed: u64) {
        let s = random_structure(seed, 3);
        prop_assume!(s.domain_size() > 0);
        let a = Assignment::new().with_fo("x", 0).with_fo("y", s.domain_size() - 1).with_fo("z", 0);
        let v = eval_boolean(&s, &phi, &a).unwrap();
        prop_assert!(v == Value::from(0) || v == Value::from(1));
    }
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn cond_desugaring_preserves_values(seed: u64) {
        let mut r = rng(seed);
        let mut g = Gen::new(&mut r);
        let phi = g.fo(2, &["x".to_string()], &[]);
        let alpha = g.sigma_fo(3, &mut vec!["x".to_string()], &mut Vec::new());
        let cond = parse(&format!("sum x. (({phi}) ~> ({alpha}))"));
        let spelled = parse(&format!("sum x. ((({phi}) * ({alpha})) + !({phi}))"));
        for s in all_graphs(2) {
            let v = value(&s, &cond);
            prop_assert_eq!(&v, &value(&s, &spelled));
            prop_assert_eq!(&v, &value(&s, &cond.desugar()));
        }
    }

    #[test]
    fn sentences_ignore_assignments(seed: u64, a in 0usize..3, b in 0usize..3, bits in 0u8..8) {
        let mut r = rng(seed);
        let f = parse(&Gen::new(&mut r).sigma_fo(4, &mut Vec::new(), &mut Vec::new()));
        prop_assert!(f.is_sentence());
        let s = random_structure(seed ^ 1, 3);
        prop_assume!(a < s.domain_size() && b < s.domain_size());
        let set: Vec<Vec<usize>> = (0..s.domain_size()).filter(|i| bits >> i & 1 == 1).map(|i| vec![i]).collect();
        let v = Assignment::new()
            .with_fo("x1", a)
            .with_fo("x2", b)
            .with_so("X1", TupleSet::from_tuples(s.domain_size(), 1, &set).unwrap());
        let cfg = Config::default();
        let base = eval_with(&s, &f, &Assignment::new(), &cfg).unwrap();
        prop_assert!(!base.is_negative());
        prop_assert_eq!(eval_with(&s, &f, &v, &cfg).unwrap(), base);
    }

    #[test]
    fn sum_counts_satisfying_assignments(seed: u64, fo_count in 0usize..3, with_so: bool) {
        let mut r = rng(seed);
        let fo: Vec<String> = (0..fo_count).map(|i| format!("v{i}")).collect();
        let so: Vec<String> = if with_so { vec!["X".into()] } else { Vec::new() };
        let phi_text = Gen::new(&mut r).fo(2, &fo, &so);
        let phi = parse_boolean(&phi_text, &e_sig(), &x_sig()).unwrap();
        let mut text = String::new();
        if with_so {
            text.push_str("sum X:1. ");
        }
        for x in &fo {
            text.push_str(&format!("sum {x}. "));
        }
        text.push_str(&format!("({phi_text})"));
        let f = parse(&text);
        let so_vars: Vec<SoVar> = so.iter().map(|x| SoVar::new(x.clone(), 1)).collect();
        for _ in 0..4 {
            let n = r.gen_range(0..=3);
            let s = digraph(n, &random_edges(&mut r, n, 0.4));
            let want = oracle_count_assignments(&s, &phi, &so_vars, &fo, &Config::default()).unwrap();
            prop_assert_eq!(value(&s, &f), want, "`{}`", text);
        }
    }

    #[test]
    fn snf_and_products_preserve_values(seed: u64) {
        let mut r = rng(seed);
        let a = parse(&Gen::new(&mut r).sigma_fo(3, &mut Vec::new(), &mut Vec::new()));
        let b = parse(&Gen::new(&mut r).sigma_fo(3, &mut Vec::new(), &mut Vec::new()));
        let structures = all_graphs(2);
        let snf = to_snf(&a).unwrap();
        prop_assert!(is_snf(&snf, Some(BooleanCore::FO)));
        prop_assert_eq!(all_values(&structures, &snf), all_values(&structures, &a));
        let p = product_to_snf(&a, &b).unwrap();
        prop_assert!(is_snf(&p, Some(BooleanCore::FO)));
        let want: Vec<Value> = all_values(&structures, &a).into_iter().zip(all_values(&structures, &b)).map(|(x, y)| x * y).collect();
        prop_assert_eq!(all_values(&structures, &p), want);
    }

    #[test]
    fn pnf_matrix_lies_in_target(seed: u64) {
        let mut r = rng(seed);
        let f = parse(&Gen::new(&mut r).sigma_pi1());
        let structures: Vec<Structure> = all_graphs(2).into_iter().filter(|s| s.domain_size() > 0).collect();
        for target in [BooleanCore::Pi1, BooleanCore::FO] {
            let g = to_pnf(&f, target).unwrap();
            prop_assert!(is_pnf(&g, Some(target)), "{} → {}", render_formula(&f), render_formula(&g));
            prop_assert_eq!(all_values(&structures, &g), all_values(&structures, &f));
        }
    }

    #[test]
    fn minus_one_is_monus_and_saturates(seed: u64) {
        let mut r = rng(seed);
        let f = parse(&Gen::new(&mut r).sigma1_ext(false));
        let structures = all_graphs(2);
        let start = all_values(&structures, &f);
        let mut g = f.clone();
        for step in 1..=start.iter().max().and_then(|v| v.to_usize()).unwrap_or(0) {
            g = minus_one(&g).unwrap();
            prop_assert!(is_sigma_qso(&g) && leaves_within(&g, BooleanCore::Sigma1Ext));
            let want: Vec<Value> = start.iter().map(|v| if *v > Value::from(step) { v - step } else { Value::zero() }).collect();
            prop_assert_eq!(all_values(&structures, &g), want);
        }
        prop_assert!(all_values(&structures, &g).iter().all(|v| v.is_zero()) || start.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn minus_one_with_second_order_sums(seed: u64) {
        let mut r = rng(seed);
        let f = parse(&Gen::new(&mut r).sigma1_ext(true));
        let structures = all_graphs(2);
        let g = minus_one(&f).unwrap();
        prop_assert!(is_sigma_qso(&g) && leaves_within(&g, BooleanCore::Sigma1Ext));
        let want: Vec<Value> = all_values(&structures, &f).iter().map(|v| if v.is_zero() { Value::zero() } else { v - 1 }).collect();
        prop_assert_eq!(all_values(&structures, &g), want);
    }

    #[test]
    fn dishorn_reduction_is_parsimonious(seed: u64) {
        let mut r = rng(seed);
        let f = parse(&Gen::new(&mut r).sigma_exists_horn(18));
        prop_assert!(leaves_within(&f, BooleanCore::ExistsHorn));
        let s = random_structure(seed ^ 7, 3);
        let p = reduce_to_dishorn(&f, &s).unwrap();
        prop_assert!(!p.disjuncts.is_empty());
        for c in p.disjuncts.iter().flatten() {
            prop_assert!(c.iter().filter(|&&l| l > 0).count() <= 1);
        }
        let report = count_dishorn_report(&p).unwrap();
        prop_assert_eq!(&report.count, &value(&s, &f));
        prop_assert_eq!(oracle_truth_table_count(p.vars, &Prop::from(&p)).unwrap(), report.count.clone());
        let c = report.count.to_u64().unwrap();
        let v = p.vars as u64;
        prop_assert!(report.nodes <= 2 * c + v * c || (c == 0 && report.nodes == 1));
    }

    #[test]
    fn lsfp_support_grows_and_terminates(seed: u64) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let edges = random_edges(&mut r, n, 0.3);
        let s = digraph(n, &edges);
        let opts = ParseOptions { free_fns: vec![("f".into(), 2)], ..Default::default() };
        let beta = parse_formula_with("E(x,y) + sum z. f(x,z) * E(z,y)", &e_sig(), &opts).unwrap();
        let xy = vec!["x".to_string(), "y".to_string()];
        let cfg = Config::default();
        let (table, k) = lsfp_table(&s, &beta, &xy, "f", &cfg).unwrap();
        prop_assert!(k <= n * n + 1);
        let mut f = FunctionTable::zero("f", n, 2);
        for _ in 0..k {
            let next = apply_operator(&s, &beta, &xy, "f", &f, &cfg).unwrap();
            prop_assert!(f.support().is_subset(&next.support()));
            f = next;
        }
        prop_assert_eq!(f.values(), table.values());
        let fixed = apply_operator(&s, &beta, &xy, "f", &f, &cfg).unwrap();
        prop_assert_eq!(fixed.support().tuples(), f.support().tuples());
    }

    #[test]
    fn path_counts_walks(seed: u64) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let dag = r.gen_bool(0.5);
        let edges = if dag { random_dag_edges(&mut r, n, 0.5) } else { random_edges(&mut r, n, 0.3) };
        let s = digraph(n, &edges);
        let g = Digraph::new(n, edges.clone()).unwrap();
        let psi = parse_boolean("E(x,y)", &e_sig(), &ParseOptions::default()).unwrap();
        let (x, y) = (vec!["x".to_string()], vec!["y".to_string()]);
        let counter = parse("sum t. ((!exists u. u < t) * lsfp g:3 (x,y,t). \
            ((E(x,y) + sum z. g(x,z,t) * E(z,y)) * (!exists u. u < t) \
            + sum s. (s < t & !exists u. (s < u & u < t)) * (sum a. sum b. g(a,b,s))))");
        let cfg = Config::default();
        for a in 0..n {
            for b in 0..n {
                let v = Assignment::new().with_fo("x", a).with_fo("y", b);
                let got = path_eval(&s, &psi, &x, &y, &v, &cfg).unwrap();
                prop_assert_eq!(&got, &oracle_walks(&g, a, b, n).unwrap());
                if n <= 4 {
                    prop_assert_eq!(&got, &eval_with(&s, &counter, &v, &cfg).unwrap());
                }
                if dag {
                    prop_assert_eq!(&got, &Value::from(simple_paths(n, &edges, a, b)));
                }
            }
        }
    }

    #[test]
    fn permanent_matches_alpha_3(n in 0usize..5, mask: u64) {
        let m = Matrix01::from_mask(n, mask & ((1u64 << (n * n)) - 1));
        let sig = Signature::new([("M", 2)]).unwrap();
        let a3 = parse_formula_with(ALPHA_3, &sig, &ParseOptions::default()).unwrap();
        prop_assert_eq!(value(&m.to_structure(), &a3), oracle_permanent(&m).unwrap());
    }

    #[test]
    fn permanent_is_transpose_invariant(n in 0usize..7, bits in prop::collection::vec(any::<bool>(), 36)) {
        let m = Matrix01::new(n, bits[..n * n].to_vec()).unwrap();
        prop_assert_eq!(oracle_permanent(&m).unwrap(), oracle_permanent(&m.transpose()).unwrap());
    }
}

const ALPHA_3: &str = "sum S:2. ((forall x. exists y. S(x,y)) \
    & (forall x. forall y. forall z. ((S(x,y) & S(x,z)) -> y = z)) \
    & (forall x. forall y. forall z. ((S(x,y) & S(z,y)) -> x = z))) \
    * prod x. (exists y. (S(x,y) & M(x,y)))";

fn parse(text: &str) -> QFormula {
    parse_formula(text, &e_sig()).unwrap_or_else(|e| panic!("`{text}`: {e}"))
}

fn simple_paths(n: usize, edges: &[(usize, usize)], s: usize, t: usize) -> u64 {
    fn go(n: usize, e: &[(usize, usize)], u: usize, t: usize, seen: &mut Vec<bool>) -> u64 {
        let mut c = 0;
        for &(a, w) in e {
            if a != u {
                continue;
            }
            if w == t {
                c += 1;
            }
            if !seen[w] {
                seen[w] = true;
                c += go(n, e, w, t, seen);
                seen[w] = false;
            }
        }
        c
    }
    let mut seen = vec![false; n];
    seen[s] = true;
    go(n, edges, s, t, &mut seen)
}

#[test]
fn weak_ordering_counts_match_oracle() {
    let cfg = Config {
        weak_order_limit: 1 << 16,
        ..Config::default()
    };
    for k in 0..=6 {
        let vars: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
        let ws = enumerate_weak_orderings(&vars, &cfg).unwrap();
        assert_eq!(Value::from(ws.len()), oracle_weak_orderings(k).unwrap(), "k={k}");
        let distinct: BTreeSet<String> = ws.iter().map(|w| render_boolean(&w.formula())).collect();
        assert_eq!(distinct.len(), ws.len());
    }
}

#[test]
fn horn_examples_classify() {
    let sig = Signature::new([("E", 2)]).unwrap();
    let opts = ParseOptions {
        free_so: vec![SoVar::new("X", 1), SoVar::new("Y", 1)],
        ..Default::default()
    };
    let horn = parse_boolean("forall x. forall y. (!X(x) | !E(x,y) | X(y))", &sig, &opts).unwrap();
    assert!(is_horn_formula(&horn));
    let two = parse_boolean("forall x. (X(x) | Y(x))", &sig, &opts).unwrap();
    assert!(!is_horn_formula(&two));
}
