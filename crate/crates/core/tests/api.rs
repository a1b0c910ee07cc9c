use phfl_core::affine::{interpret_affine, AffineConfig, Gamma};
use phfl_core::eval::{eval_bounded, eval_order0, EvalConfig};
use phfl_core::formula::{simple_typecheck, TypeEnv};
use phfl_core::rational::{int, rat};
use phfl_core::refined::{check_refined, infer_refined, PropTU, RefinedEnv, RefinedType};
use phfl_core::{parse_formula, Formula, MarkovChain};
use proptest::prelude::*;

fn two_state() -> MarkovChain {
    let s = |x: &str| x.to_string();
    MarkovChain::new(
        vec![s("1"), s("2")],
        vec![(s("1"), s("1"), rat(1, 2)), (s("1"), s("2"), rat(1, 2)), (s("2"), s("2"), int(1))],
        vec![(s("p1"), vec![s("1")]), (s("p2"), vec![s("2")])],
        "1",
    )
    .unwrap()
}

#[test]
fn fixpoint_applied_to_an_atom() {
    let m = two_state();
    let phi = parse_formula(r"(mu X : {;}->{;}. \Y. (p2 /\ Y) \/ (p1 /\ avg (X Y))) p2").unwrap();
    let d = check_refined(&m, &RefinedEnv::default(), &phi, &RefinedType::prop(PropTU::trivial(2))).unwrap();
    let out = interpret_affine(&m, &d, &Gamma::new(), &AffineConfig::default()).unwrap();
    assert_eq!(out.rep.rows_text(), "(1 0 0 | 1 0 0)");
    let x = &out.fixpoints.iter().find(|(b, _)| b == "X").unwrap().1;
    assert_eq!(x.rows_text(), "(0 0 0 | 0 0 0; 0 0 1 | 0 0 1)");
}

#[test]
fn inference_agrees_with_checking() {
    let m = two_state();
    let phi = parse_formula(r"\Y : *. p1 /\ avg Y").unwrap();
    let (ty, _) = infer_refined(&m, &RefinedEnv::default(), &phi).unwrap();
    assert_eq!(ty.args.len(), 1);
    assert!(!ty.result.t.contains(0) && ty.result.t.contains(1));
}

#[test]
fn ill_typed_application() {
    let phi = parse_formula("p1 p2").unwrap();
    assert!(simple_typecheck(&TypeEnv::default(), &phi).is_err());
}

fn order0() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("p1".to_string()), Just("p2".to_string()), Just("top".to_string()), Just("bot".to_string())];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} /\\ {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} \\/ {b})")),
            inner.clone().prop_map(|a| format!("avg ({a})")),
            inner.clone().prop_map(|a| format!("box ({a})")),
            inner.clone().prop_map(|a| format!("[{a}] > 1/3")),
            inner.clone().prop_map(|a| format!("(mu X. {a} \\/ avg X)")),
        ]
    })
}

proptest! {
    #[test]
    fn display_round_trips(text in order0()) {
        let phi = parse_formula(&text).unwrap();
        let again = parse_formula(&phi.to_string()).unwrap();
        prop_assert_eq!(phi, again);
    }

    #[test]
    fn bounded_below_exact(text in order0()) {
        let m = two_state();
        let phi: Formula = parse_formula(&text).unwrap();
        let exact = eval_order0(&m, &phi, &EvalConfig::default()).unwrap();
        let low = eval_bounded::<f64>(&m, &phi, &EvalConfig { depth: 12, ..EvalConfig::default() }).unwrap();
        for i in 0..m.len() {
            let v = exact.values.to_f64()[i];
            prop_assert!(low.values.0[i] <= v + 1e-9, "{} at {}: {} > {}", phi, i, low.values.0[i], v);
        }
    }
}
