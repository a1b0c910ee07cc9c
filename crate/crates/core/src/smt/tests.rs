use super::*;
use crate::affine::{aff_leq, interpret_affine, AffineConfig, AffineRep, Gamma};
use crate::formula::parse_formula;
use crate::markov::tests::example_chain;
use crate::markov::StateSet;
use crate::rational::{int, rat};
use crate::refined::{infer_refined, PropTU, RefinedEnv, RefinedType};
use alloc::string::ToString;
use alloc::vec;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn deriv(m: &MarkovChain, src: &str) -> RefinedDerivation {
    infer_refined(m, &RefinedEnv::default(), &parse_formula(src).unwrap()).unwrap().1
}

fn env_of(meta: &[VarInfo], owner: &str, rep: &AffineRep<Rational>, env: &mut BTreeMap<String, Rational>) {
    for v in meta.iter().filter(|v| v.owner == owner && !v.name.contains('.')) {
        let (i, j, k) = v.slot.unwrap();
        env.insert(v.name.clone(), rep.get(i, j, k).clone());
    }
}

fn qf_holds(facts: &[FOFormula], env: &BTreeMap<String, Rational>) -> bool {
    facts.iter().filter(|f| f.count_forall() == 0).all(|f| f.eval(env).unwrap())
}

#[test]
fn atom_fixes_the_result_to_its_indicator() {
    let m = example_chain();
    let d = deriv(&m, "p1");
    let sf = build_semantics_formula(&m, &d).unwrap();
    assert_eq!(sf.phi.count_forall(), 0);
    for i in 0..2 {
        let want = if i == 0 { int(1) } else { int(0) };
        match sf.result.get(i, 0, 0) {
            Term::Const(c) => assert_eq!(*c, want),
            Term::Var(x) => {
                let mut env = BTreeMap::new();
                env.insert(x.clone(), want.clone());
                assert!(qf_holds(&sf.facts, &env));
                env.insert(x.clone(), int(1) - want);
                assert!(!qf_holds(&sf.facts, &env));
            }
            t => panic!("unexpected {t}"),
        }
    }
}

#[test]
fn example_fixpoint_values_satisfy_the_clause_body() {
    let m = example_chain();
    let src = "mu X : {;}->{;}. \\Y. (p2 /\\ Y) \\/ (p1 /\\ avg (X Y))";
    let d = deriv(&m, src);
    let sf = build_semantics_formula(&m, &d).unwrap();
    assert_eq!(sf.phi.count_forall(), 1);
    let out = interpret_affine(&m, &d, &Gamma::new(), &AffineConfig::default()).unwrap();
    let crate::affine::RepValue::Exact(lfp) = &out.rep else { panic!("not exact") };
    assert_eq!(lfp.rows_text(), "(0 0 0 | 0 0 0; 0 0 1 | 0 0 1)");
    let mut env = BTreeMap::new();
    env_of(&sf.meta, "X", lfp, &mut env);
    env_of(&sf.meta, "result", lfp, &mut env);
    assert!(qf_holds(&sf.facts, &env));
    // A different result block breaks the equation d = body(c).
    let name = sf.meta.iter().find(|v| v.owner == "result" && v.slot == Some((1, 1, 2))).unwrap().name.clone();
    env.insert(name, rat(1, 2));
    assert!(!qf_holds(&sf.facts, &env));
}

#[test]
fn model_check_query_shapes() {
    let m = example_chain();
    let q = build_model_check_query(&m, &deriv(&m, "top")).unwrap();
    assert!(q.assertions.is_empty());
    assert!(q.eval(&BTreeMap::new()).unwrap());
    assert_eq!(q.logic, Logic::QfNra);
    let q = build_model_check_query(&m, &deriv(&m, "mu X. X")).unwrap();
    assert_eq!(q.sat_means, SatMeaning::Holds);
    let q = build_model_check_query(&m, &deriv(&m, "mu X : {;}. p2 \\/ avg X")).unwrap();
    assert_eq!(q.logic, Logic::Nra);
    assert_eq!(q.count_forall(), 1);
    assert!(q.script().contains("(set-logic NRA)"));
    assert!(q.script().contains("forall"));
}

#[test]
fn quantifier_accounting() {
    let m = example_chain();
    for (src, n) in [
        ("mu X : {;}. p2 \\/ avg X", 1),
        ("nu X : {;}. p1 /\\ avg X", 1),
        ("(mu X : {;}. p2 \\/ avg X) /\\ (nu Y : {;}. avg Y)", 2),
        // The inner fixpoint is closed and gets hoisted out of the outer clause.
        ("mu X : {;}. p1 \\/ avg (mu Y : {;}. p2 \\/ avg Y)", 2),
    ] {
        let sf = build_semantics_formula(&m, &deriv(&m, src)).unwrap();
        assert_eq!(sf.phi.count_forall(), n, "{src}");
        let q = build_mu_only_query(&m, &deriv(&m, src));
        if let Ok(q) = q {
            assert_eq!(q.count_forall(), 0);
            assert_eq!(q.logic, Logic::QfNra);
        }
    }
}

#[test]
fn mu_only_rejects_nu_and_inner_thresholds() {
    let m = example_chain();
    let e = build_mu_only_query(&m, &deriv(&m, "nu X : {;}. avg X")).unwrap_err();
    assert!(matches!(e, SmtError::Fragment(_)), "{e}");
    let e = build_mu_only_query(&m, &deriv(&m, "[ p1 /\\ [avg p2] >= 1/2 ] >= 1/2")).unwrap_err();
    assert!(matches!(e, SmtError::Fragment(_)), "{e}");
    assert!(build_mu_only_query(&m, &deriv(&m, "[mu X : {;}. p2 \\/ avg X] >= 1/2")).is_ok());
}

#[test]
fn mu_only_prefixpoints() {
    let m = example_chain();
    // [μX. p2 ∨ avg X] >= 1 holds: every prefixpoint is 1 at state 1, so no witness exists.
    let q = build_mu_only_query(&m, &deriv(&m, "[mu X : {;}. p2 \\/ avg X] >= 1")).unwrap();
    assert_eq!(q.sat_means, SatMeaning::Fails);
    let x = |i: usize| q.meta.iter().find(|v| v.owner == "X" && v.slot == Some((i, 0, 0))).map(|v| v.name.clone());
    let mut env = BTreeMap::new();
    for (i, val) in [(0, rat(1, 2)), (1, int(1))] {
        if let Some(n) = x(i) {
            env.insert(n, val);
        }
    }
    env.extend(q.meta.iter().filter(|v| v.slot.is_none()).map(|v| (v.name.clone(), int(0))));
    assert!(!q.eval(&env).unwrap_or(false));
    // μX.X under >= 1/2: the zero prefixpoint witnesses failure.
    let q = build_mu_only_query(&m, &deriv(&m, "[mu X. X] >= 1/2")).unwrap();
    let env: BTreeMap<String, Rational> = q.declared.iter().map(|v| (v.clone(), int(0))).collect();
    assert!(q.eval(&env).unwrap());
    assert!(!q.verdict(true));
}

#[test]
fn scripts_are_deterministic_and_expand_minmax() {
    let m = example_chain();
    let src = "mu X : {;}. p2 \\/ (box X /\\ dia X)";
    let a = build_model_check_query(&m, &deriv(&m, src)).unwrap().script();
    let b = build_model_check_query(&m, &deriv(&m, src)).unwrap().script();
    assert_eq!(a, b);
    assert!(!a.contains("(min") && !a.contains("(max"));
    assert!(a.contains("(check-sat)"));
    assert!(a.contains("(declare-const c_X_1_0_0 Real)"), "{a}");
}

#[test]
fn minmax_expansion_preserves_truth() {
    let mut rng = StdRng::seed_from_u64(7);
    let (x, y, z) = (Term::var("x"), Term::var("y"), Term::var("z"));
    let f = FOFormula::Le(Term::add(Term::min(x.clone(), Term::max(y.clone(), z.clone())), Term::Const(rat(1, 4))), Term::max(x, z));
    let (g, splits) = f.expand_minmax();
    assert!(splits >= 3);
    assert!(!g.has_minmax());
    for _ in 0..200 {
        let env: BTreeMap<String, Rational> =
            ["x", "y", "z"].iter().map(|v| (v.to_string(), rat(rng.gen_range(0..9), 8))).collect();
        assert_eq!(f.eval(&env).unwrap(), g.eval(&env).unwrap());
    }
}

fn random_rep(rng: &mut StdRng, n: usize, ty: &RefinedType) -> AffineRep<Rational> {
    let mut r = AffineRep::zero(n, ty.clone());
    for (i, j, k) in r.canonical_slots() {
        r.set(i, j, k, rat(rng.gen_range(0..5), 4));
    }
    r
}

#[test]
fn vertex_encoding_agrees_with_aff_leq() {
    let mut rng = StdRng::seed_from_u64(11);
    let n = 2;
    let set = |v: &[usize]| StateSet::from_indices(n, v.iter().copied());
    let types = [
        RefinedType::prop(PropTU::trivial(n)),
        RefinedType { args: vec![PropTU::trivial(n)], result: PropTU::trivial(n) },
        RefinedType { args: vec![PropTU::new(set(&[0]), set(&[])), PropTU::trivial(n)], result: PropTU::trivial(n) },
        RefinedType { args: vec![PropTU::new(set(&[]), set(&[1])), PropTU::trivial(n)], result: PropTU::trivial(n) },
    ];
    let chain = example_chain();
    for ty in &types {
        let mut vars = Builder::new(&chain, build::Mode::Full);
        let (mut sa, mut sb) = (Scope::default(), Scope::default());
        let a = vars.fresh_block("A", "c_", ty, &mut sa).unwrap();
        let b = vars.fresh_block("B", "c_", ty, &mut sb).unwrap();
        let enc = a.leq(&b);
        assert_eq!(enc.count_forall(), 0);
        for _ in 0..250 {
            let (ra, rb) = (random_rep(&mut rng, n, ty), random_rep(&mut rng, n, ty));
            let mut env = BTreeMap::new();
            env_of(&vars.meta, "A", &ra, &mut env);
            env_of(&vars.meta, "B", &rb, &mut env);
            assert_eq!(enc.eval(&env).unwrap(), aff_leq(&ra, &rb).unwrap(), "{} vs {}", ra.rows_text(), rb.rows_text());
        }
    }
}

#[test]
fn open_formula_gets_a_free_block() {
    let m = example_chain();
    let mut env = RefinedEnv::default();
    env.gamma.insert("Z".to_string(), RefinedType::prop(PropTU::trivial(2)));
    let phi = crate::formula::parse_formula_with_vars("p2 \\/ avg Z", &["Z"]).unwrap();
    let (_, d) = infer_refined(&m, &env, &phi).unwrap();
    let sf = build_semantics_formula(&m, &d).unwrap();
    assert_eq!(sf.free_blocks.len(), 1);
    assert_eq!(sf.free_blocks[0].0, "Z");
    assert!(sf.query(&m, []).declared.iter().any(|v| v.starts_with("c_Z_")));
    assert!(build_model_check_query(&m, &d).is_err());
}
