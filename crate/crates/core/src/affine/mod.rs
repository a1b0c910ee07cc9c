//! Affine semantics of the decidable fragment: coefficient tensors, their structural interpretation
//! along refined derivations, and fixpoint solving on tensors.

mod interp;
mod rep;
mod solve;
pub mod sym;

pub use interp::{binder_of, node_type, AffineError, Gamma};
pub(crate) use rep::free_positions as free_positions_of;
pub use rep::{aff_leq, aff_leq_by_vertices, format_float, AffineRep, RepError, RepValue, VertexSet};
pub use solve::{interpret_affine, interpret_affine_f64, solve_gfp, solve_lfp, AffineConfig, AffineOutcome};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::QuantVec;
    use crate::formula::parse_formula;
    use crate::markov::tests::example_chain;
    use crate::markov::{MarkovChain, StateSet};
    use crate::rational::{int, rat, Rational};
    use crate::refined::{check_refined, infer_refined, PropTU, RefinedEnv, RefinedType};
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn closed(m: &MarkovChain, src: &str) -> AffineOutcome {
        let phi = parse_formula(src).unwrap();
        let (_, d) = infer_refined(m, &RefinedEnv::default(), &phi).unwrap();
        interpret_affine(m, &d, &Gamma::new(), &AffineConfig::default()).unwrap()
    }

    #[test]
    fn example_lfp_and_application() {
        let m = example_chain();
        let out = closed(&m, "(mu X : {;}->{;}. \\Y. (p2 /\\ Y) \\/ (p1 /\\ avg (X Y))) p2");
        assert!(out.exact());
        assert_eq!(out.rep.rows_text(), "(1 0 0 | 1 0 0)");
        let (_, lfp) = &out.fixpoints[0];
        assert!(lfp.is_exact());
        assert_eq!(lfp.rows_text(), "(0 0 0 | 0 0 0; 0 0 1 | 0 0 1)");
    }

    #[test]
    fn avg_outside_the_conjunction_never_leaves_state_one() {
        // With the average outside, state 1 only ever sees its own row, so the value there is 0.
        let m = example_chain();
        let out = closed(&m, "(mu X : {;}->{;}. \\Y. (p2 /\\ Y) \\/ avg (p1 /\\ X Y)) p2");
        assert!(out.exact());
        assert_eq!(out.rep.rows_text(), "(0 0 0 | 1 0 0)");
        assert_eq!(out.fixpoints[0].1.rows_text(), "(0 0 0 | 0 0 0; 0 0 0 | 0 0 1)");
    }

    #[test]
    fn subexpression_reps() {
        let m = example_chain();
        let mut env = RefinedEnv::default();
        env.delta.push(("Y".into(), PropTU::trivial(2)));
        let rep = |src: &str| {
            let phi = crate::formula::parse_formula_with_vars(src, &["Y"]).unwrap();
            let (_, d) = infer_refined(&m, &env, &phi).unwrap();
            interpret_affine(&m, &d, &Gamma::new(), &AffineConfig::default()).unwrap().rep.rows_text()
        };
        assert_eq!(rep("p2 /\\ Y"), "(0 0 0 | 0 0 0; 0 0 0 | 0 0 1)");
        assert_eq!(rep("Y"), "(0 0 0 | 0 0 0; 0 1 0 | 0 0 1)");
        assert_eq!(rep("p1"), "(1 0 0 | 0 0 0; 0 0 0 | 0 0 0)");
        assert_eq!(rep("(p2 /\\ Y) \\/ avg (p1 /\\ Y)"), "(0 0 0 | 0 0 0; 0 1/2 0 | 0 0 1)");
    }

    #[test]
    fn application_of_fixpoint_variable_composes() {
        let m = example_chain();
        let ty = RefinedType { args: vec![PropTU::trivial(2)], result: PropTU::trivial(2) };
        let mut v = AffineRep::<Rational>::zero(2, ty.clone());
        v.set(0, 0, 0, rat(1, 8));
        v.set(0, 1, 2, rat(1, 4));
        v.set(1, 0, 0, rat(1, 3));
        v.set(1, 1, 1, rat(1, 5));
        let mut env = RefinedEnv::default();
        env.gamma.insert("X".into(), ty);
        env.delta.push(("Y".into(), PropTU::trivial(2)));
        let phi = crate::formula::parse_formula_with_vars("X Y", &["X", "Y"]).unwrap();
        let (_, d) = infer_refined(&m, &env, &phi).unwrap();
        let mut g = Gamma::new();
        g.insert("X".to_string(), v.clone());
        let out = interpret_affine(&m, &d, &g, &AffineConfig::default()).unwrap();
        assert_eq!(out.rep, RepValue::Exact(v));
    }

    #[test]
    fn tofun_examples() {
        let ty = RefinedType { args: vec![PropTU::trivial(2)], result: PropTU::trivial(2) };
        let mut r = AffineRep::<Rational>::zero(2, ty.clone());
        r.set(1, 1, 2, int(1));
        let g = QuantVec(vec![int(0), int(1)]);
        assert_eq!(r.tofun(&[g.clone()]).unwrap().0, vec![int(0), int(1)]);
        assert_eq!(AffineRep::<Rational>::zero(2, ty).tofun(&[g]).unwrap().0, vec![int(0), int(0)]);
        let c = AffineRep::constant(RefinedType::prop(PropTU::trivial(2)), vec![int(1), int(1)]);
        assert_eq!(c.tofun(&[]).unwrap().0, vec![int(1), int(1)]);
    }

    #[test]
    fn tofun_rejects_out_of_type_arguments() {
        let tu = PropTU::new(StateSet::from_indices(2, [0]), StateSet::empty(2));
        let ty = RefinedType { args: vec![tu], result: PropTU::trivial(2) };
        let r = AffineRep::<Rational>::zero(2, ty);
        assert!(r.tofun(&[QuantVec(vec![int(1), int(0)])]).is_err());
        assert!(r.tofun(&[]).is_err());
    }

    #[test]
    fn canonicalize_folds_u_columns() {
        let tu = PropTU::new(StateSet::empty(2), StateSet::from_indices(2, [1]));
        let ty = RefinedType { args: vec![tu], result: PropTU::trivial(2) };
        let mut r = AffineRep::<Rational>::zero(2, ty);
        r.set(0, 0, 0, rat(1, 4));
        r.set(0, 1, 2, rat(1, 4));
        let c = r.clone().canonical();
        assert_eq!(*c.get(0, 0, 0), rat(1, 2));
        assert_eq!(*c.get(0, 1, 2), rat(0, 1));
        assert_eq!(c.clone().canonical(), c);
    }

    #[test]
    fn aff_leq_basics() {
        let ty = RefinedType { args: vec![PropTU::trivial(2)], result: PropTU::trivial(2) };
        let z = AffineRep::<Rational>::zero(2, ty.clone());
        let mut a = z.clone();
        a.set(0, 1, 1, rat(1, 2));
        assert!(aff_leq(&a, &a).unwrap());
        assert!(aff_leq(&z, &a).unwrap());
        assert!(!aff_leq(&a, &z).unwrap());
        let other = AffineRep::<Rational>::zero(2, RefinedType::prop(PropTU::trivial(2)));
        assert!(aff_leq(&z, &other).is_err());
        // A constant 1/2 and the identity are incomparable.
        let mut half = z.clone();
        half.set(0, 0, 0, rat(1, 2));
        let mut id = z.clone();
        id.set(0, 1, 1, int(1));
        assert!(!aff_leq(&half, &id).unwrap() && !aff_leq(&id, &half).unwrap());
        assert_eq!(aff_leq_by_vertices(&half, &id).unwrap(), false);
    }

    #[test]
    fn trivial_fixpoints() {
        let m = example_chain();
        let out = closed(&m, "mu X. X");
        assert!(out.exact());
        assert_eq!(out.rep.rows_text(), "(0 0 0 | 0 0 0)");
        let out = closed(&m, "nu X. X");
        assert_eq!(out.rep.rows_text(), "(1 0 0 | 1 0 0)");
        let out = closed(&m, "nu X. avg X");
        assert_eq!(out.rep.rows_text(), "(1 0 0 | 1 0 0)");
        let out = closed(&m, "nu X. p2 /\\ avg X");
        assert_eq!(out.rep.rows_text(), "(0 0 0 | 1 0 0)");
        let out = closed(&m, "mu X. p2 \\/ avg X");
        assert!(out.exact());
        assert_eq!(out.rep.rows_text(), "(1 0 0 | 1 0 0)");
    }

    #[test]
    fn solve_lfp_rejects_wrong_shape() {
        let m = example_chain();
        let phi = parse_formula("mu X : {;}->{;}. \\Y. (p2 /\\ Y) \\/ (p1 /\\ avg (X Y))").unwrap();
        let (_, d) = infer_refined(&m, &RefinedEnv::default(), &phi).unwrap();
        let body = &d.premises[0];
        let kappa = d.ty.clone();
        let r = solve_lfp(&m, "X", body, &kappa, &Gamma::new(), &AffineConfig::default()).unwrap();
        assert_eq!(r.rows_text(), "(0 0 0 | 0 0 0; 0 0 1 | 0 0 1)");
        let mut bad = kappa.clone();
        bad.result.u = StateSet::full(2);
        bad.result.t = StateSet::empty(2);
        assert!(solve_lfp(&m, "X", body, &bad, &Gamma::new(), &AffineConfig::default()).is_err());
        assert!(solve_gfp(&m, "X", body, &bad, &Gamma::new(), &AffineConfig::default()).is_err());
    }

    #[test]
    fn quadratic_fixpoint_converges_with_newton() {
        // x = 1/2 + 1/2 x^2 has least solution 1; plain iteration converges like 1/k.
        let m = MarkovChain::new(
            vec!["s".into(), "t".into()],
            vec![("s".into(), "t".into(), rat(1, 2)), ("s".into(), "s".into(), rat(1, 2)), ("t".into(), "t".into(), int(1))],
            vec![("a".into(), vec!["s".into()]), ("b".into(), vec!["t".into()])],
            "s",
        )
        .unwrap();
        // F y = avg((b /\ avg y) \/ (a /\ avg (F (F y)))): value at s with y = top solves x = 1/2 + 1/2 x^2.
        let src = "(mu F : {;}->{;}. \\Y. avg ((b /\\ avg Y) \\/ (a /\\ avg (F (F Y))))) top";
        let out = closed(&m, src);
        let v = out.rep.to_f64();
        assert!((v.get(0, 0, 0) - 1.0).abs() < 1e-6, "{}", out.rep.rows_text());
    }

    #[test]
    fn check_then_interpret_matches_infer() {
        let m = example_chain();
        let phi = parse_formula("mu X. p2 \\/ avg X").unwrap();
        let (ty, _) = infer_refined(&m, &RefinedEnv::default(), &phi).unwrap();
        let d = check_refined(&m, &RefinedEnv::default(), &phi, &ty).unwrap();
        let out = interpret_affine(&m, &d, &Gamma::new(), &AffineConfig::default()).unwrap();
        assert_eq!(out.rep.rows_text(), "(1 0 0 | 1 0 0)");
        let _: Vec<u8> = Vec::new();
    }
}
