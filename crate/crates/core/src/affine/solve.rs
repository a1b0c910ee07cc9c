use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use super::interp::{binder_of, fix_start, interp, node_type, AffineError, Ctx, FixHandler, Gamma};
use super::rep::{AffineRep, RepValue};
use super::sym::{Poly, Sym};
use crate::markov::MarkovChain;
use crate::rational::{self, Rational};
use crate::refined::{RefinedDerivation, Rule};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineConfig {
    /// Sup-norm gap at which coefficient iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Accelerate slow iterations with Newton steps on the frozen polynomial system.
    pub newton: bool,
    /// Try to pin fixpoints down exactly.
    pub exact: bool,
}

impl Default for AffineConfig {
    fn default() -> Self {
        AffineConfig { tol: 1e-9, max_iter: 100_000, newton: true, exact: true }
    }
}

/// Last solution found for each fixpoint binder.
pub type Records<N> = BTreeMap<String, AffineRep<N>>;

fn sup_gap(a: &AffineRep<f64>, b: &AffineRep<f64>) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Kleene iteration over float coefficient tensors.
pub(crate) struct FloatSolver<'c> {
    pub cfg: &'c AffineConfig,
    pub records: Records<f64>,
}

impl<'c> FloatSolver<'c> {
    pub fn new(cfg: &'c AffineConfig) -> Self {
        FloatSolver { cfg, records: Records::new() }
    }
}

impl FixHandler<f64> for FloatSolver<'_> {
    fn fixpoint(&mut self, ctx: &Ctx<'_, f64>, d: &RefinedDerivation, gamma: &mut Gamma<f64>) -> Result<AffineRep<f64>, AffineError> {
        let x_name = binder_of(d);
        let body = &d.premises[0];
        let tag = node_type(d);
        let saved = gamma.remove(&x_name);
        let mut x = fix_start::<f64>(ctx.m.len(), d);
        let mut it = 0usize;
        let result = loop {
            gamma.insert(x_name.clone(), x.clone());
            let y = match interp(ctx, body, gamma, self) {
                Ok(y) => y.with_type(tag.clone()),
                Err(e) => break Err(e),
            };
            let gap = sup_gap(&x, &y);
            x = y;
            it += 1;
            if gap <= self.cfg.tol {
                break Ok(x.clone());
            }
            if it >= self.cfg.max_iter {
                break Err(AffineError::IterationCap { var: x_name.clone(), gap });
            }
            if self.cfg.newton && it % 32 == 0 {
                gamma.remove(&x_name);
                if let Some(z) = newton(ctx.m, d, gamma, &x, self.cfg) {
                    x = z;
                }
            }
        };
        gamma.remove(&x_name);
        if let Some(s) = saved {
            gamma.insert(x_name.clone(), s);
        }
        let x = result?;
        self.records.insert(x_name, x.clone());
        Ok(x)
    }
}

/// The coefficient equations `x = body(x)` of a fixpoint, frozen at a numeric point. Nested fixpoints of
/// the same kind contribute their own variables and equations.
pub(crate) struct System {
    pub kind: Rule,
    pub shadows: Vec<f64>,
    pub eqs: Vec<Option<Poly>>,
    /// Number of variables belonging to the outermost fixpoint.
    pub outer: usize,
}

impl System {
    fn alloc(&mut self, rep: &AffineRep<f64>) -> (AffineRep<Sym>, Vec<(u32, (usize, usize, usize))>) {
        let mut out = AffineRep::<Sym>::zero(rep.n(), rep.ty().clone());
        let mut slots = Vec::new();
        for s in rep.canonical_slots() {
            let v = self.shadows.len() as u32;
            let sh = *rep.get(s.0, s.1, s.2);
            self.shadows.push(sh);
            self.eqs.push(None);
            out.set(s.0, s.1, s.2, Sym::var(v, sh));
            slots.push((v, s));
        }
        (out, slots)
    }
    pub fn is_linear(&self) -> bool {
        self.eqs.iter().all(|e| e.as_ref().is_some_and(|p| p.degree() <= 1))
    }
}

struct SymHandler<'a, 'c> {
    sys: &'a mut System,
    ctx_f: Ctx<'a, f64>,
    cfg: &'c AffineConfig,
}

impl FixHandler<Sym> for SymHandler<'_, '_> {
    fn fixpoint(&mut self, ctx: &Ctx<'_, Sym>, d: &RefinedDerivation, gamma: &mut Gamma<Sym>) -> Result<AffineRep<Sym>, AffineError> {
        if d.rule != self.sys.kind {
            return Err(AffineError::Alternation);
        }
        let x_name = binder_of(d);
        let mut gamma_f: Gamma<f64> = gamma.iter().map(|(k, v)| (k.clone(), v.map(|s| s.shadow))).collect();
        let mut fs = FloatSolver::new(self.cfg);
        let sol = fs.fixpoint(&self.ctx_f, d, &mut gamma_f)?;
        let (rep, slots) = self.sys.alloc(&sol);
        let saved = gamma.insert(x_name.clone(), rep.clone());
        let out = interp(ctx, &d.premises[0], gamma, self);
        gamma.remove(&x_name);
        if let Some(s) = saved {
            gamma.insert(x_name, s);
        }
        let out = out?;
        for (v, (i, j, k)) in slots {
            self.sys.eqs[v as usize] = Some(out.get(i, j, k).poly.clone());
        }
        Ok(rep)
    }
}

/// Equations of fixpoint node `d` at the point `x`, with free fixpoint variables fixed by `gamma`.
pub(crate) fn build_system(
    m: &MarkovChain,
    d: &RefinedDerivation,
    gamma: &Gamma<Sym>,
    x: &AffineRep<f64>,
    cfg: &AffineConfig,
) -> Result<System, AffineError> {
    let mut sys = System { kind: d.rule, shadows: Vec::new(), eqs: Vec::new(), outer: 0 };
    let (rep, slots) = sys.alloc(x);
    sys.outer = slots.len();
    let ctx = Ctx::<Sym>::new(m);
    let mut gamma = gamma.clone();
    gamma.insert(binder_of(d), rep);
    let out = {
        let mut h = SymHandler { sys: &mut sys, ctx_f: Ctx::new(m), cfg };
        interp(&ctx, &d.premises[0], &mut gamma, &mut h)?
    };
    for (v, (i, j, k)) in slots {
        sys.eqs[v as usize] = Some(out.get(i, j, k).poly.clone());
    }
    Ok(sys)
}

fn sym_gamma_f64(gamma: &Gamma<f64>) -> Gamma<Sym> {
    gamma
        .iter()
        .map(|(k, v)| {
            (
                k.clone(),
                v.map(|x| Sym { poly: Poly::constant(rational::from_f64(*x).unwrap_or_else(Rational::zero)), shadow: *x }),
            )
        })
        .collect()
}

/// Dense Gaussian elimination with partial pivoting; `None` when (nearly) singular.
fn solve_dense_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = alloc::vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn solve_dense_rat(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &a[c][c];
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
            }
            let t = &f * &b[c];
            b[r] -= t;
        }
    }
    let mut x = alloc::vec![Rational::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for k in r + 1..n {
            s -= &a[r][k] * &x[k];
        }
        x[r] = s / &a[r][r];
    }
    Some(x)
}

/// Newton iteration on `x = P(x)` starting from the Kleene iterate `x`.
fn newton(m: &MarkovChain, d: &RefinedDerivation, gamma: &Gamma<f64>, x: &AffineRep<f64>, cfg: &AffineConfig) -> Option<AffineRep<f64>> {
    let g = sym_gamma_f64(gamma);
    let mut cur = x.clone();
    let slots = cur.canonical_slots();
    for _ in 0..200 {
        let sys = build_system(m, d, &g, &cur, cfg).ok()?;
        let nv = sys.shadows.len();
        let xs = &sys.shadows;
        let eqs: Vec<&Poly> = sys.eqs.iter().map(|e| e.as_ref()).collect::<Option<_>>()?;
        let mut jac = alloc::vec![alloc::vec![0.0; nv]; nv];
        let mut rhs = alloc::vec![0.0; nv];
        for v in 0..nv {
            for (w, row) in jac[v].iter_mut().enumerate() {
                *row = -eqs[v].deriv_f64(w as u32, xs);
            }
            jac[v][v] += 1.0;
            rhs[v] = eqs[v].eval_f64(xs) - xs[v];
        }
        let delta = solve_dense_f64(jac, rhs)?;
        let step = delta[..sys.outer].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut next = cur.clone();
        for (idx, &(i, j, k)) in slots.iter().enumerate() {
            let v = (xs[idx] + delta[idx]).clamp(0.0, 1.0);
            next.set(i, j, k, v);
        }
        // Newton from below must not decrease a least fixpoint iterate (dually for greatest).
        let monotone = next.coeffs().iter().zip(x.coeffs()).all(|(a, b)| match d.rule {
            Rule::Mu => *a >= b - 1e-9,
            _ => *a <= b + 1e-9,
        });
        if !monotone || !next.within_budget(1e-9) {
            return None;
        }
        cur = next;
        if step < cfg.tol * 1e-2 {
            break;
        }
    }
    Some(cur)
}

/// Least (or, when no variable is pruned, unique) solution of a linear frozen system.
fn linear_candidate(sys: &System) -> Option<Vec<Rational>> {
    let nv = sys.shadows.len();
    let eqs: Vec<&Poly> = sys.eqs.iter().map(|e| e.as_ref()).collect::<Option<_>>()?;
    let b: Vec<Rational> = eqs.iter().map(|p| p.constant_term()).collect();
    let deps: Vec<Vec<u32>> = eqs
        .iter()
        .map(|p| p.terms.keys().filter(|mm| mm.len() == 1).map(|mm| mm[0]).collect())
        .collect();
    let mut live: Vec<bool> = b.iter().map(|c| c.is_positive()).collect();
    if sys.kind == Rule::Mu {
        loop {
            let mut changed = false;
            for v in 0..nv {
                if !live[v] && deps[v].iter().any(|&w| live[w as usize]) {
                    live[v] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    } else {
        live = alloc::vec![true; nv];
    }
    let idx: Vec<usize> = (0..nv).filter(|&v| live[v]).collect();
    let pos: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(a, &v)| (v, a)).collect();
    let k = idx.len();
    let mut a = alloc::vec![alloc::vec![Rational::zero(); k]; k];
    let mut rhs = alloc::vec![Rational::zero(); k];
    for (r, &v) in idx.iter().enumerate() {
        a[r][r] = Rational::one();
        for w in &deps[v] {
            if let Some(&c) = pos.get(&(*w as usize)) {
                a[r][c] -= eqs[v].linear_coeff(*w);
            }
        }
        rhs[r] = b[v].clone();
    }
    let sol = solve_dense_rat(a, rhs)?;
    let mut out = alloc::vec![Rational::zero(); nv];
    for (r, &v) in idx.iter().enumerate() {
        out[v] = sol[r].clone();
    }
    Some(out)
}

/// Exact fixpoints: numeric solve, then exact candidates checked by re-interpretation.
pub(crate) struct ExactSolver<'c> {
    pub cfg: &'c AffineConfig,
    pub records: Records<Rational>,
}

impl<'c> ExactSolver<'c> {
    pub fn new(cfg: &'c AffineConfig) -> Self {
        ExactSolver { cfg, records: Records::new() }
    }

    fn verify(
        &mut self,
        ctx: &Ctx<'_, Rational>,
        d: &RefinedDerivation,
        gamma: &mut Gamma<Rational>,
        cand: AffineRep<Rational>,
        num: &AffineRep<f64>,
    ) -> Result<Option<AffineRep<Rational>>, AffineError> {
        let close = cand.coeffs().iter().zip(num.coeffs()).all(|(c, x)| (c.to_f64() - x).abs() <= 1e-6f64.max(self.cfg.tol * 100.0));
        if !close || !cand.within_budget(0.0) {
            return Ok(None);
        }
        let x_name = binder_of(d);
        let saved = gamma.insert(x_name.clone(), cand.clone());
        let out = interp(ctx, &d.premises[0], gamma, self);
        gamma.remove(&x_name);
        if let Some(s) = saved {
            gamma.insert(x_name, s);
        }
        match out {
            Ok(y) if y.coeffs() == cand.coeffs() => Ok(Some(cand)),
            Ok(_) | Err(AffineError::Inexact(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl FixHandler<Rational> for ExactSolver<'_> {
    fn fixpoint(&mut self, ctx: &Ctx<'_, Rational>, d: &RefinedDerivation, gamma: &mut Gamma<Rational>) -> Result<AffineRep<Rational>, AffineError> {
        let x_name = binder_of(d);
        let ctx_f = Ctx::<f64>::new(ctx.m);
        let mut gamma_f: Gamma<f64> = gamma.iter().map(|(k, v)| (k.clone(), v.to_f64())).collect();
        let num = FloatSolver::new(self.cfg).fixpoint(&ctx_f, d, &mut gamma_f)?;
        let tag = node_type(d);
        let slots = num.canonical_slots();
        let mut candidates: Vec<AffineRep<Rational>> = Vec::new();
        let g: Gamma<Sym> = gamma.iter().map(|(k, v)| (k.clone(), v.map(Sym::from_rational))).collect();
        if let Ok(sys) = build_system(ctx.m, d, &g, &num, self.cfg) {
            if sys.is_linear() {
                if let Some(sol) = linear_candidate(&sys) {
                    let mut r = AffineRep::<Rational>::zero(ctx.m.len(), tag.clone());
                    for (v, &(i, j, k)) in slots.iter().enumerate() {
                        r.set(i, j, k, sol[v].clone());
                    }
                    candidates.push(r);
                }
            }
        }
        let eps = 1e-7f64.max(self.cfg.tol * 10.0);
        let mut snapped = AffineRep::<Rational>::zero(ctx.m.len(), tag);
        let mut ok = true;
        for &(i, j, k) in &slots {
            match rational::snap(*num.get(i, j, k), eps) {
                Some(r) => snapped.set(i, j, k, r),
                None => ok = false,
            }
        }
        if ok && !candidates.contains(&snapped) {
            candidates.push(snapped);
        }
        for c in candidates {
            if let Some(r) = self.verify(ctx, d, gamma, c, &num)? {
                self.records.insert(x_name, r.clone());
                return Ok(r);
            }
        }
        Err(AffineError::Inexact(x_name))
    }
}

/// Result of the affine route.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineOutcome {
    pub rep: RepValue,
    /// Solutions of the fixpoints, by binder, from the final pass.
    pub fixpoints: Vec<(String, RepValue)>,
}

impl AffineOutcome {
    pub fn exact(&self) -> bool {
        self.rep.is_exact()
    }
}

/// Canonical representation of `λΔ.φ` for the conclusion of `d`, exact when every fixpoint could be
/// pinned down exactly.
pub fn interpret_affine(
    m: &MarkovChain,
    d: &RefinedDerivation,
    gamma: &Gamma<Rational>,
    cfg: &AffineConfig,
) -> Result<AffineOutcome, AffineError> {
    if cfg.exact {
        let ctx = Ctx::<Rational>::new(m);
        let mut h = ExactSolver::new(cfg);
        match interp(&ctx, d, &mut gamma.clone(), &mut h) {
            Ok(r) => {
                return Ok(AffineOutcome {
                    rep: RepValue::Exact(r),
                    fixpoints: h.records.into_iter().map(|(k, v)| (k, RepValue::Exact(v))).collect(),
                })
            }
            Err(AffineError::Inexact(_)) | Err(AffineError::Alternation) => {}
            Err(e) => return Err(e),
        }
    }
    let ctx = Ctx::<f64>::new(m);
    let mut h = FloatSolver::new(cfg);
    let mut gf: Gamma<f64> = gamma.iter().map(|(k, v)| (k.clone(), v.to_f64())).collect();
    let r = interp(&ctx, d, &mut gf, &mut h)?;
    Ok(AffineOutcome {
        rep: RepValue::Approx(r),
        fixpoints: h.records.into_iter().map(|(k, v)| (k, RepValue::Approx(v))).collect(),
    })
}

/// Float-only interpretation, used by property tests.
pub fn interpret_affine_f64(
    m: &MarkovChain,
    d: &RefinedDerivation,
    gamma: &Gamma<f64>,
    cfg: &AffineConfig,
) -> Result<AffineRep<f64>, AffineError> {
    let ctx = Ctx::<f64>::new(m);
    let mut h = FloatSolver::new(cfg);
    interp(&ctx, d, &mut gamma.clone(), &mut h)
}

fn fix_node(rule: Rule, binder: &str, body: &RefinedDerivation, kappa: &crate::refined::RefinedType) -> RefinedDerivation {
    let b = crate::formula::Binder::new(binder, kappa.erase());
    let formula = match rule {
        Rule::Mu => crate::formula::Formula::mu(b, body.formula.clone()),
        _ => crate::formula::Formula::nu(b, body.formula.clone()),
    };
    RefinedDerivation { rule, delta: Vec::new(), formula, ty: kappa.clone(), premises: alloc::vec![body.clone()] }
}

fn solve_fix(
    rule: Rule,
    m: &MarkovChain,
    binder: &str,
    body: &RefinedDerivation,
    kappa: &crate::refined::RefinedType,
    gamma: &Gamma<Rational>,
    cfg: &AffineConfig,
) -> Result<RepValue, AffineError> {
    let shape = if rule == Rule::Mu { kappa.result.u.is_empty() } else { kappa.result.t.is_empty() };
    if !shape {
        return Err(AffineError::Mismatch(alloc::format!("fixpoint type {} has the wrong final shape", kappa.display(m))));
    }
    if !body.delta.is_empty() || body.ty != *kappa {
        return Err(AffineError::Mismatch(String::from("body derivation does not conclude the fixpoint type")));
    }
    let d = fix_node(rule, binder, body, kappa);
    Ok(interpret_affine(m, &d, gamma, cfg)?.rep)
}

/// Least fixpoint of `λX.body` at `kappa`, which must end in `<T,∅>`.
pub fn solve_lfp(
    m: &MarkovChain,
    binder: &str,
    body: &RefinedDerivation,
    kappa: &crate::refined::RefinedType,
    gamma: &Gamma<Rational>,
    cfg: &AffineConfig,
) -> Result<RepValue, AffineError> {
    solve_fix(Rule::Mu, m, binder, body, kappa, gamma, cfg)
}

/// Greatest fixpoint of `λX.body` at `kappa`, which must end in `<∅,U>`.
pub fn solve_gfp(
    m: &MarkovChain,
    binder: &str,
    body: &RefinedDerivation,
    kappa: &crate::refined::RefinedType,
    gamma: &Gamma<Rational>,
    cfg: &AffineConfig,
) -> Result<RepValue, AffineError> {
    solve_fix(Rule::Nu, m, binder, body, kappa, gamma, cfg)
}
