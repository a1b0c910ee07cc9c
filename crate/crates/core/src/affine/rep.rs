use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::eval::QuantVec;
use crate::markov::StateSet;
use crate::rational::Rational;
use crate::refined::{PropTU, RefinedType};
use crate::scalar::Scalar;

/// Coefficient tensor `c[i][j][k]` (`i` state, `j` argument with 0 for the constant part, `k` state with 0
/// for the constant part) of an affine map `[0,1]^{m·n} -> [0,1]^n`, tagged with the refined type it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineRep<N> {
    n: usize,
    ty: RefinedType,
    coeffs: Vec<N>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepError {
    Arity { expected: usize, got: usize },
    ArgumentOutOfType { arg: usize, state: usize },
    TypeMismatch,
    Length,
}

impl fmt::Display for RepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepError::Arity { expected, got } => write!(f, "expected {expected} arguments, got {got}"),
            RepError::ArgumentOutOfType { arg, state } => {
                write!(f, "argument {arg} violates its {{T;U}} type at state index {state}")
            }
            RepError::TypeMismatch => write!(f, "representations have different argument types"),
            RepError::Length => write!(f, "vector has the wrong length"),
        }
    }
}

impl<N: Scalar> AffineRep<N> {
    /// The all-zero representation.
    pub fn zero(n: usize, ty: RefinedType) -> Self {
        let len = n * (ty.args.len() + 1) * (n + 1);
        AffineRep { n, ty, coeffs: alloc::vec![N::zero(); len] }
    }

    /// Constant function returning `vals`.
    pub fn constant(ty: RefinedType, vals: Vec<N>) -> Self {
        let n = vals.len();
        let mut r = Self::zero(n, ty);
        for (i, v) in vals.into_iter().enumerate() {
            r.set(i, 0, 0, v);
        }
        r
    }

    /// Builds a representation from a full tensor in `i, j, k` order.
    pub fn from_coeffs(n: usize, ty: RefinedType, coeffs: Vec<N>) -> Result<Self, RepError> {
        if coeffs.len() != n * (ty.args.len() + 1) * (n + 1) {
            return Err(RepError::Length);
        }
        Ok(AffineRep { n, ty, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.ty.args.len()
    }
    pub fn ty(&self) -> &RefinedType {
        &self.ty
    }
    pub fn coeffs(&self) -> &[N] {
        &self.coeffs
    }
    pub fn with_type(mut self, ty: RefinedType) -> Self {
        debug_assert_eq!(ty.args.len(), self.ty.args.len());
        self.ty = ty;
        self
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.m() + 1) + j) * (self.n + 1) + k
    }
    pub fn get(&self, i: usize, j: usize, k: usize) -> &N {
        &self.coeffs[self.idx(i, j, k)]
    }
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: N) {
        let x = self.idx(i, j, k);
        self.coeffs[x] = v;
    }

    /// Constant parts `c[i][0][0]`.
    pub fn constants(&self) -> Vec<N> {
        (0..self.n).map(|i| self.get(i, 0, 0).clone()).collect()
    }

    /// Positions `(j, k)` with `j, k >= 1` that the type leaves unconstrained.
    pub fn free_positions(&self) -> Vec<(usize, usize)> {
        free_positions(&self.ty, self.n)
    }

    /// Coordinates that carry information in canonical form: all constants, then free cross terms.
    pub fn canonical_slots(&self) -> Vec<(usize, usize, usize)> {
        let free = self.free_positions();
        let mut out = Vec::new();
        for i in 0..self.n {
            out.push((i, 0, 0));
            for &(j, k) in &free {
                out.push((i, j, k + 1));
            }
        }
        out
    }

    pub fn map<M: Scalar>(&self, f: impl Fn(&N) -> M) -> AffineRep<M> {
        AffineRep { n: self.n, ty: self.ty.clone(), coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> AffineRep<f64> {
        self.map(|x| x.to_f64())
    }

    /// Zeroes unused entries and `T` columns, folds `U` columns into the constant.
    pub fn canonicalize(&mut self) {
        let (n, m) = (self.n, self.m());
        for i in 0..n {
            for k in 1..=n {
                self.set(i, 0, k, N::zero());
            }
            for j in 1..=m {
                self.set(i, j, 0, N::zero());
                let (t, u) = (self.ty.args[j - 1].t.clone(), self.ty.args[j - 1].u.clone());
                for k in 1..=n {
                    if t.contains(k - 1) {
                        self.set(i, j, k, N::zero());
                    } else if u.contains(k - 1) {
                        let c = self.get(i, j, k).clone();
                        if c != N::zero() {
                            let base = self.get(i, 0, 0).clone();
                            self.set(i, 0, 0, base + c);
                            self.set(i, j, k, N::zero());
                        }
                    }
                }
            }
        }
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// `Σ_{j,k} c[i][j][k] <= 1` and every coefficient in `[0,1]`, up to `eps`.
    pub fn within_budget(&self, eps: f64) -> bool {
        let per = (self.m() + 1) * (self.n + 1);
        self.coeffs.iter().all(|c| c.to_f64() >= -eps && c.to_f64() <= 1.0 + eps)
            && self.coeffs.chunks(per).all(|row| row.iter().map(|c| c.to_f64()).sum::<f64>() <= 1.0 + eps)
    }

    /// Applies the represented function to `args`, which must respect the argument types.
    pub fn tofun(&self, args: &[QuantVec<N>]) -> Result<QuantVec<N>, RepError> {
        if args.len() != self.m() {
            return Err(RepError::Arity { expected: self.m(), got: args.len() });
        }
        for (j, g) in args.iter().enumerate() {
            if g.len() != self.n {
                return Err(RepError::Length);
            }
            let tu = &self.ty.args[j];
            for k in 0..self.n {
                let v = &g.0[k];
                let bad = *v < N::zero()
                    || *v > N::one()
                    || (tu.t.contains(k) && *v != N::zero())
                    || (tu.u.contains(k) && *v != N::one());
                if bad {
                    return Err(RepError::ArgumentOutOfType { arg: j, state: k });
                }
            }
        }
        Ok(QuantVec(
            (0..self.n)
                .map(|i| {
                    let mut acc = self.get(i, 0, 0).clone();
                    for (j, g) in args.iter().enumerate() {
                        for k in 0..self.n {
                            let c = self.get(i, j + 1, k + 1);
                            if *c != N::zero() {
                                acc = acc + c.clone() * g.0[k].clone();
                            }
                        }
                    }
                    acc
                })
                .collect(),
        ))
    }

    /// Rows in the layout `(M_1 | M_2 ...; ...)`: one group per `j`, one block of `n+1` entries per state.
    pub fn rows_text(&self) -> String {
        self.rows_text_with(|x| format!("{x}"))
    }

    pub fn rows_text_with(&self, fmt_entry: impl Fn(&N) -> String) -> String {
        let mut groups = Vec::new();
        for j in 0..=self.m() {
            let blocks: Vec<String> = (0..self.n)
                .map(|i| (0..=self.n).map(|k| fmt_entry(self.get(i, j, k))).collect::<Vec<_>>().join(" "))
                .collect();
            groups.push(blocks.join(" | "));
        }
        format!("({})", groups.join("; "))
    }

    /// Rows as nested vectors `[j][i][k]`, for machine-readable output.
    pub fn rows(&self) -> Vec<Vec<Vec<N>>> {
        (0..=self.m())
            .map(|j| (0..self.n).map(|i| (0..=self.n).map(|k| self.get(i, j, k).clone()).collect()).collect())
            .collect()
    }
}

pub(crate) fn free_positions(ty: &RefinedType, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (j, tu) in ty.args.iter().enumerate() {
        for k in 0..n {
            if !tu.t.contains(k) && !tu.u.contains(k) {
                out.push((j + 1, k));
            }
        }
    }
    out
}

/// `⌊a⌋ ⪯ ⌊b⌋`: at every state and every admissible 0/1 argument vertex, `a` is below `b`.
pub fn aff_leq<N: Scalar>(a: &AffineRep<N>, b: &AffineRep<N>) -> Result<bool, RepError> {
    if a.ty.args != b.ty.args || a.n != b.n {
        return Err(RepError::TypeMismatch);
    }
    let (a, b) = (a.clone().canonical(), b.clone().canonical());
    let free = a.free_positions();
    for i in 0..a.n {
        // The worst vertex picks exactly the positions where a's coefficient exceeds b's.
        let mut lhs = a.get(i, 0, 0).clone();
        let mut rhs = b.get(i, 0, 0).clone();
        for &(j, k) in &free {
            let (x, y) = (a.get(i, j, k + 1), b.get(i, j, k + 1));
            if x > y {
                lhs = lhs + x.clone();
                rhs = rhs + y.clone();
            }
        }
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The admissible vertices `𝒥(κ)` of an argument type list, as 0/1 argument tuples.
#[derive(Clone, Debug)]
pub struct VertexSet {
    n: usize,
    args: Vec<PropTU>,
    free: Vec<(usize, usize)>,
}

impl VertexSet {
    pub fn new(n: usize, args: &[PropTU]) -> Self {
        let ty = RefinedType { args: args.to_vec(), result: PropTU::trivial(n) };
        VertexSet { n, args: args.to_vec(), free: free_positions(&ty, n) }
    }
    /// Number of vertices.
    pub fn count(&self) -> u128 {
        1u128 << self.free.len()
    }
    /// The vertex with index `bits`; bit `b` decides the `b`-th free position.
    pub fn vertex(&self, bits: u128) -> Vec<StateSet> {
        let mut sets: Vec<StateSet> = self.args.iter().map(|tu| tu.u.clone()).collect();
        for (b, &(j, k)) in self.free.iter().enumerate() {
            if bits >> b & 1 == 1 {
                sets[j - 1].insert(k);
            }
        }
        sets
    }
    pub fn iter(&self) -> impl Iterator<Item = Vec<StateSet>> + '_ {
        (0..self.count()).map(move |b| self.vertex(b))
    }
    /// Characteristic vectors of a vertex.
    pub fn as_args<N: Scalar>(&self, v: &[StateSet]) -> Vec<QuantVec<N>> {
        v.iter()
            .map(|s| QuantVec((0..self.n).map(|k| if s.contains(k) { N::one() } else { N::zero() }).collect()))
            .collect()
    }
}

/// `aff_leq` decided by evaluating both functions at every admissible vertex.
pub fn aff_leq_by_vertices<N: Scalar>(a: &AffineRep<N>, b: &AffineRep<N>) -> Result<bool, RepError> {
    if a.ty.args != b.ty.args || a.n != b.n {
        return Err(RepError::TypeMismatch);
    }
    let vs = VertexSet::new(a.n, &a.ty.args);
    for v in vs.iter() {
        let args = vs.as_args::<N>(&v);
        if !a.tofun(&args)?.leq(&b.tofun(&args)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact and approximate representations behind one interface.
#[derive(Clone, Debug, PartialEq)]
pub enum RepValue {
    Exact(AffineRep<Rational>),
    Approx(AffineRep<f64>),
}

impl RepValue {
    pub fn is_exact(&self) -> bool {
        matches!(self, RepValue::Exact(_))
    }
    pub fn to_f64(&self) -> AffineRep<f64> {
        match self {
            RepValue::Exact(r) => r.to_f64(),
            RepValue::Approx(r) => r.clone(),
        }
    }
    pub fn ty(&self) -> &RefinedType {
        match self {
            RepValue::Exact(r) => r.ty(),
            RepValue::Approx(r) => r.ty(),
        }
    }
    pub fn rows_text(&self) -> String {
        match self {
            RepValue::Exact(r) => r.rows_text(),
            RepValue::Approx(r) => r.rows_text_with(|x| format_float(*x)),
        }
    }
    /// Constant part at state `i`, as text.
    pub fn constant_text(&self, i: usize) -> String {
        match self {
            RepValue::Exact(r) => format!("{}", r.get(i, 0, 0)),
            RepValue::Approx(r) => format_float(*r.get(i, 0, 0)),
        }
    }
}

/// Short float rendering that keeps 10 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return String::from("0");
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    String::from(s)
}
