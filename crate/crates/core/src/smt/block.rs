use alloc::vec;
use alloc::vec::Vec;

use super::fo::{FOFormula, Term};
use crate::affine::AffineRep;
use crate::rational::Rational;
use crate::refined::RefinedType;

/// A coefficient tensor whose entries are terms, laid out like [`AffineRep`].
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    n: usize,
    ty: RefinedType,
    c: Vec<Term>,
}

impl Block {
    pub fn zero(n: usize, ty: RefinedType) -> Self {
        let len = n * (ty.arity() + 1) * (n + 1);
        Block { n, ty, c: vec![Term::zero(); len] }
    }
    pub fn constant(ty: RefinedType, vals: Vec<Term>) -> Self {
        let mut b = Block::zero(vals.len(), ty);
        for (i, v) in vals.into_iter().enumerate() {
            b.set(i, 0, 0, v);
        }
        b
    }
    pub fn from_rep(r: &AffineRep<Rational>) -> Self {
        Block { n: r.n(), ty: r.ty().clone(), c: r.coeffs().iter().cloned().map(Term::Const).collect() }
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.ty.arity()
    }
    pub fn ty(&self) -> &RefinedType {
        &self.ty
    }
    pub fn with_type(mut self, ty: RefinedType) -> Self {
        debug_assert_eq!(ty.arity(), self.ty.arity());
        self.ty = ty;
        self
    }
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.m() + 1) + j) * (self.n + 1) + k
    }
    pub fn get(&self, i: usize, j: usize, k: usize) -> &Term {
        &self.c[self.idx(i, j, k)]
    }
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Term) {
        let x = self.idx(i, j, k);
        self.c[x] = v;
    }
    pub fn free_positions(&self) -> Vec<(usize, usize)> {
        crate::affine::free_positions_of(&self.ty, self.n)
    }
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

    pub fn canonicalize(&mut self) {
        let (n, m) = (self.n, self.m());
        for i in 0..n {
            for k in 1..=n {
                self.set(i, 0, k, Term::zero());
            }
            for j in 1..=m {
                self.set(i, j, 0, Term::zero());
                let tu = self.ty.args[j - 1].clone();
                for k in 1..=n {
                    if tu.t.contains(k - 1) {
                        self.set(i, j, k, Term::zero());
                    } else if tu.u.contains(k - 1) {
                        let c = self.get(i, j, k).clone();
                        if !c.is_zero() {
                            let base = self.get(i, 0, 0).clone();
                            self.set(i, 0, 0, Term::add(base, c));
                            self.set(i, j, k, Term::zero());
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

    /// Slotwise equality of canonical forms.
    pub fn equals(&self, other: &Block) -> FOFormula {
        let (a, b) = (self.clone().canonical(), other.clone().canonical());
        FOFormula::and(a.canonical_slots().into_iter().map(|(i, j, k)| FOFormula::eq(a.get(i, j, k).clone(), b.get(i, j, k).clone())))
    }

    /// `⌊self⌋ ⪯ ⌊other⌋` as a conjunction over states and admissible vertices.
    pub fn leq(&self, other: &Block) -> FOFormula {
        let (a, b) = (self.clone().canonical(), other.clone().canonical());
        let free = a.free_positions();
        let mut out = Vec::new();
        for i in 0..a.n {
            for bits in 0u64..(1u64 << free.len()) {
                let mut lhs = vec![a.get(i, 0, 0).clone()];
                let mut rhs = vec![b.get(i, 0, 0).clone()];
                for (p, &(j, k)) in free.iter().enumerate() {
                    if bits >> p & 1 == 1 {
                        lhs.push(a.get(i, j, k + 1).clone());
                        rhs.push(b.get(i, j, k + 1).clone());
                    }
                }
                out.push(FOFormula::le(Term::sum(lhs), Term::sum(rhs)));
            }
        }
        FOFormula::and(out)
    }

    /// Value at the all-ones admissible vertex of row `i`, the row's largest value.
    pub fn row_top(&self, i: usize) -> Term {
        let c = self.clone().canonical();
        let mut v = vec![c.get(i, 0, 0).clone()];
        for (j, k) in c.free_positions() {
            v.push(c.get(i, j, k + 1).clone());
        }
        Term::sum(v)
    }

    /// Substitutes constants for variables.
    pub fn eval(&self, env: &alloc::collections::BTreeMap<alloc::string::String, Rational>) -> Result<AffineRep<Rational>, super::fo::FoEvalError> {
        let vals: Result<Vec<Rational>, _> = self.c.iter().map(|t| t.eval(env)).collect();
        Ok(AffineRep::from_coeffs(self.n, self.ty.clone(), vals?).expect("block layout matches"))
    }
}
