use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::formula::{NamedTU, RefinedAnnot, SimpleType};
use crate::markov::{MarkovChain, StateSet};

/// `<T,U>`: a proposition that is 0 on `T` and 1 on `U`.
#[derive(Clone, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub struct PropTU {
    pub t: StateSet,
    pub u: StateSet,
}

impl PropTU {
    pub fn new(t: StateSet, u: StateSet) -> Self {
        debug_assert!(t.is_disjoint(&u));
        PropTU { t, u }
    }
    /// `<∅,∅>`.
    pub fn trivial(n: usize) -> Self {
        PropTU { t: StateSet::empty(n), u: StateSet::empty(n) }
    }
    /// `self` carries at least the information of `weaker`.
    pub fn entails(&self, weaker: &PropTU) -> bool {
        weaker.t.is_subset(&self.t) && weaker.u.is_subset(&self.u)
    }
    /// States where the value is not fixed by the type.
    pub fn free(&self) -> StateSet {
        self.t.union(&self.u).complement()
    }
    pub fn display(&self, m: &MarkovChain) -> String {
        format!("{{{} ; {}}}", m.set_names(&self.t).join(","), m.set_names(&self.u).join(","))
    }
}

/// `<T1,U1> -> ... -> <Tm,Um> -> <T,U>`.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct RefinedType {
    pub args: Vec<PropTU>,
    pub result: PropTU,
}

impl RefinedType {
    pub fn prop(tu: PropTU) -> Self {
        RefinedType { args: Vec::new(), result: tu }
    }
    pub fn arrow(arg: PropTU, res: RefinedType) -> Self {
        let mut args = alloc::vec![arg];
        args.extend(res.args);
        RefinedType { args, result: res.result }
    }
    pub fn trivial(n: usize, m: usize) -> Self {
        RefinedType { args: alloc::vec![PropTU::trivial(n); m], result: PropTU::trivial(n) }
    }
    pub fn arity(&self) -> usize {
        self.args.len()
    }
    pub fn is_prop(&self) -> bool {
        self.args.is_empty()
    }
    /// The type after consuming one argument.
    pub fn tail(&self) -> RefinedType {
        RefinedType { args: self.args[1..].to_vec(), result: self.result.clone() }
    }
    /// The simple type obtained by forgetting the state sets.
    pub fn erase(&self) -> SimpleType {
        SimpleType::first_order(self.args.len())
    }
    pub fn display(&self, m: &MarkovChain) -> String {
        let mut s = String::new();
        for a in &self.args {
            s.push_str(&a.display(m));
            s.push_str("->");
        }
        s.push_str(&self.result.display(m));
        s
    }
    /// Resolves a named annotation against the states of `m`.
    pub fn from_annot(m: &MarkovChain, a: &RefinedAnnot) -> Result<RefinedType, String> {
        let conv = |tu: &NamedTU| -> Result<PropTU, String> {
            let set = |names: &[String]| -> Result<StateSet, String> {
                let mut s = StateSet::empty(m.len());
                for x in names {
                    s.insert(m.state_index(x).ok_or_else(|| format!("unknown state `{x}` in refined annotation"))?);
                }
                Ok(s)
            };
            let (t, u) = (set(&tu.t)?, set(&tu.u)?);
            if !t.is_disjoint(&u) {
                return Err(format!("refined annotation {tu} has overlapping T and U"));
            }
            Ok(PropTU { t, u })
        };
        Ok(RefinedType { args: a.args.iter().map(conv).collect::<Result<_, _>>()?, result: conv(&a.result)? })
    }
    /// The named annotation for this type.
    pub fn to_annot(&self, m: &MarkovChain) -> RefinedAnnot {
        let conv = |tu: &PropTU| NamedTU {
            t: m.set_names(&tu.t).into_iter().map(String::from).collect(),
            u: m.set_names(&tu.u).into_iter().map(String::from).collect(),
        };
        RefinedAnnot { args: self.args.iter().map(conv).collect(), result: conv(&self.result) }
    }
}

/// Fixpoint variables `Γ` and the ordered λ-variables `Δ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefinedEnv {
    pub gamma: BTreeMap<String, RefinedType>,
    pub delta: Vec<(String, PropTU)>,
}
