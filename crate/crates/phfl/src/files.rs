//! JSON file formats for chains, automata and recursion schemes, and formula text files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use phfl_core::formula::{parse_formula, Formula};
use phfl_core::markov::MarkovChain;
use phfl_core::rational::{parse_rational, Rational};
use phfl_core::reductions::{parse_pterm, Phors, PhorsRule, ProbAutomaton};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileError {
    Io { path: String, msg: String },
    /// Malformed content; `what` names the file kind.
    Format { what: &'static str, msg: String },
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Io { path, msg } => write!(f, "cannot access `{path}`: {msg}"),
            FileError::Format { what, msg } => write!(f, "invalid {what}: {msg}"),
        }
    }
}

impl std::error::Error for FileError {}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|e| FileError::Io { path: path.display().to_string(), msg: e.to_string() })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|e| FileError::Io { path: path.display().to_string(), msg: e.to_string() })
}

/// A probability written as a JSON string (`"1/2"`, `"0.25"`) or number, read exactly.
fn prob(what: &'static str, v: &Value) -> Result<Rational, FileError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(FileError::Format { what, msg: format!("expected a probability, found {other}") }),
    };
    parse_rational(&text).map_err(|e| FileError::Format { what, msg: e.to_string() })
}

fn json<'a, T: Deserialize<'a>>(what: &'static str, text: &'a str) -> Result<T, FileError> {
    serde_json::from_str(text).map_err(|e| FileError::Format { what, msg: e.to_string() })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    states: Vec<String>,
    init: String,
    #[serde(default)]
    transitions: Vec<(String, String, Value)>,
    #[serde(default)]
    labels: BTreeMap<String, Vec<String>>,
}

pub fn parse_chain(text: &str) -> Result<MarkovChain, FileError> {
    const WHAT: &str = "chain file";
    let f: ChainFile = json(WHAT, text)?;
    let trans = f.transitions.iter().map(|(a, b, p)| Ok((a.clone(), b.clone(), prob(WHAT, p)?))).collect::<Result<_, _>>()?;
    MarkovChain::new(f.states, trans, f.labels.into_iter().collect(), &f.init).map_err(|e| FileError::Format { what: WHAT, msg: e.to_string() })
}

pub fn load_chain(path: &Path) -> Result<MarkovChain, FileError> {
    parse_chain(&read_text(path)?)
}

/// Chain file text. Complement atoms added on load are left out.
pub fn chain_to_json(m: &MarkovChain) -> String {
    let labels = m.labels();
    let labels = labels
        .iter()
        .filter(|(a, _)| !(a.starts_with('~') && labels.contains_key(&a[1..])))
        .map(|(a, set)| (a.clone(), m.set_names(set).into_iter().map(String::from).collect()))
        .collect();
    let f = ChainFile {
        states: m.states().to_vec(),
        init: m.state_name(m.init()).to_string(),
        transitions: m
            .transitions()
            .map(|(i, j, p)| (m.state_name(i).to_string(), m.state_name(j).to_string(), Value::String(p.to_string())))
            .collect(),
        labels,
    };
    serde_json::to_string_pretty(&f).expect("chain serializes") + "\n"
}

pub fn parse_formula_text(text: &str) -> Result<Formula, FileError> {
    parse_formula(text).map_err(|e| FileError::Format { what: "formula", msg: e.to_string() })
}

pub fn load_formula(path: &Path) -> Result<Formula, FileError> {
    parse_formula_text(&read_text(path)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonFile {
    states: Vec<String>,
    alphabet: Vec<String>,
    init: String,
    #[serde(default)]
    accepting: Vec<String>,
    delta: Vec<(String, String, String, Value)>,
}

pub fn parse_automaton(text: &str) -> Result<ProbAutomaton, FileError> {
    const WHAT: &str = "automaton file";
    let f: AutomatonFile = json(WHAT, text)?;
    let delta = f.delta.iter().map(|(q, c, q2, p)| Ok((q.clone(), c.clone(), q2.clone(), prob(WHAT, p)?))).collect::<Result<_, _>>()?;
    ProbAutomaton::new(f.states, f.alphabet, &f.init, f.accepting, delta).map_err(|e| FileError::Format { what: WHAT, msg: e.to_string() })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    params: Vec<String>,
    left: String,
    p: Value,
    right: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhorsFile {
    nonterminals: BTreeMap<String, usize>,
    rules: BTreeMap<String, RuleFile>,
    start: String,
}

pub fn parse_phors(text: &str) -> Result<Phors, FileError> {
    const WHAT: &str = "recursion scheme file";
    let f: PhorsFile = json(WHAT, text)?;
    let err = |e: phfl_core::reductions::ReductionError| FileError::Format { what: WHAT, msg: e.to_string() };
    let mut rules = BTreeMap::new();
    for (x, r) in f.rules {
        let rule = PhorsRule {
            left: parse_pterm(&r.left, &r.params).map_err(err)?,
            right: parse_pterm(&r.right, &r.params).map_err(err)?,
            p: prob(WHAT, &r.p)?,
            params: r.params,
        };
        rules.insert(x, rule);
    }
    let start = parse_pterm(&f.start, &[]).map_err(err)?;
    Phors::new(f.nonterminals, rules, start).map_err(err)
}
