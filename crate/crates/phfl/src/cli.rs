//! The `phfl` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use phfl_core::affine::{interpret_affine, AffineConfig, AffineError, Gamma, RepValue};
use phfl_core::eval::{check_models, eval_bounded, eval_order0, EvalConfig, EvalError, QuantVec, Values};
use phfl_core::formula::{order_of, parse_type_annot, simple_typecheck, Formula, SimpleType, TypeEnv};
use phfl_core::markov::MarkovChain;
use phfl_core::rational::Rational;
use phfl_core::reductions::{parse_muarith, reduce_muarith, reduce_phors, reduce_value1, Instance};
use phfl_core::refined::{
    check_mup_embedding, check_refined_with, infer_refined_with, RefineConfig, RefinedDerivation, RefinedEnv, RefinedType,
};
use phfl_core::smt::{build_model_check_query, build_mu_only_query, emit_smtlib, SatMeaning, SmtError, SolverQuery};

use crate::files::{chain_to_json, load_chain, load_formula, parse_automaton, parse_phors, read_text, write_text, FileError};
use crate::solver::{run_solver, SolverAnswer, SolverConfig, SolverError};
use crate::verdict::{Status, Verdict};

#[derive(Parser, Debug)]
#[command(name = "phfl", version, about = "Model checking probabilistic higher-order fixpoint logic over finite Markov chains")]
pub struct Cli {
    /// Print the machine-readable verdict.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Order0,
    Bounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fragment {
    Full,
    MuOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReduceKind {
    /// Probabilistic automaton (value-1 problem).
    Pa,
    /// Higher-order fixpoint arithmetic.
    Mu,
    /// Order-1 probabilistic recursion scheme (termination probability).
    Phors,
}

#[derive(clap::Args, Debug, Clone)]
pub struct TypingArgs {
    /// Expected refined type, e.g. `{s0;} -> {;s1}`.
    #[arg(long = "type", value_name = "TYPE")]
    pub ty: Option<String>,
    /// Allow one nested use of the unfolding rule.
    #[arg(long)]
    pub allow_unfold: bool,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Parse and simply typecheck a formula.
    Check { chain: PathBuf, formula: PathBuf },
    /// Refined typing: check against `--type` or infer.
    Rtype {
        chain: PathBuf,
        formula: PathBuf,
        #[command(flatten)]
        typing: TypingArgs,
        /// Use the order-0 embedding rules.
        #[arg(long)]
        mup: bool,
        /// Depth of the printed derivation tree.
        #[arg(long, default_value_t = 4)]
        tree_depth: usize,
    },
    /// Evaluate a closed formula of type `*`.
    Eval {
        chain: PathBuf,
        formula: PathBuf,
        /// Defaults to order0 for order-0 formulas and bounded otherwise.
        #[arg(long, value_enum)]
        mode: Option<EvalMode>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Bounded evaluation in floating point instead of rationals.
        #[arg(long)]
        float: bool,
        /// Also decide whether the formula holds at the initial state.
        #[arg(long)]
        models: bool,
    },
    /// Refined-typecheck and compute the affine representation.
    Solve {
        chain: PathBuf,
        formula: PathBuf,
        #[command(flatten)]
        typing: TypingArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
    },
    /// Write the real-arithmetic query for `M |= φ` as SMT-LIB.
    EmitSmt {
        chain: PathBuf,
        formula: PathBuf,
        #[command(flatten)]
        typing: TypingArgs,
        #[arg(long, value_enum, default_value = "full")]
        fragment: Fragment,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the solver on the script and report the verdict.
        #[arg(long)]
        run: bool,
        /// Solver executable (default: $PHFL_SMT_SOLVER, then `z3`).
        #[arg(long)]
        solver: Option<PathBuf>,
        /// Solver timeout in seconds (default: $PHFL_SMT_TIMEOUT_SECS, then 60).
        #[arg(long)]
        timeout: Option<u64>,
    },
    /// Translate a source problem into a chain and a formula.
    Reduce {
        #[arg(value_enum)]
        kind: ReduceKind,
        input: PathBuf,
        #[arg(long)]
        out_chain: Option<PathBuf>,
        #[arg(long)]
        out_formula: Option<PathBuf>,
    },
}

/// Output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output { code: 2, stdout: String::new(), stderr: text }
            } else {
                Output { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let echo = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" ");
    let (v, raw) = execute(&cli.cmd, Verdict::new(echo), cli.json);
    let code = v.status.exit_code();
    let stderr = if cli.json { String::new() } else { v.diagnostics.iter().map(|d| format!("{}: {d}\n", label(v.status))).collect() };
    let stdout = match (cli.json, raw) {
        (true, _) => v.to_json(),
        (false, Some(raw)) if v.status == Status::Ok => raw,
        (false, _) => v.to_text(),
    };
    Output { code, stdout, stderr }
}

fn label(s: Status) -> &'static str {
    match s {
        Status::Ok => "note",
        Status::Failure => "failure",
        Status::Error => "error",
        Status::Resource => "resource limit",
    }
}

/// Early exits carry the status they map to.
struct Fail(Status, String);

impl From<FileError> for Fail {
    fn from(e: FileError) -> Self {
        Fail(Status::Error, e.to_string())
    }
}

impl From<AffineError> for Fail {
    fn from(e: AffineError) -> Self {
        let s = if matches!(e, AffineError::IterationCap { .. }) { Status::Resource } else { Status::Failure };
        Fail(s, e.to_string())
    }
}

impl From<EvalError> for Fail {
    fn from(e: EvalError) -> Self {
        let s = if matches!(e, EvalError::IterationCap { .. }) { Status::Resource } else { Status::Failure };
        Fail(s, e.to_string())
    }
}

impl From<SmtError> for Fail {
    fn from(e: SmtError) -> Self {
        let s = if matches!(e, SmtError::TooLarge(_)) { Status::Resource } else { Status::Failure };
        Fail(s, e.to_string())
    }
}

impl From<SolverError> for Fail {
    fn from(e: SolverError) -> Self {
        let s = match e {
            SolverError::Timeout(_) => Status::Resource,
            SolverError::Output(_) => Status::Failure,
            _ => Status::Error,
        };
        Fail(s, e.to_string())
    }
}

/// Returns the verdict and, for commands whose plain output is a file body, that body.
fn execute(cmd: &Cmd, mut v: Verdict, json: bool) -> (Verdict, Option<String>) {
    let r = match cmd {
        Cmd::Check { chain, formula } => cmd_check(&mut v, chain, formula).map(|_| None),
        Cmd::Rtype { chain, formula, typing, mup, tree_depth } => cmd_rtype(&mut v, chain, formula, typing, *mup, *tree_depth).map(|_| None),
        Cmd::Eval { chain, formula, mode, tol, depth, max_iter, float, models } => {
            let cfg = EvalConfig { tol: *tol, max_iter: *max_iter, depth: *depth, ..EvalConfig::default() };
            cmd_eval(&mut v, chain, formula, *mode, &cfg, *float, *models).map(|_| None)
        }
        Cmd::Solve { chain, formula, typing, tol, max_iter } => {
            let cfg = AffineConfig { tol: *tol, max_iter: *max_iter, ..AffineConfig::default() };
            cmd_solve(&mut v, chain, formula, typing, &cfg).map(|_| None)
        }
        Cmd::EmitSmt { chain, formula, typing, fragment, out, run, solver, timeout } => {
            cmd_emit_smt(&mut v, chain, formula, typing, *fragment, out.as_deref(), *run, solver.clone(), *timeout, json)
        }
        Cmd::Reduce { kind, input, out_chain, out_formula } => cmd_reduce(&mut v, *kind, input, out_chain.as_deref(), out_formula.as_deref()).map(|_| None),
    };
    match r {
        Ok(raw) => (v, raw),
        Err(Fail(s, msg)) => (v.fail(s, msg), None),
    }
}

fn load(chain: &Path, formula: &Path) -> Result<(MarkovChain, Formula), Fail> {
    Ok((load_chain(chain)?, load_formula(formula)?))
}

/// Simple type of a closed formula, with its atoms checked against the chain.
fn typecheck(m: &MarkovChain, phi: &Formula) -> Result<(SimpleType, usize), Fail> {
    let ty = simple_typecheck(&TypeEnv::new(), phi).map_err(|e| Fail(Status::Failure, format!("type error: {e}")))?;
    let order = order_of(phi, &TypeEnv::new()).map_err(|e| Fail(Status::Failure, format!("type error: {e}")))?;
    if let Some(a) = phi.atoms().into_iter().find(|a| m.label(a).is_none()) {
        return Err(Fail(Status::Failure, format!("atom `{a}` is not labeled in the chain")));
    }
    Ok((ty, order))
}

fn state_map(m: &MarkovChain, f: impl Fn(usize) -> String) -> Value {
    Value::Object((0..m.len()).map(|i| (m.state_name(i).to_string(), Value::String(f(i)))).collect::<Map<_, _>>())
}

fn cmd_check(v: &mut Verdict, chain: &Path, formula: &Path) -> Result<(), Fail> {
    let (m, phi) = load(chain, formula)?;
    let (ty, order) = typecheck(&m, &phi)?;
    v.summary = Some(format!("type: {ty}, order: {order}"));
    v.brief = true;
    v.set("type", ty.to_string()).set("order", order);
    Ok(())
}

fn derive(m: &MarkovChain, phi: &Formula, typing: &TypingArgs) -> Result<RefinedDerivation, Fail> {
    let cfg = RefineConfig { unfold_budget: usize::from(typing.allow_unfold) };
    let env = RefinedEnv::default();
    let r = match &typing.ty {
        Some(text) => {
            let kappa = expected_type(m, text)?;
            check_refined_with(m, &env, phi, &kappa, cfg)
        }
        None => infer_refined_with(m, &env, phi, cfg).map(|(_, d)| d),
    };
    r.map_err(|e| Fail(Status::Failure, format!("refined typing: {e}")))
}

fn expected_type(m: &MarkovChain, text: &str) -> Result<RefinedType, Fail> {
    let (_, annot) = parse_type_annot(text).map_err(|e| Fail(Status::Error, format!("invalid --type: {e}")))?;
    let annot = annot.ok_or_else(|| Fail(Status::Error, format!("--type `{text}` is not a refined type")))?;
    RefinedType::from_annot(m, &annot).map_err(|e| Fail(Status::Error, format!("invalid --type: {e}")))
}

fn derivation_summary(v: &mut Verdict, m: &MarkovChain, d: &RefinedDerivation, tree_depth: usize) {
    let counts: Vec<String> = d.rule_counts().into_iter().map(|(r, n)| format!("{r} x{n}")).collect();
    v.set("type", d.ty.display(m)).set("rules", counts.join(", ")).set("derivation", d.render(m, tree_depth).trim_end().to_string());
}

fn cmd_rtype(v: &mut Verdict, chain: &Path, formula: &Path, typing: &TypingArgs, mup: bool, tree_depth: usize) -> Result<(), Fail> {
    let (m, phi) = load(chain, formula)?;
    typecheck(&m, &phi)?;
    let d = if mup {
        check_mup_embedding(&m, &phi).map_err(|e| Fail(Status::Failure, format!("refined typing: {e}")))?
    } else {
        derive(&m, &phi, typing)?
    };
    v.summary = Some(format!("accepted at {}", d.ty.display(&m)));
    derivation_summary(v, &m, &d, tree_depth);
    Ok(())
}

fn set_values(v: &mut Verdict, m: &MarkovChain, vals: &Values) {
    v.set("values", state_map(m, |i| vals.component(i)));
    v.set("at_init", vals.component(m.init()));
}

fn cmd_eval(
    v: &mut Verdict,
    chain: &Path,
    formula: &Path,
    mode: Option<EvalMode>,
    cfg: &EvalConfig,
    float: bool,
    models: bool,
) -> Result<(), Fail> {
    let (m, phi) = load(chain, formula)?;
    let (ty, order) = typecheck(&m, &phi)?;
    if ty != SimpleType::Prop {
        return Err(Fail(Status::Failure, format!("formula has type {ty}, expected *")));
    }
    match mode.unwrap_or(if order == 0 { EvalMode::Order0 } else { EvalMode::Bounded }) {
        EvalMode::Order0 => {
            let out = eval_order0(&m, &phi, cfg)?;
            set_values(v, &m, &out.values);
            v.mode = Some(if out.exact { String::from("exact") } else { format!("iterative(tol={:e})", cfg.tol) });
            if !out.boundary.is_empty() {
                v.set("boundary", out.boundary.clone());
            }
            v.set("iterations", out.iterations);
            v.diagnostics.extend(out.precision_note);
        }
        EvalMode::Bounded => {
            let (vals, heuristic) = if float {
                let o = eval_bounded::<f64>(&m, &phi, cfg)?;
                (Values::Float(o.values.0), o.heuristic)
            } else {
                let o = eval_bounded::<Rational>(&m, &phi, cfg)?;
                let QuantVec(x) = o.values;
                (Values::Exact(x), o.heuristic)
            };
            set_values(v, &m, &vals);
            v.mode = Some(format!("bounded(depth={})", cfg.depth));
            if heuristic {
                v.diagnostics.push(String::from("mu and nu are nested: bounded values are a heuristic approximation"));
            }
        }
    }
    if models {
        let c = check_models(&m, &phi, cfg)?;
        v.summary = Some(format!("{} at {} (by {})", c.verdict, m.state_name(m.init()), c.method));
        v.set("verdict", c.verdict.to_string()).set("verdict_method", c.method);
    }
    Ok(())
}

fn threshold_verdict(phi: &Formula, value_at_init: &str) -> Option<&'static str> {
    matches!(phi, Formula::Threshold(..)).then_some(if value_at_init == "1" { "holds" } else { "fails" })
}

fn cmd_solve(v: &mut Verdict, chain: &Path, formula: &Path, typing: &TypingArgs, cfg: &AffineConfig) -> Result<(), Fail> {
    let (m, phi) = load(chain, formula)?;
    typecheck(&m, &phi)?;
    let d = derive(&m, &phi, typing)?;
    let start = Instant::now();
    let out = interpret_affine(&m, &d, &Gamma::new(), cfg)?;
    v.set("type", d.ty.display(&m));
    if !out.fixpoints.is_empty() {
        let fx: Map<String, Value> = out.fixpoints.iter().map(|(x, r)| (x.clone(), Value::String(r.rows_text()))).collect();
        v.set("fixpoints", Value::Object(fx));
    }
    v.set("rows", out.rep.rows_text());
    if d.ty.is_prop() {
        let at = out.rep.constant_text(m.init());
        v.set("values", state_map(&m, |i| out.rep.constant_text(i)));
        v.set("at_init", at.clone());
        if let Some(h) = threshold_verdict(&phi, &at) {
            v.summary = Some(format!("{h} at {}", m.state_name(m.init())));
            v.set("verdict", h);
        }
    }
    v.mode = Some(match &out.rep {
        RepValue::Exact(_) => String::from("exact"),
        RepValue::Approx(_) => format!("iterative(tol={:e})", cfg.tol),
    });
    v.set("elapsed_ms", start.elapsed().as_millis() as u64);
    Ok(())
}

pub fn build_query(m: &MarkovChain, d: &RefinedDerivation, fragment: Fragment) -> Result<SolverQuery, SmtError> {
    match fragment {
        Fragment::Full => build_model_check_query(m, d),
        Fragment::MuOnly => build_mu_only_query(m, d),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_emit_smt(
    v: &mut Verdict,
    chain: &Path,
    formula: &Path,
    typing: &TypingArgs,
    fragment: Fragment,
    out: Option<&Path>,
    run: bool,
    solver: Option<PathBuf>,
    timeout: Option<u64>,
    json: bool,
) -> Result<Option<String>, Fail> {
    let (m, phi) = load(chain, formula)?;
    typecheck(&m, &phi)?;
    let d = derive(&m, &phi, typing)?;
    if !d.ty.is_prop() {
        return Err(Fail(Status::Failure, format!("formula has refined type {}, expected a proposition", d.ty.display(&m))));
    }
    let q = build_query(&m, &d, fragment)?;
    let script = emit_smtlib(&q);
    v.set("logic", q.logic.name()).set("variables", q.declared.len()).set("forall", q.count_forall());
    v.set("sat_means", match q.sat_means {
        SatMeaning::Holds => "holds",
        SatMeaning::Fails => "fails",
    });
    if let Some(p) = out {
        write_text(p, &script)?;
        v.set("script_file", p.display().to_string());
    } else if json {
        v.set("script", script.clone());
    }
    if run {
        let cfg = SolverConfig::resolve(solver, timeout)?;
        let start = Instant::now();
        let (answer, _) = run_solver(&script, &cfg)?;
        v.set("solver_ms", start.elapsed().as_millis() as u64);
        v.mode = Some(String::from("smt"));
        let sat = match answer {
            SolverAnswer::Sat => true,
            SolverAnswer::Unsat => false,
            SolverAnswer::Unknown(why) => return Err(Fail(Status::Resource, format!("solver answered {why}"))),
        };
        let holds = q.verdict(sat);
        v.set("solver", if sat { "sat" } else { "unsat" });
        v.set("verdict", if holds { "holds" } else { "fails" });
        v.summary = Some(format!("{} at {}", if holds { "holds" } else { "fails" }, m.state_name(m.init())));
        return Ok(None);
    }
    Ok(if out.is_none() { Some(script) } else { None })
}

fn cmd_reduce(v: &mut Verdict, kind: ReduceKind, input: &Path, out_chain: Option<&Path>, out_formula: Option<&Path>) -> Result<(), Fail> {
    let text = read_text(input)?;
    let bad = |e: phfl_core::reductions::ReductionError| Fail(Status::Failure, e.to_string());
    let inst: Instance = match kind {
        ReduceKind::Pa => reduce_value1(&parse_automaton(&text)?).map_err(bad)?,
        ReduceKind::Mu => {
            let f = parse_muarith(&text).map_err(|e| Fail(Status::Error, format!("invalid arithmetic formula: {e}")))?;
            reduce_muarith(&f).map_err(bad)?
        }
        ReduceKind::Phors => reduce_phors(&parse_phors(&text)?).map_err(bad)?,
    };
    let chain_text = chain_to_json(&inst.chain);
    let formula_text = format!("{}\n", inst.formula);
    v.set("fragment", inst.fragment.name()).set("states", inst.chain.len()).set("formula_size", inst.formula.size());
    match out_chain {
        Some(p) => {
            write_text(p, &chain_text)?;
            v.set("chain_file", p.display().to_string());
        }
        None => {
            v.set("chain", serde_json::from_str::<Value>(&chain_text).expect("own output is JSON"));
        }
    }
    match out_formula {
        Some(p) => {
            write_text(p, &formula_text)?;
            v.set("formula_file", p.display().to_string());
        }
        None => {
            v.set("formula", formula_text.trim_end().to_string());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flags_are_format_errors() {
        let out = run(["phfl", "eval", "--bogus"]);
        assert_eq!(out.code, 2);
        assert!(out.stdout.is_empty());
        let out = run(["phfl", "--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("emit-smt"));
    }

    #[test]
    fn missing_files_exit_two() {
        let out = run(["phfl", "check", "/nonexistent/c.json", "/nonexistent/f.phfl"]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("cannot access"), "{}", out.stderr);
    }

    #[test]
    fn threshold_verdicts() {
        let phi = phfl_core::formula::parse_formula("[p]>=1/2").unwrap();
        assert_eq!(threshold_verdict(&phi, "1"), Some("holds"));
        assert_eq!(threshold_verdict(&phi, "0"), Some("fails"));
        assert_eq!(threshold_verdict(&phfl_core::formula::parse_formula("p").unwrap(), "1"), None);
        assert_eq!(phfl_core::affine::format_float(0.5), "0.5");
    }
}
