//! The `heterotest` command line.
//!
//! Exit codes: 0 success, 1 validation or design-for-test failure,
//! 2 generation failure, 3 I/O, parse or usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::csxms::{
    build_product_sxm, check_component_dft, extend_for_testing, generate_csxms_test_suite,
    validate_system, CsxmError, CsxmSystem,
};
use crate::dft::{check_dft, DftReport};
use crate::heterotic::{
    generate_integration_tests, run_heterotic, serve_oracle, HeteroticError, HeteroticFile,
    HeteroticSystem, Oracle, ProcessOracle,
};
use crate::mutation::{
    mutate_model, mutation_score, Model, MutantSet, MutationError, Operator, ScoreTarget, Verdict,
};
use crate::psystem::{
    generate_coverage_test_set, psystem_run, rule_coverage, validate_psystem, ComputationTrace,
    CoverageTestSet, PSystem, PsError, RunMode,
};
use crate::suite::{
    generate_sxm_test_suite, SuiteError, TestSuite, DEFAULT_BRANCH_BOUND, SCHEMA_VERSION,
};
use crate::sxm::{symbols, validate_sxm, Sxm, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Sxm,
    System,
    Psystem,
    Heterotic,
}

#[derive(Debug, Parser)]
#[command(
    name = "heterotest",
    version,
    about = "Model checking and test generation for heterotic systems"
)]
pub struct Cli {
    /// Output rendering; `validate` and `simulate` default to text, the
    /// rest to JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the artifact here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model for well-formedness (and, with --dft, the
    /// design-for-test conditions).
    Validate {
        #[arg(long)]
        dft: bool,
        model: PathBuf,
    },
    /// Run a P system, an SXM or a heterotic system.
    Simulate {
        /// P systems: number of maximally parallel steps.
        #[arg(long)]
        depth: Option<usize>,
        /// P systems: follow every branch (the default without a seed).
        #[arg(long)]
        all_branches: bool,
        #[arg(long, env = "HETEROTEST_SEED")]
        seed: Option<u64>,
        /// SXMs: whitespace-separated input symbols.
        #[arg(long)]
        input: Option<String>,
        /// Heterotic systems: number of rounds.
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        /// Heterotic systems: command line of an external Base executor.
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long, default_value_t = 5000)]
        timeout_ms: u64,
        #[arg(long, default_value_t = 0)]
        retries: u32,
        model: PathBuf,
    },
    /// Generate a test suite (SXM, system, heterotic) or a coverage test
    /// set (P system).
    GenTests {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        extra_states: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, env = "HETEROTEST_SEED")]
        seed: Option<u64>,
        model: PathBuf,
    },
    /// Print the product machine of a communicating or heterotic system.
    Product {
        #[arg(long, env = "HETEROTEST_SEED")]
        seed: Option<u64>,
        model: PathBuf,
    },
    /// Rule coverage of a P system's computations.
    #[command(group(ArgGroup::new("source").required(true).args(["depth", "traces"])))]
    Coverage {
        #[arg(long)]
        depth: Option<usize>,
        /// A `simulate` JSON artifact whose traces are checked and scored.
        #[arg(long)]
        traces: Option<PathBuf>,
        model: PathBuf,
    },
    /// Seed faults into a model.
    Mutate {
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
        #[arg(long, env = "HETEROTEST_SEED", default_value_t = 0)]
        seed: u64,
        /// Upper bound on the number of mutants (all by default).
        #[arg(long)]
        count: Option<usize>,
        model: PathBuf,
    },
    /// Score a mutant set against a suite or a coverage set.
    #[command(group(ArgGroup::new("target").required(true).args(["suite", "coverage"])))]
    Score {
        #[arg(long)]
        mutants: PathBuf,
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        coverage: Option<PathBuf>,
        /// Input length (P systems: depth) of the comparison that separates
        /// survivors from possibly equivalent mutants.
        #[arg(long, default_value_t = crate::mutation::DEFAULT_EQUIVALENCE_BOUND)]
        bound: usize,
        spec: PathBuf,
    },
    /// Serve the oracle line protocol on stdin/stdout with the built-in
    /// simulator.
    OracleSim {
        #[arg(long, env = "HETEROTEST_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        depth_cap: usize,
        model: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Generation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Generation(_) => 2,
            CliError::Io(_) | CliError::Parse(_) | CliError::Usage(_) => 3,
        }
    }
}

impl From<HeteroticError> for CliError {
    fn from(e: HeteroticError) -> Self {
        let msg = e.to_string();
        match e {
            HeteroticError::Io(_) => CliError::Io(msg),
            HeteroticError::Parse(_) => CliError::Parse(msg),
            HeteroticError::InvalidPSystem(_)
            | HeteroticError::Invalid(_)
            | HeteroticError::PortIncompatibility(_)
            | HeteroticError::InvalidExchange(_)
            | HeteroticError::OracleInvalidResult(_) => CliError::Invalid(msg),
            HeteroticError::Csxms(c) => c.into(),
            HeteroticError::PSystem(p) => p.into(),
            _ => CliError::Generation(msg),
        }
    }
}

impl From<CsxmError> for CliError {
    fn from(e: CsxmError) -> Self {
        let msg = e.to_string();
        match e {
            CsxmError::Invalid(_)
            | CsxmError::DftFailure { .. }
            | CsxmError::AlphabetCollision { .. } => CliError::Invalid(msg),
            CsxmError::Suite(s) => s.into(),
            _ => CliError::Generation(msg),
        }
    }
}

impl From<SuiteError> for CliError {
    fn from(e: SuiteError) -> Self {
        let msg = e.to_string();
        match e {
            SuiteError::DftFailure(_) | SuiteError::NondeterministicAutomaton(_) => {
                CliError::Invalid(msg)
            }
            _ => CliError::Generation(msg),
        }
    }
}

impl From<PsError> for CliError {
    fn from(e: PsError) -> Self {
        let msg = e.to_string();
        match e {
            PsError::InvalidConfiguration(_) | PsError::TraceReplayMismatch { .. } => {
                CliError::Invalid(msg)
            }
            _ => CliError::Generation(msg),
        }
    }
}

impl From<MutationError> for CliError {
    fn from(e: MutationError) -> Self {
        let msg = e.to_string();
        match e {
            MutationError::ZeroCount
            | MutationError::UnknownOperator(_)
            | MutationError::TargetMismatch(_) => CliError::Usage(msg),
            MutationError::PSystem(p) => p.into(),
            MutationError::Csxms(c) => c.into(),
            _ => CliError::Generation(msg),
        }
    }
}

/// A model file, recognised by its top-level keys.
enum Loaded {
    PSystem(PSystem),
    Sxm(Sxm),
    System(CsxmSystem),
    Heterotic(HeteroticFile, PathBuf),
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(
    path: &Path,
    json: serde_json::Value,
) -> Result<T, CliError> {
    serde_json::from_value(json).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let json: serde_json::Value = read_json(path)?;
    let has = |k: &str| json.get(k).is_some();
    Ok(if has("structure") {
        Loaded::PSystem(parse(path, json)?)
    } else if has("components") {
        Loaded::System(parse(path, json)?)
    } else if has("psystem") && has("control") {
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Loaded::Heterotic(parse(path, json)?, dir)
    } else {
        Loaded::Sxm(parse(path, json)?)
    })
}

fn heterotic(
    file: &HeteroticFile,
    dir: &Path,
    seed: Option<u64>,
) -> Result<HeteroticSystem, CliError> {
    Ok(file.build(dir, seed)?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    schema: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: T,
}

fn artifact<T: Serialize>(kind: &str, body: T) -> String {
    to_json(&Artifact {
        schema: SCHEMA_VERSION,
        kind,
        body,
    })
}

/// What a command produced: the rendered artifact and its exit code.
struct Outcome {
    text: String,
    code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: 0 }
    }
}

fn render_report(out: &mut String, r: &ValidationReport) {
    if r.is_valid() {
        out.push_str("valid\n");
    }
    let line = |out: &mut String, label: &str, v: &crate::sxm::Violation| {
        let kind = serde_json::to_value(v.kind)
            .ok()
            .and_then(|k| k.as_str().map(String::from))
            .unwrap_or_default();
        let _ = writeln!(out, "{label} {kind} at {}: {}", v.location, v.message);
    };
    for v in &r.violations {
        line(out, "violation", v);
    }
    for n in &r.notes {
        line(out, "note", n);
    }
}

fn render_dft(out: &mut String, prefix: &str, r: &DftReport) {
    let _ = writeln!(out, "{prefix}design-for-test: {}", r.verdict());
    let d = &r.deterministic;
    if let Some(w) = &d.automaton {
        let _ = writeln!(
            out,
            "{prefix}  nondeterministic automaton: {}",
            serde_json::to_string(w).unwrap_or_default()
        );
    }
    if let Some(w) = &d.counterexample {
        let _ = writeln!(
            out,
            "{prefix}  determinism: {} and {} both apply in state {} at memory {} on input {}",
            w.phi1, w.phi2, w.state, w.memory, w.input
        );
    }
    if let Some(w) = &d.multi_valued {
        let _ = writeln!(
            out,
            "{prefix}  determinism: {} has {} results at memory {} on input {}",
            w.function,
            w.results.len(),
            w.memory,
            w.input
        );
    }
    for f in r.complete.functions.iter().filter(|f| !f.pass) {
        if let Some(m) = &f.counterexample {
            let _ = writeln!(
                out,
                "{prefix}  completeness: {} is undefined at memory {m} for every input",
                f.function
            );
        }
    }
    if let Some(w) = &r.output_distinguishable.counterexample {
        let _ = writeln!(
            out,
            "{prefix}  distinguishability: {} and {} both output {} at memory {} on input {}",
            w.phi1, w.phi2, w.output, w.m, w.input
        );
    }
}

fn format_or(format: Option<Format>, default: Format) -> Format {
    format.unwrap_or(default)
}

fn cmd_validate(format: Option<Format>, dft: bool, model: &Path) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Text);
    let mut text = String::new();
    let (report, dft_reports): (ValidationReport, Vec<DftReport>) = match load(model)? {
        Loaded::PSystem(p) => (validate_psystem(&p), Vec::new()),
        Loaded::Sxm(m) => {
            let r = validate_sxm(&m);
            let d = if dft && r.is_valid() {
                vec![check_dft(&m).map_err(|e| CliError::Invalid(e.to_string()))?]
            } else {
                Vec::new()
            };
            (r, d)
        }
        Loaded::System(s) => {
            let r = validate_system(&s);
            let d = if dft && r.is_valid() {
                check_component_dft(&s)?
            } else {
                Vec::new()
            };
            (r, d)
        }
        Loaded::Heterotic(f, dir) => {
            let h = match heterotic(&f, &dir, None) {
                Ok(h) => h,
                Err(CliError::Invalid(msg)) => {
                    let mut r = ValidationReport::default();
                    r.push(crate::sxm::ViolationKind::Structure, "system", msg);
                    return finish_validate(format, r, Vec::new(), dft);
                }
                Err(e) => return Err(e),
            };
            let d = if dft {
                check_component_dft(&h.as_system)?
            } else {
                Vec::new()
            };
            (validate_system(&h.as_system), d)
        }
    };
    text.clear();
    finish_validate(format, report, dft_reports, dft)
}

fn finish_validate(
    format: Format,
    report: ValidationReport,
    dft: Vec<DftReport>,
    asked: bool,
) -> Result<Outcome, CliError> {
    let failed = !report.is_valid() || dft.iter().any(|d| !d.all_pass());
    let text = match format {
        Format::Json => artifact(
            "validation",
            json!({
                "valid": report.is_valid(),
                "violations": report.violations,
                "notes": report.notes,
                "dft": if asked { Some(&dft) } else { None },
            }),
        ),
        Format::Text => {
            let mut out = String::new();
            render_report(&mut out, &report);
            for (i, d) in dft.iter().enumerate() {
                let prefix = if dft.len() > 1 {
                    format!("component {}: ", i + 1)
                } else {
                    String::new()
                };
                render_dft(&mut out, &prefix, d);
            }
            out
        }
    };
    Ok(Outcome {
        text,
        code: if failed { 1 } else { 0 },
    })
}

fn render_traces(traces: &[ComputationTrace]) -> String {
    traces.iter().map(|t| format!("{t}\n")).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    format: Option<Format>,
    depth: Option<usize>,
    all_branches: bool,
    seed: Option<u64>,
    input: Option<&str>,
    rounds: usize,
    oracle: Option<&str>,
    timeout_ms: u64,
    retries: u32,
    model: &Path,
) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Text);
    if oracle.is_some_and(|o| o.split_whitespace().next().is_none()) {
        return Err(CliError::Usage("--oracle needs a command".into()));
    }
    match load(model)? {
        Loaded::PSystem(ps) => {
            let depth = depth
                .ok_or_else(|| CliError::Usage("simulate on a P system needs --depth".into()))?;
            let report = validate_psystem(&ps);
            if !report.is_valid() {
                let mut out = String::new();
                render_report(&mut out, &report);
                return Ok(Outcome { text: out, code: 1 });
            }
            let mode = match (all_branches, seed) {
                (false, Some(s)) => RunMode::Seeded(s),
                _ => RunMode::AllBranches,
            };
            let (traces, truncated) = match psystem_run(&ps, depth, mode) {
                Ok(t) => (t, false),
                Err(PsError::BranchExplosion { partial, .. }) => (partial, true),
                Err(e) => return Err(e.into()),
            };
            let text = match format {
                Format::Text => {
                    let mut s = render_traces(&traces);
                    if truncated {
                        s.push_str("truncated: branch limit reached\n");
                    }
                    s
                }
                Format::Json => artifact(
                    "psystem-traces",
                    json!({
                        "depth": depth,
                        "mode": if matches!(mode, RunMode::AllBranches) { "all-branches" } else { "seeded" },
                        "seed": match mode { RunMode::Seeded(s) => Some(s), RunMode::AllBranches => None },
                        "truncated": truncated,
                        "traces": traces,
                    }),
                ),
            };
            Ok(Outcome {
                text,
                code: if truncated { 2 } else { 0 },
            })
        }
        Loaded::Sxm(m) => {
            let input = symbols(input.unwrap_or(""));
            let outputs = m
                .outputs(&input, DEFAULT_BRANCH_BOUND)
                .map_err(|e| CliError::Generation(e.to_string()))?;
            let text = match format {
                Format::Text if outputs.is_empty() => "rejected\n".to_string(),
                Format::Text => outputs
                    .iter()
                    .map(|o| format!("{}\n", o.join(" ")))
                    .collect(),
                Format::Json => artifact("sxm-run", json!({ "input": input, "outputs": outputs })),
            };
            Ok(Outcome::ok(text))
        }
        Loaded::Heterotic(f, dir) => {
            let h = heterotic(&f, &dir, seed)?;
            let mut process = oracle.map(|cmd| {
                let mut parts = cmd.split_whitespace().map(String::from);
                let program = parts.next().expect("checked above");
                ProcessOracle::new(program, parts.collect())
                    .with_timeout(Duration::from_millis(timeout_ms))
                    .with_retries(retries)
            });
            let trace = run_heterotic(&h, rounds, process.as_mut().map(|p| p as &mut dyn Oracle))?;
            let text = match format {
                Format::Text => trace.to_string(),
                Format::Json => to_json(&trace),
            };
            Ok(Outcome::ok(text))
        }
        Loaded::System(_) => Err(CliError::Usage(
            "simulate does not run communicating systems; use product".into(),
        )),
    }
}

fn render_suite(suite: &TestSuite) -> String {
    let mut out = String::new();
    for c in &suite.cases {
        let input = if c.input.is_empty() {
            "ε".to_string()
        } else {
            c.input.join(" ")
        };
        let expected: Vec<String> = c.expected_outputs.iter().map(|o| o.join(" ")).collect();
        let shown = if expected.is_empty() {
            "rejected".to_string()
        } else {
            expected.join(" | ")
        };
        let _ = writeln!(out, "{input} ⇒ {shown}");
    }
    for w in &suite.metadata.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn render_coverage_set(set: &CoverageTestSet) -> String {
    let mut out = String::new();
    for c in &set.configurations {
        let _ = writeln!(out, "{c}");
    }
    for r in &set.rules {
        match &r.configuration {
            Some(c) => {
                let _ = writeln!(out, "{}: {c}", r.rule);
            }
            None => {
                let _ = writeln!(out, "{}: not covered within depth {}", r.rule, set.depth);
            }
        }
    }
    out
}

fn suite_output(format: Format, suite: &TestSuite) -> String {
    match format {
        Format::Json => to_json(suite),
        Format::Text => render_suite(suite),
    }
}

fn cmd_gen_tests(
    format: Option<Format>,
    kind: GenKind,
    extra_states: Option<usize>,
    depth: Option<usize>,
    seed: Option<u64>,
    model: &Path,
) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Json);
    match (kind, depth, extra_states) {
        (GenKind::Psystem, None, _) => {
            return Err(CliError::Usage("gen-tests psystem needs --depth".into()))
        }
        (GenKind::Psystem, _, Some(_)) => {
            return Err(CliError::Usage(
                "--extra-states does not apply to P systems".into(),
            ))
        }
        (k, Some(_), _) if k != GenKind::Psystem => {
            return Err(CliError::Usage("--depth applies to P systems only".into()))
        }
        _ => {}
    }
    let k = extra_states.unwrap_or(0);
    let wrong = |what: &str| CliError::Usage(format!("{} is not {what}", model.display()));
    let loaded = load(model)?;
    let text = match (kind, loaded) {
        (GenKind::Sxm, Loaded::Sxm(m)) => {
            let report = validate_sxm(&m);
            if !report.is_valid() {
                let mut out = String::new();
                render_report(&mut out, &report);
                return Ok(Outcome { text: out, code: 1 });
            }
            suite_output(format, &generate_sxm_test_suite(&m, k)?)
        }
        (GenKind::System, Loaded::System(s)) => {
            suite_output(format, &generate_csxms_test_suite(&s, k)?.0)
        }
        (GenKind::Heterotic, Loaded::Heterotic(f, dir)) => {
            let h = heterotic(&f, &dir, seed)?;
            suite_output(format, &generate_integration_tests(&h, k)?.0)
        }
        (GenKind::Psystem, Loaded::PSystem(ps)) => {
            let report = validate_psystem(&ps);
            if !report.is_valid() {
                let mut out = String::new();
                render_report(&mut out, &report);
                return Ok(Outcome { text: out, code: 1 });
            }
            let set = generate_coverage_test_set(&ps, depth.expect("checked above"))?;
            match format {
                Format::Json => artifact("coverage-test-set", &set),
                Format::Text => render_coverage_set(&set),
            }
        }
        (GenKind::Sxm, _) => return Err(wrong("a stream X-machine")),
        (GenKind::System, _) => return Err(wrong("a communicating system")),
        (GenKind::Heterotic, _) => return Err(wrong("a heterotic system")),
        (GenKind::Psystem, _) => return Err(wrong("a P system")),
    };
    Ok(Outcome::ok(text))
}

fn cmd_product(
    format: Option<Format>,
    seed: Option<u64>,
    model: &Path,
) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Json);
    let sys = match load(model)? {
        Loaded::System(s) => s,
        Loaded::Heterotic(f, dir) => heterotic(&f, &dir, seed)?.as_system,
        _ => {
            return Err(CliError::Usage(format!(
                "{} is not a communicating system",
                model.display()
            )))
        }
    };
    let report = validate_system(&sys);
    if !report.is_valid() {
        return Err(CsxmError::Invalid(report).into());
    }
    let product = build_product_sxm(&extend_for_testing(&sys)?)?;
    let text = match format {
        Format::Json => artifact(
            "product",
            json!({
                "sxm": product.sxm,
                "input_tuples": product.input_tuples,
                "output_tuples": product.output_tuples,
                "labels": product.labels,
            }),
        ),
        Format::Text => {
            let p = &product.sxm;
            let arcs: usize = p.next_state.values().map(|t| t.len()).sum();
            format!(
                "inputs {}\noutputs {}\nstates {}\nfunctions {}\narcs {}\n",
                p.inputs.len(),
                p.outputs.len(),
                p.states.len(),
                p.functions.len(),
                arcs
            )
        }
    };
    Ok(Outcome::ok(text))
}

fn cmd_coverage(
    format: Option<Format>,
    depth: Option<usize>,
    traces: Option<&Path>,
    model: &Path,
) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Json);
    let Loaded::PSystem(ps) = load(model)? else {
        return Err(CliError::Usage(format!(
            "{} is not a P system",
            model.display()
        )));
    };
    let traces: Vec<ComputationTrace> = match (depth, traces) {
        (_, Some(path)) => {
            let json: serde_json::Value = read_json(path)?;
            let list = json.get("traces").cloned().unwrap_or(json);
            parse(path, list)?
        }
        (Some(d), None) => psystem_run(&ps, d, RunMode::AllBranches)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let report = rule_coverage(&ps, &traces)?;
    let text = match format {
        Format::Json => artifact("rule-coverage", &report),
        Format::Text => {
            let mut out = String::new();
            for r in &report.rules {
                match &r.witness {
                    Some(w) => {
                        let _ = writeln!(out, "{}: {w}", r.rule);
                    }
                    None => {
                        let _ = writeln!(out, "{}: not covered", r.rule);
                    }
                }
            }
            out
        }
    };
    Ok(Outcome::ok(text))
}

fn model_of(loaded: Loaded, path: &Path) -> Result<Model, CliError> {
    match loaded {
        Loaded::PSystem(p) => Ok(Model::PSystem(p)),
        Loaded::Sxm(m) => Ok(Model::Sxm(m)),
        Loaded::System(s) => Ok(Model::System(s)),
        Loaded::Heterotic(..) => Err(CliError::Usage(format!(
            "{}: mutate the P system or the Control file of a heterotic system",
            path.display()
        ))),
    }
}

fn cmd_mutate(
    format: Option<Format>,
    ops: &[String],
    seed: u64,
    count: Option<usize>,
    model: &Path,
) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Json);
    let mut operators = ops
        .iter()
        .map(|o| o.parse::<Operator>())
        .collect::<Result<Vec<_>, _>>()?;
    if count == Some(0) {
        return Err(MutationError::ZeroCount.into());
    }
    let model = model_of(load(model)?, model)?;
    if operators.is_empty() {
        operators = match model {
            Model::PSystem(_) => Operator::PSYSTEM.to_vec(),
            _ => Operator::SXM.to_vec(),
        };
    }
    let set = mutate_model(&model, &operators, seed, count.unwrap_or(usize::MAX))?;
    let text = match format {
        Format::Json => to_json(&set),
        Format::Text => set
            .mutants
            .iter()
            .map(|m| format!("{} {} {}\n", m.id, m.operator, m.location))
            .collect(),
    };
    Ok(Outcome::ok(text))
}

fn cmd_score(
    format: Option<Format>,
    mutants: &Path,
    suite: Option<&Path>,
    coverage: Option<&Path>,
    bound: usize,
    spec: &Path,
) -> Result<Outcome, CliError> {
    let format = format_or(format, Format::Json);
    let spec_model = model_of(load(spec)?, spec)?;
    let set: MutantSet = read_json(mutants)?;
    let report = match (&spec_model, suite, coverage) {
        (Model::Sxm(_), Some(path), _) => {
            let suite: TestSuite = read_json(path)?;
            mutation_score(&spec_model, &set, ScoreTarget::Suite(&suite), bound)?
        }
        (Model::System(s), Some(path), _) => {
            let suite: TestSuite = read_json(path)?;
            let product = build_product_sxm(&extend_for_testing(s)?)?;
            mutation_score(
                &spec_model,
                &set,
                ScoreTarget::SystemSuite(&suite, &product),
                bound,
            )?
        }
        (Model::PSystem(_), _, Some(path)) => {
            let cov: CoverageTestSet = read_json(path)?;
            mutation_score(&spec_model, &set, ScoreTarget::Coverage(&cov), bound)?
        }
        _ => {
            return Err(CliError::Usage(
                "P systems are scored with --coverage, machines with --suite".into(),
            ))
        }
    };
    let text = match format {
        Format::Json => to_json(&report),
        Format::Text => {
            let mut out = format!(
                "killed {} of {} (score {:.3}, non-equivalent score {:.3})\n",
                report.killed, report.total, report.score, report.non_equivalent_score
            );
            for v in &report.per_mutant {
                let verdict = match v.verdict {
                    Verdict::Killed => "killed",
                    Verdict::Survived => "survived",
                    Verdict::NotKilledBounded => "not killed (bounded)",
                };
                let _ = writeln!(out, "{} {} {}: {verdict}", v.id, v.operator, v.location);
            }
            out
        }
    };
    Ok(Outcome::ok(text))
}

fn cmd_oracle_sim(seed: u64, depth_cap: usize, model: &Path) -> Result<Outcome, CliError> {
    let Loaded::PSystem(ps) = load(model)? else {
        return Err(CliError::Usage(format!(
            "{} is not a P system",
            model.display()
        )));
    };
    let report = validate_psystem(&ps);
    if !report.is_valid() {
        let mut out = String::new();
        render_report(&mut out, &report);
        return Ok(Outcome { text: out, code: 1 });
    }
    let stdin = io::stdin();
    serve_oracle(&ps, seed, depth_cap, stdin.lock(), io::stdout())
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome::ok(String::new()))
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let f = cli.format;
    match &cli.command {
        Command::Validate { dft, model } => cmd_validate(f, *dft, model),
        Command::Simulate {
            depth,
            all_branches,
            seed,
            input,
            rounds,
            oracle,
            timeout_ms,
            retries,
            model,
        } => cmd_simulate(
            f,
            *depth,
            *all_branches,
            *seed,
            input.as_deref(),
            *rounds,
            oracle.as_deref(),
            *timeout_ms,
            *retries,
            model,
        ),
        Command::GenTests {
            kind,
            extra_states,
            depth,
            seed,
            model,
        } => cmd_gen_tests(f, *kind, *extra_states, *depth, *seed, model),
        Command::Product { seed, model } => cmd_product(f, *seed, model),
        Command::Coverage {
            depth,
            traces,
            model,
        } => cmd_coverage(f, *depth, traces.as_deref(), model),
        Command::Mutate {
            ops,
            seed,
            count,
            model,
        } => cmd_mutate(f, ops, *seed, *count, model),
        Command::Score {
            mutants,
            suite,
            coverage,
            bound,
            spec,
        } => cmd_score(
            f,
            mutants,
            suite.as_deref(),
            coverage.as_deref(),
            *bound,
            spec,
        ),
        Command::OracleSim {
            seed,
            depth_cap,
            model,
        } => cmd_oracle_sim(*seed, *depth_cap, model),
    }
}

/// Parses `args`, runs the command and returns the exit code. Artifacts go
/// to `--output` or standard output, diagnostics to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &outcome.text),
                None => io::stdout().write_all(outcome.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return 3;
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
