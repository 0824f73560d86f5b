//! Batch command-line front end. Reads a JSON problem, dispatches to the
//! library and renders JSON or CSV.
//!
//! Exit codes: 0 success, 1 invalid input or options, 2 solver
//! non-convergence (the payload carries the residuals), 3 I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::discretize::{
    convergence_table, entropy_nonextension_demo, generalized_nonextension_demo, write_convergence_csv,
    BaseGridDensity, ConvergenceRow, DivergenceKind, DEFAULT_BASE_EXPONENT, MAX_BASE_EXPONENT,
};
use crate::error::Error;
use crate::info::{
    kl_divergence, measure_entropy, renyi_divergence, renyi_entropy, shannon_entropy, tsallis_divergence,
    tsallis_entropy, ExtendedReal,
};
use crate::maxent_shannon::{solve_maxent, thermo_residuals, ConstraintSet, SolverOptions};
use crate::maxent_tsallis::{discrete_consistency_report, solve_tsallis_maxent, tsallis_thermo, TsallisOptions};
use crate::measure::{
    induced_pmf, radon_nikodym, uniform_partition, ProbabilityVector, ReferenceMeasure, WeightedPartition,
};
use crate::qcalc::DeformationIndex;
use crate::verify::{run_suites, VerifyOptions};

/// Step used for the finite-difference thermodynamic checks in solver output.
pub const THERMO_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Entropy,
    Divergence,
    Approx,
    Maxent,
    Verify,
    Demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Inclusive level range written `A..B` (or a single level `A`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub start: u32,
    pub end: u32,
}

impl LevelRange {
    pub fn levels(self) -> Vec<u32> {
        (self.start..=self.end).collect()
    }
}

impl FromStr for LevelRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("expected A..B with positive integers, got {s:?}"))
        };
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if start == 0 || start > end {
            return Err(format!("level range must satisfy 1 <= A <= B, got {s:?}"));
        }
        Ok(Self { start, end })
    }
}

/// One invocation of the command-line tool.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "qentropy",
    version,
    about = "Generalized entropies, divergences and maximum-entropy solvers"
)]
pub struct RunSpec {
    #[arg(value_enum)]
    pub command: Command,

    /// Input file, or inline JSON when the argument starts with `{`.
    #[arg(long)]
    pub input: Option<String>,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Output format. Defaults to csv for `approx`, json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Variant: entropy shannon|renyi|tsallis|measure; divergence kl|renyi|tsallis;
    /// approx renyi|tsallis; maxent shannon|tsallis; demo shannon|generalized.
    #[arg(long)]
    pub kind: Option<String>,

    /// Tsallis index.
    #[arg(long)]
    pub q: Option<f64>,

    /// Rényi index.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Dyadic levels for `approx`, e.g. `2..12`.
    #[arg(long)]
    pub levels: Option<LevelRange>,

    /// Base-grid exponent `B` (2^B cells) for expression densities.
    #[arg(long)]
    pub base_resolution: Option<u32>,

    /// Solver tolerance on the moment residual.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Seed for `verify`.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Random instances per suite for `verify`.
    #[arg(long)]
    pub samples: Option<usize>,
}

impl RunSpec {
    /// A spec with every option unset.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            output: None,
            format: None,
            kind: None,
            q: None,
            alpha: None,
            levels: None,
            base_resolution: None,
            tol: None,
            seed: None,
            samples: None,
        }
    }
}

/// Result of [`run`]: exit code and the text destined for each stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Validation { field: String, message: String },
    NonConvergence(serde_json::Value),
    Io(String),
}

impl Failure {
    fn validation(field: &str, message: impl Into<String>) -> Self {
        Failure::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

trait Context<T> {
    fn field(self, name: &str) -> Result<T, Failure>;
}

impl<T> Context<T> for crate::error::Result<T> {
    fn field(self, name: &str) -> Result<T, Failure> {
        self.map_err(|e| match e {
            Error::NonConvergence {
                iterations,
                residual,
                ref residuals,
            } => Failure::NonConvergence(json!({
                "error": "non_convergence",
                "field": name,
                "message": e.to_string(),
                "iterations": iterations,
                "residual": residual,
                "residuals": residuals,
            })),
            Error::InnerNonConvergence {
                iterations,
                gap,
                damping,
            } => Failure::NonConvergence(json!({
                "error": "non_convergence",
                "field": name,
                "message": e.to_string(),
                "iterations": iterations,
                "residual": gap,
                "damping": damping,
            })),
            other => Failure::validation(name, other.to_string()),
        })
    }
}

/// Executes one command. Output goes to `spec.output` when set, otherwise
/// into [`RunOutcome::stdout`].
pub fn run(spec: &RunSpec) -> RunOutcome {
    let result = execute(spec);
    let (exit_code, body, stderr) = match result {
        Ok(body) => (0, Some(body), String::new()),
        Err(Failure::Validation { field, message }) => (
            1,
            None,
            render_json(&json!({"error": "validation", "field": field, "message": message})),
        ),
        Err(Failure::NonConvergence(payload)) => (2, Some(render_json(&payload)), "solver did not converge\n".into()),
        Err(Failure::Io(message)) => (3, None, render_json(&json!({"error": "io", "message": message}))),
    };
    let Some(body) = body else {
        return RunOutcome {
            exit_code,
            stdout: String::new(),
            stderr,
        };
    };
    match &spec.output {
        Some(path) => match fs::write(path, &body) {
            Ok(()) => RunOutcome {
                exit_code,
                stdout: String::new(),
                stderr,
            },
            Err(e) => RunOutcome {
                exit_code: 3,
                stdout: String::new(),
                stderr: render_json(&json!({
                    "error": "io",
                    "message": format!("cannot write {}: {e}", path.display()),
                })),
            },
        },
        None => RunOutcome {
            exit_code,
            stdout: body,
            stderr,
        },
    }
}

fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn execute(spec: &RunSpec) -> Result<String, Failure> {
    check_options(spec)?;
    match spec.command {
        Command::Entropy => entropy(spec),
        Command::Divergence => divergence(spec),
        Command::Approx => approx(spec),
        Command::Maxent => maxent(spec),
        Command::Verify => verify(spec),
        Command::Demo => demo(spec),
    }
}

fn check_options(spec: &RunSpec) -> Result<(), Failure> {
    for (name, v) in [("q", spec.q), ("alpha", spec.alpha), ("tol", spec.tol)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::validation(
                    name,
                    format!("must be a positive finite number, got {v}"),
                ));
            }
        }
    }
    if let Some(b) = spec.base_resolution {
        if b == 0 || b > MAX_BASE_EXPONENT {
            return Err(Failure::validation(
                "base-resolution",
                format!("must lie in 1..={MAX_BASE_EXPONENT}, got {b}"),
            ));
        }
    }
    if spec.samples == Some(0) {
        return Err(Failure::validation("samples", "must be positive"));
    }
    Ok(())
}

fn format_of(spec: &RunSpec, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = spec.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::validation(
            "format",
            format!("{:?} output is not available for this command", f).to_lowercase(),
        ))
    }
}

fn read_input(spec: &RunSpec) -> Result<Option<String>, Failure> {
    match &spec.input {
        None => Ok(None),
        Some(s) if s.trim_start().starts_with('{') => Ok(Some(s.clone())),
        Some(path) => fs::read_to_string(path)
            .map(Some)
            .map_err(|e| Failure::Io(format!("cannot read {path}: {e}"))),
    }
}

fn parse_input<T: for<'de> Deserialize<'de>>(spec: &RunSpec) -> Result<T, Failure> {
    let text = read_input(spec)?.ok_or_else(|| Failure::validation("input", "this command needs --input"))?;
    parse_json(&text)
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::validation("input", e.to_string()))
}

fn index(value: Option<f64>, name: &str) -> Result<DeformationIndex, Failure> {
    let v = value.ok_or_else(|| Failure::validation(name, format!("--{name} is required for this kind")))?;
    DeformationIndex::new(v).field(name)
}

fn kind<'a>(spec: &'a RunSpec, default: Option<&'a str>, allowed: &[&str]) -> Result<&'a str, Failure> {
    let k = spec
        .kind
        .as_deref()
        .or(default)
        .ok_or_else(|| Failure::validation("kind", format!("--kind is required, one of {allowed:?}")))?;
    if allowed.contains(&k) {
        Ok(k)
    } else {
        Err(Failure::validation(
            "kind",
            format!("unknown kind {k:?}, expected one of {allowed:?}"),
        ))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntropyInput {
    pmf: Vec<f64>,
    partition: Option<WeightedPartition>,
}

#[derive(Debug, Serialize)]
struct ScalarOutput<'a> {
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<f64>,
    value: ExtendedReal,
}

fn entropy(spec: &RunSpec) -> Result<String, Failure> {
    format_of(spec, Format::Json, &[Format::Json])?;
    let k = kind(spec, Some("shannon"), &["shannon", "renyi", "tsallis", "measure"])?;
    let input: EntropyInput = parse_input(spec)?;
    let pmf = ProbabilityVector::new(input.pmf).field("pmf")?;
    let partition = match input.partition {
        Some(p) => p,
        None => uniform_partition(pmf.len(), ReferenceMeasure::Counting).field("pmf")?,
    };
    if k == "measure" {
        let value = measure_entropy(&pmf, &partition).field("partition")?;
        return Ok(render_json(&ScalarOutput {
            kind: k,
            index: None,
            value,
        }));
    }
    let density = radon_nikodym(&pmf, Arc::new(partition)).field("partition")?;
    let (value, index_value) = match k {
        "shannon" => (shannon_entropy(&density), None),
        "renyi" => {
            let a = index(spec.alpha, "alpha")?;
            (renyi_entropy(&density, a), Some(a.value()))
        }
        _ => {
            let q = index(spec.q, "q")?;
            (tsallis_entropy(&density, q), Some(q.value()))
        }
    };
    Ok(render_json(&ScalarOutput {
        kind: k,
        index: index_value,
        value: ExtendedReal::Finite(value),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DivergenceInput {
    p: Vec<f64>,
    r: Vec<f64>,
}

fn divergence(spec: &RunSpec) -> Result<String, Failure> {
    format_of(spec, Format::Json, &[Format::Json])?;
    let k = kind(spec, Some("kl"), &["kl", "renyi", "tsallis"])?;
    let input: DivergenceInput = parse_input(spec)?;
    let p = ProbabilityVector::new(input.p).field("p")?;
    let r = ProbabilityVector::new(input.r).field("r")?;
    let (value, index_value) = match k {
        "kl" => (kl_divergence(&p, &r).field("r")?, None),
        "renyi" => {
            let a = index(spec.alpha, "alpha")?;
            (renyi_divergence(&p, &r, a).field("r")?, Some(a.value()))
        }
        _ => {
            let q = index(spec.q, "q")?;
            (tsallis_divergence(&p, &r, q).field("r")?, Some(q.value()))
        }
    };
    Ok(render_json(&ScalarOutput {
        kind: k,
        index: index_value,
        value,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum DensitySource {
    Expr { expr: String },
    Values { values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxInput {
    interval: [f64; 2],
    p: DensitySource,
    r: DensitySource,
}

#[derive(Debug, Serialize)]
struct ApproxOutput<'a> {
    kind: DivergenceKind,
    index: f64,
    interval: [f64; 2],
    base_resolution: u32,
    rows: &'a [ConvergenceRow],
}

fn grid_density(
    source: &DensitySource,
    interval: [f64; 2],
    base: Option<u32>,
    name: &str,
) -> Result<BaseGridDensity, Failure> {
    let [a, b] = interval;
    match source {
        DensitySource::Values { values } => {
            let grid = BaseGridDensity::from_values(a, b, values.clone(), true).field(name)?;
            if let Some(bres) = base {
                if bres != grid.base_exponent() {
                    return Err(Failure::validation(
                        "base-resolution",
                        format!(
                            "{name} has 2^{} values but --base-resolution is {bres}",
                            grid.base_exponent()
                        ),
                    ));
                }
            }
            Ok(grid)
        }
        DensitySource::Expr { expr } => {
            let tree = build_operator_tree::<DefaultNumericTypes>(expr)
                .map_err(|e| Failure::validation(name, format!("cannot parse expression {expr:?}: {e}")))?;
            let mut context = HashMapContext::<DefaultNumericTypes>::new();
            let mut failure = None;
            let grid = BaseGridDensity::from_fn(a, b, base.unwrap_or(DEFAULT_BASE_EXPONENT), |x| {
                if failure.is_some() {
                    return f64::NAN;
                }
                let value = context
                    .set_value("x".into(), Value::Float(x))
                    .and_then(|_| tree.eval_number_with_context(&context));
                match value {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e.to_string());
                        f64::NAN
                    }
                }
            });
            if let Some(message) = failure {
                return Err(Failure::validation(
                    name,
                    format!("cannot evaluate {expr:?}: {message}"),
                ));
            }
            grid.field(name)
        }
    }
}

fn approx(spec: &RunSpec) -> Result<String, Failure> {
    let format = format_of(spec, Format::Csv, &[Format::Csv, Format::Json])?;
    let default_kind = match (spec.alpha, spec.q) {
        (Some(_), None) => Some("renyi"),
        (None, Some(_)) => Some("tsallis"),
        _ => None,
    };
    let k = kind(spec, default_kind, &["renyi", "tsallis"])?;
    let (divergence_kind, idx) = if k == "renyi" {
        (DivergenceKind::Renyi, index(spec.alpha, "alpha")?)
    } else {
        (DivergenceKind::Tsallis, index(spec.q, "q")?)
    };
    let input: ApproxInput = parse_input(spec)?;
    let p = grid_density(&input.p, input.interval, spec.base_resolution, "p")?;
    let r = grid_density(&input.r, input.interval, spec.base_resolution, "r")?;
    if !p.same_grid(&r) {
        return Err(Failure::validation(
            "r",
            "p and r must have the same number of base cells",
        ));
    }
    let levels = spec.levels.unwrap_or(LevelRange { start: 1, end: 10 });
    if levels.end > p.base_exponent() {
        return Err(Failure::validation(
            "levels",
            format!(
                "level {} exceeds the base resolution 2^{}",
                levels.end,
                p.base_exponent()
            ),
        ));
    }
    let rows = convergence_table(&p, &r, idx, divergence_kind, &levels.levels()).field("levels")?;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_convergence_csv(&rows, &mut buf).map_err(|e| Failure::Io(e.to_string()))?;
            Ok(String::from_utf8(buf).expect("ASCII CSV"))
        }
        Format::Json => Ok(render_json(&ApproxOutput {
            kind: divergence_kind,
            index: idx.value(),
            interval: input.interval,
            base_resolution: p.base_exponent(),
            rows: &rows,
        })),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintInput {
    values: Vec<f64>,
    target: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ProblemKind {
    Ordinary,
    Escort,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaxentProblem {
    partition: WeightedPartition,
    #[serde(default)]
    constraints: Vec<ConstraintInput>,
    kind: Option<ProblemKind>,
    q: Option<f64>,
}

fn maxent(spec: &RunSpec) -> Result<String, Failure> {
    format_of(spec, Format::Json, &[Format::Json])?;
    let problem: MaxentProblem = parse_input(spec)?;
    let problem_kind = match (spec.kind.as_deref(), problem.kind) {
        (None, k) => k.unwrap_or(ProblemKind::Ordinary),
        (Some("shannon"), None | Some(ProblemKind::Ordinary)) => ProblemKind::Ordinary,
        (Some("tsallis"), None | Some(ProblemKind::Escort)) => ProblemKind::Escort,
        (Some(k @ ("shannon" | "tsallis")), Some(pk)) => {
            return Err(Failure::validation(
                "kind",
                format!("--kind {k} conflicts with problem kind {pk:?}").to_lowercase(),
            ))
        }
        (Some(k), _) => {
            return Err(Failure::validation(
                "kind",
                format!("unknown kind {k:?}, expected \"shannon\" or \"tsallis\""),
            ))
        }
    };
    let (functions, targets): (Vec<_>, Vec<_>) = problem.constraints.into_iter().map(|c| (c.values, c.target)).unzip();
    let partition = Arc::new(problem.partition);
    let tolerance = spec.tol.unwrap_or(SolverOptions::default().tolerance);
    match problem_kind {
        ProblemKind::Ordinary => {
            if spec.q.is_some() || problem.q.is_some() {
                return Err(Failure::validation("q", "q applies only to escort problems"));
            }
            let constraints = ConstraintSet::ordinary(functions, targets).field("constraints")?;
            let options = SolverOptions {
                tolerance,
                ..SolverOptions::default()
            };
            let solution = solve_maxent(&constraints, Arc::clone(&partition), options).field("constraints")?;
            let thermo = thermo_residuals(&solution, &constraints, partition, THERMO_FD_STEP, options);
            let mut warnings = Vec::new();
            let thermo = match thermo {
                Ok(t) => Some(t),
                Err(e) => {
                    warnings.push(format!("thermodynamic check skipped: {e}"));
                    None
                }
            };
            let moment_residual = solution
                .achieved_moments
                .iter()
                .zip(constraints.targets())
                .map(|(m, t)| (m - t).abs())
                .fold(0.0, f64::max);
            let output = json!({
                "kind": "ordinary",
                "beta": solution.beta,
                "log_Z": solution.log_z,
                "pmf": induced_pmf(&solution.density),
                "density": solution.density.values(),
                "achieved_moments": solution.achieved_moments,
                "entropy": solution.entropy,
                "residuals": {
                    "moments": moment_residual,
                    "max_entropy": solution.max_entropy_residual,
                    "grad_log_z": thermo.as_ref().map(|t| t.grad_residual.clone()),
                    "entropy_sensitivity": thermo.as_ref().map(|t| t.sensitivity_residual.clone()),
                    "fd_step": thermo.as_ref().map(|t| t.fd_step),
                },
                "iterations": solution.iterations,
                "warnings": warnings,
            });
            Ok(render_json(&output))
        }
        ProblemKind::Escort => {
            let q_value = match (spec.q, problem.q) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Failure::validation(
                        "q",
                        format!("--q {a} conflicts with problem q {b}"),
                    ))
                }
                (Some(a), _) | (None, Some(a)) => a,
                (None, None) => return Err(Failure::validation("q", "escort problems need q")),
            };
            let q = DeformationIndex::new(q_value).field("q")?;
            let constraints = ConstraintSet::escort(functions, targets, q).field("constraints")?;
            let options = TsallisOptions {
                tolerance,
                ..TsallisOptions::default()
            };
            let solution = solve_tsallis_maxent(&constraints, Arc::clone(&partition), options).field("constraints")?;
            let mut residuals = solution.identity_residuals.clone();
            let mut warnings = solution.warnings.clone();
            let thermo = match tsallis_thermo(&solution, &constraints, Arc::clone(&partition), THERMO_FD_STEP, options)
            {
                Ok(t) => Some(t),
                Err(e) => {
                    warnings.push(format!("thermodynamic check skipped: {e}"));
                    None
                }
            };
            let pmf = induced_pmf(&solution.density);
            let n = partition.len();
            let uniform_probability = partition.weights().iter().all(|&w| (w - 1.0 / n as f64).abs() <= 1e-15);
            if uniform_probability {
                let report = discrete_consistency_report(&pmf, q, Some(solution.zbar)).field("partition")?;
                residuals.insert("discrete_entropy_shift".into(), report.entropy_shift_residual);
                if let Some(r) = report.power_sum_residual {
                    residuals.insert("power_sum_vs_zbar".into(), r);
                }
            }
            if let Some(t) = &thermo {
                residuals.insert("lnq_zq_inverse".into(), t.lnq_zq_residual);
            }
            let output = json!({
                "kind": "escort",
                "q": q.value(),
                "beta": solution.beta,
                "beta_q": solution.beta_q,
                "zbar": solution.zbar,
                "q_mass": solution.q_mass,
                "pmf": pmf,
                "density": solution.density.values(),
                "escort_moments": solution.escort_moments,
                "entropy_q": solution.entropy_q,
                "lnq_zq": thermo.as_ref().map(|t| t.lnq_zq),
                "zq": thermo.as_ref().and_then(|t| t.zq),
                "identity_residuals": residuals,
                "thermo": thermo.as_ref().map(|t| json!({
                    "grad_lnq_zq": t.grad_residual,
                    "entropy_sensitivity": t.sensitivity_residual,
                    "fd_step": t.fd_step,
                })),
                "classical_delegation": solution.classical,
                "iterations": {"outer": solution.outer_iterations, "inner": solution.inner_iterations},
                "warnings": warnings,
            });
            Ok(render_json(&output))
        }
    }
}

const VERIFY_CSV_HEADER: &str = "suite,samples,failures,worst,tolerance,passed";

fn verify(spec: &RunSpec) -> Result<String, Failure> {
    let format = format_of(spec, Format::Json, &[Format::Json, Format::Csv])?;
    let defaults = VerifyOptions::default();
    let options = VerifyOptions {
        seed: spec.seed.unwrap_or(defaults.seed),
        samples: spec.samples.unwrap_or(defaults.samples),
    };
    let reports = run_suites(options);
    match format {
        Format::Json => Ok(render_json(&json!({
            "seed": options.seed,
            "samples": options.samples,
            "all_passed": reports.iter().all(|r| r.passed),
            "suites": reports,
        }))),
        Format::Csv => {
            let mut out = format!("{VERIFY_CSV_HEADER}\n");
            for r in &reports {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.suite, r.samples, r.failures, r.worst, r.tolerance, r.passed
                )
                .expect("writing to a String");
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemoInput {
    intervals: Option<Vec<[f64; 2]>>,
    n: Option<Vec<usize>>,
}

/// `2, 4, ..., 1024`.
pub fn default_demo_sizes() -> Vec<usize> {
    (1..=10).map(|k| 1usize << k).collect()
}

fn demo(spec: &RunSpec) -> Result<String, Failure> {
    let format = format_of(spec, Format::Json, &[Format::Json, Format::Csv])?;
    let k = kind(spec, Some("shannon"), &["shannon", "generalized"])?;
    let input: DemoInput = match read_input(spec)? {
        Some(text) => parse_json(&text)?,
        None => DemoInput {
            intervals: None,
            n: None,
        },
    };
    let intervals = input.intervals.unwrap_or_else(|| vec![[0.0, 1.0], [0.0, 0.5]]);
    let sizes = input.n.unwrap_or_else(default_demo_sizes);
    if k == "shannon" {
        let tables = intervals
            .iter()
            .map(|&[a, b]| entropy_nonextension_demo(a, b, &sizes).field("intervals"))
            .collect::<Result<Vec<_>, _>>()?;
        return match format {
            Format::Json => Ok(render_json(&json!({ "kind": "shannon", "tables": tables }))),
            Format::Csv => {
                let mut out = String::from("a,b,n,discrete_entropy,continuous_entropy\n");
                for t in &tables {
                    for r in &t.rows {
                        writeln!(
                            out,
                            "{},{},{},{},{}",
                            t.interval.0, t.interval.1, r.n, r.discrete_entropy, r.continuous_entropy
                        )
                        .expect("writing to a String");
                    }
                }
                Ok(out)
            }
        };
    }
    let idx = index(spec.q.or(spec.alpha), "q")?;
    let tables = intervals
        .iter()
        .map(|&[a, b]| {
            generalized_nonextension_demo(a, b, &sizes, idx)
                .field("intervals")
                .map(|rows| json!({ "interval": [a, b], "rows": rows }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        Format::Json => Ok(render_json(&json!({
            "kind": "generalized",
            "index": idx.value(),
            "tables": tables,
        }))),
        Format::Csv => {
            let mut out = String::from("a,b,n,discrete_renyi,continuous_renyi,discrete_tsallis,continuous_tsallis\n");
            for &[a, b] in &intervals {
                for r in generalized_nonextension_demo(a, b, &sizes, idx).field("intervals")? {
                    writeln!(
                        out,
                        "{a},{b},{},{},{},{},{}",
                        r.n, r.discrete_renyi, r.continuous_renyi, r.discrete_tsallis, r.continuous_tsallis
                    )
                    .expect("writing to a String");
                }
            }
            Ok(out)
        }
    }
}
