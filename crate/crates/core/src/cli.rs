//! Command-line front end. [`run`] parses arguments, calls into the library
//! and returns the document and exit code instead of printing, so the binary
//! is a thin wrapper and tests can drive it in-process.
//!
//! Exit codes: 0 success, 1 failed certificate or divergence (the document
//! is still emitted), 2 invalid input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::defsets::{self, BoundaryFn, DefSet};
use crate::normalform::{self, CertParams, NormalFormError};
use crate::norms::{self, BorelProfile, WeightSequence};
use crate::paramopt::{self, OptResult, QRow};
use crate::prisma::{self, IterConfig, PrismaError, PrismaState, RapidConvergence, Scalar};
use crate::series::{self, Rational, TruncSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Basic,
    Equalized,
}

#[derive(Debug, Parser)]
#[command(name = "kolmo", version, about = "Normal-form iteration, convergence certificates and parameter tables")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the document to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print version and time metadata on stderr
    #[arg(long, global = true)]
    stamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact iteration for z^2/2 + z^3
    MorseTrace(TraceArgs),
    /// Exact iteration for z^2/2 + beta z^n
    Normalize(NormalizeArgs),
    /// Check the certificate conditions and run the bound iteration
    Certify(CertifyArgs),
    /// Largest admissible t0
    Threshold(ThresholdArgs),
    /// Maximize the certified radius over (lambda, mu)
    Optimize(OptimizeArgs),
    /// Ratio of true to certified radius per degree n
    Qtable(QtableArgs),
    /// Iterate the prisma map
    Prisma(Box<PrismaArgs>),
    /// Definition-set algebra
    #[command(subcommand)]
    Defset(DefsetCommand),
    /// Norm inequalities
    #[command(subcommand)]
    Norms(NormsCommand),
    /// Objective values on a grid for contour plots
    PlotGrid(PlotGridArgs),
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, default_value_t = 4)]
    steps: usize,
    /// Highest known power of z (default 2^(steps+1) + 3)
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value = "1", value_parser = parse_exact, allow_hyphen_values = true)]
    beta: Rational,
    #[arg(long, default_value_t = 3)]
    steps: usize,
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long, default_value = "0.004", value_parser = parse_real)]
    t0: f64,
    #[arg(long, default_value = "1/4", value_parser = parse_real)]
    lambda: f64,
    #[arg(long, default_value = "1/2", value_parser = parse_real)]
    mu: f64,
    #[arg(long, default_value = "1/2", value_parser = parse_real)]
    r: f64,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    beta: f64,
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Number of bound-iteration steps
    #[arg(long, default_value_t = 6)]
    steps: usize,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long, default_value = "1/4", value_parser = parse_real)]
    lambda: f64,
    #[arg(long, default_value = "1/2", value_parser = parse_real)]
    mu: f64,
    /// A number, or `equalized` for the value balancing both conditions
    #[arg(long, default_value = "1/2", value_parser = parse_r)]
    r: RChoice,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    beta: f64,
    #[arg(long, default_value_t = 3)]
    n: u32,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_enum, default_value_t = Mode::Equalized)]
    mode: Mode,
}

#[derive(Debug, Args)]
struct QtableArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8,9,10,20,50")]
    n: Vec<u32>,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    beta: f64,
}

#[derive(Debug, Args)]
struct PrismaArgs {
    #[arg(long, default_value = "1", value_parser = parse_exact)]
    t0: Rational,
    #[arg(long, default_value = "3/4", value_parser = parse_exact)]
    s0: Rational,
    #[arg(long, default_value = "1/16", value_parser = parse_exact)]
    x0: Rational,
    /// Constant R of the map x -> x^2 / (R s^k (t-s)^l)
    #[arg(long, default_value = "1", value_parser = parse_exact)]
    rconst: Rational,
    #[arg(long, default_value = "0", value_parser = parse_real)]
    k: f64,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    l: f64,
    #[arg(long, default_value = "1/2", value_parser = parse_exact)]
    lambda: Rational,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    /// Track the accumulated sum alpha
    #[arg(long)]
    parametric: bool,
}

#[derive(Debug, Subcommand)]
enum DefsetCommand {
    /// Membership of (t, s)
    Contains {
        #[arg(long, value_parser = parse_defset)]
        set: DefSet,
        #[arg(long, value_parser = parse_real)]
        t: f64,
        #[arg(long, value_parser = parse_real)]
        s: f64,
    },
    /// Convolution left * right
    Convolve {
        #[arg(long, value_parser = parse_defset)]
        left: DefSet,
        #[arg(long, value_parser = parse_defset)]
        right: DefSet,
    },
    /// Whether A * A = A
    Idempotent {
        #[arg(long, value_parser = parse_defset)]
        set: DefSet,
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    Geometric,
    QuadraticPole,
    LinearPole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Weights {
    Geometric,
    Constant,
    Hilbert,
}

#[derive(Debug, Subcommand)]
enum NormsCommand {
    /// |f^(k)|_s <= k!/(t-s)^k |f|_t for a polynomial given by its coefficients
    Nagumo {
        #[arg(long, value_delimiter = ',', value_parser = parse_exact, required = true, allow_hyphen_values = true)]
        coeffs: Vec<Rational>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_parser = parse_real)]
        t: f64,
        #[arg(long, value_parser = parse_real)]
        s: f64,
    },
    /// Borel estimate |f|(x)
    Borel {
        #[arg(long, value_enum, default_value_t = Profile::Geometric)]
        profile: Profile,
        #[arg(long, value_parser = parse_real)]
        x: f64,
    },
    /// Condition sum (mu_n(s)/lambda_n(t))^p <= C/(t-s)^alpha on a grid
    LambdaP {
        #[arg(long, value_enum, default_value_t = Weights::Geometric)]
        weights: Weights,
        #[arg(long, default_value = "1", value_parser = parse_real)]
        p: f64,
        #[arg(long, default_value = "1", value_parser = parse_real)]
        alpha: f64,
        #[arg(long, default_value = "1", value_parser = parse_real)]
        c: f64,
        #[arg(long, default_value_t = 50)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
struct PlotGridArgs {
    #[arg(long, value_enum, default_value_t = Mode::Basic)]
    mode: Mode,
    /// Points per axis
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

fn parse_exact(text: &str) -> Result<Rational, String> {
    series::parse_rational(text).map_err(|e| e.to_string())
}

fn parse_real(text: &str) -> Result<f64, String> {
    let q = parse_exact(text)?;
    Ok(series::rational_to_f64(&q))
}

#[derive(Debug, Clone, Copy)]
enum RChoice {
    Fixed(f64),
    Equalized,
}

fn parse_r(text: &str) -> Result<RChoice, String> {
    if text == "equalized" {
        Ok(RChoice::Equalized)
    } else {
        parse_real(text).map(RChoice::Fixed)
    }
}

/// `diagonal`, `closed-diagonal`, `square`, `cone:A`, `translation:L`,
/// `linear:A:C`, `power:G:K`, or a JSON document.
fn parse_defset(text: &str) -> Result<DefSet, String> {
    let text = text.trim();
    if text.starts_with('{') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    let mut parts = text.split(':');
    let name = parts.next().unwrap_or_default();
    let args: Vec<f64> = parts.map(parse_real).collect::<Result<_, _>>()?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("set '{name}' takes {n} parameter(s), got {}", args.len()))
        }
    };
    let set = match name {
        "diagonal" => arity(0).map(|_| DefSet::open_diagonal()),
        "closed-diagonal" => arity(0).map(|_| DefSet::closed_diagonal()),
        "square" => arity(0).map(|_| DefSet::square_map()),
        "cone" => arity(1).and_then(|_| DefSet::cone(args[0]).map_err(|e| e.to_string())),
        "translation" => arity(1).map(|_| DefSet::translation(args[0])),
        "linear" => arity(2).and_then(|_| {
            BoundaryFn::linear(args[0], args[1])
                .map(DefSet::region)
                .map_err(|e| e.to_string())
        }),
        "power" => arity(2).and_then(|_| {
            BoundaryFn::power(args[0], args[1])
                .map(DefSet::region)
                .map_err(|e| e.to_string())
        }),
        other => Err(format!("unknown set '{other}'")),
    }?;
    Ok(set)
}

enum Failure {
    Invalid(String),
    /// Document still emitted, exit code 1.
    Failed { body: String, message: String },
}

impl From<NormalFormError> for Failure {
    fn from(e: NormalFormError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Invalid(e.to_string())
            }
        })*
    };
}

invalid_from!(
    crate::series::SeriesError,
    crate::norms::NormError,
    crate::defsets::DefSetError,
    crate::paramopt::OptError,
    PrismaError
);

fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn json_only(format: Format, command: &str) -> Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure::Invalid(format!("csv output is not available for {command}"))),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::MorseTrace(_) => "morse-trace",
        Command::Normalize(_) => "normalize",
        Command::Certify(_) => "certify",
        Command::Threshold(_) => "threshold",
        Command::Optimize(_) => "optimize",
        Command::Qtable(_) => "qtable",
        Command::Prisma(_) => "prisma",
        Command::Defset(_) => "defset",
        Command::Norms(_) => "norms",
        Command::PlotGrid(_) => "plot-grid",
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutcome {
                    code: EXIT_INVALID,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CliOutcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let mut stderr = String::new();
    if cli.stamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(
            stderr,
            "kolmo {} command={} unix_time={secs}",
            env!("CARGO_PKG_VERSION"),
            command_name(&cli.command)
        );
    }
    let (code, body) = match dispatch(&cli.command, cli.format) {
        Ok(body) => (EXIT_OK, body),
        Err(Failure::Failed { body, message }) => {
            let _ = writeln!(stderr, "error: {message}");
            (EXIT_FAILURE, body)
        }
        Err(Failure::Invalid(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            return CliOutcome {
                code: EXIT_INVALID,
                stdout: String::new(),
                stderr,
            };
        }
    };
    match &cli.out {
        Some(path) => match std::fs::write(path, &body) {
            Ok(()) => CliOutcome {
                code,
                stdout: String::new(),
                stderr,
            },
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                CliOutcome {
                    code: EXIT_INVALID,
                    stdout: String::new(),
                    stderr,
                }
            }
        },
        None => CliOutcome {
            code,
            stdout: body,
            stderr,
        },
    }
}

fn dispatch(command: &Command, format: Format) -> Result<String, Failure> {
    match command {
        Command::MorseTrace(a) => {
            let trunc = a.order.unwrap_or_else(|| normalform::default_truncation(a.steps));
            let (f0, b0) = normalform::morse_instance(trunc);
            trace_doc(&f0, &b0, 3, Rational::from_integer(1.into()), a.steps, format)
        }
        Command::Normalize(a) => {
            let trunc = a.order.unwrap_or_else(|| normalform::default_truncation(a.steps));
            let (f0, b0) = normalform::perturbed_quadratic(&a.beta, a.n, trunc);
            trace_doc(&f0, &b0, a.n, a.beta.clone(), a.steps, format)
        }
        Command::Certify(a) => certify_doc(a, format),
        Command::Threshold(a) => {
            json_only(format, "threshold")?;
            let r = match a.r {
                RChoice::Fixed(r) => r,
                RChoice::Equalized => paramopt::solve_r(paramopt::nu_generic(&a.lambda, &a.mu))?,
            };
            let t0 = normalform::threshold_t0(a.lambda, a.mu, r, a.beta, a.n)?;
            Ok(to_json_text(&json!({
                "lambda": a.lambda,
                "mu": a.mu,
                "r": r,
                "beta": a.beta,
                "n": a.n,
                "T0": t0,
                "t_inf": normalform::t_inf_of(t0, a.lambda, a.mu),
            })))
        }
        Command::Optimize(a) => {
            let result = match a.mode {
                Mode::Basic => paramopt::maximize_basic(),
                Mode::Equalized => paramopt::maximize_equalized(),
            };
            Ok(optimize_doc(a.mode, &result, format))
        }
        Command::Qtable(a) => {
            let rows = paramopt::q_table(&a.n, a.beta)?;
            Ok(match format {
                Format::Json => to_json_text(&rows),
                Format::Csv => qtable_csv(&rows),
            })
        }
        Command::Prisma(a) => prisma_doc(a, format),
        Command::Defset(c) => {
            json_only(format, "defset")?;
            defset_doc(c)
        }
        Command::Norms(c) => {
            json_only(format, "norms")?;
            norms_doc(c)
        }
        Command::PlotGrid(a) => {
            let grid = paramopt::objective_grid(a.mode == Mode::Equalized, a.grid)?;
            Ok(match format {
                Format::Csv => {
                    let mut out = String::from("lambda,mu,value\n");
                    for (l, m, v) in grid {
                        let v = v.map(|v| v.to_string()).unwrap_or_default();
                        let _ = writeln!(out, "{l},{m},{v}");
                    }
                    out
                }
                Format::Json => {
                    let points: Vec<Value> = grid
                        .into_iter()
                        .map(|(l, m, v)| json!({"lambda": l, "mu": m, "value": v}))
                        .collect();
                    to_json_text(&json!({"mode": a.mode, "resolution": a.grid, "points": points}))
                }
            })
        }
    }
}

/// Document of an exact iteration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub degree: usize,
    pub beta: String,
    pub steps: usize,
    pub trunc_order: isize,
    pub normal_form: TruncSeries,
    pub rounds: Vec<normalform::LieRound>,
    /// image of `z` under the composed normalizing map
    pub normalizer: TruncSeries,
}

fn trace_doc(
    f0: &TruncSeries,
    b0: &TruncSeries,
    degree: usize,
    beta: Rational,
    steps: usize,
    format: Format,
) -> Result<String, Failure> {
    let trace = normalform::lie_iterate_formal(f0, b0, steps)?;
    let normalizer = normalform::normalizer_series(&trace)?;
    let doc = TraceDoc {
        degree,
        beta: beta.to_string(),
        steps,
        trunc_order: f0.trunc_order(),
        normal_form: trace.normal_form,
        rounds: trace.rounds,
        normalizer,
    };
    Ok(match format {
        Format::Json => to_json_text(&doc),
        Format::Csv => {
            let mut out = String::from("round,power,remainder,field,function,substitution\n");
            for round in &doc.rounds {
                let len = round.function.known_len();
                for m in 0..len {
                    let cell = |f: &TruncSeries| f.coeffs().get(m).map(|c| c.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        out,
                        "{},{m},{},{},{},{}",
                        round.n,
                        cell(&round.remainder),
                        cell(&round.field),
                        cell(&round.function),
                        cell(&round.substitution)
                    );
                }
            }
            out
        }
    })
}

/// Document of `certify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyDoc {
    pub certificate: normalform::Certificate,
    pub steps: Vec<normalform::CertifiedStep>,
    pub rapid: Option<RapidConvergence>,
    pub breach: Option<String>,
}

fn certify_doc(a: &CertifyArgs, format: Format) -> Result<String, Failure> {
    let params = CertParams {
        t0: a.t0,
        lambda: a.lambda,
        mu: a.mu,
        r: a.r,
        beta: a.beta,
        n: a.n,
    };
    let certificate = normalform::certify(params)?;
    let (steps, breach) = if certificate.passes {
        match normalform::lie_iterate_certified(&certificate, a.steps) {
            Ok(steps) => (steps, None),
            Err(e @ NormalFormError::CertificateBreach { .. }) => (Vec::new(), Some(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    } else {
        (Vec::new(), None)
    };
    let rapid = if steps.is_empty() {
        None
    } else {
        let xs: Vec<f64> = steps.iter().map(|s| s.bound).collect();
        Some(prisma::rapid_convergence_check(&xs)?)
    };
    let doc = CertifyDoc {
        certificate,
        steps,
        rapid,
        breach,
    };
    let body = match format {
        Format::Json => to_json_text(&doc),
        Format::Csv => {
            let mut out = String::from("n,t,s,bound\n");
            for st in &doc.steps {
                let _ = writeln!(out, "{},{},{},{}", st.n, st.t, st.s, st.bound);
            }
            out
        }
    };
    if !doc.certificate.passes {
        let failed: Vec<&str> = [
            ("i", doc.certificate.condition_i.holds),
            ("ii", doc.certificate.condition_ii.holds),
            ("iii", doc.certificate.condition_iii.holds),
        ]
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .collect();
        return Err(Failure::Failed {
            body,
            message: format!("certificate fails condition(s) {}", failed.join(", ")),
        });
    }
    if let Some(reason) = &doc.breach {
        return Err(Failure::Failed {
            body,
            message: reason.clone(),
        });
    }
    Ok(body)
}

fn optimize_doc(mode: Mode, result: &OptResult, format: Format) -> String {
    match format {
        Format::Json => {
            let mut value = serde_json::to_value(result).expect("serializable");
            value["mode"] = json!(mode);
            to_json_text(&value)
        }
        Format::Csv => {
            let r = result.r.map(|r| r.to_string()).unwrap_or_default();
            format!(
                "mode,lambda,mu,r,e_t_inf,t_inf\n{},{},{},{r},{},{}\n",
                match mode {
                    Mode::Basic => "basic",
                    Mode::Equalized => "equalized",
                },
                result.lambda,
                result.mu,
                result.e_t_inf,
                result.t_inf
            )
        }
    }
}

pub const QTABLE_HEADER: &str = "n,lambda,mu,Q,true_radius,t_inf";

fn qtable_csv(rows: &[QRow]) -> String {
    let mut out = format!("{QTABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.n, r.lambda, r.mu, r.q, r.true_radius, r.t_inf);
    }
    out
}

fn prisma_doc(a: &PrismaArgs, format: Format) -> Result<String, Failure> {
    let exact = a.k.fract() == 0.0 && a.l.fract() == 0.0;
    if exact {
        let cfg = IterConfig::new(a.rconst.clone(), a.k, a.l, a.lambda.clone())?;
        let state = initial_state(a.t0.clone(), a.s0.clone(), a.x0.clone(), a.parametric);
        prisma_run(&state, &cfg, a, format, true)
    } else {
        let f = series::rational_to_f64;
        let cfg = IterConfig::new(f(&a.rconst), a.k, a.l, f(&a.lambda))?;
        let state = initial_state(f(&a.t0), f(&a.s0), f(&a.x0), a.parametric);
        prisma_run(&state, &cfg, a, format, false)
    }
}

fn initial_state<S: Scalar>(t: S, s: S, x: S, parametric: bool) -> PrismaState<S> {
    if parametric {
        PrismaState::with_alpha(t, s, x, S::zero())
    } else {
        PrismaState::new(t, s, x)
    }
}

fn prisma_run<S: Scalar>(
    state: &PrismaState<S>,
    cfg: &IterConfig<S>,
    a: &PrismaArgs,
    format: Format,
    exact: bool,
) -> Result<String, Failure> {
    let t_inf = prisma::t_infinity(&state.t, &state.s, &cfg.lambda)?;
    let (states, divergence) = {
        let mut states = vec![state.clone()];
        let mut divergence = None;
        for _ in 0..a.steps {
            let last = states.last().expect("nonempty");
            let next = if a.parametric {
                prisma::param_step(last, cfg)
            } else {
                prisma::step(last, cfg)
            };
            match next {
                Ok(next) => states.push(next),
                Err(e @ (PrismaError::LeavesDomain { .. } | PrismaError::OutsidePrisma { .. })) if states.len() > 1 => {
                    divergence = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        (states, divergence)
    };
    let invariant: Vec<bool> = states.iter().map(|s| prisma::in_invariant_set(s, cfg)).collect();
    let closed_form_agrees = if cfg.d == 2 {
        let mut all = true;
        for (n, st) in states.iter().enumerate() {
            let xn = prisma::closed_form_xn(n, state, cfg)?;
            all &= if exact {
                xn == st.x
            } else {
                (xn.to_f64() - st.x.to_f64()).abs() <= 1e-12 * st.x.to_f64().abs()
            };
        }
        Some(all)
    } else {
        None
    };
    let xs: Vec<f64> = states.iter().map(|s| s.x.to_f64()).collect();
    let rapid = prisma::rapid_convergence_check(&xs)?;
    let body = match format {
        Format::Json => to_json_text(&json!({
            "config": cfg.to_json(),
            "exact": exact,
            "t_inf": t_inf.to_json(),
            "trajectory": states.iter().map(PrismaState::to_json).collect::<Vec<_>>(),
            "invariant": invariant,
            "closed_form_agrees": closed_form_agrees,
            "rapid": rapid,
            "divergence": divergence,
        })),
        Format::Csv => {
            let mut out = String::from(if a.parametric { "n,t,s,x,alpha\n" } else { "n,t,s,x\n" });
            for (n, st) in states.iter().enumerate() {
                let cell = |v: &S| match v.to_json() {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                let _ = write!(out, "{n},{},{},{}", cell(&st.t), cell(&st.s), cell(&st.x));
                if let Some(alpha) = &st.alpha {
                    let _ = write!(out, ",{}", cell(alpha));
                }
                out.push('\n');
            }
            out
        }
    };
    match divergence {
        Some(message) => Err(Failure::Failed { body, message }),
        None => Ok(body),
    }
}

fn defset_doc(command: &DefsetCommand) -> Result<String, Failure> {
    let value = match command {
        DefsetCommand::Contains { set, t, s } => {
            json!({"set": set, "t": t, "s": s, "contains": set.contains(*t, *s)?})
        }
        DefsetCommand::Convolve { left, right } => {
            json!({"left": left, "right": right, "result": defsets::convolve(left, right)?})
        }
        DefsetCommand::Idempotent { set, grid } => {
            let square = defsets::convolve(set, set)?;
            let points = defsets::square_grid(*grid, set.cap());
            json!({
                "set": set,
                "square": square,
                "symbolic": square.approx_eq(set),
                "idempotent": defsets::is_idempotent_on_grid(set, &points)?,
                "grid": grid,
            })
        }
    };
    Ok(to_json_text(&value))
}

fn norms_doc(command: &NormsCommand) -> Result<String, Failure> {
    let value = match command {
        NormsCommand::Nagumo { coeffs, k, t, s } => {
            let f = TruncSeries::from_coeffs(coeffs.clone());
            let holds = norms::nagumo_check(&f, *k, *t, *s)?;
            let lhs = norms::majorant_sum(&f.to_f64(), *s);
            let deriv = (0..*k).fold(f.clone(), |g, _| g.derivative());
            json!({
                "k": k,
                "t": t,
                "s": s,
                "derivative_norm": norms::majorant_sum(&deriv.to_f64(), *s),
                "norm_s": lhs,
                "bound": norms::factorial(*k) / (t - s).powi(*k as i32) * norms::majorant_sum(&f.to_f64(), *t),
                "holds": holds,
            })
        }
        NormsCommand::Borel { profile, x } => {
            let profile = match profile {
                Profile::Geometric => BorelProfile::Geometric,
                Profile::QuadraticPole => BorelProfile::QuadraticPole,
                Profile::LinearPole => BorelProfile::LinearPole,
            };
            json!({"profile": profile, "x": x, "bound": norms::borel_bound(&profile, *x)?})
        }
        NormsCommand::LambdaP { weights, p, alpha, c, grid } => {
            let w = match weights {
                Weights::Geometric => WeightSequence::geometric(),
                Weights::Constant => WeightSequence::constant(),
                Weights::Hilbert => WeightSequence::Hilbert,
            };
            let points = norms::subdiagonal_grid(*grid, 1.0);
            json!({
                "weights": w,
                "p": p,
                "alpha": alpha,
                "C": c,
                "grid": grid,
                "holds": norms::lambda_p_check(&w, &w, *p, *alpha, *c, &points)?,
            })
        }
    };
    Ok(to_json_text(&value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> CliOutcome {
        run(std::iter::once("kolmo").chain(args.iter().copied()))
    }

    #[test]
    fn morse_trace_carries_f4_coefficient() {
        let out = run_args(&["morse-trace", "--steps", "4", "--order", "18", "--format", "json"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let doc: TraceDoc = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc.rounds[4].function.coeffs()[18].to_string(), "-295245/16");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_args(&["certify", "--bogus"]).code, 2);
        assert_eq!(run_args(&["certify", "--lambda", "0.6", "--mu", "0.5"]).code, 1);
        assert_eq!(run_args(&["certify"]).code, 0);
        assert_eq!(run_args(&["threshold", "--n", "2"]).code, 2);
        assert_eq!(run_args(&["defset", "contains", "--set", "cone:2", "--t", "0.5", "--s", "0.1"]).code, 0);
        assert_eq!(run_args(&["--help"]).code, 0);
    }

    #[test]
    fn plot_grid_csv() {
        let out = run_args(&["plot-grid", "--grid", "3", "--format", "csv"]);
        assert_eq!(out.code, 0);
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines[0], "lambda,mu,value");
        assert_eq!(lines.len(), 10);
        assert!(lines.iter().any(|l| l.starts_with("0,0.5,") && l.ends_with(',')));
    }

    #[test]
    fn defset_shorthands() {
        assert!(parse_defset("cone:2").is_ok());
        assert!(parse_defset("cone").is_err());
        assert!(parse_defset("power:1:1/2").is_ok());
        assert!(parse_defset("blob").is_err());
        let json = serde_json::to_string(&DefSet::square_map()).unwrap();
        assert_eq!(parse_defset(&json).unwrap(), DefSet::square_map());
    }
}
