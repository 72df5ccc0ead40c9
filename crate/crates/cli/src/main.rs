//! Command-line front end: solve, analyze, bound, batch-run and verify
//! TLS problems from Matrix Market files or the built-in generators.
//!
//! Exit codes: 0 success, 1 numerical/model failure (non-generic problem,
//! degenerate solution, ...), 2 usage errors including unreadable or
//! malformed input files.

mod mm;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tlscond::bounds::{bound_report, BoundSet};
use tlscond::conditioning::{
    kappa_bg_closed, kappa_closed, kappa_kronecker, DEFAULT_K_ENTRY_CAP,
};
use tlscond::generators::{GeneratorKind, GeneratorSpec};
use tlscond::oracle::{
    default_epsilons, expansion_order_check, fd_jacobian, kappa_fd, seeded_unit_direction,
    FdConfig, FdScheme,
};
use tlscond::report::{
    analyze_problem, fmt_f64, run_experiment, AnalysisRecord, AnalyzeOptions, CSV_HEADER,
};
use tlscond::{solve_from_spectral, spectral_data, spectral_norm, TlsProblem};

#[derive(Parser)]
#[command(
    name = "tlscond",
    version,
    about = "Total least squares: solutions, exact condition numbers and spectral bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the TLS problem and print the solution
    Solve(SolveArgs),
    /// Exact relative condition number, bound ladder and diagnostics
    Analyze(AnalyzeArgs),
    /// Bound ladder only (absolute bounds plus relative BG/GVL bounds)
    Bounds(SolveArgs),
    /// Generate and analyze a batch of problems, with aggregate means
    Experiment(ExperimentArgs),
    /// Cross-check the condition-number routes by finite differences
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Args)]
struct InputArgs {
    /// Matrix Market file holding A (array or coordinate, real, general)
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,

    /// Right-hand side b: Matrix Market m x 1 file or plain numbers
    #[arg(long, value_name = "PATH")]
    rhs: Option<PathBuf>,

    /// Problem generator: bg_example, vanhuffel, toeplitz_blur,
    /// controlled_alpha or gaussian
    #[arg(long, value_name = "KIND")]
    gen: Option<String>,

    /// Rows (generator input)
    #[arg(long)]
    m: Option<usize>,

    /// Columns (generator input)
    #[arg(long)]
    n: Option<usize>,

    /// Trailing singular gap e_p for bg_example
    #[arg(long = "ep")]
    e_p: Option<f64>,

    /// Corner entry magnitude for controlled_alpha
    #[arg(long)]
    alpha: Option<f64>,

    /// Kernel half-width for toeplitz_blur (default 8)
    #[arg(long)]
    omega: Option<usize>,

    /// Kernel width parameter for toeplitz_blur (default 1.25)
    #[arg(long = "beta-blur")]
    beta_blur: Option<f64>,

    /// Noise level for toeplitz_blur (default 0.001)
    #[arg(long)]
    gamma: Option<f64>,

    /// RNG seed
    #[arg(long, default_value_t = 0, env = "TLSCOND_SEED")]
    seed: u64,
}

#[derive(Args)]
struct CommonArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Relative genericity gap tolerance
    #[arg(long = "tol-gap", default_value_t = 1e-12, env = "TLSCOND_TOL_GAP")]
    tol_gap: f64,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Human, env = "TLSCOND_FORMAT")]
    format: Format,

    /// Write output to a file instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Entry cap for the materialized-Jacobian cross-check route
    #[arg(long = "size-cap-k", default_value_t = DEFAULT_K_ENTRY_CAP, env = "TLSCOND_SIZE_CAP_K")]
    size_cap_k: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Number of generated samples (seeds base_seed + 0, 1, ...)
    #[arg(long, default_value_t = 100, env = "TLSCOND_SAMPLES")]
    samples: usize,

    #[arg(long = "size-cap-k", default_value_t = DEFAULT_K_ENTRY_CAP, env = "TLSCOND_SIZE_CAP_K")]
    size_cap_k: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Finite-difference step (default sqrt(eps) * ||[A, b]||_F)
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,

    /// Differencing scheme
    #[arg(long, value_enum, default_value_t = Scheme::Central)]
    scheme: Scheme,

    #[arg(long = "size-cap-k", default_value_t = DEFAULT_K_ENTRY_CAP, env = "TLSCOND_SIZE_CAP_K")]
    size_cap_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Central,
    Forward,
}

enum CliError {
    /// Bad flags or malformed input files: exit 2.
    Usage(String),
    /// The problem itself is numerically unusable: exit 1.
    Model(tlscond::Error),
}

impl From<tlscond::Error> for CliError {
    fn from(e: tlscond::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<mm::ParseError> for CliError {
    fn from(e: mm::ParseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Rendered output plus the process exit code (analyze can succeed in
/// rendering a machine-readable error row while still signalling failure).
struct Rendered {
    text: String,
    exit: u8,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Rendered { text, exit: 0 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, output) = match &cli.command {
        Command::Solve(a) | Command::Bounds(a) => (a.common.format, a.common.output.clone()),
        Command::Analyze(a) => (a.common.format, a.common.output.clone()),
        Command::Experiment(a) => (a.common.format, a.common.output.clone()),
        Command::Verify(a) => (a.common.format, a.common.output.clone()),
    };

    match dispatch(cli) {
        Ok(rendered) => match emit(&rendered.text, &output) {
            Ok(()) => ExitCode::from(rendered.exit),
            Err(e) => {
                eprintln!("error: cannot write output: {e}");
                ExitCode::from(2)
            }
        },
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Model(err)) => {
            let payload = serde_json::json!({
                "error": { "code": err.code(), "message": err.to_string() }
            });
            match format {
                Format::Json => {
                    let mut text =
                        serde_json::to_string_pretty(&payload).expect("serializable");
                    text.push('\n');
                    if emit(&text, &output).is_err() {
                        eprintln!("error: {err}");
                    }
                }
                _ => eprintln!("error: {err}"),
            }
            ExitCode::from(1)
        }
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<Rendered, CliError> {
    match cli.command {
        Command::Solve(args) => run_solve(args).map(Rendered::ok),
        Command::Analyze(args) => run_analyze(args),
        Command::Bounds(args) => run_bounds(args).map(Rendered::ok),
        Command::Experiment(args) => run_experiment_cmd(args).map(Rendered::ok),
        Command::Verify(args) => run_verify(args).map(Rendered::ok),
    }
}

/// Exactly one input source: files or a generator spec.
fn load_problem(input: &InputArgs) -> Result<(TlsProblem, String), CliError> {
    match (&input.matrix, &input.gen) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "choose exactly one input source: --matrix/--rhs or --gen".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "an input is required: --matrix A.mtx --rhs b.mtx, or --gen <kind>".into(),
        )),
        (Some(matrix), None) => {
            let rhs = input
                .rhs
                .as_ref()
                .ok_or_else(|| CliError::Usage("--rhs is required with --matrix".into()))?;
            let a = mm::read_matrix_market(matrix)?;
            let b = mm::read_vector(rhs)?;
            let id = format!(
                "{}+{}",
                matrix.file_name().unwrap_or_default().to_string_lossy(),
                rhs.file_name().unwrap_or_default().to_string_lossy()
            );
            // Shape mismatches between the two files are malformed input.
            let p = TlsProblem::new(a, b).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((p, id))
        }
        (None, Some(_)) => {
            if input.rhs.is_some() {
                return Err(CliError::Usage("--rhs only applies with --matrix".into()));
            }
            let spec = generator_spec(input)?;
            let p = spec.generate().map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((p, spec.id()))
        }
    }
}

fn generator_spec(input: &InputArgs) -> Result<GeneratorSpec, CliError> {
    let kind: GeneratorKind = input
        .gen
        .as_deref()
        .expect("caller checked")
        .parse()
        .map_err(|e: tlscond::Error| CliError::Usage(e.to_string()))?;
    let m = input
        .m
        .ok_or_else(|| CliError::Usage(format!("--m is required for --gen {}", kind.name())))?;
    let need_n = matches!(
        kind,
        GeneratorKind::BgExample | GeneratorKind::ControlledAlpha | GeneratorKind::Gaussian
    );
    if need_n && input.n.is_none() {
        return Err(CliError::Usage(format!("--n is required for --gen {}", kind.name())));
    }
    if kind == GeneratorKind::BgExample && input.e_p.is_none() {
        return Err(CliError::Usage("--ep is required for --gen bg_example".into()));
    }
    if kind == GeneratorKind::ControlledAlpha && input.alpha.is_none() {
        return Err(CliError::Usage("--alpha is required for --gen controlled_alpha".into()));
    }
    Ok(GeneratorSpec {
        kind,
        m,
        n: input.n,
        e_p: input.e_p,
        alpha: input.alpha,
        omega: input.omega,
        beta_blur: input.beta_blur,
        gamma: input.gamma,
        seed: input.seed,
    })
}

#[derive(Serialize)]
struct SolveOutput {
    id: String,
    m: usize,
    n: usize,
    x: Vec<f64>,
    residual_norm: f64,
    sigma_np1: f64,
    alpha: f64,
    gap: f64,
}

fn run_solve(args: SolveArgs) -> Result<String, CliError> {
    let (p, id) = load_problem(&args.common.input)?;
    let sol = tlscond::solve_tls(&p, args.common.tol_gap)?;
    let out = SolveOutput {
        id,
        m: p.nrows(),
        n: p.ncols(),
        x: sol.x.iter().copied().collect(),
        residual_norm: sol.residual.norm(),
        sigma_np1: sol.sigma_np1,
        alpha: sol.alpha,
        gap: sol.gap,
    };
    Ok(match args.common.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut s = String::from("index,value\n");
            for (i, v) in out.x.iter().enumerate() {
                let _ = writeln!(s, "{},{}", i + 1, fmt_f64(*v));
            }
            s
        }
        Format::Human => {
            let mut s = String::new();
            let _ = writeln!(s, "problem:        {}", out.id);
            let _ = writeln!(s, "size:           {} x {}", out.m, out.n);
            let _ = writeln!(s, "x_TLS:          {}", preview_vector(&out.x));
            let _ = writeln!(s, "||r||:          {:.6e}", out.residual_norm);
            let _ = writeln!(s, "sigma_{{n+1}}:    {:.6e}", out.sigma_np1);
            let _ = writeln!(s, "alpha:          {:.6e}", out.alpha);
            let _ = writeln!(s, "genericity gap: {:.6e}", out.gap);
            s
        }
    })
}

fn preview_vector(x: &[f64]) -> String {
    const SHOWN: usize = 8;
    let rendered: Vec<String> = x.iter().take(SHOWN).map(|v| format!("{v:.6}")).collect();
    if x.len() <= SHOWN {
        format!("[{}]", rendered.join(", "))
    } else {
        format!("[{}, ...] ({} entries)", rendered.join(", "), x.len())
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<Rendered, CliError> {
    let (p, id) = load_problem(&args.common.input)?;
    let opts = AnalyzeOptions {
        tol_gap: args.common.tol_gap,
        k_entry_cap: args.size_cap_k,
        include_kronecker: true,
    };
    let record = analyze_problem(&p, &id, &opts);
    if let AnalysisRecord::Error(err_row) = &record {
        // Numerical failure: emit a machine-readable error row where the
        // format allows, and exit 1 either way.
        return match args.common.format {
            Format::Json => Ok(Rendered { text: to_json(&record)?, exit: 1 }),
            Format::Csv => Ok(Rendered {
                text: format!("{CSV_HEADER}\n{}\n", record.to_csv_line()),
                exit: 1,
            }),
            Format::Human => Err(CliError::Model(tlscond::Error::InvalidInput(format!(
                "{}: {}",
                err_row.code, err_row.message
            )))),
        };
    }
    let row = record.row().expect("checked");
    let text = match args.common.format {
        Format::Json => to_json(&record)?,
        Format::Csv => format!("{CSV_HEADER}\n{}\n", record.to_csv_line()),
        Format::Human => {
            let mut s = String::new();
            let _ = writeln!(s, "problem:                    {}", row.id);
            let _ = writeln!(s, "size:                       {} x {}", row.m, row.n);
            let _ = writeln!(s, "kappa_rel (exact):          {:.6e}", row.kappa_rel);
            if let Some(k) = row.kappa_kronecker_rel {
                let _ = writeln!(s, "kappa_rel (Jacobian route): {k:.6e}");
            }
            let _ = writeln!(s, "lower2_rel:                 {:.6e}", row.lower2_rel);
            let _ = writeln!(s, "upper2_rel:                 {}", fmt_opt_human(row.upper2_rel));
            let _ = writeln!(s, "upper1_rel:                 {:.6e}", row.upper1_rel);
            let _ = writeln!(s, "lower1_rel:                 {}", fmt_opt_human(row.lower1_rel));
            let _ = writeln!(s, "bg_rel:                     {:.6e}", row.bg_rel);
            let _ = writeln!(s, "gvl_rel:                    {}", fmt_opt_human(row.gvl_rel));
            let _ = writeln!(s, "sigma_np1/sigma_n:          {:.6e}", row.sigma_np1_over_sigma_n);
            let _ =
                writeln!(s, "sigma_np1/sigma_hat_n:      {:.6e}", row.sigma_np1_over_sigma_hat_n);
            let _ = writeln!(s, "sigma_1/sigma_hat_n:        {:.6e}", row.sigma_1_over_sigma_hat_n);
            let _ = writeln!(s, "alpha:                      {:.6e}", row.alpha);
            let _ = writeln!(s, "gap:                        {:.6e}", row.gap);
            let _ = writeln!(s, "consistent:                 {}", row.consistent);
            s
        }
    };
    Ok(Rendered::ok(text))
}

fn fmt_opt_human(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6e}"),
        None => "n/a".to_string(),
    }
}

#[derive(Serialize)]
struct BoundsOutput {
    id: String,
    #[serde(flatten)]
    bounds: BoundSet,
}

fn run_bounds(args: SolveArgs) -> Result<String, CliError> {
    let (p, id) = load_problem(&args.common.input)?;
    let sd = spectral_data(&p)?;
    let sol = solve_from_spectral(&p, &sd, args.common.tol_gap)?;
    let bounds = bound_report(&sd, &sol)?;
    let out = BoundsOutput { id, bounds };
    Ok(match args.common.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let b = &out.bounds;
            let mut s = String::from(
                "id,tail_lower,tail_upper,sharp_lower,sharp_upper,lower1,upper1,lower2,upper2,\
bg_upper_abs,bg_upper_rel,gvl_rel,rho\n",
            );
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                out.id,
                fmt_f64(b.tail_lower),
                fmt_f64(b.tail_upper),
                fmt_f64(b.sharp_lower),
                fmt_f64(b.sharp_upper),
                b.lower1.map(fmt_f64).unwrap_or_default(),
                fmt_f64(b.upper1),
                fmt_f64(b.lower2),
                b.upper2.map(fmt_f64).unwrap_or_default(),
                fmt_f64(b.bg_upper_abs),
                fmt_f64(b.bg_upper_rel),
                b.gvl_rel.map(fmt_f64).unwrap_or_default(),
                fmt_f64(b.rho),
            );
            s
        }
        Format::Human => {
            let b = &out.bounds;
            let mut s = String::new();
            let _ = writeln!(s, "problem:      {}", out.id);
            let _ = writeln!(s, "tail:         [{:.6e}, {:.6e}]", b.tail_lower, b.tail_upper);
            let _ = writeln!(s, "sharp:        [{:.6e}, {:.6e}]", b.sharp_lower, b.sharp_upper);
            let _ = writeln!(
                s,
                "coefficient:  [{}, {:.6e}]",
                fmt_opt_human(b.lower1),
                b.upper1
            );
            let _ = writeln!(
                s,
                "gap:          [{:.6e}, {}]",
                b.lower2,
                fmt_opt_human(b.upper2)
            );
            let _ = writeln!(s, "bg upper:     {:.6e} (rel {:.6e})", b.bg_upper_abs, b.bg_upper_rel);
            let _ = writeln!(s, "gvl rel:      {}", fmt_opt_human(b.gvl_rel));
            let _ = writeln!(s, "rho:          {:.6e}", b.rho);
            s
        }
    })
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<String, CliError> {
    if args.common.input.gen.is_none() {
        return Err(CliError::Usage("experiment requires --gen".into()));
    }
    if args.common.input.matrix.is_some() || args.common.input.rhs.is_some() {
        return Err(CliError::Usage("experiment takes a generator, not input files".into()));
    }
    let spec = generator_spec(&args.common.input)?;
    let opts = AnalyzeOptions {
        tol_gap: args.common.tol_gap,
        k_entry_cap: args.size_cap_k,
        include_kronecker: false,
    };
    let experiment = run_experiment(&spec, args.samples, args.common.input.seed, &opts)?;
    Ok(match args.common.format {
        Format::Json => to_json(&experiment)?,
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for record in &experiment.records {
                s.push_str(&record.to_csv_line());
                s.push('\n');
            }
            s
        }
        Format::Human => {
            let sum = &experiment.summary;
            let mut s = String::new();
            let _ = writeln!(s, "experiment: {}", sum.id);
            let _ = writeln!(
                s,
                "samples:    {} requested, {} ok, {} failed (base seed {})",
                sum.samples_requested, sum.samples_ok, sum.failures, sum.base_seed
            );
            let _ = writeln!(s, "{:<40} {:>6} {:>14} {:>14}", "metric", "count", "mean", "log10 mean");
            for m in &sum.metrics {
                let _ = writeln!(
                    s,
                    "{:<40} {:>6} {:>14.6e} {:>14.6}",
                    m.metric, m.count, m.mean, m.log10_mean
                );
            }
            s
        }
    })
}

#[derive(Serialize)]
struct VerifyOutput {
    id: String,
    kappa_closed: f64,
    kappa_kronecker: f64,
    kappa_bg: f64,
    kappa_fd: f64,
    exact_route_spread_rel: f64,
    fd_jacobian_rel_error: f64,
    expansion_slope: f64,
    routes_agree: bool,
    fd_matches: bool,
    slope_in_band: bool,
}

fn run_verify(args: VerifyArgs) -> Result<String, CliError> {
    let (p, id) = load_problem(&args.common.input)?;
    let sd = spectral_data(&p)?;
    let sol = solve_from_spectral(&p, &sd, args.common.tol_gap)?;

    let kc = kappa_closed(&sd)?;
    let kk = kappa_kronecker(&p, &sol, args.size_cap_k)?;
    let kb = kappa_bg_closed(&sd)?;
    let cfg = FdConfig {
        step: args.fd_step,
        scheme: match args.scheme {
            Scheme::Central => FdScheme::Central,
            Scheme::Forward => FdScheme::Forward,
        },
        max_inputs: 5000,
        tol_gap: args.common.tol_gap,
    };
    let kf = kappa_fd(&p, &cfg)?;

    let k = tlscond::conditioning::build_k(&p, &sol, args.size_cap_k)?;
    let j = fd_jacobian(&p, &cfg)?;
    let fd_err = spectral_norm(&(&j - &k))? / kc;

    let direction = seeded_unit_direction(p.nrows() * (p.ncols() + 1), args.common.input.seed);
    let slope = expansion_order_check(&p, &k, &direction, &default_epsilons())?;

    let spread = ((kc - kk).abs().max((kc - kb).abs())) / kc;
    let out = VerifyOutput {
        id,
        kappa_closed: kc,
        kappa_kronecker: kk,
        kappa_bg: kb,
        kappa_fd: kf,
        exact_route_spread_rel: spread,
        fd_jacobian_rel_error: fd_err,
        expansion_slope: slope,
        routes_agree: spread <= 1e-8,
        fd_matches: fd_err <= 1e-6,
        slope_in_band: (1.8..=2.2).contains(&slope),
    };
    Ok(match args.common.format {
        Format::Json => to_json(&out)?,
        Format::Csv => {
            let mut s = String::from(
                "id,kappa_closed,kappa_kronecker,kappa_bg,kappa_fd,exact_route_spread_rel,\
fd_jacobian_rel_error,expansion_slope,routes_agree,fd_matches,slope_in_band\n",
            );
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                out.id,
                fmt_f64(out.kappa_closed),
                fmt_f64(out.kappa_kronecker),
                fmt_f64(out.kappa_bg),
                fmt_f64(out.kappa_fd),
                fmt_f64(out.exact_route_spread_rel),
                fmt_f64(out.fd_jacobian_rel_error),
                fmt_f64(out.expansion_slope),
                out.routes_agree,
                out.fd_matches,
                out.slope_in_band,
            );
            s
        }
        Format::Human => {
            let mut s = String::new();
            let _ = writeln!(s, "problem:                 {}", out.id);
            let _ = writeln!(s, "kappa (closed formula):  {:.10e}", out.kappa_closed);
            let _ = writeln!(s, "kappa (Jacobian route):  {:.10e}", out.kappa_kronecker);
            let _ = writeln!(s, "kappa (BG formula):      {:.10e}", out.kappa_bg);
            let _ = writeln!(s, "kappa (finite diff):     {:.10e}", out.kappa_fd);
            let _ = writeln!(
                s,
                "exact-route spread:      {:.3e} ({})",
                out.exact_route_spread_rel,
                pass(out.routes_agree)
            );
            let _ = writeln!(
                s,
                "FD Jacobian rel error:   {:.3e} ({})",
                out.fd_jacobian_rel_error,
                pass(out.fd_matches)
            );
            let _ = writeln!(
                s,
                "expansion slope:         {:.4} ({})",
                out.expansion_slope,
                pass(out.slope_in_band)
            );
            s
        }
    })
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "off"
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}
