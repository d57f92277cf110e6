//! Command-line front end: coefficient tables, trajectories, initial-state
//! scans, coupling-versus-temperature curves, and single-shot solves of the
//! coherence-trapping condition.

// Validation predicates are written as `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cohtrap_core::dynamics::{evolve, BlochXY, CoefficientFlavor, Regime};
use cohtrap_core::kernels::{decay_rate_infinity, lamb_shift_infinity};
use cohtrap_core::sweeps::{self, format_float, Metadata, OutputFormat, SweepData, Tolerances};
use cohtrap_core::trapping::{lambda_curve, nonmonotonic_turning_point, solve_lambda};
use cohtrap_core::{BathSpec, ModelConfig};

use config::{echo_metadata, log_spaced, parse_format, parse_kind, LambdaSetting, RunConfig};

#[derive(Parser)]
#[command(
    name = "cohtrap",
    version,
    about = "Coherence dynamics and coherence trapping of a dissipative two-level system",
    after_help = "All frequencies, temperatures and rates are in units of the system \
                  transition frequency; times are in units of its inverse."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the Lamb shift and decoherence rate over time
    Coefficients(CommonArgs),
    /// Integrate Bloch trajectories from the configured initial states
    Evolve(CommonArgs),
    /// Map the steady coherence over the initial-state disk
    ScanInitial(CommonArgs),
    /// Solve the trapping coupling across a temperature range
    LambdaCurve(CommonArgs),
    /// Solve the trapping condition at a single parameter point
    Solve(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file: flat `key = value` lines with dotted sections
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (fallback: COHTRAP_WORKERS, then machine parallelism)
    #[arg(long)]
    workers: Option<usize>,
    /// Fail the command on any per-point error
    #[arg(long)]
    strict: bool,
    /// Lorentzian width of the bath spectrum
    #[arg(long)]
    gamma: Option<f64>,
    /// Lorentzian peak frequency of the bath spectrum
    #[arg(long)]
    omega0: Option<f64>,
    /// Bath temperature
    #[arg(long)]
    temperature: Option<f64>,
    /// Spectrum kind: exact-coth | high-temperature-limit
    #[arg(long)]
    kind: Option<String>,
    /// Coupling constant
    #[arg(long, conflicts_with = "lambda_auto")]
    lambda: Option<f64>,
    /// Solve the trapping condition for the coupling before running
    #[arg(long)]
    lambda_auto: bool,
    /// Integration horizon
    #[arg(long)]
    t_end: Option<f64>,
    /// Initial-state grid size (odd)
    #[arg(long)]
    grid_n: Option<usize>,
    /// Anchor time of the two-stage residue estimate
    #[arg(long)]
    t0: Option<f64>,
    /// Use the rotating-wave coefficients
    #[arg(long)]
    rwa: bool,
    /// Local ODE tolerance per unit time
    #[arg(long)]
    ode_tol: Option<f64>,
    /// Initial states as `x,y;x,y;...` (evolve)
    #[arg(long)]
    initials: Option<String>,
    /// Lowest curve temperature (lambda-curve)
    #[arg(long)]
    t_min: Option<f64>,
    /// Highest curve temperature (lambda-curve)
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of log-spaced curve temperatures (lambda-curve)
    #[arg(long)]
    points: Option<usize>,
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.omega0 {
        cfg.omega0 = v;
    }
    if let Some(v) = args.temperature {
        cfg.temperature = v;
    }
    if let Some(v) = &args.kind {
        cfg.kind = parse_kind(v)?;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = LambdaSetting::Fixed(v);
    }
    if args.lambda_auto {
        cfg.lambda = LambdaSetting::Auto;
    }
    if let Some(v) = args.t_end {
        cfg.t_end = Some(v);
    }
    if let Some(v) = args.grid_n {
        cfg.grid_n = v;
    }
    if let Some(v) = args.t0 {
        cfg.t0 = Some(v);
    }
    if args.rwa {
        cfg.rwa = true;
    }
    if let Some(v) = args.ode_tol {
        cfg.ode_tol = v;
    }
    if let Some(v) = &args.initials {
        cfg.initials = config::parse_initials(v)?;
    }
    if let Some(v) = args.t_min {
        cfg.curve_t_min = v;
    }
    if let Some(v) = args.t_max {
        cfg.curve_t_max = v;
    }
    if let Some(v) = args.points {
        cfg.curve_points = v;
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = &args.format {
        cfg.format = parse_format(v)?;
    }
    if let Some(v) = args.workers {
        cfg.workers = Some(v);
    }
    if args.strict {
        cfg.strict = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn worker_count(cfg: &RunConfig) -> Option<usize> {
    cfg.workers.or_else(|| {
        std::env::var("COHTRAP_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

/// Resolve the coupling constant, solving the trapping condition when the
/// configuration asks for it.
fn resolve_lambda(cfg: &RunConfig, bath: &BathSpec) -> Result<f64, String> {
    match cfg.lambda {
        LambdaSetting::Fixed(l) => Ok(l),
        LambdaSetting::Auto => {
            let trap =
                solve_lambda(bath, cfg.omega, &cfg.quadrature()).map_err(|e| e.to_string())?;
            match trap.lambda_star {
                Some(l) => {
                    println!(
                        "solved trapping coupling: lambda = {} (I = {}, {})",
                        format_float(l),
                        format_float(trap.pv_integral),
                        if trap.indeterminate { "near threshold" } else { "well determined" },
                    );
                    Ok(l)
                }
                None => Err(format!(
                    "trapping condition has no solution here: I = {} <= 0",
                    format_float(trap.pv_integral)
                )),
            }
        }
    }
}

/// Horizon default: fifty asymptotic relaxation times.
fn resolve_t_end(cfg: &RunConfig, model: &ModelConfig, bath: &BathSpec) -> Result<f64, String> {
    if let Some(t) = cfg.t_end {
        return Ok(t);
    }
    let g_inf = decay_rate_infinity(model, bath);
    if g_inf > 0.0 {
        Ok(50.0 / g_inf)
    } else {
        Err("run.t_end must be set explicitly when the asymptotic decay rate vanishes".into())
    }
}

fn out_path(cfg: &RunConfig, stem: &str) -> PathBuf {
    let ext = match cfg.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.{ext}")))
}

fn echo_for_csv(cfg: &RunConfig, meta: &Metadata) {
    if cfg.format == OutputFormat::Csv {
        print!("{}", echo_metadata(meta));
    }
}

fn cmd_coefficients(cfg: &RunConfig) -> Result<ExitCode, String> {
    let bath = cfg.bath()?;
    let lambda = resolve_lambda(cfg, &bath)?;
    let model = cfg.model(lambda)?;
    let t_end = resolve_t_end(cfg, &model, &bath)?;
    let q = cfg.quadrature();

    let table = sweeps::coefficient_series(&model, &bath, t_end, &q, cfg.flavor())
        .map_err(|e| e.to_string())?;
    let mut meta = cfg.metadata(lambda, Some(t_end));
    meta.insert("product.rows".into(), table.times().len().to_string());

    let path = out_path(cfg, "coefficients");
    sweeps::write_results(
        &SweepData::Coefficients { table: &table, metadata: &meta },
        &path,
        cfg.format,
    )
    .map_err(|e| e.to_string())?;
    echo_for_csv(cfg, &meta);

    let g_inf = decay_rate_infinity(&model, &bath);
    match cfg.flavor() {
        CoefficientFlavor::Full => {
            let d_inf = lamb_shift_infinity(&model, &bath, &q).map_err(|e| e.to_string())?;
            let regime = match cohtrap_core::dynamics::classify_regime(&table, t_end)
                .map_err(|e| e.to_string())?
            {
                Regime::Biexponential => "biexponential",
                Regime::Oscillatory { degenerate: false } => "oscillatory",
                Regime::Oscillatory { degenerate: true } => "oscillatory (degenerate)",
            };
            println!(
                "Delta(inf) = {} +/- {}, Gamma(inf) = {}, regime at t_end: {regime}",
                format_float(d_inf.value),
                format_float(d_inf.error_estimate),
                format_float(g_inf),
            );
        }
        CoefficientFlavor::Rwa => {
            println!(
                "Delta_rwa(t_end) = {}, Gamma_rwa(t_end) = {} (golden-rule limit {})",
                format_float(*table.delta_samples().last().unwrap()),
                format_float(*table.gamma_samples().last().unwrap()),
                format_float(g_inf),
            );
        }
    }
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_evolve(cfg: &RunConfig) -> Result<ExitCode, String> {
    let bath = cfg.bath()?;
    let lambda = resolve_lambda(cfg, &bath)?;
    let model = cfg.model(lambda)?;
    let t_end = resolve_t_end(cfg, &model, &bath)?;
    let tol = Tolerances { ode_tol: cfg.ode_tol, quadrature: cfg.quadrature() };

    let initials: Vec<BlochXY> = cfg
        .initials
        .iter()
        .map(|&(x, y)| BlochXY::new(x, y).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let table = sweeps::coefficient_series(&model, &bath, t_end, &tol.quadrature, cfg.flavor())
        .map_err(|e| e.to_string())?;
    let t0 = cfg.resolved_t0();
    let base = out_path(cfg, "trajectory");

    let mut meta_common = cfg.metadata(lambda, Some(t_end));
    meta_common.insert("dynamics.tau_bath".into(), format_float(1.0 / bath.gamma));
    let g_inf = decay_rate_infinity(&model, &bath);
    if g_inf > 0.0 {
        meta_common.insert("dynamics.tau_system".into(), format_float(1.0 / g_inf));
    }

    for (idx, &r0) in initials.iter().enumerate() {
        let traj = evolve(r0, &table, t_end, cfg.ode_tol).map_err(|e| e.to_string())?;
        let mut meta = meta_common.clone();
        meta.insert("initial.x".into(), format_float(r0.x));
        meta.insert("initial.y".into(), format_float(r0.y));
        if let Some(s) = traj.steady {
            meta.insert("steady.t_detect".into(), format_float(s.t_detect));
            meta.insert("steady.x_inf".into(), format_float(s.x_inf));
            meta.insert("steady.y_inf".into(), format_float(s.y_inf));
        }

        let path = if initials.len() == 1 {
            base.clone()
        } else {
            let stem = base.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let ext = base.extension().unwrap_or_default().to_string_lossy().into_owned();
            base.with_file_name(format!("{stem}_{idx}.{ext}"))
        };
        sweeps::write_results(
            &SweepData::Trajectory { trajectory: &traj, metadata: &meta },
            &path,
            cfg.format,
        )
        .map_err(|e| e.to_string())?;

        let x_converged =
            traj.steady.map(|s| s.x_inf).unwrap_or_else(|| traj.states.last().unwrap().x);
        match cohtrap_core::dynamics::residue_estimate(&traj, &table, t0, &model, &bath) {
            Ok(est) => println!(
                "initial ({}, {}): residue estimate {} vs converged |x| = {} -> wrote {}",
                format_float(r0.x),
                format_float(r0.y),
                format_float(est),
                format_float(x_converged.abs()),
                path.display(),
            ),
            Err(_) => println!(
                "initial ({}, {}): converged |x| = {} (no residue estimate at zero decay rate) -> wrote {}",
                format_float(r0.x),
                format_float(r0.y),
                format_float(x_converged.abs()),
                path.display(),
            ),
        }
    }
    echo_for_csv(cfg, &meta_common);
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan_initial(cfg: &RunConfig) -> Result<ExitCode, String> {
    let bath = cfg.bath()?;
    let lambda = resolve_lambda(cfg, &bath)?;
    let model = cfg.model(lambda)?;
    let t_end = resolve_t_end(cfg, &model, &bath)?;
    let tol = Tolerances { ode_tol: cfg.ode_tol, quadrature: cfg.quadrature() };

    let mut scan =
        sweeps::scan_initial_states(&model, &bath, cfg.grid_n, t_end, &tol, cfg.flavor())
            .map_err(|e| e.to_string())?;
    for (k, v) in cfg.metadata(lambda, Some(t_end)) {
        scan.metadata.entry(k).or_insert(v);
    }

    let path = out_path(cfg, "scan");
    sweeps::write_results(&SweepData::Grid(&scan), &path, cfg.format).map_err(|e| e.to_string())?;
    echo_for_csv(cfg, &scan.metadata);

    // Maximum steady coherence and its grid location.
    let mut best = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for (i, &x0) in scan.x0_axis.iter().enumerate() {
        for (j, &y0) in scan.y0_axis.iter().enumerate() {
            if let Some(c) = scan.at(i, j) {
                if c > best.2 {
                    best = (x0, y0, c);
                }
            }
        }
    }
    println!(
        "max C(inf) = {} at initial state ({}, {}); grid asymmetry {}",
        format_float(best.2),
        format_float(best.0),
        format_float(best.1),
        scan.metadata.get("scan.max_asymmetry").map(String::as_str).unwrap_or("n/a"),
    );

    // Symmetry-axis slope, using the linearity of the dynamics: the map is
    // |a x0 + b y0| with (a, b) measured by two probe evolutions.
    if cfg.flavor() == CoefficientFlavor::Full {
        let table = sweeps::coefficient_series(&model, &bath, t_end, &tol.quadrature, cfg.flavor())
            .map_err(|e| e.to_string())?;
        let probe = |x0: f64, y0: f64| -> Result<f64, String> {
            let traj = evolve(BlochXY { x: x0, y: y0 }, &table, t_end, cfg.ode_tol)
                .map_err(|e| e.to_string())?;
            Ok(traj.steady.map(|s| s.x_inf).unwrap_or_else(|| traj.states.last().unwrap().x))
        };
        let a = probe(0.5, 0.0)? / 0.5;
        let b = probe(0.0, 0.5)? / 0.5;
        if b.abs() > 1e-12 {
            println!(
                "measured symmetry-axis slope (nodal line of x_inf): {}",
                format_float(-a / b)
            );
        } else {
            println!("measured symmetry axis: x0 = 0 (vertical)");
        }
    }

    let failures: usize =
        scan.metadata.get("scan.failures").and_then(|v| v.parse().ok()).unwrap_or(0);
    println!("wrote {}", path.display());
    if failures > 0 {
        eprintln!("warning: {failures} grid points failed and are absent from the map");
        if cfg.strict {
            return Err(format!("{failures} grid points failed (strict mode)"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_lambda_curve(cfg: &RunConfig) -> Result<ExitCode, String> {
    let bath = cfg.bath()?;
    let temps = log_spaced(cfg.curve_t_min, cfg.curve_t_max, cfg.curve_points);
    let q = cfg.quadrature();
    let points = lambda_curve(&bath, &temps, cfg.omega, &q).map_err(|e| e.to_string())?;

    let mut meta = cfg.metadata(0.0, None);
    meta.remove("model.lambda");
    meta.remove("model.lambda_mode");
    meta.insert("curve.t_min".into(), format_float(cfg.curve_t_min));
    meta.insert("curve.t_max".into(), format_float(cfg.curve_t_max));
    meta.insert("curve.points".into(), cfg.curve_points.to_string());

    let path = out_path(cfg, "lambda_curve");
    sweeps::write_results(&SweepData::Curve { points: &points, metadata: &meta }, &path, cfg.format)
        .map_err(|e| e.to_string())?;
    echo_for_csv(cfg, &meta);

    let feasible: Vec<&cohtrap_core::trapping::CurvePoint> =
        points.iter().filter(|p| p.trap().map(|t| t.feasible).unwrap_or(false)).collect();
    let failed = points.iter().filter(|p| p.result.is_err()).count();
    match (feasible.first(), feasible.last()) {
        (Some(first), Some(last)) if feasible.len() == points.len() => println!(
            "feasible across the whole range T in [{}, {}]",
            format_float(first.temperature),
            format_float(last.temperature)
        ),
        (Some(first), Some(last)) => println!(
            "feasible on a subrange: first feasible T = {}, last feasible T = {} ({} of {} points)",
            format_float(first.temperature),
            format_float(last.temperature),
            feasible.len(),
            points.len()
        ),
        _ => println!("no feasible point in the configured temperature range"),
    }
    match nonmonotonic_turning_point(&points) {
        Ok(Some(t)) => println!("interior maximum of lambda(T) at T = {}", format_float(t)),
        Ok(None) => println!("lambda(T) is monotone over the feasible points"),
        Err(_) => println!("too few feasible points to locate a turning point"),
    }
    println!("wrote {}", path.display());
    if failed > 0 {
        eprintln!("warning: {failed} temperature points failed");
        if cfg.strict {
            return Err(format!("{failed} temperature points failed (strict mode)"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(cfg: &RunConfig) -> Result<ExitCode, String> {
    let bath = cfg.bath()?;
    let q = cfg.quadrature();
    let trap = solve_lambda(&bath, cfg.omega, &q).map_err(|e| e.to_string())?;
    println!(
        "I = {} +/- {}",
        format_float(trap.pv_integral),
        format_float(trap.error_estimate)
    );
    if trap.indeterminate {
        println!("feasibility: indeterminate near threshold (|I| within 10 error bounds of zero)");
    } else if trap.feasible {
        println!("feasibility: feasible");
    } else {
        println!("feasibility: infeasible (I <= 0, no trapping coupling exists)");
    }
    if let Some(l) = trap.lambda_star {
        println!("lambda = {}", format_float(l));
        let model = cfg.model(l)?;
        let round = lamb_shift_infinity(&model, &bath, &q).map_err(|e| e.to_string())?;
        println!(
            "round trip: Delta(inf; lambda) = {} (target {})",
            format_float(round.value),
            format_float(-cfg.omega)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Coefficients(a)
        | Command::Evolve(a)
        | Command::ScanInitial(a)
        | Command::LambdaCurve(a)
        | Command::Solve(a) => a,
    };
    let cfg = build_config(args)?;

    let run_command = || match &cli.command {
        Command::Coefficients(_) => cmd_coefficients(&cfg),
        Command::Evolve(_) => cmd_evolve(&cfg),
        Command::ScanInitial(_) => cmd_scan_initial(&cfg),
        Command::LambdaCurve(_) => cmd_lambda_curve(&cfg),
        Command::Solve(_) => cmd_solve(&cfg),
    };

    match worker_count(&cfg) {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| format!("cannot build worker pool: {e}"))?;
            pool.install(run_command)
        }
        None => run_command(),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
