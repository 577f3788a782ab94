use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use kwlab_core::energy::{bound_report, EnergyReport};
use kwlab_core::halfspace::{read_points_csv, residual_rows, sample_points, write_residuals_csv, FlatModelField};
use kwlab_core::invariant::profile::HeProfile;
use kwlab_core::reduced::{
    derive_reduced_system, indicial_expand, shoot_for_decay, write_profile_csv, IndicialOptions, ProfileRow, ShootSpec,
    ShotProfile,
};
use kwlab_core::suite::{emit_plotdata, run_suite, write_atomic, PlotTarget, SuiteConfig, SuiteId, SuiteReport};
use kwlab_core::{fault, GeometryConventions, InvariantField, KwError, Status};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "kwlab", version, about = "Verification suites for left-invariant Kapustin-Witten fields")]
struct Cli {
    /// Configuration file (TOML); command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed for sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override for one check id, e.g. `c_h.refined=1e-7`.
    #[arg(long = "tol", global = true, value_name = "ID=VALUE")]
    tol: Vec<String>,
    /// Output path (file or directory depending on the command).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print the machine-readable report on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, hide = true)]
    inject_hodge_flip: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Energy report of a model solution.
    Energy(EnergyArgs),
    /// Shoot for the decaying solution of the reduced ODE.
    Solve(SolveArgs),
    /// Pointwise residuals of a flat model.
    Residual(ResidualArgs),
    /// Write CSV plot data.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// algebra, models, decomposition, energy, solver or all.
    #[arg(long)]
    suite: Option<String>,
    /// Sample count for the decomposition suite.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct EnergyArgs {
    /// he, he-alternate or shot.
    #[arg(long, default_value = "he")]
    model: String,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    ymax: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Series start point.
    #[arg(long, default_value_t = 0.1)]
    y0: f64,
    /// Solver log (JSON) path.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Profile samples in the output CSV.
    #[arg(long, default_value_t = 400)]
    samples: usize,
}

#[derive(Args)]
struct ResidualArgs {
    /// nahm-pole, nahm-singular or nahm-singular-mirrored.
    #[arg(long, default_value = "nahm-pole")]
    model: String,
    /// CSV of points with columns x1,x2,x3,y; seeded points when absent.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    r_min: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// profiles, integrands or eps-sweep.
    #[arg(long)]
    target: String,
}

enum Failure {
    Usage(String),
    Io(String),
    Check(String),
}

impl From<KwError> for Failure {
    fn from(e: KwError) -> Self {
        match e {
            KwError::Io(_) => Failure::Io(e.to_string()),
            KwError::Config(_) | KwError::EmptySuite | KwError::InvalidQuadrature(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<SuiteConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => SuiteConfig::from_path(p).map_err(|e| match e {
            KwError::Io(io) => Failure::Io(format!("{}: {io}", p.display())),
            other => Failure::Usage(other.to_string()),
        })?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    for t in &cli.tol {
        let (id, v) = t
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--tol expects ID=VALUE, got '{t}'")))?;
        let v: f64 = v.parse().map_err(|_| Failure::Usage(format!("--tol value '{v}' is not a number")))?;
        cfg.set_tolerance(id, v).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str, print: bool) -> Result<(), Failure> {
    if let Some(p) = path {
        write_atomic(p, text.as_bytes()).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    if print {
        print!("{text}");
    }
    Ok(())
}

fn print_summary(report: &SuiteReport) {
    let mut out = std::io::stdout().lock();
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "info",
        };
        let _ = writeln!(out, "{status}  {:<44} {:.6e}", c.check_id, c.computed);
    }
    let _ = writeln!(
        out,
        "suite {}: {} passed, {} failed, {} info",
        report.suite, report.counts.pass, report.counts.fail, report.counts.info
    );
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<bool, Failure> {
    let mut cfg = load_config(cli)?;
    if let Some(s) = &args.suite {
        cfg.suite = s.parse::<SuiteId>().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(n) = args.n {
        cfg.samples = n;
    }
    if let Some(o) = &cli.out {
        cfg.output.report = Some(o.clone());
    }
    let report = run_suite(&cfg)?;
    let json = report.to_json()?;
    emit(cfg.output.report.as_deref(), &json, cli.json)?;
    if !cli.json {
        print_summary(&report);
    }
    for f in report.failures() {
        eprintln!("check failed: {} {}", f.check_id, f.note);
    }
    Ok(report.passed)
}

fn energy(cli: &Cli, args: &EnergyArgs) -> Result<bool, Failure> {
    let cfg = load_config(cli)?;
    let mut quad = cfg.quadrature_spec();
    quad.eps = args.eps.unwrap_or(quad.eps);
    quad.y_max = args.ymax.unwrap_or(quad.y_max);
    quad.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let conv = GeometryConventions::GOLDEN;
    let report: EnergyReport = match args.model.as_str() {
        "he" => bound_report(&conv, "he", &InvariantField::he(), Some(&HeProfile::A), &quad)?,
        "he-alternate" => bound_report(&conv, "he-alternate", &InvariantField::he_alternate(), Some(&HeProfile::AlternateA), &quad)?,
        "shot" => {
            let p = shoot(0.1)?;
            let a = p.component(0);
            bound_report(&conv, "shot", &p.field(), Some(&a), &quad)?
        }
        other => return Err(Failure::Usage(format!("unknown model '{other}' (he, he-alternate, shot)"))),
    };
    let mut checks = report.checks.clone();
    for c in &mut checks {
        if let Some(&t) = cfg.tolerances.get(&c.check_id) {
            *c = c.clone().with_tolerance(t);
        }
    }
    let report = EnergyReport { checks, ..report };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Check(e.to_string()))?;
    json.push('\n');
    emit(cli.out.as_deref(), &json, cli.json)?;
    if !cli.json {
        for e in &report.entries {
            println!("{:<32} {:.12e}  (± {:.1e})", e.name, e.value, e.error_estimate);
        }
        for c in &report.checks {
            println!("{:?}  {}", c.status, c.check_id);
        }
    }
    Ok(report.checks.iter().all(|c| c.passed()))
}

fn shoot(y0: f64) -> Result<Arc<ShotProfile>, Failure> {
    let sys = derive_reduced_system(&GeometryConventions::GOLDEN)?;
    let base = indicial_expand(&sys, 6, &IndicialOptions::default())?;
    let spec = ShootSpec { y0, ..ShootSpec::default() };
    let r = shoot_for_decay(&sys, &base, &spec)?;
    Ok(Arc::new(ShotProfile::new(&sys, &r, y0)?))
}

fn solve(cli: &Cli, args: &SolveArgs) -> Result<bool, Failure> {
    let sys = derive_reduced_system(&GeometryConventions::GOLDEN)?;
    let base = indicial_expand(&sys, 6, &IndicialOptions::default())?;
    let spec = ShootSpec { y0: args.y0, ..ShootSpec::default() };
    let r = shoot_for_decay(&sys, &base, &spec)?;
    let p = ShotProfile::new(&sys, &r, args.y0)?;
    let rows: Vec<ProfileRow> = kwlab_core::invariant::log_grid(1e-3, 30.0, args.samples.max(2))
        .into_iter()
        .map(|y| {
            let [a, b] = p.state(y);
            ProfileRow { y, a, b }
        })
        .collect();
    let mut csv = Vec::new();
    write_profile_csv(&mut csv, &rows)?;
    match &cli.out {
        Some(path) => write_atomic(path, &csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None if !cli.json => std::io::stdout().write_all(&csv).map_err(|e| Failure::Io(e.to_string()))?,
        None => {}
    }
    let mut log = serde_json::to_string_pretty(&r.log(&sys)).map_err(|e| Failure::Check(e.to_string()))?;
    log.push('\n');
    emit(args.log.as_deref(), &log, cli.json)?;
    if !cli.json {
        eprintln!("a2 = {:.12}, cut at y = {:.3}, K = {:.9}", r.parameter, r.y_cut, r.tail_constant);
    }
    Ok(true)
}

fn residual(cli: &Cli, args: &ResidualArgs) -> Result<bool, Failure> {
    let cfg = load_config(cli)?;
    let field = match args.model.as_str() {
        "nahm-pole" => FlatModelField::nahm_pole(),
        "nahm-singular" => FlatModelField::nahm_singular(),
        "nahm-singular-mirrored" => FlatModelField::nahm_singular_mirrored(),
        other => return Err(Failure::Usage(format!("unknown flat model '{other}'"))),
    };
    let points = match &args.points {
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            read_points_csv(f)?
        }
        None => sample_points(cfg.seed, args.n, args.r_min),
    };
    let rows = residual_rows(&field, &points);
    let mut csv = Vec::new();
    write_residuals_csv(&mut csv, &rows)?;
    match &cli.out {
        Some(path) => write_atomic(path, &csv).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(&csv).map_err(|e| Failure::Io(e.to_string()))?,
    }
    Ok(true)
}

fn plotdata(cli: &Cli, args: &PlotArgs) -> Result<bool, Failure> {
    let cfg = load_config(cli)?;
    let target: PlotTarget = args.target.parse().map_err(|e: KwError| Failure::Usage(e.to_string()))?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let path = emit_plotdata(target, &cfg, &dir).map_err(|e| match e {
        KwError::Io(_) => Failure::Io(format!("{}: {e}", dir.display())),
        other => Failure::from(other),
    })?;
    if !cli.json {
        println!("{}", path.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cfg!(feature = "negative-control") || cli.inject_hodge_flip {
        fault::set_hodge_flip(true);
    }
    let outcome = match &cli.command {
        Command::Verify(a) => verify(&cli, a),
        Command::Energy(a) => energy(&cli, a),
        Command::Solve(a) => solve(&cli, a),
        Command::Residual(a) => residual(&cli, a),
        Command::Plotdata(a) => plotdata(&cli, a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o error: {m}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Check(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
