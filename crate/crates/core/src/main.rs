use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kinetic_spectra::acceptance::{self, AcceptanceOptions, DEFAULT_SEED};
use kinetic_spectra::config::{Check, GridConfig, OutputFormat, RunConfig, SurfaceConfig};
use kinetic_spectra::operator::TruncationPolicy;
use kinetic_spectra::run::run;

#[derive(Parser)]
#[command(name = "kbm", version, about = "Spectral lab for the kinetic Brownian motion generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a surface spectrum and write tables and reports.
    Run(Box<RunArgs>),
    /// Run the acceptance suite and print one line per criterion.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SurfaceKind {
    Sphere,
    Torus,
    Custom,
}

/// Flags override the values read from `--config`; the defaults shown are
/// the ones used when neither is given.
#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,

    /// Surface model [default: sphere].
    #[arg(long, value_enum)]
    surface: Option<SurfaceKind>,
    /// Curvature K for sphere and custom surfaces [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    curvature: Option<f64>,
    /// Largest l of the sphere spectrum [default: 2].
    #[arg(long)]
    l_max: Option<u32>,
    /// Side length of the square torus [default: 2 pi].
    #[arg(long)]
    side: Option<f64>,
    /// Largest torus eigenvalue kept [default: 2.5].
    #[arg(long)]
    eta_cap: Option<f64>,
    /// CSV file of `eta,multiplicity` rows for a custom surface.
    #[arg(long)]
    spectrum_file: Option<PathBuf>,

    /// log10 of the first gamma [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    log_start: Option<f64>,
    /// log10 of the last gamma [default: 4].
    #[arg(long)]
    log_end: Option<f64>,
    /// Number of log-spaced gammas [default: 101].
    #[arg(long)]
    points: Option<usize>,
    /// Explicit ascending gamma list, replaces the log grid.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,

    /// Fixed truncation k_max for unbounded ladders.
    #[arg(long, conflicts_with = "adaptive_tol")]
    k_max: Option<i64>,
    /// Adaptive truncation tolerance [default: 1e-10].
    #[arg(long)]
    adaptive_tol: Option<f64>,

    /// Contour radius around 0 [default: 0.5].
    #[arg(long)]
    contour_radius: Option<f64>,
    /// Contour quadrature nodes [default: 64].
    #[arg(long)]
    contour_nodes: Option<usize>,

    /// Output directory [default: kbm-out].
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output formats [default: csv,json].
    #[arg(long, value_delimiter = ',', value_enum)]
    format: Option<Vec<Format>>,
    /// Seed for randomized checks [default: 20240917].
    #[arg(long)]
    seed: Option<u64>,
    /// Diagnostic suites [default: all].
    #[arg(long, value_delimiter = ',', value_enum)]
    checks: Option<Vec<CheckArg>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Accretivity,
    Casimir,
    SlotZeroBound,
    PerturbationRadius,
    Mixing,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Multiply every tolerance; values far below 1 make the suite fail on
    /// purpose.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Also write the outcomes as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn apply(args: &RunArgs, config: &mut RunConfig) {
    let (curvature, l_max, side, eta_cap, path) = match &config.surface {
        SurfaceConfig::Sphere { curvature, l_max } => (*curvature, *l_max, 2.0 * std::f64::consts::PI, 2.5, None),
        SurfaceConfig::Torus { side, eta_cap } => (1.0, 2, *side, *eta_cap, None),
        SurfaceConfig::Custom { curvature, path } => (*curvature, 2, 2.0 * std::f64::consts::PI, 2.5, Some(path.clone())),
    };
    let kind = args.surface.unwrap_or(match config.surface {
        SurfaceConfig::Sphere { .. } => SurfaceKind::Sphere,
        SurfaceConfig::Torus { .. } => SurfaceKind::Torus,
        SurfaceConfig::Custom { .. } => SurfaceKind::Custom,
    });
    let curvature = args.curvature.unwrap_or(curvature);
    config.surface = match kind {
        SurfaceKind::Sphere => SurfaceConfig::Sphere { curvature, l_max: args.l_max.unwrap_or(l_max) },
        SurfaceKind::Torus => SurfaceConfig::Torus {
            side: args.side.unwrap_or(side),
            eta_cap: args.eta_cap.unwrap_or(eta_cap),
        },
        SurfaceKind::Custom => SurfaceConfig::Custom {
            curvature,
            path: args.spectrum_file.clone().or(path).unwrap_or_default(),
        },
    };

    if let Some(values) = &args.gammas {
        config.gamma_grid = GridConfig::Explicit { values: values.clone() };
    } else if args.log_start.is_some() || args.log_end.is_some() || args.points.is_some() {
        let (s, e, p) = match config.gamma_grid {
            GridConfig::Log { log_start, log_end, points } => (log_start, log_end, points),
            GridConfig::Explicit { .. } => (0.0, 4.0, 101),
        };
        config.gamma_grid = GridConfig::Log {
            log_start: args.log_start.unwrap_or(s),
            log_end: args.log_end.unwrap_or(e),
            points: args.points.unwrap_or(p),
        };
    }

    if let Some(k_max) = args.k_max {
        config.truncation = TruncationPolicy::Fixed { k_max };
    }
    if let Some(tol) = args.adaptive_tol {
        config.truncation = TruncationPolicy::Adaptive { tol };
    }
    if let Some(r) = args.contour_radius {
        config.contour.radius = r;
    }
    if let Some(n) = args.contour_nodes {
        config.contour.nodes = n;
    }
    if let Some(dir) = &args.output {
        config.output.directory = dir.clone();
    }
    if let Some(formats) = &args.format {
        config.output.formats = formats
            .iter()
            .map(|f| match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            })
            .collect();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(checks) = &args.checks {
        config.checks = checks
            .iter()
            .map(|c| match c {
                CheckArg::Accretivity => Check::Accretivity,
                CheckArg::Casimir => Check::Casimir,
                CheckArg::SlotZeroBound => Check::SlotZeroBound,
                CheckArg::PerturbationRadius => Check::PerturbationRadius,
                CheckArg::Mixing => Check::Mixing,
            })
            .collect();
    }
}

fn run_command(args: Box<RunArgs>) -> ExitCode {
    let mut config = match &args.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => RunConfig::default(),
    };
    apply(&args, &mut config);
    if args.print_config {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let outcome = run(&config);
    for s in &outcome.summaries {
        println!(
            "eta {:<10} m {:<3} |lambda - eta| at gamma {:.0e}: {:.3e}  tail monotone {}  r_hat {}",
            s.eta,
            s.multiplicity,
            s.gamma_max,
            s.error_at_gamma_max,
            s.monotone_tail,
            s.empirical_r.map_or("-".into(), |r| format!("{r:.4}")),
        );
    }
    for e in &outcome.errors {
        eprintln!("error [{}] {}: {}", e.stage, e.kind, e.message);
    }
    eprintln!("{} files in {} ({:.2?})", outcome.files.len(), config.output.directory.display(), start.elapsed());
    if outcome.success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn selftest(args: SelftestArgs) -> ExitCode {
    let opts = AcceptanceOptions { seed: args.seed, tolerance_scale: args.tolerance_scale };
    let mut outcomes = Vec::new();
    for criterion in acceptance::CRITERIA {
        let start = Instant::now();
        let o = criterion(&opts);
        println!("{o}");
        eprintln!("    ({:.2?})", start.elapsed());
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&outcomes).expect("outcomes serialize");
        if let Err(e) = std::fs::write(path, text + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args),
        Command::Selftest(args) => selftest(args),
    }
}
