use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pego_core::benchmarks::Synthetic;
use pego_core::bounds::{case_sign_agreement, log_spaced, sweep_nugget, sweep_to_csv, MigConstants};
use pego_core::ei_grid::{run_ei_grid, EiGridConfig, SampleSource};
use pego_core::experiment::{median_curves, run_bench, AggregateReport, ExperimentConfig, PRESET_NAMES};
use pego_core::kernels::{KernelParams, Smoothness};
use pego_core::plot::{line_chart, Series};

#[derive(Parser)]
#[command(name = "pego", version, about = "Practical EGO experiments and regret-bound sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single optimization and write its trace.
    Run(RunArgs),
    /// Run replicated experiments and aggregate average regret.
    Bench(BenchArgs),
    /// Sweep the cumulative-regret bound over nuggets and horizons.
    Bounds(BoundsArgs),
    /// Dump EI surfaces of one sample set refit under several nuggets.
    EiGrid(EiGridArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named protocol preset.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated nugget values overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Replication count override.
    #[arg(long)]
    reps: Option<usize>,
    /// Run replications on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Se,
    Matern,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum, default_value = "se")]
    kernel: KernelArg,
    /// Comma-separated horizons.
    #[arg(long = "horizons", value_delimiter = ',', default_value = "100,10000,1000000")]
    horizons: Vec<f64>,
    /// Comma-separated ascending nuggets; defaults to 201 log-spaced values on [1e-10, 1].
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// JSON file with information-gain constants; defaults to unit constants.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// RKHS norm bound.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Ego,
    Random,
}

#[derive(Args)]
struct EiGridArgs {
    #[arg(long, default_value = "branin")]
    benchmark: String,
    #[arg(long, value_enum, default_value = "ego")]
    source: SourceArg,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-6,1e-10")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    resolution: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Failure(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => ExperimentConfig::preset(name)
            .ok_or_else(|| usage(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", "))))?,
        (None, None) => return Err(usage("one of --config or --preset is required")),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(eps) = &args.eps {
        cfg.eps = eps.clone();
    }
    Ok(cfg)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.common)?;
    cfg.reps = 1;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let eps = cfg.eps[0];
    let trace = cfg.run_one(eps, 0)?;
    let csv = trace.to_csv();
    match &args.common.out {
        Some(dir) => write_out(dir, "trace.csv", &csv)?,
        None => print!("{csv}"),
    }
    let last = trace.rows.last().expect("n_iter >= 1");
    eprintln!(
        "{} eps={eps:e} seed={}: f_plus={:.6} f*={:.6} R_T={:.6} R_T/T={:.6}",
        cfg.benchmark,
        cfg.base_seed,
        last.f_plus,
        trace.f_star,
        last.cumulative_regret,
        last.cumulative_regret / last.t as f64
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.common)?;
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let outcome = run_bench(&cfg, !args.serial)?;
    let report = AggregateReport::from_outcome(&outcome)?;
    let table = report.format_table();
    print!("{table}");
    if let Some(dir) = &args.common.out {
        write_out(dir, "report.csv", &report.to_csv())?;
        write_out(dir, "table.txt", &table)?;
        write_out(dir, "config.json", &cfg.to_json())?;
        let series: Vec<Series> = median_curves(&outcome)
            .into_iter()
            .map(|(eps, curve)| Series {
                label: format!("eps={eps:e}"),
                points: curve.iter().enumerate().map(|(t, v)| ((t + 1) as f64, *v)).collect(),
            })
            .collect();
        let title = format!("{}: median R_t/t", cfg.benchmark);
        write_out(dir, "median_regret.svg", &line_chart(&title, &series, false, true))?;
    }
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let mc = match &args.constants {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let mc: MigConstants =
                serde_json::from_str(&text).map_err(|e| usage(format!("bad constants file: {e}")))?;
            mc.validate().map_err(|e| usage(e.to_string()))?;
            mc
        }
        None => match args.kernel {
            KernelArg::Se => MigConstants::unit_se(2),
            KernelArg::Matern => MigConstants::unit_matern(2.5, 3),
        },
    };
    let eps = args.eps.unwrap_or_else(|| log_spaced(1e-10, 1.0, 201));
    if eps.is_empty() {
        return Err(usage("the nugget grid is empty"));
    }
    if args.horizons.is_empty() {
        return Err(usage("no horizons given"));
    }
    let rows = sweep_nugget(&args.horizons, &eps, args.b, &mc).map_err(|e| usage(e.to_string()))?;
    let csv = sweep_to_csv(&rows);
    let agree = case_sign_agreement(&rows);
    match &args.out {
        Some(dir) => {
            write_out(dir, "sweep.csv", &csv)?;
            let series: Vec<Series> = args
                .horizons
                .iter()
                .map(|&t| Series {
                    label: format!("T={t:e}"),
                    points: rows.iter().filter(|r| r.t == t).map(|r| (r.eps, r.u_t)).collect(),
                })
                .collect();
            let title = format!("{} bound u_T vs nugget", mc.label());
            write_out(dir, "sweep.svg", &line_chart(&title, &series, true, true))?;
        }
        None => print!("{csv}"),
    }
    eprintln!(
        "{} cells, {} labeled interior cells, {} agree with the sign of dc_T/deps",
        rows.len(),
        agree.labeled,
        agree.agreeing
    );
    Ok(())
}

fn cmd_ei_grid(args: EiGridArgs) -> Result<(), CliError> {
    let bench = Synthetic::from_name(&args.benchmark)
        .ok_or_else(|| usage(format!("unknown benchmark {:?}", args.benchmark)))?;
    if bench.dim() != 2 {
        return Err(usage(format!("{} is not two-dimensional", args.benchmark)));
    }
    if args.resolution == 0 {
        return Err(usage("resolution must be at least 1"));
    }
    let source = match args.source {
        SourceArg::Ego => SampleSource::Ego {
            n_init: 25,
            n_iter: 25,
            reference_eps: 1e-6,
        },
        SourceArg::Random => SampleSource::Random { n: 50 },
    };
    let mut cfg = EiGridConfig::new(bench, source, KernelParams::matern(Smoothness::FiveHalves, 0.2)?);
    cfg.eps = args.eps;
    cfg.resolution = args.resolution;
    cfg.seed = args.seed;
    let result = run_ei_grid(&cfg)?;
    let maxima = result.maxima_csv();
    print!("{maxima}");
    if let Some(dir) = &args.out {
        write_out(dir, "ei_grid.csv", &result.to_csv())?;
        write_out(dir, "ei_maxima.csv", &maxima)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::EiGrid(a) => cmd_ei_grid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
