use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use blindsr2d::experiment::{
    emit_plotdata, exit, run_experiment, verify, ExperimentConfig, Mode, RandomShifts,
    ShiftSetting, RESULT_FILE,
};
use blindsr2d::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "blindsr2d",
    version,
    about = "Blind 2D super-resolution experiments"
)]
struct Cli {
    /// Worker threads (overrides BLINDSR2D_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance, run the selected pipelines and write artifacts.
    Run(RunArgs),
    /// Re-check the thresholds recorded in a result file.
    Verify {
        /// Run directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Result file, relative to the run directory.
        #[arg(long, default_value = RESULT_FILE)]
        result: PathBuf,
    },
    /// Rewrite the plot CSVs of a finished run.
    Emit {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Destination, relative to the run directory.
        #[arg(long, default_value = "plot")]
        dest: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dual,
    Grid,
    Both,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file (a run manifest works too).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference parameter set: fig1 or fig2.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    n: Option<usize>,
    /// Subspace dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Number of random shifts.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `random` or `tau:nu` pairs separated by commas.
    #[arg(long)]
    shifts: Option<String>,
    #[arg(long)]
    min_separation: Option<f64>,
    /// Super-resolution factors, comma separated.
    #[arg(long, value_delimiter = ',')]
    srf: Option<Vec<f64>>,
    #[arg(long)]
    grid_s_hat: Option<usize>,
    #[arg(long)]
    auto_support: bool,
    #[arg(long)]
    scan_grid: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    suppression_radius: Option<f64>,
    #[arg(long)]
    surface_csv_grid: Option<usize>,
    /// Skip the certificate verification.
    #[arg(long)]
    no_certificate: bool,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Primal and dual tolerance of the dual solver.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Iteration log of the dual solver, relative to the output directory.
    #[arg(long)]
    solver_log: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_shifts(text: &str) -> anyhow::Result<ShiftSetting> {
    if text.eq_ignore_ascii_case("random") {
        return Ok(ShiftSetting::Random(RandomShifts::Random));
    }
    let mut list = Vec::new();
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let Some((t, v)) = pair.split_once(':') else {
            bail!("shift {pair:?} is not of the form tau:nu");
        };
        list.push([t.trim().parse()?, v.trim().parse()?]);
    }
    if list.is_empty() {
        bail!("empty shift list");
    }
    Ok(ShiftSetting::Explicit(list))
}

fn build_config(args: RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok());
    if let Some(m) = args.mode {
        cfg.mode = match m {
            ModeArg::Dual => Mode::Dual,
            ModeArg::Grid => Mode::Grid,
            ModeArg::Both => Mode::Both,
        };
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(text) = &args.shifts {
        cfg.shifts = parse_shifts(text)?;
        if let ShiftSetting::Explicit(list) = &cfg.shifts {
            cfg.s = list.len();
        }
    }
    if let Some(s) = args.s {
        cfg.s = s;
    }
    if args.min_separation.is_some() {
        cfg.min_separation = args.min_separation;
    }
    if let Some(srf) = args.srf {
        cfg.srf = srf;
    }
    if args.grid_s_hat.is_some() {
        cfg.grid_s_hat = args.grid_s_hat;
    }
    if args.auto_support {
        cfg.auto_support = true;
    }
    if let Some(g) = args.scan_grid {
        cfg.scan_grid = g;
    }
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    if args.suppression_radius.is_some() {
        cfg.suppression_radius = args.suppression_radius;
    }
    if let Some(g) = args.surface_csv_grid {
        cfg.surface_csv_grid = g;
    }
    if args.no_certificate {
        cfg.certificate = false;
    }
    if let Some(it) = args.max_iters {
        cfg.solver.max_iters = it;
    }
    if let Some(eps) = args.eps {
        cfg.solver.eps_primal = eps;
        cfg.solver.eps_dual = eps;
    }
    if let Some(rho) = args.rho {
        cfg.solver.rho = rho;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(log) = args.solver_log {
        cfg.solver.log_path = Some(cfg.out.join(log));
    }
    Ok(cfg)
}

fn error_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_)) | Some(Error::Contract(_)) => exit::NOT_CONVERGED,
        _ => exit::USAGE,
    }
}

fn init_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("BLINDSR2D_THREADS") {
            Ok(v) if !v.is_empty() => Some(v.parse().context("BLINDSR2D_THREADS")?),
            _ => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Run(args) => {
            let cfg = build_config(args)?;
            let outcome = run_experiment(&cfg)?;
            for c in &outcome.result.checks {
                println!(
                    "{} {} = {:.6e} ({:?} {:.6e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.relation,
                    c.threshold
                );
            }
            println!(
                "wrote {} artifacts to {} in {:.1} s, exit {}",
                outcome.manifest.artifacts.len(),
                outcome.out_dir.display(),
                outcome.manifest.wall_time_s,
                outcome.exit_code
            );
            Ok(outcome.exit_code)
        }
        Command::Verify { out, result } => {
            let report = verify(&out.join(result))?;
            for c in &report.checks {
                println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
            for name in &report.inconsistent {
                println!("INCONSISTENT {name}");
            }
            Ok(if report.all_pass {
                exit::OK
            } else {
                exit::CHECK_FAILED
            })
        }
        Command::Emit { out, dest } => {
            let dest = out.join(dest);
            for name in emit_plotdata(&out, &dest)? {
                println!("{}", dest.join(name).display());
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_code(&err) as u8)
        }
    }
}
