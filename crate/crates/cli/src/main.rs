use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holoml::experiment::{self, Gap, Oversampling, RunConfig, SolverKind};
use holoml::solvers::InitMode;
use holoml::{HoloError, ReferenceKind};

/// Holographic phase retrieval: simulate, reconstruct, sweep, compare.
#[derive(Parser, Debug)]
#[command(name = "holoml", version)]
struct Cli {
    /// TOML run configuration; command line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one noisy measurement and write it with preview images.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Reconstruct a specimen from a measurement file.
    Reconstruct {
        /// Measurement written by `simulate`.
        #[arg(long)]
        measurement: PathBuf,
        /// Ground-truth array (`specimen.f64` from `simulate`) for the truth error.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        solver: Option<SolverKind>,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every combination of the configured axes and write a CSV table.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        /// Comma separated subset of cg, admm, inverse, wiener.
        #[arg(long, value_delimiter = ',')]
        solvers: Vec<SolverKind>,
        #[command(flatten)]
        solve: SolveArgs,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        threads: Option<usize>,
        /// Skip writing reconstructed images.
        #[arg(long)]
        no_images: bool,
    },
    /// Tabulate errors from reconstruct outputs or sweep tables.
    Compare {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Phantom names (disc, shepp-logan, cameraman) or image paths.
    #[arg(long = "specimen", value_delimiter = ',')]
    specimens: Vec<String>,
    /// Specimen side length in pixels.
    #[arg(long)]
    n: Option<usize>,
    /// none, block, ura, pinhole or pinhole:<radius>.
    #[arg(long = "reference", value_delimiter = ',')]
    references: Vec<ReferenceKind>,
    /// Pixels or multiples of n, e.g. 0,0.5n,n.
    #[arg(long = "gap", value_delimiter = ',')]
    gaps: Vec<Gap>,
    /// Ratios such as 2 or 2x1.5 (rows x columns).
    #[arg(long = "oversampling", value_delimiter = ',')]
    oversampling: Vec<Oversampling>,
    /// Odd beamstop block sizes; 0 disables it.
    #[arg(long = "beamstop", value_delimiter = ',')]
    beamstops: Vec<usize>,
    /// Mean photons per detector pixel; inf gives noiseless data.
    #[arg(long = "photon-flux", value_delimiter = ',')]
    photon_flux: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    primal_tol: Option<f64>,
    /// zeros or wiener.
    #[arg(long)]
    init: Option<String>,
    /// Fixed Wiener constant instead of the automatic one.
    #[arg(long)]
    wiener_lambda: Option<f64>,
}

fn set<T>(target: &mut Vec<T>, values: Vec<T>) {
    if !values.is_empty() {
        *target = values;
    }
}

impl DataArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.specimens, self.specimens);
        set(&mut cfg.references, self.references);
        set(&mut cfg.gaps, self.gaps);
        set(&mut cfg.oversampling, self.oversampling);
        set(&mut cfg.beamstops, self.beamstops);
        set(&mut cfg.photon_flux, self.photon_flux);
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.output {
            cfg.output = o;
        }
    }
}

impl SolveArgs {
    fn apply(self, cfg: &mut RunConfig) -> holoml::Result<()> {
        let s = &mut cfg.solver;
        if let Some(v) = self.max_iters {
            s.max_iters = v;
        }
        if let Some(v) = self.grad_tol {
            s.grad_tol = v;
        }
        if let Some(v) = self.rho {
            s.admm_rho = v;
        }
        if let Some(v) = self.primal_tol {
            s.admm_primal_tol = v;
        }
        if let Some(init) = self.init {
            s.init_mode = match init.as_str() {
                "zeros" => InitMode::Zeros,
                "wiener" | "wiener-warm-start" => InitMode::WienerWarmStart,
                other => return Err(HoloError::Config(format!("unknown init mode {other:?}"))),
            };
        }
        if self.wiener_lambda.is_some() {
            cfg.filter.wiener_lambda = self.wiener_lambda;
        }
        Ok(())
    }
}

fn base_config(path: Option<&PathBuf>) -> holoml::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> holoml::Result<()> {
    let mut cfg = base_config(cli.config.as_ref())?;
    match cli.command {
        Command::Simulate { data } => {
            data.apply(&mut cfg);
            let meas = experiment::cmd_simulate(&cfg)?;
            let g = meas.geometry();
            println!(
                "wrote {} ({}x{} detector, {} occluded, mean intensity {:.6e})",
                cfg.output.display(),
                g.m1,
                g.m2,
                meas.mask().occluded_count(),
                meas.mean_intensity()
            );
        }
        Command::Reconstruct { measurement, truth, solver, solve, output } => {
            if let Some(s) = solver {
                cfg.solvers = vec![s];
            } else if cfg.solvers.len() != 1 {
                cfg.solvers = vec![SolverKind::Cg];
            }
            solve.apply(&mut cfg)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            let out = experiment::cmd_reconstruct(&measurement, truth.as_deref(), &cfg)?;
            println!(
                "{}: {} iterations ({:?}), data error {}, truth error {}",
                cfg.solvers[0],
                out.result.iterations(),
                out.result.reason,
                fmt_opt(Some(out.report.data_relative_error)),
                fmt_opt(out.report.truth_relative_error)
            );
        }
        Command::Sweep { data, solvers, solve, threads, no_images } => {
            data.apply(&mut cfg);
            set(&mut cfg.solvers, solvers);
            solve.apply(&mut cfg)?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            if no_images {
                cfg.write_images = false;
            }
            let rows = experiment::cmd_sweep(&cfg)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "wrote {} rows to {} ({failed} failed)",
                rows.len(),
                cfg.output.join("sweep.csv").display()
            );
        }
        Command::Compare { paths } => {
            print!("{}", experiment::cmd_compare(&paths)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
