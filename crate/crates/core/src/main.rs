use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphon_hawkes::experiments::{self, output, ExperimentConfig};
use graphon_hawkes::Error;

#[derive(Parser)]
#[command(name = "graphon-hawkes", version, about = "Nonlinear Hawkes processes on graphon random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the subcriticality report and the dilution advisory.
    Check(Common),
    /// Stationary profile and macroscopic trajectories.
    Macro(Common),
    /// Long-time stability window over sizes and replicas.
    Stability(Common),
    /// Finite-time distance to the macroscopic current.
    FiniteTime(Common),
    /// Sweep of the memory mass across the critical point.
    Phase(Common),
    /// Scaling of the compensated noise with network size.
    Noise(Common),
    /// Degree concentration, S_max and kernel regularity sums.
    GraphDiag(Common),
    /// Write gnuplot scripts for the tables in an output directory.
    Plot {
        /// Config file (its output directory is used) or the directory itself.
        source: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file (.toml or .json) or `preset:<name>`.
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(threads) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Check(c) => {
            let cfg = c.load()?;
            let result = experiments::run_check(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            println!("{}", serde_json::to_string(&result.stability).map_err(|e| Error::Config(e.to_string()))?);
            for row in &result.dilution {
                log::info!("N = {}: dilution {:?} (general {:.3}, bounded {:.3})", row.n, row.verdict, row.general, row.bounded);
            }
            if !result.stability.is_subcritical {
                return Err(Error::Supercritical {
                    product: result.stability.subcritical_product,
                });
            }
        }
        Command::Macro(c) => {
            let cfg = c.load()?;
            let result = experiments::run_macro(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            println!("{}", serde_json::to_string(&result.summary).map_err(|e| Error::Config(e.to_string()))?);
        }
        Command::Stability(c) => {
            let cfg = c.load()?;
            let result = experiments::run_stability(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            println!("t_eps = {}", result.t_eps);
            for row in &result.summary {
                println!("N = {}: clean share {:.2} (current), {:.2} (intensity)", row.n, row.clean_share, row.clean_share_ell);
            }
        }
        Command::FiniteTime(c) => {
            let cfg = c.load()?;
            let result = experiments::run_finite_time(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            for row in &result.medians {
                println!("N = {}: median sup error {:.5}", row.n, row.median);
            }
            println!("slope = {:?}", result.slope);
        }
        Command::Phase(c) => {
            let cfg = c.load()?;
            let result = experiments::run_phase(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            for row in &result.rows {
                println!(
                    "|h|_1 = {}: tail {:?}, predicted {:?}, blow-up {}",
                    row.h_l1, row.tail_mean, row.predicted, row.blow_up
                );
            }
        }
        Command::Noise(c) => {
            let cfg = c.load()?;
            let result = experiments::run_noise_scaling(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            for row in &result.summary {
                println!("N = {}: median sup {:.6}", row.n, row.median_sup);
            }
            println!("slope = {:?}", result.slope);
        }
        Command::GraphDiag(c) => {
            let cfg = c.load()?;
            let result = experiments::run_graph_diag(&cfg)?;
            result.write_to(&cfg.output_dir)?;
            for row in &result.regularity {
                println!("N = {}: R1 {:.3e}, R2 {:.3e}, S {:.3e}", row.n, row.r1, row.r2, row.s);
            }
        }
        Command::Plot { source, out_dir } => {
            let dir = match out_dir {
                Some(d) => d,
                None if std::path::Path::new(&source).is_dir() => PathBuf::from(&source),
                None => ExperimentConfig::load(&source)?.output_dir,
            };
            for script in output::write_plot_scripts(&dir)? {
                println!("{}", script.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Supercritical { .. } => 3,
                Error::InvariantBreach(_) => 4,
                _ => 1,
            })
        }
    }
}
