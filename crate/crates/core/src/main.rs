use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use colme::experiments::{emit_csv, graph_stats, theory, Curve, ExperimentConfig, Simulation};
use colme::topology::corollary_rhs;
use colme::Result;

#[derive(Parser)]
#[command(name = "colme", version, about = "Private collaborative mean estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo simulation and write its MSE curve.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// `key=value` config overrides, applied in order.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the analytic local, ideal and oracle-rule curves.
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Component sizes and the mean corollary bound over random topologies.
    GraphStats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
    },
    /// Compare the DP noise variance with the corollary bound for the config's topology.
    CorollaryCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, overrides, out } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let result = Simulation::new(cfg)?.run()?;
            emit_csv(&[Curve::simulated(&result)], &out)?;
            eprintln!("wrote {} ({} replicas, config {})", out.display(), result.replica_count, result.config_hash);
        }
        Command::Theory { config, overrides, out } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let sim = Simulation::new(cfg.clone())?;
            let constants = sim.theory_constants()?;
            emit_csv(&Curve::theory(&cfg, &constants), &out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::GraphStats { config, overrides, samples } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let stats = graph_stats(&cfg, samples)?;
            println!("samples: {}", stats.samples);
            println!("component size histogram (n_a: agents):");
            let total: u64 = stats.component_size_histogram.values().sum();
            for (n, count) in &stats.component_size_histogram {
                println!("  {n:>4}: {count:>8}  ({:.4})", *count as f64 / total as f64);
            }
            println!(
                "mean corollary rhs: {:.6} (stderr {:.6}, {} samples with no component of size >= 3)",
                stats.mean_corollary_rhs, stats.corollary_rhs_stderr, stats.infinite_rhs_samples
            );
        }
        Command::CorollaryCheck { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let sim = Simulation::new(cfg.clone())?;
            let topology = sim.topology(0)?;
            let privacy = cfg.privacy()?;
            let sigma_sq = cfg.sigma_sq_of();
            let rhs = corollary_rhs(&topology.classes, &sigma_sq);
            let holds = theory::corollary_holds(&topology.classes, &sigma_sq, &privacy);
            println!("rhs: {rhs}");
            println!("sigma_dp_sq: {}", privacy.sigma_dp_sq);
            println!("verdict: {}", if holds { "faster than local" } else { "no collaborative gain" });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
