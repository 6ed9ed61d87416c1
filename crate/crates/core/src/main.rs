use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stabcs::cli::{self, Context};
use stabcs::config::RunConfig;

#[derive(Parser)]
#[command(name = "stabcs", version, about = "Stabilization graphs, diabatization and ex-post complex scaling")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Real spectra on the eta grid, refined around crossings.
    Stab,
    /// Fit every avoided crossing of a graph file.
    Diabatize {
        /// Defaults to `<out>/graph.csv`.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Ex-post complex scaling of the fitted crossings.
    Resonance {
        /// Defaults to `<out>/crossings.json`.
        #[arg(long)]
        crossings: Option<PathBuf>,
    },
    /// Direct complex scaling of the model Hamiltonian.
    Benchmark,
}

fn run(args: Args) -> stabcs::Result<()> {
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| stabcs::Error::InvalidParameter(e.to_string()))?;
    }
    let config_path = args
        .config
        .ok_or_else(|| stabcs::Error::InvalidParameter("--config is required".into()))?;
    let ctx = Context::new(RunConfig::load(&config_path)?, args.out)?;
    match args.command {
        Command::Stab => {
            for p in cli::cmd_stab(&ctx)? {
                println!("{}", p.display());
            }
        }
        Command::Diabatize { graph } => {
            let graph = graph.unwrap_or_else(|| ctx.path(cli::GRAPH_FILE));
            let records = cli::cmd_diabatize(&ctx, &graph)?;
            println!("{} crossings -> {}", records.len(), ctx.path(cli::CROSSINGS_FILE).display());
        }
        Command::Resonance { crossings } => {
            let crossings = crossings.unwrap_or_else(|| ctx.path(cli::CROSSINGS_FILE));
            let r = cli::cmd_resonance(&ctx, &crossings)?;
            for x in &r.expost {
                println!(
                    "delta_eta {:+.3}: E = {:.8} {:+.6e}i  (Gamma = {:.4e})",
                    x.delta_eta, x.energy.re, x.energy.im, x.width
                );
            }
            if let Some(b) = &r.benchmark {
                println!("direct: E = {:.8} {:+.6e}i  (Gamma = {:.4e})", b.energy.re, b.energy.im, b.width);
            }
        }
        Command::Benchmark => {
            let b = cli::cmd_benchmark(&ctx)?;
            println!("direct: E = {:.8} {:+.6e}i  (Gamma = {:.4e})", b.energy.re, b.energy.im, b.width);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
