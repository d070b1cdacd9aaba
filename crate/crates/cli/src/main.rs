use anyhow::{Context, Result};
use clap::Parser;
use isactrack_cli::config::{self, Scenario};
use isactrack_cli::experiments::{self, Experiment, RunSpec, Scale};
use isactrack_cli::table::Format;
use std::path::PathBuf;
use std::time::Instant;

/// Tracking-lifetime and capacity experiments for sensing networks.
#[derive(Debug, Parser)]
#[command(name = "isactrack", version)]
struct Cli {
    /// experiment to run
    #[arg(value_enum, required_unless_present = "print_config")]
    experiment: Option<Experiment>,
    /// key = value configuration file; unspecified keys take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, or json for `plan` (default)
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// 2·10⁵ trajectories over 200 realisations
    #[arg(long)]
    paper_scale: bool,
    /// worker threads (results do not depend on this)
    #[arg(long, env = "ISACTRACK_THREADS")]
    threads: Option<usize>,
    /// print the default configuration and exit
    #[arg(long)]
    print_config: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.print_config {
        print!("{}", config::template());
        return Ok(());
    }
    let experiment = cli.experiment.expect("required by clap");
    let scenario = match &cli.config {
        Some(p) => Scenario::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Scenario::default(),
    };
    let mut spec = RunSpec::new(experiment, scenario);
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if cli.paper_scale {
        spec.scale = Scale::Paper;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build()?;

    let start = Instant::now();
    let table = pool.install(|| experiments::run(&spec))?;
    eprintln!("{}: {:.2} s", experiment.name(), start.elapsed().as_secs_f64());
    let format = cli.format.unwrap_or(if experiment == Experiment::Plan { Format::Json } else { Format::Csv });
    table.emit(format, cli.out.as_deref())?;

    if experiment == Experiment::Validate {
        let failed = table.meta_f64("failures").unwrap_or(0.0);
        if failed > 0.0 {
            eprintln!("validate: {failed} check(s) failed");
            std::process::exit(1);
        }
    }
    Ok(())
}
