use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use probedim::experiment::{
    cmd_estimate, cmd_order_table, cmd_sweep, cmd_verify, exit_code, ExperimentConfig, SeriesSource,
};
use probedim::{Error, Execution};

#[derive(Parser, Debug)]
#[command(name = "probedim", version, about = "Estimate the Hilbert-space dimension of a spin chain seen through one probe qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Model order for every N in the configured range.
    OrderTable(Common),
    /// Run the estimation pipeline once on a simulated or recorded series.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Read the probe series from a `j,t,y` CSV instead of simulating it.
        #[arg(long, value_name = "CSV")]
        series: Option<PathBuf>,
    },
    /// Monte Carlo sweep over qubit counts and noise variances.
    Sweep(Common),
    /// Golden checks: closed-form order tables and oracle equivalence.
    Verify {
        /// Optional config; only its master seed and limits are used.
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config.
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Use the full instance and noise-draw counts.
    #[arg(long)]
    paper_scale: bool,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.ensemble.seed = seed;
        }
        if self.paper_scale {
            cfg.paper_scale();
        }
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        Ok((cfg, out))
    }

    fn exec(&self) -> Execution {
        exec(self.sequential)
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::OrderTable(c) => {
            let (cfg, out) = c.load()?;
            let table = cmd_order_table(&cfg, &out, c.exec())?;
            print!("{}", table.to_csv());
            note_written(&out.join("order_table.csv"));
        }
        Command::Estimate { common, series } => {
            let (cfg, out) = common.load()?;
            let source = series.map(SeriesSource::File).unwrap_or(SeriesSource::Simulate);
            let outcome = cmd_estimate(&cfg, &source, &out)?;
            print!("{}", outcome.report.summary());
            if let Some(n) = outcome.n_true {
                println!("N_true = {n}");
            }
            note_written(&out.join("estimate"));
        }
        Command::Sweep(c) => {
            let (cfg, out) = c.load()?;
            let summary = cmd_sweep(&cfg, &out, c.exec())?;
            print!("{}", summary.to_csv());
            for cell in &summary.cells {
                if let Err(e) = &cell.outcome {
                    eprintln!("cell N={} sigma2={:e} failed: {e}", cell.n_qubits, cell.variance);
                }
            }
            note_written(&out);
        }
        Command::Verify { config, seed, sequential } => {
            let mut cfg = config.as_deref().map(ExperimentConfig::load).transpose()?;
            if let (Some(c), Some(s)) = (cfg.as_mut(), seed) {
                c.ensemble.seed = s;
            }
            let cfg = match (cfg, seed) {
                (None, Some(s)) => {
                    let mut c = ExperimentConfig::new(probedim::CouplingType::Exchange, false, probedim::experiment::Qubits::Count(2));
                    c.ensemble.seed = s;
                    Some(c)
                }
                (c, _) => c,
            };
            let report = cmd_verify(cfg.as_ref(), exec(sequential));
            print!("{}", report.render());
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn note_written(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
