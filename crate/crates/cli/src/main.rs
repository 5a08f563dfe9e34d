use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qchaos_cli::artifacts::run_dir;
use qchaos_cli::config::{self, RunConfig};
use qchaos_cli::runner::{execute, lyapunov, report};
use qchaos_cli::sweep::{sweep, Axis};
use qchaos_cli::CliError;

#[derive(Parser)]
#[command(name = "qchaos", version, about = "Wigner-function evolution and entropy-production diagnostics")]
struct Cli {
    /// Root for relative run directories.
    #[arg(long, global = true, env = "QCHAOS_OUTPUT_ROOT", default_value = ".")]
    output_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// TOML config file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Use a shipped preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<RunConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(path), _) => config::load(path),
            (None, Some(name)) => config::preset(name).map_err(CliError::from),
            (None, None) => unreachable!("clap requires one of config and preset"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a config and write manifest, entropy series, verdict and snapshots.
    Run {
        #[command(flatten)]
        source: Source,
        /// Run directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 4 when the classifier is inconclusive.
        #[arg(long)]
        require_verdict: bool,
    },
    /// Repeat a run over values of one parameter.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the Lyapunov spectrum of the config's classical dynamics as JSON.
    Lyapunov {
        #[command(flatten)]
        source: Source,
    },
    /// Recompute verdict and timescales of a run directory and summarize it.
    Report { run_dir: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    let root = cli.output_root;
    match cli.command {
        Command::Run { source, out, require_verdict } => {
            let cfg = source.load()?;
            let dir = out.unwrap_or_else(|| run_dir(&cfg, &root));
            let outcome = execute(&cfg, &dir)?;
            if let Some(e) = &outcome.abort {
                eprintln!("error: {e}");
            }
            println!("{}", outcome.dir.display());
            Ok(outcome.exit_code(require_verdict))
        }
        Command::Sweep { source, axis, values, jobs, out } => {
            let cfg = source.load()?;
            let dir = out.unwrap_or_else(|| run_dir(&cfg, &root).join(format!("sweep_{}", axis.name())));
            let outcome = sweep(&cfg, axis, &values, jobs, &dir)?;
            for r in &outcome.rows {
                println!(
                    "{} = {}: {} {}",
                    axis.name(),
                    r.value,
                    r.status,
                    r.classification.as_deref().unwrap_or("-")
                );
            }
            Ok(outcome.exit_code())
        }
        Command::Lyapunov { source } => {
            let cfg = source.load()?;
            let spectrum = lyapunov(&cfg, &cfg.build_potential()?)?;
            let json = serde_json::to_string_pretty(&spectrum)
                .map_err(|source| CliError::Json { path: PathBuf::from("<stdout>"), source })?;
            println!("{json}");
            Ok(0)
        }
        Command::Report { run_dir } => {
            let r = report(&run_dir)?;
            print!("{}", r.summary);
            if r.reproduced {
                Ok(0)
            } else {
                Err(CliError::Report(format!("{}: recomputed verdict differs from the stored one", run_dir.display())))
            }
        }
    }
}
