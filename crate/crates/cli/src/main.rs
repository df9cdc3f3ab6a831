use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpf_cli::compare::compare_rows;
use cpf_cli::output::Manifest;
use cpf_cli::sweep::SweepConfig;
use cpf_cli::{evaluate, run_experiment, CliError, ExperimentConfig};
use cpf_core::acceptance;

#[derive(Parser)]
#[command(
    name = "cpf",
    version,
    about = "Conditional past-future correlation experiments"
)]
struct Cli {
    /// Directory for CSV and manifest output.
    #[arg(long, global = true, default_value = ".")]
    output: PathBuf,
    /// Overrides the Monte Carlo seed of every config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one experiment config (or re-run a manifest).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate two configs on the same grid and compare point by point.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        against: PathBuf,
        /// Pass threshold on |Δ|/σ where standard errors exist.
        #[arg(long, default_value_t = 3.0)]
        sigma_tol: f64,
        /// Pass threshold on |Δ| for exact pairs.
        #[arg(long, default_value_t = 1e-10)]
        abs_tol: f64,
    },
    /// Run the cartesian product of a base config over parameter lists.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance checks.
    Selftest,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let say = |s: String| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    match &cli.command {
        Command::Run { config } => {
            let out = run_experiment(ExperimentConfig::load(config)?, &cli.output, cli.seed)?;
            say(format!(
                "wrote {} rows to {}",
                out.rows.len(),
                out.csv_path.display()
            ));
            say(format!("manifest {}", out.manifest_path.display()));
        }
        Command::Compare {
            config,
            against,
            sigma_tol,
            abs_tol,
        } => {
            let mut a = ExperimentConfig::load(config)?;
            let mut b = ExperimentConfig::load(against)?;
            if a.quantity != b.quantity {
                return Err(CliError::config(
                    "quantity",
                    "compared configs target different quantities",
                ));
            }
            a.resolve(cli.seed);
            b.resolve(cli.seed);
            let (ra, model_a, method_a) = evaluate(&a)?;
            let (rb, model_b, method_b) = evaluate(&b)?;
            let cmp = compare_rows(&ra, &rb, *sigma_tol, *abs_tol)?;
            let path = cli.output.join("compare.csv");
            cmp.write_csv(&path)?;
            say(format!(
                "A: {model_a} [{method_a}]  B: {model_b} [{method_b}]"
            ));
            say(format!("report {}", path.display()));
            if !cmp.passed() {
                return Err(CliError::CheckFailed(cmp.summary()));
            }
            say(cmp.summary());
        }
        Command::Sweep { config } => {
            let sweep = SweepConfig::load(config)?;
            let mut runs = Vec::new();
            for (label, cfg) in sweep.expand()? {
                let out = run_experiment(cfg, &cli.output, cli.seed)?;
                say(format!(
                    "{label}: {} rows -> {}",
                    out.rows.len(),
                    out.csv_path.display()
                ));
                runs.push(serde_json::json!({
                    "label": label,
                    "csv": out.csv_path.file_name().map(|s| s.to_string_lossy().into_owned()),
                    "manifest": Manifest::path_for(&out.csv_path).file_name().map(|s| s.to_string_lossy().into_owned()),
                }));
            }
            let index = cli.output.join("sweep.manifest.json");
            std::fs::write(
                &index,
                serde_json::to_string_pretty(&serde_json::json!({ "runs": runs }))? + "\n",
            )?;
            say(format!("index {}", index.display()));
        }
        Command::Selftest => {
            let results = acceptance::run_all();
            for r in &results {
                if !cli.quiet || !r.passed {
                    println!("{r}");
                }
            }
            let failed: Vec<String> = results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.name.to_string())
                .collect();
            if !failed.is_empty() {
                return Err(CliError::CheckFailed(format!(
                    "{} criteria failed: {}",
                    failed.len(),
                    failed.join(", ")
                )));
            }
            say(format!("all {} criteria passed", results.len()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
