use clap::{Parser, Subcommand};
use rgibbs::experiments::{ScenarioConfig, SCENARIOS};
use rgibbs_cli::config::{self, RunConfig};
use rgibbs_cli::{CliError, Overrides, EXIT_ERROR, EXIT_PASS};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rgibbs", version, about = "Numerical lab for disordered gradient interface models")]
struct Cli {
    /// List scenarios with their parameter schemas.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file or a previous run manifest.
    Run {
        config: PathBuf,
        /// Output directory (overrides RGIBBS_OUTPUT_DIR and the config).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (overrides RGIBBS_THREADS and the config).
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List scenarios with their parameter schemas.
    List,
    /// Check a config file and report every problem found.
    Validate { config: PathBuf },
    /// Print the default config of a scenario.
    Template { scenario: String },
}

fn list() {
    let mut out = String::new();
    for id in SCENARIOS {
        let cfg = ScenarioConfig::default_for(id).expect("listed scenario");
        let mode = if cfg.uses_mcmc() { "mcmc" } else { "exact" };
        out += &format!("{id} [{mode}]: {}\n", cfg.description());
        for p in config::schema(id).expect("listed scenario") {
            out += &format!("    {:<22} {:<13} default {}\n", p.key, p.kind.to_string(), p.default);
        }
    }
    // a closed pipe (e.g. `| head`) is not an error
    let _ = std::io::stdout().write_all(out.as_bytes());
}

fn run(path: PathBuf, cli: Overrides, seed: Option<u64>) -> Result<u8, CliError> {
    let mut cfg = rgibbs_cli::load(&path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let overrides = cli.or(Overrides::from_env()?);
    let dir = rgibbs_cli::output_dir(&cfg, &overrides);
    let threads = rgibbs_cli::thread_budget(&cfg, &overrides);
    let summary = rgibbs_cli::execute(&cfg, &dir, threads)?;
    for c in &summary.report.checks {
        println!(
            "{} {:<34} measured {:>12.6e}  threshold {:>12.6e}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold,
            c.detail
        );
    }
    println!(
        "{}: {} measurements written to {} in {:.1}s",
        summary.manifest.scenario,
        summary.report.measurements.len(),
        summary.dir.display(),
        summary.manifest.wall_clock_seconds
    );
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        _ if cli.list => {
            list();
            Ok(EXIT_PASS)
        }
        None | Some(Command::List) => {
            list();
            Ok(EXIT_PASS)
        }
        Some(Command::Run { config, output_dir, threads, seed }) => run(config, Overrides { output_dir, threads }, seed),
        Some(Command::Validate { config }) => rgibbs_cli::load(&config).map(|cfg| {
            println!("{}: valid {} config", config.display(), cfg.scenario.id());
            EXIT_PASS
        }),
        Some(Command::Template { scenario }) => match ScenarioConfig::default_for(&scenario) {
            Some(s) => {
                print!("{}", RunConfig::new(s, config::DEFAULT_SEED).to_toml());
                Ok(EXIT_PASS)
            }
            None => {
                eprintln!("unknown scenario `{scenario}` (expected one of: {})", SCENARIOS.join(", "));
                Ok(EXIT_ERROR)
            }
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
