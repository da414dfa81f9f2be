use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use setquant_cli::{compare_runs, dispatch, load_run, parse_config, resolve_output_dir, summary_table, CliError, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "setquant", version, about = "Scenario-sampling validation and quantification of invariant sets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the algorithm named in a config file.
    Run {
        config: PathBuf,
        /// Worker threads; 1 is the bit-exact reference mode.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides SETQUANT_OUTPUT and output_dir).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare two run directories (or a run and an oracle run).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Compare even when the scope digests differ.
        #[arg(long)]
        force: bool,
        /// Write the comparison JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a config and print it with every default filled in.
    Check { config: PathBuf },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, workers, output } => {
            let run = || -> Result<i32, CliError> {
                let mut cfg = parse_config(&read(&config)?)?;
                if let Some(w) = workers {
                    cfg.options.workers = w;
                }
                let dir = resolve_output_dir(&cfg, output.as_deref());
                let out = dispatch(&cfg, &dir)?;
                let r = &out.report;
                println!("{} {} seed={} status={} cells={} volume={}", r.algorithm, r.system, r.seed, r.status, r.cell_count, r.volume);
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
                println!("wrote {}", out.output_dir.join("report.json").display());
                Ok(out.exit_code)
            };
            match run() {
                Ok(code) => ExitCode::from(code as u8),
                Err(e) => fail(&e),
            }
        }
        Cmd::Compare { a, b, force, out } => {
            let run = || -> Result<(), CliError> {
                let c = compare_runs(&load_run(&a)?, &load_run(&b)?, force)?;
                let json = serde_json::to_string_pretty(&c).expect("plain data") + "\n";
                match out {
                    Some(p) => {
                        fs::write(&p, json).map_err(|e| CliError::io(&p, e))?;
                        print!("{}", summary_table(&c));
                    }
                    None => print!("{json}"),
                }
                Ok(())
            };
            match run() {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Cmd::Check { config } => match read(&config).and_then(|t| Ok(parse_config(&t)?)) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
