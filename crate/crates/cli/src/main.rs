use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lemsyn_cli::{cmd_bench, cmd_check, cmd_prove, cmd_verify, Flags, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "lemsyn", version, about = "Prove equivalences between functional programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove the goal of a spec file.
    Prove {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Write the report and full proof as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print the proof.
        #[arg(long)]
        trace: bool,
    },
    /// Prove every .spec file of a directory and summarize.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Write the per-file reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Parse and typecheck a spec file.
    Check { file: PathBuf },
    /// Replay the proof in a JSON report.
    Verify {
        report: PathBuf,
        /// Spec file to use instead of the one named in the report.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut out, mut err) = (io::stdout(), io::stderr());
    let code = match cli.command {
        Command::Prove {
            file,
            flags,
            json,
            trace,
        } => cmd_prove(&file, &flags, json.as_deref(), trace, &mut out, &mut err),
        Command::Bench { dir, flags, json } => match cmd_bench(&dir, &flags) {
            Ok(summary) => {
                print!("{}", summary.table());
                match json {
                    Some(path) => {
                        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
                        match std::fs::write(&path, text + "\n") {
                            Ok(()) => 0,
                            Err(e) => {
                                eprintln!("error: cannot write {}: {e}", path.display());
                                EXIT_INPUT
                            }
                        }
                    }
                    None => 0,
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_INPUT
            }
        },
        Command::Check { file } => cmd_check(&file, &mut out, &mut err),
        Command::Verify { report, spec } => cmd_verify(&report, spec.as_deref(), &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
