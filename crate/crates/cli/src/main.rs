use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

mod commands;
mod config;
mod failure;
mod output;

use commands::eval::{cmd_eval, EvalArgs};
use commands::prompt::{cmd_prompt, PromptArgs};
use commands::run::{cmd_run, RunArgs};
use commands::split::{cmd_split, SplitArgs};
use commands::synth::{cmd_synth, SynthArgs};

/// Online procedural mistake detection: flags a step when the recognized
/// action is not among those anticipated from correct executions.
#[derive(Debug, Parser)]
#[command(name = "prego", version)]
struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a train/val/test split manifest
    Split(SplitArgs),
    /// Run online detection over held-out procedures
    Run(RunArgs),
    /// Score verdicts against annotations
    Eval(EvalArgs),
    /// Generate annotated procedures from a task grammar
    Synth(SynthArgs),
    /// Render the prompt for one procedure step
    Prompt(PromptArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Split(a) => cmd_split(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Prompt(a) => cmd_prompt(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code())
        }
    }
}
