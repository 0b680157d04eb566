use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use berryphase_cli::{configure_workers, run, CliError, Format, RunRequest, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "berryphase", version, about = "Geometric phase experiments for a spin-1/2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        /// Scenario name; see `berryphase scenarios`.
        scenario: String,
        /// TOML or JSON file of scenario parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed, overriding any `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Data file to write; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format; inferred from --out when omitted, else csv.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Parameter override, repeatable.
        #[arg(long = "param", short = 'p', value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// List the available scenarios.
    Scenarios,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("berryphase: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, config, seed, out, format, params) = match cli.command {
        Command::Scenarios => {
            for s in Scenario::ALL {
                let tag = if s.is_stochastic() { " (needs --seed)" } else { "" };
                println!("{:<26}{}{tag}", s.name(), s.describe());
            }
            return ExitCode::SUCCESS;
        }
        Command::Run {
            scenario,
            config,
            seed,
            out,
            format,
            params,
        } => (scenario, config, seed, out, format, params),
    };
    if let Err(e) = configure_workers() {
        return fail(&e);
    }
    let req = RunRequest {
        scenario,
        config,
        overrides: params,
        seed,
        out,
        format: format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
    };
    match run(&req) {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("{}: {note}", outcome.scenario);
            }
            if outcome.files.is_empty() {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(outcome.data.as_bytes()).is_err() {
                    return ExitCode::from(2);
                }
            } else {
                for f in &outcome.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
