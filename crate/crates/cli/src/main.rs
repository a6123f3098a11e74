use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use powerdiv_cli::{Command, Config, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "powerdiv", version, about = "Poisson and Gaussian approximation bounds for power divergence statistics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a bound term by term
    Bound(Args),
    /// Print the uniform-allocation bound grid
    Table1(Args),
    /// Simulate and compare the empirical distance with a bound
    Verify(Args),
    /// Evaluate a bound over a parameter grid, as CSV
    Sweep(Args),
    /// Re-run the command recorded in a config or report file
    Run(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON config file, or a JSON report whose manifest is re-executed
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    bound: Option<String>,
    /// Scheme kind: uniform, power or explicit
    #[arg(long)]
    scheme: Option<String>,
    /// One probability per line
    #[arg(long)]
    scheme_file: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Accepts fractions such as 2/3
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// t_tilde or occupancy
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// text, json or csv
    #[arg(long)]
    format: Option<String>,
    /// CSV dump of the simulated samples
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    workers: Option<String>,
}

impl Args {
    fn into_config(self) -> powerdiv_cli::Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::new(),
        };
        let flags = [
            ("bound", self.bound),
            ("scheme.kind", self.scheme),
            ("scheme.file", self.scheme_file),
            ("scheme.r", self.r),
            ("scheme.a", self.a),
            ("n", self.n),
            ("lambda", self.lambda),
            ("m", self.m),
            ("eta", self.eta),
            ("replicates", self.replicates),
            ("seed", self.seed),
            ("target", self.target),
            ("output.path", self.output),
            ("output.format", self.format),
            ("output.samples", self.samples),
            ("workers", self.workers),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                match key {
                    // keep paths and names as strings
                    "scheme.file" | "output.path" | "output.samples" | "bound" | "scheme.kind" | "target"
                    | "output.format" => cfg.set(key, v.into())?,
                    _ => cfg.set_text(key, &v)?,
                }
            }
        }
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Bound(a) => (Some(Command::Bound), a),
        Cmd::Table1(a) => (Some(Command::Table1), a),
        Cmd::Verify(a) => (Some(Command::Verify), a),
        Cmd::Sweep(a) => (Some(Command::Sweep), a),
        Cmd::Run(a) => (None, a),
    };
    let code = match args.into_config() {
        Ok(cfg) => powerdiv_cli::run(command, cfg),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
