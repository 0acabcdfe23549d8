mod args;
mod commands;
mod error;
mod output;

use clap::Parser;
use serde_json::{json, Map, Value};

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<i32, CliError> {
    commands::check_common(&cli.common)?;
    let c = &cli.common;
    let (report, resolved) = match &cli.command {
        Command::Dl(a) => (commands::dl(c, a)?, Map::new()),
        Command::Dos(a) => commands::dos(c, a)?,
        Command::Priors(a) => commands::priors(c, a)?,
        Command::Feasibility(a) => commands::feasibility(c, a)?,
        Command::Sample(a) => commands::sample(c, a)?,
        Command::Optimize(a) => (commands::optimize(c, a)?, Map::new()),
        Command::GammaScan(a) => commands::gamma_scan_cmd(c, a)?,
        Command::Compare(a) => commands::compare(c, a)?,
        Command::Validate(a) => commands::validate(c, a)?,
    };
    let mut config = serde_json::to_value(&cli.command).map_err(blockdl::Error::from)?;
    if let Value::Object(map) = &mut config {
        map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        map.insert("common".into(), serde_json::to_value(c).map_err(blockdl::Error::from)?);
        map.insert("resolved".into(), Value::Object(resolved));
    }
    output::emit(&config, &report, c.format, c.out.as_deref())?;
    match report.failure {
        Some(msg) => Err(CliError::Validation(msg)),
        None => Ok(0),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                let err = CliError::Usage(e.kind().to_string());
                eprintln!("{}", err.to_json());
                std::process::exit(err.exit_code());
            }
            std::process::exit(0);
        }
    };
    let code = match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    };
    std::process::exit(code);
}
