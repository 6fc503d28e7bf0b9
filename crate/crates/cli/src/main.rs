mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_SIZE_GUARD: u8 = 3;

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(path) = &cli.manifest {
        let m = serde_json::json!({
            "tool": "zerobelief",
            "version": env!("CARGO_PKG_VERSION"),
            "config": cli,
        });
        output::write_text(path, &serde_json::to_string_pretty(&m)?)?;
    }
    match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Ibp(a) => commands::ibp(a),
        Command::Drac(a) => commands::drac(a),
        Command::Flatten(a) => commands::flatten_cmd(a),
        Command::Exact(a) => commands::exact(a),
        Command::Compare(a) => commands::compare(a),
        Command::Audit(a) => commands::audit(a),
        Command::Report(a) => commands::report(a),
        Command::Gen(a) => commands::gen(a),
        Command::Experiment(a) => commands::experiment(a),
    }
}

fn is_size_guard(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(
            e.downcast_ref::<zerobelief::Error>(),
            Some(zerobelief::Error::SizeGuard { .. } | zerobelief::Error::WidthGuard { .. })
        )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(EXIT_VIOLATION),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_size_guard(&err) { EXIT_SIZE_GUARD } else { EXIT_USAGE })
        }
    }
}
