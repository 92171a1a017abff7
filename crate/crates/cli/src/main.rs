use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use zeroflat_cli::args::Cli;
use zeroflat_cli::{run, write_artifacts, EXIT_SUITE_FAILURE, EXIT_USAGE};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let printed = match &cli.out {
        Some(dir) => write_artifacts(dir, &outcome.artifacts).map(|paths| {
            for p in paths {
                let _ = writeln!(stdout, "{p}");
            }
        }),
        None => {
            let main = outcome.artifacts.first().map(|a| a.contents.as_str()).unwrap_or("");
            stdout.write_all(main.as_bytes()).map_err(Into::into)
        }
    };
    if let Err(e) = printed {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    if outcome.failed {
        ExitCode::from(EXIT_SUITE_FAILURE as u8)
    } else {
        ExitCode::SUCCESS
    }
}
