use std::io::Write;
use std::process::ExitCode;

use collapse_lab::experiments::Executor;
use collapse_lab::io::records::summary_json;
use collapse_lab::io::{parse_args, run_manifest, workers_from_env, write_results, CliError};

fn run() -> Result<(), CliError> {
    let inv = parse_args(std::env::args_os())?;
    let exec = Executor {
        workers: workers_from_env(),
    };
    let output = run_manifest(&inv.manifest, &exec)?;
    match &inv.out {
        Some(dir) => {
            let written = write_results(&output.summary, &output.records, dir, inv.format)?;
            eprintln!("wrote {}", written.summary.display());
            if let Some(path) = written.records {
                eprintln!("wrote {}", path.display());
            }
        }
        None => std::io::stdout().write_all(summary_json(&output.summary)?.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Info(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let text = e.to_string();
            eprint!("{text}");
            if !text.ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
