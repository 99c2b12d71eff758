use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use stable_varma_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = err.exit_code() as u8;
            let report = anyhow::Error::new(err).context(format!("{name} failed"));
            eprintln!("error: {report:#}");
            ExitCode::from(code)
        }
    }
}
