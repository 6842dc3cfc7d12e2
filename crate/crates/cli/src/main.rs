use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use marginalia_cli::{run, Cli};

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let to_stdout = match &cli.command {
        marginalia_cli::app::Command::Report { common, .. } | marginalia_cli::app::Command::Record { common, .. } => {
            common.output.is_none()
        }
    };
    match run(cli).await {
        Ok(outcome) => {
            if to_stdout {
                let mut stdout = std::io::stdout().lock();
                if let Err(e) = stdout.write_all(outcome.rendered.as_bytes()).and_then(|_| stdout.flush()) {
                    eprintln!("marginalia: writing report: {e}");
                    return ExitCode::from(2);
                }
            }
            if outcome.report.has_errors() {
                eprintln!("marginalia: some views failed; see the report for details");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("marginalia: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
