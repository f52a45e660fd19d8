use std::process::ExitCode;

use clap::Parser;
use wsp::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    match cli::run(&args) {
        Ok(out) => {
            if let Some(r) = &out.report {
                let failed = r.failed_checks();
                if failed.is_empty() {
                    eprintln!("{}: {} checks passed", r.command, r.checks.len());
                } else {
                    eprintln!("{}: failed checks: {}", r.command, failed.join(", "));
                }
                if !args_have_report(&args) {
                    match r.to_json() {
                        Ok(s) => print!("{s}"),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::from(2);
                        }
                    }
                }
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn args_have_report(args: &Cli) -> bool {
    use cli::Command::*;
    match &args.command {
        Pressure { report, .. }
        | Project { report, .. }
        | Galilean { report, .. }
        | Norms { report, .. }
        | Suitability { report, .. }
        | OracleCompare { report, .. }
        | Verify { report, .. } => report.is_some(),
        GenFixture { .. } => true,
    }
}
