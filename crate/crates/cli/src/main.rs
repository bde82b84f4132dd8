use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use hochsheaf_cli::commands::Format;
use hochsheaf_cli::{run, Cli};

fn configure_threads() {
    let Ok(text) = std::env::var("HOCHSHEAF_THREADS") else { return };
    match text.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring HOCHSHEAF_THREADS={text:?}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    configure_threads();
    match run(&cli) {
        Ok(outcome) => {
            match cli.format {
                Format::Json => println!("{}", outcome.report.to_json()),
                Format::Text => print!("{}", outcome.report.to_text()),
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
