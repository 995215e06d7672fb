use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qrdyn::cli::{parse_with_overrides, run, OUT_DIR_ENV};
use qrdyn::Error;

/// Iterate, classify and measure the explicit quasiregular maps.
#[derive(Parser, Debug)]
#[command(name = "qrdyn", version)]
struct Args {
    /// Configuration file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// `KEY=VALUE` settings applied after the file.
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(failures) => {
            if failures > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("qrdyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<usize, Error> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let cfg = parse_with_overrides(&text, &args.overrides)?;
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let summary = run(&cfg, out_dir.as_deref())?;
    for line in &summary.details {
        println!("{line}");
    }
    println!("{}", summary.line);
    Ok(summary.failures)
}
