mod commands;
mod config;
mod values;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use gjtheta::{Error, ErrorCategory};

use crate::commands::{run, Artifacts};
use crate::config::{Cli, RunConfig};

fn fail(category: &str, code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error[{category}]: {message}");
    ExitCode::from(code)
}

fn emit(cfg: &RunConfig, out: &Artifacts) -> std::io::Result<()> {
    match &cfg.output_path {
        Some(p) => fs::write(p, &out.report)?,
        None => std::io::stdout().lock().write_all(out.report.as_bytes())?,
    }
    if let Some(csv) = &out.csv {
        match &cfg.csv_path {
            Some(p) => fs::write(p, csv)?,
            None => eprintln!("note: CSV not written; pass --csv or --output"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let code = ErrorCategory::Parse.exit_code() as u8;
            return fail("parse", code, e.to_string().trim_end());
        }
    };
    let result = RunConfig::try_from(cli).and_then(|cfg| run(&cfg).map(|out| (cfg, out)));
    match result {
        Ok((cfg, out)) => match emit(&cfg, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail("io", 1, e),
        },
        Err(e) => {
            let cat = Error::category(&e);
            fail(cat.as_str(), cat.exit_code() as u8, e)
        }
    }
}
