//! Command-line front end: parses a command, merges config file and flags,
//! runs the numerical routines and writes CSV, `report.json` and optional
//! SVG plots into the output directory.

mod commands;
pub mod config;
pub mod plot;
mod report;

use clap::Parser;
use serde::Serialize;

pub use commands::Cli;
pub use report::{Report, VERSION};

/// Exit status for numerical failures (including band violations).
pub const EXIT_NUMERICAL: i32 = 1;
/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;

/// Machine-readable error, printed as JSON on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: "config".into(), message: message.into(), exit_code: EXIT_CONFIG }
    }

    pub fn numerical(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into(), exit_code: EXIT_NUMERICAL }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<subwave_core::Error> for CliError {
    fn from(e: subwave_core::Error) -> Self {
        use subwave_core::Error as E;
        let debug = format!("{e:?}");
        let name = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error");
        let mut kind = String::new();
        for (i, c) in name.chars().enumerate() {
            if c.is_uppercase() && i > 0 {
                kind.push('_');
            }
            kind.push(c.to_ascii_lowercase());
        }
        let code = match e {
            E::UnknownModel(_) | E::InvalidModel(_) | E::InvalidArgument(_) | E::ModelFile(_) | E::SizeExceeded { .. } => {
                EXIT_CONFIG
            }
            _ => EXIT_NUMERICAL,
        };
        Self { kind, message: e.to_string(), exit_code: code }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("SUBWAVE_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if a pool already exists, which then stays in use.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return EXIT_CONFIG;
        }
    };
    init_threads();
    match commands::execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code
        }
    }
}
