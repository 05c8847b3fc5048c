//! `anisosmooth` command-line interface.

mod commands;
mod opts;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use commands::{FitArgs, McArgs, RateArgs, SimulateArgs, SmoothImageArgs};

/// Local constant and anisotropic local constant kernel regression.
#[derive(Debug, Parser)]
#[command(name = "anisosmooth", version, propagate_version = true)]
struct Cli {
    /// File of `key=value` lines used as default flags for the subcommand.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a dataset (or a fire video) from a test process.
    Simulate(SimulateArgs),
    /// Fit LC, ALC or ALCT to a dataset.
    Fit(FitArgs),
    /// Monte Carlo MESE tables for LC, ALC and ALCT.
    Mc(McArgs),
    /// Smooth the RGB channels of a PNG or PPM image.
    SmoothImage(SmoothImageArgs),
    /// Empirical convergence rate of the MESE under a rate-rule bandwidth.
    Rate(RateArgs),
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: 4,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<anisosmooth::Error> for Failure {
    fn from(e: anisosmooth::Error) -> Self {
        use anisosmooth::Error as E;
        let code = match e {
            E::InvalidInput(_) => 2,
            E::SelectionFailure(_) => 3,
            E::Io { .. } | E::Csv(_) | E::Image { .. } => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

const SUBCOMMANDS: [&str; 5] = ["simulate", "fit", "mc", "smooth-image", "rate"];

/// Splices the `--config` file into `args` right after the subcommand, so that
/// later command-line flags override it.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" || a == "--jobs" {
            if a == "--config" {
                config = args.get(i + 1).map(PathBuf::from);
            }
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if sub.is_none() && SUBCOMMANDS.contains(&a.as_ref()) {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::io(&path, e))?;
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::usage(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                extra.push(OsString::from(format!("--{key}")));
                extra.push(OsString::from(value));
            }
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Mc(a) => commands::mc(&a),
        Command::SmoothImage(a) => commands::smooth_image(&a),
        Command::Rate(a) => commands::rate(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let command = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let cli = match command
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_lines_follow_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.config");
        std::fs::write(&path, "# comment\nn = 50\npng=true\nquiet=false\n").unwrap();
        let args: Vec<OsString> = [
            "anisosmooth",
            "--config",
            path.to_str().unwrap(),
            "simulate",
            "--n",
            "9",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let out: Vec<String> = expand_config(args)
            .unwrap()
            .into_iter()
            .map(|a| a.into_string().unwrap())
            .collect();
        assert_eq!(&out[3..], ["simulate", "--n", "50", "--png", "--n", "9"]);
    }

    #[test]
    fn malformed_config_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.config");
        std::fs::write(&path, "n 50\n").unwrap();
        let args = vec![
            OsString::from("anisosmooth"),
            OsString::from("fit"),
            OsString::from(format!("--config={}", path.display())),
        ];
        assert_eq!(expand_config(args).unwrap_err().code, 2);
    }
}
