//! `bnls`: command-line front end of the biharmonic NLS laboratory.
//!
//! Exit codes: 0 success, 2 validation error, 3 falsifying experiment,
//! 4 numerical failure, 1 anything else (I/O).

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};

use config::{Command, Config};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("FALSIFYING: {0}")]
    Falsifying(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Falsifying(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<bnls::Error> for CliError {
    fn from(e: bnls::Error) -> Self {
        use bnls::Error as E;
        let msg = e.to_string();
        match e {
            E::Validation(_)
            | E::Config(_)
            | E::Domain(_)
            | E::Regime(_)
            | E::Precondition(_)
            | E::Format(_)
            | E::Structural(_) => CliError::Validation(msg),
            E::NotConverged(_) | E::Degenerate(_) | E::Poisoned(_) => CliError::Numerical(msg),
            E::Io { .. } | E::Json(_) => CliError::Io(msg),
        }
    }
}

fn cli() -> ClapCommand {
    let mut app = ClapCommand::new("bnls")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Pseudospectral laboratory for the biharmonic nonlinear Schrodinger equation")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Command::ALL {
        let mut sub = ClapCommand::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("TOML file of dotted keys; flags override it"),
        );
        for k in cmd.keys() {
            sub = sub.arg(
                Arg::new(k.key)
                    .long(k.key)
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(k.help),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn resolve(cmd: Command, m: &ArgMatches) -> Result<(Config, Option<PathBuf>), CliError> {
    let path = m.get_one::<PathBuf>("config").cloned();
    let mut cfg = match &path {
        Some(p) => Config::from_file(p, cmd)?,
        None => Config::default(),
    };
    for k in cmd.keys() {
        if let Some(raw) = m.get_one::<String>(k.key) {
            cfg.set_flag(k.key, raw, cmd)?;
        }
    }
    Ok((cfg, path))
}

fn run(m: &ArgMatches) -> Result<(), CliError> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == name)
        .expect("clap only accepts known subcommands");
    let (cfg, path) = resolve(cmd, sub)?;
    let threads = cfg.count_or("run.threads", 0)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    commands::run(cmd, cfg, path.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bnls: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clap_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn every_key_is_a_flag() {
        let m = cli()
            .try_get_matches_from(["bnls", "groundstate", "--params.sigma", "2", "--grid.points", "64"])
            .unwrap();
        let (cfg, _) = resolve(Command::Groundstate, m.subcommand_matches("groundstate").unwrap()).unwrap();
        assert_eq!(cfg.float("params.sigma"), Some(2.0));
        assert_eq!(cfg.int("grid.points"), Some(64));
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(CliError::from(bnls::Error::Validation("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(bnls::Error::NotConverged("x".into())).exit_code(), 4);
        assert_eq!(CliError::Falsifying("x".into()).exit_code(), 3);
    }
}
