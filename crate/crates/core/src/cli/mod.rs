//! Command line front end: configuration, dispatch and CSV output.
//!
//! Settings are resolved in the order flag > environment > config file >
//! preset > default. Only the output directory has an environment override,
//! `LEVYSHEET_OUT_DIR`.

pub mod config;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{parse_config, RunConfig};
pub use run::Command;

use crate::{Error, Result};

pub const OUT_DIR_ENV: &str = "LEVYSHEET_OUT_DIR";

#[derive(Debug, Clone, Parser)]
#[command(name = "lwn", version, about = "Lévy sheets, chaos expansions and a fractional stochastic heat solver")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Named starting configuration (`tumor`).
    #[arg(long)]
    pub preset: Option<String>,
}

/// Resolves the configuration for `args`, with `env_out` standing in for
/// the environment variable.
pub fn resolve(args: &Args, env_out: Option<String>) -> Result<RunConfig> {
    let mut table = match &args.preset {
        Some(p) => config::preset(p)?,
        None => toml::Table::new(),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        config::merge(&mut table, config::parse_table(&text)?);
    }
    let mut cfg = config::from_table(table)?;
    cfg.run.command = Some(args.command.as_str().into());
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.run.workers = w;
    }
    if let Some(o) = &args.out {
        cfg.run.out_dir = o.display().to_string();
    } else if let Some(o) = env_out.filter(|s| !s.is_empty()) {
        cfg.run.out_dir = o;
    }
    Ok(cfg)
}

/// Runs one subcommand and writes its CSV files; returns their paths.
pub fn execute(args: &Args) -> Result<Vec<PathBuf>> {
    let cfg = resolve(args, std::env::var(OUT_DIR_ENV).ok())?;
    execute_config(args.command, &cfg)
}

pub fn execute_config(cmd: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let tables = run::run_command(cmd, cfg)?;
    let dir = Path::new(&cfg.run.out_dir);
    tables.iter().map(|t| t.write(dir, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(cmd: Command) -> Args {
        Args {
            command: cmd,
            config: None,
            out: None,
            seed: None,
            workers: None,
            preset: None,
        }
    }

    #[test]
    fn output_directory_precedence() {
        let mut a = args(Command::MlEval);
        assert_eq!(resolve(&a, None).unwrap().run.out_dir, ".");
        assert_eq!(resolve(&a, Some("env".into())).unwrap().run.out_dir, "env");
        a.out = Some("flag".into());
        assert_eq!(resolve(&a, Some("env".into())).unwrap().run.out_dir, "flag");
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[run]\nseed = 5\nworkers = 2\nout_dir = \"cfg\"\n").unwrap();
        let mut a = args(Command::Basis);
        a.config = Some(path);
        let c = resolve(&a, Some("env".into())).unwrap();
        assert_eq!((c.run.seed, c.run.workers, c.run.out_dir.as_str()), (5, 2, "env"));
        a.seed = Some(9);
        assert_eq!(resolve(&a, None).unwrap().run.seed, 9);
        assert_eq!(resolve(&a, None).unwrap().run.out_dir, "cfg");
    }

    #[test]
    fn clap_parses_flags() {
        let a = Args::try_parse_from(["lwn", "solve-heat", "--preset", "tumor", "--seed", "3", "--workers", "4"]).unwrap();
        assert_eq!(a.command, Command::SolveHeat);
        assert_eq!(a.preset.as_deref(), Some("tumor"));
        assert_eq!((a.seed, a.workers), (Some(3), Some(4)));
        assert!(Args::try_parse_from(["lwn", "bogus"]).is_err());
    }
}
