//! Subcommand implementations and the plumbing they share.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use xmf::config::{FileConfig, RunConfig};

use crate::Flags;

pub mod diffusion;
pub mod eval;
pub mod ingest;
pub mod pair;
pub mod report;
pub mod score;

/// A failed run: bad input (exit 2) or a numerical failure (exit 3).
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Numeric(e) => e,
        }
    }
}

pub type Outcome = Result<(), Failure>;

pub trait OrFail<T> {
    fn input(self) -> Result<T, Failure>;
    fn numeric(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn numeric(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Numeric(e.into()))
    }
}

pub fn input_err(msg: impl std::fmt::Display) -> Failure {
    Failure::Input(anyhow!("{msg}"))
}

/// Defaults, then the config file, then flags.
pub fn resolve(subcommand: &str, flags: &Flags) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::defaults(subcommand);
    if let Some(path) = &flags.config {
        cfg.apply_file(&FileConfig::load(path).input()?);
    }
    macro_rules! take {
        ($($field:ident),*) => {$(
            if let Some(v) = flags.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    take!(
        mode,
        block_size,
        threshold,
        gamma_ic,
        alpha_ac,
        max_attempts,
        gamma_snr,
        timesteps,
        beta_start,
        beta_end,
        seed,
        out_dir
    );
    if flags.threads.is_some() {
        cfg.threads = flags.threads;
    }
    cfg.oracle |= flags.oracle;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(input_err("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start worker pool")
            .input()?;
    }
    log::debug!("config hash {}", cfg.hash());
    Ok(cfg)
}

pub fn record_inputs(cfg: &mut RunConfig, paths: &[&Path]) {
    cfg.inputs = paths.iter().map(|p| p.display().to_string()).collect();
}

/// Output files of one run, all under `out_dir` and all starting with the
/// config header line.
pub struct Outputs {
    dir: PathBuf,
    header: String,
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        let dir = PathBuf::from(&cfg.out_dir);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .input()?;
        Ok(Self {
            dir,
            header: cfg.header_line(),
        })
    }

    pub fn header(&self) -> &str {
        &self.header
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.path(name);
        log::info!("writing {}", path.display());
        File::create(&path)
            .map(BufWriter::new)
            .with_context(|| format!("cannot create {}", path.display()))
            .input()
    }

    pub fn finish(&self, cfg: &RunConfig) -> Outcome {
        let mut f = self.create("run_config.json")?;
        f.write_all(cfg.to_json().as_bytes())
            .and_then(|_| f.flush())
            .context("cannot write run_config.json")
            .input()
    }
}
