//! Subcommands of the `mpmab` binary.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{run_dynamic_experiment, run_experiment, run_sweep, RunOptions};
use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    /// Output directory; wins over the config's `output_dir`.
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Loads the config with the seed override applied.
pub fn load_config(inv: &Invocation) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&inv.config)?;
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn output_dir(inv: &Invocation, cfg: &ExperimentConfig) -> PathBuf {
    inv.out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("results").join(&cfg.name))
}

/// Runs one subcommand, writes its files and returns the summary line.
pub fn execute(inv: &Invocation) -> Result<String> {
    let cfg = load_config(inv)?;
    let opts = RunOptions {
        workers: inv.workers,
    };
    let dir = output_dir(inv, &cfg);
    let summary = match inv.command {
        Command::Run => {
            let result = run_experiment(&cfg, opts)?;
            output::static_outputs(&cfg, &result)?.commit(&dir)?;
            let last = result.regret.final_mean();
            format!(
                "{}: {} runs, T = {}, final mean regret {:.3} ± {:.3}, max total regret {:.3}",
                cfg.name, cfg.replications, cfg.horizon, last.mean, last.half_width, result.regret.max_total
            )
        }
        Command::Dynamic => {
            let result = run_dynamic_experiment(&cfg, opts)?;
            output::dynamic_outputs(&cfg, &result)?.commit(&dir)?;
            let r = &result.ratio.ratio;
            format!(
                "{}: {} runs, T = {}, mean ratio {:.4} ± {:.4}",
                cfg.name, cfg.replications, cfg.horizon, r.mean, r.half_width
            )
        }
        Command::Sweep => {
            let result = run_sweep(&cfg, opts)?;
            output::sweep_outputs(&cfg, &result)?.commit(&dir)?;
            let finals: Vec<String> = result
                .points
                .iter()
                .map(|(v, p)| format!("{v}: {:.3}", p.regret.final_mean().mean))
                .collect();
            format!(
                "{}: sweep over {}, final mean regret {}",
                cfg.name,
                result.parameter.as_str(),
                finals.join(", ")
            )
        }
    };
    Ok(format!("{summary} -> {}", dir.display()))
}

/// `name<TAB>description` for every `*.toml` in `dir`, sorted by file name.
pub fn preset_list(dir: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let cfg = ExperimentConfig::load(p)?;
            let stem = p.file_stem().unwrap_or_default().to_string_lossy();
            Ok(format!("{stem}\t{}", cfg.description))
        })
        .collect()
}
