//! CSV and metadata files.
//!
//! Every float is written as `{:.16e}` (17 significant digits), which
//! round-trips `f64` exactly. All files of a run are rendered in memory,
//! written under temporary names and renamed into place only once every
//! write succeeded.
//!
//! | file               | columns                                                  |
//! |--------------------|----------------------------------------------------------|
//! | `trace.csv`        | `run_id,checkpoint_t,cum_pseudo_regret`                  |
//! | `totals.csv`       | `run_id,total_regret`                                    |
//! | `aggregate.csv`    | `checkpoint_t,mean,ci_half_width,p05,p90`                |
//! | `ratio.csv`        | `run_id,R,R_star,ratio`                                  |
//! | `ratio_summary.csv`| `runs,mean_ratio,ci_half_width,mean_R,mean_R_star`       |
//! | `active.csv`       | `run_id,checkpoint_t,active_players`                     |
//! | `sweep.csv`        | `parameter,value,checkpoint_t,mean,ci_half_width,p05,p90`|
//! | `sweep_totals.csv` | `parameter,value,run_id,total_regret`                    |
//!
//! `R` and `R_star` are the achieved and oracle expected reward per step.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, PolicySpec};
use crate::error::{Error, Result};
use crate::experiment::{DynamicResult, RegretAggregate, StaticResult, SweepResult};
use crate::seeds::{self, ReplicationSeeds, Role};

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Files of one run, rendered but not yet on disk.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file into `dir`, creating it if needed. Either all files
    /// land or none of the new ones do.
    pub fn commit(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (name, contents) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            if let Err(source) = fs::write(&tmp, contents) {
                cleanup(&staged);
                let _ = fs::remove_file(&tmp);
                return Err(Error::Write { path: tmp, source });
            }
            staged.push((tmp, dir.join(name)));
        }
        for (i, (tmp, path)) in staged.iter().enumerate() {
            if let Err(source) = fs::rename(tmp, path) {
                cleanup(&staged[i..]);
                return Err(Error::Write {
                    path: path.clone(),
                    source,
                });
            }
        }
        Ok(())
    }
}

fn aggregate_csv(agg: &RegretAggregate) -> String {
    let mut out = String::from("checkpoint_t,mean,ci_half_width,p05,p90\n");
    for (t, s) in agg.checkpoints.iter().zip(&agg.per_checkpoint) {
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            float(s.mean),
            float(s.half_width),
            float(s.p05),
            float(s.p90)
        );
    }
    out
}

fn trace_csv<'a>(runs: impl Iterator<Item = (&'a [u64], &'a [f64])>) -> String {
    let mut out = String::from("run_id,checkpoint_t,cum_pseudo_regret\n");
    for (run_id, (checkpoints, regret)) in runs.enumerate() {
        for (t, r) in checkpoints.iter().zip(regret) {
            let _ = writeln!(out, "{run_id},{t},{}", float(*r));
        }
    }
    out
}

fn totals_csv(totals: &[f64]) -> String {
    let mut out = String::from("run_id,total_regret\n");
    for (run_id, total) in totals.iter().enumerate() {
        let _ = writeln!(out, "{run_id},{}", float(*total));
    }
    out
}

#[derive(Serialize)]
struct RunSeeds {
    run_id: u64,
    environment: u64,
    population: u64,
    means: u64,
}

#[derive(Serialize)]
struct Meta<'a> {
    name: &'a str,
    command: &'a str,
    code_version: &'a str,
    metric: &'a str,
    seed_scheme: String,
    confidence_interval: &'a str,
    percentiles: &'a str,
    float_format: &'a str,
    musical_chairs_players: Option<String>,
    /// The full config; saving it as TOML reproduces the run.
    config_toml: String,
    config: &'a ExperimentConfig,
    run_seeds: Vec<RunSeeds>,
    run_means: Option<&'a [Vec<f64>]>,
}

fn musical_chairs_mode(cfg: &ExperimentConfig) -> Option<String> {
    let modes: Vec<String> = cfg
        .policies()
        .into_iter()
        .filter_map(|p| match p {
            PolicySpec::MusicalChairs {
                known_players: Some(m),
                ..
            } => Some(format!("known ({m})")),
            PolicySpec::MusicalChairs { .. } => Some("estimated from collisions".to_string()),
            _ => None,
        })
        .collect();
    if modes.is_empty() {
        None
    } else {
        Some(modes.join("; "))
    }
}

fn meta_json(cfg: &ExperimentConfig, command: &str, metric: &str, means: Option<&[Vec<f64>]>) -> Result<String> {
    let run_seeds = (0..cfg.replications)
        .map(|r| {
            let s = ReplicationSeeds::new(cfg.seed, r);
            Ok(RunSeeds {
                run_id: r,
                environment: s.get(Role::Environment)?,
                population: s.get(Role::Population)?,
                means: s.get(Role::Means)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = Meta {
        name: &cfg.name,
        command,
        code_version: env!("CARGO_PKG_VERSION"),
        metric,
        seed_scheme: seeds::scheme_description(),
        confidence_interval: "normal approximation, 1.96 * sample std / sqrt(runs)",
        percentiles: "nearest rank",
        float_format: "{:.16e}",
        musical_chairs_players: musical_chairs_mode(cfg),
        config_toml: cfg.to_toml(),
        config: cfg,
        run_seeds,
        run_means: means,
    };
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| Error::config("config", e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn static_outputs(cfg: &ExperimentConfig, result: &StaticResult) -> Result<OutputSet> {
    let mut set = OutputSet::default();
    set.add(
        "trace.csv",
        trace_csv(result.runs.iter().map(|t| (t.checkpoints.as_slice(), t.cumulative_regret.as_slice()))),
    );
    set.add("totals.csv", totals_csv(&result.regret.totals));
    set.add("aggregate.csv", aggregate_csv(&result.regret));
    let means = cfg.environment.is_random().then_some(result.means.as_slice());
    set.add("meta.json", meta_json(cfg, "run", "pseudo_regret", means)?);
    Ok(set)
}

pub fn dynamic_outputs(cfg: &ExperimentConfig, result: &DynamicResult) -> Result<OutputSet> {
    let mut set = OutputSet::default();
    let mut ratio = String::from("run_id,R,R_star,ratio\n");
    let mut active = String::from("run_id,checkpoint_t,active_players\n");
    for (run_id, t) in result.runs.iter().enumerate() {
        let _ = writeln!(
            ratio,
            "{run_id},{},{},{}",
            float(t.achieved_rate),
            float(t.oracle_rate),
            float(t.ratio)
        );
        for (c, n) in t.checkpoints.iter().zip(&t.active_counts) {
            let _ = writeln!(active, "{run_id},{c},{n}");
        }
    }
    let s = &result.ratio;
    let summary = format!(
        "runs,mean_ratio,ci_half_width,mean_R,mean_R_star\n{},{},{},{},{}\n",
        result.runs.len(),
        float(s.ratio.mean),
        float(s.ratio.half_width),
        float(s.mean_achieved_rate),
        float(s.mean_oracle_rate)
    );
    set.add("ratio.csv", ratio);
    set.add("ratio_summary.csv", summary);
    set.add(
        "trace.csv",
        trace_csv(result.runs.iter().map(|t| (t.checkpoints.as_slice(), t.cumulative_regret.as_slice()))),
    );
    set.add("totals.csv", totals_csv(&result.regret.totals));
    set.add("aggregate.csv", aggregate_csv(&result.regret));
    set.add("active.csv", active);
    let means = cfg.environment.is_random().then_some(result.means.as_slice());
    set.add("meta.json", meta_json(cfg, "dynamic", "reward_ratio", means)?);
    Ok(set)
}

pub fn sweep_outputs(cfg: &ExperimentConfig, result: &SweepResult) -> Result<OutputSet> {
    let param = result.parameter.as_str();
    let mut curves = String::from("parameter,value,checkpoint_t,mean,ci_half_width,p05,p90\n");
    let mut totals = String::from("parameter,value,run_id,total_regret\n");
    for (value, point) in &result.points {
        let agg = &point.regret;
        for (t, s) in agg.checkpoints.iter().zip(&agg.per_checkpoint) {
            let _ = writeln!(
                curves,
                "{param},{},{t},{},{},{},{}",
                float(*value),
                float(s.mean),
                float(s.half_width),
                float(s.p05),
                float(s.p90)
            );
        }
        for (run_id, total) in agg.totals.iter().enumerate() {
            let _ = writeln!(totals, "{param},{},{run_id},{}", float(*value), float(*total));
        }
    }
    let mut set = OutputSet::default();
    set.add("sweep.csv", curves);
    set.add("sweep_totals.csv", totals);
    set.add("meta.json", meta_json(cfg, "sweep", "pseudo_regret", None)?);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123_456_789.123_456_79, 0.0] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn commit_writes_all_files_without_leftovers() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = OutputSet::default();
        set.add("a.csv", "x\n".into());
        set.add("b.csv", "y\n".into());
        set.commit(dir.path()).unwrap();
        let mut names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, vec!["a.csv", "b.csv"]);
    }
}
