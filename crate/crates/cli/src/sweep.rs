//! Cartesian parameter sweeps, one subdirectory per point.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ProfileSpec, RunConfig};
use crate::error::CliError;
use crate::output::{write_file, GENERATOR};
use crate::run::execute;

pub const WORKERS_ENV: &str = "SIP_EFFMASS_WORKERS";

const PROFILE_KEYS: [&str; 3] = ["m0", "alpha", "beta"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub dir: String,
    pub values: BTreeMap<String, f64>,
    pub profile: String,
    pub status: &'static str,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub generator: &'static str,
    pub axes: BTreeMap<String, Vec<f64>>,
    pub points: Vec<PointRecord>,
}

impl Manifest {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.status != "ok").count()
    }
}

/// Worker count from `SIP_EFFMASS_WORKERS`, if set to a positive integer.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("{WORKERS_ENV} must be a positive integer, got `{s}`"))),
        },
    }
}

fn cartesian(axes: &BTreeMap<String, Vec<f64>>) -> Vec<Vec<(String, f64)>> {
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (key, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v));
                    q
                })
            })
            .collect();
    }
    points
}

fn point_config(base: &RunConfig, profile: &ProfileSpec, values: &[(String, f64)]) -> Result<RunConfig, CliError> {
    let mut cfg = base.clone();
    cfg.profile = profile.clone();
    for (k, v) in values {
        if PROFILE_KEYS.contains(&k.as_str()) {
            cfg.profile.params.insert(k.clone(), *v);
        } else {
            cfg.family.set(k, *v)?;
        }
    }
    Ok(cfg)
}

/// Run every point; failures are recorded and do not stop the others.
pub fn sweep(base: &RunConfig, out_dir: &Path, workers: Option<usize>) -> Result<Manifest, CliError> {
    let axes = base.sweep.axes.clone();
    for key in axes.keys() {
        // reject typos before running anything
        if !PROFILE_KEYS.contains(&key.as_str()) {
            crate::config::FamilySpec::default().set(key, 0.0)?;
        }
    }
    let profiles = if base.sweep.profiles.is_empty() { vec![base.profile.clone()] } else { base.sweep.profiles.clone() };
    let combos = if axes.values().any(|v| v.is_empty()) { Vec::new() } else { cartesian(&axes) };
    let jobs: Vec<(usize, &ProfileSpec, &Vec<(String, f64)>)> = profiles
        .iter()
        .flat_map(|p| combos.iter().map(move |c| (p, c)))
        .enumerate()
        .map(|(i, (p, c))| (i, p, c))
        .collect();
    fs::create_dir_all(out_dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", out_dir.display())))?;

    let run_one = |&(index, profile, values): &(usize, &ProfileSpec, &Vec<(String, f64)>)| -> PointRecord {
        let dir = format!("point-{index:04}");
        let result = point_config(base, profile, values).and_then(|cfg| execute(&cfg, &cfg.outputs, &out_dir.join(&dir)));
        let (status, outputs, error) = match result {
            Ok(files) => ("ok", files, None),
            Err(e) => ("failed", Vec::new(), Some(e.record())),
        };
        PointRecord {
            index,
            dir,
            values: values.iter().cloned().collect(),
            profile: profile.label(),
            status,
            outputs,
            error,
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let points: Vec<PointRecord> = pool.install(|| jobs.par_iter().map(run_one).collect());
    let manifest = Manifest { generator: GENERATOR, axes, points };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::numerical(e.to_string()))?;
    text.push('\n');
    write_file(&out_dir.join("manifest.json"), &text)?;
    Ok(manifest)
}
