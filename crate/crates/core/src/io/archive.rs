//! The decomposition archive: a directory with `core.npy`,
//! `factor_1.npy .. factor_N.npy`, `supports.json` (1-based index arrays per
//! mode) and `meta.json` (configuration, per-mode tolerances and statuses,
//! and the a-priori bound).
//!
//! Archives are byte-deterministic: re-running the same decomposition on the
//! same input reproduces every file exactly, so timings are reported on the
//! process's standard output instead of inside the archive.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::npy;
use crate::shopca::{DecompositionResult, EtaSpec, ShopcaConfig};
use crate::Result;

#[derive(Debug, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub order: usize,
    pub ranks: Vec<usize>,
    pub sparsity: Vec<usize>,
    /// "auto" or the fixed per-mode list.
    pub eta: serde_json::Value,
    pub max_cuts: usize,
    pub node_budget: u64,
    pub parallel_modes: bool,
    pub eta_achieved: Vec<f64>,
    pub eta_targets: Vec<f64>,
    pub statuses: Vec<String>,
    pub bound: f64,
}

impl ArchiveMeta {
    pub fn from_run(config: &ShopcaConfig, result: &DecompositionResult) -> Self {
        let eta = match &config.eta {
            EtaSpec::Auto => serde_json::Value::String("auto".into()),
            EtaSpec::PerMode(values) => serde_json::json!(values),
        };
        ArchiveMeta {
            order: result.factors.len(),
            ranks: config.ranks.clone(),
            sparsity: config.sparsity.clone(),
            eta,
            max_cuts: config.max_cuts,
            node_budget: config.node_budget,
            parallel_modes: config.parallel_modes,
            eta_achieved: result.eta_achieved.clone(),
            eta_targets: result.eta_targets.clone(),
            statuses: result.statuses.iter().map(|s| s.to_string()).collect(),
            bound: result.bound,
        }
    }
}

/// Writes the archive directory, creating it if needed.
pub fn write_archive(
    dir: &Path,
    config: &ShopcaConfig,
    result: &DecompositionResult,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    npy::write_tensor_file(&dir.join("core.npy"), &result.core)?;
    for (i, factor) in result.factors.iter().enumerate() {
        npy::write_matrix_file(&dir.join(format!("factor_{}.npy", i + 1)), factor)?;
    }
    let supports: Vec<Vec<usize>> = result
        .supports
        .iter()
        .map(|s| s.indices().to_vec())
        .collect();
    fs::write(
        dir.join("supports.json"),
        serde_json::to_string_pretty(&supports).expect("serializable") + "\n",
    )?;
    let meta = ArchiveMeta::from_run(config, result);
    fs::write(
        dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).expect("serializable") + "\n",
    )?;
    Ok(())
}
