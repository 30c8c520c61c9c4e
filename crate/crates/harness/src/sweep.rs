//! Parameter sweeps and the critical-drift bracket.
//!
//! Each cell is identified by its parameter values, not by its position in
//! the grid, and its seed is `derive_seed(master, cell_key, replica)`. Adding
//! or removing cells therefore leaves every other cell's output unchanged.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use rotators_core::noise::{derive_seed, mix64};
use serde::{Deserialize, Serialize};

use crate::config::{BoundaryConfig, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{self, csv_error};
use crate::run::run_in;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    /// Cubic box sizes `(L, L, L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_k: Option<Vec<u32>>,
    #[serde(default = "one")]
    pub replicas: u32,
}

fn one() -> u32 {
    1
}

/// A base config plus per-parameter value lists. An omitted axis keeps the
/// base value; an empty list yields an empty grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub sweep: SweepAxes,
    pub base: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub beta: f64,
    pub n: u32,
    pub drift: f64,
    pub l: usize,
    pub init_k: u32,
    pub replica: u32,
    pub key: u64,
    pub seed: u64,
    pub name: String,
}

pub fn cell_key(beta: f64, n: u32, drift: f64, l: usize, init_k: u32) -> u64 {
    [beta.to_bits(), n as u64, drift.to_bits(), l as u64, init_k as u64]
        .iter()
        .fold(0x243F_6A88_85A3_08D3u64, |h, &v| mix64(h ^ mix64(v)))
}

impl SweepGrid {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let grid: Self = toml::from_str(text).map_err(|e| HarnessError::Config {
            key: "sweep".into(),
            message: e.message().to_string(),
        })?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("grids always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.replicas == 0 {
            return Err(HarnessError::Config {
                key: "sweep.replicas".into(),
                message: "must be >= 1".into(),
            });
        }
        // Cell-level validity is checked per cell at run time so that one
        // bad cell does not sink the sweep.
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let b = &self.base;
        let axis = |v: &Option<Vec<f64>>, d: f64| v.clone().unwrap_or_else(|| vec![d]);
        let betas = axis(&self.sweep.beta, b.dynamics.beta);
        let drifts = axis(&self.sweep.drift, b.dynamics.drift);
        let ns = self.sweep.n.clone().unwrap_or_else(|| vec![b.model.n]);
        let ls = self.sweep.l.clone().unwrap_or_else(|| vec![b.lattice.dims[0]]);
        let ks = self.sweep.init_k.clone().unwrap_or_else(|| vec![b.init.k]);
        let mut out = Vec::new();
        for &beta in &betas {
            for &n in &ns {
                for &drift in &drifts {
                    for &l in &ls {
                        for &init_k in &ks {
                            let key = cell_key(beta, n, drift, l, init_k);
                            for replica in 0..self.sweep.replicas {
                                out.push(Cell {
                                    beta,
                                    n,
                                    drift,
                                    l,
                                    init_k,
                                    replica,
                                    key,
                                    seed: derive_seed(b.rng.seed, key, replica as u64),
                                    name: format!("beta{beta}_n{n}_d{drift}_l{l}_k{init_k}_r{replica}"),
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn cell_config(&self, cell: &Cell, out_dir: &Path) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        cfg.dynamics.beta = cell.beta;
        cfg.dynamics.drift = cell.drift;
        cfg.model.n = cell.n;
        if let BoundaryConfig::Interface { k, .. } = cfg.lattice.boundary {
            cfg.lattice.boundary = BoundaryConfig::Interface { k, n: cell.n };
        }
        if self.sweep.l.is_some() {
            cfg.lattice.dims = [cell.l; 3];
        }
        cfg.init.k = cell.init_k;
        cfg.rng.seed = cell.seed;
        cfg.output.directory = out_dir.join(&cell.name).to_string_lossy().into_owned();
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: String,
    pub beta: f64,
    pub n: u32,
    pub drift: f64,
    pub l: usize,
    pub init_k: u32,
    pub replica: u32,
    pub seed: u64,
    pub abs_m_mean: Option<f64>,
    pub omega: Option<f64>,
    pub omega_stderr: Option<f64>,
    pub rotating: Option<bool>,
    pub energy_per_site: Option<f64>,
    pub status: String,
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "cell",
    "beta",
    "n",
    "drift",
    "l",
    "init_k",
    "replica",
    "seed",
    "abs_m_mean",
    "omega",
    "omega_stderr",
    "rotating",
    "energy_per_site",
    "status",
];

fn run_cell(grid: &SweepGrid, cell: &Cell, out_dir: &Path) -> SummaryRow {
    let cfg = grid.cell_config(cell, out_dir);
    let mut row = SummaryRow {
        cell: cell.name.clone(),
        beta: cell.beta,
        n: cell.n,
        drift: cell.drift,
        l: cell.l,
        init_k: cell.init_k,
        replica: cell.replica,
        seed: cell.seed,
        abs_m_mean: None,
        omega: None,
        omega_stderr: None,
        rotating: None,
        energy_per_site: None,
        status: "ok".into(),
    };
    match cfg.validate().and_then(|_| run_in(&cfg, Path::new(&cfg.output.directory))) {
        Ok(outcome) => {
            let a = outcome.analysis;
            row.abs_m_mean = a.abs_m_mean;
            row.energy_per_site = a.energy_per_site_mean;
            if let Some(r) = a.rotation {
                row.omega = Some(r.omega);
                row.omega_stderr = Some(r.omega_stderr);
                row.rotating = Some(r.rotating);
            }
        }
        Err(e) => {
            log::warn!("cell {} failed: {e}", cell.name);
            row.status = format!("error: {e}");
        }
    }
    row
}

/// Run every cell (in parallel) under `out_dir` and write `summary.csv`.
pub fn sweep(grid: &SweepGrid, out_dir: &Path) -> Result<Vec<SummaryRow>> {
    grid.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let cells = grid.cells();
    let rows: Vec<SummaryRow> = cells.par_iter().map(|c| run_cell(grid, c, out_dir)).collect();
    write_summary(&out_dir.join("summary.csv"), &rows)?;
    let echo = serde_json::json!({
        "software": crate::run::SOFTWARE,
        "grid": grid,
        "cells": cells.iter().map(|c| serde_json::json!({"name": c.name, "seed": c.seed})).collect::<Vec<_>>(),
    });
    output::write_json(&out_dir.join("sweep.json"), &echo)?;
    Ok(rows)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(SUMMARY_HEADER).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DcrEstimate {
    /// `[largest non-rotating d, smallest rotating d]`; the lower end is 0
    /// when every scanned drift rotates.
    Bracket { lower: f64, upper: f64 },
    /// No scanned drift rotates.
    AboveScan { d_max: f64 },
    Undetermined { offending: Vec<String> },
}

/// Bracket the critical drift from the scan at fixed `(beta, n)`.
pub fn estimate_dcr(rows: &[SummaryRow], beta: f64, n: u32) -> Result<DcrEstimate> {
    let scan: Vec<&SummaryRow> = rows
        .iter()
        .filter(|r| (r.beta - beta).abs() <= 1e-12 * beta.abs().max(1.0) && r.n == n)
        .collect();
    if scan.is_empty() {
        return Err(HarnessError::Invalid(format!("no drift scan at beta = {beta}, N = {n}")));
    }
    let mut by_drift: BTreeMap<u64, Vec<&SummaryRow>> = BTreeMap::new();
    for r in &scan {
        // drifts are non-negative, so the bit pattern orders like the value
        by_drift.entry(r.drift.abs().to_bits()).or_default().push(r);
    }
    let mut offending = Vec::new();
    let mut verdicts: Vec<(f64, bool, Vec<String>)> = Vec::new();
    for (bits, cells) in &by_drift {
        let names: Vec<String> = cells.iter().map(|c| c.cell.clone()).collect();
        let v: Vec<Option<bool>> = cells
            .iter()
            .map(|c| if c.status == "ok" { c.rotating } else { None })
            .collect();
        if v.iter().any(Option::is_none) || v.iter().any(|x| *x != v[0]) {
            offending.extend(names);
            continue;
        }
        verdicts.push((f64::from_bits(*bits), v[0].unwrap(), names));
    }
    if !offending.is_empty() {
        return Ok(DcrEstimate::Undetermined { offending });
    }
    let first_true = verdicts.iter().position(|v| v.1);
    let last_false = verdicts.iter().rposition(|v| !v.1);
    match (first_true, last_false) {
        (None, _) => Ok(DcrEstimate::AboveScan {
            d_max: verdicts.last().unwrap().0,
        }),
        (Some(t), None) => Ok(DcrEstimate::Bracket {
            lower: 0.0,
            upper: verdicts[t].0,
        }),
        (Some(t), Some(f)) if f < t => Ok(DcrEstimate::Bracket {
            lower: verdicts[f].0,
            upper: verdicts[t].0,
        }),
        (Some(t), Some(f)) => Ok(DcrEstimate::Undetermined {
            offending: verdicts[t..=f].iter().flat_map(|v| v.2.clone()).collect(),
        }),
    }
}
