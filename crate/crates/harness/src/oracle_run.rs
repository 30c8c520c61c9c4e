//! The `oracle` subcommand: exact stationary law of a tiny clock system.
//!
//! Writes `pi.csv` (`index,state,pi,gibbs`, where `state` lists the clock
//! indices of sites 0, 1, … separated by spaces), optionally
//! `generator.csv` (`row,col,rate`, off-diagonal entries only), a report
//! `oracle.json` and `manifest.json`.

use std::path::Path;
use std::time::Instant;

use rotators_core::oracle::{
    build_generator, check_rotation_invariance, decode, empirical_vs_exact, gibbs_distribution,
    stationary_distribution, total_variation, Solver,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelKind, SolverConfig};
use crate::error::{HarnessError, Result};
use crate::output::{self, csv_error, FileEntry};
use crate::run::{build_lattice, clock_params, simulate, Derived, Manifest, SOFTWARE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub dimension: usize,
    pub solver: SolverConfig,
    pub iterations: usize,
    pub residual: f64,
    pub null_space_dim: usize,
    pub min_pivot_ratio: Option<f64>,
    pub max_row_sum_error: f64,
    pub max_exit_rate: f64,
    pub rotation_deviation: f64,
    pub tv_to_gibbs: f64,
    pub sampler_tv: Option<f64>,
}

pub fn solver(cfg: &ExperimentConfig) -> Solver {
    let o = &cfg.oracle;
    match o.solver {
        SolverConfig::Gmres => Solver::Gmres {
            restart: 100,
            tol: o.tol,
            max_iter: o.max_iter,
        },
        SolverConfig::Power => Solver::Power {
            tol: o.tol,
            max_iter: o.max_iter,
        },
        SolverConfig::Dense => Solver::Dense,
    }
}

pub fn run_oracle(cfg: &ExperimentConfig, dir: &Path) -> Result<OracleReport> {
    let clock = Instant::now();
    cfg.validate()?;
    if cfg.model.kind != ModelKind::Clock {
        return Err(HarnessError::Config {
            key: "model.kind".into(),
            message: "the exact oracle needs the clock model".into(),
        });
    }
    let lattice = build_lattice(cfg)?;
    let params = clock_params(cfg)?;
    let cap = cfg.oracle.state_cap;
    let q = build_generator(&lattice, &params, cap)?;
    let pi = stationary_distribution(&q, &params, solver(cfg))?;
    let gibbs = gibbs_distribution(&lattice, &params, cap)?;
    let sites = lattice.num_sites();
    let n = params.n;

    let sampler_tv = if cfg.oracle.compare_sampler {
        let mut sampled = cfg.clone();
        sampled.dynamics.record_full_states = true;
        let sim = simulate(&sampled)?;
        let snaps = sim.trajectory.snapshots.as_ref().expect("recording was requested");
        Some(empirical_vs_exact(snaps, &pi.probs, n, cfg.oracle.burn_in)?)
    } else {
        None
    };

    let report = OracleReport {
        dimension: q.dimension(),
        solver: cfg.oracle.solver,
        iterations: pi.iterations,
        residual: pi.residual,
        null_space_dim: pi.null_space_dim,
        min_pivot_ratio: pi.min_pivot_ratio,
        max_row_sum_error: q.max_row_sum_error(),
        max_exit_rate: q.max_exit_rate(),
        rotation_deviation: check_rotation_invariance(&pi.probs, n, sites),
        tv_to_gibbs: total_variation(&pi.probs, &gibbs),
        sampler_tv,
    };

    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    let pi_path = dir.join("pi.csv");
    let mut w = csv::Writer::from_path(&pi_path).map_err(|e| csv_error(&pi_path, e))?;
    w.write_record(["index", "state", "pi", "gibbs"]).map_err(|e| csv_error(&pi_path, e))?;
    for (i, (p, g)) in pi.probs.iter().zip(&gibbs).enumerate() {
        let state: Vec<String> = decode(i, n, sites).iter().map(u16::to_string).collect();
        w.write_record([i.to_string(), state.join(" "), p.to_string(), g.to_string()])
            .map_err(|e| csv_error(&pi_path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&pi_path, e))?;
    files.push(FileEntry::new(dir, "pi.csv", "stationary", pi.probs.len())?);

    if cfg.oracle.dump_generator {
        let path = dir.join("generator.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(["row", "col", "rate"]).map_err(|e| csv_error(&path, e))?;
        let mut rows = 0;
        for i in 0..q.dimension() {
            for (j, r) in q.row(i) {
                w.write_record([i.to_string(), j.to_string(), r.to_string()])
                    .map_err(|e| csv_error(&path, e))?;
                rows += 1;
            }
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
        files.push(FileEntry::new(dir, "generator.csv", "generator", rows)?);
    }
    output::write_json(&dir.join("oracle.json"), &report)?;
    files.push(FileEntry::new(dir, "oracle.json", "oracle", 1)?);

    let manifest = Manifest {
        software: SOFTWARE.to_string(),
        config: cfg.clone(),
        seed: cfg.rng.seed,
        stream: cfg.rng.stream,
        derived: Derived {
            sites,
            bonds: lattice.num_bonds(),
            clock: Some(crate::run::ClockDerived {
                p_plus: params.p_plus,
                p_minus: params.p_minus,
                drift: params.drift(),
                rate_bound: rotators_core::clock::rate_bound(&params),
            }),
            noise_amplitude: None,
        },
        wall_time_s: clock.elapsed().as_secs_f64(),
        files,
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(report)
}
