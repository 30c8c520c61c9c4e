//! Single-trajectory runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rotators_core::clock::{diffusive_preset, rate_bound};
use rotators_core::noise::sequential_rng;
use rotators_core::observables::{
    classify_decay, correlation_curve, layer_profile, period_average, CorrelationPoint, DecayClass,
};
use rotators_core::{
    detect_rotation, init_state, simulate_clock, simulate_xy, Boundary, ClockParams, ClockSchedule, InitSpec,
    Interaction, Lattice, NoiseStream, RotationThresholds, Scheme, SpinKind, SpinState, TimeWindow, Trajectory,
    XyParams, XySchedule,
};
use serde::{Deserialize, Serialize};

use crate::config::{
    BoundaryConfig, ClockRates, ExperimentConfig, InitKind, InteractionConfig, ModelKind, SchemeConfig,
};
use crate::error::{HarnessError, Result};
use crate::output::{self, FileEntry};

pub const SOFTWARE: &str = concat!("rotators ", env!("CARGO_PKG_VERSION"));

/// Stream offset separating the initial-state draw from the dynamics.
const INIT_STREAM: u64 = 1 << 63;

pub fn build_lattice(cfg: &ExperimentConfig) -> Result<Lattice> {
    let boundary = match cfg.lattice.boundary {
        BoundaryConfig::Periodic => Boundary::Periodic,
        BoundaryConfig::Coherent { zeta } => Boundary::Coherent { zeta },
        BoundaryConfig::Interface { k, n } => Boundary::InterfaceClamped { k, n },
        BoundaryConfig::Open => Boundary::Open,
    };
    Ok(Lattice::new(cfg.lattice.dims, boundary)?)
}

pub fn interaction(cfg: &ExperimentConfig) -> Interaction {
    match cfg.model.interaction {
        InteractionConfig::Cosine => Interaction::Cosine,
        InteractionConfig::VeryNonlinear { p } => Interaction::VeryNonlinear { p },
    }
}

/// Effective clock parameters, including any time acceleration.
pub fn clock_params(cfg: &ExperimentConfig) -> Result<ClockParams> {
    let d = &cfg.dynamics;
    let inter = interaction(cfg);
    let (base, scale) = match d.clock_rates {
        ClockRates::Diffusive => {
            let p = diffusive_preset(d.beta, d.drift, cfg.model.n)?;
            let params = ClockParams::new(d.beta, cfg.model.n, p.params.p_plus, p.params.p_minus, inter)?;
            (params, p.time_scale)
        }
        ClockRates::Drift => {
            let params = match (d.p_plus, d.p_minus) {
                (Some(pp), Some(pm)) => ClockParams::new(d.beta, cfg.model.n, pp, pm, inter)?,
                _ => ClockParams::from_drift(d.beta, cfg.model.n, d.drift, inter)?,
            };
            (params, 1.0)
        }
    };
    Ok(base.accelerated(scale * d.time_scale)?)
}

pub fn xy_params(cfg: &ExperimentConfig) -> Result<XyParams> {
    let d = &cfg.dynamics;
    let scheme = match d.scheme {
        SchemeConfig::EulerMaruyama => Scheme::EulerMaruyama,
        SchemeConfig::StochasticHeun => Scheme::StochasticHeun,
    };
    Ok(XyParams::new(d.beta, d.drift, interaction(cfg), d.dt, scheme)?)
}

pub fn initial_state(cfg: &ExperimentConfig, lattice: &Lattice) -> Result<SpinState> {
    let kind = match cfg.model.kind {
        ModelKind::Clock => SpinKind::Clock { n: cfg.model.n },
        ModelKind::Xy => SpinKind::Xy,
    };
    let spec = match (cfg.init.kind, cfg.model.kind) {
        (InitKind::Coherent, ModelKind::Clock) => InitSpec::CoherentIndex {
            k: cfg.init.k,
            n: cfg.model.n,
        },
        (InitKind::Coherent, ModelKind::Xy) => InitSpec::CoherentAngle(cfg.init.angle),
        (InitKind::Random, _) => InitSpec::UniformRandom,
        (InitKind::Interface, _) => InitSpec::Interface {
            k: cfg.init.k,
            n: cfg.interface_n(),
        },
    };
    let mut rng = sequential_rng(cfg.rng.seed, cfg.rng.stream ^ INIT_STREAM);
    Ok(init_state(lattice, kind, spec, &mut rng)?)
}

pub struct Simulation {
    pub lattice: Lattice,
    pub trajectory: Trajectory,
    pub final_state: SpinState,
}

/// Run the dynamics without touching the filesystem.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let lattice = build_lattice(cfg)?;
    let mut state = initial_state(cfg, &lattice)?;
    let d = &cfg.dynamics;
    let trajectory = match cfg.model.kind {
        ModelKind::Clock => {
            let params = clock_params(cfg)?;
            let schedule = ClockSchedule {
                t_end: d.t_end,
                sample_every: d.sample_every,
                record_full_states: d.record_full_states,
            };
            let mut rng = sequential_rng(cfg.rng.seed, cfg.rng.stream);
            simulate_clock(&mut state, &lattice, &params, &schedule, &mut rng)?
        }
        ModelKind::Xy => {
            let params = xy_params(cfg)?;
            let schedule = XySchedule {
                t_end: d.t_end,
                sample_every: d.sample_every,
                record_full_states: d.record_full_states,
            };
            let noise = NoiseStream::new(cfg.rng.seed, cfg.rng.stream);
            simulate_xy(&mut state, &lattice, &params, &schedule, &noise)?
        }
    };
    Ok(Simulation {
        lattice,
        trajectory,
        final_state: state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSummary {
    pub rotating: bool,
    pub omega: f64,
    pub omega_stderr: f64,
    pub phase_intercept: f64,
    pub m_floor: f64,
    pub phase_residual: f64,
    pub undersampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub t_start: f64,
    pub period: f64,
    pub re_m: f64,
    pub im_m: f64,
    pub abs_m: f64,
    pub energy_per_site: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub class: String,
    pub r_window: [f64; 2],
    pub rate: Option<f64>,
    pub exponent: Option<f64>,
    pub amplitude: Option<f64>,
    pub r_squared: Option<f64>,
    pub level: Option<f64>,
    pub reason: Option<String>,
}

impl DecaySummary {
    fn new(class: &DecayClass, r_window: (f64, f64)) -> Self {
        let mut s = Self {
            class: class.label().to_string(),
            r_window: [r_window.0, r_window.1],
            rate: None,
            exponent: None,
            amplitude: None,
            r_squared: None,
            level: None,
            reason: None,
        };
        match class {
            DecayClass::Exponential {
                rate,
                amplitude,
                r_squared,
            } => {
                s.rate = Some(*rate);
                s.amplitude = Some(*amplitude);
                s.r_squared = Some(*r_squared);
            }
            DecayClass::Algebraic {
                exponent,
                amplitude,
                r_squared,
            } => {
                s.exponent = Some(*exponent);
                s.amplitude = Some(*amplitude);
                s.r_squared = Some(*r_squared);
            }
            DecayClass::Flat { level } => s.level = Some(*level),
            DecayClass::Undetermined { reason } => s.reason = Some(reason.clone()),
        }
        s
    }
}

/// Window statistics and diagnostics written to `analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub window: [f64; 2],
    pub samples_in_window: usize,
    pub abs_m_mean: Option<f64>,
    pub abs_m_min: Option<f64>,
    pub re_m_mean: Option<f64>,
    pub im_m_mean: Option<f64>,
    pub energy_per_site_mean: Option<f64>,
    /// Mean and variance of the per-site winding accumulated over one
    /// sample interval.
    pub displacement_mean: Option<f64>,
    pub displacement_variance: Option<f64>,
    pub rotation: Option<RotationSummary>,
    pub rotation_error: Option<String>,
    pub period_average: Option<PeriodSummary>,
    pub decay: Option<DecaySummary>,
}

pub fn thresholds(cfg: &ExperimentConfig) -> RotationThresholds {
    RotationThresholds {
        m_min: cfg.analysis.m_min,
        omega_min: cfg.analysis.omega_min,
        omega_sigmas: cfg.analysis.omega_sigmas,
        residual_max: cfg.analysis.residual_max,
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn analyze(cfg: &ExperimentConfig, trajectory: &Trajectory, correlation: Option<&[CorrelationPoint]>) -> Analysis {
    let (start, end) = cfg.t_window();
    let inside: Vec<_> = trajectory
        .samples
        .iter()
        .filter(|s| s.t >= start - 1e-9 && s.t <= end + 1e-9)
        .collect();
    let m_mean = mean(inside.iter().map(|s| s.m.re)).zip(mean(inside.iter().map(|s| s.m.im)));
    let steps: Vec<f64> = inside.windows(2).map(|w| w[1].winding - w[0].winding).collect();
    let displacement_mean = mean(steps.iter().copied());
    let displacement_variance = displacement_mean.and_then(|mu| {
        (steps.len() > 1).then(|| steps.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (steps.len() - 1) as f64)
    });

    let window = TimeWindow::new(start, end);
    let (rotation, rotation_error) = match detect_rotation(trajectory, window, &thresholds(cfg)) {
        Ok(v) => (
            Some(RotationSummary {
                rotating: v.rotating,
                omega: v.omega,
                omega_stderr: v.omega_stderr,
                phase_intercept: v.phase_intercept,
                m_floor: v.m_floor,
                phase_residual: v.phase_residual,
                undersampled: v.undersampled,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let period = rotation
        .as_ref()
        .filter(|r| r.rotating)
        .and_then(|r| period_average(trajectory, r.omega, start).ok())
        .map(|p| PeriodSummary {
            t_start: p.t_start,
            period: p.period,
            re_m: p.m.re,
            im_m: p.m.im,
            abs_m: p.abs_m,
            energy_per_site: p.energy_per_site,
        });
    let decay = correlation.filter(|c| c.len() > 2).map(|curve| {
        let r_max = cfg.analysis.decay_r_max.unwrap_or(curve.last().unwrap().r as f64);
        let r_window = (cfg.analysis.decay_r_min, r_max);
        let points: Vec<(f64, f64)> = curve.iter().map(|p| (p.r as f64, p.truncated)).collect();
        DecaySummary::new(&classify_decay(&points, r_window), r_window)
    });
    Analysis {
        window: [start, end],
        samples_in_window: inside.len(),
        abs_m_mean: mean(inside.iter().map(|s| s.m.norm())),
        abs_m_min: inside.iter().map(|s| s.m.norm()).reduce(f64::min),
        re_m_mean: m_mean.map(|m| m.0),
        im_m_mean: m_mean.map(|m| m.1),
        energy_per_site_mean: mean(inside.iter().map(|s| s.energy_per_site)),
        displacement_mean,
        displacement_variance,
        rotation,
        rotation_error,
        period_average: period,
        decay,
    }
}

/// Correlation ensemble: recorded snapshots inside the analysis window, or
/// the final state when none were recorded.
pub fn correlation_for(cfg: &ExperimentConfig, sim: &Simulation) -> Result<Vec<CorrelationPoint>> {
    let axis = cfg.output.correlation_axis;
    let max_r = cfg.output.max_r.unwrap_or(cfg.lattice.dims[axis] / 2);
    let (start, end) = cfg.t_window();
    let mut states = Vec::new();
    if let Some(snap) = &sim.trajectory.snapshots {
        for (i, &t) in snap.times.iter().enumerate() {
            if t >= start - 1e-9 && t <= end + 1e-9 {
                states.push(snap.state(i));
            }
        }
    }
    if states.is_empty() {
        states.push(sim.final_state.clone());
    }
    Ok(correlation_curve(&states, &sim.lattice, max_r, axis)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockDerived {
    pub p_plus: f64,
    pub p_minus: f64,
    pub drift: f64,
    pub rate_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub sites: usize,
    pub bonds: usize,
    pub clock: Option<ClockDerived>,
    pub noise_amplitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub stream: u64,
    pub derived: Derived,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        output::read_json(&dir.join("manifest.json"))
    }
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub analysis: Analysis,
    pub trajectory: Trajectory,
}

/// Run `cfg` and write its artifacts into `cfg.output.directory`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_in(cfg, Path::new(&cfg.output.directory))
}

pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    let clock = Instant::now();
    let sim = simulate(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();

    if cfg.output.series {
        let rows = output::write_series(&dir.join("series.csv"), &sim.trajectory)?;
        files.push(FileEntry::new(dir, "series.csv", "series", rows)?);
    }
    let correlation = if cfg.output.correlation {
        let curve = correlation_for(cfg, &sim)?;
        let rows = output::write_correlation(&dir.join("correlation.csv"), &curve)?;
        files.push(FileEntry::new(dir, "correlation.csv", "correlation", rows)?);
        Some(curve)
    } else {
        None
    };
    if cfg.output.layers {
        let layers: Vec<Complex64> = layer_profile(&sim.final_state, &sim.lattice)?;
        let rows = output::write_layers(&dir.join("layers.csv"), &layers)?;
        files.push(FileEntry::new(dir, "layers.csv", "layers", rows)?);
    }
    if let Some(snap) = &sim.trajectory.snapshots {
        let rows = output::write_states(&dir.join("states.bin"), cfg.lattice.dims, snap)?;
        files.push(FileEntry::new(dir, "states.bin", "states", rows)?);
    }
    let analysis = analyze(cfg, &sim.trajectory, correlation.as_deref());
    output::write_json(&dir.join("analysis.json"), &analysis)?;
    files.push(FileEntry::new(dir, "analysis.json", "analysis", 1)?);

    let derived = Derived {
        sites: sim.lattice.num_sites(),
        bonds: sim.lattice.num_bonds(),
        clock: match cfg.model.kind {
            ModelKind::Clock => {
                let p = clock_params(cfg)?;
                Some(ClockDerived {
                    p_plus: p.p_plus,
                    p_minus: p.p_minus,
                    drift: p.drift(),
                    rate_bound: rate_bound(&p),
                })
            }
            ModelKind::Xy => None,
        },
        noise_amplitude: match cfg.model.kind {
            ModelKind::Xy => Some(xy_params(cfg)?.noise_amplitude()),
            ModelKind::Clock => None,
        },
    };
    let manifest = Manifest {
        software: SOFTWARE.to_string(),
        config: cfg.clone(),
        seed: cfg.rng.seed,
        stream: cfg.rng.stream,
        derived,
        wall_time_s: clock.elapsed().as_secs_f64(),
        files,
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    log::info!("run finished in {:.2}s -> {}", manifest.wall_time_s, dir.display());
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest,
        analysis,
        trajectory: sim.trajectory,
    })
}
