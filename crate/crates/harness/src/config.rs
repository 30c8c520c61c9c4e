//! Experiment configuration, as read from TOML.
//!
//! Every key has a default except `lattice.dims`, `model.kind`,
//! `dynamics.beta`, `dynamics.t_end` and `dynamics.sample_every`. Unknown
//! keys are rejected.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub model: ModelConfig,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub rng: RngConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub dims: [usize; 3],
    #[serde(default)]
    pub boundary: BoundaryConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    #[default]
    Periodic,
    Coherent {
        zeta: f64,
    },
    /// Clamped in x1 at `2πk/N` (upper face) and `2π(k+N/2)/N` (lower
    /// face), periodic in x2 and x3.
    Interface {
        k: u32,
        n: u32,
    },
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Clock,
    Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Clock size; ignored by the xy model.
    #[serde(default = "default_n")]
    pub n: u32,
    #[serde(default)]
    pub interaction: InteractionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InteractionConfig {
    #[default]
    Cosine,
    VeryNonlinear {
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeConfig {
    EulerMaruyama,
    #[default]
    StochasticHeun,
}

/// How clock prefactors are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockRates {
    /// `p± = e^{±d/2}` unless `p_plus`/`p_minus` are given.
    #[default]
    Drift,
    /// `p± = 1 ± πβd/N`, time accelerated by `N²/(4π²β)`; `drift` is the
    /// target XY drift.
    Diffusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub beta: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_minus: Option<f64>,
    #[serde(default)]
    pub clock_rates: ClockRates,
    /// Multiplies every clock rate.
    #[serde(default = "one")]
    pub time_scale: f64,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: f64,
    #[serde(default)]
    pub record_full_states: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Coherent,
    Random,
    Interface,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default)]
    pub kind: InitKind,
    /// Coherent xy angle.
    #[serde(default)]
    pub angle: f64,
    /// Clock index for coherent clock and interface initial states.
    #[serde(default)]
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default = "yes")]
    pub series: bool,
    #[serde(default)]
    pub correlation: bool,
    #[serde(default)]
    pub layers: bool,
    #[serde(default)]
    pub correlation_axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_r: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            series: true,
            correlation: false,
            layers: false,
            correlation_axis: 0,
            max_r: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub window_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_end: Option<f64>,
    #[serde(default = "default_m_min")]
    pub m_min: f64,
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_omega_sigmas")]
    pub omega_sigmas: f64,
    #[serde(default = "default_residual_max")]
    pub residual_max: f64,
    #[serde(default = "one")]
    pub decay_r_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_r_max: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_start: 0.0,
            window_end: None,
            m_min: default_m_min(),
            omega_min: default_omega_min(),
            omega_sigmas: default_omega_sigmas(),
            residual_max: default_residual_max(),
            decay_r_min: 1.0,
            decay_r_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverConfig {
    #[default]
    Gmres,
    Power,
    Dense,
}

/// Settings for the `oracle` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_state_cap")]
    pub state_cap: usize,
    #[serde(default)]
    pub dump_generator: bool,
    /// Also run the sampler and report its distance to the exact law.
    #[serde(default)]
    pub compare_sampler: bool,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::Gmres,
            tol: default_tol(),
            max_iter: default_max_iter(),
            state_cap: default_state_cap(),
            dump_generator: false,
            compare_sampler: false,
            burn_in: default_burn_in(),
        }
    }
}

fn default_tol() -> f64 {
    1e-14
}
fn default_max_iter() -> usize {
    20_000
}
fn default_state_cap() -> usize {
    rotators_core::oracle::DEFAULT_STATE_CAP
}
fn default_burn_in() -> f64 {
    0.01
}
fn default_n() -> u32 {
    6
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_dt() -> f64 {
    rotators_core::XyParams::DEFAULT_DT
}
fn default_dir() -> String {
    "out".into()
}
fn default_m_min() -> f64 {
    0.1
}
fn default_omega_min() -> f64 {
    1e-2
}
fn default_omega_sigmas() -> f64 {
    5.0
}
fn default_residual_max() -> f64 {
    0.5
}

fn bad(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn finite(key: &str, v: f64) -> Result<f64, HarnessError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, format!("must be finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn t_window(&self) -> (f64, f64) {
        let end = self.analysis.window_end.unwrap_or(self.dynamics.t_end);
        (self.analysis.window_start, end)
    }

    /// Clock size that the interface boundary or initial state refers to.
    pub fn interface_n(&self) -> u32 {
        match self.lattice.boundary {
            BoundaryConfig::Interface { n, .. } => n,
            _ => self.model.n,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let dims = self.lattice.dims;
        if dims.contains(&0) {
            return Err(bad("lattice.dims", format!("every extent must be >= 1, got {dims:?}")));
        }
        if dims.iter().product::<usize>() > u32::MAX as usize {
            return Err(bad("lattice.dims", "too many sites"));
        }
        match self.lattice.boundary {
            BoundaryConfig::Coherent { zeta } => {
                finite("lattice.boundary.zeta", zeta)?;
            }
            BoundaryConfig::Interface { k, n } => {
                if n < 2 || n % 2 != 0 {
                    return Err(bad("lattice.boundary.n", format!("interface needs an even N, got {n}")));
                }
                if k >= n {
                    return Err(bad("lattice.boundary.k", format!("must be < N = {n}, got {k}")));
                }
                if !dims[0].is_multiple_of(2) {
                    return Err(bad("lattice.dims", format!("interface needs an even L1, got {}", dims[0])));
                }
                if self.model.kind == ModelKind::Clock && n != self.model.n {
                    return Err(bad("lattice.boundary.n", format!("must equal model.n = {}", self.model.n)));
                }
            }
            BoundaryConfig::Periodic | BoundaryConfig::Open => {}
        }

        let clock = self.model.kind == ModelKind::Clock;
        if clock && !(2..=65536).contains(&self.model.n) {
            return Err(bad("model.n", format!("must lie in 2..=65536, got {}", self.model.n)));
        }
        if let InteractionConfig::VeryNonlinear { p } = self.model.interaction {
            if !(p.is_finite() && p >= 1.0) {
                return Err(bad("model.interaction.p", format!("must be >= 1, got {p}")));
            }
        }

        let d = &self.dynamics;
        let beta = finite("dynamics.beta", d.beta)?;
        if beta < 0.0 || (!clock && beta == 0.0) {
            let need = if clock { ">= 0" } else { "> 0" };
            return Err(bad("dynamics.beta", format!("must be {need}, got {beta}")));
        }
        finite("dynamics.drift", d.drift)?;
        if clock && d.drift < 0.0 {
            return Err(bad("dynamics.drift", format!("clock drift must be >= 0, got {}", d.drift)));
        }
        match (d.p_plus, d.p_minus) {
            (None, None) => {}
            (Some(pp), Some(pm)) => {
                if !clock {
                    return Err(bad("dynamics.p_plus", "only meaningful for the clock model"));
                }
                if !(pm.is_finite() && pm > 0.0) {
                    return Err(bad("dynamics.p_minus", format!("must be > 0, got {pm}")));
                }
                if !(pp.is_finite() && pp >= pm) {
                    return Err(bad("dynamics.p_plus", format!("must be >= p_minus, got {pp}")));
                }
                if d.drift != 0.0 {
                    return Err(bad("dynamics.drift", "give either drift or p_plus/p_minus, not both"));
                }
            }
            (Some(_), None) => return Err(bad("dynamics.p_minus", "required together with p_plus")),
            (None, Some(_)) => return Err(bad("dynamics.p_plus", "required together with p_minus")),
        }
        if d.clock_rates == ClockRates::Diffusive {
            if !clock {
                return Err(bad("dynamics.clock_rates", "diffusive rates apply to the clock model"));
            }
            if d.p_plus.is_some() {
                return Err(bad("dynamics.p_plus", "not allowed with diffusive rates"));
            }
            if beta <= 0.0 {
                return Err(bad("dynamics.beta", "diffusive rates need beta > 0"));
            }
            if (self.model.n as f64) <= PI * beta * d.drift {
                return Err(bad(
                    "model.n",
                    format!("diffusive rates need N > π·β·d = {}", PI * beta * d.drift),
                ));
            }
        }
        if !(d.time_scale.is_finite() && d.time_scale > 0.0) {
            return Err(bad("dynamics.time_scale", format!("must be > 0, got {}", d.time_scale)));
        }
        if !(d.dt.is_finite() && d.dt > 0.0) {
            return Err(bad("dynamics.dt", format!("must be > 0, got {}", d.dt)));
        }
        if !(d.t_end.is_finite() && d.t_end > 0.0) {
            return Err(bad("dynamics.t_end", format!("must be > 0, got {}", d.t_end)));
        }
        if !(d.sample_every.is_finite() && d.sample_every > 0.0 && d.sample_every <= d.t_end) {
            return Err(bad(
                "dynamics.sample_every",
                format!("must lie in (0, t_end], got {}", d.sample_every),
            ));
        }
        if !clock {
            let ratio = d.sample_every / d.dt;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(bad("dynamics.sample_every", "must be a whole number of steps dt"));
            }
        }

        let init = &self.init;
        finite("init.angle", init.angle)?;
        match init.kind {
            InitKind::Coherent if clock && init.k >= self.model.n => {
                return Err(bad("init.k", format!("must be < N = {}, got {}", self.model.n, init.k)));
            }
            InitKind::Interface => {
                let n = self.interface_n();
                if n < 2 || !n.is_multiple_of(2) {
                    return Err(bad("init.kind", format!("interface initial state needs an even N, got {n}")));
                }
                if init.k >= n {
                    return Err(bad("init.k", format!("must be < N = {n}, got {}", init.k)));
                }
            }
            _ => {}
        }

        let out = &self.output;
        if out.directory.is_empty() {
            return Err(bad("output.directory", "must not be empty"));
        }
        if out.correlation_axis > 2 {
            return Err(bad("output.correlation_axis", format!("must be 0, 1 or 2, got {}", out.correlation_axis)));
        }
        if let Some(r) = out.max_r {
            let extent = dims[out.correlation_axis];
            if r > extent / 2 {
                return Err(bad("output.max_r", format!("must be <= {} (half the extent), got {r}", extent / 2)));
            }
        }

        let a = &self.analysis;
        let (start, end) = self.t_window();
        if !(start.is_finite() && start >= 0.0 && start < d.t_end) {
            return Err(bad("analysis.window_start", format!("must lie in [0, t_end), got {start}")));
        }
        if !(end.is_finite() && end > start) {
            return Err(bad("analysis.window_end", format!("must exceed window_start, got {end}")));
        }
        for (key, v) in [
            ("analysis.m_min", a.m_min),
            ("analysis.omega_min", a.omega_min),
            ("analysis.omega_sigmas", a.omega_sigmas),
            ("analysis.residual_max", a.residual_max),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(key, format!("must be >= 0, got {v}")));
            }
        }
        if !(a.decay_r_min.is_finite() && a.decay_r_min > 0.0) {
            return Err(bad("analysis.decay_r_min", "must be > 0"));
        }
        if let Some(r) = a.decay_r_max {
            if !(r.is_finite() && r > a.decay_r_min) {
                return Err(bad("analysis.decay_r_max", "must exceed decay_r_min"));
            }
        }
        let o = &self.oracle;
        if !(o.tol.is_finite() && o.tol > 0.0) {
            return Err(bad("oracle.tol", format!("must be > 0, got {}", o.tol)));
        }
        if o.max_iter == 0 {
            return Err(bad("oracle.max_iter", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&o.burn_in) {
            return Err(bad("oracle.burn_in", format!("must lie in [0, 1), got {}", o.burn_in)));
        }
        Ok(())
    }
}
