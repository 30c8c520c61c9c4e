//! Named desk-scale experiments.
//!
//! Parameters are calibration choices sized to finish in seconds to a few
//! minutes on one core; none of them are reference values.

use crate::config::{
    AnalysisConfig, BoundaryConfig, ClockRates, DynamicsConfig, ExperimentConfig, InitConfig, InitKind,
    InteractionConfig, LatticeConfig, ModelConfig, ModelKind, OracleConfig, OutputConfig, RngConfig, SchemeConfig,
};
use crate::error::{HarnessError, Result};
use crate::sweep::{SweepAxes, SweepGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Run(ExperimentConfig),
    Sweep(SweepGrid),
}

impl Preset {
    /// Subcommand that consumes the emitted file.
    pub fn verb(&self) -> &'static str {
        match self {
            Preset::Run(_) => "simulate",
            Preset::Sweep(_) => "sweep",
        }
    }

    pub fn to_toml_string(&self) -> String {
        match self {
            Preset::Run(c) => c.to_toml_string(),
            Preset::Sweep(g) => g.to_toml_string(),
        }
    }
}

pub const PRESETS: [(&str, &str); 6] = [
    (
        "theorem-t1-magnetization",
        "symmetric 6-clock on 10^3 at beta = 2 from each of the six coherent states",
    ),
    ("rotating-xy", "driven XY on 12^3, beta = 3, d = 0.5, coherent start"),
    (
        "dobrushin-interface",
        "4-clock between opposite clamped faces, drift scan with layer profiles",
    ),
    ("dcr-scan", "driven 6-clock on 8^3 at beta = 2, scan over the drift"),
    (
        "intermediate-decay",
        "driven 6-clock on 16^3 near the ordering temperature, correlation decay",
    ),
    (
        "diffusive-limit",
        "single free 64-clock with diffusive rates, compare with drifted Brownian motion",
    ),
];

pub fn names() -> Vec<String> {
    PRESETS.iter().map(|(n, _)| n.to_string()).collect()
}

fn base(kind: ModelKind, dims: [usize; 3], n: u32, beta: f64, drift: f64, t_end: f64, sample_every: f64) -> ExperimentConfig {
    ExperimentConfig {
        lattice: LatticeConfig {
            dims,
            boundary: BoundaryConfig::Periodic,
        },
        model: ModelConfig {
            kind,
            n,
            interaction: InteractionConfig::Cosine,
        },
        dynamics: DynamicsConfig {
            beta,
            drift,
            p_plus: None,
            p_minus: None,
            clock_rates: ClockRates::Drift,
            time_scale: 1.0,
            scheme: SchemeConfig::StochasticHeun,
            dt: rotators_core::XyParams::DEFAULT_DT,
            t_end,
            sample_every,
            record_full_states: false,
        },
        init: InitConfig::default(),
        rng: RngConfig { seed: 1, stream: 0 },
        output: OutputConfig::default(),
        analysis: AnalysisConfig::default(),
        oracle: OracleConfig::default(),
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    let out = |c: &mut ExperimentConfig| c.output.directory = format!("out/{name}");
    let p = match name {
        "theorem-t1-magnetization" => {
            let mut c = base(ModelKind::Clock, [10, 10, 10], 6, 2.0, 0.0, 40.0, 0.5);
            c.analysis.window_start = 10.0;
            c.rng.seed = 101;
            out(&mut c);
            Preset::Sweep(SweepGrid {
                sweep: SweepAxes {
                    beta: None,
                    n: None,
                    drift: None,
                    l: None,
                    init_k: Some((0..6).collect()),
                    replicas: 1,
                },
                base: c,
            })
        }
        "rotating-xy" => {
            let mut c = base(ModelKind::Xy, [12, 12, 12], 6, 3.0, 0.5, 60.0, 0.1);
            c.analysis.window_start = 10.0;
            c.rng.seed = 202;
            out(&mut c);
            Preset::Run(c)
        }
        "dobrushin-interface" => {
            let mut c = base(ModelKind::Clock, [12, 8, 8], 4, 1.5, 0.0, 50.0, 1.0);
            c.lattice.boundary = BoundaryConfig::Interface { k: 0, n: 4 };
            c.init = InitConfig {
                kind: InitKind::Interface,
                angle: 0.0,
                k: 0,
            };
            c.output.layers = true;
            c.analysis.window_start = 10.0;
            c.rng.seed = 303;
            out(&mut c);
            Preset::Sweep(SweepGrid {
                sweep: SweepAxes {
                    beta: None,
                    n: None,
                    drift: Some(vec![0.0, 0.5, 1.0]),
                    l: None,
                    init_k: None,
                    replicas: 1,
                },
                base: c,
            })
        }
        "dcr-scan" => {
            let mut c = base(ModelKind::Clock, [8, 8, 8], 6, 2.0, 0.0, 40.0, 0.25);
            c.analysis.window_start = 10.0;
            c.rng.seed = 404;
            out(&mut c);
            Preset::Sweep(SweepGrid {
                sweep: SweepAxes {
                    beta: None,
                    n: None,
                    drift: Some(vec![0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0]),
                    l: None,
                    init_k: None,
                    replicas: 1,
                },
                base: c,
            })
        }
        "intermediate-decay" => {
            let mut c = base(ModelKind::Clock, [16, 16, 16], 6, 0.6, 1.0, 100.0, 1.0);
            c.init.kind = InitKind::Random;
            c.dynamics.record_full_states = true;
            c.output.correlation = true;
            c.analysis.window_start = 20.0;
            c.rng.seed = 505;
            out(&mut c);
            Preset::Run(c)
        }
        "diffusive-limit" => {
            let mut c = base(ModelKind::Clock, [1, 1, 1], 64, 1.0, 1.0, 2000.0, 1.0);
            c.lattice.boundary = BoundaryConfig::Open;
            c.dynamics.clock_rates = ClockRates::Diffusive;
            c.rng.seed = 606;
            out(&mut c);
            Preset::Run(c)
        }
        _ => {
            return Err(HarnessError::UnknownPreset {
                name: name.to_string(),
                available: names(),
            })
        }
    };
    Ok(p)
}
