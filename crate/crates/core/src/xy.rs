//! Driven XY Langevin dynamics on the circle:
//!
//! ```text
//! dφ_x = d·dt − ∂H/∂φ_x·dt + sqrt(2/β)·dW_x      (mod 2π)
//! ```
//!
//! Updates are synchronous: every site reads the pre-step configuration.
//! The noise for step `j` is drawn from stream `j` of a [`NoiseStream`], so
//! runs that differ only in the drift see identical increments.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::energy::{energy_of_angles, grad_of_angles};
use crate::error::{invalid, Error, Result};
use crate::interaction::Interaction;
use crate::lattice::Lattice;
use crate::noise::NoiseStream;
use crate::state::{wrap_angle, SpinState};
use crate::trajectory::{Sample, SnapshotData, Snapshots, Trajectory};

/// Above this many sites a step is split across the rayon pool.
const PARALLEL_SITES: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    EulerMaruyama,
    #[default]
    StochasticHeun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyParams {
    pub beta: f64,
    pub drift: f64,
    pub interaction: Interaction,
    pub dt: f64,
    pub scheme: Scheme,
}

impl XyParams {
    pub const DEFAULT_DT: f64 = 0.005;

    pub fn new(beta: f64, drift: f64, interaction: Interaction, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid("dynamics.beta", format!("must be finite and > 0, got {beta}")));
        }
        if !drift.is_finite() {
            return Err(invalid("dynamics.drift", "must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dynamics.dt", format!("must be > 0, got {dt}")));
        }
        interaction.validate()?;
        Ok(Self {
            beta,
            drift,
            interaction,
            dt,
            scheme,
        })
    }

    pub fn noise_amplitude(&self) -> f64 {
        (2.0 / self.beta).sqrt()
    }
}

fn drift_field(angles: &[f64], lattice: &Lattice, params: &XyParams, out: &mut [f64]) {
    let f = |(x, o): (usize, &mut f64)| *o = params.drift - grad_of_angles(angles, lattice, &params.interaction, x);
    if angles.len() >= PARALLEL_SITES {
        out.par_iter_mut().enumerate().for_each(f);
    } else {
        out.iter_mut().enumerate().for_each(f);
    }
}

/// Reusable buffers for stepping one lattice.
#[derive(Debug, Clone)]
struct Stepper {
    force: Vec<f64>,
    predicted: Vec<f64>,
    force_pred: Vec<f64>,
    increment: Vec<f64>,
}

impl Stepper {
    fn new(sites: usize) -> Self {
        Self {
            force: vec![0.0; sites],
            predicted: vec![0.0; sites],
            force_pred: vec![0.0; sites],
            increment: vec![0.0; sites],
        }
    }

    /// Advance `angles` in place by one step with Wiener increments `dw`.
    /// Returns the mean raw (unwrapped) increment per site.
    fn step(&mut self, angles: &mut [f64], lattice: &Lattice, params: &XyParams, dw: &[f64]) -> f64 {
        let dt = params.dt;
        let sigma = params.noise_amplitude();
        drift_field(angles, lattice, params, &mut self.force);
        match params.scheme {
            Scheme::EulerMaruyama => {
                for ((inc, f), w) in self.increment.iter_mut().zip(&self.force).zip(dw) {
                    *inc = f * dt + sigma * w;
                }
            }
            Scheme::StochasticHeun => {
                for (((p, a), f), w) in self.predicted.iter_mut().zip(angles.iter()).zip(&self.force).zip(dw) {
                    *p = a + f * dt + sigma * w;
                }
                drift_field(&self.predicted, lattice, params, &mut self.force_pred);
                for (((inc, f), fp), w) in self
                    .increment
                    .iter_mut()
                    .zip(&self.force)
                    .zip(&self.force_pred)
                    .zip(dw)
                {
                    *inc = 0.5 * (f + fp) * dt + sigma * w;
                }
            }
        }
        let mut total = 0.0;
        for (a, inc) in angles.iter_mut().zip(&self.increment) {
            *a = wrap_angle(*a + inc);
            total += inc;
        }
        total / angles.len().max(1) as f64
    }
}

/// One synchronous step. `dw` holds one Wiener increment (variance `dt`)
/// per site.
pub fn integrate_step(state: &SpinState, lattice: &Lattice, params: &XyParams, dw: &[f64]) -> Result<SpinState> {
    state.check_len(lattice)?;
    let SpinState::Xy { angles } = state else {
        return Err(Error::WrongKind { expected: "xy" });
    };
    if dw.len() != angles.len() {
        return Err(invalid("noise", format!("need {} increments, got {}", angles.len(), dw.len())));
    }
    let mut next = angles.clone();
    Stepper::new(angles.len()).step(&mut next, lattice, params, dw);
    Ok(SpinState::Xy { angles: next })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XySchedule {
    pub t_end: f64,
    pub sample_every: f64,
    pub record_full_states: bool,
}

impl XySchedule {
    /// `(total steps, steps between samples)`
    pub fn steps(&self, dt: f64) -> Result<(u64, u64)> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("dynamics.t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if !(self.sample_every.is_finite() && self.sample_every > 0.0 && self.sample_every <= self.t_end) {
            return Err(invalid(
                "dynamics.sample_every",
                format!("must lie in (0, t_end], got {}", self.sample_every),
            ));
        }
        let total = (self.t_end / dt).round() as u64;
        let stride = (self.sample_every / dt).round() as u64;
        if stride == 0 {
            return Err(invalid("dynamics.sample_every", "shorter than one time step"));
        }
        Ok((total, stride))
    }
}

pub(crate) fn magnetization_of(angles: &[f64]) -> Complex64 {
    let (re, im) = angles.iter().fold((0.0, 0.0), |(re, im), a| {
        let (s, c) = a.sin_cos();
        (re + c, im + s)
    });
    Complex64::new(re, im) / angles.len().max(1) as f64
}

/// Integrate from `state` (updated in place) to `schedule.t_end`, recording
/// a sample after every `sample_every` worth of steps. The time of step `j`
/// is `j·dt`.
pub fn simulate_xy(
    state: &mut SpinState,
    lattice: &Lattice,
    params: &XyParams,
    schedule: &XySchedule,
    noise: &NoiseStream,
) -> Result<Trajectory> {
    state.check_len(lattice)?;
    let SpinState::Xy { angles } = state else {
        return Err(Error::WrongKind { expected: "xy" });
    };
    let (total, stride) = schedule.steps(params.dt)?;
    let sites = angles.len();
    let mut stepper = Stepper::new(sites);
    let mut dw = vec![0.0; sites];
    let mut samples = Vec::with_capacity((total / stride) as usize);
    let mut snapshots = schedule.record_full_states.then(|| Snapshots {
        n_sites: sites,
        times: Vec::new(),
        data: SnapshotData::Xy { angles: Vec::new() },
    });
    let mut winding = 0.0;
    for j in 0..total {
        noise.fill_increments(j, params.dt, &mut dw);
        winding += stepper.step(angles, lattice, params, &dw);
        let done = j + 1;
        if done % stride == 0 {
            let t = done as f64 * params.dt;
            samples.push(Sample {
                t,
                m: magnetization_of(angles),
                energy_per_site: energy_of_angles(angles, lattice, &params.interaction) / sites as f64,
                winding,
            });
            if let Some(snap) = snapshots.as_mut() {
                snap.times.push(t);
                if let SnapshotData::Xy { angles: buf } = &mut snap.data {
                    buf.extend_from_slice(angles);
                }
            }
        }
    }
    Ok(Trajectory { samples, snapshots })
}
