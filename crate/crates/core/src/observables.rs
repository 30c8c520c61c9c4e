//! Order parameters, rotation detection, correlations and period averages.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Boundary, Lattice};
use crate::state::SpinState;
use crate::trajectory::{Sample, Trajectory};

pub fn magnetization(state: &SpinState) -> Complex64 {
    match state {
        SpinState::Xy { angles } => crate::xy::magnetization_of(angles),
        SpinState::Clock { .. } => crate::xy::magnetization_of(&state.angles()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unwrapped {
    pub values: Vec<f64>,
    /// Indices `i` where the wrapped jump from `i-1` to `i` came within 0.1
    /// rad of `π`, so the true increment is ambiguous.
    pub suspect: Vec<usize>,
}

/// Continuous phase sequence from wrapped phases, choosing at each sample
/// the `2π` shift that makes the increment smallest.
pub fn unwrap_phase(phases: &[f64]) -> Unwrapped {
    let mut values = Vec::with_capacity(phases.len());
    let mut suspect = Vec::new();
    let mut turns: i64 = 0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let raw = p - phases[i - 1];
            let k = (raw / TAU).round();
            if (raw - TAU * k).abs() >= PI - 0.1 {
                suspect.push(i);
            }
            turns -= k as i64;
        }
        values.push(p + TAU * turns as f64);
    }
    if !suspect.is_empty() {
        log::warn!(
            "phase unwrapping: {} increments close to π, sampling may be too sparse",
            suspect.len()
        );
    }
    Unwrapped { values, suspect }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Largest absolute deviation of the data from the fitted line.
    pub max_residual: f64,
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x));
    let (ssr, max_residual) = residuals.fold((0.0, 0.0f64), |(s, m), r| (s + r * r, m.max(r.abs())));
    let stderr = if n > 2.0 && sxx > 0.0 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    LinearFit {
        slope,
        stderr,
        intercept,
        r_squared,
        max_residual,
    }
}

/// Closed time interval used for fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.start - 1e-9 && t <= self.end + 1e-9
    }
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares slope of the unwrapped phase against time on `window`.
pub fn fit_angular_velocity(times: &[f64], unwrapped: &[f64], window: TimeWindow) -> Result<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(unwrapped)
        .filter(|(t, _)| window.contains(**t))
        .map(|(t, p)| (*t, *p))
        .unzip();
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: xs.len(),
        });
    }
    Ok(linear_fit(&xs, &ys))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationThresholds {
    /// Minimum `|m|` over the window.
    pub m_min: f64,
    /// Absolute floor on `|ω|`.
    pub omega_min: f64,
    /// `|ω|` must also exceed this many standard errors.
    pub omega_sigmas: f64,
    /// Largest tolerated deviation of the phase from its linear fit (rad).
    pub residual_max: f64,
}

impl Default for RotationThresholds {
    fn default() -> Self {
        Self {
            m_min: 0.1,
            omega_min: 1e-2,
            omega_sigmas: 5.0,
            residual_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationVerdict {
    pub rotating: bool,
    pub omega: f64,
    pub omega_stderr: f64,
    /// Fitted phase at `t = 0`; differences between runs started from
    /// different phases give the relative phase shifts.
    pub phase_intercept: f64,
    pub m_floor: f64,
    pub phase_residual: f64,
    pub undersampled: bool,
}

pub fn detect_rotation(
    trajectory: &Trajectory,
    window: TimeWindow,
    thresholds: &RotationThresholds,
) -> Result<RotationVerdict> {
    let times = trajectory.times();
    let unwrapped = unwrap_phase(&trajectory.phases());
    let fit = fit_angular_velocity(&times, &unwrapped.values, window)?;
    let in_window: Vec<&Sample> = trajectory.samples.iter().filter(|s| window.contains(s.t)).collect();
    let m_floor = in_window.iter().map(|s| s.m.norm()).fold(f64::INFINITY, f64::min).min(1.0);
    let undersampled = unwrapped
        .suspect
        .iter()
        .any(|&i| window.contains(times[i]) || (i > 0 && window.contains(times[i - 1])));
    let omega_floor = thresholds.omega_min.max(thresholds.omega_sigmas * fit.stderr);
    let rotating = m_floor >= thresholds.m_min
        && fit.slope.abs() >= omega_floor
        && fit.max_residual <= thresholds.residual_max;
    Ok(RotationVerdict {
        rotating,
        omega: fit.slope,
        omega_stderr: fit.stderr,
        phase_intercept: fit.intercept,
        m_floor,
        phase_residual: fit.max_residual,
        undersampled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub r: usize,
    pub corr: f64,
    pub truncated: f64,
}

/// `⟨cos(φ_0 − φ_r)⟩` along `axis`, averaged over origins and over the
/// ensemble; the truncated value subtracts `|⟨m⟩|²` of the same ensemble.
/// Pairs wrap around the box only when the boundary is periodic.
pub fn correlation_curve(
    states: &[SpinState],
    lattice: &Lattice,
    max_r: usize,
    axis: usize,
) -> Result<Vec<CorrelationPoint>> {
    if states.is_empty() {
        return Err(invalid("states", "ensemble is empty"));
    }
    if axis > 2 {
        return Err(invalid("axis", format!("must be 0, 1 or 2, got {axis}")));
    }
    let extent = lattice.dims()[axis];
    if max_r > extent / 2 {
        return Err(invalid(
            "max_r",
            format!("{max_r} exceeds half the extent {extent} along axis {axis}"),
        ));
    }
    for s in states {
        s.check_len(lattice)?;
    }
    let periodic = matches!(lattice.boundary(), Boundary::Periodic)
        || (axis > 0 && matches!(lattice.boundary(), Boundary::InterfaceClamped { .. }));
    let mean_m = states.iter().map(magnetization).sum::<Complex64>() / states.len() as f64;
    let m2 = mean_m.norm_sqr();

    let angles: Vec<Vec<f64>> = states.iter().map(|s| s.angles()).collect();
    let mut out = Vec::with_capacity(max_r + 1);
    for r in 0..=max_r {
        let mut sum = 0.0;
        let mut count = 0usize;
        for phi in &angles {
            for x in 0..lattice.num_sites() {
                let c = lattice.coords(x);
                if !periodic && c[axis] + r >= extent {
                    continue;
                }
                let y = lattice.wrapped_shift(x, axis, r);
                sum += (phi[x] - phi[y]).cos();
                count += 1;
            }
        }
        let corr = if r == 0 { 1.0 } else { sum / count as f64 };
        out.push(CorrelationPoint {
            r,
            corr,
            truncated: corr - m2,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecayClass {
    /// `c(r) ≈ A·e^{−rate·r}`
    Exponential { rate: f64, amplitude: f64, r_squared: f64 },
    /// `c(r) ≈ A·r^{−exponent}`
    Algebraic { exponent: f64, amplitude: f64, r_squared: f64 },
    Flat { level: f64 },
    Undetermined { reason: String },
}

impl DecayClass {
    pub fn label(&self) -> &'static str {
        match self {
            DecayClass::Exponential { .. } => "exponential",
            DecayClass::Algebraic { .. } => "algebraic",
            DecayClass::Flat { .. } => "flat",
            DecayClass::Undetermined { .. } => "undetermined",
        }
    }
}

/// Fits `ln c` against `r` and against `ln r` on `r_window` and keeps the
/// better one. Curves whose relative variation is below 10% are flat; fits
/// whose `R²` differ by less than 0.05 are indistinguishable.
pub fn classify_decay(curve: &[(f64, f64)], r_window: (f64, f64)) -> DecayClass {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .copied()
        .filter(|(r, _)| *r > 0.0 && *r >= r_window.0 && *r <= r_window.1)
        .collect();
    if pts.len() < 3 {
        return DecayClass::Undetermined {
            reason: format!("{} points with r > 0 in the window", pts.len()),
        };
    }
    if pts.iter().any(|(_, c)| !(*c > 0.0) || !c.is_finite()) {
        return DecayClass::Undetermined {
            reason: "non-positive values in the window".into(),
        };
    }
    let (lo, hi, sum) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), (_, c)| (lo.min(*c), hi.max(*c), s + c));
    let mean = sum / pts.len() as f64;
    if (hi - lo) / mean < 0.1 {
        return DecayClass::Flat { level: mean };
    }
    let rs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let log_rs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let log_cs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let exp_fit = linear_fit(&rs, &log_cs);
    let alg_fit = linear_fit(&log_rs, &log_cs);
    if (exp_fit.r_squared - alg_fit.r_squared).abs() < 0.05 {
        return DecayClass::Undetermined {
            reason: format!(
                "fits indistinguishable (R² exponential {:.4}, algebraic {:.4})",
                exp_fit.r_squared, alg_fit.r_squared
            ),
        };
    }
    if exp_fit.r_squared > alg_fit.r_squared {
        DecayClass::Exponential {
            rate: -exp_fit.slope,
            amplitude: exp_fit.intercept.exp(),
            r_squared: exp_fit.r_squared,
        }
    } else {
        DecayClass::Algebraic {
            exponent: -alg_fit.slope,
            amplitude: alg_fit.intercept.exp(),
            r_squared: alg_fit.r_squared,
        }
    }
}

/// Mean of `e^{iφ}` over each plane `x1 = const`, ordered by `x1`.
pub fn layer_profile(state: &SpinState, lattice: &Lattice) -> Result<Vec<Complex64>> {
    state.check_len(lattice)?;
    let [l1, l2, l3] = lattice.dims();
    let mut sums = vec![Complex64::new(0.0, 0.0); l1];
    for x in 0..state.len() {
        sums[x % l1] += Complex64::from_polar(1.0, state.angle(x));
    }
    let per_plane = (l2 * l3) as f64;
    Ok(sums.into_iter().map(|s| s / per_plane).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodAverage {
    pub t_start: f64,
    pub period: f64,
    pub m: Complex64,
    pub abs_m: f64,
    pub energy_per_site: f64,
}

/// Trapezoidal time average over `[t_start, t_start + 2π/|ω|]`, with the
/// endpoints linearly interpolated between samples.
pub fn period_average(trajectory: &Trajectory, omega: f64, t_start: f64) -> Result<PeriodAverage> {
    if !(omega.is_finite() && omega != 0.0) {
        return Err(invalid("omega", format!("must be finite and nonzero, got {omega}")));
    }
    let period = TAU / omega.abs();
    let t_end = t_start + period;
    let samples = &trajectory.samples;
    let eps = 1e-9 * period.max(1.0);
    match (samples.first(), samples.last()) {
        (Some(first), Some(last)) if first.t <= t_start + eps && last.t >= t_end - eps => {}
        _ => {
            return Err(Error::InsufficientCoverage(format!(
                "samples do not cover [{t_start}, {t_end}]"
            )))
        }
    }

    // (t, m, |m|, e)
    type Point = (f64, Complex64, f64, f64);
    let at = |t: f64| -> Point {
        let i = samples.partition_point(|s| s.t < t);
        let point = |s: &Sample| (s.t, s.m, s.m.norm(), s.energy_per_site);
        if i == 0 {
            return (t, samples[0].m, samples[0].m.norm(), samples[0].energy_per_site);
        }
        if i >= samples.len() {
            let p = point(samples.last().unwrap());
            return (t, p.1, p.2, p.3);
        }
        let (a, b) = (&samples[i - 1], &samples[i]);
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        (
            t,
            a.m + (b.m - a.m) * w,
            a.m.norm() + (b.m.norm() - a.m.norm()) * w,
            a.energy_per_site + (b.energy_per_site - a.energy_per_site) * w,
        )
    };
    let mut pts: Vec<Point> = vec![at(t_start)];
    pts.extend(
        samples
            .iter()
            .filter(|s| s.t > t_start && s.t < t_end)
            .map(|s| (s.t, s.m, s.m.norm(), s.energy_per_site)),
    );
    pts.push(at(t_end));

    let mut m = Complex64::new(0.0, 0.0);
    let (mut abs_m, mut energy) = (0.0, 0.0);
    for w in pts.windows(2) {
        let h = 0.5 * (w[1].0 - w[0].0);
        m += (w[0].1 + w[1].1) * h;
        abs_m += (w[0].2 + w[1].2) * h;
        energy += (w[0].3 + w[1].3) * h;
    }
    Ok(PeriodAverage {
        t_start,
        period,
        m: m / period,
        abs_m: abs_m / period,
        energy_per_site: energy / period,
    })
}
