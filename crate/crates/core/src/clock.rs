//! Continuous-time jump dynamics of the driven N-clock model.
//!
//! Site `x` steps `φ_x → φ_x ± 2π/N` at rate
//!
//! ```text
//! c(x, σ, ±) = p± · exp{ -(β/2) Σ_{y∼x} [ V(φx − φy ± 2π/N) − V(φx − φy) ] }
//! ```
//!
//! which for the cosine pair energy `V = −cos` is the usual driven clock rate.
//! The drift is `d = ln(p+/p−)`. At `d = 0` the rates satisfy detailed
//! balance with respect to `exp(−βH)`.
//!
//! Trajectories are generated by rejection: candidate events arrive at total
//! rate `2·|Λ|·B` with `B` from [`rate_bound`], a uniform site and direction
//! is proposed, and the move is accepted with probability `c/B`. This is
//! exact in law; it is slow when `B` is much larger than typical rates
//! (large `β`), but never wrong.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Error, Result};
use crate::interaction::Interaction;
use crate::lattice::{Lattice, Neighbor, SLOTS};
use crate::state::{check_clock_size, SpinState};
use crate::trajectory::{Sample, SnapshotData, Snapshots, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            Direction::Plus => Direction::Minus,
            Direction::Minus => Direction::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockParams {
    pub beta: f64,
    pub n: u32,
    pub p_plus: f64,
    pub p_minus: f64,
    pub interaction: Interaction,
}

impl ClockParams {
    pub fn new(beta: f64, n: u32, p_plus: f64, p_minus: f64, interaction: Interaction) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(invalid("dynamics.beta", format!("must be finite and >= 0, got {beta}")));
        }
        check_clock_size(n)?;
        if !(p_minus.is_finite() && p_minus > 0.0) {
            return Err(invalid("dynamics.p_minus", format!("must be > 0, got {p_minus}")));
        }
        if !(p_plus.is_finite() && p_plus >= p_minus) {
            return Err(invalid("dynamics.p_plus", format!("must be >= p_minus = {p_minus}, got {p_plus}")));
        }
        interaction.validate()?;
        Ok(Self {
            beta,
            n,
            p_plus,
            p_minus,
            interaction,
        })
    }

    /// `p± = exp(±d/2)`, so that `p+·p− = 1`.
    pub fn from_drift(beta: f64, n: u32, drift: f64, interaction: Interaction) -> Result<Self> {
        if !(drift.is_finite() && drift >= 0.0) {
            return Err(invalid("dynamics.drift", format!("must be finite and >= 0, got {drift}")));
        }
        Self::new(beta, n, (0.5 * drift).exp(), (-0.5 * drift).exp(), interaction)
    }

    pub fn drift(&self) -> f64 {
        (self.p_plus / self.p_minus).ln()
    }

    /// Step angle `2π/N`.
    pub fn step(&self) -> f64 {
        TAU / self.n as f64
    }

    #[inline]
    pub fn prefactor(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Plus => self.p_plus,
            Direction::Minus => self.p_minus,
        }
    }

    /// Same dynamics with every rate multiplied by `factor`.
    pub fn accelerated(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid("time_scale", format!("must be > 0, got {factor}")));
        }
        Self::new(self.beta, self.n, self.p_plus * factor, self.p_minus * factor, self.interaction)
    }
}

/// Rate of the move `φ_x → φ_x ± 2π/N`, evaluated directly from the angles.
pub fn jump_rate(state: &SpinState, lattice: &Lattice, params: &ClockParams, x: usize, dir: Direction) -> f64 {
    let a = dir.sign() * params.step();
    let phi = state.angle(x);
    let mut exponent = 0.0;
    for nb in lattice.neighbors(x) {
        let other = match *nb {
            Neighbor::Site(y) => state.angle(y as usize),
            Neighbor::Virtual(zeta) => zeta,
            Neighbor::Absent => continue,
        };
        let delta = phi - other;
        exponent += params.interaction.pair_energy(delta + a) - params.interaction.pair_energy(delta);
    }
    params.prefactor(dir) * (-0.5 * params.beta * exponent).exp()
}

/// `B = p+ · exp(3β·m)` with `m` the largest single-bond increment of the
/// pair energy over one clock step (`2 sin(π/N)` for the cosine).
pub fn rate_bound(params: &ClockParams) -> f64 {
    let m = params.interaction.max_increment(params.step());
    params.p_plus * (0.5 * params.beta * SLOTS as f64 * m).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSchedule {
    pub t_end: f64,
    pub sample_every: f64,
    pub record_full_states: bool,
}

impl ClockSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("dynamics.t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if !(self.sample_every.is_finite() && self.sample_every > 0.0 && self.sample_every <= self.t_end) {
            return Err(invalid(
                "dynamics.sample_every",
                format!("must lie in (0, t_end], got {}", self.sample_every),
            ));
        }
        Ok(())
    }

    /// Sample instants `k·sample_every`, `k = 1..=n`.
    pub fn num_samples(&self) -> usize {
        (self.t_end / self.sample_every + 1e-9).floor() as usize
    }
}

/// Tabulated rates for a fixed clock size, inverse temperature and
/// interaction.
#[derive(Debug, Clone)]
pub struct ClockKernel {
    params: ClockParams,
    /// `V(2πδ/N ± 2π/N) − V(2πδ/N)` for `δ = 0..N`, plus then minus.
    increments: [Vec<f64>; 2],
    pair: Vec<f64>,
    cos_sin: Vec<(f64, f64)>,
    bound: f64,
}

impl ClockKernel {
    pub fn new(params: &ClockParams) -> Self {
        let n = params.n as usize;
        let a = params.step();
        let v = |t: f64| params.interaction.pair_energy(t);
        let angle = |k: usize| TAU * k as f64 / n as f64;
        let increments = [
            (0..n).map(|d| v(angle(d) + a) - v(angle(d))).collect(),
            (0..n).map(|d| v(angle(d) - a) - v(angle(d))).collect(),
        ];
        Self {
            params: *params,
            increments,
            pair: (0..n).map(|d| v(angle(d))).collect(),
            cos_sin: (0..n).map(|k| (angle(k).cos(), angle(k).sin())).collect(),
            bound: rate_bound(params),
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    fn diff(&self, kx: u16, ky: u16) -> usize {
        let n = self.params.n as usize;
        (kx as usize + n - ky as usize) % n
    }

    #[inline]
    pub fn rate(&self, indices: &[u16], lattice: &Lattice, x: usize, dir: Direction) -> f64 {
        let table = &self.increments[(dir == Direction::Minus) as usize];
        let kx = indices[x];
        let mut exponent = 0.0;
        for nb in lattice.neighbors(x) {
            match *nb {
                Neighbor::Site(y) => exponent += table[self.diff(kx, indices[y as usize])],
                Neighbor::Virtual(zeta) => {
                    let delta = TAU * kx as f64 / self.params.n as f64 - zeta;
                    let a = dir.sign() * self.params.step();
                    exponent += self.params.interaction.pair_energy(delta + a)
                        - self.params.interaction.pair_energy(delta);
                }
                Neighbor::Absent => {}
            }
        }
        self.params.prefactor(dir) * (-0.5 * self.params.beta * exponent).exp()
    }

    pub fn magnetization(&self, indices: &[u16]) -> Complex64 {
        let (re, im) = indices.iter().fold((0.0, 0.0), |(re, im), &k| {
            let (c, s) = self.cos_sin[k as usize];
            (re + c, im + s)
        });
        Complex64::new(re, im) / indices.len() as f64
    }

    pub fn energy(&self, indices: &[u16], lattice: &Lattice) -> f64 {
        let mut total = 0.0;
        for (x, &kx) in indices.iter().enumerate() {
            for (slot, nb) in lattice.neighbors(x).iter().enumerate() {
                match *nb {
                    Neighbor::Site(y) if slot % 2 == 0 => total += self.pair[self.diff(kx, indices[y as usize])],
                    Neighbor::Virtual(zeta) => {
                        total += self
                            .params
                            .interaction
                            .pair_energy(TAU * kx as f64 / self.params.n as f64 - zeta)
                    }
                    _ => {}
                }
            }
        }
        total
    }
}

/// Run the clock dynamics from `state` (updated in place) up to
/// `schedule.t_end`.
///
/// Samples are taken at `k·sample_every`; the recorded configuration is the
/// one holding at that instant, i.e. the state before the first event at or
/// after the sample time.
pub fn simulate_clock<R: Rng + ?Sized>(
    state: &mut SpinState,
    lattice: &Lattice,
    params: &ClockParams,
    schedule: &ClockSchedule,
    rng: &mut R,
) -> Result<Trajectory> {
    schedule.validate()?;
    state.check_len(lattice)?;
    let SpinState::Clock { n, indices } = state else {
        return Err(Error::WrongKind { expected: "clock" });
    };
    if *n != params.n {
        return Err(invalid("model.n", format!("state has N = {n}, parameters have N = {}", params.n)));
    }
    let n = *n as i32;
    let kernel = ClockKernel::new(params);
    let sites = indices.len();
    let bound = kernel.bound();
    let total_rate = 2.0 * sites as f64 * bound;
    let step = params.step();

    let num_samples = schedule.num_samples();
    let mut samples = Vec::with_capacity(num_samples);
    let mut snapshots = schedule.record_full_states.then(|| Snapshots {
        n_sites: sites,
        times: Vec::new(),
        data: SnapshotData::Clock {
            n: n as u32,
            indices: Vec::new(),
        },
    });
    let mut record = |t: f64, indices: &[u16], net: i64, samples: &mut Vec<Sample>| {
        samples.push(Sample {
            t,
            m: kernel.magnetization(indices),
            energy_per_site: kernel.energy(indices, lattice) / sites as f64,
            winding: net as f64 * step / sites as f64,
        });
        if let Some(snap) = snapshots.as_mut() {
            snap.times.push(t);
            if let SnapshotData::Clock { indices: buf, .. } = &mut snap.data {
                buf.extend_from_slice(indices);
            }
        }
    };

    let mut t = 0.0;
    let mut next = 1usize;
    let mut net_moves: i64 = 0;
    while next <= num_samples {
        let wait: f64 = Exp1.sample(rng);
        let t_event = t + wait / total_rate;
        while next <= num_samples && next as f64 * schedule.sample_every <= t_event {
            record(next as f64 * schedule.sample_every, indices, net_moves, &mut samples);
            next += 1;
        }
        if next > num_samples {
            break;
        }
        t = t_event;
        let x = rng.random_range(0..sites);
        let dir = if rng.random::<bool>() {
            Direction::Plus
        } else {
            Direction::Minus
        };
        let rate = kernel.rate(indices, lattice, x, dir);
        assert!(
            rate <= bound * (1.0 + 1e-12),
            "rejection bound violated: rate {rate} > bound {bound}"
        );
        if rng.random::<f64>() * bound < rate {
            let k = indices[x] as i32 + if dir == Direction::Plus { 1 } else { -1 };
            indices[x] = k.rem_euclid(n) as u16;
            net_moves += if dir == Direction::Plus { 1 } else { -1 };
        }
    }
    Ok(Trajectory { samples, snapshots })
}

/// Clock parameters whose accelerated dynamics approach the driven XY
/// diffusion with drift `d_xy` and noise strength `2/β` as `N → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusivePreset {
    pub params: ClockParams,
    /// Rates must be multiplied by this factor (equivalently, clock time
    /// divided by it) to match XY time.
    pub time_scale: f64,
}

/// Second-order expansion of the jump generator in `a = 2π/N` gives drift
/// `(p+ − p−)·a − (p+ + p−)·(βa²/2)·∂H` and diffusion `(p+ + p−)·a²/2`;
/// matching `d − ∂H` and `1/β` after acceleration by `A` yields
/// `p± = 1 ± πβd/N` and `A = N²/(4π²β)`.
pub fn diffusive_preset(beta: f64, d_xy: f64, n: u32) -> Result<DiffusivePreset> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("dynamics.beta", format!("diffusive scaling needs beta > 0, got {beta}")));
    }
    if !(d_xy.is_finite() && d_xy >= 0.0) {
        return Err(invalid("dynamics.drift", format!("must be finite and >= 0, got {d_xy}")));
    }
    let eps = PI * beta * d_xy / n as f64;
    if eps >= 1.0 {
        return Err(invalid(
            "model.n",
            format!("N = {n} must exceed π·β·d = {}", PI * beta * d_xy),
        ));
    }
    let params = ClockParams::new(beta, n, 1.0 + eps, 1.0 - eps, Interaction::Cosine)?;
    Ok(DiffusivePreset {
        params,
        time_scale: (n as f64).powi(2) / (4.0 * PI * PI * beta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy, local_energy_delta};
    use crate::lattice::Boundary;
    use crate::state::{init_state, InitSpec, SpinKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_clock(lat: &Lattice, n: u32, seed: u64) -> SpinState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        init_state(lat, SpinKind::Clock { n }, InitSpec::UniformRandom, &mut rng).unwrap()
    }

    fn moved(state: &SpinState, x: usize, dir: Direction) -> SpinState {
        let SpinState::Clock { n, indices } = state else { panic!() };
        let mut idx = indices.clone();
        idx[x] = ((idx[x] as i64 + dir.sign() as i64).rem_euclid(*n as i64)) as u16;
        SpinState::Clock { n: *n, indices: idx }
    }

    #[test]
    fn aligned_symmetric_rates() {
        let lat = Lattice::new([3, 3, 3], Boundary::Periodic).unwrap();
        let s = SpinState::clock(4, vec![1; 27]).unwrap();
        for beta in [0.3, 1.0, 2.5] {
            let p = ClockParams::from_drift(beta, 4, 0.0, Interaction::Cosine).unwrap();
            for dir in [Direction::Plus, Direction::Minus] {
                let r = jump_rate(&s, &lat, &p, 13, dir);
                assert!((r - (-3.0 * beta).exp()).abs() < 1e-14 * r.max(1.0));
            }
        }
    }

    #[test]
    fn infinite_temperature_rates_are_prefactors() {
        let lat = Lattice::new([3, 3, 3], Boundary::Periodic).unwrap();
        let s = random_clock(&lat, 5, 3);
        let p = ClockParams::new(0.0, 5, 2.0, 0.5, Interaction::Cosine).unwrap();
        for x in 0..27 {
            assert_eq!(jump_rate(&s, &lat, &p, x, Direction::Plus), 2.0);
            assert_eq!(jump_rate(&s, &lat, &p, x, Direction::Minus), 0.5);
        }
    }

    #[test]
    fn forward_backward_ratio_is_drift_times_boltzmann() {
        let lat = Lattice::new([3, 4, 3], Boundary::Periodic).unwrap();
        for (seed, n) in [(1u64, 3u32), (2, 4), (3, 6), (4, 11)] {
            let s = random_clock(&lat, n, seed);
            let p = ClockParams::from_drift(1.3, n, 0.8, Interaction::Cosine).unwrap();
            for x in 0..lat.num_sites() {
                let fwd = jump_rate(&s, &lat, &p, x, Direction::Plus);
                let after = moved(&s, x, Direction::Plus);
                let back = jump_rate(&after, &lat, &p, x, Direction::Minus);
                let dh = local_energy_delta(&s, &lat, &Interaction::Cosine, x, after.angle(x));
                let expect = (p.p_plus / p.p_minus) * (-p.beta * dh).exp();
                assert!((fwd / back - expect).abs() < 1e-12 * expect);
            }
        }
    }

    #[test]
    fn detailed_balance_with_global_energies() {
        let lat = Lattice::new([3, 3, 2], Boundary::Periodic).unwrap();
        let inter = Interaction::VeryNonlinear { p: 3.0 };
        let s = random_clock(&lat, 6, 9);
        let p = ClockParams::from_drift(0.9, 6, 0.4, inter).unwrap();
        let h0 = energy(&s, &lat, &inter).unwrap();
        for x in 0..lat.num_sites() {
            let after = moved(&s, x, Direction::Plus);
            let h1 = energy(&after, &lat, &inter).unwrap();
            let lhs = jump_rate(&s, &lat, &p, x, Direction::Plus) * (-p.beta * h0).exp();
            let rhs = (p.p_plus / p.p_minus)
                * jump_rate(&after, &lat, &p, x, Direction::Minus)
                * (-p.beta * h1).exp();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());
        }
    }

    #[test]
    fn rotation_and_mirror_symmetry_of_rates() {
        let lat = Lattice::new([3, 3, 3], Boundary::Periodic).unwrap();
        let s = random_clock(&lat, 6, 5);
        let sym = ClockParams::from_drift(1.1, 6, 0.0, Interaction::Cosine).unwrap();
        let drv = ClockParams::from_drift(1.1, 6, 0.7, Interaction::Cosine).unwrap();
        let SpinState::Clock { indices, .. } = &s else { panic!() };
        let mirrored = SpinState::Clock {
            n: 6,
            indices: indices.iter().map(|&k| ((6 - k as u32) % 6) as u16).collect(),
        };
        for j in 1..6 {
            let r = s.rotated_clock(j);
            for x in 0..27 {
                for dir in [Direction::Plus, Direction::Minus] {
                    let a = jump_rate(&s, &lat, &drv, x, dir);
                    let b = jump_rate(&r, &lat, &drv, x, dir);
                    assert!((a - b).abs() <= 1e-14 * a);
                }
            }
        }
        for x in 0..27 {
            let a = jump_rate(&s, &lat, &sym, x, Direction::Plus);
            let b = jump_rate(&mirrored, &lat, &sym, x, Direction::Minus);
            assert!((a - b).abs() <= 1e-14 * a);
        }
    }

    #[test]
    fn bound_closed_form() {
        let p = ClockParams::new(0.0, 4, 1.7, 1.0, Interaction::Cosine).unwrap();
        assert_eq!(rate_bound(&p), 1.7);
        let p = ClockParams::new(1.0, 4, 1.0, 1.0, Interaction::Cosine).unwrap();
        assert!((rate_bound(&p) - (6.0 * (PI / 4.0).sin()).exp()).abs() < 1e-12);
        assert!((rate_bound(&p).ln() - 4.242_640_687_119_285).abs() < 1e-12);
    }

    #[test]
    fn bound_dominates_sampled_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, inter) in [
            (3u32, Interaction::Cosine),
            (4, Interaction::Cosine),
            (6, Interaction::VeryNonlinear { p: 6.0 }),
            (8, Interaction::VeryNonlinear { p: 1.5 }),
        ] {
            let lat = Lattice::new([4, 4, 4], Boundary::Coherent { zeta: 0.37 }).unwrap();
            let p = ClockParams::from_drift(2.0, n, 0.5, inter).unwrap();
            let b = rate_bound(&p);
            for _ in 0..2500 {
                let s = init_state(&lat, SpinKind::Clock { n }, InitSpec::UniformRandom, &mut rng).unwrap();
                let x = rng.random_range(0..64);
                for dir in [Direction::Plus, Direction::Minus] {
                    assert!(jump_rate(&s, &lat, &p, x, dir) <= b);
                }
            }
        }
    }

    #[test]
    fn kernel_agrees_with_direct_rates() {
        for boundary in [
            Boundary::Periodic,
            Boundary::Coherent { zeta: 1.0 },
            Boundary::InterfaceClamped { k: 1, n: 6 },
            Boundary::Open,
        ] {
            let lat = Lattice::new([4, 3, 2], boundary).unwrap();
            let s = random_clock(&lat, 6, 11);
            let p = ClockParams::from_drift(1.4, 6, 0.3, Interaction::VeryNonlinear { p: 2.0 }).unwrap();
            let k = ClockKernel::new(&p);
            let SpinState::Clock { indices, .. } = &s else { panic!() };
            for x in 0..lat.num_sites() {
                for dir in [Direction::Plus, Direction::Minus] {
                    let a = jump_rate(&s, &lat, &p, x, dir);
                    assert!((k.rate(indices, &lat, x, dir) - a).abs() < 1e-12 * a);
                }
            }
            let e = energy(&s, &lat, &p.interaction).unwrap();
            assert!((k.energy(indices, &lat) - e).abs() < 1e-11);
        }
    }

    #[test]
    fn diffusive_preset_closed_form() {
        let d = diffusive_preset(1.0, 1.0, 64).unwrap();
        assert!((d.params.p_plus - (1.0 + PI / 64.0)).abs() < 1e-15);
        assert!((d.params.p_minus - (1.0 - PI / 64.0)).abs() < 1e-15);
        assert!((d.time_scale - 64.0 * 64.0 / (4.0 * PI * PI)).abs() < 1e-12);
        let sym = diffusive_preset(2.0, 0.0, 16).unwrap();
        assert_eq!((sym.params.p_plus, sym.params.p_minus), (1.0, 1.0));
        assert!(diffusive_preset(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn rejects_xy_state_and_bad_params() {
        let lat = Lattice::new([2, 2, 2], Boundary::Periodic).unwrap();
        let p = ClockParams::from_drift(1.0, 4, 0.0, Interaction::Cosine).unwrap();
        let sched = ClockSchedule {
            t_end: 1.0,
            sample_every: 0.1,
            record_full_states: false,
        };
        let mut xy = SpinState::xy(vec![0.0; 8]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            simulate_clock(&mut xy, &lat, &p, &sched, &mut rng),
            Err(Error::WrongKind { .. })
        ));
        assert!(ClockParams::new(1.0, 4, 0.5, 1.0, Interaction::Cosine).is_err());
        assert!(ClockParams::new(-1.0, 4, 1.0, 1.0, Interaction::Cosine).is_err());
        assert!(ClockParams::from_drift(1.0, 4, -0.1, Interaction::Cosine).is_err());
    }

    #[test]
    fn simulation_is_seed_deterministic_and_samples_on_schedule() {
        let lat = Lattice::new([3, 3, 3], Boundary::Periodic).unwrap();
        let p = ClockParams::from_drift(0.8, 5, 0.4, Interaction::Cosine).unwrap();
        let sched = ClockSchedule {
            t_end: 5.0,
            sample_every: 0.25,
            record_full_states: true,
        };
        let run = |seed| {
            let mut s = random_clock(&lat, 5, 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_clock(&mut s, &lat, &p, &sched, &mut rng).unwrap()
        };
        let a = run(4);
        assert_eq!(a, run(4));
        assert_ne!(a, run(5));
        assert_eq!(a.samples.len(), 20);
        for (i, s) in a.samples.iter().enumerate() {
            assert!((s.t - 0.25 * (i + 1) as f64).abs() < 1e-12);
            assert!(s.m.norm() <= 1.0 + 1e-12);
        }
        assert_eq!(a.snapshots.as_ref().unwrap().len(), 20);
    }

    #[test]
    fn free_symmetric_walk_visits_uniformly() {
        let lat = Lattice::new([1, 1, 1], Boundary::Open).unwrap();
        let n = 5u32;
        let p = ClockParams::from_drift(0.0, n, 0.0, Interaction::Cosine).unwrap();
        let sched = ClockSchedule {
            t_end: 40_000.0,
            sample_every: 2.0,
            record_full_states: true,
        };
        let mut s = SpinState::clock(n, vec![0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let tr = simulate_clock(&mut s, &lat, &p, &sched, &mut rng).unwrap();
        let snap = tr.snapshots.unwrap();
        let crate::trajectory::SnapshotData::Clock { indices, .. } = &snap.data else { panic!() };
        let mut counts = vec![0usize; n as usize];
        for &k in indices {
            counts[k as usize] += 1;
        }
        let total = indices.len() as f64;
        let q = 1.0 / n as f64;
        let sigma = (total * q * (1.0 - q)).sqrt();
        for c in counts {
            assert!((c as f64 - total * q).abs() < 3.0 * sigma, "{c} vs {}", total * q);
        }
    }

    #[test]
    fn free_biased_walk_winds_at_mean_rate() {
        let lat = Lattice::new([1, 1, 1], Boundary::Open).unwrap();
        let n = 7u32;
        let p = ClockParams::new(0.0, n, 1.6, 0.4, Interaction::Cosine).unwrap();
        let t_end = 20_000.0;
        let sched = ClockSchedule {
            t_end,
            sample_every: t_end,
            record_full_states: false,
        };
        let mut s = SpinState::clock(n, vec![0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let tr = simulate_clock(&mut s, &lat, &p, &sched, &mut rng).unwrap();
        let a = TAU / n as f64;
        let mean = a * (p.p_plus - p.p_minus);
        // net jump count is Skellam: variance (p+ + p−)·t
        let sd = a * ((p.p_plus + p.p_minus) * t_end).sqrt() / t_end;
        let rate = tr.samples[0].winding / t_end;
        assert!((rate - mean).abs() < 4.0 * sd, "{rate} vs {mean} ± {sd}");
    }
}
