//! Spin configurations and initial conditions.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::lattice::{interface_phases, Lattice};

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn wrap_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed distance between two angles on the circle, in `[0, π]`.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinKind {
    Clock { n: u32 },
    Xy,
}

/// Per-site spins. Clock states keep the integer index as the source of
/// truth; the angle `2πk/N` is derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub enum SpinState {
    Clock { n: u32, indices: Vec<u16> },
    Xy { angles: Vec<f64> },
}

impl SpinState {
    pub fn clock(n: u32, indices: Vec<u16>) -> Result<Self> {
        check_clock_size(n)?;
        if let Some(&k) = indices.iter().find(|&&k| k as u32 >= n) {
            return Err(invalid("state", format!("clock index {k} out of range for N = {n}")));
        }
        Ok(SpinState::Clock { n, indices })
    }

    pub fn xy(angles: Vec<f64>) -> Self {
        SpinState::Xy {
            angles: angles.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn kind(&self) -> SpinKind {
        match self {
            SpinState::Clock { n, .. } => SpinKind::Clock { n: *n },
            SpinState::Xy { .. } => SpinKind::Xy,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SpinState::Clock { indices, .. } => indices.len(),
            SpinState::Xy { angles } => angles.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn angle(&self, x: usize) -> f64 {
        match self {
            SpinState::Clock { n, indices } => TAU * indices[x] as f64 / *n as f64,
            SpinState::Xy { angles } => angles[x],
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|x| self.angle(x)).collect()
    }

    /// Shift every clock index by `j` (a global rotation by `2πj/N`).
    /// Xy states rotate by `2πj`, i.e. stay put.
    pub fn rotated_clock(&self, j: i64) -> Self {
        match self {
            SpinState::Clock { n, indices } => SpinState::Clock {
                n: *n,
                indices: indices
                    .iter()
                    .map(|&k| (k as i64 + j).rem_euclid(*n as i64) as u16)
                    .collect(),
            },
            SpinState::Xy { .. } => self.rotated(TAU * j as f64),
        }
    }

    /// Rotate every spin by `alpha`; clock states become xy states.
    pub fn rotated(&self, alpha: f64) -> Self {
        match self {
            SpinState::Xy { angles } => SpinState::xy(angles.iter().map(|a| a + alpha).collect()),
            SpinState::Clock { .. } => SpinState::xy(self.angles().iter().map(|a| a + alpha).collect()),
        }
    }

    pub(crate) fn check_len(&self, lattice: &Lattice) -> Result<()> {
        if self.len() != lattice.num_sites() {
            return Err(Error::SizeMismatch {
                expected: lattice.num_sites(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_clock_size(n: u32) -> Result<()> {
    if n < 2 || n > u16::MAX as u32 + 1 {
        return Err(invalid("model.n", format!("clock size must lie in 2..=65536, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// All spins at one angle. For clock states the angle must lie on the
    /// `2πk/N` grid.
    CoherentAngle(f64),
    /// All spins at `2πk/N`; for xy states `n` sets the grid.
    CoherentIndex { k: u32, n: u32 },
    UniformRandom,
    /// Upper x1 half at `2πk/N`, lower half at `2π(k+N/2)/N`.
    Interface { k: u32, n: u32 },
}

pub fn init_state<R: Rng + ?Sized>(
    lattice: &Lattice,
    kind: SpinKind,
    spec: InitSpec,
    rng: &mut R,
) -> Result<SpinState> {
    let sites = lattice.num_sites();
    if let SpinKind::Clock { n } = kind {
        check_clock_size(n)?;
    }
    match (kind, spec) {
        (SpinKind::Xy, InitSpec::CoherentAngle(a)) => Ok(SpinState::xy(vec![a; sites])),
        (SpinKind::Xy, InitSpec::CoherentIndex { k, n }) => {
            check_clock_size(n)?;
            Ok(SpinState::xy(vec![TAU * (k % n) as f64 / n as f64; sites]))
        }
        (SpinKind::Xy, InitSpec::UniformRandom) => Ok(SpinState::Xy {
            angles: (0..sites).map(|_| wrap_angle(rng.random::<f64>() * TAU)).collect(),
        }),
        (SpinKind::Xy, InitSpec::Interface { k, n }) => {
            check_interface(n)?;
            let (upper, lower) = interface_phases(k, n);
            Ok(SpinState::Xy {
                angles: (0..sites)
                    .map(|x| if lattice.in_upper_half(x) { upper } else { lower })
                    .collect(),
            })
        }
        (SpinKind::Clock { n }, InitSpec::CoherentIndex { k, n: grid }) => {
            if grid != n {
                return Err(invalid("init.n", format!("grid N = {grid} differs from clock N = {n}")));
            }
            Ok(SpinState::Clock {
                n,
                indices: vec![(k % n) as u16; sites],
            })
        }
        (SpinKind::Clock { n }, InitSpec::CoherentAngle(a)) => {
            let pos = wrap_angle(a) * n as f64 / TAU;
            let k = pos.round();
            if (pos - k).abs() > 1e-9 {
                return Err(invalid("init.angle", format!("{a} is not on the 2πk/{n} grid")));
            }
            Ok(SpinState::Clock {
                n,
                indices: vec![(k as u32 % n) as u16; sites],
            })
        }
        (SpinKind::Clock { n }, InitSpec::UniformRandom) => Ok(SpinState::Clock {
            n,
            indices: (0..sites).map(|_| rng.random_range(0..n) as u16).collect(),
        }),
        (SpinKind::Clock { n }, InitSpec::Interface { k, n: grid }) => {
            check_interface(n)?;
            if grid != n {
                return Err(invalid("init.n", format!("grid N = {grid} differs from clock N = {n}")));
            }
            let upper = (k % n) as u16;
            let lower = ((k + n / 2) % n) as u16;
            Ok(SpinState::Clock {
                n,
                indices: (0..sites)
                    .map(|x| if lattice.in_upper_half(x) { upper } else { lower })
                    .collect(),
            })
        }
    }
}

fn check_interface(n: u32) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(invalid("init.n", format!("interface needs an even N, got {n}")));
    }
    Ok(())
}
