//! Finite rectangular boxes with nearest-neighbor structure.
//!
//! Sites are indexed with the first coordinate running fastest:
//! `index = x1 + L1 * (x2 + L2 * x3)`. Every site owns six neighbor slots
//! in the order `+x1, -x1, +x2, -x2, +x3, -x3`. A slot either points to a
//! site of the box, carries a virtual spin clamped at a fixed angle, or is
//! absent (open faces).
//!
//! Periodic dimensions of extent 1 or 2 keep all their slots, so a slot may
//! point back at its own site or two slots may point at the same neighbor.
//! The bond list used for energies follows the slots: one bond per site and
//! positive direction inside the box, plus one bond per virtual slot.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const SLOTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Virtual spins at angle `zeta` surround the box on every face.
    Coherent { zeta: f64 },
    /// Clamped at `2πk/N` beyond the upper x1 face and at `2π(k+N/2)/N`
    /// beyond the lower one; periodic in x2 and x3.
    InterfaceClamped { k: u32, n: u32 },
    /// No neighbors across any face.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighbor {
    Site(u32),
    Virtual(f64),
    Absent,
}

#[derive(Debug, Clone)]
pub struct Lattice {
    dims: [usize; 3],
    boundary: Boundary,
    neighbors: Vec<[Neighbor; SLOTS]>,
}

/// Phases used by the interface configuration: `(upper, lower)`.
pub fn interface_phases(k: u32, n: u32) -> (f64, f64) {
    let n_f = n as f64;
    let upper = 2.0 * PI * (k % n) as f64 / n_f;
    let lower = 2.0 * PI * ((k + n / 2) % n) as f64 / n_f;
    (upper, lower)
}

impl Lattice {
    pub fn new(dims: [usize; 3], boundary: Boundary) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidLattice(format!(
                "all dimensions must be at least 1, got {dims:?}"
            )));
        }
        let sites = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .filter(|&v| v <= u32::MAX as usize)
            .ok_or_else(|| Error::InvalidLattice(format!("{dims:?} has too many sites")))?;
        match boundary {
            Boundary::InterfaceClamped { n, .. } => {
                if n == 0 || n % 2 != 0 {
                    return Err(Error::InvalidLattice(format!(
                        "interface boundary needs an even clock size, got N = {n}"
                    )));
                }
                if !dims[0].is_multiple_of(2) {
                    return Err(Error::InvalidLattice(format!(
                        "interface boundary needs an even L1, got {}",
                        dims[0]
                    )));
                }
            }
            Boundary::Coherent { zeta } if !zeta.is_finite() => {
                return Err(Error::InvalidLattice("coherent angle must be finite".into()));
            }
            _ => {}
        }

        let mut neighbors = Vec::with_capacity(sites);
        for idx in 0..sites {
            let c = coords_of(dims, idx);
            let mut slots = [Neighbor::Absent; SLOTS];
            for axis in 0..3 {
                for (s, step) in [(0usize, 1isize), (1, -1)] {
                    slots[2 * axis + s] = neighbor_along(dims, boundary, c, axis, step);
                }
            }
            neighbors.push(slots);
        }
        Ok(Self {
            dims,
            boundary,
            neighbors,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.neighbors.len()
    }

    #[inline]
    pub fn neighbors(&self, x: usize) -> &[Neighbor; SLOTS] {
        &self.neighbors[x]
    }

    pub fn coords(&self, x: usize) -> [usize; 3] {
        coords_of(self.dims, x)
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Site reached by moving `r` steps along `axis` with periodic wrap
    /// inside the box, ignoring the boundary policy.
    pub fn wrapped_shift(&self, x: usize, axis: usize, r: usize) -> usize {
        let mut c = self.coords(x);
        c[axis] = (c[axis] + r) % self.dims[axis];
        self.index(c)
    }

    /// Whether site `x` is in the upper half along x1 (`x1 - L1/2 >= 0`).
    pub fn in_upper_half(&self, x: usize) -> bool {
        self.coords(x)[0] >= self.dims[0] / 2
    }

    /// Number of bonds counted by the energy.
    pub fn num_bonds(&self) -> usize {
        self.neighbors
            .iter()
            .map(|slots| {
                slots
                    .iter()
                    .enumerate()
                    .filter(|(s, nb)| match nb {
                        Neighbor::Site(_) => s % 2 == 0,
                        Neighbor::Virtual(_) => true,
                        Neighbor::Absent => false,
                    })
                    .count()
            })
            .sum()
    }
}

fn coords_of(dims: [usize; 3], idx: usize) -> [usize; 3] {
    [
        idx % dims[0],
        (idx / dims[0]) % dims[1],
        idx / (dims[0] * dims[1]),
    ]
}

fn neighbor_along(
    dims: [usize; 3],
    boundary: Boundary,
    c: [usize; 3],
    axis: usize,
    step: isize,
) -> Neighbor {
    let len = dims[axis] as isize;
    let pos = c[axis] as isize + step;
    let inside = (0..len).contains(&pos);
    let wrap = |p: isize| {
        let mut c2 = c;
        c2[axis] = p.rem_euclid(len) as usize;
        Neighbor::Site((c2[0] + dims[0] * (c2[1] + dims[1] * c2[2])) as u32)
    };
    match boundary {
        Boundary::Periodic => wrap(pos),
        _ if inside => wrap(pos),
        Boundary::Coherent { zeta } => Neighbor::Virtual(zeta),
        Boundary::Open => Neighbor::Absent,
        Boundary::InterfaceClamped { k, n } => {
            if axis == 0 {
                let (upper, lower) = interface_phases(k, n);
                Neighbor::Virtual(if step > 0 { upper } else { lower })
            } else {
                wrap(pos)
            }
        }
    }
}
