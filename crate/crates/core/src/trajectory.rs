//! Time-stamped observable samples and optional full-state snapshots.

use num_complex::Complex64;

use crate::state::{wrap_angle, SpinState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// `(1/|Λ|) Σ_x e^{iφ_x}`
    pub m: Complex64,
    pub energy_per_site: f64,
    /// Mean unwrapped angular displacement per site since `t = 0`.
    pub winding: f64,
}

/// Flat storage of recorded configurations, one row of `n_sites` values
/// per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotData {
    Clock { n: u32, indices: Vec<u16> },
    Xy { angles: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshots {
    pub n_sites: usize,
    pub times: Vec<f64>,
    pub data: SnapshotData,
}

impl Snapshots {
    pub fn for_state(state: &SpinState) -> Self {
        let data = match state {
            SpinState::Clock { n, .. } => SnapshotData::Clock {
                n: *n,
                indices: Vec::new(),
            },
            SpinState::Xy { .. } => SnapshotData::Xy { angles: Vec::new() },
        };
        Self {
            n_sites: state.len(),
            times: Vec::new(),
            data,
        }
    }

    pub fn push(&mut self, t: f64, state: &SpinState) {
        self.times.push(t);
        match (&mut self.data, state) {
            (SnapshotData::Clock { indices, .. }, SpinState::Clock { indices: src, .. }) => {
                indices.extend_from_slice(src)
            }
            (SnapshotData::Xy { angles }, SpinState::Xy { angles: src }) => angles.extend_from_slice(src),
            _ => panic!("snapshot kind does not match the state kind"),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> SpinState {
        let range = i * self.n_sites..(i + 1) * self.n_sites;
        match &self.data {
            SnapshotData::Clock { n, indices } => SpinState::Clock {
                n: *n,
                indices: indices[range].to_vec(),
            },
            SnapshotData::Xy { angles } => SpinState::Xy {
                angles: angles[range].to_vec(),
            },
        }
    }

    pub fn angle(&self, i: usize, x: usize) -> f64 {
        match &self.data {
            SnapshotData::Clock { n, indices } => {
                std::f64::consts::TAU * indices[i * self.n_sites + x] as f64 / *n as f64
            }
            SnapshotData::Xy { angles } => angles[i * self.n_sites + x],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Option<Snapshots>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.m.arg()).collect()
    }
}

/// Express a trajectory in the frame co-rotating at angular speed `d`:
/// every angle `φ` becomes `φ - d·t (mod 2π)`.
pub fn rotation_frame(trajectory: &Trajectory, d: f64) -> Trajectory {
    let samples = trajectory
        .samples
        .iter()
        .map(|s| Sample {
            t: s.t,
            m: s.m * Complex64::from_polar(1.0, -d * s.t),
            energy_per_site: s.energy_per_site,
            winding: s.winding - d * s.t,
        })
        .collect();
    let snapshots = trajectory.snapshots.as_ref().map(|snap| {
        let mut angles = Vec::with_capacity(snap.len() * snap.n_sites);
        for (i, &t) in snap.times.iter().enumerate() {
            let shift = d * t;
            angles.extend((0..snap.n_sites).map(|x| wrap_angle(snap.angle(i, x) - shift)));
        }
        Snapshots {
            n_sites: snap.n_sites,
            times: snap.times.clone(),
            data: SnapshotData::Xy { angles },
        }
    });
    Trajectory { samples, snapshots }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rigid(d: f64) -> Trajectory {
        let mut snap = Snapshots::for_state(&SpinState::xy(vec![0.0; 3]));
        let mut samples = Vec::new();
        for i in 0..50 {
            let t = 0.1 * i as f64;
            let st = SpinState::xy(vec![0.3 + d * t; 3]);
            snap.push(t, &st);
            samples.push(Sample {
                t,
                m: Complex64::from_polar(1.0, 0.3 + d * t),
                energy_per_site: -3.0,
                winding: d * t,
            });
        }
        Trajectory {
            samples,
            snapshots: Some(snap),
        }
    }

    #[test]
    fn zero_drift_is_identity() {
        let tr = rigid(0.0);
        assert_eq!(rotation_frame(&tr, 0.0), tr);
    }

    #[test]
    fn rigid_rotation_becomes_constant() {
        let tr = rotation_frame(&rigid(1.7), 1.7);
        for s in &tr.samples {
            assert!((s.m - Complex64::from_polar(1.0, 0.3)).norm() < 1e-12);
            assert!(s.winding.abs() < 1e-12);
        }
        let snap = tr.snapshots.unwrap();
        for i in 0..snap.len() {
            for x in 0..3 {
                assert!((snap.angle(i, x) - 0.3).abs() < 1e-12);
            }
        }
    }
}
