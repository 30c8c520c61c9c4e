//! Exact treatment of the clock dynamics on tiny lattices.
//!
//! Configurations are enumerated in mixed radix with site 0 as the least
//! significant digit: `index = Σ_x k_x · N^x`. Empirical histograms and
//! stationary vectors share this indexing.
//!
//! The stationary law is obtained from the bordered system `Aπ = e_0`, where
//! `A` is `Qᵀ` with its first row replaced by ones. The default solver is
//! restarted GMRES with diagonal right preconditioning; uniformized power
//! iteration and dense LU are available as cross-checks.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::clock::{jump_rate, rate_bound, ClockParams, Direction};
use crate::energy::energy;
use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::state::SpinState;
use crate::trajectory::{SnapshotData, Snapshots};

pub const DEFAULT_STATE_CAP: usize = 2_000_000;
/// Largest state space handed to the dense solver.
pub const DENSE_CAP: usize = 4096;

fn state_count(n: u32, sites: usize, cap: usize) -> Result<usize> {
    let states = (n as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::StateCapExceeded { states, cap });
    }
    Ok(states as usize)
}

pub fn encode(indices: &[u16], n: u32) -> usize {
    indices.iter().rev().fold(0usize, |acc, &k| acc * n as usize + k as usize)
}

pub fn decode(mut index: usize, n: u32, sites: usize) -> Vec<u16> {
    let mut out = Vec::with_capacity(sites);
    for _ in 0..sites {
        out.push((index % n as usize) as u16);
        index /= n as usize;
    }
    out
}

/// Sparse CTMC generator in row-compressed form.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub n: u32,
    pub sites: usize,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    diag: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.rates[r].iter().copied())
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dimension())
            .map(|i| (self.row(i).map(|(_, r)| r).sum::<f64>() + self.diag[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().map(|d| -d).fold(0.0, f64::max)
    }

    /// `x ↦ xQ`, i.e. `Qᵀx`.
    pub fn left_multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        for i in 0..self.dimension() {
            let xi = x[i];
            for (j, r) in self.row(i) {
                y[j] += xi * r;
            }
        }
        y
    }

    /// Number of connected components of the transition graph. Every move
    /// has its reverse move, so components are the closed classes and this
    /// is the dimension of the null space of `Qᵀ`.
    pub fn communicating_classes(&self) -> usize {
        let dim = self.dimension();
        let mut seen = vec![false; dim];
        let mut classes = 0;
        let mut queue = VecDeque::new();
        for start in 0..dim {
            if seen[start] {
                continue;
            }
            classes += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                for (j, r) in self.row(i) {
                    if r > 0.0 && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        classes
    }

    fn transpose(&self) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
        let dim = self.dimension();
        let mut counts = vec![0usize; dim + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut src = vec![0u32; self.cols.len()];
        let mut vals = vec![0.0; self.cols.len()];
        for i in 0..dim {
            for (j, r) in self.row(i) {
                src[fill[j]] = i as u32;
                vals[fill[j]] = r;
                fill[j] += 1;
            }
        }
        (counts, src, vals)
    }
}

/// Assemble the generator whose `(σ, σ^{x,±})` entry is the jump rate.
pub fn build_generator(lattice: &Lattice, params: &ClockParams, cap: usize) -> Result<GeneratorMatrix> {
    let sites = lattice.num_sites();
    let n = params.n;
    let dim = state_count(n, sites, cap)?;
    let rows: Vec<Vec<(u32, f64)>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let indices = decode(i, n, sites);
            let state = SpinState::Clock { n, indices };
            let mut row: Vec<(u32, f64)> = Vec::with_capacity(2 * sites);
            let SpinState::Clock { indices, .. } = &state else { unreachable!() };
            let mut pow = 1usize;
            for x in 0..sites {
                let k = indices[x] as usize;
                for dir in [Direction::Plus, Direction::Minus] {
                    let k2 = match dir {
                        Direction::Plus => (k + 1) % n as usize,
                        Direction::Minus => (k + n as usize - 1) % n as usize,
                    };
                    let j = i - k * pow + k2 * pow;
                    let r = jump_rate(&state, lattice, params, x, dir);
                    match row.iter_mut().find(|(c, _)| *c as usize == j) {
                        Some(entry) => entry.1 += r,
                        None => row.push((j as u32, r)),
                    }
                }
                pow *= n as usize;
            }
            row
        })
        .collect();

    let mut row_start = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(dim * 2 * sites);
    let mut rates = Vec::with_capacity(dim * 2 * sites);
    let mut diag = Vec::with_capacity(dim);
    row_start.push(0);
    for row in rows {
        diag.push(-row.iter().map(|(_, r)| r).sum::<f64>());
        for (c, r) in row {
            cols.push(c);
            rates.push(r);
        }
        row_start.push(cols.len());
    }
    Ok(GeneratorMatrix {
        n,
        sites,
        row_start,
        cols,
        rates,
        diag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Gmres { restart: usize, tol: f64, max_iter: usize },
    /// Power iteration on `P = I + Q/Λ` with `Λ = 2·|Λ|·B`.
    Power { tol: f64, max_iter: usize },
    Dense,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Gmres {
            restart: 100,
            tol: 1e-14,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
    /// `‖πQ‖_∞`
    pub residual: f64,
    pub iterations: usize,
    /// Dimension of the null space of `Qᵀ` (1 means unique).
    pub null_space_dim: usize,
    /// Smallest pivot magnitude relative to the largest (dense solver only).
    pub min_pivot_ratio: Option<f64>,
}

pub fn stationary_distribution(q: &GeneratorMatrix, params: &ClockParams, solver: Solver) -> Result<StationaryDistribution> {
    let classes = q.communicating_classes();
    if classes != 1 {
        return Err(Error::Reducible {
            reached: component_size(q),
            states: q.dimension(),
        });
    }
    let (mut probs, iterations, min_pivot_ratio) = match solver {
        Solver::Gmres { restart, tol, max_iter } => {
            let (x, it) = gmres_bordered(q, restart.max(2), tol, max_iter)?;
            (x, it, None)
        }
        Solver::Power { tol, max_iter } => {
            let lambda = 2.0 * q.sites as f64 * rate_bound(params);
            let (x, it) = power_iteration(q, lambda, tol, max_iter)?;
            (x, it, None)
        }
        Solver::Dense => {
            let (x, pivot) = dense_bordered(q)?;
            (x, 1, Some(pivot))
        }
    };
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let residual = q.left_multiply(&probs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(StationaryDistribution {
        probs,
        residual,
        iterations,
        null_space_dim: classes,
        min_pivot_ratio,
    })
}

fn component_size(q: &GeneratorMatrix) -> usize {
    let mut seen = vec![false; q.dimension()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for (j, r) in q.row(i) {
            if r > 0.0 && !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Bordered operator `x ↦ Ax` with `A = Qᵀ`, row 0 replaced by ones.
struct Bordered {
    start: Vec<usize>,
    src: Vec<u32>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl Bordered {
    fn new(q: &GeneratorMatrix) -> Self {
        let (start, src, vals) = q.transpose();
        Self {
            start,
            src,
            vals,
            diag: q.diag.clone(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().skip(1).for_each(|(j, out)| {
            let r = self.start[j]..self.start[j + 1];
            let mut acc = self.diag[j] * x[j];
            for (s, v) in self.src[r.clone()].iter().zip(&self.vals[r]) {
                acc += x[*s as usize] * v;
            }
            *out = acc;
        });
        y[0] = x.iter().sum();
    }

    fn preconditioner(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.diag.iter().map(|v| 1.0 / v.abs().max(1e-300)).collect();
        d[0] = 1.0;
        d
    }
}

/// Restarted GMRES on the bordered system with Jacobi right
/// preconditioning.
fn gmres_bordered(q: &GeneratorMatrix, restart: usize, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let dim = q.dimension();
    let op = Bordered::new(q);
    let minv = op.preconditioner();
    let mut b = vec![0.0; dim];
    b[0] = 1.0;
    let b_norm = 1.0;

    let mut x = vec![0.0; dim];
    let mut ax = vec![0.0; dim];
    let mut w = vec![0.0; dim];
    let mut z = vec![0.0; dim];
    let mut total = 0usize;
    let mut last_res = f64::INFINITY;
    while total < max_iter {
        op.apply(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        last_res = beta / b_norm;
        if last_res <= tol {
            return Ok((x, total));
        }
        let m = restart.min(max_iter - total);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            z.iter_mut().zip(&basis[k]).zip(&minv).for_each(|((zi, v), mi)| *zi = v * mi);
            op.apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][k] = hij;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let rho = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / rho;
            sn[k] = h[k + 1][k] / rho;
            h[k][k] = rho;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            if g[k + 1].abs() / b_norm <= tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut yk = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * yk[j]).sum();
            yk[i] = (g[i] - s) / h[i][i];
        }
        for (j, coef) in yk.iter().enumerate() {
            for ((xi, v), mi) in x.iter_mut().zip(&basis[j]).zip(&minv) {
                *xi += coef * v * mi;
            }
        }
    }
    op.apply(&x, &mut ax);
    let res = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt();
    if res <= tol * 10.0 {
        return Ok((x, total));
    }
    Err(Error::NotConverged {
        iterations: total,
        residual: res.min(last_res),
    })
}

fn power_iteration(q: &GeneratorMatrix, lambda: f64, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let dim = q.dimension();
    let mut pi = vec![1.0 / dim as f64; dim];
    let mut res = f64::INFINITY;
    for it in 0..max_iter {
        let flow = q.left_multiply(&pi);
        res = flow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res <= tol {
            return Ok((pi, it));
        }
        pi.iter_mut().zip(&flow).for_each(|(p, f)| *p += f / lambda);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: res,
    })
}

/// Dense LU with partial pivoting on the bordered system.
fn dense_bordered(q: &GeneratorMatrix) -> Result<(Vec<f64>, f64)> {
    let dim = q.dimension();
    if dim > DENSE_CAP {
        return Err(Error::StateCapExceeded {
            states: dim as u128,
            cap: DENSE_CAP,
        });
    }
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        a[i * dim + i] = q.diag[i];
        for (j, r) in q.row(i) {
            a[j * dim + i] += r;
        }
    }
    a[..dim].iter_mut().for_each(|v| *v = 1.0);
    let mut b = vec![0.0; dim];
    b[0] = 1.0;

    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;
    for col in 0..dim {
        let p = (col..dim)
            .max_by(|&i, &j| a[i * dim + col].abs().total_cmp(&a[j * dim + col].abs()))
            .unwrap();
        if p != col {
            for k in 0..dim {
                a.swap(col * dim + k, p * dim + k);
            }
            b.swap(col, p);
        }
        let pivot = a[col * dim + col];
        min_pivot = min_pivot.min(pivot.abs());
        max_pivot = max_pivot.max(pivot.abs());
        if pivot == 0.0 {
            return Err(Error::Domain("bordered generator is singular".into()));
        }
        let (top, rest) = a.split_at_mut((col + 1) * dim);
        let prow = &top[col * dim..];
        let bc = b[col];
        rest.par_chunks_mut(dim).zip(b[col + 1..].par_iter_mut()).for_each(|(row, bi)| {
            let f = row[col] / pivot;
            if f != 0.0 {
                for k in col..dim {
                    row[k] -= f * prow[k];
                }
                *bi -= f * bc;
            }
        });
    }
    let mut x = vec![0.0; dim];
    for i in (0..dim).rev() {
        let s: f64 = (i + 1..dim).map(|k| a[i * dim + k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i * dim + i];
    }
    Ok((x, min_pivot / max_pivot))
}

/// Weights `∝ exp(−βH)` over every configuration.
pub fn gibbs_distribution(lattice: &Lattice, params: &ClockParams, cap: usize) -> Result<Vec<f64>> {
    let sites = lattice.num_sites();
    let dim = state_count(params.n, sites, cap)?;
    let energies: Vec<f64> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let s = SpinState::Clock {
                n: params.n,
                indices: decode(i, params.n, sites),
            };
            energy(&s, lattice, &params.interaction).expect("sizes match by construction")
        })
        .collect();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = energies.iter().map(|e| (-params.beta * (e - e_min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    Ok(w)
}

/// `−(1/β)·ln Z`.
pub fn free_energy(lattice: &Lattice, params: &ClockParams, cap: usize) -> Result<f64> {
    if params.beta <= 0.0 {
        return Err(invalid("dynamics.beta", "free energy needs beta > 0"));
    }
    let sites = lattice.num_sites();
    let dim = state_count(params.n, sites, cap)?;
    let energies: Vec<f64> = (0..dim)
        .map(|i| {
            let s = SpinState::Clock {
                n: params.n,
                indices: decode(i, params.n, sites),
            };
            energy(&s, lattice, &params.interaction).expect("sizes match by construction")
        })
        .collect();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let z_shifted: f64 = energies.iter().map(|e| (-params.beta * (e - e_min)).exp()).sum();
    Ok(e_min - z_shifted.ln() / params.beta)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `max_σ |π(σ) − π(Rσ)|` with `R` adding 1 (mod N) to every site.
pub fn check_rotation_invariance(pi: &[f64], n: u32, sites: usize) -> f64 {
    (0..pi.len())
        .map(|i| {
            let rotated: Vec<u16> = decode(i, n, sites)
                .into_iter()
                .map(|k| ((k as u32 + 1) % n) as u16)
                .collect();
            (pi[i] - pi[encode(&rotated, n)]).abs()
        })
        .fold(0.0, f64::max)
}

/// Occupation histogram of recorded clock snapshots after discarding the
/// first `burn_in` fraction. Snapshots sit on a regular time grid, so the
/// fraction of snapshots in a state estimates the fraction of time spent
/// there.
pub fn empirical_distribution(snapshots: &Snapshots, burn_in: f64, dim: usize, n: u32) -> Result<Vec<f64>> {
    let SnapshotData::Clock { n: sn, indices } = &snapshots.data else {
        return Err(Error::WrongKind { expected: "clock" });
    };
    if *sn != n {
        return Err(invalid("snapshots", format!("N = {sn} differs from the oracle's N = {n}")));
    }
    let expected = state_count(n, snapshots.n_sites, usize::MAX).unwrap_or(usize::MAX);
    if expected != dim {
        return Err(invalid(
            "snapshots",
            format!("{} sites with N = {n} do not enumerate {dim} states", snapshots.n_sites),
        ));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(invalid("burn_in", format!("fraction must lie in [0, 1), got {burn_in}")));
    }
    let skip = (burn_in * snapshots.len() as f64).floor() as usize;
    let kept = snapshots.len() - skip;
    if kept == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut hist = vec![0.0; dim];
    for row in indices.chunks_exact(snapshots.n_sites).skip(skip) {
        hist[encode(row, n)] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= kept as f64);
    Ok(hist)
}

pub fn empirical_vs_exact(snapshots: &Snapshots, pi: &[f64], n: u32, burn_in: f64) -> Result<f64> {
    let hist = empirical_distribution(snapshots, burn_in, pi.len(), n)?;
    Ok(total_variation(&hist, pi))
}
