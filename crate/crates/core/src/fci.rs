//! Exact ground-state energies by Lanczos iteration on the qubit Hamiltonian.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::Observable;

pub const RESIDUAL_TARGET: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
/// Largest register handled by [`dense_ground_energy`].
pub const DENSE_QUBIT_CAP: usize = 10;
const MAX_QUBITS: usize = 20;
const KRYLOV_DIM: usize = 120;
const START_SEED: u64 = 0x5eed;

/// Particle-number and spin-projection sector under interleaved spin ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub n_elec: usize,
    /// Twice the spin projection; `None` leaves it free.
    pub ms2: Option<i64>,
}

impl Sector {
    pub fn contains(&self, index: usize) -> bool {
        let even = index & 0x5555_5555_5555_5555;
        let odd = index & 0xaaaa_aaaa_aaaa_aaaa;
        let (up, down) = (even.count_ones() as i64, odd.count_ones() as i64);
        (up + down) as usize == self.n_elec && self.ms2.is_none_or(|m| up - down == m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub e0: f64,
    pub residual_norm: f64,
    /// Hamiltonian applications.
    pub iterations: usize,
}

fn basis(n_qubits: usize, sector: Option<Sector>) -> Vec<usize> {
    (0..1usize << n_qubits)
        .filter(|&i| sector.is_none_or(|s| s.contains(i)))
        .collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Projected<'a> {
    h: &'a Observable,
    mask: Option<Vec<bool>>,
    matvecs: usize,
}

impl Projected<'_> {
    fn apply(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        self.h.apply(v, out);
        if let Some(mask) = &self.mask {
            out.iter_mut()
                .zip(mask)
                .filter(|(_, &m)| !m)
                .for_each(|(a, _)| *a = Complex64::new(0.0, 0.0));
        }
        self.matvecs += 1;
    }
}

/// Lowest eigenvalue of `h`, optionally restricted to `sector`.
///
/// Restarted Lanczos with full reorthogonalization from a seeded random start.
pub fn ground_energy(h: &Observable, sector: Option<Sector>) -> Result<OracleResult> {
    ground_energy_seeded(h, sector, START_SEED)
}

pub fn ground_energy_seeded(
    h: &Observable,
    sector: Option<Sector>,
    seed: u64,
) -> Result<OracleResult> {
    let n = h.n_qubits();
    if n > MAX_QUBITS {
        return Err(Error::MatrixTooLarge {
            n_qubits: n,
            cap: MAX_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mask = sector.map(|s| (0..dim).map(|i| s.contains(i)).collect::<Vec<bool>>());
    let allowed = mask
        .as_ref()
        .map_or(dim, |m| m.iter().filter(|&&b| b).count());
    if allowed == 0 {
        return Err(Error::Config(format!(
            "empty sector {sector:?} on {n} qubits"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..dim)
        .map(|i| {
            if mask.as_ref().is_none_or(|m| m[i]) {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut op = Projected {
        h,
        mask,
        matvecs: 0,
    };
    let krylov = KRYLOV_DIM.min(allowed);
    let mut hx = vec![Complex64::new(0.0, 0.0); dim];
    let mut best = (f64::INFINITY, f64::INFINITY);
    while op.matvecs < MAX_ITERATIONS {
        let (theta, ritz) = lanczos_pass(&mut op, &x, krylov);
        x = ritz;
        op.apply(&x, &mut hx);
        let residual = hx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b * theta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        best = (theta, residual);
        if residual < RESIDUAL_TARGET {
            return Ok(OracleResult {
                e0: theta,
                residual_norm: residual,
                iterations: op.matvecs,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: op.matvecs,
        residual: best.1,
    })
}

/// One Lanczos pass of at most `m` steps from `start`; returns the lowest Ritz
/// pair with the vector normalized.
fn lanczos_pass(op: &mut Projected<'_>, start: &[Complex64], m: usize) -> (f64, Vec<Complex64>) {
    let dim = start.len();
    let s = norm(start);
    let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|a| a / s).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut ritz = (0.0, vec![1.0]);
    for j in 0..m {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Two rounds of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        ritz = lowest_ritz(&alpha, &beta);
        let estimate = b * ritz.1.last().copied().unwrap_or(0.0).abs();
        if b < 1e-13 || estimate < RESIDUAL_TARGET * 1e-2 || j + 1 == m {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let mut x = vec![Complex64::new(0.0, 0.0); dim];
    for (v, &y) in basis.iter().zip(&ritz.1) {
        x.iter_mut().zip(v).for_each(|(a, b)| *a += b * y);
    }
    let s = norm(&x);
    x.iter_mut().for_each(|a| *a /= s);
    (ritz.0, x)
}

fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    (
        theta,
        eig.eigenvectors.column(idx).iter().copied().collect(),
    )
}

/// Full diagonalization inside the sector; for cross-checking on small registers.
pub fn dense_ground_energy(h: &Observable, sector: Option<Sector>) -> Result<f64> {
    let n = h.n_qubits();
    if n > DENSE_QUBIT_CAP {
        return Err(Error::MatrixTooLarge {
            n_qubits: n,
            cap: DENSE_QUBIT_CAP,
        });
    }
    let states = basis(n, sector);
    if states.is_empty() {
        return Err(Error::Config(format!(
            "empty sector {sector:?} on {n} qubits"
        )));
    }
    let dim = 1usize << n;
    let k = states.len();
    let mut m = DMatrix::<Complex64>::zeros(k, k);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for (c, &i) in states.iter().enumerate() {
        e[i] = Complex64::new(1.0, 0.0);
        h.apply(&e, &mut col);
        e[i] = Complex64::new(0.0, 0.0);
        for (r, &j) in states.iter().enumerate() {
            m[(r, c)] = col[j];
        }
    }
    let values = m.symmetric_eigenvalues();
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}
