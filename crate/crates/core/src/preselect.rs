//! Closed-form energy impact of first-layer excitations from the integrals alone.
//!
//! On a determinant `|ψ0⟩` an excitation generator rotates within the span of
//! `|ψ0⟩` and one excited determinant `|ψ1⟩`, so
//! `ΔE(θ) = a(1 − cos 2θ) − s·b·sin 2θ` with `a` half the diagonal energy gap,
//! `b` the coupling integral and `s = ±1` a sign fixed by the generator's
//! phase on `|ψ0⟩` and the fermionic ordering sign of the coupling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::{occupied_list, SpinOrbitalHamiltonian};
use crate::pauli::{Pauli, PauliString};
use crate::pools::{Generator, Pool};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreselectResult {
    /// Occupied indices then virtual indices.
    pub orbitals: Vec<usize>,
    pub a: f64,
    pub b: f64,
    pub delta_e_max: f64,
    /// In `[−π/2, π/2)`.
    pub theta_max: f64,
    pub parity_sign: i8,
}

impl PreselectResult {
    fn new(orbitals: Vec<usize>, a: f64, b: f64, parity_sign: i8) -> Self {
        let sb = parity_sign as f64 * b;
        let r = a.hypot(b);
        let theta_max = if a == 0.0 && b == 0.0 {
            0.0
        } else {
            let phi = sb.atan2(a);
            canonical_half_period((PI + phi) / 2.0)
        };
        PreselectResult {
            orbitals,
            a,
            b,
            delta_e_max: a + r,
            theta_max,
            parity_sign,
        }
    }

    /// `E(ψ0) − E(exp(−iθG)ψ0)`.
    pub fn delta_e(&self, theta: f64) -> f64 {
        let s = self.parity_sign as f64;
        self.a * (1.0 - (2.0 * theta).cos()) - s * self.b * (2.0 * theta).sin()
    }
}

fn canonical_half_period(theta: f64) -> f64 {
    let half = PI / 2.0;
    let t = (theta + half).rem_euclid(PI) - half;
    if t >= half {
        t - PI
    } else {
        t
    }
}

/// Applies ladder operators right to left to a determinant, tracking the JW sign.
fn ladder_sign(mut det: u64, ops: &[(bool, usize)]) -> Option<(u64, f64)> {
    let mut sign = 1.0;
    for &(create, p) in ops.iter().rev() {
        let bit = 1u64 << p;
        if create == (det & bit != 0) {
            return None;
        }
        if (det & (bit - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        det ^= bit;
    }
    Some((det, sign))
}

fn pair_term(soh: &SpinOrbitalHamiltonian, x: usize, y: usize) -> f64 {
    soh.g(x, y, y, x) - soh.g(x, y, x, y)
}

fn check_occupancy(occ: u64, occupied: &[usize], virtuals: &[usize]) -> Result<()> {
    for &p in occupied {
        if occ >> p & 1 == 0 {
            return Err(Error::Occupation(format!("orbital {p} is not occupied")));
        }
    }
    for &r in virtuals {
        if occ >> r & 1 == 1 {
            return Err(Error::Occupation(format!("orbital {r} is not virtual")));
        }
    }
    let mut all: Vec<usize> = occupied.iter().chain(virtuals).copied().collect();
    all.sort_unstable();
    all.dedup();
    if all.len() != occupied.len() + virtuals.len() {
        return Err(Error::Excitation("repeated orbital".into()));
    }
    Ok(())
}

/// `(a, b, M)` for a single `p → q` or double `p, q → r, s`, where
/// `⟨ψ0|H|ψ1⟩ = M·b` and `M` is the ordering sign of the coupling operator.
fn matrix_elements(
    soh: &SpinOrbitalHamiltonian,
    occ: u64,
    occupied: &[usize],
    virtuals: &[usize],
) -> Result<(f64, f64, f64)> {
    let spectators: Vec<usize> = occupied_list(occ)
        .into_iter()
        .filter(|c| !occupied.contains(c))
        .collect();
    let psi1 = occupied
        .iter()
        .chain(virtuals)
        .fold(occ, |det, &p| det ^ (1u64 << p));
    match (occupied, virtuals) {
        (&[p], &[q]) => {
            let mut gap = soh.h(p, p) - soh.h(q, q);
            for &c in &spectators {
                gap += pair_term(soh, p, c) - pair_term(soh, q, c);
            }
            let mut b = soh.h(p, q);
            for &c in &spectators {
                b += soh.g(p, c, c, q) - soh.g(p, c, q, c);
            }
            let (det, m) = ladder_sign(psi1, &[(true, p), (false, q)])
                .ok_or_else(|| Error::Excitation("inconsistent single".into()))?;
            debug_assert_eq!(det, occ);
            Ok((gap / 2.0, b, m))
        }
        (&[p, q], &[r, s]) => {
            let mut gap = soh.h(p, p) + soh.h(q, q) - soh.h(r, r) - soh.h(s, s);
            gap += pair_term(soh, p, q) - pair_term(soh, r, s);
            for &c in &spectators {
                gap += pair_term(soh, p, c) + pair_term(soh, q, c)
                    - pair_term(soh, r, c)
                    - pair_term(soh, s, c);
            }
            let b = soh.g(p, q, r, s) - soh.g(p, q, s, r);
            let (det, m) = ladder_sign(psi1, &[(true, p), (true, q), (false, r), (false, s)])
                .ok_or_else(|| Error::Excitation("inconsistent double".into()))?;
            debug_assert_eq!(det, occ);
            Ok((gap / 2.0, b, m))
        }
        _ => Err(Error::Excitation(format!(
            "closed form covers singles and doubles, got {occupied:?} -> {virtuals:?}"
        ))),
    }
}

/// `G|ψ0⟩ = κ|ψ1⟩`; returns `κ`, which must be `±i` for an excitation.
fn generator_phase(g: &Generator, occ: u64, psi1: u64) -> Result<f64> {
    let image = g.apply_to_index(occ as usize);
    match image.as_slice() {
        [(j, kappa)]
            if *j as u64 == psi1
                && kappa.re.abs() < 1e-12
                && (kappa.im.abs() - 1.0).abs() < 1e-12 =>
        {
            // −iκ is real ±1.
            Ok(kappa.im.signum())
        }
        _ => Err(Error::Excitation(format!(
            "{} does not act as a single excitation on {occ:#b}",
            g.label()
        ))),
    }
}

/// Closed-form impact of any rank-1 or rank-2 pool generator on the determinant `occ`.
pub fn preselect_excitation(
    soh: &SpinOrbitalHamiltonian,
    occ: u64,
    g: &Generator,
) -> Result<PreselectResult> {
    let occupied = g.occupied();
    let virtuals = g.virtuals();
    check_occupancy(occ, occupied, virtuals)?;
    let (a, b, m) = matrix_elements(soh, occ, occupied, virtuals)?;
    let psi1 = occupied
        .iter()
        .chain(virtuals)
        .fold(occ, |det, &p| det ^ (1u64 << p));
    let sigma = generator_phase(g, occ, psi1)?;
    let sign = if sigma * m > 0.0 { 1 } else { -1 };
    Ok(PreselectResult::new(g.orbitals().to_vec(), a, b, sign))
}

/// Fermionic double `p, q → r, s`.
pub fn preselect_double(
    soh: &SpinOrbitalHamiltonian,
    occ: u64,
    p: usize,
    q: usize,
    r: usize,
    s: usize,
) -> Result<PreselectResult> {
    check_occupancy(occ, &[p, q], &[r, s])?;
    let g = Generator::fermionic_double(soh.n_so, p, q, r, s)?;
    preselect_excitation(soh, occ, &g)
}

/// Fermionic single `p → q`.
pub fn preselect_single(
    soh: &SpinOrbitalHamiltonian,
    occ: u64,
    p: usize,
    q: usize,
) -> Result<PreselectResult> {
    check_occupancy(occ, &[p], &[q])?;
    let g = Generator::fermionic_single(soh.n_so, p, q)?;
    preselect_excitation(soh, occ, &g)
}

/// Closed-form results for every rank-2 generator in the pool, in pool order.
pub fn preselect_pool_doubles(
    soh: &SpinOrbitalHamiltonian,
    pool: &Pool,
) -> Result<Vec<(usize, PreselectResult)>> {
    pool.iter()
        .enumerate()
        .filter(|(_, g)| g.kind().rank() == 2)
        .map(|(k, g)| Ok((k, preselect_excitation(soh, pool.reference, g)?)))
        .collect()
}

/// The single string `X_p X_q X_r Y_s` and the sign `ε` with
/// `exp(−iθG)|occ⟩ = exp(−iεθ X_p X_q X_r Y_s)|occ⟩`.
pub fn first_layer_rotation(g: &Generator, occ: u64) -> Result<(PauliString, i8)> {
    let orbitals = g.orbitals();
    if g.kind().rank() != 2 {
        return Err(Error::Excitation(format!("{} is not a double", g.label())));
    }
    check_occupancy(occ, g.occupied(), g.virtuals())?;
    let [p, q, r, s] = [orbitals[0], orbitals[1], orbitals[2], orbitals[3]];
    let string = PauliString::from_factors(
        g.n_qubits(),
        &[(p, Pauli::X), (q, Pauli::X), (r, Pauli::X), (s, Pauli::Y)],
    )?;
    let psi1 = orbitals.iter().fold(occ, |det, &k| det ^ (1u64 << k));
    let sigma_g = generator_phase(g, occ, psi1)?;
    let (j, kappa_p) = string.apply_to_index(occ as usize);
    debug_assert_eq!(j as u64, psi1);
    let sigma_p = kappa_p.im.signum();
    Ok((string, if sigma_g == sigma_p { 1 } else { -1 }))
}
