//! Exact single-parameter energy landscapes and coordinate-descent sweeps.
//!
//! For `G³ = G` the energy along one parameter is
//! `E(θ) = A + B cos θ + C sin θ + D cos 2θ + F sin 2θ`, so five samples on a
//! uniform grid determine it and its global minimum can be found in closed form.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pools::Generator;
use crate::simulator::{EvalPhase, Observable, PauliOperator, StateVector};
use crate::trace::{Session, Stage};

const GRID_POINTS: usize = 10_000;
const SAMPLES: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigLandscape {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
}

impl TrigLandscape {
    pub fn value(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (s2, c2) = (2.0 * theta).sin_cos();
        self.a + self.b * c1 + self.c * s1 + self.d * c2 + self.f * s2
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (s2, c2) = (2.0 * theta).sin_cos();
        -self.b * s1 + self.c * c1 - 2.0 * self.d * s2 + 2.0 * self.f * c2
    }

    fn second_derivative(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (s2, c2) = (2.0 * theta).sin_cos();
        -self.b * c1 - self.c * s1 - 4.0 * self.d * c2 - 4.0 * self.f * s2
    }

    fn scale(&self) -> f64 {
        self.b.abs() + self.c.abs() + self.d.abs() + self.f.abs()
    }
}

/// `dE/dθ` at `θ = 0`.
pub fn landscape_derivative_at_zero(l: &TrigLandscape) -> f64 {
    l.c + 2.0 * l.f
}

/// Canonical angle in `[−π, π)`.
pub fn canonical_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// Inverts samples `E(θ0 + 2πk/5)`, `k = 0..5`.
pub fn landscape_from_samples(theta0: f64, samples: &[f64; SAMPLES]) -> TrigLandscape {
    let mut l = TrigLandscape::default();
    let (mut b, mut c, mut d, mut f) = (0.0, 0.0, 0.0, 0.0);
    for (k, &e) in samples.iter().enumerate() {
        let delta = 2.0 * PI * k as f64 / SAMPLES as f64;
        let (s1, c1) = delta.sin_cos();
        let (s2, c2) = (2.0 * delta).sin_cos();
        l.a += e;
        b += e * c1;
        c += e * s1;
        d += e * c2;
        f += e * s2;
    }
    let w = 2.0 / SAMPLES as f64;
    l.a /= SAMPLES as f64;
    let (b, c, d, f) = (w * b, w * c, w * d, w * f);
    let (s1, c1) = theta0.sin_cos();
    let (s2, c2) = (2.0 * theta0).sin_cos();
    l.b = b * c1 - c * s1;
    l.c = b * s1 + c * c1;
    l.d = d * c2 - f * s2;
    l.f = d * s2 + f * c2;
    l
}

/// Samples `energy` on the five-point grid anchored at `theta0`, reusing `e_at_theta0`.
pub fn reconstruct_with(
    theta0: f64,
    e_at_theta0: Option<f64>,
    mut energy: impl FnMut(f64) -> Result<f64>,
) -> Result<TrigLandscape> {
    let mut samples = [0.0; SAMPLES];
    for (k, slot) in samples.iter_mut().enumerate() {
        *slot = match (k, e_at_theta0) {
            (0, Some(e)) => e,
            _ => energy(theta0 + 2.0 * PI * k as f64 / SAMPLES as f64)?,
        };
    }
    Ok(landscape_from_samples(theta0, &samples))
}

/// `G|φ⟩` and `G²|φ⟩`, from which `exp(−iθG)|φ⟩` follows for any θ.
pub(crate) struct Branches {
    pub base: Vec<Complex64>,
    pub g1: Vec<Complex64>,
    pub g2: Vec<Complex64>,
}

impl Branches {
    pub fn new(phi: &[Complex64], op: &PauliOperator) -> Self {
        let mut g1 = vec![Complex64::new(0.0, 0.0); phi.len()];
        let mut g2 = g1.clone();
        op.apply(phi, &mut g1);
        op.apply(&g1, &mut g2);
        Branches {
            base: phi.to_vec(),
            g1,
            g2,
        }
    }

    pub fn combine(&self, theta: f64, out: &mut [Complex64]) {
        let cm1 = theta.cos() - 1.0;
        let ms = Complex64::new(0.0, -theta.sin());
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.base[i] + self.g2[i] * cm1 + self.g1[i] * ms;
        }
    }

    /// Pushes all three vectors through `exp(−iθ_k G_k)`.
    pub fn propagate(&mut self, g: &Generator, theta: f64) -> Result<()> {
        let n = g.n_qubits();
        for v in [&mut self.base, &mut self.g1, &mut self.g2] {
            let mut s = StateVector::from_amplitudes(n, std::mem::take(v))?;
            s.apply_generator_exponential(g, theta)?;
            *v = s.amplitudes().to_vec();
        }
        Ok(())
    }
}

/// Landscape of appending `g` to the circuit whose output is `state_before`.
///
/// Costs four evaluations when `e_at_zero` is supplied, five otherwise; the
/// evaluations are charged to `state_before`'s counter.
pub fn reconstruct_landscape(
    state_before: &mut StateVector,
    g: &Generator,
    h: &Observable,
    e_at_zero: Option<f64>,
    phase: EvalPhase,
) -> Result<TrigLandscape> {
    let branches = Branches::new(state_before.amplitudes(), g.operator());
    let mut probe = state_before.scratch();
    let n = state_before.n_qubits();
    let mut buf = vec![Complex64::new(0.0, 0.0); 1 << n];
    let l = reconstruct_with(0.0, e_at_zero, |theta| {
        branches.combine(theta, &mut buf);
        let mut s = StateVector::from_amplitudes(n, std::mem::take(&mut buf))?;
        let e = s.expectation(h, phase);
        probe.absorb_counts(&s.counter());
        buf = s.amplitudes().to_vec();
        e
    })?;
    state_before.absorb_counts(&probe.counter());
    Ok(l)
}

fn grid() -> &'static [(f64, f64, f64, f64)] {
    static GRID: OnceLock<Vec<(f64, f64, f64, f64)>> = OnceLock::new();
    GRID.get_or_init(|| {
        (0..GRID_POINTS)
            .map(|k| {
                let theta = -PI + 2.0 * PI * k as f64 / GRID_POINTS as f64;
                let (s1, c1) = theta.sin_cos();
                let (s2, c2) = (2.0 * theta).sin_cos();
                (c1, s1, c2, s2)
            })
            .collect()
    })
}

fn grid_minimum(l: &TrigLandscape) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for (k, &(c1, s1, c2, s2)) in grid().iter().enumerate() {
        let e = l.a + l.b * c1 + l.c * s1 + l.d * c2 + l.f * s2;
        if e < best.1 {
            best = (-PI + 2.0 * PI * k as f64 / GRID_POINTS as f64, e);
        }
    }
    best
}

/// Real roots of `Σ coeffs[k] t^k`.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-14 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

fn newton_polish(l: &TrigLandscape, mut theta: f64) -> f64 {
    for _ in 0..8 {
        let h = l.second_derivative(theta);
        if h.abs() < 1e-300 {
            break;
        }
        let step = l.derivative(theta) / h;
        let next = theta - step;
        if l.value(next) > l.value(theta) {
            break;
        }
        theta = next;
        if step.abs() < 1e-15 {
            break;
        }
    }
    theta
}

/// Global minimum over one period: `(θ*, E(θ*))`.
///
/// Stationary points come from the quartic in `t = tan(θ/2)` plus `θ = π`; a
/// dense grid backs the root finder up. Ties go to the smallest `|θ|`, then to
/// the positive angle. A constant landscape returns `θ* = 0`.
pub fn minimize_landscape(l: &TrigLandscape) -> (f64, f64) {
    let scale = l.scale();
    if scale <= 1e-15 {
        return (0.0, l.a);
    }
    let (b, c, d, f) = (l.b, l.c, l.d, l.f);
    let quartic = [
        c + 2.0 * f,
        -2.0 * b - 8.0 * d,
        -12.0 * f,
        -2.0 * b + 8.0 * d,
        2.0 * f - c,
    ];
    let mut candidates: Vec<f64> = real_roots(&quartic)
        .into_iter()
        .map(|t| newton_polish(l, 2.0 * t.atan()))
        .collect();
    candidates.push(PI);
    candidates.push(0.0);
    let (g_theta, _) = grid_minimum(l);
    candidates.push(newton_polish(l, g_theta));
    candidates.push(g_theta);

    let tie = 1e-15 * (l.a.abs() + scale).max(1.0);
    let mut values: Vec<(f64, f64)> = candidates
        .into_iter()
        .map(|t| {
            let t = canonical_angle(t);
            // Report π rather than −π.
            let t = if t == -PI { PI } else { t };
            (t, l.value(t))
        })
        .collect();
    let e_min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    values.retain(|v| v.1 <= e_min + tie);
    values.sort_by(|x, y| {
        x.0.abs()
            .partial_cmp(&y.0.abs())
            .unwrap()
            .then(y.0.partial_cmp(&x.0).unwrap())
    });
    let theta = values[0].0;
    // Pairs like ±π/2 land within rounding of each other; snap to the positive one.
    let mirrored = values
        .iter()
        .find(|v| (v.0 + theta).abs() < 1e-12 && v.0 > 0.0);
    let theta = mirrored.map_or(theta, |v| v.0);
    (theta, l.value(theta).min(e_min))
}

/// One parametrized operator in the ansatz.
#[derive(Clone, Debug)]
pub struct AnsatzElement {
    pub generator: Generator,
    theta: f64,
}

impl AnsatzElement {
    pub fn new(generator: Generator, theta: f64) -> Self {
        AnsatzElement {
            generator,
            theta: canonical_angle(theta),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn set_theta(&mut self, theta: f64) {
        self.theta = canonical_angle(theta);
    }
}

/// `U(θ)|reference⟩` for the whole ansatz; no evaluations.
pub fn prepare_ansatz_state(
    reference: &StateVector,
    ansatz: &[AnsatzElement],
) -> Result<StateVector> {
    let mut s = reference.scratch();
    for el in ansatz {
        s.apply_generator_exponential(&el.generator, el.theta)?;
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub eps_conv: f64,
    pub max_sweeps: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            eps_conv: 1e-8,
            max_sweeps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub energy: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Energy after every parameter update, in order.
    pub energies: Vec<f64>,
}

/// Coordinate descent in ansatz order, each parameter set to its landscape optimum.
///
/// `energy` is the current energy of the ansatz if already known; otherwise one
/// extra evaluation establishes it.
pub fn sweep_optimize(
    ansatz: &mut [AnsatzElement],
    reference: &StateVector,
    session: &mut Session<'_>,
    energy: Option<f64>,
    opts: SweepOptions,
) -> Result<SweepOutcome> {
    let n = reference.n_qubits();
    let previous_stage = session.stage;
    session.stage = Stage::Sweep;
    let mut energy = match energy {
        Some(e) => e,
        None => {
            let mut s = prepare_ansatz_state(reference, ansatz)?;
            let e = session.evaluate(&mut s, EvalPhase::Optimization)?;
            session.commit(e, ansatz.len(), EvalPhase::Optimization);
            e
        }
    };
    let mut outcome = SweepOutcome {
        energy,
        sweeps: 0,
        converged: ansatz.is_empty(),
        energies: Vec::new(),
    };
    if ansatz.is_empty() {
        session.stage = previous_stage;
        return Ok(outcome);
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); 1 << n];
    for sweep in 1..=opts.max_sweeps {
        let start = energy;
        let mut phi = reference.amplitudes().to_vec();
        for j in 0..ansatz.len() {
            let theta0 = ansatz[j].theta;
            let mut branches = Branches::new(&phi, ansatz[j].generator.operator());
            let prefix = Branches {
                base: Vec::new(),
                g1: branches.g1.clone(),
                g2: branches.g2.clone(),
            };
            for el in &ansatz[j + 1..] {
                branches.propagate(&el.generator, el.theta)?;
            }
            let l = reconstruct_with(theta0, Some(energy), |theta| {
                branches.combine(theta, &mut buf);
                let mut s = StateVector::from_amplitudes(n, std::mem::take(&mut buf))?;
                let e = session.evaluate(&mut s, EvalPhase::Optimization);
                buf = s.amplitudes().to_vec();
                e
            })?;
            let (theta, e) = minimize_landscape(&l);
            if e < energy {
                ansatz[j].set_theta(theta);
                energy = e;
            }
            outcome.energies.push(energy);
            session.commit(energy, ansatz.len(), EvalPhase::Optimization);
            let full = Branches {
                base: phi,
                g1: prefix.g1,
                g2: prefix.g2,
            };
            phi = vec![Complex64::new(0.0, 0.0); 1 << n];
            full.combine(ansatz[j].theta, &mut phi);
        }
        outcome.sweeps = sweep;
        if start - energy < opts.eps_conv {
            outcome.converged = true;
            break;
        }
    }
    outcome.energy = energy;
    session.stage = previous_stage;
    Ok(outcome)
}
