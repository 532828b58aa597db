//! Dense state-vector simulation with evaluation accounting.
//!
//! Operators are compiled into groups sharing one X mask, so applying a Pauli
//! sum is one bit-flip pass per group. For observables the per-group sign
//! tables are cached as dense diagonals when they fit in memory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{i_pow, Mask, PauliString, PauliSum, Phase};
use crate::pools::Generator;

/// Cached diagonal entries above this total are recomputed on the fly.
const DIAGONAL_CACHE_LIMIT: usize = 1 << 23;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPhase {
    Selection,
    Optimization,
}

/// Expectation evaluations split by phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    pub selection: u64,
    pub optimization: u64,
}

impl EvalCounter {
    pub fn total(&self) -> u64 {
        self.selection + self.optimization
    }

    pub fn get(&self, phase: EvalPhase) -> u64 {
        match phase {
            EvalPhase::Selection => self.selection,
            EvalPhase::Optimization => self.optimization,
        }
    }

    fn bump(&mut self, phase: EvalPhase) {
        match phase {
            EvalPhase::Selection => self.selection += 1,
            EvalPhase::Optimization => self.optimization += 1,
        }
    }

    pub fn add(&mut self, other: &EvalCounter) {
        self.selection += other.selection;
        self.optimization += other.optimization;
    }
}

#[derive(Clone, Debug)]
struct Group {
    x: Mask,
    // (z mask, coefficient with i^{#Y} folded in)
    terms: Vec<(Mask, Complex64)>,
}

impl Group {
    #[inline]
    fn factor(&self, i: usize) -> Complex64 {
        let mut f = Complex64::new(0.0, 0.0);
        for &(z, c) in &self.terms {
            if (i as Mask & z).count_ones() & 1 == 1 {
                f -= c;
            } else {
                f += c;
            }
        }
        f
    }
}

/// A Pauli sum compiled for repeated application to state vectors.
#[derive(Clone, Debug)]
pub struct PauliOperator {
    n_qubits: usize,
    groups: Vec<Group>,
}

impl PauliOperator {
    pub fn new(sum: &PauliSum) -> Self {
        let mut groups: Vec<Group> = Vec::new();
        for (x, z, c) in sum.terms() {
            let folded = c * i_pow((x & z).count_ones());
            match groups.last_mut() {
                Some(g) if g.x == x => g.terms.push((z, folded)),
                _ => groups.push(Group {
                    x,
                    terms: vec![(z, folded)],
                }),
            }
        }
        PauliOperator {
            n_qubits: sum.n_qubits(),
            groups,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// `out = S · input`.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for g in &self.groups {
            let x = g.x as usize;
            for (i, &a) in input.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                out[i ^ x] += g.factor(i) * a;
            }
        }
    }
}

/// A Hermitian observable with cached per-group diagonals.
#[derive(Clone, Debug)]
pub struct Observable {
    sum: PauliSum,
    op: PauliOperator,
    diagonals: Option<Vec<Vec<Complex64>>>,
}

impl Observable {
    pub fn new(sum: PauliSum) -> Result<Self> {
        let imag = sum.max_imaginary();
        if imag > 1e-12 {
            return Err(Error::NotHermitian(imag));
        }
        let op = PauliOperator::new(&sum);
        let dim = 1usize << sum.n_qubits();
        let diagonals = (op.groups.len() * dim <= DIAGONAL_CACHE_LIMIT).then(|| {
            op.groups
                .iter()
                .map(|g| (0..dim).map(|i| g.factor(i)).collect())
                .collect()
        });
        Ok(Observable { sum, op, diagonals })
    }

    pub fn pauli(&self) -> &PauliSum {
        &self.sum
    }

    pub fn operator(&self) -> &PauliOperator {
        &self.op
    }

    pub fn n_qubits(&self) -> usize {
        self.sum.n_qubits()
    }

    /// `out = H · input`, uncounted.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        let Some(diagonals) = &self.diagonals else {
            self.op.apply(input, out);
            return;
        };
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (g, d) in self.op.groups.iter().zip(diagonals) {
            let x = g.x as usize;
            for (i, &a) in input.iter().enumerate() {
                out[i ^ x] += d[i] * a;
            }
        }
    }

    /// `⟨ψ|S|ψ⟩` without touching any counter.
    pub(crate) fn raw_expectation(&self, amps: &[Complex64]) -> Complex64 {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for (k, g) in self.op.groups.iter().enumerate() {
            let x = g.x as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            match &self.diagonals {
                Some(d) => {
                    let d = &d[k];
                    for (i, &a) in amps.iter().enumerate() {
                        acc += amps[i ^ x].conj() * d[i] * a;
                    }
                }
                None => {
                    for (i, &a) in amps.iter().enumerate() {
                        if a.re == 0.0 && a.im == 0.0 {
                            continue;
                        }
                        acc += amps[i ^ x].conj() * g.factor(i) * a;
                    }
                }
            }
            re.add(acc.re);
            im.add(acc.im);
        }
        Complex64::new(re.sum(), im.sum())
    }
}

/// Compensated summation.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
    counter: EvalCounter,
}

impl StateVector {
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n_qubits {
            return Err(Error::SizeMismatch {
                left: 1usize << n_qubits,
                right: amps.len(),
            });
        }
        Ok(StateVector {
            n_qubits,
            amps,
            counter: EvalCounter::default(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }

    /// Folds evaluations made on a scratch copy back into this state.
    pub fn absorb_counts(&mut self, delta: &EvalCounter) {
        self.counter.add(delta);
    }

    /// A copy with a zeroed counter, for exploratory evaluations.
    pub fn scratch(&self) -> StateVector {
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.clone(),
            counter: EvalCounter::default(),
        }
    }

    /// Replaces the amplitudes, keeping the counter.
    pub fn set_amplitudes(&mut self, other: &StateVector) {
        self.amps.copy_from_slice(&other.amps);
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `exp(−iθG)|s⟩ = (I + (cos θ − 1)G² − i sin θ G)|s⟩` for `G³ = G`.
    pub fn apply_generator_exponential(&mut self, g: &Generator, theta: f64) -> Result<()> {
        self.apply_exponential(g.operator(), theta)
    }

    pub fn apply_exponential(&mut self, op: &PauliOperator, theta: f64) -> Result<()> {
        self.check(op.n_qubits())?;
        if theta == 0.0 {
            return Ok(());
        }
        let dim = self.amps.len();
        let mut g1 = vec![Complex64::new(0.0, 0.0); dim];
        let mut g2 = vec![Complex64::new(0.0, 0.0); dim];
        op.apply(&self.amps, &mut g1);
        op.apply(&g1, &mut g2);
        let cm1 = theta.cos() - 1.0;
        let ms = Complex64::new(0.0, -theta.sin());
        for ((a, b), c) in self.amps.iter_mut().zip(&g1).zip(&g2) {
            *a += c * cm1 + b * ms;
        }
        Ok(())
    }

    /// `exp(−iθP)|s⟩ = cos θ|s⟩ − i sin θ P|s⟩` for a single string with phase 1.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check(p.n_qubits)?;
        if p.phase != Phase::ONE {
            return Err(Error::CompositePhase);
        }
        let old = self.amps.clone();
        let (c, s) = (theta.cos(), theta.sin());
        self.amps.iter_mut().for_each(|a| *a *= c);
        for (i, &a) in old.iter().enumerate() {
            let (j, f) = p.apply_to_index(i);
            self.amps[j] += Complex64::new(0.0, -s) * f * a;
        }
        Ok(())
    }

    /// `S|s⟩` as a new vector, uncounted.
    pub fn apply_pauli_sum(&self, op: &PauliOperator) -> Result<Vec<Complex64>> {
        self.check(op.n_qubits())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        op.apply(&self.amps, &mut out);
        Ok(out)
    }

    /// `⟨s|H|s⟩`, counted once under `phase`.
    pub fn expectation(&mut self, h: &Observable, phase: EvalPhase) -> Result<f64> {
        self.check(h.n_qubits())?;
        let e = h.raw_expectation(&self.amps);
        debug_assert!(e.im.abs() < 1e-10, "complex energy {e}");
        self.counter.bump(phase);
        Ok(e.re)
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: n,
            });
        }
        Ok(())
    }
}

/// Computational-basis state `|occ⟩`.
pub fn prepare_basis_state(n_qubits: usize, occ: u64) -> Result<StateVector> {
    if n_qubits >= 31 {
        return Err(Error::MatrixTooLarge { n_qubits, cap: 30 });
    }
    let dim = 1usize << n_qubits;
    if occ as usize >= dim {
        return Err(Error::IndexOutOfRange {
            index: occ as usize,
            n_qubits,
        });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[occ as usize] = Complex64::new(1.0, 0.0);
    StateVector::from_amplitudes(n_qubits, amps)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// exp(−iθM) for Hermitian M by eigendecomposition.
    pub(crate) fn dense_exp(m: &DMatrix<Complex64>, theta: f64) -> DMatrix<Complex64> {
        let eig = m.clone().symmetric_eigen();
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            m.nrows(),
            eig.eigenvalues
                .iter()
                .map(|&l| Complex64::from_polar(1.0, -theta * l)),
        ));
        &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }

    pub(crate) fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    fn as_vector(s: &StateVector) -> DVector<Complex64> {
        DVector::from_column_slice(s.amplitudes())
    }

    #[test]
    fn basis_state_examples() {
        let s = prepare_basis_state(2, 0b1).unwrap();
        assert_eq!(s.amplitudes()[1], c(1.0, 0.0));
        let s = prepare_basis_state(2, 0).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        let s = prepare_basis_state(12, 0b1111).unwrap();
        assert_eq!(s.amplitudes()[15], c(1.0, 0.0));
        assert!(prepare_basis_state(2, 4).is_err());
    }

    #[test]
    fn exponential_of_x_at_half_pi() {
        let x = PauliOperator::new(&PauliSum::from_labels(&[(1.0, "X")]).unwrap());
        let mut s = prepare_basis_state(1, 0).unwrap();
        s.apply_exponential(&x, std::f64::consts::FRAC_PI_2)
            .unwrap();
        assert!((s.amplitudes()[0]).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
        let before = s.clone();
        s.apply_exponential(&x, 0.0).unwrap();
        assert_eq!(s.amplitudes(), before.amplitudes());
    }

    #[test]
    fn exponential_matches_dense_for_random_g_cubed_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // A single Pauli string satisfies G³ = G, as does (P + Q)/√2 for anticommuting P, Q.
        let ops = [
            PauliSum::from_labels(&[(1.0, "XYZI")]).unwrap(),
            PauliSum::from_labels(&[(0.5f64.sqrt(), "XIII"), (0.5f64.sqrt(), "ZIXI")]).unwrap(),
        ];
        for op in &ops {
            let m = op.matrix_of().unwrap();
            assert!((&m * &m * &m - &m).norm() < 1e-12);
            let compiled = PauliOperator::new(op);
            for _ in 0..5 {
                let theta = rng.gen_range(-3.0..3.0);
                let mut s = random_state(4, &mut rng);
                let expected = dense_exp(&m, theta) * as_vector(&s);
                s.apply_exponential(&compiled, theta).unwrap();
                assert!((as_vector(&s) - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pauli_rotation_examples() {
        let z = PauliString::from_label("Z").unwrap();
        let mut s = prepare_basis_state(1, 0).unwrap();
        s.apply_pauli_rotation(&z, 0.3).unwrap();
        assert!((s.amplitudes()[0] - Complex64::from_polar(1.0, -0.3)).norm() < 1e-15);
        let mut t = prepare_basis_state(1, 1).unwrap();
        t.apply_pauli_rotation(&z, 0.0).unwrap();
        assert_eq!(t.amplitudes()[1], c(1.0, 0.0));
        let bad = z.with_phase(Phase::I);
        assert!(matches!(
            t.apply_pauli_rotation(&bad, 0.1),
            Err(Error::CompositePhase)
        ));
    }

    #[test]
    fn expectation_examples_and_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let id = Observable::new(PauliSum::identity(3, 2.5)).unwrap();
        let mut s = random_state(3, &mut rng);
        assert!((s.expectation(&id, EvalPhase::Selection).unwrap() - 2.5).abs() < 1e-14);
        let z = Observable::new(PauliSum::from_labels(&[(1.0, "Z")]).unwrap()).unwrap();
        let mut one = prepare_basis_state(1, 1).unwrap();
        assert_eq!(one.expectation(&z, EvalPhase::Optimization).unwrap(), -1.0);
        assert_eq!(
            s.counter(),
            EvalCounter {
                selection: 1,
                optimization: 0
            }
        );
        assert_eq!(
            one.counter(),
            EvalCounter {
                selection: 0,
                optimization: 1
            }
        );
    }

    #[test]
    fn non_hermitian_observables_are_rejected() {
        let mut s = PauliSum::zero(1);
        s.add_term(1, 0, c(0.0, 1.0));
        assert!(matches!(Observable::new(s), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn expectation_matches_dense_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = PauliSum::from_labels(&[
            (0.3, "XYYX"),
            (-0.7, "ZZII"),
            (0.2, "IXIX"),
            (1.1, "IIIY"),
            (0.4, "YIYI"),
        ])
        .unwrap();
        let m = h.matrix_of().unwrap();
        let obs = Observable::new(h.clone()).unwrap();
        let mut uncached = obs.clone();
        uncached.diagonals = None;
        for _ in 0..10 {
            let mut s = random_state(4, &mut rng);
            let v = as_vector(&s);
            let dense = (v.adjoint() * &m * &v)[(0, 0)];
            let e = s.expectation(&obs, EvalPhase::Selection).unwrap();
            assert!((e - dense.re).abs() < 1e-12);
            assert!(obs.raw_expectation(s.amplitudes()).im.abs() < 1e-10);
            assert!((uncached.raw_expectation(s.amplitudes()).re - e).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_pauli_sum_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = PauliSum::from_labels(&[(0.3, "XYZ"), (-0.7, "ZZI"), (0.25, "IXX")]).unwrap();
        let m = h.matrix_of().unwrap();
        let s = random_state(3, &mut rng);
        let out = s.apply_pauli_sum(&PauliOperator::new(&h)).unwrap();
        assert!((DVector::from_vec(out) - &m * as_vector(&s)).norm() < 1e-12);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let x = PauliOperator::new(&PauliSum::from_labels(&[(1.0, "XX")]).unwrap());
        let mut s = prepare_basis_state(3, 0).unwrap();
        assert!(matches!(
            s.apply_exponential(&x, 0.2),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn neumaier_recovers_cancelled_digits() {
        let mut n = Neumaier::default();
        for v in [1.0, 1e100, 1.0, -1e100] {
            n.add(v);
        }
        assert_eq!(n.sum(), 2.0);
    }
}
