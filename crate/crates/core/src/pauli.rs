//! Sparse Pauli-string algebra and the Jordan–Wigner mapping.
//!
//! A Pauli string is stored symplectically: bit `k` of `x` and `z` selects the
//! single-qubit factor on qubit `k` (`I`, `X`, `Z`, or `Y` when both bits are
//! set). Qubit 0 is the least significant bit of a computational-basis index.
//!
//! [`PauliSum`] keys every term by its `(x, z)` masks and keeps the complex
//! coefficient of the Hermitian product of single-qubit Paulis, so a sum is
//! Hermitian exactly when every coefficient is real.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mask = u64;

/// Terms with a coefficient modulus below this are dropped by [`PauliSum::simplify`].
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// Largest register for which [`PauliSum::matrix_of`] builds a dense matrix.
pub const DENSE_QUBIT_CAP: usize = 14;

pub const MAX_QUBITS: usize = Mask::BITS as usize;

/// Power of `i`: `Phase(k)` is `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Phase {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u32 {
        self.0 as u32
    }

    pub fn to_complex(self) -> Complex64 {
        i_pow(self.0 as u32)
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[inline]
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[inline]
fn parity(m: Mask) -> bool {
    m.count_ones() & 1 == 1
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `phase · σ_{n-1} ⊗ … ⊗ σ_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x: Mask,
    pub z: Mask,
    pub phase: Phase,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        PauliString {
            n_qubits,
            x: 0,
            z: 0,
            phase: Phase::ONE,
        }
    }

    /// Builds a string from `(qubit, Pauli)` factors.
    pub fn from_factors(n_qubits: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = PauliString::identity(n_qubits);
        for &(q, p) in factors {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange { index: q, n_qubits });
            }
            let (xb, zb) = p.bits();
            let bit = 1 << q;
            s.x = (s.x & !bit) | if xb { bit } else { 0 };
            s.z = (s.z & !bit) | if zb { bit } else { 0 };
        }
        Ok(s)
    }

    /// Parses a label such as `"XXIY"`, written with qubit 0 first.
    pub fn from_label(label: &str) -> Result<Self> {
        let n = label.chars().count();
        let mut factors = Vec::with_capacity(n);
        for (q, c) in label.chars().enumerate() {
            let p = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(Error::Format(format!("bad Pauli letter {other:?}"))),
            };
            factors.push((q, p));
        }
        PauliString::from_factors(n, &factors)
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let bit = 1 << qubit;
        Pauli::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Label with qubit 0 first.
    pub fn label(&self) -> String {
        (0..self.n_qubits).map(|q| self.get(q).letter()).collect()
    }

    /// Group product `self · rhs` including the phase.
    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.n_qubits != rhs.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: rhs.n_qubits,
            });
        }
        Ok(self.multiply_unchecked(rhs))
    }

    // Each string is i^{y} X^x Z^z up to its phase, since Y = iXZ qubit-wise.
    // Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}.
    fn multiply_unchecked(&self, rhs: &PauliString) -> PauliString {
        let x = self.x ^ rhs.x;
        let z = self.z ^ rhs.z;
        let k = self.phase.power()
            + rhs.phase.power()
            + self.y_count()
            + rhs.y_count()
            + 2 * (self.z & rhs.x).count_ones()
            + 4
            - ((x & z).count_ones() % 4);
        PauliString {
            n_qubits: self.n_qubits,
            x,
            z,
            phase: Phase::from_power(k),
        }
    }

    /// Action on a computational-basis index: `P|i⟩ = c |j⟩`.
    #[inline]
    pub fn apply_to_index(&self, index: usize) -> (usize, Complex64) {
        let base = i_pow(self.phase.power() + self.y_count());
        let sign = if parity(index as Mask & self.z) {
            -1.0
        } else {
            1.0
        };
        (index ^ self.x as usize, base * sign)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.power() {
            0 => "",
            1 => "i·",
            2 => "-",
            _ => "-i·",
        };
        write!(f, "{prefix}{}", self.label())
    }
}

/// Complex-weighted sum of Hermitian Pauli strings.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<(Mask, Mask), Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut s = PauliSum::zero(n_qubits);
        s.add_term(0, 0, Complex64::new(coeff, 0.0));
        s
    }

    /// A single string with the string's phase folded into the coefficient.
    pub fn from_string(p: &PauliString, coeff: Complex64) -> Self {
        let mut s = PauliSum::zero(p.n_qubits);
        s.add_string(p, coeff);
        s
    }

    /// Builds a sum from `(coefficient, label)` pairs; labels are written qubit 0 first.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|(_, l)| l.chars().count())
            .ok_or_else(|| Error::Format("empty term list".into()))?;
        let mut s = PauliSum::zero(n);
        for (c, label) in terms {
            let p = PauliString::from_label(label)?;
            if p.n_qubits != n {
                return Err(Error::SizeMismatch {
                    left: n,
                    right: p.n_qubits,
                });
            }
            s.add_string(&p, Complex64::new(*c, 0.0));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates `(x, z, coefficient)` in canonical mask order.
    pub fn terms(&self) -> impl Iterator<Item = (Mask, Mask, Complex64)> + '_ {
        self.terms.iter().map(|(&(x, z), &c)| (x, z, c))
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        let c = self
            .terms
            .get(&(p.x, p.z))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0));
        c / p.phase.to_complex()
    }

    pub fn add_term(&mut self, x: Mask, z: Mask, coeff: Complex64) {
        *self.terms.entry((x, z)).or_insert(Complex64::new(0.0, 0.0)) += coeff;
    }

    pub fn add_string(&mut self, p: &PauliString, coeff: Complex64) {
        self.add_term(p.x, p.z, coeff * p.phase.to_complex());
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_size(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    pub(crate) fn add_assign(&mut self, other: &PauliSum) {
        for (x, z, c) in other.terms() {
            self.add_term(x, z, c);
        }
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(&k, &c)| (k, c * factor)).collect(),
        }
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(&k, &c)| (k, c.conj())).collect(),
        }
    }

    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_size(other)?;
        let mut out = PauliSum::zero(self.n_qubits);
        for (&(x1, z1), &c1) in &self.terms {
            let a = PauliString {
                n_qubits: self.n_qubits,
                x: x1,
                z: z1,
                phase: Phase::ONE,
            };
            for (&(x2, z2), &c2) in &other.terms {
                let b = PauliString {
                    n_qubits: self.n_qubits,
                    x: x2,
                    z: z2,
                    phase: Phase::ONE,
                };
                let ab = a.multiply_unchecked(&b);
                out.add_string(&ab, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Drops terms with `|c| < PRUNE_TOLERANCE`.
    pub fn simplify(mut self) -> PauliSum {
        self.terms.retain(|_, c| c.norm() >= PRUNE_TOLERANCE);
        self
    }

    pub fn max_imaginary(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imaginary() <= tol
    }

    /// Coefficient of the identity string.
    pub fn trace_coefficient(&self) -> Complex64 {
        self.terms
            .get(&(0, 0))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Largest coefficient modulus difference against `other`.
    pub fn distance(&self, other: &PauliSum) -> f64 {
        let mut d: f64 = 0.0;
        for (k, c) in &self.terms {
            let o = other.terms.get(k).copied().unwrap_or_default();
            d = d.max((c - o).norm());
        }
        for (k, o) in &other.terms {
            if !self.terms.contains_key(k) {
                d = d.max(o.norm());
            }
        }
        d
    }

    /// `S|i⟩` as a list of `(index, amplitude)`, merged by index and pruned.
    pub fn apply_to_index(&self, index: usize) -> Vec<(usize, Complex64)> {
        let mut out: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (x, z, c) in self.terms() {
            let p = PauliString {
                n_qubits: self.n_qubits,
                x,
                z,
                phase: Phase::ONE,
            };
            let (j, f) = p.apply_to_index(index);
            *out.entry(j).or_default() += c * f;
        }
        out.into_iter()
            .filter(|(_, a)| a.norm() >= PRUNE_TOLERANCE)
            .collect()
    }

    /// Dense matrix in the qubit-0-least-significant basis.
    pub fn matrix_of(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_QUBIT_CAP {
            return Err(Error::MatrixTooLarge {
                n_qubits: self.n_qubits,
                cap: DENSE_QUBIT_CAP,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (x, z, c) in self.terms() {
            let p = PauliString {
                n_qubits: self.n_qubits,
                x,
                z,
                phase: Phase::ONE,
            };
            for i in 0..dim {
                let (j, f) = p.apply_to_index(i);
                m[(j, i)] += c * f;
            }
        }
        Ok(m)
    }

    fn check_size(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }
}

impl fmt::Display for PauliSum {
    /// Renders terms as `c · X0 Z2 Y3`, one per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, z, c) in self.terms() {
            let p = PauliString {
                n_qubits: self.n_qubits,
                x,
                z,
                phase: Phase::ONE,
            };
            let factors: Vec<String> = (0..self.n_qubits)
                .filter(|&q| p.get(q) != Pauli::I)
                .map(|q| format!("{}{}", p.get(q).letter(), q))
                .collect();
            let body = if factors.is_empty() {
                "I".to_string()
            } else {
                factors.join(" ")
            };
            if c.im == 0.0 {
                writeln!(f, "{} · {}", c.re, body)?;
            } else {
                writeln!(f, "({}{:+}i) · {}", c.re, c.im, body)?;
            }
        }
        Ok(())
    }
}

/// Fermionic ladder operator on a spin orbital.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

impl Ladder {
    pub fn index(self) -> usize {
        match self {
            Ladder::Create(p) | Ladder::Annihilate(p) => p,
        }
    }
}

/// `a_p = Z_{<p} (X_p + iY_p)/2`, `a†_p = Z_{<p} (X_p − iY_p)/2`.
fn ladder_sum(n_qubits: usize, op: Ladder) -> PauliSum {
    let p = op.index();
    let below: Mask = (1 << p) - 1;
    let bit: Mask = 1 << p;
    let y_coeff = match op {
        Ladder::Create(_) => Complex64::new(0.0, -0.5),
        Ladder::Annihilate(_) => Complex64::new(0.0, 0.5),
    };
    let mut s = PauliSum::zero(n_qubits);
    s.add_term(bit, below, Complex64::new(0.5, 0.0));
    s.add_term(bit, below | bit, y_coeff);
    s
}

/// Jordan–Wigner image of the ordered product `ops[0] · ops[1] · …`.
pub fn jordan_wigner(n_qubits: usize, ops: &[Ladder]) -> Result<PauliSum> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::MatrixTooLarge {
            n_qubits,
            cap: MAX_QUBITS,
        });
    }
    let mut acc = PauliSum::identity(n_qubits, 1.0);
    for &op in ops {
        if op.index() >= n_qubits {
            return Err(Error::IndexOutOfRange {
                index: op.index(),
                n_qubits,
            });
        }
        acc = acc.multiply(&ladder_sum(n_qubits, op))?.simplify();
    }
    Ok(acc)
}

/// Qubit (parity-free) ladder operators `Q = (X + iY)/2`, `Q† = (X − iY)/2`.
pub(crate) fn qubit_ladder_product(n_qubits: usize, ops: &[Ladder]) -> Result<PauliSum> {
    let mut acc = PauliSum::identity(n_qubits, 1.0);
    for &op in ops {
        let p = op.index();
        if p >= n_qubits {
            return Err(Error::IndexOutOfRange { index: p, n_qubits });
        }
        let bit: Mask = 1 << p;
        let mut q = PauliSum::zero(n_qubits);
        q.add_term(bit, 0, Complex64::new(0.5, 0.0));
        let y = match op {
            Ladder::Create(_) => Complex64::new(0.0, -0.5),
            Ladder::Annihilate(_) => Complex64::new(0.0, 0.5),
        };
        q.add_term(bit, bit, y);
        acc = acc.multiply(&q)?.simplify();
    }
    Ok(acc)
}
