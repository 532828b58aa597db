//! Operator pools: fermionic and qubit excitations, OVP-CEO pairs.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::occupied_list;
use crate::pauli::{jordan_wigner, qubit_ladder_product, Ladder, PauliString, PauliSum, Phase};
use crate::simulator::PauliOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    FermionicSingle,
    FermionicDouble,
    FermionicTriple,
    QubitSingle,
    QubitDouble,
    OvpCeoPlus,
    OvpCeoMinus,
}

impl GeneratorKind {
    pub fn code(self) -> &'static str {
        match self {
            GeneratorKind::FermionicSingle => "s",
            GeneratorKind::FermionicDouble => "d",
            GeneratorKind::FermionicTriple => "t",
            GeneratorKind::QubitSingle => "qs",
            GeneratorKind::QubitDouble => "qd",
            GeneratorKind::OvpCeoPlus => "ceo+",
            GeneratorKind::OvpCeoMinus => "ceo-",
        }
    }

    /// Excitation rank: 1, 2 or 3.
    pub fn rank(self) -> usize {
        match self {
            GeneratorKind::FermionicSingle | GeneratorKind::QubitSingle => 1,
            GeneratorKind::FermionicTriple => 3,
            _ => 2,
        }
    }

    pub fn is_fermionic(self) -> bool {
        matches!(
            self,
            GeneratorKind::FermionicSingle
                | GeneratorKind::FermionicDouble
                | GeneratorKind::FermionicTriple
        )
    }
}

/// One pool element: a Hermitian `G` with `G³ = G`.
#[derive(Clone, Debug)]
pub struct Generator {
    kind: GeneratorKind,
    orbitals: Vec<usize>,
    pauli: PauliSum,
    op: PauliOperator,
    cnot_count: u32,
    depth: u32,
}

impl PartialEq for Generator {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.orbitals == other.orbitals && self.pauli == other.pauli
    }
}

fn check_indices(n_qubits: usize, idx: &[usize]) -> Result<()> {
    for (k, &p) in idx.iter().enumerate() {
        if p >= n_qubits {
            return Err(Error::Excitation(format!(
                "orbital {p} outside {n_qubits} qubits"
            )));
        }
        if idx[..k].contains(&p) {
            return Err(Error::Excitation(format!(
                "repeated orbital {p} in {idx:?}"
            )));
        }
    }
    Ok(())
}

/// `i(T − T†)` with `T = c†_{v0} c†_{v1}… c_{o_last}… c_{o0}`.
fn excitation_sum(
    n_qubits: usize,
    occ: &[usize],
    virt: &[usize],
    fermionic: bool,
) -> Result<PauliSum> {
    let mut ops: Vec<Ladder> = virt.iter().map(|&v| Ladder::Create(v)).collect();
    ops.extend(occ.iter().rev().map(|&o| Ladder::Annihilate(o)));
    let t = if fermionic {
        jordan_wigner(n_qubits, &ops)?
    } else {
        qubit_ladder_product(n_qubits, &ops)?
    };
    let it = t.scale(Complex64::new(0.0, 1.0));
    Ok(it.add(&it.adjoint())?.simplify())
}

/// CNOTs of a naive per-string exponential ladder.
fn gadget_cost(sum: &PauliSum) -> u32 {
    sum.terms()
        .map(|(x, z, _)| 2 * ((x | z).count_ones().saturating_sub(1)))
        .sum()
}

impl Generator {
    fn build(
        kind: GeneratorKind,
        orbitals: Vec<usize>,
        pauli: PauliSum,
        cnot_count: u32,
        depth: u32,
    ) -> Self {
        let op = PauliOperator::new(&pauli);
        Generator {
            kind,
            orbitals,
            pauli,
            op,
            cnot_count,
            depth,
        }
    }

    fn fermionic(
        kind: GeneratorKind,
        n_qubits: usize,
        occ: &[usize],
        virt: &[usize],
    ) -> Result<Self> {
        let mut orbitals = occ.to_vec();
        orbitals.extend_from_slice(virt);
        check_indices(n_qubits, &orbitals)?;
        let pauli = excitation_sum(n_qubits, occ, virt, true)?;
        let cost = gadget_cost(&pauli);
        Ok(Generator::build(kind, orbitals, pauli, cost, cost))
    }

    /// `i(a†_r a_p − h.c.)`.
    pub fn fermionic_single(n_qubits: usize, p: usize, r: usize) -> Result<Self> {
        Generator::fermionic(GeneratorKind::FermionicSingle, n_qubits, &[p], &[r])
    }

    /// `i(a†_r a†_s a_q a_p − h.c.)`.
    pub fn fermionic_double(
        n_qubits: usize,
        p: usize,
        q: usize,
        r: usize,
        s: usize,
    ) -> Result<Self> {
        Generator::fermionic(GeneratorKind::FermionicDouble, n_qubits, &[p, q], &[r, s])
    }

    /// `i(a†_a a†_b a†_c a_k a_j a_i − h.c.)`.
    pub fn fermionic_triple(n_qubits: usize, occ: [usize; 3], virt: [usize; 3]) -> Result<Self> {
        Generator::fermionic(GeneratorKind::FermionicTriple, n_qubits, &occ, &virt)
    }

    /// `i(Q†_r Q_p − h.c.)`.
    pub fn qubit_single(n_qubits: usize, p: usize, r: usize) -> Result<Self> {
        check_indices(n_qubits, &[p, r])?;
        let pauli = excitation_sum(n_qubits, &[p], &[r], false)?;
        Ok(Generator::build(
            GeneratorKind::QubitSingle,
            vec![p, r],
            pauli,
            2,
            2,
        ))
    }

    /// `i(Q†_r Q†_s Q_p Q_q − h.c.)`.
    pub fn qe_double(n_qubits: usize, p: usize, q: usize, r: usize, s: usize) -> Result<Self> {
        check_indices(n_qubits, &[p, q, r, s])?;
        let pauli = excitation_sum(n_qubits, &[p, q], &[r, s], false)?;
        Ok(Generator::build(
            GeneratorKind::QubitDouble,
            vec![p, q, r, s],
            pauli,
            13,
            11,
        ))
    }

    /// OVP-CEO± for the double `(p, q → r, s)`.
    ///
    /// With `α1 = p`, `β1 = q`, `α2` the virtual sharing the spin of `p` and
    /// `β2` the other, `G± = QE(α1β1→α2β2) ± QE(α2β1→α1β2)`.
    pub fn ovp_ceo(
        n_qubits: usize,
        p: usize,
        q: usize,
        r: usize,
        s: usize,
        plus: bool,
    ) -> Result<Self> {
        check_indices(n_qubits, &[p, q, r, s])?;
        let (a2, b2) = if (r + p).is_multiple_of(2) || (s + p) % 2 == 1 {
            (r, s)
        } else {
            (s, r)
        };
        let first = excitation_sum(n_qubits, &[p, q], &[a2, b2], false)?;
        let second = excitation_sum(n_qubits, &[a2, q], &[p, b2], false)?;
        let sign = if plus { 1.0 } else { -1.0 };
        let pauli = first.add(&second.scale(sign.into()))?.simplify();
        let kind = if plus {
            GeneratorKind::OvpCeoPlus
        } else {
            GeneratorKind::OvpCeoMinus
        };
        Ok(Generator::build(kind, vec![p, q, r, s], pauli, 9, 7))
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Occupied indices followed by virtual indices.
    pub fn orbitals(&self) -> &[usize] {
        &self.orbitals
    }

    pub fn occupied(&self) -> &[usize] {
        &self.orbitals[..self.orbitals.len() / 2]
    }

    pub fn virtuals(&self) -> &[usize] {
        &self.orbitals[self.orbitals.len() / 2..]
    }

    pub fn pauli(&self) -> &PauliSum {
        &self.pauli
    }

    pub fn operator(&self) -> &PauliOperator {
        &self.op
    }

    pub fn n_qubits(&self) -> usize {
        self.pauli.n_qubits()
    }

    pub fn cnot_count(&self) -> u32 {
        self.cnot_count
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Stable text id, e.g. `d(0,1->2,3)`.
    pub fn label(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "{}({}->{})",
            self.kind.code(),
            join(self.occupied()),
            join(self.virtuals())
        )
    }

    /// `G|i⟩` for a basis index.
    pub fn apply_to_index(&self, index: usize) -> Vec<(usize, Complex64)> {
        self.pauli.apply_to_index(index)
    }

    pub fn record(&self) -> GeneratorRecord {
        GeneratorRecord {
            id: self.label(),
            kind: self.kind,
            orbitals: self.orbitals.clone(),
            cnot_count: self.cnot_count,
            depth: self.depth,
            terms: self
                .pauli
                .terms()
                .map(|(x, z, c)| {
                    let p = PauliString {
                        n_qubits: self.n_qubits(),
                        x,
                        z,
                        phase: Phase::ONE,
                    };
                    PauliTermRecord {
                        pauli: p.label(),
                        re: c.re,
                        im: c.im,
                    }
                })
                .collect(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PauliTermRecord {
    /// Qubit 0 first.
    pub pauli: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub id: String,
    pub kind: GeneratorKind,
    pub orbitals: Vec<usize>,
    pub cnot_count: u32,
    pub depth: u32,
    pub terms: Vec<PauliTermRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OvpVariant {
    PlusOnly,
    PlusAndMinus,
}

#[derive(Clone, Debug)]
pub struct Pool {
    pub generators: Vec<Generator>,
    pub n_qubits: usize,
    pub reference: u64,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Generator> {
        self.generators.iter()
    }

    pub fn filter(&self, keep: impl Fn(&Generator) -> bool) -> Pool {
        Pool {
            generators: self
                .generators
                .iter()
                .filter(|g| keep(g))
                .cloned()
                .collect(),
            n_qubits: self.n_qubits,
            reference: self.reference,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let records: Vec<GeneratorRecord> = self.generators.iter().map(Generator::record).collect();
        serde_json::to_string_pretty(&records).map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn split_reference(n_so: usize, occ: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_so > 64 || (n_so < 64 && occ >> n_so != 0) {
        return Err(Error::Occupation(format!(
            "occupation {occ:#b} exceeds {n_so} orbitals"
        )));
    }
    let occupied = occupied_list(occ);
    let virtuals = (0..n_so).filter(|p| occ >> p & 1 == 0).collect();
    Ok((occupied, virtuals))
}

fn spin(p: usize) -> usize {
    p % 2
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// S_z-preserving `(occupied, virtual)` index tuples of the given rank, lexicographic.
pub fn excitation_tuples(
    n_so: usize,
    occ: u64,
    rank: usize,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let (occupied, virtuals) = split_reference(n_so, occ)?;
    let mut out = Vec::new();
    for o in combinations(&occupied, rank) {
        let up: usize = o.iter().map(|&p| spin(p)).sum();
        for v in combinations(&virtuals, rank) {
            if v.iter().map(|&p| spin(p)).sum::<usize>() == up {
                out.push((o.clone(), v));
            }
        }
    }
    Ok(out)
}

fn doubles(n_so: usize, occ: u64) -> Result<Vec<[usize; 4]>> {
    Ok(excitation_tuples(n_so, occ, 2)?
        .into_iter()
        .map(|(o, v)| [o[0], o[1], v[0], v[1]])
        .collect())
}

fn singles(n_so: usize, occ: u64) -> Result<Vec<[usize; 2]>> {
    Ok(excitation_tuples(n_so, occ, 1)?
        .into_iter()
        .map(|(o, v)| [o[0], v[0]])
        .collect())
}

/// Fermionic doubles then singles, each in lexicographic order.
pub fn build_uccsd_pool(n_so: usize, occ: u64) -> Result<Pool> {
    let mut generators = Vec::new();
    for [p, q, r, s] in doubles(n_so, occ)? {
        generators.push(Generator::fermionic_double(n_so, p, q, r, s)?);
    }
    for [p, r] in singles(n_so, occ)? {
        generators.push(Generator::fermionic_single(n_so, p, r)?);
    }
    Ok(Pool {
        generators,
        n_qubits: n_so,
        reference: occ,
    })
}

/// Qubit-excitation doubles then qubit singles.
pub fn build_qe_pool(n_so: usize, occ: u64) -> Result<Pool> {
    let mut generators = Vec::new();
    for [p, q, r, s] in doubles(n_so, occ)? {
        generators.push(Generator::qe_double(n_so, p, q, r, s)?);
    }
    for [p, r] in singles(n_so, occ)? {
        generators.push(Generator::qubit_single(n_so, p, r)?);
    }
    Ok(Pool {
        generators,
        n_qubits: n_so,
        reference: occ,
    })
}

/// OVP-CEO generators per double quadruple (plus before minus), then qubit singles.
pub fn build_ovp_ceo_pool(n_so: usize, occ: u64, variant: OvpVariant) -> Result<Pool> {
    let mut generators = Vec::new();
    for [p, q, r, s] in doubles(n_so, occ)? {
        generators.push(Generator::ovp_ceo(n_so, p, q, r, s, true)?);
        if variant == OvpVariant::PlusAndMinus {
            generators.push(Generator::ovp_ceo(n_so, p, q, r, s, false)?);
        }
    }
    for [p, r] in singles(n_so, occ)? {
        generators.push(Generator::qubit_single(n_so, p, r)?);
    }
    Ok(Pool {
        generators,
        n_qubits: n_so,
        reference: occ,
    })
}

/// Appends all S_z-preserving fermionic triples.
pub fn extend_with_triples(pool: &Pool) -> Result<Pool> {
    let mut out = pool.clone();
    for (o, v) in excitation_tuples(pool.n_qubits, pool.reference, 3)? {
        out.generators.push(Generator::fermionic_triple(
            pool.n_qubits,
            [o[0], o[1], o[2]],
            [v[0], v[1], v[2]],
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use crate::simulator::tests::{c, dense_exp, random_state};
    use crate::simulator::{prepare_basis_state, StateVector};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_g_cubed(g: &Generator) {
        let m = g.pauli().matrix_of().unwrap();
        let err = (&m * &m * &m - &m).norm();
        assert!(err < 1e-12, "{}: |G³ − G| = {err}", g.label());
    }

    fn sz_matrix(n: usize) -> DMatrix<Complex64> {
        let mut s = PauliSum::zero(n);
        for p in 0..n {
            let sign = if p % 2 == 0 { 0.5 } else { -0.5 };
            let z = PauliString::from_factors(n, &[(p, Pauli::Z)]).unwrap();
            s.add_string(&z, c(sign * 0.5, 0.0));
        }
        s.matrix_of().unwrap()
    }

    fn all_pools(n_so: usize, occ: u64) -> Vec<Pool> {
        vec![
            extend_with_triples(&build_uccsd_pool(n_so, occ).unwrap()).unwrap(),
            build_qe_pool(n_so, occ).unwrap(),
            build_ovp_ceo_pool(n_so, occ, OvpVariant::PlusAndMinus).unwrap(),
        ]
    }

    #[test]
    fn every_generator_is_hermitian_traceless_g_cubed_and_sz_preserving() {
        for (n, occ) in [(4, 0b11), (6, 0b11), (6, 0b111), (8, 0b1111), (8, 0b111)] {
            let sz = sz_matrix(n);
            for pool in all_pools(n, occ) {
                for g in pool.iter() {
                    assert!(g.pauli().is_hermitian(0.0), "{}", g.label());
                    assert!(g.pauli().trace_coefficient().norm() < 1e-15);
                    assert_g_cubed(g);
                    let m = g.pauli().matrix_of().unwrap();
                    assert!(
                        (&m * &sz - &sz * &m).norm() < 1e-12,
                        "{} breaks S_z",
                        g.label()
                    );
                }
            }
        }
    }

    #[test]
    fn g_cubed_spot_check_on_twelve_qubits() {
        let pool = extend_with_triples(&build_uccsd_pool(12, 0b1111).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..6 {
            let g = &pool.generators[rng.gen_range(0..pool.len())];
            let psi = random_state(12, &mut rng);
            let g1 = psi.apply_pauli_sum(g.operator()).unwrap();
            let s1 = StateVector::from_amplitudes(12, g1.clone()).unwrap();
            let g2 = s1.apply_pauli_sum(g.operator()).unwrap();
            let s2 = StateVector::from_amplitudes(12, g2).unwrap();
            let g3 = s2.apply_pauli_sum(g.operator()).unwrap();
            let diff: f64 = g3.iter().zip(&g1).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(diff.sqrt() < 1e-12, "{}", g.label());
        }
    }

    /// Oracle: brute force over all index tuples.
    fn brute_force_counts(n: usize, occ: u64) -> (usize, usize, usize) {
        let is_occ = |p: usize| occ >> p & 1 == 1;
        let (mut s, mut d, mut t) = (0, 0, 0);
        for p in 0..n {
            for r in 0..n {
                if is_occ(p) && !is_occ(r) && p % 2 == r % 2 {
                    s += 1;
                }
            }
        }
        for p in 0..n {
            for q in p + 1..n {
                for r in 0..n {
                    for u in r + 1..n {
                        if is_occ(p)
                            && is_occ(q)
                            && !is_occ(r)
                            && !is_occ(u)
                            && p % 2 + q % 2 == r % 2 + u % 2
                        {
                            d += 1;
                        }
                    }
                }
            }
        }
        for mask_o in 0u64..1 << n {
            for mask_v in 0u64..1 << n {
                if mask_o.count_ones() != 3 || mask_v.count_ones() != 3 {
                    continue;
                }
                if mask_o & !occ != 0 || mask_v & occ != 0 {
                    continue;
                }
                let up = |m: u64| (0..n).filter(|&p| m >> p & 1 == 1 && p % 2 == 0).count();
                if up(mask_o) == up(mask_v) {
                    t += 1;
                }
            }
        }
        (s, d, t)
    }

    #[test]
    fn pool_sizes_match_brute_force() {
        for (n, occ) in [
            (4, 0b11),
            (6, 0b11),
            (8, 0b1111),
            (8, 0b111),
            (10, 0b1111),
            (12, 0b1111),
        ] {
            let (s, d, t) = brute_force_counts(n, occ);
            assert_eq!(build_uccsd_pool(n, occ).unwrap().len(), s + d, "n={n}");
            let full = extend_with_triples(&build_uccsd_pool(n, occ).unwrap()).unwrap();
            assert_eq!(full.len(), s + d + t);
            let ceo = build_ovp_ceo_pool(n, occ, OvpVariant::PlusAndMinus).unwrap();
            assert_eq!(ceo.len(), 2 * d + s);
        }
    }

    #[test]
    fn doubles_count_follows_closed_form_up_to_sixteen_orbitals() {
        let choose2 = |k: usize| k * k.saturating_sub(1) / 2;
        for n in (4..=16).step_by(2) {
            for ne in (2..n).step_by(2) {
                let occ = (1u64 << ne) - 1;
                let (ou, vu) = (ne / 2, (n - ne) / 2);
                let expected = 2 * choose2(ou) * choose2(vu) + ou * ou * vu * vu;
                let got = excitation_tuples(n, occ, 2).unwrap().len();
                assert_eq!(got, expected, "n={n} ne={ne}");
            }
        }
    }

    #[test]
    fn known_pool_sizes() {
        let h2 = build_uccsd_pool(4, 0b11).unwrap();
        assert_eq!(h2.len(), 3);
        assert_eq!(h2.generators[0].kind(), GeneratorKind::FermionicDouble);
        assert_eq!(extend_with_triples(&h2).unwrap().len(), 3);
        let lih = build_uccsd_pool(12, 0b1111).unwrap();
        assert_eq!(lih.len(), 92);
        assert_eq!(extend_with_triples(&lih).unwrap().len(), 92 + 96);
        assert!(build_uccsd_pool(4, 0b1111).unwrap().is_empty());
    }

    #[test]
    fn pool_order_is_deterministic_and_duplicate_free() {
        let a = extend_with_triples(&build_uccsd_pool(10, 0b111111).unwrap()).unwrap();
        let b = extend_with_triples(&build_uccsd_pool(10, 0b111111).unwrap()).unwrap();
        let la: Vec<String> = a.iter().map(Generator::label).collect();
        let lb: Vec<String> = b.iter().map(Generator::label).collect();
        assert_eq!(la, lb);
        let mut sorted = la.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), la.len());
    }

    fn four_qubit_sum(terms: &[(f64, &str)]) -> PauliSum {
        let mut s = PauliSum::from_labels(terms).unwrap();
        s = s.scale(c(0.25, 0.0));
        s
    }

    #[test]
    fn pool_generator_matches_published_plus_form() {
        // p = α1 = 0, q = β1 = 2, α2 = 1, β2 = 3; strings are in qubit order (α1, α2, β1, β2).
        let g = Generator::ovp_ceo(4, 0, 2, 1, 3, true).unwrap();
        let expected =
            four_qubit_sum(&[(1.0, "XXXY"), (-1.0, "XXYX"), (1.0, "YYXY"), (-1.0, "YYYX")]);
        assert!(g.pauli().distance(&expected) < 1e-15, "{}", g.pauli());
        let minus = Generator::ovp_ceo(4, 0, 2, 1, 3, false).unwrap();
        assert!(minus.pauli().distance(&qe_pair(0, 2, 1, 3, -1.0)) < 1e-15);
    }

    #[test]
    fn published_minus_form_breaks_particle_number() {
        // Read literally, the four-term minus form maps |0000⟩ to |1111⟩.
        let literal =
            four_qubit_sum(&[(1.0, "XYXX"), (-1.0, "XYYY"), (1.0, "YXXX"), (-1.0, "YXYY")]);
        let image = literal.apply_to_index(0);
        assert!(image.iter().any(|&(j, a)| j == 0b1111 && a.norm() > 1e-12));
        let built = Generator::ovp_ceo(4, 0, 2, 1, 3, false).unwrap();
        assert!(built.apply_to_index(0).is_empty());
    }

    #[test]
    fn ovp_ceo_plus_in_alpha_alpha_beta_beta_order() {
        // With α1 = 0, α2 = 1 (same spin is irrelevant for the qubit algebra), β1 = 2, β2 = 3:
        // G⁺ = ¼(XXXY − XXYX + YYXY − YYYX) in qubit order (α1, α2, β1, β2).
        let plus = qe_pair(0, 2, 1, 3, 1.0);
        let expected =
            four_qubit_sum(&[(1.0, "XXXY"), (-1.0, "XXYX"), (1.0, "YYXY"), (-1.0, "YYYX")]);
        assert!(plus.distance(&expected) < 1e-15, "{plus}");
        let minus = qe_pair(0, 2, 1, 3, -1.0);
        let expected =
            four_qubit_sum(&[(1.0, "XYXX"), (-1.0, "YXXX"), (1.0, "XYYY"), (-1.0, "YXYY")]);
        assert!(minus.distance(&expected) < 1e-15, "{minus}");
    }

    /// QE(α1β1→α2β2) + sign·QE(α2β1→α1β2) straight from the definitions.
    fn qe_pair(a1: usize, b1: usize, a2: usize, b2: usize, sign: f64) -> PauliSum {
        let first = excitation_sum(4, &[a1, b1], &[a2, b2], false).unwrap();
        let second = excitation_sum(4, &[a2, b1], &[a1, b2], false).unwrap();
        first.add(&second.scale(sign.into())).unwrap().simplify()
    }

    #[test]
    fn ovp_ceo_pair_sums_to_twice_the_qubit_double() {
        for [p, q, r, s] in doubles(8, 0b1111).unwrap() {
            let plus = Generator::ovp_ceo(8, p, q, r, s, true).unwrap();
            let minus = Generator::ovp_ceo(8, p, q, r, s, false).unwrap();
            let qe = Generator::qe_double(8, p, q, r, s).unwrap();
            let sum = plus.pauli().add(minus.pauli()).unwrap().simplify();
            assert!(sum.distance(&qe.pauli().scale(c(2.0, 0.0))) < 1e-14);
            for (_, _, coeff) in plus.pauli().terms().chain(minus.pauli().terms()) {
                assert!((coeff.norm() - 0.25).abs() < 1e-15);
            }
            assert_eq!((plus.cnot_count(), plus.depth()), (9, 7));
            assert_eq!((qe.cnot_count(), qe.depth()), (13, 11));
        }
    }

    #[test]
    fn ovp_ceo_variants_act_like_the_double_on_hf() {
        let hf = prepare_basis_state(8, 0b1111).unwrap();
        for [p, q, r, s] in doubles(8, 0b1111).unwrap() {
            let qe = hf
                .apply_pauli_sum(Generator::qe_double(8, p, q, r, s).unwrap().operator())
                .unwrap();
            for plus in [true, false] {
                let g = Generator::ovp_ceo(8, p, q, r, s, plus).unwrap();
                let v = hf.apply_pauli_sum(g.operator()).unwrap();
                let same: f64 = v.iter().zip(&qe).map(|(a, b)| (a - b).norm()).sum();
                let flipped: f64 = v.iter().zip(&qe).map(|(a, b)| (a + b).norm()).sum();
                assert!(same.min(flipped) < 1e-14);
            }
        }
    }

    #[test]
    fn qe_double_has_eight_parity_free_terms_and_couples_two_states() {
        let g = Generator::qe_double(4, 0, 1, 2, 3).unwrap();
        assert_eq!(g.pauli().len(), 8);
        for (x, z, coeff) in g.pauli().terms() {
            assert!((coeff.norm() - 0.125).abs() < 1e-15);
            assert_eq!(z & !x, 0, "no Z factors");
        }
        let m = g.pauli().matrix_of().unwrap();
        let nonzero: Vec<(usize, usize)> = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)].norm() > 1e-12)
            .collect();
        assert_eq!(nonzero, vec![(0b0011, 0b1100), (0b1100, 0b0011)]);
        assert!(matches!(
            Generator::qe_double(4, 0, 1, 1, 3),
            Err(Error::Excitation(_))
        ));
    }

    #[test]
    fn qe_and_fermionic_doubles_differ_only_by_parity_phases() {
        // Oracle: matrices agree up to a sign per coupled pair; on 6 qubits with an
        // intervening orbital the sign depends on its occupation.
        let f = Generator::fermionic_double(6, 0, 2, 3, 5)
            .unwrap()
            .pauli()
            .matrix_of()
            .unwrap();
        let q = Generator::qe_double(6, 0, 2, 3, 5)
            .unwrap()
            .pauli()
            .matrix_of()
            .unwrap();
        let mut signs = std::collections::BTreeSet::new();
        for i in 0..64 {
            for j in 0..64 {
                assert_eq!(f[(i, j)].norm() > 1e-12, q[(i, j)].norm() > 1e-12);
                if f[(i, j)].norm() > 1e-12 {
                    let ratio = f[(i, j)] / q[(i, j)];
                    assert!((ratio.norm() - 1.0).abs() < 1e-12);
                    assert!(ratio.im.abs() < 1e-12);
                    signs.insert(ratio.re > 0.0);
                }
            }
        }
        assert_eq!(signs.len(), 2);
    }

    #[test]
    fn double_excitation_rotates_hf_into_doubly_excited_state() {
        let g = Generator::fermionic_double(4, 0, 1, 2, 3).unwrap();
        let m = g.pauli().matrix_of().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let theta = rng.gen_range(-3.0..3.0);
            let mut s = prepare_basis_state(4, 0b0011).unwrap();
            let dense = dense_exp(&m, theta) * DVector::from_column_slice(s.amplitudes());
            s.apply_generator_exponential(&g, theta).unwrap();
            let a = s.amplitudes();
            assert!((a[0b0011] - c(theta.cos(), 0.0)).norm() < 1e-12);
            assert!((a[0b1100].norm() - theta.sin().abs()).abs() < 1e-12);
            assert!((DVector::from_column_slice(a) - dense).norm() < 1e-10);
        }
    }

    #[test]
    fn exponential_matches_dense_for_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for pool in all_pools(8, 0b111) {
            for g in pool.iter().step_by(7) {
                let m = g.pauli().matrix_of().unwrap();
                let theta = rng.gen_range(-3.2..3.2);
                let mut s = random_state(8, &mut rng);
                let dense = dense_exp(&m, theta) * DVector::from_column_slice(s.amplitudes());
                s.apply_generator_exponential(g, theta).unwrap();
                assert!(
                    (DVector::from_column_slice(s.amplitudes()) - dense).norm() < 1e-10,
                    "{}",
                    g.label()
                );
            }
        }
    }

    #[test]
    fn unitarity_over_a_thousand_applications() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pool = all_pools(8, 0b1111)
            .into_iter()
            .flat_map(|p| p.generators)
            .collect::<Vec<_>>();
        let mut s = random_state(8, &mut rng);
        for _ in 0..1000 {
            let g = &pool[rng.gen_range(0..pool.len())];
            s.apply_generator_exponential(g, rng.gen_range(-3.2..3.2))
                .unwrap();
        }
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn json_records_list_terms() {
        let pool = build_qe_pool(4, 0b11).unwrap();
        let json = pool.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v.as_array().unwrap().len(), pool.len());
        assert_eq!(v[0]["kind"], "qubit_double");
        assert_eq!(v[0]["cnot_count"], 13);
        assert_eq!(v[0]["terms"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn labels_are_readable() {
        let g = Generator::fermionic_double(4, 0, 1, 2, 3).unwrap();
        assert_eq!(g.label(), "d(0,1->2,3)");
        assert_eq!(g.occupied(), &[0, 1]);
        assert_eq!(g.virtuals(), &[2, 3]);
    }
}
