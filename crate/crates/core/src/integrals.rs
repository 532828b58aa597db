//! FCIDUMP ingestion, spin-orbital expansion and the qubit Hamiltonian.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pauli::{jordan_wigner, Ladder, PauliSum};

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const DUPLICATE_TOLERANCE: f64 = 1e-10;

/// Spatial-orbital integrals in chemists' notation.
#[derive(Clone, Debug, PartialEq)]
pub struct MolecularIntegrals {
    pub n_orb: usize,
    pub n_elec: usize,
    pub ms2: i64,
    pub e_core: f64,
    h1: Vec<f64>,
    eri: Vec<f64>,
    /// Parsed from ORBSYM and otherwise ignored.
    pub orbsym: Vec<i64>,
}

impl MolecularIntegrals {
    pub fn zeros(n_orb: usize, n_elec: usize, ms2: i64) -> Self {
        MolecularIntegrals {
            n_orb,
            n_elec,
            ms2,
            e_core: 0.0,
            h1: vec![0.0; n_orb * n_orb],
            eri: vec![0.0; n_orb.pow(4)],
            orbsym: Vec::new(),
        }
    }

    pub fn h1(&self, i: usize, j: usize) -> f64 {
        self.h1[i * self.n_orb + j]
    }

    /// `(ij|kl)`, zero-based.
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n_orb;
        self.eri[((i * n + j) * n + k) * n + l]
    }

    /// Sets `h1[i][j]` and `h1[j][i]`.
    pub fn set_h1(&mut self, i: usize, j: usize, value: f64) {
        let n = self.n_orb;
        self.h1[i * n + j] = value;
        self.h1[j * n + i] = value;
    }

    /// Sets `(ij|kl)` and its seven symmetry images.
    pub fn set_eri(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let n = self.n_orb;
        for (a, b, c, d) in eri_images(i, j, k, l) {
            self.eri[((a * n + b) * n + c) * n + d] = value;
        }
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_orb;
        if self.n_elec == 0 || self.n_elec > 2 * n {
            return Err(Error::InvalidIntegrals(format!(
                "{} electrons in {} orbitals",
                self.n_elec, n
            )));
        }
        if self.ms2.unsigned_abs() as usize > self.n_elec {
            return Err(Error::InvalidIntegrals(format!(
                "MS2={} exceeds electron count {}",
                self.ms2, self.n_elec
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if (self.h1(i, j) - self.h1(j, i)).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidIntegrals(format!(
                        "h1 not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.eri(i, j, k, l);
                        for (a, b, c, d) in eri_images(i, j, k, l) {
                            if (self.eri(a, b, c, d) - v).abs() > SYMMETRY_TOLERANCE {
                                return Err(Error::InvalidIntegrals(format!(
                                    "eri lacks 8-fold symmetry at ({i}{j}|{k}{l})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn eri_images(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ]
}

fn canonical_eri(i: usize, j: usize, k: usize, l: usize) -> (usize, usize, usize, usize) {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    let (k, l) = if k >= l { (k, l) } else { (l, k) };
    if (i, j) >= (k, l) {
        (i, j, k, l)
    } else {
        (k, l, i, j)
    }
}

fn parse_value(token: &str) -> Option<f64> {
    token.replace(['D', 'd'], "E").parse().ok()
}

fn parse_header(header: &str) -> Result<HashMap<String, Vec<String>>> {
    let mut fields: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    for token in header
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
    {
        if let Some((key, value)) = token.split_once('=') {
            let key = key.trim().to_ascii_uppercase();
            let entry = fields.entry(key.clone()).or_default();
            if !value.is_empty() {
                entry.push(value.to_string());
            }
            current = Some(key);
        } else if let Some(key) = &current {
            // ORBSYM and friends continue as bare comma-separated values.
            fields
                .entry(key.clone())
                .or_default()
                .push(token.to_string());
        }
    }
    Ok(fields)
}

fn header_int(fields: &HashMap<String, Vec<String>>, key: &str) -> Result<Option<i64>> {
    match fields.get(key).and_then(|v| v.first()) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Format(format!("{key}={v} is not an integer"))),
    }
}

/// Parses an FCIDUMP document.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let upper = text.to_ascii_uppercase();
    let start = upper
        .find("&FCI")
        .ok_or_else(|| Error::Format("missing &FCI namelist".into()))?;
    let rest = &upper[start + 4..];
    let (end_rel, end_len) = match (rest.find("&END"), rest.find('/')) {
        (Some(a), Some(b)) if b < a => (b, 1),
        (Some(a), _) => (a, 4),
        (None, Some(b)) => (b, 1),
        (None, None) => return Err(Error::Format("unterminated namelist header".into())),
    };
    let header = &rest[..end_rel];
    let body = &text[start + 4 + end_rel + end_len..];
    let header_lines = text[..start + 4 + end_rel + end_len].lines().count();

    let fields = parse_header(header)?;
    let n_orb = header_int(&fields, "NORB")?.ok_or_else(|| Error::Format("missing NORB".into()))?;
    let n_elec =
        header_int(&fields, "NELEC")?.ok_or_else(|| Error::Format("missing NELEC".into()))?;
    let ms2 = header_int(&fields, "MS2")?.unwrap_or(0);
    if n_orb <= 0 || n_elec < 0 {
        return Err(Error::Format(format!("NORB={n_orb}, NELEC={n_elec}")));
    }
    let n = n_orb as usize;
    let mut mi = MolecularIntegrals::zeros(n, n_elec as usize, ms2);
    if let Some(sym) = fields.get("ORBSYM") {
        mi.orbsym = sym.iter().filter_map(|s| s.parse().ok()).collect();
    }

    let mut seen_eri: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let mut seen_h1: HashMap<(usize, usize), f64> = HashMap::new();
    let mut seen_core: Option<f64> = None;

    for (offset, line) in body.lines().enumerate() {
        let line_no = header_lines + offset;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(Error::Format(format!(
                "line {line_no}: expected 'value i j k l', got {line:?}"
            )));
        }
        let value = parse_value(tokens[0])
            .ok_or_else(|| Error::Format(format!("line {line_no}: bad value {:?}", tokens[0])))?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&tokens[1..]) {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("line {line_no}: bad index {tok:?}")))?;
            if v < 0 || v > n_orb {
                return Err(Error::Index {
                    line: line_no,
                    index: v,
                    norb: n,
                });
            }
            *slot = v as usize;
        }
        let [i, j, k, l] = idx;
        let conflict = |first: f64| Error::Consistency {
            line: line_no,
            i,
            j,
            k,
            l,
            first,
            second: value,
        };
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if let Some(old) = seen_core {
                    if (old - value).abs() > DUPLICATE_TOLERANCE {
                        return Err(conflict(old));
                    }
                }
                seen_core = Some(value);
                mi.e_core = value;
            }
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let key = if i >= j { (i, j) } else { (j, i) };
                if let Some(&old) = seen_h1.get(&key) {
                    if (old - value).abs() > DUPLICATE_TOLERANCE {
                        return Err(conflict(old));
                    }
                }
                seen_h1.insert(key, value);
                mi.set_h1(i - 1, j - 1, value);
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let key = canonical_eri(i, j, k, l);
                if let Some(&old) = seen_eri.get(&key) {
                    if (old - value).abs() > DUPLICATE_TOLERANCE {
                        return Err(conflict(old));
                    }
                }
                seen_eri.insert(key, value);
                mi.set_eri(i - 1, j - 1, k - 1, l - 1, value);
            }
            // Orbital energies ("e i 0 0 0") carry no Hamiltonian information.
            (_, 0, 0, 0) => {}
            _ => {
                return Err(Error::Format(format!(
                    "line {line_no}: unsupported index pattern {i} {j} {k} {l}"
                )))
            }
        }
    }
    Ok(mi)
}

/// Formats like C's `%.16E`.
fn c_exp(value: f64) -> String {
    let s = format!("{value:.16E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

/// Serializes in the same dialect, one line per 8-fold-reduced integral.
pub fn write_fcidump(mi: &MolecularIntegrals) -> String {
    let n = mi.n_orb;
    let mut out = String::new();
    let orbsym: Vec<String> = if mi.orbsym.len() == n {
        mi.orbsym.iter().map(|s| s.to_string()).collect()
    } else {
        vec!["1".to_string(); n]
    };
    let _ = writeln!(
        out,
        " &FCI NORB={n},NELEC={},MS2={},\n  ORBSYM={},\n  ISYM=1,\n &END",
        mi.n_elec,
        mi.ms2,
        orbsym.join(",")
    );
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if (i, j) < (k, l) {
                        continue;
                    }
                    let v = mi.eri(i, j, k, l);
                    if v != 0.0 {
                        let _ =
                            writeln!(out, "{} {} {} {} {}", c_exp(v), i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = mi.h1(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {} 0 0", c_exp(v), i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{} 0 0 0 0", c_exp(mi.e_core));
    out
}

/// Layout of spin orbitals on qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpinOrdering {
    /// `2i` is orbital `i` spin-up, `2i + 1` spin-down.
    #[default]
    Interleaved,
    /// All spin-up orbitals first, then all spin-down.
    Blocked,
}

impl SpinOrdering {
    pub fn spatial(self, p: usize, n_orb: usize) -> usize {
        match self {
            SpinOrdering::Interleaved => p / 2,
            SpinOrdering::Blocked => p % n_orb,
        }
    }

    /// 0 for spin-up, 1 for spin-down.
    pub fn spin(self, p: usize, n_orb: usize) -> usize {
        match self {
            SpinOrdering::Interleaved => p % 2,
            SpinOrdering::Blocked => p / n_orb,
        }
    }
}

/// `H = e_core + Σ h_pq a†_p a_q + ½ Σ g_pqrs a†_p a†_q a_r a_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOrbitalHamiltonian {
    pub n_so: usize,
    pub e_core: f64,
    pub ordering: SpinOrdering,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl SpinOrbitalHamiltonian {
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.n_so + q]
    }

    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_so;
        self.g[((p * n + q) * n + r) * n + s]
    }

    pub fn spin(&self, p: usize) -> usize {
        self.ordering.spin(p, self.n_so / 2)
    }
}

/// Interleaved spin-orbital expansion.
pub fn expand_spin_orbitals(mi: &MolecularIntegrals) -> SpinOrbitalHamiltonian {
    expand_spin_orbitals_with(mi, SpinOrdering::Interleaved)
}

pub fn expand_spin_orbitals_with(
    mi: &MolecularIntegrals,
    ordering: SpinOrdering,
) -> SpinOrbitalHamiltonian {
    let n_orb = mi.n_orb;
    let n = 2 * n_orb;
    let sp = |p: usize| ordering.spatial(p, n_orb);
    let spin = |p: usize| ordering.spin(p, n_orb);
    let mut h = vec![0.0; n * n];
    let mut g = vec![0.0; n.pow(4)];
    for p in 0..n {
        for q in 0..n {
            if spin(p) == spin(q) {
                h[p * n + q] = mi.h1(sp(p), sp(q));
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                if spin(q) != spin(r) {
                    continue;
                }
                for s in 0..n {
                    if spin(p) == spin(s) {
                        g[((p * n + q) * n + r) * n + s] = mi.eri(sp(p), sp(s), sp(q), sp(r));
                    }
                }
            }
        }
    }
    SpinOrbitalHamiltonian {
        n_so: n,
        e_core: mi.e_core,
        ordering,
        h,
        g,
    }
}

/// Aufbau occupation under the interleaved ordering.
pub fn hf_state_occupation(n_so: usize, n_elec: usize, ms2: i64) -> Result<u64> {
    let infeasible = || {
        Error::Occupation(format!(
            "{n_elec} electrons with MS2={ms2} in {n_so} spin orbitals"
        ))
    };
    if !n_so.is_multiple_of(2) || n_so > 64 || n_elec > n_so {
        return Err(infeasible());
    }
    let ne = n_elec as i64;
    if ms2.abs() > ne || (ne + ms2) % 2 != 0 {
        return Err(infeasible());
    }
    let n_up = ((ne + ms2) / 2) as usize;
    let n_down = ((ne - ms2) / 2) as usize;
    if n_up > n_so / 2 || n_down > n_so / 2 {
        return Err(infeasible());
    }
    let mut occ = 0u64;
    for i in 0..n_up {
        occ |= 1 << (2 * i);
    }
    for i in 0..n_down {
        occ |= 1 << (2 * i + 1);
    }
    Ok(occ)
}

pub(crate) fn occupied_list(occ: u64) -> Vec<usize> {
    (0..64).filter(|&p| occ >> p & 1 == 1).collect()
}

/// Energy of a single determinant.
pub fn hf_energy(soh: &SpinOrbitalHamiltonian, occ: u64) -> f64 {
    let orbs = occupied_list(occ);
    let mut e = soh.e_core;
    for &p in &orbs {
        e += soh.h(p, p);
    }
    let mut two = 0.0;
    for &p in &orbs {
        for &q in &orbs {
            two += soh.g(p, q, q, p) - soh.g(p, q, p, q);
        }
    }
    e + 0.5 * two
}

/// Jordan–Wigner image of the full Hamiltonian, simplified to real coefficients.
pub fn to_pauli_hamiltonian(soh: &SpinOrbitalHamiltonian) -> Result<PauliSum> {
    let n = soh.n_so;
    let mut acc = PauliSum::identity(n, soh.e_core);
    for p in 0..n {
        for q in 0..n {
            let c = soh.h(p, q);
            if c != 0.0 {
                let t = jordan_wigner(n, &[Ladder::Create(p), Ladder::Annihilate(q)])?;
                acc.add_assign(&t.scale(c.into()));
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            for r in 0..n {
                for s in 0..n {
                    if r == s {
                        continue;
                    }
                    let c = soh.g(p, q, r, s);
                    if c != 0.0 {
                        let t = jordan_wigner(
                            n,
                            &[
                                Ladder::Create(p),
                                Ladder::Create(q),
                                Ladder::Annihilate(r),
                                Ladder::Annihilate(s),
                            ],
                        )?;
                        acc.add_assign(&t.scale((0.5 * c).into()));
                    }
                }
            }
        }
    }
    let acc = acc.simplify();
    let imag = acc.max_imaginary();
    if imag > 1e-10 {
        return Err(Error::NotHermitian(imag));
    }
    let mut real = PauliSum::zero(n);
    for (x, z, c) in acc.terms() {
        real.add_term(x, z, c.re.into());
    }
    Ok(real.simplify())
}
