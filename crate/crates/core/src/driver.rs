//! Batch runs: configuration, artifacts on disk, bondlength scans and scaling reports.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::fci::{ground_energy_seeded, Sector};
use crate::landscape::SweepOptions;
use crate::molecule::Molecule;
use crate::pools::{
    build_ovp_ceo_pool, build_qe_pool, build_uccsd_pool, extend_with_triples, OvpVariant, Pool,
};
use crate::preselect::preselect_pool_doubles;
use crate::selection::{
    build_ansatz_adaptive, build_ansatz_energy_sorting, build_ansatz_fixed,
    build_ansatz_ovp_paired, BuildOptions, BuildOutcome, SelectionRecord, DEFAULT_EPS_A,
};
use crate::trace::{evaluations_to_accuracy, TraceRecord};

/// Error below which a run counts as converged in scaling reports.
pub const CHEMICAL_ACCURACY: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    EnergySorting,
    Adaptive,
    Fixed,
    OvpCeoPlus,
    OvpCeoPaired,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolChoice {
    Uccsd,
    Uccsdt,
    Qe,
    OvpCeo,
}

macro_rules! snake_case_enum {
    ($t:ty, $($v:ident => $s:literal),+ $(,)?) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
        }

        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().replace('-', "_").as_str() {
                    $($s => Ok(Self::$v),)+
                    other => Err(Error::Config(format!("unknown {} '{other}'", stringify!($t)))),
                }
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

snake_case_enum!(Method,
    EnergySorting => "energy_sorting",
    Adaptive => "adaptive",
    Fixed => "fixed",
    OvpCeoPlus => "ovp_ceo_plus",
    OvpCeoPaired => "ovp_ceo_paired",
);

snake_case_enum!(PoolChoice,
    Uccsd => "uccsd",
    Uccsdt => "uccsdt",
    Qe => "qe",
    OvpCeo => "ovp_ceo",
);

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub fcidump: Option<PathBuf>,
    pub method: Method,
    pub pool: PoolChoice,
    pub eps_a: f64,
    pub eps_conv: f64,
    pub max_sweeps: usize,
    pub max_ops: usize,
    pub screening_rounds: usize,
    /// Seeds the eigensolver start vector.
    pub seed: u64,
    pub output: PathBuf,
    /// Rank first-layer doubles from the integrals.
    pub classical: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let build = BuildOptions::default();
        RunConfig {
            fcidump: None,
            method: Method::EnergySorting,
            pool: PoolChoice::Uccsd,
            eps_a: DEFAULT_EPS_A,
            eps_conv: build.sweep.eps_conv,
            max_sweeps: build.sweep.max_sweeps,
            max_ops: usize::MAX,
            screening_rounds: build.screening_rounds,
            seed: 0x5eed,
            output: PathBuf::from("out"),
            classical: true,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

impl RunConfig {
    /// Flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "fcidump" => self.fcidump = Some(PathBuf::from(value)),
            "method" => self.method = value.parse()?,
            "pool" => self.pool = value.parse()?,
            "eps_a" => self.eps_a = parse_value(key, value)?,
            "eps_conv" => self.eps_conv = parse_value(key, value)?,
            "max_sweeps" => self.max_sweeps = parse_value(key, value)?,
            "max_ops" => self.max_ops = parse_value(key, value)?,
            "screening_rounds" => self.screening_rounds = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "classical" => self.classical = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let ovp_method = matches!(self.method, Method::OvpCeoPlus | Method::OvpCeoPaired);
        if ovp_method && self.pool != PoolChoice::OvpCeo {
            return Err(Error::Config(format!(
                "method {} requires pool ovp_ceo",
                self.method
            )));
        }
        if self.eps_a.is_nan() || self.eps_a < 0.0 || self.eps_conv.is_nan() || self.eps_conv <= 0.0
        {
            return Err(Error::Config(
                "thresholds must be non-negative and eps_conv positive".into(),
            ));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be positive".into()));
        }
        Ok(())
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            eps_a: self.eps_a,
            sweep: SweepOptions {
                eps_conv: self.eps_conv,
                max_sweeps: self.max_sweeps,
            },
            screening_rounds: self.screening_rounds,
            max_ops: self.max_ops,
        }
    }

    fn fcidump(&self) -> Result<&Path> {
        self.fcidump
            .as_deref()
            .ok_or_else(|| Error::Config("no FCIDUMP given".into()))
    }
}

/// The pool a configuration asks for on `molecule`.
pub fn build_pool(config: &RunConfig, molecule: &Molecule) -> Result<Pool> {
    let (n, occ) = (molecule.n_qubits(), molecule.reference);
    match config.pool {
        PoolChoice::Uccsd => build_uccsd_pool(n, occ),
        PoolChoice::Uccsdt => extend_with_triples(&build_uccsd_pool(n, occ)?),
        PoolChoice::Qe => build_qe_pool(n, occ),
        PoolChoice::OvpCeo if config.method == Method::OvpCeoPlus => {
            build_ovp_ceo_pool(n, occ, OvpVariant::PlusOnly)
        }
        PoolChoice::OvpCeo => build_ovp_ceo_pool(n, occ, OvpVariant::PlusAndMinus),
    }
}

/// Exact ground energy in the reference's particle-number and spin sector.
pub fn exact_energy(molecule: &Molecule, seed: u64) -> Result<f64> {
    let sector = Sector {
        n_elec: molecule.integrals.n_elec,
        ms2: Some(molecule.integrals.ms2),
    };
    Ok(ground_energy_seeded(&molecule.hamiltonian, Some(sector), seed)?.e0)
}

/// Runs the configured protocol without writing anything.
pub fn execute(
    config: &RunConfig,
    molecule: &Molecule,
    exact: Option<f64>,
) -> Result<(Pool, BuildOutcome)> {
    config.validate()?;
    let pool = build_pool(config, molecule)?;
    let mut problem = molecule.problem(exact);
    if !config.classical {
        problem.spin_orbitals = None;
    }
    let opts = config.build_options();
    let outcome = match config.method {
        Method::EnergySorting | Method::OvpCeoPlus => {
            build_ansatz_energy_sorting(&pool, problem, opts)?
        }
        Method::Adaptive => build_ansatz_adaptive(&pool, problem, opts)?,
        Method::Fixed => build_ansatz_fixed(&pool, problem, opts)?,
        Method::OvpCeoPaired => build_ansatz_ovp_paired(&pool, problem, opts)?,
    };
    Ok((pool, outcome))
}

fn sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn sig17_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig17(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluations {
    pub selection: u64,
    pub optimization: u64,
    pub total: u64,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub molecule: String,
    pub method: Method,
    pub pool: PoolChoice,
    pub n_qubits: usize,
    pub pool_size: usize,
    #[serde(serialize_with = "sig17")]
    pub hf_energy: f64,
    #[serde(serialize_with = "sig17_opt")]
    pub fci_energy: Option<f64>,
    #[serde(serialize_with = "sig17")]
    pub energy: f64,
    #[serde(serialize_with = "sig17_opt")]
    pub energy_error: Option<f64>,
    pub ansatz_size: usize,
    pub operators_by_kind: BTreeMap<String, usize>,
    pub ansatz: Vec<String>,
    pub evaluations: Evaluations,
    pub evaluations_to_chemical_accuracy: Option<u64>,
    pub cnot_total: u64,
    pub depth_total: u64,
    pub sweeps: usize,
    pub converged: bool,
    #[serde(serialize_with = "sig17")]
    pub eps_a: f64,
    #[serde(serialize_with = "sig17")]
    pub eps_conv: f64,
}

impl RunSummary {
    pub fn new(
        config: &RunConfig,
        molecule_name: &str,
        molecule: &Molecule,
        pool: &Pool,
        exact: Option<f64>,
        outcome: &BuildOutcome,
    ) -> Self {
        let mut by_kind = BTreeMap::new();
        for el in &outcome.ansatz {
            *by_kind
                .entry(el.generator.kind().code().to_string())
                .or_insert(0) += 1;
        }
        RunSummary {
            molecule: molecule_name.to_string(),
            method: config.method,
            pool: config.pool,
            n_qubits: molecule.n_qubits(),
            pool_size: pool.len(),
            hf_energy: molecule.hf_energy(),
            fci_energy: exact,
            energy: outcome.energy,
            energy_error: exact.map(|e| outcome.energy - e),
            ansatz_size: outcome.ansatz.len(),
            operators_by_kind: by_kind,
            ansatz: outcome
                .ansatz
                .iter()
                .map(|el| el.generator.label())
                .collect(),
            evaluations: Evaluations {
                selection: outcome.counter.selection,
                optimization: outcome.counter.optimization,
                total: outcome.counter.total(),
            },
            evaluations_to_chemical_accuracy: evaluations_to_accuracy(
                &outcome.trace,
                CHEMICAL_ACCURACY,
            ),
            cnot_total: outcome
                .ansatz
                .iter()
                .map(|el| el.generator.cnot_count() as u64)
                .sum(),
            depth_total: outcome
                .ansatz
                .iter()
                .map(|el| el.generator.depth() as u64)
                .sum(),
            sweeps: outcome.sweeps,
            converged: outcome.converged,
            eps_a: config.eps_a,
            eps_conv: config.eps_conv,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialize(e.to_string())
}

pub fn trace_jsonl(trace: &[TraceRecord]) -> Result<String> {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Serialize(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn selection_csv(records: &[SelectionRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id", "label", "kind", "stage", "round", "delta_e", "theta", "selected", "appended",
    ])
    .map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.id.to_string(),
            r.label.clone(),
            r.kind.code().to_string(),
            r.stage.as_str().to_string(),
            r.round.to_string(),
            format!("{:.16e}", r.delta_e),
            format!("{:.16e}", r.theta),
            r.selected.to_string(),
            r.appended.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

fn molecule_name(path: &Path) -> String {
    let dir = path.parent().and_then(|p| p.file_name());
    match (path.file_name(), dir) {
        (Some(f), Some(d)) if f == "FCIDUMP" => d.to_string_lossy().into_owned(),
        (Some(f), _) => f.to_string_lossy().into_owned(),
        _ => path.display().to_string(),
    }
}

/// Runs one configuration and writes `trace.jsonl`, `summary.json` and
/// `selection.csv` into the output directory.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let path = config.fcidump()?;
    let molecule = Molecule::load(path)?;
    let exact = exact_energy(&molecule, config.seed)?;
    let (pool, outcome) = execute(config, &molecule, Some(exact))?;
    let summary = RunSummary::new(
        config,
        &molecule_name(path),
        &molecule,
        &pool,
        Some(exact),
        &outcome,
    );
    let dir = &config.output;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("trace.jsonl"), &trace_jsonl(&outcome.trace)?)?;
    write(&dir.join("summary.json"), &(summary.to_json()? + "\n"))?;
    write(
        &dir.join("selection.csv"),
        &selection_csv(&outcome.records)?,
    )?;
    Ok(summary)
}

/// Which pool operators end up in the ansatz at each scan point.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionMatrix {
    pub operators: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[operator][column]`.
    pub cells: Vec<Vec<bool>>,
}

impl SelectionMatrix {
    pub fn column(&self, j: usize) -> Vec<bool> {
        self.cells.iter().map(|row| row[j]).collect()
    }

    /// Jaccard similarity of the selected sets in columns `i` and `j`.
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        let (mut both, mut either) = (0usize, 0usize);
        for row in &self.cells {
            both += (row[i] && row[j]) as usize;
            either += (row[i] || row[j]) as usize;
        }
        if either == 0 {
            1.0
        } else {
            both as f64 / either as f64
        }
    }

    pub fn all_columns_identical(&self) -> bool {
        (1..self.columns.len()).all(|j| self.column(j) == self.column(0))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once("operator")
            .chain(self.columns.iter().map(String::as_str))
            .collect();
        w.write_record(&header).map_err(csv_error)?;
        for (op, row) in self.operators.iter().zip(&self.cells) {
            let cells = row.iter().map(|&b| if b { "1" } else { "0" });
            w.write_record(std::iter::once(op.as_str()).chain(cells))
                .map_err(csv_error)?;
        }
        finish_csv(w)
    }

    pub fn similarity_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["column_a", "column_b", "jaccard", "identical"])
            .map_err(csv_error)?;
        for i in 0..self.columns.len() {
            for j in i + 1..self.columns.len() {
                w.write_record([
                    self.columns[i].clone(),
                    self.columns[j].clone(),
                    format!("{:.6}", self.similarity(i, j)),
                    (self.column(i) == self.column(j)).to_string(),
                ])
                .map_err(csv_error)?;
            }
        }
        finish_csv(w)
    }
}

/// Runs `config` on every labelled input and tabulates the selected operators.
pub fn scan(config: &RunConfig, inputs: &[(String, PathBuf)]) -> Result<SelectionMatrix> {
    if inputs.len() < 2 {
        return Err(Error::Insufficient(
            "a scan needs at least two inputs".into(),
        ));
    }
    let mut operators: Option<Vec<String>> = None;
    let mut columns = Vec::new();
    let mut selected: Vec<Vec<usize>> = Vec::new();
    for (label, path) in inputs {
        let molecule = Molecule::load(path)?;
        let (pool, outcome) = execute(config, &molecule, None)?;
        let labels: Vec<String> = pool.iter().map(|g| g.label()).collect();
        match &operators {
            Some(ops) if *ops != labels => {
                return Err(Error::Mismatch(format!(
                    "pool of {label} differs from the first input"
                )));
            }
            Some(_) => {}
            None => operators = Some(labels),
        }
        columns.push(label.clone());
        selected.push(outcome.ids);
    }
    let operators = operators.unwrap_or_default();
    let cells = (0..operators.len())
        .map(|k| selected.iter().map(|ids| ids.contains(&k)).collect())
        .collect();
    Ok(SelectionMatrix {
        operators,
        columns,
        cells,
    })
}

/// Classical first-layer screening of every double as CSV.
pub fn preselect_csv(molecule: &Molecule) -> Result<String> {
    let pool = build_uccsd_pool(molecule.n_qubits(), molecule.reference)?;
    let results = preselect_pool_doubles(&molecule.spin_orbitals, &pool)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "p",
        "q",
        "r",
        "s",
        "a",
        "b",
        "delta_e_max",
        "theta_max",
        "parity_sign",
    ])
    .map_err(csv_error)?;
    for (_, r) in results {
        let mut row: Vec<String> = r.orbitals.iter().map(|o| o.to_string()).collect();
        row.extend([
            format!("{:.16e}", r.a),
            format!("{:.16e}", r.b),
            format!("{:.16e}", r.delta_e_max),
            format!("{:.16e}", r.theta_max),
            r.parity_sign.to_string(),
        ]);
        w.write_record(&row).map_err(csv_error)?;
    }
    finish_csv(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedupRow {
    pub method: Method,
    pub molecule: String,
    pub pool_size: usize,
    pub evaluations: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedupReport {
    pub rows: Vec<SpeedupRow>,
    /// Least-squares slope of `ln(evaluations)` over `ln(pool size)`; `None`
    /// when the pool sizes do not vary.
    pub slopes: BTreeMap<Method, Option<f64>>,
}

impl SpeedupReport {
    /// Energy-sorting slope over adaptive slope.
    pub fn slope_ratio(&self) -> Option<f64> {
        let es = self.slopes.get(&Method::EnergySorting).copied().flatten()?;
        let ad = self.slopes.get(&Method::Adaptive).copied().flatten()?;
        Some(es / ad)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "method",
            "molecule",
            "pool_size",
            "evaluations_to_convergence",
        ])
        .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.method.to_string(),
                r.molecule.clone(),
                r.pool_size.to_string(),
                r.evaluations.map_or_else(String::new, |e| e.to_string()),
            ])
            .map_err(csv_error)?;
        }
        for (m, s) in &self.slopes {
            let slope = s.map_or_else(|| "undefined".to_string(), |s| format!("{s:.6}"));
            w.write_record([format!("{m}_slope"), String::new(), String::new(), slope])
                .map_err(csv_error)?;
        }
        let ratio = self
            .slope_ratio()
            .map_or_else(|| "undefined".to_string(), |r| format!("{r:.6}"));
        w.write_record(["slope_ratio", "", "", ratio.as_str()])
            .map_err(csv_error)?;
        finish_csv(w)
    }
}

fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 1e-12).then(|| sxy / sxx)
}

/// Evaluations to chemical accuracy against pool size, per method.
pub fn speedup_report(summaries: &[RunSummary]) -> Result<SpeedupReport> {
    if summaries.is_empty() {
        return Err(Error::Insufficient("no summaries".into()));
    }
    let rows: Vec<SpeedupRow> = summaries
        .iter()
        .map(|s| SpeedupRow {
            method: s.method,
            molecule: s.molecule.clone(),
            pool_size: s.pool_size,
            evaluations: s.evaluations_to_chemical_accuracy,
        })
        .collect();
    let mut by_method: BTreeMap<Method, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        let entry = by_method.entry(r.method).or_default();
        if let Some(e) = r.evaluations.filter(|&e| e > 0 && r.pool_size > 0) {
            entry.push(((r.pool_size as f64).ln(), (e as f64).ln()));
        }
    }
    let mut slopes = BTreeMap::new();
    for (method, points) in by_method {
        if points.len() < 3 {
            return Err(Error::Insufficient(format!(
                "method {method} has {} converged runs, at least 3 needed",
                points.len()
            )));
        }
        slopes.insert(method, log_log_slope(&points));
    }
    Ok(SpeedupReport { rows, slopes })
}

pub fn load_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))
}
