//! Ansatz construction protocols.
//!
//! Energy Sorting ranks every pool operator by the energy drop of its exact
//! one-parameter landscape and appends all operators above the threshold in one
//! pass. The adaptive baseline appends only the best operator per pass. Doubles
//! on a determinant reference can be ranked from the integrals alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::{hf_energy, SpinOrbitalHamiltonian};
use crate::landscape::{
    minimize_landscape, prepare_ansatz_state, reconstruct_landscape, sweep_optimize, AnsatzElement,
    SweepOptions, TrigLandscape,
};
use crate::pools::{GeneratorKind, Pool};
use crate::preselect::preselect_excitation;
use crate::simulator::{prepare_basis_state, EvalCounter, EvalPhase, Observable, StateVector};
use crate::trace::{Session, Stage, TraceRecord};

pub const DEFAULT_EPS_A: f64 = 1e-13;

/// Ranking of one pool operator against the current ansatz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    /// Index in the pool.
    pub id: usize,
    pub label: String,
    pub kind: GeneratorKind,
    pub stage: Stage,
    /// Screening round, 0 outside screening.
    pub round: usize,
    pub delta_e: f64,
    pub theta: f64,
    /// `delta_e > ε_A`.
    pub selected: bool,
    /// Whether the operator was appended to the ansatz.
    pub appended: bool,
}

/// Inputs shared by every protocol.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub h: &'a Observable,
    /// Occupation bitmask of the determinant reference.
    pub reference: u64,
    /// Enables classical ranking of first-layer doubles.
    pub spin_orbitals: Option<&'a SpinOrbitalHamiltonian>,
    /// Exact ground energy for error columns in the trace.
    pub exact: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub eps_a: f64,
    pub sweep: SweepOptions,
    pub screening_rounds: usize,
    /// Adaptive protocol only.
    pub max_ops: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            eps_a: DEFAULT_EPS_A,
            sweep: SweepOptions::default(),
            screening_rounds: 3,
            max_ops: usize::MAX,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuildOutcome {
    pub ansatz: Vec<AnsatzElement>,
    /// Pool index of each ansatz element.
    pub ids: Vec<usize>,
    pub energy: f64,
    pub records: Vec<SelectionRecord>,
    pub trace: Vec<TraceRecord>,
    pub counter: EvalCounter,
    pub sweeps: usize,
    /// Last sweep converged and, where applicable, screening found nothing left.
    pub converged: bool,
}

/// Landscape of every candidate appended to `state`, ranked by `ΔE` descending.
///
/// Costs four evaluations per candidate. Ties keep candidate order. One trace
/// record is committed per landscape.
#[allow(clippy::too_many_arguments)]
pub fn energy_sort(
    pool: &Pool,
    candidates: &[usize],
    state: &StateVector,
    e_ref: f64,
    session: &mut Session<'_>,
    eps_a: f64,
    stage: Stage,
    ansatz_size: usize,
) -> Result<Vec<SelectionRecord>> {
    let landscapes = landscapes(pool, candidates, state, session.hamiltonian(), e_ref)?;
    let previous = session.stage;
    session.stage = stage;
    let mut records = Vec::with_capacity(candidates.len());
    for (&id, (l, cost)) in candidates.iter().zip(landscapes) {
        session.absorb(&cost);
        session.commit(e_ref, ansatz_size, EvalPhase::Selection);
        let (theta, e) = minimize_landscape(&l);
        let g = &pool.generators[id];
        let delta_e = e_ref - e;
        records.push(SelectionRecord {
            id,
            label: g.label(),
            kind: g.kind(),
            stage,
            round: 0,
            delta_e,
            theta,
            selected: delta_e > eps_a,
            appended: false,
        });
    }
    session.stage = previous;
    sort_records(&mut records);
    Ok(records)
}

fn landscapes(
    pool: &Pool,
    ids: &[usize],
    state: &StateVector,
    h: &Observable,
    e_ref: f64,
) -> Result<Vec<(TrigLandscape, EvalCounter)>> {
    ids.par_iter()
        .map(|&id| {
            let mut probe = state.scratch();
            let l = reconstruct_landscape(
                &mut probe,
                &pool.generators[id],
                h,
                Some(e_ref),
                EvalPhase::Selection,
            )?;
            Ok((l, probe.counter()))
        })
        .collect()
}

fn sort_records(records: &mut [SelectionRecord]) {
    records.sort_by(|x, y| y.delta_e.total_cmp(&x.delta_e));
}

/// Mutable construction state: the ansatz, its output state and the session.
#[derive(Debug)]
pub struct AnsatzBuilder<'p, 'h> {
    pool: &'p Pool,
    problem: Problem<'h>,
    opts: BuildOptions,
    session: Session<'h>,
    reference: StateVector,
    state: StateVector,
    ansatz: Vec<AnsatzElement>,
    ids: Vec<usize>,
    energy: Option<f64>,
    records: Vec<SelectionRecord>,
    sweeps: usize,
    converged: bool,
}

impl<'p, 'h> AnsatzBuilder<'p, 'h> {
    pub fn new(pool: &'p Pool, problem: Problem<'h>, opts: BuildOptions) -> Result<Self> {
        let n = problem.h.n_qubits();
        if pool.n_qubits != n {
            return Err(Error::SizeMismatch {
                left: n,
                right: pool.n_qubits,
            });
        }
        let reference = prepare_basis_state(n, problem.reference)?;
        Ok(AnsatzBuilder {
            pool,
            problem,
            opts,
            session: Session::new(problem.h, problem.exact),
            state: reference.scratch(),
            reference,
            ansatz: Vec::new(),
            ids: Vec::new(),
            energy: None,
            records: Vec::new(),
            sweeps: 0,
            converged: true,
        })
    }

    pub fn ansatz(&self) -> &[AnsatzElement] {
        &self.ansatz
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn session(&self) -> &Session<'h> {
        &self.session
    }

    pub fn records(&self) -> &[SelectionRecord] {
        &self.records
    }

    /// Pool indices of the given rank, in pool order.
    pub fn ids_of_rank(&self, rank: usize) -> Vec<usize> {
        (0..self.pool.len())
            .filter(|&k| self.pool.generators[k].kind().rank() == rank)
            .collect()
    }

    /// Pool indices not yet in the ansatz.
    pub fn unused_ids(&self) -> Vec<usize> {
        (0..self.pool.len())
            .filter(|k| !self.ids.contains(k))
            .collect()
    }

    /// Energy of the current ansatz, evaluating it if unknown.
    pub fn energy(&mut self, phase: EvalPhase) -> Result<f64> {
        if let Some(e) = self.energy {
            return Ok(e);
        }
        let e = match self.problem.spin_orbitals {
            Some(soh) if self.ansatz.is_empty() => hf_energy(soh, self.problem.reference),
            _ => {
                let e = self.session.evaluate(&mut self.state, phase)?;
                self.session.commit(e, self.ansatz.len(), phase);
                e
            }
        };
        self.energy = Some(e);
        Ok(e)
    }

    /// Ranks `candidates` against the current state.
    pub fn rank(
        &mut self,
        candidates: &[usize],
        stage: Stage,
        round: usize,
    ) -> Result<Vec<SelectionRecord>> {
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let e_ref = self.energy(EvalPhase::Selection)?;
        let mut records = energy_sort(
            self.pool,
            candidates,
            &self.state,
            e_ref,
            &mut self.session,
            self.opts.eps_a,
            stage,
            self.ansatz.len(),
        )?;
        records.iter_mut().for_each(|r| r.round = round);
        Ok(records)
    }

    /// Ranks first-layer candidates from the integrals at no evaluation cost.
    ///
    /// Falls back to [`Self::rank`] when no integrals are attached or the ansatz
    /// is not empty.
    pub fn rank_first_layer(&mut self, candidates: &[usize]) -> Result<Vec<SelectionRecord>> {
        let soh = match self.problem.spin_orbitals {
            Some(soh) if self.ansatz.is_empty() => soh,
            _ => return self.rank(candidates, Stage::QuantumDoubles, 0),
        };
        let mut records = candidates
            .iter()
            .map(|&id| {
                let g = &self.pool.generators[id];
                let r = preselect_excitation(soh, self.problem.reference, g)?;
                Ok(SelectionRecord {
                    id,
                    label: g.label(),
                    kind: g.kind(),
                    stage: Stage::ClassicalDoubles,
                    round: 0,
                    delta_e: r.delta_e_max,
                    theta: r.theta_max,
                    selected: r.delta_e_max > self.opts.eps_a,
                    appended: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sort_records(&mut records);
        Ok(records)
    }

    /// Appends pool operator `id` at `theta`. `energy_after` is the resulting
    /// energy if already known.
    pub fn append(&mut self, id: usize, theta: f64, energy_after: Option<f64>) -> Result<()> {
        let g = &self.pool.generators[id];
        self.state.apply_generator_exponential(g, theta)?;
        self.ansatz.push(AnsatzElement::new(g.clone(), theta));
        self.ids.push(id);
        self.energy = energy_after;
        Ok(())
    }

    /// Appends every selected record in order, at its warm-start angle.
    pub fn append_selected(&mut self, mut records: Vec<SelectionRecord>) -> Result<usize> {
        let mut appended = 0;
        for r in records.iter_mut().filter(|r| r.selected) {
            self.append(r.id, r.theta, None)?;
            r.appended = true;
            appended += 1;
        }
        // A lone append lands exactly on the landscape minimum.
        if appended == 1 {
            if let (Some(e_ref), Some(r)) = (self.energy, records.iter().find(|r| r.appended)) {
                if r.stage != Stage::ClassicalDoubles {
                    self.energy = Some(e_ref - r.delta_e);
                }
            }
        }
        self.records.extend(records);
        Ok(appended)
    }

    /// Coordinate-descent sweeps over the whole ansatz.
    pub fn sweep(&mut self) -> Result<()> {
        let outcome = sweep_optimize(
            &mut self.ansatz,
            &self.reference,
            &mut self.session,
            self.energy,
            self.opts.sweep,
        )?;
        self.sweeps += outcome.sweeps;
        self.converged = outcome.converged;
        self.energy = Some(outcome.energy);
        self.state = prepare_ansatz_state(&self.reference, &self.ansatz)?;
        Ok(())
    }

    /// Re-ranks every operator outside the ansatz and appends any above the
    /// threshold, followed by a sweep, for at most `screening_rounds` rounds.
    /// Returns whether a round found nothing to add.
    pub fn screen(&mut self) -> Result<bool> {
        for round in 1..=self.opts.screening_rounds {
            let candidates = self.unused_ids();
            let records = self.rank(&candidates, Stage::Screening, round)?;
            let added = self.append_selected(records)?;
            if added == 0 {
                return Ok(true);
            }
            self.sweep()?;
        }
        self.converged = false;
        Ok(false)
    }

    /// For each `(plus, minus)` pair in order, appends whichever variant lowers
    /// the current energy more. Ties go to the plus variant.
    pub fn select_ovp_ceo_pair(&mut self, pairs: &[(usize, usize)]) -> Result<()> {
        for &(plus, minus) in pairs {
            let mut records = self.rank(&[plus, minus], Stage::QuantumDoubles, 0)?;
            records.sort_by_key(|r| r.id != plus);
            let pick = if records[1].delta_e > records[0].delta_e {
                1
            } else {
                0
            };
            let e_ref = self.energy(EvalPhase::Selection)?;
            let r = &mut records[pick];
            r.appended = true;
            let (id, theta, delta_e) = (r.id, r.theta, r.delta_e);
            self.append(id, theta, Some(e_ref - delta_e))?;
            self.records.extend(records);
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<BuildOutcome> {
        let energy = self.energy(EvalPhase::Optimization)?;
        Ok(BuildOutcome {
            ansatz: self.ansatz,
            ids: self.ids,
            energy,
            records: self.records,
            counter: self.session.counter(),
            trace: self.session.into_trace(),
            sweeps: self.sweeps,
            converged: self.converged,
        })
    }
}

/// Staged Energy Sorting: doubles, then singles, then triples, each appended in
/// ranked order at its warm-start angle; then sweeps and final screening.
///
/// Doubles are ranked from the integrals when the problem carries them.
pub fn build_ansatz_energy_sorting(
    pool: &Pool,
    problem: Problem<'_>,
    opts: BuildOptions,
) -> Result<BuildOutcome> {
    let mut b = AnsatzBuilder::new(pool, problem, opts)?;
    let doubles = b.ids_of_rank(2);
    if !doubles.is_empty() {
        let records = b.rank_first_layer(&doubles)?;
        b.append_selected(records)?;
    }
    for (rank, stage) in [(1, Stage::Singles), (3, Stage::Triples)] {
        let ids = b.ids_of_rank(rank);
        if !ids.is_empty() {
            let records = b.rank(&ids, stage, 0)?;
            b.append_selected(records)?;
        }
    }
    b.sweep()?;
    b.screen()?;
    b.finish()
}

/// One operator per pass: rank all unused operators, append the best, sweep.
pub fn build_ansatz_adaptive(
    pool: &Pool,
    problem: Problem<'_>,
    opts: BuildOptions,
) -> Result<BuildOutcome> {
    let mut b = AnsatzBuilder::new(pool, problem, opts)?;
    while b.ansatz().len() < opts.max_ops {
        let candidates = b.unused_ids();
        let mut records = b.rank(&candidates, Stage::Adaptive, 0)?;
        let Some(best) = records.first_mut() else {
            break;
        };
        if !best.selected {
            b.records.extend(records);
            break;
        }
        best.appended = true;
        let e_ref = b.energy(EvalPhase::Selection)?;
        let (id, theta, delta_e) = (best.id, best.theta, best.delta_e);
        b.append(id, theta, Some(e_ref - delta_e))?;
        b.records.extend(records);
        b.sweep()?;
    }
    b.finish()
}

/// The whole pool at zero angles, optimized by sweeps.
pub fn build_ansatz_fixed(
    pool: &Pool,
    problem: Problem<'_>,
    opts: BuildOptions,
) -> Result<BuildOutcome> {
    let mut b = AnsatzBuilder::new(pool, problem, opts)?;
    if problem.spin_orbitals.is_some() {
        b.energy(EvalPhase::Optimization)?;
    }
    for id in 0..pool.len() {
        let energy = b.energy;
        b.append(id, 0.0, energy)?;
    }
    b.sweep()?;
    b.finish()
}

/// Matching `(plus, minus)` pool indices for every OVP-CEO quadruple.
pub fn ovp_ceo_pairs(pool: &Pool) -> Vec<(usize, usize)> {
    let gens = &pool.generators;
    (0..gens.len())
        .filter(|&k| gens[k].kind() == GeneratorKind::OvpCeoPlus)
        .filter_map(|k| {
            (0..gens.len())
                .find(|&m| {
                    gens[m].kind() == GeneratorKind::OvpCeoMinus
                        && gens[m].orbitals() == gens[k].orbitals()
                })
                .map(|m| (k, m))
        })
        .collect()
}

/// Energy Sorting with a plus/minus OVP-CEO pool: quadruples are ranked by the
/// plus variant, then one variant per selected quadruple is chosen against the
/// running state.
pub fn build_ansatz_ovp_paired(
    pool: &Pool,
    problem: Problem<'_>,
    opts: BuildOptions,
) -> Result<BuildOutcome> {
    let pairs = ovp_ceo_pairs(pool);
    if pairs.is_empty() {
        return Err(Error::Config(
            "paired selection needs a plus-and-minus OVP-CEO pool".into(),
        ));
    }
    let mut b = AnsatzBuilder::new(pool, problem, opts)?;
    let plus: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let ranked = b.rank_first_layer(&plus)?;
    let order: Vec<(usize, usize)> = ranked
        .iter()
        .filter(|r| r.selected)
        .map(|r| *pairs.iter().find(|p| p.0 == r.id).expect("ranked plus id"))
        .collect();
    b.records.extend(ranked);
    b.select_ovp_ceo_pair(&order)?;
    for (rank, stage) in [(1, Stage::Singles), (3, Stage::Triples)] {
        let ids = b.ids_of_rank(rank);
        if !ids.is_empty() {
            let records = b.rank(&ids, stage, 0)?;
            b.append_selected(records)?;
        }
    }
    b.sweep()?;
    b.screen()?;
    b.finish()
}
