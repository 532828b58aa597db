//! Evaluation bookkeeping shared by the optimizer and the selection protocols.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::simulator::{EvalCounter, EvalPhase, Observable, StateVector};

/// Protocol stage a record belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Reference,
    ClassicalDoubles,
    QuantumDoubles,
    Singles,
    Triples,
    Screening,
    Adaptive,
    Sweep,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Reference => "reference",
            Stage::ClassicalDoubles => "classical_doubles",
            Stage::QuantumDoubles => "quantum_doubles",
            Stage::Singles => "singles",
            Stage::Triples => "triples",
            Stage::Screening => "screening",
            Stage::Adaptive => "adaptive",
            Stage::Sweep => "sweep",
        }
    }
}

/// One line of `trace.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub eval_count: u64,
    pub selection_evals: u64,
    pub optimization_evals: u64,
    /// Energy of the committed ansatz after this step.
    pub energy: f64,
    pub energy_error: Option<f64>,
    pub phase: EvalPhase,
    pub stage: Stage,
    pub ansatz_size: usize,
}

/// Counts every expectation made on behalf of one construction run.
#[derive(Debug)]
pub struct Session<'h> {
    h: &'h Observable,
    counter: EvalCounter,
    trace: Vec<TraceRecord>,
    exact: Option<f64>,
    pub stage: Stage,
}

impl<'h> Session<'h> {
    pub fn new(h: &'h Observable, exact: Option<f64>) -> Self {
        Session {
            h,
            counter: EvalCounter::default(),
            trace: Vec::new(),
            exact,
            stage: Stage::Reference,
        }
    }

    pub fn hamiltonian(&self) -> &'h Observable {
        self.h
    }

    pub fn counter(&self) -> EvalCounter {
        self.counter
    }

    pub fn exact(&self) -> Option<f64> {
        self.exact
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceRecord> {
        self.trace
    }

    /// Counted expectation on `state`.
    pub fn evaluate(&mut self, state: &mut StateVector, phase: EvalPhase) -> Result<f64> {
        let before = state.counter();
        let e = state.expectation(self.h, phase)?;
        let after = state.counter();
        self.counter.selection += after.selection - before.selection;
        self.counter.optimization += after.optimization - before.optimization;
        Ok(e)
    }

    /// Adds evaluations made elsewhere, e.g. on scratch states in parallel workers.
    pub fn absorb(&mut self, delta: &EvalCounter) {
        self.counter.add(delta);
    }

    /// Records the committed energy if evaluations happened since the last record.
    pub fn commit(&mut self, energy: f64, ansatz_size: usize, phase: EvalPhase) {
        let eval_count = self.counter.total();
        if eval_count == 0
            || self
                .trace
                .last()
                .is_some_and(|r| r.eval_count >= eval_count)
        {
            return;
        }
        self.trace.push(TraceRecord {
            eval_count,
            selection_evals: self.counter.selection,
            optimization_evals: self.counter.optimization,
            energy,
            energy_error: self.exact.map(|e0| energy - e0),
            phase,
            stage: self.stage,
            ansatz_size,
        });
    }
}

/// First cumulative evaluation count with error below `threshold`.
pub fn evaluations_to_accuracy(trace: &[TraceRecord], threshold: f64) -> Option<u64> {
    trace
        .iter()
        .find(|r| r.energy_error.is_some_and(|e| e < threshold))
        .map(|r| r.eval_count)
}
