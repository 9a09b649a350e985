use super::stats::MeanStats;
use super::types::{DictionaryBundle, HyperParams};

/// One row of the training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub fidelity: f64,
    pub l1: f64,
    pub fisher: f64,
    pub nuclear: f64,
    pub elapsed_seconds: f64,
    /// Class atoms skipped by the dictionary update because they were unused.
    pub dead_atoms: usize,
    /// Final `||D_0 - Z||_F` of the shared-dictionary ADMM solve.
    pub admm_residual: f64,
}

/// How training ended.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainStatus {
    Completed,
    /// Training stopped early; the model holds the last finite state.
    Aborted { iter: usize, reason: String },
}

/// What classification needs after training: `D̄`, the class means and `m^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    pub dicts: DictionaryBundle,
    pub means: MeanStats,
    pub hyper: HyperParams,
    pub trace: Vec<IterationRecord>,
    pub status: TrainStatus,
}

impl LearnedModel {
    pub fn classes(&self) -> usize {
        self.dicts.classes()
    }

    pub fn dim(&self) -> usize {
        self.dicts.dim()
    }

    pub fn is_complete(&self) -> bool {
        self.status == TrainStatus::Completed
    }
}
