//! Knowledge-acquisition mathematics.
//!
//! Everything that turns intuitively-directed expert input into numbers the
//! troubleshooter can use lives here: collapsing the cause tree, composing
//! action success probabilities and costs, keeping anti-causally elicited
//! question tables consistent with the cause prior, reversing them into
//! causal rows, and the two interactive aids (wish fitting and coupled
//! sliders). All functions are pure.

mod consistency;
mod cost;
mod fit;
mod slider;
mod tree;

pub use consistency::{
    complete_general, eq2_residuals, max_abs_residual, neutral_table, reverse_general_question, ReversedRows,
    ELICITED_TOLERANCE, MACHINE_TOLERANCE,
};
pub use cost::{action_solve_probability, combine_costs};
pub use fit::{
    fit_probabilities, CauseFit, CauseOutcome, ColumnDiagnostic, FitReport, Wish, WishOutcome, WishStatus, WishTable,
};
pub use slider::{slider_update, CellChange, SliderEdit};
pub use tree::{aggregate_cause_probability, collapse_cause_tree};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Flat distribution of the cause indicator over leaf causes, in leaf
/// declaration order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CauseDistribution {
    pub entries: IndexMap<String, f64>,
}

impl CauseDistribution {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self {
            entries: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.get(id).copied()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.get_index_of(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn probs(&self) -> Vec<f64> {
        self.entries.values().copied().collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Same support, new values, normalized to sum to one. `None` when all
    /// weights vanish.
    pub fn reweighted(&self, weights: &[f64]) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        Some(Self {
            entries: self
                .entries
                .keys()
                .zip(weights)
                .map(|(k, w)| (k.clone(), w / total))
                .collect(),
        })
    }
}

/// A fully specified anti-causal question table: P(I = F | Q = s) per
/// associated cause and the answer prior P(Q = s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralTable {
    pub answers: Vec<String>,
    pub answer_prior: Vec<f64>,
    /// cause id -> one cell per answer.
    pub cells: IndexMap<String, Vec<f64>>,
}

impl GeneralTable {
    pub fn answer_index(&self, answer: &str) -> Option<usize> {
        self.answers.iter().position(|a| a == answer)
    }

    pub fn column_sum(&self, answer: usize) -> f64 {
        self.cells.values().map(|row| row[answer]).sum()
    }

    /// The table as a fully specified General question body.
    pub fn to_question_kind(&self) -> crate::model::QuestionKind {
        crate::model::QuestionKind::General {
            answer_prior: self.answer_prior.clone(),
            cause_given_answer: self
                .cells
                .iter()
                .map(|(k, row)| (k.clone(), row.iter().map(|v| Some(*v)).collect()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElicitationError {
    #[error("invalid cause tree at {path}: {message}")]
    InvalidTree { path: String, message: String },
    #[error("unknown cause tree node '{0}'")]
    UnknownNode(String),
    #[error("unknown cause '{0}'")]
    UnknownCause(String),
    #[error("unknown answer '{0}'")]
    UnknownAnswer(String),
    #[error("consistency equation violated for '{cause}': residual {residual:e}")]
    InconsistentElicitation { cause: String, residual: f64 },
    #[error("{what} evaluates to {value}, outside [0, 1]")]
    OutOfRange { what: String, value: f64 },
    #[error("cause '{0}' has zero prior probability")]
    ZeroPrior(String),
    #[error("shortcut question cannot be made consistent: {0}")]
    InfeasibleShortcut(String),
    #[error("no assignment in [0, 1] restores consistency for '{cause}' (cell at '{answer}' would be {value})")]
    InfeasibleAdjustment { cause: String, answer: String, value: f64 },
    #[error("question '{0}' has no anti-causal table")]
    NotGeneral(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl ElicitationError {
    pub fn code(&self) -> &'static str {
        match self {
            ElicitationError::InvalidTree { .. } => "InvalidTree",
            ElicitationError::UnknownNode(_) => "UnknownNode",
            ElicitationError::UnknownCause(_) => "UnknownCause",
            ElicitationError::UnknownAnswer(_) => "UnknownAnswer",
            ElicitationError::InconsistentElicitation { .. } => "InconsistentElicitation",
            ElicitationError::OutOfRange { .. } => "OutOfRange",
            ElicitationError::ZeroPrior(_) => "ZeroPrior",
            ElicitationError::InfeasibleShortcut(_) => "InfeasibleShortcut",
            ElicitationError::InfeasibleAdjustment { .. } => "InfeasibleAdjustment",
            ElicitationError::NotGeneral(_) => "NotGeneral",
            ElicitationError::InvalidInput(_) => "InvalidInput",
        }
    }
}
