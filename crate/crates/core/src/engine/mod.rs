//! Troubleshooting sessions on a compiled network.
//!
//! The posterior is never stored: it is recomputed from the evidence list on
//! demand, which makes retraction (undo, dependency fixing) exact.

mod planner;
mod posterior;
mod simulate;

pub use planner::{greedy_action_sequence, next_step, Next, Plan, Recommendation, QUESTION_MARGIN};
pub use posterior::posterior;
pub use simulate::{simulate, Policy, SimReport};

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{CompiledNetwork, StepKind, YES};
use crate::elicitation::CauseDistribution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("evidence rules out every cause")]
    ContradictoryEvidence,
    #[error("session is already {0}")]
    SessionTerminal(String),
    #[error("unknown step '{0}'")]
    UnknownStep(String),
    #[error("'{outcome}' is not an outcome of '{step}'")]
    UnknownOutcome { step: String, outcome: String },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("no actions left to perform")]
    NoActionsAvailable,
    #[error("session belongs to model '{found}', network is '{expected}'")]
    NetworkMismatch { expected: String, found: String },
}

impl EngineError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::ContradictoryEvidence => "ContradictoryEvidence",
            EngineError::SessionTerminal(_) => "SessionTerminal",
            EngineError::UnknownStep(_) => "UnknownStep",
            EngineError::UnknownOutcome { .. } => "UnknownOutcome",
            EngineError::NothingToUndo => "NothingToUndo",
            EngineError::NoActionsAvailable => "NoActionsAvailable",
            EngineError::NetworkMismatch { .. } => "NetworkMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Origin {
    UserEntered,
    DependencyFixed { trigger: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub step_id: String,
    pub outcome: String,
    pub origin: Origin,
}

impl Evidence {
    pub fn user(step_id: impl Into<String>, outcome: impl Into<String>) -> Self {
        Self {
            step_id: step_id.into(),
            outcome: outcome.into(),
            origin: Origin::UserEntered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum SessionStatus {
    Active,
    Resolved { action: String },
    Unresolved,
}

impl SessionStatus {
    pub fn is_active(&self) -> bool {
        matches!(self, SessionStatus::Active)
    }

    fn label(&self) -> String {
        match self {
            SessionStatus::Active => "active".into(),
            SessionStatus::Resolved { action } => format!("resolved by '{action}'"),
            SessionStatus::Unresolved => "unresolved".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// What the planner recommended before this outcome was entered.
    pub recommended: Option<String>,
    pub step_id: String,
    pub outcome: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    /// Evidence replaced by this entry, restored on undo.
    #[serde(default)]
    pub retracted: Vec<Evidence>,
}

/// Serializable part of a session; the network is referenced by model id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub model_id: String,
    pub profile: String,
    pub evidence: Vec<Evidence>,
    pub status: SessionStatus,
    pub history: Vec<HistoryEntry>,
}

/// Adds one observation to an evidence list, applying dependency rules.
/// Returns the evidence it displaced.
pub(crate) fn apply_observation(
    network: &CompiledNetwork,
    evidence: &mut Vec<Evidence>,
    step_id: &str,
    outcome: &str,
) -> Vec<Evidence> {
    let mut retracted = Vec::new();
    let mut take = |evidence: &mut Vec<Evidence>, id: &str| {
        if let Some(pos) = evidence.iter().position(|e| e.step_id == id) {
            retracted.push(evidence.remove(pos));
        }
    };
    take(evidence, step_id);
    evidence.push(Evidence::user(step_id, outcome));
    for rule in network.dependencies.iter().filter(|r| r.action_id == step_id) {
        take(evidence, &rule.question_id);
        evidence.push(Evidence {
            step_id: rule.question_id.clone(),
            outcome: rule.fixed_answer.clone(),
            origin: Origin::DependencyFixed {
                trigger: step_id.to_string(),
            },
        });
    }
    retracted
}

pub(crate) fn status_of(network: &CompiledNetwork, evidence: &[Evidence]) -> SessionStatus {
    for e in evidence {
        if e.outcome == YES && matches!(network.step(&e.step_id), Some(s) if s.kind == StepKind::RepairAction) {
            return SessionStatus::Resolved {
                action: e.step_id.clone(),
            };
        }
    }
    let open_repair = network
        .steps
        .iter()
        .any(|s| s.kind == StepKind::RepairAction && !evidence.iter().any(|e| e.step_id == s.id));
    if open_repair {
        SessionStatus::Active
    } else {
        SessionStatus::Unresolved
    }
}

/// One interactive troubleshooting session. A session is mutated by one
/// caller at a time; the network is shared read-only.
#[derive(Debug, Clone)]
pub struct Session {
    network: Arc<CompiledNetwork>,
    state: SessionState,
}

impl Session {
    pub fn new(network: Arc<CompiledNetwork>) -> Self {
        let status = status_of(&network, &[]);
        let state = SessionState {
            model_id: network.model_id.clone(),
            profile: network.profile.clone(),
            evidence: Vec::new(),
            status,
            history: Vec::new(),
        };
        Self { network, state }
    }

    /// Reattaches a saved session to its network.
    pub fn resume(network: Arc<CompiledNetwork>, state: SessionState) -> Result<Self, EngineError> {
        if state.model_id != network.model_id {
            return Err(EngineError::NetworkMismatch {
                expected: network.model_id.clone(),
                found: state.model_id,
            });
        }
        Ok(Self { network, state })
    }

    pub fn network(&self) -> &Arc<CompiledNetwork> {
        &self.network
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn status(&self) -> &SessionStatus {
        &self.state.status
    }

    pub fn evidence(&self) -> &[Evidence] {
        &self.state.evidence
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.state.history
    }

    pub fn posterior(&self) -> Result<CauseDistribution, EngineError> {
        posterior(&self.network, &self.state.evidence)
    }

    pub fn next_step(&self) -> Result<Next, EngineError> {
        if !self.state.status.is_active() {
            return Ok(Next::Terminal(self.state.status.clone()));
        }
        next_step(&self.network, &self.state.evidence)
    }

    pub fn record_outcome(&mut self, step_id: &str, outcome: &str) -> Result<&SessionState, EngineError> {
        self.record(step_id, outcome, None)
    }

    /// Records an outcome, noting which step had been recommended.
    pub fn record(
        &mut self,
        step_id: &str,
        outcome: &str,
        recommended: Option<String>,
    ) -> Result<&SessionState, EngineError> {
        self.record_at(step_id, outcome, recommended, now_ms())
    }

    /// As [`Session::record`] with an explicit timestamp in Unix
    /// milliseconds, for hosts without a system clock (wasm32).
    pub fn record_at(
        &mut self,
        step_id: &str,
        outcome: &str,
        recommended: Option<String>,
        timestamp: u64,
    ) -> Result<&SessionState, EngineError> {
        if !self.state.status.is_active() {
            return Err(EngineError::SessionTerminal(self.state.status.label()));
        }
        let step = self
            .network
            .step(step_id)
            .ok_or_else(|| EngineError::UnknownStep(step_id.to_string()))?;
        if step.outcome_index(outcome).is_none() {
            return Err(EngineError::UnknownOutcome {
                step: step_id.to_string(),
                outcome: outcome.to_string(),
            });
        }
        let retracted = apply_observation(&self.network, &mut self.state.evidence, step_id, outcome);
        self.state.history.push(HistoryEntry {
            recommended,
            step_id: step_id.to_string(),
            outcome: outcome.to_string(),
            timestamp,
            retracted,
        });
        self.state.status = status_of(&self.network, &self.state.evidence);
        Ok(&self.state)
    }

    /// Retracts the last entered outcome together with the evidence it
    /// fixed through dependency rules, restoring anything it displaced.
    pub fn undo_last(&mut self) -> Result<&SessionState, EngineError> {
        let entry = self.state.history.pop().ok_or(EngineError::NothingToUndo)?;
        self.state.evidence.retain(|e| {
            let triggered = matches!(&e.origin, Origin::DependencyFixed { trigger } if *trigger == entry.step_id);
            let own = e.step_id == entry.step_id && e.origin == Origin::UserEntered;
            !(triggered || own)
        });
        self.state.evidence.extend(entry.retracted);
        self.state.status = status_of(&self.network, &self.state.evidence);
        Ok(&self.state)
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or_default()
}
