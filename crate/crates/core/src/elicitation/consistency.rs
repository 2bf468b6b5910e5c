use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{CauseDistribution, ElicitationError, GeneralTable};
use crate::model::{desugar_shortcut_question, Question, QuestionKind};

/// Residual tolerance for hand-entered tables.
pub const ELICITED_TOLERANCE: f64 = 1e-6;
/// Residual tolerance for tables produced by an algorithm.
pub const MACHINE_TOLERANCE: f64 = 1e-9;

/// residual(F) = P(F) - sum_s P(I = F | Q = s) P(Q = s), per associated cause.
///
/// Causes missing from `prior` are treated as having probability zero.
pub fn eq2_residuals(table: &GeneralTable, prior: &CauseDistribution) -> IndexMap<String, f64> {
    table
        .cells
        .iter()
        .map(|(cause, row)| {
            let p = prior.get(cause).unwrap_or(0.0);
            let mixed: f64 = row.iter().zip(&table.answer_prior).map(|(c, q)| c * q).sum();
            (cause.clone(), p - mixed)
        })
        .collect()
}

pub fn max_abs_residual(table: &GeneralTable, prior: &CauseDistribution) -> f64 {
    eq2_residuals(table, prior).values().fold(0.0, |m, r| m.max(r.abs()))
}

/// The uninformative table: every cell equals the cause prior.
pub fn neutral_table(
    answers: &[String],
    answer_prior: &[f64],
    prior: &CauseDistribution,
    causes: &[String],
) -> Result<GeneralTable, ElicitationError> {
    let mut cells = IndexMap::new();
    for c in causes {
        let p = prior.get(c).ok_or_else(|| ElicitationError::UnknownCause(c.clone()))?;
        cells.insert(c.clone(), vec![p; answers.len()]);
    }
    Ok(GeneralTable {
        answers: answers.to_vec(),
        answer_prior: answer_prior.to_vec(),
        cells,
    })
}

/// Produces the full anti-causal table of a general or shortcut question.
///
/// For binary general questions a single `null` cell per cause is derived
/// from the consistency equation. Shortcut questions are desugared first.
pub fn complete_general(q: &Question, prior: &CauseDistribution) -> Result<GeneralTable, ElicitationError> {
    let desugared;
    let kind = match &q.kind {
        QuestionKind::Symptom { .. } => return Err(ElicitationError::NotGeneral(q.id.clone())),
        QuestionKind::Shortcut { .. } => {
            desugared = desugar_shortcut_question(q, prior)?;
            &desugared.kind
        }
        general => general,
    };
    let QuestionKind::General {
        answer_prior,
        cause_given_answer,
    } = kind
    else {
        unreachable!("desugaring yields a general question");
    };

    let n = q.answers.len();
    if answer_prior.len() != n {
        return Err(ElicitationError::InvalidInput(format!(
            "question '{}' has {n} answers but {} answer priors",
            q.id,
            answer_prior.len()
        )));
    }
    let mut cells = IndexMap::new();
    for (cause, row) in cause_given_answer {
        if row.len() != n {
            return Err(ElicitationError::InvalidInput(format!(
                "question '{}' cause '{cause}' has {} cells for {n} answers",
                q.id,
                row.len()
            )));
        }
        let p = prior
            .get(cause)
            .ok_or_else(|| ElicitationError::UnknownCause(cause.clone()))?;
        let missing: Vec<usize> = (0..n).filter(|&s| row[s].is_none()).collect();
        let filled = match missing.as_slice() {
            [] => row.iter().map(|c| c.unwrap_or_default()).collect(),
            [hole] if n == 2 => {
                let other = 1 - hole;
                let known = row[other].unwrap_or_default();
                let mut out = vec![known; 2];
                out[*hole] = if answer_prior[*hole] > 0.0 {
                    (p - known * answer_prior[other]) / answer_prior[*hole]
                } else {
                    p
                };
                out
            }
            _ => {
                return Err(ElicitationError::InvalidInput(format!(
                    "question '{}' cause '{cause}' leaves cells open that cannot be derived",
                    q.id
                )))
            }
        };
        cells.insert(cause.clone(), filled);
    }
    Ok(GeneralTable {
        answers: q.answers.clone(),
        answer_prior: answer_prior.clone(),
        cells,
    })
}

/// Causal rows obtained from an anti-causal table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversedRows {
    pub answers: Vec<String>,
    /// P(Q = s | I = F) for each associated cause.
    pub given_cause: IndexMap<String, Vec<f64>>,
    /// P(Q = s | I not among the associated causes); absent when the
    /// associated causes carry all prior mass.
    pub given_none: Option<Vec<f64>>,
}

impl ReversedRows {
    /// Row for an arbitrary leaf: its own row if associated, else the none row.
    pub fn row_for(&self, cause: &str) -> Option<&[f64]> {
        self.given_cause
            .get(cause)
            .or(self.given_none.as_ref())
            .map(Vec::as_slice)
    }
}

/// Reverses P(I = F | Q) and P(Q) into P(Q | I = F) with Bayes' formula,
/// treating each associated cause on its own and lumping the rest of the
/// support into a "none of the associated causes" row.
pub fn reverse_general_question(
    table: &GeneralTable,
    prior: &CauseDistribution,
    tolerance: f64,
) -> Result<ReversedRows, ElicitationError> {
    let n = table.answers.len();
    if table.answer_prior.len() != n || table.cells.values().any(|r| r.len() != n) {
        return Err(ElicitationError::InvalidInput(
            "table shape does not match its answers".into(),
        ));
    }
    let mut given_cause = IndexMap::new();
    let mut associated_mass = 0.0;
    for (cause, row) in &table.cells {
        let p = prior
            .get(cause)
            .ok_or_else(|| ElicitationError::UnknownCause(cause.clone()))?;
        if p <= 0.0 {
            return Err(ElicitationError::ZeroPrior(cause.clone()));
        }
        associated_mass += p;
        let mixed: f64 = row.iter().zip(&table.answer_prior).map(|(c, q)| c * q).sum();
        let residual = p - mixed;
        if residual.abs() > tolerance {
            return Err(ElicitationError::InconsistentElicitation {
                cause: cause.clone(),
                residual,
            });
        }
        let mut out = Vec::with_capacity(n);
        for (s, (&cell, &q)) in row.iter().zip(&table.answer_prior).enumerate() {
            let v = cell * q / p;
            if !(-1e-12..=1.0 + 1e-9).contains(&v) {
                return Err(ElicitationError::OutOfRange {
                    what: format!("P({} | {})", table.answers[s], cause),
                    value: v,
                });
            }
            out.push(v.clamp(0.0, 1.0));
        }
        given_cause.insert(cause.clone(), normalize(out));
    }

    for s in 0..n {
        let col = table.column_sum(s);
        if col > 1.0 + tolerance {
            return Err(ElicitationError::OutOfRange {
                what: format!("sum of associated causes given '{}'", table.answers[s]),
                value: col,
            });
        }
    }

    let has_others = prior.ids().any(|id| !table.cells.contains_key(id));
    let rest = 1.0 - associated_mass;
    let given_none = if !has_others {
        None
    } else if rest <= 1e-12 {
        // Remaining causes carry no mass; any row is consistent, use the
        // uninformative one.
        Some(table.answer_prior.clone())
    } else {
        let mut out = Vec::with_capacity(n);
        for (s, &q) in table.answer_prior.iter().enumerate() {
            let none_given_s = (1.0 - table.column_sum(s)).max(0.0);
            let v = none_given_s * q / rest;
            if v > 1.0 + 1e-9 {
                return Err(ElicitationError::OutOfRange {
                    what: format!("P({} | none)", table.answers[s]),
                    value: v,
                });
            }
            out.push(v.min(1.0));
        }
        Some(normalize(out))
    };

    Ok(ReversedRows {
        answers: table.answers.clone(),
        given_cause,
        given_none,
    })
}

fn normalize(mut row: Vec<f64>) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        for v in &mut row {
            *v /= total;
        }
    }
    row
}
