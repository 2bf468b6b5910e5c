use serde::{Deserialize, Serialize};

use super::{CauseDistribution, ElicitationError, GeneralTable};

/// A dragged slider: the cell P(I = cause | Q = answer) moved to `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliderEdit {
    pub cause: String,
    pub answer: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellChange {
    pub cause: String,
    pub answer: String,
    pub old: f64,
    pub new: f64,
}

/// Moves one cell and restores the consistency equation for its cause by
/// rescaling that cause's cells at the other answers. Answer priors, cause
/// priors and the rows of other causes are never touched.
pub fn slider_update(
    table: &GeneralTable,
    prior: &CauseDistribution,
    edit: &SliderEdit,
) -> Result<(GeneralTable, Vec<CellChange>), ElicitationError> {
    if !(0.0..=1.0).contains(&edit.value) {
        return Err(ElicitationError::InvalidInput(format!(
            "{} is not a probability",
            edit.value
        )));
    }
    let target = table
        .answer_index(&edit.answer)
        .ok_or_else(|| ElicitationError::UnknownAnswer(edit.answer.clone()))?;
    let old_row = table
        .cells
        .get(&edit.cause)
        .ok_or_else(|| ElicitationError::UnknownCause(edit.cause.clone()))?;
    let p = prior
        .get(&edit.cause)
        .ok_or_else(|| ElicitationError::UnknownCause(edit.cause.clone()))?;
    let q_target = table.answer_prior[target];
    if !(q_target > 0.0) {
        return Err(ElicitationError::InvalidInput(format!(
            "answer '{}' has zero prior; its cells carry no weight",
            edit.answer
        )));
    }

    let value = edit.value.min(p / q_target);
    if value == old_row[target] {
        return Ok((table.clone(), Vec::new()));
    }

    let remaining = p - value * q_target;
    let mut weighted = 0.0;
    let mut other_mass = 0.0;
    for (s, (&cell, &q)) in old_row.iter().zip(&table.answer_prior).enumerate() {
        if s != target {
            weighted += cell * q;
            other_mass += q;
        }
    }

    let mut new_row = old_row.clone();
    new_row[target] = value;
    if weighted > 0.0 {
        let scale = remaining / weighted;
        for (s, cell) in new_row.iter_mut().enumerate() {
            if s != target {
                *cell *= scale;
            }
        }
    } else if other_mass > 0.0 {
        let fill = remaining / other_mass;
        for (s, cell) in new_row.iter_mut().enumerate() {
            if s != target {
                *cell = fill;
            }
        }
    } else if remaining.abs() > 1e-12 {
        return Err(ElicitationError::InfeasibleAdjustment {
            cause: edit.cause.clone(),
            answer: edit.answer.clone(),
            value: remaining,
        });
    }

    if let Some((s, &v)) = new_row.iter().enumerate().find(|(_, v)| **v > 1.0 || **v < 0.0) {
        return Err(ElicitationError::InfeasibleAdjustment {
            cause: edit.cause.clone(),
            answer: table.answers[s].clone(),
            value: v,
        });
    }

    let changes = old_row
        .iter()
        .zip(&new_row)
        .enumerate()
        .filter(|(_, (o, n))| o != n)
        .map(|(s, (&old, &new))| CellChange {
            cause: edit.cause.clone(),
            answer: table.answers[s].clone(),
            old,
            new,
        })
        .collect();

    let mut updated = table.clone();
    updated.cells[&edit.cause] = new_row;
    Ok((updated, changes))
}
