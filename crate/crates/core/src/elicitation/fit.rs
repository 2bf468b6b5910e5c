//! "Fit probabilities": reconcile qualitative up/down wishes on
//! P(cause | answer) with the consistency equation.
//!
//! A wish level k in -3..=3 asks for P(F | s) = 3^k P(F). Causes are fitted
//! one at a time. Answers without a wish share a single scale factor solved
//! so the equation holds exactly; when that is impossible the strongest
//! wish is weakened one arrow at a time. A last arrow is not dropped
//! outright if a fractional level still moves the cell in the wished
//! direction.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{eq2_residuals, CauseDistribution, ElicitationError, GeneralTable};

pub const MAX_WISH_LEVEL: i8 = 3;
const WISH_BASE: f64 = 3.0;
const EXACT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wish {
    pub cause: String,
    pub answer: String,
    pub level: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WishTable {
    pub wishes: Vec<Wish>,
}

impl WishTable {
    pub fn push(&mut self, cause: impl Into<String>, answer: impl Into<String>, level: i8) {
        self.wishes.push(Wish {
            cause: cause.into(),
            answer: answer.into(),
            level,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum WishStatus {
    Satisfied,
    PartiallySatisfied { level: f64 },
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WishOutcome {
    pub cause: String,
    pub answer: String,
    pub requested: i8,
    #[serde(flatten)]
    pub status: WishStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CauseOutcome {
    /// Every wish met at its requested level.
    Satisfied,
    /// At least one wish weakened or dropped.
    PartiallySatisfied,
    /// A column had to be scaled down afterwards, breaking the equation
    /// for this cause.
    Rescaled,
    /// No wishes given; the cells were left as they were.
    Untouched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseFit {
    pub cause: String,
    pub outcome: CauseOutcome,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostic {
    pub answer: String,
    pub sum: f64,
    pub rescaled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub wishes: Vec<WishOutcome>,
    pub causes: Vec<CauseFit>,
    pub columns: Vec<ColumnDiagnostic>,
}

/// Fits the table of a general question to the expert's wishes. Answer
/// priors are held fixed. Causes without any wish keep their cells.
pub fn fit_probabilities(
    table: &GeneralTable,
    wishes: &WishTable,
    prior: &CauseDistribution,
) -> Result<(GeneralTable, FitReport), ElicitationError> {
    let n = table.answers.len();
    if table.answer_prior.len() != n || table.cells.values().any(|r| r.len() != n) {
        return Err(ElicitationError::InvalidInput(
            "table shape does not match its answers".into(),
        ));
    }
    if let Some(s) = table.answer_prior.iter().position(|q| !(*q > 0.0)) {
        return Err(ElicitationError::InvalidInput(format!(
            "answer '{}' needs a positive prior",
            table.answers[s]
        )));
    }

    let mut seen = HashSet::new();
    for w in &wishes.wishes {
        if !table.cells.contains_key(&w.cause) {
            return Err(ElicitationError::UnknownCause(w.cause.clone()));
        }
        if table.answer_index(&w.answer).is_none() {
            return Err(ElicitationError::UnknownAnswer(w.answer.clone()));
        }
        if w.level.abs() > MAX_WISH_LEVEL {
            return Err(ElicitationError::InvalidInput(format!(
                "wish level {} outside -3..=3",
                w.level
            )));
        }
        if !seen.insert((w.cause.as_str(), w.answer.as_str())) {
            return Err(ElicitationError::InvalidInput(format!(
                "two wishes for ({}, {})",
                w.cause, w.answer
            )));
        }
    }

    let mut fitted = table.clone();
    let mut used_levels: Vec<f64> = vec![0.0; wishes.wishes.len()];
    let mut outcomes = Vec::with_capacity(table.cells.len());

    for (cause, cells) in fitted.cells.iter_mut() {
        let mine: Vec<(usize, usize)> = wishes
            .wishes
            .iter()
            .enumerate()
            .filter(|(_, w)| &w.cause == cause)
            .map(|(i, w)| (i, table.answer_index(&w.answer).unwrap_or_default()))
            .collect();
        if mine.is_empty() {
            outcomes.push(CauseOutcome::Untouched);
            continue;
        }
        let p = prior
            .get(cause)
            .ok_or_else(|| ElicitationError::UnknownCause(cause.clone()))?;
        if !(p > 0.0) {
            return Err(ElicitationError::ZeroPrior(cause.clone()));
        }
        let mut levels = vec![0.0; n];
        for &(i, s) in &mine {
            levels[s] = f64::from(wishes.wishes[i].level);
        }
        *cells = fit_cause(p, &table.answer_prior, &mut levels);
        let mut all_met = true;
        for &(i, s) in &mine {
            used_levels[i] = levels[s];
            all_met &= levels[s] == f64::from(wishes.wishes[i].level);
        }
        outcomes.push(if all_met {
            CauseOutcome::Satisfied
        } else {
            CauseOutcome::PartiallySatisfied
        });
    }

    let mut columns = Vec::with_capacity(n);
    for s in 0..n {
        let sum = fitted.column_sum(s);
        let rescaled = sum > 1.0 + 1e-12;
        if rescaled {
            for (k, row) in fitted.cells.values_mut().enumerate() {
                if row[s] > 0.0 && outcomes[k] != CauseOutcome::Untouched {
                    outcomes[k] = CauseOutcome::Rescaled;
                }
                row[s] /= sum;
            }
        }
        columns.push(ColumnDiagnostic {
            answer: table.answers[s].clone(),
            sum,
            rescaled,
        });
    }

    let residuals = eq2_residuals(&fitted, prior);
    let causes = fitted
        .cells
        .keys()
        .zip(outcomes)
        .map(|(cause, outcome)| CauseFit {
            cause: cause.clone(),
            outcome,
            residual: residuals[cause],
        })
        .collect();

    let wishes = wishes
        .wishes
        .iter()
        .zip(used_levels)
        .map(|(w, used)| {
            let status = if used == f64::from(w.level) {
                WishStatus::Satisfied
            } else if used == 0.0 {
                WishStatus::Dropped
            } else {
                WishStatus::PartiallySatisfied { level: used }
            };
            WishOutcome {
                cause: w.cause.clone(),
                answer: w.answer.clone(),
                requested: w.level,
                status,
            }
        })
        .collect();

    Ok((
        fitted,
        FitReport {
            wishes,
            causes,
            columns,
        },
    ))
}

/// Fits one cause. `levels` holds the requested level per answer on entry and
/// the level actually used on exit.
fn fit_cause(p: f64, answer_prior: &[f64], levels: &mut [f64]) -> Vec<f64> {
    let mut fractional_tried = vec![false; levels.len()];
    loop {
        if let Some(cells) = evaluate(p, answer_prior, levels) {
            return cells;
        }
        // Strongest wish first, earliest answer on ties.
        let mut j = 0;
        for s in 1..levels.len() {
            if levels[s].abs() > levels[j].abs() {
                j = s;
            }
        }
        debug_assert!(levels[j] != 0.0, "all-neutral levels are always feasible");
        if levels[j].abs() > 1.0 {
            levels[j] -= levels[j].signum();
        } else if !fractional_tried[j] {
            fractional_tried[j] = true;
            levels[j] = fractional_level(p, answer_prior, levels, j).unwrap_or(0.0);
        } else {
            levels[j] = 0.0;
        }
    }
}

fn candidate(p: f64, level: f64) -> f64 {
    WISH_BASE.powf(level) * p
}

/// Cells for the given levels, or `None` if they violate the equation or
/// leave [0, 1].
fn evaluate(p: f64, answer_prior: &[f64], levels: &[f64]) -> Option<Vec<f64>> {
    let mut cells = vec![0.0; levels.len()];
    let mut wished_mass = 0.0;
    let mut neutral_mass = 0.0;
    for (s, &k) in levels.iter().enumerate() {
        if k == 0.0 {
            neutral_mass += answer_prior[s];
        } else {
            let c = candidate(p, k);
            if c > 1.0 {
                return None;
            }
            cells[s] = c;
            wished_mass += c * answer_prior[s];
        }
    }
    if neutral_mass > 0.0 {
        let lambda = (p - wished_mass) / (p * neutral_mass);
        if lambda < -1e-12 || lambda * p > 1.0 {
            return None;
        }
        let fill = lambda.max(0.0) * p;
        for (s, &k) in levels.iter().enumerate() {
            if k == 0.0 {
                cells[s] = fill;
            }
        }
    } else if (p - wished_mass).abs() > EXACT {
        return None;
    }
    Some(cells)
}

/// Largest-margin fractional level in (0, 1) (or (-1, 0)) for wish `j` that
/// makes the cause feasible with the other levels held fixed.
fn fractional_level(p: f64, answer_prior: &[f64], levels: &[f64], j: usize) -> Option<f64> {
    let sign = levels[j].signum();
    let pj = answer_prior[j];
    let mut others = 0.0;
    let mut neutral = 0.0;
    for (s, &k) in levels.iter().enumerate() {
        if s == j {
            continue;
        }
        if k == 0.0 {
            neutral += answer_prior[s];
        } else {
            let c = candidate(p, k);
            if c > 1.0 {
                return None;
            }
            others += c * answer_prior[s];
        }
    }

    let in_direction = |t: f64| t * sign > 0.0 && t.abs() < 1.0;
    if neutral == 0.0 {
        let c = (p - others) / pj;
        if !(c > 0.0 && c <= 1.0) {
            return None;
        }
        let t = (c / p).log(WISH_BASE);
        return in_direction(t).then_some(t);
    }

    // Neutral answers absorb the difference: lambda in [0, 1/p].
    let hi = ((p - others) / pj).min(1.0);
    let lo = ((p - others - neutral) / pj).max(0.0);
    if hi <= lo {
        return None;
    }
    let to_level = |c: f64| {
        if c > 0.0 {
            (c / p).log(WISH_BASE)
        } else {
            f64::NEG_INFINITY
        }
    };
    let (t_lo, t_hi) = (to_level(lo), to_level(hi));
    let (a, b) = if sign > 0.0 {
        (t_lo.max(0.0), t_hi.min(1.0))
    } else {
        (t_lo.max(-1.0), t_hi.min(0.0))
    };
    if b - a <= 1e-12 {
        return None;
    }
    let t = 0.5 * (a + b);
    in_direction(t).then_some(t)
}
