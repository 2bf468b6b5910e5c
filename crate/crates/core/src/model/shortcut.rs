use indexmap::IndexMap;

use super::{Question, QuestionKind, ShortcutEffect};
use crate::elicitation::{CauseDistribution, ElicitationError};

const TOL: f64 = 1e-12;

/// Rewrites a shortcut question (answers that eliminate or identify causes)
/// as an equivalent general question.
///
/// Cells are pinned by the effects: an eliminated cause gets 0 at that
/// answer, an identified cause gets 1 and every other associated cause 0.
/// The remaining cells of a cause share one value solved from the
/// consistency equation, which is the cause prior itself when nothing
/// constrains the cause. Answer priors come from the pinned cells: a cause
/// whose only admissible answers identify it forces their total mass to its
/// prior; otherwise identifying answers take the cause's mass split evenly
/// over its admissible answers. Answers without an identification share the
/// leftover mass uniformly.
pub fn desugar_shortcut_question(q: &Question, prior: &CauseDistribution) -> Result<Question, ElicitationError> {
    let QuestionKind::Shortcut { effects, .. } = &q.kind else {
        return Err(ElicitationError::InvalidInput(format!(
            "question '{}' is not a shortcut question",
            q.id
        )));
    };
    let n = q.answers.len();
    let mut effect_at: Vec<Option<&ShortcutEffect>> = vec![None; n];
    for (answer, effect) in effects {
        let s = q
            .answer_index(answer)
            .ok_or_else(|| ElicitationError::UnknownAnswer(answer.clone()))?;
        effect_at[s] = Some(effect);
    }

    let causes = q.associated_causes();
    let mut priors = Vec::with_capacity(causes.len());
    for c in &causes {
        priors.push(prior.get(c).ok_or_else(|| ElicitationError::UnknownCause(c.clone()))?);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Cell {
        One,
        Zero,
        Free,
    }
    let pinned: Vec<Vec<Cell>> = causes
        .iter()
        .map(|c| {
            effect_at
                .iter()
                .map(|e| match e {
                    Some(ShortcutEffect::Identifies(id)) if id == c => Cell::One,
                    Some(ShortcutEffect::Identifies(_)) => Cell::Zero,
                    Some(ShortcutEffect::Eliminates(ids)) if ids.contains(c) => Cell::Zero,
                    _ => Cell::Free,
                })
                .collect()
        })
        .collect();

    let mut answer_prior = vec![f64::NAN; n];
    for (i, cause) in causes.iter().enumerate() {
        let identifying: Vec<usize> = (0..n).filter(|&s| pinned[i][s] == Cell::One).collect();
        if identifying.is_empty() {
            continue;
        }
        let free = pinned[i].iter().filter(|c| **c == Cell::Free).count();
        let share = priors[i] / (identifying.len() + free) as f64;
        for s in identifying {
            answer_prior[s] = share;
        }
        if free == 0 && priors[i] <= 0.0 {
            return Err(ElicitationError::InfeasibleShortcut(format!(
                "'{cause}' is identified but has zero prior"
            )));
        }
    }
    let assigned: f64 = answer_prior.iter().filter(|p| !p.is_nan()).sum();
    let open: Vec<usize> = (0..n).filter(|&s| answer_prior[s].is_nan()).collect();
    let leftover = 1.0 - assigned;
    if leftover < -TOL {
        return Err(ElicitationError::InfeasibleShortcut(format!(
            "identified causes need answer mass {assigned} > 1"
        )));
    }
    if open.is_empty() {
        if leftover.abs() > 1e-9 {
            return Err(ElicitationError::InfeasibleShortcut(format!(
                "every answer identifies a cause but the identified causes carry mass {assigned}, not 1"
            )));
        }
    } else {
        let each = leftover.max(0.0) / open.len() as f64;
        for s in open {
            answer_prior[s] = each;
        }
    }

    let mut cause_given_answer = IndexMap::new();
    for (i, cause) in causes.iter().enumerate() {
        let p = priors[i];
        let identified_mass: f64 = (0..n)
            .filter(|&s| pinned[i][s] == Cell::One)
            .map(|s| answer_prior[s])
            .sum();
        let free_mass: f64 = (0..n)
            .filter(|&s| pinned[i][s] == Cell::Free)
            .map(|s| answer_prior[s])
            .sum();
        let free_value = if free_mass > 0.0 {
            (p - identified_mass) / free_mass
        } else if (p - identified_mass).abs() <= 1e-9 {
            p
        } else {
            return Err(ElicitationError::InfeasibleShortcut(format!(
                "every answer rules out '{cause}' but its prior is {p}"
            )));
        };
        if !(-TOL..=1.0 + TOL).contains(&free_value) {
            return Err(ElicitationError::InfeasibleShortcut(format!(
                "'{cause}' would need P(cause | unconstrained answer) = {free_value}"
            )));
        }
        let free_value = free_value.clamp(0.0, 1.0);
        let row = pinned[i]
            .iter()
            .map(|c| {
                Some(match c {
                    Cell::One => 1.0,
                    Cell::Zero => 0.0,
                    Cell::Free => free_value,
                })
            })
            .collect();
        cause_given_answer.insert(cause.clone(), row);
    }

    for s in 0..n {
        let col: f64 = cause_given_answer
            .values()
            .map(|r: &Vec<Option<f64>>| r[s].unwrap_or_default())
            .sum();
        if col > 1.0 + TOL {
            return Err(ElicitationError::InfeasibleShortcut(format!(
                "associated causes given '{}' would sum to {col}",
                q.answers[s]
            )));
        }
    }

    Ok(Question {
        kind: QuestionKind::General {
            answer_prior,
            cause_given_answer,
        },
        ..q.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicitation::{complete_general, max_abs_residual};
    use crate::model::CostFactors;

    fn shortcut(answers: &[&str], effects: Vec<(&str, ShortcutEffect)>, associated: &[&str]) -> Question {
        Question {
            id: "q".into(),
            name: "q".into(),
            explanation: String::new(),
            answers: answers.iter().map(|a| a.to_string()).collect(),
            costs: CostFactors::default(),
            kind: QuestionKind::Shortcut {
                effects: effects.into_iter().map(|(a, e)| (a.to_string(), e)).collect(),
                associated: associated.iter().map(|a| a.to_string()).collect(),
            },
        }
    }

    fn general_parts(q: &Question) -> (&Vec<f64>, &IndexMap<String, Vec<Option<f64>>>) {
        match &q.kind {
            QuestionKind::General {
                answer_prior,
                cause_given_answer,
            } => (answer_prior, cause_given_answer),
            _ => panic!("not general"),
        }
    }

    #[test]
    fn identify_and_eliminate_force_the_answer_prior() {
        let prior = CauseDistribution::from_pairs([("F1", 0.2), ("F2", 0.8)]);
        let q = shortcut(
            &["yes", "no"],
            vec![
                ("yes", ShortcutEffect::Identifies("F1".into())),
                ("no", ShortcutEffect::Eliminates(vec!["F1".into()])),
            ],
            &[],
        );
        let g = desugar_shortcut_question(&q, &prior).unwrap();
        let (ap, cells) = general_parts(&g);
        assert!((ap[0] - 0.2).abs() < 1e-15);
        assert!((ap[1] - 0.8).abs() < 1e-15);
        assert_eq!(cells["F1"], vec![Some(1.0), Some(0.0)]);
    }

    #[test]
    fn unconstrained_cause_stays_at_its_prior() {
        let prior = CauseDistribution::from_pairs([("F1", 0.1), ("F2", 0.2), ("F3", 0.7)]);
        let q = shortcut(
            &["yes", "no"],
            vec![("yes", ShortcutEffect::Eliminates(vec!["F1".into()]))],
            &["F2"],
        );
        let g = desugar_shortcut_question(&q, &prior).unwrap();
        let (_, cells) = general_parts(&g);
        assert_eq!(cells["F2"], vec![Some(0.2), Some(0.2)]);
        let t = complete_general(&g, &prior).unwrap();
        assert!(max_abs_residual(&t, &prior) < 1e-9);
    }

    #[test]
    fn three_answer_mixture_is_consistent() {
        // "a" eliminates F1 and F2, "b" identifies F1, "c" says nothing.
        let prior = CauseDistribution::from_pairs([("F1", 0.1), ("F2", 0.2), ("F3", 0.7)]);
        let q = shortcut(
            &["a", "b", "c"],
            vec![
                ("a", ShortcutEffect::Eliminates(vec!["F1".into(), "F2".into()])),
                ("b", ShortcutEffect::Identifies("F1".into())),
            ],
            &[],
        );
        let g = desugar_shortcut_question(&q, &prior).unwrap();
        let (ap, cells) = general_parts(&g);
        // F1 is admissible at b and c: b gets half of 0.1; a and c split the rest.
        assert!((ap[1] - 0.05).abs() < 1e-15);
        assert!((ap[0] - 0.475).abs() < 1e-15);
        assert!((ap[2] - 0.475).abs() < 1e-15);
        assert_eq!(cells["F1"][0], Some(0.0));
        assert_eq!(cells["F1"][1], Some(1.0));
        assert_eq!(cells["F2"][..2], [Some(0.0), Some(0.0)]);
        let t = complete_general(&g, &prior).unwrap();
        assert!(max_abs_residual(&t, &prior) < 1e-9);
        // Residuals by hand: F1 = 0.05 * 1 + 0.475 * (0.05 / 0.475), F2 = 0.475 * (0.2 / 0.475).
        assert!((t.cells["F1"][2] - 0.05 / 0.475).abs() < 1e-15);
        assert!((t.cells["F2"][2] - 0.2 / 0.475).abs() < 1e-15);
    }

    #[test]
    fn all_answers_eliminating_is_infeasible() {
        let prior = CauseDistribution::from_pairs([("F1", 0.3), ("F2", 0.7)]);
        let q = shortcut(
            &["yes", "no"],
            vec![
                ("yes", ShortcutEffect::Eliminates(vec!["F1".into()])),
                ("no", ShortcutEffect::Eliminates(vec!["F1".into()])),
            ],
            &[],
        );
        assert!(matches!(
            desugar_shortcut_question(&q, &prior),
            Err(ElicitationError::InfeasibleShortcut(_))
        ));
    }

    #[test]
    fn unassociated_causes_are_left_alone() {
        let prior = CauseDistribution::from_pairs([("F1", 0.3), ("F2", 0.7)]);
        let q = shortcut(
            &["yes", "no"],
            vec![("no", ShortcutEffect::Eliminates(vec!["F1".into()]))],
            &[],
        );
        let g = desugar_shortcut_question(&q, &prior).unwrap();
        let (_, cells) = general_parts(&g);
        assert_eq!(cells.keys().collect::<Vec<_>>(), ["F1"]);
    }
}
