//! Compiles an [`ErrorConditionModel`] into the naive-Bayes network the
//! engine runs on: the cause-indicator prior plus, for every step, a table
//! P(outcome | I = F) over all leaf causes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elicitation::{
    action_solve_probability, collapse_cause_tree, combine_costs, complete_general, reverse_general_question,
    CauseDistribution, ElicitationError, ELICITED_TOLERANCE,
};
use crate::model::{validate_model, ActionKind, DependencyRule, ErrorConditionModel, QuestionKind, ValidationReport};

pub const YES: &str = "yes";
pub const NO: &str = "no";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    RepairAction,
    TestAction,
    Question,
}

impl StepKind {
    pub fn is_action(self) -> bool {
        matches!(self, StepKind::RepairAction | StepKind::TestAction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledStep {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub explanation: String,
    pub kind: StepKind,
    pub outcomes: Vec<String>,
    /// `likelihood[o][f]` = P(outcome o | I = leaf f), leaves in prior order.
    pub likelihood: Vec<Vec<f64>>,
    pub cost: f64,
}

impl CompiledStep {
    pub fn outcome_index(&self, outcome: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledNetwork {
    pub model_id: String,
    pub profile: String,
    pub prior: CauseDistribution,
    pub steps: Vec<CompiledStep>,
    #[serde(default)]
    pub dependencies: Vec<DependencyRule>,
}

impl CompiledNetwork {
    pub fn step(&self, id: &str) -> Option<&CompiledStep> {
        self.steps.iter().find(|s| s.id == id)
    }

    pub fn step_index(&self, id: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.id == id)
    }

    pub fn cause_count(&self) -> usize {
        self.prior.len()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("model has validation errors ({})", .0.summary())]
    CompileBlocked(ValidationReport),
    #[error("cost weights '{0}' must be non-negative with at least one positive weight")]
    InvalidWeights(String),
    #[error("step '{step_id}': {source}")]
    Step {
        step_id: String,
        #[source]
        source: ElicitationError,
    },
    #[error("question '{0}' is associated with no cause")]
    EmptyQuestion(String),
    #[error(transparent)]
    Tree(ElicitationError),
}

impl CompileError {
    pub fn code(&self) -> &'static str {
        match self {
            CompileError::CompileBlocked(_) => "CompileBlocked",
            CompileError::InvalidWeights(_) => "InvalidWeights",
            CompileError::Step { .. } => "StepError",
            CompileError::EmptyQuestion(_) => "EmptyQuestion",
            CompileError::Tree(_) => "TreeError",
        }
    }
}

pub fn compile_model(
    model: &ErrorConditionModel,
    weights: &crate::model::CostWeights,
) -> Result<CompiledNetwork, CompileError> {
    let report = validate_model(model);
    if !report.is_ok() {
        return Err(CompileError::CompileBlocked(report));
    }
    if !weights.is_valid() {
        return Err(CompileError::InvalidWeights(weights.profile_name.clone()));
    }
    let prior = collapse_cause_tree(&model.cause_tree).map_err(CompileError::Tree)?;
    let leaves: Vec<&str> = prior.ids().collect();

    let mut steps = Vec::with_capacity(model.actions.len() + model.questions.len());
    for action in &model.actions {
        let yes: Vec<f64> = leaves
            .iter()
            .map(|f| {
                action.solves.get(*f).map_or(0.0, |&base| {
                    action_solve_probability(base, action.p_correct, action.p_requisites)
                })
            })
            .collect();
        let no = yes.iter().map(|p| 1.0 - p).collect();
        steps.push(CompiledStep {
            id: action.id.clone(),
            name: action.name.clone(),
            explanation: action.explanation.clone(),
            kind: match action.kind {
                ActionKind::Repair => StepKind::RepairAction,
                ActionKind::Test => StepKind::TestAction,
            },
            outcomes: vec![YES.into(), NO.into()],
            likelihood: vec![yes, no],
            cost: combine_costs(&action.costs, weights),
        });
    }

    for q in &model.questions {
        if q.associated_causes().is_empty() {
            return Err(CompileError::EmptyQuestion(q.id.clone()));
        }
        let step_err = |source| CompileError::Step {
            step_id: q.id.clone(),
            source,
        };
        let n = q.answers.len();
        let mut likelihood = vec![Vec::with_capacity(leaves.len()); n];
        match &q.kind {
            QuestionKind::Symptom {
                given_cause,
                given_none,
            } => {
                for f in &leaves {
                    let row = match given_cause.get(*f) {
                        Some(row) => row,
                        None if given_none.len() == n => given_none,
                        None => {
                            return Err(step_err(ElicitationError::InvalidInput(format!(
                                "no row for cause '{f}'"
                            ))))
                        }
                    };
                    for (s, p) in row.iter().enumerate() {
                        likelihood[s].push(*p);
                    }
                }
            }
            QuestionKind::General { .. } | QuestionKind::Shortcut { .. } => {
                let table = complete_general(q, &prior).map_err(step_err)?;
                let rows = reverse_general_question(&table, &prior, ELICITED_TOLERANCE).map_err(step_err)?;
                for f in &leaves {
                    let row = rows.row_for(f).unwrap_or(&table.answer_prior);
                    for (s, p) in row.iter().enumerate() {
                        likelihood[s].push(*p);
                    }
                }
            }
        }
        steps.push(CompiledStep {
            id: q.id.clone(),
            name: q.name.clone(),
            explanation: q.explanation.clone(),
            kind: StepKind::Question,
            outcomes: q.answers.clone(),
            likelihood,
            cost: combine_costs(&q.costs, weights),
        });
    }

    Ok(CompiledNetwork {
        model_id: model.id.clone(),
        profile: weights.profile_name.clone(),
        prior,
        steps,
        dependencies: model.dependencies.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Action, CauseNode, CostFactors, CostWeights, Question};
    use indexmap::IndexMap;

    fn model() -> ErrorConditionModel {
        let mut m = ErrorConditionModel::new("m", "M");
        m.cause_tree.children = vec![
            CauseNode::new("F1", "f1", 0.2),
            CauseNode::new("F2", "f2", 0.3),
            CauseNode::new("F3", "f3", 0.5),
        ];
        let mut a = Action::repair("A", "a")
            .solving("F1", 1.0)
            .costing(CostFactors::minutes(3.0));
        a.p_correct = 0.9;
        m.actions = vec![a, Action::repair("B", "b").solving("F2", 1.0).solving("F3", 1.0)];
        m.questions = vec![Question {
            id: "Q".into(),
            name: "q".into(),
            explanation: String::new(),
            answers: vec!["yes".into(), "no".into()],
            costs: CostFactors::minutes(1.0),
            kind: QuestionKind::General {
                answer_prior: vec![0.3, 0.7],
                cause_given_answer: IndexMap::from([("F1".to_string(), vec![Some(0.5), Some(1.0 / 14.0)])]),
            },
        }];
        m
    }

    #[test]
    fn action_rows() {
        let net = compile_model(&model(), &CostWeights::time_only()).unwrap();
        let a = net.step("A").unwrap();
        assert_eq!(a.kind, StepKind::RepairAction);
        assert_eq!(a.likelihood[0], vec![0.9, 0.0, 0.0]);
        assert!((a.likelihood[1][0] - 0.1).abs() < 1e-15);
        assert_eq!(a.likelihood[1][1], 1.0);
        assert_eq!(a.cost, 3.0);
    }

    #[test]
    fn general_question_rows_are_reversed() {
        let net = compile_model(&model(), &CostWeights::time_only()).unwrap();
        let q = net.step("Q").unwrap();
        let expected_yes = [0.75, 0.1875, 0.1875];
        for (f, want) in expected_yes.iter().enumerate() {
            assert!((q.likelihood[0][f] - want).abs() < 1e-12);
            assert!((q.likelihood[0][f] + q.likelihood[1][f] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn validation_errors_block_compilation() {
        let mut m = model();
        m.cause_tree.children[0].cond_prob = Some(0.3);
        assert!(matches!(
            compile_model(&m, &CostWeights::time_only()),
            Err(CompileError::CompileBlocked(_))
        ));
    }

    #[test]
    fn inconsistent_question_names_the_step() {
        let mut m = model();
        m.questions[0].kind = QuestionKind::General {
            answer_prior: vec![0.3, 0.7],
            cause_given_answer: IndexMap::from([("F1".to_string(), vec![Some(0.5), Some(0.5)])]),
        };
        match compile_model(&m, &CostWeights::time_only()) {
            Err(CompileError::Step { step_id, source }) => {
                assert_eq!(step_id, "Q");
                assert!(matches!(source, ElicitationError::InconsistentElicitation { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let a = compile_model(&model(), &CostWeights::time_only()).unwrap();
        let b = compile_model(&model(), &CostWeights::time_only()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
