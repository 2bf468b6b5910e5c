//! A small ready-made model used by the demos, the CLI tests and the
//! simulation benchmark.

use indexmap::IndexMap;

use crate::model::{
    Action, ActionKind, CauseNode, CostFactors, CostWeights, DependencyRule, ErrorConditionModel, Question,
    QuestionKind,
};

/// Weights used when no profile is configured: one unit per minute, per
/// risk level, per dollar and per insult level.
pub fn standard_weights() -> CostWeights {
    CostWeights {
        profile_name: "standard".into(),
        alpha: 1.0,
        beta: 1.0,
        gamma: 1.0,
        delta: 1.0,
    }
}

fn costs(time: f64, risk: u8, money: f64, insult: u8) -> CostFactors {
    CostFactors {
        time,
        risk,
        money,
        insult,
    }
}

fn cause(id: &str, name: &str, p: f64, explanation: &str) -> CauseNode {
    let mut c = CauseNode::new(id, name, p);
    c.explanation = explanation.into();
    c
}

/// "Light print" on a laser printer: five causes, five actions, two
/// questions and one dependency rule.
pub fn light_print() -> ErrorConditionModel {
    let mut m = ErrorConditionModel::new("light-print", "Light print");
    m.cause_tree.children = vec![
        cause("cartridge", "Toner cartridge", 0.55, "").with_children(vec![
            cause("toner-low", "Toner low", 0.64, "The cartridge is nearly empty."),
            cause(
                "toner-dist",
                "Toner unevenly distributed",
                0.36,
                "Toner has settled on one side.",
            ),
        ]),
        cause(
            "density",
            "Print density set too light",
            0.25,
            "The driver or panel density setting is low.",
        ),
        cause("paper", "Unsuitable paper", 0.12, "Damp or heavily textured media."),
        cause("fuser", "Fuser worn", 0.08, "The fuser no longer bonds toner fully."),
    ];

    let mut shake = Action::repair("shake", "Shake the toner cartridge")
        .solving("toner-dist", 0.9)
        .solving("toner-low", 0.2)
        .costing(costs(2.0, 0, 0.0, 0));
    shake.explanation = "Remove the cartridge, rock it gently five or six times and reinsert it.".into();
    let mut replace = Action::repair("replace-cartridge", "Replace the toner cartridge")
        .solving("toner-low", 1.0)
        .solving("toner-dist", 1.0)
        .costing(costs(5.0, 0, 60.0, 0));
    replace.p_requisites = 0.8;
    let mut density = Action::repair("raise-density", "Raise the print density")
        .solving("density", 0.95)
        .costing(costs(3.0, 0, 0.0, 1));
    density.p_correct = 0.9;
    let paper = Action::repair("load-paper", "Load fresh, plain paper")
        .solving("paper", 0.9)
        .costing(costs(4.0, 0, 0.0, 1));
    let fuser = Action::repair("replace-fuser", "Replace the fuser")
        .solving("fuser", 0.95)
        .costing(costs(30.0, 2, 150.0, 0));
    m.actions = vec![shake, replace, density, paper, fuser];

    m.questions = vec![
        Question {
            id: "uniform".into(),
            name: "Is the whole page evenly light?".into(),
            explanation: "Streaks or faded bands point at the cartridge rather than the settings.".into(),
            answers: vec!["yes".into(), "no".into()],
            costs: costs(1.0, 0, 0.0, 0),
            kind: QuestionKind::Symptom {
                given_cause: IndexMap::from([
                    ("toner-dist".to_string(), vec![0.1, 0.9]),
                    ("toner-low".to_string(), vec![0.4, 0.6]),
                    ("density".to_string(), vec![0.95, 0.05]),
                ]),
                given_none: vec![0.7, 0.3],
            },
        },
        Question {
            id: "settings-changed".into(),
            name: "Were the printer settings changed recently?".into(),
            explanation: String::new(),
            answers: vec!["yes".into(), "no".into()],
            costs: costs(0.5, 0, 0.0, 1),
            kind: QuestionKind::General {
                answer_prior: vec![0.2, 0.8],
                cause_given_answer: IndexMap::from([("density".to_string(), vec![Some(0.8), None])]),
            },
        },
    ];
    m.dependencies = vec![DependencyRule {
        action_id: "raise-density".into(),
        question_id: "settings-changed".into(),
        fixed_answer: "yes".into(),
    }];
    m
}

/// A test action variant is handy for demos of information-only steps.
pub fn with_test_print(mut m: ErrorConditionModel) -> ErrorConditionModel {
    let mut t = Action::repair("test-print", "Print a configuration page")
        .solving("fuser", 0.7)
        .costing(costs(2.0, 0, 0.0, 0));
    t.kind = ActionKind::Test;
    m.actions.push(t);
    m
}
