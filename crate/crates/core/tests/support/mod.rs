//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use bats_core::compiler::{CompiledNetwork, CompiledStep, StepKind, NO, YES};
use bats_core::elicitation::CauseDistribution;
use bats_core::model::{
    p_correct_from_inaccuracy, Action, CauseNode, CostFactors, ErrorConditionModel, Question, QuestionKind,
};
use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// `n` strictly positive weights summing to 1.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Random valid tree: depth at most `max_depth` below the root, at most
/// `max_branch` children per node.
pub fn random_tree(rng: &mut ChaCha8Rng, max_depth: usize, max_branch: usize) -> CauseNode {
    let mut next = 0usize;
    let mut root = CauseNode::new("root", "Root", 1.0);
    root.children = children(rng, 1, max_depth, max_branch, &mut next);
    root
}

fn children(
    rng: &mut ChaCha8Rng,
    depth: usize,
    max_depth: usize,
    max_branch: usize,
    next: &mut usize,
) -> Vec<CauseNode> {
    let n = rng.random_range(1..=max_branch);
    simplex(rng, n)
        .into_iter()
        .map(|p| {
            *next += 1;
            let mut node = CauseNode::new(format!("c{next}"), format!("Cause {next}"), p);
            let expand = depth < max_depth && rng.random_bool(0.6 / depth as f64);
            if expand {
                node.children = children(rng, depth + 1, max_depth, max_branch, next);
            }
            node
        })
        .collect()
}

/// A flat tree with the given leaf probabilities.
pub fn flat_tree(prior: &[f64]) -> CauseNode {
    let mut root = CauseNode::new("root", "Root", 1.0);
    root.children = prior
        .iter()
        .enumerate()
        .map(|(i, p)| CauseNode::new(format!("F{i}"), format!("Cause {i}"), *p))
        .collect();
    root
}

/// A consistent general question derived from a hidden joint: random rows
/// P(s | F) give P(s) and P(F | s) by Bayes. Returns the question and the
/// elicited cells of the associated causes.
pub fn consistent_general(
    rng: &mut ChaCha8Rng,
    id: &str,
    leaves: &[(String, f64)],
    answers: usize,
    associated: usize,
    null_cell: bool,
) -> (Question, IndexMap<String, Vec<f64>>) {
    let rows: Vec<Vec<f64>> = leaves.iter().map(|_| simplex(rng, answers)).collect();
    let q: Vec<f64> = (0..answers)
        .map(|s| rows.iter().zip(leaves).map(|(r, (_, p))| r[s] * p).sum())
        .collect();
    let mut picked: Vec<usize> = (0..leaves.len()).collect();
    picked.shuffle(rng);
    picked.truncate(associated.clamp(1, leaves.len()));
    let mut cells = IndexMap::new();
    let mut elicited = IndexMap::new();
    for &f in &picked {
        let (id, p) = &leaves[f];
        let row: Vec<f64> = (0..answers).map(|s| rows[f][s] * p / q[s]).collect();
        let mut given: Vec<Option<f64>> = row.iter().map(|v| Some(*v)).collect();
        if null_cell && answers == 2 && rng.random_bool(0.5) {
            given[rng.random_range(0..2)] = None;
        }
        elicited.insert(id.clone(), row);
        cells.insert(id.clone(), given);
    }
    let question = Question {
        id: id.into(),
        name: format!("Question {id}"),
        explanation: String::new(),
        answers: answer_labels(answers),
        costs: CostFactors::minutes(rng.random_range(0.0..3.0)),
        kind: QuestionKind::General {
            answer_prior: q,
            cause_given_answer: cells,
        },
    };
    (question, elicited)
}

pub fn answer_labels(n: usize) -> Vec<String> {
    if n == 2 {
        vec![YES.into(), NO.into()]
    } else {
        (0..n).map(|s| format!("a{s}")).collect()
    }
}

pub fn symptom(rng: &mut ChaCha8Rng, id: &str, leaves: &[String], answers: usize, associated: usize) -> Question {
    let mut picked: Vec<&String> = leaves.iter().collect();
    picked.shuffle(rng);
    picked.truncate(associated.clamp(1, leaves.len()));
    Question {
        id: id.into(),
        name: format!("Symptom {id}"),
        explanation: String::new(),
        answers: answer_labels(answers),
        costs: CostFactors::minutes(rng.random_range(0.0..3.0)),
        kind: QuestionKind::Symptom {
            given_cause: picked.into_iter().map(|f| (f.clone(), simplex(rng, answers))).collect(),
            given_none: simplex(rng, answers),
        },
    }
}

pub fn random_action(rng: &mut ChaCha8Rng, id: &str, leaves: &[String], max_solved: usize) -> Action {
    let mut picked: Vec<&String> = leaves.iter().collect();
    picked.shuffle(rng);
    let k = rng.random_range(1..=max_solved.min(leaves.len()));
    let mut a = Action::repair(id, format!("Action {id}"));
    for f in picked.into_iter().take(k) {
        a.solves.insert(f.clone(), rng.random_range(0.1..=1.0));
    }
    a.p_correct = p_correct_from_inaccuracy(rng.random_range(0..=4));
    a.p_requisites = rng.random_range(0.7..=1.0);
    a.costs = CostFactors {
        time: rng.random_range(0.5..20.0),
        risk: rng.random_range(0..=2),
        money: rng.random_range(0.0..50.0),
        insult: rng.random_range(0..=1),
    };
    a
}

/// A small valid model: at most `leaves` causes, `actions` actions and
/// `questions` binary questions.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    tag: usize,
    leaves: usize,
    actions: usize,
    questions: usize,
) -> ErrorConditionModel {
    let n = rng.random_range(2..=leaves);
    let prior = simplex(rng, n);
    let mut m = ErrorConditionModel::new(format!("model-{tag}"), format!("Error condition {tag}"));
    m.cause_tree = flat_tree(&prior);
    m.cause_tree.id = m.id.clone();
    m.cause_tree.name = m.name.clone();
    let ids: Vec<String> = m.cause_tree.leaf_ids();
    let pairs: Vec<(String, f64)> = ids.iter().cloned().zip(prior).collect();
    for a in 0..rng.random_range(1..=actions) {
        m.actions.push(random_action(rng, &format!("A{a}"), &ids, 2));
    }
    for q in 0..rng.random_range(0..=questions) {
        let qid = format!("Q{q}");
        let k = rng.random_range(1..=n);
        let question = if rng.random_bool(0.5) {
            symptom(rng, &qid, &ids, 2, k)
        } else {
            consistent_general(rng, &qid, &pairs, 2, k, true).0
        };
        m.questions.push(question);
    }
    m
}

pub fn binary_step(id: &str, kind: StepKind, yes: Vec<f64>, cost: f64) -> CompiledStep {
    let no = yes.iter().map(|p| 1.0 - p).collect();
    CompiledStep {
        id: id.into(),
        name: id.into(),
        explanation: String::new(),
        kind,
        outcomes: vec![YES.into(), NO.into()],
        likelihood: vec![yes, no],
        cost,
    }
}

pub fn network(prior: &[f64], steps: Vec<CompiledStep>) -> CompiledNetwork {
    CompiledNetwork {
        model_id: "net".into(),
        profile: "test".into(),
        prior: CauseDistribution::from_pairs(prior.iter().enumerate().map(|(i, p)| (format!("F{i}"), *p))),
        steps,
        dependencies: vec![],
    }
}

/// Draws an outcome index from the rows of a step for cause `f`.
pub fn draw(rng: &mut ChaCha8Rng, step: &CompiledStep, f: usize) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (o, row) in step.likelihood.iter().enumerate() {
        acc += row[f];
        if u < acc {
            return o;
        }
    }
    step.likelihood.len() - 1
}

pub fn draw_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// The scale benchmark: 20 groups of 10 leaf causes, 50 actions and 30
/// questions (15 binary symptoms, 10 binary general, 5 three-way symptoms).
pub fn scale_model(seed: u64) -> ErrorConditionModel {
    let mut rng = rng(seed);
    let mut m = ErrorConditionModel::new("scale", "Scale benchmark");
    let groups = simplex(&mut rng, 20);
    m.cause_tree.children = groups
        .iter()
        .enumerate()
        .map(|(g, p)| {
            let mut node = CauseNode::new(format!("g{g}"), format!("Group {g}"), *p);
            node.children = simplex(&mut rng, 10)
                .into_iter()
                .enumerate()
                .map(|(i, q)| CauseNode::new(format!("g{g}l{i}"), format!("Leaf {g}.{i}"), q))
                .collect();
            node
        })
        .collect();
    let ids = m.cause_tree.leaf_ids();
    for a in 0..50 {
        let mut action = random_action(&mut rng, &format!("A{a}"), &ids, 6);
        // Make sure every leaf is covered by some action.
        for f in ids.iter().skip(a * 4).take(4) {
            action.solves.entry(f.clone()).or_insert(0.8);
        }
        m.actions.push(action);
    }
    let prior = bats_core::elicitation::collapse_cause_tree(&m.cause_tree).unwrap();
    let pairs: Vec<(String, f64)> = prior.ids().map(str::to_string).zip(prior.probs()).collect();
    for q in 0..15 {
        m.questions.push(symptom(&mut rng, &format!("S{q}"), &ids, 2, 8));
    }
    for q in 0..10 {
        m.questions
            .push(consistent_general(&mut rng, &format!("G{q}"), &pairs, 2, 3, true).0);
    }
    for q in 0..5 {
        m.questions.push(symptom(&mut rng, &format!("T{q}"), &ids, 3, 12));
    }
    m
}
