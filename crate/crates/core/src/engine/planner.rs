use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::posterior::{posterior_vec, resolve};
use super::{status_of, EngineError, Evidence, SessionStatus};
use crate::compiler::{CompiledNetwork, StepKind};

/// A question is recommended only if it beats the action plan by more than this.
pub const QUESTION_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub sequence: Vec<String>,
    pub expected_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub step_id: String,
    pub name: String,
    pub explanation: String,
    pub kind: StepKind,
    pub cost: f64,
    /// P(yes | e) for actions; the answer distribution for questions.
    pub outcome_probabilities: Vec<(String, f64)>,
    /// Actions only: P(yes | e) and P(yes | e) / cost.
    pub success_probability: Option<f64>,
    pub efficiency: Option<f64>,
    /// Expected cost of repair when following this recommendation.
    pub expected_cost: f64,
    /// Expected cost of the plain greedy action plan.
    pub baseline_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Next {
    Recommend(Recommendation),
    Terminal(SessionStatus),
}

/// Precomputed view of the repair actions: sparse yes-rows sorted by id.
struct Actions<'a> {
    net: &'a CompiledNetwork,
    /// (step index, [(cause index, P(yes | cause))])
    rows: Vec<(usize, Vec<(usize, f64)>)>,
}

impl<'a> Actions<'a> {
    fn open(net: &'a CompiledNetwork, observed: &[(usize, usize)]) -> Self {
        let mut idx: Vec<usize> = net
            .steps
            .iter()
            .enumerate()
            .filter(|(i, s)| s.kind == StepKind::RepairAction && !observed.iter().any(|(j, _)| j == i))
            .map(|(i, _)| i)
            .collect();
        idx.sort_by(|a, b| net.steps[*a].id.cmp(&net.steps[*b].id));
        let rows = idx
            .into_iter()
            .map(|i| {
                let sparse = net.steps[i].likelihood[0]
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(f, p)| (f, *p))
                    .collect();
                (i, sparse)
            })
            .collect();
        Self { net, rows }
    }

    /// Greedy p/C ordering from a normalized posterior. Returns positions into
    /// `rows` and the expected cost of performing them in that order.
    fn greedy(&self, posterior: &[f64]) -> (Vec<usize>, f64) {
        let mut w = posterior.to_vec();
        let mut reach: f64 = w.iter().sum();
        let mut left: Vec<usize> = (0..self.rows.len()).collect();
        let mut order = Vec::with_capacity(left.len());
        let mut ecr = 0.0;
        while !left.is_empty() {
            if reach <= 0.0 {
                order.append(&mut left);
                break;
            }
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (pos, &r) in left.iter().enumerate() {
                let (i, sparse) = &self.rows[r];
                let p: f64 = sparse.iter().map(|&(f, y)| y * w[f]).sum::<f64>() / reach;
                let c = self.net.steps[*i].cost;
                let score = efficiency(p, c);
                if score > best_score {
                    best = pos;
                    best_score = score;
                }
            }
            let r = left.remove(best);
            let (i, sparse) = &self.rows[r];
            ecr += self.net.steps[*i].cost * reach;
            for &(f, y) in sparse {
                let removed = w[f] * y;
                w[f] -= removed;
                reach -= removed;
            }
            order.push(r);
        }
        (order, ecr)
    }
}

fn efficiency(p: f64, cost: f64) -> f64 {
    if cost > 0.0 {
        p / cost
    } else if p > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// The greedy repair sequence under the current evidence: repeatedly the
/// action with the highest P(solves | e, earlier ones failed) / cost.
pub fn greedy_action_sequence(network: &CompiledNetwork, evidence: &[Evidence]) -> Result<Plan, EngineError> {
    let observed = resolve(network, evidence)?;
    let post = posterior_vec(network, &observed)?;
    let actions = Actions::open(network, &observed);
    if actions.rows.is_empty() {
        return Err(EngineError::NoActionsAvailable);
    }
    let (order, expected_cost) = actions.greedy(&post);
    Ok(Plan {
        sequence: order
            .into_iter()
            .map(|r| network.steps[actions.rows[r].0].id.clone())
            .collect(),
        expected_cost,
    })
}

/// Recommends the next step: the best question or test if asking it first
/// lowers the expected cost of repair, otherwise the head of the greedy plan.
pub fn next_step(network: &CompiledNetwork, evidence: &[Evidence]) -> Result<Next, EngineError> {
    let status = status_of(network, evidence);
    if !status.is_active() {
        return Ok(Next::Terminal(status));
    }
    let observed = resolve(network, evidence)?;
    let post = posterior_vec(network, &observed)?;
    let actions = Actions::open(network, &observed);
    if actions.rows.is_empty() {
        return Err(EngineError::NoActionsAvailable);
    }
    let (order, baseline) = actions.greedy(&post);

    let mut info: Vec<usize> = network
        .steps
        .iter()
        .enumerate()
        .filter(|(i, s)| s.kind != StepKind::RepairAction && !observed.iter().any(|(j, _)| j == i))
        .map(|(i, _)| i)
        .collect();
    info.sort_by(|a, b| network.steps[*a].id.cmp(&network.steps[*b].id));

    let mut best: Option<(usize, f64)> = None;
    let mut cond = vec![0.0; post.len()];
    for &i in &info {
        let step = &network.steps[i];
        let mut ecr = step.cost;
        for row in &step.likelihood {
            let mass: f64 = row.iter().zip(&post).map(|(l, p)| l * p).sum();
            if mass <= 0.0 {
                continue;
            }
            for ((c, l), p) in cond.iter_mut().zip(row).zip(&post) {
                *c = l * p / mass;
            }
            ecr += mass * actions.greedy(&cond).1;
        }
        if best.is_none_or(|(_, b)| ecr.partial_cmp(&b) == Some(Ordering::Less)) {
            best = Some((i, ecr));
        }
    }

    let (chosen, expected_cost) = match best {
        Some((i, ecr)) if ecr < baseline - QUESTION_MARGIN => (i, ecr),
        _ => (actions.rows[order[0]].0, baseline),
    };
    let step = &network.steps[chosen];
    let outcome_probabilities: Vec<(String, f64)> = step
        .outcomes
        .iter()
        .zip(&step.likelihood)
        .map(|(o, row)| (o.clone(), row.iter().zip(&post).map(|(l, p)| l * p).sum()))
        .collect();
    let success_probability = step.kind.is_action().then(|| outcome_probabilities[0].1);
    Ok(Next::Recommend(Recommendation {
        step_id: step.id.clone(),
        name: step.name.clone(),
        explanation: step.explanation.clone(),
        kind: step.kind,
        cost: step.cost,
        outcome_probabilities,
        success_probability,
        efficiency: success_probability.map(|p| efficiency(p, step.cost)),
        expected_cost,
        baseline_cost: baseline,
    }))
}
