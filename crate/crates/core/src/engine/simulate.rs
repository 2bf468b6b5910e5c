use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_observation, next_step, Evidence, Next};
use crate::compiler::{CompiledNetwork, StepKind, YES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Follow the planner's recommendations.
    Planner,
    /// Pick uniformly among the steps without evidence.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: Policy,
    pub trials: usize,
    pub seed: u64,
    pub resolution_rate: f64,
    pub mean_total_cost: f64,
    pub mean_steps: f64,
}

fn sample(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

/// Monte-Carlo evaluation: each trial draws a true cause from the prior,
/// draws step outcomes from the network, and runs until an action repairs
/// the device or the policy has nothing left to try.
pub fn simulate(network: &CompiledNetwork, policy: Policy, trials: usize, seed: u64) -> SimReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = network.prior.probs();
    let mut resolved = 0usize;
    let mut total_cost = 0.0;
    let mut total_steps = 0usize;

    for _ in 0..trials {
        let truth = sample(&mut rng, prior.iter().copied());
        let mut evidence: Vec<Evidence> = Vec::new();
        for _ in 0..=network.steps.len() {
            let chosen = match policy {
                Policy::Planner => match next_step(network, &evidence) {
                    Ok(Next::Recommend(r)) => network.step_index(&r.step_id),
                    _ => None,
                },
                Policy::Random => {
                    let open: Vec<usize> = (0..network.steps.len())
                        .filter(|&i| !evidence.iter().any(|e| e.step_id == network.steps[i].id))
                        .collect();
                    let repair_left = open.iter().any(|&i| network.steps[i].kind == StepKind::RepairAction);
                    if repair_left {
                        Some(open[rng.random_range(0..open.len())])
                    } else {
                        None
                    }
                }
            };
            let Some(i) = chosen else { break };
            let step = &network.steps[i];
            let o = sample(&mut rng, step.likelihood.iter().map(|row| row[truth]));
            total_cost += step.cost;
            total_steps += 1;
            apply_observation(network, &mut evidence, &step.id, &step.outcomes[o]);
            if step.kind == StepKind::RepairAction && step.outcomes[o] == YES {
                resolved += 1;
                break;
            }
        }
    }

    let n = trials.max(1) as f64;
    SimReport {
        policy,
        trials,
        seed,
        resolution_rate: resolved as f64 / n,
        mean_total_cost: total_cost / n,
        mean_steps: total_steps as f64 / n,
    }
}
