use crate::model::{CostFactors, CostWeights};

/// P(A = yes | F): the base solve probability discounted by the chance the
/// action is carried out correctly and its requisites are in order.
pub fn action_solve_probability(base: f64, p_correct: f64, p_requisites: f64) -> f64 {
    base * p_correct * p_requisites
}

/// C = alpha*T + beta*R + gamma*M + delta*I.
pub fn combine_costs(f: &CostFactors, w: &CostWeights) -> f64 {
    w.alpha * f.time + w.beta * f64::from(f.risk) + w.gamma * f.money + w.delta * f64::from(f.insult)
}
