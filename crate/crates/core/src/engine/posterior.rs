use super::{EngineError, Evidence};
use crate::compiler::CompiledNetwork;
use crate::elicitation::CauseDistribution;

/// Resolves evidence to (step index, outcome index) pairs.
pub(crate) fn resolve(network: &CompiledNetwork, evidence: &[Evidence]) -> Result<Vec<(usize, usize)>, EngineError> {
    evidence
        .iter()
        .map(|e| {
            let i = network
                .step_index(&e.step_id)
                .ok_or_else(|| EngineError::UnknownStep(e.step_id.clone()))?;
            let o = network.steps[i]
                .outcome_index(&e.outcome)
                .ok_or_else(|| EngineError::UnknownOutcome {
                    step: e.step_id.clone(),
                    outcome: e.outcome.clone(),
                })?;
            Ok((i, o))
        })
        .collect()
}

/// Normalized P(I = F | e) as a plain vector in prior order.
pub(crate) fn posterior_vec(network: &CompiledNetwork, observed: &[(usize, usize)]) -> Result<Vec<f64>, EngineError> {
    let mut w = network.prior.probs();
    for &(i, o) in observed {
        for (wf, l) in w.iter_mut().zip(&network.steps[i].likelihood[o]) {
            *wf *= l;
        }
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(EngineError::ContradictoryEvidence);
    }
    for wf in &mut w {
        *wf /= total;
    }
    Ok(w)
}

/// P(I = F | e): prior times the likelihood of every observation, normalized.
pub fn posterior(network: &CompiledNetwork, evidence: &[Evidence]) -> Result<CauseDistribution, EngineError> {
    let observed = resolve(network, evidence)?;
    let w = posterior_vec(network, &observed)?;
    Ok(network
        .prior
        .reweighted(&w)
        .expect("posterior_vec returns a normalized vector"))
}
