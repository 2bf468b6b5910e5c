use super::{CauseDistribution, ElicitationError};
use crate::model::CauseNode;

const SIBLING_TOL: f64 = 1e-9;

/// Flattens a cause tree into the cause-indicator distribution.
///
/// Each leaf gets the product of the conditional probabilities on its path
/// below the root. Trees whose sibling sums are off are refused rather than
/// silently renormalized.
pub fn collapse_cause_tree(tree: &CauseNode) -> Result<CauseDistribution, ElicitationError> {
    let mut entries = indexmap::IndexMap::new();
    if tree.is_leaf() {
        entries.insert(tree.id.clone(), 1.0);
        return Ok(CauseDistribution { entries });
    }
    collapse_into(tree, 1.0, "/cause_tree", &mut entries)?;

    let total: f64 = entries.values().sum();
    // Sibling sums are accepted within 1e-9; keep the flat distribution
    // normalized to the tighter bound.
    if (total - 1.0).abs() > 1e-12 {
        for v in entries.values_mut() {
            *v /= total;
        }
    }
    Ok(CauseDistribution { entries })
}

fn collapse_into(
    node: &CauseNode,
    mass: f64,
    path: &str,
    out: &mut indexmap::IndexMap<String, f64>,
) -> Result<(), ElicitationError> {
    if node.is_leaf() {
        if out.insert(node.id.clone(), mass).is_some() {
            return Err(ElicitationError::InvalidTree {
                path: path.to_string(),
                message: format!("duplicate cause id '{}'", node.id),
            });
        }
        return Ok(());
    }
    let mut sum = 0.0;
    for (i, child) in node.children.iter().enumerate() {
        match child.cond_prob {
            Some(p) if p.is_finite() && p > 0.0 && p <= 1.0 => sum += p,
            other => {
                return Err(ElicitationError::InvalidTree {
                    path: format!("{path}/children/{i}"),
                    message: format!("cond_prob {other:?} is not in (0, 1]"),
                })
            }
        }
    }
    if (sum - 1.0).abs() > SIBLING_TOL {
        return Err(ElicitationError::InvalidTree {
            path: path.to_string(),
            message: format!("children of '{}' sum to {sum}", node.id),
        });
    }
    for (i, child) in node.children.iter().enumerate() {
        let p = child.cond_prob.unwrap_or_default();
        collapse_into(child, mass * p, &format!("{path}/children/{i}"), out)?;
    }
    Ok(())
}

/// Probability of an aggregated cause: the sum over its descendant leaves.
///
/// Sums are taken child by child so that a parent's value is exactly the sum
/// of its children's values.
pub fn aggregate_cause_probability(
    dist: &CauseDistribution,
    tree: &CauseNode,
    node_id: &str,
) -> Result<f64, ElicitationError> {
    let node = tree
        .find(node_id)
        .ok_or_else(|| ElicitationError::UnknownNode(node_id.to_string()))?;
    aggregate(dist, node)
}

fn aggregate(dist: &CauseDistribution, node: &CauseNode) -> Result<f64, ElicitationError> {
    if node.is_leaf() {
        return dist
            .get(&node.id)
            .ok_or_else(|| ElicitationError::UnknownCause(node.id.clone()));
    }
    let mut sum = 0.0;
    for child in &node.children {
        sum += aggregate(dist, child)?;
    }
    Ok(sum)
}
