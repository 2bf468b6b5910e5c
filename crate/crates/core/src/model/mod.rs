//! Error-condition models as authored by domain experts.
//!
//! A model is one self-contained troubleshooter: a tree of causes with
//! sibling-conditional probabilities, the actions that can repair them and
//! the questions that shed light on them. Nothing here does probability
//! math beyond structural sums; see [`crate::elicitation`] for that.

mod shortcut;
mod validate;

pub use shortcut::desugar_shortcut_question;
pub use validate::{validate_model, Finding, ValidationReport};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// A node of the cause tree. The root stands for the error condition itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseNode {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub explanation: String,
    /// P(this cause | parent cause present). `None` marks a cause whose
    /// probability still has to be assigned (e.g. added by a library update).
    pub cond_prob: Option<f64>,
    #[serde(default)]
    pub children: Vec<CauseNode>,
}

impl CauseNode {
    pub fn new(id: impl Into<String>, name: impl Into<String>, cond_prob: f64) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            explanation: String::new(),
            cond_prob: Some(cond_prob),
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<CauseNode>) -> Self {
        self.children = children;
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn find(&self, id: &str) -> Option<&CauseNode> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut CauseNode> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    /// Leaves in depth-first declaration order.
    pub fn leaves(&self) -> Vec<&CauseNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a CauseNode>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    pub fn leaf_ids(&self) -> Vec<String> {
        self.leaves().into_iter().map(|n| n.id.clone()).collect()
    }

    /// Pre-order visit of every node, including the root.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a CauseNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut CauseNode)) {
        f(self);
        for c in &mut self.children {
            c.walk_mut(f);
        }
    }

    /// Removes the descendant with `id`, returning it.
    pub fn remove(&mut self, id: &str) -> Option<CauseNode> {
        if let Some(pos) = self.children.iter().position(|c| c.id == id) {
            return Some(self.children.remove(pos));
        }
        self.children.iter_mut().find_map(|c| c.remove(id))
    }
}

/// Cost factors of a troubleshooting step. Risk and insult are levels 0..=4.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostFactors {
    /// Minutes.
    pub time: f64,
    pub risk: u8,
    /// Dollars.
    pub money: f64,
    pub insult: u8,
}

impl CostFactors {
    pub fn minutes(time: f64) -> Self {
        Self {
            time,
            ..Self::default()
        }
    }
}

/// Linear weights turning [`CostFactors`] into one scalar cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub profile_name: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl CostWeights {
    /// Weights that count time only.
    pub fn time_only() -> Self {
        Self {
            profile_name: "time".into(),
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let ws = [self.alpha, self.beta, self.gamma, self.delta];
        ws.iter().all(|w| w.is_finite() && *w >= 0.0) && ws.iter().any(|w| *w > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Repair,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub explanation: String,
    pub kind: ActionKind,
    /// Leaf cause id -> P(A = yes | F, correct, requisites).
    pub solves: IndexMap<String, f64>,
    pub p_correct: f64,
    pub p_requisites: f64,
    pub costs: CostFactors,
}

impl Action {
    pub fn repair(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            explanation: String::new(),
            kind: ActionKind::Repair,
            solves: IndexMap::new(),
            p_correct: 1.0,
            p_requisites: 1.0,
            costs: CostFactors::default(),
        }
    }

    pub fn solving(mut self, cause: impl Into<String>, p: f64) -> Self {
        self.solves.insert(cause.into(), p);
        self
    }

    pub fn costing(mut self, costs: CostFactors) -> Self {
        self.costs = costs;
        self
    }
}

/// Converts the 0..=4 inaccuracy level of an action into P(correct).
///
/// Levels follow the five-step scale of the cost editor (none, low, medium,
/// high, very high). Out-of-range levels saturate at "very high".
pub fn p_correct_from_inaccuracy(level: u8) -> f64 {
    const TABLE: [f64; 5] = [1.0, 0.95, 0.9, 0.8, 0.65];
    TABLE[usize::from(level.min(4))]
}

/// What a shortcut answer says about causes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortcutEffect {
    Eliminates(Vec<String>),
    Identifies(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QuestionKind {
    /// Elicited causally: P(Q = s | F) per associated cause, plus the row for
    /// "none of the associated causes".
    Symptom {
        given_cause: IndexMap<String, Vec<f64>>,
        given_none: Vec<f64>,
    },
    /// Elicited anti-causally: P(I = F | Q = s) and the answer prior P(Q = s).
    /// For binary questions one cell per cause may be left `null`; it is
    /// derived from the consistency equation.
    General {
        answer_prior: Vec<f64>,
        cause_given_answer: IndexMap<String, Vec<Option<f64>>>,
    },
    /// Answer -> causes eliminated or the cause identified. Causes listed in
    /// `associated` but never mentioned by an effect stay uninformative.
    Shortcut {
        effects: IndexMap<String, ShortcutEffect>,
        #[serde(default)]
        associated: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub explanation: String,
    pub answers: Vec<String>,
    pub costs: CostFactors,
    pub kind: QuestionKind,
}

impl Question {
    /// Associated cause ids, in the order the question declares them.
    pub fn associated_causes(&self) -> Vec<String> {
        match &self.kind {
            QuestionKind::Symptom { given_cause, .. } => given_cause.keys().cloned().collect(),
            QuestionKind::General { cause_given_answer, .. } => cause_given_answer.keys().cloned().collect(),
            QuestionKind::Shortcut { effects, associated } => {
                let mut out: Vec<String> = associated.clone();
                for effect in effects.values() {
                    let ids: &[String] = match effect {
                        ShortcutEffect::Eliminates(ids) => ids,
                        ShortcutEffect::Identifies(id) => std::slice::from_ref(id),
                    };
                    for id in ids {
                        if !out.contains(id) {
                            out.push(id.clone());
                        }
                    }
                }
                out
            }
        }
    }

    pub fn answer_index(&self, answer: &str) -> Option<usize> {
        self.answers.iter().position(|a| a == answer)
    }
}

/// When `action_id` is performed, `question_id` is known to be `fixed_answer`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyRule {
    pub action_id: String,
    pub question_id: String,
    pub fixed_answer: String,
}

/// Provenance of content cloned from a library module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRef {
    pub module_id: String,
    pub instance: String,
    pub version: u32,
    pub attach_at: String,
    /// Probabilities assigned locally when the module was instantiated,
    /// keyed by the namespaced cause id.
    #[serde(default)]
    pub local_cond_probs: IndexMap<String, f64>,
    /// Mirrored text as of the last propagated version, keyed by field path.
    #[serde(default)]
    pub baseline: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorConditionModel {
    pub id: String,
    pub name: String,
    pub cause_tree: CauseNode,
    #[serde(default)]
    pub actions: Vec<Action>,
    #[serde(default)]
    pub questions: Vec<Question>,
    #[serde(default)]
    pub dependencies: Vec<DependencyRule>,
    #[serde(default)]
    pub module_refs: Vec<ModuleRef>,
}

impl ErrorConditionModel {
    /// A model with an empty cause tree rooted at the error condition.
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        let id = id.into();
        let name = name.into();
        Self {
            cause_tree: CauseNode::new(id.clone(), name.clone(), 1.0),
            id,
            name,
            actions: Vec::new(),
            questions: Vec::new(),
            dependencies: Vec::new(),
            module_refs: Vec::new(),
        }
    }

    pub fn action(&self, id: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn question_mut(&mut self, id: &str) -> Option<&mut Question> {
        self.questions.iter_mut().find(|q| q.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree() -> CauseNode {
        CauseNode::new("root", "Light print", 1.0).with_children(vec![
            CauseNode::new("c1", "Toner", 0.7).with_children(vec![
                CauseNode::new("s1", "Low toner", 0.4),
                CauseNode::new("s2", "Bad cartridge", 0.6),
            ]),
            CauseNode::new("c2", "Density setting", 0.3),
        ])
    }

    #[test]
    fn leaves_are_in_declaration_order() {
        assert_eq!(tree().leaf_ids(), vec!["s1", "s2", "c2"]);
    }

    #[test]
    fn find_and_remove() {
        let mut t = tree();
        assert_eq!(t.find("s2").unwrap().name, "Bad cartridge");
        let removed = t.remove("s1").unwrap();
        assert_eq!(removed.id, "s1");
        assert!(t.find("s1").is_none());
        assert_eq!(t.leaf_ids(), vec!["s2", "c2"]);
    }

    #[test]
    fn shortcut_associated_causes_follow_first_mention() {
        let q = Question {
            id: "q".into(),
            name: "q".into(),
            explanation: String::new(),
            answers: vec!["a".into(), "b".into()],
            costs: CostFactors::default(),
            kind: QuestionKind::Shortcut {
                effects: IndexMap::from([
                    (
                        "a".to_string(),
                        ShortcutEffect::Eliminates(vec!["f2".into(), "f1".into()]),
                    ),
                    ("b".to_string(), ShortcutEffect::Identifies("f1".into())),
                ]),
                associated: vec![],
            },
        };
        assert_eq!(q.associated_causes(), vec!["f2", "f1"]);
    }

    #[test]
    fn inaccuracy_scale_is_monotone() {
        let ps: Vec<f64> = (0..=4).map(p_correct_from_inaccuracy).collect();
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(p_correct_from_inaccuracy(0), 1.0);
        assert_eq!(p_correct_from_inaccuracy(9), ps[4]);
    }

    #[test]
    fn weights_need_one_positive_entry() {
        assert!(CostWeights::time_only().is_valid());
        let mut w = CostWeights::time_only();
        w.alpha = 0.0;
        assert!(!w.is_valid());
    }
}
