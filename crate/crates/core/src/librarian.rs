//! Library of reusable modules: cause subtrees with their actions and
//! questions, stored without model-specific priors.
//!
//! Instantiation copies a module into a model under a namespaced id prefix
//! `<module>.<instance>.` and records a [`ModuleRef`]. Later library edits are
//! mirrored by [`propagate_module_change`], which copies structure and text
//! only; probabilities stay local to each model.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Action, CauseNode, ErrorConditionModel, ModuleRef, Question, QuestionKind, ShortcutEffect};

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCause {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub explanation: String,
    /// Optional below the top level; top-level causes never carry one.
    #[serde(default)]
    pub cond_prob: Option<f64>,
    #[serde(default)]
    pub children: Vec<TemplateCause>,
}

impl TemplateCause {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            explanation: String::new(),
            cond_prob: None,
            children: Vec::new(),
        }
    }

    fn walk<'a>(&'a self, parent: Option<&'a str>, f: &mut impl FnMut(&'a TemplateCause, Option<&'a str>)) {
        f(self, parent);
        for c in &self.children {
            c.walk(Some(&self.id), f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryModule {
    pub id: String,
    pub name: String,
    pub version: u32,
    pub causes: Vec<TemplateCause>,
    #[serde(default)]
    pub actions: Vec<Action>,
    #[serde(default)]
    pub questions: Vec<Question>,
}

impl LibraryModule {
    /// Every template cause with its parent (`None` at the top level).
    pub fn cause_list(&self) -> Vec<(&TemplateCause, Option<&str>)> {
        let mut out = Vec::new();
        for c in &self.causes {
            c.walk(None, &mut |node, parent| out.push((node, parent)));
        }
        out
    }

    /// Structural problems: top-level priors, duplicate ids, dangling references.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let causes = self.cause_list();
        let mut seen: Vec<&str> = Vec::new();
        for (c, parent) in &causes {
            if parent.is_none() && c.cond_prob.is_some() {
                out.push(format!("top-level cause '{}' carries a prior", c.id));
            }
            if seen.contains(&c.id.as_str()) {
                out.push(format!("duplicate id '{}'", c.id));
            }
            seen.push(&c.id);
        }
        let is_cause = |id: &str| causes.iter().any(|(c, _)| c.id == id);
        for a in &self.actions {
            if seen.contains(&a.id.as_str()) {
                out.push(format!("duplicate id '{}'", a.id));
            }
            seen.push(&a.id);
            for cause in a.solves.keys().filter(|k| !is_cause(k)) {
                out.push(format!("action '{}' solves unknown cause '{cause}'", a.id));
            }
        }
        for q in &self.questions {
            if seen.contains(&q.id.as_str()) {
                out.push(format!("duplicate id '{}'", q.id));
            }
            seen.push(&q.id);
            for cause in q.associated_causes().iter().filter(|k| !is_cause(k)) {
                out.push(format!("question '{}' refers to unknown cause '{cause}'", q.id));
            }
        }
        out
    }
}

/// Modules keyed (and therefore listed) by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Library {
    pub modules: BTreeMap<String, LibraryModule>,
}

impl Library {
    pub fn get(&self, id: &str) -> Option<&LibraryModule> {
        self.modules.get(id)
    }

    pub fn insert(&mut self, module: LibraryModule) -> Option<LibraryModule> {
        self.modules.insert(module.id.clone(), module)
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("unknown module '{0}'")]
    UnknownModule(String),
    #[error("attach point '{0}' is not a cause of the model")]
    UnknownAttachPoint(String),
    #[error("module '{module}' is invalid: {}", problems.join("; "))]
    InvalidModule { module: String, problems: Vec<String> },
    #[error("no probability assigned to {}", .0.join(", "))]
    IncompleteProbabilities(Vec<String>),
    #[error("children of '{parent}' sum to {sum}")]
    SiblingSumViolation { parent: String, sum: f64 },
    #[error("id '{0}' already exists in the model")]
    IdCollision(String),
}

impl LibraryError {
    pub fn code(&self) -> &'static str {
        match self {
            LibraryError::UnknownModule(_) => "UnknownModule",
            LibraryError::UnknownAttachPoint(_) => "UnknownAttachPoint",
            LibraryError::InvalidModule { .. } => "InvalidModule",
            LibraryError::IncompleteProbabilities(_) => "IncompleteProbabilities",
            LibraryError::SiblingSumViolation { .. } => "SiblingSumViolation",
            LibraryError::IdCollision(_) => "IdCollision",
        }
    }
}

pub fn namespace(module_id: &str, instance: &str) -> String {
    format!("{module_id}.{instance}.")
}

fn rename_question(q: &Question, ns: &str) -> Question {
    let n = |id: &String| format!("{ns}{id}");
    let kind = match &q.kind {
        QuestionKind::Symptom {
            given_cause,
            given_none,
        } => QuestionKind::Symptom {
            given_cause: given_cause.iter().map(|(k, v)| (n(k), v.clone())).collect(),
            given_none: given_none.clone(),
        },
        QuestionKind::General {
            answer_prior,
            cause_given_answer,
        } => QuestionKind::General {
            answer_prior: answer_prior.clone(),
            cause_given_answer: cause_given_answer.iter().map(|(k, v)| (n(k), v.clone())).collect(),
        },
        QuestionKind::Shortcut { effects, associated } => QuestionKind::Shortcut {
            effects: effects
                .iter()
                .map(|(answer, e)| {
                    let e = match e {
                        ShortcutEffect::Eliminates(ids) => ShortcutEffect::Eliminates(ids.iter().map(n).collect()),
                        ShortcutEffect::Identifies(id) => ShortcutEffect::Identifies(n(id)),
                    };
                    (answer.clone(), e)
                })
                .collect(),
            associated: associated.iter().map(n).collect(),
        },
    };
    Question {
        id: n(&q.id),
        kind,
        ..q.clone()
    }
}

fn rename_action(a: &Action, ns: &str) -> Action {
    Action {
        id: format!("{ns}{}", a.id),
        solves: a.solves.iter().map(|(k, v)| (format!("{ns}{k}"), *v)).collect(),
        ..a.clone()
    }
}

/// Mirrored text of a module instance, keyed by field path.
fn text_fields(module: &LibraryModule, ns: &str) -> IndexMap<String, String> {
    let mut out = IndexMap::new();
    for (c, _) in module.cause_list() {
        out.insert(format!("causes/{ns}{}/name", c.id), c.name.clone());
        out.insert(format!("causes/{ns}{}/explanation", c.id), c.explanation.clone());
    }
    for a in &module.actions {
        out.insert(format!("actions/{ns}{}/name", a.id), a.name.clone());
        out.insert(format!("actions/{ns}{}/explanation", a.id), a.explanation.clone());
    }
    for q in &module.questions {
        out.insert(format!("questions/{ns}{}/name", q.id), q.name.clone());
        out.insert(format!("questions/{ns}{}/explanation", q.id), q.explanation.clone());
    }
    out
}

fn read_field(model: &ErrorConditionModel, path: &str) -> Option<String> {
    let (kind, rest) = path.split_once('/')?;
    let (id, field) = rest.rsplit_once('/')?;
    let (name, explanation) = match kind {
        "causes" => model.cause_tree.find(id).map(|c| (&c.name, &c.explanation))?,
        "actions" => model.action(id).map(|a| (&a.name, &a.explanation))?,
        "questions" => model.question(id).map(|q| (&q.name, &q.explanation))?,
        _ => return None,
    };
    match field {
        "name" => Some(name.clone()),
        "explanation" => Some(explanation.clone()),
        _ => None,
    }
}

fn write_field(model: &mut ErrorConditionModel, path: &str, value: &str) -> bool {
    let Some((kind, rest)) = path.split_once('/') else {
        return false;
    };
    let Some((id, field)) = rest.rsplit_once('/') else {
        return false;
    };
    let slot = match kind {
        "causes" => model.cause_tree.find_mut(id).map(|c| (&mut c.name, &mut c.explanation)),
        "actions" => model
            .actions
            .iter_mut()
            .find(|a| a.id == id)
            .map(|a| (&mut a.name, &mut a.explanation)),
        "questions" => model
            .questions
            .iter_mut()
            .find(|q| q.id == id)
            .map(|q| (&mut q.name, &mut q.explanation)),
        _ => None,
    };
    match (slot, field) {
        (Some((name, _)), "name") => *name = value.to_string(),
        (Some((_, explanation)), "explanation") => *explanation = value.to_string(),
        _ => return false,
    }
    true
}

fn model_has_id(model: &ErrorConditionModel, id: &str) -> bool {
    model.cause_tree.find(id).is_some() || model.action(id).is_some() || model.question(id).is_some()
}

/// Clones `module` into `model` below the cause `attach_at`.
///
/// `assignments` maps template cause ids to conditional probabilities and
/// overrides any value the template carries. Every template cause must end
/// up with a probability and every sibling group, including the children of
/// the attach point, must sum to 1.
pub fn instantiate_module(
    model: &ErrorConditionModel,
    module: &LibraryModule,
    attach_at: &str,
    instance: &str,
    assignments: &IndexMap<String, f64>,
) -> Result<ErrorConditionModel, LibraryError> {
    let problems = module.problems();
    if !problems.is_empty() {
        return Err(LibraryError::InvalidModule {
            module: module.id.clone(),
            problems,
        });
    }
    let attach = model
        .cause_tree
        .find(attach_at)
        .ok_or_else(|| LibraryError::UnknownAttachPoint(attach_at.to_string()))?;
    let ns = namespace(&module.id, instance);

    let causes = module.cause_list();
    let missing: Vec<String> = causes
        .iter()
        .filter(|(c, _)| assignments.get(&c.id).copied().or(c.cond_prob).is_none())
        .map(|(c, _)| c.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(LibraryError::IncompleteProbabilities(missing));
    }
    let prob = |c: &TemplateCause| assignments.get(&c.id).copied().or(c.cond_prob).unwrap_or_default();

    let existing: f64 = attach.children.iter().filter_map(|c| c.cond_prob).sum();
    let top: f64 = module.causes.iter().map(prob).sum();
    if (existing + top - 1.0).abs() > SUM_TOL {
        return Err(LibraryError::SiblingSumViolation {
            parent: attach_at.to_string(),
            sum: existing + top,
        });
    }
    for (c, _) in &causes {
        if !c.children.is_empty() {
            let sum: f64 = c.children.iter().map(prob).sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(LibraryError::SiblingSumViolation {
                    parent: format!("{ns}{}", c.id),
                    sum,
                });
            }
        }
    }

    let new_ids = causes
        .iter()
        .map(|(c, _)| &c.id)
        .chain(module.actions.iter().map(|a| &a.id))
        .chain(module.questions.iter().map(|q| &q.id));
    for id in new_ids {
        let id = format!("{ns}{id}");
        if model_has_id(model, &id) {
            return Err(LibraryError::IdCollision(id));
        }
    }

    fn build(t: &TemplateCause, ns: &str, prob: &impl Fn(&TemplateCause) -> f64) -> CauseNode {
        CauseNode {
            id: format!("{ns}{}", t.id),
            name: t.name.clone(),
            explanation: t.explanation.clone(),
            cond_prob: Some(prob(t)),
            children: t.children.iter().map(|c| build(c, ns, prob)).collect(),
        }
    }

    let mut out = model.clone();
    let node = out.cause_tree.find_mut(attach_at).expect("attach point checked above");
    node.children.extend(module.causes.iter().map(|t| build(t, &ns, &prob)));
    out.actions.extend(module.actions.iter().map(|a| rename_action(a, &ns)));
    out.questions
        .extend(module.questions.iter().map(|q| rename_question(q, &ns)));
    out.module_refs.push(ModuleRef {
        module_id: module.id.clone(),
        instance: instance.to_string(),
        version: module.version,
        attach_at: attach_at.to_string(),
        local_cond_probs: causes.iter().map(|(c, _)| (format!("{ns}{}", c.id), prob(c))).collect(),
        baseline: text_fields(module, &ns),
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldChange {
    pub model: String,
    pub path: String,
    pub before: Option<String>,
    pub after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub model: String,
    pub instance: String,
    /// Mirrored fields the model edited locally.
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub module_id: String,
    pub version: u32,
    pub touched_models: Vec<String>,
    pub changes: Vec<FieldChange>,
    pub conflicts: Vec<Conflict>,
    /// Content the module no longer has; left in place for the author.
    pub orphaned: Vec<FieldChange>,
}

/// Mirrors the current version of a module into every model instance that
/// uses an older one. Instances whose mirrored text was edited locally are
/// reported as conflicts and left unchanged.
pub fn propagate_module_change(
    library: &Library,
    module_id: &str,
    corpus: &mut [ErrorConditionModel],
) -> Result<PropagationReport, LibraryError> {
    let module = library
        .get(module_id)
        .ok_or_else(|| LibraryError::UnknownModule(module_id.to_string()))?;
    let mut report = PropagationReport {
        module_id: module_id.to_string(),
        version: module.version,
        ..Default::default()
    };

    for model in corpus.iter_mut() {
        let mut touched = false;
        for r in 0..model.module_refs.len() {
            let mref = &model.module_refs[r];
            if mref.module_id != module_id || mref.version == module.version {
                continue;
            }
            let diverged: Vec<String> = mref
                .baseline
                .iter()
                .filter(|(path, value)| read_field(model, path).as_deref() != Some(value.as_str()))
                .map(|(path, _)| path.clone())
                .collect();
            if !diverged.is_empty() {
                report.conflicts.push(Conflict {
                    model: model.id.clone(),
                    instance: mref.instance.clone(),
                    paths: diverged,
                });
                continue;
            }
            let ns = namespace(module_id, &mref.instance);
            let attach_at = mref.attach_at.clone();
            let old_baseline = mref.baseline.clone();
            let model_id = model.id.clone();
            let mut change = |path: String, before: Option<String>, after: Option<String>| {
                report.changes.push(FieldChange {
                    model: model_id.clone(),
                    path,
                    before,
                    after,
                });
            };

            for (t, parent) in module.cause_list() {
                let id = format!("{ns}{}", t.id);
                if model.cause_tree.find(&id).is_some() {
                    continue;
                }
                let parent_id = parent.map_or(attach_at.clone(), |p| format!("{ns}{p}"));
                if let Some(p) = model.cause_tree.find_mut(&parent_id) {
                    p.children.push(CauseNode {
                        id: id.clone(),
                        name: t.name.clone(),
                        explanation: t.explanation.clone(),
                        cond_prob: None,
                        children: Vec::new(),
                    });
                    change(format!("causes/{id}"), None, Some(t.name.clone()));
                }
            }
            for a in &module.actions {
                let renamed = rename_action(a, &ns);
                match model.actions.iter_mut().find(|x| x.id == renamed.id) {
                    Some(existing) => {
                        for (cause, p) in renamed.solves {
                            if !existing.solves.contains_key(&cause) {
                                change(
                                    format!("actions/{}/solves/{cause}", existing.id),
                                    None,
                                    Some(p.to_string()),
                                );
                                existing.solves.insert(cause, p);
                            }
                        }
                    }
                    None => {
                        change(format!("actions/{}", renamed.id), None, Some(renamed.name.clone()));
                        model.actions.push(renamed);
                    }
                }
            }
            for q in &module.questions {
                let renamed = rename_question(q, &ns);
                if model.question(&renamed.id).is_none() {
                    change(format!("questions/{}", renamed.id), None, Some(renamed.name.clone()));
                    model.questions.push(renamed);
                }
            }

            let new_baseline = text_fields(module, &ns);
            for (path, value) in &new_baseline {
                let current = read_field(model, path);
                if current.as_deref() != Some(value.as_str()) && write_field(model, path, value) {
                    change(path.clone(), current, Some(value.clone()));
                }
            }
            for (path, value) in &old_baseline {
                if !new_baseline.contains_key(path) {
                    report.orphaned.push(FieldChange {
                        model: model.id.clone(),
                        path: path.clone(),
                        before: Some(value.clone()),
                        after: None,
                    });
                }
            }

            let mref = &mut model.module_refs[r];
            mref.version = module.version;
            mref.baseline = new_baseline;
            touched = true;
        }
        if touched {
            report.touched_models.push(model.id.clone());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplaceScope {
    Names,
    Explanations,
    Both,
}

impl ReplaceScope {
    fn names(self) -> bool {
        matches!(self, ReplaceScope::Names | ReplaceScope::Both)
    }

    fn explanations(self) -> bool {
        matches!(self, ReplaceScope::Explanations | ReplaceScope::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplaceHit {
    pub model: String,
    /// JSON pointer of the text field.
    pub path: String,
    pub before: String,
    pub after: String,
}

/// Literal substring replacement over names and/or explanations. Ids,
/// answers and numbers are never touched. With `dry_run` the corpus is left
/// as is and only the report is produced.
pub fn search_replace(
    corpus: &mut [ErrorConditionModel],
    pattern: &str,
    replacement: &str,
    scope: ReplaceScope,
    dry_run: bool,
) -> Vec<ReplaceHit> {
    let mut hits = Vec::new();
    if pattern.is_empty() {
        return hits;
    }
    for model in corpus.iter_mut() {
        let model_id = model.id.clone();
        let mut visit = |path: String, text: &mut String, wanted: bool| {
            if wanted && text.contains(pattern) {
                let after = text.replace(pattern, replacement);
                hits.push(ReplaceHit {
                    model: model_id.clone(),
                    path,
                    before: text.clone(),
                    after: after.clone(),
                });
                if !dry_run {
                    *text = after;
                }
            }
        };
        visit("/name".into(), &mut model.name, scope.names());
        visit_causes(&mut model.cause_tree, "/cause_tree".into(), scope, &mut visit);
        for (i, a) in model.actions.iter_mut().enumerate() {
            visit(format!("/actions/{i}/name"), &mut a.name, scope.names());
            visit(
                format!("/actions/{i}/explanation"),
                &mut a.explanation,
                scope.explanations(),
            );
        }
        for (i, q) in model.questions.iter_mut().enumerate() {
            visit(format!("/questions/{i}/name"), &mut q.name, scope.names());
            visit(
                format!("/questions/{i}/explanation"),
                &mut q.explanation,
                scope.explanations(),
            );
        }
    }
    hits
}

fn visit_causes(
    node: &mut CauseNode,
    path: String,
    scope: ReplaceScope,
    visit: &mut impl FnMut(String, &mut String, bool),
) {
    visit(format!("{path}/name"), &mut node.name, scope.names());
    visit(
        format!("{path}/explanation"),
        &mut node.explanation,
        scope.explanations(),
    );
    for (i, c) in node.children.iter_mut().enumerate() {
        visit_causes(c, format!("{path}/children/{i}"), scope, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicitation::collapse_cause_tree;
    use crate::model::validate_model;

    fn toner() -> LibraryModule {
        let mut low = TemplateCause::new("low", "Toner low");
        low.explanation = "Cartridge nearly empty".into();
        LibraryModule {
            id: "toner".into(),
            name: "Toner cartridge".into(),
            version: 1,
            causes: vec![low, TemplateCause::new("seal", "Seal not removed")],
            actions: vec![
                Action::repair("shake", "Shake cartridge").solving("low", 0.6),
                Action::repair("reseat", "Remove seal").solving("seal", 1.0),
            ],
            questions: vec![],
        }
    }

    fn light_print() -> ErrorConditionModel {
        let mut m = ErrorConditionModel::new("lp", "Light print");
        m.cause_tree.children = vec![
            CauseNode::new("cart", "Toner cartridge", 0.5),
            CauseNode::new("media", "Media", 0.5),
        ];
        m
    }

    fn split() -> IndexMap<String, f64> {
        IndexMap::from([("low".to_string(), 0.6), ("seal".to_string(), 0.4)])
    }

    #[test]
    fn instantiate_under_a_cause() {
        let m = instantiate_module(&light_print(), &toner(), "cart", "a", &split()).unwrap();
        let prior = collapse_cause_tree(&m.cause_tree).unwrap();
        assert!((prior.get("toner.a.low").unwrap() - 0.30).abs() < 1e-15);
        assert!((prior.get("toner.a.seal").unwrap() - 0.20).abs() < 1e-15);
        assert!(m.action("toner.a.shake").unwrap().solves.contains_key("toner.a.low"));
        assert_eq!(m.module_refs[0].version, 1);
        assert!(validate_model(&m).is_ok());
    }

    #[test]
    fn instantiate_at_root_of_empty_model() {
        let m = instantiate_module(&ErrorConditionModel::new("e", "E"), &toner(), "e", "a", &split()).unwrap();
        assert_eq!(m.cause_tree.leaf_ids(), vec!["toner.a.low", "toner.a.seal"]);
    }

    #[test]
    fn second_instance_with_same_name_collides() {
        let m = instantiate_module(&ErrorConditionModel::new("e", "E"), &toner(), "e", "a", &split()).unwrap();
        let err = instantiate_module(&m, &toner(), "e", "a", &IndexMap::new()).unwrap_err();
        assert_eq!(
            err,
            LibraryError::IncompleteProbabilities(vec!["low".into(), "seal".into()])
        );
        assert!(matches!(
            instantiate_module(&m, &toner(), "toner.a.low", "a", &split()),
            Err(LibraryError::IdCollision(_))
        ));
    }

    #[test]
    fn sibling_sums_are_checked() {
        let mut bad = split();
        bad["seal"] = 0.5;
        assert!(matches!(
            instantiate_module(&light_print(), &toner(), "cart", "a", &bad),
            Err(LibraryError::SiblingSumViolation { .. })
        ));
        assert!(matches!(
            instantiate_module(&light_print(), &toner(), "lp", "a", &split()),
            Err(LibraryError::SiblingSumViolation { .. })
        ));
    }

    #[test]
    fn top_level_priors_are_rejected() {
        let mut module = toner();
        module.causes[0].cond_prob = Some(0.6);
        assert!(matches!(
            instantiate_module(&light_print(), &module, "cart", "a", &split()),
            Err(LibraryError::InvalidModule { .. })
        ));
    }

    fn library(module: LibraryModule) -> Library {
        let mut lib = Library::default();
        lib.insert(module);
        lib
    }

    #[test]
    fn rename_is_mirrored_and_idempotent() {
        let m = instantiate_module(&light_print(), &toner(), "cart", "a", &split()).unwrap();
        let mut corpus = vec![m.clone(), m];
        let mut module = toner();
        module.version = 2;
        module.actions[0].name = "Shake the cartridge".into();
        let lib = library(module);

        let report = propagate_module_change(&lib, "toner", &mut corpus).unwrap();
        assert_eq!(report.touched_models, vec!["lp", "lp"]);
        for m in &corpus {
            assert_eq!(m.action("toner.a.shake").unwrap().name, "Shake the cartridge");
            assert_eq!(m.cause_tree.find("toner.a.low").unwrap().cond_prob, Some(0.6));
        }
        let before = corpus.clone();
        let again = propagate_module_change(&lib, "toner", &mut corpus).unwrap();
        assert!(again.changes.is_empty() && again.touched_models.is_empty());
        assert_eq!(corpus, before);
    }

    #[test]
    fn new_subcause_arrives_without_probability() {
        let m = instantiate_module(&light_print(), &toner(), "cart", "a", &split()).unwrap();
        let mut corpus = vec![m];
        let mut module = toner();
        module.version = 2;
        module.causes.push(TemplateCause::new("worn", "Drum worn"));
        propagate_module_change(&library(module), "toner", &mut corpus).unwrap();
        assert_eq!(corpus[0].cause_tree.find("toner.a.worn").unwrap().cond_prob, None);
        assert!(validate_model(&corpus[0]).has_error("missing-probability"));
    }

    #[test]
    fn local_edit_is_a_conflict() {
        let mut m = instantiate_module(&light_print(), &toner(), "cart", "a", &split()).unwrap();
        m.actions[0].name = "Local wording".into();
        let mut corpus = vec![m.clone()];
        let mut module = toner();
        module.version = 2;
        module.actions[0].name = "Shake the cartridge".into();
        let report = propagate_module_change(&library(module), "toner", &mut corpus).unwrap();
        assert_eq!(report.conflicts.len(), 1);
        assert_eq!(report.conflicts[0].paths, vec!["actions/toner.a.shake/name"]);
        assert_eq!(corpus[0], m);
    }

    #[test]
    fn unknown_module() {
        assert_eq!(
            propagate_module_change(&Library::default(), "x", &mut []),
            Err(LibraryError::UnknownModule("x".into()))
        );
    }

    fn printers() -> Vec<ErrorConditionModel> {
        (0..3)
            .map(|i| {
                let mut m = ErrorConditionModel::new(format!("m{i}"), "LaserJet 4 light print");
                m.cause_tree.children = vec![CauseNode::new("LaserJet 4 toner", "Toner", 1.0)];
                m.cause_tree.children[0].explanation = "Seen on the LaserJet 4 only".into();
                m
            })
            .collect()
    }

    #[test]
    fn replace_touches_text_only() {
        let mut corpus = printers();
        let hits = search_replace(&mut corpus, "LaserJet 4", "LaserJet 5", ReplaceScope::Both, false);
        assert_eq!(hits.len(), 9);
        assert_eq!(hits[1].path, "/cause_tree/name");
        assert_eq!(corpus[0].cause_tree.children[0].id, "LaserJet 4 toner");
        assert_eq!(
            corpus[2].cause_tree.children[0].explanation,
            "Seen on the LaserJet 5 only"
        );
    }

    #[test]
    fn dry_run_matches_apply() {
        let mut corpus = printers();
        let dry = search_replace(&mut corpus, "LaserJet 4", "LaserJet 5", ReplaceScope::Names, true);
        assert_eq!(corpus, printers());
        let applied = search_replace(&mut corpus, "LaserJet 4", "LaserJet 5", ReplaceScope::Names, false);
        assert_eq!(dry, applied);
        assert!(search_replace(&mut corpus, "nothing", "x", ReplaceScope::Both, false).is_empty());
    }
}
