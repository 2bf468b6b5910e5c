use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{CauseNode, CostFactors, ErrorConditionModel, Question, QuestionKind, ShortcutEffect};

const SUM_TOL: f64 = 1e-9;

/// One validation finding. `path` is a JSON pointer into the model document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: &str) -> bool {
        self.errors.iter().any(|f| f.code == code)
    }

    pub fn has_warning(&self, code: &str) -> bool {
        self.warnings.iter().any(|f| f.code == code)
    }

    pub fn summary(&self) -> String {
        format!("{} errors, {} warnings", self.errors.len(), self.warnings.len())
    }

    fn error(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        });
    }
}

fn is_prob(p: f64) -> bool {
    p.is_finite() && (0.0..=1.0).contains(&p)
}

/// Checks every structural invariant of a model. Never fails; all findings
/// land in the report.
pub fn validate_model(model: &ErrorConditionModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: HashMap<&str, String> = HashMap::new();

    check_tree(&model.cause_tree, "/cause_tree", true, &mut seen, &mut report);

    let leaves: HashSet<&str> = model.cause_tree.leaves().into_iter().map(|n| n.id.as_str()).collect();
    let check_cause_ref = |report: &mut ValidationReport, id: &str, path: &str| {
        if leaves.contains(id) {
            return;
        }
        if model.cause_tree.find(id).is_some() {
            report.error("not-a-leaf", path, format!("cause '{id}' is not a leaf cause"));
        } else {
            report.error("unknown-cause", path, format!("no cause with id '{id}'"));
        }
    };

    for (i, action) in model.actions.iter().enumerate() {
        let path = format!("/actions/{i}");
        claim_id(&mut seen, &action.id, &path, &mut report);
        if action.solves.is_empty() {
            report.warn(
                "orphan-action",
                &path,
                format!("action '{}' does not solve any cause", action.id),
            );
        }
        for (cause, p) in &action.solves {
            let cpath = format!("{path}/solves/{cause}");
            check_cause_ref(&mut report, cause, &cpath);
            if !is_prob(*p) {
                report.error("probability-range", &cpath, format!("{p} is not a probability"));
            }
        }
        for (field, p) in [("p_correct", action.p_correct), ("p_requisites", action.p_requisites)] {
            if !is_prob(p) {
                report.error(
                    "probability-range",
                    format!("{path}/{field}"),
                    format!("{p} is not a probability"),
                );
            }
        }
        check_costs(&action.costs, &format!("{path}/costs"), &mut report);
    }

    for (i, q) in model.questions.iter().enumerate() {
        let path = format!("/questions/{i}");
        claim_id(&mut seen, &q.id, &path, &mut report);
        check_question(q, &path, leaves.len(), &check_cause_ref, &mut report);
    }

    for (i, dep) in model.dependencies.iter().enumerate() {
        let path = format!("/dependencies/{i}");
        if model.action(&dep.action_id).is_none() {
            report.error(
                "unknown-step",
                format!("{path}/action_id"),
                format!("no action with id '{}'", dep.action_id),
            );
        }
        match model.question(&dep.question_id) {
            None => report.error(
                "unknown-step",
                format!("{path}/question_id"),
                format!("no question with id '{}'", dep.question_id),
            ),
            Some(q) if q.answer_index(&dep.fixed_answer).is_none() => report.error(
                "unknown-answer",
                format!("{path}/fixed_answer"),
                format!("'{}' is not an answer of '{}'", dep.fixed_answer, q.id),
            ),
            Some(_) => {}
        }
    }

    let solved: HashSet<&str> = model
        .actions
        .iter()
        .flat_map(|a| a.solves.keys().map(String::as_str))
        .collect();
    let mut leaf_paths = Vec::new();
    collect_leaf_paths(&model.cause_tree, "/cause_tree".to_string(), &mut leaf_paths);
    // A childless root is an empty model, not an orphan.
    let leaf_paths = if model.cause_tree.children.is_empty() {
        Vec::new()
    } else {
        leaf_paths
    };
    for (id, path) in leaf_paths {
        if !solved.contains(id) {
            report.warn(
                "orphan-cause",
                path,
                format!("cause '{id}' is not solved by any action"),
            );
        }
    }

    report
}

fn claim_id<'a>(seen: &mut HashMap<&'a str, String>, id: &'a str, path: &str, report: &mut ValidationReport) {
    if id.is_empty() {
        report.error("empty-id", path, "ids must be non-empty");
    } else if let Some(first) = seen.get(id) {
        report.error("duplicate-id", path, format!("id '{id}' already used at {first}"));
    } else {
        seen.insert(id, path.to_string());
    }
}

fn check_tree<'a>(
    node: &'a CauseNode,
    path: &str,
    is_root: bool,
    seen: &mut HashMap<&'a str, String>,
    report: &mut ValidationReport,
) {
    claim_id(seen, &node.id, path, report);
    match node.cond_prob {
        None => report.error(
            "missing-probability",
            path,
            format!("cause '{}' has no probability", node.id),
        ),
        Some(p) if is_root && (p - 1.0).abs() > 1e-12 => report.error(
            "root-probability",
            path,
            format!("root must have cond_prob 1, found {p}"),
        ),
        Some(p) if !(p.is_finite() && p > 0.0 && p <= 1.0) => report.error(
            "cond-prob-range",
            path,
            format!("cond_prob of '{}' must lie in (0, 1], found {p}", node.id),
        ),
        Some(_) => {}
    }
    if !node.children.is_empty() {
        let probs: Option<Vec<f64>> = node.children.iter().map(|c| c.cond_prob).collect();
        if let Some(probs) = probs {
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                report.error(
                    "sibling-sum",
                    path,
                    format!("children of '{}' sum to {sum}, residual {}", node.id, 1.0 - sum),
                );
            }
        }
    }
    for (i, child) in node.children.iter().enumerate() {
        check_tree(child, &format!("{path}/children/{i}"), false, seen, report);
    }
}

fn collect_leaf_paths<'a>(node: &'a CauseNode, path: String, out: &mut Vec<(&'a str, String)>) {
    if node.is_leaf() {
        out.push((&node.id, path));
        return;
    }
    for (i, c) in node.children.iter().enumerate() {
        collect_leaf_paths(c, format!("{path}/children/{i}"), out);
    }
}

fn check_costs(costs: &CostFactors, path: &str, report: &mut ValidationReport) {
    if !(costs.time.is_finite() && costs.time >= 0.0) {
        report.error(
            "cost-range",
            format!("{path}/time"),
            "time must be finite and non-negative",
        );
    }
    if !(costs.money.is_finite() && costs.money >= 0.0) {
        report.error(
            "cost-range",
            format!("{path}/money"),
            "money must be finite and non-negative",
        );
    }
    if costs.risk > 4 {
        report.error("cost-range", format!("{path}/risk"), "risk is a level between 0 and 4");
    }
    if costs.insult > 4 {
        report.error(
            "cost-range",
            format!("{path}/insult"),
            "insult is a level between 0 and 4",
        );
    }
}

fn check_distribution(values: &[f64], n: usize, path: &str, report: &mut ValidationReport) {
    if values.len() != n {
        report.error(
            "length-mismatch",
            path,
            format!("expected {n} entries, found {}", values.len()),
        );
        return;
    }
    if let Some(p) = values.iter().find(|p| !is_prob(**p)) {
        report.error("probability-range", path, format!("{p} is not a probability"));
        return;
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        report.error("distribution-sum", path, format!("entries sum to {sum}"));
    }
}

fn check_question(
    q: &Question,
    path: &str,
    leaf_count: usize,
    check_cause_ref: &impl Fn(&mut ValidationReport, &str, &str),
    report: &mut ValidationReport,
) {
    let n = q.answers.len();
    if n < 2 {
        report.error(
            "too-few-answers",
            format!("{path}/answers"),
            "a question needs at least two answers",
        );
    }
    let mut labels = HashSet::new();
    for (i, a) in q.answers.iter().enumerate() {
        if !labels.insert(a.as_str()) {
            report.error(
                "duplicate-answer",
                format!("{path}/answers/{i}"),
                format!("answer '{a}' declared twice"),
            );
        }
    }
    check_costs(&q.costs, &format!("{path}/costs"), report);

    let associated = q.associated_causes();
    if associated.is_empty() {
        report.warn(
            "empty-question",
            path,
            format!("question '{}' is associated with no cause", q.id),
        );
    }

    match &q.kind {
        QuestionKind::Symptom {
            given_cause,
            given_none,
        } => {
            for (cause, row) in given_cause {
                let cpath = format!("{path}/kind/given_cause/{cause}");
                check_cause_ref(report, cause, &cpath);
                check_distribution(row, n, &cpath, report);
            }
            let exhausts = given_cause.len() >= leaf_count;
            if !(exhausts && given_none.is_empty()) {
                check_distribution(given_none, n, &format!("{path}/kind/given_none"), report);
            }
        }
        QuestionKind::General {
            answer_prior,
            cause_given_answer,
        } => {
            check_distribution(answer_prior, n, &format!("{path}/kind/answer_prior"), report);
            for (cause, cells) in cause_given_answer {
                let cpath = format!("{path}/kind/cause_given_answer/{cause}");
                check_cause_ref(report, cause, &cpath);
                if cells.len() != n {
                    report.error(
                        "length-mismatch",
                        &cpath,
                        format!("expected {n} entries, found {}", cells.len()),
                    );
                    continue;
                }
                let missing = cells.iter().filter(|c| c.is_none()).count();
                if missing > 0 && (n != 2 || missing > 1) {
                    report.error(
                        "missing-cell",
                        &cpath,
                        "only one cell of a binary question may be left for derivation",
                    );
                }
                if let Some(p) = cells.iter().flatten().find(|p| !is_prob(**p)) {
                    report.error("probability-range", &cpath, format!("{p} is not a probability"));
                }
            }
        }
        QuestionKind::Shortcut { effects, associated } => {
            for id in associated {
                check_cause_ref(report, id, &format!("{path}/kind/associated"));
            }
            for (answer, effect) in effects {
                let apath = format!("{path}/kind/effects/{answer}");
                if q.answer_index(answer).is_none() {
                    report.error(
                        "unknown-answer",
                        &apath,
                        format!("'{answer}' is not an answer of '{}'", q.id),
                    );
                }
                match effect {
                    ShortcutEffect::Eliminates(ids) => {
                        for id in ids {
                            check_cause_ref(report, id, &apath);
                        }
                    }
                    ShortcutEffect::Identifies(id) => check_cause_ref(report, id, &apath),
                }
            }
        }
    }
}
