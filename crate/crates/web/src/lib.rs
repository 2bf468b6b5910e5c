//! WebAssembly face of `bats_core` for the static demo page in `www/`.
//!
//! All data crosses the boundary as JSON strings in the persistence field
//! layout. The plain Rust functions carry the logic and are tested
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use std::sync::Arc;

use bats_core::compiler::compile_model;
use bats_core::elicitation::{
    aggregate_cause_probability, collapse_cause_tree, complete_general, slider_update, SliderEdit,
};
use bats_core::engine::Session;
use bats_core::model::{validate_model, CauseNode, ErrorConditionModel};
use bats_core::persistence::{load_model, parse_model, save_model, Strictness};
use bats_core::samples::{light_print, standard_weights};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

pub type DemoResult<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse(model_json: &str) -> DemoResult<ErrorConditionModel> {
    parse_model(model_json, Strictness::Strict)
        .map(|d| d.value)
        .map_err(err)
}

pub fn sample_model() -> String {
    save_model(&light_print())
}

/// Pre-order node list with aggregates, plus the leaf distribution. An
/// invalid tree yields its validation findings instead of numbers.
pub fn tree_view(model_json: &str) -> DemoResult<String> {
    let model = parse(model_json)?;
    let report = validate_model(&model);
    let dist = collapse_cause_tree(&model.cause_tree).ok();
    let mut nodes = Vec::new();
    fn walk(n: &CauseNode, depth: usize, out: &mut Vec<(usize, CauseNode)>) {
        out.push((depth, n.clone()));
        n.children.iter().for_each(|c| walk(c, depth + 1, out));
    }
    let mut flat = Vec::new();
    walk(&model.cause_tree, 0, &mut flat);
    for (depth, n) in flat {
        let aggregate = dist
            .as_ref()
            .and_then(|d| aggregate_cause_probability(d, &model.cause_tree, &n.id).ok());
        nodes.push(json!({
            "id": n.id,
            "name": n.name,
            "depth": depth,
            "cond_prob": n.cond_prob,
            "leaf": n.is_leaf(),
            "aggregate": aggregate,
        }));
    }
    Ok(json!({ "nodes": nodes, "leaves": dist, "report": report }).to_string())
}

/// Sets one conditional probability and rescales its siblings so the group
/// keeps summing to 1. Returns the updated model document.
pub fn set_cond_prob(model_json: &str, node_id: &str, value: f64) -> DemoResult<String> {
    if !(0.0..=1.0).contains(&value) {
        return Err(format!("{value} is not a probability"));
    }
    let mut model = parse(model_json)?;
    if model.cause_tree.id == node_id {
        return Err("the root probability is fixed at 1".into());
    }
    let mut found = false;
    model.cause_tree.walk_mut(&mut |parent| {
        let Some(k) = parent.children.iter().position(|c| c.id == node_id) else {
            return;
        };
        found = true;
        let others: f64 = (0..parent.children.len())
            .filter(|&i| i != k)
            .map(|i| parent.children[i].cond_prob.unwrap_or(0.0))
            .sum();
        let n_others = parent.children.len() - 1;
        for (i, c) in parent.children.iter_mut().enumerate() {
            c.cond_prob = Some(if i == k {
                value
            } else if others > 0.0 {
                c.cond_prob.unwrap_or(0.0) * (1.0 - value) / others
            } else {
                (1.0 - value) / n_others as f64
            });
        }
    });
    if !found {
        return Err(format!("unknown cause '{node_id}'"));
    }
    Ok(save_model(&model))
}

/// The complete table of a General (or Shortcut) question.
pub fn question_view(model_json: &str, question_id: &str) -> DemoResult<String> {
    let model = parse(model_json)?;
    let q = model
        .question(question_id)
        .ok_or_else(|| format!("unknown question '{question_id}'"))?;
    let prior = collapse_cause_tree(&model.cause_tree).map_err(err)?;
    let table = complete_general(q, &prior).map_err(err)?;
    Ok(json!({ "question": q.id, "text": q.name, "table": table }).to_string())
}

/// Moves one coupled slider. Returns the updated model, the changed cells
/// and the new table.
pub fn move_slider(model_json: &str, question_id: &str, cause: &str, answer: &str, value: f64) -> DemoResult<String> {
    let mut model = parse(model_json)?;
    let prior = collapse_cause_tree(&model.cause_tree).map_err(err)?;
    let q = model
        .question_mut(question_id)
        .ok_or_else(|| format!("unknown question '{question_id}'"))?;
    let table = complete_general(q, &prior).map_err(err)?;
    let edit = SliderEdit {
        cause: cause.into(),
        answer: answer.into(),
        value,
    };
    let (updated, changes) = slider_update(&table, &prior, &edit).map_err(err)?;
    q.kind = updated.to_question_kind();
    Ok(json!({ "model": save_model(&model), "changed_cells": changes, "table": updated }).to_string())
}

/// A troubleshooting session over a model compiled with the standard
/// weights.
#[wasm_bindgen]
pub struct Troubleshooter {
    session: Session,
    names: Vec<(String, String)>,
}

impl Troubleshooter {
    pub fn new(model_json: &str) -> DemoResult<Self> {
        let model = load_model(model_json).map_err(err)?;
        let net = compile_model(&model, &standard_weights()).map_err(err)?;
        let names = model
            .cause_tree
            .leaves()
            .iter()
            .map(|l| (l.id.clone(), l.name.clone()))
            .collect();
        Ok(Self {
            session: Session::new(Arc::new(net)),
            names,
        })
    }

    /// Status, posterior, next recommendation and history.
    pub fn view(&self) -> DemoResult<String> {
        let post = self.session.posterior().map_err(err)?;
        let posterior: Vec<Value> = self
            .names
            .iter()
            .map(|(id, name)| json!({ "id": id, "name": name, "p": post.get(id) }))
            .collect();
        let next = self.session.next_step().map_err(err)?;
        Ok(json!({
            "status": self.session.status(),
            "posterior": posterior,
            "next": next,
            "history": self.session.history(),
        })
        .to_string())
    }

    /// `timestamp` is Unix milliseconds from the host clock.
    pub fn record(&mut self, step_id: &str, outcome: &str, timestamp: u64) -> DemoResult<String> {
        self.session
            .record_at(step_id, outcome, Some(step_id.to_string()), timestamp)
            .map_err(err)?;
        if let Err(e) = self.session.posterior() {
            self.session.undo_last().map_err(err)?;
            return Err(e.to_string());
        }
        self.view()
    }

    pub fn undo(&mut self) -> DemoResult<String> {
        self.session.undo_last().map_err(err)?;
        self.view()
    }
}

fn js<T>(r: DemoResult<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
impl Troubleshooter {
    #[wasm_bindgen(constructor)]
    pub fn create(model_json: &str) -> Result<Troubleshooter, JsError> {
        js(Self::new(model_json))
    }

    #[wasm_bindgen(js_name = view)]
    pub fn view_js(&self) -> Result<String, JsError> {
        js(self.view())
    }

    #[wasm_bindgen(js_name = record)]
    pub fn record_js(&mut self, step_id: &str, outcome: &str) -> Result<String, JsError> {
        js(self.record(step_id, outcome, js_sys::Date::now() as u64))
    }

    #[wasm_bindgen(js_name = undo)]
    pub fn undo_js(&mut self) -> Result<String, JsError> {
        js(self.undo())
    }
}

#[wasm_bindgen(js_name = sampleModel)]
pub fn sample_model_js() -> String {
    sample_model()
}

#[wasm_bindgen(js_name = treeView)]
pub fn tree_view_js(model_json: &str) -> Result<String, JsError> {
    js(tree_view(model_json))
}

#[wasm_bindgen(js_name = setCondProb)]
pub fn set_cond_prob_js(model_json: &str, node_id: &str, value: f64) -> Result<String, JsError> {
    js(set_cond_prob(model_json, node_id, value))
}

#[wasm_bindgen(js_name = questionView)]
pub fn question_view_js(model_json: &str, question_id: &str) -> Result<String, JsError> {
    js(question_view(model_json, question_id))
}

#[wasm_bindgen(js_name = moveSlider)]
pub fn move_slider_js(
    model_json: &str,
    question_id: &str,
    cause: &str,
    answer: &str,
    value: f64,
) -> Result<String, JsError> {
    js(move_slider(model_json, question_id, cause, answer, value))
}
