use bats_core::model::{validate_model, QuestionKind};
use bats_core::persistence::load_model;
use bats_web::{move_slider, question_view, sample_model, set_cond_prob, tree_view, Troubleshooter};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn node<'a>(view: &'a Value, id: &str) -> &'a Value {
    view["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["id"] == id)
        .unwrap()
}

#[test]
fn tree_view_reports_aggregates() {
    let view = parse(&tree_view(&sample_model()).unwrap());
    let leaves = view["leaves"].as_object().unwrap();
    let total: f64 = leaves.values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let cartridge = node(&view, "cartridge");
    assert_eq!(cartridge["depth"], 1);
    let sum = leaves["toner-low"].as_f64().unwrap() + leaves["toner-dist"].as_f64().unwrap();
    assert!((cartridge["aggregate"].as_f64().unwrap() - sum).abs() < 1e-15);
    assert!((sum - 0.55).abs() < 1e-12);
    assert_eq!(view["report"]["errors"].as_array().unwrap().len(), 0);
}

#[test]
fn editing_a_probability_rescales_siblings() {
    let updated = set_cond_prob(&sample_model(), "cartridge", 0.4).unwrap();
    let model = load_model(&updated).unwrap();
    assert!(validate_model(&model).is_ok());
    let probs: Vec<f64> = model.cause_tree.children.iter().map(|c| c.cond_prob.unwrap()).collect();
    // The other three (0.25, 0.12, 0.08) share the remaining 0.6.
    let expected = [0.4, 0.25 * 0.6 / 0.45, 0.12 * 0.6 / 0.45, 0.08 * 0.6 / 0.45];
    for (p, e) in probs.iter().zip(expected) {
        assert!((p - e).abs() < 1e-12);
    }
    let view = parse(&tree_view(&updated).unwrap());
    assert!((node(&view, "cartridge")["aggregate"].as_f64().unwrap() - 0.4).abs() < 1e-12);

    assert!(set_cond_prob(&sample_model(), "light-print", 0.5).is_err());
    assert!(set_cond_prob(&sample_model(), "nope", 0.5).is_err());
    assert!(set_cond_prob(&sample_model(), "density", 1.5).is_err());
}

#[test]
fn slider_keeps_the_consistency_equation() {
    let before = parse(&question_view(&sample_model(), "settings-changed").unwrap());
    assert_eq!(before["table"]["answers"], serde_json::json!(["yes", "no"]));

    let out = parse(&move_slider(&sample_model(), "settings-changed", "density", "yes", 0.9).unwrap());
    assert_eq!(out["changed_cells"].as_array().unwrap().len(), 2);
    let row = &out["table"]["cells"]["density"];
    let prior = &out["table"]["answer_prior"];
    let lhs =
        row[0].as_f64().unwrap() * prior[0].as_f64().unwrap() + row[1].as_f64().unwrap() * prior[1].as_f64().unwrap();
    assert!((lhs - 0.25).abs() < 1e-12);

    let model = load_model(out["model"].as_str().unwrap()).unwrap();
    let QuestionKind::General { cause_given_answer, .. } = &model.question("settings-changed").unwrap().kind else {
        panic!("slider result is stored as a General question")
    };
    assert_eq!(cause_given_answer["density"][0], Some(0.9));

    assert!(move_slider(&sample_model(), "uniform", "density", "yes", 0.5).is_err());
    assert!(move_slider(&sample_model(), "settings-changed", "density", "maybe", 0.5).is_err());
}

#[test]
fn troubleshooter_round_trip() {
    let mut t = Troubleshooter::new(&sample_model()).unwrap();
    let start = t.view().unwrap();
    let first = parse(&start)["next"]["step_id"].as_str().unwrap().to_string();

    let after = parse(&t.record(&first, "no", 1).unwrap());
    assert_eq!(after["history"].as_array().unwrap().len(), 1);
    let total: f64 = after["posterior"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["p"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_ne!(after["next"]["step_id"], first.as_str());

    assert_eq!(t.undo().unwrap(), start);
    assert!(t.undo().is_err());
    assert!(t.record("nope", "no", 1).is_err());

    let done = parse(&t.record(&first, "yes", 1).unwrap());
    assert_eq!(done["status"]["state"], "resolved");
    assert_eq!(done["next"]["type"], "terminal");
    assert!(t.record("load-paper", "no", 1).is_err());
}
