use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use bats_core::compiler::compile_model;
use bats_core::librarian::{LibraryModule, TemplateCause};
use bats_core::model::{Action, CauseNode, CostFactors, ErrorConditionModel};
use bats_core::persistence::{load_model, load_network, save_model, save_module};
use bats_core::samples::{light_print, standard_weights};

fn bats() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bats"));
    cmd.env_remove("BATS_CONFIG");
    cmd
}

fn run_with(cmd: &mut Command, stdin: &str) -> Output {
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn run(dir: &Path, args: &[&str]) -> Output {
    run_with(bats().current_dir(dir).args(args), "")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("light-print.bats.json");
    std::fs::write(&path, save_model(&light_print())).unwrap();
    (dir, path)
}

fn one_certain_action() -> ErrorConditionModel {
    let mut m = ErrorConditionModel::new("jam", "Paper jam");
    m.cause_tree.children = vec![CauseNode::new("sheet", "Stuck sheet", 1.0)];
    m.actions = vec![Action::repair("clear", "Clear the paper path")
        .solving("sheet", 1.0)
        .costing(CostFactors::minutes(1.0))];
    m
}

#[test]
fn shipped_sample_matches_the_builtin_model() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/light-print.bats.json");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text, save_model(&light_print()));
}

#[test]
fn validate_good_file() {
    let (dir, _) = workspace();
    let o = run(dir.path(), &["validate", "light-print.bats.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 errors, 0 warnings"));
}

#[test]
fn validate_bad_file_exits_2() {
    let (dir, _) = workspace();
    let mut m = light_print();
    m.cause_tree.children[0].cond_prob = Some(0.9);
    std::fs::write(dir.path().join("bad.bats.json"), save_model(&m)).unwrap();
    let o = run(dir.path(), &["validate", "light-print.bats.json", "bad.bats.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("sibling-sum"));
    assert!(stderr(&o).starts_with("ERROR ValidationFailed: 1 of 2"));
}

#[test]
fn exit_codes_and_error_prefix() {
    let (dir, _) = workspace();
    let o = run(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR UsageError:"));

    let o = run(dir.path(), &["compile", "missing.bats.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("ERROR IoError:"));

    std::fs::write(dir.path().join("broken.bats.json"), "{").unwrap();
    let o = run(dir.path(), &["compile", "broken.bats.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR ParseError:"));

    let o = run(dir.path(), &["compile", "light-print.bats.json", "--profile", "expert"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR UnknownProfile:"));
}

#[test]
fn config_resolution() {
    let (dir, _) = workspace();
    let expert = r#"{"profiles": [{"profile_name": "expert", "alpha": 1.0, "beta": 0.0, "gamma": 0.0, "delta": 0.0}], "default_profile": "expert"}"#;
    std::fs::write(dir.path().join("bats.config.json"), expert).unwrap();
    let o = run(dir.path(), &["compile", "light-print.bats.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"profile\": \"expert\""));

    std::fs::write(dir.path().join("other.json"), r#"{"default_profile": "missing"}"#).unwrap();
    let o = run_with(
        bats()
            .current_dir(dir.path())
            .env("BATS_CONFIG", "other.json")
            .args(["compile", "light-print.bats.json"]),
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR ConfigError:"));

    let o = run(
        dir.path(),
        &["--config", "other.json", "compile", "light-print.bats.json"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compile_writes_a_loadable_network() {
    let (dir, _) = workspace();
    let o = run(dir.path(), &["compile", "light-print.bats.json", "-o", "net.json"]);
    assert_eq!(o.status.code(), Some(0));
    let net = load_network(&std::fs::read_to_string(dir.path().join("net.json")).unwrap()).unwrap();
    assert_eq!(net, compile_model(&light_print(), &standard_weights()).unwrap());
}

#[test]
fn simulate_is_byte_reproducible() {
    let (dir, _) = workspace();
    let args = [
        "simulate",
        "light-print.bats.json",
        "--trials",
        "3000",
        "--seed",
        "7",
        "--policy",
        "planner",
    ];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["trials"], 3000);

    let mut other = args;
    other[5] = "8";
    assert_ne!(run(dir.path(), &other).stdout, a.stdout);
}

#[test]
fn replace_dry_run_leaves_files_alone() {
    let (dir, path) = workspace();
    let mut second = light_print();
    second.id = "light-print-2".into();
    let second_path = dir.path().join("second.bats.json");
    std::fs::write(&second_path, save_model(&second)).unwrap();
    let before = (std::fs::read(&path).unwrap(), std::fs::read(&second_path).unwrap());

    let args = [
        "replace",
        "--find",
        "cartridge",
        "--with",
        "drum",
        "--dry-run",
        "light-print.bats.json",
        "second.bats.json",
    ];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    assert!(report.contains("/actions/0/explanation"));
    assert!(report.trim_end().ends_with("would change 2 file(s)"));
    assert_eq!(
        (std::fs::read(&path).unwrap(), std::fs::read(&second_path).unwrap()),
        before
    );

    let o = run(
        dir.path(),
        &args[..5].iter().chain(&args[6..]).copied().collect::<Vec<_>>(),
    );
    assert_eq!(o.status.code(), Some(0));
    let changed = load_model(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(changed.actions[0].explanation.contains("drum"));
    assert_eq!(changed.cause_tree.find("cartridge").unwrap().name, "Toner drum");
    assert_eq!(changed.actions[1].id, "replace-cartridge");
}

fn posterior_lines(transcript: &str) -> Vec<Vec<(String, f64)>> {
    transcript
        .lines()
        .filter_map(|l| l.strip_prefix("posterior: "))
        .map(|l| {
            l.split(' ')
                .map(|cell| {
                    let (c, p) = cell.split_once('=').unwrap();
                    (c.to_string(), p.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

fn recommended_steps(transcript: &str) -> Vec<String> {
    transcript
        .lines()
        .filter(|l| l.starts_with('['))
        .map(|l| l[l.rfind('(').unwrap() + 1..l.len() - 1].to_string())
        .collect()
}

#[test]
fn scripted_run_matches_a_direct_posterior() {
    let (dir, _) = workspace();
    let o = run_with(
        bats().current_dir(dir.path()).args(["run", "light-print.bats.json"]),
        "no\nno\nno\nquit\n",
    );
    assert_eq!(o.status.code(), Some(0));
    let transcript = stdout(&o);
    let steps = recommended_steps(&transcript);
    let lines = posterior_lines(&transcript);
    assert_eq!(lines.len(), 3);

    // Independent oracle: multiply the prior by the likelihood of every
    // observed outcome, including answers fixed by dependency rules.
    let model = light_print();
    let net = compile_model(&model, &standard_weights()).unwrap();
    let mut unnormalized: Vec<f64> = net.prior.entries.values().copied().collect();
    let observe = |u: &mut Vec<f64>, step: &str, outcome: &str| {
        let s = net.step(step).unwrap();
        let row = &s.likelihood[s.outcome_index(outcome).unwrap()];
        u.iter_mut().zip(row).for_each(|(u, l)| *u *= l);
    };
    for (step, line) in steps.iter().zip(&lines) {
        observe(&mut unnormalized, step, "no");
        for rule in model.dependencies.iter().filter(|r| &r.action_id == step) {
            observe(&mut unnormalized, &rule.question_id, &rule.fixed_answer);
        }
        let total: f64 = unnormalized.iter().sum();
        for ((id, printed), (leaf, u)) in line.iter().zip(net.prior.entries.keys().zip(&unnormalized)) {
            assert_eq!(id, leaf);
            assert!((printed - u / total).abs() < 1e-12, "{id}: {printed} vs {}", u / total);
        }
    }
    assert!(transcript.contains("QUIT"));
    assert!(transcript.contains("history (3 steps):"));
}

#[test]
fn certain_action_resolves_in_one_step() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("jam.bats.json"), save_model(&one_certain_action())).unwrap();
    let o = run_with(bats().current_dir(dir.path()).args(["run", "jam.bats.json"]), "yes\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let transcript = stdout(&o);
    assert_eq!(recommended_steps(&transcript), vec!["clear"]);
    assert!(transcript.contains("RESOLVED by clear"));
    assert!(transcript.contains("history (1 steps):"));
}

#[test]
fn undo_shows_the_previous_recommendation_again() {
    let (dir, _) = workspace();
    let o = run_with(
        bats().current_dir(dir.path()).args(["run", "light-print.bats.json"]),
        "no\nundo\n",
    );
    let steps = recommended_steps(&stdout(&o));
    assert_eq!(steps.len(), 3);
    assert_eq!(steps[0], steps[2]);
    assert_ne!(steps[0], steps[1]);
}

fn toner_module(version: u32, name: &str) -> LibraryModule {
    LibraryModule {
        id: "toner".into(),
        name: "Toner supply".into(),
        version,
        causes: vec![
            TemplateCause::new("low", name),
            TemplateCause::new("clog", "Clogged outlet"),
        ],
        actions: vec![Action::repair("refill", "Refill toner")
            .solving("low", 0.9)
            .costing(CostFactors::minutes(3.0))],
        questions: vec![],
    }
}

#[test]
fn library_add_list_instantiate_and_propagate() {
    let dir = tempfile::tempdir().unwrap();
    let mut host = ErrorConditionModel::new("host", "Host");
    host.cause_tree.children = vec![
        CauseNode::new("other", "Other", 0.5),
        CauseNode::new("supply", "Supply", 0.5),
    ];
    host.actions = vec![Action::repair("fix-other", "Fix other").solving("other", 0.8)];
    std::fs::write(dir.path().join("host.bats.json"), save_model(&host)).unwrap();
    std::fs::write(
        dir.path().join("toner-v1.json"),
        save_module(&toner_module(1, "Toner low")),
    )
    .unwrap();

    let o = run(dir.path(), &["lib", "add", "toner-v1.json", "--dir", "lib"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(dir.path(), &["lib", "list", "--dir", "lib"]);
    assert!(stdout(&o).starts_with("toner\tv1\tToner supply\t2 causes, 1 actions, 0 questions\n"));

    let o = run(
        dir.path(),
        &[
            "lib",
            "instantiate",
            "toner",
            "--dir",
            "lib",
            "--into",
            "host.bats.json",
            "--at",
            "supply",
            "--instance",
            "a",
            "--prob",
            "low=0.7",
            "--prob",
            "clog=0.3",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = load_model(&std::fs::read_to_string(dir.path().join("host.bats.json")).unwrap()).unwrap();
    assert_eq!(model.cause_tree.find("toner.a.low").unwrap().cond_prob, Some(0.7));
    assert!(model.action("toner.a.refill").is_some());

    std::fs::write(
        dir.path().join("toner-v1b.json"),
        save_module(&toner_module(1, "Toner empty")),
    )
    .unwrap();
    let o = run(dir.path(), &["lib", "add", "toner-v1b.json", "--dir", "lib"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR VersionNotNewer:"));

    std::fs::write(
        dir.path().join("toner-v2.json"),
        save_module(&toner_module(2, "Toner empty")),
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "lib",
            "add",
            "toner-v2.json",
            "--dir",
            "lib",
            "--propagate",
            "host.bats.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("updated 1 model(s), 0 conflict(s)"));
    let model = load_model(&std::fs::read_to_string(dir.path().join("host.bats.json")).unwrap()).unwrap();
    assert_eq!(model.cause_tree.find("toner.a.low").unwrap().name, "Toner empty");
    assert_eq!(model.cause_tree.find("toner.a.low").unwrap().cond_prob, Some(0.7));
}

#[test]
fn serve_answers_health_checks() {
    let (dir, _) = workspace();
    let mut child = bats()
        .current_dir(dir.path())
        .args(["serve", "--bind", "127.0.0.1:0", "light-print.bats.json"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();

    let get = |path: &str| {
        let mut stream = std::net::TcpStream::connect(&addr).unwrap();
        write!(stream, "GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
        let mut response = String::new();
        stream.read_to_string(&mut response).unwrap();
        response
    };
    let health = get("/api/health");
    let models = get("/api/models");
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(health.starts_with("HTTP/1.1 200"));
    assert!(health.ends_with(r#"{"status":"ok"}"#));
    assert!(models.contains(r#""id":"light-print""#));
}
