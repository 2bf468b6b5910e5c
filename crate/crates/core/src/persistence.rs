//! On-disk JSON documents for models, library modules, compiled networks and
//! sessions.
//!
//! Every document is a JSON object whose first key is `schema_version`,
//! followed by the fields of the value in declaration order. Output is
//! pretty-printed with two-space indentation and a trailing newline, so
//! saving is a pure function of the value. Floats are written in shortest
//! round-trip form and load back bit-for-bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::compiler::CompiledNetwork;
use crate::engine::SessionState;
use crate::librarian::{Library, LibraryModule};
use crate::model::{validate_model, ErrorConditionModel, ValidationReport};

pub const MODEL_SCHEMA: &str = "bats-model/1";
pub const MODULE_SCHEMA: &str = "bats-module/1";
pub const NETWORK_SCHEMA: &str = "bats-network/1";
pub const SESSION_SCHEMA: &str = "bats-session/1";

pub const MODEL_SUFFIX: &str = ".bats.json";
pub const MODULE_SUFFIX: &str = ".batsmod.json";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PersistError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("expected schema_version '{expected}', found {}", found.as_deref().map_or("none".to_string(), |f| format!("'{f}'")))]
    SchemaVersionMismatch { expected: String, found: Option<String> },
    #[error("unknown fields: {}", .0.join(", "))]
    UnknownFields(Vec<String>),
    #[error("model violates invariants ({})", .0.summary())]
    InvariantViolation(ValidationReport),
    #[error("module '{id}' is invalid: {}", problems.join("; "))]
    InvalidModule { id: String, problems: Vec<String> },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("module id '{id}' is defined in {}", files.join(" and "))]
    DuplicateModuleId { id: String, files: Vec<String> },
    #[error("{} library file(s) failed to load", .0.len())]
    Library(Vec<FileError>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {error}")]
pub struct FileError {
    pub path: String,
    pub error: PersistError,
}

impl PersistError {
    pub fn code(&self) -> &'static str {
        match self {
            PersistError::Parse { .. } => "ParseError",
            PersistError::SchemaVersionMismatch { .. } => "SchemaVersionMismatch",
            PersistError::UnknownFields(_) => "UnknownFields",
            PersistError::InvariantViolation(_) => "InvariantViolation",
            PersistError::InvalidModule { .. } => "InvalidModule",
            PersistError::Io { .. } => "IoError",
            PersistError::DuplicateModuleId { .. } => "DuplicateModuleId",
            PersistError::Library(_) => "LibraryLoadError",
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        PersistError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Whether unrecognised keys abort loading or are carried along.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

/// A loaded value plus any unknown keys found in lenient mode, as
/// (JSON pointer, value) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Document<T> {
    pub value: T,
    pub extras: Vec<(String, Value)>,
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn unescape(segment: &str) -> String {
    segment.replace("~1", "/").replace("~0", "~")
}

/// Keys present in `input` but absent from the canonical re-serialization.
fn unknown_keys(input: &Value, canonical: &Value, path: &str, out: &mut Vec<(String, Value)>) {
    match (input, canonical) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = format!("{path}/{}", escape(k));
                match b.get(k) {
                    Some(c) => unknown_keys(v, c, &p, out),
                    None => out.push((p, v.clone())),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (v, c)) in a.iter().zip(b).enumerate() {
                unknown_keys(v, c, &format!("{path}/{i}"), out);
            }
        }
        _ => {}
    }
}

fn render(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    out.push('\n');
    out
}

fn to_document<T: Serialize>(schema: &str, value: &T, extras: &[(String, Value)]) -> String {
    let body = serde_json::to_value(value).expect("document types serialize to JSON");
    let mut map = Map::new();
    map.insert("schema_version".into(), Value::String(schema.into()));
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    let mut doc = Value::Object(map);
    for (pointer, v) in extras {
        let Some((parent, key)) = pointer.rsplit_once('/') else {
            continue;
        };
        if let Some(Value::Object(obj)) = doc.pointer_mut(parent) {
            obj.entry(unescape(key)).or_insert_with(|| v.clone());
        }
    }
    render(&doc)
}

fn from_document<T: Serialize + DeserializeOwned>(
    schema: &str,
    text: &str,
    strictness: Strictness,
) -> Result<Document<T>, PersistError> {
    let mut root: Value = serde_json::from_str(text).map_err(|e| PersistError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let found = root.get("schema_version").and_then(Value::as_str).map(str::to_string);
    if found.as_deref() != Some(schema) {
        return Err(PersistError::SchemaVersionMismatch {
            expected: schema.into(),
            found,
        });
    }
    if let Value::Object(map) = &mut root {
        map.shift_remove("schema_version");
    }
    let value: T = serde_json::from_value(root.clone()).map_err(|e| PersistError::Parse {
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    let canonical = serde_json::to_value(&value).expect("document types serialize to JSON");
    let mut extras = Vec::new();
    unknown_keys(&root, &canonical, "", &mut extras);
    if strictness == Strictness::Strict && !extras.is_empty() {
        return Err(PersistError::UnknownFields(
            extras.into_iter().map(|(p, _)| p).collect(),
        ));
    }
    Ok(Document { value, extras })
}

pub fn save_model(model: &ErrorConditionModel) -> String {
    to_document(MODEL_SCHEMA, model, &[])
}

/// Saves a model together with the unknown keys it was loaded with.
pub fn save_model_document(doc: &Document<ErrorConditionModel>) -> String {
    to_document(MODEL_SCHEMA, &doc.value, &doc.extras)
}

/// Parses a model document without validating it.
pub fn parse_model(text: &str, strictness: Strictness) -> Result<Document<ErrorConditionModel>, PersistError> {
    from_document(MODEL_SCHEMA, text, strictness)
}

/// Parses and validates a model document.
pub fn load_model_document(text: &str, strictness: Strictness) -> Result<Document<ErrorConditionModel>, PersistError> {
    let doc = parse_model(text, strictness)?;
    let report = validate_model(&doc.value);
    if !report.is_ok() {
        return Err(PersistError::InvariantViolation(report));
    }
    Ok(doc)
}

pub fn load_model(text: &str) -> Result<ErrorConditionModel, PersistError> {
    load_model_document(text, Strictness::Strict).map(|d| d.value)
}

pub fn save_module(module: &LibraryModule) -> String {
    to_document(MODULE_SCHEMA, module, &[])
}

pub fn load_module(text: &str) -> Result<LibraryModule, PersistError> {
    let module: LibraryModule = from_document(MODULE_SCHEMA, text, Strictness::Strict)?.value;
    let problems = module.problems();
    if !problems.is_empty() {
        return Err(PersistError::InvalidModule {
            id: module.id,
            problems,
        });
    }
    Ok(module)
}

pub fn save_network(network: &CompiledNetwork) -> String {
    to_document(NETWORK_SCHEMA, network, &[])
}

pub fn load_network(text: &str) -> Result<CompiledNetwork, PersistError> {
    from_document(NETWORK_SCHEMA, text, Strictness::Strict).map(|d| d.value)
}

pub fn save_session(state: &SessionState) -> String {
    to_document(SESSION_SCHEMA, state, &[])
}

pub fn load_session(text: &str) -> Result<SessionState, PersistError> {
    from_document(SESSION_SCHEMA, text, Strictness::Strict).map(|d| d.value)
}

pub fn model_file_name(model_id: &str) -> String {
    format!("{model_id}{MODEL_SUFFIX}")
}

pub fn module_file_name(module_id: &str) -> String {
    format!("{module_id}{MODULE_SUFFIX}")
}

pub fn read_model_file(path: &Path) -> Result<ErrorConditionModel, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
    load_model(&text)
}

pub fn write_model_file(path: &Path, model: &ErrorConditionModel) -> Result<(), PersistError> {
    fs::write(path, save_model(model)).map_err(|e| PersistError::io(path, e))
}

/// Writes a module into a library directory under its canonical file name.
pub fn write_module_file(dir: &Path, module: &LibraryModule) -> Result<PathBuf, PersistError> {
    let path = dir.join(module_file_name(&module.id));
    fs::write(&path, save_module(module)).map_err(|e| PersistError::io(&path, e))?;
    Ok(path)
}

/// Loads every `*.batsmod.json` file of a directory. Per-file failures are
/// collected and reported together.
pub fn load_library(dir: &Path) -> Result<Library, PersistError> {
    let entries = fs::read_dir(dir).map_err(|e| PersistError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(MODULE_SUFFIX)))
        .collect();
    paths.sort();

    let mut library = Library::default();
    let mut origin: std::collections::BTreeMap<String, String> = Default::default();
    let mut failures = Vec::new();
    for path in paths {
        let shown = path.display().to_string();
        let loaded = fs::read_to_string(&path)
            .map_err(|e| PersistError::io(&path, e))
            .and_then(|text| load_module(&text));
        match loaded {
            Ok(module) => {
                if let Some(first) = origin.get(&module.id) {
                    return Err(PersistError::DuplicateModuleId {
                        id: module.id,
                        files: vec![first.clone(), shown],
                    });
                }
                origin.insert(module.id.clone(), shown);
                library.insert(module);
            }
            Err(error) => failures.push(FileError { path: shown, error }),
        }
    }
    if !failures.is_empty() {
        return Err(PersistError::Library(failures));
    }
    Ok(library)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::librarian::TemplateCause;
    use crate::model::{Action, CauseNode, CostFactors};

    fn model() -> ErrorConditionModel {
        let mut m = ErrorConditionModel::new("m", "Light print");
        m.cause_tree.children = vec![
            CauseNode::new("F1", "Toner low", 0.2),
            CauseNode::new("F2", "Density setting", 0.3),
            CauseNode::new("F3", "Paper", 0.5),
        ];
        m.actions = vec![Action::repair("A", "Shake toner")
            .solving("F1", 0.7)
            .costing(CostFactors::minutes(2.5))];
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let text = save_model(&m);
        assert!(text.starts_with("{\n  \"schema_version\": \"bats-model/1\",\n  \"id\""));
        assert!(text.ends_with("}\n"));
        assert_eq!(load_model(&text).unwrap(), m);
        assert_eq!(save_model(&load_model(&text).unwrap()), text);
    }

    #[test]
    fn awkward_floats_survive() {
        let mut m = model();
        m.cause_tree.children[0].cond_prob = Some(0.1 + 0.1 + 0.1 - 0.1);
        m.cause_tree.children[1].cond_prob = Some(0.3 + 1e-17);
        let back = parse_model(&save_model(&m), Strictness::Strict).unwrap().value;
        assert_eq!(back, m);
    }

    #[test]
    fn missing_schema_version() {
        let err = load_model("{\"id\": \"m\"}").unwrap_err();
        assert_eq!(
            err,
            PersistError::SchemaVersionMismatch {
                expected: MODEL_SCHEMA.into(),
                found: None
            }
        );
    }

    #[test]
    fn out_of_range_probability_names_the_node() {
        let text = save_model(&model()).replace("\"cond_prob\": 0.2", "\"cond_prob\": 1.2");
        match load_model(&text) {
            Err(PersistError::InvariantViolation(r)) => {
                assert!(r
                    .errors
                    .iter()
                    .any(|f| f.code == "cond-prob-range" && f.path == "/cause_tree/children/0"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        match load_model("{\n  \"schema_version\": \"bats-model/1\",\n  oops\n}") {
            Err(PersistError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_strict_and_lenient() {
        let text = save_model(&model()).replacen(
            "\"name\": \"Toner low\",",
            "\"name\": \"Toner low\",\n\"colour\": \"blue\",",
            1,
        );
        match load_model(&text) {
            Err(PersistError::UnknownFields(paths)) => assert_eq!(paths, vec!["/cause_tree/children/0/colour"]),
            other => panic!("{other:?}"),
        }
        let doc = load_model_document(&text, Strictness::Lenient).unwrap();
        assert_eq!(doc.extras.len(), 1);
        let resaved = save_model_document(&doc);
        assert!(resaved.contains("\"colour\": \"blue\""));
        assert_eq!(load_model_document(&resaved, Strictness::Lenient).unwrap(), doc);
    }

    fn module(id: &str) -> LibraryModule {
        LibraryModule {
            id: id.into(),
            name: id.into(),
            version: 1,
            causes: vec![TemplateCause::new("c", "C")],
            actions: vec![],
            questions: vec![],
        }
    }

    #[test]
    fn library_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_library(dir.path()).unwrap().is_empty());
        for id in ["zeta", "alpha", "mid"] {
            write_module_file(dir.path(), &module(id)).unwrap();
        }
        let lib = load_library(dir.path()).unwrap();
        assert_eq!(lib.modules.keys().collect::<Vec<_>>(), vec!["alpha", "mid", "zeta"]);

        fs::write(dir.path().join("copy.batsmod.json"), save_module(&module("mid"))).unwrap();
        assert!(matches!(load_library(dir.path()), Err(PersistError::DuplicateModuleId { id, .. }) if id == "mid"));
    }

    #[test]
    fn library_failures_are_aggregated() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.batsmod.json"), "{").unwrap();
        fs::write(dir.path().join("b.batsmod.json"), "{}").unwrap();
        match load_library(dir.path()) {
            Err(PersistError::Library(files)) => assert_eq!(files.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
