//! The `bats` command line.
//!
//! Every subcommand is a thin adapter over `bats_core`. Failures print a
//! single `ERROR <code>: <message>` line on stderr and map to exit codes
//! 1 (usage), 2 (validation) and 3 (runtime).

pub mod config;
pub mod run;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bats_core::compiler::{compile_model, CompileError, CompiledNetwork};
use bats_core::engine::{simulate, Policy};
use bats_core::librarian::{instantiate_module, propagate_module_change, search_replace, LibraryError, ReplaceScope};
use bats_core::model::{validate_model, ErrorConditionModel, ValidationReport};
use bats_core::persistence::{
    load_library, load_model_document, load_module, parse_model, save_model_document, save_network, write_module_file,
    Document, PersistError, Strictness,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;

pub use config::CliConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn usage(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            exit: 1,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn validation(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            exit: 2,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn runtime(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            exit: 3,
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<PersistError> for CliError {
    fn from(e: PersistError) -> Self {
        match e {
            PersistError::Io { .. } => CliError::runtime(e.code(), e.to_string()),
            _ => CliError::validation(e.code(), e.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        CliError::validation(e.code(), e.to_string())
    }
}

impl From<LibraryError> for CliError {
    fn from(e: LibraryError) -> Self {
        CliError::validation(e.code(), e.to_string())
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::runtime("IoError", e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "bats", version, about = "Author and run Bayesian troubleshooters")]
pub struct Cli {
    /// Config file; falls back to ./bats.config.json.
    #[arg(long, global = true, env = "BATS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Carry unknown document keys along instead of rejecting them.
    #[arg(long, global = true)]
    pub lenient: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check model files and print their findings.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compile a model into a network document.
    Compile {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        profile: Option<String>,
    },
    /// Interactive troubleshooting session on stdin/stdout.
    Run {
        file: PathBuf,
        #[arg(long)]
        profile: Option<String>,
    },
    /// Monte-Carlo evaluation of a troubleshooting policy.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "planner")]
        policy: PolicyArg,
        #[arg(long)]
        profile: Option<String>,
    },
    /// Manage the module library.
    Lib {
        /// Library directory; overrides the config.
        #[arg(long, global = true)]
        dir: Option<PathBuf>,
        #[command(subcommand)]
        command: LibCommand,
    },
    /// Literal search and replace in names and explanations.
    Replace {
        #[arg(long)]
        find: String,
        #[arg(long = "with")]
        replacement: String,
        #[arg(long)]
        dry_run: bool,
        #[arg(long, value_enum, default_value = "both")]
        scope: ScopeArg,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Start the HTTP service with the given models loaded.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        models: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LibCommand {
    /// List the modules in the library.
    List,
    /// Add a module file to the library, optionally updating model files.
    Add {
        file: PathBuf,
        /// Model files to bring up to the new module version.
        #[arg(long, num_args = 1..)]
        propagate: Vec<PathBuf>,
    },
    /// Instantiate a library module inside a model file.
    Instantiate(InstantiateArgs),
}

#[derive(Debug, Args)]
pub struct InstantiateArgs {
    module: String,
    /// Model file to extend.
    #[arg(long)]
    into: PathBuf,
    /// Cause the module hangs below.
    #[arg(long)]
    at: String,
    #[arg(long)]
    instance: String,
    /// Template cause probability, as `cause=p`.
    #[arg(long = "prob", value_parser = parse_assignment)]
    probs: Vec<(String, f64)>,
    /// Where to write the result; defaults to the input file.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected cause=p, got '{s}'"))?;
    let p = v.parse::<f64>().map_err(|e| format!("'{v}': {e}"))?;
    Ok((k.to_string(), p))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Planner,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    Names,
    Explanations,
    Both,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
///
/// `interactive` tells `run` whether a person is typing; otherwise answers
/// are echoed into the transcript.
pub fn dispatch<I, T>(
    args: I,
    input: impl BufRead,
    interactive: bool,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "ERROR UsageError: {first}");
            let _ = write!(err, "{}", e.render());
            return 1;
        }
    };
    match execute(cli, input, interactive, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "ERROR {}: {}", e.code, e.message);
            e.exit
        }
    }
}

fn strictness(lenient: bool) -> Strictness {
    if lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::runtime("IoError", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::runtime("IoError", format!("{}: {e}", path.display())))
}

fn load_doc(path: &Path, lenient: bool) -> Result<Document<ErrorConditionModel>, CliError> {
    load_model_document(&read(path)?, strictness(lenient)).map_err(|e| {
        let e = CliError::from(e);
        CliError {
            message: format!("{}: {}", path.display(), e.message),
            ..e
        }
    })
}

fn compile_file(
    path: &Path,
    config: &CliConfig,
    profile: Option<&str>,
    lenient: bool,
) -> Result<CompiledNetwork, CliError> {
    let weights = config.weights(profile)?;
    let doc = load_doc(path, lenient)?;
    Ok(compile_model(&doc.value, &weights)?)
}

fn print_report(out: &mut impl Write, path: &Path, report: &ValidationReport) -> std::io::Result<()> {
    writeln!(out, "{}: {}", path.display(), report.summary())?;
    for f in &report.errors {
        writeln!(out, "  error {} at {}: {}", f.code, f.path, f.message)?;
    }
    for f in &report.warnings {
        writeln!(out, "  warning {} at {}: {}", f.code, f.path, f.message)?;
    }
    Ok(())
}

fn execute(cli: Cli, input: impl BufRead, interactive: bool, out: &mut impl Write) -> Result<i32, CliError> {
    let config = CliConfig::resolve(cli.config.as_deref())?;
    let lenient = cli.lenient;
    match cli.command {
        Command::Validate { files } => {
            let mut failed = 0;
            for path in &files {
                let doc = parse_model(&read(path)?, strictness(lenient)).map_err(|e| {
                    let e = CliError::from(e);
                    CliError {
                        message: format!("{}: {}", path.display(), e.message),
                        ..e
                    }
                })?;
                let report = validate_model(&doc.value);
                print_report(out, path, &report).map_err(io_err)?;
                if !report.is_ok() {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(CliError::validation(
                    "ValidationFailed",
                    format!("{failed} of {} file(s) have errors", files.len()),
                ));
            }
            Ok(0)
        }
        Command::Compile { file, output, profile } => {
            let net = compile_file(&file, &config, profile.as_deref(), lenient)?;
            let text = save_network(&net);
            match output {
                Some(path) => write_file(&path, &text)?,
                None => out.write_all(text.as_bytes()).map_err(io_err)?,
            }
            Ok(0)
        }
        Command::Run { file, profile } => {
            let net = compile_file(&file, &config, profile.as_deref(), lenient)?;
            let profile = net.profile.clone();
            run::run_interactive(Arc::new(net), &profile, input, out, !interactive)?;
            Ok(0)
        }
        Command::Simulate {
            file,
            trials,
            seed,
            policy,
            profile,
        } => {
            let net = compile_file(&file, &config, profile.as_deref(), lenient)?;
            let policy = match policy {
                PolicyArg::Planner => Policy::Planner,
                PolicyArg::Random => Policy::Random,
            };
            let report = simulate(&net, policy, trials, seed);
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            writeln!(out, "{text}").map_err(io_err)?;
            Ok(0)
        }
        Command::Lib { dir, command } => {
            let dir = dir.unwrap_or(config.library_dir.clone());
            lib(&dir, command, lenient, out)
        }
        Command::Replace {
            find,
            replacement,
            dry_run,
            scope,
            files,
        } => {
            let scope = match scope {
                ScopeArg::Names => ReplaceScope::Names,
                ScopeArg::Explanations => ReplaceScope::Explanations,
                ScopeArg::Both => ReplaceScope::Both,
            };
            let mut total = 0;
            let mut touched = 0;
            for path in &files {
                let mut doc = load_doc(path, lenient)?;
                let hits = search_replace(
                    std::slice::from_mut(&mut doc.value),
                    &find,
                    &replacement,
                    scope,
                    dry_run,
                );
                for h in &hits {
                    writeln!(out, "{}\t{}\t{:?} -> {:?}", path.display(), h.path, h.before, h.after).map_err(io_err)?;
                }
                if !hits.is_empty() {
                    total += hits.len();
                    touched += 1;
                    if !dry_run {
                        write_file(path, &save_model_document(&doc))?;
                    }
                }
            }
            let verb = if dry_run { "would change" } else { "changed" };
            writeln!(out, "{total} hit(s); {verb} {touched} file(s)").map_err(io_err)?;
            Ok(0)
        }
        Command::Serve { bind, models } => {
            let store = bats_service::Store::new(bats_service::ServiceConfig {
                profiles: config
                    .profiles
                    .iter()
                    .map(|p| (p.profile_name.clone(), p.clone()))
                    .collect(),
                default_profile: config.default_profile.clone(),
            });
            for path in &models {
                store.put_model(load_doc(path, lenient)?.value);
            }
            let addr = bind.unwrap_or(config.bind.clone());
            let rt = tokio::runtime::Runtime::new().map_err(io_err)?;
            let listener = rt
                .block_on(tokio::net::TcpListener::bind(&addr))
                .map_err(|e| CliError::runtime("BindError", format!("{addr}: {e}")))?;
            let local = listener.local_addr().map_err(io_err)?;
            writeln!(out, "listening on {local}").map_err(io_err)?;
            out.flush().map_err(io_err)?;
            rt.block_on(bats_service::serve_on(listener, store)).map_err(io_err)?;
            Ok(0)
        }
    }
}

fn lib(dir: &Path, command: LibCommand, lenient: bool, out: &mut impl Write) -> Result<i32, CliError> {
    match command {
        LibCommand::List => {
            if !dir.exists() {
                writeln!(out, "0 module(s) in {}", dir.display()).map_err(io_err)?;
                return Ok(0);
            }
            let library = load_library(dir)?;
            for m in library.modules.values() {
                writeln!(
                    out,
                    "{}\tv{}\t{}\t{} causes, {} actions, {} questions",
                    m.id,
                    m.version,
                    m.name,
                    m.cause_list().len(),
                    m.actions.len(),
                    m.questions.len()
                )
                .map_err(io_err)?;
            }
            writeln!(out, "{} module(s) in {}", library.len(), dir.display()).map_err(io_err)?;
            Ok(0)
        }
        LibCommand::Add { file, propagate } => {
            let module = load_module(&read(&file)?)?;
            std::fs::create_dir_all(dir).map_err(io_err)?;
            let mut library = load_library(dir)?;
            if let Some(existing) = library.get(&module.id) {
                if *existing != module && existing.version >= module.version {
                    return Err(CliError::validation(
                        "VersionNotNewer",
                        format!(
                            "module '{}' v{} is already in the library; bump the version above {}",
                            module.id, module.version, existing.version
                        ),
                    ));
                }
            }
            let written = write_module_file(dir, &module)?;
            writeln!(out, "added {} v{} as {}", module.id, module.version, written.display()).map_err(io_err)?;
            let id = module.id.clone();
            library.insert(module);
            if propagate.is_empty() {
                return Ok(0);
            }
            let mut docs = Vec::new();
            for path in &propagate {
                docs.push(load_doc(path, lenient)?);
            }
            let mut corpus: Vec<ErrorConditionModel> = docs.iter().map(|d| d.value.clone()).collect();
            let report = propagate_module_change(&library, &id, &mut corpus)?;
            for ((path, doc), model) in propagate.iter().zip(docs.iter_mut()).zip(corpus) {
                if report.touched_models.contains(&model.id) {
                    doc.value = model;
                    write_file(path, &save_model_document(doc))?;
                }
            }
            let shown = |t: &Option<String>| t.as_deref().map_or("(none)".to_string(), |t| format!("{t:?}"));
            for c in &report.changes {
                writeln!(
                    out,
                    "{}\t{}\t{} -> {}",
                    c.model,
                    c.path,
                    shown(&c.before),
                    shown(&c.after)
                )
                .map_err(io_err)?;
            }
            for c in &report.conflicts {
                writeln!(out, "conflict\t{}\t{}\t{}", c.model, c.instance, c.paths.join(",")).map_err(io_err)?;
            }
            for o in &report.orphaned {
                writeln!(out, "orphaned\t{}\t{}", o.model, o.path).map_err(io_err)?;
            }
            writeln!(
                out,
                "updated {} model(s), {} conflict(s)",
                report.touched_models.len(),
                report.conflicts.len()
            )
            .map_err(io_err)?;
            Ok(0)
        }
        LibCommand::Instantiate(args) => {
            let library = load_library(dir)?;
            let module = library
                .get(&args.module)
                .ok_or_else(|| CliError::validation("UnknownModule", format!("no module '{}'", args.module)))?;
            let mut doc = load_doc(&args.into, lenient)?;
            let assignments: IndexMap<String, f64> = args.probs.into_iter().collect();
            doc.value = instantiate_module(&doc.value, module, &args.at, &args.instance, &assignments)?;
            let report = validate_model(&doc.value);
            if !report.is_ok() {
                return Err(CliError::validation("InvariantViolation", report.summary()));
            }
            let target = args.output.unwrap_or(args.into);
            write_file(&target, &save_model_document(&doc))?;
            writeln!(
                out,
                "instantiated {} as {} in {}",
                args.module,
                args.instance,
                target.display()
            )
            .map_err(io_err)?;
            Ok(0)
        }
    }
}
