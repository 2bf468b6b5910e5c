use std::io::{BufRead, Write};
use std::sync::Arc;

use bats_core::compiler::CompiledNetwork;
use bats_core::engine::{EngineError, Next, Origin, Recommendation, Session, SessionStatus};

use crate::CliError;

/// How an interactive session ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunEnd {
    Resolved(String),
    Unresolved,
    Quit,
}

fn io(e: std::io::Error) -> CliError {
    CliError::runtime("IoError", e.to_string())
}

fn engine(e: EngineError) -> CliError {
    CliError::runtime(e.code(), e.to_string())
}

fn kind_label(r: &Recommendation) -> String {
    serde_json::to_value(r.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn show(out: &mut impl Write, n: usize, r: &Recommendation) -> std::io::Result<()> {
    writeln!(out, "[{n}] {} ({})", r.name, r.step_id)?;
    if !r.explanation.is_empty() {
        writeln!(out, "    {}", r.explanation)?;
    }
    write!(out, "    {} | cost {}", kind_label(r), r.cost)?;
    match r.success_probability {
        Some(p) => writeln!(out, " | P(fixed) {p:.4}")?,
        None => {
            let dist: Vec<String> = r
                .outcome_probabilities
                .iter()
                .map(|(o, p)| format!("{o} {p:.4}"))
                .collect();
            writeln!(out, " | answers {}", dist.join(", "))?
        }
    }
    let options: Vec<&str> = r.outcome_probabilities.iter().map(|(o, _)| o.as_str()).collect();
    write!(out, "    answer [{}/undo/quit]> ", options.join("/"))?;
    out.flush()
}

fn show_posterior(out: &mut impl Write, session: &Session) -> Result<(), CliError> {
    let post = session.posterior().map_err(engine)?;
    let cells: Vec<String> = post.entries.iter().map(|(c, p)| format!("{c}={p}")).collect();
    writeln!(out, "posterior: {}", cells.join(" ")).map_err(io)
}

/// Terminal troubleshooting loop: recommend, read an outcome, record it.
/// Ends on resolution, when nothing is left to try, on `quit` or at end of
/// input. The full history is echoed at the end. With `echo` every input
/// line is copied to `out`, which keeps piped transcripts readable.
pub fn run_interactive<R: BufRead, W: Write>(
    network: Arc<CompiledNetwork>,
    profile: &str,
    mut input: R,
    out: &mut W,
    echo: bool,
) -> Result<RunEnd, CliError> {
    let mut session = Session::new(network);
    writeln!(out, "session {} (profile {profile})", session.network().model_id).map_err(io)?;
    let end = loop {
        let rec = match session.next_step() {
            Ok(Next::Recommend(r)) => r,
            Ok(Next::Terminal(SessionStatus::Resolved { action })) => break RunEnd::Resolved(action),
            Ok(Next::Terminal(_)) | Err(EngineError::NoActionsAvailable) => break RunEnd::Unresolved,
            Err(e) => return Err(engine(e)),
        };
        show(out, session.history().len() + 1, &rec).map_err(io)?;
        let mut line = String::new();
        if input.read_line(&mut line).map_err(io)? == 0 {
            writeln!(out).map_err(io)?;
            break RunEnd::Quit;
        }
        if echo {
            writeln!(out, "{}", line.trim_end()).map_err(io)?;
        }
        match line.trim() {
            "quit" => break RunEnd::Quit,
            "undo" => match session.undo_last() {
                Ok(_) => {
                    writeln!(out, "undone").map_err(io)?;
                    show_posterior(out, &session)?;
                }
                Err(EngineError::NothingToUndo) => writeln!(out, "nothing to undo").map_err(io)?,
                Err(e) => return Err(engine(e)),
            },
            answer => {
                if !rec.outcome_probabilities.iter().any(|(o, _)| o == answer) {
                    writeln!(out, "unknown answer '{answer}'").map_err(io)?;
                    continue;
                }
                session
                    .record(&rec.step_id, answer, Some(rec.step_id.clone()))
                    .map_err(engine)?;
                if session.posterior().is_err() {
                    session.undo_last().map_err(engine)?;
                    writeln!(out, "that answer contradicts the earlier ones").map_err(io)?;
                    continue;
                }
                show_posterior(out, &session)?;
            }
        }
    };
    match &end {
        RunEnd::Resolved(action) => writeln!(out, "RESOLVED by {action}"),
        RunEnd::Unresolved => writeln!(out, "UNRESOLVED"),
        RunEnd::Quit => writeln!(out, "QUIT"),
    }
    .map_err(io)?;
    writeln!(out, "history ({} steps):", session.history().len()).map_err(io)?;
    for (i, h) in session.history().iter().enumerate() {
        writeln!(out, "  {}. {} = {}", i + 1, h.step_id, h.outcome).map_err(io)?;
        for r in &h.retracted {
            writeln!(out, "     retracted {} = {}", r.step_id, r.outcome).map_err(io)?;
        }
    }
    for e in session.evidence() {
        if let Origin::DependencyFixed { trigger } = &e.origin {
            writeln!(out, "  fixed by {trigger}: {} = {}", e.step_id, e.outcome).map_err(io)?;
        }
    }
    Ok(end)
}
