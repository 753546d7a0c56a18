//! Runs a DIMACS solver binary that follows the SAT competition output
//! conventions (`s SATISFIABLE` plus `v` lines).

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::Duration;

use super::{Budget, SatResult, UnknownCause};
use crate::cnf::{export_dimacs, CnfFormula};

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("could not run external solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver output not understood: {0}")]
    Output(String),
}

/// Solves `f` with `program args... <file>`; assumptions become unit clauses.
pub fn solve_external(
    program: &str,
    args: &[String],
    f: &CnfFormula,
    assumptions: &[i32],
    budget: &Budget,
) -> Result<SatResult, ExternalError> {
    let mut g = f.clone();
    g.clauses.extend(assumptions.iter().map(|&a| vec![a]));
    let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
    file.write_all(export_dimacs(&g).as_bytes())?;
    file.flush()?;
    let out_file = tempfile::tempfile()?;
    let mut child = Command::new(program)
        .args(args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(out_file.try_clone()?)
        .stderr(Stdio::null())
        .spawn()?;
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if let Some(cause) = budget.exhausted(0) {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(SatResult::Unknown(cause));
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    let text = read_handle(out_file)?;
    parse_output(&text, &g)
}

fn read_handle(mut f: std::fs::File) -> std::io::Result<String> {
    use std::io::{Read, Seek, SeekFrom};
    f.seek(SeekFrom::Start(0))?;
    let mut s = String::new();
    f.read_to_string(&mut s)?;
    Ok(s)
}

fn parse_output(text: &str, f: &CnfFormula) -> Result<SatResult, ExternalError> {
    let mut status = None;
    let mut model = vec![false; f.num_vars as usize + 1];
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(s.trim().to_string());
        } else if let Some(v) = line.strip_prefix("v ") {
            for tok in v.split_whitespace() {
                let l: i64 = tok.parse().map_err(|_| ExternalError::Output(line.to_string()))?;
                let idx = l.unsigned_abs() as usize;
                if l != 0 && idx < model.len() {
                    model[idx] = l > 0;
                }
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => {
            let ok = f
                .clauses
                .iter()
                .all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize] == (l > 0)));
            Ok(if ok {
                SatResult::Sat(model)
            } else {
                SatResult::Unknown(UnknownCause::ModelCheckFailed)
            })
        }
        Some("UNSATISFIABLE") => Ok(SatResult::Unsat),
        Some(_) => Ok(SatResult::Unknown(UnknownCause::Timeout)),
        None => Err(ExternalError::Output("missing status line".into())),
    }
}
