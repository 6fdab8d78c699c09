//! Running external solver executables under a wall-clock budget.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::SolverError;

pub(crate) struct SolverRun {
    pub exit_code: Option<i32>,
    pub stdout: String,
}

/// Writes `input` to a temporary file and runs `solver <file>`. The child is
/// killed once `budget` elapses.
pub(crate) fn run_solver(
    solver: &Path,
    input: &str,
    suffix: &str,
    budget: Option<Duration>,
) -> Result<SolverRun, SolverError> {
    let started = Instant::now();
    let mut file = tempfile::Builder::new().prefix("boolmin-").suffix(suffix).tempfile()?;
    file.write_all(input.as_bytes())?;
    file.flush()?;

    let mut child = Command::new(solver)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SolverError::Spawn {
            path: solver.to_path_buf(),
            source,
        })?;

    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });

    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if budget.is_some_and(|b| started.elapsed() >= b) {
            let _ = child.kill();
            let _ = child.wait();
            let _ = reader.join();
            return Err(SolverError::Timeout {
                elapsed: started.elapsed(),
            });
        }
        thread::sleep(Duration::from_millis(2));
    };
    let stdout = reader
        .join()
        .map_err(|_| SolverError::Output("stdout reader panicked".into()))??;
    Ok(SolverRun {
        exit_code: status.code(),
        stdout,
    })
}
