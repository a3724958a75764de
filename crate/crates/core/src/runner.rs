//! Executes a project's build and test commands against each mutant.
//!
//! Commands run through `sh -c` in the working copy with the inherited
//! environment plus `MUTANT_ID`. The exit code is the only signal.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use wait_timeout::ChildExt;
use walkdir::WalkDir;

use crate::mutator::{apply_mutation, MutateError, Mutant};
use crate::store::{Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Killed,
    Survived,
    Timeout,
    BuildError,
}

impl Status {
    pub const ALL: [Status; 4] = [Status::Killed, Status::Survived, Status::Timeout, Status::BuildError];

    /// Timeouts are an observable behavioural change, so they count as kills.
    pub fn counts_as_killed(self) -> bool {
        matches!(self, Status::Killed | Status::Timeout)
    }

    /// Build errors are artifacts of lexical mutation and never enter coverage.
    pub fn is_considered(self) -> bool {
        self != Status::BuildError
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Killed => "killed",
            Status::Survived => "survived",
            Status::Timeout => "timeout",
            Status::BuildError => "build-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantResult {
    pub mutant_id: u64,
    pub class_name: String,
    pub status: Status,
    pub duration_ms: u64,
    /// Only ever set by an explicit user action.
    #[serde(default)]
    pub equivalent_override: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorkdirStrategy {
    /// One private copy of the project per worker.
    #[default]
    CopyProject,
    /// Mutate the project itself and restore each file afterwards. Serial only.
    InPlaceWithRestore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub project_root: PathBuf,
    pub test_command: String,
    pub build_command: Option<String>,
    pub timeout_seconds: u64,
    pub workdir_strategy: WorkdirStrategy,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("test suite red on unmutated code: `{command}` {detail}")]
    RedBaseline { command: String, detail: String },
    #[error("failed to start `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: io::Error,
    },
    #[error("I/O failure on {path} (working copy may be dirty): {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("mutant {id}: {source}")]
    Mutate {
        id: u64,
        #[source]
        source: MutateError,
    },
    #[error("production sources changed during the run: {0:?}")]
    SourcesChanged(Vec<String>),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.test_command.trim().is_empty() {
            return Err(RunError::Config("test command is empty".into()));
        }
        if self.timeout_seconds < 1 {
            return Err(RunError::Config("timeout must be at least 1 second".into()));
        }
        if !self.project_root.is_dir() {
            return Err(RunError::Config(format!(
                "project root {} is not a directory",
                self.project_root.display()
            )));
        }
        Ok(())
    }
}

/// Outcome of one shell command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Passed,
    Failed(Option<i32>),
    TimedOut,
}

/// Verdict from the build step (if any), the test step (if it ran), the
/// total wall time and the timeout bound.
pub fn classify(build: Option<Step>, test: Option<Step>, elapsed: Duration, bound: Duration) -> Status {
    match build {
        Some(Step::Failed(_) | Step::TimedOut) => return Status::BuildError,
        Some(Step::Passed) | None => {}
    }
    match test {
        _ if elapsed > bound => Status::Timeout,
        Some(Step::TimedOut) => Status::Timeout,
        Some(Step::Failed(_)) => Status::Killed,
        Some(Step::Passed) => Status::Survived,
        // A passing build always runs the tests; a missing test step means the
        // budget was spent in the build.
        None => Status::Timeout,
    }
}

/// Per-mutant wall-time limit: `max(configured, 2 × baseline)`.
pub fn timeout_bound(timeout_seconds: u64, baseline: Duration) -> Duration {
    Duration::from_secs(timeout_seconds).max(baseline * 2)
}

fn kill_group(child: &mut Child) {
    // The child leads its own process group; take the whole group down so
    // grandchildren (`sh -c 'sleep 100'`) do not linger.
    let pid = child.id() as libc::pid_t;
    // SAFETY: plain syscall on a pid we spawned.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn run_step(command: &str, cwd: &Path, mutant_id: Option<u64>, limit: Duration) -> Result<Step, RunError> {
    let mut cmd = Command::new("sh");
    cmd.arg("-c")
        .arg(command)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .process_group(0);
    if let Some(id) = mutant_id {
        cmd.env("MUTANT_ID", id.to_string());
    }
    let mut child = cmd.spawn().map_err(|source| RunError::Spawn {
        command: command.to_string(),
        source,
    })?;
    let status = child.wait_timeout(limit).map_err(|source| RunError::Spawn {
        command: command.to_string(),
        source,
    })?;
    Ok(match status {
        Some(s) if s.success() => Step::Passed,
        Some(s) => Step::Failed(s.code()),
        None => {
            kill_group(&mut child);
            Step::TimedOut
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Baseline {
    pub duration: Duration,
}

// Generous ceiling for the unmutated suite; a hang here is a broken setup.
const BASELINE_LIMIT: Duration = Duration::from_secs(3600);

/// Build and test the unmutated project. Any failure is fatal.
pub fn run_baseline(config: &RunConfig) -> Result<Baseline, RunError> {
    config.validate()?;
    let start = Instant::now();
    let steps = config
        .build_command
        .iter()
        .map(String::as_str)
        .chain(std::iter::once(config.test_command.as_str()));
    for command in steps {
        match run_step(command, &config.project_root, None, BASELINE_LIMIT)? {
            Step::Passed => {}
            Step::Failed(Some(127)) => {
                return Err(RunError::RedBaseline {
                    command: command.to_string(),
                    detail: "failed: command not found (exit 127)".into(),
                })
            }
            Step::Failed(code) => {
                return Err(RunError::RedBaseline {
                    command: command.to_string(),
                    detail: match code {
                        Some(c) => format!("exited with status {c}"),
                        None => "was terminated by a signal".into(),
                    },
                })
            }
            Step::TimedOut => {
                return Err(RunError::RedBaseline {
                    command: command.to_string(),
                    detail: format!("did not finish within {}s", BASELINE_LIMIT.as_secs()),
                })
            }
        }
    }
    Ok(Baseline {
        duration: start.elapsed().max(Duration::from_millis(1)),
    })
}

/// Restores a mutated file when dropped, including during unwinding.
struct RestoreGuard {
    path: PathBuf,
    original: Vec<u8>,
    armed: bool,
}

impl RestoreGuard {
    fn restore(mut self) -> Result<(), RunError> {
        self.armed = false;
        fs::write(&self.path, &self.original).map_err(|source| RunError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

impl Drop for RestoreGuard {
    fn drop(&mut self) {
        if self.armed {
            if let Err(e) = fs::write(&self.path, &self.original) {
                log::error!("could not restore {}: {e}", self.path.display());
            }
        }
    }
}

fn copy_tree(from: &Path, to: &Path) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    for entry in WalkDir::new(from) {
        let entry = entry.map_err(|e| RunError::Io {
            path: from.to_path_buf(),
            source: e.into(),
        })?;
        let rel = entry.path().strip_prefix(from).expect("walkdir stays under root");
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(io(&dest))?;
        } else if entry.file_type().is_file() {
            fs::copy(entry.path(), &dest).map_err(io(&dest))?;
        }
    }
    Ok(())
}

fn checksums(root: &Path, files: &BTreeSet<&str>) -> Result<BTreeMap<String, Vec<u8>>, RunError> {
    files
        .iter()
        .map(|f| {
            let path = root.join(f);
            let bytes = fs::read(&path).map_err(|source| RunError::Io { path, source })?;
            Ok((f.to_string(), Sha256::digest(&bytes).to_vec()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: usize,
    pub skipped: usize,
    pub interrupted: bool,
}

pub struct Runner {
    config: RunConfig,
    bound: Duration,
}

impl Runner {
    pub fn new(config: RunConfig, baseline: Baseline) -> Result<Runner, RunError> {
        config.validate()?;
        let bound = timeout_bound(config.timeout_seconds, baseline.duration);
        Ok(Runner { config, bound })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn timeout_bound(&self) -> Duration {
        self.bound
    }

    /// Mutate one file under `workdir`, build and test, then restore it.
    pub fn execute_mutant(&self, mutant: &Mutant, workdir: &Path) -> Result<MutantResult, RunError> {
        let path = workdir.join(&mutant.file_path);
        let original = fs::read(&path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        let source = String::from_utf8(original.clone()).map_err(|e| RunError::Io {
            path: path.clone(),
            source: io::Error::new(io::ErrorKind::InvalidData, e),
        })?;
        let mutated = apply_mutation(&source, &mutant.point).map_err(|source| RunError::Mutate {
            id: mutant.id,
            source,
        })?;

        let guard = RestoreGuard {
            path: path.clone(),
            original,
            armed: true,
        };
        fs::write(&path, mutated).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;

        let start = Instant::now();
        let outcome = self.build_and_test(mutant.id, workdir, start);
        let elapsed = start.elapsed();
        guard.restore()?;
        let (build, test) = outcome?;

        Ok(MutantResult {
            mutant_id: mutant.id,
            class_name: mutant.class_name.clone(),
            status: classify(build, test, elapsed, self.bound),
            duration_ms: elapsed.as_millis() as u64,
            equivalent_override: false,
        })
    }

    fn build_and_test(&self, id: u64, workdir: &Path, start: Instant) -> Result<(Option<Step>, Option<Step>), RunError> {
        let build = match &self.config.build_command {
            Some(cmd) => Some(run_step(cmd, workdir, Some(id), self.bound)?),
            None => None,
        };
        if matches!(build, Some(Step::Failed(_) | Step::TimedOut)) {
            return Ok((build, None));
        }
        let Some(remaining) = self.bound.checked_sub(start.elapsed()).filter(|d| !d.is_zero()) else {
            return Ok((build, None));
        };
        let test = run_step(&self.config.test_command, workdir, Some(id), remaining)?;
        Ok((build, Some(test)))
    }

    /// Execute every mutant that has no stored result yet, appending verdicts
    /// as they arrive. Setting `cancel` stops dispatch; finished work is kept.
    pub fn run_all(
        &self,
        mutants: &[Mutant],
        store: &mut Store,
        parallelism: usize,
        cancel: &AtomicBool,
    ) -> Result<RunSummary, RunError> {
        let pending: Vec<&Mutant> = mutants.iter().filter(|m| !store.has_result(m.id)).collect();
        let mut summary = RunSummary {
            skipped: mutants.len() - pending.len(),
            ..RunSummary::default()
        };
        if pending.is_empty() {
            return Ok(summary);
        }

        let root = &self.config.project_root;
        let files: BTreeSet<&str> = pending.iter().map(|m| m.file_path.as_str()).collect();
        let before = checksums(root, &files)?;

        let workers = match self.config.workdir_strategy {
            WorkdirStrategy::InPlaceWithRestore => {
                if parallelism > 1 {
                    log::warn!("in-place runs are serial; ignoring --jobs {parallelism}");
                }
                1
            }
            WorkdirStrategy::CopyProject => parallelism.clamp(1, pending.len()),
        };

        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let (tx, rx) = mpsc::channel::<Result<MutantResult, RunError>>();
        let total = pending.len();

        let outcome: Result<(), RunError> = std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let (pending, next, failed) = (&pending, &next, &failed);
                scope.spawn(move || {
                    let copy;
                    let workdir = match self.config.workdir_strategy {
                        WorkdirStrategy::InPlaceWithRestore => root.as_path(),
                        WorkdirStrategy::CopyProject => {
                            let made = tempfile::Builder::new()
                                .prefix("mutsample-wc-")
                                .tempdir()
                                .map_err(|source| RunError::Io {
                                    path: std::env::temp_dir(),
                                    source,
                                })
                                .and_then(|dir| copy_tree(root, dir.path()).map(|()| dir));
                            match made {
                                Ok(dir) => {
                                    copy = dir;
                                    copy.path()
                                }
                                Err(e) => {
                                    failed.store(true, Ordering::SeqCst);
                                    let _ = tx.send(Err(e));
                                    return;
                                }
                            }
                        }
                    };
                    loop {
                        if cancel.load(Ordering::SeqCst) || failed.load(Ordering::SeqCst) {
                            return;
                        }
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(mutant) = pending.get(i) else { return };
                        let result = self.execute_mutant(mutant, workdir);
                        if result.is_err() {
                            failed.store(true, Ordering::SeqCst);
                        }
                        if tx.send(result).is_err() {
                            return;
                        }
                    }
                });
            }
            drop(tx);

            let mut first_error = None;
            for result in rx {
                match result {
                    Ok(r) => {
                        if first_error.is_none() {
                            if let Err(e) = store.append_result(&r) {
                                failed.store(true, Ordering::SeqCst);
                                first_error = Some(e.into());
                                continue;
                            }
                            summary.executed += 1;
                            log::info!(
                                "[{}/{}] mutant {} ({}): {}",
                                summary.executed,
                                total,
                                r.mutant_id,
                                r.class_name,
                                r.status.name()
                            );
                        }
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            first_error.map_or(Ok(()), Err)
        });

        let after = checksums(root, &files)?;
        let changed: Vec<String> = before
            .iter()
            .filter(|(f, sum)| after.get(*f) != Some(*sum))
            .map(|(f, _)| f.clone())
            .collect();
        if !changed.is_empty() {
            return Err(RunError::SourcesChanged(changed));
        }
        outcome?;
        summary.interrupted = summary.executed + summary.skipped < mutants.len();
        Ok(summary)
    }
}
