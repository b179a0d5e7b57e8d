//! Parameter sweeps over geometries with per-job directories, resumption and
//! a deterministic merge of the per-job tables.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{geometry_key, Settings, SweepConfig};
use crate::error::{CliError, Result};
use crate::run::{solve_geometry, write_outputs, Failure, RunStatus, DISTANCES_HEADER, MAXIMA_HEADER, STATUS_FILE};

pub const FAILURE_LOG: &str = "failures.log";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    /// Solved in this invocation with every model converged.
    Done,
    /// A previous invocation already completed it.
    Skipped,
    /// Parameters outside the admissible geometry range.
    Rejected,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub alpha_deg: f64,
    pub rc: f64,
    pub state: JobState,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub output: PathBuf,
    pub jobs: Vec<JobOutcome>,
    /// Data rows in the merged `maxima.csv`.
    pub rows: usize,
}

impl SweepOutcome {
    pub fn count(&self, state: JobState) -> usize {
        self.jobs.iter().filter(|j| j.state == state).count()
    }

    /// [`CliError::PartialFailure`] when any solve failed. Rejected geometries
    /// are logged but do not count.
    pub fn check(&self) -> Result<()> {
        match self.count(JobState::Failed) {
            0 => Ok(()),
            failed => Err(CliError::PartialFailure { failed, total: self.jobs.len() }),
        }
    }
}

pub fn job_dir(root: &Path, alpha_deg: f64, rc: f64) -> PathBuf {
    root.join("jobs").join(geometry_key(alpha_deg, rc))
}

fn is_complete(dir: &Path, alpha_deg: f64, rc: f64, settings: &Settings) -> bool {
    RunStatus::load(dir).is_some_and(|s| {
        s.converged
            && s.alpha_deg == alpha_deg
            && s.rc == rc
            && s.refinements == settings.refinements
            && s.models.iter().eq(settings.models.iter().map(|m| &m.name))
    })
}

fn run_job(alpha_deg: f64, rc: f64, settings: &Settings, dir: &Path) -> JobOutcome {
    let outcome = |state, failures| JobOutcome { alpha_deg, rc, state, failures };
    if is_complete(dir, alpha_deg, rc, settings) {
        return outcome(JobState::Skipped, Vec::new());
    }
    let failed = |e: CliError| {
        let state = if e.kind() == "parameter" { JobState::Rejected } else { JobState::Failed };
        let failures = vec![Failure { model: "*".into(), kind: e.kind().into(), message: e.to_string() }];
        let status = RunStatus {
            alpha_deg,
            rc,
            refinements: settings.refinements,
            models: settings.models.iter().map(|m| m.name.clone()).collect(),
            converged: false,
            failures: failures.clone(),
        };
        let _ = fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join(STATUS_FILE), serde_json::to_string_pretty(&status).unwrap_or_default()));
        outcome(state, failures)
    };
    match solve_geometry(alpha_deg, rc, settings) {
        Err(e) => failed(e),
        Ok(g) => match write_outputs(&g, settings, dir) {
            Err(e) => failed(e),
            Ok(()) if g.converged() => outcome(JobState::Done, Vec::new()),
            Ok(()) => outcome(JobState::Failed, g.failures),
        },
    }
}

/// Appends the data rows of `src` (header skipped) to `out`; returns the row count.
fn append_rows(src: &Path, header: &[&str], out: &mut csv::Writer<impl Write>) -> Result<usize> {
    if !src.exists() {
        return Ok(0);
    }
    let mut r = csv::Reader::from_path(src)?;
    if r.headers()?.iter().ne(header.iter().copied()) {
        return Err(CliError::Usage(format!("{}: unexpected header", src.display())));
    }
    let mut n = 0;
    for rec in r.records() {
        out.write_record(&rec?)?;
        n += 1;
    }
    Ok(n)
}

/// Single-writer merge of the per-job tables in sweep order.
pub fn merge(root: &Path, geometries: &[(f64, f64)]) -> Result<usize> {
    let mut maxima = csv::Writer::from_writer(BufWriter::new(File::create(root.join("maxima.csv"))?));
    let mut dist = csv::Writer::from_writer(BufWriter::new(File::create(root.join("distances.csv"))?));
    maxima.write_record(MAXIMA_HEADER)?;
    dist.write_record(DISTANCES_HEADER)?;
    let mut rows = 0;
    for &(a, rc) in geometries {
        let dir = job_dir(root, a, rc);
        rows += append_rows(&dir.join("maxima.csv"), &MAXIMA_HEADER, &mut maxima)?;
        append_rows(&dir.join("distances.csv"), &DISTANCES_HEADER, &mut dist)?;
    }
    maxima.flush()?;
    dist.flush()?;
    Ok(rows)
}

fn log_failures(root: &Path, jobs: &[JobOutcome]) -> Result<()> {
    let mut log = BufWriter::new(OpenOptions::new().create(true).append(true).open(root.join(FAILURE_LOG))?);
    for j in jobs {
        for f in &j.failures {
            writeln!(log, "{}\t{}\t{}\t{}\t{}", j.alpha_deg, j.rc, f.model, f.kind, f.message)?;
        }
    }
    log.flush()?;
    Ok(())
}

/// Runs every geometry of the sweep, `config.jobs` at a time, then merges the
/// per-job `maxima.csv` and `distances.csv` into the sweep root. Failed jobs
/// are logged to `failures.log` and do not stop the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    let root = &config.output;
    fs::create_dir_all(root.join("jobs"))?;
    let geometries = config.geometries();
    let mut settings = config.settings.clone();
    if config.jobs > 1 {
        settings.parallel = false;
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; geometries.len()]);
    std::thread::scope(|s| {
        for _ in 0..config.jobs.min(geometries.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(a, rc)) = geometries.get(i) else { break };
                let out = run_job(a, rc, &settings, &job_dir(root, a, rc));
                results.lock().expect("no worker panicked")[i] = Some(out);
            });
        }
    });
    let jobs: Vec<JobOutcome> = results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|j| j.expect("every job ran"))
        .collect();
    log_failures(root, &jobs)?;
    let rows = merge(root, &geometries)?;
    Ok(SweepOutcome { output: root.clone(), jobs, rows })
}
