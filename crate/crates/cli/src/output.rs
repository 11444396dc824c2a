use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use lzladder::observables::{MomentumGrid, ResultSeries};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// 17 significant digits; NaN and infinities spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Creates `dir` if needed and proves it is writable before any compute.
pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Setup(format!("output directory {} is not usable: {e}", dir.display()));
    fs::create_dir_all(dir.join("series")).map_err(fail)?;
    fs::create_dir_all(dir.join("rows")).map_err(fail)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub const SERIES_HEADER: [&str; 8] = ["phase", "t", "delta", "n_r", "k2_l", "k2_r", "energy", "entropy"];

pub fn series_rows(phase: &str, series: &ResultSeries) -> Vec<Vec<String>> {
    series
        .records
        .iter()
        .map(|r| {
            vec![phase.to_string(), num(r.t), num(r.delta), num(r.n_r), num(r.k2_l), num(r.k2_r), num(r.energy), opt_num(r.entropy)]
        })
        .collect()
}

pub const MOMENTUM_HEADER: [&str; 5] = ["phase", "t", "leg", "k", "n_k"];

pub fn momentum_rows(phase: &str, series: &ResultSeries, grid: &MomentumGrid) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for r in &series.records {
        for (leg, n_k) in [("L", &r.n_k_l), ("R", &r.n_k_r)] {
            for (k, v) in grid.points().iter().zip(n_k) {
                out.push(vec![phase.to_string(), num(r.t), leg.to_string(), num(*k), num(*v)]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobEntry {
    pub id: String,
    pub label: String,
    pub status: JobStatus,
    pub error: Option<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config: RunConfig,
    pub started: DateTime<Utc>,
    pub finished: Option<DateTime<Utc>>,
    pub threads: usize,
    pub jobs: Vec<JobEntry>,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            started: Utc::now(),
            finished: None,
            threads,
            jobs: Vec::new(),
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn load(dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Written through a temporary file so a killed run never leaves a
    /// truncated manifest.
    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let tmp = dir.join(format!("{MANIFEST}.tmp"));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&tmp, text).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
        fs::rename(&tmp, dir.join(MANIFEST)).map_err(|e| CliError::Io(format!("manifest: {e}")))
    }

    pub fn failed(&self) -> usize {
        self.jobs.iter().filter(|j| j.status != JobStatus::Ok).count()
    }
}

/// One independent unit of work: a trajectory, a thermal point or a
/// double-well rate.
pub struct Job {
    pub id: String,
    pub label: String,
}

/// Relative path, header and rows of one CSV.
pub type CsvFile = (String, Vec<&'static str>, Vec<Vec<String>>);

/// What a finished job hands back: its summary row and any extra files.
pub struct JobOutput {
    pub row: Vec<String>,
    pub files: Vec<CsvFile>,
}

#[derive(Serialize, Deserialize)]
struct StoredRow {
    row: Vec<String>,
}

fn row_path(dir: &Path, id: &str) -> PathBuf {
    dir.join("rows").join(format!("{id}.json"))
}

/// Runs every job on `pool`, persisting each result as it completes. With
/// `resume`, jobs marked done in an existing manifest are loaded instead of
/// rerun. Rows come back in job order regardless of completion order.
pub fn run_jobs<F>(
    dir: &Path,
    manifest: &mut RunManifest,
    jobs: &[Job],
    resume: bool,
    pool: &rayon::ThreadPool,
    work: F,
) -> Result<Vec<Option<Vec<String>>>, CliError>
where
    F: Fn(usize) -> Result<JobOutput, String> + Sync,
{
    let previous = if resume { RunManifest::load(dir) } else { None };
    if let Some(prev) = &previous {
        let same = RunConfig { threads: 0, ..prev.config.clone() } == RunConfig { threads: 0, ..manifest.config.clone() };
        if prev.command != manifest.command || !same {
            return Err(CliError::Setup(format!(
                "cannot resume in {}: the existing manifest was written by a different command or config",
                dir.display()
            )));
        }
        manifest.started = prev.started;
    }
    let mut done: Vec<Option<Vec<String>>> = vec![None; jobs.len()];
    manifest.jobs = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let old = previous.as_ref().and_then(|p| p.jobs.iter().find(|e| e.id == j.id && e.status == JobStatus::Ok));
            let stored = old.and_then(|_| fs::read_to_string(row_path(dir, &j.id)).ok()).and_then(|t| serde_json::from_str::<StoredRow>(&t).ok());
            match (old, stored) {
                (Some(e), Some(s)) => {
                    done[i] = Some(s.row);
                    e.clone()
                }
                _ => JobEntry { id: j.id.clone(), label: j.label.clone(), status: JobStatus::Pending, error: None, files: Vec::new() },
            }
        })
        .collect();
    manifest.save(dir)?;

    let shared = Mutex::new((std::mem::replace(manifest, RunManifest::new("", &RunConfig::default(), 0)), done));
    let todo: Vec<usize> = (0..jobs.len()).filter(|&i| shared.lock().unwrap().1[i].is_none()).collect();
    let io_error: Mutex<Option<CliError>> = Mutex::new(None);
    pool.install(|| {
        todo.par_iter().for_each(|&i| {
            let result = work(i).and_then(|out| persist(dir, &jobs[i].id, out).map_err(|e| e.to_string()));
            let mut guard = shared.lock().unwrap();
            let (m, rows) = &mut *guard;
            let entry = &mut m.jobs[i];
            match result {
                Ok((row, files)) => {
                    entry.status = JobStatus::Ok;
                    entry.error = None;
                    entry.files = files;
                    rows[i] = Some(row);
                }
                Err(e) => {
                    entry.status = JobStatus::Failed;
                    entry.error = Some(e);
                }
            }
            if let Err(e) = m.save(dir) {
                io_error.lock().unwrap().get_or_insert(e);
            }
        })
    });
    let (m, rows) = shared.into_inner().unwrap();
    *manifest = m;
    if let Some(e) = io_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(rows)
}

fn persist(dir: &Path, id: &str, out: JobOutput) -> Result<(Vec<String>, Vec<String>), CliError> {
    let mut files = Vec::new();
    for (name, header, rows) in &out.files {
        write_csv(&dir.join(name), header, rows)?;
        files.push(name.clone());
    }
    let path = row_path(dir, id);
    let text = serde_json::to_string(&StoredRow { row: out.row.clone() }).expect("row serializes");
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((out.row, files))
}

/// Writes the summary in job order, recording failed rows by status only,
/// and closes the manifest.
pub fn finish(
    dir: &Path,
    manifest: &mut RunManifest,
    summary: &str,
    header: &[&str],
    rows: Vec<Option<Vec<String>>>,
) -> Result<(), CliError> {
    let width = header.len();
    let rows: Vec<Vec<String>> = rows
        .into_iter()
        .zip(&manifest.jobs)
        .map(|(r, j)| match r {
            Some(mut r) => {
                r.push("ok".into());
                r
            }
            None => {
                let mut r = vec![String::new(); width - 1];
                r[0] = j.label.clone();
                r.push("failed".into());
                r
            }
        })
        .collect();
    write_csv(&dir.join(summary), header, &rows)?;
    let mut files: Vec<String> = manifest.jobs.iter().flat_map(|j| j.files.iter().cloned()).collect();
    files.extend(manifest.jobs.iter().filter(|j| j.status == JobStatus::Ok).map(|j| format!("rows/{}.json", j.id)));
    files.push(summary.to_string());
    files.push(MANIFEST.to_string());
    manifest.files = files;
    manifest.finished = Some(Utc::now());
    manifest.save(dir)
}
