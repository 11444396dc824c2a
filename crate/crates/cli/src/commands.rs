use std::collections::HashMap;
use std::path::Path;

use lzladder::doublewell::{gs_transfer, integrate_doublewell, inverse_transfer, p_lz};
use lzladder::fock::FockBasis;
use lzladder::hamiltonian::LadderHamiltonian;
use lzladder::observables::{MomentumGrid, OneBodyTable};
use lzladder::protocols::{thread_pool, Ladder, QuenchResult, SweepDirection, SweepOptions, SweepResult};
use lzladder::thermal::{ideal_gas_energy, ideal_gas_reference, quench_energies, thermal_point};
use serde_json::json;

use crate::config::{Needs, RunConfig};
use crate::output::*;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BasisInfo,
    Sweep,
    Scan,
    Quench,
    QuenchScan,
    DoubleWell,
    Thermal,
    Plot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BasisInfo => "basis-info",
            Command::Sweep => "sweep",
            Command::Scan => "scan",
            Command::Quench => "quench",
            Command::QuenchScan => "quench-scan",
            Command::DoubleWell => "doublewell",
            Command::Thermal => "thermal",
            Command::Plot => "plot",
        }
    }

    pub fn needs(self) -> Needs {
        match self {
            Command::Sweep => Needs::SweepRate,
            Command::Scan => Needs::SweepGrid,
            Command::Quench => Needs::QuenchBias,
            Command::QuenchScan => Needs::QuenchGrid,
            Command::Thermal => Needs::ThermalGrid,
            _ => Needs::Nothing,
        }
    }
}

/// Final state of a run: the manifest plus how many jobs failed.
pub struct Report {
    pub manifest: Option<RunManifest>,
    pub failed: usize,
    pub stdout: String,
}

pub fn resolve_threads(config: &RunConfig) -> usize {
    if config.threads > 0 {
        config.threads
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

pub fn execute(command: Command, config: &RunConfig, resume: bool) -> Result<Report, CliError> {
    config.validate(command.needs())?;
    let basis = config.build_basis()?;
    if command == Command::BasisInfo {
        return Ok(Report { manifest: None, failed: 0, stdout: basis_info(config, &basis)? });
    }
    let dir = config.out.as_path();
    if command == Command::Plot {
        let written = crate::plot::write_scripts(dir)?;
        return Ok(Report { manifest: None, failed: 0, stdout: written.join("\n") });
    }
    prepare_dir(dir)?;
    let threads = resolve_threads(config);
    let pool = thread_pool(threads).map_err(|e| CliError::Setup(e.to_string()))?;
    let mut manifest = RunManifest::new(command.name(), config, threads);
    match command {
        Command::Sweep | Command::Scan => sweeps(command, config, &basis, dir, &mut manifest, resume, &pool)?,
        Command::Quench | Command::QuenchScan => quenches(command, config, &basis, dir, &mut manifest, resume, &pool)?,
        Command::DoubleWell => doublewell(config, dir, &mut manifest, resume, &pool)?,
        Command::Thermal => thermal(config, &basis, dir, &mut manifest, resume, &pool)?,
        Command::BasisInfo | Command::Plot => unreachable!(),
    }
    let failed = manifest.failed();
    let stdout = format!("{}: {} job(s), {failed} failed, output in {}", command.name(), manifest.jobs.len(), dir.display());
    Ok(Report { manifest: Some(manifest), failed, stdout })
}

fn basis_info(config: &RunConfig, basis: &FockBasis) -> Result<String, CliError> {
    let ham = LadderHamiltonian::new(&config.params(), basis).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let info = json!({
        "rungs": basis.geometry().rungs(),
        "particles": basis.particles(),
        "n_max": basis.n_max(),
        "dim": basis.dim(),
        "nnz_static": ham.static_part().nnz(),
        "memory_estimate_bytes": basis.memory_estimate(),
        "dense_feasible": basis.dim() <= config.thermal.dense_cap,
    });
    Ok(serde_json::to_string_pretty(&info).expect("json"))
}

fn prepare<'a>(config: &RunConfig, basis: &'a FockBasis) -> Result<Ladder<'a>, CliError> {
    Ladder::prepare(&config.params(), basis, config.seed, config.model.ground_state_tol).map_err(|e| CliError::Run(e.to_string()))
}

const SWEEP_SUMMARY: [&str; 14] = [
    "alpha",
    "two_pi_over_alpha",
    "direction",
    "rescale",
    "n_r_final",
    "amplitude",
    "periods_averaged",
    "flagged",
    "k2_l_initial",
    "k2_l_final",
    "k2_r_final",
    "n_r_ramp_end",
    "max_norm_drift",
    "status",
];

fn sweep_output(id: &str, res: &SweepResult, grid: &MomentumGrid, momentum: bool) -> JobOutput {
    let row = vec![
        num(res.alpha),
        num(res.two_pi_over_alpha),
        res.direction.name().to_string(),
        num(res.rescale),
        num(res.n_r_final),
        num(res.amplitude),
        res.periods_averaged.to_string(),
        res.flagged.to_string(),
        num(res.initial.k2_l),
        num(res.k2_l_final),
        num(res.k2_r_final),
        num(res.ramp_end.n_r),
        num(res.max_norm_drift),
    ];
    let mut series = series_rows("ramp", &res.ramp);
    series.extend(series_rows("hold", &res.hold));
    let mut files = vec![(format!("series/{id}.csv"), SERIES_HEADER.to_vec(), series)];
    if momentum {
        let mut nk = momentum_rows("ramp", &res.ramp, grid);
        nk.extend(momentum_rows("hold", &res.hold, grid));
        files.push((format!("series/{id}_nk.csv"), MOMENTUM_HEADER.to_vec(), nk));
    }
    JobOutput { row, files }
}

fn sweeps(
    command: Command,
    config: &RunConfig,
    basis: &FockBasis,
    dir: &Path,
    manifest: &mut RunManifest,
    resume: bool,
    pool: &rayon::ThreadPool,
) -> Result<(), CliError> {
    let ladder = prepare(config, basis)?;
    let s = &config.sweep;
    let alphas = match command {
        Command::Sweep => vec![s.alpha.expect("validated").abs()],
        _ => s.grid(),
    };
    let jobs: Vec<Job> =
        alphas.iter().enumerate().map(|(i, a)| Job { id: format!("sweep_{i:04}"), label: num(*a) }).collect();
    let grid = MomentumGrid::for_rungs(basis.geometry().rungs());
    let policy = s.policy();
    let rows = run_jobs(dir, manifest, &jobs, resume, pool, |i| {
        let alpha = alphas[i];
        let opts = SweepOptions { rescale: policy.factor(alpha), ..s.options() };
        let res = ladder.sweep(s.direction, alpha, &opts, &config.propagation).map_err(|e| e.to_string())?;
        Ok(sweep_output(&jobs[i].id, &res, &grid, s.write_momentum))
    })?;
    finish(dir, manifest, "sweep_summary.csv", &SWEEP_SUMMARY, rows)
}

const QUENCH_SUMMARY: [&str; 16] = [
    "delta_f",
    "energy",
    "n_r_mean",
    "n_r_amplitude",
    "k2_l_mean",
    "k2_l_amplitude",
    "k2_r_mean",
    "k2_r_amplitude",
    "window_start",
    "window_end",
    "reflection_time",
    "low_density",
    "flagged",
    "max_energy_drift",
    "max_norm_drift",
    "status",
];

fn quench_output(id: &str, q: &QuenchResult, grid: &MomentumGrid, momentum: bool) -> JobOutput {
    let row = vec![
        num(q.delta_f),
        num(q.energy),
        num(q.n_r.mean),
        num(q.n_r.amplitude),
        num(q.k2_l.mean),
        num(q.k2_l.amplitude),
        num(q.k2_r.mean),
        num(q.k2_r.amplitude),
        num(q.n_r.t_start),
        num(q.n_r.t_end),
        num(q.reflection_time),
        q.low_density.to_string(),
        q.flagged.to_string(),
        num(q.max_energy_drift),
        num(q.series.max_norm_drift),
    ];
    let mut files = vec![(format!("series/{id}.csv"), SERIES_HEADER.to_vec(), series_rows("quench", &q.series))];
    if momentum {
        files.push((format!("series/{id}_nk.csv"), MOMENTUM_HEADER.to_vec(), momentum_rows("quench", &q.series, grid)));
    }
    JobOutput { row, files }
}

fn quenches(
    command: Command,
    config: &RunConfig,
    basis: &FockBasis,
    dir: &Path,
    manifest: &mut RunManifest,
    resume: bool,
    pool: &rayon::ThreadPool,
) -> Result<(), CliError> {
    let ladder = prepare(config, basis)?;
    let q = &config.quench;
    let deltas = match command {
        Command::Quench => vec![q.delta_f.expect("validated")],
        _ => q.delta_f_grid.clone().expect("validated"),
    };
    let jobs: Vec<Job> =
        deltas.iter().enumerate().map(|(i, d)| Job { id: format!("quench_{i:04}"), label: num(*d) }).collect();
    let grid = MomentumGrid::for_rungs(basis.geometry().rungs());
    let rows = run_jobs(dir, manifest, &jobs, resume, pool, |i| {
        let res = ladder.quench(deltas[i], q.t_max, &q.options(), &config.propagation).map_err(|e| e.to_string())?;
        Ok(quench_output(&jobs[i].id, &res, &grid, q.write_momentum))
    })?;
    finish(dir, manifest, "quench_summary.csv", &QUENCH_SUMMARY, rows)
}

const DOUBLEWELL_SUMMARY: [&str; 12] = [
    "two_pi_over_alpha",
    "alpha",
    "n",
    "u",
    "delta0",
    "p_lz",
    "analytic_ground_state",
    "integrated_ground_state",
    "analytic_inverse",
    "integrated_inverse",
    "flagged",
    "status",
];

fn doublewell(config: &RunConfig, dir: &Path, manifest: &mut RunManifest, resume: bool, pool: &rayon::ThreadPool) -> Result<(), CliError> {
    let d = &config.doublewell;
    let mut xs = d.reduced_time_grid.clone();
    xs.sort_by(f64::total_cmp);
    let jobs: Vec<Job> = xs.iter().enumerate().map(|(i, x)| Job { id: format!("doublewell_{i:04}"), label: num(*x) }).collect();
    let delta0 = d.delta0();
    let rows = run_jobs(dir, manifest, &jobs, resume, pool, |i| {
        let alpha = 2.0 * std::f64::consts::PI / xs[i];
        let e = |e: lzladder::Error| e.to_string();
        let gs = integrate_doublewell(d.n, d.u, delta0, alpha, SweepDirection::GroundState, &config.propagation).map_err(e)?;
        let inv = integrate_doublewell(d.n, d.u, delta0, alpha, SweepDirection::Inverse, &config.propagation).map_err(e)?;
        let row = vec![
            num(xs[i]),
            num(alpha),
            d.n.to_string(),
            num(d.u),
            num(delta0),
            num(p_lz(alpha).map_err(e)?),
            num(gs_transfer(d.n, alpha).map_err(e)?),
            num(gs.transfer),
            num(inverse_transfer(d.n, alpha, d.u).map_err(e)?),
            num(inv.transfer),
            (gs.flagged || inv.flagged).to_string(),
        ];
        Ok(JobOutput { row, files: Vec::new() })
    })?;
    finish(dir, manifest, "doublewell_summary.csv", &DOUBLEWELL_SUMMARY, rows)
}

const THERMAL_SUMMARY: [&str; 16] = [
    "delta_f",
    "energy",
    "beta",
    "n_r",
    "k2_l",
    "k2_r",
    "negative_temperature",
    "ideal_energy",
    "ideal_beta",
    "ideal_mu",
    "ideal_n_r",
    "ideal_k2_l",
    "ideal_k2_r",
    "ideal_converged",
    "energy_source",
    "status",
];

/// `Δf -> E` from a quench summary CSV.
pub fn read_quench_energies(path: &Path) -> Result<HashMap<u64, f64>, CliError> {
    let bad = |e: String| CliError::Setup(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name}")));
    let (cd, ce, cs) = (col("delta_f")?, col("energy")?, col("status")?);
    let mut out = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if &rec[cs] != "ok" {
            continue;
        }
        let d: f64 = rec[cd].parse().map_err(|_| bad(format!("bad delta_f {}", &rec[cd])))?;
        let e: f64 = rec[ce].parse().map_err(|_| bad(format!("bad energy {}", &rec[ce])))?;
        out.insert(d.to_bits(), e);
    }
    Ok(out)
}

fn thermal(
    config: &RunConfig,
    basis: &FockBasis,
    dir: &Path,
    manifest: &mut RunManifest,
    resume: bool,
    pool: &rayon::ThreadPool,
) -> Result<(), CliError> {
    let t = &config.thermal;
    let deltas = config.thermal_grid().expect("validated").to_vec();
    if basis.dim() > t.dense_cap {
        return Err(CliError::Setup(format!(
            "thermal needs dense diagonalization of dimension {} but thermal.dense_cap is {}",
            basis.dim(),
            t.dense_cap
        )));
    }
    let ladder = prepare(config, basis)?;
    let (energies, source) = match &t.energies_from {
        Some(path) => {
            let table = read_quench_energies(path)?;
            let e: Result<Vec<f64>, CliError> = deltas
                .iter()
                .map(|d| table.get(&d.to_bits()).copied().ok_or_else(|| CliError::Setup(format!("{} has no energy for Δf = {d}", path.display()))))
                .collect();
            (e?, "quench_summary")
        }
        None => (quench_energies(&ladder.ham, &ladder.initial, &deltas), "initial_state"),
    };
    manifest.notes.push("interacting gas: canonical ensemble at fixed N matched to the quench energy".into());
    if t.ideal_gas {
        manifest.notes.push("ideal gas: grand-canonical U = 0 reference with mean N fixed and E = -2 J_par N".into());
    }
    let params = config.params();
    let ideal_e = ideal_gas_energy(&params, basis.particles());
    let ideal = if t.ideal_gas { Some(ideal_gas_reference(&params, basis.geometry(), basis.particles(), &deltas, ideal_e)) } else { None };
    let table = OneBodyTable::new(basis);
    let jobs: Vec<Job> = deltas.iter().enumerate().map(|(i, d)| Job { id: format!("thermal_{i:04}"), label: num(*d) }).collect();
    let rows = run_jobs(dir, manifest, &jobs, resume, pool, |i| {
        let p = thermal_point(&ladder.ham, basis, &table, deltas[i], energies[i], &t.options()).map_err(|e| e.to_string())?;
        let mut row =
            vec![num(p.delta_f), num(energies[i]), num(p.beta), num(p.n_r), num(p.k2_l), num(p.k2_r), p.negative_temperature.to_string()];
        match &ideal {
            Some(g) => {
                let g = g[i];
                row.extend([
                    num(ideal_e),
                    num(g.beta),
                    opt_num(g.chemical_potential),
                    num(g.n_r),
                    num(g.k2_l),
                    num(g.k2_r),
                    g.converged.to_string(),
                ]);
            }
            None => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        row.push(source.to_string());
        Ok(JobOutput { row, files: Vec::new() })
    })?;
    finish(dir, manifest, "thermal_summary.csv", &THERMAL_SUMMARY, rows)
}
