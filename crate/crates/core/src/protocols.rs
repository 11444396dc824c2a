//! Complete sweep and quench experiments.
//!
//! Every run starts from the ground state at `Δ = 100`, where all particles sit
//! in the left leg. A sweep ramps `Δ(t) = r Δ0 + α t` over `t ∈ [0, r T]` with
//! `T = -2 Δ0 / α`, then holds `Δ = -r Δ0` for a few rung-oscillation periods
//! and averages `n_R` over whole detected periods. The rescale factor `r`
//! leaves `α` unchanged while making the start and end of the ramp more
//! adiabatic.
//!
//! A quench evolves under a fixed `Δ_f` and extracts long-time values by
//! averaging each trace over its last full oscillation period.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::hamiltonian::{HamiltonianParams, LadderHamiltonian, RUNG_HOPPING};
use crate::observables::{Cut, Measurement, ObservableRecord, ResultSeries};
use crate::propagator::{evolve_with_step, ground_state, PropagationSettings, StateVector};

/// Bias at which the initial state is prepared.
pub const INITIAL_BIAS: f64 = 100.0;
/// Default sweep amplitude `|Δ0|`.
pub const DEFAULT_DELTA0: f64 = 18.2;
/// Minimum prominence for a local maximum to count as an oscillation peak.
pub const MIN_PROMINENCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    /// Starts with the particles in the lower leg: `Δ0 > 0, α < 0`.
    GroundState,
    /// Starts with the particles in the higher leg: `Δ0 < 0, α > 0`.
    Inverse,
}

impl SweepDirection {
    /// Signed `(Δ0, α)` from magnitudes.
    pub fn signed(self, delta0: f64, alpha: f64) -> (f64, f64) {
        match self {
            SweepDirection::GroundState => (delta0.abs(), -alpha.abs()),
            SweepDirection::Inverse => (-delta0.abs(), alpha.abs()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepDirection::GroundState => "ground_state",
            SweepDirection::Inverse => "inverse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BiasSchedule {
    Sweep { delta0: f64, alpha: f64, rescale: f64 },
    Quench { delta_f: f64, t_max: f64 },
}

impl BiasSchedule {
    pub fn sweep(delta0: f64, alpha: f64, rescale: f64) -> Result<Self> {
        if !(delta0 * alpha < 0.0) || !delta0.is_finite() || !alpha.is_finite() {
            return Err(Error::Config(format!(
                "sweep needs Δ0 and α of opposite sign, got Δ0={delta0}, α={alpha}"
            )));
        }
        if !(rescale > 0.0 && rescale.is_finite()) {
            return Err(Error::Config(format!("rescale factor must be > 0, got {rescale}")));
        }
        Ok(BiasSchedule::Sweep { delta0, alpha, rescale })
    }

    pub fn quench(delta_f: f64, t_max: f64) -> Result<Self> {
        if !delta_f.is_finite() || !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Config(format!("quench needs finite Δf and t_max > 0, got {delta_f}, {t_max}")));
        }
        Ok(BiasSchedule::Quench { delta_f, t_max })
    }

    /// `Δ(t)`; a sweep holds its end value after the ramp.
    pub fn delta_at(&self, t: f64) -> f64 {
        match *self {
            BiasSchedule::Sweep { delta0, alpha, rescale } => {
                let end = self.ramp_duration();
                if t >= end {
                    -rescale * delta0
                } else {
                    rescale * delta0 + alpha * t
                }
            }
            BiasSchedule::Quench { delta_f, .. } => delta_f,
        }
    }

    /// `r T` for a sweep, `t_max` for a quench.
    pub fn ramp_duration(&self) -> f64 {
        match *self {
            BiasSchedule::Sweep { delta0, alpha, rescale } => rescale * (-2.0 * delta0 / alpha),
            BiasSchedule::Quench { t_max, .. } => t_max,
        }
    }

    pub fn final_bias(&self) -> f64 {
        self.delta_at(f64::INFINITY)
    }
}

/// Choice of the rescale factor `r` per sweep rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescalePolicy {
    Fixed(f64),
    /// `r = 7` for `2π/α < 0.5`, `r = 2` for `2π/α > 2`, linear in between.
    Interpolated,
}

impl RescalePolicy {
    pub fn factor(&self, alpha: f64) -> f64 {
        match *self {
            RescalePolicy::Fixed(r) => r,
            RescalePolicy::Interpolated => {
                let x = reduced_time(alpha);
                if x <= 0.5 {
                    7.0
                } else if x >= 2.0 {
                    2.0
                } else {
                    7.0 + (x - 0.5) * (2.0 - 7.0) / 1.5
                }
            }
        }
    }
}

/// `2π / |α|`.
pub fn reduced_time(alpha: f64) -> f64 {
    2.0 * PI / alpha.abs()
}

/// Period of a single particle oscillating on one rung at bias `delta`.
pub fn rung_period(delta: f64) -> f64 {
    2.0 * PI / (delta * delta + 4.0 * RUNG_HOPPING * RUNG_HOPPING).sqrt()
}

/// Time average of a sampled trace over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationAverage {
    pub mean: f64,
    /// Half the peak-to-peak excursion inside the window.
    pub amplitude: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub periods: usize,
    /// Set when no oscillation period could be identified and a fallback
    /// window was used.
    pub flagged: bool,
}

/// Indices of local maxima whose prominence is at least `min_prominence`.
pub fn find_maxima(values: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let v = values[i];
        if !(v > values[i - 1] && v >= values[i + 1]) {
            continue;
        }
        let mut left_min = v;
        for &x in values[..i].iter().rev() {
            if x > v {
                break;
            }
            left_min = left_min.min(x);
        }
        let mut right_min = v;
        for &x in &values[i + 1..] {
            if x > v {
                break;
            }
            right_min = right_min.min(x);
        }
        if v - left_min.max(right_min) >= min_prominence {
            out.push(i);
        }
    }
    out
}

fn window_average(t: &[f64], v: &[f64], i0: usize, i1: usize) -> (f64, f64) {
    if i1 <= i0 {
        return (v[i0], 0.0);
    }
    let mut area = 0.0;
    for i in i0..i1 {
        area += 0.5 * (v[i] + v[i + 1]) * (t[i + 1] - t[i]);
    }
    let span = t[i1] - t[i0];
    let mean = if span > 0.0 { area / span } else { v[i0] };
    let (lo, hi) = v[i0..=i1].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    (mean, 0.5 * (hi - lo))
}

fn tail_fallback(t: &[f64], v: &[f64], min_prominence: f64) -> OscillationAverage {
    let n = v.len();
    let i0 = ((n as f64) * 0.8).floor() as usize;
    let i0 = i0.min(n - 1);
    let (mean, amplitude) = window_average(t, v, i0, n - 1);
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    OscillationAverage {
        mean,
        amplitude,
        t_start: t[i0],
        t_end: t[n - 1],
        periods: 0,
        // a trace without any structure above the prominence floor is settled
        flagged: hi - lo >= min_prominence,
    }
}

fn check_trace(t: &[f64], v: &[f64]) -> Result<()> {
    if t.len() != v.len() || t.is_empty() {
        return Err(Error::Domain(format!("trace lengths {} and {} unusable", t.len(), v.len())));
    }
    Ok(())
}

/// Average over the whole-period window between the first and last detected
/// maxima.
pub fn average_whole_periods(t: &[f64], v: &[f64], min_prominence: f64) -> Result<OscillationAverage> {
    check_trace(t, v)?;
    let peaks = find_maxima(v, min_prominence);
    if peaks.len() < 2 {
        return Ok(tail_fallback(t, v, min_prominence));
    }
    let (i0, i1) = (peaks[0], *peaks.last().unwrap());
    let (mean, amplitude) = window_average(t, v, i0, i1);
    Ok(OscillationAverage { mean, amplitude, t_start: t[i0], t_end: t[i1], periods: peaks.len() - 1, flagged: false })
}

/// Average over the last full period (between the final two maxima). Falls
/// back to the last 20% of the trace, flagged, when fewer than two maxima exist.
pub fn average_last_period(t: &[f64], v: &[f64], min_prominence: f64) -> Result<OscillationAverage> {
    check_trace(t, v)?;
    let peaks = find_maxima(v, min_prominence);
    if peaks.len() < 2 {
        return Ok(tail_fallback(t, v, min_prominence));
    }
    let (i0, i1) = (peaks[peaks.len() - 2], peaks[peaks.len() - 1]);
    let (mean, amplitude) = window_average(t, v, i0, i1);
    Ok(OscillationAverage { mean, amplitude, t_start: t[i0], t_end: t[i1], periods: 1, flagged: false })
}

/// Average over the period whose bracketing maxima lie closest to `t_target`.
pub fn average_period_near(t: &[f64], v: &[f64], t_target: f64, min_prominence: f64) -> Result<OscillationAverage> {
    check_trace(t, v)?;
    let peaks = find_maxima(v, min_prominence);
    if peaks.len() < 2 {
        return Ok(tail_fallback(t, v, min_prominence));
    }
    let best = peaks
        .windows(2)
        .min_by(|a, b| {
            let da = (0.5 * (t[a[0]] + t[a[1]]) - t_target).abs();
            let db = (0.5 * (t[b[0]] + t[b[1]]) - t_target).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let (mean, amplitude) = window_average(t, v, best[0], best[1]);
    Ok(OscillationAverage { mean, amplitude, t_start: t[best[0]], t_end: t[best[1]], periods: 1, flagged: false })
}

/// A ladder with its Hamiltonian and prepared initial state.
#[derive(Debug, Clone)]
pub struct Ladder<'a> {
    pub params: HamiltonianParams,
    pub basis: &'a FockBasis,
    pub ham: LadderHamiltonian,
    pub initial: StateVector,
}

impl<'a> Ladder<'a> {
    /// Builds `H` and the ground state at `Δ = 100`.
    pub fn prepare(params: &HamiltonianParams, basis: &'a FockBasis, seed: u64, tol: f64) -> Result<Self> {
        let ham = LadderHamiltonian::new(params, basis)?;
        let (_, initial) = ground_state(&ham.matrix(INITIAL_BIAS), tol, seed)?;
        Ok(Self { params: *params, basis, ham, initial })
    }

    fn measurement(&self, entropy: Option<Cut>) -> Measurement<'_> {
        let m = Measurement::new(self.basis, &self.ham);
        match entropy {
            Some(cut) => m.with_entropy(cut),
            None => m,
        }
    }

    /// Evolves `psi0` along `schedule` until `t_end`, sampling every `stride`
    /// steps of size about `dt`.
    fn record(
        &self,
        psi0: &StateVector,
        schedule: &BiasSchedule,
        t_end: f64,
        dt: f64,
        stride: usize,
        settings: &PropagationSettings,
        meas: &Measurement<'_>,
    ) -> Result<(ResultSeries, StateVector)> {
        let mut series = ResultSeries::default();
        let mut observer = |psi: &StateVector, delta: f64| -> Result<()> {
            series.records.push(meas.record(psi, delta)?);
            Ok(())
        };
        let run = evolve_with_step(psi0, &self.ham, |t| schedule.delta_at(t), t_end, dt, settings, stride, &mut observer)?;
        series.max_norm_drift = run.max_norm_drift;
        Ok((series, run.state))
    }

    pub fn sweep(
        &self,
        direction: SweepDirection,
        alpha: f64,
        opts: &SweepOptions,
        settings: &PropagationSettings,
    ) -> Result<SweepResult> {
        opts.validate()?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("sweep rate magnitude must be > 0, got {alpha}")));
        }
        let (delta0, signed_alpha) = direction.signed(opts.delta0, alpha);
        let schedule = BiasSchedule::sweep(delta0, signed_alpha, opts.rescale)?;
        let meas = self.measurement(opts.entropy);
        let ramp_end = schedule.ramp_duration();
        let (ramp, psi) = self.record(&self.initial, &schedule, ramp_end, settings.dt, settings.sample_stride, settings, &meas)?;

        let period = rung_period(schedule.final_bias());
        let hold_dt = period / opts.samples_per_period as f64;
        let hold_end = ramp_end + opts.hold_periods * period;
        let (hold, _) = self.record(&psi, &schedule, hold_end, hold_dt, 1, settings, &meas)?;

        let t = hold.times();
        let avg = average_whole_periods(&t, &hold.column(|r| r.n_r), MIN_PROMINENCE)?;
        let k2_l = average_whole_periods(&t, &hold.column(|r| r.k2_l), MIN_PROMINENCE)?;
        let k2_r = average_whole_periods(&t, &hold.column(|r| r.k2_r), MIN_PROMINENCE)?;
        Ok(SweepResult {
            direction,
            alpha,
            two_pi_over_alpha: reduced_time(alpha),
            rescale: opts.rescale,
            n_r_final: avg.mean,
            amplitude: avg.amplitude,
            periods_averaged: avg.periods,
            flagged: avg.flagged,
            k2_l_final: k2_l.mean,
            k2_r_final: k2_r.mean,
            initial: ramp.records.first().cloned().expect("observer fires at start"),
            ramp_end: ramp.records.last().cloned().expect("observer fires at end"),
            max_norm_drift: ramp.max_norm_drift.max(hold.max_norm_drift),
            ramp,
            hold,
        })
    }

    pub fn quench(&self, delta_f: f64, t_max: f64, opts: &QuenchOptions, settings: &PropagationSettings) -> Result<QuenchResult> {
        let schedule = BiasSchedule::quench(delta_f, t_max)?;
        let meas = self.measurement(opts.entropy);
        let (series, _) = self.record(&self.initial, &schedule, t_max, settings.dt, settings.sample_stride, settings, &meas)?;
        let t = series.times();
        let rungs = self.basis.geometry().rungs();
        let reflection_time = self.params.reflection_time(rungs);
        let density = self.basis.particles() as f64 / rungs as f64;
        let low_density = density <= opts.low_density_threshold && reflection_time.is_finite();
        let extract = |v: Vec<f64>| -> Result<OscillationAverage> {
            if low_density {
                average_period_near(&t, &v, 0.7 * reflection_time, MIN_PROMINENCE)
            } else {
                average_last_period(&t, &v, MIN_PROMINENCE)
            }
        };
        let n_r = extract(series.column(|r| r.n_r))?;
        let k2_l = extract(series.column(|r| r.k2_l))?;
        let k2_r = extract(series.column(|r| r.k2_r))?;
        let energy = series.records[0].energy;
        let scale = energy.abs().max(1.0);
        let max_energy_drift = series.records.iter().map(|r| (r.energy - energy).abs() / scale).fold(0.0, f64::max);
        Ok(QuenchResult {
            delta_f,
            n_r,
            k2_l,
            k2_r,
            energy,
            max_energy_drift,
            reflection_time,
            low_density,
            flagged: n_r.flagged || k2_l.flagged || k2_r.flagged,
            series,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    /// Unscaled sweep amplitude `|Δ0|`.
    pub delta0: f64,
    pub rescale: f64,
    /// Hold length after the ramp in rung-oscillation periods.
    pub hold_periods: f64,
    pub samples_per_period: usize,
    pub entropy: Option<Cut>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { delta0: DEFAULT_DELTA0, rescale: 1.0, hold_periods: 5.0, samples_per_period: 32, entropy: None }
    }
}

impl SweepOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(Error::Config(format!("|Δ0| must be > 0, got {}", self.delta0)));
        }
        if !(self.rescale > 0.0) {
            return Err(Error::Config(format!("rescale must be > 0, got {}", self.rescale)));
        }
        if !(self.hold_periods >= 1.0) {
            return Err(Error::Config(format!("hold_periods must be >= 1, got {}", self.hold_periods)));
        }
        if self.samples_per_period < 8 {
            return Err(Error::Config("samples_per_period must be >= 8".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuenchOptions {
    /// Densities `N / L_s` at or below this use the mid-trace window.
    pub low_density_threshold: f64,
    pub entropy: Option<Cut>,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        Self { low_density_threshold: 0.75, entropy: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub direction: SweepDirection,
    /// Rate magnitude `|α|`.
    pub alpha: f64,
    pub two_pi_over_alpha: f64,
    pub rescale: f64,
    /// `n_R` averaged over whole residual-oscillation periods after the ramp.
    pub n_r_final: f64,
    pub amplitude: f64,
    pub periods_averaged: usize,
    pub flagged: bool,
    pub k2_l_final: f64,
    pub k2_r_final: f64,
    pub initial: ObservableRecord,
    pub ramp_end: ObservableRecord,
    pub max_norm_drift: f64,
    pub ramp: ResultSeries,
    pub hold: ResultSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchResult {
    pub delta_f: f64,
    pub n_r: OscillationAverage,
    pub k2_l: OscillationAverage,
    pub k2_r: OscillationAverage,
    /// Conserved energy `<ψ0|H(Δf)|ψ0>`.
    pub energy: f64,
    /// Largest `|E(t) - E(0)| / max(|E(0)|, 1)`.
    pub max_energy_drift: f64,
    pub reflection_time: f64,
    pub low_density: bool,
    pub flagged: bool,
    pub series: ResultSeries,
}

/// Single sweep from a fresh ground state.
pub fn run_sweep(
    params: &HamiltonianParams,
    basis: &FockBasis,
    direction: SweepDirection,
    alpha: f64,
    opts: &SweepOptions,
    settings: &PropagationSettings,
) -> Result<SweepResult> {
    let ladder = Ladder::prepare(params, basis, 0, 1e-10)?;
    ladder.sweep(direction, alpha, opts, settings)
}

pub fn run_quench(
    params: &HamiltonianParams,
    basis: &FockBasis,
    delta_f: f64,
    t_max: f64,
    opts: &QuenchOptions,
    settings: &PropagationSettings,
) -> Result<QuenchResult> {
    let ladder = Ladder::prepare(params, basis, 0, 1e-10)?;
    ladder.quench(delta_f, t_max, opts, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub two_pi_over_alpha: f64,
    pub rescale: f64,
    pub result: std::result::Result<SweepResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateScan {
    pub direction: SweepDirection,
    pub rows: Vec<ScanRow>,
}

impl RateScan {
    /// Row with the largest averaged transfer, as `(2π/α, n_R)`.
    pub fn maximum(&self) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|s| (r.two_pi_over_alpha, s.n_r_final)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `(2π/α, n_R)` for every successful row, ordered by `2π/α`.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        let mut c: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|s| (r.two_pi_over_alpha, s.n_r_final)))
            .collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        c
    }
}

/// Rates `α = 2π / x` for a list of reduced sweep times `x`, ascending in `α`.
pub fn alphas_from_reduced_times(xs: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = xs.iter().map(|&x| 2.0 * PI / x).collect();
    a.sort_by(f64::total_cmp);
    a
}

/// Builds a pool with `threads` workers (0 = rayon default).
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// One sweep per rate; rows stay in input order and failures are kept per row.
pub fn rate_scan(
    ladder: &Ladder<'_>,
    direction: SweepDirection,
    alphas: &[f64],
    policy: RescalePolicy,
    opts: &SweepOptions,
    settings: &PropagationSettings,
    threads: usize,
) -> Result<RateScan> {
    if alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::Config("scan rates must be positive".into()));
    }
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("scan rates must be sorted ascending".into()));
    }
    let pool = thread_pool(threads)?;
    let rows = pool.install(|| {
        alphas
            .par_iter()
            .map(|&alpha| {
                let rescale = policy.factor(alpha);
                let o = SweepOptions { rescale, ..*opts };
                ScanRow {
                    alpha,
                    two_pi_over_alpha: reduced_time(alpha),
                    rescale,
                    result: ladder.sweep(direction, alpha, &o, settings).map_err(|e| e.to_string()),
                }
            })
            .collect()
    });
    Ok(RateScan { direction, rows })
}
