use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use lzladder::fock::{FockBasis, LadderGeometry};
use lzladder::hamiltonian::{Boundary, HamiltonianParams};
use lzladder::observables::Cut;
use lzladder::propagator::PropagationSettings;
use lzladder::protocols::{QuenchOptions, RescalePolicy, SweepDirection, SweepOptions, DEFAULT_DELTA0};
use lzladder::thermal::ThermalOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for the Lanczos start vector.
    pub seed: u64,
    /// Worker threads; 0 picks one per available core.
    pub threads: usize,
    pub out: PathBuf,
    pub model: ModelConfig,
    pub basis: BasisConfig,
    pub propagation: PropagationSettings,
    pub sweep: SweepConfig,
    pub quench: QuenchConfig,
    pub doublewell: DoubleWellConfig,
    pub thermal: ThermalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            out: PathBuf::from("runs"),
            model: ModelConfig::default(),
            basis: BasisConfig::default(),
            propagation: PropagationSettings::default(),
            sweep: SweepConfig::default(),
            quench: QuenchConfig::default(),
            doublewell: DoubleWellConfig::default(),
            thermal: ThermalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub j_par: f64,
    pub u: f64,
    pub boundary: Boundary,
    /// Residual tolerance of the initial ground state.
    pub ground_state_tol: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = HamiltonianParams::default();
        Self { j_par: p.j_par, u: p.u, boundary: p.boundary, ground_state_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub rungs: usize,
    pub particles: usize,
    /// Defaults to `min(N, 4)`.
    pub n_max: Option<usize>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { rungs: 4, particles: 4, n_max: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Interpolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub direction: SweepDirection,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    /// Scan grid given as `2π/α` instead of `α`.
    pub reduced_time_grid: Option<Vec<f64>>,
    pub r: Option<f64>,
    pub r_policy: Option<PolicyName>,
    pub delta0: f64,
    pub hold_periods: f64,
    pub samples_per_period: usize,
    pub entropy: Option<Cut>,
    pub write_momentum: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let o = SweepOptions::default();
        Self {
            direction: SweepDirection::Inverse,
            alpha: None,
            alpha_grid: None,
            reduced_time_grid: None,
            r: None,
            r_policy: None,
            delta0: DEFAULT_DELTA0,
            hold_periods: o.hold_periods,
            samples_per_period: o.samples_per_period,
            entropy: None,
            write_momentum: false,
        }
    }
}

impl SweepConfig {
    pub fn policy(&self) -> RescalePolicy {
        match self.r {
            Some(r) => RescalePolicy::Fixed(r),
            None => RescalePolicy::Interpolated,
        }
    }

    pub fn options(&self) -> SweepOptions {
        SweepOptions {
            delta0: self.delta0,
            rescale: 1.0,
            hold_periods: self.hold_periods,
            samples_per_period: self.samples_per_period,
            entropy: self.entropy,
        }
    }

    /// Scan rates as magnitudes, ascending.
    pub fn grid(&self) -> Vec<f64> {
        let mut a: Vec<f64> = match (&self.alpha_grid, &self.reduced_time_grid) {
            (Some(g), _) => g.iter().map(|a| a.abs()).collect(),
            (None, Some(x)) => x.iter().map(|x| 2.0 * PI / x).collect(),
            (None, None) => Vec::new(),
        };
        a.sort_by(f64::total_cmp);
        a
    }

    fn check_rate(&self, a: f64, what: &str, errs: &mut Vec<String>) {
        if !a.is_finite() || a == 0.0 {
            errs.push(format!("sweep.{what}: rate must be finite and non-zero, got {a}"));
        } else if self.direction == SweepDirection::Inverse && a < 0.0 {
            errs.push(format!("sweep.{what}: inverse sweeps run from Δ0 < 0 upwards and need α > 0, got {a}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuenchConfig {
    pub delta_f: Option<f64>,
    pub delta_f_grid: Option<Vec<f64>>,
    pub t_max: f64,
    pub low_density_threshold: f64,
    pub entropy: Option<Cut>,
    pub write_momentum: bool,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        let o = QuenchOptions::default();
        Self {
            delta_f: None,
            delta_f_grid: None,
            t_max: 60.0,
            low_density_threshold: o.low_density_threshold,
            entropy: None,
            write_momentum: false,
        }
    }
}

impl QuenchConfig {
    pub fn options(&self) -> QuenchOptions {
        QuenchOptions { low_density_threshold: self.low_density_threshold, entropy: self.entropy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoubleWellConfig {
    pub n: usize,
    pub u: f64,
    /// Defaults to `3·U·n`.
    pub delta0: Option<f64>,
    pub reduced_time_grid: Vec<f64>,
}

impl Default for DoubleWellConfig {
    fn default() -> Self {
        Self { n: 2, u: 10.0, delta0: None, reduced_time_grid: vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0] }
    }
}

impl DoubleWellConfig {
    pub fn delta0(&self) -> f64 {
        self.delta0.unwrap_or(3.0 * self.u * self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalConfig {
    /// Falls back to `quench.delta_f_grid`.
    pub delta_f_grid: Option<Vec<f64>>,
    /// Quench-scan summary CSV supplying the energy per `Δf`.
    pub energies_from: Option<PathBuf>,
    pub dense_cap: usize,
    pub energy_tol: f64,
    pub ideal_gas: bool,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        let o = ThermalOptions::default();
        Self { delta_f_grid: None, energies_from: None, dense_cap: o.dense_cap, energy_tol: o.energy_tol, ideal_gas: true }
    }
}

impl ThermalConfig {
    pub fn options(&self) -> ThermalOptions {
        ThermalOptions { dense_cap: self.dense_cap, energy_tol: self.energy_tol }
    }
}

/// What a subcommand needs from the config beyond the general checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Nothing,
    SweepRate,
    SweepGrid,
    QuenchBias,
    QuenchGrid,
    ThermalGrid,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn params(&self) -> HamiltonianParams {
        HamiltonianParams { j_par: self.model.j_par, u: self.model.u, boundary: self.model.boundary }
    }

    pub fn build_basis(&self) -> Result<FockBasis, CliError> {
        let geometry = LadderGeometry::new(self.basis.rungs).map_err(|e| CliError::Config(vec![e.to_string()]))?;
        let cap = self.basis.n_max.unwrap_or_else(|| FockBasis::default_cap(self.basis.particles));
        FockBasis::new(geometry, self.basis.particles, cap).map_err(|e| CliError::Config(vec![e.to_string()]))
    }

    pub fn thermal_grid(&self) -> Option<&[f64]> {
        self.thermal.delta_f_grid.as_deref().or(self.quench.delta_f_grid.as_deref())
    }

    /// Every constraint violation, not just the first.
    pub fn validate(&self, needs: Needs) -> Result<(), CliError> {
        let mut errs = Vec::new();
        if let Err(e) = self.params().validate() {
            errs.push(format!("model: {e}"));
        }
        if !(self.model.ground_state_tol > 0.0) {
            errs.push("model.ground_state_tol must be > 0".into());
        }
        if self.basis.rungs == 0 {
            errs.push("basis.rungs must be >= 1".into());
        }
        if self.basis.n_max == Some(0) && self.basis.particles > 0 {
            errs.push("basis.n_max must be >= 1".into());
        }
        if let Err(e) = self.propagation.validate() {
            errs.push(format!("propagation: {e}"));
        }
        let s = &self.sweep;
        if let Err(e) = s.options().validate() {
            errs.push(format!("sweep: {e}"));
        }
        if s.r.is_some() && s.r_policy.is_some() {
            errs.push("sweep: set either r or r_policy, not both".into());
        }
        if let Some(r) = s.r {
            if !(r > 0.0 && r.is_finite()) {
                errs.push(format!("sweep.r must be > 0, got {r}"));
            }
        }
        if let Some(a) = s.alpha {
            s.check_rate(a, "alpha", &mut errs);
        }
        if s.alpha_grid.is_some() && s.reduced_time_grid.is_some() {
            errs.push("sweep: set either alpha_grid or reduced_time_grid, not both".into());
        }
        for &a in s.alpha_grid.iter().flatten() {
            s.check_rate(a, "alpha_grid", &mut errs);
        }
        for &x in s.reduced_time_grid.iter().flatten() {
            if !(x > 0.0 && x.is_finite()) {
                errs.push(format!("sweep.reduced_time_grid: entries must be > 0, got {x}"));
            }
        }
        let q = &self.quench;
        if !(q.t_max > 0.0 && q.t_max.is_finite()) {
            errs.push(format!("quench.t_max must be > 0, got {}", q.t_max));
        }
        if q.t_max > self.propagation.max_time {
            errs.push(format!("quench.t_max {} exceeds propagation.max_time {}", q.t_max, self.propagation.max_time));
        }
        for &d in q.delta_f.iter().chain(q.delta_f_grid.iter().flatten()) {
            if !d.is_finite() {
                errs.push(format!("quench: Δf must be finite, got {d}"));
            }
        }
        let d = &self.doublewell;
        if d.n == 0 {
            errs.push("doublewell.n must be >= 1".into());
        }
        if !(d.u >= 0.0 && d.u.is_finite()) {
            errs.push(format!("doublewell.u must be >= 0, got {}", d.u));
        }
        if !(d.delta0() > 0.0 && d.delta0().is_finite()) {
            errs.push(format!("doublewell.delta0 must be > 0, got {}", d.delta0()));
        }
        if d.reduced_time_grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            errs.push("doublewell.reduced_time_grid: entries must be > 0".into());
        }
        let t = &self.thermal;
        if !(t.energy_tol > 0.0) {
            errs.push(format!("thermal.energy_tol must be > 0, got {}", t.energy_tol));
        }
        match needs {
            Needs::Nothing => {}
            Needs::SweepRate if s.alpha.is_none() => errs.push("sweep.alpha is required".into()),
            Needs::SweepGrid if s.grid().is_empty() => errs.push("sweep.alpha_grid or sweep.reduced_time_grid is required".into()),
            Needs::QuenchBias if q.delta_f.is_none() => errs.push("quench.delta_f is required".into()),
            Needs::QuenchGrid if q.delta_f_grid.as_ref().is_none_or(|g| g.is_empty()) => {
                errs.push("quench.delta_f_grid is required".into())
            }
            Needs::ThermalGrid if self.thermal_grid().is_none_or(|g| g.is_empty()) => {
                errs.push("thermal.delta_f_grid (or quench.delta_f_grid) is required".into())
            }
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    RunConfig::from_toml(&text)
}
