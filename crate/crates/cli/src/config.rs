//! Run configuration: JSON file, per-field overrides and validation.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use sgu_core::engine::{MinimizeOptions, QuadConfig};
use sgu_core::phase::{StReading, DEFAULT_LAMBDA0};

/// Invalid configuration; reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError {
    pub field: String,
    pub message: String,
}

impl UsageError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Optimal general-dyne ratio r_m over (T0, Delta/T0)
    #[default]
    ThermometryMap,
    /// Minimal resolved Fock levels beating the optimal Gaussian measurement
    CounterMap,
    /// Counter comparison along Delta/T0 at a few fixed temperatures
    CounterSlice,
    /// Squeezed-vacuum SGU against photon number: optimal, homodyne, heterodyne
    PeScaling,
    /// Optimal measurement squeezing against window width at large photon number
    PeAsymptotic,
    /// Optimal measurement squeezing for squeezed thermal probes
    PeThermal,
    /// XY-chain SGU against the global bound
    XySgu,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ThermometryMap => "thermometry-map",
            Command::CounterMap => "counter-map",
            Command::CounterSlice => "counter-slice",
            Command::PeScaling => "pe-scaling",
            Command::PeAsymptotic => "pe-asymptotic",
            Command::PeThermal => "pe-thermal",
            Command::XySgu => "xy-sgu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermometrySection {
    pub t0_min: f64,
    pub t0_max: f64,
    /// Log-spaced temperatures from `t0_min` to `t0_max`.
    pub t0_points: usize,
    /// Cell-centred relative widths `(k - 1/2) delta_rel_max / delta_rel_points`.
    pub delta_rel_max: f64,
    pub delta_rel_points: usize,
    pub level_cap: u64,
    /// Temperatures of the counter slice.
    pub slice_t0: Vec<f64>,
}

impl Default for ThermometrySection {
    fn default() -> Self {
        Self {
            t0_min: 0.05,
            t0_max: 10.0,
            t0_points: 32,
            delta_rel_max: 2.0,
            delta_rel_points: 32,
            level_cap: sgu_core::thermometry::DEFAULT_LEVEL_CAP,
            slice_t0: vec![0.01, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub lambda0: f64,
    /// Log-spaced photon numbers for the scaling sweep.
    pub n_min: f64,
    pub n_max: f64,
    pub n_points: usize,
    pub deltas: Vec<f64>,
    /// Optimize the probe squeezing phase in the scaling and asymptotic sweeps.
    pub optimize_probe_phase: bool,
    pub n_asymptotic: f64,
    pub asymptotic_deltas: Vec<f64>,
    /// Probe squeezing of the squeezed thermal state.
    pub st_squeezing: f64,
    pub n_thermal: Vec<f64>,
    pub thermal_deltas: Vec<f64>,
    pub st_reading: StReading,
    pub thermal_optimize_probe_phase: bool,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            lambda0: DEFAULT_LAMBDA0,
            n_min: 1.0,
            n_max: 1e6,
            n_points: 25,
            deltas: vec![PI / 20.0],
            optimize_probe_phase: true,
            n_asymptotic: 1e6,
            asymptotic_deltas: [100.0, 50.0, 30.0, 20.0, 10.0, 6.0, 4.0, 3.0, 2.0]
                .iter()
                .map(|d| PI / d)
                .collect(),
            st_squeezing: 1.0,
            n_thermal: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            thermal_deltas: vec![PI / 20.0],
            st_reading: StReading::Exact,
            thermal_optimize_probe_phase: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XySection {
    pub sites: usize,
    pub gamma: f64,
    pub lambda0: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Only momentum cells with `k < k0` are measured.
    pub k0: f64,
}

impl Default for XySection {
    fn default() -> Self {
        Self {
            sites: 64,
            gamma: 1.0,
            lambda0: vec![0.5],
            deltas: vec![0.2],
            k0: PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub blind_cfi: f64,
    pub grid_points: usize,
    pub tol: f64,
    pub max_cycles: usize,
    pub snap_tol: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let q = QuadConfig::default();
        let m = MinimizeOptions::default();
        Self {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            max_depth: q.max_depth,
            blind_cfi: q.blind_cfi,
            grid_points: m.grid_points,
            tol: m.tol,
            max_cycles: m.max_cycles,
            snap_tol: m.snap_tol,
        }
    }
}

impl NumericsSection {
    pub fn quad(&self) -> QuadConfig {
        QuadConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_depth: self.max_depth,
            blind_cfi: self.blind_cfi,
        }
    }

    pub fn minimize(&self) -> MinimizeOptions {
        MinimizeOptions {
            grid_points: self.grid_points,
            tol: self.tol,
            max_cycles: self.max_cycles,
            snap_tol: self.snap_tol,
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Command,
    pub format: Format,
    /// Dataset path; stdout when absent.
    pub output: Option<PathBuf>,
    pub thermometry: ThermometrySection,
    pub phase: PhaseSection,
    pub xy: XySection,
    pub numerics: NumericsSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, UsageError> {
        serde_json::from_str(text).map_err(|e| UsageError::new(&json_error_field(&e.to_string()), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Apply `section.field=value`; the value is parsed as JSON and falls back
    /// to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), UsageError> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| UsageError::new("--set", format!("expected field=value, got `{assignment}`")))?;
        let path = path.trim();
        let mut root = serde_json::to_value(&*self).expect("config serializes");
        let mut slot = &mut root;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| UsageError::new(path, "unknown field"))?;
        }
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Json::String(raw.to_string()));
        *self = serde_json::from_value(root).map_err(|e| UsageError::new(path, e.to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let t = &self.thermometry;
        positive("thermometry.t0_min", t.t0_min)?;
        check(t.t0_max >= t.t0_min && t.t0_max.is_finite(), "thermometry.t0_max", "must be finite and >= t0_min")?;
        nonzero("thermometry.t0_points", t.t0_points)?;
        check(
            t.delta_rel_max > 0.0 && t.delta_rel_max <= 2.0,
            "thermometry.delta_rel_max",
            "must lie in (0, 2]",
        )?;
        nonzero("thermometry.delta_rel_points", t.delta_rel_points)?;
        check(t.level_cap >= 1, "thermometry.level_cap", "must be >= 1")?;
        nonempty("thermometry.slice_t0", &t.slice_t0)?;
        for &v in &t.slice_t0 {
            positive("thermometry.slice_t0", v)?;
        }

        let p = &self.phase;
        check(p.lambda0.is_finite(), "phase.lambda0", "must be finite")?;
        positive("phase.n_min", p.n_min)?;
        check(p.n_max >= p.n_min && p.n_max.is_finite(), "phase.n_max", "must be finite and >= n_min")?;
        nonzero("phase.n_points", p.n_points)?;
        widths("phase.deltas", &p.deltas)?;
        positive("phase.n_asymptotic", p.n_asymptotic)?;
        widths("phase.asymptotic_deltas", &p.asymptotic_deltas)?;
        positive("phase.st_squeezing", p.st_squeezing)?;
        nonempty("phase.n_thermal", &p.n_thermal)?;
        for &v in &p.n_thermal {
            check(v >= 0.0 && v.is_finite(), "phase.n_thermal", "entries must be finite and >= 0")?;
        }
        widths("phase.thermal_deltas", &p.thermal_deltas)?;

        let x = &self.xy;
        check(x.sites >= 2 && x.sites.is_multiple_of(2), "xy.sites", "must be even and >= 2")?;
        check(x.gamma > 0.0 && x.gamma <= 1.0, "xy.gamma", "must lie in (0, 1]")?;
        nonempty("xy.lambda0", &x.lambda0)?;
        for &v in &x.lambda0 {
            check(v.is_finite(), "xy.lambda0", "entries must be finite")?;
        }
        nonempty("xy.deltas", &x.deltas)?;
        for &v in &x.deltas {
            check(v >= 0.0 && v.is_finite(), "xy.deltas", "entries must be finite and >= 0")?;
        }
        check(x.k0 > 0.0 && x.k0 <= PI, "xy.k0", "must lie in (0, pi]")?;

        let n = &self.numerics;
        positive("numerics.rel_tol", n.rel_tol)?;
        positive("numerics.abs_tol", n.abs_tol)?;
        positive("numerics.blind_cfi", n.blind_cfi)?;
        check((1..=60).contains(&n.max_depth), "numerics.max_depth", "must lie in 1..=60")?;
        check(n.grid_points >= 2, "numerics.grid_points", "must be >= 2")?;
        positive("numerics.tol", n.tol)?;
        nonzero("numerics.max_cycles", n.max_cycles)?;
        check(n.snap_tol >= 0.0 && n.snap_tol.is_finite(), "numerics.snap_tol", "must be finite and >= 0")?;
        Ok(())
    }
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), UsageError> {
    if ok {
        Ok(())
    } else {
        Err(UsageError::new(field, message))
    }
}

fn positive(field: &str, v: f64) -> Result<(), UsageError> {
    check(v > 0.0 && v.is_finite(), field, "must be finite and positive")
}

fn nonzero(field: &str, v: usize) -> Result<(), UsageError> {
    check(v > 0, field, "grid must be nonempty")
}

fn nonempty(field: &str, v: &[f64]) -> Result<(), UsageError> {
    check(!v.is_empty(), field, "grid must be nonempty")
}

fn widths(field: &str, v: &[f64]) -> Result<(), UsageError> {
    nonempty(field, v)?;
    for &d in v {
        check(d > 0.0 && d <= 2.0 * PI, field, "widths must lie in (0, 2 pi]")?;
    }
    Ok(())
}

/// Best-effort field name from a serde_json error message.
fn json_error_field(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "--config".to_string())
}
