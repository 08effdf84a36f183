//! Equilibrium thermometry with a single thermal mode: general-dyne CFI and
//! SGU, homodyne/heterodyne transition maps, and finite-resolution photon
//! counters.
//!
//! Thermal CFIs scale like `e^{-1/T}`, so window averages are computed in the
//! log domain (see [`average_inverse_cfi_ln`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    average_inverse_cfi_ln, minimize_objective, AverageEstimate, Axis, MeasurementSpace, MinimizeOptions,
    Preference, Prior, QuadConfig, SguResult,
};
use crate::error::{ensure, Result, SguError};
use crate::gaussian::{thermal_nu, thermal_nu_derivative};

/// Default cap of the photon-counter level search.
pub const DEFAULT_LEVEL_CAP: u64 = 10_000;

/// Temperature window `[t0 - delta/2, t0 + delta/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermometryWindow {
    pub t0: f64,
    pub delta: f64,
}

impl ThermometryWindow {
    pub fn new(t0: f64, delta: f64) -> Result<Self> {
        ensure(t0 > 0.0 && t0.is_finite(), "center temperature must be positive", t0)?;
        ensure(delta > 0.0, "window width must be positive", delta)?;
        ensure(
            t0 - 0.5 * delta > 0.0,
            "window must stay at positive temperature (delta / t0 < 2)",
            delta / t0,
        )?;
        Ok(Self { t0, delta })
    }

    /// Window given by its relative width `delta / t0`.
    pub fn relative(t0: f64, rel: f64) -> Result<Self> {
        Self::new(t0, rel * t0)
    }

    pub fn prior(&self) -> Result<Prior> {
        Prior::uniform(self.t0, self.delta)
    }
}

fn check_ratio(r_m: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&r_m), "r_m must lie in [0, 1]", r_m)
}

// (nu + r)^-2 + (nu + 1/r)^-2, written so that r = 0 is the analytic limit.
fn bracket(nu: f64, r_m: f64) -> f64 {
    let second = r_m / (r_m * nu + 1.0);
    (nu + r_m).powi(-2) + second * second
}

/// General-dyne CFI for the temperature with measurement `diag(r_m, 1/r_m)`:
/// `F = (d nu/dT)^2 / 2 [1/(nu + r_m)^2 + 1/(nu + 1/r_m)^2]`.
pub fn cfi_thermometry(temperature: f64, r_m: f64) -> Result<f64> {
    check_ratio(r_m)?;
    let nu = thermal_nu(temperature)?;
    let dnu = thermal_nu_derivative(temperature)?;
    Ok(0.5 * dnu * dnu * bracket(nu, r_m))
}

/// `ln sinh x`, accurate for large `x`.
fn ln_sinh(x: f64) -> f64 {
    x - std::f64::consts::LN_2 + (-(-2.0 * x).exp_m1()).ln()
}

/// Natural log of [`cfi_thermometry`]; finite down to very low temperatures.
pub fn ln_cfi_thermometry(temperature: f64, r_m: f64) -> Result<f64> {
    check_ratio(r_m)?;
    let nu = thermal_nu(temperature)?;
    let x = 0.5 / temperature;
    // d nu / dT = 2 x^2 / sinh^2 x
    let ln_dnu = std::f64::consts::LN_2 + 2.0 * x.ln() - 2.0 * ln_sinh(x);
    Ok(2.0 * ln_dnu - std::f64::consts::LN_2 + bracket(nu, r_m).ln())
}

/// Window average of 1/F for a fixed `r_m`.
pub fn average_inverse_cfi_thermometry(
    window: &ThermometryWindow,
    r_m: f64,
    cfg: &QuadConfig,
) -> Result<AverageEstimate> {
    check_ratio(r_m)?;
    average_inverse_cfi_ln(|t| ln_cfi_thermometry(t, r_m), &window.prior()?, cfg)
}

pub fn thermometry_space() -> MeasurementSpace {
    // Ties only occur on the transition curve; prefer the homodyne side.
    MeasurementSpace::new(vec![Axis::linear("r_m", 0.0, 1.0).prefer(Preference::Low)])
        .expect("static axis is valid")
}

/// SGU over `r_m in [0, 1]`.
pub fn sgu_thermometry(window: &ThermometryWindow, cfg: &QuadConfig, opts: &MinimizeOptions) -> Result<SguResult> {
    let prior = window.prior()?;
    minimize_objective(
        |p| average_inverse_cfi_ln(|t| ln_cfi_thermometry(t, p[0]), &prior, cfg),
        &thermometry_space(),
        opts,
    )
}

/// One cell of a transition map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub t0: f64,
    pub delta_rel: f64,
    pub result: SguResult,
}

/// Optimal `r_m` on the tensor grid `t0s x rels`, row-major in `t0`.
pub fn transition_map(
    t0s: &[f64],
    rels: &[f64],
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<Vec<MapCell>> {
    if t0s.is_empty() || rels.is_empty() {
        return Err(SguError::Config("transition map grids must be nonempty".into()));
    }
    let cells: Vec<(f64, f64)> = t0s.iter().flat_map(|&t| rels.iter().map(move |&r| (t, r))).collect();
    cells
        .par_iter()
        .map(|&(t0, rel)| {
            let result = sgu_thermometry(&ThermometryWindow::relative(t0, rel)?, cfg, opts)?;
            Ok(MapCell {
                t0,
                delta_rel: rel,
                result,
            })
        })
        .collect()
}

/// Bose occupation `1 / (e^{1/T} - 1)`.
pub fn mean_occupation(temperature: f64) -> Result<f64> {
    ensure(temperature > 0.0, "temperature must be positive", temperature)?;
    Ok(1.0 / (1.0 / temperature).exp_m1())
}

/// `p_0 .. p_{cutoff-1}` of the thermal Fock distribution followed by the
/// tail mass `P(n >= cutoff)`.
pub fn fock_probabilities(temperature: f64, cutoff: usize) -> Result<Vec<f64>> {
    ensure(temperature > 0.0, "temperature must be positive", temperature)?;
    ensure(cutoff >= 1, "cutoff must be >= 1", cutoff as f64)?;
    let beta = 1.0 / temperature;
    let ground = -(-beta).exp_m1();
    let mut p: Vec<f64> = (0..cutoff).map(|n| ground * (-beta * n as f64).exp()).collect();
    p.push((-beta * cutoff as f64).exp());
    Ok(p)
}

/// `ln` of the CFI of a full photon-number measurement,
/// `(d nbar/dT)^2 / (nbar (nbar + 1)) = 1 / (4 T^4 sinh^2(1/2T))`.
pub fn ln_fock_cfi(temperature: f64) -> Result<f64> {
    ensure(temperature > 0.0, "temperature must be positive", temperature)?;
    let beta = 1.0 / temperature;
    Ok(-beta - 4.0 * temperature.ln() - 2.0 * (-(-beta).exp_m1()).ln())
}

/// `ln` of [`counter_cfi`].
pub fn ln_counter_cfi(temperature: f64, levels: u64) -> Result<f64> {
    ensure(levels >= 1, "the counter must resolve at least one level", levels as f64)?;
    let full = ln_fock_cfi(temperature)?;
    Ok(full + (-(-(levels as f64) / temperature).exp_m1()).ln())
}

/// CFI of a counter resolving Fock levels `0 .. levels-1` and lumping the
/// rest into one outcome.
///
/// With `d ln p_n / dT = (n - nbar) c` and `d ln P(n >= m) / dT = m c`,
/// `c = nbar' / (nbar (nbar + 1))`, the sum collapses to
/// `F_full (1 - e^{-levels/T})`.
pub fn counter_cfi(temperature: f64, levels: u64) -> Result<f64> {
    Ok(ln_counter_cfi(temperature, levels)?.exp())
}

/// Window average of 1/F for a counter with `levels` resolved levels.
pub fn average_inverse_counter_cfi(
    window: &ThermometryWindow,
    levels: u64,
    cfg: &QuadConfig,
) -> Result<AverageEstimate> {
    average_inverse_cfi_ln(|t| ln_counter_cfi(t, levels), &window.prior()?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSearch {
    /// Smallest number of resolved levels that beats the Gaussian SGU;
    /// `None` when the cap was reached ("Gaussian-optimal" region).
    pub levels: Option<u64>,
    pub gaussian: SguResult,
    /// `ln` of the counter average at `levels` (or at the cap).
    pub counter_ln_value: f64,
}

/// Smallest counter resolution whose window average of 1/F is below the
/// optimal Gaussian SGU. Linear search up to 64 levels, then doubling and
/// bisection up to `cap`.
pub fn minimal_outperforming_levels(
    window: &ThermometryWindow,
    cap: u64,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<LevelSearch> {
    ensure(cap >= 1, "level cap must be >= 1", cap as f64)?;
    let gaussian = sgu_thermometry(window, cfg, opts)?;
    let target = gaussian.ln_value;
    let ln_avg = |m: u64| -> Result<f64> { Ok(average_inverse_counter_cfi(window, m, cfg)?.ln_value) };
    let found = |levels: u64, ln: f64, gaussian: SguResult| LevelSearch {
        levels: Some(levels),
        gaussian,
        counter_ln_value: ln,
    };

    for m in 1..=cap.min(64) {
        let ln = ln_avg(m)?;
        if ln < target {
            return Ok(found(m, ln, gaussian));
        }
    }
    let mut lo = 64;
    loop {
        if lo >= cap {
            return Ok(LevelSearch {
                levels: None,
                counter_ln_value: ln_avg(cap)?,
                gaussian,
            });
        }
        let hi = (2 * lo).min(cap);
        let ln_hi = ln_avg(hi)?;
        if ln_hi < target {
            // Bisect on (lo, hi]; lo fails, hi passes.
            let (mut lo, mut hi, mut ln_best) = (lo, hi, ln_hi);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let ln = ln_avg(mid)?;
                if ln < target {
                    hi = mid;
                    ln_best = ln;
                } else {
                    lo = mid;
                }
            }
            return Ok(found(hi, ln_best, gaussian));
        }
        lo = hi;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Independent evaluation of the fixed-`r_m` window average by substituting
/// `x = 1/(2T)`, which turns the integrand into
/// `sinh^4 x / (4 x^6 [(nu + r)^-2 + (nu + 1/r)^-2])` with `nu = coth x`, and
/// applying a fixed composite 20-point Gauss-Legendre rule on `panels` equal
/// panels in `x`. Intended for moderate temperatures (`1/F` within f64 range).
pub fn average_inverse_cfi_substituted(window: &ThermometryWindow, r_m: f64, panels: usize) -> Result<f64> {
    check_ratio(r_m)?;
    ensure(panels >= 1, "panel count must be >= 1", panels as f64)?;
    let x_hi = 0.5 / (window.t0 - 0.5 * window.delta);
    let x_lo = 0.5 / (window.t0 + 0.5 * window.delta);
    let (nodes, weights) = gauss_legendre(20);
    let h = (x_hi - x_lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = x_lo + (p as f64 + 0.5) * h;
        for (&u, &w) in nodes.iter().zip(&weights) {
            let x = mid + 0.5 * h * u;
            let nu = 1.0 / x.tanh();
            let g = bracket(nu, r_m);
            total += 0.5 * h * w * x.sinh().powi(4) / (4.0 * x.powi(6) * g);
        }
    }
    Ok(total / window.delta)
}
