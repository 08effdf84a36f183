//! Global phase estimation with displaced-vacuum, squeezed-vacuum (SV) and
//! squeezed-thermal (ST) single-mode probes under general-dyne detection.
//!
//! The unknown phase `λ` enters as the rotation `exp(-i λ a^dag a)`. The
//! CFIs depend on `λ` and the phases only through an angle `χ`:
//! `χ = 2θ - 2λ - ψ_m` for displaced vacuum, `χ = 2λ - ψ + ψ_m` for SV/ST.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    average_inverse_cfi_with_breakpoints, minimize_objective, nuisance_average, AverageEstimate, Axis,
    MeasurementSpace, MinimizeOptions, Preference, Prior, QuadConfig, Seed, SguResult,
};
use crate::error::{ensure, Result, SguError};
use crate::gaussian::{squeezing_for_photons, HOMODYNE_SQUEEZING_CAP};

/// Default window center.
pub const DEFAULT_LAMBDA0: f64 = PI / 8.0;

/// Phase window `[lambda0 - delta/2, lambda0 + delta/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub lambda0: f64,
    pub delta: f64,
}

impl PhaseWindow {
    pub fn new(lambda0: f64, delta: f64) -> Result<Self> {
        ensure(lambda0.is_finite(), "window center must be finite", lambda0)?;
        ensure(delta > 0.0 && delta <= 2.0 * PI, "window width must lie in (0, 2 pi]", delta)?;
        Ok(Self { lambda0, delta })
    }

    pub fn prior(&self) -> Result<Prior> {
        Prior::uniform(self.lambda0, self.delta)
    }
}

/// `χ0 = 2θ - 2λ0 - ψ_m` for displaced-vacuum probes.
pub fn chi0_displaced(theta: f64, lambda0: f64, psi_m: f64) -> f64 {
    2.0 * theta - 2.0 * lambda0 - psi_m
}

/// `χ0 = 2λ0 - ψ + ψ_m` for SV and ST probes.
pub fn chi0_squeezed(psi: f64, lambda0: f64, psi_m: f64) -> f64 {
    2.0 * lambda0 - psi + psi_m
}

fn check_squeezing(s_m: f64) -> Result<f64> {
    ensure(s_m >= 0.0, "measurement squeezing must be >= 0", s_m)?;
    Ok(s_m.min(HOMODYNE_SQUEEZING_CAP))
}

/// Values of `λ` in `[lo, hi]` where `χ = offset + slope λ` is a multiple of `period`.
fn chi_crossings(lo: f64, hi: f64, offset: f64, slope: f64, period: f64) -> Vec<f64> {
    let (c1, c2) = (offset + slope * lo, offset + slope * hi);
    let (cmin, cmax) = (c1.min(c2), c1.max(c2));
    let first = (cmin / period).ceil() as i64;
    let last = (cmax / period).floor() as i64;
    (first..=last).map(|k| (k as f64 * period - offset) / slope).collect()
}

/// `F = 4 d0^2 [1 - tanh(s_m) cos χ]`.
pub fn cfi_displaced_vacuum(d0: f64, chi: f64, s_m: f64) -> Result<f64> {
    ensure(d0 > 0.0, "displacement must be positive (d0 = 0 carries no information)", d0)?;
    let s_m = check_squeezing(s_m)?;
    Ok(4.0 * d0 * d0 * (1.0 - s_m.tanh() * chi.cos()))
}

fn squeezing_space(prefer_homodyne: bool) -> Axis {
    let axis = Axis::tanh("s_m", HOMODYNE_SQUEEZING_CAP);
    if prefer_homodyne {
        axis.prefer(Preference::High)
    } else {
        axis
    }
}

/// Window average of 1/F for displaced vacuum at fixed `s_m`.
pub fn average_inverse_cfi_displaced(
    d0: f64,
    chi0: f64,
    delta: f64,
    s_m: f64,
    cfg: &QuadConfig,
) -> Result<AverageEstimate> {
    // Integrate over the offset u = λ - λ0, so χ = χ0 - 2u.
    let window = PhaseWindow::new(0.0, delta)?;
    let peaks = chi_crossings(-0.5 * delta, 0.5 * delta, chi0, -2.0, 2.0 * PI);
    average_inverse_cfi_with_breakpoints(
        |u| cfi_displaced_vacuum(d0, chi0 - 2.0 * u, s_m),
        &window.prior()?,
        &peaks,
        cfg,
    )
}

/// SGU of a displaced vacuum over the measurement squeezing `s_m`.
pub fn sgu_displaced_vacuum(
    d0: f64,
    chi0: f64,
    delta: f64,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult> {
    ensure(d0 > 0.0, "displacement must be positive", d0)?;
    let space = MeasurementSpace::new(vec![squeezing_space(true)])?;
    minimize_objective(
        |p| average_inverse_cfi_displaced(d0, chi0, delta, p[0], cfg),
        &space,
        opts,
    )
}

/// Squeezed-probe CFI written to avoid cancellations:
///
/// with `X = 2n + 1`, `T = tanh 2s`, `Q = (X / cosh 2s)^2`, `S = sinh 2s_m`,
/// `A = e^{-2 s_m} + S [2/(e^{4s} + 1) + 2T sin^2(χ/2)]`,
/// `D = 1 + Q + 2XA` and `N = D + 2 S^2 sin^2 χ`, the CFI is
/// `4 X^2 T^2 N / D^2`.
fn sv_form(x: f64, s: f64, s_m: f64, chi: f64) -> f64 {
    let t = (2.0 * s).tanh();
    let q = (x / (2.0 * s).cosh()).powi(2);
    let sm = (2.0 * s_m).sinh();
    let half = (0.5 * chi).sin();
    let a = (-2.0 * s_m).exp() + sm * (2.0 / ((4.0 * s).exp() + 1.0) + 2.0 * t * half * half);
    let den = 1.0 + q + 2.0 * x * a;
    let num = den + 2.0 * (sm * chi.sin()).powi(2);
    4.0 * x * x * t * t * num / (den * den)
}

/// CFI of a probe with mean photon number `n` and squeezing `s` measured with
/// squeezing `s_m` at relative angle `χ`. For the pure squeezed vacuum,
/// `cosh 2s = 2n + 1`.
pub fn cfi_sv(n: f64, s_m: f64, chi: f64, s: f64) -> Result<f64> {
    ensure(n >= 0.0, "mean photon number must be >= 0", n)?;
    ensure(s >= 0.0, "probe squeezing must be >= 0", s)?;
    let s_m = check_squeezing(s_m)?;
    Ok(sv_form(2.0 * n + 1.0, s, s_m, chi))
}

/// The same CFI evaluated as the printed quotient of hyperbolic functions,
/// without rearrangement. Loses accuracy once `cosh^2 2s_m` dwarfs the
/// denominator; kept as a cross-check of [`cfi_sv`].
pub fn cfi_sv_direct(n: f64, s_m: f64, chi: f64, s: f64) -> f64 {
    let x = 2.0 * n + 1.0;
    let (c, sm) = ((2.0 * s_m).cosh(), (2.0 * s_m).sinh());
    let t = (2.0 * s).tanh();
    let sech = 1.0 / (2.0 * s).cosh();
    let common = 2.0 * x * c + c * c + x * x * sech * sech;
    let num = common - sm * ((2.0 * chi).cos() * sm + 2.0 * x * chi.cos() * t);
    let den = common - sm * (sm + 2.0 * x * chi.cos() * t);
    4.0 * x * x * t * t * num / (den * den)
}

/// SV CFI with `s` determined by `n`.
pub fn cfi_squeezed_vacuum(n: f64, s_m: f64, chi: f64) -> Result<f64> {
    cfi_sv(n, s_m, chi, squeezing_for_photons(n)?)
}

/// Options shared by the SV and ST runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePhases {
    /// Probe squeezing phase `ψ`; the starting value when optimized.
    pub psi: f64,
    /// Measurement squeezing phase `ψ_m`.
    pub psi_m: f64,
    /// Optimize `ψ` jointly with `s_m`.
    pub optimize_probe_phase: bool,
}

impl Default for ProbePhases {
    fn default() -> Self {
        Self {
            psi: 0.0,
            psi_m: 0.0,
            optimize_probe_phase: false,
        }
    }
}

impl ProbePhases {
    pub fn optimized() -> Self {
        Self {
            optimize_probe_phase: true,
            ..Self::default()
        }
    }
}

/// Window average of 1/F for a squeezed probe whose CFI is `cfi(s_m, χ)`.
fn average_inverse_squeezed<F>(
    cfi: F,
    window: &PhaseWindow,
    s_m: f64,
    psi: f64,
    psi_m: f64,
    cfg: &QuadConfig,
) -> Result<AverageEstimate>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let offset = psi_m - psi;
    // 1/F peaks sharply where χ = kπ once s_m is large.
    let peaks = chi_crossings(window.lambda0 - 0.5 * window.delta, window.lambda0 + 0.5 * window.delta, offset, 2.0, PI);
    average_inverse_cfi_with_breakpoints(|l| cfi(s_m, 2.0 * l + offset), &window.prior()?, &peaks, cfg)
}

/// Window average of 1/F for the squeezed vacuum at fixed measurement.
pub fn average_inverse_cfi_sv(
    n: f64,
    window: &PhaseWindow,
    s_m: f64,
    psi: f64,
    psi_m: f64,
    cfg: &QuadConfig,
) -> Result<AverageEstimate> {
    let s = squeezing_for_photons(n)?;
    average_inverse_squeezed(|sm, chi| cfi_sv(n, sm, chi, s), window, s_m, psi, psi_m, cfg)
}

fn squeezed_space(phases: &ProbePhases) -> Result<MeasurementSpace> {
    let mut axes = vec![squeezing_space(true)];
    if phases.optimize_probe_phase {
        axes.push(Axis::periodic("psi", 2.0 * PI));
    }
    MeasurementSpace::new(axes)
}

/// Seeds for narrow optima: homodyne at the local-optimal angle `cos χ = tanh 2s`
/// and at `χ0 = 0`.
fn squeezed_seeds(s: f64, n: f64, window: &PhaseWindow, phases: &ProbePhases) -> Vec<Seed> {
    let cap = HOMODYNE_SQUEEZING_CAP;
    if !phases.optimize_probe_phase {
        return vec![Seed {
            params: vec![cap],
            brackets: None,
        }];
    }
    let peak = (2.0 * s).tanh().acos();
    let reach = (2.0 * window.delta).max(10.0 / (2.0 * n + 1.0)).min(PI / 8.0);
    let mut seeds = Vec::new();
    for chi0 in [peak, -peak, 0.0] {
        let psi = 2.0 * window.lambda0 + phases.psi_m - chi0;
        for s_m in [cap, 0.5 * cap] {
            seeds.push(Seed {
                params: vec![s_m, psi],
                brackets: Some(vec![(0.0, cap), (psi - reach, psi + reach)]),
            });
        }
    }
    seeds
}

fn minimize_squeezed<F>(
    cfi: F,
    s: f64,
    n: f64,
    window: &PhaseWindow,
    phases: &ProbePhases,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let space = squeezed_space(phases)?;
    let mut opts = opts.clone();
    opts.seeds.extend(squeezed_seeds(s, n, window, phases));
    minimize_objective(
        |p| {
            let psi = if phases.optimize_probe_phase { p[1] } else { phases.psi };
            average_inverse_squeezed(&cfi, window, p[0], psi, phases.psi_m, cfg)
        },
        &space,
        &opts,
    )
}

/// SGU of the squeezed vacuum with `n` photons, minimized over `s_m` (and the
/// probe phase `ψ` when requested).
pub fn sgu_sv(
    n: f64,
    window: &PhaseWindow,
    phases: &ProbePhases,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult> {
    ensure(n > 0.0, "mean photon number must be positive", n)?;
    let s = squeezing_for_photons(n)?;
    minimize_squeezed(|sm, chi| cfi_sv(n, sm, chi, s), s, n, window, phases, cfg, opts)
}

/// How the squeezed-thermal probe is mapped onto the squeezed-vacuum CFI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StReading {
    /// `n = nbar + n_th` with the probe squeezing `s`.
    PhotonSum,
    /// `n = nbar + n_th` with `cosh 2s_eff = (2n + 1)/(2 n_th + 1)`.
    EffectiveSqueezing,
    /// `n = (n_th + 1/2) cosh 2s - 1/2` with the probe squeezing `s`; equal
    /// to the general Gaussian CFI of the squeezed thermal state.
    #[default]
    Exact,
}

/// `(n, s)` fed to the SV form for a probe with squeezing photons `nbar`.
pub fn st_parameters(nbar: f64, n_thermal: f64, reading: StReading) -> Result<(f64, f64)> {
    ensure(nbar >= 0.0, "squeezing photon number must be >= 0", nbar)?;
    ensure(n_thermal >= 0.0, "thermal photon number must be >= 0", n_thermal)?;
    let s = squeezing_for_photons(nbar)?;
    Ok(match reading {
        StReading::PhotonSum => (nbar + n_thermal, s),
        StReading::EffectiveSqueezing => {
            let n = nbar + n_thermal;
            (n, 0.5 * ((2.0 * n + 1.0) / (2.0 * n_thermal + 1.0)).acosh())
        }
        StReading::Exact => ((n_thermal + 0.5) * (2.0 * s).cosh() - 0.5, s),
    })
}

/// CFI of a squeezed thermal probe; `nbar` is the photon number of its
/// squeezing alone, `sinh^2 s`.
pub fn cfi_st(nbar: f64, n_thermal: f64, s_m: f64, chi: f64, reading: StReading) -> Result<f64> {
    let (n, s) = st_parameters(nbar, n_thermal, reading)?;
    cfi_sv(n, s_m, chi, s)
}

/// SGU of a squeezed thermal probe over `s_m` with fixed phases (`ψ = ψ_m = 0`
/// by default).
pub fn sgu_st(
    nbar: f64,
    n_thermal: f64,
    window: &PhaseWindow,
    reading: StReading,
    phases: &ProbePhases,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult> {
    ensure(nbar > 0.0, "squeezing photon number must be positive", nbar)?;
    let (n, s) = st_parameters(nbar, n_thermal, reading)?;
    minimize_squeezed(|sm, chi| cfi_sv(n, sm, chi, s), s, n, window, phases, cfg, opts)
}

/// SGU of a squeezed thermal probe whose thermal photon number is an unknown
/// nuisance parameter with prior `nuisance`.
pub fn sgu_st_nuisance(
    nbar: f64,
    nuisance: &Prior,
    window: &PhaseWindow,
    reading: StReading,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult> {
    ensure(nuisance.lower() >= 0.0, "thermal photon prior must be on n_th >= 0", nuisance.lower())?;
    let prior = window.prior()?;
    let space = MeasurementSpace::new(vec![squeezing_space(true)])?;
    minimize_objective(
        |p| {
            nuisance_average(
                |l, n_th| cfi_st(nbar, n_th, p[0], 2.0 * l, reading),
                &prior,
                nuisance,
                cfg,
            )
        },
        &space,
        opts,
    )
}

/// One row of the optimal versus homodyne versus heterodyne comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: f64,
    pub optimal: SguResult,
    /// Best 1/F average with `s_m` at the homodyne cap.
    pub homodyne: SguResult,
    /// Best 1/F average with heterodyne (`s_m = 0`).
    pub heterodyne: SguResult,
}

fn fixed_squeezing(
    n: f64,
    s_m: f64,
    window: &PhaseWindow,
    phases: &ProbePhases,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult> {
    let s = squeezing_for_photons(n)?;
    let objective = |psi: f64| average_inverse_cfi_sv(n, window, s_m, psi, phases.psi_m, cfg);
    if !phases.optimize_probe_phase {
        let est = objective(phases.psi)?;
        return Ok(SguResult {
            value: est.value,
            ln_value: if est.diverged { f64::INFINITY } else { est.ln_value },
            error: est.error,
            params: vec![s_m],
            names: vec!["s_m".into()],
            diverged: est.diverged,
            at_cap: s_m >= HOMODYNE_SQUEEZING_CAP,
            evaluations: 1,
            nodes: est.nodes,
        });
    }
    let space = MeasurementSpace::new(vec![Axis::periodic("psi", 2.0 * PI)])?;
    let mut opts = opts.clone();
    let reach = (2.0 * window.delta).max(10.0 / (2.0 * n + 1.0)).min(PI / 8.0);
    for chi0 in [(2.0 * s).tanh().acos(), -(2.0 * s).tanh().acos()] {
        let psi = 2.0 * window.lambda0 + phases.psi_m - chi0;
        opts.seeds.push(Seed {
            params: vec![psi],
            brackets: Some(vec![(psi - reach, psi + reach)]),
        });
    }
    let mut r = minimize_objective(|p| objective(p[0]), &space, &opts)?;
    r.params.insert(0, s_m);
    r.names.insert(0, "s_m".into());
    r.at_cap = s_m >= HOMODYNE_SQUEEZING_CAP;
    Ok(r)
}

/// Optimal, homodyne-cap and heterodyne SV averages along a photon-number grid.
pub fn measurement_comparison_curve(
    ns: &[f64],
    window: &PhaseWindow,
    phases: &ProbePhases,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<Vec<ComparisonRow>> {
    if ns.is_empty() {
        return Err(SguError::Config("photon-number grid must be nonempty".into()));
    }
    ns.par_iter()
        .map(|&n| {
            Ok(ComparisonRow {
                n,
                optimal: sgu_sv(n, window, phases, cfg, opts)?,
                homodyne: fixed_squeezing(n, HOMODYNE_SQUEEZING_CAP, window, phases, cfg, opts)?,
                heterodyne: fixed_squeezing(n, 0.0, window, phases, cfg, opts)?,
            })
        })
        .collect()
}

/// Least-squares line `y = slope x + intercept` with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(SguError::Config("line fit needs at least two (x, y) pairs".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(SguError::Config("line fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(fit_line(&lx, &ly)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{cfi_gaussian, GeneralDyneMeasurement, RotatedProbe};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn displaced_vacuum_limits() {
        for &chi in &[0.0, 1.0, PI] {
            assert_eq!(cfi_displaced_vacuum(1.5, chi, 0.0).unwrap(), 9.0);
        }
        assert!((cfi_displaced_vacuum(1.0, PI, 20.0).unwrap() - 8.0).abs() < 1e-12);
        assert!(cfi_displaced_vacuum(1.0, 0.0, 20.0).unwrap() < 1e-15);
        assert!(cfi_displaced_vacuum(0.0, 0.0, 1.0).is_err());
        assert!(cfi_displaced_vacuum(1.0, 0.0, -1.0).is_err());
    }

    // ∫ dχ / (1 - a cos χ) over [c1, c2] for |a| < 1 and |c| < π.
    fn displaced_oracle(d0: f64, chi0: f64, delta: f64, s_m: f64) -> f64 {
        let a = s_m.tanh();
        let k = ((1.0 + a) / (1.0 - a)).sqrt();
        let prim = |c: f64| 2.0 / (1.0 - a * a).sqrt() * (k * (0.5 * c).tan()).atan();
        let (c1, c2) = (chi0 - delta, chi0 + delta);
        (prim(c2) - prim(c1)) / (2.0 * delta) / (4.0 * d0 * d0)
    }

    #[test]
    fn displaced_average_matches_closed_form() {
        let cfg = QuadConfig::default();
        for &(chi0, delta, s_m) in &[(0.3, 0.2, 0.5), (-PI / 4.0, PI / 20.0, 2.0), (2.0, 0.5, 1.0)] {
            let est = average_inverse_cfi_displaced(1.3, chi0, delta, s_m, &cfg).unwrap();
            assert!(rel(est.value, displaced_oracle(1.3, chi0, delta, s_m)) < 1e-10);
        }
    }

    #[test]
    fn displaced_heterodyne_optimal_when_cos_chi0_nonnegative() {
        let cfg = QuadConfig::default();
        let opts = MinimizeOptions::default();
        for &delta in &[PI / 100.0, PI / 20.0, PI / 4.0, PI] {
            for &chi0 in &[0.0, -PI / 4.0, 1.2] {
                let r = sgu_displaced_vacuum(1.0, chi0, delta, &cfg, &opts).unwrap();
                assert_eq!(r.params[0], 0.0, "delta={delta} chi0={chi0}");
                assert!(rel(r.value, 0.25) < 1e-10);
            }
        }
        // Near-local window around χ0 = π: homodyne side wins.
        let r = sgu_displaced_vacuum(1.0, PI, 1e-6, &cfg, &opts).unwrap();
        assert!(r.at_cap);
        assert!(rel(r.value, 1.0 / 8.0) < 1e-8);
    }

    #[test]
    fn stable_form_matches_direct_quotient() {
        for &s in &[0.1f64, 0.7, 1.5, 3.0] {
            let n = ((2.0 * s).cosh() - 1.0) / 2.0;
            for &s_m in &[0.0f64, 0.3, 1.0, 2.5, 5.0, 10.0] {
                // The printed quotient cancels terms of size cosh^2 2s_m.
                let tol = if s_m <= 2.5 { 1e-10 } else { 1e-16 * (2.0 * s_m).cosh().powi(2) };
                for &chi in &[0.0, 0.4, 1.3, PI, 4.0] {
                    let a = cfi_sv(n, s_m, chi, s).unwrap();
                    let b = cfi_sv_direct(n, s_m, chi, s);
                    assert!(rel(a, b) < tol, "s={s} s_m={s_m} chi={chi}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn sv_matches_generic_gaussian() {
        for &s in &[0.2f64, 0.9, 1.8] {
            let n = ((2.0 * s).cosh() - 1.0) / 2.0;
            for &s_m in &[0.0, 0.5, 1.7, 3.0] {
                for &chi in &[0.1, 0.9, 2.0, 3.0, 5.5] {
                    // χ = 2λ - ψ + ψ_m with λ = 0, ψ_m = 0.
                    let probe = RotatedProbe::squeezed_vacuum(s, -chi);
                    let m = GeneralDyneMeasurement::from_squeezing(s_m, 0.0).unwrap();
                    let generic = cfi_gaussian(&probe, 0.0, &m).unwrap();
                    assert!(rel(cfi_sv(n, s_m, chi, s).unwrap(), generic) < 1e-8, "s={s} s_m={s_m} chi={chi}");
                }
            }
        }
    }

    #[test]
    fn st_exact_reading_matches_generic_gaussian() {
        for &n_th in &[0.0, 0.3, 2.0] {
            for &s in &[0.4f64, 1.0] {
                let nbar = s.sinh().powi(2);
                for &(s_m, chi) in &[(0.0, 0.5), (1.2, 0.3), (2.0, 2.5)] {
                    let probe = RotatedProbe::squeezed_thermal(n_th, s, -chi);
                    let m = GeneralDyneMeasurement::from_squeezing(s_m, 0.0).unwrap();
                    let generic = cfi_gaussian(&probe, 0.0, &m).unwrap();
                    let st = cfi_st(nbar, n_th, s_m, chi, StReading::Exact).unwrap();
                    assert!(rel(st, generic) < 1e-8);
                    // The effective reading is exact for a state with squeezing s_eff.
                    let (n, s_eff) = st_parameters(nbar, n_th, StReading::EffectiveSqueezing).unwrap();
                    let probe = RotatedProbe::squeezed_thermal(n_th, s_eff, -chi);
                    let generic = cfi_gaussian(&probe, 0.0, &m).unwrap();
                    assert!(rel(cfi_sv(n, s_m, chi, s_eff).unwrap(), generic) < 1e-8);
                }
            }
        }
    }

    #[test]
    fn st_without_thermal_noise_is_sv() {
        for reading in [StReading::PhotonSum, StReading::EffectiveSqueezing, StReading::Exact] {
            let nbar = 3.0;
            let a = cfi_st(nbar, 0.0, 1.1, 0.7, reading).unwrap();
            let b = cfi_squeezed_vacuum(nbar, 1.1, 0.7).unwrap();
            assert!(rel(a, b) < 1e-12);
        }
    }

    #[test]
    fn sv_local_maximum_is_quadratic() {
        // Brute force over (s_m, χ) on a grid, then near the analytic optimum.
        for &n in &[1.0, 10.0, 100.0] {
            let s = squeezing_for_photons(n).unwrap();
            let mut best: f64 = 0.0;
            for i in 0..=200 {
                for j in 0..=400 {
                    let s_m = 20.0 * i as f64 / 200.0;
                    let chi = PI * j as f64 / 400.0;
                    best = best.max(cfi_sv(n, s_m, chi, s).unwrap());
                }
            }
            let chi_star = (2.0 * s).tanh().acos();
            best = best.max(cfi_sv(n, 20.0, chi_star, s).unwrap());
            let qfi = 8.0 * n * (n + 1.0);
            assert!(best <= qfi * (1.0 + 1e-9));
            assert!(rel(best, qfi) < 1e-6, "n={n}: {best} vs {qfi}");
        }
        assert!(cfi_sv(0.0, 1.0, 0.3, 0.0).unwrap() == 0.0);
    }

    #[test]
    fn comparison_curve_orders_measurements() {
        let window = PhaseWindow::new(DEFAULT_LAMBDA0, PI / 20.0).unwrap();
        let cfg = QuadConfig::default();
        let opts = MinimizeOptions {
            grid_points: 24,
            ..MinimizeOptions::default()
        };
        let rows = measurement_comparison_curve(&[1.0, 1e4], &window, &ProbePhases::optimized(), &cfg, &opts).unwrap();
        for row in &rows {
            assert!(row.optimal.ln_value <= row.homodyne.ln_value + 1e-9);
            assert!(row.optimal.ln_value <= row.heterodyne.ln_value + 1e-9);
        }
        // Large n: heterodyne beats the homodyne cap.
        assert!(rows[1].heterodyne.value < rows[1].homodyne.value);
    }

    #[test]
    fn homodyne_approaches_optimal_in_local_limit() {
        let window = PhaseWindow::new(DEFAULT_LAMBDA0, 1e-6).unwrap();
        let cfg = QuadConfig::default();
        let opts = MinimizeOptions {
            grid_points: 24,
            ..MinimizeOptions::default()
        };
        let row = &measurement_comparison_curve(&[10.0], &window, &ProbePhases::optimized(), &cfg, &opts).unwrap()[0];
        assert!(rel(row.homodyne.value, row.optimal.value) < 1e-6);
        assert!(rel(row.optimal.value, 1.0 / (8.0 * 10.0 * 11.0)) < 1e-6);
    }

    #[test]
    fn crossings() {
        let c = chi_crossings(-1.0, 1.0, 0.0, 2.0, PI);
        assert_eq!(c.len(), 1);
        assert!(c[0].abs() < 1e-15);
        let c = chi_crossings(0.0, PI, 0.1, 2.0, PI);
        assert_eq!(c.len(), 2);
        let c = chi_crossings(-0.5, 0.5, 1.0, -2.0, 2.0 * PI);
        assert!((c[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn line_fit() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14 && (f.intercept - 3.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        let xs = [1.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.powf(-1.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn sv_cfi_nonnegative_and_finite(n in 0.0f64..1e6, s_m in 0.0f64..20.0, chi in -7.0f64..7.0) {
            let f = cfi_squeezed_vacuum(n, s_m, chi).unwrap();
            prop_assert!(f >= 0.0 && f.is_finite());
        }

        #[test]
        fn displaced_depends_on_phases_through_chi0(
            theta in 0.0f64..6.3, lambda0 in -1.0f64..1.0, psi_m in 0.0f64..6.3, shift in -2.0f64..2.0,
        ) {
            let cfg = QuadConfig::default();
            let a = average_inverse_cfi_displaced(1.0, chi0_displaced(theta, lambda0, psi_m), 0.3, 0.8, &cfg).unwrap();
            let b = average_inverse_cfi_displaced(
                1.0, chi0_displaced(theta + shift, lambda0 + shift, psi_m), 0.3, 0.8, &cfg).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-9 * a.value);
        }

        #[test]
        fn sv_depends_on_phases_through_chi0(
            psi in 0.0f64..6.3, lambda0 in -1.0f64..1.0, psi_m in 0.0f64..6.3, shift in -2.0f64..2.0,
        ) {
            let cfg = QuadConfig::default();
            let a = average_inverse_cfi_sv(4.0, &PhaseWindow::new(lambda0, 0.3).unwrap(), 1.0, psi, psi_m, &cfg).unwrap();
            let b = average_inverse_cfi_sv(
                4.0, &PhaseWindow::new(lambda0 + shift, 0.3).unwrap(), 1.0, psi + 2.0 * shift, psi_m, &cfg).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-8 * a.value);
        }
    }
}
