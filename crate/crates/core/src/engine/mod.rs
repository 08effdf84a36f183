//! Window averages of 1/CFI and their minimization over measurement settings.

mod optimize;
mod prior;
mod quadrature;

use serde::{Deserialize, Serialize};

pub use optimize::{
    minimize_objective, minimize_sgu, nuisance_average, sgu_with_nuisance, Axis, AxisKind, MeasurementSpace,
    MinimizeOptions, Preference, Seed, SguResult,
};
pub use prior::{Prior, PriorKind};
pub use quadrature::{integrate, Integral, QuadConfig};

use crate::error::{Result, SguError};
use quadrature::{integrate_partition, partition, Outcome, Sample};

/// Prior-weighted average of 1/F over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageEstimate {
    /// The average; `+inf` when diverged or when it overflows f64.
    pub value: f64,
    /// Natural log of the average; finite whenever the average is.
    pub ln_value: f64,
    /// Estimated absolute quadrature error of `value`.
    pub error: f64,
    pub nodes: usize,
    pub diverged: bool,
    /// First node at which the measurement was found blind.
    pub blind_at: Option<f64>,
}

impl AverageEstimate {
    fn diverged(at: f64, nodes: usize) -> Self {
        Self {
            value: f64::INFINITY,
            ln_value: f64::INFINITY,
            error: f64::NAN,
            nodes,
            diverged: true,
            blind_at: Some(at),
        }
    }

    fn finite(value: f64, error: f64, nodes: usize) -> Self {
        Self {
            value,
            ln_value: value.ln(),
            error,
            nodes,
            diverged: false,
            blind_at: None,
        }
    }
}

/// `∫ P(λ) / F(λ) dλ` by adaptive quadrature. A node with `F < cfg.blind_cfi`
/// makes the result divergent.
pub fn average_inverse_cfi<F>(cfi: F, prior: &Prior, cfg: &QuadConfig) -> Result<AverageEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    average_inverse_cfi_with_breakpoints(cfi, prior, &[], cfg)
}

/// As [`average_inverse_cfi`], with the subintervals graded geometrically
/// toward each breakpoint. Use this for integrands with known narrow peaks.
pub fn average_inverse_cfi_with_breakpoints<F>(
    cfi: F,
    prior: &Prior,
    breakpoints: &[f64],
    cfg: &QuadConfig,
) -> Result<AverageEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    let check = |x: f64| -> Result<Option<f64>> {
        let f = cfi(x)?;
        if f.is_nan() {
            return Err(SguError::Numerical(format!("CFI is NaN at {x}")));
        }
        Ok(if f < cfg.blind_cfi { None } else { Some(f) })
    };
    if prior.width() == 0.0 {
        let x = prior.center();
        return Ok(match check(x)? {
            Some(f) => AverageEstimate::finite(1.0 / f, 0.0, 1),
            None => AverageEstimate::diverged(x, 1),
        });
    }
    // The window endpoints are not quadrature nodes; check them explicitly.
    for x in [prior.lower(), prior.upper()] {
        if check(x)?.is_none() {
            return Ok(AverageEstimate::diverged(x, 2));
        }
    }
    let points = partition(prior.lower(), prior.upper(), &[], breakpoints);
    for &x in &points {
        if check(x)?.is_none() {
            return Ok(AverageEstimate::diverged(x, points.len()));
        }
    }
    let out = integrate_partition(
        |x| {
            Ok(match check(x)? {
                Some(f) => Sample::Value(prior.density(x) / f),
                None => Sample::Blind,
            })
        },
        &points,
        cfg,
    )?;
    Ok(match out {
        Outcome::Done(i) => AverageEstimate::finite(i.value, i.error, i.nodes + points.len() + 2),
        Outcome::Blind(x) => AverageEstimate::diverged(x, 0),
    })
}

/// Log-domain average for CFIs spanning many orders of magnitude: the
/// integrand is given as `ln F(λ)`. The result is divergent only where
/// `ln F = -inf`; tiny but nonzero CFIs are kept.
pub fn average_inverse_cfi_ln<F>(ln_cfi: F, prior: &Prior, cfg: &QuadConfig) -> Result<AverageEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    let check = |x: f64| -> Result<Option<f64>> {
        let l = ln_cfi(x)?;
        if l.is_nan() || l == f64::INFINITY {
            return Err(SguError::Numerical(format!("ln CFI is {l} at {x}")));
        }
        Ok((l > f64::NEG_INFINITY).then_some(-l))
    };
    if prior.width() == 0.0 {
        let x = prior.center();
        return Ok(match check(x)? {
            Some(m) => AverageEstimate {
                value: m.exp(),
                ln_value: m,
                error: 0.0,
                nodes: 1,
                diverged: false,
                blind_at: None,
            },
            None => AverageEstimate::diverged(x, 1),
        });
    }
    let (a, b) = (prior.lower(), prior.upper());
    // Scale by the largest 1/F seen on a pre-sample; rescale if a later node
    // would overflow.
    // The subintervals are graded toward the maximum, which for thermal CFIs
    // sits at a window edge and is much narrower than the window.
    let mut shift = f64::NEG_INFINITY;
    let mut peaks = vec![a];
    for j in 0..=16 {
        let x = a + (b - a) * j as f64 / 16.0;
        match check(x)? {
            Some(m) if m > shift => {
                shift = m;
                peaks[0] = x;
            }
            Some(_) => {}
            None => return Ok(AverageEstimate::diverged(x, j + 1)),
        }
    }
    loop {
        let mut overflow = None;
        let points = partition(a, b, &[], &peaks);
        let out = integrate_partition(
            |x| {
                let Some(m) = check(x)? else {
                    return Ok(Sample::Blind);
                };
                if m - shift > 600.0 {
                    overflow = Some((x, m));
                    return Ok(Sample::Blind);
                }
                Ok(Sample::Value(prior.density(x) * (m - shift).exp()))
            },
            &points,
            cfg,
        )?;
        match (out, overflow) {
            (_, Some((x, m))) => {
                shift = m;
                peaks.push(x);
            }
            (Outcome::Blind(x), None) => return Ok(AverageEstimate::diverged(x, 0)),
            (Outcome::Done(i), None) => {
                if !(i.value > 0.0) {
                    return Err(SguError::Numerical(format!(
                        "log-domain average underflowed on [{a}, {b}]"
                    )));
                }
                let ln_value = shift + i.value.ln();
                return Ok(AverageEstimate {
                    value: ln_value.exp(),
                    ln_value,
                    error: i.error * shift.exp(),
                    nodes: i.nodes + 17,
                    diverged: false,
                    blind_at: None,
                });
            }
        }
    }
}

/// `G = ∫ P(λ) / F_Q(λ) dλ`: the same average applied to the QFI.
pub fn global_bound<F>(qfi: F, prior: &Prior, cfg: &QuadConfig) -> Result<AverageEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    average_inverse_cfi(qfi, prior, cfg)
}
