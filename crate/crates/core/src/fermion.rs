//! Ground-state magnetometry with the transverse-field XY chain.
//!
//! After Jordan-Wigner and Fourier transforms the chain splits into momentum
//! cells with 2x2 blocks `(λ - cos k) σz - γ sin k σx`. Each cell's ground
//! state is `cos θ_k |0> + sin θ_k |1>`, so the chain CFI for a product of
//! per-cell projective measurements is a sum of qubit CFIs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::engine::{
    average_inverse_cfi, global_bound, minimize_objective, AverageEstimate, Axis, MeasurementSpace,
    MinimizeOptions, Preference, Prior, QuadConfig, Seed, SguResult,
};
use crate::error::{ensure, Result, SguError};

/// Cells whose outcome probability is within this of 0 or 1 use the
/// analytic limit of the binary CFI.
const DEGENERATE: f64 = 1e-10;
/// Field values this close to the critical point `λ = 1` are nudged away.
const CRITICAL_NUDGE: f64 = 1e-9;
const GAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XYChain {
    n_sites: usize,
    gamma: f64,
}

impl XYChain {
    pub fn new(n_sites: usize, gamma: f64) -> Result<Self> {
        ensure(n_sites >= 2 && n_sites.is_multiple_of(2), "site count must be even and >= 2", n_sites as f64)?;
        ensure(gamma > 0.0 && gamma <= 1.0, "anisotropy must lie in (0, 1]", gamma)?;
        Ok(Self { n_sites, gamma })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Positive antiperiodic momenta `(2j - 1) π / N`, `j = 1 .. N/2`; each
    /// stands for the pair `±k`.
    pub fn momenta(&self) -> Vec<f64> {
        (1..=self.n_sites / 2)
            .map(|j| (2 * j - 1) as f64 * PI / self.n_sites as f64)
            .collect()
    }

    /// Momenta strictly below `k0`.
    pub fn momenta_below(&self, k0: f64) -> Result<Vec<f64>> {
        ensure(k0 > 0.0 && k0 <= PI, "momentum cutoff must lie in (0, pi]", k0)?;
        let ks: Vec<f64> = self.momenta().into_iter().filter(|&k| k < k0).collect();
        if ks.is_empty() {
            return Err(SguError::Domain {
                what: "momentum cutoff leaves no cells",
                value: k0,
            });
        }
        Ok(ks)
    }
}

/// Ground state of one momentum cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCellState {
    /// Bloch angle, `cos θ |0> + sin θ |1>` with `cos θ >= 0`.
    pub theta: f64,
    /// `d θ / d λ = γ sin k / (2 E^2)`.
    pub dtheta: f64,
    /// Excitation gap `E = sqrt((λ - cos k)^2 + γ^2 sin^2 k)`.
    pub gap: f64,
}

pub fn bloch_angle(lambda: f64, gamma: f64, k: f64) -> Result<KCellState> {
    let x = k.cos() - lambda;
    let y = gamma * k.sin();
    let gap = x.hypot(y);
    if !(gap > GAP_FLOOR) {
        return Err(SguError::GapClosure { lambda, k });
    }
    // Bloch vector of the ground state is (sin 2θ, 0, cos 2θ) = (y, 0, x) / E.
    Ok(KCellState {
        theta: 0.5 * y.atan2(x),
        dtheta: y / (2.0 * gap * gap),
        gap,
    })
}

/// Projective qubit measurement along the Bloch direction
/// `(sin θ_m cos φ_m, sin θ_m sin φ_m, cos θ_m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCellMeasurement {
    pub theta_m: f64,
    pub phi_m: f64,
}

impl KCellMeasurement {
    /// Occupation-number (σz) basis.
    pub const Z: Self = Self {
        theta_m: 0.0,
        phi_m: 0.0,
    };

    fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta_m.sin_cos();
        let (sp, cp) = self.phi_m.sin_cos();
        [st * cp, st * sp, ct]
    }

    fn polar_direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta_m.sin_cos();
        let (sp, cp) = self.phi_m.sin_cos();
        [ct * cp, ct * sp, -st]
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `|a x b|^2`, equal to `1 - (a . b)^2` for unit vectors without the cancellation.
fn cross_norm2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[1] * b[2] - a[2] * b[1]).powi(2) + (a[2] * b[0] - a[0] * b[2]).powi(2) + (a[0] * b[1] - a[1] * b[0]).powi(2)
}

/// Binary-outcome CFI `(∂p)^2 / (p (1 - p))` of one cell,
/// `(m · ∂n)^2 / (1 - (m · n)^2)`. When the basis contains the state the
/// limit along the polar direction of the basis is used.
pub fn kcell_cfi(state: &KCellState, basis: &KCellMeasurement) -> f64 {
    let (s2, c2) = (2.0 * state.theta).sin_cos();
    let n = [s2, 0.0, c2];
    let dn = [2.0 * state.dtheta * c2, 0.0, -2.0 * state.dtheta * s2];
    let m = basis.axis();
    let spread = cross_norm2(m, n);
    if spread < DEGENERATE {
        dot(basis.polar_direction(), dn).powi(2)
    } else {
        dot(m, dn).powi(2) / spread
    }
}

/// Per-cell QFI `4 (∂θ)^2`.
pub fn kcell_qfi(state: &KCellState) -> f64 {
    4.0 * state.dtheta * state.dtheta
}

fn nudge(lambda: f64) -> f64 {
    if (lambda - 1.0).abs() < CRITICAL_NUDGE {
        if lambda >= 1.0 {
            1.0 + CRITICAL_NUDGE
        } else {
            1.0 - CRITICAL_NUDGE
        }
    } else {
        lambda
    }
}

/// Chain CFI over the cells `ks` (multiplicity 2 each) with one basis per cell.
pub fn chain_cfi_cells(chain: &XYChain, lambda: f64, ks: &[f64], bases: &[KCellMeasurement]) -> Result<f64> {
    if ks.len() != bases.len() {
        return Err(SguError::Config(format!(
            "{} momentum cells but {} bases",
            ks.len(),
            bases.len()
        )));
    }
    let lambda = nudge(lambda);
    let mut total = 0.0;
    for (&k, b) in ks.iter().zip(bases) {
        total += 2.0 * kcell_cfi(&bloch_angle(lambda, chain.gamma, k)?, b);
    }
    Ok(total)
}

pub fn chain_cfi(chain: &XYChain, lambda: f64, bases: &[KCellMeasurement]) -> Result<f64> {
    chain_cfi_cells(chain, lambda, &chain.momenta(), bases)
}

pub fn chain_qfi_cells(chain: &XYChain, lambda: f64, ks: &[f64]) -> Result<f64> {
    let lambda = nudge(lambda);
    let mut total = 0.0;
    for &k in ks {
        total += 2.0 * kcell_qfi(&bloch_angle(lambda, chain.gamma, k)?);
    }
    Ok(total)
}

pub fn chain_qfi(chain: &XYChain, lambda: f64) -> Result<f64> {
    chain_qfi_cells(chain, lambda, &chain.momenta())
}

/// Basis maximizing the CFI of one cell: 64 x 64 grid over `(θ_m, φ_m)`
/// followed by coordinate golden-section refinement. Ties are broken toward
/// the smallest angles, which selects the occupation basis.
pub fn optimal_kcell_basis(state: &KCellState) -> KCellMeasurement {
    const GRID: usize = 64;
    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
    let eval = |t: f64, p: f64| {
        kcell_cfi(
            state,
            &KCellMeasurement {
                theta_m: t,
                phi_m: p,
            },
        )
    };
    let (mut bt, mut bp, mut bv) = (0.0, 0.0, eval(0.0, 0.0));
    for i in 0..GRID {
        for j in 0..GRID {
            let t = PI * i as f64 / (GRID - 1) as f64;
            let p = 2.0 * PI * j as f64 / GRID as f64;
            let v = eval(t, p);
            if v > bv && !tie(v, bv) {
                (bt, bp, bv) = (t, p, v);
            }
        }
    }
    // Refine only if it strictly helps.
    let step = PI / (GRID - 1) as f64;
    for _ in 0..4 {
        let t = golden_max(|t| eval(t, bp), (bt - step).max(0.0), (bt + step).min(PI));
        if eval(t, bp) > bv && !tie(eval(t, bp), bv) {
            bt = t;
            bv = eval(t, bp);
        }
        let p = golden_max(|p| eval(bt, p), bp - 2.0 * step, bp + 2.0 * step);
        if eval(bt, p) > bv && !tie(eval(bt, p), bv) {
            bp = p.rem_euclid(2.0 * PI);
            bv = eval(bt, bp);
        }
    }
    KCellMeasurement {
        theta_m: bt,
        phi_m: bp,
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.618_033_988_749_894_9;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-10 {
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

/// Angle in `[0, π/2]` between two measurement axes, ignoring orientation.
pub fn basis_angle(a: &KCellMeasurement, b: &KCellMeasurement) -> f64 {
    let (ma, mb) = (a.axis(), b.axis());
    cross_norm2(ma, mb).sqrt().atan2(dot(ma, mb).abs())
}

/// SGU of the chain with its comparison to the global bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XySgu {
    /// `G`: window average of 1/QFI.
    pub bound: AverageEstimate,
    /// Engine minimum over per-cell bases.
    pub sgu: SguResult,
    pub momenta: Vec<f64>,
    /// Optimal basis per cell from the engine.
    pub bases: Vec<KCellMeasurement>,
    /// Pointwise optimal bases at the lower and upper window edges.
    pub lower_edge_bases: Vec<KCellMeasurement>,
    pub upper_edge_bases: Vec<KCellMeasurement>,
    /// `|sgu - G| / G`.
    pub relative_gap: f64,
}

impl XySgu {
    /// Largest angle between the measurement axes of the two edge bases.
    /// Axes `m` and `-m` define the same projective measurement.
    pub fn edge_basis_spread(&self) -> f64 {
        self.lower_edge_bases
            .iter()
            .zip(&self.upper_edge_bases)
            .map(|(a, b)| basis_angle(a, b))
            .fold(0.0, f64::max)
    }
}

/// SGU over per-cell projective bases for the cells with `k < k0`, together
/// with the global bound `G` on the same cells.
pub fn truncated_sgu(
    chain: &XYChain,
    lambda0: f64,
    delta: f64,
    k0: f64,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<XySgu> {
    let ks = chain.momenta_below(k0)?;
    let prior = Prior::uniform(lambda0, delta)?;
    let bound = global_bound(|l| chain_qfi_cells(chain, l, &ks), &prior, cfg)?;

    let mut axes = Vec::with_capacity(2 * ks.len());
    for j in 0..ks.len() {
        axes.push(Axis::linear(&format!("theta_m_{j}"), 0.0, PI).prefer(Preference::Low));
        axes.push(Axis::periodic(&format!("phi_m_{j}"), 2.0 * PI).prefer(Preference::Low));
    }
    let space = MeasurementSpace::new(axes)?;
    let to_bases = |p: &[f64]| -> Vec<KCellMeasurement> {
        p.chunks(2)
            .map(|c| KCellMeasurement {
                theta_m: c[0],
                phi_m: c[1],
            })
            .collect()
    };
    // Generic start, away from every special basis.
    let start: Vec<f64> = ks.iter().flat_map(|_| [PI / 3.0, PI / 5.0]).collect();
    let brackets: Vec<(f64, f64)> = ks.iter().flat_map(|_| [(0.0, PI), (-0.5 * PI, 0.5 * PI)]).collect();
    let mut opts = opts.clone();
    opts.seeds = vec![Seed {
        params: start,
        brackets: Some(brackets),
    }];
    let sgu = minimize_objective(
        |p| {
            let bases = to_bases(p);
            average_inverse_cfi(|l| chain_cfi_cells(chain, l, &ks, &bases), &prior, cfg)
        },
        &space,
        &opts,
    )?;
    let edge = |l: f64| -> Result<Vec<KCellMeasurement>> {
        ks.iter()
            .map(|&k| Ok(optimal_kcell_basis(&bloch_angle(nudge(l), chain.gamma, k)?)))
            .collect()
    };
    let relative_gap = (sgu.value - bound.value).abs() / bound.value;
    Ok(XySgu {
        bases: to_bases(&sgu.params),
        lower_edge_bases: edge(prior.lower())?,
        upper_edge_bases: edge(prior.upper())?,
        momenta: ks,
        bound,
        sgu,
        relative_gap,
    })
}

/// [`truncated_sgu`] over all cells.
pub fn sgu_xy(chain: &XYChain, lambda0: f64, delta: f64, cfg: &QuadConfig, opts: &MinimizeOptions) -> Result<XySgu> {
    truncated_sgu(chain, lambda0, delta, PI, cfg, opts)
}
