//! Grid search plus coordinate-descent golden-section refinement over a box of
//! measurement parameters.

use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_partition, Outcome, QuadConfig, Sample};
use super::{average_inverse_cfi, AverageEstimate, Prior};
use crate::error::{Result, SguError};

/// Values of the objective whose logs differ by less than this are ties.
const TIE_LN: f64 = 1e-12;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AxisKind {
    /// `x in [lo, hi]`, gridded uniformly.
    Linear { lo: f64, hi: f64 },
    /// Squeezing `s in [0, cap]`, gridded uniformly in `t = tanh s`.
    Tanh { cap: f64 },
    /// Angle modulo `period`, gridded over `[0, period)`.
    Periodic { period: f64 },
}

/// Which end of an axis wins a tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    #[default]
    None,
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub kind: AxisKind,
    pub prefer: Preference,
}

impl Axis {
    pub fn linear(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: AxisKind::Linear { lo, hi },
            prefer: Preference::None,
        }
    }

    pub fn tanh(name: &str, cap: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: AxisKind::Tanh { cap },
            prefer: Preference::None,
        }
    }

    pub fn periodic(name: &str, period: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: AxisKind::Periodic { period },
            prefer: Preference::None,
        }
    }

    pub fn prefer(mut self, prefer: Preference) -> Self {
        self.prefer = prefer;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            AxisKind::Linear { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            AxisKind::Tanh { cap } => cap > 0.0 && cap.is_finite(),
            AxisKind::Periodic { period } => period > 0.0 && period.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SguError::Config(format!("invalid axis `{}`: {:?}", self.name, self.kind)))
        }
    }

    /// Box coordinate `u in [0, 1]` to the natural parameter.
    pub fn from_unit(&self, u: f64) -> f64 {
        match self.kind {
            AxisKind::Linear { lo, hi } => lo + u * (hi - lo),
            AxisKind::Tanh { cap } => {
                if u >= 1.0 {
                    cap
                } else {
                    u.atanh().min(cap)
                }
            }
            AxisKind::Periodic { period } => u * period,
        }
    }

    /// Natural parameter to the box coordinate; inverse of [`Axis::from_unit`].
    pub fn to_unit(&self, x: f64) -> f64 {
        match self.kind {
            AxisKind::Linear { lo, hi } => (x - lo) / (hi - lo),
            AxisKind::Tanh { cap } => {
                if x >= cap {
                    1.0
                } else {
                    x.tanh()
                }
            }
            AxisKind::Periodic { period } => x.rem_euclid(period) / period,
        }
    }

    /// Bounds in natural coordinates; `None` for periodic axes.
    fn bounds(&self) -> Option<(f64, f64)> {
        match self.kind {
            AxisKind::Linear { lo, hi } => Some((lo, hi)),
            AxisKind::Tanh { cap } => Some((0.0, cap)),
            AxisKind::Periodic { .. } => None,
        }
    }

    fn normalize(&self, x: f64) -> f64 {
        match (self.kind, self.bounds()) {
            (AxisKind::Periodic { period }, _) => x.rem_euclid(period),
            (_, Some((lo, hi))) => x.clamp(lo, hi),
            _ => x,
        }
    }

    fn grid(&self, n: usize) -> Vec<f64> {
        match self.kind {
            AxisKind::Periodic { .. } => (0..n).map(|j| j as f64 / n as f64).collect(),
            _ if n == 1 => vec![0.5],
            _ => (0..n).map(|j| j as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Box of measurement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpace {
    axes: Vec<Axis>,
}

impl MeasurementSpace {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(SguError::Config("measurement space has no axes".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }
}

/// Extra starting point for the refinement, in natural coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub params: Vec<f64>,
    /// First-cycle bracket per axis; defaults to one grid cell on each side.
    pub brackets: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Grid points per axis. The tensor grid is only used for up to 3 axes;
    /// larger spaces start from the seeds.
    pub grid_points: usize,
    /// Parameter tolerance of the golden-section refinement.
    pub tol: f64,
    pub max_cycles: usize,
    /// Optima this close to a bound are moved onto it if that is no worse.
    pub snap_tol: f64,
    pub seeds: Vec<Seed>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid_points: 64,
            tol: 1e-6,
            max_cycles: 40,
            snap_tol: 1e-4,
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SguResult {
    /// Minimized average of 1/F; `+inf` when diverged or beyond f64 range.
    pub value: f64,
    pub ln_value: f64,
    /// Quadrature error estimate at the optimum.
    pub error: f64,
    /// Optimal parameters in natural coordinates (squeezing, not tanh).
    pub params: Vec<f64>,
    pub names: Vec<String>,
    pub diverged: bool,
    /// Some squeezing axis sits at its cap (homodyne limit).
    pub at_cap: bool,
    pub evaluations: usize,
    pub nodes: usize,
}

impl SguResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }
}

#[derive(Debug, Clone)]
struct Point {
    x: Vec<f64>,
    est: AverageEstimate,
}

fn key(est: &AverageEstimate) -> f64 {
    if est.diverged || est.ln_value.is_nan() {
        f64::INFINITY
    } else {
        est.ln_value
    }
}

/// True if `a` should replace `b`.
fn better(space: &MeasurementSpace, a: &Point, b: &Point) -> bool {
    let (ka, kb) = (key(&a.est), key(&b.est));
    if ka.is_infinite() && kb.is_infinite() {
        return false;
    }
    let scale = 1f64.max(ka.abs().min(kb.abs()));
    if (ka - kb).abs() > TIE_LN * scale {
        return ka < kb;
    }
    for (i, axis) in space.axes.iter().enumerate() {
        let (xa, xb) = (a.x[i], b.x[i]);
        if (xa - xb).abs() <= f64::EPSILON * xa.abs().max(xb.abs()).max(1.0) {
            continue;
        }
        match axis.prefer {
            Preference::Low => return xa < xb,
            Preference::High => return xa > xb,
            Preference::None => {}
        }
    }
    false
}

/// Minimizes an arbitrary window-average objective over `space`.
pub fn minimize_objective<O>(objective: O, space: &MeasurementSpace, opts: &MinimizeOptions) -> Result<SguResult>
where
    O: Fn(&[f64]) -> Result<AverageEstimate> + Sync,
{
    if opts.grid_points == 0 || !(opts.tol > 0.0) || !(opts.snap_tol >= 0.0) {
        return Err(SguError::Config("invalid minimizer options".into()));
    }
    let dims = space.axes.len();
    let evaluations = AtomicUsize::new(0);
    let nodes = AtomicUsize::new(0);
    let eval = |x: &[f64]| -> Result<Point> {
        let est = objective(x)?;
        evaluations.fetch_add(1, Ordering::Relaxed);
        nodes.fetch_add(est.nodes, Ordering::Relaxed);
        Ok(Point { x: x.to_vec(), est })
    };

    let mut starts: Vec<(Point, Vec<(f64, f64)>)> = Vec::new();
    let n = opts.grid_points;
    if dims <= 3 {
        let grids: Vec<Vec<f64>> = space.axes.iter().map(|a| a.grid(n)).collect();
        let total: usize = grids.iter().map(Vec::len).product();
        let cells: Vec<Vec<usize>> = (0..total)
            .map(|mut flat| {
                let mut idx = vec![0; dims];
                for d in (0..dims).rev() {
                    idx[d] = flat % grids[d].len();
                    flat /= grids[d].len();
                }
                idx
            })
            .collect();
        let points: Vec<Point> = cells
            .par_iter()
            .map(|idx| {
                let x: Vec<f64> = idx
                    .iter()
                    .enumerate()
                    .map(|(d, &j)| space.axes[d].from_unit(grids[d][j]))
                    .collect();
                eval(&x)
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for i in 1..points.len() {
            if better(space, &points[i], &points[best]) {
                best = i;
            }
        }
        if key(&points[best].est).is_infinite() && opts.seeds.is_empty() {
            return Ok(finish(space, points[best].clone(), &evaluations, &nodes));
        }
        let brackets = cells[best]
            .iter()
            .enumerate()
            .map(|(d, &j)| grid_bracket(&space.axes[d], &grids[d], j))
            .collect();
        starts.push((points[best].clone(), brackets));
    } else if opts.seeds.is_empty() {
        return Err(SguError::Config(
            "spaces with more than 3 axes need at least one seed".into(),
        ));
    }

    let seed_points: Vec<(Point, Vec<(f64, f64)>)> = opts
        .seeds
        .par_iter()
        .map(|seed| {
            if seed.params.len() != dims {
                return Err(SguError::Config(format!(
                    "seed has {} parameters, space has {dims}",
                    seed.params.len()
                )));
            }
            let x: Vec<f64> = seed
                .params
                .iter()
                .zip(&space.axes)
                .map(|(&v, a)| a.normalize(v))
                .collect();
            let brackets = match &seed.brackets {
                Some(b) if b.len() == dims => b.clone(),
                Some(_) => return Err(SguError::Config("seed bracket count mismatch".into())),
                None => x
                    .iter()
                    .zip(&space.axes)
                    .map(|(&v, a)| unit_bracket(a, v, 1.0 / (n.max(2) - 1) as f64))
                    .collect(),
            };
            Ok((eval(&x)?, brackets))
        })
        .collect::<Result<_>>()?;
    starts.extend(seed_points);

    let refined: Vec<Point> = starts
        .into_par_iter()
        .map(|(p, b)| refine(&eval, space, opts, p, b))
        .collect::<Result<_>>()?;
    let mut best = refined[0].clone();
    for p in refined.into_iter().skip(1) {
        if better(space, &p, &best) {
            best = p;
        }
    }
    let best = snap(&eval, space, opts, best)?;
    Ok(finish(space, best, &evaluations, &nodes))
}

fn finish(space: &MeasurementSpace, p: Point, evaluations: &AtomicUsize, nodes: &AtomicUsize) -> SguResult {
    let at_cap = space.axes.iter().zip(&p.x).any(|(a, &x)| match a.kind {
        AxisKind::Tanh { cap } => x >= cap - 1e-4,
        _ => false,
    });
    let diverged = key(&p.est).is_infinite();
    SguResult {
        value: if diverged { f64::INFINITY } else { p.est.value },
        ln_value: key(&p.est),
        error: p.est.error,
        params: p.x,
        names: space.names(),
        diverged,
        at_cap,
        evaluations: evaluations.load(Ordering::Relaxed),
        nodes: nodes.load(Ordering::Relaxed),
    }
}

fn grid_bracket(axis: &Axis, grid: &[f64], j: usize) -> (f64, f64) {
    let step = if grid.len() > 1 { grid[1] - grid[0] } else { 0.5 };
    unit_bracket(axis, axis.from_unit(grid[j]), step)
}

fn unit_bracket(axis: &Axis, x: f64, step: f64) -> (f64, f64) {
    match axis.kind {
        AxisKind::Periodic { period } => (x - step * period, x + step * period),
        _ => {
            let u = axis.to_unit(x);
            (
                axis.from_unit((u - step).max(0.0)),
                axis.from_unit((u + step).min(1.0)),
            )
        }
    }
}

fn golden<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { c } else { d })
}

fn refine<E>(
    eval: &E,
    space: &MeasurementSpace,
    opts: &MinimizeOptions,
    start: Point,
    first: Vec<(f64, f64)>,
) -> Result<Point>
where
    E: Fn(&[f64]) -> Result<Point>,
{
    if key(&start.est).is_infinite() {
        return Ok(start);
    }
    let mut best = start;
    let mut brackets = first;
    for _ in 0..opts.max_cycles {
        let mut max_move: f64 = 0.0;
        for (d, axis) in space.axes.iter().enumerate() {
            let (mut lo, mut hi) = brackets[d];
            if let Some((blo, bhi)) = axis.bounds() {
                lo = lo.max(blo);
                hi = hi.min(bhi);
            }
            if !(hi - lo > opts.tol) {
                continue;
            }
            let probe = Cell::new(None::<Point>);
            let along = |v: f64| -> Result<f64> {
                let mut x = best.x.clone();
                x[d] = axis.normalize(v);
                let p = eval(&x)?;
                let k = key(&p.est);
                let keep = match probe.take() {
                    Some(q) if !better(space, &p, &q) => q,
                    _ => p,
                };
                probe.set(Some(keep));
                Ok(k)
            };
            golden(&along, lo, hi, opts.tol)?;
            // Bounded axes also compare against both ends of the bracket, so
            // boundary optima are returned exactly.
            if axis.bounds().is_some() {
                along(lo)?;
                along(hi)?;
            }
            if let Some(cand) = probe.take() {
                if better(space, &cand, &best) {
                    let moved = axis_distance(axis, cand.x[d], best.x[d]);
                    max_move = max_move.max(moved);
                    best = cand;
                }
            }
        }
        if max_move < opts.tol {
            break;
        }
        for (d, bracket) in brackets.iter_mut().enumerate() {
            let half = (0.5 * (bracket.1 - bracket.0)).min(3.0 * max_move.max(opts.tol));
            let x = best.x[d];
            *bracket = (x - half, x + half);
        }
    }
    Ok(best)
}

fn axis_distance(axis: &Axis, a: f64, b: f64) -> f64 {
    match axis.kind {
        AxisKind::Periodic { period } => {
            let d = (a - b).rem_euclid(period);
            d.min(period - d)
        }
        _ => (a - b).abs(),
    }
}

fn snap<E>(eval: &E, space: &MeasurementSpace, opts: &MinimizeOptions, mut best: Point) -> Result<Point>
where
    E: Fn(&[f64]) -> Result<Point>,
{
    if key(&best.est).is_infinite() {
        return Ok(best);
    }
    for (d, axis) in space.axes.iter().enumerate() {
        let Some((lo, hi)) = axis.bounds() else {
            continue;
        };
        for bound in [lo, hi] {
            let x = best.x[d];
            if x != bound && (x - bound).abs() < opts.snap_tol {
                let mut y = best.x.clone();
                y[d] = bound;
                let p = eval(&y)?;
                let (kp, kb) = (key(&p.est), key(&best.est));
                if kp <= kb + TIE_LN * kb.abs().max(1.0) {
                    best = p;
                }
            }
        }
    }
    Ok(best)
}

/// Minimizes `∫ P(λ) / F(λ, params) dλ` over `space`.
pub fn minimize_sgu<F>(
    cfi: F,
    space: &MeasurementSpace,
    prior: &Prior,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult>
where
    F: Fn(f64, &[f64]) -> Result<f64> + Sync,
{
    minimize_objective(
        |params| average_inverse_cfi(|l| cfi(l, params), prior, cfg),
        space,
        opts,
    )
}

/// Minimizes `∫∫ P(λ) Q(ξ) / F(λ, ξ, params) dλ dξ` over `space`, with `ξ` a
/// nuisance parameter distributed as `nuisance`.
pub fn sgu_with_nuisance<F>(
    cfi: F,
    prior: &Prior,
    nuisance: &Prior,
    space: &MeasurementSpace,
    cfg: &QuadConfig,
    opts: &MinimizeOptions,
) -> Result<SguResult>
where
    F: Fn(f64, f64, &[f64]) -> Result<f64> + Sync,
{
    minimize_objective(
        |params| nuisance_average(|l, xi| cfi(l, xi, params), prior, nuisance, cfg),
        space,
        opts,
    )
}

/// Double average of 1/F over the parameter and a nuisance parameter.
pub fn nuisance_average<F>(cfi: F, prior: &Prior, nuisance: &Prior, cfg: &QuadConfig) -> Result<AverageEstimate>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if nuisance.width() == 0.0 {
        return average_inverse_cfi(|l| cfi(l, nuisance.center()), prior, cfg);
    }
    let mut nodes = 0;
    let mut worst_rel: f64 = 0.0;
    let mut inner = |xi: f64| -> Result<Sample> {
        let est = average_inverse_cfi(|l| cfi(l, xi), prior, cfg)?;
        nodes += est.nodes;
        if est.diverged {
            return Ok(Sample::Blind);
        }
        worst_rel = worst_rel.max(est.error / est.value);
        Ok(Sample::Value(nuisance.density(xi) * est.value))
    };
    for xi in [nuisance.lower(), nuisance.upper()] {
        if inner(xi)? == Sample::Blind {
            return Ok(AverageEstimate::diverged(xi, nodes));
        }
    }
    let out = integrate_partition(&mut inner, &[nuisance.lower(), nuisance.upper()], cfg)?;
    Ok(match out {
        Outcome::Done(i) => AverageEstimate {
            value: i.value,
            ln_value: i.value.ln(),
            error: i.error + worst_rel * i.value,
            nodes: nodes + i.nodes,
            diverged: false,
            blind_at: None,
        },
        Outcome::Blind(xi) => AverageEstimate::diverged(xi, nodes),
    })
}
