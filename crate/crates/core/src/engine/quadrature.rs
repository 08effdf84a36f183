//! Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SguError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections of any starting subinterval.
    pub max_depth: u32,
    /// CFI values below this mark a window as divergent (linear-domain averages).
    pub blind_cfi: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_depth: 30,
            blind_cfi: 1e-12,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.blind_cfi > 0.0) {
            return Err(SguError::Config(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_depth == 0 || self.max_depth > 60 {
            return Err(SguError::Config(format!(
                "max_depth must lie in 1..=60, got {}",
                self.max_depth
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

/// What an integrand reports at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Sample {
    Value(f64),
    /// Stop: the integral is infinite because of a blind point at this node.
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Outcome {
    Done(Integral),
    Blind(f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 100_000;

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

fn gauss_kronrod<F>(f: &mut F, a: f64, b: f64, depth: u32) -> Result<std::result::Result<Piece, f64>>
where
    F: FnMut(f64) -> Result<Sample>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut values = [(0.0, 0.0); 15];
    let mut count = 0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let offsets: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
        for &sign in offsets {
            let node = center + sign * half * x;
            let v = match f(node)? {
                Sample::Value(v) => v,
                Sample::Blind => return Ok(Err(node)),
            };
            if !v.is_finite() {
                return Err(SguError::Numerical(format!(
                    "integrand is not finite at {node}: {v}"
                )));
            }
            kronrod += wk * v;
            values[count] = (wk, v);
            count += 1;
            // Gauss nodes are the odd-indexed Kronrod nodes.
            if j % 2 == 1 {
                gauss += WG[j / 2] * v;
            }
        }
    }
    // Error estimate as in QUADPACK's qk15.
    let mean = 0.5 * kronrod;
    let abs_sum: f64 = values.iter().map(|(w, v)| w * v.abs()).sum::<f64>() * half.abs();
    let asc: f64 = values.iter().map(|(w, v)| w * (v - mean).abs()).sum::<f64>() * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Ok(Ok(Piece {
        a,
        b,
        value: kronrod * half,
        error,
        depth,
    }))
}

/// Points of `cuts` inside `(a, b)` plus geometric grading toward each of
/// `graded` (ratio 1/4 down to `1e-13 (b - a)`), sorted with the endpoints.
pub(crate) fn partition(a: f64, b: f64, cuts: &[f64], graded: &[f64]) -> Vec<f64> {
    let width = b - a;
    let mut points = vec![a, b];
    points.extend(cuts.iter().copied().filter(|&p| p > a && p < b));
    for &p in graded.iter().filter(|&&p| p >= a && p <= b) {
        if p > a && p < b {
            points.push(p);
        }
        let mut w = width;
        while w > 1e-13 * width {
            w *= 0.25;
            for q in [p - w, p + w] {
                if q > a && q < b {
                    points.push(q);
                }
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Integrates over consecutive subintervals of the sorted `points`.
pub(crate) fn integrate_partition<F>(mut f: F, points: &[f64], cfg: &QuadConfig) -> Result<Outcome>
where
    F: FnMut(f64) -> Result<Sample>,
{
    let mut pieces = Vec::with_capacity(points.len() * 4);
    let mut nodes = 0usize;
    for w in points.windows(2) {
        match gauss_kronrod(&mut f, w[0], w[1], 0)? {
            Ok(p) => pieces.push(p),
            Err(x) => return Ok(Outcome::Blind(x)),
        }
        nodes += 15;
    }
    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if error <= target {
            break;
        }
        let worst = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < cfg.max_depth)
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(quadrature_failed(points, error, nodes));
        };
        if pieces.len() >= MAX_INTERVALS {
            return Err(quadrature_failed(points, error, nodes));
        }
        let p = pieces.swap_remove(i);
        let mid = 0.5 * (p.a + p.b);
        for (a, b) in [(p.a, mid), (mid, p.b)] {
            match gauss_kronrod(&mut f, a, b, p.depth + 1)? {
                Ok(q) => pieces.push(q),
                Err(x) => return Ok(Outcome::Blind(x)),
            }
            nodes += 15;
        }
    }
    // Deterministic accumulation in interval order.
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Outcome::Done(Integral {
        value: pieces.iter().map(|p| p.value).sum(),
        error: pieces.iter().map(|p| p.error).sum(),
        nodes,
    }))
}

fn quadrature_failed(points: &[f64], error: f64, nodes: usize) -> SguError {
    SguError::QuadratureFailed {
        a: points[0],
        b: points[points.len() - 1],
        error,
        nodes,
    }
}

/// Adaptive integral of a plain function over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(SguError::Config(format!("invalid integration interval [{a}, {b}]")));
    }
    match integrate_partition(|x| Ok(Sample::Value(f(x))), &[a, b], cfg)? {
        Outcome::Done(i) => Ok(i),
        Outcome::Blind(_) => unreachable!("plain integrands never report blind nodes"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let cfg = QuadConfig::default();
        let r = integrate(|x| x.powi(7) - 3.0 * x * x + 1.0, -1.0, 2.0, &cfg).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0) + 3.0;
        assert!((r.value - exact).abs() < 1e-12);
        assert_eq!(r.nodes, 15);
    }

    #[test]
    fn smooth_and_peaked_integrands() {
        let cfg = QuadConfig::default();
        let r = integrate(f64::exp, 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        // Lorentzian of width 1e-3: integral atan(1/eps)*2/eps
        let eps: f64 = 1e-3;
        let r = integrate(|x| 1.0 / (x * x + eps * eps), -1.0, 1.0, &cfg).unwrap();
        let exact = 2.0 * (1.0 / eps).atan() / eps;
        assert!((r.value - exact).abs() / exact < 1e-9);
        assert!(r.error < 1e-7 * exact);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let cfg = QuadConfig::default();
        let r = integrate(f64::ln, 0.0, 1.0, &cfg).unwrap();
        assert!((r.value + 1.0).abs() < 1e-8);
    }

    #[test]
    fn grading_resolves_narrow_spike() {
        // Spike of width 1e-9 at x = 0.3 that ungraded open rules step over.
        let w: f64 = 1e-9;
        let f = |x: f64| Ok(Sample::Value(1.0 + 1.0 / (1.0 + ((x - 0.3) / w).powi(2)) / w));
        let pts = partition(0.0, 1.0, &[], &[0.3]);
        let Outcome::Done(r) = integrate_partition(f, &pts, &QuadConfig::default()).unwrap() else {
            panic!("blind")
        };
        let exact = 1.0 + ((0.7 / w).atan() + (0.3 / w).atan());
        assert!((r.value - exact).abs() / exact < 1e-8, "{} vs {}", r.value, exact);
    }

    #[test]
    fn partition_is_sorted_and_inside() {
        let p = partition(0.0, 1.0, &[0.5, 2.0], &[0.0, 0.25]);
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 1.0);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p.contains(&0.5) && p.contains(&0.25));
    }

    #[test]
    fn blind_nodes_stop_integration() {
        let out = integrate_partition(
            |x| Ok(if x > 0.7 { Sample::Blind } else { Sample::Value(1.0) }),
            &[0.0, 1.0],
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(matches!(out, Outcome::Blind(x) if x > 0.7));
    }

    #[test]
    fn non_integrable_singularity_fails() {
        let cfg = QuadConfig {
            max_depth: 12,
            ..QuadConfig::default()
        };
        let out = integrate(|x| 1.0 / x, 0.0, 1.0, &cfg);
        assert!(matches!(out, Err(SguError::QuadratureFailed { .. })));
    }

    #[test]
    fn invalid_configs() {
        assert!(QuadConfig { rel_tol: 0.0, ..QuadConfig::default() }.validate().is_err());
        assert!(QuadConfig { max_depth: 0, ..QuadConfig::default() }.validate().is_err());
        assert!(QuadConfig::default().validate().is_ok());
        assert!(integrate(|x| x, 1.0, 1.0, &QuadConfig::default()).is_err());
    }
}
