use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, QuadConfig};
use crate::error::{Result, SguError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Uniform,
    Custom,
    /// Point mass at the center; used for degenerate nuisance windows.
    Point,
}

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Normalized density on `[center - width/2, center + width/2]`.
#[derive(Clone)]
pub struct Prior {
    center: f64,
    width: f64,
    kind: PriorKind,
    density: Option<Density>,
}

impl fmt::Debug for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Prior")
            .field("center", &self.center)
            .field("width", &self.width)
            .field("kind", &self.kind)
            .finish()
    }
}

impl Prior {
    pub fn uniform(center: f64, width: f64) -> Result<Self> {
        check_window(center, width)?;
        Ok(Self {
            center,
            width,
            kind: PriorKind::Uniform,
            density: None,
        })
    }

    /// Custom density; must be nonnegative and integrate to 1 within 1e-8.
    pub fn custom<F>(center: f64, width: f64, density: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_window(center, width)?;
        let (a, b) = (center - 0.5 * width, center + 0.5 * width);
        let cfg = QuadConfig {
            rel_tol: 1e-11,
            ..QuadConfig::default()
        };
        let mut negative = None;
        let norm = integrate(
            |x| {
                let p = density(x);
                if p < 0.0 && negative.is_none() {
                    negative = Some(p);
                }
                p
            },
            a,
            b,
            &cfg,
        )?;
        if let Some(p) = negative {
            return Err(SguError::Domain {
                what: "prior density must be nonnegative",
                value: p,
            });
        }
        if (norm.value - 1.0).abs() > 1e-8 {
            return Err(SguError::Domain {
                what: "prior density must integrate to 1 (integral)",
                value: norm.value,
            });
        }
        Ok(Self {
            center,
            width,
            kind: PriorKind::Custom,
            density: Some(Arc::new(density)),
        })
    }

    pub fn point(center: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(SguError::Domain {
                what: "prior center must be finite",
                value: center,
            });
        }
        Ok(Self {
            center,
            width: 0.0,
            kind: PriorKind::Point,
            density: None,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn lower(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn upper(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    /// Density at `x`; zero outside the window. Not defined for point masses.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.lower() || x > self.upper() {
            return 0.0;
        }
        match (&self.density, self.kind) {
            (Some(d), _) => d(x),
            (None, PriorKind::Uniform) => 1.0 / self.width,
            (None, _) => f64::NAN,
        }
    }
}

fn check_window(center: f64, width: f64) -> Result<()> {
    if !center.is_finite() {
        return Err(SguError::Domain {
            what: "prior center must be finite",
            value: center,
        });
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(SguError::Domain {
            what: "prior width must be positive",
            value: width,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density() {
        let p = Prior::uniform(1.0, 0.5).unwrap();
        assert_eq!(p.density(1.1), 2.0);
        assert_eq!(p.density(2.0), 0.0);
        assert_eq!((p.lower(), p.upper()), (0.75, 1.25));
        assert!(Prior::uniform(0.0, 0.0).is_err());
        assert!(Prior::uniform(0.0, -1.0).is_err());
    }

    #[test]
    fn custom_density_normalization() {
        // Triangular density on [-1, 1].
        let p = Prior::custom(0.0, 2.0, |x: f64| 1.0 - x.abs()).unwrap();
        assert_eq!(p.kind(), PriorKind::Custom);
        assert!((p.density(0.5) - 0.5).abs() < 1e-15);
        assert!(Prior::custom(0.0, 2.0, |x: f64| 2.0 - 2.0 * x.abs()).is_err());
        assert!(Prior::custom(0.0, 2.0, |x: f64| x + 0.5).is_err());
    }
}
