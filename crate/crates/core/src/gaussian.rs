//! Bosonic Gaussian states, general-dyne measurements and the Gaussian CFI.
//!
//! Quadratures are ordered (x1, p1, x2, p2, ...). Covariance matrices follow the
//! vacuum = identity convention, so a thermal mode at temperature `T` has
//! covariance `coth(1/2T) * I`.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Result, SguError};

/// Largest measurement squeezing used to stand in for homodyne detection.
pub const HOMODYNE_SQUEEZING_CAP: f64 = 20.0;
/// Smallest `r_m` accepted by [`GeneralDyneMeasurement::from_ratio`].
pub const HOMODYNE_RATIO_FLOOR: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-12;
const BONA_FIDE_TOL: f64 = 1e-10;
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    displacement: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state after checking symmetry and the uncertainty principle
    /// `sigma + i Omega >= 0`.
    pub fn new(displacement: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = covariance.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || covariance.ncols() != dim || displacement.len() != dim {
            return Err(SguError::Config(format!(
                "state dimensions do not match: displacement {}, covariance {}x{}",
                displacement.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        check_symmetric(&covariance)?;
        let min_eig = min_eigenvalue_with_symplectic_form(&covariance);
        if min_eig < -BONA_FIDE_TOL {
            return Err(SguError::Domain {
                what: "covariance violates sigma + i Omega >= 0 (smallest eigenvalue)",
                value: min_eig,
            });
        }
        Ok(Self {
            n_modes: dim / 2,
            displacement,
            covariance,
        })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            displacement: DVector::zeros(2 * n_modes),
            covariance: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn single_mode(displacement: [f64; 2], covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::from_row_slice(&displacement), covariance)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// Standard symplectic form, block diagonal with `[[0, 1], [-1, 0]]` blocks.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    omega
}

// Eigenvalues of the Hermitian matrix A + iB equal those of the real symmetric
// embedding [[A, -B], [B, A]] (each one twice).
fn min_eigenvalue_with_symplectic_form(covariance: &DMatrix<f64>) -> f64 {
    let dim = covariance.nrows();
    let omega = symplectic_form(dim / 2);
    let mut embed = DMatrix::zeros(2 * dim, 2 * dim);
    embed.view_mut((0, 0), (dim, dim)).copy_from(covariance);
    embed.view_mut((dim, dim), (dim, dim)).copy_from(covariance);
    embed.view_mut((0, dim), (dim, dim)).copy_from(&(-&omega));
    embed.view_mut((dim, 0), (dim, dim)).copy_from(&omega);
    embed.symmetric_eigenvalues().min()
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if !(asym <= SYMMETRY_TOL) {
        return Err(SguError::Domain {
            what: "matrix is not symmetric (max |A - A^T|)",
            value: asym,
        });
    }
    Ok(())
}

/// Zero-displacement Gaussian POVM described by its covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDyneMeasurement {
    covariance: DMatrix<f64>,
}

impl GeneralDyneMeasurement {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        let dim = covariance.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || covariance.ncols() != dim {
            return Err(SguError::Config(format!(
                "measurement covariance must be 2N x 2N, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        check_symmetric(&covariance)?;
        if covariance.clone().cholesky().is_none() {
            return Err(SguError::Domain {
                what: "measurement covariance is not positive definite (smallest eigenvalue)",
                value: covariance.symmetric_eigenvalues().min(),
            });
        }
        Ok(Self { covariance })
    }

    /// Heterodyne detection on every mode.
    pub fn heterodyne(n_modes: usize) -> Self {
        Self {
            covariance: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode `diag(r_m, 1/r_m)`. Values below [`HOMODYNE_RATIO_FLOOR`]
    /// are raised to the floor.
    pub fn from_ratio(r_m: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&r_m), "r_m must lie in [0, 1]", r_m)?;
        let r = r_m.max(HOMODYNE_RATIO_FLOOR);
        Ok(Self {
            covariance: DMatrix::from_row_slice(2, 2, &[r, 0.0, 0.0, 1.0 / r]),
        })
    }

    /// Single-mode `R(psi/2) diag(e^{-2s}, e^{2s}) R(psi/2)^T`. Squeezing above
    /// [`HOMODYNE_SQUEEZING_CAP`] is clamped to the cap.
    pub fn from_squeezing(s_m: f64, psi_m: f64) -> Result<Self> {
        ensure(s_m >= 0.0, "measurement squeezing s_m must be >= 0", s_m)?;
        Ok(Self {
            covariance: squeezed_matrix(s_m.min(HOMODYNE_SQUEEZING_CAP), psi_m, 1.0),
        })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// A one-parameter family of Gaussian states with first-derivative access.
pub trait ParametrizedFamily {
    fn state(&self, lambda: f64) -> Result<GaussianState>;

    /// `(d d/d lambda, d sigma/d lambda)`. Defaults to a central difference.
    fn derivative(&self, lambda: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        central_difference(self, lambda)
    }
}

/// Central difference with step `1e-6 * max(1, |lambda|)`.
pub fn central_difference<F: ParametrizedFamily + ?Sized>(
    family: &F,
    lambda: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let h = 1e-6 * lambda.abs().max(1.0);
    let plus = family.state(lambda + h)?;
    let minus = family.state(lambda - h)?;
    let scale = 0.5 / h;
    Ok((
        (plus.displacement() - minus.displacement()) * scale,
        (plus.covariance() - minus.covariance()) * scale,
    ))
}

/// Wraps a closure as a family; derivatives come from central differences.
pub struct FnFamily<F>(pub F);

impl<F> ParametrizedFamily for FnFamily<F>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    fn state(&self, lambda: f64) -> Result<GaussianState> {
        (self.0)(lambda)
    }
}

/// `nu = coth(1/(2T))`.
pub fn thermal_nu(temperature: f64) -> Result<f64> {
    ensure(temperature > 0.0, "temperature must be positive", temperature)?;
    Ok(1.0 / (0.5 / temperature).tanh())
}

/// `d nu / dT = 1 / (2 T^2 sinh^2(1/(2T)))`.
pub fn thermal_nu_derivative(temperature: f64) -> Result<f64> {
    ensure(temperature > 0.0, "temperature must be positive", temperature)?;
    let x = 0.5 / temperature;
    Ok(2.0 * x * x / x.sinh().powi(2))
}

pub fn thermal_covariance(temperature: f64) -> Result<DMatrix<f64>> {
    let nu = thermal_nu(temperature)?;
    Ok(DMatrix::identity(2, 2) * nu)
}

fn squeezed_matrix(s: f64, phase: f64, prefactor: f64) -> DMatrix<f64> {
    let (c, sh) = ((2.0 * s).cosh(), (2.0 * s).sinh());
    let (sin, cos) = phase.sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            prefactor * (c - sh * cos),
            -prefactor * sh * sin,
            -prefactor * sh * sin,
            prefactor * (c + sh * cos),
        ],
    )
}

/// Squeezed thermal covariance with prefactor `2 n_th + 1`, so that
/// `n_th = s = 0` is the vacuum.
pub fn squeezed_thermal_covariance(n_th: f64, s: f64, phase: f64) -> Result<DMatrix<f64>> {
    ensure(n_th >= 0.0, "thermal photon number must be >= 0", n_th)?;
    ensure(s >= 0.0, "squeezing must be >= 0", s)?;
    Ok(squeezed_matrix(s, phase, 2.0 * n_th + 1.0))
}

/// Phases after a rotation `exp(-i lambda a^dag a)`: `(theta - lambda, psi - 2 lambda)`.
pub fn phase_encode(theta: f64, psi: f64, lambda: f64) -> (f64, f64) {
    (theta - lambda, psi - 2.0 * lambda)
}

/// Displacement vector `sqrt(2) d0 [cos theta, sin theta]`.
pub fn encoded_displacement(d0: f64, theta: f64) -> [f64; 2] {
    let amp = std::f64::consts::SQRT_2 * d0;
    [amp * theta.cos(), amp * theta.sin()]
}

/// `n = d0^2 + (n_th + 1/2) cosh 2s - 1/2`.
pub fn mean_photon_number(d0: f64, s: f64, n_th: f64) -> Result<f64> {
    ensure(d0 >= 0.0, "displacement amplitude must be >= 0", d0)?;
    ensure(s >= 0.0, "squeezing must be >= 0", s)?;
    ensure(n_th >= 0.0, "thermal photon number must be >= 0", n_th)?;
    Ok(d0 * d0 + (n_th + 0.5) * (2.0 * s).cosh() - 0.5)
}

/// Squeezing of a squeezed vacuum with `n` mean photons: `cosh 2s = 2n + 1`.
pub fn squeezing_for_photons(n: f64) -> Result<f64> {
    ensure(n >= 0.0, "photon number must be >= 0", n)?;
    Ok(0.5 * (2.0 * n + 1.0).acosh())
}

/// Classical Fisher information of a general-dyne measurement on a Gaussian
/// family:
///
/// `F = dd^T (sigma + sigma_m)^-1 dd + 1/2 Tr[((sigma + sigma_m)^-1 dsigma)^2]`.
pub fn cfi_gaussian<F: ParametrizedFamily + ?Sized>(
    family: &F,
    lambda: f64,
    measurement: &GeneralDyneMeasurement,
) -> Result<f64> {
    let state = family.state(lambda)?;
    let (dd, dsigma) = family.derivative(lambda)?;
    let total = state.covariance() + measurement.covariance();
    if total.nrows() != dd.len() || dsigma.nrows() != total.nrows() {
        return Err(SguError::Config(
            "measurement and family have different mode counts".into(),
        ));
    }
    let inv = if total.nrows() == 2 {
        inverse_2x2(&total)?
    } else {
        inverse_checked(total)?
    };
    let drift = dd.dot(&(&inv * &dd));
    let m = &inv * &dsigma;
    let diffusion = 0.5 * (&m * &m).trace();
    Ok((drift + diffusion).max(0.0))
}

fn inverse_2x2(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let det = a * d - b * c;
    if !(det > 0.0) || !det.is_finite() {
        return Err(SguError::Singular {
            condition: f64::INFINITY,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(DMatrix::from_row_slice(2, 2, &[d / det, -b / det, -c / det, a / det]))
}

fn inverse_checked(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(SguError::Singular {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let chol = m.cholesky().ok_or(SguError::Singular {
        condition,
        limit: CONDITION_LIMIT,
    })?;
    Ok(chol.inverse())
}

/// Thermal single mode with the temperature as the parameter.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThermalFamily;

impl ParametrizedFamily for ThermalFamily {
    fn state(&self, temperature: f64) -> Result<GaussianState> {
        GaussianState::single_mode([0.0, 0.0], thermal_covariance(temperature)?)
    }

    fn derivative(&self, temperature: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let dnu = thermal_nu_derivative(temperature)?;
        Ok((DVector::zeros(2), DMatrix::identity(2, 2) * dnu))
    }
}

/// Displaced squeezed thermal probe under the rotation `exp(-i lambda a^dag a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedProbe {
    pub d0: f64,
    pub theta: f64,
    pub s: f64,
    pub psi: f64,
    pub n_th: f64,
}

impl RotatedProbe {
    pub fn squeezed_vacuum(s: f64, psi: f64) -> Self {
        Self {
            d0: 0.0,
            theta: 0.0,
            s,
            psi,
            n_th: 0.0,
        }
    }

    pub fn displaced_vacuum(d0: f64, theta: f64) -> Self {
        Self {
            d0,
            theta,
            s: 0.0,
            psi: 0.0,
            n_th: 0.0,
        }
    }

    pub fn squeezed_thermal(n_th: f64, s: f64, psi: f64) -> Self {
        Self {
            d0: 0.0,
            theta: 0.0,
            s,
            psi,
            n_th,
        }
    }

    pub fn mean_photons(&self) -> Result<f64> {
        mean_photon_number(self.d0, self.s, self.n_th)
    }
}

impl ParametrizedFamily for RotatedProbe {
    fn state(&self, lambda: f64) -> Result<GaussianState> {
        let (theta, psi) = phase_encode(self.theta, self.psi, lambda);
        GaussianState::single_mode(
            encoded_displacement(self.d0, theta),
            squeezed_thermal_covariance(self.n_th, self.s, psi)?,
        )
    }

    fn derivative(&self, lambda: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (theta, psi) = phase_encode(self.theta, self.psi, lambda);
        let amp = std::f64::consts::SQRT_2 * self.d0;
        let dd = DVector::from_row_slice(&[amp * theta.sin(), -amp * theta.cos()]);
        // d psi / d lambda = -2
        let k = -2.0 * (2.0 * self.n_th + 1.0) * (2.0 * self.s).sinh();
        let (sin, cos) = psi.sin_cos();
        let dsigma = DMatrix::from_row_slice(2, 2, &[k * sin, -k * cos, -k * cos, -k * sin]);
        Ok((dd, dsigma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn thermal_nu_limits() {
        assert!((thermal_nu(1e-3).unwrap() - 1.0).abs() < 1e-12);
        // coth(0.5) from the exponential form (e + 1)/(e - 1)
        let e = 1f64.exp();
        assert!(rel(thermal_nu(1.0).unwrap(), (e + 1.0) / (e - 1.0)) < 1e-14);
        assert!((thermal_nu(1.0).unwrap() - 2.163953).abs() < 1e-6);
        let t = 1e4;
        assert!(rel(thermal_nu(t).unwrap(), 2.0 * t) < 1e-8);
        assert!(thermal_covariance(0.0).is_err());
        assert!(thermal_covariance(-1.0).is_err());
    }

    #[test]
    fn thermal_nu_derivative_matches_difference() {
        for &t in &[0.1, 0.5, 1.0, 3.0, 20.0] {
            let h = 1e-6 * t;
            let fd = (thermal_nu(t + h).unwrap() - thermal_nu(t - h).unwrap()) / (2.0 * h);
            assert!(rel(thermal_nu_derivative(t).unwrap(), fd) < 1e-7, "T = {t}");
        }
    }

    #[test]
    fn squeezed_thermal_special_cases() {
        let vac = squeezed_thermal_covariance(0.0, 0.0, 0.7).unwrap();
        assert!((vac - DMatrix::identity(2, 2)).amax() < 1e-15);

        let s = 0.8;
        let sq = squeezed_thermal_covariance(0.0, s, 0.0).unwrap();
        assert!(rel(sq[(0, 0)], (-2.0 * s).exp()) < 1e-14);
        assert!(rel(sq[(1, 1)], (2.0 * s).exp()) < 1e-14);
        assert_eq!(sq[(0, 1)], 0.0);

        // coth(1/2T) = 3  <=>  T = 1 / (2 acoth 3) = 1 / ln 2
        let t = 1.0 / 2f64.ln();
        let th = squeezed_thermal_covariance(1.0, 0.0, 0.0).unwrap();
        assert!((th - thermal_covariance(t).unwrap()).amax() < 1e-12);

        assert!(squeezed_thermal_covariance(-0.1, 0.0, 0.0).is_err());
        assert!(squeezed_thermal_covariance(0.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn phase_encoding() {
        assert_eq!(phase_encode(0.3, 1.1, 0.0), (0.3, 1.1));
        let (t, p) = phase_encode(0.0, 0.0, std::f64::consts::PI);
        assert_eq!(t, -std::f64::consts::PI);
        assert!(p.rem_euclid(2.0 * std::f64::consts::PI).min(
            2.0 * std::f64::consts::PI - p.rem_euclid(2.0 * std::f64::consts::PI)
        ) < 1e-12);
        let d = encoded_displacement(1.0, 0.0);
        assert!((d[0] - std::f64::consts::SQRT_2).abs() < 1e-15 && d[1] == 0.0);
    }

    #[test]
    fn photon_numbers() {
        assert_eq!(mean_photon_number(0.0, 0.0, 0.0).unwrap(), 0.0);
        let s = 0.9;
        assert!(rel(
            mean_photon_number(0.0, s, 0.0).unwrap(),
            ((2.0 * s).cosh() - 1.0) / 2.0
        ) < 1e-14);
        assert_eq!(mean_photon_number(2.0, 0.0, 0.0).unwrap(), 4.0);
        let n = 7.5;
        let s = squeezing_for_photons(n).unwrap();
        assert!(rel(mean_photon_number(0.0, s, 0.0).unwrap(), n) < 1e-12);
        assert!(mean_photon_number(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn measurement_parameterizations() {
        for &r in &[1e-3, 0.2, 1.0] {
            let m = GeneralDyneMeasurement::from_ratio(r).unwrap();
            assert!((m.covariance().determinant() - 1.0).abs() < 1e-10);
        }
        for &(s, p) in &[(0.0, 0.0), (0.5, 1.0), (3.0, 4.0)] {
            let m = GeneralDyneMeasurement::from_squeezing(s, p).unwrap();
            assert!(rel(m.covariance().determinant(), 1.0) < 1e-10);
        }
        let het = GeneralDyneMeasurement::from_ratio(1.0).unwrap();
        assert_eq!(het, GeneralDyneMeasurement::heterodyne(1));
        let het = GeneralDyneMeasurement::from_squeezing(0.0, 2.0).unwrap();
        assert!((het.covariance() - DMatrix::identity(2, 2)).amax() < 1e-15);
        assert!(GeneralDyneMeasurement::from_ratio(1.5).is_err());
        assert!(GeneralDyneMeasurement::from_squeezing(-1.0, 0.0).is_err());
        assert!(GeneralDyneMeasurement::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
    }

    #[test]
    fn bona_fide_rejects_sub_vacuum_noise() {
        let bad = DMatrix::identity(2, 2) * 0.5;
        assert!(GaussianState::single_mode([0.0, 0.0], bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(GaussianState::single_mode([0.0, 0.0], asym).is_err());
        let two_mode = GaussianState::vacuum(2);
        assert_eq!(two_mode.n_modes(), 2);
        assert!(GaussianState::new(DVector::zeros(4), DMatrix::identity(4, 4)).is_ok());
    }

    #[test]
    fn constant_family_has_zero_cfi() {
        let fam = FnFamily(|_l: f64| GaussianState::single_mode([0.3, -0.2], thermal_covariance(2.0)?));
        let m = GeneralDyneMeasurement::from_squeezing(0.4, 0.3).unwrap();
        assert_eq!(cfi_gaussian(&fam, 0.7, &m).unwrap(), 0.0);
    }

    #[test]
    fn two_mode_cfi_reduces_to_single_mode_sum() {
        // Two independent thermal modes at the same temperature: the CFI doubles.
        let fam = FnFamily(|t: f64| {
            let nu = thermal_nu(t)?;
            GaussianState::new(DVector::zeros(4), DMatrix::identity(4, 4) * nu)
        });
        let meas = GeneralDyneMeasurement::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            0.3,
            1.0 / 0.3,
            0.3,
            1.0 / 0.3,
        ])))
        .unwrap();
        let single = cfi_gaussian(&ThermalFamily, 1.3, &GeneralDyneMeasurement::from_ratio(0.3).unwrap()).unwrap();
        let double = cfi_gaussian(&fam, 1.3, &meas).unwrap();
        assert!(rel(double, 2.0 * single) < 1e-7);
    }

    #[test]
    fn large_system_condition_check() {
        let fam = FnFamily(|_l: f64| Ok(GaussianState::vacuum(2)));
        let meas = GeneralDyneMeasurement::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            1e-14, 1e14, 1.0, 1.0,
        ])))
        .unwrap();
        // vacuum + meas has eigenvalues ~1 and ~1e14
        assert!(matches!(
            cfi_gaussian(&fam, 0.0, &meas),
            Err(SguError::Singular { .. })
        ));
    }

    #[test]
    fn rotated_probe_analytic_derivative_matches_difference() {
        let probe = RotatedProbe {
            d0: 1.2,
            theta: 0.4,
            s: 0.6,
            psi: 0.9,
            n_th: 0.3,
        };
        for &l in &[-0.7, 0.0, 0.39, 2.5] {
            let (dd, ds) = probe.derivative(l).unwrap();
            let (fd, fs) = central_difference(&probe, l).unwrap();
            assert!((dd - fd).amax() < 1e-5 * 1.2);
            assert!((ds - &fs).amax() < 1e-5 * fs.amax().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn cfi_is_nonnegative(
            s in 0.0f64..2.0, psi in 0.0f64..6.3, n_th in 0.0f64..3.0, d0 in 0.0f64..3.0,
            theta in 0.0f64..6.3, s_m in 0.0f64..3.0, psi_m in 0.0f64..6.3, lambda in -3.0f64..3.0,
        ) {
            let probe = RotatedProbe { d0, theta, s, psi, n_th };
            let m = GeneralDyneMeasurement::from_squeezing(s_m, psi_m).unwrap();
            prop_assert!(cfi_gaussian(&probe, lambda, &m).unwrap() >= 0.0);
        }

        #[test]
        fn rotating_probe_and_measurement_together_preserves_cfi(
            s in 0.0f64..1.5, psi in 0.0f64..6.3, n_th in 0.0f64..2.0,
            s_m in 0.0f64..2.0, psi_m in 0.0f64..6.3, lambda in -3.0f64..3.0, shift in -3.0f64..3.0,
        ) {
            let a = cfi_gaussian(
                &RotatedProbe::squeezed_thermal(n_th, s, psi),
                lambda,
                &GeneralDyneMeasurement::from_squeezing(s_m, psi_m).unwrap(),
            ).unwrap();
            let b = cfi_gaussian(
                &RotatedProbe::squeezed_thermal(n_th, s, psi + shift),
                lambda,
                &GeneralDyneMeasurement::from_squeezing(s_m, psi_m + shift).unwrap(),
            ).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }

        #[test]
        fn constructors_are_bona_fide(n_th in 0.0f64..5.0, s in 0.0f64..3.0, psi in 0.0f64..6.3, t in 0.01f64..50.0) {
            prop_assert!(GaussianState::single_mode([0.0, 0.0], squeezed_thermal_covariance(n_th, s, psi).unwrap()).is_ok());
            prop_assert!(GaussianState::single_mode([1.0, 2.0], thermal_covariance(t).unwrap()).is_ok());
        }
    }
}
