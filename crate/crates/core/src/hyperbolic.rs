//! Boundary-condition algebra at a single state: eigenprojectors, the Kreiss
//! symmetrizer, the scalar Lopatinskii quantity and the Alinhac good unknown.

use thiserror::Error;

use crate::linalg::{perp, real_spectrum, symmetric_eigenvalues, unit_eigenvector, Mat2, Vec2};
use crate::system::System;

/// Gap below which two eigenvalues are treated as coincident.
pub const HYPERBOLICITY_GAP: f64 = 1e-10;
/// Threshold on `|pi_- nu_perp|` below which the boundary is non-Lopatinskii.
pub const LOPATINSKII_TOLERANCE: f64 = 1e-10;
/// Smallest admissible Jacobian of the diffeomorphism.
pub const MIN_JACOBIAN: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("coefficient matrix is not strictly hyperbolic at u = ({0}, {1})")]
    NotStrictlyHyperbolic(f64, f64),
    #[error("state ({0}, {1}) lies outside the admissible phase box")]
    NotAdmissible(f64, f64),
    #[error("spectrum ({high}, {low}) does not split into one positive and one negative eigenvalue")]
    SpectrumNotSplit { high: f64, low: f64 },
    #[error("Lopatinskii condition fails: |pi_- nu_perp| = {0:e}")]
    LopatinskiFailure(f64),
    #[error("degenerate Jacobian d_x phi = {0:e}")]
    DegenerateJacobian(f64),
}

/// Eigen data of `A(u)` with eigenvalues `lambda_plus > 0` and `-lambda_minus < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenStructure {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub e_plus: Vec2,
    pub e_minus: Vec2,
    pub pi_plus: Mat2,
    pub pi_minus: Mat2,
}

/// Real spectral decomposition of an arbitrary strictly hyperbolic 2x2 matrix
/// (the two eigenvalues may share a sign).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPair {
    pub high: f64,
    pub low: f64,
    pub e_high: Vec2,
    pub e_low: Vec2,
}

impl SpectralPair {
    pub fn of(a: &Mat2) -> Option<Self> {
        let (high, low) = real_spectrum(a)?;
        if high - low <= HYPERBOLICITY_GAP {
            return None;
        }
        Some(Self {
            high,
            low,
            e_high: unit_eigenvector(a, high),
            e_low: unit_eigenvector(a, low),
        })
    }

    /// Projector onto the `high` eigenspace along the `low` one.
    pub fn projector_high(&self, a: &Mat2) -> Mat2 {
        (a - Mat2::identity() * self.low) / (self.high - self.low)
    }

    /// Projector onto the `low` eigenspace along the `high` one.
    pub fn projector_low(&self, a: &Mat2) -> Mat2 {
        -(a - Mat2::identity() * self.high) / (self.high - self.low)
    }
}

impl EigenStructure {
    /// Decomposition of a given matrix; fails unless the spectrum is `{+, -}`.
    pub fn from_matrix(a: &Mat2) -> Result<Self, AlgebraError> {
        let pair = SpectralPair::of(a).ok_or(AlgebraError::NotStrictlyHyperbolic(f64::NAN, f64::NAN))?;
        if !(pair.high > 0.0 && pair.low < 0.0) {
            return Err(AlgebraError::SpectrumNotSplit { high: pair.high, low: pair.low });
        }
        let lambda_plus = pair.high;
        let lambda_minus = -pair.low;
        let sum = lambda_plus + lambda_minus;
        let id = Mat2::identity();
        Ok(Self {
            lambda_plus,
            lambda_minus,
            e_plus: pair.e_high,
            e_minus: pair.e_low,
            pi_plus: (a + id * lambda_minus) / sum,
            pi_minus: -(a - id * lambda_plus) / sum,
        })
    }

    /// Reassemble `A = lambda_plus pi_plus - lambda_minus pi_minus`.
    pub fn matrix(&self) -> Mat2 {
        self.pi_plus * self.lambda_plus - self.pi_minus * self.lambda_minus
    }
}

/// Eigen decomposition of `A(u)` for a system.
pub fn eigen_decompose(sys: &dyn System, u: Vec2) -> Result<EigenStructure, AlgebraError> {
    if !sys.phase_box().contains(u) {
        return Err(AlgebraError::NotAdmissible(u[0], u[1]));
    }
    EigenStructure::from_matrix(&sys.coefficient(u)).map_err(|e| match e {
        AlgebraError::NotStrictlyHyperbolic(..) => AlgebraError::NotStrictlyHyperbolic(u[0], u[1]),
        other => other,
    })
}

/// Kreiss symmetrizer `S = pi_+^T pi_+ + M pi_-^T pi_-` with its spectral bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symmetrizer {
    pub s: Mat2,
    pub weight: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Symmetrizer {
    /// Symmetrizer with an explicitly chosen weight on the outgoing projector.
    pub fn with_weight(es: &EigenStructure, weight: f64) -> Self {
        let s = es.pi_plus.transpose() * es.pi_plus + es.pi_minus.transpose() * es.pi_minus * weight;
        let (beta0, alpha0) = symmetric_eigenvalues(&s);
        Self { s, weight, alpha0, beta0 }
    }

    /// Boundary quadratic form `v^T S A v`.
    pub fn boundary_form(&self, a: &Mat2, v: Vec2) -> f64 {
        v.dot(&(self.s * a * v))
    }
}

/// Build the symmetrizer whose boundary form is dissipative on `nu_perp`.
///
/// The weight is `M = 2 + 8 (lambda_+/lambda_-) |pi_+ nu_perp|^2 / |pi_- nu_perp|^2`,
/// evaluated at this state only.
pub fn build_symmetrizer(es: &EigenStructure, nu: Vec2) -> Result<Symmetrizer, AlgebraError> {
    let nu = nu / nu.norm();
    let t = perp(nu);
    let out = (es.pi_minus * t).norm();
    if out < LOPATINSKII_TOLERANCE {
        return Err(AlgebraError::LopatinskiFailure(out));
    }
    let inc = (es.pi_plus * t).norm();
    let weight = 2.0 + 8.0 * (es.lambda_plus / es.lambda_minus) * inc * inc / (out * out);
    Ok(Symmetrizer::with_weight(es, weight))
}

/// Uniform Lopatinskii quantity `|nu . e_+|` of the boundary condition `nu . u = g`.
pub fn lopatinskii_scalar(es: &EigenStructure, nu: Vec2) -> f64 {
    nu.dot(&es.e_plus).abs()
}

/// Alinhac good unknown `d_t u - (d_t phi / d_x phi) d_x u`.
pub fn alinhac_good_unknown(u_t: Vec2, u_x: Vec2, phi_t: f64, phi_x: f64) -> Result<Vec2, AlgebraError> {
    if !(phi_x >= MIN_JACOBIAN) {
        return Err(AlgebraError::DegenerateJacobian(phi_x));
    }
    if phi_t == 0.0 {
        return Ok(u_t);
    }
    Ok(u_t - u_x * (phi_t / phi_x))
}
