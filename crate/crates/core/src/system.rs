//! Quasilinear 2x2 systems `d_t f0(u) + A(u) ... = f` and the built-in models.
//!
//! A system is anything implementing [`System`]: the coefficient `A(u)` is the
//! only mandatory piece. Conservative systems additionally expose `f0` and `f`
//! with `A = f0'(u)^-1 f'(u)`, which the finite-volume stepper uses to conserve
//! `f0(u)` exactly up to boundary fluxes.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{canonical_sign, perp, real_spectrum, unit_eigenvector, Mat2, Vec2};

/// Axis-aligned admissible region for the state (open box).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseBox {
    pub lower: Vec2,
    pub upper: Vec2,
}

impl PhaseBox {
    pub fn unbounded() -> Self {
        Self {
            lower: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            upper: Vec2::new(f64::INFINITY, f64::INFINITY),
        }
    }

    pub fn contains(&self, u: Vec2) -> bool {
        (0..2).all(|i| u[i].is_finite() && u[i] > self.lower[i] && u[i] < self.upper[i])
    }
}

/// Value and gradient of a scalar function of the state.
pub type ScalarWithGradient = (f64, Vec2);

/// A strictly hyperbolic 2x2 quasilinear system.
pub trait System: Send + Sync + fmt::Debug {
    /// Coefficient matrix `A(u)` of `d_t u + A(u) d_x u + B u = source`.
    fn coefficient(&self, u: Vec2) -> Mat2;

    /// Admissible states.
    fn phase_box(&self) -> PhaseBox {
        PhaseBox::unbounded()
    }

    /// Conservative flux `f(u)`, if the system is in conservation form.
    fn flux(&self, _u: Vec2) -> Option<Vec2> {
        None
    }

    /// Conserved density `f0(u)`; identity unless overridden.
    fn density(&self, u: Vec2) -> Vec2 {
        u
    }

    /// Jacobian `f0'(u)`.
    fn density_jacobian(&self, _u: Vec2) -> Mat2 {
        Mat2::identity()
    }

    /// Recover `u` from `w = f0(u)`, starting Newton from `guess`.
    fn density_inverse(&self, w: Vec2, guess: Vec2) -> Vec2 {
        let mut u = guess;
        for _ in 0..50 {
            let r = self.density(u) - w;
            if r.norm() <= 1e-15 * (1.0 + w.norm()) {
                break;
            }
            match self.density_jacobian(u).try_inverse() {
                Some(j) => u -= j * r,
                None => break,
            }
        }
        u
    }

    /// Zeroth-order coefficient `B(t, x)`.
    fn zeroth_order(&self, _t: f64, _x: f64) -> Mat2 {
        Mat2::zeros()
    }

    /// Right-hand side `source(t, x)`.
    fn source(&self, _t: f64, _x: f64) -> Vec2 {
        Vec2::zeros()
    }

    /// Characteristic variables `[w_plus, w_minus]` with gradients.
    ///
    /// `w_plus` is transported by the larger eigenvalue and `w_minus` by the
    /// smaller one. The default freezes the left eigenvectors at `frozen`; systems
    /// with exact Riemann invariants override this.
    fn characteristic_variables(&self, u: Vec2, frozen: Vec2) -> [ScalarWithGradient; 2] {
        let [l_plus, l_minus] = frozen_left_eigenvectors(&self.coefficient(frozen));
        [(l_plus.dot(&u), l_plus), (l_minus.dot(&u), l_minus)]
    }

    /// Directional derivative `A'(u)[du]`.
    fn coefficient_derivative(&self, u: Vec2, du: Vec2) -> Mat2 {
        let scale = 1.0 + u.norm();
        let h = 1e-6 * scale / du.norm().max(1e-300);
        (self.coefficient(u + du * h) - self.coefficient(u - du * h)) / (2.0 * h)
    }

    /// Second directional derivative `A''(u)[a, b]`.
    fn coefficient_second_derivative(&self, u: Vec2, a: Vec2, b: Vec2) -> Mat2 {
        let scale = 1.0 + u.norm();
        let h = 1e-4 * scale / b.norm().max(1e-300);
        (self.coefficient_derivative(u + b * h, a) - self.coefficient_derivative(u - b * h, a))
            / (2.0 * h)
    }
}

/// Left eigenvectors `[l_plus, l_minus]` of `a`, normalised by `l . e = 1`
/// against the unit right eigenvectors of the same family.
///
/// Falls back to the canonical basis when the spectrum is not real and distinct.
pub fn frozen_left_eigenvectors(a: &Mat2) -> [Vec2; 2] {
    match real_spectrum(a) {
        Some((hi, lo)) => {
            let e_hi = unit_eigenvector(a, hi);
            let e_lo = unit_eigenvector(a, lo);
            let l_hi = perp(e_lo);
            let l_lo = perp(e_hi);
            [l_hi / l_hi.dot(&e_hi), l_lo / l_lo.dot(&e_lo)]
        }
        None => [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
    }
}

/// Shallow water in surface elevation and discharge, `u = (zeta, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShallowWater {
    pub gravity: f64,
    pub rest_depth: f64,
}

impl ShallowWater {
    pub fn new(gravity: f64, rest_depth: f64) -> Self {
        Self { gravity, rest_depth }
    }

    pub fn depth(&self, u: Vec2) -> f64 {
        self.rest_depth + u[0]
    }

    /// Speeds `(lambda_plus, lambda_minus) = (sqrt(gh) + q/h, sqrt(gh) - q/h)`.
    pub fn speeds(&self, u: Vec2) -> (f64, f64) {
        let h = self.depth(u);
        let c = (self.gravity * h).sqrt();
        (c + u[1] / h, c - u[1] / h)
    }

    /// Whether both speeds are positive (the flow is subcritical).
    pub fn is_subcritical(&self, u: Vec2) -> bool {
        let (p, m) = self.speeds(u);
        self.depth(u) > 0.0 && p > 0.0 && m > 0.0
    }
}

impl System for ShallowWater {
    fn coefficient(&self, u: Vec2) -> Mat2 {
        let h = self.depth(u);
        let v = u[1] / h;
        Mat2::new(0.0, 1.0, self.gravity * h - v * v, 2.0 * v)
    }

    fn phase_box(&self) -> PhaseBox {
        PhaseBox {
            lower: Vec2::new(-self.rest_depth, f64::NEG_INFINITY),
            upper: Vec2::new(f64::INFINITY, f64::INFINITY),
        }
    }

    fn flux(&self, u: Vec2) -> Option<Vec2> {
        let h = self.depth(u);
        Some(Vec2::new(u[1], u[1] * u[1] / h + 0.5 * self.gravity * h * h))
    }

    fn characteristic_variables(&self, u: Vec2, _frozen: Vec2) -> [ScalarWithGradient; 2] {
        let h = self.depth(u);
        let g = self.gravity;
        let v = u[1] / h;
        let c = (g * h).sqrt();
        let shift = 2.0 * (c - (g * self.rest_depth).sqrt());
        let dv = Vec2::new(-v / h, 1.0 / h);
        let dc = Vec2::new((g / h).sqrt(), 0.0);
        [(v + shift, dv + dc), (v - shift, dv - dc)]
    }

    fn coefficient_derivative(&self, u: Vec2, du: Vec2) -> Mat2 {
        let h = self.depth(u);
        let q = u[1];
        let d_low = self.gravity * du[0] + 2.0 * q * q * du[0] / (h * h * h) - 2.0 * q * du[1] / (h * h);
        let d_diag = 2.0 * du[1] / h - 2.0 * q * du[0] / (h * h);
        Mat2::new(0.0, 0.0, d_low, d_diag)
    }

    fn coefficient_second_derivative(&self, u: Vec2, a: Vec2, b: Vec2) -> Mat2 {
        let h = self.depth(u);
        let q = u[1];
        let h3 = h * h * h;
        let low = -6.0 * q * q * a[0] * b[0] / (h3 * h)
            + 4.0 * q * (a[0] * b[1] + a[1] * b[0]) / h3
            - 2.0 * a[1] * b[1] / (h * h);
        let diag = -2.0 * (a[1] * b[0] + a[0] * b[1]) / (h * h) + 4.0 * q * a[0] * b[0] / h3;
        Mat2::new(0.0, 0.0, low, diag)
    }
}

/// Shallow water in surface elevation and depth-averaged velocity, `u = (zeta, v)`,
/// conserving mass `zeta` and momentum `h v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShallowWaterVelocity {
    pub gravity: f64,
    pub rest_depth: f64,
}

impl ShallowWaterVelocity {
    pub fn new(gravity: f64, rest_depth: f64) -> Self {
        Self { gravity, rest_depth }
    }

    pub fn depth(&self, u: Vec2) -> f64 {
        self.rest_depth + u[0]
    }

    /// Speeds `(sqrt(gh) + v, sqrt(gh) - v)`.
    pub fn speeds(&self, u: Vec2) -> (f64, f64) {
        let c = (self.gravity * self.depth(u)).sqrt();
        (c + u[1], c - u[1])
    }
}

impl System for ShallowWaterVelocity {
    fn coefficient(&self, u: Vec2) -> Mat2 {
        Mat2::new(u[1], self.depth(u), self.gravity, u[1])
    }

    fn phase_box(&self) -> PhaseBox {
        PhaseBox {
            lower: Vec2::new(-self.rest_depth, f64::NEG_INFINITY),
            upper: Vec2::new(f64::INFINITY, f64::INFINITY),
        }
    }

    fn flux(&self, u: Vec2) -> Option<Vec2> {
        let h = self.depth(u);
        Some(Vec2::new(h * u[1], h * u[1] * u[1] + 0.5 * self.gravity * h * h))
    }

    fn density(&self, u: Vec2) -> Vec2 {
        Vec2::new(u[0], self.depth(u) * u[1])
    }

    fn density_jacobian(&self, u: Vec2) -> Mat2 {
        Mat2::new(1.0, 0.0, u[1], self.depth(u))
    }

    fn density_inverse(&self, w: Vec2, _guess: Vec2) -> Vec2 {
        Vec2::new(w[0], w[1] / (self.rest_depth + w[0]))
    }

    fn characteristic_variables(&self, u: Vec2, _frozen: Vec2) -> [ScalarWithGradient; 2] {
        let g = self.gravity;
        let h = self.depth(u);
        let shift = 2.0 * ((g * h).sqrt() - (g * self.rest_depth).sqrt());
        let dc = Vec2::new((g / h).sqrt(), 0.0);
        let dv = Vec2::new(0.0, 1.0);
        [(u[1] + shift, dv + dc), (u[1] - shift, dv - dc)]
    }

    fn coefficient_derivative(&self, _u: Vec2, du: Vec2) -> Mat2 {
        Mat2::new(du[1], du[0], 0.0, du[1])
    }

    fn coefficient_second_derivative(&self, _u: Vec2, _a: Vec2, _b: Vec2) -> Mat2 {
        Mat2::zeros()
    }
}

/// Constant-coefficient system `d_t u + A d_x u + B u = 0`, conservative with `f = A u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub a: Mat2,
    pub b: Mat2,
}

impl LinearSystem {
    pub fn new(a: Mat2) -> Self {
        Self { a, b: Mat2::zeros() }
    }

    /// Shallow water linearised about rest in `(zeta, q)`: `A = [[0, 1], [g h0, 0]]`.
    pub fn linearized_shallow_water(gravity: f64, rest_depth: f64) -> Self {
        Self::new(Mat2::new(0.0, 1.0, gravity * rest_depth, 0.0))
    }
}

impl System for LinearSystem {
    fn coefficient(&self, _u: Vec2) -> Mat2 {
        self.a
    }

    fn flux(&self, u: Vec2) -> Option<Vec2> {
        Some(self.a * u)
    }

    fn zeroth_order(&self, _t: f64, _x: f64) -> Mat2 {
        self.b
    }

    fn coefficient_derivative(&self, _u: Vec2, _du: Vec2) -> Mat2 {
        Mat2::zeros()
    }

    fn coefficient_second_derivative(&self, _u: Vec2, _a: Vec2, _b: Vec2) -> Mat2 {
        Mat2::zeros()
    }
}

type VecFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
type MatFn = Arc<dyn Fn(Vec2) -> Mat2 + Send + Sync>;

/// System assembled from user closures.
///
/// Either `coefficient` is given directly, or it is derived from `f0` and `f`
/// by finite differences: `A = f0'(u)^-1 f'(u)`.
#[derive(Clone)]
pub struct GenericSystem {
    coefficient: Option<MatFn>,
    density: Option<VecFn>,
    flux: Option<VecFn>,
    phase_box: PhaseBox,
}

impl fmt::Debug for GenericSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericSystem")
            .field("has_coefficient", &self.coefficient.is_some())
            .field("has_density", &self.density.is_some())
            .field("has_flux", &self.flux.is_some())
            .field("phase_box", &self.phase_box)
            .finish()
    }
}

impl GenericSystem {
    /// Non-conservative system given by its coefficient only.
    pub fn from_coefficient(a: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        Self {
            coefficient: Some(Arc::new(a)),
            density: None,
            flux: None,
            phase_box: PhaseBox::unbounded(),
        }
    }

    /// Conservative system `d_t f0(u) + d_x f(u) = 0`.
    pub fn conservative(
        f0: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
        f: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        Self {
            coefficient: None,
            density: Some(Arc::new(f0)),
            flux: Some(Arc::new(f)),
            phase_box: PhaseBox::unbounded(),
        }
    }

    pub fn with_phase_box(mut self, phase_box: PhaseBox) -> Self {
        self.phase_box = phase_box;
        self
    }
}

/// Central finite-difference Jacobian of a vector field.
pub fn numerical_jacobian(f: &dyn Fn(Vec2) -> Vec2, u: Vec2) -> Mat2 {
    let mut j = Mat2::zeros();
    for k in 0..2 {
        let h = 1e-6 * (1.0 + u[k].abs());
        let mut e = Vec2::zeros();
        e[k] = h;
        let col = (f(u + e) - f(u - e)) / (2.0 * h);
        j.set_column(k, &col);
    }
    j
}

impl System for GenericSystem {
    fn coefficient(&self, u: Vec2) -> Mat2 {
        if let Some(a) = &self.coefficient {
            return a(u);
        }
        let f = self.flux.as_ref().expect("generic system without coefficient or flux");
        let df = numerical_jacobian(&|v| f(v), u);
        let d0 = self.density_jacobian(u);
        d0.try_inverse().map(|inv| inv * df).unwrap_or(df)
    }

    fn phase_box(&self) -> PhaseBox {
        self.phase_box
    }

    fn flux(&self, u: Vec2) -> Option<Vec2> {
        self.flux.as_ref().map(|f| f(u))
    }

    fn density(&self, u: Vec2) -> Vec2 {
        match &self.density {
            Some(f0) => f0(u),
            None => u,
        }
    }

    fn density_jacobian(&self, u: Vec2) -> Mat2 {
        match &self.density {
            Some(f0) => numerical_jacobian(&|v| f0(v), u),
            None => Mat2::identity(),
        }
    }
}

/// Unit right eigenvectors `(e_high, e_low)` of `a` with the crate sign convention.
pub fn right_eigenvectors(a: &Mat2) -> Option<(Vec2, Vec2)> {
    real_spectrum(a).map(|(hi, lo)| {
        (
            canonical_sign(unit_eigenvector(a, hi)),
            canonical_sign(unit_eigenvector(a, lo)),
        )
    })
}
