//! Compatibility conditions at the corner `t = 0`, boundary node, up to order two.
//!
//! Initial data are sampled on nodes with the boundary at one end. Spatial
//! derivatives at a node come from five-point finite-difference formulas; time
//! derivatives of boundary data use five-point central differences. The order-k
//! residual of a boundary condition `c(t, u(t, 0)) = 0` is the k-th time
//! derivative of `c(t, u0 + t u1 + t^2 u2 / 2)` at `t = 0`, where `u1`, `u2`
//! are the time derivatives of the solution given by the equations.

use thiserror::Error;

use crate::front::{InterfaceField, Jet2};
use crate::grid::Side;
use crate::linalg::{jet_at, perp, Mat2, Vec2};
use crate::solver::{BoundaryClosure, BoundaryCondition};
use crate::System;

/// Number of nodes used by the spatial difference formulas.
pub const STENCIL: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatError {
    #[error("{have} nodes supplied, at least {need} are needed")]
    InsufficientStencil { have: usize, need: usize },
    #[error("contact is degenerate: |d_x u - d_x U_i| = {0}")]
    DegenerateContact(f64),
    #[error("coefficient matrix is singular at the boundary")]
    SingularA,
    #[error("compatibility is defined up to order 2, order {0} requested")]
    OrderTooHigh(usize),
}

/// Samples of the initial state with the boundary at the `boundary` end.
#[derive(Debug, Clone, Copy)]
pub struct InitialData<'a> {
    pub x: &'a [f64],
    pub u: &'a [Vec2],
    pub boundary: Side,
}

impl InitialData<'_> {
    fn check(&self) -> Result<(), CompatError> {
        if self.x.len() < STENCIL || self.u.len() != self.x.len() {
            return Err(CompatError::InsufficientStencil { have: self.x.len().min(self.u.len()), need: STENCIL });
        }
        Ok(())
    }

    fn boundary_index(&self) -> usize {
        match self.boundary {
            Side::Left => 0,
            Side::Right => self.x.len() - 1,
        }
    }

    /// `(u, u_x, u_xx)` at node `i` from the five nearest nodes.
    pub fn jet(&self, i: usize) -> [Vec2; 3] {
        let n = self.x.len();
        let start = i.saturating_sub(STENCIL / 2).min(n - STENCIL);
        let xs = &self.x[start..start + STENCIL];
        let ys = &self.u[start..start + STENCIL];
        jet_at(self.x[i], xs, ys)
    }
}

/// Orders `0..=order` of residuals plus the time derivatives of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatReport {
    pub order: usize,
    /// `residuals[k]` is the defect of the order-k identity.
    pub residuals: Vec<f64>,
    /// First and second time derivative of the solution at every node.
    pub u1: Vec<Vec2>,
    pub u2: Vec<Vec2>,
    /// First and second time derivative of the front position, where defined.
    pub xbar1: Option<f64>,
    pub xbar2: Option<f64>,
}

impl CompatReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// First and second derivative of `f` at `t` by five-point central differences.
fn time_derivatives(f: impl Fn(f64) -> f64, t: f64) -> (f64, f64) {
    let h1 = 1e-3;
    let d1 = (f(t - 2.0 * h1) - 8.0 * f(t - h1) + 8.0 * f(t + h1) - f(t + 2.0 * h1)) / (12.0 * h1);
    let h2 = 1e-2;
    let d2 = (-f(t - 2.0 * h2) + 16.0 * f(t - h2) - 30.0 * f(t) + 16.0 * f(t + h2) - f(t + 2.0 * h2)) / (12.0 * h2 * h2);
    (d1, d2)
}

fn vector_time_derivatives(f: impl Fn(f64) -> Vec2, t: f64) -> (Vec2, Vec2) {
    let (a1, a2) = time_derivatives(|s| f(s)[0], t);
    let (b1, b2) = time_derivatives(|s| f(s)[1], t);
    (Vec2::new(a1, b1), Vec2::new(a2, b2))
}

fn space_derivative_matrix(f: impl Fn(f64) -> Mat2, x: f64) -> Mat2 {
    let h = 1e-3 * (1.0 + x.abs());
    (f(x - 2.0 * h) - f(x - h) * 8.0 + f(x + h) * 8.0 - f(x + 2.0 * h)) / (12.0 * h)
}

fn space_derivative_vector(f: impl Fn(f64) -> Vec2, x: f64) -> Vec2 {
    let h = 1e-3 * (1.0 + x.abs());
    (f(x - 2.0 * h) - f(x - h) * 8.0 + f(x + h) * 8.0 - f(x + 2.0 * h)) / (12.0 * h)
}

/// `u1 = -A u_x - B u + f` and `u2 = d_t u1` at node `i`, at time `t0`.
fn fixed_domain_derivatives(sys: &dyn System, data: &InitialData, i: usize, t0: f64) -> (Vec2, Vec2) {
    let [u, ux, uxx] = data.jet(i);
    let x = data.x[i];
    let a = sys.coefficient(u);
    let b = sys.zeroth_order(t0, x);
    let f = sys.source(t0, x);
    let u1 = -a * ux - b * u + f;
    let bx = space_derivative_matrix(|s| sys.zeroth_order(t0, s), x);
    let fx = space_derivative_vector(|s| sys.source(t0, s), x);
    let u1x = -sys.coefficient_derivative(u, ux) * ux - a * uxx - b * ux - bx * u + fx;
    let (ft, _) = vector_time_derivatives(|s| sys.source(s, x), t0);
    let bt = {
        let h = 1e-3;
        (sys.zeroth_order(t0 - 2.0 * h, x) - sys.zeroth_order(t0 - h, x) * 8.0 + sys.zeroth_order(t0 + h, x) * 8.0
            - sys.zeroth_order(t0 + 2.0 * h, x))
            / (12.0 * h)
    };
    let u2 = -sys.coefficient_derivative(u, u1) * ux - a * u1x - b * u1 - bt * u + ft;
    (u1, u2)
}

/// Time derivatives `[u0, u1, u2]` (truncated at `order`) at every node of a fixed domain.
pub fn initial_time_derivatives(sys: &dyn System, data: &InitialData, order: usize) -> Result<Vec<Vec<Vec2>>, CompatError> {
    data.check()?;
    if order > 2 {
        return Err(CompatError::OrderTooHigh(order));
    }
    let (u1, u2): (Vec<Vec2>, Vec<Vec2>) = (0..data.x.len()).map(|i| fixed_domain_derivatives(sys, data, i, 0.0)).unzip();
    let mut out = vec![data.u.to_vec()];
    if order >= 1 {
        out.push(u1);
    }
    if order >= 2 {
        out.push(u2);
    }
    Ok(out)
}

/// Residuals of `closure` along the Taylor curve `u0 + t u1 + t^2 u2 / 2`.
fn closure_residuals(closure: &BoundaryClosure, u0: Vec2, u1: Vec2, u2: Vec2, order: usize) -> Vec<f64> {
    let curve = |t: f64| u0 + u1 * t + u2 * (0.5 * t * t);
    let scalar = |t: f64| -> Option<f64> {
        match closure.at(t) {
            BoundaryCondition::Linear { nu, g } => Some(nu.dot(&curve(t)) - g),
            BoundaryCondition::Nonlinear { phi, g } => Some(phi(curve(t)) - g),
            _ => None,
        }
    };
    if scalar(0.0).is_some() {
        let c = |t: f64| scalar(t).unwrap_or(0.0);
        let (d1, d2) = time_derivatives(c, 0.0);
        return [c(0.0), d1, d2][..=order].to_vec();
    }
    match closure {
        BoundaryClosure::DirichletTrace(trace) => {
            let defect = |t: f64| curve(t) - trace(t);
            let (d1, d2) = vector_time_derivatives(defect, 0.0);
            [defect(0.0).norm(), d1.norm(), d2.norm()][..=order].to_vec()
        }
        _ => vec![0.0; order + 1],
    }
}

/// Parameters of the spring-mounted piston coupled to shallow water in
/// `(zeta, v)` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PistonData {
    pub gravity: f64,
    pub rest_depth: f64,
    pub density: f64,
    pub mass: f64,
    pub stiffness: f64,
    pub equilibrium: f64,
    pub position: f64,
    pub velocity: f64,
    /// Sign in front of the hydrostatic force in Newton's law.
    pub force_sign: f64,
}

impl PistonData {
    /// Acceleration of the piston for a wall elevation `zeta`.
    pub fn acceleration(&self, position: f64, zeta: f64) -> f64 {
        let h0 = self.rest_depth;
        let pressure = 0.5 * self.density * self.gravity * ((h0 + zeta).powi(2) - h0 * h0);
        (-self.stiffness * (position - self.equilibrium) + self.force_sign * pressure) / self.mass
    }
}

/// A problem whose corner compatibility is checked.
pub enum CompatProblem<'a> {
    /// Fixed boundary with a closure.
    Ibvp { sys: &'a dyn System, data: InitialData<'a>, closure: &'a BoundaryClosure },
    /// Kinematic front `xbar' = X(u)` on a Lagrangian grid; no lower-order terms.
    Kinematic { sys: &'a dyn System, data: InitialData<'a>, closure: &'a BoundaryClosure, front_speed: &'a dyn Fn(Vec2) -> f64 },
    /// Contact `u = U_i` at the front; no lower-order terms. With `projection`
    /// the front velocity uses only that component of the contact identity.
    Contact { sys: &'a dyn System, data: InitialData<'a>, interface: &'a dyn InterfaceField, c0: f64, projection: Option<Vec2> },
    /// Piston in `(zeta, v)` variables with the wall at the boundary node.
    Piston { data: InitialData<'a>, piston: PistonData },
}

fn gradient(f: &dyn Fn(Vec2) -> f64, u: Vec2) -> Vec2 {
    let h = [1e-6 * (1.0 + u[0].abs()), 1e-6 * (1.0 + u[1].abs())];
    let e0 = Vec2::new(h[0], 0.0);
    let e1 = Vec2::new(0.0, h[1]);
    Vec2::new((f(u + e0) - f(u - e0)) / (2.0 * h[0]), (f(u + e1) - f(u - e1)) / (2.0 * h[1]))
}

struct ContactCorner {
    d: Vec2,
    identity_rhs: Vec2,
    xbar1: f64,
    u_t: Vec2,
    u_x: Vec2,
    u_xx: Vec2,
    jet: Jet2,
    a: Mat2,
}

fn contact_corner(sys: &dyn System, data: &InitialData, interface: &dyn InterfaceField, c0: f64, projection: Option<Vec2>) -> Result<ContactCorner, CompatError> {
    let i = data.boundary_index();
    let [u, u_x, u_xx] = data.jet(i);
    let jet = interface.jet(0.0, data.x[i]);
    let a = sys.coefficient(u);
    let d = u_x - jet.x;
    if !(d.norm() >= c0) {
        return Err(CompatError::DegenerateContact(d.norm()));
    }
    let identity_rhs = a * u_x + jet.t;
    let xbar1 = match projection {
        Some(mu) => {
            let den = mu.dot(&d);
            if !(den.abs() >= c0) {
                return Err(CompatError::DegenerateContact(den.abs()));
            }
            mu.dot(&identity_rhs) / den
        }
        None => d.dot(&identity_rhs) / d.norm_squared(),
    };
    Ok(ContactCorner { d, identity_rhs, xbar1, u_t: -a * u_x, u_x, u_xx, jet, a })
}

/// Compatibility residuals of `problem` up to `order`.
pub fn check_compatibility(problem: &CompatProblem, order: usize) -> Result<CompatReport, CompatError> {
    if order > 2 {
        return Err(CompatError::OrderTooHigh(order));
    }
    match problem {
        CompatProblem::Ibvp { sys, data, closure } => {
            let derivatives = initial_time_derivatives(*sys, data, 2)?;
            let i = data.boundary_index();
            let residuals = closure_residuals(closure, data.u[i], derivatives[1][i], derivatives[2][i], order);
            Ok(CompatReport {
                order,
                residuals,
                u1: derivatives[1].clone(),
                u2: derivatives[2].clone(),
                xbar1: None,
                xbar2: None,
            })
        }
        CompatProblem::Kinematic { sys, data, closure, front_speed } => {
            data.check()?;
            let mut u1 = Vec::with_capacity(data.x.len());
            let mut u2 = Vec::with_capacity(data.x.len());
            for k in 0..data.x.len() {
                let [u, ux, uxx] = data.jet(k);
                let a = sys.coefficient(u);
                let speed = front_speed(u);
                let grad = gradient(front_speed, u);
                let moving = a - Mat2::identity() * speed;
                let v1 = -moving * ux;
                let phi_tt = grad.dot(&v1);
                let phi_xt = grad.dot(&ux);
                let d_t_moving = sys.coefficient_derivative(u, v1) - Mat2::identity() * phi_tt - moving * phi_xt;
                let v1x = -(sys.coefficient_derivative(u, ux) - Mat2::identity() * grad.dot(&ux)) * ux - moving * uxx;
                u1.push(v1);
                u2.push(-d_t_moving * ux - moving * v1x);
            }
            let i = data.boundary_index();
            let residuals = closure_residuals(closure, data.u[i], u1[i], u2[i], order);
            let grad = gradient(front_speed, data.u[i]);
            Ok(CompatReport {
                order,
                residuals,
                xbar1: Some(front_speed(data.u[i])),
                xbar2: Some(grad.dot(&u1[i])),
                u1,
                u2,
            })
        }
        CompatProblem::Contact { sys, data, interface, c0, projection } => {
            data.check()?;
            let c = contact_corner(*sys, data, *interface, *c0, *projection)?;
            let i = data.boundary_index();
            let mut residuals = vec![(data.u[i] - c.jet.value).norm()];
            if order >= 1 {
                residuals.push(perp(c.d).dot(&c.identity_rhs));
            }
            let (xbar2, u2) = {
                let xdot = c.xbar1;
                let u_xt = -sys.coefficient_derivative(data.u[i], c.u_x) * c.u_x - c.a * c.u_xx;
                let u_tt = -sys.coefficient_derivative(data.u[i], c.u_t) * c.u_x - c.a * u_xt;
                let rhs = (c.jet.tt + c.jet.tx * (2.0 * xdot) + c.jet.xx * (xdot * xdot))
                    - (u_tt + u_xt * (2.0 * xdot) + c.u_xx * (xdot * xdot));
                if order >= 2 {
                    residuals.push(perp(c.d).dot(&rhs));
                }
                (c.d.dot(&rhs) / c.d.norm_squared(), u_tt)
            };
            let (u1, mut u2_field): (Vec<Vec2>, Vec<Vec2>) = (0..data.x.len()).map(|k| fixed_domain_derivatives(*sys, data, k, 0.0)).unzip();
            u2_field[i] = u2;
            Ok(CompatReport { order, residuals, u1, u2: u2_field, xbar1: Some(c.xbar1), xbar2: Some(xbar2) })
        }
        CompatProblem::Piston { data, piston } => {
            data.check()?;
            let i = data.boundary_index();
            let [u, ux, uxx] = data.jet(i);
            let g = piston.gravity;
            let h = piston.rest_depth + u[0];
            let xbar2 = piston.acceleration(piston.position, u[0]);
            let zeta1 = -h * ux[1];
            let v1 = -g * ux[0];
            let v2 = g * (2.0 * ux[0] * ux[1] + h * uxx[1]);
            let xbar3 = (-piston.stiffness * piston.velocity
                + piston.force_sign * piston.density * g * h * zeta1)
                / piston.mass;
            let residuals = [u[1] - piston.velocity, v1 - xbar2, v2 - xbar3][..=order].to_vec();
            let mut u1 = Vec::with_capacity(data.x.len());
            for k in 0..data.x.len() {
                let [w, wx, _] = data.jet(k);
                u1.push(Vec2::new(-(piston.rest_depth + w[0]) * wx[1], -g * wx[0]));
            }
            let mut u2 = vec![Vec2::zeros(); data.x.len()];
            u2[i] = Vec2::new(f64::NAN, v2);
            Ok(CompatReport { order, residuals, u1, u2, xbar1: Some(piston.velocity), xbar2: Some(xbar2) })
        }
    }
}

/// Initial front velocity and, where defined, acceleration.
pub fn initial_front_velocity(problem: &CompatProblem) -> Result<(f64, Option<f64>), CompatError> {
    let report = check_compatibility(problem, 0)?;
    match problem {
        CompatProblem::Contact { .. } | CompatProblem::Kinematic { .. } | CompatProblem::Piston { .. } => {
            let full = check_compatibility(problem, 2)?;
            Ok((full.xbar1.unwrap_or(0.0), full.xbar2))
        }
        CompatProblem::Ibvp { .. } => Ok((report.xbar1.unwrap_or(0.0), None)),
    }
}
