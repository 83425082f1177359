//! Free boundaries: kinematic fronts `xbar' = X(u|front)` and fully nonlinear
//! contacts `u|front = U_i(t, xbar)`.
//!
//! The contact speed follows from differentiating the contact condition along
//! the front: with `d = d_x u - d_x U_i`,
//! `xbar' d = d_t U_i - d_t u`, whose component along `d` gives
//! `chi = -d . (d_t u - d_t U_i) / |d|^2`. The second derivative of the same
//! identity yields the second-order quantities of [`SecondOrderData`].

use std::sync::Arc;

use thiserror::Error;

use crate::grid::{GridError, MovingGrid, Side};
use crate::hyperbolic::{AlgebraError, EigenStructure};
use crate::linalg::{canonical_sign, jet_at, perp, Mat2, Vec2};
use crate::solver::{
    apply_boundary, cell_states, evaluate_rates, extrapolate_to_end, heun_step, BoundaryClosure, BoundaryCondition,
    CoupledRates, CoupledState, Domain, SolverError, DEFAULT_CFL,
};
use crate::transmission::Regime;
use crate::System;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontError {
    #[error("contact is degenerate: |d_x u - d_x U_i| = {0}")]
    DegenerateContact(f64),
    #[error("coefficient matrix is singular at the front trace")]
    SingularA,
    #[error("front lost subsonicity: margins {plus} and {minus}")]
    SubsonicityLoss { plus: f64, minus: f64 },
    #[error("|nu2 . e+| = {0} fell below the Lopatinskii threshold")]
    Nu2LopatinskiLoss(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Value of a field and its space-time derivatives up to order two at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: Vec2,
    pub t: Vec2,
    pub x: Vec2,
    pub tt: Vec2,
    pub tx: Vec2,
    pub xx: Vec2,
}

/// A prescribed field `U_i(t, x)` on the other side of a contact.
pub trait InterfaceField: Send + Sync {
    fn value(&self, t: f64, x: f64) -> Vec2;

    /// Derivatives by fourth-order central differences; override when known.
    fn jet(&self, t: f64, x: f64) -> Jet2 {
        let ht = 1e-3 * (1.0 + t.abs());
        let hx = 1e-3 * (1.0 + x.abs());
        let f = |a: f64, b: f64| self.value(t + a * ht, x + b * hx);
        let d1 = |g: &dyn Fn(f64) -> Vec2, h: f64| (g(-2.0) - g(-1.0) * 8.0 + g(1.0) * 8.0 - g(2.0)) / (12.0 * h);
        let d2 = |g: &dyn Fn(f64) -> Vec2, h: f64| {
            (-g(-2.0) + g(-1.0) * 16.0 - g(0.0) * 30.0 + g(1.0) * 16.0 - g(2.0)) / (12.0 * h * h)
        };
        let x_derivative_at = |a: f64| d1(&|b| f(a, b), hx);
        Jet2 {
            value: f(0.0, 0.0),
            t: d1(&|a| f(a, 0.0), ht),
            x: x_derivative_at(0.0),
            tt: d2(&|a| f(a, 0.0), ht),
            tx: d1(&x_derivative_at, ht),
            xx: d2(&|b| f(0.0, b), hx),
        }
    }
}

/// Interface field given by a closure.
pub struct FnInterface<F>(pub F);

impl<F: Fn(f64, f64) -> Vec2 + Send + Sync> InterfaceField for FnInterface<F> {
    fn value(&self, t: f64, x: f64) -> Vec2 {
        (self.0)(t, x)
    }
}

/// Speed of a contact together with a flag raised when the denominator was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSpeed {
    pub chi: f64,
    pub clamped: bool,
}

fn clamp_denominator(denominator: f64, magnitude: f64, c0: f64) -> Result<(f64, bool), FrontError> {
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return Err(FrontError::DegenerateContact(magnitude));
    }
    if magnitude < c0 {
        let floor = 0.25 * c0 * c0;
        let value = if denominator.abs() < floor { floor.copysign(denominator) } else { denominator };
        Ok((value, true))
    } else {
        Ok((denominator, false))
    }
}

/// `chi = -d . (u_t - U_i,t) / |d|^2` with `d = u_x - U_i,x`.
///
/// When `|d| < c0` the squared norm is floored at `c0^2 / 4` and the result flagged.
pub fn contact_speed(u_t: Vec2, u_x: Vec2, ui_t: Vec2, ui_x: Vec2, c0: f64) -> Result<ContactSpeed, FrontError> {
    let d = u_x - ui_x;
    let (den, clamped) = clamp_denominator(d.norm_squared(), d.norm(), c0)?;
    Ok(ContactSpeed { chi: -d.dot(&(u_t - ui_t)) / den, clamped })
}

/// Contact speed from the single component `mu` of the contact identity:
/// `chi = -mu . (u_t - U_i,t) / mu . d`.
pub fn contact_speed_projected(
    mu: Vec2,
    u_t: Vec2,
    u_x: Vec2,
    ui_t: Vec2,
    ui_x: Vec2,
    c0: f64,
) -> Result<ContactSpeed, FrontError> {
    let d = u_x - ui_x;
    let den = mu.dot(&d);
    let (den, clamped) = clamp_denominator(den, den.abs(), c0)?;
    Ok(ContactSpeed { chi: -mu.dot(&(u_t - ui_t)) / den, clamped })
}

/// Second-order contact quantities at a front trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderData {
    /// Second time derivative of the solution at the front.
    pub u2: Vec2,
    /// Boundary row `((Id - xdot A^-1)^2)^T d_perp` of the second-order problem.
    pub nu2: Vec2,
    /// Boundary datum `d_perp . g1`.
    pub g2: f64,
    pub g1: Vec2,
    /// Front acceleration.
    pub chi2: f64,
    /// Unit vector orthogonal to `d_t U_i + A(U_i) d_x U_i`, when that vector is not negligible.
    pub mu: Option<Vec2>,
    /// Defect `|(xdot Id - A) d - (d_t U_i + A d_x U_i)|` of the first-order contact identity.
    pub rel1_residual: f64,
}

/// Unit vector orthogonal to `r`, or `None` when `|r| <= 1e-8`.
pub fn orthogonal_direction(r: Vec2) -> Option<Vec2> {
    let n = r.norm();
    (n > 1e-8).then(|| canonical_sign(perp(r) / n))
}

/// Second-order data at a front where the solution has jet `(u, u_x, u_xx)`,
/// the interface field has jet `ui` and the front moves at `xdot`.
pub fn second_order_data(
    sys: &dyn System,
    u: Vec2,
    u_x: Vec2,
    u_xx: Vec2,
    ui: &Jet2,
    xdot: f64,
    c0: f64,
) -> Result<SecondOrderData, FrontError> {
    let a = sys.coefficient(u);
    let a_inv = a.try_inverse().ok_or(FrontError::SingularA)?;
    let id = Mat2::identity();
    let u_t = -a * u_x;
    let u_xt = -sys.coefficient_derivative(u, u_x) * u_x - a * u_xx;
    let u_tt = -sys.coefficient_derivative(u, u_t) * u_x - a * u_xt;
    let d = u_x - ui.x;
    let (den, _) = clamp_denominator(d.norm_squared(), d.norm(), c0)?;
    let interface_part = ui.tt + ui.tx * (2.0 * xdot) + ui.xx * (xdot * xdot);
    let g1 = (a_inv * (2.0 * xdot) - a_inv * a_inv * (xdot * xdot)) * sys.coefficient_derivative(u, u_t) * u_x
        + a_inv * sys.coefficient_derivative(u, u_x) * u_x * (xdot * xdot)
        + interface_part;
    let reduction = (id - a_inv * xdot) * (id - a_inv * xdot);
    let chi2 = d.dot(&(g1 - reduction * u_tt)) / den;
    let nu2 = reduction.transpose() * perp(d);
    let g2 = perp(d).dot(&g1);
    let a_i = sys.coefficient(ui.value);
    let r = ui.t + a_i * ui.x;
    let rel1_residual = ((id * xdot - a) * d - r).norm();
    Ok(SecondOrderData { u2: u_tt, nu2, g2, g1, chi2, mu: orthogonal_direction(r), rel1_residual })
}

/// Which evolution law a front follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontMode {
    Kinematic,
    Contact,
    ContactWithOde,
}

/// Position and velocity of a tracked front plus its latest diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontState {
    pub xbar: f64,
    pub xbar_dot: f64,
    pub mode: FrontMode,
    pub regime: Option<Regime>,
    pub mu: Option<Vec2>,
    pub nu2: Option<Vec2>,
    pub clamped: bool,
}

impl FrontState {
    pub fn new(xbar: f64, xbar_dot: f64, mode: FrontMode) -> Self {
        Self { xbar, xbar_dot, mode, regime: None, mu: None, nu2: None, clamped: false }
    }
}

/// Trapezoidal update of a kinematic front from the front speeds at the start
/// and end of the step.
pub fn kinematic_advance(front: &FrontState, speed_start: f64, speed_end: f64, dt: f64) -> FrontState {
    FrontState { xbar: front.xbar + 0.5 * dt * (speed_start + speed_end), xbar_dot: speed_end, ..*front }
}

/// First and second spatial derivative at the end node `face` of a domain from
/// the boundary value there and the three nearest cell values.
pub fn end_derivatives(faces: &[f64], states: &[Vec2], side: Side, boundary_value: Vec2) -> (Vec2, Vec2) {
    let n = states.len();
    let (face, cells) = match side {
        Side::Left => (faces[0], [0, 1, 2]),
        Side::Right => (faces[n], [n - 1, n - 2, n - 3]),
    };
    let center = |j: usize| 0.5 * (faces[j] + faces[j + 1]);
    let xs = [face, center(cells[0]), center(cells[1]), center(cells[2])];
    let ys = [boundary_value, states[cells[0]], states[cells[1]], states[cells[2]]];
    let [_, d1, d2] = jet_at(face, &xs, &ys);
    (d1, d2)
}

fn end_index(n_faces: usize, side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => n_faces - 1,
    }
}

fn subsonic_margins(sys: &dyn System, u: Vec2, xdot: f64, c0: f64) -> Result<(), FrontError> {
    let es = EigenStructure::from_matrix(&sys.coefficient(u))?;
    let plus = es.lambda_plus - xdot;
    let minus = es.lambda_minus + xdot;
    if plus < c0 || minus < c0 {
        Err(FrontError::SubsonicityLoss { plus, minus })
    } else {
        Ok(())
    }
}

/// Kinematic front law and the data it is coupled with.
pub trait KinematicModel: Send + Sync {
    /// Front velocity `X(u)` as a function of the state; also the node velocity field.
    fn front_speed(&self, u: Vec2) -> f64;
    /// Boundary condition at the front at time `t` given the ODE state.
    fn closure(&self, t: f64, ode: &[f64]) -> BoundaryCondition;
    /// Right-hand side of the coupled ODE given the front trace.
    fn ode_rate(&self, _t: f64, _ode: &[f64], _trace: Vec2) -> Vec<f64> {
        Vec::new()
    }
}

/// Front on a Lagrangian grid whose nodes move with `X(u)`.
pub struct KinematicDriver<M: KinematicModel> {
    pub domain: Domain,
    pub model: M,
    pub far: BoundaryClosure,
    pub ode: Vec<f64>,
    pub t: f64,
    pub cfl: f64,
    pub front: FrontState,
    /// Front traces `(t, u)` seen at the two stages of the last step.
    pub stage_traces: Vec<(f64, Vec2)>,
}

impl<M: KinematicModel> KinematicDriver<M> {
    pub fn new(domain: Domain, model: M, far: BoundaryClosure, ode: Vec<f64>) -> Self {
        let xbar = domain.grid.front_position();
        Self {
            domain,
            model,
            far,
            ode,
            t: 0.0,
            cfl: DEFAULT_CFL,
            front: FrontState::new(xbar, 0.0, FrontMode::Kinematic),
            stage_traces: Vec::new(),
        }
    }

    fn node_velocities(&self, faces: &[f64], content: &[Vec2], t: f64, ode: &[f64]) -> Result<(Vec<f64>, Vec2), FrontError> {
        let sys = self.domain.system.as_ref();
        let side = self.domain.grid.front_side;
        let states = cell_states(sys, self.domain.conservative, faces, content);
        let centers: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let n = states.len();
        let mut v = Vec::with_capacity(n + 1);
        let ends = [
            extrapolate_to_end(&centers, &states, faces[0], Side::Left),
            extrapolate_to_end(&centers, &states, faces[n], Side::Right),
        ];
        v.push(self.model.front_speed(ends[0]));
        for j in 1..n {
            v.push(self.model.front_speed(0.5 * (states[j - 1] + states[j])));
        }
        v.push(self.model.front_speed(ends[1]));
        let (fi, ext) = match side {
            Side::Left => (0, ends[0]),
            Side::Right => (n, ends[1]),
        };
        let trace = apply_boundary(sys, side, &self.model.closure(t, ode), ext, v[fi])
            .map_err(|e| self.subsonicity(e))?
            .state;
        v[fi] = self.model.front_speed(trace);
        Ok((v, trace))
    }

    fn subsonicity(&self, e: SolverError) -> FrontError {
        match e {
            SolverError::WrongCharacteristicCount { high, low, .. } => FrontError::SubsonicityLoss { plus: high, minus: -low },
            other => FrontError::Solver(other),
        }
    }

    pub fn stable_dt(&self) -> Result<f64, FrontError> {
        let (v, _) = self.node_velocities(&self.domain.grid.phi, &self.domain.content, self.t, &self.ode)?;
        Ok(self.domain.stable_dt(&v, self.cfl))
    }

    pub fn step(&mut self, dt: Option<f64>) -> Result<f64, FrontError> {
        let dt = match dt {
            Some(dt) => dt,
            None => self.stable_dt()?,
        };
        let side = self.domain.grid.front_side;
        let sys = Arc::clone(&self.domain.system);
        let conservative = self.domain.conservative;
        let start = CoupledState { t: self.t, domains: vec![self.domain.snapshot()], ode: self.ode.clone() };
        let mut traces = Vec::new();
        let mut last_velocity = Vec::new();
        let (next, _) = heun_step(&start, dt, |s| {
            let d = &s.domains[0];
            let (v, trace) = self.node_velocities(&d.faces, &d.content, s.t, &s.ode)?;
            let front_bc = self.model.closure(s.t, &s.ode);
            let far_bc = self.far.at(s.t);
            let (left, right) = match side {
                Side::Left => (&front_bc, &far_bc),
                Side::Right => (&far_bc, &front_bc),
            };
            let r = evaluate_rates(sys.as_ref(), conservative, &d.faces, &v, &d.content, s.t, left, right)
                .map_err(|e| self.subsonicity(e))?;
            traces.push((s.t, trace));
            let ode = self.model.ode_rate(s.t, &s.ode, trace);
            last_velocity.clone_from(&v);
            Ok::<_, FrontError>(CoupledRates { face_velocity: vec![v], content: vec![r.content], ode })
        })?;
        self.domain.restore(&next.domains[0], &last_velocity)?;
        self.ode = next.ode;
        self.t = next.t;
        self.stage_traces = traces;
        let (v, trace) = self.node_velocities(&self.domain.grid.phi, &self.domain.content, self.t, &self.ode)?;
        self.domain.grid.phi_t.clone_from(&v);
        let fi = end_index(v.len(), side);
        self.front.xbar = self.domain.grid.phi[fi];
        self.front.xbar_dot = v[fi];
        let _ = trace;
        Ok(dt)
    }

    /// Front trace of the current solution.
    pub fn trace(&self) -> Result<Vec2, FrontError> {
        Ok(self.node_velocities(&self.domain.grid.phi, &self.domain.content, self.t, &self.ode)?.1)
    }
}

/// Interface data of a contact, possibly driven by an ODE state `W`.
pub trait ContactModel: Send + Sync {
    fn ode_dim(&self) -> usize {
        0
    }
    /// Jet of `U_i` at `(t, x)` for the ODE state `ode`.
    fn interface(&self, t: f64, x: f64, ode: &[f64]) -> Jet2;
    fn ode_rate(&self, _t: f64, _xbar: f64, _ode: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: InterfaceField> ContactModel for F {
    fn interface(&self, t: f64, x: f64, _ode: &[f64]) -> Jet2 {
        self.jet(t, x)
    }
}

/// Evolution law of a contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactLaw {
    /// `xbar' = chi`.
    FirstOrder,
    /// `xbar'' = chi2` with the velocity carried as an extra unknown.
    SecondOrder,
}

/// Running diagnostics of a contact driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactMonitors {
    pub clamped_steps: usize,
    pub min_nu2_lopatinskii: f64,
    pub max_rel1_residual: f64,
    pub max_dirichlet_defect: f64,
}

/// Contact front on a cutoff grid with a Dirichlet trace closure.
pub struct ContactDriver<M: ContactModel> {
    pub domain: Domain,
    pub model: M,
    pub far: BoundaryClosure,
    pub law: ContactLaw,
    /// Coupled ODE state of the interface model.
    pub ode: Vec<f64>,
    pub t: f64,
    pub cfl: f64,
    /// Threshold for the degeneracy, subsonicity and Lopatinskii monitors.
    pub c0: f64,
    pub front: FrontState,
    pub monitors: ContactMonitors,
}

struct ContactStage {
    xdot: f64,
    xddot: f64,
    clamped: bool,
    data: Option<SecondOrderData>,
    trace: Vec2,
}

impl<M: ContactModel> ContactDriver<M> {
    pub fn new(domain: Domain, model: M, far: BoundaryClosure, law: ContactLaw, ode: Vec<f64>, c0: f64) -> Result<Self, FrontError> {
        assert_eq!(ode.len(), model.ode_dim());
        let xbar = domain.grid.front_position();
        let mode = if ode.is_empty() { FrontMode::Contact } else { FrontMode::ContactWithOde };
        let mut driver = Self {
            domain,
            model,
            far,
            law,
            ode,
            t: 0.0,
            cfl: DEFAULT_CFL,
            c0,
            front: FrontState::new(xbar, 0.0, mode),
            monitors: ContactMonitors {
                clamped_steps: 0,
                min_nu2_lopatinskii: f64::INFINITY,
                max_rel1_residual: 0.0,
                max_dirichlet_defect: 0.0,
            },
        };
        let stage = driver.stage(&driver.domain.grid.phi.clone(), &driver.domain.content.clone(), 0.0, &driver.ode.clone(), None)?;
        driver.front.xbar_dot = stage.xdot;
        Ok(driver)
    }

    fn stage(&self, faces: &[f64], content: &[Vec2], t: f64, ode: &[f64], xdot: Option<f64>) -> Result<ContactStage, FrontError> {
        let sys = self.domain.system.as_ref();
        let side = self.domain.grid.front_side;
        let fi = end_index(faces.len(), side);
        let xbar = faces[fi];
        let jet = self.model.interface(t, xbar, ode);
        let states = cell_states(sys, self.domain.conservative, faces, content);
        let (u_x, u_xx) = end_derivatives(faces, &states, side, jet.value);
        let u_t = -sys.coefficient(jet.value) * u_x;
        let first = contact_speed(u_t, u_x, jet.t, jet.x, self.c0)?;
        let xdot = xdot.unwrap_or(first.chi);
        let data = second_order_data(sys, jet.value, u_x, u_xx, &jet, xdot, self.c0).ok();
        let xddot = data.map_or(0.0, |d| d.chi2);
        Ok(ContactStage { xdot, xddot, clamped: first.clamped, data, trace: jet.value })
    }

    fn split_ode<'a>(&self, ode: &'a [f64]) -> (Option<f64>, &'a [f64]) {
        match self.law {
            ContactLaw::FirstOrder => (None, ode),
            ContactLaw::SecondOrder => (Some(ode[0]), &ode[1..]),
        }
    }

    pub fn stable_dt(&self) -> f64 {
        let v = self.domain.grid.cutoff_velocities(self.front.xbar_dot);
        self.domain.stable_dt(&v, self.cfl)
    }

    pub fn step(&mut self, dt: Option<f64>) -> Result<f64, FrontError> {
        let dt = dt.unwrap_or_else(|| self.stable_dt());
        let side = self.domain.grid.front_side;
        let sys = Arc::clone(&self.domain.system);
        let conservative = self.domain.conservative;
        let grid: MovingGrid = self.domain.grid.clone();
        let mut ode0 = Vec::new();
        if self.law == ContactLaw::SecondOrder {
            ode0.push(self.front.xbar_dot);
        }
        ode0.extend_from_slice(&self.ode);
        let start = CoupledState { t: self.t, domains: vec![self.domain.snapshot()], ode: ode0 };
        let mut defect: f64 = 0.0;
        let (next, _) = heun_step(&start, dt, |s| {
            let d = &s.domains[0];
            let (xdot_state, model_ode) = self.split_ode(&s.ode);
            let stage = self.stage(&d.faces, &d.content, s.t, model_ode, xdot_state)?;
            let v = grid.cutoff_velocities(stage.xdot);
            let front_bc = BoundaryCondition::Dirichlet(stage.trace);
            let far_bc = self.far.at(s.t);
            let (left, right) = match side {
                Side::Left => (&front_bc, &far_bc),
                Side::Right => (&far_bc, &front_bc),
            };
            let r = evaluate_rates(sys.as_ref(), conservative, &d.faces, &v, &d.content, s.t, left, right)?;
            defect = defect.max(match side {
                Side::Left => r.left.residual,
                Side::Right => r.right.residual,
            });
            let xbar = d.faces[end_index(d.faces.len(), side)];
            let mut ode = Vec::new();
            if self.law == ContactLaw::SecondOrder {
                ode.push(stage.xddot);
            }
            ode.extend(self.model.ode_rate(s.t, xbar, model_ode));
            Ok::<_, FrontError>(CoupledRates { face_velocity: vec![v], content: vec![r.content], ode })
        })?;
        let fi = end_index(next.domains[0].faces.len(), side);
        let xbar = next.domains[0].faces[fi];
        self.domain.content = next.domains[0].content.clone();
        let (xdot_state, model_ode) = self.split_ode(&next.ode);
        self.ode = model_ode.to_vec();
        self.t = next.t;
        let stage = self.stage(&next.domains[0].faces, &self.domain.content, self.t, &self.ode, xdot_state)?;
        self.domain.grid = self.domain.grid.set_cutoff(xbar, stage.xdot)?;
        self.front.xbar = xbar;
        self.front.xbar_dot = stage.xdot;
        self.front.clamped = stage.clamped;
        self.monitors.max_dirichlet_defect = self.monitors.max_dirichlet_defect.max(defect);
        if stage.clamped {
            self.monitors.clamped_steps += 1;
        }
        subsonic_margins(sys.as_ref(), stage.trace, stage.xdot, self.c0)?;
        if let Some(data) = stage.data {
            self.front.mu = data.mu;
            self.front.nu2 = Some(data.nu2);
            let es = EigenStructure::from_matrix(&sys.coefficient(stage.trace))?;
            let lop = data.nu2.dot(&es.e_plus).abs();
            self.monitors.min_nu2_lopatinskii = self.monitors.min_nu2_lopatinskii.min(lop);
            self.monitors.max_rel1_residual = self.monitors.max_rel1_residual.max(data.rel1_residual);
            if lop < self.c0 {
                return Err(FrontError::Nu2LopatinskiLoss(lop));
            }
        }
        Ok(dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use crate::LinearSystem;

    #[test]
    fn equal_time_derivatives_give_a_still_contact() {
        let s = contact_speed(Vec2::new(0.3, 0.1), Vec2::new(1.0, 0.0), Vec2::new(0.3, 0.1), Vec2::new(0.0, 2.0), 1e-6).unwrap();
        assert_eq!(s.chi, 0.0);
        assert!(!s.clamped);
    }

    #[test]
    fn traveling_kink_moves_at_its_speed() {
        // U - U_i = (a (x - x0 - c t), 0).
        let (a, c) = (2.0, 0.3);
        let u_x = Vec2::new(0.5, 1.0);
        let ui_x = u_x - Vec2::new(a, 0.0);
        let u_t = Vec2::new(-0.2, 0.4);
        let ui_t = u_t + Vec2::new(a * c, 0.0);
        let s = contact_speed(u_t, u_x, ui_t, ui_x, 1e-6).unwrap();
        assert!((s.chi - c).abs() < 1e-14);
    }

    #[test]
    fn vanishing_jump_is_degenerate_and_small_jump_is_clamped() {
        let z = Vec2::zeros();
        assert!(matches!(contact_speed(z, z, z, z, 1e-3), Err(FrontError::DegenerateContact(_))));
        let s = contact_speed(z, Vec2::new(1e-4, 0.0), Vec2::new(1.0, 0.0), z, 1e-3).unwrap();
        assert!(s.clamped);
        assert!((s.chi - 1e-4 / 0.25e-6).abs() < 1e-6);
    }

    #[test]
    fn second_order_data_at_rest() {
        let sys = LinearSystem::linearized_shallow_water(1.0, 1.0);
        let ui = Jet2 { value: Vec2::zeros(), x: Vec2::new(0.5, 0.0), ..Jet2::default() };
        let data = second_order_data(&sys, Vec2::zeros(), Vec2::zeros(), Vec2::zeros(), &ui, 0.0, 1e-6).unwrap();
        assert_eq!(data.u2, Vec2::zeros());
        assert_eq!(data.chi2, 0.0);
        assert_eq!(data.g1, Vec2::zeros());
        assert!((data.nu2 - perp(-ui.x)).norm() < 1e-15);
    }

    #[test]
    fn second_order_identity_recovers_acceleration() {
        // For a linear system the contact acceleration solves
        // (Id - xdot A^-1)^2 u_tt + xddot d = g1 exactly.
        let sys = LinearSystem::new(Mat2::new(0.2, 1.0, 1.5, -0.1));
        let a = sys.a;
        let u_x = Vec2::new(0.3, -0.7);
        let u_xx = Vec2::new(1.1, 0.4);
        let ui = Jet2 {
            value: Vec2::new(0.1, 0.2),
            t: Vec2::new(0.0, 0.3),
            x: Vec2::new(-0.4, 0.9),
            tt: Vec2::new(0.5, -0.2),
            tx: Vec2::new(0.1, 0.1),
            xx: Vec2::new(-0.3, 0.6),
        };
        let xdot = 0.25;
        let data = second_order_data(&sys, ui.value, u_x, u_xx, &ui, xdot, 1e-6).unwrap();
        let a_inv = a.try_inverse().unwrap();
        let red = (Mat2::identity() - a_inv * xdot).pow(2);
        let d = u_x - ui.x;
        let lhs_perp = perp(d).dot(&(red * data.u2));
        assert!((data.nu2.dot(&data.u2) - lhs_perp).abs() < 1e-13);
        let resid = red * data.u2 + d * data.chi2 - data.g1;
        assert!(d.dot(&resid).abs() < 1e-12);
    }
}
