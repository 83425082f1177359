//! Finite-volume stepper on moving grids with characteristic boundary closures.
//!
//! Cells sit between the nodes of a [`MovingGrid`]. Conservative systems store
//! the cell content `w_j f0(u_j)` (cell width times conserved density) and use
//! the moving-frame flux `f(u) - sigma f0(u)`; other systems store `u_j` and
//! use a fluctuation splitting of `A(u) - sigma Id`. Node positions and cell
//! contents are advanced together by Heun's method, which keeps constant states
//! exact on moving grids.
//!
//! At each end one boundary state is computed by Newton's method from the
//! closure and the outgoing characteristic variable extrapolated from the
//! interior. The boundary state enters through the boundary flux and through a
//! mirrored ghost value used by the minmod reconstruction.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grid::{GridError, MovingGrid, Side};
use crate::linalg::{minmod2, real_spectrum, spectral_abs, spectral_radius, Mat2, Vec2};
use crate::System;

pub const DEFAULT_CFL: f64 = 0.45;
pub const NEWTON_TOLERANCE: f64 = 1e-12;
pub const NEWTON_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("time step {dt} exceeds the CFL limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("cell {cell} left the admissible box at t = {t}: {state:?}")]
    PhaseBoxExit { cell: usize, t: f64, state: [f64; 2] },
    #[error("{side:?} boundary needs exactly one incoming characteristic, relative speeds are {high} and {low}")]
    WrongCharacteristicCount { side: Side, high: f64, low: f64 },
    #[error("boundary Newton iteration failed, residual {residual:e}")]
    NewtonDivergence { residual: f64 },
    #[error("coefficient matrix is not strictly hyperbolic at {0:?}")]
    NotHyperbolic([f64; 2]),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type TimeScalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TimeVector = Arc<dyn Fn(f64) -> Vec2 + Send + Sync>;
pub type StateScalar = Arc<dyn Fn(f64, Vec2) -> f64 + Send + Sync>;

/// Boundary condition frozen at one instant.
#[derive(Clone)]
pub enum BoundaryCondition {
    /// `nu . u = g`.
    Linear { nu: Vec2, g: f64 },
    /// `phi(u) = g` with `phi` differentiated numerically.
    Nonlinear { phi: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>, g: f64 },
    /// `u = trace`; the outgoing defect is reported, not enforced.
    Dirichlet(Vec2),
    /// Incoming characteristic variables taken from `reference`, or extrapolated
    /// from the interior when `reference` is `None`.
    Transparent { reference: Option<Vec2> },
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { nu, g } => write!(f, "Linear {{ nu: {:?}, g: {g} }}", [nu[0], nu[1]]),
            Self::Nonlinear { g, .. } => write!(f, "Nonlinear {{ g: {g} }}"),
            Self::Dirichlet(u) => write!(f, "Dirichlet({:?})", [u[0], u[1]]),
            Self::Transparent { reference } => write!(f, "Transparent {{ reference: {reference:?} }}"),
        }
    }
}

/// Time-dependent boundary closure.
#[derive(Clone)]
pub enum BoundaryClosure {
    LinearNu { nu: TimeVector, g: TimeScalar },
    NonlinearPhi { phi: StateScalar, g: TimeScalar },
    DirichletTrace(TimeVector),
    Transparent { reference: Option<Vec2> },
}

impl fmt::Debug for BoundaryClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LinearNu { .. } => f.write_str("LinearNu"),
            Self::NonlinearPhi { .. } => f.write_str("NonlinearPhi"),
            Self::DirichletTrace(_) => f.write_str("DirichletTrace"),
            Self::Transparent { reference } => write!(f, "Transparent({reference:?})"),
        }
    }
}

impl BoundaryClosure {
    /// Time-independent `nu . u = g`.
    pub fn linear(nu: Vec2, g: f64) -> Self {
        Self::LinearNu { nu: Arc::new(move |_| nu), g: Arc::new(move |_| g) }
    }

    /// Zero discharge (second component) at the boundary.
    pub fn wall() -> Self {
        Self::linear(Vec2::new(0.0, 1.0), 0.0)
    }

    pub fn at(&self, t: f64) -> BoundaryCondition {
        match self {
            Self::LinearNu { nu, g } => BoundaryCondition::Linear { nu: nu(t), g: g(t) },
            Self::NonlinearPhi { phi, g } => {
                let phi = Arc::clone(phi);
                BoundaryCondition::Nonlinear { phi: Arc::new(move |u| phi(t, u)), g: g(t) }
            }
            Self::DirichletTrace(trace) => BoundaryCondition::Dirichlet(trace(t)),
            Self::Transparent { reference } => BoundaryCondition::Transparent { reference: *reference },
        }
    }
}

/// Result of a boundary solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOutcome {
    pub state: Vec2,
    /// Newton residual, or for Dirichlet traces the outgoing-invariant defect.
    pub residual: f64,
    pub iterations: usize,
}

/// Indices into [`System::characteristic_variables`] of the families entering
/// the domain through the given end, for a boundary moving at `frame_speed`.
fn incoming_families(a: &Mat2, side: Side, frame_speed: f64, state: Vec2) -> Result<(Vec<usize>, f64, f64), SolverError> {
    let (hi, lo) = real_spectrum(a).ok_or(SolverError::NotHyperbolic([state[0], state[1]]))?;
    let rel = [hi - frame_speed, lo - frame_speed];
    let incoming = (0..2)
        .filter(|&k| match side {
            Side::Left => rel[k] > 0.0,
            Side::Right => rel[k] < 0.0,
        })
        .collect();
    Ok((incoming, rel[0], rel[1]))
}

fn state_gradient(phi: &(dyn Fn(Vec2) -> f64 + Send + Sync), u: Vec2) -> Vec2 {
    let h0 = 1e-7 * (1.0 + u[0].abs());
    let h1 = 1e-7 * (1.0 + u[1].abs());
    let e0 = Vec2::new(h0, 0.0);
    let e1 = Vec2::new(0.0, h1);
    Vec2::new((phi(u + e0) - phi(u - e0)) / (2.0 * h0), (phi(u + e1) - phi(u - e1)) / (2.0 * h1))
}

/// Solve `{ c(u) = 0, w_k(u) = target }` by Newton's method from `start`.
fn newton_two(
    start: Vec2,
    mut equations: impl FnMut(Vec2) -> (Vec2, Mat2),
) -> Result<BoundaryOutcome, SolverError> {
    let mut u = start;
    let mut residual = f64::INFINITY;
    for it in 0..=NEWTON_MAX_ITERATIONS {
        let (f, j) = equations(u);
        residual = f.amax();
        if !residual.is_finite() {
            break;
        }
        if residual <= NEWTON_TOLERANCE * (1.0 + u.amax()) {
            return Ok(BoundaryOutcome { state: u, residual, iterations: it });
        }
        let Some(inv) = j.try_inverse() else { break };
        u -= inv * f;
    }
    Err(SolverError::NewtonDivergence { residual })
}

/// Boundary state at the given end from the interior extrapolation `u_ext`.
pub fn apply_boundary(
    sys: &dyn System,
    side: Side,
    bc: &BoundaryCondition,
    u_ext: Vec2,
    frame_speed: f64,
) -> Result<BoundaryOutcome, SolverError> {
    let a = sys.coefficient(u_ext);
    let (incoming, high, low) = incoming_families(&a, side, frame_speed, u_ext)?;
    let outgoing = match side {
        Side::Left => 1,
        Side::Right => 0,
    };
    let w = |u: Vec2| sys.characteristic_variables(u, u_ext);
    let needs_one_incoming = || {
        if incoming.len() == 1 {
            Ok(())
        } else {
            Err(SolverError::WrongCharacteristicCount { side, high, low })
        }
    };
    match bc {
        BoundaryCondition::Linear { nu, g } => {
            needs_one_incoming()?;
            let target = w(u_ext)[outgoing].0;
            newton_two(u_ext, |u| {
                let (val, grad) = w(u)[outgoing];
                (
                    Vec2::new(nu.dot(&u) - g, val - target),
                    Mat2::new(nu[0], nu[1], grad[0], grad[1]),
                )
            })
        }
        BoundaryCondition::Nonlinear { phi, g } => {
            needs_one_incoming()?;
            let target = w(u_ext)[outgoing].0;
            newton_two(u_ext, |u| {
                let (val, grad) = w(u)[outgoing];
                let dphi = state_gradient(phi.as_ref(), u);
                (
                    Vec2::new(phi(u) - g, val - target),
                    Mat2::new(dphi[0], dphi[1], grad[0], grad[1]),
                )
            })
        }
        BoundaryCondition::Dirichlet(trace) => {
            let residual = (w(*trace)[outgoing].0 - w(u_ext)[outgoing].0).abs();
            Ok(BoundaryOutcome { state: *trace, residual, iterations: 0 })
        }
        BoundaryCondition::Transparent { reference } => {
            let source = |k: usize| match reference {
                Some(r) if incoming.contains(&k) => *r,
                _ => u_ext,
            };
            let targets = [w(source(0))[0].0, w(source(1))[1].0];
            newton_two(u_ext, |u| {
                let [(p, gp), (m, gm)] = w(u);
                (
                    Vec2::new(p - targets[0], m - targets[1]),
                    Mat2::new(gp[0], gp[1], gm[0], gm[1]),
                )
            })
        }
    }
}

/// Transparent truncation of a far end.
pub fn farfield_close(
    sys: &dyn System,
    side: Side,
    u_ext: Vec2,
    reference: Option<Vec2>,
    frame_speed: f64,
) -> Result<BoundaryOutcome, SolverError> {
    apply_boundary(sys, side, &BoundaryCondition::Transparent { reference }, u_ext, frame_speed)
}

/// Cells of one domain: node positions and per-cell content.
#[derive(Debug, Clone)]
pub struct Domain {
    pub system: Arc<dyn System>,
    pub grid: MovingGrid,
    /// `w_j f0(u_j)` for conservative systems, `u_j` otherwise.
    pub content: Vec<Vec2>,
    pub conservative: bool,
}

/// Three-point Gauss average of `f` over `[a, b]`.
pub fn cell_average(a: f64, b: f64, f: impl Fn(f64) -> Vec2) -> Vec2 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let r = (0.6f64).sqrt();
    (f(c - r * h) * 5.0 + f(c) * 8.0 + f(c + r * h) * 5.0) / 18.0
}

impl Domain {
    /// Domain whose cells hold the cell averages of `initial` (of `f0(initial)`
    /// for conservative systems).
    pub fn new(system: Arc<dyn System>, grid: MovingGrid, initial: impl Fn(f64) -> Vec2) -> Self {
        let conservative = system.flux(initial(grid.phi[0])).is_some();
        let content = grid
            .phi
            .windows(2)
            .map(|w| {
                if conservative {
                    cell_average(w[0], w[1], |x| system.density(initial(x))) * (w[1] - w[0])
                } else {
                    cell_average(w[0], w[1], &initial)
                }
            })
            .collect();
        Self { system, grid, content, conservative }
    }

    pub fn n_cells(&self) -> usize {
        self.content.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.grid.phi.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.grid.phi.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cell states `u_j`.
    pub fn states(&self) -> Vec<Vec2> {
        cell_states(self.system.as_ref(), self.conservative, &self.grid.phi, &self.content)
    }

    /// Integral of the conserved density over the domain.
    pub fn total_density(&self) -> Vec2 {
        if self.conservative {
            self.content.iter().sum()
        } else {
            self.content.iter().zip(self.widths()).map(|(u, w)| self.system.density(*u) * w).sum()
        }
    }

    pub fn snapshot(&self) -> DomainSnapshot {
        DomainSnapshot { faces: self.grid.phi.clone(), content: self.content.clone() }
    }

    /// Install a snapshot, refreshing the grid Jacobian from the node positions.
    pub fn restore(&mut self, snap: &DomainSnapshot, face_velocity: &[f64]) -> Result<(), GridError> {
        self.grid.phi.clone_from(&snap.faces);
        self.grid.phi_t = face_velocity.to_vec();
        self.grid.refresh_jacobian()?;
        self.content.clone_from(&snap.content);
        Ok(())
    }

    /// Largest stable time step for the given node velocities.
    pub fn stable_dt(&self, face_velocity: &[f64], cfl: f64) -> f64 {
        let states = self.states();
        let widths = self.widths();
        let mut dt = f64::INFINITY;
        for (j, u) in states.iter().enumerate() {
            let a = self.system.coefficient(*u);
            let s = [face_velocity[j], face_velocity[j + 1]];
            let speed = s
                .iter()
                .map(|sig| spectral_radius(&(a - Mat2::identity() * *sig)))
                .fold(0.0, f64::max);
            if speed > 0.0 {
                dt = dt.min(cfl * widths[j] / speed);
            }
        }
        dt
    }
}

pub fn cell_states(sys: &dyn System, conservative: bool, faces: &[f64], content: &[Vec2]) -> Vec<Vec2> {
    if !conservative {
        return content.to_vec();
    }
    faces
        .windows(2)
        .zip(content)
        .map(|(w, m)| {
            let density = m / (w[1] - w[0]);
            sys.density_inverse(density, density)
        })
        .collect()
}

/// Node positions and cell contents of one domain, the unknowns of the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSnapshot {
    pub faces: Vec<f64>,
    pub content: Vec<Vec2>,
}

/// Right-hand side of one domain.
#[derive(Debug, Clone)]
pub struct DomainRates {
    pub content: Vec<Vec2>,
    pub states: Vec<Vec2>,
    pub left: BoundaryOutcome,
    pub right: BoundaryOutcome,
}

/// Linear extrapolation of cell values to the end node at `side`.
pub fn extrapolate_to_end(centers: &[f64], states: &[Vec2], face: f64, side: Side) -> Vec2 {
    let n = states.len();
    let (i0, i1) = match side {
        Side::Left => (0, 1),
        Side::Right => (n - 1, n - 2),
    };
    let slope = (states[i0] - states[i1]) / (centers[i0] - centers[i1]);
    states[i0] + slope * (face - centers[i0])
}

fn flux_in_frame(sys: &dyn System, u: Vec2, sigma: f64) -> Vec2 {
    sys.flux(u).expect("conservative system") - sys.density(u) * sigma
}

/// Semi-discrete right-hand side of one domain at time `t`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_rates(
    sys: &dyn System,
    conservative: bool,
    faces: &[f64],
    face_velocity: &[f64],
    content: &[Vec2],
    t: f64,
    left: &BoundaryCondition,
    right: &BoundaryCondition,
) -> Result<DomainRates, SolverError> {
    let n = content.len();
    assert!(n >= 2 && faces.len() == n + 1 && face_velocity.len() == n + 1);
    let states = cell_states(sys, conservative, faces, content);
    let phase = sys.phase_box();
    if let Some(j) = states.iter().position(|u| !phase.contains(*u)) {
        return Err(SolverError::PhaseBoxExit { cell: j, t, state: [states[j][0], states[j][1]] });
    }
    let centers: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let widths: Vec<f64> = faces.windows(2).map(|w| w[1] - w[0]).collect();

    let left_ext = extrapolate_to_end(&centers, &states, faces[0], Side::Left);
    let right_ext = extrapolate_to_end(&centers, &states, faces[n], Side::Right);
    let left_out = apply_boundary(sys, Side::Left, left, left_ext, face_velocity[0])?;
    let right_out = apply_boundary(sys, Side::Right, right, right_ext, face_velocity[n])?;

    // Minmod slopes with mirrored ghost cells built from the boundary states.
    let ghost_left = (left_out.state * 2.0 - states[0], 2.0 * faces[0] - centers[0]);
    let ghost_right = (right_out.state * 2.0 - states[n - 1], 2.0 * faces[n] - centers[n - 1]);
    let value = |j: isize| -> (Vec2, f64) {
        if j < 0 {
            ghost_left
        } else if j as usize >= n {
            ghost_right
        } else {
            (states[j as usize], centers[j as usize])
        }
    };
    let slopes: Vec<Vec2> = (0..n as isize)
        .map(|j| {
            let (um, xm) = value(j - 1);
            let (u0, x0) = value(j);
            let (up, xp) = value(j + 1);
            minmod2((u0 - um) / (x0 - xm), (up - u0) / (xp - x0))
        })
        .collect();
    // Face values: `minus[j]` is the trace of cell j at its left face, `plus[j]` at its right face.
    let minus: Vec<Vec2> = (0..n).map(|j| states[j] + slopes[j] * (faces[j] - centers[j])).collect();
    let plus: Vec<Vec2> = (0..n).map(|j| states[j] + slopes[j] * (faces[j + 1] - centers[j])).collect();

    let mut rates = vec![Vec2::zeros(); n];
    if conservative {
        let mut flux = Vec::with_capacity(n + 1);
        flux.push(flux_in_frame(sys, left_out.state, face_velocity[0]));
        for k in 1..n {
            let (ul, ur) = (plus[k - 1], minus[k]);
            let sigma = face_velocity[k];
            let mean = 0.5 * (ul + ur);
            let shifted = sys.coefficient(mean) - Mat2::identity() * sigma;
            let dissipation = sys.density_jacobian(mean) * spectral_abs(&shifted);
            flux.push(
                0.5 * (flux_in_frame(sys, ul, sigma) + flux_in_frame(sys, ur, sigma)) - 0.5 * dissipation * (ur - ul),
            );
        }
        flux.push(flux_in_frame(sys, right_out.state, face_velocity[n]));
        for j in 0..n {
            rates[j] = flux[j] - flux[j + 1];
        }
    } else {
        let face_left = |k: usize| if k == 0 { left_out.state } else { plus[k - 1] };
        let face_right = |k: usize| if k == n { right_out.state } else { minus[k] };
        let split = |k: usize| {
            let (ul, ur) = (face_left(k), face_right(k));
            let shifted = sys.coefficient(0.5 * (ul + ur)) - Mat2::identity() * face_velocity[k];
            let abs = spectral_abs(&shifted);
            let jump = ur - ul;
            (0.5 * (shifted - abs) * jump, 0.5 * (shifted + abs) * jump)
        };
        let splits: Vec<(Vec2, Vec2)> = (0..=n).map(split).collect();
        for j in 0..n {
            let sigma = 0.5 * (face_velocity[j] + face_velocity[j + 1]);
            let internal = (sys.coefficient(states[j]) - Mat2::identity() * sigma) * (plus[j] - minus[j]);
            rates[j] = -(splits[j].1 + splits[j + 1].0 + internal) / widths[j];
        }
    }

    for j in 0..n {
        let b = sys.zeroth_order(t, centers[j]);
        let f = sys.source(t, centers[j]);
        if b == Mat2::zeros() && f == Vec2::zeros() {
            continue;
        }
        let forcing = f - b * states[j];
        rates[j] += if conservative {
            sys.density_jacobian(states[j]) * forcing * widths[j]
        } else {
            forcing
        };
    }

    Ok(DomainRates { content: rates, states, left: left_out, right: right_out })
}

/// State of a coupled system of domains and ordinary differential equations.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub t: f64,
    pub domains: Vec<DomainSnapshot>,
    pub ode: Vec<f64>,
}

/// Time derivative of a [`CoupledState`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRates {
    pub face_velocity: Vec<Vec<f64>>,
    pub content: Vec<Vec<Vec2>>,
    pub ode: Vec<f64>,
}

fn euler(state: &CoupledState, rates: &CoupledRates, dt: f64) -> CoupledState {
    let domains = state
        .domains
        .iter()
        .zip(rates.face_velocity.iter().zip(&rates.content))
        .map(|(d, (v, c))| DomainSnapshot {
            faces: d.faces.iter().zip(v).map(|(x, s)| x + dt * s).collect(),
            content: d.content.iter().zip(c).map(|(m, r)| m + r * dt).collect(),
        })
        .collect();
    let ode = state.ode.iter().zip(&rates.ode).map(|(y, r)| y + dt * r).collect();
    CoupledState { t: state.t + dt, domains, ode }
}

fn average(a: &CoupledState, b: &CoupledState) -> CoupledState {
    let domains = a
        .domains
        .iter()
        .zip(&b.domains)
        .map(|(x, y)| DomainSnapshot {
            faces: x.faces.iter().zip(&y.faces).map(|(p, q)| 0.5 * (p + q)).collect(),
            content: x.content.iter().zip(&y.content).map(|(p, q)| 0.5 * (p + q)).collect(),
        })
        .collect();
    let ode = a.ode.iter().zip(&b.ode).map(|(p, q)| 0.5 * (p + q)).collect();
    CoupledState { t: b.t, domains, ode }
}

/// One Heun (SSP-RK2) step of a coupled system. Returns the new state and the
/// rates evaluated at the two stages.
pub fn heun_step<E>(
    state: &CoupledState,
    dt: f64,
    mut rates: impl FnMut(&CoupledState) -> Result<CoupledRates, E>,
) -> Result<(CoupledState, [CoupledRates; 2]), E> {
    let r1 = rates(state)?;
    let stage = euler(state, &r1, dt);
    let r2 = rates(&stage)?;
    let second = euler(&stage, &r2, dt);
    let mut next = average(state, &second);
    next.t = state.t + dt;
    Ok((next, [r1, r2]))
}

/// Boundary traces recorded after each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub left: Vec2,
    pub right: Vec2,
    pub left_residual: f64,
    pub right_residual: f64,
}

/// Fixed-capacity ring buffer of boundary traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceHistory {
    capacity: usize,
    records: VecDeque<TraceRecord>,
}

impl TraceHistory {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), records: VecDeque::new() }
    }

    pub fn push(&mut self, record: TraceRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn latest(&self) -> Option<&TraceRecord> {
        self.records.back()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Single domain on a fixed grid with closures at both ends.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub domain: Domain,
    pub t: f64,
    pub cfl: f64,
    pub history: TraceHistory,
}

impl SolverState {
    pub fn new(domain: Domain) -> Self {
        Self { domain, t: 0.0, cfl: DEFAULT_CFL, history: TraceHistory::new(4096) }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn stable_dt(&self) -> f64 {
        let v = vec![0.0; self.domain.grid.len()];
        self.domain.stable_dt(&v, self.cfl)
    }

    pub fn states(&self) -> Vec<Vec2> {
        self.domain.states()
    }

    /// Advance by `dt`, or by the stable step when `dt` is `None`. Returns the step taken.
    pub fn step(&mut self, left: &BoundaryClosure, right: &BoundaryClosure, dt: Option<f64>) -> Result<f64, SolverError> {
        let limit = self.stable_dt();
        let dt = dt.unwrap_or(limit);
        if dt > limit * (1.0 + 1e-12) {
            return Err(SolverError::CflViolation { dt, limit });
        }
        let sys = Arc::clone(&self.domain.system);
        let conservative = self.domain.conservative;
        let still = vec![0.0; self.domain.grid.len()];
        let start = CoupledState { t: self.t, domains: vec![self.domain.snapshot()], ode: Vec::new() };
        let mut last: Option<(BoundaryOutcome, BoundaryOutcome)> = None;
        let (next, _) = heun_step(&start, dt, |s| {
            let d = &s.domains[0];
            let r = evaluate_rates(sys.as_ref(), conservative, &d.faces, &still, &d.content, s.t, &left.at(s.t), &right.at(s.t))?;
            last = Some((r.left, r.right));
            Ok::<_, SolverError>(CoupledRates { face_velocity: vec![still.clone()], content: vec![r.content], ode: Vec::new() })
        })?;
        self.domain.content = next.domains[0].content.clone();
        self.t = next.t;
        let states = self.domain.states();
        let phase = self.domain.system.phase_box();
        if let Some(j) = states.iter().position(|u| !phase.contains(*u)) {
            return Err(SolverError::PhaseBoxExit { cell: j, t: self.t, state: [states[j][0], states[j][1]] });
        }
        if let Some((l, r)) = last {
            self.history.push(TraceRecord {
                t: self.t,
                left: l.state,
                right: r.state,
                left_residual: l.residual,
                right_residual: r.residual,
            });
        }
        Ok(dt)
    }

    /// Boundary states of the current solution.
    pub fn boundary_traces(&self, left: &BoundaryClosure, right: &BoundaryClosure) -> Result<(BoundaryOutcome, BoundaryOutcome), SolverError> {
        let sys = self.domain.system.as_ref();
        let states = self.domain.states();
        let centers = self.domain.centers();
        let faces = &self.domain.grid.phi;
        let l = apply_boundary(sys, Side::Left, &left.at(self.t), extrapolate_to_end(&centers, &states, faces[0], Side::Left), 0.0)?;
        let r = apply_boundary(
            sys,
            Side::Right,
            &right.at(self.t),
            extrapolate_to_end(&centers, &states, faces[faces.len() - 1], Side::Right),
            0.0,
        )?;
        Ok((l, r))
    }
}
