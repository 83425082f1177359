//! A body floating on shallow water.
//!
//! Under the body the surface is the lid `Z_i(t, x)` and the water is
//! described by its discharge `Q_i = W . T(r) + qbar(t)`, where
//! `W = (u_G, w_G, omega)` is the rigid velocity and
//! `T(r) = (r_z, -r_x, -|r|^2 / 2)` with `r` the position relative to the
//! centre of mass. The pressure under the lid follows from the momentum
//! equation, and requiring it to be atmospheric at both contact points gives
//! the ODE for `qbar` and, for a free body, the added-mass law for `W`.
//!
//! Outside the wetted interval `[x_-, x_+]` two shallow-water domains are
//! advanced on cutoff grids whose inner ends follow the contact points.

use std::sync::Arc;

use hyperfront_core::front::{contact_speed_projected, end_derivatives, FrontMode, FrontState};
use hyperfront_core::grid::{CutoffProfile, GridKind, MovingGrid, Side};
use hyperfront_core::solver::{
    cell_states, evaluate_rates, heun_step, BoundaryClosure, BoundaryCondition, CoupledRates, CoupledState, Domain,
    DomainSnapshot, DEFAULT_CFL,
};
use hyperfront_core::{ShallowWater, System, Vec2};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::lid::{psi_lid_solve, BodyFrame, Lid};
use crate::WaveError;

/// Position, rate and acceleration of one coordinate at time `t`.
pub type Trajectory = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Trajectory of the centre of mass and of the rotation angle.
#[derive(Clone)]
pub struct PrescribedMotion {
    pub x_g: Trajectory,
    pub z_g: Trajectory,
    pub theta: Trajectory,
}

impl PrescribedMotion {
    fn constant(value: f64) -> Trajectory {
        Arc::new(move |_| [value, 0.0, 0.0])
    }

    /// `z_G(t) = z0 + amplitude sin(frequency t)` with the body otherwise at rest.
    pub fn heave(frame: BodyFrame, amplitude: f64, frequency: f64) -> Self {
        Self {
            x_g: Self::constant(frame.x_g),
            z_g: Arc::new(move |t| {
                let (s, c) = (frequency * t).sin_cos();
                [frame.z_g + amplitude * s, amplitude * frequency * c, -amplitude * frequency * frequency * s]
            }),
            theta: Self::constant(0.0),
        }
    }

    /// `theta(t) = amplitude sin(frequency t)` about a fixed centre of mass.
    pub fn roll(frame: BodyFrame, amplitude: f64, frequency: f64) -> Self {
        Self {
            x_g: Self::constant(frame.x_g),
            z_g: Self::constant(frame.z_g),
            theta: Arc::new(move |t| {
                let (s, c) = (frequency * t).sin_cos();
                [amplitude * s, amplitude * frequency * c, -amplitude * frequency * frequency * s]
            }),
        }
    }

    fn at(&self, t: f64) -> ([f64; 3], Vector3<f64>, Vector3<f64>) {
        let [x, z, th] = [(self.x_g)(t), (self.z_g)(t), (self.theta)(t)];
        ([x[0], z[0], th[0]], Vector3::new(x[1], z[1], th[1]), Vector3::new(x[2], z[2], th[2]))
    }
}

impl std::fmt::Debug for PrescribedMotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PrescribedMotion")
    }
}

#[derive(Debug, Clone)]
pub enum BodyMode {
    /// The body stays where it was placed.
    Fixed,
    Prescribed(PrescribedMotion),
    /// Newton's laws with the given mass and moment of inertia.
    Free { mass: f64, inertia: f64 },
}

/// Interior discharge constant and rigid-body position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    pub interior_flux: f64,
    pub x_g: f64,
    pub z_g: f64,
    pub theta: f64,
    pub u_g: f64,
    pub w_g: f64,
    pub omega: f64,
}

impl RigidBodyState {
    pub fn at_rest(frame: BodyFrame) -> Self {
        Self { x_g: frame.x_g, z_g: frame.z_g, ..Self::default() }
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.u_g, self.w_g, self.omega)
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.interior_flux, self.x_g, self.z_g, self.theta, self.u_g, self.w_g, self.omega]
    }

    fn from_slice(y: &[f64]) -> Self {
        Self { interior_flux: y[0], x_g: y[1], z_g: y[2], theta: y[3], u_g: y[4], w_g: y[5], omega: y[6] }
    }
}

#[derive(Debug, Clone)]
pub struct FloatingBodyScenario {
    pub lid: Lid,
    /// Centre of mass at the time the lid was sampled.
    pub frame: BodyFrame,
    pub gravity: f64,
    pub rest_depth: f64,
    pub density: f64,
    pub atmospheric_pressure: f64,
    pub mode: BodyMode,
    /// Initial contact points.
    pub contacts: (f64, f64),
    /// Midpoint cells used for the interior quadratures.
    pub interior_cells: usize,
}

impl FloatingBodyScenario {
    pub fn validate(&self) -> Result<(), WaveError> {
        let (lo, hi) = self.contacts;
        if !(lo < hi) {
            return Err(WaveError::InvalidScenario(format!("contacts must satisfy x- < x+, got ({lo}, {hi})")));
        }
        for x in [lo, hi] {
            if !self.lid.contains(x) {
                return Err(WaveError::LidOverrun { position: x, lower: self.lid.lower, upper: self.lid.upper });
            }
        }
        if self.interior_cells < 2 {
            return Err(WaveError::InvalidScenario("at least two interior cells are needed".into()));
        }
        for k in 0..=400 {
            let x = self.lid.lower + (self.lid.upper - self.lid.lower) * k as f64 / 400.0;
            let depth = self.rest_depth + self.lid.value(x);
            if !(depth > 0.0) {
                return Err(WaveError::DryInterior { x, depth });
            }
        }
        Ok(())
    }

    /// Position, velocity and acceleration (when known from the mode) of the body.
    fn kinematics(&self, t: f64, state: &RigidBodyState) -> ([f64; 3], Vector3<f64>, Option<Vector3<f64>>) {
        match &self.mode {
            BodyMode::Fixed => ([self.frame.x_g, self.frame.z_g, 0.0], Vector3::zeros(), Some(Vector3::zeros())),
            BodyMode::Prescribed(m) => {
                let (p, v, a) = m.at(t);
                (p, v, Some(a))
            }
            BodyMode::Free { .. } => ([state.x_g, state.z_g, state.theta], state.velocity(), None),
        }
    }

    fn surface(&self, x: f64, position: [f64; 3]) -> Result<(f64, f64), WaveError> {
        let p = psi_lid_solve(&self.lid, x, position[0], position[1], position[2], self.frame)?;
        Ok((p.z, p.slope))
    }
}

/// Lid quantities at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidTrace {
    pub x: f64,
    pub elevation: f64,
    pub slope: f64,
    /// `d_t Z_i` at fixed `x`.
    pub rate: f64,
    pub flux: f64,
}

/// Pressure and flow under the body, sampled at the midpoints of a uniform
/// partition of the wetted interval.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField {
    pub lower: LidTrace,
    pub upper: LidTrace,
    pub cell_width: f64,
    pub centers: Vec<f64>,
    pub elevation: Vec<f64>,
    pub depth: Vec<f64>,
    pub flux: Vec<f64>,
    /// `T(r)` at the midpoints.
    pub lever: Vec<Vector3<f64>>,
    /// Convective and gravity force `F^I`.
    pub convective: Vec<f64>,
    /// Force from the motion of the lever arm `F^III`.
    pub lever_rate: Vec<f64>,
    /// `<T>`.
    pub mean_lever: Vector3<f64>,
    /// `int 1/H`.
    pub inverse_depth: f64,
    pub density: f64,
    /// `d qbar / dt`.
    pub flux_rate: f64,
    /// `dW/dt`.
    pub body_acceleration: Vector3<f64>,
    /// Cell edges and the pressure there.
    pub nodes: Vec<f64>,
    pub pressure: Vec<f64>,
    pub atmospheric_pressure: f64,
}

impl InteriorField {
    /// Weighted average `<F> = int F/H / int 1/H` of midpoint samples.
    pub fn average(&self, values: &[f64]) -> f64 {
        let w = self.cell_width;
        values.iter().zip(&self.depth).map(|(f, h)| f / h * w).sum::<f64>() / self.inverse_depth
    }

    /// `|P(x+) - P_atm|`.
    pub fn solvability_residual(&self) -> f64 {
        (self.pressure.last().copied().unwrap_or(self.atmospheric_pressure) - self.atmospheric_pressure).abs()
    }

    /// `max |Q_i - Q_i(x_mid)|` over the wetted interval.
    pub fn flux_variation(&self) -> f64 {
        let reference = self.flux.first().copied().unwrap_or(0.0);
        self.flux.iter().map(|q| (q - reference).abs()).fold(0.0, f64::max)
    }

    /// Fluid force and torque on the body given its acceleration.
    pub fn fluid_force(&self) -> Vector3<f64> {
        self.reaction(&self.convective_plus_lever())
    }

    fn convective_plus_lever(&self) -> Vec<f64> {
        self.convective.iter().zip(&self.lever_rate).map(|(a, b)| a + b).collect()
    }

    /// `-rho int F T* / H`.
    fn reaction(&self, forcing: &[f64]) -> Vector3<f64> {
        let w = self.cell_width;
        let mut sum = Vector3::zeros();
        for ((f, t), h) in forcing.iter().zip(&self.lever).zip(&self.depth) {
            sum += (t - self.mean_lever) * (f / h * w);
        }
        -sum * self.density
    }
}

/// `M_a = rho int T* (x) T* / H` by the midpoint rule.
pub fn added_mass(field: &InteriorField) -> Matrix3<f64> {
    let w = field.cell_width;
    let mut m = Matrix3::zeros();
    for (t, h) in field.lever.iter().zip(&field.depth) {
        let s = t - field.mean_lever;
        m += s * s.transpose() * (w / h);
    }
    m * field.density
}

fn lever(r: Vec2) -> Vector3<f64> {
    Vector3::new(r[1], -r[0], -0.5 * r.norm_squared())
}

fn lid_trace(scn: &FloatingBodyScenario, x: f64, position: [f64; 3], velocity: &Vector3<f64>, qbar: f64) -> Result<(LidTrace, Vector3<f64>), WaveError> {
    let (z, slope) = scn.surface(x, position)?;
    let r = Vec2::new(x - position[0], z - position[1]);
    // Normal velocity of the lid: (U_G + omega r_perp) . (-Z_x, 1).
    let rate = -(velocity[0] - velocity[2] * r[1]) * slope + velocity[1] + velocity[2] * r[0];
    let t = lever(r);
    Ok((LidTrace { x, elevation: z, slope, rate, flux: velocity.dot(&t) + qbar }, t))
}

/// Solve for the interior flow and pressure on `[lower, upper]`.
pub fn interior_solve(scn: &FloatingBodyScenario, lower: f64, upper: f64, state: &RigidBodyState, t: f64) -> Result<InteriorField, WaveError> {
    let (position, velocity, prescribed_acceleration) = scn.kinematics(t, state);
    let qbar = state.interior_flux;
    let g = scn.gravity;
    let n = scn.interior_cells;
    let width = (upper - lower).max(0.0) / n as f64;
    let (lower_trace, _) = lid_trace(scn, lower, position, &velocity, qbar)?;
    let (upper_trace, _) = lid_trace(scn, upper, position, &velocity, qbar)?;

    let mut field = InteriorField {
        lower: lower_trace,
        upper: upper_trace,
        cell_width: width,
        centers: Vec::with_capacity(n),
        elevation: Vec::with_capacity(n),
        depth: Vec::with_capacity(n),
        flux: Vec::with_capacity(n),
        lever: Vec::with_capacity(n),
        convective: Vec::with_capacity(n),
        lever_rate: Vec::with_capacity(n),
        mean_lever: Vector3::zeros(),
        inverse_depth: 0.0,
        density: scn.density,
        flux_rate: 0.0,
        body_acceleration: Vector3::zeros(),
        nodes: (0..=n).map(|k| lower + width * k as f64).collect(),
        pressure: Vec::new(),
        atmospheric_pressure: scn.atmospheric_pressure,
    };
    for k in 0..n {
        let x = lower + width * (k as f64 + 0.5);
        let (tr, lever_arm) = lid_trace(scn, x, position, &velocity, qbar)?;
        let depth = scn.rest_depth + tr.elevation;
        if !(depth > 0.0) {
            return Err(WaveError::DryInterior { x, depth });
        }
        let (q, q_x, h_x) = (tr.flux, -tr.rate, tr.slope);
        let convective = 2.0 * q * q_x / depth - q * q * h_x / (depth * depth) + g * depth * h_x;
        // d_t r = (-u_G, d_t Z_i - w_G) and d_t T = (d_t r_z, -d_t r_x, -r . d_t r).
        let r = Vec2::new(x - position[0], tr.elevation - position[1]);
        let r_t = Vec2::new(-velocity[0], tr.rate - velocity[1]);
        let lever_t = Vector3::new(r_t[1], -r_t[0], -r.dot(&r_t));
        field.centers.push(x);
        field.elevation.push(tr.elevation);
        field.depth.push(depth);
        field.flux.push(q);
        field.lever.push(lever_arm);
        field.convective.push(convective);
        field.lever_rate.push(velocity.dot(&lever_t));
    }
    if n == 0 || width == 0.0 {
        return Ok(field);
    }
    field.inverse_depth = field.depth.iter().map(|h| width / h).sum();
    let mut mean = Vector3::zeros();
    for (t, h) in field.lever.iter().zip(&field.depth) {
        mean += t * (width / h);
    }
    field.mean_lever = mean / field.inverse_depth;

    let forcing = field.convective_plus_lever();
    let acceleration = match (&scn.mode, prescribed_acceleration) {
        (_, Some(a)) => a,
        (BodyMode::Free { mass, inertia }, None) => {
            let inertia_matrix = Matrix3::from_diagonal(&Vector3::new(*mass, *mass, *inertia)) + added_mass(&field);
            let load = Vector3::new(0.0, -mass * g, 0.0) + field.reaction(&forcing);
            inertia_matrix
                .lu()
                .solve(&load)
                .ok_or_else(|| WaveError::InvalidScenario("singular body inertia".into()))?
        }
        _ => unreachable!("only a free body lacks a prescribed acceleration"),
    };
    field.body_acceleration = acceleration;
    field.flux_rate = -field.average(&forcing) - acceleration.dot(&field.mean_lever);

    // P(x) = P_atm - rho int_{x-}^{x} F* / H with F = F^I + F^II + F^III.
    let total: Vec<f64> = forcing.iter().zip(&field.lever).map(|(f, t)| f + acceleration.dot(t)).collect();
    let mean_total = field.average(&total);
    let mut p = scn.atmospheric_pressure;
    field.pressure.push(p);
    for (f, h) in total.iter().zip(&field.depth) {
        p -= scn.density * width * (f - mean_total) / h;
        field.pressure.push(p);
    }
    Ok(field)
}

/// Fluid force and torque on a body at rest with the given wetted interval,
/// from the hydrostatic pressure under the lid.
pub fn hydrostatic_load(scn: &FloatingBodyScenario) -> Result<Vector3<f64>, WaveError> {
    let fixed = FloatingBodyScenario { mode: BodyMode::Fixed, ..scn.clone() };
    let field = interior_solve(&fixed, scn.contacts.0, scn.contacts.1, &RigidBodyState::at_rest(scn.frame), 0.0)?;
    Ok(field.fluid_force())
}

/// Body mass for which the hydrostatic lift balances gravity.
pub fn archimedean_mass(scn: &FloatingBodyScenario) -> Result<f64, WaveError> {
    Ok(hydrostatic_load(scn)?[1] / scn.gravity)
}

/// Far-end boundary of the two exterior domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarField {
    Wall,
    Transparent,
}

/// Geometry of the exterior domains `[left_end, x-]` and `[x+, right_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorSetup {
    pub left_end: f64,
    pub right_end: f64,
    pub cells: [usize; 2],
    pub cutoff_epsilon: f64,
    pub far_field: FarField,
    /// Threshold on the contact denominator and on the subsonic margins.
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatingMonitors {
    pub max_added_mass_asymmetry: f64,
    pub min_added_mass_eigenvalue: f64,
    pub max_solvability_residual: f64,
    pub max_flux_variation: f64,
    pub clamped_steps: usize,
}

struct Stage {
    rates: CoupledRates,
    field: InteriorField,
    speeds: [f64; 2],
    clamped: bool,
}

/// Exterior shallow water coupled with the body and its interior flow.
pub struct FloatingBodyDriver {
    pub scenario: FloatingBodyScenario,
    pub exterior: [Domain; 2],
    pub far: [BoundaryClosure; 2],
    pub body: RigidBodyState,
    pub t: f64,
    pub cfl: f64,
    pub c0: f64,
    pub fronts: [FrontState; 2],
    pub interior: InteriorField,
    pub monitors: FloatingMonitors,
    min_width: f64,
}

impl FloatingBodyDriver {
    /// `initial` gives `(zeta, q)` in the exterior at `t = 0`.
    pub fn new(scenario: FloatingBodyScenario, setup: ExteriorSetup, body: RigidBodyState, initial: impl Fn(f64) -> Vec2) -> Result<Self, WaveError> {
        scenario.validate()?;
        let (lo, hi) = scenario.contacts;
        if !(setup.left_end < lo && hi < setup.right_end) {
            return Err(WaveError::InvalidScenario("exterior ends must enclose the body".into()));
        }
        let sys: Arc<dyn System> = Arc::new(ShallowWater::new(scenario.gravity, scenario.rest_depth));
        let kind = GridKind::Cutoff(CutoffProfile::new(setup.cutoff_epsilon));
        let left = MovingGrid::uniform(setup.left_end, lo, setup.cells[0], kind, Side::Right);
        let right = MovingGrid::uniform(hi, setup.right_end, setup.cells[1], kind, Side::Left);
        let exterior = [Domain::new(Arc::clone(&sys), left, &initial), Domain::new(sys, right, &initial)];
        let far = match setup.far_field {
            FarField::Wall => [BoundaryClosure::wall(), BoundaryClosure::wall()],
            FarField::Transparent => [
                BoundaryClosure::Transparent { reference: Some(initial(setup.left_end)) },
                BoundaryClosure::Transparent { reference: Some(initial(setup.right_end)) },
            ],
        };
        let min_width = [(lo - setup.left_end) / setup.cells[0] as f64, (setup.right_end - hi) / setup.cells[1] as f64]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let body = match &scenario.mode {
            BodyMode::Fixed => RigidBodyState { interior_flux: body.interior_flux, ..RigidBodyState::at_rest(scenario.frame) },
            BodyMode::Prescribed(m) => {
                let (p, v, _) = m.at(0.0);
                RigidBodyState { interior_flux: body.interior_flux, x_g: p[0], z_g: p[1], theta: p[2], u_g: v[0], w_g: v[1], omega: v[2] }
            }
            BodyMode::Free { .. } => body,
        };
        let placeholder = interior_solve(&scenario, lo, hi, &body, 0.0)?;
        let mut driver = Self {
            scenario,
            exterior,
            far,
            body,
            t: 0.0,
            cfl: DEFAULT_CFL,
            c0: setup.c0,
            fronts: [FrontState::new(lo, 0.0, FrontMode::ContactWithOde), FrontState::new(hi, 0.0, FrontMode::ContactWithOde)],
            interior: placeholder,
            monitors: FloatingMonitors {
                max_added_mass_asymmetry: 0.0,
                min_added_mass_eigenvalue: f64::INFINITY,
                max_solvability_residual: 0.0,
                max_flux_variation: 0.0,
                clamped_steps: 0,
            },
            min_width,
        };
        let state = driver.coupled_state();
        let stage = driver.stage(&state)?;
        driver.accept(stage)?;
        Ok(driver)
    }

    fn coupled_state(&self) -> CoupledState {
        CoupledState {
            t: self.t,
            domains: vec![self.exterior[0].snapshot(), self.exterior[1].snapshot()],
            ode: self.body.to_vec(),
        }
    }

    pub fn contacts(&self) -> (f64, f64) {
        (self.fronts[0].xbar, self.fronts[1].xbar)
    }

    pub fn contact_speeds(&self) -> (f64, f64) {
        (self.fronts[0].xbar_dot, self.fronts[1].xbar_dot)
    }

    fn stage(&self, s: &CoupledState) -> Result<Stage, WaveError> {
        let body = RigidBodyState::from_slice(&s.ode);
        let lower = *s.domains[0].faces.last().expect("nonempty grid");
        let upper = s.domains[1].faces[0];
        let minimum = 4.0 * self.min_width;
        if upper - lower < minimum {
            return Err(WaveError::ContactCollision { width: upper - lower, minimum });
        }
        let lid = &self.scenario.lid;
        for x in [lower, upper] {
            if !lid.contains(x) {
                return Err(WaveError::LidOverrun { position: x, lower: lid.lower, upper: lid.upper });
            }
        }
        let field = interior_solve(&self.scenario, lower, upper, &body, s.t)?;
        let mut speeds = [0.0; 2];
        let mut clamped = false;
        let mut face_velocity = Vec::with_capacity(2);
        let mut content = Vec::with_capacity(2);
        for (k, (snap, trace)) in s.domains.iter().zip([field.lower, field.upper]).enumerate() {
            let domain = &self.exterior[k];
            let sys = domain.system.as_ref();
            let side = domain.grid.front_side;
            let value = Vec2::new(trace.elevation, trace.flux);
            let states = cell_states(sys, domain.conservative, &snap.faces, &snap.content);
            let (u_x, _) = end_derivatives(&snap.faces, &states, side, value);
            let u_t = -sys.coefficient(value) * u_x;
            // Only the mass component of the contact identity is used, so the
            // time derivative of the interior discharge never enters.
            let speed = contact_speed_projected(
                Vec2::new(1.0, 0.0),
                u_t,
                u_x,
                Vec2::new(trace.rate, 0.0),
                Vec2::new(trace.slope, -trace.rate),
                self.c0,
            )?;
            speeds[k] = speed.chi;
            clamped |= speed.clamped;
            let v = domain.grid.cutoff_velocities(speed.chi);
            let contact = BoundaryCondition::Dirichlet(value);
            let far = self.far[k].at(s.t);
            let (left, right) = match side {
                Side::Right => (&far, &contact),
                Side::Left => (&contact, &far),
            };
            let r = evaluate_rates(sys, domain.conservative, &snap.faces, &v, &snap.content, s.t, left, right)?;
            face_velocity.push(v);
            content.push(r.content);
        }
        let (_, velocity, _) = self.scenario.kinematics(s.t, &body);
        let a = field.body_acceleration;
        let ode = vec![field.flux_rate, velocity[0], velocity[1], velocity[2], a[0], a[1], a[2]];
        Ok(Stage { rates: CoupledRates { face_velocity, content, ode }, field, speeds, clamped })
    }

    fn accept(&mut self, stage: Stage) -> Result<(), WaveError> {
        let sys = ShallowWater::new(self.scenario.gravity, self.scenario.rest_depth);
        for (k, trace) in [stage.field.lower, stage.field.upper].into_iter().enumerate() {
            let (plus, minus) = sys.speeds(Vec2::new(trace.elevation, trace.flux));
            let (plus, minus) = (plus - stage.speeds[k], minus + stage.speeds[k]);
            if plus < self.c0 || minus < self.c0 {
                return Err(WaveError::SubsonicityLoss { plus, minus });
            }
            self.fronts[k].xbar_dot = stage.speeds[k];
            self.fronts[k].clamped = stage.clamped;
        }
        let m = added_mass(&stage.field);
        let asymmetry = (m - m.transpose()).abs().max();
        let eigen = SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues.min();
        let mon = &mut self.monitors;
        mon.max_added_mass_asymmetry = mon.max_added_mass_asymmetry.max(asymmetry);
        mon.min_added_mass_eigenvalue = mon.min_added_mass_eigenvalue.min(eigen);
        mon.max_solvability_residual = mon.max_solvability_residual.max(stage.field.solvability_residual());
        if matches!(self.scenario.mode, BodyMode::Fixed) {
            mon.max_flux_variation = mon.max_flux_variation.max(stage.field.flux_variation());
        }
        if stage.clamped {
            mon.clamped_steps += 1;
        }
        self.interior = stage.field;
        Ok(())
    }

    pub fn stable_dt(&self) -> f64 {
        self.exterior
            .iter()
            .zip(&self.fronts)
            .map(|(d, f)| d.stable_dt(&d.grid.cutoff_velocities(f.xbar_dot), self.cfl))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn step(&mut self, dt: Option<f64>) -> Result<f64, WaveError> {
        let dt = dt.unwrap_or_else(|| self.stable_dt());
        let start = self.coupled_state();
        let (next, _) = heun_step(&start, dt, |s| self.stage(s).map(|st| st.rates))?;
        let mut next = next;
        // Positions and velocities of a driven body are known exactly.
        if let BodyMode::Prescribed(m) = &self.scenario.mode {
            let (p, v, _) = m.at(next.t);
            next.ode[1..].copy_from_slice(&[p[0], p[1], p[2], v[0], v[1], v[2]]);
        }
        let stage = self.stage(&next)?;
        for (k, snap) in next.domains.iter().enumerate() {
            let xbar = match k {
                0 => *snap.faces.last().expect("nonempty grid"),
                _ => snap.faces[0],
            };
            let domain = &mut self.exterior[k];
            domain.content.clone_from(&snap.content);
            domain.grid = domain.grid.set_cutoff(xbar, stage.speeds[k])?;
            self.fronts[k].xbar = xbar;
        }
        self.body = RigidBodyState::from_slice(&next.ode);
        self.t = next.t;
        self.accept(stage)?;
        Ok(dt)
    }

    /// Volume of water per unit width: `int (h0 + zeta)` outside the body plus
    /// `int (h0 + Z_i)` under it, the latter by three-point Gauss quadrature.
    pub fn water_volume(&self) -> Result<f64, WaveError> {
        let h0 = self.scenario.rest_depth;
        let mut total = 0.0;
        for d in &self.exterior {
            let length = d.grid.phi[d.grid.len() - 1] - d.grid.phi[0];
            total += h0 * length + d.total_density()[0];
        }
        let (lower, upper) = self.contacts();
        let (position, _, _) = self.scenario.kinematics(self.t, &self.body);
        let n = self.scenario.interior_cells;
        let w = (upper - lower) / n as f64;
        let r = (0.6f64).sqrt();
        for k in 0..n {
            let c = lower + w * (k as f64 + 0.5);
            for (offset, weight) in [(-r, 5.0), (0.0, 8.0), (r, 5.0)] {
                let (z, _) = self.scenario.surface(c + 0.5 * w * offset, position)?;
                total += (h0 + z) * weight / 18.0 * w;
            }
        }
        Ok(total)
    }

    /// Mass of water, `density * water_volume`.
    pub fn water_mass(&self) -> Result<f64, WaveError> {
        Ok(self.scenario.density * self.water_volume()?)
    }

    /// Exterior snapshot pair, for callers that post-process the fields.
    pub fn snapshots(&self) -> [DomainSnapshot; 2] {
        [self.exterior[0].snapshot(), self.exterior[1].snapshot()]
    }
}
