//! Run orchestration: build the family driver, step it to the end time and
//! sample the requested quantities.

use std::collections::BTreeMap;
use std::sync::Arc;

use hyperfront_core::compat::{check_compatibility, CompatProblem, InitialData, STENCIL};
use hyperfront_core::front::{ContactDriver, ContactLaw, FnInterface, FrontError, KinematicDriver, KinematicModel};
use hyperfront_core::grid::{CutoffProfile, GridKind, MovingGrid, Side};
use hyperfront_core::norms::{weighted_norms, Trajectory};
use hyperfront_core::solver::{BoundaryClosure, BoundaryCondition, Domain, SolverError, SolverState};
use hyperfront_core::transmission::{rh_speed_and_residual, TransmissionDriver, TransmissionError, TransmissionProblem};
use hyperfront_core::{ShallowWater, ShallowWaterVelocity, System, Vec2};
use hyperfront_wave::floating::{
    archimedean_mass, interior_solve, BodyMode, ExteriorSetup, FarField, FloatingBodyDriver, FloatingBodyScenario,
    PrescribedMotion, RigidBodyState,
};
use hyperfront_wave::lid::{BodyFrame, Lid, LidShape};
use hyperfront_wave::piston::{ForceOrientation, PistonParams, PistonRun, PistonScenario};
use hyperfront_wave::WaveError;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::scenario::{
    ClosureSpec, ContactPhysics, Direction, FarEnd, FloatingPhysics, IbvpPhysics, InitialSpec, KinematicPhysics, LidSpec,
    ModeSpec, Orientation, Physics, PistonPhysics, Scenario, ShockPhysics, TransmissionPhysics,
};

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// A state or geometry invariant was violated.
    InvariantAbort { t: f64, message: String },
    /// The boundary or front left the regime the problem was posed in.
    RegimeLoss { t: f64, message: String },
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Completed => 0,
            Self::InvariantAbort { .. } => 2,
            Self::RegimeLoss { .. } => 3,
        }
    }
}

/// A timestamped diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    pub message: String,
}

/// Sampled time series and run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Column names; the first is always `t`.
    pub columns: Vec<String>,
    /// One row per sample; `None` where a quantity was not due.
    pub rows: Vec<Vec<Option<f64>>>,
    pub diagnostics: Vec<Diagnostic>,
    /// Scalars computed once per run (derived constants, final monitors, norms).
    pub summary: BTreeMap<String, f64>,
    pub outcome: Outcome,
    pub scenario: Scenario,
}

/// Failure of a family driver.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub regime_loss: bool,
    pub message: String,
}

impl Failure {
    fn invariant(message: impl ToString) -> Self {
        Self { regime_loss: false, message: message.to_string() }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let regime_loss = matches!(e, SolverError::WrongCharacteristicCount { .. });
        Self { regime_loss, message: e.to_string() }
    }
}

impl From<FrontError> for Failure {
    fn from(e: FrontError) -> Self {
        match e {
            FrontError::Solver(s) => s.into(),
            FrontError::SubsonicityLoss { .. } | FrontError::Nu2LopatinskiLoss(_) => {
                Self { regime_loss: true, message: e.to_string() }
            }
            other => Self::invariant(other),
        }
    }
}

impl From<TransmissionError> for Failure {
    fn from(e: TransmissionError) -> Self {
        match e {
            TransmissionError::Front(f) => f.into(),
            TransmissionError::Solver(s) => s.into(),
            TransmissionError::RegimeChange { .. } => Self { regime_loss: true, message: e.to_string() },
            other => Self::invariant(other),
        }
    }
}

impl From<WaveError> for Failure {
    fn from(e: WaveError) -> Self {
        match e {
            WaveError::Front(f) => f.into(),
            WaveError::Solver(s) => s.into(),
            WaveError::SubsonicityLoss { .. } => Self { regime_loss: true, message: e.to_string() },
            other => Self::invariant(other),
        }
    }
}

/// One family's driver as seen by the run loop.
trait Runner {
    fn time(&self) -> f64;
    fn stable_dt(&self) -> Result<f64, Failure>;
    fn step(&mut self, dt: f64) -> Result<(), Failure>;
    fn sample(&self, quantity: &str) -> f64;
    /// Diagnostics raised by the last step.
    fn take_flags(&mut self) -> Vec<String> {
        Vec::new()
    }
    fn summary(&self, _out: &mut BTreeMap<String, f64>) {}
}

/// Whether the second state component is a discharge or a velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FlowForm {
    Discharge,
    Velocity,
}

type Profile = Arc<dyn Fn(f64) -> Vec2 + Send + Sync>;

fn initial_profile(spec: &InitialSpec, form: FlowForm, gravity: f64, depth: impl Fn(f64) -> f64 + Send + Sync + 'static, level: f64) -> Profile {
    match spec.clone() {
        InitialSpec::Still => Arc::new(move |_| Vec2::new(level, 0.0)),
        InitialSpec::Uniform { zeta, flow } => Arc::new(move |_| Vec2::new(zeta, flow)),
        InitialSpec::Gaussian { center, width, amplitude, direction } => Arc::new(move |x| {
            let bump = amplitude * (-((x - center) / width).powi(2)).exp();
            let h = depth(x) + level;
            let speed = match form {
                FlowForm::Discharge => (gravity * h).sqrt(),
                FlowForm::Velocity => (gravity / h).sqrt(),
            };
            let sign = match direction {
                Direction::Right => 1.0,
                Direction::Left => -1.0,
                Direction::Standing => 0.0,
            };
            Vec2::new(level + bump, sign * speed * bump)
        }),
        InitialSpec::Table { x, zeta, flow } => Arc::new(move |s| {
            let k = x.partition_point(|&v| v <= s);
            if k == 0 {
                return Vec2::new(zeta[0], flow[0]);
            }
            if k == x.len() {
                return Vec2::new(zeta[k - 1], flow[k - 1]);
            }
            let w = (s - x[k - 1]) / (x[k] - x[k - 1]);
            Vec2::new(zeta[k - 1] + w * (zeta[k] - zeta[k - 1]), flow[k - 1] + w * (flow[k] - flow[k - 1]))
        }),
    }
}

fn closure(spec: &ClosureSpec, reference: Vec2) -> BoundaryClosure {
    match *spec {
        ClosureSpec::Wall => BoundaryClosure::wall(),
        ClosureSpec::Transparent => BoundaryClosure::Transparent { reference: Some(reference) },
        ClosureSpec::Discharge { mean, amplitude, frequency } => BoundaryClosure::LinearNu {
            nu: Arc::new(|_| Vec2::new(0.0, 1.0)),
            g: Arc::new(move |t| mean + amplitude * (frequency * t).sin()),
        },
        ClosureSpec::Elevation { mean, amplitude, frequency } => BoundaryClosure::LinearNu {
            nu: Arc::new(|_| Vec2::new(1.0, 0.0)),
            g: Arc::new(move |t| mean + amplitude * (frequency * t).sin()),
        },
    }
}

/// Nodes next to one end of `[a, b]` and the initial data there, for the
/// corner compatibility checks.
fn corner_samples(profile: &Profile, a: f64, b: f64, side: Side) -> (Vec<f64>, Vec<Vec2>) {
    let h = 1e-3 * (b - a);
    let n = 2 * STENCIL;
    let x: Vec<f64> = match side {
        Side::Left => (0..n).map(|k| a + h * k as f64).collect(),
        Side::Right => (0..n).rev().map(|k| b - h * k as f64).collect(),
    };
    let u = x.iter().map(|&s| profile(s)).collect();
    (x, u)
}

// ---------------------------------------------------------------- IBVP

struct IbvpRunner {
    state: SolverState,
    left: BoundaryClosure,
    right: BoundaryClosure,
    gamma: f64,
    trajectory: Trajectory,
}

impl IbvpRunner {
    fn new(p: &IbvpPhysics, scn: &Scenario) -> Self {
        let sys = Arc::new(ShallowWater::new(p.gravity, p.rest_depth));
        let rest = p.rest_depth;
        let profile = initial_profile(&scn.initial, FlowForm::Discharge, p.gravity, move |_| rest, 0.0);
        let grid = MovingGrid::uniform(0.0, p.length, scn.numerics.cells, GridKind::Lagrangian, Side::Left);
        let domain = Domain::new(sys, grid, |x| profile(x));
        let state = SolverState::new(domain).with_cfl(scn.numerics.cfl);
        let dx = p.length / scn.numerics.cells as f64;
        let trajectory = Trajectory { times: vec![0.0], dx, fields: vec![state.states()] };
        Self { left: closure(&p.left, profile(0.0)), right: closure(&p.right, profile(p.length)), state, gamma: p.norm_gamma, trajectory }
    }
}

impl Runner for IbvpRunner {
    fn time(&self) -> f64 {
        self.state.t
    }
    fn stable_dt(&self) -> Result<f64, Failure> {
        Ok(self.state.stable_dt())
    }
    fn step(&mut self, dt: f64) -> Result<(), Failure> {
        self.state.step(&self.left, &self.right, Some(dt))?;
        self.trajectory.times.push(self.state.t);
        self.trajectory.fields.push(self.state.states());
        Ok(())
    }
    fn sample(&self, quantity: &str) -> f64 {
        let traces = || self.state.boundary_traces(&self.left, &self.right).map(|(l, r)| (l.state, r.state));
        match quantity {
            "mass" => self.state.domain.total_density()[0],
            "momentum" => self.state.domain.total_density()[1],
            "left_zeta" => traces().map_or(f64::NAN, |t| t.0[0]),
            "left_q" => traces().map_or(f64::NAN, |t| t.0[1]),
            "right_zeta" => traces().map_or(f64::NAN, |t| t.1[0]),
            "right_q" => traces().map_or(f64::NAN, |t| t.1[1]),
            _ => f64::NAN,
        }
    }
    fn summary(&self, out: &mut BTreeMap<String, f64>) {
        if self.trajectory.times.len() >= 2 {
            let r = weighted_norms(&self.trajectory, self.gamma, 1);
            out.insert("norm_gamma".into(), r.gamma);
            out.insert("norm_time".into(), r.time);
            out.insert("weighted_sup_norm".into(), r.sup_norm);
            out.insert("weighted_integral_norm".into(), r.integral_norm);
            out.insert("weighted_trace_norm".into(), r.trace_norm);
            out.insert("weighted_dual_norm".into(), r.dual_norm);
        }
    }
}

// ----------------------------------------------------------- kinematic

/// Wall moving with the fluid, its velocity prescribed in time.
struct PaddleModel {
    amplitude: f64,
    frequency: f64,
}

impl PaddleModel {
    fn velocity(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t).sin()
    }
}

impl KinematicModel for PaddleModel {
    fn front_speed(&self, u: Vec2) -> f64 {
        u[1]
    }
    fn closure(&self, t: f64, _ode: &[f64]) -> BoundaryCondition {
        BoundaryCondition::Linear { nu: Vec2::new(0.0, 1.0), g: self.velocity(t) }
    }
}

struct KinematicRunner {
    driver: KinematicDriver<PaddleModel>,
}

fn paddle_setup(p: &KinematicPhysics, scn: &Scenario) -> (Arc<ShallowWaterVelocity>, Profile, PaddleModel) {
    let sys = Arc::new(ShallowWaterVelocity::new(p.gravity, p.rest_depth));
    let rest = p.rest_depth;
    let profile = initial_profile(&scn.initial, FlowForm::Velocity, p.gravity, move |_| rest, 0.0);
    (sys, profile, PaddleModel { amplitude: p.wall_amplitude, frequency: p.wall_frequency })
}

impl KinematicRunner {
    fn new(p: &KinematicPhysics, scn: &Scenario) -> Self {
        let (sys, profile, model) = paddle_setup(p, scn);
        let grid = MovingGrid::uniform(0.0, p.length, scn.numerics.cells, GridKind::Lagrangian, Side::Left);
        let domain = Domain::new(sys, grid, |x| profile(x));
        let far = BoundaryClosure::Transparent { reference: Some(profile(p.length)) };
        let mut driver = KinematicDriver::new(domain, model, far, Vec::new());
        driver.cfl = scn.numerics.cfl;
        Self { driver }
    }
}

impl Runner for KinematicRunner {
    fn time(&self) -> f64 {
        self.driver.t
    }
    fn stable_dt(&self) -> Result<f64, Failure> {
        Ok(self.driver.stable_dt()?)
    }
    fn step(&mut self, dt: f64) -> Result<(), Failure> {
        self.driver.step(Some(dt))?;
        Ok(())
    }
    fn sample(&self, quantity: &str) -> f64 {
        match quantity {
            "xbar" => self.driver.domain.grid.phi[0],
            "xbar_dot" => self.driver.domain.grid.phi_t[0],
            "wall_zeta" => self.driver.trace().map_or(f64::NAN, |u| u[0]),
            "wall_v" => self.driver.trace().map_or(f64::NAN, |u| u[1]),
            _ => f64::NAN,
        }
    }
}

// ------------------------------------------------------------- contact

type LinearInterface = FnInterface<Box<dyn Fn(f64, f64) -> Vec2 + Send + Sync>>;

fn contact_interface(p: &ContactPhysics) -> LinearInterface {
    let (v, s, r) = (p.interface_value, p.interface_slope, p.interface_rate);
    FnInterface(Box::new(move |t, x| Vec2::new(v[0] + s[0] * x + r[0] * t, v[1] + s[1] * x + r[1] * t)))
}

fn contact_profile(p: &ContactPhysics, scn: &Scenario) -> Profile {
    let rest = p.rest_depth;
    initial_profile(&scn.initial, FlowForm::Discharge, p.gravity, move |_| rest, 0.0)
}

struct ContactRunner {
    driver: ContactDriver<LinearInterface>,
    clamped_seen: usize,
}

impl ContactRunner {
    fn new(p: &ContactPhysics, scn: &Scenario) -> Result<Self, Failure> {
        let sys = Arc::new(ShallowWater::new(p.gravity, p.rest_depth));
        let profile = contact_profile(p, scn);
        let kind = GridKind::Cutoff(CutoffProfile::new(scn.numerics.cutoff_epsilon));
        let grid = MovingGrid::uniform(0.0, p.length, scn.numerics.cells, kind, Side::Left);
        let domain = Domain::new(sys, grid, |x| profile(x));
        let far = BoundaryClosure::Transparent { reference: Some(profile(p.length)) };
        let mut driver = ContactDriver::new(domain, contact_interface(p), far, ContactLaw::FirstOrder, Vec::new(), scn.numerics.c0)?;
        driver.cfl = scn.numerics.cfl;
        Ok(Self { driver, clamped_seen: 0 })
    }
}

impl Runner for ContactRunner {
    fn time(&self) -> f64 {
        self.driver.t
    }
    fn stable_dt(&self) -> Result<f64, Failure> {
        Ok(self.driver.stable_dt())
    }
    fn step(&mut self, dt: f64) -> Result<(), Failure> {
        self.driver.step(Some(dt))?;
        Ok(())
    }
    fn sample(&self, quantity: &str) -> f64 {
        match quantity {
            "xbar" => self.driver.front.xbar,
            "xbar_dot" => self.driver.front.xbar_dot,
            "dirichlet_defect" => self.driver.monitors.max_dirichlet_defect,
            _ => f64::NAN,
        }
    }
    fn take_flags(&mut self) -> Vec<String> {
        let clamped = self.driver.monitors.clamped_steps;
        let flags = if clamped > self.clamped_seen { vec!["contact denominator clamped".to_string()] } else { Vec::new() };
        self.clamped_seen = clamped;
        flags
    }
}

// ------------------------------------------------- transmission, shock

struct TwoSidedRunner {
    driver: TransmissionDriver,
}

impl TwoSidedRunner {
    fn build(left: Arc<dyn System>, right: Arc<dyn System>, problem: TransmissionProblem, half_width: f64, scn: &Scenario, profile: Profile) -> Result<Self, Failure> {
        let kind = GridKind::Cutoff(CutoffProfile::new(scn.numerics.cutoff_epsilon));
        let cells = scn.numerics.cells;
        let ld = Domain::new(left, MovingGrid::uniform(-half_width, 0.0, cells, kind, Side::Right), |x| profile(x));
        let rd = Domain::new(right, MovingGrid::uniform(0.0, half_width, cells, kind, Side::Left), |x| profile(x));
        let far_left = BoundaryClosure::Transparent { reference: Some(profile(-half_width)) };
        let far_right = BoundaryClosure::Transparent { reference: Some(profile(half_width)) };
        let mut driver = TransmissionDriver::new(problem, ld, rd, far_left, far_right)?;
        driver.cfl = scn.numerics.cfl;
        Ok(Self { driver })
    }

    fn transmission(p: &TransmissionPhysics, scn: &Scenario) -> Result<Self, Failure> {
        let left: Arc<dyn System> = Arc::new(ShallowWater::new(p.gravity, p.depth_left));
        let right: Arc<dyn System> = Arc::new(ShallowWater::new(p.gravity, p.depth_right));
        let (dl, dr) = (p.depth_left, p.depth_right);
        let profile = initial_profile(&scn.initial, FlowForm::Discharge, p.gravity, move |x| if x < 0.0 { dl } else { dr }, 0.0);
        let problem = TransmissionProblem::continuity(Arc::clone(&left), Arc::clone(&right), scn.numerics.c0);
        Self::build(left, right, problem, p.half_width, scn, profile)
    }

    fn shock(p: &ShockPhysics, scn: &Scenario) -> Result<Self, Failure> {
        let sys: Arc<dyn System> = Arc::new(ShallowWater::new(p.gravity, p.rest_depth));
        let (l, r) = (Vec2::from(p.left_state), Vec2::from(p.right_state));
        let profile: Profile = Arc::new(move |x| if x < 0.0 { l } else { r });
        let problem = TransmissionProblem::lax_shock(Arc::clone(&sys), Arc::clone(&sys), scn.numerics.c0);
        Self::build(Arc::clone(&sys), sys, problem, p.half_width, scn, profile)
    }
}

impl Runner for TwoSidedRunner {
    fn time(&self) -> f64 {
        self.driver.t
    }
    fn stable_dt(&self) -> Result<f64, Failure> {
        Ok(self.driver.stable_dt())
    }
    fn step(&mut self, dt: f64) -> Result<(), Failure> {
        self.driver.step(Some(dt))?;
        Ok(())
    }
    fn sample(&self, quantity: &str) -> f64 {
        let d = &self.driver;
        match quantity {
            "xbar" => d.front.xbar,
            "chi" => d.front.xbar_dot,
            "phi_residual" => d.rh_residual(),
            "interface_residual" => d.traces.residual,
            "left_zeta" => d.traces.left[0],
            "left_q" => d.traces.left[1],
            "right_zeta" => d.traces.right[0],
            "right_q" => d.traces.right[1],
            "mass" => d.total_density()[0],
            _ => f64::NAN,
        }
    }
    fn summary(&self, out: &mut BTreeMap<String, f64>) {
        out.insert("max_interface_residual".into(), self.driver.max_residual);
    }
}

// -------------------------------------------------------------- piston

fn piston_scenario(p: &PistonPhysics) -> Result<PistonScenario, Failure> {
    let orientation = match p.force_orientation {
        Orientation::Published => ForceOrientation::Published,
        Orientation::Physical => ForceOrientation::Physical,
    };
    let mut params = PistonParams {
        mass: p.mass,
        stiffness: p.stiffness,
        spring_rest: p.spring_rest,
        density: p.density,
        gravity: p.gravity,
        rest_depth: p.rest_depth,
        position: 0.0,
        velocity: p.velocity,
        orientation,
    };
    let equilibrium = PistonScenario::new(params)?.equilibrium;
    params.position = p.position.unwrap_or(equilibrium);
    Ok(PistonScenario::new(params)?)
}

fn piston_profile(p: &PistonPhysics, scn: &Scenario) -> Profile {
    let rest = p.rest_depth;
    initial_profile(&scn.initial, FlowForm::Velocity, p.gravity, move |_| rest, 0.0)
}

struct PistonRunner {
    run: PistonRun,
}

impl PistonRunner {
    fn new(p: &PistonPhysics, scn: &Scenario) -> Result<Self, Failure> {
        let scenario = piston_scenario(p)?;
        let x0 = scenario.params.position;
        let profile = piston_profile(p, scn);
        let far = match p.far_field {
            FarEnd::Wall => BoundaryClosure::wall(),
            FarEnd::Transparent => BoundaryClosure::Transparent { reference: Some(profile(x0 + p.length)) },
        };
        let mut run = PistonRun::new(scenario, p.length, scn.numerics.cells, far, p.flat_surface, |x| profile(x));
        run.driver.cfl = scn.numerics.cfl;
        Ok(Self { run })
    }
}

impl Runner for PistonRunner {
    fn time(&self) -> f64 {
        self.run.driver.t
    }
    fn stable_dt(&self) -> Result<f64, Failure> {
        Ok(self.run.driver.stable_dt()?)
    }
    fn step(&mut self, dt: f64) -> Result<(), Failure> {
        self.run.step(Some(dt))?;
        Ok(())
    }
    fn sample(&self, quantity: &str) -> f64 {
        match quantity {
            "xbar" => self.run.position(),
            "xbar_dot" => self.run.velocity(),
            "wall_zeta" => self.run.driver.trace().map_or(f64::NAN, |u| u[0]),
            "wall_node" => self.run.wall_node(),
            _ => f64::NAN,
        }
    }
    fn summary(&self, out: &mut BTreeMap<String, f64>) {
        out.insert("equilibrium".into(), self.run.scenario.equilibrium);
        out.insert("equilibrium_offset".into(), self.run.scenario.equilibrium_offset());
        out.insert("reintegration_defect".into(), self.run.reintegration_defect());
    }
}

// ------------------------------------------------------- floating body

fn lid(spec: &LidSpec) -> Result<Lid, WaveError> {
    match spec.clone() {
        LidSpec::Flat { level, interval } => Lid::new(LidShape::Flat { level }, interval[0], interval[1]),
        LidSpec::Parabolic { center, bottom, curvature, interval } => {
            Lid::new(LidShape::Parabolic { center, bottom, curvature }, interval[0], interval[1])
        }
        LidSpec::Cosine { center, bottom, depth, wavenumber, interval } => {
            Lid::new(LidShape::Cosine { center, bottom, depth, wavenumber }, interval[0], interval[1])
        }
        LidSpec::Table { x, z } => Lid::tabulated(x, z),
    }
}

fn floating_scenario(p: &FloatingPhysics) -> Result<FloatingBodyScenario, WaveError> {
    let frame = BodyFrame { x_g: p.frame[0], z_g: p.frame[1] };
    let mut scn = FloatingBodyScenario {
        lid: lid(&p.lid)?,
        frame,
        gravity: p.gravity,
        rest_depth: p.rest_depth,
        density: p.density,
        atmospheric_pressure: p.atmospheric_pressure,
        mode: BodyMode::Fixed,
        contacts: (p.contacts[0], p.contacts[1]),
        interior_cells: p.interior_cells,
    };
    scn.mode = match p.mode {
        ModeSpec::Fixed => BodyMode::Fixed,
        ModeSpec::Heave { amplitude, frequency } => BodyMode::Prescribed(PrescribedMotion::heave(frame, amplitude, frequency)),
        ModeSpec::Roll { amplitude, frequency } => BodyMode::Prescribed(PrescribedMotion::roll(frame, amplitude, frequency)),
        ModeSpec::Free { mass, inertia } => {
            let mass = match mass {
                Some(m) => m,
                None => archimedean_mass(&scn)?,
            };
            BodyMode::Free { mass, inertia }
        }
    };
    Ok(scn)
}

fn floating_profile(p: &FloatingPhysics, scn: &Scenario, level: f64) -> Profile {
    let rest = p.rest_depth;
    initial_profile(&scn.initial, FlowForm::Discharge, p.gravity, move |_| rest, level)
}

struct FloatingRunner {
    driver: FloatingBodyDriver,
    initial_mass: f64,
    clamped_seen: usize,
}

impl FloatingRunner {
    fn new(p: &FloatingPhysics, scn: &Scenario) -> Result<Self, Failure> {
        let body = floating_scenario(p)?;
        let level = body.lid.value(p.contacts[0]);
        let profile = floating_profile(p, scn, level);
        let setup = ExteriorSetup {
            left_end: p.exterior[0],
            right_end: p.exterior[1],
            cells: [scn.numerics.cells, scn.numerics.cells],
            cutoff_epsilon: scn.numerics.cutoff_epsilon,
            far_field: match p.far_field {
                FarEnd::Wall => FarField::Wall,
                FarEnd::Transparent => FarField::Transparent,
            },
            c0: scn.numerics.c0,
        };
        let state = RigidBodyState::at_rest(body.frame);
        let mut driver = FloatingBodyDriver::new(body, setup, state, |x| profile(x))?;
        driver.cfl = scn.numerics.cfl;
        let initial_mass = driver.water_mass()?;
        Ok(Self { driver, initial_mass, clamped_seen: 0 })
    }
}

impl Runner for FloatingRunner {
    fn time(&self) -> f64 {
        self.driver.t
    }
    fn stable_dt(&self) -> Result<f64, Failure> {
        Ok(self.driver.stable_dt())
    }
    fn step(&mut self, dt: f64) -> Result<(), Failure> {
        self.driver.step(Some(dt))?;
        Ok(())
    }
    fn sample(&self, quantity: &str) -> f64 {
        let d = &self.driver;
        match quantity {
            "x_minus" => d.contacts().0,
            "x_plus" => d.contacts().1,
            "speed_minus" => d.contact_speeds().0,
            "speed_plus" => d.contact_speeds().1,
            "x_g" => d.body.x_g,
            "z_g" => d.body.z_g,
            "theta" => d.body.theta,
            "u_g" => d.body.u_g,
            "w_g" => d.body.w_g,
            "omega" => d.body.omega,
            "qbar" => d.body.interior_flux,
            "water_mass" => d.water_mass().unwrap_or(f64::NAN),
            "solvability_residual" => d.interior.solvability_residual(),
            "added_mass_min_eig" => d.monitors.min_added_mass_eigenvalue,
            _ => f64::NAN,
        }
    }
    fn take_flags(&mut self) -> Vec<String> {
        let clamped = self.driver.monitors.clamped_steps;
        let flags = if clamped > self.clamped_seen { vec!["contact denominator clamped".to_string()] } else { Vec::new() };
        self.clamped_seen = clamped;
        flags
    }
    fn summary(&self, out: &mut BTreeMap<String, f64>) {
        let m = &self.driver.monitors;
        out.insert("max_solvability_residual".into(), m.max_solvability_residual);
        out.insert("min_added_mass_eigenvalue".into(), m.min_added_mass_eigenvalue);
        out.insert("max_added_mass_asymmetry".into(), m.max_added_mass_asymmetry);
        if let Ok(mass) = self.driver.water_mass() {
            out.insert("water_mass_drift".into(), mass - self.initial_mass);
        }
        if let BodyMode::Free { mass, .. } = self.driver.scenario.mode {
            out.insert("body_mass".into(), mass);
        }
    }
}

fn build(scn: &Scenario) -> Result<Box<dyn Runner>, Failure> {
    Ok(match &scn.physics {
        Physics::Ibvp(p) => Box::new(IbvpRunner::new(p, scn)),
        Physics::Kinematic(p) => Box::new(KinematicRunner::new(p, scn)),
        Physics::Contact(p) => Box::new(ContactRunner::new(p, scn)?),
        Physics::Transmission(p) => Box::new(TwoSidedRunner::transmission(p, scn)?),
        Physics::Shock(p) => Box::new(TwoSidedRunner::shock(p, scn)?),
        Physics::Piston(p) => Box::new(PistonRunner::new(p, scn)?),
        Physics::FloatingBody(p) => Box::new(FloatingRunner::new(p, scn)?),
    })
}

/// Run a validated scenario. Failures end the run early; the record then
/// holds every sample taken so far and the triggering diagnostic.
pub fn run(scenario: &Scenario) -> RunRecord {
    let mut columns = vec!["t".to_string()];
    columns.extend(scenario.outputs.iter().map(|o| o.quantity.clone()));
    let mut record = RunRecord {
        columns,
        rows: Vec::new(),
        diagnostics: Vec::new(),
        summary: BTreeMap::new(),
        outcome: Outcome::Completed,
        scenario: scenario.clone(),
    };
    if let Physics::Piston(p) = &scenario.physics {
        record.summary.insert("equilibrium_offset".into(), crate::scenario::piston_offset(p));
    }
    let end = scenario.numerics.end_time;
    if end <= 0.0 {
        return record;
    }
    let mut runner = match build(scenario) {
        Ok(r) => r,
        Err(f) => {
            abort(&mut record, 0.0, f);
            return record;
        }
    };
    let sample = |runner: &dyn Runner, step: Option<usize>| -> Vec<Option<f64>> {
        let mut row = vec![Some(runner.time())];
        for o in &scenario.outputs {
            let due = step.is_none_or(|k| k % o.cadence == 0);
            row.push(due.then(|| runner.sample(&o.quantity)));
        }
        row
    };
    record.rows.push(sample(runner.as_ref(), None));
    let tolerance = 1e-12 * end;
    let mut steps = 0usize;
    while runner.time() < end - tolerance {
        if steps >= scenario.numerics.max_steps {
            let t = runner.time();
            abort(&mut record, t, Failure::invariant(format!("step limit {} reached before end_time", scenario.numerics.max_steps)));
            break;
        }
        let dt = match scenario.numerics.fixed_dt {
            Some(dt) => Ok(dt),
            None => runner.stable_dt(),
        };
        let t = runner.time();
        let result = dt.and_then(|dt| {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Failure::invariant(format!("time step {dt} is not positive")));
            }
            runner.step(dt.min(end - t))
        });
        if let Err(f) = result {
            abort(&mut record, t, f);
            break;
        }
        steps += 1;
        for message in runner.take_flags() {
            record.diagnostics.push(Diagnostic { t: runner.time(), message });
        }
        let last = runner.time() >= end - tolerance;
        let row = sample(runner.as_ref(), if last { None } else { Some(steps) });
        if row[1..].iter().any(Option::is_some) {
            record.rows.push(row);
        }
    }
    record.summary.insert("steps".into(), steps as f64);
    runner.summary(&mut record.summary);
    record
}

fn abort(record: &mut RunRecord, t: f64, failure: Failure) {
    record.diagnostics.push(Diagnostic { t, message: failure.message.clone() });
    record.outcome = if failure.regime_loss {
        Outcome::RegimeLoss { t, message: failure.message }
    } else {
        Outcome::InvariantAbort { t, message: failure.message }
    };
}

fn compat_failure(e: impl ToString) -> ScenarioError {
    ScenarioError::Validation(format!("compatibility check failed: {}", e.to_string()))
}

/// Corner compatibility residuals of the initial data, indexed by order.
pub fn compatibility_residuals(scn: &Scenario) -> Result<Vec<f64>, ScenarioError> {
    let order = 1;
    match &scn.physics {
        Physics::Ibvp(p) => {
            let sys = ShallowWater::new(p.gravity, p.rest_depth);
            let rest = p.rest_depth;
            let profile = initial_profile(&scn.initial, FlowForm::Discharge, p.gravity, move |_| rest, 0.0);
            let mut worst = vec![0.0; order + 1];
            for (side, spec) in [(Side::Left, &p.left), (Side::Right, &p.right)] {
                let (x, u) = corner_samples(&profile, 0.0, p.length, side);
                let reference = match side {
                    Side::Left => profile(0.0),
                    Side::Right => profile(p.length),
                };
                let c = closure(spec, reference);
                let report = check_compatibility(&CompatProblem::Ibvp { sys: &sys, data: InitialData { x: &x, u: &u, boundary: side }, closure: &c }, order)
                    .map_err(compat_failure)?;
                merge(&mut worst, &report.residuals);
            }
            Ok(worst)
        }
        Physics::Kinematic(p) => {
            let (sys, profile, model) = paddle_setup(p, scn);
            let (x, u) = corner_samples(&profile, 0.0, p.length, Side::Left);
            let c = BoundaryClosure::LinearNu {
                nu: Arc::new(|_| Vec2::new(0.0, 1.0)),
                g: Arc::new(move |t| model.velocity(t)),
            };
            let speed = |u: Vec2| u[1];
            let problem = CompatProblem::Kinematic { sys: sys.as_ref(), data: InitialData { x: &x, u: &u, boundary: Side::Left }, closure: &c, front_speed: &speed };
            Ok(check_compatibility(&problem, order).map_err(compat_failure)?.residuals)
        }
        Physics::Contact(p) => {
            let sys = ShallowWater::new(p.gravity, p.rest_depth);
            let profile = contact_profile(p, scn);
            let (x, u) = corner_samples(&profile, 0.0, p.length, Side::Left);
            let interface = contact_interface(p);
            let problem = CompatProblem::Contact {
                sys: &sys,
                data: InitialData { x: &x, u: &u, boundary: Side::Left },
                interface: &interface,
                c0: scn.numerics.c0,
                projection: None,
            };
            // An order-0 mismatch makes the higher orders meaningless; report it alone.
            let zeroth = check_compatibility(&problem, 0).map_err(compat_failure)?;
            if zeroth.max_residual() > crate::scenario::STRICT_COMPAT_TOLERANCE {
                return Ok(zeroth.residuals);
            }
            Ok(check_compatibility(&problem, order).map_err(compat_failure)?.residuals)
        }
        Physics::Transmission(p) => {
            let (dl, dr) = (p.depth_left, p.depth_right);
            let profile = initial_profile(&scn.initial, FlowForm::Discharge, p.gravity, move |x| if x < 0.0 { dl } else { dr }, 0.0);
            let (l, r) = (profile(-1e-12 * p.half_width), profile(0.0));
            Ok(vec![(l - r).norm()])
        }
        Physics::Shock(p) => {
            let sys = ShallowWater::new(p.gravity, p.rest_depth);
            let (_, residual) = rh_speed_and_residual(&sys, &sys, Vec2::from(p.left_state), Vec2::from(p.right_state)).map_err(compat_failure)?;
            Ok(vec![residual])
        }
        Physics::Piston(p) => {
            let scenario = piston_scenario(p).map_err(|f| compat_failure(f.message))?;
            let profile = piston_profile(p, scn);
            let x0 = scenario.params.position;
            let (x, u) = corner_samples(&profile, x0, x0 + p.length, Side::Left);
            let problem = CompatProblem::Piston { data: InitialData { x: &x, u: &u, boundary: Side::Left }, piston: scenario.data() };
            Ok(check_compatibility(&problem, order).map_err(compat_failure)?.residuals)
        }
        Physics::FloatingBody(p) => {
            let body = floating_scenario(p).map_err(compat_failure)?;
            let level = body.lid.value(p.contacts[0]);
            let profile = floating_profile(p, scn, level);
            let state = RigidBodyState::at_rest(body.frame);
            let field = interior_solve(&body, p.contacts[0], p.contacts[1], &state, 0.0).map_err(compat_failure)?;
            let mismatch = [field.lower, field.upper]
                .iter()
                .map(|tr| (profile(tr.x) - Vec2::new(tr.elevation, tr.flux)).norm())
                .fold(0.0, f64::max);
            Ok(vec![mismatch])
        }
    }
}

fn merge(worst: &mut [f64], residuals: &[f64]) {
    for (w, r) in worst.iter_mut().zip(residuals) {
        if r.abs() > w.abs() {
            *w = *r;
        }
    }
}
