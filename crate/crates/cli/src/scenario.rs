//! Scenario files.
//!
//! A scenario is a TOML document with a top-level `family`, a `[numerics]`
//! table, a `[physics]` table whose keys depend on the family, an optional
//! `[initial]` table and an optional list of `[[outputs]]`.

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::run::compatibility_residuals;

/// Compatibility residuals above this value are refused in strict mode.
pub const STRICT_COMPAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ibvp,
    Kinematic,
    Contact,
    Transmission,
    Shock,
    Piston,
    FloatingBody,
}

impl Family {
    /// Quantities a run of this family can report, in column order.
    pub fn quantities(self) -> &'static [&'static str] {
        match self {
            Self::Ibvp => &["mass", "momentum", "left_zeta", "left_q", "right_zeta", "right_q"],
            Self::Kinematic => &["xbar", "xbar_dot", "wall_zeta", "wall_v"],
            Self::Contact => &["xbar", "xbar_dot", "dirichlet_defect"],
            Self::Transmission => &["xbar", "left_zeta", "left_q", "right_zeta", "right_q", "interface_residual", "mass"],
            Self::Shock => &["xbar", "chi", "phi_residual", "mass"],
            Self::Piston => &["xbar", "xbar_dot", "wall_zeta", "wall_node"],
            Self::FloatingBody => &[
                "x_minus",
                "x_plus",
                "speed_minus",
                "speed_plus",
                "x_g",
                "z_g",
                "theta",
                "u_g",
                "w_g",
                "omega",
                "qbar",
                "water_mass",
                "solvability_residual",
                "added_mass_min_eig",
            ],
        }
    }
}

fn default_cfl() -> f64 {
    0.45
}
fn default_epsilon() -> f64 {
    1.0
}
fn default_c0() -> f64 {
    1e-3
}
fn default_max_steps() -> usize {
    1_000_000
}
fn default_gravity() -> f64 {
    9.81
}
fn default_one() -> f64 {
    1.0
}
fn default_cadence() -> usize {
    1
}
fn default_interior_cells() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub cells: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub end_time: f64,
    #[serde(default = "default_epsilon")]
    pub cutoff_epsilon: f64,
    #[serde(default)]
    pub strict_compat: bool,
    /// Threshold for clamped contact denominators and subsonic margins.
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Constant time step; the CFL limit is used when absent.
    #[serde(default)]
    pub fixed_dt: Option<f64>,
}

/// Propagation direction of a Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Right,
    Left,
    /// Elevation only, no flow.
    Standing,
}

/// Initial data; `flow` is the discharge or the velocity depending on the family.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    /// Still water at the family's rest level.
    #[default]
    Still,
    Uniform { zeta: f64, flow: f64 },
    /// Gaussian elevation `amplitude exp(-((x - center)/width)^2)` above the rest
    /// level, with the flow of a linear simple wave.
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        direction: Direction,
    },
    /// Piecewise-linear samples, continued by the end values.
    Table { x: Vec<f64>, zeta: Vec<f64>, flow: Vec<f64> },
}

/// Boundary closure of a fixed end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureSpec {
    Wall,
    Transparent,
    /// `q = mean + amplitude sin(frequency t)`.
    Discharge {
        #[serde(default)]
        mean: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `zeta = mean + amplitude sin(frequency t)`.
    Elevation {
        #[serde(default)]
        mean: f64,
        amplitude: f64,
        frequency: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbvpPhysics {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_one")]
    pub rest_depth: f64,
    pub length: f64,
    pub left: ClosureSpec,
    pub right: ClosureSpec,
    /// Exponential weight of the reported space-time norms.
    #[serde(default = "default_one")]
    pub norm_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicPhysics {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_one")]
    pub rest_depth: f64,
    pub length: f64,
    /// Wall velocity `amplitude sin(frequency t)`.
    pub wall_amplitude: f64,
    pub wall_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactPhysics {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_one")]
    pub rest_depth: f64,
    pub length: f64,
    /// `U_i(t, x) = value + slope (x - x0) + rate t`, with `x0` the initial front.
    pub interface_value: [f64; 2],
    pub interface_slope: [f64; 2],
    #[serde(default)]
    pub interface_rate: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionPhysics {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub depth_left: f64,
    pub depth_right: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockPhysics {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_one")]
    pub rest_depth: f64,
    pub half_width: f64,
    /// `(zeta, q)` on each side of the initial jump at `x = 0`.
    pub left_state: [f64; 2],
    pub right_state: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarEnd {
    Wall,
    #[default]
    Transparent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Published,
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PistonPhysics {
    pub mass: f64,
    pub stiffness: f64,
    #[serde(default)]
    pub spring_rest: f64,
    #[serde(default = "default_one")]
    pub density: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_one")]
    pub rest_depth: f64,
    pub length: f64,
    /// Initial wall position; the equilibrium when absent.
    #[serde(default)]
    pub position: Option<f64>,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default)]
    pub force_orientation: Orientation,
    /// Ignore the water elevation in the wall force.
    #[serde(default)]
    pub flat_surface: bool,
    #[serde(default)]
    pub far_field: FarEnd,
    /// `x_eq - x0`, derived on loading.
    #[serde(default)]
    pub equilibrium_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum LidSpec {
    Flat { level: f64, interval: [f64; 2] },
    Parabolic { center: f64, bottom: f64, curvature: f64, interval: [f64; 2] },
    Cosine { center: f64, bottom: f64, depth: f64, wavenumber: f64, interval: [f64; 2] },
    Table { x: Vec<f64>, z: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSpec {
    Fixed,
    Heave { amplitude: f64, frequency: f64 },
    Roll { amplitude: f64, frequency: f64 },
    /// Free body; the mass balancing the hydrostatic lift is used when absent.
    Free {
        #[serde(default)]
        mass: Option<f64>,
        inertia: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloatingPhysics {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_one")]
    pub rest_depth: f64,
    #[serde(default = "default_one")]
    pub density: f64,
    #[serde(default)]
    pub atmospheric_pressure: f64,
    pub lid: LidSpec,
    pub contacts: [f64; 2],
    /// Centre of mass `(x_G, z_G)` at `t = 0`.
    #[serde(default)]
    pub frame: [f64; 2],
    pub mode: ModeSpec,
    /// Far ends of the exterior domains.
    pub exterior: [f64; 2],
    #[serde(default = "default_interior_cells")]
    pub interior_cells: usize,
    #[serde(default)]
    pub far_field: FarEnd,
}

/// Family-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Physics {
    Ibvp(IbvpPhysics),
    Kinematic(KinematicPhysics),
    Contact(ContactPhysics),
    Transmission(TransmissionPhysics),
    Shock(ShockPhysics),
    Piston(PistonPhysics),
    FloatingBody(FloatingPhysics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub quantity: String,
    /// Record every `cadence` steps.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

/// A resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub family: Family,
    pub numerics: Numerics,
    pub physics: Physics,
    pub initial: InitialSpec,
    pub outputs: Vec<OutputSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    family: Family,
    numerics: Numerics,
    physics: toml::Table,
    #[serde(default)]
    initial: Option<InitialSpec>,
    #[serde(default)]
    outputs: Vec<OutputSpec>,
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

fn parse_error(text: &str, err: &toml::de::Error, prefix: &str, fallback: usize) -> ScenarioError {
    let offset = err.span().map_or(fallback, |s| s.start);
    let (line, column) = line_column(text, offset);
    ScenarioError::Parse { line, column, message: format!("{prefix}{}", err.message()) }
}

fn physics_offset(text: &str) -> usize {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("[physics") {
            return offset;
        }
        offset += line.len();
    }
    0
}

/// Parse a scenario without validating it.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| parse_error(text, &e, "", 0))?;
    let table = toml::Value::Table(raw.physics);
    let at = physics_offset(text);
    let wrap = |e: toml::de::Error| parse_error(text, &e, "in [physics]: ", at);
    let physics = match raw.family {
        Family::Ibvp => Physics::Ibvp(table.try_into().map_err(wrap)?),
        Family::Kinematic => Physics::Kinematic(table.try_into().map_err(wrap)?),
        Family::Contact => Physics::Contact(table.try_into().map_err(wrap)?),
        Family::Transmission => Physics::Transmission(table.try_into().map_err(wrap)?),
        Family::Shock => Physics::Shock(table.try_into().map_err(wrap)?),
        Family::Piston => {
            let mut p: PistonPhysics = table.try_into().map_err(wrap)?;
            p.equilibrium_offset = Some(piston_offset(&p));
            Physics::Piston(p)
        }
        Family::FloatingBody => Physics::FloatingBody(table.try_into().map_err(wrap)?),
    };
    let outputs = if raw.outputs.is_empty() {
        raw.family.quantities().iter().map(|q| OutputSpec { quantity: (*q).to_string(), cadence: 1 }).collect()
    } else {
        raw.outputs
    };
    Ok(Scenario { family: raw.family, numerics: raw.numerics, physics, initial: raw.initial.unwrap_or_default(), outputs })
}

/// `x_eq - x0 = +-rho g h0^2 / (2k)`.
pub fn piston_offset(p: &PistonPhysics) -> f64 {
    let sign = match p.force_orientation {
        Orientation::Published => 1.0,
        Orientation::Physical => -1.0,
    };
    sign * p.density * p.gravity * p.rest_depth * p.rest_depth / (2.0 * p.stiffness)
}

/// Parse and validate a scenario.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario = parse_scenario(text)?;
    scenario.validate()?;
    Ok(scenario)
}

fn invalid(message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(message.into())
}

fn positive(name: &str, value: f64) -> Result<(), ScenarioError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = &self.numerics;
        if n.cells < 16 {
            return Err(invalid(format!("numerics.cells must be at least 16, got {}", n.cells)));
        }
        if !(n.end_time >= 0.0 && n.end_time.is_finite()) {
            return Err(invalid(format!("numerics.end_time must be finite and nonnegative, got {}", n.end_time)));
        }
        if !(n.cfl > 0.0 && n.cfl <= 1.0) {
            return Err(invalid(format!("numerics.cfl must lie in (0, 1], got {}", n.cfl)));
        }
        positive("numerics.cutoff_epsilon", n.cutoff_epsilon)?;
        positive("numerics.c0", n.c0)?;
        if let Some(dt) = n.fixed_dt {
            positive("numerics.fixed_dt", dt)?;
        }
        let available = self.family.quantities();
        for o in &self.outputs {
            if !available.contains(&o.quantity.as_str()) {
                return Err(invalid(format!(
                    "output quantity `{}` is not produced by the {:?} family (available: {})",
                    o.quantity,
                    self.family,
                    available.join(", ")
                )));
            }
            if o.cadence == 0 {
                return Err(invalid(format!("output `{}` has cadence 0", o.quantity)));
            }
        }
        if let InitialSpec::Table { x, zeta, flow } = &self.initial {
            if x.len() < 2 || zeta.len() != x.len() || flow.len() != x.len() {
                return Err(invalid("initial table needs at least two samples and equal column lengths"));
            }
            if x.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("initial table abscissae must be strictly increasing"));
            }
        }
        if let InitialSpec::Gaussian { width, .. } = &self.initial {
            positive("initial.width", *width)?;
        }
        self.validate_physics()?;
        if n.strict_compat {
            for (order, r) in compatibility_residuals(self)?.iter().enumerate() {
                if !(r.abs() <= STRICT_COMPAT_TOLERANCE) {
                    return Err(invalid(format!(
                        "order-{order} compatibility residual {r:e} exceeds {STRICT_COMPAT_TOLERANCE:e} (strict_compat)"
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_physics(&self) -> Result<(), ScenarioError> {
        match &self.physics {
            Physics::Ibvp(p) => {
                positive("physics.gravity", p.gravity)?;
                positive("physics.rest_depth", p.rest_depth)?;
                positive("physics.length", p.length)
            }
            Physics::Kinematic(p) => {
                positive("physics.gravity", p.gravity)?;
                positive("physics.rest_depth", p.rest_depth)?;
                positive("physics.length", p.length)
            }
            Physics::Contact(p) => {
                positive("physics.gravity", p.gravity)?;
                positive("physics.rest_depth", p.rest_depth)?;
                positive("physics.length", p.length)
            }
            Physics::Transmission(p) => {
                positive("physics.gravity", p.gravity)?;
                positive("physics.depth_left", p.depth_left)?;
                positive("physics.depth_right", p.depth_right)?;
                positive("physics.half_width", p.half_width)
            }
            Physics::Shock(p) => {
                positive("physics.gravity", p.gravity)?;
                positive("physics.rest_depth", p.rest_depth)?;
                positive("physics.half_width", p.half_width)?;
                if p.left_state == p.right_state {
                    return Err(invalid("shock states coincide"));
                }
                Ok(())
            }
            Physics::Piston(p) => {
                for (name, v) in [
                    ("physics.mass", p.mass),
                    ("physics.stiffness", p.stiffness),
                    ("physics.density", p.density),
                    ("physics.gravity", p.gravity),
                    ("physics.rest_depth", p.rest_depth),
                    ("physics.length", p.length),
                ] {
                    positive(name, v)?;
                }
                Ok(())
            }
            Physics::FloatingBody(p) => {
                positive("physics.gravity", p.gravity)?;
                positive("physics.rest_depth", p.rest_depth)?;
                positive("physics.density", p.density)?;
                let [lo, hi] = p.contacts;
                if !(lo < hi) {
                    return Err(invalid(format!("physics.contacts must satisfy x- < x+, got [{lo}, {hi}]")));
                }
                if !(p.exterior[0] < lo && hi < p.exterior[1]) {
                    return Err(invalid("physics.exterior must enclose the contacts"));
                }
                if p.interior_cells < 2 {
                    return Err(invalid("physics.interior_cells must be at least 2"));
                }
                if let ModeSpec::Free { mass, inertia } = &p.mode {
                    positive("physics.mode.inertia", *inertia)?;
                    if let Some(m) = mass {
                        positive("physics.mode.mass", *m)?;
                    }
                }
                Ok(())
            }
        }
    }
}
