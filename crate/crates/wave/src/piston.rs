//! Lateral piston: a spring-mounted wall at the left end of a channel of
//! shallow water, written in `(zeta, v)` variables on a Lagrangian grid.

use std::sync::Arc;

use hyperfront_core::compat::PistonData;
use hyperfront_core::front::{KinematicDriver, KinematicModel};
use hyperfront_core::grid::{GridKind, MovingGrid, Side};
use hyperfront_core::solver::{BoundaryClosure, BoundaryCondition, Domain};
use hyperfront_core::{ShallowWaterVelocity, Vec2};

use crate::WaveError;

/// Sign convention for the hydrostatic force on the piston.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForceOrientation {
    /// Hydrostatic force counted positive, as in the reference model.
    #[default]
    Published,
    /// Water on the right pushes the wall toward negative `x`.
    Physical,
}

impl ForceOrientation {
    pub fn sign(self) -> f64 {
        match self {
            Self::Published => 1.0,
            Self::Physical => -1.0,
        }
    }
}

/// Physical parameters of a piston run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PistonParams {
    pub mass: f64,
    pub stiffness: f64,
    /// Rest position of the spring.
    pub spring_rest: f64,
    pub density: f64,
    pub gravity: f64,
    pub rest_depth: f64,
    /// Initial wall position and velocity.
    pub position: f64,
    pub velocity: f64,
    pub orientation: ForceOrientation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PistonScenario {
    pub params: PistonParams,
    /// Wall position balancing the spring against still water.
    pub equilibrium: f64,
}

impl PistonScenario {
    pub fn new(params: PistonParams) -> Result<Self, WaveError> {
        let p = &params;
        for (name, v) in [("mass", p.mass), ("stiffness", p.stiffness), ("density", p.density), ("gravity", p.gravity), ("rest depth", p.rest_depth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(WaveError::InvalidScenario(format!("{name} must be positive, got {v}")));
            }
        }
        let offset = p.density * p.gravity * p.rest_depth * p.rest_depth / (2.0 * p.stiffness);
        Ok(Self { equilibrium: p.spring_rest + p.orientation.sign() * offset, params })
    }

    /// `x_eq - x0`.
    pub fn equilibrium_offset(&self) -> f64 {
        self.equilibrium - self.params.spring_rest
    }

    pub fn angular_frequency(&self) -> f64 {
        (self.params.stiffness / self.params.mass).sqrt()
    }

    pub fn data(&self) -> PistonData {
        let p = &self.params;
        PistonData {
            gravity: p.gravity,
            rest_depth: p.rest_depth,
            density: p.density,
            mass: p.mass,
            stiffness: p.stiffness,
            equilibrium: self.equilibrium,
            position: p.position,
            velocity: p.velocity,
            force_sign: p.orientation.sign(),
        }
    }
}

/// Front law and Newton's equation of the wall. The ODE state is `[xbar, xbar_dot]`.
#[derive(Debug, Clone, Copy)]
pub struct PistonModel {
    pub data: PistonData,
    /// Ignore the water elevation in the force (decoupled oscillator).
    pub flat_surface: bool,
}

impl PistonModel {
    pub fn rate(&self, ode: &[f64], zeta: f64) -> [f64; 2] {
        let zeta = if self.flat_surface { 0.0 } else { zeta };
        [ode[1], self.data.acceleration(ode[0], zeta)]
    }
}

impl KinematicModel for PistonModel {
    fn front_speed(&self, u: Vec2) -> f64 {
        u[1]
    }

    fn closure(&self, _t: f64, ode: &[f64]) -> BoundaryCondition {
        BoundaryCondition::Linear { nu: Vec2::new(0.0, 1.0), g: ode[1] }
    }

    fn ode_rate(&self, _t: f64, ode: &[f64], trace: Vec2) -> Vec<f64> {
        self.rate(ode, trace[0]).to_vec()
    }
}

/// One recorded step: the step size and the wall traces at both stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PistonStep {
    pub t: f64,
    pub dt: f64,
    pub stage_zeta: [f64; 2],
    pub position: f64,
    pub velocity: f64,
}

/// A channel `[xbar, xbar + length]` driven by the piston at its left end.
pub struct PistonRun {
    pub scenario: PistonScenario,
    pub driver: KinematicDriver<PistonModel>,
    pub steps: Vec<PistonStep>,
}

impl PistonRun {
    /// `initial` gives `(zeta, v)` on the channel at `t = 0`.
    pub fn new(
        scenario: PistonScenario,
        length: f64,
        cells: usize,
        far: BoundaryClosure,
        flat_surface: bool,
        initial: impl Fn(f64) -> Vec2,
    ) -> Self {
        let p = scenario.params;
        let sys = Arc::new(ShallowWaterVelocity::new(p.gravity, p.rest_depth));
        let grid = MovingGrid::uniform(p.position, p.position + length, cells, GridKind::Lagrangian, Side::Left);
        let domain = Domain::new(sys, grid, initial);
        let model = PistonModel { data: scenario.data(), flat_surface };
        let driver = KinematicDriver::new(domain, model, far, vec![p.position, p.velocity]);
        Self { scenario, driver, steps: Vec::new() }
    }

    pub fn position(&self) -> f64 {
        self.driver.ode[0]
    }

    pub fn velocity(&self) -> f64 {
        self.driver.ode[1]
    }

    /// Position of the wall node of the Lagrangian grid.
    pub fn wall_node(&self) -> f64 {
        self.driver.domain.grid.phi[0]
    }

    /// `(sqrt(g h) - v, sqrt(g h) + v)` at the wall.
    pub fn wall_margins(&self) -> Result<(f64, f64), WaveError> {
        let u = self.driver.trace()?;
        let p = &self.scenario.params;
        let c = (p.gravity * (p.rest_depth + u[0]).max(0.0)).sqrt();
        Ok((c - u[1], c + u[1]))
    }

    pub fn step(&mut self, dt: Option<f64>) -> Result<f64, WaveError> {
        let (plus, minus) = self.wall_margins()?;
        if !(plus > 0.0 && minus > 0.0) {
            return Err(WaveError::SubsonicityLoss { plus, minus });
        }
        let dt = self.driver.step(dt)?;
        let traces = &self.driver.stage_traces;
        self.steps.push(PistonStep {
            t: self.driver.t,
            dt,
            stage_zeta: [traces[0].1[0], traces[1].1[0]],
            position: self.position(),
            velocity: self.velocity(),
        });
        Ok(dt)
    }

    /// Integrate Newton's equation alone, fed with the recorded wall
    /// elevations, and return the largest deviation from the coupled run in
    /// position or velocity.
    pub fn reintegration_defect(&self) -> f64 {
        let model = self.driver.model;
        let mut y = [self.scenario.params.position, self.scenario.params.velocity];
        let mut worst: f64 = 0.0;
        for s in &self.steps {
            let r1 = model.rate(&y, s.stage_zeta[0]);
            let stage = [y[0] + s.dt * r1[0], y[1] + s.dt * r1[1]];
            let r2 = model.rate(&stage, s.stage_zeta[1]);
            let second = [stage[0] + s.dt * r2[0], stage[1] + s.dt * r2[1]];
            y = [0.5 * (y[0] + second[0]), 0.5 * (y[1] + second[1])];
            worst = worst.max((y[0] - s.position).abs()).max((y[1] - s.velocity).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PistonParams {
        PistonParams {
            mass: 2.0,
            stiffness: 50.0,
            spring_rest: 0.0,
            density: 1.0,
            gravity: 9.81,
            rest_depth: 1.0,
            position: 0.0,
            velocity: 0.0,
            orientation: ForceOrientation::Published,
        }
    }

    #[test]
    fn equilibrium_offset_is_derived() {
        let s = PistonScenario::new(params()).unwrap();
        assert!((s.equilibrium_offset() - 9.81 / 100.0).abs() < 1e-15);
        let physical = PistonScenario::new(PistonParams { orientation: ForceOrientation::Physical, ..params() }).unwrap();
        assert!((physical.equilibrium_offset() + 9.81 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_mass() {
        assert!(PistonScenario::new(PistonParams { mass: 0.0, ..params() }).is_err());
    }

    #[test]
    fn closure_imposes_wall_velocity() {
        let model = PistonModel { data: PistonScenario::new(params()).unwrap().data(), flat_surface: false };
        match model.closure(0.0, &[0.0, 0.3]) {
            BoundaryCondition::Linear { nu, g } => assert!(nu == Vec2::new(0.0, 1.0) && g == 0.3),
            other => panic!("unexpected closure {other:?}"),
        }
    }
}
