use hyperfront_core::solver::BoundaryClosure;
use hyperfront_core::Vec2;
use hyperfront_wave::piston::{ForceOrientation, PistonParams, PistonRun, PistonScenario};
use hyperfront_wave::WaveError;

const GRAVITY: f64 = 9.81;

fn params(position_offset: f64, velocity: f64) -> PistonParams {
    // Spring rest chosen so that the equilibrium sits at x = 0.
    let offset = GRAVITY / (2.0 * 50.0);
    PistonParams {
        mass: 2.0,
        stiffness: 50.0,
        spring_rest: -offset,
        density: 1.0,
        gravity: GRAVITY,
        rest_depth: 1.0,
        position: position_offset,
        velocity,
        orientation: ForceOrientation::Published,
    }
}

fn still(_: f64) -> Vec2 {
    Vec2::zeros()
}

fn transparent() -> BoundaryClosure {
    BoundaryClosure::Transparent { reference: Some(Vec2::zeros()) }
}

#[test]
fn still_water_equilibrium_is_a_fixed_point() {
    let scenario = PistonScenario::new(params(0.0, 0.0)).unwrap();
    assert!(scenario.equilibrium.abs() < 1e-15);
    let mut run = PistonRun::new(scenario, 10.0, 200, BoundaryClosure::wall(), false, still);
    for _ in 0..500 {
        run.step(Some(2e-3)).unwrap();
        assert!((run.position() - scenario.equilibrium).abs() <= 1e-12);
        assert!(run.velocity().abs() <= 1e-12);
    }
    assert!(run.driver.domain.states().iter().all(|u| u.norm() <= 1e-12));
    assert_eq!(run.wall_node(), 0.0);
}

#[test]
fn flat_surface_oscillator_matches_closed_form() {
    let amplitude = 0.01;
    let scenario = PistonScenario::new(params(amplitude, 0.0)).unwrap();
    let omega = scenario.angular_frequency();
    let period = 2.0 * std::f64::consts::PI / omega;
    let dt = period / 1000.0;
    let mut run = PistonRun::new(scenario, 10.0, 400, transparent(), true, still);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        run.step(Some(dt)).unwrap();
        let t = run.driver.t;
        let exact = scenario.equilibrium + amplitude * (omega * t).cos();
        worst = worst.max((run.position() - exact).abs() / amplitude);
    }
    assert!(worst <= 1e-4, "relative oscillator error {worst:e}");
}

#[test]
fn wall_node_follows_the_piston() {
    let scenario = PistonScenario::new(params(0.02, 0.0)).unwrap();
    let mut run = PistonRun::new(scenario, 10.0, 400, transparent(), false, still);
    for _ in 0..400 {
        run.step(Some(1e-3)).unwrap();
    }
    assert!((run.wall_node() - run.position()).abs() < 1e-6, "{} vs {}", run.wall_node(), run.position());
    // The piston has pushed water into the channel: a wave leaves the wall.
    let states = run.driver.domain.states();
    assert!(states.iter().any(|u| u[0].abs() > 1e-4));
}

#[test]
fn standalone_ode_reproduces_the_coupled_run() {
    let scenario = PistonScenario::new(params(0.03, -0.05)).unwrap();
    let mut run = PistonRun::new(scenario, 10.0, 300, BoundaryClosure::wall(), false, still);
    for _ in 0..800 {
        run.step(None).unwrap();
    }
    let defect = run.reintegration_defect();
    assert!(defect <= 1e-10, "re-integration defect {defect:e}");
}

#[test]
fn supercritical_wall_is_rejected() {
    let scenario = PistonScenario::new(params(0.0, 4.0)).unwrap();
    let mut run = PistonRun::new(scenario, 10.0, 100, transparent(), false, |_| Vec2::new(0.0, 4.0));
    let err = run.step(Some(1e-3)).unwrap_err();
    assert!(matches!(err, WaveError::SubsonicityLoss { .. }), "{err:?}");
}
