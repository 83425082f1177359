use std::sync::Arc;

use hyperfront_core::compat::{check_compatibility, initial_front_velocity, CompatProblem, InitialData};
use hyperfront_core::front::{ContactDriver, ContactLaw, FnInterface};
use hyperfront_core::grid::{CutoffProfile, GridKind, MovingGrid, Side};
use hyperfront_core::solver::{BoundaryClosure, Domain};
use hyperfront_core::{LinearSystem, ShallowWater, System, Vec2};

fn pulse(s: f64) -> f64 {
    0.1 * (-(s - 0.8) * (s - 0.8) / 0.0625).exp()
}

/// Right-going and left-going waves of linear shallow water with unit speed.
fn exact(t: f64, x: f64) -> Vec2 {
    let (r, l) = (pulse(x - t), 0.5 * pulse(x + t + 0.3));
    Vec2::new(r + l, r - l)
}

#[test]
fn exact_solution_samples_are_compatible_at_every_order() {
    let sys = LinearSystem::linearized_shallow_water(1.0, 1.0);
    let h = 1e-3;
    let x: Vec<f64> = (0..40).map(|i| 0.5 + i as f64 * h).collect();
    let u: Vec<Vec2> = x.iter().map(|&s| exact(0.0, s)).collect();
    let closure = BoundaryClosure::LinearNu {
        nu: Arc::new(|_| Vec2::new(1.0, 2.0)),
        g: Arc::new(|t| Vec2::new(1.0, 2.0).dot(&exact(t, 0.5))),
    };
    let data = InitialData { x: &x, u: &u, boundary: Side::Left };
    let report = check_compatibility(&CompatProblem::Ibvp { sys: &sys, data, closure: &closure }, 2).unwrap();
    println!("{:?}", report.residuals);
    assert!(report.residuals[0].abs() <= 1e-8 && report.residuals[1].abs() <= 1e-8);
    assert!(report.residuals[2].abs() <= 1e-5);
}

#[test]
fn shifted_closure_is_flagged() {
    let sys = LinearSystem::linearized_shallow_water(1.0, 1.0);
    let x: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 * 1e-2).collect();
    let u: Vec<Vec2> = x.iter().map(|&s| exact(0.0, s)).collect();
    let delta = 1e-3;
    let closure = BoundaryClosure::linear(Vec2::new(0.0, 1.0), exact(0.0, 0.5)[1] + delta);
    let data = InitialData { x: &x, u: &u, boundary: Side::Left };
    let report = check_compatibility(&CompatProblem::Ibvp { sys: &sys, data, closure: &closure }, 0).unwrap();
    assert!((report.residuals[0] + delta).abs() < 1e-15);
}

fn contact_initial(x: f64) -> Vec2 {
    Vec2::new(0.02 + 0.05 * x - 0.02 * x * x, 0.01 + 0.08 * x)
}

/// Interface field `U_i = u(0) + x U_x + t U_t` with `U_t` chosen so that the
/// corner data is compatible at order one with front speed `speed`.
fn contact_interface(speed: f64) -> FnInterface<impl Fn(f64, f64) -> Vec2 + Send + Sync> {
    let sys = ShallowWater::new(1.0, 1.0);
    let base = contact_initial(0.0);
    let u_x = Vec2::new(0.05, 0.08);
    let ui_x = Vec2::new(-0.1, 0.02);
    let ui_t = (u_x - ui_x) * speed - sys.coefficient(base) * u_x;
    FnInterface(move |t: f64, x: f64| base + ui_x * x + ui_t * t)
}

#[test]
fn initial_contact_speed_matches_a_short_track() {
    let sys: Arc<dyn System> = Arc::new(ShallowWater::new(1.0, 1.0));
    let interface = contact_interface(0.08);
    let nodes: Vec<f64> = (0..6).map(|i| i as f64 * 1e-3).collect();
    let samples: Vec<Vec2> = nodes.iter().map(|&s| contact_initial(s)).collect();
    let data = InitialData { x: &nodes, u: &samples, boundary: Side::Left };
    let problem = CompatProblem::Contact { sys: sys.as_ref(), data, interface: &interface, c0: 1e-3, projection: None };
    let (speed, _) = initial_front_velocity(&problem).unwrap();
    assert!((speed - 0.08).abs() < 1e-8);
    let report = check_compatibility(&problem, 1).unwrap();
    assert!(report.residuals[0] < 1e-14 && report.residuals[1].abs() < 1e-8);

    let grid = MovingGrid::uniform(0.0, 2.0, 400, GridKind::Cutoff(CutoffProfile::new(1.0)), Side::Left);
    let domain = Domain::new(Arc::clone(&sys), grid, contact_initial);
    let far = BoundaryClosure::Transparent { reference: None };
    let mut driver = ContactDriver::new(domain, interface, far, ContactLaw::FirstOrder, Vec::new(), 1e-3).unwrap();
    let dt = 0.5 * driver.stable_dt();
    let steps = 4;
    for _ in 0..steps {
        driver.step(Some(dt)).unwrap();
    }
    let tracked = driver.front.xbar / (steps as f64 * dt);
    println!("compat speed {speed}, tracked {tracked}, dt {dt}");
    assert!((tracked - speed).abs() <= 5.0 * dt);
}
