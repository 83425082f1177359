use std::sync::Arc;

use hyperfront_core::grid::{CutoffProfile, GridKind, MovingGrid, Side};
use hyperfront_core::solver::{BoundaryClosure, Domain};
use hyperfront_core::transmission::{Regime, TransmissionDriver, TransmissionProblem};
use hyperfront_core::{ShallowWater, System, Vec2};

const G: f64 = 9.81;

fn driver(ul: Vec2, ur: Vec2, half_width: f64, eps: f64, cells: usize) -> TransmissionDriver {
    let sys: Arc<dyn System> = Arc::new(ShallowWater::new(G, 1.0));
    let kind = GridKind::Cutoff(CutoffProfile::new(eps));
    let left = Domain::new(Arc::clone(&sys), MovingGrid::uniform(-half_width, 0.0, cells, kind, Side::Right), |_| ul);
    let right = Domain::new(Arc::clone(&sys), MovingGrid::uniform(0.0, half_width, cells, kind, Side::Left), |_| ur);
    let tp = TransmissionProblem::lax_shock(Arc::clone(&sys), sys, 1e-3);
    TransmissionDriver::new(
        tp,
        left,
        right,
        BoundaryClosure::Transparent { reference: Some(ul) },
        BoundaryClosure::Transparent { reference: Some(ur) },
    )
    .expect("driver")
}

#[test]
fn stationary_hydraulic_jump_stays_put() {
    let hl = 1.0;
    let froude: f64 = 2.0;
    let ql = froude * (G * hl).sqrt() * hl;
    let hr = 0.5 * hl * ((1.0 + 8.0 * froude * froude).sqrt() - 1.0);
    let mut d = driver(Vec2::new(hl - 1.0, ql), Vec2::new(hr - 1.0, ql), 1.0, 0.5, 100);
    assert_eq!(d.expected, Regime::LaxLeft);
    let mut worst: f64 = 0.0;
    let mut worst_rh: f64 = 0.0;
    for _ in 0..1000 {
        d.step(None).unwrap();
        worst = worst.max(d.front.xbar.abs());
        worst_rh = worst_rh.max(d.rh_residual());
    }
    println!("xbar max {worst:e}, rh {worst_rh:e}, t {}", d.t);
    assert!(worst <= 1e-6);
    assert!(worst_rh <= 1e-10);
}

#[test]
fn moving_bore_travels_at_jump_speed() {
    let hr = 1.0;
    let hl = 1.5;
    let chi = (G * hl * (hl + hr) / (2.0 * hr)).sqrt();
    let ql = chi * (hl - hr);
    let eps = 6.0;
    let mut d = driver(Vec2::new(hl - 1.0, ql), Vec2::new(0.0, 0.0), 12.0, eps, 200);
    assert_eq!(d.expected, Regime::LaxRight);
    let limit = eps / 3.75;
    let end = 0.9 * limit / chi;
    let mut worst_rh: f64 = 0.0;
    while d.t < end {
        let dt = d.stable_dt().min(end - d.t);
        d.step(Some(dt)).unwrap();
        worst_rh = worst_rh.max(d.rh_residual());
    }
    let speed = d.front.xbar / d.t;
    println!("speed {speed} chi {chi} rel {:e}, rh {worst_rh:e}", (speed - chi).abs() / chi);
    assert!((speed - chi).abs() / chi <= 1e-3);
    assert!(worst_rh <= 1e-10);
}
