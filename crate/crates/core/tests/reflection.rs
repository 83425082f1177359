use std::sync::Arc;

use hyperfront_core::grid::{GridKind, MovingGrid, Side};
use hyperfront_core::solver::{cell_average, BoundaryClosure, Domain, SolverState};
use hyperfront_core::{LinearSystem, Vec2};

fn pulse(x: f64) -> f64 {
    0.1 * (-((x - 0.8) / 0.25).powi(2)).exp()
}

/// d'Alembert solution with the even reflection at the wall `x = 0`.
fn exact(t: f64, x: f64) -> Vec2 {
    let f = |s: f64| pulse(s.abs());
    Vec2::new(0.5 * (f(x - t) + f(x + t)), 0.5 * (f(x - t) - f(x + t)))
}

fn l1_error(n: usize, end: f64) -> f64 {
    let grid = MovingGrid::uniform(0.0, 2.0, n, GridKind::Lagrangian, Side::Left);
    let sys = Arc::new(LinearSystem::linearized_shallow_water(1.0, 1.0));
    let mut s = SolverState::new(Domain::new(sys, grid, |x| exact(0.0, x)));
    let left = BoundaryClosure::wall();
    let right = BoundaryClosure::Transparent { reference: Some(Vec2::zeros()) };
    let dt0 = s.stable_dt();
    let steps = (end / dt0).ceil() as usize;
    let dt = end / steps as f64;
    for _ in 0..steps {
        s.step(&left, &right, Some(dt)).unwrap();
    }
    let faces = s.domain.grid.phi.clone();
    s.states()
        .iter()
        .zip(faces.windows(2))
        .map(|(u, w)| (u - cell_average(w[0], w[1], |x| exact(end, x))).abs().sum() * (w[1] - w[0]))
        .sum()
}

#[test]
fn wall_reflection_converges_at_second_order() {
    let e: Vec<f64> = [200, 400, 800].iter().map(|&n| l1_error(n, 1.0)).collect();
    let orders: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("errors {e:?} orders {orders:?}");
    for p in orders {
        assert!((1.7..=2.3).contains(&p), "order {p}");
    }
}
