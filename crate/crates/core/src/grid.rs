//! Moving reference grids.
//!
//! A [`MovingGrid`] samples a diffeomorphism `phi(t, .)` from a fixed reference
//! interval onto the physical domain. Two families are supported:
//!
//! * Lagrangian maps, whose nodes move with a prescribed velocity field;
//! * cutoff maps `phi(X) = X + psi((X - X_a) / eps) (xbar - X_a)`, which move only
//!   the nodes within `2 eps` of the anchor `X_a` and leave the rest in place.
//!
//! The nodes double as the faces of the finite-volume solver.

use thiserror::Error;

use crate::linalg::nodal_derivative;
use crate::Vec2;

/// Lower and upper admissible bounds on the Jacobian `d_x phi`.
pub const JACOBIAN_BOUNDS: (f64, f64) = (0.5, 2.0);

/// Largest value of `|psi'|` for the quintic profile, reached at `|s| = 1.5`.
pub const CUTOFF_SLOPE_BOUND: f64 = 1.875;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("Jacobian {value} at node {node} left [1/2, 2]")]
    JacobianDegeneracy { node: usize, value: f64 },
    #[error("front excursion {excursion} exceeds the admissible {limit} for epsilon = {epsilon}")]
    FrontExcursionTooLarge { excursion: f64, limit: f64, epsilon: f64 },
    #[error("node ordering lost at node {0}")]
    Tangled(usize),
}

/// Smooth transition `psi` with `psi = 1` on `[-1, 1]` and `psi = 0` outside `(-2, 2)`.
///
/// The transition is the quintic smoothstep, which is C2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    pub epsilon: f64,
}

impl CutoffProfile {
    pub fn new(epsilon: f64) -> Self {
        assert!(epsilon > 0.0, "cutoff scale must be positive");
        Self { epsilon }
    }

    /// `psi(s)` in the scaled variable.
    pub fn psi(s: f64) -> f64 {
        let r = s.abs() - 1.0;
        if r <= 0.0 {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            1.0 - r * r * r * (10.0 - 15.0 * r + 6.0 * r * r)
        }
    }

    /// `psi'(s)` in the scaled variable.
    pub fn psi_prime(s: f64) -> f64 {
        let r = s.abs() - 1.0;
        if r <= 0.0 || r >= 1.0 {
            0.0
        } else {
            -30.0 * r * r * (1.0 - r) * (1.0 - r) * s.signum()
        }
    }

    /// `psi(x / eps)`.
    pub fn value(&self, x: f64) -> f64 {
        Self::psi(x / self.epsilon)
    }

    /// `d/dx psi(x / eps)`.
    pub fn slope(&self, x: f64) -> f64 {
        Self::psi_prime(x / self.epsilon) / self.epsilon
    }

    /// Largest front excursion that keeps `d_x phi` within [`JACOBIAN_BOUNDS`].
    pub fn excursion_limit(&self) -> f64 {
        (1.0 - JACOBIAN_BOUNDS.0) * self.epsilon / CUTOFF_SLOPE_BOUND
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Lagrangian,
    Cutoff(CutoffProfile),
}

/// Which end of the reference interval is attached to the front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingGrid {
    pub reference_nodes: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_x: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub kind: GridKind,
    /// Reference coordinate mapped onto the tracked front.
    pub front_anchor: f64,
    /// End of the domain at which the front sits.
    pub front_side: Side,
}

impl MovingGrid {
    /// Identity map on `n_cells` uniform cells of `[a, b]`, anchored at the given end.
    pub fn uniform(a: f64, b: f64, n_cells: usize, kind: GridKind, front_side: Side) -> Self {
        assert!(n_cells >= 2 && b > a);
        let reference_nodes: Vec<f64> = (0..=n_cells)
            .map(|i| a + (b - a) * i as f64 / n_cells as f64)
            .collect();
        let n = reference_nodes.len();
        Self {
            phi: reference_nodes.clone(),
            phi_x: vec![1.0; n],
            phi_t: vec![0.0; n],
            front_anchor: match front_side {
                Side::Left => a,
                Side::Right => b,
            },
            reference_nodes,
            kind,
            front_side,
        }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn front_index(&self) -> usize {
        match self.front_side {
            Side::Left => 0,
            Side::Right => self.len() - 1,
        }
    }

    /// Physical position of the front node.
    pub fn front_position(&self) -> f64 {
        self.phi[self.front_index()]
    }

    /// Lagrangian update `phi <- phi + dt/2 (X_start + X_end)`.
    pub fn advance_lagrangian(&self, speed_start: &[f64], speed_end: &[f64], dt: f64) -> Result<Self, GridError> {
        assert_eq!(speed_start.len(), self.len());
        assert_eq!(speed_end.len(), self.len());
        let mut next = self.clone();
        for i in 0..self.len() {
            next.phi[i] += 0.5 * dt * (speed_start[i] + speed_end[i]);
        }
        next.phi_t = speed_end.to_vec();
        next.refresh_jacobian()?;
        Ok(next)
    }

    /// Nodes placed by the cutoff map for a front at `xbar` moving at `xbar_dot`.
    pub fn set_cutoff(&self, xbar: f64, xbar_dot: f64) -> Result<Self, GridError> {
        let GridKind::Cutoff(profile) = self.kind else {
            panic!("set_cutoff called on a Lagrangian grid");
        };
        let shift = xbar - self.front_anchor;
        let limit = profile.excursion_limit();
        if !(shift.abs() <= limit) {
            return Err(GridError::FrontExcursionTooLarge { excursion: shift, limit, epsilon: profile.epsilon });
        }
        let mut next = self.clone();
        for (i, &x) in self.reference_nodes.iter().enumerate() {
            let s = x - self.front_anchor;
            let w = profile.value(s);
            next.phi[i] = if w == 0.0 { x } else { x + w * shift };
            next.phi_x[i] = 1.0 + profile.slope(s) * shift;
            next.phi_t[i] = w * xbar_dot;
        }
        next.phi[self.front_index()] = xbar;
        next.check_jacobian()?;
        Ok(next)
    }

    /// Node velocities of the cutoff map for a front moving at `xbar_dot`.
    pub fn cutoff_velocities(&self, xbar_dot: f64) -> Vec<f64> {
        match self.kind {
            GridKind::Cutoff(profile) => self
                .reference_nodes
                .iter()
                .map(|&x| profile.value(x - self.front_anchor) * xbar_dot)
                .collect(),
            GridKind::Lagrangian => vec![xbar_dot; self.len()],
        }
    }

    /// Recompute `phi_x` from the node positions and check the bounds.
    pub fn refresh_jacobian(&mut self) -> Result<(), GridError> {
        for i in 1..self.len() {
            if self.phi[i] <= self.phi[i - 1] {
                return Err(GridError::Tangled(i));
            }
        }
        self.phi_x = nodal_derivative(&self.reference_nodes, &self.phi);
        self.check_jacobian()
    }

    pub fn check_jacobian(&self) -> Result<(), GridError> {
        let (lo, hi) = JACOBIAN_BOUNDS;
        let slack = 1e-12;
        match self
            .phi_x
            .iter()
            .position(|&j| !(j >= lo - slack && j <= hi + slack))
        {
            Some(node) => Err(GridError::JacobianDegeneracy { node, value: self.phi_x[node] }),
            None => Ok(()),
        }
    }

    /// `(d_t^phi u, d_x^phi u)` at every node, given the field and its time
    /// derivative at fixed reference coordinate.
    pub fn chain_derivatives(&self, field: &[Vec2], reference_time_derivative: &[Vec2]) -> (Vec<Vec2>, Vec<Vec2>) {
        assert!(self.len() >= 3 && field.len() == self.len());
        assert_eq!(reference_time_derivative.len(), self.len());
        let du = nodal_derivative(&self.reference_nodes, field);
        let d_x: Vec<Vec2> = du.iter().zip(&self.phi_x).map(|(d, j)| d / *j).collect();
        let d_t = reference_time_derivative
            .iter()
            .zip(&d_x)
            .zip(&self.phi_t)
            .map(|((ut, ux), pt)| ut - ux * *pt)
            .collect();
        (d_t, d_x)
    }
}
