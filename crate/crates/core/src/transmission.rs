//! Two-sided problems: interfaces with transmission conditions and tracked shocks.
//!
//! The left state lives on `x < xbar` and the right state on `x > xbar`. Mirroring
//! the left half-line onto the right one gives a 4x4 problem with coefficient
//! `diag(-(A_l - chi), A_r - chi)`. Its positive eigenvalues are the
//! characteristics leaving the front, and their number `p` is the number of
//! transmission conditions required.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix4, Vector4};
use thiserror::Error;

use crate::front::{FrontError, FrontMode, FrontState};
use crate::grid::{GridError, Side};
use crate::hyperbolic::{AlgebraError, SpectralPair};
use crate::linalg::{perp, Mat2, Vec2};
use crate::solver::{
    cell_states, evaluate_rates, extrapolate_to_end, heun_step, BoundaryClosure, BoundaryCondition, CoupledRates,
    CoupledState, Domain, SolverError, DEFAULT_CFL, NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE,
};
use crate::System;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransmissionError {
    #[error("Lopatinskii matrix is singular: |L^-1| = {inverse_norm}")]
    SingularLopatinski { inverse_norm: f64 },
    #[error("states coincide, there is no front")]
    ZeroJump,
    #[error("regime changed from {expected:?} to {found:?} at t = {t}")]
    RegimeChange { expected: Regime, found: Regime, t: f64 },
    #[error("{found} transmission conditions supplied, {needed} needed")]
    ConditionCount { needed: usize, found: usize },
    #[error("interface Newton iteration failed, residual {residual:e}")]
    NewtonDivergence { residual: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Front(#[from] FrontError),
}

/// Regime of a two-sided front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// One characteristic leaves the front on each side (`p = 2`).
    Subsonic,
    /// Right-going Lax shock, `p = 1`.
    LaxRight,
    /// Left-going Lax shock, `p = 1`.
    LaxLeft,
    Unclassified,
}

impl Regime {
    /// Number of transmission conditions the regime requires.
    pub fn conditions(self) -> Option<usize> {
        match self {
            Regime::Subsonic => Some(2),
            Regime::LaxRight | Regime::LaxLeft => Some(1),
            Regime::Unclassified => None,
        }
    }
}

/// Eigenvalues `(high, low)` of both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideSpeeds {
    pub left: (f64, f64),
    pub right: (f64, f64),
}

/// Regime from the characteristic speeds of both traces and the front speed,
/// every inequality holding with margin `c0`.
pub fn classify_speeds(speeds: SideSpeeds, chi: f64, c0: f64) -> Regime {
    let (lh, ll) = (speeds.left.0 - chi, speeds.left.1 - chi);
    let (rh, rl) = (speeds.right.0 - chi, speeds.right.1 - chi);
    let left_split = lh > c0 && ll < -c0;
    let right_split = rh > c0 && rl < -c0;
    if left_split && right_split {
        Regime::Subsonic
    } else if left_split && rh < -c0 {
        Regime::LaxRight
    } else if ll > c0 && right_split {
        Regime::LaxLeft
    } else {
        Regime::Unclassified
    }
}

/// Regime of the traces `u_l`, `u_r` for a front moving at `chi`.
pub fn classify_regime(
    left: &dyn System,
    right: &dyn System,
    u_l: Vec2,
    u_r: Vec2,
    chi: f64,
    c0: f64,
) -> Result<Regime, TransmissionError> {
    Ok(classify_speeds(side_speeds(left, right, u_l, u_r)?, chi, c0))
}

fn side_speeds(left: &dyn System, right: &dyn System, u_l: Vec2, u_r: Vec2) -> Result<SideSpeeds, TransmissionError> {
    let pl = spectral_pair(left, u_l)?;
    let pr = spectral_pair(right, u_r)?;
    Ok(SideSpeeds { left: (pl.high, pl.low), right: (pr.high, pr.low) })
}

fn spectral_pair(sys: &dyn System, u: Vec2) -> Result<SpectralPair, TransmissionError> {
    let a = sys.coefficient(u);
    SpectralPair::of(&a).ok_or_else(|| {
        let (hi, lo) = (a.trace() * 0.5, a.trace() * 0.5);
        TransmissionError::Algebra(AlgebraError::NotStrictlyHyperbolic(hi, lo))
    })
}

fn conserved_pair(sys: &dyn System, u: Vec2) -> (Vec2, Vec2) {
    (sys.density(u), sys.flux(u).expect("shock tracking needs a conservative system"))
}

/// Rankine-Hugoniot speed and residual.
///
/// `chi = [f] . [f0] / |[f0]|^2` and `Phi = [f] . [f0]_perp`, so that
/// `[f] = chi [f0] + Phi [f0]_perp / |[f0]|^2`. Brackets are right minus left.
pub fn rh_speed_and_residual(left: &dyn System, right: &dyn System, u_l: Vec2, u_r: Vec2) -> Result<(f64, f64), TransmissionError> {
    let (d_l, f_l) = conserved_pair(left, u_l);
    let (d_r, f_r) = conserved_pair(right, u_r);
    let jump_density = d_r - d_l;
    let jump_flux = f_r - f_l;
    let norm2 = jump_density.norm_squared();
    if norm2.sqrt() < 1e-10 {
        return Err(TransmissionError::ZeroJump);
    }
    Ok((jump_flux.dot(&jump_density) / norm2, jump_flux.dot(&perp(jump_density))))
}

/// Scalar transmission conditions `c(u_l, u_r) = 0`.
pub type Conditions = Arc<dyn Fn(Vec2, Vec2) -> Vec<f64> + Send + Sync>;

/// How the front moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrontLaw {
    /// Fixed interface.
    Fixed,
    /// Speed from the Rankine-Hugoniot relation of the traces.
    RankineHugoniot,
}

/// Two-sided problem: systems on each side, transmission conditions and front law.
#[derive(Clone)]
pub struct TransmissionProblem {
    pub left: Arc<dyn System>,
    pub right: Arc<dyn System>,
    pub conditions: Conditions,
    pub law: FrontLaw,
    pub c0: f64,
}

impl fmt::Debug for TransmissionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransmissionProblem")
            .field("left", &self.left)
            .field("right", &self.right)
            .field("law", &self.law)
            .field("c0", &self.c0)
            .finish()
    }
}

impl TransmissionProblem {
    /// Fixed interface across which the state is continuous.
    pub fn continuity(left: Arc<dyn System>, right: Arc<dyn System>, c0: f64) -> Self {
        Self {
            left,
            right,
            conditions: Arc::new(|l, r| vec![r[0] - l[0], r[1] - l[1]]),
            law: FrontLaw::Fixed,
            c0,
        }
    }

    /// Lax shock: the single condition `Phi = 0`.
    pub fn lax_shock(left: Arc<dyn System>, right: Arc<dyn System>, c0: f64) -> Self {
        let (l, r) = (Arc::clone(&left), Arc::clone(&right));
        Self {
            conditions: Arc::new(move |ul, ur| vec![rh_residual_unchecked(l.as_ref(), r.as_ref(), ul, ur)]),
            left,
            right,
            law: FrontLaw::RankineHugoniot,
            c0,
        }
    }

    /// Undercompressive shock: `Phi = 0` and the kinetic relation `kinetic = 0`.
    pub fn undercompressive_shock(
        left: Arc<dyn System>,
        right: Arc<dyn System>,
        kinetic: Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>,
        c0: f64,
    ) -> Self {
        let (l, r) = (Arc::clone(&left), Arc::clone(&right));
        Self {
            conditions: Arc::new(move |ul, ur| vec![rh_residual_unchecked(l.as_ref(), r.as_ref(), ul, ur), kinetic(ul, ur)]),
            left,
            right,
            law: FrontLaw::RankineHugoniot,
            c0,
        }
    }

    pub fn front_speed(&self, u_l: Vec2, u_r: Vec2) -> Result<f64, TransmissionError> {
        match self.law {
            FrontLaw::Fixed => Ok(0.0),
            FrontLaw::RankineHugoniot => Ok(rh_speed_and_residual(self.left.as_ref(), self.right.as_ref(), u_l, u_r)?.0),
        }
    }

    /// Jacobian `N = (d_{u_l} c, d_{u_r} c)` of the conditions, one row per condition.
    pub fn condition_jacobian(&self, u_l: Vec2, u_r: Vec2) -> DMatrix<f64> {
        let base = Vector4::new(u_l[0], u_l[1], u_r[0], u_r[1]);
        let eval = |v: &Vector4<f64>| (self.conditions)(Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3]));
        let p = eval(&base).len();
        let mut n = DMatrix::zeros(p, 4);
        for k in 0..4 {
            let h = 1e-6 * (1.0 + base[k].abs());
            let mut plus = base;
            let mut minus = base;
            plus[k] += h;
            minus[k] -= h;
            let (fp, fm) = (eval(&plus), eval(&minus));
            for i in 0..p {
                n[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        n
    }
}

fn rh_residual_unchecked(left: &dyn System, right: &dyn System, u_l: Vec2, u_r: Vec2) -> f64 {
    let (d_l, f_l) = conserved_pair(left, u_l);
    let (d_r, f_r) = conserved_pair(right, u_r);
    (f_r - f_l).dot(&perp(d_r - d_l))
}

/// Mirrored 4x4 view of a two-sided problem at given traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    /// `diag(-(A_l - chi) / j_l, (A_r - chi) / j_r)`.
    pub coefficient: Matrix4<f64>,
    pub eigenvalues: Vector4<f64>,
    /// Unit eigenvectors, columns matching `eigenvalues`.
    pub eigenvectors: Matrix4<f64>,
    /// Boundary rows `N`, one per transmission condition.
    pub conditions: DMatrix<f64>,
    /// Eigenvectors of the positive eigenvalues, as columns.
    pub outgoing: DMatrix<f64>,
    pub symmetrizer: Matrix4<f64>,
    pub weight: f64,
}

impl BlockSystem {
    /// `v^T S A v`.
    pub fn boundary_form(&self, v: &Vector4<f64>) -> f64 {
        (v.transpose() * self.symmetrizer * self.coefficient * v)[0]
    }
}

/// Lopatinskii matrix `L_p = N_p E_p` and its conditioning.
#[derive(Debug, Clone, PartialEq)]
pub struct LopatinskiiMatrix {
    pub matrix: DMatrix<f64>,
    pub condition_number: f64,
    pub inverse_norm: f64,
    pub p: usize,
}

fn block_eigen(sys: &dyn System, u: Vec2, chi: f64, sign: f64, jacobian: f64) -> Result<[(f64, Vec2); 2], TransmissionError> {
    let a = (sys.coefficient(u) - Mat2::identity() * chi) * (sign / jacobian);
    let pair = SpectralPair::of(&a).ok_or(TransmissionError::Algebra(AlgebraError::NotStrictlyHyperbolic(0.0, 0.0)))?;
    Ok([(pair.high, pair.e_high), (pair.low, pair.e_low)])
}

/// Block view of the problem at traces `(u_l, u_r)`, front speed `chi` and
/// grid Jacobians `(j_l, j_r)` at the front.
pub fn assemble_block(
    tp: &TransmissionProblem,
    u_l: Vec2,
    u_r: Vec2,
    chi: f64,
    jacobians: (f64, f64),
) -> Result<BlockSystem, TransmissionError> {
    let mut coefficient = Matrix4::zeros();
    let al = -(tp.left.coefficient(u_l) - Mat2::identity() * chi) / jacobians.0;
    let ar = (tp.right.coefficient(u_r) - Mat2::identity() * chi) / jacobians.1;
    coefficient.fixed_view_mut::<2, 2>(0, 0).copy_from(&al);
    coefficient.fixed_view_mut::<2, 2>(2, 2).copy_from(&ar);
    let left = block_eigen(tp.left.as_ref(), u_l, chi, -1.0, jacobians.0)?;
    let right = block_eigen(tp.right.as_ref(), u_r, chi, 1.0, jacobians.1)?;
    let mut eigenvalues = Vector4::zeros();
    let mut eigenvectors = Matrix4::zeros();
    for (k, (mu, e)) in left.iter().enumerate() {
        eigenvalues[k] = *mu;
        eigenvectors[(0, k)] = e[0];
        eigenvectors[(1, k)] = e[1];
    }
    for (k, (mu, e)) in right.iter().enumerate() {
        eigenvalues[k + 2] = *mu;
        eigenvectors[(2, k + 2)] = e[0];
        eigenvectors[(3, k + 2)] = e[1];
    }
    let positive: Vec<usize> = (0..4).filter(|&k| eigenvalues[k] > 0.0).collect();
    let negative: Vec<usize> = (0..4).filter(|&k| eigenvalues[k] <= 0.0).collect();
    let outgoing = DMatrix::from_fn(4, positive.len(), |i, j| eigenvectors[(i, positive[j])]);
    let incoming = DMatrix::from_fn(4, negative.len(), |i, j| eigenvectors[(i, negative[j])]);
    let conditions = tp.condition_jacobian(u_l, u_r);

    // Weight on the incoming projectors from the kernel estimate of the boundary form.
    let lop = &conditions * &outgoing;
    let coupling = match lop.clone().try_inverse() {
        Some(inv) if positive.len() == conditions.nrows() => (inv * &conditions * &incoming).norm(),
        _ => 0.0,
    };
    let mu_pos = positive.iter().map(|&k| eigenvalues[k]).fold(0.0, f64::max);
    let mu_neg = negative.iter().map(|&k| eigenvalues[k].abs()).fold(f64::INFINITY, f64::min);
    let weight = if negative.is_empty() || mu_neg == 0.0 { 1.0 } else { 2.0 + 2.0 * mu_pos * coupling * coupling / mu_neg };

    let inverse = eigenvectors.try_inverse().ok_or(TransmissionError::Algebra(AlgebraError::DegenerateJacobian(0.0)))?;
    let mut symmetrizer = Matrix4::zeros();
    for k in 0..4 {
        let projector = eigenvectors.column(k) * inverse.row(k);
        let w = if eigenvalues[k] > 0.0 { 1.0 } else { weight };
        symmetrizer += projector.transpose() * projector * w;
    }
    Ok(BlockSystem { coefficient, eigenvalues, eigenvectors, conditions, outgoing, symmetrizer, weight })
}

/// `L_p = N_p E_p` at the given traces; fails when `|L^-1| > 1 / c0`.
pub fn lopatinskii_matrix(tp: &TransmissionProblem, u_l: Vec2, u_r: Vec2, chi: f64) -> Result<LopatinskiiMatrix, TransmissionError> {
    let block = assemble_block(tp, u_l, u_r, chi, (1.0, 1.0))?;
    let p = block.outgoing.ncols();
    if block.conditions.nrows() != p {
        return Err(TransmissionError::ConditionCount { needed: p, found: block.conditions.nrows() });
    }
    let matrix = &block.conditions * &block.outgoing;
    let sv = matrix.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let inverse_norm = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    if !(inverse_norm <= 1.0 / tp.c0) {
        return Err(TransmissionError::SingularLopatinski { inverse_norm });
    }
    Ok(LopatinskiiMatrix { condition_number: smax / smin, inverse_norm, matrix, p })
}

/// Traces on both sides of the front after projection onto the conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceTraces {
    pub left: Vec2,
    pub right: Vec2,
    pub chi: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton solve for the traces: the characteristic variables arriving at the
/// front from each side are taken from the extrapolated states `ext_l`,
/// `ext_r`, and the transmission conditions close the system.
pub fn project_traces(tp: &TransmissionProblem, ext_l: Vec2, ext_r: Vec2, chi: f64) -> Result<InterfaceTraces, TransmissionError> {
    let speeds = side_speeds(tp.left.as_ref(), tp.right.as_ref(), ext_l, ext_r)?;
    let arriving_left: Vec<usize> = [speeds.left.0, speeds.left.1]
        .iter()
        .enumerate()
        .filter(|(_, &m)| m - chi > 0.0)
        .map(|(k, _)| k)
        .collect();
    let arriving_right: Vec<usize> = [speeds.right.0, speeds.right.1]
        .iter()
        .enumerate()
        .filter(|(_, &m)| m - chi < 0.0)
        .map(|(k, _)| k)
        .collect();
    let p = (tp.conditions)(ext_l, ext_r).len();
    let found = arriving_left.len() + arriving_right.len() + p;
    if found != 4 {
        return Err(TransmissionError::ConditionCount { needed: 4 - arriving_left.len() - arriving_right.len(), found: p });
    }
    let targets_l: Vec<f64> = arriving_left.iter().map(|&k| tp.left.characteristic_variables(ext_l, ext_l)[k].0).collect();
    let targets_r: Vec<f64> = arriving_right.iter().map(|&k| tp.right.characteristic_variables(ext_r, ext_r)[k].0).collect();
    let equations = |v: &Vector4<f64>| -> Vector4<f64> {
        let (ul, ur) = (Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3]));
        let wl = tp.left.characteristic_variables(ul, ext_l);
        let wr = tp.right.characteristic_variables(ur, ext_r);
        let mut out = Vector4::zeros();
        let mut i = 0;
        for (k, t) in arriving_left.iter().zip(&targets_l) {
            out[i] = wl[*k].0 - t;
            i += 1;
        }
        for (k, t) in arriving_right.iter().zip(&targets_r) {
            out[i] = wr[*k].0 - t;
            i += 1;
        }
        for c in (tp.conditions)(ul, ur) {
            out[i] = c;
            i += 1;
        }
        out
    };
    let mut v = Vector4::new(ext_l[0], ext_l[1], ext_r[0], ext_r[1]);
    let mut residual = f64::INFINITY;
    for it in 0..=NEWTON_MAX_ITERATIONS {
        let f = equations(&v);
        residual = f.amax();
        if !residual.is_finite() {
            break;
        }
        if residual <= NEWTON_TOLERANCE * (1.0 + v.amax()) {
            let (ul, ur) = (Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3]));
            return Ok(InterfaceTraces { left: ul, right: ur, chi: tp.front_speed(ul, ur)?, residual, iterations: it });
        }
        let mut jac = Matrix4::zeros();
        for k in 0..4 {
            let h = 1e-7 * (1.0 + v[k].abs());
            let mut plus = v;
            let mut minus = v;
            plus[k] += h;
            minus[k] -= h;
            jac.set_column(k, &((equations(&plus) - equations(&minus)) / (2.0 * h)));
        }
        let Some(step) = jac.lu().solve(&f) else { break };
        v -= step;
    }
    Err(TransmissionError::NewtonDivergence { residual })
}

/// Two domains joined at a tracked interface or shock, each on a cutoff grid
/// anchored at the initial front position.
pub struct TransmissionDriver {
    pub problem: TransmissionProblem,
    pub left: Domain,
    pub right: Domain,
    pub far_left: BoundaryClosure,
    pub far_right: BoundaryClosure,
    pub t: f64,
    pub cfl: f64,
    pub front: FrontState,
    pub expected: Regime,
    pub traces: InterfaceTraces,
    /// Largest transmission-condition residual seen at any stage.
    pub max_residual: f64,
}

impl TransmissionDriver {
    pub fn new(
        problem: TransmissionProblem,
        left: Domain,
        right: Domain,
        far_left: BoundaryClosure,
        far_right: BoundaryClosure,
    ) -> Result<Self, TransmissionError> {
        assert_eq!(left.grid.front_side, Side::Right);
        assert_eq!(right.grid.front_side, Side::Left);
        let xbar = left.grid.front_position();
        let traces = Self::interface(&problem, &left, &right, &left.grid.phi, &left.content, &right.grid.phi, &right.content)?;
        let expected = classify_regime(problem.left.as_ref(), problem.right.as_ref(), traces.left, traces.right, traces.chi, problem.c0)?;
        let mut front = FrontState::new(xbar, traces.chi, FrontMode::Kinematic);
        front.regime = Some(expected);
        Ok(Self {
            problem,
            left,
            right,
            far_left,
            far_right,
            t: 0.0,
            cfl: DEFAULT_CFL,
            front,
            expected,
            max_residual: traces.residual,
            traces,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn interface(
        tp: &TransmissionProblem,
        left: &Domain,
        right: &Domain,
        faces_l: &[f64],
        content_l: &[Vec2],
        faces_r: &[f64],
        content_r: &[Vec2],
    ) -> Result<InterfaceTraces, TransmissionError> {
        let states_l = cell_states(tp.left.as_ref(), left.conservative, faces_l, content_l);
        let states_r = cell_states(tp.right.as_ref(), right.conservative, faces_r, content_r);
        let centers = |f: &[f64]| f.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect::<Vec<_>>();
        let ext_l = extrapolate_to_end(&centers(faces_l), &states_l, faces_l[faces_l.len() - 1], Side::Right);
        let ext_r = extrapolate_to_end(&centers(faces_r), &states_r, faces_r[0], Side::Left);
        let chi = match tp.law {
            FrontLaw::Fixed => 0.0,
            FrontLaw::RankineHugoniot => tp.front_speed(ext_l, ext_r).unwrap_or(0.0),
        };
        project_traces(tp, ext_l, ext_r, chi)
    }

    pub fn stable_dt(&self) -> f64 {
        let vl = self.left.grid.cutoff_velocities(self.front.xbar_dot);
        let vr = self.right.grid.cutoff_velocities(self.front.xbar_dot);
        self.left.stable_dt(&vl, self.cfl).min(self.right.stable_dt(&vr, self.cfl))
    }

    pub fn step(&mut self, dt: Option<f64>) -> Result<f64, TransmissionError> {
        let dt = dt.unwrap_or_else(|| self.stable_dt());
        let start = CoupledState { t: self.t, domains: vec![self.left.snapshot(), self.right.snapshot()], ode: Vec::new() };
        let tp = self.problem.clone();
        let (gl, gr) = (self.left.grid.clone(), self.right.grid.clone());
        let mut max_residual: f64 = 0.0;
        let (next, _) = heun_step(&start, dt, |s| {
            let (dl, dr) = (&s.domains[0], &s.domains[1]);
            let tr = Self::interface(&tp, &self.left, &self.right, &dl.faces, &dl.content, &dr.faces, &dr.content)?;
            max_residual = max_residual.max(tr.residual);
            let vl = gl.cutoff_velocities(tr.chi);
            let vr = gr.cutoff_velocities(tr.chi);
            let rl = evaluate_rates(
                tp.left.as_ref(),
                self.left.conservative,
                &dl.faces,
                &vl,
                &dl.content,
                s.t,
                &self.far_left.at(s.t),
                &BoundaryCondition::Dirichlet(tr.left),
            )?;
            let rr = evaluate_rates(
                tp.right.as_ref(),
                self.right.conservative,
                &dr.faces,
                &vr,
                &dr.content,
                s.t,
                &BoundaryCondition::Dirichlet(tr.right),
                &self.far_right.at(s.t),
            )?;
            Ok::<_, TransmissionError>(CoupledRates { face_velocity: vec![vl, vr], content: vec![rl.content, rr.content], ode: Vec::new() })
        })?;
        let xbar_l = *next.domains[0].faces.last().expect("faces");
        let xbar_r = next.domains[1].faces[0];
        let xbar = 0.5 * (xbar_l + xbar_r);
        self.left.content = next.domains[0].content.clone();
        self.right.content = next.domains[1].content.clone();
        self.t = next.t;
        let traces = Self::interface(
            &self.problem,
            &self.left,
            &self.right,
            &next.domains[0].faces,
            &self.left.content,
            &next.domains[1].faces,
            &self.right.content,
        )?;
        self.left.grid = self.left.grid.set_cutoff(xbar, traces.chi)?;
        self.right.grid = self.right.grid.set_cutoff(xbar, traces.chi)?;
        self.max_residual = self.max_residual.max(max_residual).max(traces.residual);
        self.traces = traces;
        self.front.xbar = xbar;
        self.front.xbar_dot = traces.chi;
        let regime =
            classify_regime(self.problem.left.as_ref(), self.problem.right.as_ref(), traces.left, traces.right, traces.chi, self.problem.c0)?;
        self.front.regime = Some(regime);
        if regime != self.expected {
            return Err(TransmissionError::RegimeChange { expected: self.expected, found: regime, t: self.t });
        }
        Ok(dt)
    }

    /// Current Rankine-Hugoniot residual of the traces.
    pub fn rh_residual(&self) -> f64 {
        rh_residual_unchecked(self.problem.left.as_ref(), self.problem.right.as_ref(), self.traces.left, self.traces.right).abs()
    }

    /// Total conserved density of both domains.
    pub fn total_density(&self) -> Vec2 {
        self.left.total_density() + self.right.total_density()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::GenericSystem;
    use crate::ShallowWater;

    fn burgers() -> Arc<dyn System> {
        Arc::new(GenericSystem::conservative(|u| u, |u| Vec2::new(0.5 * u[0] * u[0], 0.0)))
    }

    #[test]
    fn burgers_rankine_hugoniot() {
        let s = burgers();
        let (chi, phi) = rh_speed_and_residual(s.as_ref(), s.as_ref(), Vec2::new(1.0, 0.0), Vec2::zeros()).unwrap();
        assert!((chi - 0.5).abs() < 1e-15);
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn equal_fluxes_give_a_still_front() {
        let sw: Arc<dyn System> = Arc::new(ShallowWater::new(1.0, 1.0));
        // q continuous and q^2/h + h^2/2 continuous: classical hydraulic jump.
        let (hl, ql) = (0.5f64, 1.0f64);
        let fr2 = ql * ql / (hl * hl * hl);
        let hr = 0.5 * hl * ((1.0 + 8.0 * fr2).sqrt() - 1.0);
        let (chi, phi) = rh_speed_and_residual(sw.as_ref(), sw.as_ref(), Vec2::new(hl - 1.0, ql), Vec2::new(hr - 1.0, ql)).unwrap();
        assert!(chi.abs() < 1e-14);
        assert!(phi.abs() < 1e-14);
    }

    #[test]
    fn coinciding_states_have_no_front() {
        let s = burgers();
        assert_eq!(rh_speed_and_residual(s.as_ref(), s.as_ref(), Vec2::new(1.0, 2.0), Vec2::new(1.0, 2.0)), Err(TransmissionError::ZeroJump));
    }

    #[test]
    fn rest_states_are_subsonic() {
        let sw = ShallowWater::new(1.0, 1.0);
        assert_eq!(classify_regime(&sw, &sw, Vec2::zeros(), Vec2::zeros(), 0.0, 1e-6).unwrap(), Regime::Subsonic);
    }

    #[test]
    fn mirrored_blocks_of_a_single_system() {
        let sw: Arc<dyn System> = Arc::new(ShallowWater::new(1.0, 1.0));
        let tp = TransmissionProblem::continuity(Arc::clone(&sw), sw, 1e-6);
        let block = assemble_block(&tp, Vec2::zeros(), Vec2::zeros(), 0.0, (1.0, 1.0)).unwrap();
        let mut eig: Vec<f64> = block.eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert_eq!(eig, vec![-1.0, -1.0, 1.0, 1.0]);
        let sa = block.symmetrizer * block.coefficient;
        assert!((sa - sa.transpose()).norm() < 1e-12);
    }

    #[test]
    fn rank_defect_is_singular() {
        let sw: Arc<dyn System> = Arc::new(ShallowWater::new(1.0, 1.0));
        let mut tp = TransmissionProblem::continuity(Arc::clone(&sw), sw, 1e-6);
        tp.conditions = Arc::new(|l, r| vec![r[0] - l[0], 2.0 * (r[0] - l[0])]);
        let err = lopatinskii_matrix(&tp, Vec2::zeros(), Vec2::zeros(), 0.0).unwrap_err();
        assert!(matches!(err, TransmissionError::SingularLopatinski { .. }));
    }
}
