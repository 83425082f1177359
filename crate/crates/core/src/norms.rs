//! Exponentially weighted space-time norms used to monitor solutions.
//!
//! For a trajectory `u(t, x)` sampled at increasing times on a uniform spatial
//! grid the report holds
//!
//! * `sup_norm`: `sup_{s <= t} e^{-gamma s} sum_j |d_t^j u(s)|_{H^{m-j}}`,
//! * `integral_norm`: `(gamma int_0^t (e^{-gamma s} sum_j |d_t^j u(s)|_{H^{m-j}})^2 ds)^{1/2}`,
//! * `trace_norm`: `sum_j (int_0^t e^{-2 gamma s} |d_t^j u(s, 0)|^2 ds)^{1/2}`,
//! * `dual_norm`: a lower bound for the dual norm of the boundary trace, obtained
//!   by maximising the weighted pairing over a fixed dictionary of 64
//!   piecewise-linear test functions.

/// One sampled trajectory: `fields[k][i]` is the state at time `times[k]` and
/// node `i`, nodes being uniformly spaced by `dx`. Node 0 is the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub dx: f64,
    pub fields: Vec<Vec<crate::Vec2>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormReport {
    pub gamma: f64,
    pub time: f64,
    pub sup_norm: f64,
    pub integral_norm: f64,
    pub trace_norm: f64,
    pub dual_norm: f64,
}

/// Number of test functions in the dual-norm dictionary.
pub const DUAL_DICTIONARY_SIZE: usize = 64;

/// Weighted norms at the final time of the trajectory.
pub fn weighted_norms(traj: &Trajectory, gamma: f64, order: usize) -> WeightedNormReport {
    weighted_norm_history(traj, gamma, order)
        .pop()
        .unwrap_or(WeightedNormReport {
            gamma,
            time: 0.0,
            sup_norm: 0.0,
            integral_norm: 0.0,
            trace_norm: 0.0,
            dual_norm: 0.0,
        })
}

/// Weighted norms at every sample time; every column is nondecreasing in time.
pub fn weighted_norm_history(traj: &Trajectory, gamma: f64, order: usize) -> Vec<WeightedNormReport> {
    let order = order.min(2);
    let n = traj.times.len();
    if n == 0 {
        return Vec::new();
    }
    let comps: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|c| traj.fields.iter().map(|f| f.iter().map(|u| u[c]).collect()).collect())
        .collect();

    // Time derivatives d_t^j of each component at every (time, node).
    let dt_fields: Vec<Vec<Vec<Vec<f64>>>> = comps
        .iter()
        .map(|comp| {
            let mut levels = vec![comp.clone()];
            for j in 1..=order {
                let prev = &levels[j - 1];
                levels.push(time_derivative(&traj.times, prev));
            }
            levels
        })
        .collect();

    let mut energy = vec![0.0; n];
    for (k, e) in energy.iter_mut().enumerate() {
        let mut total = 0.0;
        for j in 0..=order {
            let mut sq = 0.0;
            for comp in &dt_fields {
                sq += sobolev_squared(&comp[j][k], traj.dx, order - j);
            }
            total += sq.sqrt();
        }
        *e = (-gamma * traj.times[k]).exp() * total;
    }

    let mut trace_sq = vec![vec![0.0; n]; order + 1];
    for (j, row) in trace_sq.iter_mut().enumerate() {
        for (k, r) in row.iter_mut().enumerate() {
            let w = (-2.0 * gamma * traj.times[k]).exp();
            let v: f64 = dt_fields
                .iter()
                .map(|comp| comp[j][k].first().copied().unwrap_or(0.0).powi(2))
                .sum();
            *r = w * v;
        }
    }

    let mut out = Vec::with_capacity(n);
    let mut sup = 0.0f64;
    let mut integral = 0.0;
    let mut trace_int = vec![0.0; order + 1];
    for k in 0..n {
        sup = sup.max(energy[k]);
        if k > 0 {
            let h = traj.times[k] - traj.times[k - 1];
            integral += 0.5 * h * (energy[k] * energy[k] + energy[k - 1] * energy[k - 1]);
            for j in 0..=order {
                trace_int[j] += 0.5 * h * (trace_sq[j][k] + trace_sq[j][k - 1]);
            }
        }
        let trace_norm: f64 = trace_int.iter().map(|v| v.sqrt()).sum();
        let times = &traj.times[..=k];
        let dual_sq: f64 = comps
            .iter()
            .map(|comp| {
                let signal: Vec<f64> = comp[..=k].iter().map(|f| f.first().copied().unwrap_or(0.0)).collect();
                dual_norm(times, &signal, gamma).powi(2)
            })
            .sum();
        out.push(WeightedNormReport {
            gamma,
            time: traj.times[k],
            sup_norm: sup,
            integral_norm: (gamma * integral).sqrt(),
            trace_norm,
            dual_norm: dual_sq.sqrt(),
        });
    }
    // The dictionary supremum over a growing interval need not be monotone
    // sample by sample; the running maximum is still a valid lower bound.
    for k in 1..out.len() {
        out[k].dual_norm = out[k].dual_norm.max(out[k - 1].dual_norm);
    }
    out
}

fn time_derivative(times: &[f64], values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = times.len();
    let m = values.first().map_or(0, Vec::len);
    if n < 3 {
        return vec![vec![0.0; m]; n];
    }
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..m {
        let column: Vec<f64> = values.iter().map(|v| v[i]).collect();
        let d = crate::linalg::nodal_derivative(times, &column);
        for k in 0..n {
            out[k][i] = d[k];
        }
    }
    out
}

/// Discrete `H^s` norm squared with `s <= 2` on a uniform grid.
fn sobolev_squared(values: &[f64], dx: f64, s: usize) -> f64 {
    let mut total: f64 = values.iter().map(|v| v * v).sum::<f64>() * dx;
    let mut current = values.to_vec();
    for _ in 0..s {
        if current.len() < 3 {
            break;
        }
        let xs: Vec<f64> = (0..current.len()).map(|i| i as f64 * dx).collect();
        current = crate::linalg::nodal_derivative(&xs, &current);
        total += current.iter().map(|v| v * v).sum::<f64>() * dx;
    }
    total
}

/// Dictionary shapes on `[0, 1]` before the `e^{gamma t}` factor: three global
/// functions, 57 dyadic hats and four half hats at the ends.
fn dictionary_shape(index: usize, s: f64) -> f64 {
    let hat = |center: f64, half_width: f64| (1.0 - (s - center).abs() / half_width).max(0.0);
    match index {
        0 => 1.0,
        1 => s,
        2 => 1.0 - s,
        3..=59 => {
            let mut k = index - 3;
            let mut level = 1;
            while k >= (1 << level) - 1 {
                k -= (1 << level) - 1;
                level += 1;
            }
            let half_width = 1.0 / f64::from(1u32 << level);
            hat((k + 1) as f64 * half_width, half_width)
        }
        60 => hat(0.0, 0.5),
        61 => hat(0.0, 0.25),
        62 => hat(1.0, 0.5),
        _ => hat(1.0, 0.25),
    }
}

/// Lower bound of the dual norm of a scalar signal `f` sampled at `times`.
///
/// Each test function is `e^{gamma t} w(t/T)` interpolated linearly between the
/// samples, normalised so that `sup e^{-gamma t}|phi| + (gamma int e^{-2 gamma t} phi^2)^{1/2} = 1`.
pub fn dual_norm(times: &[f64], f: &[f64], gamma: f64) -> f64 {
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    let t0 = times[0];
    let span = times[n - 1] - t0;
    if span <= 0.0 {
        return 0.0;
    }
    let mut best = 0.0f64;
    for index in 0..DUAL_DICTIONARY_SIZE {
        let phi: Vec<f64> = times
            .iter()
            .map(|&t| (gamma * t).exp() * dictionary_shape(index, (t - t0) / span))
            .collect();
        let sup = times
            .iter()
            .zip(&phi)
            .map(|(&t, p)| ((-gamma * t).exp() * p).abs())
            .fold(0.0, f64::max);
        let mut l2 = 0.0;
        let mut pairing = 0.0;
        for k in 1..n {
            let h = times[k] - times[k - 1];
            let w0 = (-2.0 * gamma * times[k - 1]).exp();
            let w1 = (-2.0 * gamma * times[k]).exp();
            l2 += 0.5 * h * (w0 * phi[k - 1] * phi[k - 1] + w1 * phi[k] * phi[k]);
            pairing += 0.5 * h * (w0 * f[k - 1] * phi[k - 1] + w1 * f[k] * phi[k]);
        }
        let norm = sup + (gamma * l2).sqrt();
        if norm > 0.0 {
            best = best.max(pairing.abs() / norm);
        }
    }
    best
}

/// Upper bound `int e^{-gamma t} |f|` (trapezoidal).
pub fn dual_bound_l1(times: &[f64], f: &[f64], gamma: f64) -> f64 {
    (1..times.len())
        .map(|k| {
            let h = times[k] - times[k - 1];
            0.5 * h * ((-gamma * times[k - 1]).exp() * f[k - 1].abs() + (-gamma * times[k]).exp() * f[k].abs())
        })
        .sum()
}

/// Upper bound `(gamma^{-1} int e^{-2 gamma t} f^2)^{1/2}` (trapezoidal).
pub fn dual_bound_l2(times: &[f64], f: &[f64], gamma: f64) -> f64 {
    let s: f64 = (1..times.len())
        .map(|k| {
            let h = times[k] - times[k - 1];
            0.5 * h
                * ((-2.0 * gamma * times[k - 1]).exp() * f[k - 1] * f[k - 1]
                    + (-2.0 * gamma * times[k]).exp() * f[k] * f[k])
        })
        .sum();
    (s / gamma).sqrt()
}
