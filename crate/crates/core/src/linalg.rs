//! Small fixed-size linear algebra used throughout the crate.

use nalgebra::{Matrix2, Vector2};

/// State vector of a 2x2 system.
pub type Vec2 = Vector2<f64>;
/// Coefficient matrix of a 2x2 system.
pub type Mat2 = Matrix2<f64>;

/// Counter-clockwise rotation by a right angle: `(a, b) -> (-b, a)`.
///
/// Every place in the crate that needs an orthogonal direction uses this one
/// rotation, so identities mixing several perpendiculars stay consistent.
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v[1], v[0])
}

/// Real, distinct eigenvalues of a 2x2 matrix sorted as `(high, low)`.
///
/// Returns `None` when the discriminant is not strictly positive.
pub fn real_spectrum(a: &Mat2) -> Option<(f64, f64)> {
    let half_trace = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let half_diff = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    // (tr/2)^2 - det written without cancellation between the two squares.
    let disc = half_diff * half_diff + a[(0, 1)] * a[(1, 0)];
    if !(disc > 0.0) {
        return None;
    }
    let root = disc.sqrt();
    Some((half_trace + root, half_trace - root))
}

/// Unit eigenvector of `a` for the eigenvalue `mu`, signed so that its first
/// component with magnitude above `1e-14` is positive.
pub fn unit_eigenvector(a: &Mat2, mu: f64) -> Vec2 {
    let c1 = Vec2::new(a[(0, 1)], mu - a[(0, 0)]);
    let c2 = Vec2::new(mu - a[(1, 1)], a[(1, 0)]);
    let v = if c1.norm_squared() >= c2.norm_squared() { c1 } else { c2 };
    let n = v.norm();
    let v = if n > 0.0 { v / n } else { Vec2::new(1.0, 0.0) };
    canonical_sign(v)
}

/// Flip `v` so that its first non-negligible component is positive.
pub fn canonical_sign(v: Vec2) -> Vec2 {
    let lead = if v[0].abs() > 1e-14 { v[0] } else { v[1] };
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// Spectral absolute value `|M|` of a 2x2 matrix with real eigenvalues.
///
/// Falls back to `max|mu| Id` when the eigenvalues nearly coincide or are complex,
/// which keeps upwind dissipation well defined at degenerate states.
pub fn spectral_abs(m: &Mat2) -> Mat2 {
    match real_spectrum(m) {
        Some((hi, lo)) if hi - lo > 1e-12 * (1.0 + hi.abs() + lo.abs()) => {
            let id = Mat2::identity();
            (hi.abs() * (m - lo * id) - lo.abs() * (m - hi * id)) / (hi - lo)
        }
        _ => {
            let r = 0.5 * (m[(0, 0)] + m[(1, 1)]).abs()
                + (m[(0, 1)].abs() + m[(1, 0)].abs()).max(0.0);
            Mat2::identity() * r
        }
    }
}

/// Largest eigenvalue magnitude of a 2x2 matrix (spectral radius for real spectra).
pub fn spectral_radius(m: &Mat2) -> f64 {
    match real_spectrum(m) {
        Some((hi, lo)) => hi.abs().max(lo.abs()),
        None => {
            let det = m.determinant();
            det.abs().sqrt()
        }
    }
}

/// Eigenvalues `(max, min)` of a symmetric 2x2 matrix.
pub fn symmetric_eigenvalues(s: &Mat2) -> (f64, f64) {
    let mean = 0.5 * (s[(0, 0)] + s[(1, 1)]);
    let half_diff = 0.5 * (s[(0, 0)] - s[(1, 1)]);
    let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
    let r = half_diff.hypot(off);
    (mean + r, mean - r)
}

/// Minmod limiter of two slopes.
#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Componentwise minmod of two vector slopes.
#[inline]
pub fn minmod2(a: Vec2, b: Vec2) -> Vec2 {
    Vec2::new(minmod(a[0], b[0]), minmod(a[1], b[1]))
}

/// Derivative at `x[0]` of the quadratic through three (possibly unevenly spaced) points.
pub fn one_sided_derivative<T>(x: [f64; 3], y: [T; 3]) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (h1, h2) = (x[1] - x[0], x[2] - x[0]);
    let w0 = -(h1 + h2) / (h1 * h2);
    let w1 = h2 / (h1 * (h2 - h1));
    let w2 = -h1 / (h2 * (h2 - h1));
    y[0] * w0 + y[1] * w1 + y[2] * w2
}

/// Derivative at `x[1]` of the quadratic through three points.
pub fn centered_derivative<T>(x: [f64; 3], y: [T; 3]) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (hm, hp) = (x[1] - x[0], x[2] - x[1]);
    let w0 = -hp / (hm * (hm + hp));
    let w1 = (hp - hm) / (hm * hp);
    let w2 = hm / (hp * (hm + hp));
    y[0] * w0 + y[1] * w1 + y[2] * w2
}

/// Second derivative of the quadratic through three points.
pub fn second_derivative<T>(x: [f64; 3], y: [T; 3]) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (hm, hp) = (x[1] - x[0], x[2] - x[1]);
    let w0 = 2.0 / (hm * (hm + hp));
    let w1 = -2.0 / (hm * hp);
    let w2 = 2.0 / (hp * (hm + hp));
    y[0] * w0 + y[1] * w1 + y[2] * w2
}

/// First derivative at every node of a sampled field: centered inside, one-sided
/// second-order at both ends. Requires at least three nodes.
pub fn nodal_derivative<T>(x: &[f64], y: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let n = x.len();
    assert!(n >= 3 && y.len() == n, "nodal_derivative needs at least 3 matching nodes");
    let mut out = Vec::with_capacity(n);
    out.push(one_sided_derivative([x[0], x[1], x[2]], [y[0], y[1], y[2]]));
    for i in 1..n - 1 {
        out.push(centered_derivative(
            [x[i - 1], x[i], x[i + 1]],
            [y[i - 1], y[i], y[i + 1]],
        ));
    }
    out.push(one_sided_derivative(
        [x[n - 1], x[n - 2], x[n - 3]],
        [y[n - 1], y[n - 2], y[n - 3]],
    ));
    out
}

/// Weights of the finite-difference formulas for derivatives of order
/// `0..=max_order` at `x0` on the nodes `xs` (Fornberg's recursion).
///
/// `weights[k][i]` multiplies the sample at `xs[i]` in the order-`k` formula.
pub fn difference_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Value, first and second derivative at `x0` from samples, using all given nodes.
pub fn jet_at<T>(x0: f64, xs: &[f64], ys: &[T]) -> [T; 3]
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    assert!(xs.len() >= 3 && xs.len() == ys.len());
    let w = difference_weights(x0, xs, 2);
    let combine = |k: usize| {
        let mut acc = ys[0] * w[k][0];
        for i in 1..xs.len() {
            acc = acc + ys[i] * w[k][i];
        }
        acc
    };
    [combine(0), combine(1), combine(2)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perp_is_a_quarter_turn() {
        let v = Vec2::new(3.0, 4.0);
        assert_eq!(perp(v), Vec2::new(-4.0, 3.0));
        assert_eq!(perp(perp(v)), -v);
        assert_eq!(v.dot(&perp(v)), 0.0);
    }

    #[test]
    fn spectral_abs_of_diagonal() {
        let m = Mat2::new(2.0, 0.0, 0.0, -3.0);
        let a = spectral_abs(&m);
        assert!((a - Mat2::new(2.0, 0.0, 0.0, 3.0)).norm() < 1e-14);
    }

    #[test]
    fn stencils_exact_on_quadratics() {
        let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let df = |x: f64| 2.0 - 6.0 * x;
        let xs = [0.1, 0.35, 0.9];
        let ys = xs.map(f);
        assert!((one_sided_derivative(xs, ys) - df(0.1)).abs() < 1e-12);
        assert!((centered_derivative(xs, ys) - df(0.35)).abs() < 1e-12);
        assert!((second_derivative(xs, ys) + 6.0).abs() < 1e-11);
    }

    #[test]
    fn eigenvector_sign_convention() {
        let a = Mat2::new(0.0, 1.0, 1.0, 0.0);
        let e = unit_eigenvector(&a, -1.0);
        assert!(e[0] > 0.0);
        assert!((a * e + e).norm() < 1e-14);
    }

    #[test]
    fn difference_weights_are_exact_on_quartics() {
        let xs = [0.0, 0.1, 0.25, 0.3, 0.5];
        let f = |x: f64| 1.0 - x + 2.0 * x * x + x.powi(3) - 3.0 * x.powi(4);
        let ys = xs.map(f);
        let [v, d1, d2] = jet_at(0.0, &xs, &ys);
        assert!((v - 1.0).abs() < 1e-12);
        assert!((d1 + 1.0).abs() < 1e-10);
        assert!((d2 - 4.0).abs() < 1e-8);
    }
}
