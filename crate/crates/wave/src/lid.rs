//! Lid profiles `Z_lid` on an interval and the displaced-lid graph.
//!
//! Outside its interval a lid is continued by its end values.

use crate::WaveError;

/// Natural cubic spline through tabulated samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, WaveError> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(WaveError::InvalidLid(format!("{n} knots with {} values; need at least 3 of each", values.len())));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WaveError::InvalidLid("knots must be strictly increasing".into()));
        }
        // Thomas algorithm on the interior moments, natural end conditions.
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = n - 2;
        let mut diag = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            rhs[i] = 6.0 * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
        }
        for i in 1..m {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut moments = vec![0.0; n];
        for i in (0..m).rev() {
            let upper = if i + 1 < m { h[i + 1] * moments[i + 2] } else { 0.0 };
            moments[i + 1] = (rhs[i] - upper) / diag[i];
        }
        Ok(Self { knots, values, moments })
    }

    fn piece(&self, x: f64) -> usize {
        let k = self.knots.partition_point(|&k| k <= x);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Value, first and second derivative at `x` inside the knot range.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let i = self.piece(x);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - x) / h, (x - x0) / h);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        (value, slope, a * m0 + b * m1)
    }

    /// Largest absolute slope; on each piece the slope is quadratic with its
    /// extremum where the linear second derivative vanishes.
    pub fn max_slope(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.knots.len() - 1 {
            let (x0, x1) = (self.knots[i], self.knots[i + 1]);
            best = best.max(self.eval(x0).1.abs()).max(self.eval(x1 - 1e-15 * (x1 - x0)).1.abs());
            let (m0, m1) = (self.moments[i], self.moments[i + 1]);
            if m0 * m1 < 0.0 {
                let s = m0 / (m0 - m1);
                best = best.max(self.eval(x0 + s * (x1 - x0)).1.abs());
            }
        }
        best
    }
}

/// Shape of the underside of a body.
#[derive(Debug, Clone, PartialEq)]
pub enum LidShape {
    /// `Z = level`.
    Flat { level: f64 },
    /// `Z = bottom + curvature (x - center)^2`.
    Parabolic { center: f64, bottom: f64, curvature: f64 },
    /// `Z = bottom + depth (1 - cos(wavenumber (x - center)))`.
    Cosine { center: f64, bottom: f64, depth: f64, wavenumber: f64 },
    Tabulated(CubicSpline),
}

/// A lid profile on its interval `I_f = [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lid {
    pub shape: LidShape,
    pub lower: f64,
    pub upper: f64,
}

impl Lid {
    pub fn new(shape: LidShape, lower: f64, upper: f64) -> Result<Self, WaveError> {
        if !(upper > lower) {
            return Err(WaveError::InvalidLid(format!("empty interval [{lower}, {upper}]")));
        }
        if let LidShape::Tabulated(s) = &shape {
            let (a, b) = (s.knots[0], s.knots[s.knots.len() - 1]);
            if lower < a || upper > b {
                return Err(WaveError::InvalidLid(format!("interval [{lower}, {upper}] exceeds the table [{a}, {b}]")));
            }
        }
        Ok(Self { shape, lower, upper })
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, WaveError> {
        let (a, b) = (knots[0], *knots.last().unwrap_or(&knots[0]));
        Self::new(LidShape::Tabulated(CubicSpline::new(knots, values)?), a, b)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }

    fn raw(&self, x: f64) -> (f64, f64) {
        match &self.shape {
            LidShape::Flat { level } => (*level, 0.0),
            LidShape::Parabolic { center, bottom, curvature } => {
                let s = x - center;
                (bottom + curvature * s * s, 2.0 * curvature * s)
            }
            LidShape::Cosine { center, bottom, depth, wavenumber } => {
                let s = wavenumber * (x - center);
                (bottom + depth * (1.0 - s.cos()), depth * wavenumber * s.sin())
            }
            LidShape::Tabulated(spline) => {
                let (v, d, _) = spline.eval(x);
                (v, d)
            }
        }
    }

    /// `Z_lid(x)` with constant continuation outside the interval.
    pub fn value(&self, x: f64) -> f64 {
        self.raw(x.clamp(self.lower, self.upper)).0
    }

    /// `Z_lid'(x)`, zero outside the interval.
    pub fn slope(&self, x: f64) -> f64 {
        if self.contains(x) {
            self.raw(x).1
        } else {
            0.0
        }
    }

    /// `sup |Z_lid'|` over the interval.
    pub fn max_slope(&self) -> f64 {
        let (a, b) = (self.lower, self.upper);
        match &self.shape {
            LidShape::Flat { .. } => 0.0,
            LidShape::Parabolic { center, curvature, .. } => 2.0 * curvature.abs() * (a - center).abs().max((b - center).abs()),
            LidShape::Cosine { center, depth, wavenumber, .. } => {
                let k = wavenumber.abs();
                let (sa, sb) = (k * (a - center), k * (b - center));
                let quarter = std::f64::consts::FRAC_PI_2;
                // The sine reaches +-1 if the interval contains an odd multiple of pi/2.
                let first = ((sa - quarter) / std::f64::consts::PI).ceil();
                if quarter + first * std::f64::consts::PI <= sb {
                    depth.abs() * k
                } else {
                    depth.abs() * k * sa.sin().abs().max(sb.sin().abs())
                }
            }
            LidShape::Tabulated(spline) => spline.max_slope(),
        }
    }

    /// Largest rotation for which the lid graph stays a graph.
    pub fn max_rotation(&self) -> f64 {
        let slope = self.max_slope();
        if slope == 0.0 {
            std::f64::consts::FRAC_PI_2
        } else {
            (1.0 / slope).atan()
        }
    }
}

/// Reference position of the centre of mass, where the lid was sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrame {
    pub x_g: f64,
    pub z_g: f64,
}

/// A point on the displaced lid: elevation, slope, and the implicit-equation residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidPoint {
    pub z: f64,
    pub slope: f64,
    pub residual: f64,
}

/// Elevation of the lid of a body translated to `(x_g, z_g)` and rotated
/// counter-clockwise by `theta` about its centre of mass, at abscissa `x`.
pub fn psi_lid_solve(lid: &Lid, x: f64, x_g: f64, z_g: f64, theta: f64, frame: BodyFrame) -> Result<LidPoint, WaveError> {
    let slope_bound = lid.max_slope();
    if slope_bound * theta.abs().tan() >= 1.0 || theta.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(WaveError::RotationOutOfRange { theta, limit: lid.max_rotation() });
    }
    let (c, s) = (theta.cos(), theta.sin());
    let xr = x - x_g;
    let psi = |z: f64| {
        let xi = xr * c + z * s + frame.x_g;
        let value = z * c - xr * s + frame.z_g - lid.value(xi);
        let dz = c - lid.slope(xi) * s;
        (value, dz, xi)
    };
    // The map z -> psi(z) is strictly increasing; bracket the root, then
    // Newton steps safeguarded by bisection.
    let mut z = lid.value(xr + frame.x_g) - frame.z_g;
    let scale = 1.0 + z.abs() + xr.abs();
    let (f0, _, _) = psi(z);
    let (mut lo, mut hi) = (z, z);
    let mut step = f0.abs().max(1e-3 * scale);
    if f0 > 0.0 {
        while psi(lo).0 > 0.0 {
            lo -= step;
            step *= 2.0;
        }
    } else {
        while psi(hi).0 < 0.0 {
            hi += step;
            step *= 2.0;
        }
    }
    let tolerance = 1e-13 * scale;
    for _ in 0..200 {
        let (f, dz, _) = psi(z);
        if f.abs() <= tolerance {
            let xi = xr * c + z * s + frame.x_g;
            let ds = lid.slope(xi);
            let slope = (s + ds * c) / (c - ds * s);
            return Ok(LidPoint { z: z + z_g, slope, residual: f });
        }
        if f > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let newton = z - f / dz;
        z = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * scale {
            let (f, _, xi) = psi(z);
            let ds = lid.slope(xi);
            return Ok(LidPoint { z: z + z_g, slope: (s + ds * c) / (c - ds * s), residual: f });
        }
    }
    Err(WaveError::NewtonDivergence { residual: psi(z).0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola() -> Lid {
        Lid::new(LidShape::Parabolic { center: 0.0, bottom: -0.2, curvature: 0.5 }, -1.0, 1.0).unwrap()
    }

    #[test]
    fn spline_reproduces_a_cubic_with_natural_ends_only_on_lines() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.4).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 0.5 * x).collect();
        let s = CubicSpline::new(xs, ys).unwrap();
        for x in [0.1, 0.77, 1.9] {
            let (v, d, dd) = s.eval(x);
            assert!((v - (1.0 - 0.5 * x)).abs() < 1e-14 && (d + 0.5).abs() < 1e-14 && dd.abs() < 1e-14);
        }
        assert!((s.max_slope() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn spline_interpolates_smooth_data() {
        let xs: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.sin()).collect();
        let s = CubicSpline::new(xs, ys).unwrap();
        assert!((s.eval(0.33).0 - 0.33f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn translation_only() {
        let lid = parabola();
        let frame = BodyFrame { x_g: 0.0, z_g: 0.1 };
        let p = psi_lid_solve(&lid, 0.3, 0.05, 0.12, 0.0, frame).unwrap();
        let expected = lid.value(0.3 - 0.05) + 0.12 - 0.1;
        assert!((p.z - expected).abs() < 1e-12);
        assert!((p.slope - lid.slope(0.25)).abs() < 1e-12);
    }

    #[test]
    fn constant_lid_closed_form() {
        let lid = Lid::new(LidShape::Flat { level: -0.1 }, -1.0, 1.0).unwrap();
        let frame = BodyFrame { x_g: 0.0, z_g: 0.05 };
        let (theta, x, x_g, z_g) = (0.2_f64, 0.4, 0.1, 0.07);
        let p = psi_lid_solve(&lid, x, x_g, z_g, theta, frame).unwrap();
        let xr = x - x_g;
        let expected = (-0.1 - frame.z_g + xr * theta.sin()) / theta.cos() + z_g;
        assert!((p.z - expected).abs() < 1e-12);
        assert!(p.residual.abs() <= 1e-12);
    }

    #[test]
    fn rotation_threshold() {
        let lid = parabola();
        let frame = BodyFrame { x_g: 0.0, z_g: 0.0 };
        let limit = ((1.0 - 1e-6) / lid.max_slope()).atan();
        for x in [-0.9, -0.3, 0.0, 0.5, 0.95] {
            let p = psi_lid_solve(&lid, x, 0.0, 0.0, limit, frame).unwrap();
            assert!(p.residual.abs() <= 1e-12);
        }
        let beyond = (1.0 / lid.max_slope()).atan() + 1e-9;
        assert!(matches!(psi_lid_solve(&lid, 0.0, 0.0, 0.0, beyond, frame), Err(WaveError::RotationOutOfRange { .. })));
    }

    #[test]
    fn cosine_slope_bound() {
        let lid = Lid::new(LidShape::Cosine { center: 0.0, bottom: -0.3, depth: 0.2, wavenumber: 1.0 }, -0.5, 0.5).unwrap();
        assert!((lid.max_slope() - 0.2 * 0.5f64.sin()).abs() < 1e-15);
        let wide = Lid::new(LidShape::Cosine { center: 0.0, bottom: -0.3, depth: 0.2, wavenumber: 1.0 }, -2.0, 2.0).unwrap();
        assert!((wide.max_slope() - 0.2).abs() < 1e-15);
    }
}
