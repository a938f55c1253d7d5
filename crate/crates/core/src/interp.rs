//! One-dimensional cubic Hermite interpolation helpers.

/// Cubic Hermite interpolant on `[x0, x1]` through `(x0, y0, d0)` and `(x1, y1, d1)`.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Index `i` with `xs[i] <= x < xs[i + 1]`, clamped to the first/last interval.
#[inline]
pub fn locate(xs: &[f64], x: f64) -> usize {
    debug_assert!(xs.len() >= 2);
    let upper = xs.partition_point(|&v| v <= x);
    upper.saturating_sub(1).min(xs.len() - 2)
}

/// Three-point derivative estimates on a non-uniform grid (second order in the
/// interior, one-sided second order at the ends).
pub fn three_point_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    if n == 2 {
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![s, s];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        d[i] = -h1 / (h0 * (h0 + h1)) * ys[i - 1] + (h1 - h0) / (h0 * h1) * ys[i] + h0 / (h1 * (h0 + h1)) * ys[i + 1];
    }
    let (h0, h1) = (xs[1] - xs[0], xs[2] - xs[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * ys[0] + (h0 + h1) / (h0 * h1) * ys[1] - h0 / (h1 * (h0 + h1)) * ys[2];
    let (h0, h1) = (xs[n - 2] - xs[n - 3], xs[n - 1] - xs[n - 2]);
    d[n - 1] = h1 / (h0 * (h0 + h1)) * ys[n - 3] - (h0 + h1) / (h0 * h1) * ys[n - 2]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * ys[n - 1];
    d
}

/// Shape-preserving piecewise cubic (Fritsch–Carlson slopes with the
/// Fritsch–Butland harmonic mean), as used for tabulated radial profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` must be strictly increasing with at least two points.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && n == ys.len());
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    slopes[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        MonotoneCubic { xs, ys, slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = locate(&self.xs, x);
        hermite(
            self.xs[i],
            self.xs[i + 1],
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            x,
        )
    }

    pub fn first_x(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_x(&self) -> f64 {
        *self.xs.last().expect("non-empty")
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |x: f64| x * x * x - 2.0 * x + 1.0;
        let dp = |x: f64| 3.0 * x * x - 2.0;
        for &x in &[0.3, 0.55, 0.9] {
            let v = hermite(0.2, 1.1, p(0.2), p(1.1), dp(0.2), dp(1.1), x);
            assert!((v - p(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn three_point_slopes_exact_for_quadratics() {
        let xs = vec![0.1, 0.15, 0.3, 0.32, 0.7];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x - x).collect();
        let d = three_point_slopes(&xs, &ys);
        for (x, s) in xs.iter().zip(d) {
            assert!((s - (4.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.2, 5.0, 5.1];
        let pc = MonotoneCubic::new(xs, ys);
        let mut prev = pc.eval(0.0);
        for k in 1..=400 {
            let v = pc.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!((pc.eval(3.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn locate_clamps() {
        let xs = [0.0, 1.0, 2.0];
        assert_eq!(locate(&xs, -1.0), 0);
        assert_eq!(locate(&xs, 1.0), 1);
        assert_eq!(locate(&xs, 5.0), 1);
    }
}
