//! Planar deformations in polar form `(r, θ) ↦ (R(r, θ), Θ(r, θ))`.
//!
//! A [`PolarMap`] is either backed by closures (closed forms, built spirals,
//! linear maps) or by a sampled grid read from a `polarmap v1` file, in
//! which case it is evaluated through a tensor-product cubic interpolant.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{hermite, locate};

pub type PolarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PartialsFn = Arc<dyn Fn(f64, f64) -> Partials + Send + Sync>;

/// Wraps an angle into `(−π, π]`.
#[inline]
pub fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// The four first-order partials of a polar map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    /// ∂ᵣR
    pub radius_dr: f64,
    /// ∂θR
    pub radius_dtheta: f64,
    /// ∂ᵣΘ
    pub angle_dr: f64,
    /// ∂θΘ
    pub angle_dtheta: f64,
}

impl Partials {
    pub fn as_array(&self) -> [f64; 4] {
        [self.radius_dr, self.radius_dtheta, self.angle_dr, self.angle_dtheta]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Clone)]
pub struct PolarMap {
    label: String,
    radius: PolarFn,
    angle: PolarFn,
    partials: Option<PartialsFn>,
    r_min: f64,
    r_max: f64,
    origin_defined: bool,
    linear: Option<[[f64; 2]; 2]>,
}

impl fmt::Debug for PolarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolarMap")
            .field("label", &self.label)
            .field("r_min", &self.r_min)
            .field("r_max", &self.r_max)
            .field("analytic_partials", &self.partials.is_some())
            .field("linear", &self.linear)
            .finish()
    }
}

impl PolarMap {
    pub fn new<R, T>(label: impl Into<String>, radius: R, angle: T, r_max: f64) -> Self
    where
        R: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        T: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        PolarMap {
            label: label.into(),
            radius: Arc::new(radius),
            angle: Arc::new(angle),
            partials: None,
            r_min: 0.0,
            r_max,
            origin_defined: true,
            linear: None,
        }
    }

    pub fn with_partials<P>(mut self, partials: P) -> Self
    where
        P: Fn(f64, f64) -> Partials + Send + Sync + 'static,
    {
        self.partials = Some(Arc::new(partials));
        self
    }

    /// Marks whether `R(0, ·)`, `Θ(0, ·)` may be evaluated.
    pub fn with_origin(mut self, defined: bool) -> Self {
        self.origin_defined = defined;
        self
    }

    pub fn identity(r_max: f64) -> Self {
        Self::linear("identity", [[1.0, 0.0], [0.0, 1.0]], r_max).expect("identity is invertible")
    }

    pub fn rotation(angle: f64, r_max: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::linear(format!("rotation({angle})"), [[c, -s], [s, c]], r_max).expect("rotation is invertible")
    }

    /// `(x, y) ↦ (2x, y)`.
    pub fn anisotropic_scaling(r_max: f64) -> Self {
        Self::linear("scaling", [[2.0, 0.0], [0.0, 1.0]], r_max).expect("invertible")
    }

    /// `(x, y) ↦ (x + 0.3 y, y)`.
    pub fn shear(r_max: f64) -> Self {
        Self::linear("shear", [[1.0, 0.3], [0.0, 1.0]], r_max).expect("invertible")
    }

    /// Polar form of the cartesian linear map `p ↦ A p` with analytic partials.
    ///
    /// The angle is lifted as `sθ + c + wrap(arg(Au) − sθ − c)` with
    /// `s = sign(det A)` and `c = arg(A e₁)`, so its winding number is `s`.
    pub fn linear(label: impl Into<String>, a: [[f64; 2]; 2], r_max: f64) -> Result<Self> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::Degenerate(format!("linear map {a:?} is singular")));
        }
        let s = det.signum();
        let c = a[1][0].atan2(a[0][0]);
        let apply = move |theta: f64| {
            let (sn, cs) = theta.sin_cos();
            (a[0][0] * cs + a[0][1] * sn, a[1][0] * cs + a[1][1] * sn)
        };
        let angle = move |_r: f64, theta: f64| {
            let (vx, vy) = apply(theta);
            s * theta + c + wrap_pi(vy.atan2(vx) - s * theta - c)
        };
        let radius = move |r: f64, theta: f64| {
            let (vx, vy) = apply(theta);
            r * vx.hypot(vy)
        };
        let partials = move |r: f64, theta: f64| {
            let (vx, vy) = apply(theta);
            let (dvx, dvy) = apply(theta + PI / 2.0);
            let n2 = vx * vx + vy * vy;
            let n = n2.sqrt();
            Partials {
                radius_dr: n,
                radius_dtheta: r * (vx * dvx + vy * dvy) / n,
                angle_dr: 0.0,
                angle_dtheta: det / n2,
            }
        };
        let mut map = PolarMap::new(label, radius, angle, r_max).with_partials(partials);
        map.linear = Some(a);
        Ok(map)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    #[inline]
    pub fn radius(&self, r: f64, theta: f64) -> f64 {
        (self.radius)(r, theta)
    }

    #[inline]
    pub fn angle(&self, r: f64, theta: f64) -> f64 {
        (self.angle)(r, theta)
    }

    pub fn analytic_partials(&self, r: f64, theta: f64) -> Option<Partials> {
        self.partials.as_ref().map(|p| p(r, theta))
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn origin_defined(&self) -> bool {
        self.origin_defined
    }

    /// Cartesian matrix when the map is linear.
    pub fn as_linear(&self) -> Option<[[f64; 2]; 2]> {
        self.linear
    }

    pub fn from_samples(samples: SampledMap) -> Self {
        let s = Arc::new(samples);
        let (s1, s2) = (s.clone(), s.clone());
        let r_min = s.radii[0];
        let r_max = *s.radii.last().expect("rows");
        PolarMap {
            label: "sampled".into(),
            radius: Arc::new(move |r, t| s1.eval(r, t, false)),
            angle: Arc::new(move |r, t| s2.eval(r, t, true)),
            partials: None,
            r_min,
            r_max,
            origin_defined: r_min == 0.0,
            linear: None,
        }
    }
}

/// A map sampled on a `nr × ntheta` polar lattice with uniformly spaced
/// angles covering the full circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMap {
    radii: Vec<f64>,
    theta_start: f64,
    ntheta: usize,
    /// Row-major `R` values.
    radius: Vec<f64>,
    /// Row-major `Θ − kθ` (periodic part, rows aligned in r).
    periodic: Vec<f64>,
    winding: i64,
}

impl SampledMap {
    /// Builds from row-major `(r, θ, R, Θ)` rows.
    pub fn from_rows(nr: usize, ntheta: usize, rows: &[[f64; 4]]) -> Result<Self> {
        if nr < 2 || ntheta < 4 {
            return Err(Error::Argument(format!(
                "need nr ≥ 2 and ntheta ≥ 4, got {nr} × {ntheta}"
            )));
        }
        if rows.len() != nr * ntheta {
            return Err(Error::Argument(format!(
                "expected {} rows, found {}",
                nr * ntheta,
                rows.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite sample".into()));
        }
        let dtheta = TAU / ntheta as f64;
        let theta_start = rows[0][1];
        let mut radii = Vec::with_capacity(nr);
        let mut radius = Vec::with_capacity(nr * ntheta);
        let mut periodic = Vec::with_capacity(nr * ntheta);
        let mut winding = None;
        let mut prev_first: Option<f64> = None;
        for (i, block) in rows.chunks(ntheta).enumerate() {
            let r = block[0][0];
            if r < 0.0 || radii.last().is_some_and(|&p| r <= p) {
                return Err(Error::Argument(format!(
                    "row block {i}: radii must be non-negative and increasing"
                )));
            }
            for (j, row) in block.iter().enumerate() {
                if row[0] != r {
                    return Err(Error::Argument(format!(
                        "row block {i}: radius changes within a constant-r row"
                    )));
                }
                let expected = theta_start + j as f64 * dtheta;
                if (row[1] - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                    return Err(Error::Argument(format!(
                        "row block {i}: angles must be uniformly spaced over the full circle"
                    )));
                }
                if j > 0 && (row[3] - block[j - 1][3]).abs() >= PI {
                    return Err(Error::Argument(format!(
                        "row block {i}: Θ is not unwrapped along the row"
                    )));
                }
            }
            let first = block[0][3];
            let last = block[ntheta - 1][3];
            let total = last - first + wrap_pi(first - last);
            let k = (total / TAU).round() as i64;
            match winding {
                None => winding = Some(k),
                Some(w) if w != k => {
                    return Err(Error::Argument(format!(
                        "winding number changes from {w} to {k} at r = {r}"
                    )))
                }
                _ => {}
            }
            let shift = match prev_first {
                None => 0.0,
                Some(p) => TAU * ((p - (first - k as f64 * theta_start)) / TAU).round(),
            };
            for row in block {
                radius.push(row[2]);
                periodic.push(row[3] - k as f64 * row[1] + shift);
            }
            prev_first = Some(first - k as f64 * theta_start + shift);
            radii.push(r);
        }
        Ok(SampledMap {
            radii,
            theta_start,
            ntheta,
            radius,
            periodic,
            winding: winding.unwrap_or(0),
        })
    }

    /// Parses the `polarmap v1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (n, header) = lines.next().ok_or_else(|| Error::parse(1, "empty polarmap file"))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        let (nr, ntheta) = match words.as_slice() {
            ["polarmap", "v1", "nr", a, "ntheta", b] => (
                a.parse::<usize>().map_err(|_| Error::parse(n, "bad nr"))?,
                b.parse::<usize>().map_err(|_| Error::parse(n, "bad ntheta"))?,
            ),
            _ => return Err(Error::parse(n, "expected header `polarmap v1 nr <int> ntheta <int>`")),
        };
        let mut rows = Vec::with_capacity(nr * ntheta);
        for (n, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|w| {
                    w.parse::<f64>()
                        .map_err(|_| Error::parse(n, format!("bad number `{w}`")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 4 {
                return Err(Error::parse(n, "rows must be `r theta R Theta`"));
            }
            rows.push([vals[0], vals[1], vals[2], vals[3]]);
        }
        SampledMap::from_rows(nr, ntheta, &rows).map_err(|e| match e {
            Error::Argument(m) => Error::parse(0, m),
            other => other,
        })
    }

    /// Samples `map` on `radii × angles`, unwrapping Θ along each row.
    pub fn write(map: &PolarMap, radii: &[f64], angles: &[f64]) -> String {
        let mut out = format!("polarmap v1 nr {} ntheta {}\n", radii.len(), angles.len());
        for &r in radii {
            let mut prev: Option<f64> = None;
            for &t in angles {
                let raw = map.angle(r, t);
                let lifted = match prev {
                    None => raw,
                    Some(p) => p + wrap_pi(raw - p),
                };
                prev = Some(lifted);
                out.push_str(&format!("{r} {t} {} {lifted}\n", map.radius(r, t)));
            }
        }
        out
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn angles(&self) -> Vec<f64> {
        let d = TAU / self.ntheta as f64;
        (0..self.ntheta).map(|j| self.theta_start + j as f64 * d).collect()
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    fn row_value(&self, values: &[f64], i: usize, j: usize, frac: f64) -> f64 {
        let n = self.ntheta;
        let row = &values[i * n..(i + 1) * n];
        let at = |k: isize| row[k.rem_euclid(n as isize) as usize];
        let j = j as isize;
        let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
        // Catmull-Rom in units of the angular step.
        hermite(0.0, 1.0, p1, p2, 0.5 * (p2 - p0), 0.5 * (p3 - p1), frac)
    }

    fn eval(&self, r: f64, theta: f64, angle: bool) -> f64 {
        let values = if angle { &self.periodic } else { &self.radius };
        let d = TAU / self.ntheta as f64;
        let t = ((theta - self.theta_start) / d).rem_euclid(self.ntheta as f64);
        let j = (t.floor() as usize).min(self.ntheta - 1);
        let frac = t - j as f64;
        let nr = self.radii.len();
        let i = locate(&self.radii, r);
        let lo = i.saturating_sub(1);
        let hi = (i + 2).min(nr - 1);
        let xs = &self.radii[lo..=hi];
        let ys: Vec<f64> = (lo..=hi).map(|k| self.row_value(values, k, j, frac)).collect();
        let v = if nr == 2 {
            ys[0] + (ys[1] - ys[0]) * (r - xs[0]) / (xs[1] - xs[0])
        } else {
            let slope = |k: usize| -> f64 {
                // Closest three-point stencil around global row k.
                let c = k.clamp(1, nr - 2);
                let a = c - 1 - lo;
                let xw = [self.radii[c - 1], self.radii[c], self.radii[c + 1]];
                let yw = [ys[a], ys[a + 1], ys[a + 2]];
                three_point(xw, yw, k + 1 - c)
            };
            hermite(
                self.radii[i],
                self.radii[i + 1],
                ys[i - lo],
                ys[i + 1 - lo],
                slope(i),
                slope(i + 1),
                r,
            )
        };
        if angle {
            v + self.winding as f64 * theta
        } else {
            v
        }
    }
}

/// Derivative at `x[at]` of the parabola through three points.
fn three_point(x: [f64; 3], y: [f64; 3], at: usize) -> f64 {
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    match at {
        0 => -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1] - h0 / (h1 * (h0 + h1)) * y[2],
        1 => -h1 / (h0 * (h0 + h1)) * y[0] + (h1 - h0) / (h0 * h1) * y[1] + h0 / (h1 * (h0 + h1)) * y[2],
        _ => h1 / (h0 * (h0 + h1)) * y[0] - (h0 + h1) / (h0 * h1) * y[1] + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * y[2],
    }
}
