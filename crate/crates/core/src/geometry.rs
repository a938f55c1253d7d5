//! Pushforward areas of rectangles and lengths of segments, and their
//! behaviour when the shape is rotated about the origin before mapping.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar_map::PolarMap;

pub type Point = [f64; 2];

fn rotate(p: Point, phi: f64) -> Point {
    let (s, c) = phi.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Rectangle with the given center, half-widths along its own axes and
/// orientation of the first axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Point,
    #[serde(rename = "halfwidths")]
    pub half_widths: [f64; 2],
    #[serde(default)]
    pub orientation: f64,
}

impl Rect {
    pub fn new(center: Point, half_widths: [f64; 2], orientation: f64) -> Result<Self> {
        let r = Rect {
            center,
            half_widths,
            orientation,
        };
        r.check()?;
        Ok(r)
    }

    /// Axis-aligned `[x0, x1] × [y0, y1]`.
    pub fn from_bounds(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Rect::new(
            [(x0 + x1) / 2.0, (y0 + y1) / 2.0],
            [(x1 - x0) / 2.0, (y1 - y0) / 2.0],
            0.0,
        )
    }

    pub fn check(&self) -> Result<()> {
        let [a, b] = self.half_widths;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Argument(format!(
                "rectangle half-widths must be positive, got ({a}, {b})"
            )));
        }
        if !(self.center.iter().all(|c| c.is_finite()) && self.orientation.is_finite()) {
            return Err(Error::Argument(
                "rectangle center and orientation must be finite".into(),
            ));
        }
        Ok(())
    }

    /// The image under the rotation by `phi` about the origin.
    pub fn rotated(&self, phi: f64) -> Rect {
        Rect {
            center: rotate(self.center, phi),
            half_widths: self.half_widths,
            orientation: self.orientation + phi,
        }
    }

    pub fn axes(&self) -> [Point; 2] {
        let (s, c) = self.orientation.sin_cos();
        [[c, s], [-s, c]]
    }

    /// Point at local coordinates `(u, v) ∈ [−1, 1]²`.
    pub fn point(&self, u: f64, v: f64) -> Point {
        let [e1, e2] = self.axes();
        let [a, b] = self.half_widths;
        [
            self.center[0] + a * u * e1[0] + b * v * e2[0],
            self.center[1] + a * u * e1[1] + b * v * e2[1],
        ]
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_widths[0] * self.half_widths[1]
    }

    pub fn perimeter(&self) -> f64 {
        4.0 * (self.half_widths[0] + self.half_widths[1])
    }

    /// Counter-clockwise from local `(−1, −1)`.
    pub fn corners(&self) -> [Point; 4] {
        [
            self.point(-1.0, -1.0),
            self.point(1.0, -1.0),
            self.point(1.0, 1.0),
            self.point(-1.0, 1.0),
        ]
    }

    pub fn edges(&self) -> [Segment; 4] {
        let c = self.corners();
        [0, 1, 2, 3].map(|i| Segment {
            start: c[i],
            end: c[(i + 1) % 4],
        })
    }

    /// Euclidean distance from the origin to the closed rectangle.
    pub fn distance_to_origin(&self) -> f64 {
        let [e1, e2] = self.axes();
        let p = [-self.center[0], -self.center[1]];
        let u = (p[0] * e1[0] + p[1] * e1[1]).abs() - self.half_widths[0];
        let v = (p[0] * e2[0] + p[1] * e2[1]).abs() - self.half_widths[1];
        u.max(0.0).hypot(v.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
}

impl Segment {
    pub fn new(start: Point, end: Point) -> Result<Self> {
        let s = Segment { start, end };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if self.start == self.end {
            return Err(Error::Argument("segment endpoints must be distinct".into()));
        }
        if !self.start.iter().chain(&self.end).all(|c| c.is_finite()) {
            return Err(Error::Argument("segment endpoints must be finite".into()));
        }
        Ok(())
    }

    pub fn rotated(&self, phi: f64) -> Segment {
        Segment {
            start: rotate(self.start, phi),
            end: rotate(self.end, phi),
        }
    }

    pub fn direction(&self) -> Point {
        [self.end[0] - self.start[0], self.end[1] - self.start[1]]
    }

    pub fn length(&self) -> f64 {
        let d = self.direction();
        d[0].hypot(d[1])
    }

    pub fn distance_to_origin(&self) -> f64 {
        let d = self.direction();
        let t = (-(self.start[0] * d[0] + self.start[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
        (self.start[0] + t * d[0]).hypot(self.start[1] + t * d[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Rect(Rect),
    Segment(Segment),
}

impl Shape {
    pub fn rotated(&self, phi: f64) -> Shape {
        match self {
            Shape::Rect(r) => Shape::Rect(r.rotated(phi)),
            Shape::Segment(s) => Shape::Segment(s.rotated(phi)),
        }
    }

    pub fn distance_to_origin(&self) -> f64 {
        match self {
            Shape::Rect(r) => r.distance_to_origin(),
            Shape::Segment(s) => s.distance_to_origin(),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Shape::Rect(r) => r.check(),
            Shape::Segment(s) => s.check(),
        }
    }
}

/// `F(x, y) = (R cos Θ, R sin Θ)` at the polar coordinates of `(x, y)`.
/// Linear maps are applied directly.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    polar: PolarMap,
}

impl From<PolarMap> for PlanarMap {
    fn from(polar: PolarMap) -> Self {
        PlanarMap { polar }
    }
}

impl PlanarMap {
    pub fn new(polar: PolarMap) -> Self {
        PlanarMap { polar }
    }

    pub fn polar(&self) -> &PolarMap {
        &self.polar
    }

    pub fn label(&self) -> &str {
        self.polar.label()
    }

    pub fn as_linear(&self) -> Option<[[f64; 2]; 2]> {
        self.polar.as_linear()
    }

    /// Unchecked evaluation; may return non-finite values outside the domain.
    pub fn forward(&self, p: Point) -> Point {
        if let Some(a) = self.polar.as_linear() {
            return [a[0][0] * p[0] + a[0][1] * p[1], a[1][0] * p[0] + a[1][1] * p[1]];
        }
        let r = p[0].hypot(p[1]);
        let theta = if r == 0.0 { 0.0 } else { p[1].atan2(p[0]) };
        let big_r = self.polar.radius(r, theta);
        let (s, c) = self.polar.angle(r, theta).sin_cos();
        [big_r * c, big_r * s]
    }

    pub fn try_forward(&self, p: Point) -> Result<Point> {
        if self.polar.as_linear().is_none() {
            let r = p[0].hypot(p[1]);
            if r > self.polar.r_max() || r < self.polar.r_min() {
                return Err(Error::Argument(format!(
                    "point ({}, {}) at radius {r} lies outside the map domain [{}, {}]",
                    p[0],
                    p[1],
                    self.polar.r_min(),
                    self.polar.r_max()
                )));
            }
        }
        let q = self.forward(p);
        if q.iter().all(|v| v.is_finite()) {
            Ok(q)
        } else {
            Err(Error::NonFiniteAtPoint {
                quantity: "F",
                x: p[0],
                y: p[1],
            })
        }
    }

    /// Cartesian Jacobian `[[∂X/∂x, ∂X/∂y], [∂Y/∂x, ∂Y/∂y]]` by central
    /// differences (exact for linear maps).
    pub fn jacobian(&self, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
        if let Some(a) = self.polar.as_linear() {
            return Ok(a);
        }
        let xp = self.try_forward([p[0] + step, p[1]])?;
        let xm = self.try_forward([p[0] - step, p[1]])?;
        let yp = self.try_forward([p[0], p[1] + step])?;
        let ym = self.try_forward([p[0], p[1] - step])?;
        let inv = 0.5 / step;
        let j = [
            [(xp[0] - xm[0]) * inv, (yp[0] - ym[0]) * inv],
            [(xp[1] - xm[1]) * inv, (yp[1] - ym[1]) * inv],
        ];
        if j.iter().flatten().all(|v| v.is_finite()) {
            Ok(j)
        } else {
            Err(Error::NonFiniteAtPoint {
                quantity: "Jacobian",
                x: p[0],
                y: p[1],
            })
        }
    }
}

fn check_subdivisions(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 subdivisions, got {n}")));
    }
    Ok(())
}

/// `∬_E |det J_F|` by the midpoint rule on an `n × n` subdivision.
pub fn pushforward_area(map: &PlanarMap, rect: &Rect, n: usize) -> Result<f64> {
    check_subdivisions(n)?;
    rect.check()?;
    let step = rect.half_widths[0].min(rect.half_widths[1]) / (100.0 * n as f64);
    let mut total = 0.0;
    for j in 0..n {
        let v = -1.0 + (2 * j + 1) as f64 / n as f64;
        let mut row = 0.0;
        for i in 0..n {
            let u = -1.0 + (2 * i + 1) as f64 / n as f64;
            let jac = map.jacobian(rect.point(u, v), step)?;
            row += (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]).abs();
        }
        total += row;
    }
    Ok(total * rect.area() / (n * n) as f64)
}

/// `∫₀¹ ‖J_F(s(t)) s′‖ dt` by the composite midpoint rule with `n` panels.
pub fn pushforward_length(map: &PlanarMap, segment: &Segment, n: usize) -> Result<f64> {
    check_subdivisions(n)?;
    segment.check()?;
    let d = segment.direction();
    let step = segment.length() / (100.0 * n as f64);
    let mut total = 0.0;
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let p = [segment.start[0] + t * d[0], segment.start[1] + t * d[1]];
        let jac = map.jacobian(p, step)?;
        total += (jac[0][0] * d[0] + jac[0][1] * d[1]).hypot(jac[1][0] * d[0] + jac[1][1] * d[1]);
    }
    Ok(total / n as f64)
}

/// Area of a rectangle's image, or length of a segment's.
pub fn pushforward_measure(map: &PlanarMap, shape: &Shape, n: usize) -> Result<f64> {
    match shape {
        Shape::Rect(r) => pushforward_area(map, r, n),
        Shape::Segment(s) => pushforward_length(map, s, n),
    }
}

/// Sum of the pushforward lengths of the four edges.
pub fn pushforward_perimeter(map: &PlanarMap, rect: &Rect, n: usize) -> Result<f64> {
    rect.edges()
        .iter()
        .map(|e| pushforward_length(map, e, n))
        .sum::<Result<f64>>()
}

/// `count` angles uniform on `[0, 2π)` from a seeded generator.
pub fn seeded_rotations(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub shape: Shape,
    #[serde(rename = "transform-id")]
    pub transform_id: String,
    /// Starts with the identity rotation 0.
    pub rotations: Vec<f64>,
    pub values: Vec<f64>,
    /// `(max − min) / |value at the identity rotation|`.
    pub rel_spread: f64,
    pub pass: bool,
}

/// Measures `F(φ(E))` for `φ = 0` and every given rotation. Non-linear maps
/// need shapes that stay away from the origin.
pub fn rotation_invariance_report(
    map: &PlanarMap,
    shape: &Shape,
    rotations: &[f64],
    n: usize,
    tol_rel: f64,
) -> Result<InvarianceReport> {
    if rotations.is_empty() {
        return Err(Error::Argument("at least one rotation is required".into()));
    }
    shape.check()?;
    if map.as_linear().is_none() && shape.distance_to_origin() == 0.0 {
        return Err(Error::Argument(
            "shape touches the origin, where the map need not be differentiable".into(),
        ));
    }
    let all: Vec<f64> = std::iter::once(0.0).chain(rotations.iter().copied()).collect();
    let values = all
        .iter()
        .map(|&phi| pushforward_measure(map, &shape.rotated(phi), n))
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let rel_spread = (hi - lo) / values[0].abs();
    Ok(InvarianceReport {
        shape: *shape,
        transform_id: map.label().to_string(),
        rotations: all,
        values,
        rel_spread,
        pass: rel_spread <= tol_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;
    use crate::spiral::{build_spiral, Sign, SpiralSpec};
    use std::f64::consts::PI;

    fn identity() -> PlanarMap {
        PolarMap::identity(f64::INFINITY).into()
    }

    fn scaling() -> PlanarMap {
        PolarMap::anisotropic_scaling(f64::INFINITY).into()
    }

    fn unit_pitch() -> PlanarMap {
        let spec = SpiralSpec::new(
            Sign::Plus,
            Sign::Plus,
            0.0,
            RadialProfile::unit_pitch_spiral(1.0, 1.0, 4.0),
        );
        build_spiral(&spec).unwrap().into()
    }

    fn unit_pitch_raw() -> PlanarMap {
        PolarMap::new("raw-spiral", |r, _| r, |r, t| t + r, 4.0).into()
    }

    #[test]
    fn rect_geometry() {
        let r = Rect::from_bounds(0.5, 1.5, -0.5, 0.5).unwrap();
        assert_eq!(r.center, [1.0, 0.0]);
        assert_eq!(r.area(), 1.0);
        assert!((r.distance_to_origin() - 0.5).abs() < 1e-15);
        let q = r.rotated(PI / 2.0);
        assert!((q.center[0]).abs() < 1e-15 && (q.center[1] - 1.0).abs() < 1e-15);
        assert!((q.distance_to_origin() - 0.5).abs() < 1e-12);
        assert_eq!(
            Rect::from_bounds(-1.0, 1.0, -1.0, 1.0).unwrap().distance_to_origin(),
            0.0
        );
        assert!(Rect::new([0.0, 0.0], [0.0, 1.0], 0.0).is_err());
        let edges = r.edges();
        assert!((edges.iter().map(Segment::length).sum::<f64>() - r.perimeter()).abs() < 1e-14);
    }

    #[test]
    fn segment_geometry() {
        assert!(Segment::new([1.0, 1.0], [1.0, 1.0]).is_err());
        let s = Segment::new([1.0, -1.0], [1.0, 1.0]).unwrap();
        assert!((s.distance_to_origin() - 1.0).abs() < 1e-15);
        assert!((s.rotated(0.3).length() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn planar_map_composes_polar_form() {
        let m = unit_pitch_raw();
        let p = m.forward([1.0, 0.0]);
        assert!((p[0] - 1f64.cos()).abs() < 1e-15 && (p[1] - 1f64.sin()).abs() < 1e-15);
        assert_eq!(unit_pitch().forward([0.0, 0.0]), [0.0, 0.0]);
        assert!(m.try_forward([5.0, 0.0]).is_err());
    }

    #[test]
    fn area_examples() {
        let sq = Rect::from_bounds(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!((pushforward_area(&identity(), &sq, 64).unwrap() - 1.0).abs() < 1e-6);
        assert!((pushforward_area(&scaling(), &sq, 64).unwrap() - 2.0).abs() < 1e-6);
        let off = Rect::from_bounds(0.5, 1.5, 0.5, 1.5).unwrap();
        assert!((pushforward_area(&unit_pitch(), &off, 128).unwrap() - 1.0).abs() < 1e-3);
        assert!(pushforward_area(&identity(), &sq, 1).is_err());
    }

    #[test]
    fn area_matches_polar_rectangle_integral() {
        // [1, 2] × [0, π/2] in polar coordinates has ∫∫ f dr dθ = (π/2)(2² − 1²)/2.
        let m = unit_pitch();
        let n = 256;
        let mut total = 0.0;
        let (dr, dt) = (1.0 / n as f64, (PI / 2.0) / n as f64);
        for i in 0..n {
            let r = 1.0 + (i as f64 + 0.5) * dr;
            for k in 0..n {
                let t = (k as f64 + 0.5) * dt;
                let j = m.jacobian([r * t.cos(), r * t.sin()], 1e-6).unwrap();
                total += (j[0][0] * j[1][1] - j[0][1] * j[1][0]) * r * dr * dt;
            }
        }
        let exact = (PI / 2.0) * 1.5;
        assert!((total - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn brute_force_rasterized_image_area() {
        // Count grid points whose preimage under the spiral lies in the rect.
        let rect = Rect::from_bounds(0.5, 1.5, 0.5, 1.5).unwrap();
        let res = 600;
        let (lo, hi) = (-2.2, 2.2);
        let h = (hi - lo) / res as f64;
        let mut hits = 0usize;
        for i in 0..res {
            for j in 0..res {
                let (x, y) = (lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h);
                let r = x.hypot(y);
                let t = y.atan2(x) - r;
                let (px, py) = (r * t.cos(), r * t.sin());
                if (0.5..=1.5).contains(&px) && (0.5..=1.5).contains(&py) {
                    hits += 1;
                }
            }
        }
        let raster = hits as f64 * h * h;
        let area = pushforward_area(&unit_pitch(), &rect, 128).unwrap();
        assert!((raster - area).abs() < 2e-2, "{raster} vs {area}");
    }

    #[test]
    fn length_examples() {
        let s = Segment::new([0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((pushforward_length(&identity(), &s, 64).unwrap() - 1.0).abs() < 1e-8);
        let rot: PlanarMap = PolarMap::rotation(PI / 3.0, f64::INFINITY).into();
        let t = Segment::new([0.3, -1.0], [2.0, 0.4]).unwrap();
        assert!((pushforward_length(&rot, &t, 64).unwrap() - t.length()).abs() < 1e-8);
        assert!((pushforward_length(&scaling(), &s, 64).unwrap() - 2.0).abs() < 1e-12);
        let v = Segment::new([0.0, 0.0], [0.0, 1.0]).unwrap();
        assert!((pushforward_length(&scaling(), &v, 64).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spiral_length_of_radial_segment() {
        // The image of [1, 2] × {0} is (r cos r, r sin r): length ∫ √(1 + r²).
        let s = Segment::new([1.0, 0.0], [2.0, 0.0]).unwrap();
        let exact = |r: f64| 0.5 * (r * (1.0 + r * r).sqrt() + r.asinh());
        let got = pushforward_length(&unit_pitch(), &s, 128).unwrap();
        assert!((got - (exact(2.0) - exact(1.0))).abs() < 1e-4);
    }

    #[test]
    fn area_converges_at_second_order() {
        let m = unit_pitch();
        let r = Rect::new([1.2, 0.4], [0.6, 0.3], 0.4).unwrap();
        let a: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| pushforward_area(&m, &r, n).unwrap())
            .collect();
        let d1 = (a[0] - a[1]).abs();
        let d2 = (a[1] - a[2]).abs();
        assert!(d1 / d2 >= 3.0, "{a:?}");
    }

    #[test]
    fn invariance_report_examples() {
        let rect = Shape::Rect(Rect::from_bounds(0.5, 1.5, -0.5, 0.5).unwrap());
        let rots = [PI / 7.0, PI / 3.0, 4.0 * PI / 5.0];
        let rep = rotation_invariance_report(&unit_pitch(), &rect, &rots, 128, 5e-3).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.rotations.len(), 4);
        assert_eq!(rep.transform_id, "spiral");

        let any = Shape::Segment(Segment::new([-1.0, 0.5], [2.0, 1.0]).unwrap());
        let rep = rotation_invariance_report(&identity(), &any, &rots, 64, 1e-9).unwrap();
        assert!(rep.pass);

        let s = Shape::Segment(Segment::new([0.0, 0.0], [1.0, 0.0]).unwrap());
        let rep = rotation_invariance_report(&scaling(), &s, &[PI / 2.0], 64, 5e-3).unwrap();
        assert!(!rep.pass);
        assert!((rep.values[0] - 2.0).abs() < 1e-12 && (rep.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invariance_report_preconditions() {
        let through = Shape::Segment(Segment::new([-1.0, 0.0], [1.0, 0.0]).unwrap());
        assert!(rotation_invariance_report(&unit_pitch(), &through, &[0.5], 64, 1e-3).is_err());
        assert!(rotation_invariance_report(&identity(), &through, &[], 64, 1e-3).is_err());
    }

    #[test]
    fn report_json_keys() {
        let s = Shape::Segment(Segment::new([1.0, 0.0], [2.0, 0.0]).unwrap());
        let rep = rotation_invariance_report(&identity(), &s, &[1.0], 8, 1e-9).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        for key in ["shape", "transform-id", "rotations", "values", "rel_spread", "pass"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["shape"]["kind"], "segment");
    }

    #[test]
    fn seeded_rotations_are_reproducible() {
        let a = seeded_rotations(7, 8);
        assert_eq!(a, seeded_rotations(7, 8));
        assert_ne!(a, seeded_rotations(8, 8));
        assert!(a.iter().all(|&x| (0.0..TAU).contains(&x)));
    }
}
