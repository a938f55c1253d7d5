//! Partials, Jacobian quantities and residuals of the isotropy equations
//! for arbitrary polar maps, and the spiral classifier.
//!
//! With `Z = (∂ᵣR, R∂ᵣΘ)` and `W = (∂θR, R∂θΘ)` the three equations read
//! `f = R(∂ᵣR ∂θΘ − ∂θR ∂ᵣΘ)`, `g = |Z|²`, `h = |W|²`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polar_map::{wrap_pi, Partials, PolarMap};
use crate::profile::RadialProfile;
use crate::spiral::Sign;

/// Added to `|mean|` in the radiality metric.
pub const RADIALITY_FLOOR: f64 = 1e-12;
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    Analytic,
    CentralDifference { step: f64 },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Analytic => f.write_str("analytic"),
            Scheme::CentralDifference { step } => write!(f, "central-difference:{step}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// `analytic`, `central-difference` or `central-difference:<step>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "analytic" => Ok(Scheme::Analytic),
            None if s == "central-difference" => Ok(Scheme::CentralDifference { step: DEFAULT_STEP }),
            Some(("central-difference", step)) => {
                let step: f64 = step
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad difference step `{step}`")))?;
                if !(step > 0.0) {
                    return Err(Error::Argument("difference step must be positive".into()));
                }
                Ok(Scheme::CentralDifference { step })
            }
            _ => Err(Error::Argument(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Polar lattice `radii × angles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
}

impl PolarGrid {
    pub fn new(radii: Vec<f64>, angles: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || angles.is_empty() {
            return Err(Error::Argument("grid needs at least one radius and one angle".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
            return Err(Error::Argument(
                "grid radii must be non-negative and strictly increasing".into(),
            ));
        }
        Ok(PolarGrid { radii, angles })
    }

    /// `nr` geometrically spaced radii in `[r_lo, r_hi]` and `ntheta`
    /// uniform angles in `[0, 2π)`.
    pub fn geometric(r_lo: f64, r_hi: f64, nr: usize, ntheta: usize) -> Self {
        let radii = if nr == 1 {
            vec![r_lo]
        } else {
            let ratio = (r_hi / r_lo).powf(1.0 / (nr - 1) as f64);
            (0..nr)
                .map(|i| if i == nr - 1 { r_hi } else { r_lo * ratio.powi(i as i32) })
                .collect()
        };
        PolarGrid {
            radii,
            angles: uniform_angles(ntheta),
        }
    }

    /// 64 × 64 lattice from `0.05·r_max` to `0.95·r_max`.
    pub fn default_for(r_max: f64) -> Self {
        PolarGrid::geometric(0.05 * r_max, 0.95 * r_max, 64, 64)
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

fn check_difference_domain(map: &PolarMap, r: f64, step: f64) -> Result<()> {
    let lo = map.r_min().max(0.0);
    if !(r - step > 0.0 && r - step >= lo && r + step <= map.r_max()) {
        return Err(Error::Argument(format!(
            "central difference at r = {r} with step {step} leaves the map domain [{lo}, {}]",
            map.r_max()
        )));
    }
    Ok(())
}

/// `(∂ᵣR, ∂θR, ∂ᵣΘ, ∂θΘ)` at `(r, θ)`. Differences of Θ are taken modulo 2π.
pub fn partials(map: &PolarMap, r: f64, theta: f64, scheme: Scheme) -> Result<Partials> {
    match scheme {
        Scheme::Analytic => map
            .analytic_partials(r, theta)
            .ok_or_else(|| Error::Capability(format!("map `{}` has no analytic partials", map.label()))),
        Scheme::CentralDifference { step } => {
            check_difference_domain(map, r, step)?;
            let inv = 0.5 / step;
            Ok(Partials {
                radius_dr: (map.radius(r + step, theta) - map.radius(r - step, theta)) * inv,
                radius_dtheta: (map.radius(r, theta + step) - map.radius(r, theta - step)) * inv,
                angle_dr: wrap_pi(map.angle(r + step, theta) - map.angle(r - step, theta)) * inv,
                angle_dtheta: wrap_pi(map.angle(r, theta + step) - map.angle(r, theta - step)) * inv,
            })
        }
    }
}

fn angle_dtheta(map: &PolarMap, r: f64, theta: f64, scheme: Scheme) -> Result<f64> {
    match scheme {
        Scheme::Analytic => partials(map, r, theta, scheme).map(|p| p.angle_dtheta),
        Scheme::CentralDifference { step } => {
            Ok(wrap_pi(map.angle(r, theta + step) - map.angle(r, theta - step)) * 0.5 / step)
        }
    }
}

/// `R(∂ᵣR ∂θΘ − ∂θR ∂ᵣΘ)`, the determinant of the polar-form Jacobian.
pub fn polarform_det(map: &PolarMap, r: f64, theta: f64, scheme: Scheme) -> Result<f64> {
    let p = partials(map, r, theta, scheme)?;
    Ok(map.radius(r, theta) * (p.radius_dr * p.angle_dtheta - p.radius_dtheta * p.angle_dr))
}

/// The pointwise quantities `(f̂, ĝ, ĥ)`.
fn jacobian_quantities(radius: f64, p: &Partials) -> [f64; 3] {
    let f = radius * (p.radius_dr * p.angle_dtheta - p.radius_dtheta * p.angle_dr);
    let g = p.radius_dr * p.radius_dr + (radius * p.angle_dr).powi(2);
    let h = p.radius_dtheta * p.radius_dtheta + (radius * p.angle_dtheta).powi(2);
    [f, g, h]
}

fn evaluate(map: &PolarMap, r: f64, theta: f64, scheme: Scheme) -> Result<(f64, Partials)> {
    let p = partials(map, r, theta, scheme)?;
    let radius = map.radius(r, theta);
    if !p.is_finite() {
        return Err(Error::NonFiniteAtRadius {
            quantity: "partials",
            r,
        });
    }
    if !radius.is_finite() {
        return Err(Error::NonFiniteAtRadius { quantity: "R", r });
    }
    Ok((radius, p))
}

fn profile_at(profile: &RadialProfile, r: f64) -> Result<[f64; 3]> {
    let vals = [profile.f(r), profile.g(r), profile.h(r)];
    for (q, v) in ["f", "g", "h"].iter().zip(vals) {
        if !v.is_finite() {
            return Err(Error::NonFiniteAtRadius { quantity: q, r });
        }
    }
    Ok(vals)
}

/// Max-abs and RMS of a residual over a grid, with the location of the max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub max: f64,
    pub rms: f64,
    pub argmax: [f64; 2],
}

#[derive(Debug, Default)]
struct Accumulator {
    max: f64,
    sum_sq: f64,
    count: usize,
    argmax: [f64; 2],
}

impl Accumulator {
    fn push(&mut self, value: f64, r: f64, theta: f64) {
        let a = value.abs();
        if self.count == 0 || a > self.max {
            self.max = a;
            self.argmax = [r, theta];
        }
        self.sum_sq += value * value;
        self.count += 1;
    }

    fn finish(self) -> ResidualSummary {
        ResidualSummary {
            max: self.max,
            rms: if self.count == 0 {
                0.0
            } else {
                (self.sum_sq / self.count as f64).sqrt()
            },
            argmax: self.argmax,
        }
    }
}

/// Residuals of the three equations linking a map to a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FghResiduals {
    /// f − R∂ᵣR∂θΘ + R∂θR∂ᵣΘ
    pub scalar_product: ResidualSummary,
    /// g − (∂ᵣR)² − (R∂ᵣΘ)²
    pub norm_partial_r: ResidualSummary,
    /// h − (∂θR)² − (R∂θΘ)²
    pub norm_partial_theta: ResidualSummary,
}

impl FghResiduals {
    pub fn max(&self) -> f64 {
        self.scalar_product
            .max
            .max(self.norm_partial_r.max)
            .max(self.norm_partial_theta.max)
    }
}

pub fn fgh_residuals(
    map: &PolarMap,
    profile: &RadialProfile,
    grid: &PolarGrid,
    scheme: Scheme,
) -> Result<FghResiduals> {
    let mut acc: [Accumulator; 3] = Default::default();
    for &r in &grid.radii {
        let target = profile_at(profile, r)?;
        for &theta in &grid.angles {
            let (radius, p) = evaluate(map, r, theta, scheme)?;
            let got = jacobian_quantities(radius, &p);
            for k in 0..3 {
                acc[k].push(target[k] - got[k], r, theta);
            }
        }
    }
    let [a, b, c] = acc;
    Ok(FghResiduals {
        scalar_product: a.finish(),
        norm_partial_r: b.finish(),
        norm_partial_theta: c.finish(),
    })
}

/// `(max − min) / (|mean| + 1e-12)` of a quantity over one circle.
pub fn radiality_metric(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / (mean.abs() + RADIALITY_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radiality {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

/// Pointwise `(f̂, ĝ, ĥ)` on a grid (row-major, radius outer) and the worst
/// radiality metric of each over the grid radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FghField {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub radiality: Radiality,
}

pub fn extract_fgh(map: &PolarMap, grid: &PolarGrid, scheme: Scheme) -> Result<FghField> {
    let n = grid.len();
    let (mut f, mut g, mut h) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &r in &grid.radii {
        for &theta in &grid.angles {
            let (radius, p) = evaluate(map, r, theta, scheme)?;
            let [a, b, c] = jacobian_quantities(radius, &p);
            f.push(a);
            g.push(b);
            h.push(c);
        }
    }
    let nt = grid.angles.len();
    let worst = |v: &[f64]| v.chunks(nt).map(radiality_metric).fold(0.0, f64::max);
    let radiality = Radiality {
        f: worst(&f),
        g: worst(&g),
        h: worst(&h),
    };
    Ok(FghField {
        radii: grid.radii.clone(),
        angles: grid.angles.clone(),
        f,
        g,
        h,
        radiality,
    })
}

/// Angle field Φ with `Z = √g (cos Φ, sin Φ)`, the parity `p` selecting the
/// branch `W = (−1)ᵖ√((gh − f²)/g) (cos Φ, sin Φ) + f/√g (−sin Φ, cos Φ)`,
/// and the defects of the four component equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiDecomposition {
    pub phi: f64,
    pub parity: u8,
    pub residuals: f64,
    pub defects: [f64; 4],
}

pub fn phi_decomposition(
    map: &PolarMap,
    profile: &RadialProfile,
    r: f64,
    theta: f64,
    scheme: Scheme,
) -> Result<PhiDecomposition> {
    let [f, g, h] = profile_at(profile, r)?;
    if !(g > 0.0) {
        return Err(Error::Degenerate(format!("√g = 0 at r = {r}")));
    }
    let disc = g * h - f * f;
    if disc < -profile.tolerance() * (f * f).max(1.0) {
        return Err(Error::Domain { r, value: disc });
    }
    let (radius, p) = evaluate(map, r, theta, scheme)?;
    let sg = g.sqrt();
    let normal = (disc.max(0.0) / g).sqrt();
    let tangent = f / sg;
    let phi = (radius * p.angle_dr).atan2(p.radius_dr);
    let (sn, cs) = phi.sin_cos();
    let d1 = p.radius_dr - sg * cs;
    let d2 = radius * p.angle_dr - sg * sn;
    let branch = |sigma: f64| {
        [
            p.radius_dtheta - (sigma * normal * cs - tangent * sn),
            radius * p.angle_dtheta - (sigma * normal * sn + tangent * cs),
        ]
    };
    let even = branch(1.0);
    let odd = branch(-1.0);
    let worst = |d: [f64; 2]| d[0].abs().max(d[1].abs());
    let (parity, [d3, d4]) = if worst(odd) < worst(even) { (1, odd) } else { (0, even) };
    let defects = [d1, d2, d3, d4];
    Ok(PhiDecomposition {
        phi,
        parity,
        residuals: defects.iter().fold(0.0, |m, d| m.max(d.abs())),
        defects,
    })
}

/// Residuals of `∂θR = α∂ᵣR − βR∂ᵣΘ` and `R∂θΘ = αR∂ᵣΘ + β∂ᵣR` with
/// `α = (−1)ᵖ√(gh − f²)/g`, `β = f/g`. `orientation` records the sign of β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicResiduals {
    pub parity: u8,
    pub orientation: i8,
    pub angular_radius: ResidualSummary,
    pub angular_angle: ResidualSummary,
}

impl HyperbolicResiduals {
    pub fn max(&self) -> f64 {
        self.angular_radius.max.max(self.angular_angle.max)
    }
}

pub fn hyperbolic_residuals(
    map: &PolarMap,
    profile: &RadialProfile,
    parity: u8,
    grid: &PolarGrid,
    scheme: Scheme,
) -> Result<HyperbolicResiduals> {
    let sigma = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut orientation: Option<f64> = None;
    let mut first = Accumulator::default();
    let mut second = Accumulator::default();
    for &r in &grid.radii {
        let [f, g, h] = profile_at(profile, r)?;
        if !(g > 0.0) {
            return Err(Error::Degenerate(format!("g = {g} ≤ 0 at r = {r}")));
        }
        let beta = f / g;
        if beta == 0.0 {
            return Err(Error::Argument(format!("β = f/g vanishes at r = {r}")));
        }
        match orientation {
            None => orientation = Some(beta.signum()),
            Some(s) if s != beta.signum() => return Err(Error::Argument(format!("β = f/g changes sign at r = {r}"))),
            _ => {}
        }
        let alpha = sigma * (g * h - f * f).max(0.0).sqrt() / g;
        for &theta in &grid.angles {
            let (radius, p) = evaluate(map, r, theta, scheme)?;
            if radius == 0.0 {
                return Err(Error::Degenerate(format!(
                    "R = 0 at r = {r}; grid must exclude the origin"
                )));
            }
            let rt = radius * p.angle_dr;
            first.push(p.radius_dtheta - alpha * p.radius_dr + beta * rt, r, theta);
            second.push(radius * p.angle_dtheta - alpha * rt - beta * p.radius_dr, r, theta);
        }
    }
    Ok(HyperbolicResiduals {
        parity: parity % 2,
        orientation: orientation.unwrap_or(1.0) as i8,
        angular_radius: first.finish(),
        angular_angle: second.finish(),
    })
}

/// Per-radius measurements made by [`classify_spiral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialRow {
    pub r: f64,
    pub radius_mean: f64,
    pub radius_spread: f64,
    /// Mean of `Θ − ε₁θ` over the circle, unwrapped along r.
    pub theta_bar: f64,
    pub theta_bar_spread: f64,
    pub winding: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralDiagnostics {
    /// `max_r (max_θ R − min_θ R) / (|mean_θ R| + 1e-12)`.
    pub radius_radiality: f64,
    /// `max_r spread_θ(Θ − ε₁θ) / (1 + |mean|)`.
    pub angle_radiality: f64,
    pub max_radius_spread: f64,
    pub max_angle_spread: f64,
    pub winding: i64,
    /// Linear extrapolation of Θ̄ from the two smallest grid radii.
    pub theta0_extrapolated: f64,
    /// Whether Θ₀ was read off the map at r = 0 rather than extrapolated.
    pub theta0_from_origin: bool,
    pub rows: Vec<RadialRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralVerdict {
    pub is_spiral: bool,
    pub eps1: Option<Sign>,
    pub theta0: Option<f64>,
    /// `(r, 𝓡(r))`
    pub r_profile: Vec<[f64; 2]>,
    /// `(r, Θ̄(r))`
    pub theta_bar_profile: Vec<[f64; 2]>,
    pub diagnostics: SpiralDiagnostics,
}

/// Circular mean of angles given as offsets from the first one.
fn angular_mean_spread(values: &[f64]) -> (f64, f64) {
    let base = values[0];
    let dev: Vec<f64> = values.iter().map(|v| wrap_pi(v - base)).collect();
    let (lo, hi) = dev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    (base + dev.iter().sum::<f64>() / dev.len() as f64, hi - lo)
}

/// Decides whether a map has the spiral form `R = 𝓡(r)`, `Θ = ε₁θ + Θ̄(r)`.
///
/// ε₁ is the sign of ∂θΘ over the grid (an error if it changes). A radius
/// passes when both `R` and `Θ − ε₁θ` vary over the circle by at most
/// `tol·(1 + |mean|)`. Θ₀ is read off at r = 0 when the map is defined
/// there, otherwise extrapolated linearly from the two smallest radii.
pub fn classify_spiral(map: &PolarMap, grid: &PolarGrid, scheme: Scheme, tol: f64) -> Result<SpiralVerdict> {
    if grid.angles.len() < 3 {
        return Err(Error::Argument(
            "classification needs at least three angles per circle".into(),
        ));
    }
    let (mut positive, mut negative) = (0usize, 0usize);
    for &r in &grid.radii {
        for &theta in &grid.angles {
            let d = angle_dtheta(map, r, theta, scheme)?;
            if !d.is_finite() {
                return Err(Error::NonFiniteAtRadius { quantity: "∂θΘ", r });
            }
            if d > 0.0 {
                positive += 1;
            } else if d < 0.0 {
                negative += 1;
            }
        }
    }
    if positive > 0 && negative > 0 {
        return Err(Error::Classification(format!(
            "∂θΘ changes sign across the grid ({positive} positive, {negative} negative)"
        )));
    }
    if positive == 0 && negative == 0 {
        return Err(Error::Classification("∂θΘ vanishes on the whole grid".into()));
    }
    let eps1 = if positive >= negative { Sign::Plus } else { Sign::Minus };
    let e1 = eps1.value();

    let mut rows = Vec::with_capacity(grid.radii.len());
    let mut prev_bar: Option<f64> = None;
    let mut winding: Option<i64> = None;
    for &r in &grid.radii {
        let radii: Vec<f64> = grid.angles.iter().map(|&t| map.radius(r, t)).collect();
        let angles: Vec<f64> = grid.angles.iter().map(|&t| map.angle(r, t)).collect();
        if radii.iter().chain(&angles).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteAtRadius {
                quantity: "map value",
                r,
            });
        }
        let mut turn: f64 = angles.windows(2).map(|w| wrap_pi(w[1] - w[0])).sum();
        turn += wrap_pi(angles[0] - angles[angles.len() - 1]);
        let k = (turn / TAU).round() as i64;
        match winding {
            None => winding = Some(k),
            Some(w) if w != k => {
                return Err(Error::Classification(format!(
                    "winding number changes from {w} to {k} at r = {r}"
                )))
            }
            _ => {}
        }
        let radius_mean = radii.iter().sum::<f64>() / radii.len() as f64;
        let radius_spread = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let offsets: Vec<f64> = angles.iter().zip(&grid.angles).map(|(a, t)| a - e1 * t).collect();
        let (mean, spread) = angular_mean_spread(&offsets);
        let theta_bar = match prev_bar {
            None => mean,
            Some(p) => p + wrap_pi(mean - p),
        };
        prev_bar = Some(theta_bar);
        rows.push(RadialRow {
            r,
            radius_mean,
            radius_spread,
            theta_bar,
            theta_bar_spread: spread,
            winding: k,
        });
    }
    let winding = winding.unwrap_or(0);

    let radial = rows.iter().all(|row| {
        row.radius_spread <= tol * (1.0 + row.radius_mean.abs())
            && row.theta_bar_spread <= tol * (1.0 + row.theta_bar.abs())
    });
    let is_spiral = radial && winding == e1 as i64;

    let theta0_extrapolated = match rows.as_slice() {
        [a, b, ..] => a.theta_bar - a.r * (b.theta_bar - a.theta_bar) / (b.r - a.r),
        [a] => a.theta_bar,
        [] => 0.0,
    };
    let origin = if map.origin_defined() && grid.radii[0] > 0.0 {
        let offsets: Vec<f64> = grid.angles.iter().map(|&t| map.angle(0.0, t) - e1 * t).collect();
        if offsets.iter().all(|v| v.is_finite()) {
            let (mean, _) = angular_mean_spread(&offsets);
            Some(rows[0].theta_bar + wrap_pi(mean - rows[0].theta_bar))
        } else {
            None
        }
    } else {
        None
    };
    let theta0_from_origin = origin.is_some();
    let theta0 = origin.unwrap_or(theta0_extrapolated);

    let diagnostics = SpiralDiagnostics {
        radius_radiality: rows
            .iter()
            .map(|row| row.radius_spread / (row.radius_mean.abs() + RADIALITY_FLOOR))
            .fold(0.0, f64::max),
        angle_radiality: rows
            .iter()
            .map(|row| row.theta_bar_spread / (1.0 + row.theta_bar.abs()))
            .fold(0.0, f64::max),
        max_radius_spread: rows.iter().map(|row| row.radius_spread).fold(0.0, f64::max),
        max_angle_spread: rows.iter().map(|row| row.theta_bar_spread).fold(0.0, f64::max),
        winding,
        theta0_extrapolated: theta0_extrapolated.rem_euclid(TAU),
        theta0_from_origin,
        rows: rows.clone(),
    };
    Ok(SpiralVerdict {
        is_spiral,
        eps1: is_spiral.then_some(eps1),
        theta0: is_spiral.then_some(theta0.rem_euclid(TAU)),
        r_profile: rows.iter().map(|row| [row.r, row.radius_mean]).collect(),
        theta_bar_profile: rows.iter().map(|row| [row.r, row.theta_bar]).collect(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spiral::{build_spiral, SpiralSpec};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn unit_pitch_map() -> PolarMap {
        let spec = SpiralSpec::new(
            Sign::Plus,
            Sign::Plus,
            0.0,
            RadialProfile::unit_pitch_spiral(1.0, 1.0, 2.5),
        );
        build_spiral(&spec).unwrap()
    }

    fn unit_pitch_profile() -> RadialProfile {
        RadialProfile::new(|r| r, |r| 1.0 + r * r, |r| r * r, 2.5)
    }

    fn identity_profile() -> RadialProfile {
        RadialProfile::identity(1.0, 2.5)
    }

    fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("analytic".parse::<Scheme>().unwrap(), Scheme::Analytic);
        assert_eq!(
            "central-difference:1e-4".parse::<Scheme>().unwrap(),
            Scheme::CentralDifference { step: 1e-4 }
        );
        assert!("central-difference:-1".parse::<Scheme>().is_err());
        assert!("spline".parse::<Scheme>().is_err());
        let s = Scheme::CentralDifference { step: 0.5 };
        assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
    }

    #[test]
    fn partials_examples() {
        let id = PolarMap::identity(2.0);
        let p = partials(&id, 1.0, 0.0, Scheme::Analytic).unwrap();
        assert!(close(p.as_array(), [1.0, 0.0, 0.0, 1.0], 1e-15));
        let p = partials(&unit_pitch_map(), 2.0, 1.0, Scheme::Analytic).unwrap();
        assert!(close(p.as_array(), [1.0, 0.0, 1.0, 1.0], 1e-12));
        let p = partials(&id, 1.0, 0.0, Scheme::CentralDifference { step: 1e-5 }).unwrap();
        assert!(close(p.as_array(), [1.0, 0.0, 0.0, 1.0], 1e-9));
    }

    #[test]
    fn difference_across_branch_cut_uses_wrapped_angle() {
        let id = PolarMap::identity(2.0);
        let p = partials(&id, 1.0, PI, Scheme::CentralDifference { step: 1e-5 }).unwrap();
        assert!((p.angle_dtheta - 1.0).abs() < 1e-9);
    }

    #[test]
    fn partials_errors() {
        let bare = PolarMap::new("bare", |r, _| r, |_, t| t, 2.0);
        assert!(matches!(
            partials(&bare, 1.0, 0.0, Scheme::Analytic),
            Err(Error::Capability(_))
        ));
        let step = Scheme::CentralDifference { step: 1e-3 };
        assert!(matches!(partials(&bare, 1e-4, 0.0, step), Err(Error::Argument(_))));
        assert!(matches!(partials(&bare, 2.0, 0.0, step), Err(Error::Argument(_))));
    }

    #[test]
    fn determinant_examples() {
        let id = PolarMap::identity(2.0);
        assert!((polarform_det(&id, 1.5, 0.3, Scheme::Analytic).unwrap() - 1.5).abs() < 1e-14);
        assert!((polarform_det(&unit_pitch_map(), 2.0, 1.0, Scheme::Analytic).unwrap() - 2.0).abs() < 1e-12);
        let scale = PolarMap::anisotropic_scaling(3.0);
        for &t in &[0.0, FRAC_PI_2, 1.0] {
            // Cartesian determinant 2 times r.
            assert!((polarform_det(&scale, 1.0, t, Scheme::Analytic).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fgh_residual_examples() {
        let grid = PolarGrid::geometric(0.05, 2.0, 16, 16);
        let spiral = fgh_residuals(&unit_pitch_map(), &unit_pitch_profile(), &grid, Scheme::Analytic).unwrap();
        assert!(spiral.max() <= 1e-12, "{spiral:?}");
        let id = fgh_residuals(&PolarMap::identity(2.5), &identity_profile(), &grid, Scheme::Analytic).unwrap();
        assert!(id.max() <= 1e-12);

        let ring = PolarGrid::new(vec![1.0], uniform_angles(16)).unwrap();
        let scale = PolarMap::anisotropic_scaling(3.0);
        let res = fgh_residuals(&scale, &identity_profile(), &ring, Scheme::Analytic).unwrap();
        assert!(res.norm_partial_r.max >= 0.5);
        assert!(res.norm_partial_r.rms > 0.0 && res.norm_partial_r.rms <= res.norm_partial_r.max);
    }

    #[test]
    fn residual_summary_locates_the_maximum() {
        let ring = PolarGrid::new(vec![1.0], vec![0.0, FRAC_PI_2]).unwrap();
        let scale = PolarMap::anisotropic_scaling(3.0);
        let res = fgh_residuals(&scale, &identity_profile(), &ring, Scheme::Analytic).unwrap();
        // ĝ = 4 at θ = 0 and 1 at θ = π/2.
        assert!((res.norm_partial_r.max - 3.0).abs() < 1e-12);
        assert_eq!(res.norm_partial_r.argmax, [1.0, 0.0]);
    }

    #[test]
    fn non_finite_profile_is_reported() {
        let grid = PolarGrid::geometric(0.5, 1.5, 3, 4);
        let bad = RadialProfile::new(|r| r, |r| if r > 1.0 { f64::NAN } else { 1.0 }, |r| r * r, 2.0);
        let err = fgh_residuals(&PolarMap::identity(2.0), &bad, &grid, Scheme::Analytic).unwrap_err();
        assert!(matches!(err, Error::NonFiniteAtRadius { quantity: "g", .. }));
    }

    #[test]
    fn extracted_quantities_and_radiality() {
        let grid = PolarGrid::geometric(0.1, 2.0, 8, 32);
        let id = extract_fgh(&PolarMap::identity(2.5), &grid, Scheme::Analytic).unwrap();
        assert!(id.radiality.f <= 1e-9 && id.radiality.g <= 1e-9 && id.radiality.h <= 1e-9);
        assert!((id.f[0] - 0.1).abs() < 1e-15 && (id.h[0] - 0.01).abs() < 1e-15);

        let sp = extract_fgh(&unit_pitch_map(), &grid, Scheme::Analytic).unwrap();
        assert!(sp.radiality.f <= 1e-8 && sp.radiality.g <= 1e-8 && sp.radiality.h <= 1e-8);

        let ring = PolarGrid::new(vec![1.0], uniform_angles(32)).unwrap();
        let sc = extract_fgh(&PolarMap::anisotropic_scaling(3.0), &ring, Scheme::Analytic).unwrap();
        assert!(sc.radiality.g >= 1.0, "{:?}", sc.radiality);
    }

    #[test]
    fn radiality_metric_values() {
        assert_eq!(radiality_metric(&[2.0, 2.0, 2.0]), 0.0);
        assert!((radiality_metric(&[1.0, 3.0]) - 1.0).abs() < 1e-12);
        assert!(radiality_metric(&[0.0, 0.0]) == 0.0);
    }

    #[test]
    fn phi_examples() {
        let id = phi_decomposition(
            &PolarMap::identity(2.0),
            &identity_profile(),
            1.0,
            0.0,
            Scheme::Analytic,
        )
        .unwrap();
        assert!(id.phi.abs() < 1e-15 && id.residuals <= 1e-12 && id.parity == 0);

        let sp = phi_decomposition(&unit_pitch_map(), &unit_pitch_profile(), 1.0, 0.0, Scheme::Analytic).unwrap();
        assert!((sp.phi - FRAC_PI_4).abs() < 1e-12);
        assert!(sp.residuals <= 1e-12, "{sp:?}");

        let profile = RadialProfile::unit_pitch_spiral(1.0, -1.0, 2.5);
        let spec = SpiralSpec::new(Sign::Minus, Sign::Plus, 0.0, profile.clone());
        let m = build_spiral(&spec).unwrap();
        let rf = phi_decomposition(&m, &profile, 1.0, 0.0, Scheme::Analytic).unwrap();
        assert!(rf.residuals <= 1e-12 && rf.parity == 1, "{rf:?}");
    }

    #[test]
    fn phi_rejects_degenerate_g() {
        let p = RadialProfile::new(|r| r, |_| 0.0, |r| r * r, 2.0);
        let err = phi_decomposition(&PolarMap::identity(2.0), &p, 1.0, 0.0, Scheme::Analytic).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn hyperbolic_examples() {
        let grid = PolarGrid::geometric(0.05, 2.0, 16, 16);
        let id = hyperbolic_residuals(
            &PolarMap::identity(2.5),
            &identity_profile(),
            0,
            &grid,
            Scheme::Analytic,
        )
        .unwrap();
        assert!(id.max() <= 1e-12 && id.orientation == 1);
        let sp = hyperbolic_residuals(&unit_pitch_map(), &unit_pitch_profile(), 0, &grid, Scheme::Analytic).unwrap();
        assert!(sp.max() <= 1e-10, "{sp:?}");
        let wrong = hyperbolic_residuals(&unit_pitch_map(), &unit_pitch_profile(), 1, &grid, Scheme::Analytic).unwrap();
        assert!(wrong.max() > 0.1);

        let wide = PolarGrid::geometric(0.5, 2.0, 8, 32);
        let sc = PolarMap::anisotropic_scaling(3.0);
        let res = hyperbolic_residuals(&sc, &identity_profile(), 0, &wide, Scheme::Analytic).unwrap();
        assert!(res.max() >= 0.1);
    }

    #[test]
    fn hyperbolic_rejects_origin() {
        let grid = PolarGrid::new(vec![0.0, 1.0], uniform_angles(4)).unwrap();
        let p = RadialProfile::new(|_| 1.0, |_| 1.0, |r| 1.0 + r * r, 2.0);
        let err = hyperbolic_residuals(&PolarMap::identity(2.0), &p, 0, &grid, Scheme::Analytic).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn classify_identity_and_rotation() {
        let grid = PolarGrid::geometric(0.05, 2.0, 64, 64);
        let v = classify_spiral(&PolarMap::identity(2.5), &grid, Scheme::Analytic, 1e-6).unwrap();
        assert!(v.is_spiral);
        assert_eq!(v.eps1, Some(Sign::Plus));
        let t0 = v.theta0.unwrap();
        assert!(t0.min(TAU - t0) < 1e-12);
        assert!(v.theta_bar_profile.iter().all(|p| p[1].abs() < 1e-12));

        let rot = classify_spiral(&PolarMap::rotation(0.7, 2.5), &grid, Scheme::Analytic, 1e-6).unwrap();
        assert!((rot.theta0.unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn classify_scaling_is_not_spiral() {
        let grid = PolarGrid::geometric(0.05, 2.0, 64, 64);
        let sc = PolarMap::anisotropic_scaling(2.5);
        let v = classify_spiral(&sc, &grid, Scheme::Analytic, 1e-6).unwrap();
        assert!(!v.is_spiral && v.eps1.is_none() && v.theta0.is_none());
        let ring = PolarGrid::new(vec![1.0], uniform_angles(64)).unwrap();
        let v = classify_spiral(&sc, &ring, Scheme::Analytic, 1e-6).unwrap();
        assert!((v.diagnostics.max_radius_spread - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_recovers_reflected_spiral() {
        let profile = RadialProfile::unit_pitch_spiral(0.8, -1.0, 2.5);
        let spec = SpiralSpec::new(Sign::Minus, Sign::Minus, 5.5, profile);
        let m = build_spiral(&spec).unwrap();
        let grid = PolarGrid::geometric(0.05, 2.0, 64, 64);
        let v = classify_spiral(&m, &grid, Scheme::Analytic, 1e-6).unwrap();
        assert!(v.is_spiral);
        assert_eq!(v.eps1, Some(Sign::Minus));
        assert!((v.theta0.unwrap() - 5.5).abs() < 1e-9);
        assert_eq!(v.diagnostics.winding, -1);
        assert!(v.diagnostics.theta0_from_origin);
        // Θ̄(2) = −0.8·2 relative to Θ₀.
        let last = v.theta_bar_profile.last().unwrap();
        assert!((last[1] - v.theta_bar_profile[0][1] - (-0.8 * (2.0 - 0.05))).abs() < 1e-9);
    }

    #[test]
    fn classify_without_origin_extrapolates() {
        let m = PolarMap::new("twist", |r, _| r, |r, t| t + 0.3 * r + 1.0, 2.5).with_origin(false);
        let grid = PolarGrid::geometric(0.05, 2.0, 64, 64);
        let v = classify_spiral(&m, &grid, Scheme::CentralDifference { step: 1e-5 }, 1e-6).unwrap();
        assert!(v.is_spiral && !v.diagnostics.theta0_from_origin);
        assert!((v.theta0.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_rejects_orientation_change() {
        let m = PolarMap::new("fold", |r, _| r, |_, t| t + 2.0 * t.sin(), 2.5);
        let grid = PolarGrid::geometric(0.1, 2.0, 4, 32);
        let err = classify_spiral(&m, &grid, Scheme::CentralDifference { step: 1e-5 }, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Classification(_)));
    }

    #[test]
    fn classify_rejects_varying_winding() {
        let m = PolarMap::new("wind", |r, _| r, |r, t| if r < 1.0 { t } else { 2.0 * t }, 2.5);
        let grid = PolarGrid::geometric(0.5, 2.0, 4, 32);
        let err = classify_spiral(&m, &grid, Scheme::CentralDifference { step: 1e-5 }, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Classification(_)));
    }
}
