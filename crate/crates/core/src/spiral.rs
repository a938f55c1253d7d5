//! The explicit spiral solution: `R = √h(r)`,
//! `Θ = ε₁θ + Θ₀ + ε₂ ∫₀ʳ √(gh − f²)/h`.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::hermite;
use crate::polar_map::{Partials, PolarMap};
use crate::profile::{check_orientation, uniform_grid, validate_profile, ProfileSource, RadialProfile};
use crate::quadrature::{self, integrate, integrate_sqrt_substituted};

/// Radii checked before a spiral is built.
pub const VALIDATION_POINTS: usize = 256;
/// Panels of the cumulative twist table used by built maps.
const TABLE_PANELS: usize = 2048;
/// Absolute quadrature tolerance for the twist table.
const TABLE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Parameters `(ε₁, ε₂, Θ₀, (f, g, h))` of a spiral deformation.
#[derive(Debug, Clone)]
pub struct SpiralSpec {
    pub eps1: Sign,
    pub eps2: Sign,
    /// Reduced to `[0, 2π)`.
    pub theta0: f64,
    pub profile: RadialProfile,
}

/// JSON form of a [`SpiralSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralSpecFile {
    pub eps1: Sign,
    pub eps2: Sign,
    pub theta0: f64,
    pub profile: ProfileSource,
}

impl SpiralSpec {
    pub fn new(eps1: Sign, eps2: Sign, theta0: f64, profile: RadialProfile) -> Self {
        SpiralSpec {
            eps1,
            eps2,
            theta0: theta0.rem_euclid(TAU),
            profile,
        }
    }

    pub fn from_file(file: &SpiralSpecFile) -> Result<Self> {
        Ok(SpiralSpec::new(
            file.eps1,
            file.eps2,
            file.theta0,
            RadialProfile::from_source(&file.profile)?,
        ))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        SpiralSpec::from_file(&serde_json::from_str(text)?)
    }

    pub fn to_file(&self) -> Result<SpiralSpecFile> {
        let profile = self
            .profile
            .source()
            .cloned()
            .ok_or_else(|| Error::Capability("profile built from callables cannot be serialized".into()))?;
        Ok(SpiralSpecFile {
            eps1: self.eps1,
            eps2: self.eps2,
            theta0: self.theta0,
            profile,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file()?)?)
    }
}

/// Upper end of the region `[0, a]` integrated after the substitution `r = s²`.
pub fn near_origin_radius(r_max: f64) -> f64 {
    r_max.min(1.0) / 4.0
}

fn twist_or_nan(profile: &RadialProfile) -> impl Fn(f64) -> f64 + '_ {
    move |x| profile.twist_rate(x).unwrap_or(f64::NAN)
}

fn quad_failure(profile: &RadialProfile, err: quadrature::QuadError) -> Error {
    let at = err.location();
    match profile.twist_rate(at) {
        Err(domain) => domain,
        Ok(_) => quadrature::divergence(err),
    }
}

/// Unsigned twist integral `∫₀ʳ √(gh − f²)/h` with absolute tolerance `tol`.
fn twist_integral(profile: &RadialProfile, r: f64, tol: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let a = near_origin_radius(profile.r_max());
    let k = twist_or_nan(profile);
    let near = integrate_sqrt_substituted(&k, r.min(a), 0.5 * tol).map_err(|e| quad_failure(profile, e))?;
    let far = if r > a {
        integrate(&k, a, r, 0.5 * tol)
            .map_err(|e| quad_failure(profile, e))?
            .value
    } else {
        0.0
    };
    Ok(near.value + far)
}

/// `Θ̄(r) = ε₂ ∫₀ʳ √(g h − f²)/h dr*`, integrated adaptively with the
/// substitution `r = s²` near the origin.
pub fn theta_bar(spec: &SpiralSpec, r: f64, quad_tol: f64) -> Result<f64> {
    let r_max = spec.profile.r_max();
    if !(0.0..=r_max).contains(&r) {
        return Err(Error::Argument(format!("radius {r} outside [0, {r_max}]")));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::Argument("quadrature tolerance must be positive".into()));
    }
    Ok(spec.eps2.value() * twist_integral(&spec.profile, r, quad_tol)?)
}

/// Cumulative twist integral tabulated on uniform panels past the
/// near-origin region, evaluated by cubic Hermite interpolation using the
/// exact integrand as node slopes.
struct TwistTable {
    profile: RadialProfile,
    start: f64,
    step: f64,
    values: Vec<f64>,
    rates: Vec<f64>,
}

impl TwistTable {
    fn new(profile: RadialProfile) -> Result<Self> {
        let start = near_origin_radius(profile.r_max());
        let end = profile.r_max();
        let step = (end - start) / TABLE_PANELS as f64;
        let mut values = Vec::with_capacity(TABLE_PANELS + 1);
        let mut rates = Vec::with_capacity(TABLE_PANELS + 1);
        {
            let k = twist_or_nan(&profile);
            let mut acc = twist_integral(&profile, start, TABLE_TOL)?;
            values.push(acc);
            rates.push(profile.twist_rate(start)?);
            for i in 0..TABLE_PANELS {
                let a = start + i as f64 * step;
                let b = start + (i + 1) as f64 * step;
                acc += integrate(&k, a, b, TABLE_TOL)
                    .map_err(|e| quad_failure(&profile, e))?
                    .value;
                values.push(acc);
                rates.push(profile.twist_rate(b)?);
            }
        }
        Ok(TwistTable {
            profile,
            start,
            step,
            values,
            rates,
        })
    }

    fn eval(&self, r: f64) -> f64 {
        let end = self.start + self.step * TABLE_PANELS as f64;
        if r <= self.start {
            return twist_integral(&self.profile, r.max(0.0), TABLE_TOL).unwrap_or(f64::NAN);
        }
        if r > end {
            let k = twist_or_nan(&self.profile);
            return integrate(&k, end, r, TABLE_TOL)
                .map(|e| self.values[TABLE_PANELS] + e.value)
                .unwrap_or(f64::NAN);
        }
        let i = (((r - self.start) / self.step) as usize).min(TABLE_PANELS - 1);
        let x0 = self.start + i as f64 * self.step;
        hermite(
            x0,
            x0 + self.step,
            self.values[i],
            self.values[i + 1],
            self.rates[i],
            self.rates[i + 1],
            r,
        )
    }
}

/// Builds the polar map of the spiral described by `spec`, with analytic
/// partials `∂ᵣR = h′/(2√h)`, `∂θR = 0`, `∂ᵣΘ = ε₂√(gh − f²)/h`, `∂θΘ = ε₁`.
pub fn build_spiral(spec: &SpiralSpec) -> Result<PolarMap> {
    let profile = spec.profile.clone();
    let grid = uniform_grid(profile.r_max(), VALIDATION_POINTS);
    let report = validate_profile(&profile, &grid, profile.tolerance())?;
    if !report.passed {
        return Err(Error::Validation(report));
    }
    let oriented = check_orientation(&profile, spec.eps1.value(), &grid, profile.tolerance())?;
    if !oriented.passed {
        return Err(Error::Validation(oriented));
    }
    let table = Arc::new(TwistTable::new(profile.clone())?);
    let (e1, e2, theta0) = (spec.eps1.value(), spec.eps2.value(), spec.theta0);

    let radius_profile = profile.clone();
    let radius = move |r: f64, _theta: f64| radius_profile.h(r).max(0.0).sqrt();
    let angle = move |r: f64, theta: f64| e1 * theta + theta0 + e2 * table.eval(r);
    let partials = move |r: f64, _theta: f64| Partials {
        radius_dr: profile.h_prime(r) / (2.0 * profile.h(r).sqrt()),
        radius_dtheta: 0.0,
        angle_dr: e2 * profile.twist_rate(r).unwrap_or(f64::NAN),
        angle_dtheta: e1,
    };
    let r_max = spec.profile.r_max();
    Ok(PolarMap::new("spiral", radius, angle, r_max).with_partials(partials))
}
