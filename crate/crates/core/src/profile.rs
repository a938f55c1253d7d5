//! Radial profiles `(f, g, h)`: the polar-form Jacobian determinant and the
//! squared column norms a deformation must exhibit at every radius.
//!
//! Profiles come either from a registry of closed forms or from a table of
//! samples interpolated with a shape-preserving cubic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Condition-check tolerance for closed-form profiles.
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;
/// Condition-check tolerance for tabulated profiles.
pub const SAMPLED_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_R_MAX: f64 = 2.0;
pub const BUILTIN_NAMES: [&str; 4] = ["identity", "unit-pitch-spiral", "power-law", "polynomial"];

/// Serializable description of where a profile comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileSource {
    ClosedForm {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h0: Option<f64>,
    },
    /// Rows are `[r, f, g, h]` with strictly increasing `r`.
    Table {
        rows: Vec<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h0: Option<f64>,
    },
}

impl ProfileSource {
    pub fn closed_form(name: &str, params: &[(&str, f64)]) -> Self {
        ProfileSource::ClosedForm {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            r_max: None,
            h0: None,
        }
    }

    pub fn with_r_max(mut self, value: f64) -> Self {
        match &mut self {
            ProfileSource::ClosedForm { r_max, .. } | ProfileSource::Table { r_max, .. } => *r_max = Some(value),
        }
        self
    }

    /// Parses the line-oriented `profile v1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "profile v1")) => {}
            Some((n, other)) => {
                return Err(Error::parse(
                    n,
                    format!("expected header `profile v1`, found `{other}`"),
                ))
            }
            None => return Err(Error::parse(1, "empty profile file")),
        }
        let mut r_max = None;
        let mut h0 = None;
        let mut body: Option<ProfileSource> = None;
        let mut rows = Vec::new();
        let mut in_table = false;
        for (n, line) in lines {
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            if in_table {
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|w| {
                        w.parse::<f64>()
                            .map_err(|_| Error::parse(n, format!("bad number `{w}`")))
                    })
                    .collect::<Result<_>>()?;
                if vals.len() != 4 {
                    return Err(Error::parse(n, "table rows must be `r f g h`"));
                }
                rows.push([vals[0], vals[1], vals[2], vals[3]]);
                continue;
            }
            match head {
                "r_max" | "h0" => {
                    let v = words
                        .next()
                        .and_then(|w| w.parse::<f64>().ok())
                        .ok_or_else(|| Error::parse(n, format!("`{head}` needs a number")))?;
                    if head == "r_max" {
                        r_max = Some(v);
                    } else {
                        h0 = Some(v);
                    }
                }
                "closed-form" => {
                    if body.is_some() {
                        return Err(Error::parse(n, "duplicate profile body"));
                    }
                    let name = words
                        .next()
                        .ok_or_else(|| Error::parse(n, "closed-form needs a name"))?
                        .to_string();
                    let mut params = BTreeMap::new();
                    for w in words {
                        let (k, v) = w
                            .split_once('=')
                            .ok_or_else(|| Error::parse(n, format!("parameter `{w}` is not key=value")))?;
                        let v: f64 = v.parse().map_err(|_| Error::parse(n, format!("bad number in `{w}`")))?;
                        params.insert(k.to_string(), v);
                    }
                    body = Some(ProfileSource::ClosedForm {
                        name,
                        params,
                        r_max: None,
                        h0: None,
                    });
                }
                "table" => {
                    if body.is_some() {
                        return Err(Error::parse(n, "duplicate profile body"));
                    }
                    in_table = true;
                }
                other => return Err(Error::parse(n, format!("unknown directive `{other}`"))),
            }
        }
        let mut source = if in_table {
            if rows.len() < 2 {
                return Err(Error::parse(0, "table needs at least two rows"));
            }
            ProfileSource::Table {
                rows,
                r_max: None,
                h0: None,
            }
        } else {
            body.ok_or_else(|| Error::parse(0, "missing `closed-form` or `table` body"))?
        };
        match &mut source {
            ProfileSource::ClosedForm { r_max: rm, h0: z, .. } | ProfileSource::Table { r_max: rm, h0: z, .. } => {
                *rm = r_max;
                *z = h0;
            }
        }
        Ok(source)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("profile v1\n");
        let (r_max, h0) = match self {
            ProfileSource::ClosedForm { r_max, h0, .. } | ProfileSource::Table { r_max, h0, .. } => (r_max, h0),
        };
        if let Some(v) = r_max {
            out.push_str(&format!("r_max {v}\n"));
        }
        if let Some(v) = h0 {
            out.push_str(&format!("h0 {v}\n"));
        }
        match self {
            ProfileSource::ClosedForm { name, params, .. } => {
                out.push_str("closed-form ");
                out.push_str(name);
                for (k, v) in params {
                    out.push_str(&format!(" {k}={v}"));
                }
                out.push('\n');
            }
            ProfileSource::Table { rows, .. } => {
                out.push_str("table\n");
                for [r, f, g, h] in rows {
                    out.push_str(&format!("{r} {f} {g} {h}\n"));
                }
            }
        }
        out
    }
}

/// The triple `(f, g, h)` of radial functions, plus the declared limit
/// `h0 = h(0⁺)` and the radius `r_max` up to which it is checked.
#[derive(Clone)]
pub struct RadialProfile {
    f: RadialFn,
    g: RadialFn,
    h: RadialFn,
    h_prime: Option<RadialFn>,
    twist: Option<RadialFn>,
    h0: f64,
    r_max: f64,
    tolerance: f64,
    source: Option<ProfileSource>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("RadialProfile")
            .field("h0", &self.h0)
            .field("r_max", &self.r_max)
            .field("tolerance", &self.tolerance)
            .field("analytic_h_prime", &self.h_prime.is_some())
            .field("analytic_twist", &self.twist.is_some())
            .field("source", &self.source)
            .finish()
    }
}

impl RadialProfile {
    /// Closed-form profile from callables. `h0` defaults to `h(0)`.
    pub fn new<F, G, H>(f: F, g: G, h: H, r_max: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let h0 = h(0.0);
        RadialProfile {
            f: Arc::new(f),
            g: Arc::new(g),
            h: Arc::new(h),
            h_prime: None,
            twist: None,
            h0,
            r_max,
            tolerance: ANALYTIC_TOLERANCE,
            source: None,
        }
    }

    pub fn with_h_prime<P>(mut self, h_prime: P) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.h_prime = Some(Arc::new(h_prime));
        self
    }

    /// Closed form of the twist rate `√(gh − f²)/h`, which otherwise loses
    /// all precision to cancellation near the origin.
    pub fn with_twist_rate<K>(mut self, twist: K) -> Self
    where
        K: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.twist = Some(Arc::new(twist));
        self
    }

    pub fn with_h0(mut self, h0: f64) -> Self {
        self.h0 = h0;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        if let Some(src) = self.source.take() {
            self.source = Some(src.with_r_max(r_max));
        }
        self
    }

    /// Profile `f = ±h′/2`, `g = (f² + h²k²)/h` so that the twist rate
    /// `√(gh − f²)/h` equals `|k|`.
    pub fn twisted<H, P, K>(h: H, h_prime: P, twist: K, orientation: f64, r_max: f64) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        P: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        K: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    {
        let k1 = twist.clone();
        let p1 = h_prime.clone();
        let (h2, p2) = (h.clone(), h_prime.clone());
        let f = move |r: f64| orientation * 0.5 * p1(r);
        let g = move |r: f64| {
            let hv = h2(r);
            let fv = 0.5 * p2(r);
            let k = twist(r);
            (fv * fv + hv * hv * k * k) / hv
        };
        RadialProfile::new(f, g, h, r_max)
            .with_h_prime(h_prime)
            .with_twist_rate(move |r| k1(r).abs())
    }

    /// f = ±r, g = 1, h = r²: the profile of the identity (or a reflection).
    pub fn identity(orientation: f64, r_max: f64) -> Self {
        RadialProfile::new(move |r| orientation * r, |_| 1.0, |r| r * r, r_max)
            .with_h_prime(|r| 2.0 * r)
            .with_twist_rate(|_| 0.0)
            .with_source(ProfileSource::closed_form("identity", &[("orientation", orientation)]).with_r_max(r_max))
    }

    /// f = ±r, g = 1 + (p r)², h = r²: the spiral Θ = ±θ + p r.
    pub fn unit_pitch_spiral(pitch: f64, orientation: f64, r_max: f64) -> Self {
        RadialProfile::new(
            move |r| orientation * r,
            move |r| 1.0 + pitch * pitch * r * r,
            |r| r * r,
            r_max,
        )
        .with_h_prime(|r| 2.0 * r)
        .with_twist_rate(move |_| pitch.abs())
        .with_source(
            ProfileSource::closed_form("unit-pitch-spiral", &[("pitch", pitch), ("orientation", orientation)])
                .with_r_max(r_max),
        )
    }

    /// h = r²(1 + Σᵢ≥₁ hᵢ rⁱ), twist k = Σᵢ≥₀ tᵢ rⁱ.
    pub fn polynomial(h_coeffs: &[f64], twist_coeffs: &[f64], orientation: f64, r_max: f64) -> Self {
        let mut params: Vec<(String, f64)> = vec![("orientation".into(), orientation)];
        for (i, c) in h_coeffs.iter().enumerate() {
            params.push((format!("h{}", i + 1), *c));
        }
        for (i, c) in twist_coeffs.iter().enumerate() {
            params.push((format!("t{i}"), *c));
        }
        let src = ProfileSource::ClosedForm {
            name: "polynomial".into(),
            params: params.into_iter().collect(),
            r_max: Some(r_max),
            h0: None,
        };
        let hc: Arc<[f64]> = h_coeffs.into();
        let tc: Arc<[f64]> = twist_coeffs.into();
        let (hc1, hc2) = (hc.clone(), hc);
        let h = move |r: f64| {
            let poly = hc1.iter().rev().fold(0.0, |acc, c| (acc + c) * r);
            r * r * (1.0 + poly)
        };
        // d/dr [r² + Σ cᵢ r^(i+2)] = 2r + Σ (i+2) cᵢ r^(i+1)
        let hp = move |r: f64| {
            let mut acc = 2.0 * r;
            let mut pow = r * r;
            for (i, c) in hc2.iter().enumerate() {
                acc += (i as f64 + 3.0) * c * pow;
                pow *= r;
            }
            acc
        };
        let k = move |r: f64| tc.iter().rev().fold(0.0, |acc, c| acc * r + c);
        RadialProfile::twisted(h, hp, k, orientation, r_max).with_source(src)
    }

    /// h = c r^p, twist k = t r^q.
    pub fn power_law(scale: f64, exponent: f64, twist: f64, twist_exp: f64, orientation: f64, r_max: f64) -> Self {
        let src = ProfileSource::closed_form(
            "power-law",
            &[
                ("scale", scale),
                ("exponent", exponent),
                ("twist", twist),
                ("twist_exp", twist_exp),
                ("orientation", orientation),
            ],
        )
        .with_r_max(r_max);
        RadialProfile::twisted(
            move |r: f64| scale * r.powf(exponent),
            move |r: f64| scale * exponent * r.powf(exponent - 1.0),
            move |r: f64| twist * r.powf(twist_exp),
            orientation,
            r_max,
        )
        .with_source(src)
    }

    /// Tabulated profile; rows `[r, f, g, h]`, strictly increasing in `r`.
    pub fn table(rows: &[[f64; 4]]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Argument("profile table needs at least two rows".into()));
        }
        if rows.windows(2).any(|w| w[1][0] <= w[0][0]) || rows[0][0] < 0.0 {
            return Err(Error::Argument(
                "profile table radii must be non-negative and strictly increasing".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("profile table contains non-finite entries".into()));
        }
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let col = |j: usize| MonotoneCubic::new(xs.clone(), rows.iter().map(|r| r[j]).collect());
        let (fi, gi, hi) = (col(1), col(2), col(3));
        let r_max = *xs.last().expect("rows");
        let h0 = if xs[0] == 0.0 { rows[0][3] } else { hi.eval(0.0) };
        let mut p = RadialProfile::new(move |r| fi.eval(r), move |r| gi.eval(r), move |r| hi.eval(r), r_max);
        p.h0 = h0;
        p.tolerance = SAMPLED_TOLERANCE;
        p.source = Some(ProfileSource::Table {
            rows: rows.to_vec(),
            r_max: None,
            h0: None,
        });
        Ok(p)
    }

    pub fn from_source(source: &ProfileSource) -> Result<Self> {
        match source {
            ProfileSource::ClosedForm {
                name,
                params,
                r_max,
                h0,
            } => {
                let r_max = r_max.unwrap_or(DEFAULT_R_MAX);
                let mut p = builtin(name, params, r_max)?;
                if let Some(z) = h0 {
                    p.h0 = *z;
                }
                p.source = Some(source.clone());
                Ok(p)
            }
            ProfileSource::Table { rows, r_max, h0 } => {
                let mut p = RadialProfile::table(rows)?;
                if let Some(rm) = r_max {
                    p.r_max = *rm;
                }
                if let Some(z) = h0 {
                    p.h0 = *z;
                }
                p.source = Some(source.clone());
                Ok(p)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        RadialProfile::from_source(&ProfileSource::parse(text)?)
    }

    fn with_source(mut self, source: ProfileSource) -> Self {
        self.source = Some(source);
        self
    }

    pub fn source(&self) -> Option<&ProfileSource> {
        self.source.as_ref()
    }

    pub fn f(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn g(&self, r: f64) -> f64 {
        (self.g)(r)
    }

    pub fn h(&self, r: f64) -> f64 {
        (self.h)(r)
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn has_analytic_h_prime(&self) -> bool {
        self.h_prime.is_some()
    }

    /// h′(r): analytic when supplied, otherwise a centered difference with
    /// step `1e-6·r_max` (one-sided against the origin).
    pub fn h_prime(&self, r: f64) -> f64 {
        match &self.h_prime {
            Some(p) => p(r),
            None => {
                let step = 1e-6 * self.r_max;
                let lo = (r - step).max(0.0);
                let hi = r + step;
                (self.h(hi) - self.h(lo)) / (hi - lo)
            }
        }
    }

    /// g·h − f².
    pub fn discriminant(&self, r: f64) -> f64 {
        let f = self.f(r);
        self.g(r) * self.h(r) - f * f
    }

    /// Angular twist rate √(gh − f²)/h. Returns a domain error when the
    /// discriminant is negative beyond the profile tolerance.
    pub fn twist_rate(&self, r: f64) -> Result<f64> {
        if let Some(k) = &self.twist {
            return Ok(k(r));
        }
        let f = self.f(r);
        let d = self.g(r) * self.h(r) - f * f;
        if d < -self.tolerance * (f * f).max(1.0) {
            return Err(Error::Domain { r, value: d });
        }
        Ok(d.max(0.0).sqrt() / self.h(r))
    }
}

fn builtin(name: &str, params: &BTreeMap<String, f64>, r_max: f64) -> Result<RadialProfile> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let allowed: &[&str] = match name {
        "identity" => &["orientation"],
        "unit-pitch-spiral" => &["orientation", "pitch"],
        "power-law" => &["orientation", "scale", "exponent", "twist", "twist_exp"],
        "polynomial" => &[],
        other => {
            return Err(Error::Config(format!(
                "unknown closed-form profile `{other}` (known: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    if name != "polynomial" {
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown parameter `{bad}` for `{name}`")));
        }
    }
    let orientation = get("orientation", 1.0);
    if orientation != 1.0 && orientation != -1.0 {
        return Err(Error::Config(format!("orientation must be ±1, got {orientation}")));
    }
    Ok(match name {
        "identity" => RadialProfile::identity(orientation, r_max),
        "unit-pitch-spiral" => RadialProfile::unit_pitch_spiral(get("pitch", 1.0), orientation, r_max),
        "power-law" => RadialProfile::power_law(
            get("scale", 1.0),
            get("exponent", 2.0),
            get("twist", 0.0),
            get("twist_exp", 0.0),
            orientation,
            r_max,
        ),
        _ => {
            let mut hc = Vec::new();
            let mut tc = Vec::new();
            for (k, v) in params {
                let idx = |prefix: &str| -> Result<Option<usize>> {
                    match k.strip_prefix(prefix) {
                        Some(d) => d
                            .parse::<usize>()
                            .map(Some)
                            .map_err(|_| Error::Config(format!("bad coefficient name `{k}`"))),
                        None => Ok(None),
                    }
                };
                if k == "orientation" {
                    continue;
                } else if let Some(i) = idx("h")? {
                    if i == 0 {
                        return Err(Error::Config("h coefficients start at h1".into()));
                    }
                    if hc.len() < i {
                        hc.resize(i, 0.0);
                    }
                    hc[i - 1] = *v;
                } else if let Some(i) = idx("t")? {
                    if tc.len() <= i {
                        tc.resize(i + 1, 0.0);
                    }
                    tc[i] = *v;
                } else {
                    return Err(Error::Config(format!("unknown parameter `{k}` for `polynomial`")));
                }
            }
            RadialProfile::polynomial(&hc, &tc, orientation, r_max)
        }
    })
}

/// Named conditions checked by [`validate_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// (i) h strictly increasing.
    #[serde(rename = "(i) h-increasing")]
    HIncreasing,
    /// (i) h(0) = 0.
    #[serde(rename = "(i) h0-zero")]
    HZeroAtOrigin,
    #[serde(rename = "f-nonvanishing")]
    FNonVanishing,
    #[serde(rename = "f-constant-sign")]
    FConstantSign,
    /// (ii) g > 0.
    #[serde(rename = "(ii) g-positive")]
    GPositive,
    /// (ii) g·h ≥ f².
    #[serde(rename = "(ii) gh-ge-f2")]
    GhDominatesF2,
    /// (ii) f = ε₁ h′/2.
    #[serde(rename = "(ii) f-half-h-prime")]
    FHalfHPrime,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::HIncreasing => "(i) h strictly increasing",
            Condition::HZeroAtOrigin => "(i) h(0) = 0",
            Condition::FNonVanishing => "f does not vanish",
            Condition::FConstantSign => "f has constant sign",
            Condition::GPositive => "(ii) g > 0",
            Condition::GhDominatesF2 => "(ii) g·h ≥ f²",
            Condition::FHalfHPrime => "(ii) f = ε₁·h′/2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub r: f64,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            passed: violations.is_empty(),
            violations,
        }
    }

    pub fn violates(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn summary(&self) -> String {
        if self.passed {
            return "passed".into();
        }
        self.violations
            .iter()
            .map(|v| format!("{} fails at r = {} (measured {})", v.condition, v.r, v.value))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// `n` equally spaced radii in `(0, r_max]`.
pub fn uniform_grid(r_max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| r_max * k as f64 / n as f64).collect()
}

fn check_grid(profile: &RadialProfile, r_grid: &[f64]) -> Result<()> {
    if r_grid.is_empty() {
        return Err(Error::Argument("radius grid is empty".into()));
    }
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("radius grid must be strictly increasing".into()));
    }
    let (lo, hi) = (r_grid[0], r_grid[r_grid.len() - 1]);
    if lo <= 0.0 || hi > profile.r_max() * (1.0 + 1e-12) {
        return Err(Error::Argument(format!(
            "radius grid [{lo}, {hi}] must lie in (0, r_max = {}]",
            profile.r_max()
        )));
    }
    Ok(())
}

struct Sample {
    r: f64,
    f: f64,
    g: f64,
    h: f64,
}

fn sample(profile: &RadialProfile, r: f64) -> Result<Sample> {
    let s = Sample {
        r,
        f: profile.f(r),
        g: profile.g(r),
        h: profile.h(r),
    };
    for (q, v) in [("f", s.f), ("g", s.g), ("h", s.h)] {
        if !v.is_finite() {
            return Err(Error::NonFiniteAtRadius { quantity: q, r });
        }
    }
    Ok(s)
}

/// Checks the hypotheses on `(f, g, h)` needed for a spiral solution to
/// exist: monotone `h` vanishing at the origin, non-vanishing `f` of fixed
/// sign, `g > 0`, `g·h ≥ f²` and `|f| = h′/2`. One violation (the first
/// failing radius) is reported per condition.
pub fn validate_profile(profile: &RadialProfile, r_grid: &[f64], tol: f64) -> Result<ValidationReport> {
    check_grid(profile, r_grid)?;
    let samples: Vec<Sample> = r_grid.iter().map(|&r| sample(profile, r)).collect::<Result<_>>()?;
    let mut found: BTreeMap<u8, Violation> = BTreeMap::new();
    let mut record = |order: u8, condition: Condition, r: f64, value: f64| {
        found.entry(order).or_insert(Violation {
            condition,
            r,
            value,
            tolerance: tol,
        });
    };

    if !(profile.h0().abs() <= tol) {
        record(1, Condition::HZeroAtOrigin, 0.0, profile.h0());
    }
    let first = &samples[0];
    if !(first.h > profile.h0()) {
        record(0, Condition::HIncreasing, first.r, first.h - profile.h0());
    }
    for w in samples.windows(2) {
        let step = w[1].h - w[0].h;
        if !(step > 0.0) {
            record(0, Condition::HIncreasing, w[1].r, step);
        }
    }
    let sign = first.f.signum();
    for s in &samples {
        if s.f.abs() <= tol {
            record(2, Condition::FNonVanishing, s.r, s.f);
        } else if s.f.signum() != sign {
            record(3, Condition::FConstantSign, s.r, s.f);
        }
        if !(s.g > 0.0) {
            record(4, Condition::GPositive, s.r, s.g);
        }
        let disc = s.g * s.h - s.f * s.f;
        if disc < -tol * (s.f * s.f).max(1.0) {
            record(5, Condition::GhDominatesF2, s.r, disc);
        }
        let defect = s.f - sign * 0.5 * profile.h_prime(s.r);
        if defect.abs() > tol * s.f.abs().max(1.0) {
            record(6, Condition::FHalfHPrime, s.r, defect);
        }
    }
    Ok(ValidationReport::from_violations(found.into_values().collect()))
}

/// Checks `f = ε₁·h′/2` for a prescribed orientation `ε₁`.
pub fn check_orientation(profile: &RadialProfile, eps1: f64, r_grid: &[f64], tol: f64) -> Result<ValidationReport> {
    check_grid(profile, r_grid)?;
    let mut violations = Vec::new();
    for &r in r_grid {
        let s = sample(profile, r)?;
        let defect = s.f - eps1 * 0.5 * profile.h_prime(r);
        if defect.abs() > tol * s.f.abs().max(1.0) {
            violations.push(Violation {
                condition: Condition::FHalfHPrime,
                r,
                value: defect,
                tolerance: tol,
            });
            break;
        }
    }
    Ok(ValidationReport::from_violations(violations))
}
