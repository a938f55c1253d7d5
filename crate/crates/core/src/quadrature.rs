//! Adaptive Gauss–Kronrod (10/21 point) integration on finite intervals.

#![allow(clippy::excessive_precision)]

use crate::error::Error;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Upper bound on interval bisections before giving up.
pub const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Roundoff-limited: bisection no longer reduces the error.
    frozen: bool,
}

/// Evaluates the 21-point Kronrod rule and the embedded 10-point Gauss rule
/// on `[a, b]`. The difference of the two is the error estimate.
///
/// Returns `Err(x)` with the offending abscissa when `f` is not finite.
pub fn kronrod21<F>(f: &F, a: f64, b: f64) -> std::result::Result<Estimate, f64>
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(center);
    }
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(10).enumerate() {
        let dx = half * x;
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(x1);
        }
        if !f2.is_finite() {
            return Err(x2);
        }
        kronrod += wk * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Estimate {
        value: kronrod * half,
        abs_error: ((kronrod - gauss) * half).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadError {
    /// The integrand was not finite at this abscissa.
    NonFinite(f64),
    /// Bisection budget exhausted; carries the midpoint of the worst panel.
    NoConvergence { worst_at: f64, estimate: Estimate },
}

impl QuadError {
    pub fn location(&self) -> f64 {
        match self {
            QuadError::NonFinite(x) => *x,
            QuadError::NoConvergence { worst_at, .. } => *worst_at,
        }
    }
}

/// Relative size below which a panel error that survives bisection is
/// attributed to roundoff.
const ROUNDOFF_FLOOR: f64 = 1.5e-8;

/// Globally adaptive integration: repeatedly bisects the panel with the
/// largest error estimate until the summed estimate drops below `abs_tol`.
/// Roundoff-limited panels are left alone and their error is still reported
/// in `abs_error`, which may then exceed `abs_tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64) -> std::result::Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let first = kronrod21(&f, a, b).map_err(QuadError::NonFinite)?;
    let mut panels = vec![Panel {
        a,
        b,
        value: first.value,
        error: first.abs_error,
        frozen: false,
    }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let active_err: f64 = panels.iter().filter(|p| !p.frozen).map(|p| p.error).sum();
        let total: f64 = panels.iter().map(|p| p.value).sum();
        if active_err <= abs_tol {
            return Ok(Estimate {
                value: total,
                abs_error: total_err,
            });
        }
        let (worst_idx, worst) = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.frozen)
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, p)| (i, *p))
            .expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if panels.len() >= MAX_INTERVALS || mid <= worst.a || mid >= worst.b {
            return Err(QuadError::NoConvergence {
                worst_at: mid,
                estimate: Estimate {
                    value: total,
                    abs_error: total_err,
                },
            });
        }
        let left = kronrod21(&f, worst.a, mid).map_err(QuadError::NonFinite)?;
        let right = kronrod21(&f, mid, worst.b).map_err(QuadError::NonFinite)?;
        // Noise in the integrand (typically cancellation in its inputs) keeps
        // the error from shrinking; a divergence does too, but with an error
        // that is not small next to the total.
        let frozen =
            left.abs_error + right.abs_error >= 0.25 * worst.error && worst.error <= ROUNDOFF_FLOOR * total.abs();
        panels[worst_idx] = Panel {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.abs_error,
            frozen,
        };
        panels.push(Panel {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.abs_error,
            frozen,
        });
    }
}

/// Integrates on `[0, b]` after the substitution `x = s²`, which turns an
/// endpoint behaviour like `x^(-1/2)` at the origin into a smooth integrand.
pub fn integrate_sqrt_substituted<F>(f: F, b: f64, abs_tol: f64) -> std::result::Result<Estimate, QuadError>
where
    F: Fn(f64) -> f64,
{
    if b < 0.0 {
        return Err(QuadError::NonFinite(b));
    }
    integrate(|s| 2.0 * s * f(s * s), 0.0, b.sqrt(), abs_tol).map_err(|e| match e {
        QuadError::NonFinite(s) => QuadError::NonFinite(s * s),
        QuadError::NoConvergence { worst_at, estimate } => QuadError::NoConvergence {
            worst_at: worst_at * worst_at,
            estimate,
        },
    })
}

pub(crate) fn divergence(err: QuadError) -> Error {
    Error::Divergence { r: err.location() }
}
