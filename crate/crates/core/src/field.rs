//! Randomized spectral fields `X(t) = √(2/n) Σ cos(⟨ωᵢ, t⟩ + φᵢ)` with
//! uniformly distributed directions, hence exactly isotropic in law.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Distribution of the frequency magnitude `ρ = |ω|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum RadialLaw {
    FixedRing { rho: f64 },
    Rayleigh { sigma: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl RadialLaw {
    pub const NAMES: [&'static str; 3] = ["fixed-ring", "rayleigh", "gamma"];

    /// Looks a law up by name. Missing parameters default to 1.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "fixed-ring" => &["rho"],
            "rayleigh" => &["sigma"],
            "gamma" => &["shape", "scale"],
            _ => {
                return Err(Error::Config(format!(
                    "unknown radial law `{name}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("radial law `{name}` has no parameter `{k}`")));
        }
        let get = |k: &str| params.get(k).copied().unwrap_or(1.0);
        let law = match name {
            "fixed-ring" => RadialLaw::FixedRing { rho: get("rho") },
            "rayleigh" => RadialLaw::Rayleigh { sigma: get("sigma") },
            _ => RadialLaw::Gamma {
                shape: get("shape"),
                scale: get("scale"),
            },
        };
        law.check()?;
        Ok(law)
    }

    pub fn name(&self) -> &'static str {
        match self {
            RadialLaw::FixedRing { .. } => "fixed-ring",
            RadialLaw::Rayleigh { .. } => "rayleigh",
            RadialLaw::Gamma { .. } => "gamma",
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = match *self {
            RadialLaw::FixedRing { rho } => rho >= 0.0 && rho.is_finite(),
            RadialLaw::Rayleigh { sigma } => sigma > 0.0 && sigma.is_finite(),
            RadialLaw::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid parameters for radial law {self:?}")))
        }
    }

    /// `E[ρ²]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            RadialLaw::FixedRing { rho } => rho * rho,
            RadialLaw::Rayleigh { sigma } => 2.0 * sigma * sigma,
            RadialLaw::Gamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            RadialLaw::FixedRing { rho } => rho,
            RadialLaw::Rayleigh { sigma } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                sigma * (-2.0 * u.ln()).sqrt()
            }
            RadialLaw::Gamma { shape, scale } => Gamma::new(shape, scale).expect("checked parameters").sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFieldSpec {
    pub radial_law: RadialLaw,
    pub n_harmonics: usize,
    pub base_seed: u64,
}

impl SpectralFieldSpec {
    pub fn new(radial_law: RadialLaw, n_harmonics: usize, base_seed: u64) -> Result<Self> {
        let spec = SpectralFieldSpec {
            radial_law,
            n_harmonics,
            base_seed,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        if self.n_harmonics == 0 {
            return Err(Error::Config("n_harmonics must be at least 1".into()));
        }
        self.radial_law.check()
    }
}

/// One realization: frequencies, phases and the common amplitude `√(2/n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub frequencies: Vec<[f64; 2]>,
    pub phases: Vec<f64>,
    pub amplitude: f64,
}

/// Draws replicate `replicate_index`. Each replicate owns the ChaCha stream
/// `replicate_index` under key `base_seed`, so replicates can be generated in
/// any order.
pub fn sample_field(spec: &SpectralFieldSpec, replicate_index: u64) -> Result<FieldSample> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.base_seed);
    rng.set_stream(replicate_index);
    let n = spec.n_harmonics;
    let mut frequencies = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    for _ in 0..n {
        let rho = spec.radial_law.sample(&mut rng);
        let psi = rng.random_range(0.0..TAU);
        let (s, c) = psi.sin_cos();
        frequencies.push([rho * c, rho * s]);
        phases.push(rng.random_range(0.0..TAU));
    }
    Ok(FieldSample {
        frequencies,
        phases,
        amplitude: (2.0 / n as f64).sqrt(),
    })
}

const SHIFTER: f64 = 6755399441055744.0; // 1.5 · 2⁵²
const TAU_HI: f64 = std::f64::consts::TAU;
const TAU_LO: f64 = 2.4492935982947064e-16;
// (−1)ᵏ/(2k)! for k = 0..=11
#[allow(clippy::excessive_precision)]
const COS_TAYLOR: [f64; 12] = [
    1.0,
    -0.5,
    4.1666666666666664e-2,
    -1.3888888888888889e-3,
    2.48015873015873e-5,
    -2.755731922398589e-7,
    2.08767569878681e-9,
    -1.1470745597729725e-11,
    4.779477332387385e-14,
    -1.5619206968586225e-16,
    4.110317623312165e-19,
    -8.896791392450574e-22,
];

/// Branch-free cosine for moderate arguments (|x| ≲ 1e6), absolute error
/// about 1e-12. Written so loops over it vectorize.
#[inline(always)]
pub fn fast_cos(x: f64) -> f64 {
    let k = (x * (1.0 / TAU) + SHIFTER) - SHIFTER;
    let r = (x - k * TAU_HI) - k * TAU_LO;
    let z = r * r;
    let c = &COS_TAYLOR;
    let p = c[11] * z + c[10];
    let p = p * z + c[9];
    let p = p * z + c[8];
    let p = p * z + c[7];
    let p = p * z + c[6];
    let p = p * z + c[5];
    let p = p * z + c[4];
    let p = p * z + c[3];
    let p = p * z + c[2];
    let p = p * z + c[1];
    p * z + c[0]
}

#[inline(always)]
fn accumulate(frequencies: &[[f64; 2]], phases: &[f64], xs: &[f64], ys: &[f64], out: &mut [f64]) {
    let n = out.len();
    let (xs, ys) = (&xs[..n], &ys[..n]);
    for (w, &ph) in frequencies.iter().zip(phases) {
        let (wx, wy) = (w[0], w[1]);
        for i in 0..n {
            out[i] += fast_cos(wx * xs[i] + wy * ys[i] + ph);
        }
    }
}

// Same arithmetic as `accumulate` (no contraction into FMA), so results are
// bit-identical; only the vector width differs.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn accumulate_avx2(frequencies: &[[f64; 2]], phases: &[f64], xs: &[f64], ys: &[f64], out: &mut [f64]) {
    accumulate(frequencies, phases, xs, ys, out)
}

impl FieldSample {
    pub fn n_harmonics(&self) -> usize {
        self.phases.len()
    }

    /// Reference evaluation with the library cosine.
    pub fn eval(&self, p: Point) -> f64 {
        self.amplitude
            * self
                .frequencies
                .iter()
                .zip(&self.phases)
                .map(|(w, ph)| (w[0] * p[0] + w[1] * p[1] + ph).cos())
                .sum::<f64>()
    }

    /// Evaluates at arbitrary points (struct-of-arrays), writing into `out`.
    pub fn eval_points(&self, xs: &[f64], ys: &[f64], out: &mut [f64]) {
        assert!(xs.len() == ys.len() && xs.len() == out.len());
        out.iter_mut().for_each(|v| *v = 0.0);
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            unsafe { accumulate_avx2(&self.frequencies, &self.phases, xs, ys, out) };
            out.iter_mut().for_each(|v| *v *= self.amplitude);
            return;
        }
        accumulate(&self.frequencies, &self.phases, xs, ys, out);
        out.iter_mut().for_each(|v| *v *= self.amplitude);
    }

    /// Evaluates on the lattice `origin + i·du + j·dv`, `0 ≤ i < ni`,
    /// `0 ≤ j < nj`, row-major with `j` outer. Uses
    /// `cos(a + b) = Re(e^{ia} e^{ib})` so that the cost is a real matrix
    /// product instead of `ni·nj·n` cosines.
    pub fn eval_lattice(&self, origin: Point, du: Point, dv: Point, ni: usize, nj: usize, out: &mut [f64]) {
        assert_eq!(out.len(), ni * nj);
        let n = self.n_harmonics();
        // Harmonic-major tables: u_*[k·ni + i] = e^{i(⟨ω,o⟩ + φ + i⟨ω,du⟩)}, v_*[k·nj + j] = e^{ij⟨ω,dv⟩}.
        let mut u_re = vec![0.0; n * ni];
        let mut u_im = vec![0.0; n * ni];
        let mut v_re = vec![0.0; n * nj];
        let mut v_im = vec![0.0; n * nj];
        for (k, (w, &ph)) in self.frequencies.iter().zip(&self.phases).enumerate() {
            let base = w[0] * origin[0] + w[1] * origin[1] + ph;
            let su = w[0] * du[0] + w[1] * du[1];
            let sv = w[0] * dv[0] + w[1] * dv[1];
            for i in 0..ni {
                let (s, c) = (base + i as f64 * su).sin_cos();
                u_re[k * ni + i] = c;
                u_im[k * ni + i] = s;
            }
            for j in 0..nj {
                let (s, c) = (j as f64 * sv).sin_cos();
                v_re[k * nj + j] = c;
                v_im[k * nj + j] = s;
            }
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..nj {
            let row = &mut out[j * ni..(j + 1) * ni];
            for k in 0..n {
                let (br, bi) = (v_re[k * nj + j], v_im[k * nj + j]);
                let ar = &u_re[k * ni..(k + 1) * ni];
                let ai = &u_im[k * ni..(k + 1) * ni];
                for ((o, &x), &y) in row.iter_mut().zip(ar).zip(ai) {
                    *o += x * br - y * bi;
                }
            }
        }
        out.iter_mut().for_each(|v| *v *= self.amplitude);
    }
}
