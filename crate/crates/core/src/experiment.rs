//! Monte Carlo experiments on excursion sets of deformed fields.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{euler_characteristic, BinaryGrid};
use crate::field::{sample_field, FieldSample, SpectralFieldSpec};
use crate::geometry::{pushforward_area, pushforward_perimeter, PlanarMap, Point, Rect};

/// Subdivisions used for the areas and frontier lengths in [`area_length_fit`].
pub const GEOMETRY_SUBDIVISIONS: usize = 128;
/// Decision threshold on |z|.
pub const Z_CRITICAL: f64 = 3.0;
const RANK_TOLERANCE: f64 = 1e-10;

/// Where the field is evaluated for the `m × m` pixel centers of a rotated
/// rectangle: an affine lattice for linear maps, scattered points otherwise.
#[derive(Debug, Clone)]
pub enum ImagePoints {
    Lattice {
        origin: Point,
        du: Point,
        dv: Point,
        m: usize,
    },
    Scattered {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

impl ImagePoints {
    pub fn len(&self) -> usize {
        match self {
            ImagePoints::Lattice { m, .. } => m * m,
            ImagePoints::Scattered { xs, .. } => xs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, sample: &FieldSample, out: &mut [f64]) {
        match self {
            ImagePoints::Lattice { origin, du, dv, m } => sample.eval_lattice(*origin, *du, *dv, *m, *m, out),
            ImagePoints::Scattered { xs, ys } => sample.eval_points(xs, ys, out),
        }
    }
}

fn check_resolution(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Argument(format!("resolution must be at least 2, got {m}")));
    }
    Ok(())
}

/// `F` at the pixel centers of `φ(T)`, rows along the rectangle's second axis.
pub fn image_points(map: &PlanarMap, rect: &Rect, phi: f64, m: usize) -> Result<ImagePoints> {
    check_resolution(m)?;
    rect.check()?;
    let t = rect.rotated(phi);
    let centre = |k: usize| -1.0 + (2 * k + 1) as f64 / m as f64;
    if let Some(a) = map.as_linear() {
        let apply = |p: Point| [a[0][0] * p[0] + a[0][1] * p[1], a[1][0] * p[0] + a[1][1] * p[1]];
        let p00 = t.point(centre(0), centre(0));
        let p10 = t.point(centre(1), centre(0));
        let p01 = t.point(centre(0), centre(1));
        return Ok(ImagePoints::Lattice {
            origin: apply(p00),
            du: apply([p10[0] - p00[0], p10[1] - p00[1]]),
            dv: apply([p01[0] - p00[0], p01[1] - p00[1]]),
            m,
        });
    }
    let mut xs = Vec::with_capacity(m * m);
    let mut ys = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            let q = map.try_forward(t.point(centre(i), centre(j)))?;
            xs.push(q[0]);
            ys.push(q[1]);
        }
    }
    Ok(ImagePoints::Scattered { xs, ys })
}

/// `X(F(t))` at the pixel centers of `φ(T)`.
pub fn deformed_values(sample: &FieldSample, map: &PlanarMap, rect: &Rect, phi: f64, m: usize) -> Result<Vec<f64>> {
    let points = image_points(map, rect, phi, m)?;
    let mut out = vec![0.0; points.len()];
    points.eval(sample, &mut out);
    Ok(out)
}

fn threshold(values: &[f64], u: f64, m: usize) -> BinaryGrid {
    BinaryGrid::new(m, m, values.iter().map(|&v| v >= u).collect()).expect("m × m values")
}

/// Mask of `{t ∈ φ(T) : X(F(t)) ≥ u}` at the `m × m` pixel centers.
pub fn deformed_excursion(
    sample: &FieldSample,
    map: &PlanarMap,
    rect: &Rect,
    phi: f64,
    u: f64,
    m: usize,
) -> Result<BinaryGrid> {
    let values = deformed_values(sample, map, rect, phi, m)?;
    Ok(threshold(&values, u, m).with_anchor(rect.rotated(phi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub replicates: usize,
    pub u: f64,
    pub rotation: f64,
}

impl EulerEstimate {
    fn from_samples(chi: &[i64], u: f64, rotation: f64) -> Self {
        let n = chi.len() as f64;
        let mean = chi.iter().map(|&c| c as f64).sum::<f64>() / n;
        let ss = chi.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>();
        let std_err = if chi.len() > 1 {
            (ss / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        EulerEstimate {
            mean,
            std_err,
            replicates: chi.len(),
            u,
            rotation,
        }
    }
}

/// Thread pool of the requested size.
pub fn worker_pool(workers: usize) -> Result<ThreadPool> {
    if workers == 0 {
        return Err(Error::Argument("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// χ per replicate (outer, in index order) and level (inner).
fn euler_table(
    spec: &SpectralFieldSpec,
    points: &ImagePoints,
    levels: &[f64],
    first_index: u64,
    replicates: usize,
    m: usize,
    pool: &ThreadPool,
) -> Result<Vec<Vec<i64>>> {
    let one = |k: u64| -> Result<Vec<i64>> {
        let sample = sample_field(spec, first_index + k)?;
        let mut values = vec![0.0; points.len()];
        points.eval(&sample, &mut values);
        Ok(levels
            .iter()
            .map(|&u| euler_characteristic(&threshold(&values, u, m)))
            .collect())
    };
    pool.install(|| (0..replicates as u64).into_par_iter().map(one).collect())
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        return Err(Error::Argument(format!("need at least 2 replicates, got {replicates}")));
    }
    Ok(())
}

/// Mean and standard error of `χ(A_u(X∘F, φ(T)))` over replicates
/// `0..replicates` of `spec`.
pub fn mean_euler(
    spec: &SpectralFieldSpec,
    map: &PlanarMap,
    rect: &Rect,
    phi: f64,
    u: f64,
    replicates: usize,
    m: usize,
) -> Result<EulerEstimate> {
    check_replicates(replicates)?;
    let points = image_points(map, rect, phi, m)?;
    let table = euler_table(spec, &points, &[u], 0, replicates, m, &worker_pool(1)?)?;
    let chi: Vec<i64> = table.iter().map(|row| row[0]).collect();
    Ok(EulerEstimate::from_samples(&chi, u, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropyRow {
    pub u: f64,
    pub rotation: f64,
    pub mean_chi: f64,
    pub std_err: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    #[serde(rename = "transform-id")]
    pub transform_id: String,
    pub replicates: usize,
    pub resolution: usize,
    pub rows: Vec<IsotropyRow>,
    pub max_abs_z: f64,
    pub pass: bool,
}

impl IsotropyReport {
    pub const CSV_HEADER: &'static str = "u,rotation,mean_chi,std_err,z,pass";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.u, r.rotation, r.mean_chi, r.std_err, r.z, r.pass
            );
        }
        out
    }
}

/// `(m_φ − m_0) / √(se_φ² + se_0²)`; zero when both sides are exact and equal.
pub fn z_score(est: &EulerEstimate, reference: &EulerEstimate) -> f64 {
    let diff = est.mean - reference.mean;
    let se = est.std_err.hypot(reference.std_err);
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

/// Compares `𝔼χ(A_u(X∘F, φ(T)))` with the value at `φ = 0` for every level
/// and rotation. Rotation `k` uses replicate streams
/// `k·replicates .. (k+1)·replicates`, so rotations are independent.
#[allow(clippy::too_many_arguments)]
pub fn weak_isotropy_test(
    spec: &SpectralFieldSpec,
    map: &PlanarMap,
    rect: &Rect,
    levels: &[f64],
    rotations: &[f64],
    replicates: usize,
    m: usize,
    workers: usize,
) -> Result<IsotropyReport> {
    check_replicates(replicates)?;
    check_resolution(m)?;
    if levels.is_empty() {
        return Err(Error::Argument("at least one level is required".into()));
    }
    if rotations.len() < 2 {
        return Err(Error::Argument("at least two rotations are required".into()));
    }
    let reference = rotations
        .iter()
        .position(|&r| r == 0.0)
        .ok_or_else(|| Error::Argument("rotations must include 0".into()))?;
    let pool = worker_pool(workers)?;

    let mut estimates = Vec::with_capacity(rotations.len());
    for (k, &phi) in rotations.iter().enumerate() {
        let points = image_points(map, rect, phi, m)?;
        let table = euler_table(spec, &points, levels, (k * replicates) as u64, replicates, m, &pool)?;
        let per_level: Vec<EulerEstimate> = levels
            .iter()
            .enumerate()
            .map(|(l, &u)| {
                let chi: Vec<i64> = table.iter().map(|row| row[l]).collect();
                EulerEstimate::from_samples(&chi, u, phi)
            })
            .collect();
        estimates.push(per_level);
    }

    let mut rows = Vec::with_capacity(levels.len() * rotations.len());
    for l in 0..levels.len() {
        for est in &estimates {
            let z = z_score(&est[l], &estimates[reference][l]);
            rows.push(IsotropyRow {
                u: est[l].u,
                rotation: est[l].rotation,
                mean_chi: est[l].mean,
                std_err: est[l].std_err,
                z,
                pass: z.abs() <= Z_CRITICAL,
            });
        }
    }
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(IsotropyReport {
        transform_id: map.label().to_string(),
        replicates,
        resolution: m,
        pass: rows.iter().all(|r| r.pass),
        max_abs_z,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaLengthFit {
    /// Coefficient of `area(F(T))`.
    pub a: f64,
    /// Coefficient of `length(∂F(T))`.
    pub b: f64,
    /// Intercept.
    pub c: f64,
    pub r_squared: f64,
    pub areas: Vec<f64>,
    pub lengths: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
}

/// Least-squares fit `𝔼̂χ ≈ a·area(F(T)) + b·length(∂F(T)) + c` over a family
/// of rectangles. Rectangle `k` uses replicate streams starting at
/// `k·replicates`.
#[allow(clippy::too_many_arguments)]
pub fn area_length_fit(
    spec: &SpectralFieldSpec,
    map: &PlanarMap,
    rectangles: &[Rect],
    u: f64,
    replicates: usize,
    m: usize,
    workers: usize,
) -> Result<AreaLengthFit> {
    check_replicates(replicates)?;
    if rectangles.len() < 4 {
        return Err(Error::Argument(format!(
            "need at least 4 rectangles, got {}",
            rectangles.len()
        )));
    }
    let pool = worker_pool(workers)?;
    let mut areas = Vec::with_capacity(rectangles.len());
    let mut lengths = Vec::with_capacity(rectangles.len());
    let mut means = Vec::with_capacity(rectangles.len());
    let mut std_errs = Vec::with_capacity(rectangles.len());
    for (k, rect) in rectangles.iter().enumerate() {
        areas.push(pushforward_area(map, rect, GEOMETRY_SUBDIVISIONS)?);
        lengths.push(pushforward_perimeter(map, rect, GEOMETRY_SUBDIVISIONS)?);
        let points = image_points(map, rect, 0.0, m)?;
        let table = euler_table(spec, &points, &[u], (k * replicates) as u64, replicates, m, &pool)?;
        let chi: Vec<i64> = table.iter().map(|row| row[0]).collect();
        let est = EulerEstimate::from_samples(&chi, u, 0.0);
        means.push(est.mean);
        std_errs.push(est.std_err);
    }
    let (coef, r_squared) = least_squares(&areas, &lengths, &means)?;
    Ok(AreaLengthFit {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        r_squared,
        areas,
        lengths,
        means,
        std_errs,
    })
}

/// Fits `y ≈ a·x₁ + b·x₂ + c`; returns the coefficients and R².
pub fn least_squares(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<([f64; 3], f64)> {
    let n = y.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => x1[i],
        1 => x2[i],
        _ => 1.0,
    });
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if !(hi > 0.0) || lo / hi < RANK_TOLERANCE {
        return Err(Error::Config(
            "design matrix is rank deficient: (area, length, 1) columns are not independent".into(),
        ));
    }
    let rhs = DVector::from_column_slice(y);
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Config(format!("least squares failed: {e}")))?;
    let fitted = &design * &coef;
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(v, f)| (v - f).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res <= 1e-20 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(([coef[0], coef[1], coef[2]], r_squared))
}
