//! JSON configurations for the geometry and weak-isotropy experiments.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RadialLaw, SpectralFieldSpec};
use crate::geometry::{seeded_rotations, PlanarMap, Rect, Shape};
use crate::polar_map::PolarMap;
use crate::profile::RadialProfile;
use crate::spiral::{build_spiral, Sign, SpiralSpec, SpiralSpecFile};

pub const BUILTIN_MAPS: [&str; 4] = ["identity", "unit-pitch-spiral", "scaling", "shear"];
/// Radius up to which the builtin spiral is tabulated.
pub const BUILTIN_SPIRAL_R_MAX: f64 = 10.0;
pub const DEFAULT_RESOLUTION: usize = 128;
pub const DEFAULT_SUBDIVISIONS: usize = 128;
pub const DEFAULT_TOL_REL: f64 = 5e-3;

/// A builtin name, a 2×2 matrix, or a spiral specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapConfig {
    Builtin(String),
    Linear { linear: [[f64; 2]; 2] },
    Spiral(SpiralSpecFile),
}

impl MapConfig {
    pub fn build(&self) -> Result<PlanarMap> {
        let polar = match self {
            MapConfig::Builtin(name) => builtin_map(name)?,
            MapConfig::Linear { linear } => PolarMap::linear("linear", *linear, f64::INFINITY)?,
            MapConfig::Spiral(file) => build_spiral(&SpiralSpec::from_file(file)?)?,
        };
        Ok(polar.into())
    }
}

pub fn builtin_map(name: &str) -> Result<PolarMap> {
    Ok(match name {
        "identity" => PolarMap::identity(f64::INFINITY),
        "scaling" => PolarMap::anisotropic_scaling(f64::INFINITY),
        "shear" => PolarMap::shear(f64::INFINITY),
        "unit-pitch-spiral" => {
            let profile = RadialProfile::unit_pitch_spiral(1.0, 1.0, BUILTIN_SPIRAL_R_MAX);
            build_spiral(&SpiralSpec::new(Sign::Plus, Sign::Plus, 0.0, profile))?.with_label("unit-pitch-spiral")
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown map `{name}` (expected one of {})",
                BUILTIN_MAPS.join(", ")
            )))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub law: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub n_harmonics: usize,
    pub seed: u64,
}

impl FieldConfig {
    pub fn spec(&self) -> Result<SpectralFieldSpec> {
        SpectralFieldSpec::new(
            RadialLaw::from_name(&self.law, &self.params)?,
            self.n_harmonics,
            self.seed,
        )
    }
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

fn default_subdivisions() -> usize {
    DEFAULT_SUBDIVISIONS
}

fn default_tol_rel() -> f64 {
    DEFAULT_TOL_REL
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldConfig,
    pub map: MapConfig,
    pub rect: Rect,
    pub levels: Vec<f64>,
    pub rotations: Vec<f64>,
    pub replicates: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.rect.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }
}

/// Explicit angles, or `count` angles from a seeded generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RotationsConfig {
    List(Vec<f64>),
    Seeded { seed: u64, count: usize },
}

impl RotationsConfig {
    pub fn angles(&self) -> Vec<f64> {
        match self {
            RotationsConfig::List(v) => v.clone(),
            RotationsConfig::Seeded { seed, count } => seeded_rotations(*seed, *count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub map: MapConfig,
    pub shapes: Vec<Shape>,
    pub rotations: RotationsConfig,
    #[serde(default = "default_subdivisions")]
    pub n: usize,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
}

impl GeometryConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GeometryConfig = serde_json::from_str(text)?;
        if cfg.shapes.is_empty() {
            return Err(Error::Config("geometry config lists no shapes".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXPERIMENT: &str = r#"{
        "field": {"law": "rayleigh", "params": {"sigma": 2.0}, "n_harmonics": 200, "seed": 7},
        "map": "unit-pitch-spiral",
        "rect": {"center": [2.0, 0.0], "halfwidths": [0.5, 0.5]},
        "levels": [-1.0, 0.0, 1.0],
        "rotations": [0.0, 0.6283185307179586, 1.5707963267948966],
        "replicates": 2000
    }"#;

    #[test]
    fn experiment_config_parses() {
        let cfg = ExperimentConfig::from_json(EXPERIMENT).unwrap();
        assert_eq!(cfg.resolution, 128);
        assert_eq!(cfg.rect.orientation, 0.0);
        assert_eq!(cfg.field.spec().unwrap().radial_law, RadialLaw::Rayleigh { sigma: 2.0 });
        let map = cfg.map.build().unwrap();
        assert_eq!(map.label(), "unit-pitch-spiral");
    }

    #[test]
    fn map_variants() {
        let lin: MapConfig = serde_json::from_str(r#"{"linear": [[2.0, 0.0], [0.0, 1.0]]}"#).unwrap();
        assert_eq!(lin.build().unwrap().as_linear(), Some([[2.0, 0.0], [0.0, 1.0]]));
        let spiral: MapConfig = serde_json::from_str(
            r#"{"eps1": 1, "eps2": -1, "theta0": 0.5,
                "profile": {"kind": "closed-form", "name": "unit-pitch-spiral", "params": {"pitch": 1.0}, "r_max": 3.0}}"#,
        )
        .unwrap();
        assert!(matches!(spiral, MapConfig::Spiral(_)));
        let m = spiral.build().unwrap();
        let p = m.forward([1.0, 0.0]);
        assert!((p[1].atan2(p[0]) - (0.5 - 1.0)).abs() < 1e-12);
        assert!(matches!(
            MapConfig::Builtin("twirl".into()).build(),
            Err(Error::Config(_))
        ));
        let singular = MapConfig::Linear {
            linear: [[1.0, 2.0], [2.0, 4.0]],
        };
        assert!(matches!(singular.build(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        let bad_rect = EXPERIMENT.replace("[0.5, 0.5]", "[0.5, -0.5]");
        assert!(ExperimentConfig::from_json(&bad_rect).is_err());
        let bad_law = EXPERIMENT.replace("rayleigh", "levy");
        assert!(matches!(
            ExperimentConfig::from_json(&bad_law).unwrap().field.spec(),
            Err(Error::Config(_))
        ));
        let extra = EXPERIMENT.replace("\"replicates\"", "\"replicas\": 3, \"replicates\"");
        assert!(ExperimentConfig::from_json(&extra).is_err());
    }

    #[test]
    fn geometry_config_parses() {
        let cfg = GeometryConfig::from_json(
            r#"{"map": "scaling",
                "shapes": [{"kind": "segment", "start": [0, 0], "end": [1, 0]},
                           {"kind": "rect", "center": [2, 0], "halfwidths": [1, 0.25]}],
                "rotations": {"seed": 3, "count": 8}}"#,
        )
        .unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.tol_rel, 5e-3);
        assert_eq!(cfg.rotations.angles().len(), 8);
        let listed: RotationsConfig = serde_json::from_str("[0.5, 1.0]").unwrap();
        assert_eq!(listed.angles(), vec![0.5, 1.0]);
        assert!(GeometryConfig::from_json(r#"{"map": "identity", "shapes": [], "rotations": [1.0]}"#).is_err());
    }
}
