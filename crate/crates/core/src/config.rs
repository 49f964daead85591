//! JSON run configuration.

use serde::{Deserialize, Serialize};

use crate::geometry::Polygon;
use crate::hardy::CMode;
use crate::{Error, Result};

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    5000
}
fn default_count() -> usize {
    100
}
fn default_n_beta() -> usize {
    64
}
fn default_tol_bound() -> f64 {
    crate::bounds::DEFAULT_TOL_BOUND
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    #[default]
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: default_tol(), max_iter: default_max_iter(), seed: 0 }
    }
}

/// `λ` grid; a missing `min` defaults to `λ₁`, a missing `max` to
/// `0.9·λ_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGridConfig {
    pub min: Option<f64>,
    pub max: Option<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Default for LambdaGridConfig {
    fn default() -> Self {
        LambdaGridConfig { min: None, max: None, count: default_count(), spacing: Spacing::Geometric }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandauConfig {
    pub b_field: f64,
    pub half_width: f64,
    pub h: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub polygon: Option<Polygon>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub h_plane: Option<f64>,
    pub h_axial: Option<f64>,
    pub num_eigenpairs: Option<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub lambda_grid: LambdaGridConfig,
    /// Defaults to `convex` for convex polygons and `worst_case` otherwise.
    pub c_mode: Option<CMode>,
    #[serde(default = "default_n_beta")]
    pub n_beta: usize,
    #[serde(default = "default_tol_bound")]
    pub tol_bound: f64,
    /// Report the convex-case column (only ever filled for convex polygons).
    #[serde(default = "default_true")]
    pub corollary: bool,
    /// Meshes for the Hardy refinement study; defaults to `[h_plane]`.
    pub hardy_meshes: Option<Vec<f64>>,
    pub landau: Option<LandauConfig>,
}

/// The cylinder part of a validated config.
#[derive(Debug, Clone)]
pub struct CylinderConfig {
    pub polygon: Polygon,
    pub a: f64,
    pub b: f64,
    pub h_plane: f64,
    pub h_axial: f64,
}

fn missing(field: &str) -> Error {
    Error::InvalidInput(format!("config field `{field}` is required for this command"))
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("config field `{field}` must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                Error::InvalidInput(format!("config: {inner}"))
            } else {
                Error::InvalidInput(format!("config field `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field that is present.
    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(b)) = (self.a, self.b) {
            if !(a < b) {
                return Err(Error::InvalidInput(format!(
                    "config fields `a`, `b` must satisfy a < b, got a={a}, b={b}"
                )));
            }
        }
        if let Some(h) = self.h_plane {
            positive("h_plane", h)?;
        }
        if let Some(h) = self.h_axial {
            positive("h_axial", h)?;
        }
        if self.num_eigenpairs == Some(0) {
            return Err(Error::InvalidInput("config field `num_eigenpairs` must be ≥ 1".into()));
        }
        positive("solver.tol", self.solver.tol)?;
        if self.lambda_grid.count < 2 {
            return Err(Error::InvalidInput("config field `lambda_grid.count` must be ≥ 2".into()));
        }
        if let Some(min) = self.lambda_grid.min {
            if !(min >= 0.0) {
                return Err(Error::InvalidInput("config field `lambda_grid.min` must be ≥ 0".into()));
            }
        }
        if let Some(max) = self.lambda_grid.max {
            positive("lambda_grid.max", max)?;
        }
        if self.n_beta < 2 {
            return Err(Error::InvalidInput("config field `n_beta` must be ≥ 2".into()));
        }
        if !(self.tol_bound >= 0.0) {
            return Err(Error::InvalidInput("config field `tol_bound` must be ≥ 0".into()));
        }
        if let Some(meshes) = &self.hardy_meshes {
            if meshes.is_empty() {
                return Err(Error::InvalidInput("config field `hardy_meshes` must not be empty".into()));
            }
            for &h in meshes {
                positive("hardy_meshes", h)?;
            }
        }
        if let Some(l) = &self.landau {
            if !(l.b_field >= 0.0) {
                return Err(Error::InvalidInput("config field `landau.b_field` must be ≥ 0".into()));
            }
            positive("landau.half_width", l.half_width)?;
            positive("landau.h", l.h)?;
            if l.m == 0 {
                return Err(Error::InvalidInput("config field `landau.m` must be ≥ 1".into()));
            }
        }
        Ok(())
    }

    pub fn cylinder(&self) -> Result<CylinderConfig> {
        let polygon = self.polygon.clone().ok_or_else(|| missing("polygon"))?;
        let a = self.a.ok_or_else(|| missing("a"))?;
        let b = self.b.ok_or_else(|| missing("b"))?;
        let h_plane = self.h_plane.ok_or_else(|| missing("h_plane"))?;
        let h_axial = self.h_axial.unwrap_or(h_plane);
        Ok(CylinderConfig { polygon, a, b, h_plane, h_axial })
    }

    pub fn num_eigenpairs(&self) -> Result<usize> {
        self.num_eigenpairs.ok_or_else(|| missing("num_eigenpairs"))
    }

    pub fn landau(&self) -> Result<&LandauConfig> {
        self.landau.as_ref().ok_or_else(|| missing("landau"))
    }

    /// The configured mode, or the default for this polygon.
    pub fn c_mode_for(&self, poly: &Polygon) -> CMode {
        self.c_mode.unwrap_or(if poly.is_convex() { CMode::Convex } else { CMode::WorstCase })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = r#"{
        "polygon": [[0,0],[1,0],[1,1],[0,1]],
        "a": 0, "b": 1, "h_plane": 0.25, "h_axial": 0.25,
        "num_eigenpairs": 2
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_json(CUBE).unwrap();
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.lambda_grid.count, 100);
        assert_eq!(c.n_beta, 64);
        let cyl = c.cylinder().unwrap();
        assert_eq!(cyl.h_axial, 0.25);
        assert_eq!(c.c_mode_for(&cyl.polygon), CMode::Convex);
    }

    #[test]
    fn error_names_the_field() {
        let bad = CUBE.replace("\"a\": 0", "\"a\": \"zero\"");
        let msg = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("`a`"), "{msg}");

        let bad = CUBE.replace("\"num_eigenpairs\": 2", "\"num_eigenpairs\": 2, \"bogus\": 1");
        let msg = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("bogus"), "{msg}");

        let bad = CUBE.replace("[[0,0],[1,0],[1,1],[0,1]]", "[[0,0],[1,0]]");
        let msg = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("polygon"), "{msg}");

        let bad = CUBE.replace("\"b\": 1", "\"b\": 0");
        assert!(RunConfig::from_json(&bad).is_err());
        assert!(RunConfig::from_json("{ not json").is_err());
    }

    #[test]
    fn missing_fields_reported_on_use() {
        let c = RunConfig::from_json("{}").unwrap();
        let msg = c.cylinder().unwrap_err().to_string();
        assert!(msg.contains("polygon"));
        assert!(c.landau().is_err());
    }
}
