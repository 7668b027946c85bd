//! JSON run configuration: parsing, defaults, and resolution into the
//! validated core types. Keys are camelCase and unknown keys are rejected so
//! a typo fails loudly instead of silently running defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{FieldPiece, Geometry, InitialData, Params, RoadPiece};
use crate::solver::{NewtonConfig, RunOptions};

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GeometryConfig {
    /// Field depth L.
    pub l: f64,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FieldPieceConfig {
    pub x_intervals: Vec<[f64; 2]>,
    pub y_interval: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RoadPieceConfig {
    pub x_intervals: Vec<[f64; 2]>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub field: Vec<FieldPieceConfig>,
    #[serde(default)]
    pub road: Vec<RoadPieceConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NewtonSettings {
    #[serde(default = "default_newton_tol")]
    pub tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_true")]
    pub damping: bool,
    #[serde(default = "default_newton_max_halvings")]
    pub max_halvings: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        let base = NewtonConfig::default();
        Self {
            tol: base.tol,
            max_iter: base.max_iter,
            damping: base.damping,
            max_halvings: base.max_halvings,
        }
    }
}

fn default_newton_tol() -> f64 {
    NewtonConfig::default().tol
}
fn default_newton_max_iter() -> usize {
    NewtonConfig::default().max_iter
}
fn default_newton_max_halvings() -> usize {
    NewtonConfig::default().max_halvings
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_nu0() -> f64 {
    5.0
}
fn default_csv_path() -> String {
    "run.csv".into()
}
fn default_record_stride() -> usize {
    1
}
fn default_fit_window() -> [f64; 2] {
    [1e-6, 1e-2]
}

/// One run, as written in a config file. Either `preset` or the pair
/// `geometry` + `initial` selects the problem; exponents, mesh, and time
/// stepping are always explicit.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<u32>,
    #[serde(default)]
    pub geometry: Option<GeometryConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_one")]
    pub d_field: f64,
    #[serde(default = "default_one")]
    pub d_road: f64,
    #[serde(default = "default_one")]
    pub mu0: f64,
    #[serde(default = "default_nu0")]
    pub nu0: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default = "default_csv_path")]
    pub csv_path: String,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    #[serde(default = "default_fit_window")]
    pub fit_window: [f64; 2],
    #[serde(default)]
    pub seed: u64,
}

/// A fully validated configuration: mesh built, data checked, parameters
/// range-verified.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub geometry: Geometry,
    pub initial: InitialData,
    pub params: Params,
    pub mesh: Mesh,
    pub options: RunOptions,
    pub csv_path: String,
    pub fit_window: (f64, f64),
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let (geometry, initial) = match (self.preset, &self.geometry, &self.initial) {
            (Some(id), None, None) => crate::model::preset(id)?,
            (None, Some(g), Some(init)) => {
                let geometry = Geometry::new(g.l, g.x_min, g.x_max)?;
                let initial = InitialData {
                    field: init
                        .field
                        .iter()
                        .map(|p| FieldPiece {
                            x_intervals: p.x_intervals.clone(),
                            y_interval: p.y_interval,
                            value: p.value,
                        })
                        .collect(),
                    road: init
                        .road
                        .iter()
                        .map(|p| RoadPiece { x_intervals: p.x_intervals.clone(), value: p.value })
                        .collect(),
                };
                (geometry, initial)
            }
            (Some(_), _, _) => {
                return Err(Error::Config(
                    "preset and explicit geometry/initial are mutually exclusive".into(),
                ))
            }
            (None, _, _) => {
                return Err(Error::Config(
                    "either preset or both geometry and initial must be given".into(),
                ))
            }
        };
        initial.validate(&geometry)?;
        let params = Params::new(self.alpha, self.beta, self.d_field, self.d_road, self.mu0, self.nu0)?;
        let mesh = Mesh::build(geometry, self.nx, self.ny)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("tEnd must be positive, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("recordStride must be at least 1".into()));
        }
        let [lo, hi] = self.fit_window;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Config(format!(
                "fitWindow [{lo}, {hi}] must be an increasing positive pair"
            )));
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 {
            return Err(Error::Config("newton.tol must be positive and newton.maxIter nonzero".into()));
        }
        Ok(Resolved {
            geometry,
            initial,
            params,
            mesh,
            options: RunOptions {
                dt: self.dt,
                t_end: self.t_end,
                newton: NewtonConfig {
                    tol: self.newton.tol,
                    max_iter: self.newton.max_iter,
                    damping: self.newton.damping,
                    max_halvings: self.newton.max_halvings,
                },
                record_stride: self.record_stride,
            },
            csv_path: self.csv_path.clone(),
            fit_window: (lo, hi),
            seed: self.seed,
        })
    }
}
