//! Scenario files. JSON, unknown keys rejected, every precondition checked
//! at load.

use std::path::{Path, PathBuf};

use fallwave::curvature::validate_tidal_with;
use fallwave::{
    EvolveConfig, PacketShape, Scenario, SimError, StepScheme, TidalMatrix, WaveFunction,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub packet: PacketConfig,
    pub curvature: CurvatureConfig,
    pub evolve: EvolveSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes: Option<Vec<ShapeConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_list: Option<Vec<f64>>,
    /// Sweep threshold as a fraction of the largest |⟨x⟩|.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wep_threshold: Option<f64>,
    /// Accepted fitted order `[low, high]`; defaults by scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_band: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Gaussian,
    SkewedGaussian,
    DoublePeak,
    CustomTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Scalar(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sigma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    /// CSV of `x,re,im`; relative paths are taken from the config's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeConfig {
    pub shape: ShapeKind,
    #[serde(default)]
    pub params: ShapeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub shape: ShapeKind,
    #[serde(default)]
    pub params: ShapeParams,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    /// Row-major `d×d` tidal matrix.
    pub tidal: Vec<f64>,
    #[serde(default)]
    pub vacuum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "strang")]
    pub scheme: StepScheme,
    #[serde(default = "default_margin")]
    pub boundary_margin: f64,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    #[serde(default)]
    pub exact_rate: bool,
    #[serde(default = "default_validity")]
    pub validity_threshold: f64,
}

fn one() -> usize {
    1
}
fn strang() -> StepScheme {
    StepScheme::Strang
}
fn default_margin() -> f64 {
    0.1
}
fn default_boundary_tol() -> f64 {
    1e-8
}
fn default_validity() -> f64 {
    fallwave::curvature::DEFAULT_VALIDITY_THRESHOLD
}

/// Failure while loading a config: unreadable, malformed or invalid.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        ConfigError(e.to_string())
    }
}

/// A loaded config together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    pub tidal: TidalMatrix,
    pub packet: WaveFunction,
    base_dir: PathBuf,
}

impl Loaded {
    pub fn shape(&self, spec: &ShapeConfig) -> Result<PacketShape, ConfigError> {
        build_shape(
            spec.shape,
            &spec.params,
            self.config.grid.dim,
            &self.base_dir,
        )
    }
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    prepare(config, base_dir)
}

pub fn prepare(config: ScenarioConfig, base_dir: PathBuf) -> Result<Loaded, ConfigError> {
    let p = &config.packet;
    let shape = build_shape(p.shape, &p.params, config.grid.dim, &base_dir)?;
    let e = &config.evolve;
    let mut evolve = EvolveConfig::new(e.dt, e.steps).record_every(e.record_every);
    evolve.boundary_margin_fraction = e.boundary_margin;
    evolve.boundary_mass_tol = e.boundary_tol;
    evolve.exact_rate = e.exact_rate;
    evolve.validity_threshold = e.validity_threshold;
    let scenario = Scenario {
        dim: config.grid.dim,
        points_per_axis: config.grid.n,
        extent: config.grid.extent,
        shape,
        x0: p.x0.clone(),
        v0: p.v0.clone(),
        mass: p.mass,
        tidal: config.curvature.tidal.clone(),
        vacuum: config.curvature.vacuum,
        scheme: e.scheme,
        evolve,
    };
    if e.dt <= 0.0 || !e.dt.is_finite() || e.steps == 0 || e.record_every == 0 {
        return Err(ConfigError(format!(
            "InvalidParameter: evolve needs dt > 0, steps > 0, record_every > 0 (got {}, {}, {})",
            e.dt, e.steps, e.record_every
        )));
    }
    let tidal = scenario.tidal_matrix()?;
    let report = validate_tidal_with(
        &tidal,
        scenario.extent,
        scenario.vacuum,
        scenario.evolve.validity_threshold,
    )?;
    if !report.ok {
        return Err(SimError::OutsideValidity(report.messages.join("; ")).into());
    }
    let packet = scenario.packet()?;
    if let Some(masses) = &config.masses {
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(ConfigError(format!(
                "InvalidParameter: sweep mass must be positive, got {m}"
            )));
        }
    }
    let loaded = Loaded {
        config,
        scenario,
        tidal,
        packet,
        base_dir,
    };
    if let Some(shapes) = &loaded.config.shapes {
        for s in shapes {
            loaded.shape(s)?;
        }
    }
    Ok(loaded)
}

fn build_shape(
    kind: ShapeKind,
    params: &ShapeParams,
    dim: usize,
    base_dir: &Path,
) -> Result<PacketShape, ConfigError> {
    let unused = |name: &str, present: bool| -> Result<(), ConfigError> {
        if present {
            Err(ConfigError(format!(
                "InvalidParameter: parameter '{name}' does not apply to {kind:?} packets"
            )))
        } else {
            Ok(())
        }
    };
    let missing = |name: &str| {
        ConfigError(format!(
            "InvalidParameter: {kind:?} packets need parameter '{name}'"
        ))
    };
    let scalar_sigma = || match &params.sigma {
        Some(Sigma::Scalar(s)) => Ok(*s),
        Some(Sigma::PerAxis(_)) => Err(ConfigError(format!(
            "InvalidParameter: {kind:?} packets take a single sigma"
        ))),
        None => Err(missing("sigma")),
    };
    match kind {
        ShapeKind::Gaussian => {
            unused("skew", params.skew.is_some())?;
            unused("separation", params.separation.is_some())?;
            unused("table", params.table.is_some())?;
            let sigma = match &params.sigma {
                Some(Sigma::Scalar(s)) => vec![*s],
                Some(Sigma::PerAxis(v)) => {
                    if v.len() != dim {
                        return Err(SimError::SizeMismatch {
                            expected: dim,
                            actual: v.len(),
                        }
                        .into());
                    }
                    v.clone()
                }
                None => return Err(missing("sigma")),
            };
            Ok(PacketShape::Gaussian { sigma })
        }
        ShapeKind::SkewedGaussian => {
            unused("separation", params.separation.is_some())?;
            unused("table", params.table.is_some())?;
            Ok(PacketShape::SkewedGaussian {
                sigma: scalar_sigma()?,
                skew: params.skew.ok_or_else(|| missing("skew"))?,
            })
        }
        ShapeKind::DoublePeak => {
            unused("skew", params.skew.is_some())?;
            unused("table", params.table.is_some())?;
            Ok(PacketShape::DoublePeak {
                sigma: scalar_sigma()?,
                separation: params.separation.ok_or_else(|| missing("separation"))?,
            })
        }
        ShapeKind::CustomTable => {
            unused("sigma", params.sigma.is_some())?;
            unused("skew", params.skew.is_some())?;
            unused("separation", params.separation.is_some())?;
            let table = params.table.as_ref().ok_or_else(|| missing("table"))?;
            let path = if table.is_absolute() {
                table.clone()
            } else {
                base_dir.join(table)
            };
            Ok(PacketShape::from_table_file(&path)?)
        }
    }
}
