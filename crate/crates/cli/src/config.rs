//! Experiment configuration, read from a JSON file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use densman::{Density, LaplacianStyle, Space, TangentVector};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Verify,
    TorsionScan,
    Convergence,
    GeodesicCompare,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::TorsionScan => "torsion_scan",
            Experiment::Convergence => "convergence",
            Experiment::GeodesicCompare => "geodesic_compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    FisherRao,
    Otto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StyleName {
    #[default]
    Variational,
    Compositional,
}

impl From<StyleName> for LaplacianStyle {
    fn from(s: StyleName) -> Self {
        match s {
            StyleName::Variational => LaplacianStyle::Variational,
            StyleName::Compositional => LaplacianStyle::Compositional,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKindName {
    Cycle,
    Graph,
}

/// `kind: "cycle"` takes `n`, optional `circumference` (default 2π) and
/// `laplacian_style`; `kind: "graph"` takes `volumes` and `edges` as
/// `[i, j, weight]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circumference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplacian_style: Option<StyleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volumes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
}

impl SpaceConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |f: &str, m: &str| Err(ExperimentConfig::invalid(&format!("space.{f}"), m));
        match self.kind {
            SpaceKindName::Cycle => {
                if self.n.is_none() {
                    return bad("n", "required for a cycle grid");
                }
                if self.volumes.is_some() {
                    return bad("volumes", "only valid for graphs");
                }
                if self.edges.is_some() {
                    return bad("edges", "only valid for graphs");
                }
            }
            SpaceKindName::Graph => {
                if self.volumes.is_none() {
                    return bad("volumes", "required for a graph");
                }
                if self.edges.is_none() {
                    return bad("edges", "required for a graph");
                }
                if self.n.is_some() {
                    return bad("n", "only valid for cycle grids");
                }
                if self.circumference.is_some() {
                    return bad("circumference", "only valid for cycle grids");
                }
                if self.laplacian_style == Some(StyleName::Compositional) {
                    return bad("laplacian_style", "compositional needs a cycle grid");
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> densman::Result<Arc<Space>> {
        let style = self.laplacian_style.unwrap_or_default().into();
        match self.kind {
            SpaceKindName::Cycle => Space::cycle(
                self.n.unwrap_or(0),
                self.circumference.unwrap_or(std::f64::consts::TAU),
                style,
            ),
            SpaceKindName::Graph => Space::graph(
                self.volumes.clone().unwrap_or_default(),
                self.edges.as_deref().unwrap_or_default(),
            ),
        }
    }

    /// Same configuration at a different resolution (grids only).
    pub fn refined(&self, n: usize) -> Option<SpaceConfig> {
        match self.kind {
            SpaceKindName::Cycle => Some(SpaceConfig {
                n: Some(n),
                ..self.clone()
            }),
            SpaceKindName::Graph => None,
        }
    }
}

/// Initial data for `geodesic_compare`, as vertex masses. Omitted fields are
/// drawn from the seeded generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicConfig {
    #[serde(default)]
    pub mu0: Option<Vec<f64>>,
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_t_end() -> f64 {
    0.5
}

fn default_steps() -> usize {
    200
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            mu0: None,
            v0: None,
            t_end: default_t_end(),
            steps: default_steps(),
        }
    }
}

impl GeodesicConfig {
    pub fn initial_density(&self, space: &Arc<Space>) -> Option<densman::Result<Density>> {
        self.mu0.as_ref().map(|m| Density::from_masses(space, m))
    }

    pub fn initial_velocity(&self, space: &Arc<Space>) -> Option<densman::Result<TangentVector>> {
        self.v0.as_ref().map(|v| {
            let d = DVector::from_iterator(
                v.len().min(space.vertex_count()),
                v.iter().zip(space.volumes()).map(|(m, w)| m / w),
            );
            if v.len() != space.vertex_count() {
                return Err(densman::GeometryError::SizeMismatch {
                    expected: space.vertex_count(),
                    got: v.len(),
                });
            }
            TangentVector::new(space, d)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub metric: MetricName,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Checks as CSV; each table goes next to it as `<stem>.<table>.csv`.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub geodesic: Option<GeodesicConfig>,
}

fn default_alphas() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}

fn default_trials() -> usize {
    10
}

fn default_fd_step() -> f64 {
    densman::metric::DEFAULT_FD_STEP
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| {
                let inner = e.inner();
                HarnessError::Config {
                    field: e.path().to_string(),
                    line: inner.line(),
                    column: inner.column(),
                    message: inner.to_string(),
                }
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
        HarnessError::Config {
            field: field.to_string(),
            line: 0,
            column: 0,
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.space.validate()?;
        if self.trials == 0 {
            return Err(Self::invalid("trials", "must be at least 1"));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.5) {
            return Err(Self::invalid("fd_step", "must lie in (0, 0.5)"));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Self::invalid("alphas", "must be a nonempty list of finite numbers"));
        }
        if let Some(g) = &self.geodesic {
            if g.steps == 0 {
                return Err(Self::invalid("geodesic.steps", "must be at least 1"));
            }
            if !(g.t_end > 0.0 && g.t_end.is_finite()) {
                return Err(Self::invalid("geodesic.t_end", "must be positive"));
            }
        }
        Ok(())
    }

    /// The seed, which every experiment needs.
    pub fn require_seed(&self) -> Result<u64, HarnessError> {
        self.seed.ok_or_else(|| Self::invalid("seed", "missing (set it in the config or pass --seed)"))
    }

    pub fn require_experiment(&self) -> Result<Experiment, HarnessError> {
        self.experiment
            .ok_or_else(|| Self::invalid("experiment", "missing (set it in the config or use a subcommand)"))
    }
}
