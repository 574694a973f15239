//! Run configuration: defaults, named presets, TOML files and overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::QuadratureConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Pipeline stages in execution order.
pub const STAGES: [&str; 8] = [
    "tensor",
    "rh",
    "transport",
    "profile",
    "lift",
    "ell",
    "fixedpoint",
    "residual",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Stopping tolerance of the outer iteration on the step norm.
    pub fixed_point: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            fixed_point: 1e-10,
            max_iterations: 25,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub epsilon: f64,
    pub order: usize,
    pub gamma: f64,
    pub s: f64,
    pub kappa: f64,
    pub eta: f64,
    /// Half-length `L` of the domain `[-L/eps, L/eps]`.
    pub domain: f64,
    pub grid: usize,
    pub quadrature: Option<QuadratureConfig>,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub stage_until: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            epsilon: 0.05,
            order: 3,
            gamma: 0.5,
            s: 0.25,
            kappa: 0.05,
            eta: 5e-4,
            domain: 10.0,
            grid: 801,
            quadrature: None,
            tolerances: Tolerances::default(),
            out: PathBuf::from("kinshock-out"),
            cache: None,
            stage_until: None,
        }
    }
}

/// Optional values from a file or the command line; `None` keeps the lower layer.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub preset: Option<String>,
    pub epsilon: Option<f64>,
    pub order: Option<usize>,
    pub gamma: Option<f64>,
    pub s: Option<f64>,
    pub kappa: Option<f64>,
    pub eta: Option<f64>,
    pub domain: Option<f64>,
    pub grid: Option<usize>,
    pub quadrature: Option<QuadratureConfig>,
    pub tolerances: Option<Tolerances>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub stage_until: Option<String>,
}

impl ConfigLayer {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    fn apply(&self, c: &mut RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone(); })*};
        }
        take!(epsilon, order, gamma, s, kappa, eta, domain, grid, tolerances, out);
        if self.quadrature.is_some() {
            c.quadrature = self.quadrature;
        }
        if self.cache.is_some() {
            c.cache = self.cache.clone();
        }
        if self.stage_until.is_some() {
            c.stage_until = self.stage_until.clone();
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["reference", "p10", "p7", "quick"];

/// Parameter layer of a named preset. `pN` is the inverse power law
/// `phi(r) ~ r^{1-N}`, with `s = 1/(N-1)` and `gamma = (N-5)/(N-1)`.
pub fn preset(name: &str) -> Option<ConfigLayer> {
    let power = |p: f64| ConfigLayer {
        s: Some(1.0 / (p - 1.0)),
        gamma: Some((p - 5.0) / (p - 1.0)),
        ..ConfigLayer::default()
    };
    match name {
        "reference" => Some(ConfigLayer::default()),
        "p10" => Some(power(10.0)),
        "p7" => Some(power(7.0)),
        "quick" => Some(ConfigLayer {
            grid: Some(401),
            ..ConfigLayer::default()
        }),
        _ => None,
    }
}

/// Resolves `defaults <- preset <- file <- overrides` and validates the result.
/// The preset named in `overrides` wins over the one named in the file.
pub fn load_config(file: Option<&ConfigLayer>, overrides: &ConfigLayer) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig::default();
    let name = overrides
        .preset
        .clone()
        .or_else(|| file.and_then(|f| f.preset.clone()));
    let mut errors = Vec::new();
    if let Some(n) = &name {
        match preset(n) {
            Some(layer) => layer.apply(&mut c),
            None => errors.push(format!("unknown preset {n:?} (known: {})", PRESETS.join(", "))),
        }
        c.preset = Some(n.clone());
    }
    if let Some(f) = file {
        f.apply(&mut c);
    }
    overrides.apply(&mut c);
    errors.extend(validation_errors(&c));
    if errors.is_empty() {
        Ok(c)
    } else {
        Err(ConfigError::Validation(errors))
    }
}

/// Every range violation of a configuration.
pub fn validation_errors(c: &RunConfig) -> Vec<String> {
    let mut e = Vec::new();
    if !(c.epsilon > 0.0 && c.epsilon <= 0.1) {
        e.push(format!("epsilon = {} outside (0, 0.1]", c.epsilon));
    }
    if !(3..=6).contains(&c.order) {
        e.push(format!("order = {} outside 3..=6", c.order));
    }
    if !(c.gamma > 0.0 && c.gamma < 1.0) {
        e.push(format!("gamma = {} outside (0, 1)", c.gamma));
    }
    if !(c.s > 0.0 && c.s < 0.5) {
        e.push(format!("s = {} outside (0, 1/2)", c.s));
    }
    if !(c.kappa >= 0.0 && c.kappa.is_finite()) {
        e.push(format!("kappa = {} must be non-negative", c.kappa));
    }
    if !(c.eta > 0.0 && c.eta.is_finite()) {
        e.push(format!("eta = {} must be positive", c.eta));
    }
    if !(c.domain >= 2.0 && c.domain.is_finite()) {
        e.push(format!("domain = {} must be at least 2", c.domain));
    }
    if c.grid < 101 || c.grid % 2 == 0 {
        e.push(format!("grid = {} must be odd and at least 101", c.grid));
    }
    if !(c.tolerances.fixed_point > 0.0) {
        e.push(format!("tolerances.fixed_point = {} must be positive", c.tolerances.fixed_point));
    }
    if c.tolerances.max_iterations == 0 {
        e.push("tolerances.max_iterations must be positive".into());
    }
    if let Some(q) = &c.quadrature {
        if let Err(err) = q.validate(c.order) {
            e.push(err.to_string());
        }
    }
    if let Some(st) = &c.stage_until {
        if !STAGES.contains(&st.as_str()) {
            e.push(format!("stage_until = {st:?} is not one of {}", STAGES.join(", ")));
        }
    }
    e
}

impl RunConfig {
    pub fn quadrature_config(&self) -> QuadratureConfig {
        self.quadrature.unwrap_or_else(|| QuadratureConfig::for_degree(self.order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(validation_errors(&RunConfig::default()).is_empty());
    }

    #[test]
    fn every_violation_is_listed() {
        let layer = ConfigLayer {
            s: Some(0.6),
            gamma: Some(1.5),
            grid: Some(100),
            ..ConfigLayer::default()
        };
        match load_config(None, &layer) {
            Err(ConfigError::Validation(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }
}
