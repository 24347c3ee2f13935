//! Experiment configuration: a flat JSON object, with CLI flags on top.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fastl1_core::{Rule, Scenario, SolverKind, SukroShape, SwitchConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Serialize through `Display` / `FromStr`.
mod text {
    use super::*;
    use serde::{de::Error, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// Kronecker factor shape `[n1, n2, k1, k2]`; square factors when absent.
    pub shape: Option<[usize; 4]>,
    #[serde(with = "text")]
    pub scenario: Scenario,
    pub lambda_ratios: Vec<f64>,
    pub tol: f64,
    pub gamma: f64,
    #[serde(with = "text")]
    pub solver: SolverKind,
    #[serde(with = "text")]
    pub rule: Rule,
    pub ranks: Vec<usize>,
    /// Replaces the theoretical RC of each approximation in the speed criterion.
    pub rc_override: Option<Vec<f64>>,
    pub bernoulli_p: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub screen_interval: usize,
    pub precompute_aty: bool,
    pub max_iter: usize,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2500,
            k: 10000,
            shape: None,
            scenario: Scenario::Moderate,
            lambda_ratios: lambda_grid(10),
            tol: 1e-5,
            gamma: 0.5,
            solver: SolverKind::Fista,
            rule: Rule::StableGap,
            ranks: vec![5, 10, 15, 20],
            rc_override: None,
            bernoulli_p: 0.02,
            trials: 25,
            seed: 0,
            out: PathBuf::from("out"),
            screen_interval: 1,
            precompute_aty: false,
            max_iter: 1_000_000,
            jobs: 1,
        }
    }
}

/// `points` ratios log-spaced over `[1e-2, 1]`, ending at 1.
pub fn lambda_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        p => (0..p)
            .map(|i| if i + 1 == p { 1.0 } else { 10f64.powf(-2.0 + 2.0 * i as f64 / (p - 1) as f64) })
            .collect(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn factor_shape(&self) -> Result<SukroShape, ConfigError> {
        let shape = match self.shape {
            Some([n1, n2, k1, k2]) => SukroShape::new(n1, n2, k1, k2),
            None => SukroShape::square(self.n, self.k),
        }
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if shape.nrows() != self.n || shape.ncols() != self.k {
            return Err(ConfigError::Invalid(format!(
                "shape {:?} does not factor a {}x{} dictionary",
                self.shape, self.n, self.k
            )));
        }
        Ok(shape)
    }

    pub fn switch_config(&self) -> SwitchConfig {
        SwitchConfig {
            gamma_threshold: self.gamma,
            screening_interval: self.screen_interval,
            tolerance: self.tol,
            max_iter: self.max_iter,
            precompute_aty: self.precompute_aty,
            solver: self.solver,
            rule: self.rule,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n == 0 || self.k == 0 {
            return bad("n and k must be positive".into());
        }
        self.factor_shape()?;
        if self.lambda_ratios.is_empty() {
            return bad("empty lambda grid".into());
        }
        if let Some(r) = self.lambda_ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return bad(format!("lambda ratio {r} outside (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.bernoulli_p) {
            return bad(format!("bernoulli_p {} outside [0, 1]", self.bernoulli_p));
        }
        if self.trials == 0 || self.jobs == 0 {
            return bad("trials and jobs must be positive".into());
        }
        if let Some(rc) = &self.rc_override {
            if rc.len() != self.ranks.len() {
                return bad(format!("{} RC overrides for {} ranks", rc.len(), self.ranks.len()));
            }
        }
        self.switch_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_the_unit_decades() {
        let g = lambda_grid(10);
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[9], 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lambda_grid(1), vec![1.0]);
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let cfg = ExperimentConfig { rule: Rule::Dynamic, scenario: Scenario::Hard, ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"rule\":\"dynamic\""));
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);

        let partial = ExperimentConfig::from_json(r#"{"n": 36, "k": 100, "solver": "ista"}"#).unwrap();
        assert_eq!(partial.n, 36);
        assert_eq!(partial.solver, SolverKind::Ista);
        assert_eq!(partial.tol, 1e-5);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_json(r#"{"nonsense": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"rule": "nope"}"#).is_err());
        let mut cfg = ExperimentConfig { n: 36, k: 100, ..Default::default() };
        assert!(cfg.validate().is_ok());
        cfg.lambda_ratios = vec![0.5, 1.5];
        assert!(cfg.validate().is_err());
        cfg.lambda_ratios = vec![0.5];
        cfg.n = 35;
        assert!(cfg.validate().is_err());
        cfg.n = 36;
        cfg.gamma = 1.0;
        assert!(cfg.validate().is_err());
    }
}
