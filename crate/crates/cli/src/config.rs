//! Scenario files: TOML with angles in degrees.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

use priorwave_core::{AdmmConfig, ArrayConfig, MomentOptions, TargetDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pcrb,
    PsbpFair,
    PsbpInt,
    Crb,
    Omni,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pcrb => "pcrb",
            Method::PsbpFair => "psbp-fair",
            Method::PsbpInt => "psbp-int",
            Method::Crb => "crb",
            Method::Omni => "omni",
        }
    }

    pub fn uses_kappa(self) -> bool {
        self != Method::Omni
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub m_t: usize,
    pub m_r: usize,
    pub l_samples: usize,
    #[serde(default = "one")]
    pub power: f64,
    #[serde(default = "one")]
    pub noise_power: f64,
    #[serde(default = "half")]
    pub spacing: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    MixtureUniform,
    MixtureGaussian,
    PointMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSection {
    pub kind: DistributionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals_deg: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means_deg: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0_deg: Option<f64>,
    /// Half-width of the edge taper used for the prior information of
    /// uniform mixtures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_smoothing_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub methods: Vec<Method>,
    pub kappa_list: Vec<f64>,
    #[serde(default)]
    pub snr_list_db: Vec<f64>,
    #[serde(default)]
    pub n_trials: usize,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_moment_grid")]
    pub moment_grid_size: usize,
    /// Angle for the known-angle baseline; defaults to the first prior mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crb_theta0_deg: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn default_grid() -> usize {
    361
}

fn default_moment_grid() -> usize {
    2001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub array: ArraySection,
    pub distribution: DistributionSection,
    pub run: RunSection,
    #[serde(default)]
    pub admm: AdmmConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path.display(), l, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') && line.ends_with(']') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    section_line
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        let cfg = Self::parse(&text, path)?;
        Ok((cfg, text))
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.check().map_err(|(section, key, message)| ConfigError {
            path: path.to_path_buf(),
            line: locate(text, section, key),
            message,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Semantic checks, reporting `(section, key, message)`.
    fn check(&self) -> Result<(), (&'static str, &'static str, String)> {
        let run = &self.run;
        if run.methods.is_empty() {
            return Err(("run", "methods", "at least one method is required".into()));
        }
        if run.kappa_list.is_empty() && run.methods.iter().any(|m| m.uses_kappa()) {
            return Err(("run", "kappa_list", "kappa_list must not be empty".into()));
        }
        if let Some(k) = run.kappa_list.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
            return Err(("run", "kappa_list", format!("PAPR bound {k} must be >= 1")));
        }
        if run.grid_size < 2 {
            return Err(("run", "grid_size", "grid_size must be at least 2".into()));
        }
        if run.n_trials > 0 && run.snr_list_db.is_empty() {
            return Err(("run", "snr_list_db", "snr_list_db is empty but n_trials > 0".into()));
        }
        if let Some(t) = run.crb_theta0_deg {
            if !(t.abs() <= 90.0) {
                return Err(("run", "crb_theta0_deg", format!("angle {t} outside [-90, 90]")));
            }
        }
        let array = self.array_config(self.run.kappa_list.first().copied().unwrap_or(1.0));
        array.validate().map_err(|e| ("array", "m_t", e.to_string()))?;
        self.admm.validate().map_err(|e| ("admm", "rho", e.to_string()))?;
        let dist = self.distribution().map_err(|(k, m)| ("distribution", k, m))?;
        self.moment_options().map_err(|(k, m)| ("distribution", k, m))?;
        if run.methods.contains(&Method::Omni) && self.array.l_samples < self.array.m_t {
            return Err(("array", "l_samples", "omni baseline needs l_samples >= m_t".into()));
        }
        if run.methods.contains(&Method::Crb) {
            priorwave_core::array::check_angle(self.crb_theta0(&dist)).map_err(|e| ("run", "crb_theta0_deg", e.to_string()))?;
        }
        Ok(())
    }

    pub fn array_config(&self, kappa: f64) -> ArrayConfig {
        ArrayConfig {
            m_t: self.array.m_t,
            m_r: self.array.m_r,
            spacing: self.array.spacing,
            l_samples: self.array.l_samples,
            power: self.array.power,
            papr: kappa,
            noise_power: self.array.noise_power,
        }
    }

    pub fn distribution(&self) -> Result<TargetDistribution, (&'static str, String)> {
        let d = &self.distribution;
        let missing = |k: &'static str| (k, format!("{k} is required for this distribution kind"));
        let weights = || d.weights.clone().ok_or_else(|| missing("weights"));
        let built = match d.kind {
            DistributionKind::MixtureUniform => {
                let intervals = d
                    .intervals_deg
                    .as_ref()
                    .ok_or_else(|| missing("intervals_deg"))?
                    .iter()
                    .map(|[a, b]| (a.to_radians(), b.to_radians()))
                    .collect();
                TargetDistribution::uniform(intervals, weights()?).map_err(|e| ("intervals_deg", e.to_string()))
            }
            DistributionKind::MixtureGaussian => {
                let means = d
                    .means_deg
                    .as_ref()
                    .ok_or_else(|| missing("means_deg"))?
                    .iter()
                    .map(|m| m.to_radians())
                    .collect();
                let sigma = d.sigma_deg.ok_or_else(|| missing("sigma_deg"))?.to_radians();
                TargetDistribution::gaussian(means, sigma, weights()?).map_err(|e| ("means_deg", e.to_string()))
            }
            DistributionKind::PointMass => {
                let t = d.theta0_deg.ok_or_else(|| missing("theta0_deg"))?;
                TargetDistribution::point_mass(t.to_radians()).map_err(|e| ("theta0_deg", e.to_string()))
            }
        }?;
        Ok(built)
    }

    pub fn moment_options(&self) -> Result<MomentOptions, (&'static str, String)> {
        let mut opts = MomentOptions {
            grid_size: self.run.moment_grid_size,
            lambda_override: self.distribution.lambda_override,
            ..MomentOptions::default()
        };
        if let Some(w) = self.distribution.edge_smoothing_deg {
            if !(w > 0.0) {
                return Err(("edge_smoothing_deg", "edge_smoothing_deg must be positive".into()));
            }
            opts.edge_half_width = w.to_radians();
        }
        if let Some(l) = opts.lambda_override {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(("lambda_override", "lambda_override must be >= 0".into()));
            }
        }
        if opts.grid_size < priorwave_core::distribution::MIN_MOMENT_GRID {
            return Err((
                "moment_grid_size",
                format!(
                    "moment_grid_size must be at least {}",
                    priorwave_core::distribution::MIN_MOMENT_GRID
                ),
            ));
        }
        Ok(opts)
    }

    pub fn crb_theta0(&self, dist: &TargetDistribution) -> f64 {
        match self.run.crb_theta0_deg {
            Some(t) => t.to_radians(),
            None => dist.modes()[0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "sample"

[array]
m_t = 8
m_r = 8
l_samples = 25

[distribution]
kind = "mixture-uniform"
intervals_deg = [[-10.0, 10.0]]
weights = [1.0]

[run]
methods = ["pcrb", "omni"]
kappa_list = [1.2, 2.0]
snr_list_db = [0.0, 10.0]
n_trials = 10
output_dir = "out"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::parse(SAMPLE, Path::new("s.cfg")).unwrap();
        assert_eq!(cfg.run.grid_size, 361);
        assert_eq!(cfg.array.spacing, 0.5);
        let again = ScenarioConfig::parse(&cfg.to_toml(), Path::new("s.cfg")).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn semantic_error_points_at_line() {
        let bad = SAMPLE.replace("kappa_list = [1.2, 2.0]", "kappa_list = [0.5]");
        let err = ScenarioConfig::parse(&bad, Path::new("s.cfg")).unwrap_err();
        let want = bad.lines().position(|l| l.starts_with("kappa_list")).unwrap() + 1;
        assert_eq!(err.line, Some(want));
    }

    #[test]
    fn syntax_error_points_at_line() {
        let bad = SAMPLE.replace("m_r = 8", "m_r = ");
        let err = ScenarioConfig::parse(&bad, Path::new("s.cfg")).unwrap_err();
        let want = bad.lines().position(|l| l.starts_with("m_r")).unwrap() + 1;
        assert_eq!(err.line, Some(want));
    }

    #[test]
    fn unknown_method_rejected() {
        let bad = SAMPLE.replace("\"omni\"", "\"sca\"");
        assert!(ScenarioConfig::parse(&bad, Path::new("s.cfg")).is_err());
    }

    #[test]
    fn missing_distribution_field_reported() {
        let bad = SAMPLE.replace("weights = [1.0]\n", "");
        let err = ScenarioConfig::parse(&bad, Path::new("s.cfg")).unwrap_err();
        assert!(err.message.contains("weights"));
    }
}
