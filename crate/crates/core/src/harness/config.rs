use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optimize::{Method, DEFAULT_BUDGET};
use crate::spectrum::DEFAULT_GRID_POINTS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProblemClass {
    #[serde(rename = "qubo_random")]
    QuboRandom,
    #[serde(rename = "maxcut_3reg_unweighted")]
    MaxCutUnweighted,
    #[serde(rename = "maxcut_3reg_weighted")]
    MaxCutWeighted,
}

impl ProblemClass {
    pub fn name(self) -> &'static str {
        match self {
            ProblemClass::QuboRandom => "qubo_random",
            ProblemClass::MaxCutUnweighted => "maxcut_3reg_unweighted",
            ProblemClass::MaxCutWeighted => "maxcut_3reg_weighted",
        }
    }

    pub fn is_maxcut(self) -> bool {
        !matches!(self, ProblemClass::QuboRandom)
    }
}

impl std::fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_learn_n() -> usize {
    8
}
fn default_unit_range() -> (f64, f64) {
    (-1.0, 1.0)
}
fn default_learn_instances() -> usize {
    500
}
fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

/// Random-QUBO ensemble whose gap profiles are learned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningConfig {
    #[serde(default = "default_learn_n")]
    pub n: usize,
    #[serde(default = "default_unit_range")]
    pub coeff_range: (f64, f64),
    #[serde(default = "default_learn_instances")]
    pub instances: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub mean_degree: usize,
    pub median_degree: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            mean_degree: 3,
            median_degree: 7,
        }
    }
}

fn default_bench_n() -> usize {
    12
}
fn default_bench_instances() -> usize {
    20
}
fn default_p_range() -> (usize, usize) {
    (1, 6)
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_qubo_range() -> (f64, f64) {
    (-100.0, 100.0)
}
fn default_weight_range() -> (f64, f64) {
    (0.0, 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub problem_class: ProblemClass,
    #[serde(default = "default_bench_n")]
    pub n: usize,
    #[serde(default = "default_bench_instances")]
    pub instances: usize,
    /// Inclusive depth range.
    #[serde(default = "default_p_range")]
    pub p_range: (usize, usize),
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    pub seed: u64,
    /// QUBO coefficient sampling range.
    #[serde(default = "default_qubo_range")]
    pub coeff_range: (f64, f64),
    /// Edge weight range for weighted MaxCut.
    #[serde(default = "default_weight_range")]
    pub weight_range: (f64, f64),
}

impl BenchmarkConfig {
    pub fn depths(&self) -> std::ops::RangeInclusive<usize> {
        self.p_range.0..=self.p_range.1
    }
}

/// One experiment: a learning phase, a benchmark phase, or both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub learning: Option<LearningConfig>,
    #[serde(default)]
    pub curves: CurveConfig,
    #[serde(default)]
    pub benchmark: Option<BenchmarkConfig>,
    /// Relative paths are taken from the directory holding the config file.
    pub output_dir: PathBuf,
    /// Worker threads for parallel sweeps; all available cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// SHA-256 of the canonical JSON form; independent of file location.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(l) = &self.learning {
            if l.n < 1 || l.instances < 1 {
                return bad("learning: n and instances must be at least 1".into());
            }
            if l.grid_points < 2 {
                return bad("learning: grid_points must be at least 2".into());
            }
            if !(l.coeff_range.0 < l.coeff_range.1) {
                return bad(format!("learning: empty coeff_range {:?}", l.coeff_range));
            }
        }
        if self.curves.mean_degree < 1 || self.curves.median_degree < 1 {
            return bad("curves: degrees must be at least 1".into());
        }
        if let Some(b) = &self.benchmark {
            if b.n < 1 || b.instances < 1 {
                return bad("benchmark: n and instances must be at least 1".into());
            }
            if b.p_range.0 < 1 || b.p_range.0 > b.p_range.1 {
                return bad(format!("benchmark: bad p_range {:?}", b.p_range));
            }
            if b.methods.is_empty() {
                return bad("benchmark: no methods".into());
            }
            if b.budget < 1 {
                return bad("benchmark: budget must be at least 1".into());
            }
            if !(b.coeff_range.0 < b.coeff_range.1) {
                return bad(format!("benchmark: empty coeff_range {:?}", b.coeff_range));
            }
            if !(0.0 <= b.weight_range.0 && b.weight_range.0 < b.weight_range.1) {
                return bad(format!("benchmark: bad weight_range {:?}", b.weight_range));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }
}
