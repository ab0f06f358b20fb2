use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classifier::ModelParams;
use crate::codebook::{DEFAULT_CLUSTERS, DEFAULT_RUNS};
use crate::error::{Error, Result};
use crate::kv;
use crate::sha::ShaParams;
use crate::skeleton::{load_dataset, Dataset, DatasetFormat, JointMap, LoadReport, NamingPattern};
use crate::skeletonlet::DEFAULT_TAU;

pub const DEFAULT_EPSILON: usize = 20;
pub const DEFAULT_TRAIN_SUBJECTS: [u32; 5] = [1, 3, 5, 7, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    CrossSubject,
    LeaveOneSubjectOut,
    /// First half of every class's sequences train, the rest test.
    ClassHalf,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross-subject" | "cs" => Ok(Protocol::CrossSubject),
            "leave-one-subject-out" | "loso" => Ok(Protocol::LeaveOneSubjectOut),
            "class-half" => Ok(Protocol::ClassHalf),
            other => Err(Error::Config(format!(
                "unknown protocol `{other}` (expected cross-subject, loso or class-half)"
            ))),
        }
    }
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::CrossSubject => "cross-subject",
            Protocol::LeaveOneSubjectOut => "leave-one-subject-out",
            Protocol::ClassHalf => "class-half",
        }
    }
}

/// Dataset presets; each only fixes the noisy-frame threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Msra,
    UtKinect,
    Florence,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msra" | "msraction3d" => Ok(Preset::Msra),
            "utkinect" | "utkinectaction3d" => Ok(Preset::UtKinect),
            "florence" | "florence3daction" => Ok(Preset::Florence),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

impl Preset {
    pub fn epsilon(self) -> usize {
        match self {
            Preset::Msra => 30,
            Preset::UtKinect | Preset::Florence => 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub format: DatasetFormat,
    pub joint_map: Option<PathBuf>,
    pub naming_pattern: String,
    pub protocol: Protocol,
    pub train_subjects: Vec<u32>,
    pub model: ModelParams,
    pub out: Option<PathBuf>,
    pub report: ReportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            format: DatasetFormat::Canonical,
            joint_map: None,
            naming_pattern: NamingPattern::DEFAULT.to_string(),
            protocol: Protocol::CrossSubject,
            train_subjects: DEFAULT_TRAIN_SUBJECTS.to_vec(),
            model: ModelParams {
                sha: ShaParams::default(),
                clusters: DEFAULT_CLUSTERS,
                runs: DEFAULT_RUNS,
                tau: DEFAULT_TAU,
                epsilon: DEFAULT_EPSILON,
            },
            out: None,
            report: ReportFormat::Text,
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{value}`")))
}

/// Every key accepted by [`RunConfig::set`].
pub const KEYS: &[&str] = &[
    "dataset",
    "format",
    "joint_map",
    "naming_pattern",
    "protocol",
    "train_subjects",
    "preset",
    "lambda1",
    "lambda2",
    "lambda3",
    "mu0",
    "rho",
    "mu_max",
    "code_len",
    "atoms",
    "max_iter",
    "tol",
    "ridge",
    "dcc_sweeps",
    "seed",
    "clusters",
    "runs",
    "tau",
    "epsilon",
    "out",
    "report",
];

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.model;
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "joint_map" => self.joint_map = Some(PathBuf::from(value)),
            "naming_pattern" => {
                NamingPattern::new(value)?;
                self.naming_pattern = value.to_string();
            }
            "protocol" => self.protocol = value.parse()?,
            "train_subjects" => {
                self.train_subjects = value
                    .split(',')
                    .map(|s| number(key, s.trim()))
                    .collect::<Result<Vec<u32>>>()?;
            }
            "preset" => m.epsilon = value.parse::<Preset>()?.epsilon(),
            "lambda1" => m.sha.lambda1 = number(key, value)?,
            "lambda2" => m.sha.lambda2 = number(key, value)?,
            "lambda3" => m.sha.lambda3 = number(key, value)?,
            "mu0" => m.sha.mu0 = number(key, value)?,
            "rho" => m.sha.rho = number(key, value)?,
            "mu_max" => m.sha.mu_max = number(key, value)?,
            "code_len" => m.sha.code_len = number(key, value)?,
            "atoms" => m.sha.atoms = number(key, value)?,
            "max_iter" => m.sha.max_iter = number(key, value)?,
            "tol" => m.sha.tol = number(key, value)?,
            "ridge" => m.sha.ridge = number(key, value)?,
            "dcc_sweeps" => m.sha.dcc_sweeps = number(key, value)?,
            "seed" => m.sha.seed = number(key, value)?,
            "clusters" => m.clusters = number(key, value)?,
            "runs" => m.runs = number(key, value)?,
            "tau" => m.tau = number(key, value)?,
            "epsilon" => m.epsilon = number(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "report" => self.report = value.parse()?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; problems are reported against its lines.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = kv::parse(&text, path).map_err(|e| Error::Config(e.to_string()))?;
        for entry in entries {
            self.set(&entry.key, &entry.value)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), entry.line)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.sha.validate()?;
        let m = &self.model;
        if m.clusters == 0 || m.runs == 0 {
            return Err(Error::Config("clusters and runs must be at least 1".into()));
        }
        if m.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if self.protocol == Protocol::CrossSubject && self.train_subjects.is_empty() {
            return Err(Error::Config("cross-subject protocol needs train_subjects".into()));
        }
        Ok(())
    }

    pub fn load_joint_map(&self) -> Result<JointMap> {
        match (&self.joint_map, self.format) {
            (Some(path), _) => JointMap::load(path),
            (None, DatasetFormat::MsrLike) => Ok(JointMap::msr20()),
            (None, DatasetFormat::Canonical) => Ok(JointMap::identity()),
        }
    }

    pub fn load_dataset(&self) -> Result<(Dataset, LoadReport)> {
        let dir = self
            .dataset
            .as_ref()
            .ok_or_else(|| Error::Config("no dataset given (use --dataset or `dataset =`)".into()))?;
        let naming = NamingPattern::new(&self.naming_pattern)?;
        load_dataset(dir, self.format, &self.load_joint_map()?, &naming)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let c = RunConfig::default();
        let s = &c.model.sha;
        assert_eq!((s.lambda1, s.lambda2, s.lambda3), (1.0, 1.0, 1e-3));
        assert_eq!((s.code_len, s.atoms), (32, 64));
        assert_eq!((c.model.tau, c.model.runs, c.model.clusters), (2, 5, 23));
        assert_eq!(c.train_subjects, vec![1, 3, 5, 7, 9]);
        c.validate().unwrap();
    }

    #[test]
    fn presets() {
        let eps: Vec<usize> = ["msra", "utkinect", "florence"]
            .iter()
            .map(|p| p.parse::<Preset>().unwrap().epsilon())
            .collect();
        assert_eq!(eps, vec![30, 20, 20]);
    }

    #[test]
    fn file_then_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# run\nlambda1 = 0.5\nprotocol = loso\ntrain_subjects = 2, 4\npreset = msra\n").unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&path).unwrap();
        assert_eq!(c.model.sha.lambda1, 0.5);
        assert_eq!(c.protocol, Protocol::LeaveOneSubjectOut);
        assert_eq!(c.train_subjects, vec![2, 4]);
        assert_eq!(c.model.epsilon, 30);
        c.set("lambda1", "2").unwrap();
        assert_eq!(c.model.sha.lambda1, 2.0);
    }

    #[test]
    fn bad_entries_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfg");
        std::fs::write(&path, "lambda1 = 1\ncode_len = many\n").unwrap();
        let err = RunConfig::default().apply_file(&path).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains(":2:"), "{err}");
        assert!(RunConfig::default().set("nonsense", "1").is_err());
        let mut c = RunConfig::default();
        c.set("lambda2", "-1").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        for key in KEYS {
            let value = match *key {
                "format" => "canonical",
                "protocol" => "loso",
                "preset" => "florence",
                "report" => "json",
                "naming_pattern" => "(?P<action>\\d+)",
                "train_subjects" => "1,2",
                _ => "3",
            };
            RunConfig::default().set(key, value).unwrap();
        }
    }
}
