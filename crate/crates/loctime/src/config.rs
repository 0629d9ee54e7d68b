//! Flat key=value experiment configuration.
//!
//! A config file is a sequence of `key = value` lines (`#` starts a
//! comment). Every key can also be set from the command line; a flag wins
//! over the file. The only environment variable consulted is `LOCTIME_OUT`,
//! which overrides the default output directory when neither a flag nor a
//! config entry names one.

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const EXPERIMENT_IDS: [&str; 9] = [
    "identities",
    "laws",
    "limits",
    "sheet",
    "couple-eta",
    "couple-sheet",
    "splice",
    "audits",
    "lil",
];

#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
    params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Result<Self> {
        if !EXPERIMENT_IDS.contains(&experiment) {
            return Err(Error::UnknownExperiment(experiment.to_string()));
        }
        Ok(Self {
            experiment: experiment.to_string(),
            seed: crate::experiments::DEFAULT_SEED,
            out_dir: default_out_dir(),
            workers: 0,
            params: BTreeMap::new(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let experiment = map
            .remove("experiment")
            .ok_or_else(|| Error::Config("missing required key `experiment`".into()))?;
        let mut cfg = Self::new(&experiment)?;
        if let Some(seed) = map.remove("seed") {
            cfg.seed = parse_u64("seed", &seed)?;
        }
        if let Some(out) = map.remove("out") {
            cfg.out_dir = PathBuf::from(out);
        }
        if let Some(w) = map.remove("workers") {
            cfg.workers = parse_u64("workers", &w)? as usize;
        }
        cfg.params = map;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply a `key=value` override (command-line flags win over the file).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                if !EXPERIMENT_IDS.contains(&value) {
                    return Err(Error::UnknownExperiment(value.to_string()));
                }
                self.experiment = value.to_string();
            }
            "seed" => self.seed = parse_u64("seed", value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "workers" => self.workers = parse_u64("workers", value)? as usize,
            _ => {
                self.params.insert(key.to_string(), value.to_string());
            }
        }
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        for (k, v) in &self.params {
            if let Ok(x) = v.parse::<i64>() {
                if x < 0 {
                    return Err(Error::Config(format!("{} must be nonnegative", k)));
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => parse_u64(key, v),
        }
    }

    pub fn get_u32(&self, key: &str, default: u32) -> Result<u32> {
        Ok(self.get_u64(key, default as u64)? as u32)
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}: not a number: {}", key, v))),
        }
    }

    /// Comma-separated integer list.
    pub fn get_list(&self, key: &str, default: &[i64]) -> Result<Vec<i64>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Config(format!("{}: bad list entry {}", key, p)))
                })
                .collect(),
        }
    }
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Config(format!("{}: expected an unsigned integer, got {}", key, value)))
}

pub fn default_out_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("LOCTIME_OUT") {
        PathBuf::from(dir)
    } else {
        PathBuf::from("loctime-out")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parse_file_and_overrides() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            "# demo\nexperiment = identities\nseed = 7\nreps = 100 # inline comment\nk_max = 4"
        )
        .unwrap();
        let mut cfg = ExperimentConfig::from_file(file.path()).unwrap();
        assert_eq!(cfg.experiment, "identities");
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.get_u64("reps", 0).unwrap(), 100);
        assert_eq!(cfg.get_u64("k_max", 0).unwrap(), 4);
        cfg.set("seed", "9").unwrap();
        cfg.set("reps", "50").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.get_u64("reps", 0).unwrap(), 50);
        assert_eq!(cfg.get_u64("missing", 3).unwrap(), 3);
    }

    #[test]
    fn rejects_unknown_experiment_and_bad_values() {
        assert!(matches!(
            ExperimentConfig::new("nope"),
            Err(Error::UnknownExperiment(_))
        ));
        let mut cfg = ExperimentConfig::new("lil").unwrap();
        assert!(cfg.set("seed", "abc").is_err());
        assert!(cfg.set("reps", "-3").is_err());
    }

    #[test]
    fn list_parsing() {
        let mut cfg = ExperimentConfig::new("laws").unwrap();
        cfg.set("k_list", "1, 2, 5").unwrap();
        assert_eq!(cfg.get_list("k_list", &[9]).unwrap(), vec![1, 2, 5]);
        assert_eq!(cfg.get_list("other", &[9]).unwrap(), vec![9]);
    }
}
