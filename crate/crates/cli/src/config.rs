use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cnts_core::data::{load_series_csv, BenchmarkSpec};
use cnts_core::{Role, TimeSeries, TrainConfig, TrainMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Where the series come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// One unlabeled training series and any number of labeled test series.
    Files {
        train: PathBuf,
        #[serde(default)]
        test: Vec<PathBuf>,
        /// Labeled series observed after every pass; never trained on.
        #[serde(default)]
        monitor: Option<PathBuf>,
    },
    /// Generated train/test pair.
    Synth {
        #[serde(default)]
        benchmark: BenchmarkSpec,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Dataset name used in report aggregates.
    pub dataset: String,
    pub stride: usize,
    /// Record labeled metrics on the first test series after every pass.
    pub monitor_test: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            dataset: "default".into(),
            stride: 1,
            monitor_test: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default = "default_mode")]
    pub mode: TrainMode,
    pub data: DataSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalOptions,
    /// Root holding run directories; `CNTS_RUNS_DIR` and `--out` take precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_mode() -> TrainMode {
    TrainMode::Cnts
}

/// Flag values layered over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<TrainMode>,
    pub out: Option<PathBuf>,
}

pub struct Dataset {
    pub train: TimeSeries,
    pub test: Vec<TimeSeries>,
    pub monitor: Option<TimeSeries>,
}

impl ExperimentConfig {
    /// Reads a config; relative data paths resolve against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cnts_core::CntsError::io(path, e))
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let DataSpec::Files {
            train,
            test,
            monitor,
        } = &mut cfg.data
        {
            for p in std::iter::once(train)
                .chain(test.iter_mut())
                .chain(monitor.iter_mut())
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if let Some(out) = &mut cfg.out_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.train.seed = seed;
            if let DataSpec::Synth { seed: s, .. } = &mut self.data {
                *s = seed;
            }
        }
        if let Some(mode) = o.mode {
            self.mode = mode;
        }
    }

    pub fn run_id(&self) -> String {
        self.run_id
            .clone()
            .unwrap_or_else(|| format!("{}-seed{}", self.mode.as_str(), self.train.seed))
    }

    /// Run root: `--out`, then `CNTS_RUNS_DIR`, then the config's `out_dir`, then `runs`.
    pub fn runs_root(&self, o: &Overrides) -> PathBuf {
        o.out
            .clone()
            .or_else(|| std::env::var_os("CNTS_RUNS_DIR").map(PathBuf::from))
            .or_else(|| self.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        check_run_id(&self.run_id())?;
        self.train.validate()?;
        if self.eval.stride == 0 {
            bail!(cnts_core::CntsError::Config(
                "eval stride must be at least 1".into()
            ));
        }
        if let DataSpec::Files {
            train,
            test,
            monitor,
        } = &self.data
        {
            for p in std::iter::once(train).chain(test).chain(monitor) {
                if !p.is_file() {
                    bail!(cnts_core::CntsError::Validation(format!(
                        "dataset file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the JSON encoding without the output location.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let json = serde_json::to_string(&c).expect("config is serialisable");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn load_data(&self) -> anyhow::Result<Dataset> {
        match &self.data {
            DataSpec::Files {
                train,
                test,
                monitor,
            } => {
                let train = load_series_csv(train, Role::Train)?;
                let test = test
                    .iter()
                    .map(|p| load_series_csv(p, Role::Test))
                    .collect::<Result<Vec<_>, _>>()?;
                let monitor = monitor
                    .as_ref()
                    .map(|p| load_series_csv(p, Role::Test))
                    .transpose()?;
                Ok(Dataset {
                    train,
                    test,
                    monitor,
                })
            }
            DataSpec::Synth { benchmark, seed } => {
                let (train, test) = benchmark.generate(*seed)?;
                Ok(Dataset {
                    train,
                    test: vec![test],
                    monitor: None,
                })
            }
        }
    }
}

fn check_run_id(id: &str) -> anyhow::Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "._-".contains(c));
    if !ok {
        bail!(cnts_core::CntsError::Config(format!(
            "run id {id:?} must be non-empty and use only letters, digits, '.', '_' or '-'"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth() -> ExperimentConfig {
        serde_json::from_str(r#"{"data": {"kind": "synth"}}"#).unwrap()
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = synth();
        assert_eq!(c.mode, TrainMode::Cnts);
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.run_id(), "cnts-seed0");
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"data": {"kind": "synth"}, "trian": {}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn seed_flag_reaches_training_and_generator() {
        let mut c = synth();
        c.apply(&Overrides {
            seed: Some(7),
            mode: Some(TrainMode::BaselineR),
            out: None,
        });
        assert_eq!(c.train.seed, 7);
        assert!(matches!(c.data, DataSpec::Synth { seed: 7, .. }));
        assert_eq!(c.run_id(), "baseline_r-seed7");
    }

    #[test]
    fn unsafe_run_ids() {
        for id in ["", "..", "a/b", "x y"] {
            assert!(check_run_id(id).is_err(), "{id:?}");
        }
        check_run_id("nab-art_1.v2").unwrap();
    }

    #[test]
    fn digest_ignores_output_root() {
        let a = synth();
        let b = ExperimentConfig {
            out_dir: Some("elsewhere".into()),
            ..a.clone()
        };
        assert_eq!(a.digest(), b.digest());
        let c = ExperimentConfig {
            run_id: Some("other".into()),
            ..a.clone()
        };
        assert_ne!(a.digest(), c.digest());
    }
}
