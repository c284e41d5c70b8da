//! Pipeline settings: built-in defaults, the key=value settings file, and
//! environment and flag overrides.
//!
//! Resolution order per setting is command-line flag, then the HS_DATA_DIR
//! environment variable (data root only), then the settings file, then the
//! default. The merged result is validated once, before any stage touches
//! the disk, so a bad setting never leaves partial artifacts behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Datelike, NaiveDate, Weekday};

/// Severity model run by the `classify` stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classifier {
    Svm,
    Knn,
    Mlp,
}

impl Classifier {
    pub fn name(self) -> &'static str {
        match self {
            Classifier::Svm => "svm",
            Classifier::Knn => "knn",
            Classifier::Mlp => "mlp",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Classifier::Svm),
            "knn" => Ok(Classifier::Knn),
            "mlp" => Ok(Classifier::Mlp),
            other => bail!("unknown classifier {other:?}, expected svm, knn or mlp"),
        }
    }
}

/// Every knob of the pipeline. One instance drives all stages, and the
/// report echoes it verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub participants: usize,
    pub weeks: u32,
    /// First day of week 0. Weeks run Saturday through Friday.
    pub start_date: NaiveDate,
    pub noise_cutoff_hz: f64,
    pub gravity_cutoff_hz: f64,
    pub har_windows_per_class: usize,
    pub har_epochs: usize,
    pub har_batch_size: usize,
    pub har_learning_rate: f64,
    /// Additive smoothing of the sentiment model.
    pub nb_gamma: f64,
    /// Regression penalty grid; `None` means the automatic log-spaced grid.
    pub lambda_grid: Option<Vec<f64>>,
    pub lasso_folds: usize,
    pub classifier: Classifier,
    pub svm_c: f64,
    /// Kernel width; `None` means the median-distance heuristic.
    pub svm_gamma: Option<f64>,
    pub knn_k: usize,
    pub mlp_hidden: (usize, usize),
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    pub mlp_learning_rate: f64,
    /// Root directory holding every pipeline artifact.
    pub data_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            participants: 33,
            weeks: 8,
            start_date: NaiveDate::from_ymd_opt(2019, 4, 6).expect("valid date"),
            noise_cutoff_hz: 5.0,
            gravity_cutoff_hz: 0.3,
            har_windows_per_class: 600,
            har_epochs: 12,
            har_batch_size: 10,
            har_learning_rate: 0.05,
            nb_gamma: 1.0,
            lambda_grid: None,
            lasso_folds: 5,
            classifier: Classifier::Svm,
            svm_c: 10.0,
            svm_gamma: None,
            knn_k: 5,
            mlp_hidden: (64, 32),
            mlp_epochs: 300,
            mlp_batch_size: 10,
            mlp_learning_rate: 0.3,
            data_dir: PathBuf::from("./data"),
        }
    }
}

impl PipelineConfig {
    /// Merges defaults, the optional settings file, the HS_DATA_DIR
    /// override and the flags, then validates the result.
    pub fn resolve(
        file: Option<&Path>,
        env_data_dir: Option<PathBuf>,
        data_dir: Option<PathBuf>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading settings file {}", path.display()))?;
            cfg.apply_file(&text, path)?;
        }
        if let Some(dir) = env_data_dir {
            cfg.data_dir = dir;
        }
        if let Some(dir) = data_dir {
            cfg.data_dir = dir;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, text: &str, path: &Path) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| format!("{} line {}: {msg}", path.display(), i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!(at(format!("expected key=value, got {line:?}"))))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                bail!(at(format!("duplicate key {key:?}")));
            }
            self.set(key, value).map_err(|e| anyhow::anyhow!(at(e.to_string())))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow::anyhow!("bad value {value:?} for {key}: {e}"))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "participants" => self.participants = num(key, value)?,
            "weeks" => self.weeks = num(key, value)?,
            "start_date" => {
                self.start_date = NaiveDate::parse_from_str(value, "%Y-%m-%d")
                    .map_err(|e| anyhow::anyhow!("bad value {value:?} for {key}: {e}"))?
            }
            "noise_cutoff_hz" => self.noise_cutoff_hz = num(key, value)?,
            "gravity_cutoff_hz" => self.gravity_cutoff_hz = num(key, value)?,
            "har_windows_per_class" => self.har_windows_per_class = num(key, value)?,
            "har_epochs" => self.har_epochs = num(key, value)?,
            "har_batch_size" => self.har_batch_size = num(key, value)?,
            "har_learning_rate" => self.har_learning_rate = num(key, value)?,
            "nb_gamma" => self.nb_gamma = num(key, value)?,
            "lambda_grid" => {
                self.lambda_grid = if value == "auto" {
                    None
                } else {
                    let grid = value
                        .split(',')
                        .map(|v| num::<f64>(key, v.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    Some(grid)
                }
            }
            "lasso_folds" => self.lasso_folds = num(key, value)?,
            "classifier" => self.classifier = Classifier::parse(value)?,
            "svm_c" => self.svm_c = num(key, value)?,
            "svm_gamma" => {
                self.svm_gamma = if value == "median" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "knn_k" => self.knn_k = num(key, value)?,
            "mlp_hidden" => {
                let (a, b) = value.split_once(',').ok_or_else(|| {
                    anyhow::anyhow!("bad value {value:?} for {key}: expected two widths like 64,32")
                })?;
                self.mlp_hidden = (num(key, a.trim())?, num(key, b.trim())?);
            }
            "mlp_epochs" => self.mlp_epochs = num(key, value)?,
            "mlp_batch_size" => self.mlp_batch_size = num(key, value)?,
            "mlp_learning_rate" => self.mlp_learning_rate = num(key, value)?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            other => bail!("unknown setting {other:?}"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.participants < 3 {
            bail!(
                "participants = {} needs at least one participant per severity stratum (3)",
                self.participants
            );
        }
        if self.weeks == 0 {
            bail!("weeks must be at least 1");
        }
        if self.start_date.weekday() != Weekday::Sat {
            bail!(
                "start_date {} is a {}; weeks run Saturday through Friday",
                self.start_date,
                self.start_date.weekday()
            );
        }
        let finite_pos = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                bail!("{name} = {v} must be a positive finite number")
            }
        };
        finite_pos("noise_cutoff_hz", self.noise_cutoff_hz)?;
        finite_pos("gravity_cutoff_hz", self.gravity_cutoff_hz)?;
        if self.gravity_cutoff_hz >= self.noise_cutoff_hz {
            bail!(
                "gravity_cutoff_hz = {} must sit below noise_cutoff_hz = {}",
                self.gravity_cutoff_hz,
                self.noise_cutoff_hz
            );
        }
        let nyquist = hscreen_core::signal::TARGET_RATE_HZ / 2.0;
        if self.noise_cutoff_hz >= nyquist {
            bail!(
                "noise_cutoff_hz = {} must sit below the Nyquist rate {nyquist}",
                self.noise_cutoff_hz
            );
        }
        if self.har_windows_per_class == 0 {
            bail!("har_windows_per_class must be at least 1");
        }
        if self.har_epochs == 0 || self.har_batch_size == 0 {
            bail!("har_epochs and har_batch_size must be at least 1");
        }
        finite_pos("har_learning_rate", self.har_learning_rate)?;
        finite_pos("nb_gamma", self.nb_gamma)?;
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() {
                bail!("lambda_grid must name at least one penalty or be auto");
            }
            for l in grid {
                if !l.is_finite() || *l < 0.0 {
                    bail!("lambda_grid entry {l} must be a nonnegative finite number");
                }
            }
        }
        if self.lasso_folds < 2 {
            bail!("lasso_folds must be at least 2");
        }
        finite_pos("svm_c", self.svm_c)?;
        if let Some(g) = self.svm_gamma {
            finite_pos("svm_gamma", g)?;
        }
        if self.knn_k == 0 {
            bail!("knn_k must be at least 1");
        }
        if self.mlp_hidden.0 == 0 || self.mlp_hidden.1 == 0 {
            bail!("mlp_hidden widths must both be at least 1");
        }
        if self.mlp_epochs == 0 || self.mlp_batch_size == 0 {
            bail!("mlp_epochs and mlp_batch_size must be at least 1");
        }
        finite_pos("mlp_learning_rate", self.mlp_learning_rate)?;
        Ok(())
    }

    /// Full settings echo, alphabetical, itself loadable as a settings
    /// file. Every report embeds this block.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "classifier={}", self.classifier.name());
        let _ = writeln!(out, "data_dir={}", self.data_dir.display());
        let _ = writeln!(out, "gravity_cutoff_hz={}", self.gravity_cutoff_hz);
        let _ = writeln!(out, "har_batch_size={}", self.har_batch_size);
        let _ = writeln!(out, "har_epochs={}", self.har_epochs);
        let _ = writeln!(out, "har_learning_rate={}", self.har_learning_rate);
        let _ = writeln!(out, "har_windows_per_class={}", self.har_windows_per_class);
        let _ = writeln!(out, "knn_k={}", self.knn_k);
        let grid = match &self.lambda_grid {
            None => "auto".to_string(),
            Some(g) => g
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        let _ = writeln!(out, "lambda_grid={grid}");
        let _ = writeln!(out, "lasso_folds={}", self.lasso_folds);
        let _ = writeln!(out, "mlp_batch_size={}", self.mlp_batch_size);
        let _ = writeln!(out, "mlp_epochs={}", self.mlp_epochs);
        let _ = writeln!(out, "mlp_hidden={},{}", self.mlp_hidden.0, self.mlp_hidden.1);
        let _ = writeln!(out, "mlp_learning_rate={}", self.mlp_learning_rate);
        let _ = writeln!(out, "nb_gamma={}", self.nb_gamma);
        let _ = writeln!(out, "noise_cutoff_hz={}", self.noise_cutoff_hz);
        let _ = writeln!(out, "participants={}", self.participants);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "start_date={}", self.start_date.format("%Y-%m-%d"));
        let _ = writeln!(out, "svm_c={}", self.svm_c);
        let gamma = match self.svm_gamma {
            None => "median".to_string(),
            Some(g) => g.to_string(),
        };
        let _ = writeln!(out, "svm_gamma={gamma}");
        let _ = writeln!(out, "weeks={}", self.weeks);
        out
    }
}

/// Stage tags keep per-stage random streams apart while one master seed
/// reproduces the whole run.
pub const SALT_HAR_CORPUS: u64 = 1;
pub const SALT_HAR_FIT: u64 = 2;
pub const SALT_HAR_EVAL: u64 = 3;
pub const SALT_NB_SPLIT: u64 = 4;
pub const SALT_LASSO_CV: u64 = 5;
pub const SALT_WRAPPER: u64 = 6;
pub const SALT_CLASSIFY: u64 = 7;

pub fn stage_seed(seed: u64, salt: u64) -> u64 {
    splitmix(seed ^ splitmix(salt))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_echo_round_trips() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let mut reparsed = PipelineConfig::default();
        reparsed.seed = 0;
        reparsed.apply_file(&cfg.echo(), Path::new("echo")).unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn file_overrides_defaults_and_flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("settings.txt");
        std::fs::write(&path, "seed=11\nclassifier=knn\ndata_dir=/from/file\n").unwrap();
        let cfg = PipelineConfig::resolve(
            Some(&path),
            Some(PathBuf::from("/from/env")),
            Some(PathBuf::from("/from/flag")),
            Some(99),
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.classifier, Classifier::Knn);
        assert_eq!(cfg.data_dir, PathBuf::from("/from/flag"));

        let cfg = PipelineConfig::resolve(
            Some(&path),
            Some(PathBuf::from("/from/env")),
            None,
            None,
        )
        .unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.data_dir, PathBuf::from("/from/env"));

        let cfg = PipelineConfig::resolve(Some(&path), None, None, None).unwrap();
        assert_eq!(cfg.data_dir, PathBuf::from("/from/file"));
    }

    #[test]
    fn bad_settings_name_the_file_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("settings.txt");
        std::fs::write(&path, "# comment\nseed=7\nbogus_key=1\n").unwrap();
        let err = PipelineConfig::resolve(Some(&path), None, None, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("bogus_key"), "{err}");

        std::fs::write(&path, "seed=7\nseed=8\n").unwrap();
        let err = PipelineConfig::resolve(Some(&path), None, None, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("duplicate key"), "{err}");
    }

    #[test]
    fn validation_rejects_inconsistent_settings() {
        let mut cfg = PipelineConfig::default();
        cfg.start_date = NaiveDate::from_ymd_opt(2019, 4, 7).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("Saturday"));

        let mut cfg = PipelineConfig::default();
        cfg.gravity_cutoff_hz = 6.0;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.noise_cutoff_hz = 10.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("Nyquist"));

        let mut cfg = PipelineConfig::default();
        cfg.lambda_grid = Some(vec![0.1, -1.0]);
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.participants = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_and_gamma_accept_their_sentinel_words() {
        let mut cfg = PipelineConfig::default();
        cfg.set("lambda_grid", "0.5, 0.05").unwrap();
        assert_eq!(cfg.lambda_grid, Some(vec![0.5, 0.05]));
        cfg.set("lambda_grid", "auto").unwrap();
        assert_eq!(cfg.lambda_grid, None);
        cfg.set("svm_gamma", "0.25").unwrap();
        assert_eq!(cfg.svm_gamma, Some(0.25));
        cfg.set("svm_gamma", "median").unwrap();
        assert_eq!(cfg.svm_gamma, None);
    }

    #[test]
    fn stage_seeds_differ_by_salt() {
        let a = stage_seed(7, SALT_HAR_CORPUS);
        let b = stage_seed(7, SALT_HAR_EVAL);
        let c = stage_seed(8, SALT_HAR_CORPUS);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stage_seed(7, SALT_HAR_CORPUS));
    }
}
