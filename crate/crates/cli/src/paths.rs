//! One data root holds every pipeline artifact. Stages address files only
//! through this module, and consumers turn an absent input into an error
//! naming the subcommand that writes it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;

use crate::config::{Classifier, PipelineConfig};

pub struct DataRoot {
    root: PathBuf,
}

impl DataRoot {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn store(&self) -> PathBuf {
        self.root.join("store")
    }

    pub fn registry(&self) -> PathBuf {
        self.store().join("registry.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("cohort").join("manifest.txt")
    }

    pub fn participants_csv(&self) -> PathBuf {
        self.root.join("cohort").join("participants.csv")
    }

    pub fn body_file(&self, pid: &str, week: u32) -> PathBuf {
        self.root
            .join("processed")
            .join(pid)
            .join(format!("week{week:03}-body.txt"))
    }

    pub fn har_model(&self) -> PathBuf {
        self.root.join("models").join("har-cnn.ckpt")
    }

    pub fn nb_model(&self) -> PathBuf {
        self.root.join("models").join("sentiment-nb.json")
    }

    pub fn lasso_model(&self) -> PathBuf {
        self.root.join("models").join("gds-lasso.json")
    }

    pub fn weeks_csv(&self) -> PathBuf {
        self.root.join("features").join("weeks.csv")
    }

    pub fn selected_features(&self) -> PathBuf {
        self.root.join("features").join("selected.txt")
    }

    pub fn wrapper_trace(&self) -> PathBuf {
        self.root.join("features").join("wrapper-trace.csv")
    }

    pub fn gds_loocv(&self) -> PathBuf {
        self.root.join("eval").join("gds-loocv.csv")
    }

    pub fn classify_csv(&self, classifier: Classifier) -> PathBuf {
        self.root
            .join("eval")
            .join(format!("classify-{}.csv", classifier.name()))
    }

    pub fn metrics_csv(&self) -> PathBuf {
        self.root.join("eval").join("metrics.csv")
    }

    pub fn roc_csv(&self) -> PathBuf {
        self.root.join("eval").join("roc.csv")
    }

    pub fn eval_summary(&self) -> PathBuf {
        self.root.join("eval").join("summary.txt")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.txt")
    }
}

/// Missing upstream artifact: the error names the stage that writes it.
pub fn require(path: &Path, producer: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        bail!("missing {}: run `hscreen {producer}` first", path.display())
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Write-then-rename so a reader never observes a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

const MANIFEST_MAGIC: &str = "hscreen-cohort-v1";

/// What `generate` actually wrote. Later stages iterate exactly this shape
/// instead of trusting the current flags blindly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Manifest {
    pub seed: u64,
    pub participants: usize,
    pub weeks: u32,
    pub start_date: NaiveDate,
}

impl Manifest {
    pub fn render(&self) -> String {
        format!(
            "{MANIFEST_MAGIC}\nparticipants={}\nseed={}\nstart_date={}\nweeks={}\n",
            self.participants,
            self.seed,
            self.start_date.format("%Y-%m-%d"),
            self.weeks
        )
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_MAGIC) {
            bail!(
                "{} is not a cohort manifest (expected a {MANIFEST_MAGIC} header)",
                path.display()
            );
        }
        let mut participants = None;
        let mut seed = None;
        let mut start_date = None;
        let mut weeks = None;
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow::anyhow!("{}: expected key=value, got {line:?}", path.display())
            })?;
            let bad = |e: &dyn std::fmt::Display| {
                anyhow::anyhow!("{}: bad {key} value {value:?}: {e}", path.display())
            };
            match key {
                "participants" => participants = Some(value.parse().map_err(|e| bad(&e))?),
                "seed" => seed = Some(value.parse().map_err(|e| bad(&e))?),
                "start_date" => {
                    start_date = Some(
                        NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|e| bad(&e))?,
                    )
                }
                "weeks" => weeks = Some(value.parse().map_err(|e| bad(&e))?),
                other => bail!("{}: unknown manifest key {other:?}", path.display()),
            }
        }
        let missing = |what: &str| anyhow::anyhow!("{}: missing {what}", path.display());
        Ok(Self {
            participants: participants.ok_or_else(|| missing("participants"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            start_date: start_date.ok_or_else(|| missing("start_date"))?,
            weeks: weeks.ok_or_else(|| missing("weeks"))?,
        })
    }

    /// `None` when the root has no generated cohort yet.
    pub fn load(root: &DataRoot) -> Result<Option<Self>> {
        let path = root.manifest();
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(Self::parse(&text, &path)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
        }
    }

    /// Shape the stages iterate: the manifest when present, the current
    /// settings otherwise (a store fed through `serve` has no manifest).
    /// A seed or calendar mismatch against the manifest is an error, never
    /// a silent divergence.
    pub fn resolve_shape(cfg: &PipelineConfig, root: &DataRoot) -> Result<Self> {
        match Self::load(root)? {
            Some(m) => {
                if m.seed != cfg.seed {
                    bail!(
                        "data root {} was generated with seed {}; rerun with --seed {}",
                        root.root().display(),
                        m.seed,
                        m.seed
                    );
                }
                if m.start_date != cfg.start_date {
                    bail!(
                        "data root {} was generated with start_date {}; match it or regenerate",
                        root.root().display(),
                        m.start_date
                    );
                }
                Ok(m)
            }
            None => Ok(Self {
                seed: cfg.seed,
                participants: cfg.participants,
                weeks: cfg.weeks,
                start_date: cfg.start_date,
            }),
        }
    }
}
