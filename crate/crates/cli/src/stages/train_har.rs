//! Fits the activity recognizer. The labeled corpus is synthesized with
//! the same bout structure and preprocessing as the day streams, so the
//! checkpoint sees the boundary transients inference will see. Held-out
//! accuracy comes from a corpus drawn with an independent stream.

use anyhow::{Context, Result};

use hscreen_cohort::synth_labeled_windows;
use hscreen_core::har::{accuracy, save_checkpoint, train, CnnConfig, TrainConfig};

use crate::config::{stage_seed, PipelineConfig, SALT_HAR_CORPUS, SALT_HAR_EVAL, SALT_HAR_FIT};
use crate::paths::DataRoot;

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let corpus = synth_labeled_windows(
        cfg.har_windows_per_class,
        stage_seed(cfg.seed, SALT_HAR_CORPUS),
    );
    let held_per_class = (cfg.har_windows_per_class / 5).max(1);
    let held = synth_labeled_windows(held_per_class, stage_seed(cfg.seed, SALT_HAR_EVAL));

    let tcfg = TrainConfig {
        epochs: cfg.har_epochs,
        batch_size: cfg.har_batch_size,
        learning_rate: cfg.har_learning_rate,
        seed: stage_seed(cfg.seed, SALT_HAR_FIT),
    };
    let (model, report) = train(CnnConfig::standard(), &tcfg, &corpus)?;
    let acc = accuracy(&model, &held)?;

    let path = root.har_model();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    save_checkpoint(&model, &path)?;
    let final_loss = report.epoch_loss.last().copied().unwrap_or(f64::NAN);
    Ok(format!(
        "train-har: {} windows, {} epochs, final loss {:.4}, held-out accuracy {:.3}, wrote {}",
        report.samples,
        cfg.har_epochs,
        final_loss,
        acc,
        path.display()
    ))
}
