//! Severity classification over all weekly features with the configured
//! model: one fold per held-out participant, classes balanced by
//! oversampling inside each training fold only.

use std::fmt::Write as _;

use anyhow::Result;

use hscreen_core::predict::{
    fit_knn, fit_mlp, fit_svm, loocv_classify, DepressionLevel, MlpConfig, PredictError,
    SvmConfig,
};
use hscreen_core::{KnnModel, MlpModel, SvmModel};

use crate::config::{stage_seed, Classifier, PipelineConfig, SALT_CLASSIFY};
use crate::paths::{write_atomic, DataRoot};
use crate::tables::{load_weeks, week_indexes};

enum Fitted {
    Svm(SvmModel),
    Knn(KnnModel),
    Mlp(MlpModel),
}

fn fit_any(
    cfg: &PipelineConfig,
    train: &[(Vec<f64>, DepressionLevel)],
    fold_seed: u64,
) -> Result<Fitted, PredictError> {
    match cfg.classifier {
        Classifier::Svm => {
            let svm_cfg = SvmConfig {
                c: cfg.svm_c,
                gamma: cfg.svm_gamma,
                ..SvmConfig::default()
            };
            Ok(Fitted::Svm(fit_svm(train, &svm_cfg)?))
        }
        Classifier::Knn => Ok(Fitted::Knn(fit_knn(train, cfg.knn_k.min(train.len()))?)),
        Classifier::Mlp => {
            let mlp_cfg = MlpConfig {
                hidden: cfg.mlp_hidden,
                epochs: cfg.mlp_epochs,
                batch_size: cfg.mlp_batch_size,
                learning_rate: cfg.mlp_learning_rate,
                seed: fold_seed,
            };
            Ok(Fitted::Mlp(fit_mlp(train, &mlp_cfg)?))
        }
    }
}

fn predict_any(
    model: &Fitted,
    x: &[f64],
) -> Result<(DepressionLevel, [f64; 3]), PredictError> {
    match model {
        Fitted::Svm(m) => Ok((m.predict(x)?, m.decision_values(x)?)),
        Fitted::Knn(m) => Ok((m.predict(x)?, m.scores(x)?)),
        Fitted::Mlp(m) => Ok((m.predict(x)?, m.scores(x)?)),
    }
}

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let weeks = load_weeks(&root)?;

    let folds = loocv_classify(
        &weeks,
        true,
        stage_seed(cfg.seed, SALT_CLASSIFY),
        |train, fold_seed| fit_any(cfg, train, fold_seed),
        predict_any,
    )?;

    let indexes = week_indexes(&weeks);
    let mut csv = String::from(
        "participant_id,week_index,truth,predicted,score_absence,score_mild_moderate,score_severe\n",
    );
    let mut hits = 0usize;
    let mut total = 0usize;
    for fold in &folds {
        let weeks_of = &indexes[&fold.participant_id];
        for ((truth, pred, scores), week_index) in fold.results.iter().zip(weeks_of) {
            let _ = writeln!(
                csv,
                "{},{week_index},{truth},{pred},{},{},{}",
                fold.participant_id, scores[0], scores[1], scores[2]
            );
            hits += usize::from(truth == pred);
            total += 1;
        }
    }
    let path = root.classify_csv(cfg.classifier);
    write_atomic(&path, csv.as_bytes())?;

    Ok(format!(
        "classify: {}, {total} held-out predictions over {} folds, accuracy {:.3}, wrote {}",
        cfg.classifier.name(),
        folds.len(),
        hits as f64 / total.max(1) as f64,
        path.display()
    ))
}
