//! Final score regressor on the selected subset: penalty chosen by k-fold
//! cross-validation, coefficients refit on the whole table, and one
//! held-participant-out prediction per week for downstream evaluation.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hscreen_core::features::FEATURE_NAMES;
use hscreen_core::predict::{fit_lasso, fit_lasso_cv, loocv_regress, pooled_rmsd};
use hscreen_core::{LassoModel, ParticipantWeek};

use crate::config::{stage_seed, PipelineConfig, SALT_LASSO_CV};
use crate::paths::{read_text, require, write_atomic, DataRoot};
use crate::tables::{design_matrix, load_weeks, week_indexes};

const MODEL_FORMAT: &str = "hscreen-lasso-v1";

/// Serialized regressor; enough to rebuild predictions elsewhere.
#[derive(Serialize, Deserialize)]
pub struct LassoFile {
    pub format: String,
    pub lambda: f64,
    pub intercept: f64,
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl LassoFile {
    fn from_model(model: &LassoModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            lambda: model.lambda,
            intercept: model.intercept,
            feature_names: model.feature_names.clone(),
            coefficients: model.coefficients.clone(),
            means: model.means.clone(),
            scales: model.scales.clone(),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file: LassoFile = serde_json::from_str(&read_text(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        if file.format != MODEL_FORMAT {
            bail!(
                "{}: format {:?}, expected {MODEL_FORMAT:?}",
                path.display(),
                file.format
            );
        }
        Ok(file)
    }

    /// Names of the features with nonzero weight.
    pub fn support(&self) -> Vec<&str> {
        self.feature_names
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

fn read_selected(root: &DataRoot) -> Result<Vec<String>> {
    let path = root.selected_features();
    require(&path, "select-features")?;
    let mut names = Vec::new();
    for line in read_text(&path)?.lines() {
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        if !FEATURE_NAMES.contains(&name) {
            bail!(
                "{}: {name:?} is not a weekly feature; rerun `hscreen select-features`",
                path.display()
            );
        }
        names.push(name.to_string());
    }
    Ok(names)
}

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let weeks = load_weeks(&root)?;
    let names = read_selected(&root)?;

    let (x, y) = design_matrix(&weeks, &names)?;
    let folds = cfg.lasso_folds.min(x.len());
    let (model, _cv) = fit_lasso_cv(
        &x,
        &y,
        &names,
        folds,
        cfg.lambda_grid.as_deref(),
        stage_seed(cfg.seed, SALT_LASSO_CV),
    )?;

    let lambda = model.lambda;
    let fit_fold = |train: &[ParticipantWeek], _seed: u64| {
        let mut tx = Vec::with_capacity(train.len());
        let mut ty = Vec::with_capacity(train.len());
        for w in train {
            let row = names
                .iter()
                .map(|n| w.vector.value(n).expect("names checked against the table"))
                .collect();
            tx.push(row);
            ty.push(f64::from(w.gds.value()));
        }
        fit_lasso(&tx, &ty, lambda, &names)
    };
    let folds_out = loocv_regress(&weeks, cfg.seed, fit_fold, |m, week| {
        m.predict_week(&week.vector)
    })?;
    let rmsd = pooled_rmsd(&folds_out)?;

    let indexes = week_indexes(&weeks);
    let mut csv = String::from("participant_id,week_index,gds,predicted\n");
    for fold in &folds_out {
        let weeks_of = &indexes[&fold.participant_id];
        for ((truth, pred), week_index) in fold.pairs.iter().zip(weeks_of) {
            let _ = writeln!(
                csv,
                "{},{week_index},{},{pred}",
                fold.participant_id,
                truth.value()
            );
        }
    }
    write_atomic(&root.gds_loocv(), csv.as_bytes())?;

    let file = LassoFile::from_model(&model);
    let json = serde_json::to_string_pretty(&file).context("serializing the regressor")?;
    write_atomic(&root.lasso_model(), json.as_bytes())?;

    Ok(format!(
        "fit-gds: lambda {:.4}, support {} of {} features, loocv rmsd {:.3}, wrote {}",
        lambda,
        file.support().len(),
        names.len(),
        rmsd,
        root.lasso_model().display()
    ))
}
