//! Greedy forward feature selection, scored by leave-one-participant-out
//! regression error at a penalty chosen once by cross-validation on the
//! full table. The subset goes to a plain text file, the error trace to a
//! plot-ready table.

use std::fmt::Write as _;

use anyhow::Result;

use hscreen_core::features::FEATURE_NAMES;
use hscreen_core::predict::{fit_lasso_cv, lasso_loocv_rmsd, wrapper_select};

use crate::config::{stage_seed, PipelineConfig, SALT_LASSO_CV, SALT_WRAPPER};
use crate::paths::{write_atomic, DataRoot};
use crate::tables::{design_matrix, load_weeks};

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let weeks = load_weeks(&root)?;
    let names: Vec<String> = FEATURE_NAMES.iter().map(|n| n.to_string()).collect();

    let (x, y) = design_matrix(&weeks, &names)?;
    let folds = cfg.lasso_folds.min(x.len());
    let (_, cv) = fit_lasso_cv(
        &x,
        &y,
        &names,
        folds,
        cfg.lambda_grid.as_deref(),
        stage_seed(cfg.seed, SALT_LASSO_CV),
    )?;
    let lambda = cv.chosen_lambda();

    let wrapper_seed = stage_seed(cfg.seed, SALT_WRAPPER);
    let report = wrapper_select(&names, |subset| {
        lasso_loocv_rmsd(&weeks, subset, lambda, wrapper_seed)
    })?;

    let mut selected = String::new();
    for name in &report.selected {
        selected.push_str(name);
        selected.push('\n');
    }
    write_atomic(&root.selected_features(), selected.as_bytes())?;

    let mut trace = String::from("step,loocv_rmsd\n");
    for (step, rmsd) in report.rmsd_trace.iter().enumerate() {
        let _ = writeln!(trace, "{step},{rmsd}");
    }
    write_atomic(&root.wrapper_trace(), trace.as_bytes())?;

    Ok(format!(
        "select-features: kept {} of {} (loocv rmsd {:.3}, all features {:.3}, \
         intercept only {:.3}), wrote {}",
        report.selected.len(),
        names.len(),
        report.selected_rmsd,
        report.full_rmsd,
        report.baseline_rmsd,
        root.selected_features().display()
    ))
}
