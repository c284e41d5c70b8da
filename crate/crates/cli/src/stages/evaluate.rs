//! Scoring of the held-out predictions: confusion-derived per-class metrics
//! and ROC curves for the classifier, pooled RMSD for the GDS regression.

use anyhow::{bail, Context, Result};

use hscreen_core::predict::{evaluate, metrics_csv, rmsd, roc_csv, DepressionLevel};

use crate::config::PipelineConfig;
use crate::paths::{read_text, require, write_atomic, DataRoot};
use crate::tables::parse_level;

/// Formats an optionally undefined metric for the summary file.
fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:.digits$}"),
        None => "undefined".to_owned(),
    }
}

/// Parses the classify stage output back into aligned truth, prediction and
/// score rows.
fn parse_classify(
    text: &str,
) -> Result<(Vec<DepressionLevel>, Vec<DepressionLevel>, Vec<[f64; 3]>)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let expect = "participant_id,week_index,truth,predicted,score_absence,score_mild_moderate,score_severe";
    if header != expect {
        bail!("unexpected classify header {header:?}; rerun `hscreen classify`");
    }
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    let mut scores = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            bail!("classify line {}: expected 7 columns, got {}", no + 2, cols.len());
        }
        truths.push(parse_level(cols[2]).with_context(|| format!("classify line {}", no + 2))?);
        preds.push(parse_level(cols[3]).with_context(|| format!("classify line {}", no + 2))?);
        let mut row = [0.0f64; 3];
        for (slot, col) in row.iter_mut().zip(&cols[4..7]) {
            *slot = col
                .parse()
                .with_context(|| format!("classify line {}: bad score {col:?}", no + 2))?;
        }
        scores.push(row);
    }
    if truths.is_empty() {
        bail!("classify output holds no rows; rerun `hscreen classify`");
    }
    Ok((truths, preds, scores))
}

/// Parses the regression stage output into aligned (truth, prediction) rows.
fn parse_regression(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "participant_id,week_index,gds,predicted" {
        bail!("unexpected regression header {header:?}; rerun `hscreen fit-gds`");
    }
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            bail!("regression line {}: expected 4 columns, got {}", no + 2, cols.len());
        }
        truth.push(
            cols[2]
                .parse()
                .with_context(|| format!("regression line {}: bad score {:?}", no + 2, cols[2]))?,
        );
        pred.push(
            cols[3]
                .parse()
                .with_context(|| format!("regression line {}: bad prediction {:?}", no + 2, cols[3]))?,
        );
    }
    Ok((truth, pred))
}

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let classify_path = root.classify_csv(cfg.classifier);
    require(&classify_path, "classify")?;
    let gds_path = root.gds_loocv();
    require(&gds_path, "fit-gds")?;

    let (truths, preds, scores) = parse_classify(&read_text(&classify_path)?)?;
    let report = evaluate(&truths, &preds, Some(&scores))?;
    write_atomic(&root.metrics_csv(), metrics_csv(&report).as_bytes())?;
    write_atomic(&root.roc_csv(), roc_csv(&report).as_bytes())?;

    let (gds_truth, gds_pred) = parse_regression(&read_text(&gds_path)?)?;
    let loocv_rmsd = rmsd(&gds_pred, &gds_truth)?;

    let summary = format!(
        "classifier={}\nrows={}\naccuracy={}\nbalanced_accuracy={}\ngds_loocv_rmsd={:.6}\n",
        cfg.classifier.name(),
        truths.len(),
        fmt_opt(report.accuracy, 6),
        fmt_opt(report.balanced_accuracy, 6),
        loocv_rmsd
    );
    write_atomic(&root.eval_summary(), summary.as_bytes())?;

    Ok(format!(
        "evaluate: {} rows, accuracy {}, balanced accuracy {}, gds loocv rmsd {:.3}, wrote {}",
        truths.len(),
        fmt_opt(report.accuracy, 3),
        fmt_opt(report.balanced_accuracy, 3),
        loocv_rmsd,
        root.metrics_csv().display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_rows_round_trip() {
        let text = "participant_id,week_index,truth,predicted,score_absence,score_mild_moderate,score_severe\n\
                    p001,0,Absence,Absence,0.9,0.05,0.05\n\
                    p002,1,Severe,MildModerate,0.1,0.5,0.4\n";
        let (truths, preds, scores) = parse_classify(text).unwrap();
        assert_eq!(truths.len(), 2);
        assert_eq!(preds.len(), 2);
        assert_eq!(scores[1], [0.1, 0.5, 0.4]);
        assert_ne!(truths[1], preds[1]);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = "participant_id,week_index,truth,predicted,score_absence,score_mild_moderate,score_severe\n\
                    p001,0,Absence,Absence,0.9,0.05\n";
        let err = parse_classify(text).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
