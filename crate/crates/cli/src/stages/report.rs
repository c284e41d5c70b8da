//! Final plain-text report: configuration echo, cohort shape, regression
//! and classification results, ROC points and per-feature correlation with
//! the GDS score. Everything below the timestamp line is a deterministic
//! function of the stage outputs.

use std::fmt::Write as _;

use anyhow::Result;
use chrono::{SecondsFormat, Utc};

use hscreen_core::features::FEATURE_NAMES;
use hscreen_core::predict::rmsd;

use crate::config::PipelineConfig;
use crate::paths::{read_text, require, write_atomic, DataRoot, Manifest};
use crate::stages::fit_gds::LassoFile;
use crate::tables::load_weeks;

/// Pearson correlation, or `None` when either side has zero variance.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.is_empty() || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Renders a comma-separated table as aligned columns for the report body.
fn aligned_table(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').collect())
        .collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:<width$}", width = widths[i]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    let weeks = load_weeks(&root)?;
    let selected_path = root.selected_features();
    require(&selected_path, "select-features")?;
    let lasso_path = root.lasso_model();
    require(&lasso_path, "fit-gds")?;
    let gds_path = root.gds_loocv();
    require(&gds_path, "fit-gds")?;
    let metrics_path = root.metrics_csv();
    require(&metrics_path, "evaluate")?;
    let roc_path = root.roc_csv();
    require(&roc_path, "evaluate")?;
    let summary_path = root.eval_summary();
    require(&summary_path, "evaluate")?;

    let lasso = LassoFile::load(&lasso_path)?;
    let selected: Vec<String> = read_text(&selected_path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect();

    let mut gds_truth = Vec::new();
    let mut gds_pred = Vec::new();
    for line in read_text(&gds_path)?.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() == 4 {
            gds_truth.push(cols[2].parse::<f64>().unwrap_or(f64::NAN));
            gds_pred.push(cols[3].parse::<f64>().unwrap_or(f64::NAN));
        }
    }
    let loocv_rmsd = rmsd(&gds_pred, &gds_truth)?;

    let participants: std::collections::BTreeSet<&str> = weeks
        .iter()
        .map(|w| w.vector.participant_id.as_str())
        .collect();
    let shape = Manifest::load(&root)?;

    let mut out = String::new();
    out.push_str("hscreen screening pipeline report\n");
    let _ = writeln!(
        out,
        "generated_at: {}",
        Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
    );
    out.push('\n');

    out.push_str("## configuration\n\n");
    out.push_str(&cfg.echo());
    out.push('\n');

    out.push_str("## cohort\n\n");
    let _ = writeln!(out, "participants: {}", participants.len());
    let _ = writeln!(out, "feature_rows: {}", weeks.len());
    if let Some(m) = &shape {
        let _ = writeln!(out, "weeks_per_participant: {}", m.weeks);
        let _ = writeln!(out, "start_date: {}", m.start_date);
    }
    out.push('\n');

    out.push_str("## gds regression\n\n");
    let _ = writeln!(out, "selected_features: {}", selected.join(" "));
    let _ = writeln!(out, "lambda: {:.6}", lasso.lambda);
    let _ = writeln!(out, "intercept: {:.4}", lasso.intercept);
    let support = lasso.support();
    let _ = writeln!(out, "support: {}", if support.is_empty() {
        "(intercept only)".to_owned()
    } else {
        support.join(" ")
    });
    for (name, coef) in lasso.feature_names.iter().zip(&lasso.coefficients) {
        if *coef != 0.0 {
            let _ = writeln!(out, "  coef {name}: {coef:+.4}");
        }
    }
    let _ = writeln!(out, "loocv_rmsd: {loocv_rmsd:.4}");
    out.push('\n');

    let _ = writeln!(out, "## severity classification ({})", cfg.classifier.name());
    out.push('\n');
    out.push_str(&aligned_table(&read_text(&metrics_path)?));
    out.push('\n');

    out.push_str("## roc points\n\n");
    out.push_str(&read_text(&roc_path)?);
    out.push('\n');

    out.push_str("## feature correlation with gds\n\n");
    let gds: Vec<f64> = weeks.iter().map(|w| f64::from(w.gds.value())).collect();
    for name in FEATURE_NAMES {
        let xs: Vec<f64> = weeks
            .iter()
            .map(|w| w.vector.value(name).expect("canonical feature name"))
            .collect();
        match pearson(&xs, &gds) {
            Some(r) => {
                let _ = writeln!(out, "{name:<12} {r:+.4}");
            }
            None => {
                let _ = writeln!(out, "{name:<12} undefined");
            }
        }
    }

    let path = root.report();
    write_atomic(&path, out.as_bytes())?;
    Ok(format!(
        "report: {} feature rows, {} participants, wrote {}",
        weeks.len(),
        participants.len(),
        path.display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_handles_degenerate_inputs() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(pearson(&[1.0, 1.0, 1.0], &[2.0, 4.0, 6.0]).is_none());
        assert!(pearson(&[], &[]).is_none());
    }

    #[test]
    fn aligned_table_pads_columns() {
        let csv = "metric,class,value\nsensitivity,Absence,0.8\n";
        let table = aligned_table(csv);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("metric       "));
        assert!(lines[1].starts_with("sensitivity  "));
    }
}
