//! Classification metrics: confusion matrix, one-vs-rest rates, ROC curves.
//!
//! Rates whose denominator is empty are reported as `None` ("undefined"),
//! never as NaN, so downstream reports stay machine-checkable.

use super::gds::DepressionLevel;
use super::PredictError;

const N_CLASSES: usize = DepressionLevel::COUNT;

/// Row-major truth-by-prediction counts for the three severity levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [u64; N_CLASSES * N_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_pairs(
        truths: &[DepressionLevel],
        preds: &[DepressionLevel],
    ) -> Result<Self, PredictError> {
        if truths.len() != preds.len() {
            return Err(PredictError::LengthMismatch {
                a: truths.len(),
                b: preds.len(),
            });
        }
        if truths.is_empty() {
            return Err(PredictError::EmptyData);
        }
        let mut counts = [0u64; N_CLASSES * N_CLASSES];
        for (t, p) in truths.iter().zip(preds) {
            counts[t.index() * N_CLASSES + p.index()] += 1;
        }
        Ok(Self { counts })
    }

    pub fn count(&self, truth: DepressionLevel, pred: DepressionLevel) -> u64 {
        self.counts[truth.index() * N_CLASSES + pred.index()]
    }

    /// Number of samples whose true label is `class` (row sum).
    pub fn support(&self, class: DepressionLevel) -> u64 {
        DepressionLevel::ALL
            .iter()
            .map(|p| self.count(class, *p))
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let trace: u64 = DepressionLevel::ALL.iter().map(|c| self.count(*c, *c)).sum();
        Some(trace as f64 / total as f64)
    }

    /// One-vs-rest counts for a class: (tp, fn, fp, tn).
    pub fn ovr(&self, class: DepressionLevel) -> (u64, u64, u64, u64) {
        let tp = self.count(class, class);
        let fn_ = self.support(class) - tp;
        let mut fp = 0;
        for t in DepressionLevel::ALL {
            if t != class {
                fp += self.count(t, class);
            }
        }
        let tn = self.total() - tp - fn_ - fp;
        (tp, fn_, fp, tn)
    }
}

/// One-vs-rest rates for a single class. A `None` entry means the rate's
/// denominator was empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub support: u64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

impl ClassMetrics {
    /// Rates from raw one-vs-rest counts.
    pub fn from_counts(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        let sensitivity = ratio(tp, tp + fn_);
        let specificity = ratio(tn, tn + fp);
        let precision = ratio(tp, tp + fp);
        let f1 = match (precision, sensitivity) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            support: tp + fn_,
            sensitivity,
            specificity,
            precision,
            f1,
        }
    }
}

/// One point of a ROC curve: everything scoring at or above `threshold` is
/// called positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points from decision scores, threshold swept from high to low. The
/// curve starts at (0,0) and ends at (1,1); tied scores move in one step.
pub fn roc_points(scores: &[f64], is_positive: &[bool]) -> Result<Vec<RocPoint>, PredictError> {
    if scores.len() != is_positive.len() {
        return Err(PredictError::LengthMismatch {
            a: scores.len(),
            b: is_positive.len(),
        });
    }
    if scores.is_empty() {
        return Err(PredictError::EmptyData);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(PredictError::NonFinite("decision scores"));
    }
    let pos = is_positive.iter().filter(|p| **p).count() as f64;
    let neg = scores.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(PredictError::Undefined(
            "ROC needs at least one positive and one negative",
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if is_positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg,
            tpr: tp as f64 / pos,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    Ok(points)
}

/// Area under a ROC curve by the trapezoid rule.
pub fn auc(points: &[RocPoint]) -> f64 {
    let mut area = 0.0;
    for pair in points.windows(2) {
        area += (pair[1].fpr - pair[0].fpr) * (pair[0].tpr + pair[1].tpr) * 0.5;
    }
    area
}

/// Full evaluation of a prediction set.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    /// Mean per-class sensitivity over the classes present in the truths.
    pub balanced_accuracy: Option<f64>,
    pub per_class: [ClassMetrics; N_CLASSES],
    /// One-vs-rest ROC per class; `None` when scores were not supplied or
    /// the class split is degenerate.
    pub roc: [Option<Vec<RocPoint>>; N_CLASSES],
    pub auc: [Option<f64>; N_CLASSES],
}

/// Builds the report. `scores[i][c]` is the decision value sample `i`
/// received for class `c`; pass `None` to skip ROC construction.
pub fn evaluate(
    truths: &[DepressionLevel],
    preds: &[DepressionLevel],
    scores: Option<&[[f64; N_CLASSES]]>,
) -> Result<EvalReport, PredictError> {
    let confusion = ConfusionMatrix::from_pairs(truths, preds)?;
    if let Some(sc) = scores {
        if sc.len() != truths.len() {
            return Err(PredictError::LengthMismatch {
                a: sc.len(),
                b: truths.len(),
            });
        }
    }

    let mut per_class = [ClassMetrics::from_counts(0, 0, 0, 0); N_CLASSES];
    for class in DepressionLevel::ALL {
        let (tp, fn_, fp, tn) = confusion.ovr(class);
        per_class[class.index()] = ClassMetrics::from_counts(tp, fn_, fp, tn);
    }

    let sens: Vec<f64> = per_class.iter().filter_map(|m| m.sensitivity).collect();
    let balanced_accuracy = if sens.is_empty() {
        None
    } else {
        Some(sens.iter().sum::<f64>() / sens.len() as f64)
    };

    let mut roc: [Option<Vec<RocPoint>>; N_CLASSES] = [None, None, None];
    let mut auc_per: [Option<f64>; N_CLASSES] = [None; N_CLASSES];
    if let Some(sc) = scores {
        for class in DepressionLevel::ALL {
            let class_scores: Vec<f64> = sc.iter().map(|row| row[class.index()]).collect();
            let labels: Vec<bool> = truths.iter().map(|t| *t == class).collect();
            match roc_points(&class_scores, &labels) {
                Ok(points) => {
                    auc_per[class.index()] = Some(auc(&points));
                    roc[class.index()] = Some(points);
                }
                Err(PredictError::Undefined(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }

    Ok(EvalReport {
        accuracy: confusion.accuracy(),
        balanced_accuracy,
        per_class,
        roc,
        auc: auc_per,
        confusion,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "undefined".to_string(),
    }
}

/// Long-format metrics table: `metric,class,value` per line, undefined
/// rates spelled out.
pub fn metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("metric,class,value\n");
    for class in DepressionLevel::ALL {
        let m = &report.per_class[class.index()];
        out.push_str(&format!("support,{class},{}\n", m.support));
        out.push_str(&format!("sensitivity,{class},{}\n", fmt_opt(m.sensitivity)));
        out.push_str(&format!("specificity,{class},{}\n", fmt_opt(m.specificity)));
        out.push_str(&format!("precision,{class},{}\n", fmt_opt(m.precision)));
        out.push_str(&format!("f1,{class},{}\n", fmt_opt(m.f1)));
        out.push_str(&format!("auc,{class},{}\n", fmt_opt(report.auc[class.index()])));
    }
    out.push_str(&format!("accuracy,all,{}\n", fmt_opt(report.accuracy)));
    out.push_str(&format!(
        "balanced_accuracy,all,{}\n",
        fmt_opt(report.balanced_accuracy)
    ));
    out
}

/// ROC points as `class,threshold,fpr,tpr` lines for external plotting.
pub fn roc_csv(report: &EvalReport) -> String {
    let mut out = String::from("class,threshold,fpr,tpr\n");
    for class in DepressionLevel::ALL {
        if let Some(points) = &report.roc[class.index()] {
            for p in points {
                out.push_str(&format!("{class},{},{},{}\n", p.threshold, p.fpr, p.tpr));
            }
        }
    }
    out
}
