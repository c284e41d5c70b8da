//! Soft-margin SVM with an RBF kernel, one binary machine per class.
//!
//! Each binary dual is solved by sequential minimal optimization with
//! maximal-violating-pair working-set selection: pick the pair that most
//! violates the KKT conditions, solve its two-variable subproblem in closed
//! form, repeat until the violation gap drops under `tol`. Training rows
//! are canonically ordered first, so fitted machines do not depend on the
//! caller's sample order.

use crate::scalar::Real;

use super::gds::DepressionLevel;
use super::knn::{canonical_order, standardization, standardize_row, validate_samples};
use super::PredictError;

/// Finite stand-in decision value for a class absent from training: far
/// below anything a real machine can produce (|u| <= n*C plus a bias of the
/// same order), but finite so downstream metrics stay well-defined.
const ABSENT_CLASS_DECISION: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// RBF width; `None` selects 1 / median pairwise squared distance.
    pub gamma: Option<f64>,
    /// KKT violation gap at which training stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BinarySvm<S> {
    /// `alpha_i * y_i` for the support vectors.
    coef: Vec<S>,
    /// Standardized support vectors, one row per coefficient.
    points: Vec<Vec<S>>,
    bias: S,
    converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<S> {
    means: Vec<S>,
    scales: Vec<S>,
    gamma: f64,
    machines: [Option<BinarySvm<S>>; 3],
}

fn rbf<S: Real>(a: &[S], b: &[S], gamma: S) -> S {
    let mut d = S::zero();
    for j in 0..a.len() {
        let diff = a[j] - b[j];
        d += diff * diff;
    }
    (-gamma * d).exp()
}

/// 1 / median pairwise squared distance, falling back to 1/p when the
/// points are too degenerate to give a positive median.
fn median_gamma<S: Real>(rows: &[Vec<S>]) -> f64 {
    let p = rows.first().map_or(1, |r| r.len()).max(1);
    let mut d2: Vec<f64> = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let mut d = 0.0;
            for k in 0..rows[i].len() {
                let diff = (rows[i][k] - rows[j][k]).to_f64_lossy();
                d += diff * diff;
            }
            d2.push(d);
        }
    }
    if d2.is_empty() {
        return 1.0 / p as f64;
    }
    let mid = d2.len() / 2;
    let (_, median, _) = d2.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("finite"));
    if *median > 0.0 {
        1.0 / *median
    } else {
        1.0 / p as f64
    }
}

/// Solves the binary dual for labels in {-1, +1}. Returns the dual
/// variables, the bias, and whether the violation gap closed under `tol`.
fn smo<S: Real>(
    kernel: &[Vec<S>],
    y: &[S],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<S>, S, bool) {
    let n = y.len();
    let box_c = S::c(c);
    let gap_tol = S::c(tol);
    // Dual variables this close to a bound are snapped onto it, keeping
    // the index sets honest despite rounding in the pair updates.
    let snap = S::c(1e-10) * box_c;
    let mut alpha = vec![S::zero(); n];
    // u_i = sum_j alpha_j y_j K_ij, maintained incrementally.
    let mut u = vec![S::zero(); n];
    let mut converged = false;
    let mut last_gap = (S::zero(), S::zero());

    for _ in 0..max_iter {
        let mut m_up = S::neg_infinity();
        let mut i_sel = usize::MAX;
        let mut m_low = S::infinity();
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let q = y[t] - u[t];
            let positive = y[t] > S::zero();
            let in_up = (positive && alpha[t] < box_c) || (!positive && alpha[t] > S::zero());
            let in_low = (positive && alpha[t] > S::zero()) || (!positive && alpha[t] < box_c);
            if in_up && q > m_up {
                m_up = q;
                i_sel = t;
            }
            if in_low && q < m_low {
                m_low = q;
                j_sel = t;
            }
        }
        last_gap = (m_up, m_low);
        if i_sel == usize::MAX || j_sel == usize::MAX || m_up - m_low <= gap_tol {
            converged = true;
            break;
        }
        let (i, j) = (i_sel, j_sel);

        let eta = (kernel[i][i] + kernel[j][j] - S::c(2.0) * kernel[i][j]).max(S::c(1e-12));
        let e_i = u[i] - y[i];
        let e_j = u[j] - y[j];
        let mut a_j = alpha[j] + y[j] * (e_i - e_j) / eta;
        let (lo, hi) = if y[i] != y[j] {
            (
                (alpha[j] - alpha[i]).max(S::zero()),
                (box_c + alpha[j] - alpha[i]).min(box_c),
            )
        } else {
            (
                (alpha[i] + alpha[j] - box_c).max(S::zero()),
                (alpha[i] + alpha[j]).min(box_c),
            )
        };
        a_j = a_j.min(hi).max(lo);
        if a_j < snap {
            a_j = S::zero();
        } else if a_j > box_c - snap {
            a_j = box_c;
        }
        let d_j = a_j - alpha[j];
        if d_j.abs() < S::c(1e-14) {
            // The best pair cannot move; nothing else can either.
            converged = m_up - m_low <= gap_tol;
            break;
        }
        let mut a_i = alpha[i] + y[i] * y[j] * (alpha[j] - a_j);
        if a_i < snap {
            a_i = S::zero();
        } else if a_i > box_c - snap {
            a_i = box_c;
        }
        let d_i = a_i - alpha[i];
        alpha[i] = a_i;
        alpha[j] = a_j;
        for t in 0..n {
            u[t] += d_i * y[i] * kernel[i][t] + d_j * y[j] * kernel[j][t];
        }
    }

    // Bias from the free support vectors when any exist, otherwise the
    // midpoint of the feasible interval.
    let margin = S::c(1e-8) * box_c;
    let mut b_sum = S::zero();
    let mut b_count = 0usize;
    for t in 0..n {
        if alpha[t] > margin && alpha[t] < box_c - margin {
            b_sum += y[t] - u[t];
            b_count += 1;
        }
    }
    let bias = if b_count > 0 {
        b_sum / S::c(b_count as f64)
    } else {
        (last_gap.0 + last_gap.1) * S::c(0.5)
    };
    (alpha, bias, converged)
}

/// Trains one-vs-rest machines for the classes present in the data.
pub fn fit_svm<S: Real>(
    train: &[(Vec<S>, DepressionLevel)],
    cfg: &SvmConfig,
) -> Result<SvmModel<S>, PredictError> {
    let p = validate_samples(train)?;
    if !cfg.c.is_finite() || cfg.c <= 0.0 {
        return Err(PredictError::BadConfig(format!("C = {}", cfg.c)));
    }
    if !cfg.tol.is_finite() || cfg.tol <= 0.0 {
        return Err(PredictError::BadConfig(format!("tol = {}", cfg.tol)));
    }
    if let Some(g) = cfg.gamma {
        if !g.is_finite() || g <= 0.0 {
            return Err(PredictError::BadConfig(format!("gamma = {g}")));
        }
    }
    if cfg.max_iter == 0 {
        return Err(PredictError::BadConfig("max_iter = 0".into()));
    }

    let order = canonical_order(train);
    let raw: Vec<Vec<S>> = order.iter().map(|&i| train[i].0.clone()).collect();
    let labels: Vec<DepressionLevel> = order.iter().map(|&i| train[i].1).collect();
    let (means, scales) = standardization(&raw, p);
    let rows: Vec<Vec<S>> = raw
        .iter()
        .map(|r| standardize_row(r, &means, &scales))
        .collect();

    let gamma = cfg.gamma.unwrap_or_else(|| median_gamma(&rows));
    let gamma_s = S::c(gamma);
    let n = rows.len();
    let mut kernel = vec![vec![S::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let k = rbf(&rows[i], &rows[j], gamma_s);
            kernel[i][j] = k;
            kernel[j][i] = k;
        }
    }

    let mut machines: [Option<BinarySvm<S>>; 3] = [None, None, None];
    for class in DepressionLevel::ALL {
        if !labels.iter().any(|l| *l == class) {
            continue;
        }
        let y: Vec<S> = labels
            .iter()
            .map(|l| if *l == class { S::one() } else { -S::one() })
            .collect();
        let (alpha, bias, converged) = smo(&kernel, &y, cfg.c, cfg.tol, cfg.max_iter);
        let mut coef = Vec::new();
        let mut points = Vec::new();
        for t in 0..n {
            if alpha[t] > S::zero() {
                coef.push(alpha[t] * y[t]);
                points.push(rows[t].clone());
            }
        }
        machines[class.index()] = Some(BinarySvm {
            coef,
            points,
            bias,
            converged,
        });
    }

    Ok(SvmModel {
        means,
        scales,
        gamma,
        machines,
    })
}

impl<S: Real> SvmModel<S> {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// True when every trained machine closed its KKT violation gap.
    pub fn converged(&self) -> bool {
        self.machines
            .iter()
            .flatten()
            .all(|m| m.converged)
    }

    /// One-vs-rest decision value per class; absent classes get a large
    /// negative constant.
    pub fn decision_values(&self, x: &[S]) -> Result<[f64; 3], PredictError> {
        if x.len() != self.means.len() {
            return Err(PredictError::LengthMismatch {
                a: x.len(),
                b: self.means.len(),
            });
        }
        let z = standardize_row(x, &self.means, &self.scales);
        let gamma_s = S::c(self.gamma);
        let mut out = [ABSENT_CLASS_DECISION; 3];
        for (ci, machine) in self.machines.iter().enumerate() {
            if let Some(m) = machine {
                let mut acc = m.bias;
                for (coef, point) in m.coef.iter().zip(&m.points) {
                    acc += *coef * rbf(point, &z, gamma_s);
                }
                out[ci] = acc.to_f64_lossy();
            }
        }
        Ok(out)
    }

    /// Highest decision value wins; ties break toward the lower index.
    pub fn predict(&self, x: &[S]) -> Result<DepressionLevel, PredictError> {
        let d = self.decision_values(x)?;
        let mut best = 0;
        for c in 1..3 {
            if d[c] > d[best] {
                best = c;
            }
        }
        Ok(DepressionLevel::from_index(best).expect("index in range"))
    }
}
