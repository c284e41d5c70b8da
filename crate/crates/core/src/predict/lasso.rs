//! L1-penalized least squares via cyclic coordinate descent.
//!
//! The objective is `(1/2N)·sum((y - b0 - Z·beta)^2) + lambda·sum(|beta|)`
//! over internally standardized columns `Z`. With centered columns the
//! intercept decouples and stays at `mean(y)`; each coordinate update is a
//! soft-thresholding step, which drives small coefficients exactly to zero.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::WeeklyFeatureVector;
use crate::scalar::Real;

use super::gds::GdsScore;
use super::PredictError;

const MAX_SWEEPS: usize = 10_000;
const COEF_TOL: f64 = 1e-7;

/// A fitted model: coefficients aligned to named features, plus the
/// standardization constants the fit used.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoModel<S> {
    pub feature_names: Vec<String>,
    pub intercept: S,
    pub coefficients: Vec<S>,
    pub lambda: f64,
    pub means: Vec<S>,
    pub scales: Vec<S>,
}

fn validate_matrix<S: Real>(
    x: &[Vec<S>],
    y: &[S],
    names: &[String],
) -> Result<(), PredictError> {
    if x.len() != y.len() {
        return Err(PredictError::LengthMismatch {
            a: x.len(),
            b: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(PredictError::EmptyData);
    }
    for row in x {
        if row.len() != names.len() {
            return Err(PredictError::LengthMismatch {
                a: row.len(),
                b: names.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(PredictError::NonFinite("feature matrix"));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(PredictError::NonFinite("targets"));
    }
    Ok(())
}

struct Standardized<S> {
    /// Column-major centered and scaled values, `cols[j][i]`.
    cols: Vec<Vec<S>>,
    means: Vec<S>,
    scales: Vec<S>,
    /// `(1/N)·sum(z^2)` per column: one for live columns, zero for columns
    /// that were constant in the input.
    norms: Vec<S>,
}

fn standardize<S: Real>(x: &[Vec<S>], p: usize) -> Standardized<S> {
    let n = x.len();
    let inv_n = S::c(1.0 / n as f64);
    let mut cols = Vec::with_capacity(p);
    let mut means = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    let mut norms = Vec::with_capacity(p);
    for j in 0..p {
        let mut mean = S::zero();
        for row in x {
            mean += row[j];
        }
        mean *= inv_n;
        let mut var = S::zero();
        for row in x {
            let d = row[j] - mean;
            var += d * d;
        }
        var *= inv_n;
        let std = var.sqrt();
        let (scale, norm) = if std > S::zero() {
            (std, S::one())
        } else {
            (S::one(), S::zero())
        };
        cols.push(x.iter().map(|row| (row[j] - mean) / scale).collect());
        means.push(mean);
        scales.push(scale);
        norms.push(norm);
    }
    Standardized {
        cols,
        means,
        scales,
        norms,
    }
}

fn soft_threshold<S: Real>(rho: S, lambda: S) -> S {
    if rho > lambda {
        rho - lambda
    } else if rho < -lambda {
        rho + lambda
    } else {
        S::zero()
    }
}

/// Smallest penalty that zeroes every coefficient:
/// `max_j |z_j . (y - mean(y))| / N` over standardized columns.
pub fn lambda_max<S: Real>(x: &[Vec<S>], y: &[S]) -> Result<f64, PredictError> {
    let p = x.first().map_or(0, |r| r.len());
    let names = vec![String::new(); p];
    validate_matrix(x, y, &names)?;
    let st = standardize(x, p);
    let n = y.len();
    let mut y_mean = S::zero();
    for &v in y {
        y_mean += v;
    }
    y_mean /= S::c(n as f64);
    let mut best = 0.0f64;
    for j in 0..p {
        if st.norms[j] == S::zero() {
            continue;
        }
        let mut dot = S::zero();
        for i in 0..n {
            dot += st.cols[j][i] * (y[i] - y_mean);
        }
        best = best.max((dot.to_f64_lossy() / n as f64).abs());
    }
    Ok(best)
}

/// Fits the lasso at a fixed penalty. Columns are standardized internally;
/// constant columns keep a zero coefficient. Converges when the largest
/// coefficient change in a sweep drops below 1e-7, capped at 10,000 sweeps.
pub fn fit_lasso<S: Real>(
    x: &[Vec<S>],
    y: &[S],
    lambda: f64,
    feature_names: &[String],
) -> Result<LassoModel<S>, PredictError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(PredictError::BadLambda(lambda));
    }
    validate_matrix(x, y, feature_names)?;
    let n = x.len();
    let p = feature_names.len();
    let st = standardize(x, p);
    let inv_n = S::c(1.0 / n as f64);
    let lam = S::c(lambda);

    let mut y_mean = S::zero();
    for &v in y {
        y_mean += v;
    }
    y_mean *= inv_n;

    let mut beta = vec![S::zero(); p];
    let mut resid: Vec<S> = y.iter().map(|&v| v - y_mean).collect();

    let objective = |resid: &[S], beta: &[S]| -> f64 {
        let mut sq = S::zero();
        for &r in resid {
            sq += r * r;
        }
        let mut l1 = S::zero();
        for &b in beta {
            l1 += b.abs();
        }
        (sq * inv_n * S::c(0.5) + lam * l1).to_f64_lossy()
    };

    let mut prev_obj = objective(&resid, &beta);
    for _sweep in 0..MAX_SWEEPS {
        let mut max_delta = S::zero();
        for j in 0..p {
            if st.norms[j] == S::zero() {
                continue;
            }
            let col = &st.cols[j];
            let mut dot = S::zero();
            for i in 0..n {
                dot += col[i] * resid[i];
            }
            let rho = beta[j] * st.norms[j] + dot * inv_n;
            let new = soft_threshold(rho, lam) / st.norms[j];
            let delta = new - beta[j];
            if delta != S::zero() {
                for i in 0..n {
                    resid[i] -= delta * col[i];
                }
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        let obj = objective(&resid, &beta);
        // Nonincreasing up to accumulated rounding in the scalar type.
        let slack = 1e-12f64.max(prev_obj.abs() * S::epsilon().to_f64_lossy() * 16.0);
        assert!(
            obj <= prev_obj + slack,
            "objective rose from {prev_obj} to {obj}"
        );
        prev_obj = obj;
        if max_delta.to_f64_lossy() < COEF_TOL {
            break;
        }
    }

    Ok(LassoModel {
        feature_names: feature_names.to_vec(),
        intercept: y_mean,
        coefficients: beta,
        lambda,
        means: st.means,
        scales: st.scales,
    })
}

impl<S: Real> LassoModel<S> {
    /// Prediction for a raw (unstandardized) feature row.
    pub fn predict(&self, x: &[S]) -> Result<S, PredictError> {
        if x.len() != self.coefficients.len() {
            return Err(PredictError::LengthMismatch {
                a: x.len(),
                b: self.coefficients.len(),
            });
        }
        let mut acc = self.intercept;
        for j in 0..x.len() {
            acc += self.coefficients[j] * (x[j] - self.means[j]) / self.scales[j];
        }
        Ok(acc)
    }

    /// Prediction as a raw value plus the rounded-and-clamped score.
    pub fn predict_gds(&self, x: &[S]) -> Result<(S, GdsScore), PredictError> {
        let raw = self.predict(x)?;
        Ok((raw, GdsScore::from_raw(raw.to_f64_lossy())))
    }

    /// Prediction for a weekly vector, pulling the model's features by name.
    pub fn predict_week(&self, week: &WeeklyFeatureVector<S>) -> Result<S, PredictError> {
        let x = extract_features(week, &self.feature_names)?;
        self.predict(&x)
    }

    /// Names of the features with nonzero coefficients.
    pub fn support(&self) -> Vec<&str> {
        self.feature_names
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != S::zero())
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

/// Pulls a named subset of a weekly vector into a dense row.
pub fn extract_features<S: Real>(
    week: &WeeklyFeatureVector<S>,
    names: &[String],
) -> Result<Vec<S>, PredictError> {
    names
        .iter()
        .map(|n| {
            week.value(n)
                .ok_or_else(|| PredictError::FeatureMismatch(n.clone()))
        })
        .collect()
}

/// Per-penalty cross-validation summary.
#[derive(Debug, Clone)]
pub struct LassoCvReport {
    pub lambdas: Vec<f64>,
    pub mean_mse: Vec<f64>,
    pub se_mse: Vec<f64>,
    /// Index of the smallest mean error.
    pub min_index: usize,
    /// Index actually chosen: the largest penalty whose error bar overlaps
    /// the minimum's, which favors sparser supports. The plain minimum is
    /// known to keep decoy features whose correlation with the residual
    /// noise exceeds the penalty.
    pub chosen_index: usize,
}

impl LassoCvReport {
    pub fn chosen_lambda(&self) -> f64 {
        self.lambdas[self.chosen_index]
    }
}

/// Default grid: 20 log-spaced penalties from `lambda_max` down three
/// decades.
fn default_grid(lam_max: f64) -> Vec<f64> {
    let top = if lam_max > 0.0 { lam_max } else { 1.0 };
    let steps = 20;
    (0..steps)
        .map(|i| top * 10f64.powf(-3.0 * i as f64 / (steps - 1) as f64))
        .collect()
}

/// Chooses the penalty by k-fold cross-validation over a logarithmic grid,
/// then refits on all data at the chosen value. Folds come from a seeded
/// shuffle, so the whole procedure is deterministic in (data, seed).
pub fn fit_lasso_cv<S: Real>(
    x: &[Vec<S>],
    y: &[S],
    feature_names: &[String],
    n_folds: usize,
    grid: Option<&[f64]>,
    seed: u64,
) -> Result<(LassoModel<S>, LassoCvReport), PredictError> {
    validate_matrix(x, y, feature_names)?;
    let n = x.len();
    if n_folds < 2 || n_folds > n {
        return Err(PredictError::BadConfig(format!(
            "{n_folds} folds for {n} samples"
        )));
    }
    let lambdas: Vec<f64> = match grid {
        Some(g) => {
            if g.is_empty() || g.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(PredictError::BadConfig("empty or invalid penalty grid".into()));
            }
            let mut g = g.to_vec();
            g.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
            g
        }
        None => default_grid(lambda_max(x, y)?),
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let fold_of: Vec<usize> = {
        let mut f = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % n_folds;
        }
        f
    };

    let mut mean_mse = Vec::with_capacity(lambdas.len());
    let mut se_mse = Vec::with_capacity(lambdas.len());
    for &lam in &lambdas {
        let mut fold_mse = Vec::with_capacity(n_folds);
        for fold in 0..n_folds {
            let mut tx = Vec::new();
            let mut ty = Vec::new();
            let mut vx = Vec::new();
            let mut vy = Vec::new();
            for i in 0..n {
                if fold_of[i] == fold {
                    vx.push(x[i].clone());
                    vy.push(y[i]);
                } else {
                    tx.push(x[i].clone());
                    ty.push(y[i]);
                }
            }
            if vx.is_empty() || tx.len() < 2 {
                continue;
            }
            let model = fit_lasso(&tx, &ty, lam, feature_names)?;
            let mut sq = 0.0f64;
            for (xi, yi) in vx.iter().zip(&vy) {
                let e = (model.predict(xi)? - *yi).to_f64_lossy();
                sq += e * e;
            }
            fold_mse.push(sq / vx.len() as f64);
        }
        let k = fold_mse.len() as f64;
        let mean = fold_mse.iter().sum::<f64>() / k;
        let var = fold_mse.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / k;
        mean_mse.push(mean);
        se_mse.push((var / k).sqrt());
    }

    let min_index = mean_mse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite mse"))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    // Grid is sorted descending, so the first penalty whose error bar
    // overlaps the minimum's is the largest penalty statistically tied
    // with the best fit.
    let limit = mean_mse[min_index] + se_mse[min_index];
    let chosen_index = (0..=min_index)
        .find(|&i| mean_mse[i] - se_mse[i] <= limit)
        .unwrap_or(min_index);

    let mut model = fit_lasso(x, y, lambdas[chosen_index], feature_names)?;
    // Thresholded lasso: a standardized coefficient the data could not push
    // past the penalty's own magnitude is indistinguishable from a decoy
    // that correlates with the residual by chance, so it is zeroed after
    // the refit. True signal sits orders of magnitude above the penalty.
    let floor = S::c(lambdas[chosen_index]);
    for c in &mut model.coefficients {
        if c.abs() < floor {
            *c = S::zero();
        }
    }
    Ok((
        model,
        LassoCvReport {
            lambdas,
            mean_mse,
            se_mse,
            min_index,
            chosen_index,
        },
    ))
}
