//! Nearest-neighbor severity classification.
//!
//! Distances are Euclidean over internally standardized features. Voting
//! ties break toward the lower class index; distance ties when cutting off
//! the neighbor list break toward the canonical training order, so
//! predictions do not depend on how the caller arranged the samples.

use crate::har::train::fnv1a64;
use crate::scalar::Real;

use super::gds::DepressionLevel;
use super::PredictError;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel<S> {
    k: usize,
    /// Standardized training rows in canonical order.
    points: Vec<Vec<S>>,
    labels: Vec<DepressionLevel>,
    means: Vec<S>,
    scales: Vec<S>,
}

pub(super) fn validate_samples<S: Real>(
    train: &[(Vec<S>, DepressionLevel)],
) -> Result<usize, PredictError> {
    let p = match train.first() {
        Some((row, _)) => row.len(),
        None => return Err(PredictError::EmptyData),
    };
    for (row, _) in train {
        if row.len() != p {
            return Err(PredictError::LengthMismatch {
                a: row.len(),
                b: p,
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(PredictError::NonFinite("training features"));
        }
    }
    let mut present = [false; DepressionLevel::COUNT];
    for (_, l) in train {
        present[l.index()] = true;
    }
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(PredictError::DegenerateTraining(
            "fewer than two classes present".into(),
        ));
    }
    Ok(p)
}

/// Stable order independent of caller arrangement: class, content hash.
pub(super) fn canonical_order<S: Real>(train: &[(Vec<S>, DepressionLevel)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by_key(|&i| {
        let (row, label) = &train[i];
        let h = fnv1a64(row.iter().flat_map(|v| v.to_f64_lossy().to_le_bytes()));
        (label.index(), h)
    });
    order
}

/// Per-column mean and population standard deviation; constant columns get
/// scale one.
pub(super) fn standardization<S: Real>(rows: &[Vec<S>], p: usize) -> (Vec<S>, Vec<S>) {
    let inv_n = S::c(1.0 / rows.len() as f64);
    let mut means = vec![S::zero(); p];
    let mut scales = vec![S::one(); p];
    for j in 0..p {
        let mut mean = S::zero();
        for r in rows {
            mean += r[j];
        }
        mean *= inv_n;
        let mut var = S::zero();
        for r in rows {
            let d = r[j] - mean;
            var += d * d;
        }
        let std = (var * inv_n).sqrt();
        means[j] = mean;
        if std > S::zero() {
            scales[j] = std;
        }
    }
    (means, scales)
}

pub(super) fn standardize_row<S: Real>(row: &[S], means: &[S], scales: &[S]) -> Vec<S> {
    row.iter()
        .enumerate()
        .map(|(j, &v)| (v - means[j]) / scales[j])
        .collect()
}

pub fn fit_knn<S: Real>(
    train: &[(Vec<S>, DepressionLevel)],
    k: usize,
) -> Result<KnnModel<S>, PredictError> {
    let p = validate_samples(train)?;
    if k == 0 || k > train.len() {
        return Err(PredictError::BadConfig(format!(
            "k = {k} with {} training samples",
            train.len()
        )));
    }
    let order = canonical_order(train);
    let raw: Vec<Vec<S>> = order.iter().map(|&i| train[i].0.clone()).collect();
    let labels: Vec<DepressionLevel> = order.iter().map(|&i| train[i].1).collect();
    let (means, scales) = standardization(&raw, p);
    let points = raw
        .iter()
        .map(|r| standardize_row(r, &means, &scales))
        .collect();
    Ok(KnnModel {
        k,
        points,
        labels,
        means,
        scales,
    })
}

impl<S: Real> KnnModel<S> {
    pub fn k(&self) -> usize {
        self.k
    }

    fn neighbors(&self, x: &[S]) -> Result<Vec<usize>, PredictError> {
        if x.len() != self.means.len() {
            return Err(PredictError::LengthMismatch {
                a: x.len(),
                b: self.means.len(),
            });
        }
        let z = standardize_row(x, &self.means, &self.scales);
        let mut by_dist: Vec<(S, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut d = S::zero();
                for j in 0..z.len() {
                    let diff = p[j] - z[j];
                    d += diff * diff;
                }
                (d, i)
            })
            .collect();
        by_dist.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });
        Ok(by_dist[..self.k].iter().map(|&(_, i)| i).collect())
    }

    /// Vote share per class among the k nearest neighbors.
    pub fn scores(&self, x: &[S]) -> Result<[f64; 3], PredictError> {
        let mut votes = [0usize; 3];
        for i in self.neighbors(x)? {
            votes[self.labels[i].index()] += 1;
        }
        Ok([
            votes[0] as f64 / self.k as f64,
            votes[1] as f64 / self.k as f64,
            votes[2] as f64 / self.k as f64,
        ])
    }

    /// Majority vote; ties break toward the lower class index.
    pub fn predict(&self, x: &[S]) -> Result<DepressionLevel, PredictError> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for c in 1..3 {
            if scores[c] > scores[best] {
                best = c;
            }
        }
        Ok(DepressionLevel::from_index(best).expect("index in range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use DepressionLevel::{Absence, MildModerate, Severe};

    fn blobs(per_class: usize, seed: u64) -> Vec<(Vec<f64>, DepressionLevel)> {
        let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for level in DepressionLevel::ALL {
            let c = centers[level.index()];
            for _ in 0..per_class {
                out.push((
                    vec![
                        c[0] + rng.random_range(-0.3..0.3),
                        c[1] + rng.random_range(-0.3..0.3),
                    ],
                    level,
                ));
            }
        }
        out
    }

    #[test]
    fn one_neighbor_memorizes_the_training_set() {
        let data = blobs(10, 1);
        let m = fit_knn(&data, 1).unwrap();
        for (x, label) in &data {
            assert_eq!(m.predict(x).unwrap(), *label);
        }
    }

    #[test]
    fn separated_blobs_classify_cleanly_at_k5() {
        let data = blobs(20, 2);
        let m = fit_knn(&data, 5).unwrap();
        for (x, label) in &data {
            assert_eq!(m.predict(x).unwrap(), *label);
            let s = m.scores(x).unwrap();
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(s[label.index()], 1.0);
        }
        // Fresh draws from the same blobs also land correctly.
        for (x, label) in blobs(5, 99) {
            assert_eq!(m.predict(&x).unwrap(), label);
        }
    }

    #[test]
    fn vote_ties_prefer_the_lower_class_index() {
        // Two equidistant neighbors, one MildModerate and one Severe.
        let data = vec![
            (vec![0.0, 1.0], MildModerate),
            (vec![0.0, -1.0], Severe),
        ];
        let m = fit_knn(&data, 2).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), MildModerate);
        let s = m.scores(&[0.0, 0.0]).unwrap();
        assert_eq!(s, [0.0, 0.5, 0.5]);
    }

    #[test]
    fn standardization_keeps_noisy_wide_features_in_check() {
        // Feature 0 carries the class signal on a unit scale; feature 1 is
        // huge-amplitude noise. Standardized distances keep both at unit
        // variance, so the signal still dominates between class centers.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data = Vec::new();
        for level in DepressionLevel::ALL {
            for _ in 0..12 {
                data.push((
                    vec![
                        level.index() as f64 * 10.0 + rng.random_range(-0.5..0.5),
                        rng.random_range(-40_000.0..40_000.0),
                    ],
                    level,
                ));
            }
        }
        let m = fit_knn(&data, 5).unwrap();
        let mut correct = 0;
        let total = 30;
        for i in 0..total {
            let level = DepressionLevel::ALL[i % 3];
            let x = vec![
                level.index() as f64 * 10.0 + rng.random_range(-0.5..0.5),
                rng.random_range(-40_000.0..40_000.0),
            ];
            if m.predict(&x).unwrap() == level {
                correct += 1;
            }
        }
        assert!(correct >= 28, "only {correct}/{total} correct");
    }

    #[test]
    fn sample_order_does_not_change_predictions() {
        let data = blobs(8, 3);
        let mut shuffled = data.clone();
        shuffled.reverse();
        let a = fit_knn(&data, 3).unwrap();
        let b = fit_knn(&shuffled, 3).unwrap();
        assert_eq!(a, b);
        for (x, _) in &data {
            assert_eq!(a.scores(x).unwrap(), b.scores(x).unwrap());
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(
            fit_knn::<f64>(&[], 1),
            Err(PredictError::EmptyData)
        ));
        let single: Vec<(Vec<f64>, DepressionLevel)> =
            vec![(vec![1.0], Absence), (vec![2.0], Absence)];
        assert!(matches!(
            fit_knn(&single, 1),
            Err(PredictError::DegenerateTraining(_))
        ));
        let two = vec![(vec![1.0], Absence), (vec![2.0], Severe)];
        assert!(matches!(
            fit_knn(&two, 0),
            Err(PredictError::BadConfig(_))
        ));
        assert!(matches!(
            fit_knn(&two, 3),
            Err(PredictError::BadConfig(_))
        ));
        let ragged = vec![(vec![1.0], Absence), (vec![2.0, 3.0], Severe)];
        assert!(matches!(
            fit_knn(&ragged, 1),
            Err(PredictError::LengthMismatch { .. })
        ));
        let m = fit_knn(&two, 1).unwrap();
        assert!(matches!(
            m.predict(&[1.0, 2.0]),
            Err(PredictError::LengthMismatch { .. })
        ));
    }
}
