//! Leave-one-participant-out evaluation, minority-class oversampling, and
//! greedy forward feature selection.
//!
//! Folds are keyed by participant so no participant's weeks ever appear on
//! both sides of a split. Fold order is sorted by participant id and each
//! fold gets a seed derived from the base seed and the id, so results do
//! not depend on the caller's row order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::har::train::{fnv1a64, splitmix64};
use crate::scalar::Real;

use super::gds::{DepressionLevel, GdsScore, ParticipantWeek};
use super::lasso::{extract_features, fit_lasso};
use super::PredictError;

/// Salt mixed into a fold's seed before oversampling so balancing and model
/// fitting draw from unrelated streams.
const BALANCE_SALT: u64 = 0x0ba1_a4ce_5a17;

/// Held-out predictions for one participant: (reported score, prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressFold<S> {
    pub participant_id: String,
    pub pairs: Vec<(GdsScore, S)>,
}

/// Held-out classifications for one participant:
/// (true level, predicted level, per-class scores).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyFold {
    pub participant_id: String,
    pub results: Vec<(DepressionLevel, DepressionLevel, [f64; 3])>,
}

fn fold_groups<S>(weeks: &[ParticipantWeek<S>]) -> Result<BTreeMap<&str, Vec<usize>>, PredictError> {
    if weeks.is_empty() {
        return Err(PredictError::EmptyData);
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, w) in weeks.iter().enumerate() {
        groups.entry(&w.vector.participant_id).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(PredictError::SingleParticipant);
    }
    Ok(groups)
}

fn fold_seed(base: u64, participant_id: &str) -> u64 {
    splitmix64(base ^ fnv1a64(participant_id.bytes()))
}

/// Leave-one-participant-out regression. For each participant, `fit` sees
/// every other participant's weeks plus a fold seed, and `predict` is asked
/// for each held-out week.
pub fn loocv_regress<S: Real, M>(
    weeks: &[ParticipantWeek<S>],
    seed: u64,
    mut fit: impl FnMut(&[ParticipantWeek<S>], u64) -> Result<M, PredictError>,
    mut predict: impl FnMut(&M, &ParticipantWeek<S>) -> Result<S, PredictError>,
) -> Result<Vec<RegressFold<S>>, PredictError> {
    let groups = fold_groups(weeks)?;
    let mut folds = Vec::with_capacity(groups.len());
    for (pid, held) in &groups {
        let train: Vec<ParticipantWeek<S>> = weeks
            .iter()
            .filter(|w| w.vector.participant_id != *pid)
            .cloned()
            .collect();
        let model = fit(&train, fold_seed(seed, pid))?;
        let mut pairs = Vec::with_capacity(held.len());
        for &i in held {
            pairs.push((weeks[i].gds, predict(&model, &weeks[i])?));
        }
        folds.push(RegressFold {
            participant_id: (*pid).to_string(),
            pairs,
        });
    }
    Ok(folds)
}

/// Root mean squared deviation over every held-out pair of all folds.
pub fn pooled_rmsd<S: Real>(folds: &[RegressFold<S>]) -> Result<S, PredictError> {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for fold in folds {
        for (gds, p) in &fold.pairs {
            truth.push(S::c(gds.value() as f64));
            pred.push(*p);
        }
    }
    super::gds::rmsd(&pred, &truth)
}

/// Leave-one-participant-out classification over (feature row, level)
/// pairs. With `balance` set, each fold's training rows are oversampled to
/// equal class counts before `fit` sees them.
pub fn loocv_classify<S: Real, M>(
    weeks: &[ParticipantWeek<S>],
    balance: bool,
    seed: u64,
    mut fit: impl FnMut(&[(Vec<S>, DepressionLevel)], u64) -> Result<M, PredictError>,
    mut predict: impl FnMut(&M, &[S]) -> Result<(DepressionLevel, [f64; 3]), PredictError>,
) -> Result<Vec<ClassifyFold>, PredictError> {
    let groups = fold_groups(weeks)?;
    let mut folds = Vec::with_capacity(groups.len());
    for (pid, held) in &groups {
        let fs = fold_seed(seed, pid);
        let mut train: Vec<(Vec<S>, DepressionLevel)> = weeks
            .iter()
            .filter(|w| w.vector.participant_id != *pid)
            .map(|w| (w.vector.values.to_vec(), w.level()))
            .collect();
        if balance {
            train = oversample(&train, fs ^ BALANCE_SALT)?;
        }
        let model = fit(&train, fs)?;
        let mut results = Vec::with_capacity(held.len());
        for &i in held {
            let row = weeks[i].vector.values.to_vec();
            let (level, scores) = predict(&model, &row)?;
            results.push((weeks[i].level(), level, scores));
        }
        folds.push(ClassifyFold {
            participant_id: (*pid).to_string(),
            results,
        });
    }
    Ok(folds)
}

/// Equalizes class counts by synthesizing minority-class rows: each new row
/// is a uniform point on the segment between a minority sample and one of
/// its nearest same-class neighbors. Originals are returned unchanged, in
/// their input order, with the synthetic rows appended. A class with a
/// single sample is duplicated as-is; a class with no samples is an error.
pub fn oversample<S: Real>(
    samples: &[(Vec<S>, DepressionLevel)],
    seed: u64,
) -> Result<Vec<(Vec<S>, DepressionLevel)>, PredictError> {
    if samples.is_empty() {
        return Err(PredictError::EmptyData);
    }
    let dim = samples[0].0.len();
    let mut by_class: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, (row, level)) in samples.iter().enumerate() {
        if row.len() != dim {
            return Err(PredictError::LengthMismatch {
                a: row.len(),
                b: dim,
            });
        }
        by_class[level.index()].push(i);
    }
    for level in DepressionLevel::ALL {
        if by_class[level.index()].is_empty() {
            return Err(PredictError::EmptyClass(level));
        }
    }
    let target = by_class.iter().map(Vec::len).max().expect("three classes");

    let mut out: Vec<(Vec<S>, DepressionLevel)> = samples.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    for level in DepressionLevel::ALL {
        let members = &by_class[level.index()];
        let count = members.len();
        if count == target {
            continue;
        }
        // Neighbor lists by squared distance, nearest first, self excluded.
        let k = 3.min(count - 1);
        let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(count);
        for (a, &ia) in members.iter().enumerate() {
            let mut dists: Vec<(S, usize)> = members
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != a)
                .map(|(b, &ib)| {
                    let mut d = S::zero();
                    for j in 0..dim {
                        let diff = samples[ia].0[j] - samples[ib].0[j];
                        d += diff * diff;
                    }
                    (d, b)
                })
                .collect();
            dists.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite").then(x.1.cmp(&y.1)));
            neighbors.push(dists.into_iter().take(k).map(|(_, b)| b).collect());
        }
        for t in 0..target - count {
            let a = t % count;
            let base = &samples[members[a]].0;
            let row = if k == 0 {
                base.clone()
            } else {
                let b = neighbors[a][rng.random_range(0..k)];
                let other = &samples[members[b]].0;
                let u = S::c(rng.random::<f64>());
                base.iter()
                    .zip(other)
                    .map(|(&x, &y)| x + u * (y - x))
                    .collect()
            };
            out.push((row, level));
        }
    }
    Ok(out)
}

/// Pooled leave-one-participant-out RMSD of a fixed-penalty fit on the
/// named features. An empty feature list scores the intercept-only
/// baseline that always predicts the training mean.
pub fn lasso_loocv_rmsd<S: Real>(
    weeks: &[ParticipantWeek<S>],
    features: &[String],
    lambda: f64,
    seed: u64,
) -> Result<f64, PredictError> {
    enum FoldModel<S> {
        Mean(S),
        Fit(super::lasso::LassoModel<S>),
    }
    let folds = loocv_regress(
        weeks,
        seed,
        |train, _| {
            if features.is_empty() {
                let mut mean = S::zero();
                for w in train {
                    mean += S::c(w.gds.value() as f64);
                }
                return Ok(FoldModel::Mean(mean / S::c(train.len() as f64)));
            }
            let mut x = Vec::with_capacity(train.len());
            let mut y = Vec::with_capacity(train.len());
            for w in train {
                x.push(extract_features(&w.vector, features)?);
                y.push(S::c(w.gds.value() as f64));
            }
            Ok(FoldModel::Fit(fit_lasso(&x, &y, lambda, features)?))
        },
        |model, week| match model {
            FoldModel::Mean(m) => Ok(*m),
            FoldModel::Fit(f) => f.predict_week(&week.vector),
        },
    )?;
    Ok(pooled_rmsd(&folds)?.to_f64_lossy())
}

/// Forward-selection outcome. `rmsd_trace` starts at the baseline and has
/// one entry per accepted feature; `selected_rmsd` belongs to the returned
/// set, which is the full candidate list when that beats the greedy path.
#[derive(Debug, Clone, PartialEq)]
pub struct WrapperReport {
    pub selected: Vec<String>,
    pub selected_rmsd: f64,
    pub baseline_rmsd: f64,
    pub full_rmsd: f64,
    pub rmsd_trace: Vec<f64>,
}

/// Greedy forward wrapper around an arbitrary subset scorer (lower is
/// better). Each round tries every unused candidate appended to the current
/// set and keeps the best, stopping when the improvement falls under 1e-6.
/// The full candidate set is scored last and wins outright if it beats the
/// greedy result.
pub fn wrapper_select(
    candidates: &[String],
    mut evaluate: impl FnMut(&[String]) -> Result<f64, PredictError>,
) -> Result<WrapperReport, PredictError> {
    if candidates.is_empty() {
        return Err(PredictError::NoCandidates);
    }
    for (i, c) in candidates.iter().enumerate() {
        if candidates[..i].contains(c) {
            return Err(PredictError::BadConfig(format!("duplicate candidate {c}")));
        }
    }
    let score = |v: f64, what: &'static str| -> Result<f64, PredictError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(PredictError::NonFinite(what))
        }
    };

    let baseline = score(evaluate(&[])?, "baseline objective")?;
    let mut selected: Vec<String> = Vec::new();
    let mut remaining: Vec<String> = candidates.to_vec();
    let mut best = baseline;
    let mut trace = vec![baseline];

    while !remaining.is_empty() {
        let mut round_best: Option<(usize, f64)> = None;
        for (i, cand) in remaining.iter().enumerate() {
            let mut trial = selected.clone();
            trial.push(cand.clone());
            let v = score(evaluate(&trial)?, "wrapper objective")?;
            if round_best.map_or(true, |(_, rv)| v < rv) {
                round_best = Some((i, v));
            }
        }
        match round_best {
            Some((i, v)) if best - v > 1e-6 => {
                selected.push(remaining.remove(i));
                best = v;
                trace.push(v);
            }
            _ => break,
        }
    }

    let full = score(evaluate(candidates)?, "full-set objective")?;
    let (selected, selected_rmsd) = if full < best {
        (candidates.to_vec(), full)
    } else {
        (selected, best)
    };
    Ok(WrapperReport {
        selected,
        selected_rmsd,
        baseline_rmsd: baseline,
        full_rmsd: full,
        rmsd_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{WeeklyFeatureVector, FEATURE_NAMES};
    use std::cell::RefCell;
    use DepressionLevel::{Absence, Severe};

    /// A week whose working/weekend halves are filled with `fill`, except
    /// feature index 0 of the week block carries `marker`.
    fn week_of(pid: &str, idx: u32, marker: f64, fill: f64) -> WeeklyFeatureVector<f64> {
        let mut working = [fill; 9];
        let weekend = [fill; 9];
        working[0] = marker - fill;
        WeeklyFeatureVector::from_subgroups(pid, idx, working, weekend)
    }

    fn cohort(spec: &[(&str, u8, usize)]) -> Vec<ParticipantWeek<f64>> {
        let mut out = Vec::new();
        for &(pid, gds, n_weeks) in spec {
            for w in 0..n_weeks {
                let marker = if pid == "p03" { 777_777.0 } else { 10.0 };
                out.push(
                    ParticipantWeek::new(week_of(pid, w as u32, marker, 1.0), gds).unwrap(),
                );
            }
        }
        out
    }

    #[test]
    fn regression_folds_never_leak_the_held_out_participant() {
        let weeks = cohort(&[
            ("p01", 2, 3),
            ("p02", 7, 3),
            ("p03", 12, 3),
            ("p04", 4, 3),
            ("p05", 9, 3),
        ]);
        let sentinel_seen = RefCell::new(Vec::new());
        let seeds = RefCell::new(Vec::new());
        let folds = loocv_regress(
            &weeks,
            42,
            |train, fs| {
                assert_eq!(train.len(), 12);
                sentinel_seen
                    .borrow_mut()
                    .push(train.iter().any(|w| w.vector.values[0] == 777_777.0));
                seeds.borrow_mut().push(fs);
                let mean =
                    train.iter().map(|w| w.gds.value() as f64).sum::<f64>() / train.len() as f64;
                Ok(mean)
            },
            |m, _| Ok(*m),
        )
        .unwrap();

        let pids: Vec<&str> = folds.iter().map(|f| f.participant_id.as_str()).collect();
        assert_eq!(pids, ["p01", "p02", "p03", "p04", "p05"]);
        // The sentinel participant's data is present except in its own fold.
        assert_eq!(*sentinel_seen.borrow(), [true, true, false, true, true]);
        // Per-fold seeds are distinct and reproducible.
        let s = seeds.borrow().clone();
        assert_eq!(s.len(), 5);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        let replayed = RefCell::new(Vec::new());
        loocv_regress(
            &weeks,
            42,
            |_, fs| {
                replayed.borrow_mut().push(fs);
                Ok(0.0)
            },
            |m, _| Ok(*m),
        )
        .unwrap();
        assert_eq!(*replayed.borrow(), s);

        assert!(folds.iter().all(|f| f.pairs.len() == 3));
        let r = pooled_rmsd(&folds).unwrap();
        assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn single_participant_and_empty_are_rejected() {
        let weeks = cohort(&[("p01", 3, 4)]);
        assert!(matches!(
            loocv_regress(&weeks, 0, |_, _| Ok(0.0), |_, _| Ok(0.0)),
            Err(PredictError::SingleParticipant)
        ));
        assert!(matches!(
            loocv_regress::<f64, f64>(&[], 0, |_, _| Ok(0.0), |_, _| Ok(0.0)),
            Err(PredictError::EmptyData)
        ));
    }

    #[test]
    fn classification_folds_balance_training_classes() {
        // 4 absence, 3 mild, 2 severe participants, two weeks each.
        let weeks = cohort(&[
            ("a1", 1, 2),
            ("a2", 2, 2),
            ("a3", 3, 2),
            ("a4", 2, 2),
            ("m1", 6, 2),
            ("m2", 8, 2),
            ("m3", 9, 2),
            ("s1", 11, 2),
            ("s2", 14, 2),
        ]);
        let counts = RefCell::new(Vec::new());
        let folds = loocv_classify(
            &weeks,
            true,
            7,
            |train, _| {
                let mut c = [0usize; 3];
                for (_, level) in train {
                    c[level.index()] += 1;
                }
                counts.borrow_mut().push(c);
                Ok(())
            },
            |(), _| Ok((Absence, [1.0, 0.0, 0.0])),
        )
        .unwrap();
        assert_eq!(folds.len(), 9);
        for c in counts.borrow().iter() {
            assert_eq!(c[0], c[1]);
            assert_eq!(c[1], c[2]);
        }
        // Unbalanced folds keep the raw counts.
        let raw = RefCell::new(Vec::new());
        loocv_classify(
            &weeks,
            false,
            7,
            |train, _| {
                let mut c = [0usize; 3];
                for (_, level) in train {
                    c[level.index()] += 1;
                }
                raw.borrow_mut().push(c);
                Ok(())
            },
            |(), _| Ok((Absence, [1.0, 0.0, 0.0])),
        )
        .unwrap();
        assert_eq!(raw.borrow()[0], [6, 6, 4]);
    }

    #[test]
    fn balancing_fails_when_a_fold_empties_a_class() {
        // The only severe participant cannot be balanced against once held
        // out; earlier folds still see all three classes.
        let weeks = cohort(&[
            ("a1", 1, 2),
            ("a2", 2, 2),
            ("m1", 7, 2),
            ("m2", 8, 2),
            ("s1", 12, 2),
        ]);
        let err = loocv_classify(
            &weeks,
            true,
            0,
            |_, _| Ok(()),
            |(), _| Ok((Absence, [1.0, 0.0, 0.0])),
        )
        .unwrap_err();
        assert!(matches!(err, PredictError::EmptyClass(Severe)));
    }

    fn clustered(counts: [usize; 3]) -> Vec<(Vec<f64>, DepressionLevel)> {
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut out = Vec::new();
        for level in DepressionLevel::ALL {
            let c = centers[level.index()];
            for i in 0..counts[level.index()] {
                out.push((vec![c[0] + 0.1 * i as f64, c[1]], level));
            }
        }
        out
    }

    /// Squared distance from a point to the segment between a and b.
    fn segment_dist2(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let mut ab2 = 0.0;
        let mut ap_ab = 0.0;
        for j in 0..p.len() {
            ab2 += (b[j] - a[j]).powi(2);
            ap_ab += (p[j] - a[j]) * (b[j] - a[j]);
        }
        let t = if ab2 > 0.0 {
            (ap_ab / ab2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut d2 = 0.0;
        for j in 0..p.len() {
            d2 += (p[j] - (a[j] + t * (b[j] - a[j]))).powi(2);
        }
        d2
    }

    #[test]
    fn oversampling_equalizes_counts_with_convex_synthetics() {
        let data = clustered([23, 7, 3]);
        let out = oversample(&data, 5).unwrap();
        assert_eq!(out.len(), 69);
        assert_eq!(&out[..data.len()], &data[..]);
        let mut counts = [0usize; 3];
        for (_, level) in &out {
            counts[level.index()] += 1;
        }
        assert_eq!(counts, [23, 23, 23]);
        // Every synthetic row lies on a segment between two same-class
        // originals.
        for (row, level) in &out[data.len()..] {
            let class: Vec<&Vec<f64>> = data
                .iter()
                .filter(|(_, l)| l == level)
                .map(|(r, _)| r)
                .collect();
            let mut best = f64::INFINITY;
            for i in 0..class.len() {
                for j in 0..class.len() {
                    best = best.min(segment_dist2(row, class[i], class[j]));
                }
            }
            assert!(best < 1e-18, "synthetic row off-segment by {best}");
        }
    }

    #[test]
    fn oversampling_edge_cases() {
        let balanced = clustered([4, 4, 4]);
        assert_eq!(oversample(&balanced, 1).unwrap(), balanced);

        // A singleton class can only be duplicated.
        let data = clustered([3, 3, 1]);
        let out = oversample(&data, 2).unwrap();
        let severe: Vec<&Vec<f64>> = out
            .iter()
            .filter(|(_, l)| *l == Severe)
            .map(|(r, _)| r)
            .collect();
        assert_eq!(severe.len(), 3);
        assert!(severe.iter().all(|r| **r == *severe[0]));

        let a = oversample(&clustered([9, 5, 2]), 3).unwrap();
        assert_eq!(a, oversample(&clustered([9, 5, 2]), 3).unwrap());
        assert_ne!(a, oversample(&clustered([9, 5, 2]), 4).unwrap());

        let missing = clustered([3, 3, 0]);
        assert!(matches!(
            oversample(&missing, 0),
            Err(PredictError::EmptyClass(Severe))
        ));
        assert!(matches!(
            oversample::<f64>(&[], 0),
            Err(PredictError::EmptyData)
        ));
    }

    #[test]
    fn wrapper_follows_the_scripted_objective() {
        let names = |s: &[&str]| -> Vec<String> { s.iter().map(|x| x.to_string()).collect() };
        let cands = names(&["a", "b", "c"]);
        let mock = |full_value: f64| {
            move |set: &[String]| -> Result<f64, PredictError> {
                let key: Vec<&str> = set.iter().map(String::as_str).collect();
                Ok(match key.as_slice() {
                    [] => 10.0,
                    ["a"] => 5.0,
                    ["b"] => 7.0,
                    ["c"] => 9.0,
                    // Sub-threshold improvement: the greedy pass must stop.
                    ["a", "b"] => 5.0 - 5e-7,
                    ["a", "c"] => 6.0,
                    ["a", "b", "c"] => full_value,
                    other => panic!("unexpected subset {other:?}"),
                })
            }
        };
        let r = wrapper_select(&cands, mock(6.0)).unwrap();
        assert_eq!(r.selected, names(&["a"]));
        assert_eq!(r.selected_rmsd, 5.0);
        assert_eq!(r.baseline_rmsd, 10.0);
        assert_eq!(r.full_rmsd, 6.0);
        assert_eq!(r.rmsd_trace, [10.0, 5.0]);

        // A full set that beats the greedy path wins outright.
        let r = wrapper_select(&cands, mock(4.0)).unwrap();
        assert_eq!(r.selected, cands);
        assert_eq!(r.selected_rmsd, 4.0);

        assert!(matches!(
            wrapper_select(&[], |_| Ok(0.0)),
            Err(PredictError::NoCandidates)
        ));
        assert!(matches!(
            wrapper_select(&names(&["a", "a"]), |_| Ok(0.0)),
            Err(PredictError::BadConfig(_))
        ));
        assert!(matches!(
            wrapper_select(&cands, |_| Ok(f64::NAN)),
            Err(PredictError::NonFinite(_))
        ));
    }

    #[test]
    fn wrapper_finds_a_planted_predictive_feature() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut weeks = Vec::new();
        for p in 0..12 {
            let gds = (p * 15 / 11) as u8;
            for wi in 0..2 {
                let mut working = [0.0f64; 9];
                let mut weekend = [0.0f64; 9];
                for j in 0..9 {
                    working[j] = rng.random_range(0.0..5.0);
                    weekend[j] = rng.random_range(0.0..5.0);
                }
                // Feature JoT_week = working[3] + weekend[3] carries the
                // signal; everything else is noise.
                let signal = gds as f64 + rng.random_range(-0.2..0.2);
                working[3] = signal / 2.0;
                weekend[3] = signal / 2.0;
                let v = WeeklyFeatureVector::from_subgroups(format!("p{p:02}"), wi, working, weekend);
                weeks.push(ParticipantWeek::new(v, gds).unwrap());
            }
        }
        let candidates: Vec<String> = [3usize, 0, 1, 2, 4, 5]
            .iter()
            .map(|&i| FEATURE_NAMES[i].to_string())
            .collect();
        let report = wrapper_select(&candidates, |set| {
            lasso_loocv_rmsd(&weeks, set, 0.05, 9)
        })
        .unwrap();
        assert_eq!(report.selected[0], FEATURE_NAMES[3]);
        assert!(report.selected_rmsd < report.baseline_rmsd / 2.0);
    }
}
