//! Deterministic synthetic cohort with a known severity-to-behavior coupling.
//!
//! A [`ParticipantProfile`] fixes one participant's identities, ground-truth
//! severity and behavioral propensities. [`synth_accel_day`], [`synth_tweets`]
//! and [`synth_gds`] expand a profile into the same streams the pipeline
//! ingests: 20 Hz accelerometer samples, tweet lines and weekly scores.
//! Every generator is a pure function of (profile, date) or (profile, week),
//! so cohorts regenerate bit-identically and days can be produced in any
//! order or in parallel.

mod accel;
mod tweets;

pub use accel::{day_schedule, synth_accel_day, synth_labeled_windows, DayBout, GRAVITY};
pub use tweets::synth_tweets;

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use hscreen_core::predict::{DepressionLevel, GdsScore};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CohortError {
    #[error("a cohort needs at least 3 participants, got {0}")]
    TooSmall(usize),
}

/// Severity mix of a generated cohort: 23 Absence to 7 MildModerate to
/// 3 Severe, indexed by [`DepressionLevel::index`].
pub const STRATUM_WEIGHTS: [usize; 3] = [23, 7, 3];

/// Expected daily seconds of recorded activity, indexed by
/// [`DepressionLevel::index`] then by activity encoding order (Sitting,
/// Walking, Standing, Jogging, Upstairs, Downstairs). The coupling is
/// monotone: severity raises sitting and lowers every locomotion class.
pub const ACTIVITY_SECONDS: [[f64; 6]; 3] = [
    [80.0, 50.0, 40.0, 40.0, 16.0, 16.0],
    [120.0, 38.0, 40.0, 20.0, 12.0, 12.0],
    [165.0, 24.0, 40.0, 6.0, 8.0, 8.0],
];

/// Expected daily tweet counts, indexed by [`DepressionLevel::index`] then
/// by sentiment encoding order (Negative, Neutral, Positive). Monotone the
/// other way: severity raises negative posting and lowers positive posting.
pub const TWEET_COUNTS: [[f64; 3]; 3] = [
    [0.5, 1.0, 2.5],
    [1.3, 1.0, 1.3],
    [2.6, 1.0, 0.6],
];

/// GDS stratum centers per severity level.
pub const GDS_CENTER: [u8; 3] = [2, 7, 12];

/// Inclusive GDS interval owned by each severity level.
pub const GDS_RANGE: [(u8, u8); 3] = [(0, 4), (5, 9), (10, 15)];

/// Per-participant multiplicative spread applied to each propensity.
const PROFILE_JITTER: std::ops::Range<f64> = 0.9..1.1;

// Arbitrary distinct salts so each generator family owns an rng stream.
const COHORT_SALT: u64 = 0xc001_0b17_5eed_0001;
pub(crate) const DAY_SALT: u64 = 0xacce_1da7_5eed_0002;
pub(crate) const TWEET_SALT: u64 = 0x7e37_da7a_5eed_0003;
const GDS_SALT: u64 = 0x06d5_da7a_5eed_0004;
pub(crate) const WINDOW_SALT: u64 = 0x3a6e_11ed_5eed_0005;

/// Splitmix-style mix of a seed with a purpose salt and an index, so every
/// (participant, purpose, day-or-week) triple owns an independent stream.
pub(crate) fn mix(seed: u64, salt: u64, k: u64) -> u64 {
    let mut z = seed ^ salt ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One synthetic participant: identities, ground-truth severity and the
/// propensities every generated day and week is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantProfile {
    pub participant_id: String,
    /// 15-digit device identity; source key of the accelerometer stream.
    pub imei: String,
    /// 18-digit account identity; source key of the tweet stream.
    pub twitter_id: String,
    pub true_severity: DepressionLevel,
    /// Expected daily seconds per activity, in activity encoding order.
    pub activity_secs: [f64; 6],
    /// Expected daily tweet counts per label, in sentiment encoding order.
    pub tweet_counts: [f64; 3],
    /// Root of every stream this participant generates.
    pub seed: u64,
}

/// Largest-remainder split of `n` across [`STRATUM_WEIGHTS`], then patched
/// so every stratum stays nonempty (small cohorts would otherwise starve
/// the Severe stratum).
fn stratum_counts(n: usize) -> [usize; 3] {
    let total: usize = STRATUM_WEIGHTS.iter().sum();
    let mut counts = [0usize; 3];
    let mut remainders = [(0usize, 0usize); 3];
    for (i, &w) in STRATUM_WEIGHTS.iter().enumerate() {
        counts[i] = n * w / total;
        remainders[i] = ((n * w) % total, i);
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = counts.iter().sum();
    for k in 0..n - assigned {
        counts[remainders[k].1] += 1;
    }
    for i in 0..3 {
        if counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| counts[j]).expect("three strata");
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    counts
}

/// A fresh all-digit identity of the given length, first digit nonzero,
/// distinct from everything already issued.
fn unique_digits(rng: &mut ChaCha8Rng, len: usize, used: &mut BTreeSet<String>) -> String {
    loop {
        let mut s = String::with_capacity(len);
        s.push(char::from(b'1' + rng.random_range(0..9u8)));
        for _ in 1..len {
            s.push(char::from(b'0' + rng.random_range(0..10u8)));
        }
        if used.insert(s.clone()) {
            return s;
        }
    }
}

/// Builds `n` profiles split across the severity strata. Participants are
/// numbered `p01, p02, ...` in stratum order; each gets unique identities,
/// propensities jittered around its stratum's table row, and its own seed.
/// The whole cohort is a pure function of `(n, seed)`.
pub fn generate_cohort(n: usize, seed: u64) -> Result<Vec<ParticipantProfile>, CohortError> {
    if n < 3 {
        return Err(CohortError::TooSmall(n));
    }
    let counts = stratum_counts(n);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, COHORT_SALT, n as u64));
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    for (level, &count) in DepressionLevel::ALL.iter().zip(&counts) {
        for _ in 0..count {
            let participant_id = format!("p{:02}", out.len() + 1);
            let imei = unique_digits(&mut rng, 15, &mut used);
            let twitter_id = unique_digits(&mut rng, 18, &mut used);
            let mut activity_secs = ACTIVITY_SECONDS[level.index()];
            for v in &mut activity_secs {
                *v *= rng.random_range(PROFILE_JITTER);
            }
            let mut tweet_counts = TWEET_COUNTS[level.index()];
            for v in &mut tweet_counts {
                *v *= rng.random_range(PROFILE_JITTER);
            }
            out.push(ParticipantProfile {
                participant_id,
                imei,
                twitter_id,
                true_severity: *level,
                activity_secs,
                tweet_counts,
                seed: rng.random(),
            });
        }
    }
    Ok(out)
}

/// Weekly GDS for the week starting at `week_start`: the stratum center plus
/// integer noise in {-1, 0, +1}, clamped into the stratum's interval so the
/// generated score always classifies back to `true_severity`.
pub fn synth_gds(profile: &ParticipantProfile, week_start: NaiveDate) -> GdsScore {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(
        profile.seed,
        GDS_SALT,
        week_start.num_days_from_ce() as u64,
    ));
    let li = profile.true_severity.index();
    let jitter = rng.random_range(-1i16..=1);
    let (lo, hi) = GDS_RANGE[li];
    let v = (GDS_CENTER[li] as i16 + jitter).clamp(lo as i16, hi as i16) as u8;
    GdsScore::new(v).expect("stratum intervals lie inside the scale")
}

#[cfg(test)]
mod tests {
    use super::*;
    use hscreen_core::predict::classify_level;

    fn week(k: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 4, 6).unwrap() + chrono::Days::new(7 * k as u64)
    }

    #[test]
    fn thirty_three_participants_split_exactly_by_the_table() {
        let cohort = generate_cohort(33, 1).unwrap();
        let count = |l: DepressionLevel| {
            cohort.iter().filter(|p| p.true_severity == l).count()
        };
        assert_eq!(count(DepressionLevel::Absence), 23);
        assert_eq!(count(DepressionLevel::MildModerate), 7);
        assert_eq!(count(DepressionLevel::Severe), 3);
        assert_eq!(cohort.len(), 33);
    }

    #[test]
    fn every_stratum_is_represented_at_any_size() {
        assert_eq!(stratum_counts(3), [1, 1, 1]);
        assert_eq!(stratum_counts(4), [2, 1, 1]);
        assert_eq!(stratum_counts(5), [3, 1, 1]);
        assert_eq!(stratum_counts(33), [23, 7, 3]);
        assert_eq!(stratum_counts(66), [46, 14, 6]);
        for n in 3..100 {
            let c = stratum_counts(n);
            assert_eq!(c.iter().sum::<usize>(), n, "n={n}");
            assert!(c.iter().all(|&x| x > 0), "n={n}");
        }
    }

    #[test]
    fn tiny_cohorts_are_rejected() {
        for n in 0..3 {
            assert_eq!(generate_cohort(n, 1), Err(CohortError::TooSmall(n)));
        }
    }

    #[test]
    fn cohorts_replay_under_the_same_seed_and_move_under_another() {
        let a = generate_cohort(33, 42).unwrap();
        let b = generate_cohort(33, 42).unwrap();
        let c = generate_cohort(33, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn identities_are_well_formed_and_unique() {
        let cohort = generate_cohort(33, 7).unwrap();
        let mut seen = BTreeSet::new();
        for p in &cohort {
            assert_eq!(p.imei.len(), 15);
            assert_eq!(p.twitter_id.len(), 18);
            for id in [&p.imei, &p.twitter_id] {
                assert!(id.bytes().all(|b| b.is_ascii_digit()), "{id}");
                assert_ne!(id.as_bytes()[0], b'0', "{id}");
                assert!(seen.insert(id.clone()), "duplicate id {id}");
            }
        }
        let pids: Vec<_> = cohort.iter().map(|p| p.participant_id.clone()).collect();
        assert_eq!(pids[0], "p01");
        assert_eq!(pids[32], "p33");
    }

    #[test]
    fn propensities_stay_near_the_stratum_row() {
        let cohort = generate_cohort(33, 3).unwrap();
        for p in &cohort {
            let li = p.true_severity.index();
            for (v, base) in p.activity_secs.iter().zip(ACTIVITY_SECONDS[li]) {
                assert!(*v >= base * 0.9 && *v < base * 1.1);
            }
            for (v, base) in p.tweet_counts.iter().zip(TWEET_COUNTS[li]) {
                assert!(*v >= base * 0.9 && *v < base * 1.1);
            }
            assert!(p.activity_secs.iter().sum::<f64>() <= 86_400.0);
        }
    }

    #[test]
    fn the_coupling_tables_are_monotone_in_severity() {
        for i in 0..2 {
            // Sitting up, jogging down.
            assert!(ACTIVITY_SECONDS[i][0] < ACTIVITY_SECONDS[i + 1][0]);
            assert!(ACTIVITY_SECONDS[i][3] > ACTIVITY_SECONDS[i + 1][3]);
            // Negative up, positive down.
            assert!(TWEET_COUNTS[i][0] < TWEET_COUNTS[i + 1][0]);
            assert!(TWEET_COUNTS[i][2] > TWEET_COUNTS[i + 1][2]);
        }
    }

    #[test]
    fn gds_scores_stay_inside_their_stratum() {
        let cohort = generate_cohort(33, 9).unwrap();
        for p in &cohort {
            for k in 0..30 {
                let g = synth_gds(p, week(k)).value();
                match p.true_severity {
                    DepressionLevel::Absence => assert!((1..=3).contains(&g), "{g}"),
                    DepressionLevel::MildModerate => assert!((6..=8).contains(&g), "{g}"),
                    DepressionLevel::Severe => assert!((10..=13).contains(&g), "{g}"),
                }
                let score = GdsScore::new(g).unwrap();
                assert_eq!(classify_level(score), p.true_severity);
            }
        }
    }

    #[test]
    fn gds_replays_per_week_and_varies_across_weeks() {
        let p = &generate_cohort(3, 5).unwrap()[0];
        assert_eq!(synth_gds(p, week(0)), synth_gds(p, week(0)));
        let values: BTreeSet<u8> = (0..20).map(|k| synth_gds(p, week(k)).value()).collect();
        assert!(values.len() > 1, "jitter never moved off the center");
    }
}
