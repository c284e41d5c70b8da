//! Accelerometer-day synthesis: a shuffled schedule of single-activity bouts,
//! each expanded into a characteristic 20 Hz waveform with per-sample noise.

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use hscreen_core::har::ActivityLabel;
use hscreen_core::signal::{
    preprocess_stream, segment_windows, AccelSample, ActivityWindow, MAX_ABS_ACCEL,
    TARGET_RATE_HZ, WINDOW_LEN, WINDOW_OVERLAP,
};

use crate::{mix, ParticipantProfile, DAY_SALT, WINDOW_SALT};

/// Local gravity in m/s^2; the steady component of every waveform.
pub const GRAVITY: f64 = 9.81;

/// Bout length bounds in seconds. A day target shorter than the minimum
/// becomes one short bout; leftovers under [`TAIL_MIN_SECS`] are dropped.
const BOUT_MIN_SECS: u32 = 45;
const BOUT_MAX_SECS: u32 = 90;
const TAIL_MIN_SECS: u32 = 5;

/// Gap between consecutive bouts, wider than the segmenter's split threshold
/// so no window ever straddles two activities.
const BOUT_GAP_NS: i64 = 3_000_000_000;

/// One scheduled run of a single activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayBout {
    pub label: ActivityLabel,
    pub secs: u32,
}

fn day_rng(profile: &ParticipantProfile, date: NaiveDate) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(
        profile.seed,
        DAY_SALT,
        date.num_days_from_ce() as u64,
    ))
}

/// Draws the day's bouts: each activity's daily target is its propensity
/// with a day-level spread, cut into bout-sized runs, and the whole list is
/// shuffled into one sequence.
fn schedule_with(rng: &mut ChaCha8Rng, daily_secs: &[f64; 6]) -> Vec<DayBout> {
    let mut bouts = Vec::new();
    for label in ActivityLabel::ALL {
        let target = daily_secs[label.index()] * rng.random_range(0.85..1.15);
        let mut remaining = target.round() as i64;
        while remaining >= TAIL_MIN_SECS as i64 {
            let draw = rng.random_range(BOUT_MIN_SECS..=BOUT_MAX_SECS) as i64;
            let secs = draw.min(remaining);
            bouts.push(DayBout {
                label,
                secs: secs as u32,
            });
            remaining -= secs;
        }
    }
    bouts.shuffle(rng);
    bouts
}

/// The bout schedule [`synth_accel_day`] expands for this (profile, date).
/// Exposed so cohort-level statistics can be read without synthesizing and
/// re-classifying the raw samples.
pub fn day_schedule(profile: &ParticipantProfile, date: NaiveDate) -> Vec<DayBout> {
    schedule_with(&mut day_rng(profile, date), &profile.activity_secs)
}

/// Steady gravity plus the class's oscillation at `t` seconds into a bout.
/// Frequencies, amplitudes and axis patterns separate the classes; `ph` and
/// `dph` are the bout's gait and drift phases.
fn class_signal(label: ActivityLabel, t: f64, ph: f64, dph: f64) -> [f64; 3] {
    use std::f64::consts::TAU;
    match label {
        // Tilted device, no motion beyond sensor noise.
        ActivityLabel::Sitting => [0.0, GRAVITY * 0.34, GRAVITY * 0.94],
        // Upright with slow postural sway.
        ActivityLabel::Standing => [
            0.12 * (TAU * 0.60 * t + ph).sin(),
            0.08 * (TAU * 0.45 * t + 1.3 * ph).sin(),
            GRAVITY,
        ],
        // 2 Hz gait with a second harmonic; lateral sway at stride rate.
        ActivityLabel::Walking => [
            0.9 * (TAU * 2.0 * t + ph).cos(),
            0.4 * (TAU * 1.0 * t + 0.5 * ph).sin(),
            GRAVITY + 1.6 * (TAU * 2.0 * t + ph).sin() + 0.5 * (TAU * 4.0 * t + 2.0 * ph).sin(),
        ],
        // Faster and much larger gait.
        ActivityLabel::Jogging => [
            2.2 * (TAU * 2.8 * t + ph).cos(),
            0.9 * (TAU * 1.4 * t + 0.5 * ph).sin(),
            GRAVITY + 4.2 * (TAU * 2.8 * t + ph).sin() + 1.3 * (TAU * 5.6 * t + 2.0 * ph).sin(),
        ],
        // Slow stepped gait plus a slow upward vertical drift.
        ActivityLabel::Upstairs => [
            1.1 * (TAU * 1.5 * t + ph).cos(),
            0.5 * (TAU * 0.75 * t + 0.5 * ph).sin(),
            GRAVITY + 2.0 * (TAU * 1.5 * t + ph).sin() + 0.8 * (TAU * 0.25 * t + dph).sin(),
        ],
        // Slightly faster gait with the drift running downward.
        ActivityLabel::Downstairs => [
            1.2 * (TAU * 1.9 * t + ph).cos(),
            0.5 * (TAU * 0.95 * t + 0.5 * ph).sin(),
            GRAVITY + 2.4 * (TAU * 1.9 * t + ph).sin() - 0.8 * (TAU * 0.25 * t + dph).sin(),
        ],
    }
}

/// Per-sample Gaussian noise level of each class.
fn noise_sd(label: ActivityLabel) -> f64 {
    match label {
        ActivityLabel::Sitting => 0.03,
        ActivityLabel::Standing => 0.06,
        ActivityLabel::Walking => 0.12,
        ActivityLabel::Jogging => 0.25,
        ActivityLabel::Upstairs => 0.15,
        ActivityLabel::Downstairs => 0.18,
    }
}

/// `n` samples of one activity at [`TARGET_RATE_HZ`], starting at
/// `start_t_ns`, with fresh phases and noise from `rng`.
fn bout_samples(
    label: ActivityLabel,
    n: usize,
    start_t_ns: i64,
    rng: &mut ChaCha8Rng,
) -> Vec<AccelSample<f64>> {
    let dt_ns = (1.0e9 / TARGET_RATE_HZ) as i64;
    let ph = rng.random_range(0.0..std::f64::consts::TAU);
    let dph = rng.random_range(0.0..std::f64::consts::TAU);
    let noise = Normal::new(0.0, noise_sd(label)).expect("positive noise sd");
    // Construction keeps values far inside the parser's range; the clamp
    // only guards pathological noise tails.
    let limit = MAX_ABS_ACCEL - 0.5;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / TARGET_RATE_HZ;
        let [x, y, z] = class_signal(label, t, ph, dph);
        out.push(
            AccelSample::new(
                start_t_ns + k as i64 * dt_ns,
                (x + noise.sample(rng)).clamp(-limit, limit),
                (y + noise.sample(rng)).clamp(-limit, limit),
                (z + noise.sample(rng)).clamp(-limit, limit),
            )
            .expect("clamped values are in range"),
        );
    }
    out
}

/// Expands the day's bout schedule into one 20 Hz stream starting at
/// 09:00 UTC, so every window of the recording falls on `date`. A profile
/// with all-zero activity propensities yields an empty stream.
pub fn synth_accel_day(profile: &ParticipantProfile, date: NaiveDate) -> Vec<AccelSample<f64>> {
    let mut rng = day_rng(profile, date);
    let bouts = schedule_with(&mut rng, &profile.activity_secs);
    let mut t = date
        .and_hms_opt(9, 0, 0)
        .expect("09:00 exists on every date")
        .and_utc()
        .timestamp_nanos_opt()
        .expect("cohort dates are in timestamp range");
    let mut out = Vec::new();
    for bout in &bouts {
        let n = bout.secs as usize * TARGET_RATE_HZ as usize;
        out.extend(bout_samples(bout.label, n, t, &mut rng));
        t += bout.secs as i64 * 1_000_000_000 + BOUT_GAP_NS;
    }
    out
}

/// Ready-made (window, label) pairs for training and evaluating the activity
/// model: per-class bout streams pushed through the standard preprocessing
/// and segmentation. Bout lengths match day streams, so the windows carry
/// the same share of bout-onset filter transients the pipeline sees.
pub fn synth_labeled_windows(
    per_class: usize,
    seed: u64,
) -> Vec<(ActivityWindow<f64>, ActivityLabel)> {
    let mut out = Vec::with_capacity(per_class * ActivityLabel::COUNT);
    for label in ActivityLabel::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, WINDOW_SALT, label.index() as u64));
        let mut got = 0usize;
        let mut bout_no: i64 = 0;
        while got < per_class {
            let secs = rng.random_range(BOUT_MIN_SECS..=BOUT_MAX_SECS) as usize;
            let raw = bout_samples(
                label,
                secs * TARGET_RATE_HZ as usize,
                bout_no * 1_000_000_000_000,
                &mut rng,
            );
            bout_no += 1;
            let splits = preprocess_stream(&raw).expect("generated stream is uniform");
            for split in &splits {
                let windows =
                    segment_windows("har-synth", &split.body, WINDOW_LEN, WINDOW_OVERLAP)
                        .expect("body stream is uniform");
                for w in windows {
                    if got == per_class {
                        break;
                    }
                    out.push((w, label));
                    got += 1;
                }
            }
        }
    }
    out
}
