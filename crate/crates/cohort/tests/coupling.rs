//! Cohort-level statistics: the generated streams must track the severity
//! ground truth with the designed signs and separations.

use chrono::{Days, NaiveDate};

use hscreen_cohort::{day_schedule, generate_cohort, synth_gds, synth_tweets, ParticipantProfile};
use hscreen_core::har::ActivityLabel;
use hscreen_core::predict::DepressionLevel;
use hscreen_core::text::{lexicon_label, Lexicon, SentimentLabel};

fn week(k: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 4, 6).unwrap() + Days::new(7 * k)
}

/// Scheduled seconds of one activity over the week starting at `start`.
fn weekly_secs(p: &ParticipantProfile, start: NaiveDate, label: ActivityLabel) -> f64 {
    (0..7)
        .flat_map(|d| day_schedule(p, start + Days::new(d)))
        .filter(|b| b.label == label)
        .map(|b| b.secs as f64)
        .sum()
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn weekly_behavior_correlates_with_gds_in_the_designed_directions() {
    let cohort = generate_cohort(33, 5).unwrap();
    let lex = Lexicon::builtin();
    let (mut st, mut jot, mut nes, mut pos, mut gds) =
        (vec![], vec![], vec![], vec![], vec![]);
    for p in &cohort {
        for k in 0..2 {
            let start = week(k);
            st.push(weekly_secs(p, start, ActivityLabel::Sitting));
            jot.push(weekly_secs(p, start, ActivityLabel::Jogging));
            let tweets = synth_tweets(p, start);
            let count = |want: SentimentLabel| {
                tweets
                    .iter()
                    .filter(|t| lexicon_label(&t.text, lex) == want)
                    .count() as f64
            };
            nes.push(count(SentimentLabel::Negative));
            pos.push(count(SentimentLabel::Positive));
            gds.push(synth_gds(p, start).value() as f64);
        }
    }
    assert!(st.len() >= 50, "need at least 50 participant-weeks");
    let r_st = pearson(&st, &gds);
    let r_nes = pearson(&nes, &gds);
    let r_jot = pearson(&jot, &gds);
    let r_pos = pearson(&pos, &gds);
    assert!(r_st > 0.5, "sitting vs gds r={r_st:.3}");
    assert!(r_nes > 0.5, "negative tweets vs gds r={r_nes:.3}");
    assert!(r_jot < -0.5, "jogging vs gds r={r_jot:.3}");
    assert!(r_pos < -0.5, "positive tweets vs gds r={r_pos:.3}");
}

#[test]
fn severe_participants_sit_well_apart_from_absent_ones() {
    let cohort = generate_cohort(33, 11).unwrap();
    let weekly = |level: DepressionLevel| -> Vec<f64> {
        cohort
            .iter()
            .filter(|p| p.true_severity == level)
            .flat_map(|p| {
                (0..10).map(|k| weekly_secs(p, week(k), ActivityLabel::Sitting))
            })
            .collect()
    };
    let severe = weekly(DepressionLevel::Severe);
    let absent = weekly(DepressionLevel::Absence);
    assert!(severe.len() >= 30);
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var / n)
    };
    let (ms, vs) = stats(&severe);
    let (ma, va) = stats(&absent);
    let gap = ms - ma;
    let sigma = (vs + va).sqrt();
    assert!(
        gap > 3.0 * sigma,
        "mean gap {gap:.1} s not past 3 sigma ({:.1} s)",
        3.0 * sigma
    );
}
