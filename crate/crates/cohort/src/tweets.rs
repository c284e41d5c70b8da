//! Tweet-stream synthesis from polarity-checked sentence templates.
//!
//! Every template contains a tracked keyword, so generated tweets survive
//! the pipeline's keyword filter, and its net lexicon polarity carries the
//! sign of its label, so the label assigned at generation is exactly what
//! the lexicon scorer will reproduce. A test pins both properties.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use hscreen_core::text::{SentimentLabel, Tweet};

use crate::{mix, ParticipantProfile, TWEET_SALT};

const NEGATIVE_TEMPLATES: [&str; 8] = [
    "my depression is crushing me tonight",
    "feeling hopeless and worthless this anxiety never stops",
    "so sad and tired of feeling empty",
    "anxiety and insomnia again tonight i feel broken",
    "this depression makes every morning feel miserable",
    "crying alone again my sadness is endless",
    "worried and stressed at work my mental health is failing",
    "panic and fear tonight this sadness hurts",
];

const NEUTRAL_TEMPLATES: [&str; 8] = [
    "reading an article about mental health awareness today",
    "hopeful new research on depression published this week",
    "thinking about mental health at work this morning",
    "attended a mental health awareness talk tonight",
    "an article about anxiety and hope in the morning news",
    "reading about depression research and progress tomorrow",
    "mental health awareness week starts tomorrow at work",
    "a calm talk about sadness and health today",
];

const POSITIVE_TEMPLATES: [&str; 8] = [
    "overcame my depression feeling strong and hopeful today",
    "grateful and happy my mental health is thriving",
    "no sadness today just joy and laughing with friends",
    "feeling amazing therapy for my anxiety is winning",
    "happy and calm tonight my mental health is better",
    "beat my sadness today feeling energized and proud",
    "wonderful progress with my depression i feel stronger and hopeful",
    "peaceful morning grateful for recovering from anxiety",
];

pub(crate) fn templates(label: SentimentLabel) -> &'static [&'static str; 8] {
    match label {
        SentimentLabel::Negative => &NEGATIVE_TEMPLATES,
        SentimentLabel::Neutral => &NEUTRAL_TEMPLATES,
        SentimentLabel::Positive => &POSITIVE_TEMPLATES,
    }
}

/// One week of tweets for the week starting at `week_start`. Per-label
/// counts are Poisson draws around seven times the daily propensity, texts
/// come from the label's template pool, and timestamps land uniformly over
/// the week, returned in chronological order.
pub fn synth_tweets(profile: &ParticipantProfile, week_start: NaiveDate) -> Vec<Tweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(
        profile.seed,
        TWEET_SALT,
        week_start.num_days_from_ce() as u64,
    ));
    let week_ns = week_start
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists on every date")
        .and_utc()
        .timestamp_nanos_opt()
        .expect("cohort dates are in timestamp range");
    let mut drafts: Vec<(i64, SentimentLabel)> = Vec::new();
    for label in SentimentLabel::ALL {
        let weekly = profile.tweet_counts[label.index()] * 7.0;
        if weekly <= 0.0 {
            continue;
        }
        let count = Poisson::new(weekly).expect("positive rate").sample(&mut rng) as usize;
        for _ in 0..count {
            let offset_s: i64 = rng.random_range(0..7 * 86_400);
            drafts.push((week_ns + offset_s * 1_000_000_000, label));
        }
    }
    drafts.sort_by_key(|&(t, l)| (t, l.index()));
    let mut used_ids = BTreeSet::new();
    drafts
        .into_iter()
        .map(|(t_ns, label)| {
            let pool = templates(label);
            let text = pool[rng.random_range(0..pool.len())].to_string();
            let id = loop {
                let id: u64 =
                    rng.random_range(100_000_000_000_000_000..=999_999_999_999_999_999);
                if used_ids.insert(id) {
                    break id;
                }
            };
            Tweet {
                twitter_id: profile.twitter_id.clone(),
                tweet_id: id.to_string(),
                t_ns,
                text,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hscreen_core::predict::DepressionLevel;
    use hscreen_core::text::{default_keywords, keyword_filter, lexicon_label, Lexicon};

    fn profile() -> ParticipantProfile {
        ParticipantProfile {
            participant_id: "p01".into(),
            imei: "356938035643809".into(),
            twitter_id: "824206996231455114".into(),
            true_severity: DepressionLevel::Severe,
            activity_secs: [165.0, 24.0, 40.0, 6.0, 8.0, 8.0],
            tweet_counts: [2.6, 1.0, 0.6],
            seed: 77,
        }
    }

    fn week(k: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 4, 6).unwrap() + chrono::Days::new(7 * k as u64)
    }

    #[test]
    fn every_template_scores_its_own_label_and_passes_the_keyword_filter() {
        let lex = Lexicon::builtin();
        let keywords = default_keywords();
        for label in SentimentLabel::ALL {
            for t in templates(label) {
                assert_eq!(lexicon_label(t, lex), label, "{t}");
                assert!(keyword_filter(t, &keywords), "{t}");
            }
        }
    }

    #[test]
    fn label_mix_tracks_the_propensities() {
        let p = profile();
        let lex = Lexicon::builtin();
        let mut counts = [0usize; 3];
        for k in 0..12 {
            for t in synth_tweets(&p, week(k)) {
                counts[lexicon_label(&t.text, lex).index()] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        assert!(total >= 200, "only {total} tweets generated");
        let rate_sum: f64 = p.tweet_counts.iter().sum();
        for label in SentimentLabel::ALL {
            let observed = counts[label.index()] as f64 / total as f64;
            let expected = p.tweet_counts[label.index()] / rate_sum;
            assert!(
                (observed - expected).abs() <= 0.10,
                "{label:?}: observed {observed:.3}, expected {expected:.3}"
            );
        }
    }

    #[test]
    fn weeks_replay_exactly_and_differ_from_each_other() {
        let p = profile();
        assert_eq!(synth_tweets(&p, week(0)), synth_tweets(&p, week(0)));
        assert_ne!(synth_tweets(&p, week(0)), synth_tweets(&p, week(1)));
    }

    #[test]
    fn tweets_are_chronological_with_unique_well_formed_ids() {
        let p = profile();
        let mut ids = BTreeSet::new();
        for k in 0..4 {
            let tweets = synth_tweets(&p, week(k));
            let lo = week(k).and_hms_opt(0, 0, 0).unwrap().and_utc();
            let hi = week(k + 1).and_hms_opt(0, 0, 0).unwrap().and_utc();
            for pair in tweets.windows(2) {
                assert!(pair[0].t_ns <= pair[1].t_ns);
            }
            for t in &tweets {
                assert_eq!(t.twitter_id, p.twitter_id);
                assert_eq!(t.tweet_id.len(), 18);
                assert!(t.tweet_id.bytes().all(|b| b.is_ascii_digit()));
                assert_ne!(t.tweet_id.as_bytes()[0], b'0');
                assert!(ids.insert(t.tweet_id.clone()), "duplicate {}", t.tweet_id);
                assert!(t.t_ns >= lo.timestamp_nanos_opt().unwrap());
                assert!(t.t_ns < hi.timestamp_nanos_opt().unwrap());
            }
        }
    }

    #[test]
    fn generated_lines_round_trip_through_the_parser() {
        let p = profile();
        for t in synth_tweets(&p, week(2)) {
            let back = Tweet::parse_line(&t.format_line(), 1).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn a_silent_profile_tweets_nothing() {
        let mut p = profile();
        p.tweet_counts = [0.0; 3];
        assert!(synth_tweets(&p, week(0)).is_empty());
    }
}
