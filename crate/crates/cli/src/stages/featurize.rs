//! Weekly feature construction: body windows through the activity model,
//! keyword-filtered tweets through the sentiment model, stride-credited
//! daily aggregation, and the weekday-subgroup partition, labeled with the
//! week's reported GDS score.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{Days, NaiveDate};

use hscreen_core::features::{
    aggregate_day, build_week_vector, write_week_csv, WindowPrediction, WindowTiming,
};
use hscreen_core::har::load_checkpoint;
use hscreen_core::predict::GdsScore;
use hscreen_core::signal::{
    parse_accel_records, segment_windows, AccelSample, TARGET_RATE_HZ, WINDOW_LEN, WINDOW_OVERLAP,
};
use hscreen_core::text::{default_keywords, keyword_filter, parse_tweet_records, SentimentLabel};
use hscreen_core::{NaiveBayesModel, WeeklyFeatureVector};
use hscreen_ingest::IngestService;

use crate::config::PipelineConfig;
use crate::paths::{read_text, require, write_atomic, DataRoot, Manifest};

fn date_of_ns(t_ns: i64) -> NaiveDate {
    chrono::DateTime::from_timestamp_nanos(t_ns).date_naive()
}

/// Blank lines separate recording segments in a body file.
fn segment_blocks(text: &str) -> impl Iterator<Item = &str> {
    text.split("\n\n").filter(|block| !block.trim().is_empty())
}

/// A score upload may be appended to by a corrected resubmission; the
/// latest line wins.
fn parse_gds(bytes: &[u8]) -> Result<u8> {
    let text = std::str::from_utf8(bytes).context("score upload is not UTF-8")?;
    let last = text
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| anyhow!("score upload has no lines"))?;
    let value: u8 = last
        .trim()
        .parse()
        .map_err(|e| anyhow!("bad score line {last:?}: {e}"))?;
    if value > GdsScore::MAX {
        bail!("score {value} outside 0..={}", GdsScore::MAX);
    }
    Ok(value)
}

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    require(&root.registry(), "generate")?;
    require(&root.har_model(), "train-har")?;
    require(&root.nb_model(), "train-sentiment")?;
    let shape = Manifest::resolve_shape(cfg, &root)?;
    let service = IngestService::open(&root.store())?;
    let cnn = load_checkpoint::<f64>(&root.har_model())?;
    let nb = NaiveBayesModel::load(&root.nb_model())?;
    let keywords = default_keywords();
    let timing = WindowTiming::from_segmentation(WINDOW_LEN, WINDOW_OVERLAP, TARGET_RATE_HZ)?;

    let mut participants: Vec<String> = service
        .participants()
        .iter()
        .map(|r| r.participant_id.clone())
        .collect();
    participants.sort();

    let mut rows: Vec<(WeeklyFeatureVector, u8)> = Vec::new();
    let mut windows_total = 0usize;
    let mut tweets_total = 0usize;
    for pid in &participants {
        for w in 0..shape.weeks {
            let week_start = shape.start_date + Days::new(7 * u64::from(w));
            let body_path = root.body_file(pid, w);
            require(&body_path, "preprocess")?;
            let body_text = read_text(&body_path)?;

            let mut windows_by_date: BTreeMap<NaiveDate, Vec<WindowPrediction>> = BTreeMap::new();
            for block in segment_blocks(&body_text) {
                let stream: Vec<AccelSample<f64>> = parse_accel_records::<f64>(block)
                    .with_context(|| format!("{}", body_path.display()))?
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                if stream.len() < WINDOW_LEN {
                    continue;
                }
                for window in segment_windows(pid, &stream, WINDOW_LEN, WINDOW_OVERLAP)? {
                    let (label, _) = cnn.predict(&window)?;
                    windows_by_date
                        .entry(date_of_ns(window.start_t_ns))
                        .or_default()
                        .push(WindowPrediction::from_window(&window, label));
                    windows_total += 1;
                }
            }

            let week_data = service.fetch_week(pid, w)?;
            let mut tweets_by_date: BTreeMap<NaiveDate, Vec<SentimentLabel>> = BTreeMap::new();
            if let Some(bytes) = week_data.tweets {
                let text = String::from_utf8(bytes)
                    .with_context(|| format!("tweet upload for {pid} week {w}"))?;
                for tweet in parse_tweet_records(&text)? {
                    if keyword_filter(&tweet.text, &keywords) {
                        tweets_by_date
                            .entry(date_of_ns(tweet.t_ns))
                            .or_default()
                            .push(nb.predict_text(&tweet.text));
                        tweets_total += 1;
                    }
                }
            }

            let gds = match week_data.gds {
                Some(bytes) => parse_gds(&bytes)
                    .with_context(|| format!("score upload for {pid} week {w}"))?,
                None => bail!(
                    "store has no score upload for {pid} week {w}; \
                     ingest the missing week or regenerate the cohort"
                ),
            };

            let mut days = Vec::with_capacity(7);
            for d in 0..7 {
                let date = week_start + Days::new(d);
                let preds = windows_by_date.remove(&date).unwrap_or_default();
                let sents = tweets_by_date.remove(&date).unwrap_or_default();
                days.push(aggregate_day(pid, date, &preds, &sents, &timing)?);
            }
            if let Some(date) = windows_by_date.keys().next() {
                bail!(
                    "{pid} week {w}: accelerometer data dated {date} falls outside \
                     the week starting {week_start}"
                );
            }
            if let Some(date) = tweets_by_date.keys().next() {
                bail!(
                    "{pid} week {w}: tweet dated {date} falls outside the week \
                     starting {week_start}"
                );
            }
            rows.push((build_week_vector(&days, pid, w, week_start)?, gds));
        }
    }

    write_atomic(&root.weeks_csv(), write_week_csv(&rows).as_bytes())?;
    Ok(format!(
        "featurize: {} weeks from {} participants, {windows_total} windows classified, \
         {tweets_total} tweets scored, wrote {}",
        rows.len(),
        participants.len(),
        root.weeks_csv().display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_latest_score_line_wins() {
        assert_eq!(parse_gds(b"7\n").unwrap(), 7);
        assert_eq!(parse_gds(b"7\n12\n").unwrap(), 12);
        assert!(parse_gds(b"16\n").is_err());
        assert!(parse_gds(b"\n").is_err());
        assert!(parse_gds(b"x\n").is_err());
    }

    #[test]
    fn segment_blocks_split_on_blank_lines_only() {
        let text = "a,0,0,0,0\na,1,0,0,0\n\nb,2,0,0,0\n";
        let blocks: Vec<&str> = segment_blocks(text).collect();
        assert_eq!(blocks.len(), 2);
        assert!(blocks[0].contains("a,1"));
        assert!(blocks[1].starts_with("b,2"));
    }
}
