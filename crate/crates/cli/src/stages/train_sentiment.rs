//! Distant supervision for the tweet classifier: every stored tweet that
//! passes the keyword filter is labeled by lexicon polarity, and those
//! labels train the naive Bayes model `featurize` applies. The summary's
//! held-out accuracy uses a deterministic one-in-five split; the saved
//! model trains on everything.

use anyhow::{bail, Context, Result};

use hscreen_core::text::{
    default_keywords, keyword_filter, lexicon_label, parse_tweet_records, Lexicon, NbConfig,
    SentimentLabel,
};
use hscreen_core::NaiveBayesModel;
use hscreen_ingest::IngestService;

use crate::config::{stage_seed, PipelineConfig, SALT_NB_SPLIT};
use crate::paths::{require, DataRoot, Manifest};

pub fn run(cfg: &PipelineConfig) -> Result<String> {
    let root = DataRoot::new(&cfg.data_dir);
    require(&root.registry(), "generate")?;
    let shape = Manifest::resolve_shape(cfg, &root)?;
    let service = IngestService::open(&root.store())?;
    let mut participants: Vec<String> = service
        .participants()
        .iter()
        .map(|r| r.participant_id.clone())
        .collect();
    participants.sort();

    let lexicon = Lexicon::builtin();
    let keywords = default_keywords();
    let mut docs: Vec<(String, SentimentLabel)> = Vec::new();
    for pid in &participants {
        for w in 0..shape.weeks {
            let Some(bytes) = service.fetch_week(pid, w)?.tweets else {
                continue;
            };
            let text = String::from_utf8(bytes)
                .with_context(|| format!("tweet upload for {pid} week {w}"))?;
            for tweet in parse_tweet_records(&text)? {
                if keyword_filter(&tweet.text, &keywords) {
                    let label = lexicon_label(&tweet.text, lexicon);
                    docs.push((tweet.text, label));
                }
            }
        }
    }
    if docs.is_empty() {
        bail!(
            "no stored tweets pass the keyword filter; ingest tweet uploads or regenerate \
             the cohort before training"
        );
    }

    let nb_cfg = NbConfig { gamma: cfg.nb_gamma };
    let held_accuracy = held_out_accuracy(&docs, &nb_cfg, stage_seed(cfg.seed, SALT_NB_SPLIT));

    let model = NaiveBayesModel::train_from_texts(&docs, &nb_cfg)?;
    let path = root.nb_model();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    model.save(&path)?;

    let held = match held_accuracy {
        Some(acc) => format!("held-out accuracy {acc:.3}"),
        None => "too few tweets for a held-out split".to_string(),
    };
    Ok(format!(
        "train-sentiment: {} tweets, {held}, wrote {}",
        docs.len(),
        path.display()
    ))
}

/// Every fifth document (offset by the seed) is held out; the rest train a
/// throwaway model. `None` when a split would leave either side empty or a
/// label absent from training.
fn held_out_accuracy(
    docs: &[(String, SentimentLabel)],
    nb_cfg: &NbConfig,
    seed: u64,
) -> Option<f64> {
    let offset = (seed % 5) as usize;
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        if i % 5 == offset {
            held.push(doc);
        } else {
            train.push(doc.clone());
        }
    }
    if held.is_empty() || train.is_empty() {
        return None;
    }
    let model = NaiveBayesModel::train_from_texts(&train, nb_cfg).ok()?;
    let hits = held
        .iter()
        .filter(|(text, label)| model.predict_text(text) == *label)
        .count();
    Some(hits as f64 / held.len() as f64)
}
