//! Multinomial naive Bayes over tweet tokens.
//!
//! Likelihoods use additive smoothing: with class token total `N_c`, word
//! count `N_ci`, vocabulary size `n` and smoothing weight `gamma`, the word
//! probability is `(N_ci + gamma) / (N_c + gamma * n)`. Each class row sums
//! to one for any `gamma >= 0`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::scalar::Real;

use super::{tokenize, SentimentLabel, TextError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbConfig {
    /// Additive smoothing weight. Zero disables smoothing and lets unseen
    /// class/word pairs carry probability zero.
    pub gamma: f64,
}

impl Default for NbConfig {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel<S> {
    gamma: f64,
    vocab: BTreeMap<String, usize>,
    prior: [S; 3],
    /// Class-major word probabilities, `alpha[c * n + w]`.
    alpha: Vec<S>,
    log_prior: [S; 3],
    log_alpha: Vec<S>,
}

const MODEL_FORMAT: &str = "sentiment-nb v1";

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    format: String,
    gamma: f64,
    vocab: Vec<String>,
    prior: Vec<f64>,
    alpha: Vec<f64>,
}

impl<S: Real> NaiveBayesModel<S> {
    /// Fits priors and smoothed likelihoods from tokenized documents. Every
    /// class must contribute at least one token.
    pub fn train(docs: &[(Vec<String>, SentimentLabel)], cfg: &NbConfig) -> Result<Self, TextError> {
        if !cfg.gamma.is_finite() || cfg.gamma < 0.0 {
            return Err(TextError::BadGamma(cfg.gamma));
        }
        if docs.is_empty() {
            return Err(TextError::EmptyCorpus);
        }

        let mut vocab = BTreeMap::new();
        for (tokens, _) in docs {
            for t in tokens {
                vocab.entry(t.clone()).or_insert(0usize);
            }
        }
        let n = vocab.len();
        for (i, slot) in vocab.values_mut().enumerate() {
            *slot = i;
        }

        let mut doc_count = [0u64; 3];
        let mut token_count = [0u64; 3];
        let mut word_count = vec![0u64; 3 * n];
        for (tokens, label) in docs {
            let c = label.index();
            doc_count[c] += 1;
            for t in tokens {
                word_count[c * n + vocab[t]] += 1;
                token_count[c] += 1;
            }
        }
        for label in SentimentLabel::ALL {
            let c = label.index();
            if doc_count[c] == 0 || token_count[c] == 0 {
                return Err(TextError::MissingClass(label));
            }
        }

        let docs_total = docs.len() as f64;
        let mut prior = [S::zero(); 3];
        let mut log_prior = [S::zero(); 3];
        let mut alpha = vec![S::zero(); 3 * n];
        let mut log_alpha = vec![S::zero(); 3 * n];
        for c in 0..3 {
            let p = doc_count[c] as f64 / docs_total;
            prior[c] = S::c(p);
            log_prior[c] = S::c(p.ln());
            let denom = token_count[c] as f64 + cfg.gamma * n as f64;
            for w in 0..n {
                let a = (word_count[c * n + w] as f64 + cfg.gamma) / denom;
                alpha[c * n + w] = S::c(a);
                log_alpha[c * n + w] = S::c(a.ln());
            }
        }

        Ok(Self {
            gamma: cfg.gamma,
            vocab,
            prior,
            alpha,
            log_prior,
            log_alpha,
        })
    }

    /// Tokenizes each text with the shared tokenizer, then trains.
    pub fn train_from_texts(
        docs: &[(String, SentimentLabel)],
        cfg: &NbConfig,
    ) -> Result<Self, TextError> {
        let tokenized: Vec<(Vec<String>, SentimentLabel)> =
            docs.iter().map(|(t, l)| (tokenize(t), *l)).collect();
        Self::train(&tokenized, cfg)
    }

    /// Log posterior per class, normalized so the probabilities sum to one.
    /// Out-of-vocabulary tokens contribute nothing.
    pub fn log_posteriors(&self, tokens: &[String]) -> [S; 3] {
        let n = self.vocab.len();
        let mut s = self.log_prior;
        for t in tokens {
            if let Some(&w) = self.vocab.get(t) {
                for (c, slot) in s.iter_mut().enumerate() {
                    *slot += self.log_alpha[c * n + w];
                }
            }
        }
        let mut m = s[0];
        for &v in &s[1..] {
            if v > m {
                m = v;
            }
        }
        if !(m > S::neg_infinity()) {
            // Every class scored impossible (gamma = 0 paths): fall back to
            // an uninformative posterior.
            let u = S::c((1.0f64 / 3.0).ln());
            return [u, u, u];
        }
        let mut acc = S::zero();
        for &v in &s {
            acc += (v - m).exp();
        }
        let lse = m + acc.ln();
        [s[0] - lse, s[1] - lse, s[2] - lse]
    }

    pub fn posteriors(&self, tokens: &[String]) -> [S; 3] {
        let lp = self.log_posteriors(tokens);
        [lp[0].exp(), lp[1].exp(), lp[2].exp()]
    }

    /// Highest-posterior class. On an exact tie Neutral wins, then the
    /// lowest class index.
    pub fn predict(&self, tokens: &[String]) -> SentimentLabel {
        let lp = self.log_posteriors(tokens);
        let mut best = lp[0];
        for &v in &lp[1..] {
            if v > best {
                best = v;
            }
        }
        if lp[SentimentLabel::Neutral.index()] == best {
            return SentimentLabel::Neutral;
        }
        for (i, &v) in lp.iter().enumerate() {
            if v == best {
                return SentimentLabel::from_index(i).expect("index in range");
            }
        }
        unreachable!("one posterior equals the maximum")
    }

    pub fn predict_text(&self, text: &str) -> SentimentLabel {
        self.predict(&tokenize(text))
    }

    pub fn alpha(&self, label: SentimentLabel, word: &str) -> Option<S> {
        let n = self.vocab.len();
        self.vocab
            .get(word)
            .map(|&w| self.alpha[label.index() * n + w])
    }

    pub fn prior(&self, label: SentimentLabel) -> S {
        self.prior[label.index()]
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Writes the model as JSON. Probabilities are stored directly (not
    /// logs) so zero entries from unsmoothed training survive the format.
    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            gamma: self.gamma,
            vocab: self.vocab.keys().cloned().collect(),
            prior: self.prior.iter().map(|p| p.to_f64_lossy()).collect(),
            alpha: self.alpha.iter().map(|a| a.to_f64_lossy()).collect(),
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| TextError::BadModel(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| TextError::BadModel(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(TextError::BadModel(format!(
                "format {:?}, expected {MODEL_FORMAT:?}",
                file.format
            )));
        }
        if !file.gamma.is_finite() || file.gamma < 0.0 {
            return Err(TextError::BadModel(format!("gamma {}", file.gamma)));
        }
        let n = file.vocab.len();
        if !file.vocab.windows(2).all(|w| w[0] < w[1]) {
            return Err(TextError::BadModel(
                "vocabulary must be sorted and unique".into(),
            ));
        }
        if file.prior.len() != 3 {
            return Err(TextError::BadModel(format!(
                "{} priors, expected 3",
                file.prior.len()
            )));
        }
        if file.alpha.len() != 3 * n {
            return Err(TextError::BadModel(format!(
                "{} word probabilities, expected {}",
                file.alpha.len(),
                3 * n
            )));
        }
        for &p in file.prior.iter().chain(file.alpha.iter()) {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(TextError::BadModel(format!("probability {p} out of range")));
            }
        }
        let prior_sum: f64 = file.prior.iter().sum();
        if (prior_sum - 1.0).abs() > 1e-6 {
            return Err(TextError::BadModel(format!("priors sum to {prior_sum}")));
        }
        for c in 0..3 {
            let row: f64 = file.alpha[c * n..(c + 1) * n].iter().sum();
            if (row - 1.0).abs() > 1e-3 {
                return Err(TextError::BadModel(format!(
                    "class {c} word probabilities sum to {row}"
                )));
            }
        }

        let vocab: BTreeMap<String, usize> = file
            .vocab
            .into_iter()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        let mut prior = [S::zero(); 3];
        let mut log_prior = [S::zero(); 3];
        for c in 0..3 {
            prior[c] = S::c(file.prior[c]);
            log_prior[c] = S::c(file.prior[c].ln());
        }
        let alpha: Vec<S> = file.alpha.iter().map(|&a| S::c(a)).collect();
        let log_alpha: Vec<S> = file.alpha.iter().map(|&a| S::c(a.ln())).collect();
        Ok(Self {
            gamma: file.gamma,
            vocab,
            prior,
            alpha,
            log_prior,
            log_alpha,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str, label: SentimentLabel) -> (Vec<String>, SentimentLabel) {
        (tokenize(text), label)
    }

    fn tiny_corpus() -> Vec<(Vec<String>, SentimentLabel)> {
        vec![
            doc("a a", SentimentLabel::Negative),
            doc("b", SentimentLabel::Neutral),
            doc("a b", SentimentLabel::Positive),
        ]
    }

    fn wider_corpus() -> Vec<(Vec<String>, SentimentLabel)> {
        vec![
            doc("sad sad pain", SentimentLabel::Negative),
            doc("crying sad", SentimentLabel::Negative),
            doc("day work day", SentimentLabel::Neutral),
            doc("reading", SentimentLabel::Neutral),
            doc("happy joy", SentimentLabel::Positive),
            doc("joy joy fun happy", SentimentLabel::Positive),
        ]
    }

    /// Posterior computed the long way: raw products of probabilities over a
    /// count table built directly from the corpus, no logs, no model code.
    fn oracle_posteriors(
        corpus: &[(Vec<String>, SentimentLabel)],
        gamma: f64,
        tokens: &[String],
    ) -> [f64; 3] {
        use std::collections::{BTreeSet, HashMap};
        let mut vocab = BTreeSet::new();
        for (toks, _) in corpus {
            vocab.extend(toks.iter().cloned());
        }
        let n = vocab.len() as f64;
        let mut word_count: HashMap<(usize, &str), f64> = HashMap::new();
        let mut token_count = [0.0f64; 3];
        let mut doc_count = [0.0f64; 3];
        for (toks, label) in corpus {
            doc_count[label.index()] += 1.0;
            for t in toks {
                *word_count.entry((label.index(), t.as_str())).or_insert(0.0) += 1.0;
                token_count[label.index()] += 1.0;
            }
        }
        let mut joint = [0.0f64; 3];
        for c in 0..3 {
            let mut p = doc_count[c] / corpus.len() as f64;
            for t in tokens {
                if vocab.contains(t) {
                    let cnt = word_count.get(&(c, t.as_str())).copied().unwrap_or(0.0);
                    p *= (cnt + gamma) / (token_count[c] + gamma * n);
                }
            }
            joint[c] = p;
        }
        let z: f64 = joint.iter().sum();
        [joint[0] / z, joint[1] / z, joint[2] / z]
    }

    fn toks(text: &str) -> Vec<String> {
        tokenize(text)
    }

    #[test]
    fn smoothed_probabilities_match_hand_computation() {
        let m = NaiveBayesModel::<f64>::train(&tiny_corpus(), &NbConfig::default()).unwrap();
        // Negative holds two `a` tokens out of two; vocabulary is {a, b}.
        assert_eq!(m.alpha(SentimentLabel::Negative, "a"), Some(0.75));
        assert_eq!(m.alpha(SentimentLabel::Negative, "b"), Some(0.25));
        assert_eq!(m.alpha(SentimentLabel::Neutral, "a"), Some(1.0 / 3.0));
        assert_eq!(m.alpha(SentimentLabel::Neutral, "b"), Some(2.0 / 3.0));
        assert_eq!(m.alpha(SentimentLabel::Positive, "a"), Some(0.5));
        assert_eq!(m.alpha(SentimentLabel::Positive, "b"), Some(0.5));
        assert_eq!(m.alpha(SentimentLabel::Positive, "zzz"), None);
        for label in SentimentLabel::ALL {
            assert!((m.prior(label) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn likelihood_rows_sum_to_one() {
        for gamma in [0.0, 0.25, 1.0, 7.5] {
            let m =
                NaiveBayesModel::<f64>::train(&wider_corpus(), &NbConfig { gamma }).unwrap();
            let vocab: Vec<&str> = [
                "crying", "day", "fun", "happy", "joy", "pain", "reading", "sad", "work",
            ]
            .to_vec();
            assert_eq!(m.vocab_len(), vocab.len());
            for label in SentimentLabel::ALL {
                let row: f64 = vocab.iter().map(|w| m.alpha(label, w).unwrap()).sum();
                assert!(
                    (row - 1.0).abs() < 1e-9,
                    "gamma {gamma} class {label} row sums to {row}"
                );
            }
        }
    }

    #[test]
    fn posteriors_match_brute_force_oracle() {
        let corpus = wider_corpus();
        for gamma in [0.5, 1.0, 3.0] {
            let m = NaiveBayesModel::<f64>::train(&corpus, &NbConfig { gamma }).unwrap();
            for text in [
                "sad day",
                "joy joy happy",
                "unknownword",
                "sad sad sad joy",
                "reading about pain and fun",
                "",
            ] {
                let tokens = toks(text);
                let got = m.posteriors(&tokens);
                let want = oracle_posteriors(&corpus, gamma, &tokens);
                for c in 0..3 {
                    assert!(
                        (got[c] - want[c]).abs() < 1e-9,
                        "gamma {gamma} text {text:?} class {c}: {} vs {}",
                        got[c],
                        want[c]
                    );
                }
                assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn predictions_follow_the_dominant_class() {
        let m = NaiveBayesModel::<f64>::train(&tiny_corpus(), &NbConfig::default()).unwrap();
        assert_eq!(m.predict(&toks("a a")), SentimentLabel::Negative);
        assert_eq!(m.predict(&toks("b")), SentimentLabel::Neutral);
        assert_eq!(m.predict(&toks("a b")), SentimentLabel::Positive);
        // All tokens unseen: equal priors tie and Neutral takes it.
        assert_eq!(m.predict(&toks("zzz yyy")), SentimentLabel::Neutral);
        assert_eq!(m.predict(&[]), SentimentLabel::Neutral);
    }

    #[test]
    fn exact_ties_prefer_neutral_then_lowest_index() {
        let with_neutral = vec![
            doc("x", SentimentLabel::Negative),
            doc("x", SentimentLabel::Neutral),
            doc("y", SentimentLabel::Positive),
        ];
        let m = NaiveBayesModel::<f64>::train(&with_neutral, &NbConfig::default()).unwrap();
        assert_eq!(m.predict(&toks("x")), SentimentLabel::Neutral);

        let without_neutral = vec![
            doc("x", SentimentLabel::Negative),
            doc("y", SentimentLabel::Neutral),
            doc("x", SentimentLabel::Positive),
        ];
        let m = NaiveBayesModel::<f64>::train(&without_neutral, &NbConfig::default()).unwrap();
        assert_eq!(m.predict(&toks("x")), SentimentLabel::Negative);
    }

    #[test]
    fn repeated_tokens_scale_log_odds_linearly() {
        // Equal priors, so the normalized log-odds between classes come
        // entirely from the token likelihoods.
        let m = NaiveBayesModel::<f64>::train(&tiny_corpus(), &NbConfig::default()).unwrap();
        let single = m.log_posteriors(&toks("a"));
        let double = m.log_posteriors(&toks("a a"));
        let d1 = single[0] - single[2];
        let d2 = double[0] - double[2];
        assert!((d2 - 2.0 * d1).abs() < 1e-12, "{d2} vs 2 * {d1}");
    }

    #[test]
    fn larger_gamma_pulls_probabilities_toward_uniform() {
        let corpus = wider_corpus();
        let uniform = 1.0 / 9.0;
        let mut last = f64::INFINITY;
        for gamma in [0.25, 1.0, 4.0, 16.0] {
            let m = NaiveBayesModel::<f64>::train(&corpus, &NbConfig { gamma }).unwrap();
            let a = m.alpha(SentimentLabel::Negative, "sad").unwrap();
            let gap = (a - uniform).abs();
            assert!(gap < last, "gamma {gamma}: gap {gap} did not shrink");
            last = gap;
        }
    }

    #[test]
    fn unsmoothed_training_zeroes_unseen_pairs() {
        let corpus = wider_corpus();
        let m = NaiveBayesModel::<f64>::train(&corpus, &NbConfig { gamma: 0.0 }).unwrap();
        assert_eq!(m.alpha(SentimentLabel::Negative, "joy"), Some(0.0));
        assert!(m.alpha(SentimentLabel::Positive, "joy").unwrap() > 0.0);
        // A zero-probability word rules the class out entirely.
        assert_eq!(m.predict(&toks("joy")), SentimentLabel::Positive);
        let p = m.posteriors(&toks("joy"));
        assert_eq!(p[SentimentLabel::Negative.index()], 0.0);
    }

    #[test]
    fn rejects_degenerate_training_input() {
        assert!(matches!(
            NaiveBayesModel::<f64>::train(&[], &NbConfig::default()),
            Err(TextError::EmptyCorpus)
        ));
        let missing = vec![
            doc("a", SentimentLabel::Negative),
            doc("b", SentimentLabel::Neutral),
        ];
        assert!(matches!(
            NaiveBayesModel::<f64>::train(&missing, &NbConfig::default()),
            Err(TextError::MissingClass(SentimentLabel::Positive))
        ));
        let empty_doc = vec![
            doc("a", SentimentLabel::Negative),
            doc("b", SentimentLabel::Neutral),
            doc("", SentimentLabel::Positive),
        ];
        assert!(matches!(
            NaiveBayesModel::<f64>::train(&empty_doc, &NbConfig::default()),
            Err(TextError::MissingClass(SentimentLabel::Positive))
        ));
        for gamma in [-0.5, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                NaiveBayesModel::<f64>::train(&tiny_corpus(), &NbConfig { gamma }),
                Err(TextError::BadGamma(_))
            ));
        }
    }

    #[test]
    fn saved_model_reloads_with_identical_posteriors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nb.json");
        let corpus = wider_corpus();
        let m = NaiveBayesModel::<f64>::train(&corpus, &NbConfig::default()).unwrap();
        m.save(&path).unwrap();
        let back = NaiveBayesModel::<f64>::load(&path).unwrap();
        assert_eq!(back.gamma(), m.gamma());
        assert_eq!(back.vocab_len(), m.vocab_len());
        for text in ["sad day", "joy joy happy", "crying at work"] {
            let tokens = toks(text);
            assert_eq!(back.log_posteriors(&tokens), m.log_posteriors(&tokens));
            assert_eq!(back.predict(&tokens), m.predict(&tokens));
        }
    }

    #[test]
    fn load_rejects_corrupt_model_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nb.json");
        let m = NaiveBayesModel::<f64>::train(&wider_corpus(), &NbConfig::default()).unwrap();
        m.save(&path).unwrap();
        let good = std::fs::read_to_string(&path).unwrap();

        let wrong_format = good.replace(MODEL_FORMAT, "sentiment-nb v9");
        std::fs::write(&path, wrong_format).unwrap();
        assert!(matches!(
            NaiveBayesModel::<f64>::load(&path),
            Err(TextError::BadModel(_))
        ));

        // Swap two vocabulary entries so the sorted-order check trips.
        let unsorted = good.replacen("\"crying\"", "\"zzz\"", 1);
        std::fs::write(&path, unsorted).unwrap();
        assert!(matches!(
            NaiveBayesModel::<f64>::load(&path),
            Err(TextError::BadModel(_))
        ));

        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(
            NaiveBayesModel::<f64>::load(&path),
            Err(TextError::BadModel(_))
        ));

        assert!(matches!(
            NaiveBayesModel::<f64>::load(&dir.path().join("absent.json")),
            Err(TextError::Io(_))
        ));
    }

    #[test]
    fn single_precision_model_trains_and_predicts() {
        let m = NaiveBayesModel::<f32>::train(&wider_corpus(), &NbConfig::default()).unwrap();
        assert_eq!(m.predict(&toks("sad crying")), SentimentLabel::Negative);
        assert_eq!(m.predict(&toks("joy happy fun")), SentimentLabel::Positive);
        let p = m.posteriors(&toks("sad"));
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }
}
