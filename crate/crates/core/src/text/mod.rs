//! Tweet text handling: tokenization, lexicon polarity scoring, keyword
//! screening and a multinomial naive Bayes sentiment classifier.
//!
//! Sentiment is a three-way split. The lexicon path scores a tweet as the
//! sum of per-token polarities and takes the sign; the naive Bayes path is
//! trained on labeled documents and used where a learned model is wanted.

mod nb;

pub use nb::{NaiveBayesModel, NbConfig};

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("lexicon polarity {value} for {word:?} outside {{-1, 0, 1}}")]
    BadPolarity { word: String, value: i64 },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus has no usable {0} examples")]
    MissingClass(SentimentLabel),
    #[error("smoothing gamma {0} must be finite and >= 0")]
    BadGamma(f64),
    #[error("model file rejected: {0}")]
    BadModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sentiment classes in their fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SentimentLabel {
    Negative = 0,
    Neutral = 1,
    Positive = 2,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Polarity value of the class: -1, 0 or +1.
    pub fn value(self) -> i64 {
        self.index() as i64 - 1
    }

    /// Class of a summed polarity score: the sign.
    pub fn from_score(score: i64) -> Self {
        match score.signum() {
            -1 => SentimentLabel::Negative,
            0 => SentimentLabel::Neutral,
            _ => SentimentLabel::Positive,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "Negative",
            SentimentLabel::Neutral => "Neutral",
            SentimentLabel::Positive => "Positive",
        }
    }
}

impl std::fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SentimentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown sentiment label {s:?}"))
    }
}

/// Bare negation words carry no polarity of their own; a lexicon may not
/// assign them one.
pub const NEGATION_WORDS: [&str; 5] = ["no", "not", "never", "none", "neither"];

/// Keywords whose presence (as a case-insensitive substring) admits a tweet
/// into the pipeline.
pub const TRACKED_KEYWORDS: [&str; 4] = ["depression", "anxiety", "sad", "mental health"];

/// Lowercases, drops URLs, strips `#`/`@` sigils and splits on anything that
/// is not alphanumeric, keeping word-internal apostrophes.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
        {
            continue;
        }
        let stripped = lower.trim_start_matches(['#', '@']);
        for run in stripped.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
            let word = run.trim_matches('\'');
            if !word.is_empty() {
                tokens.push(word.to_string());
            }
        }
    }
    tokens
}

/// True when the text contains at least one of the keywords, matched as a
/// case-insensitive substring.
pub fn keyword_filter(text: &str, keywords: &[String]) -> bool {
    let lower = text.to_lowercase();
    keywords.iter().any(|k| lower.contains(&k.to_lowercase()))
}

pub fn default_keywords() -> Vec<String> {
    TRACKED_KEYWORDS.iter().map(|k| k.to_string()).collect()
}

/// Word -> polarity map. Unknown words score zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    map: BTreeMap<String, i8>,
}

impl Lexicon {
    /// Parses `word <TAB> polarity` lines; `#` comments and blank lines are
    /// skipped. Polarity entries for the negation words are forced neutral.
    pub fn from_tsv(text: &str) -> Result<Self, TextError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, pol) = line.split_once('\t').ok_or_else(|| TextError::Parse {
                line: i + 1,
                reason: "expected word<TAB>polarity".into(),
            })?;
            let value: i64 = pol.trim().parse().map_err(|e| TextError::Parse {
                line: i + 1,
                reason: format!("bad polarity: {e}"),
            })?;
            if !(-1..=1).contains(&value) {
                return Err(TextError::BadPolarity {
                    word: word.to_string(),
                    value,
                });
            }
            map.insert(word.trim().to_lowercase(), value as i8);
        }
        for neg in NEGATION_WORDS {
            map.insert(neg.to_string(), 0);
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Parse {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::from_tsv(&text)
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> &'static Lexicon {
        static BUILTIN: OnceLock<Lexicon> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Lexicon::from_tsv(include_str!("../../data/lexicon.tsv"))
                .expect("shipped lexicon parses")
        })
    }

    pub fn polarity(&self, token: &str) -> i8 {
        self.map.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Unit-weighted sum of token polarities.
pub fn polarity_score(tokens: &[String], lexicon: &Lexicon) -> i64 {
    tokens.iter().map(|t| lexicon.polarity(t) as i64).sum()
}

/// Lexicon classification of a raw tweet text: tokenize, sum, take the sign.
pub fn lexicon_label(text: &str, lexicon: &Lexicon) -> SentimentLabel {
    SentimentLabel::from_score(polarity_score(&tokenize(text), lexicon))
}

/// One tweet record. The line format is tab-separated with the free text
/// last so the text itself may contain commas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub twitter_id: String,
    pub tweet_id: String,
    pub t_ns: i64,
    pub text: String,
}

impl Tweet {
    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, TextError> {
        let err = |reason: String| TextError::Parse {
            line: line_no,
            reason,
        };
        let mut parts = line.splitn(4, '\t');
        let twitter_id = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| err("missing twitter_id".into()))?
            .to_string();
        let tweet_id = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| err("missing tweet_id".into()))?
            .to_string();
        let t_ns: i64 = parts
            .next()
            .ok_or_else(|| err("missing t_ns".into()))?
            .trim()
            .parse()
            .map_err(|e| err(format!("bad t_ns: {e}")))?;
        let text = parts
            .next()
            .ok_or_else(|| err("missing text".into()))?
            .to_string();
        Ok(Self {
            twitter_id,
            tweet_id,
            t_ns,
            text,
        })
    }

    pub fn format_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.twitter_id, self.tweet_id, self.t_ns, self.text
        )
    }
}

/// Parses a whole tweet batch, skipping blank lines.
pub fn parse_tweet_records(text: &str) -> Result<Vec<Tweet>, TextError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(Tweet::parse_line(line, i + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_normalizes_case_sigils_and_urls() {
        assert_eq!(tokenize("I am SAD!!"), ["i", "am", "sad"]);
        assert_eq!(
            tokenize("#depression hits https://t.co/x again"),
            ["depression", "hits", "again"]
        );
        assert_eq!(tokenize("@friend don't worry"), ["friend", "don't", "worry"]);
        assert_eq!(tokenize("state-of-the-art"), ["state", "of", "the", "art"]);
        assert_eq!(tokenize("'quoted' words"), ["quoted", "words"]);
        assert_eq!(tokenize("  \t  "), Vec::<String>::new());
        assert_eq!(tokenize("www.example.com but THIS stays"), ["but", "this", "stays"]);
    }

    #[test]
    fn polarity_scores_for_reference_sentences() {
        let lex = Lexicon::builtin();
        let s1 = tokenize("The joke is so funny, I am laughing like dying");
        assert_eq!(polarity_score(&s1, lex), 3);
        assert_eq!(
            lexicon_label("The joke is so funny, I am laughing like dying", lex),
            SentimentLabel::Positive
        );

        let s2 = tokenize("I am so depressed I will suicide oneday");
        assert_eq!(polarity_score(&s2, lex), -1);
        assert_eq!(
            lexicon_label("I am so depressed I will suicide oneday", lex),
            SentimentLabel::Negative
        );

        let s3 = tokenize("Someday I will die");
        assert_eq!(polarity_score(&s3, lex), 0);
        assert_eq!(
            lexicon_label("Someday I will die", lex),
            SentimentLabel::Neutral
        );
    }

    #[test]
    fn polarity_is_additive_over_concatenation() {
        let lex = Lexicon::builtin();
        let parts = [
            "happy joy",
            "terrible dying pain",
            "mental health today",
            "no never neither",
        ];
        let mut total = 0;
        let mut all = Vec::new();
        for p in parts {
            let toks = tokenize(p);
            total += polarity_score(&toks, lex);
            all.extend(toks);
        }
        assert_eq!(polarity_score(&all, lex), total);
    }

    #[test]
    fn negation_words_stay_neutral_even_if_a_lexicon_marks_them() {
        let lex = Lexicon::from_tsv("not\t-1\nbad\t-1\n").unwrap();
        assert_eq!(lex.polarity("not"), 0);
        assert_eq!(lex.polarity("bad"), -1);
        assert_eq!(lex.polarity("unknownword"), 0);
        for w in NEGATION_WORDS {
            assert_eq!(Lexicon::builtin().polarity(w), 0, "{w} must be neutral");
        }
    }

    #[test]
    fn lexicon_rejects_out_of_range_polarity() {
        assert!(matches!(
            Lexicon::from_tsv("happy\t2\n"),
            Err(TextError::BadPolarity { value: 2, .. })
        ));
        assert!(matches!(
            Lexicon::from_tsv("happy one\n"),
            Err(TextError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn sign_to_label_is_exhaustive() {
        for score in -30..=30i64 {
            let label = SentimentLabel::from_score(score);
            let expect = match score {
                s if s < 0 => SentimentLabel::Negative,
                0 => SentimentLabel::Neutral,
                _ => SentimentLabel::Positive,
            };
            assert_eq!(label, expect);
            assert_eq!(label.value(), score.signum());
        }
    }

    #[test]
    fn keyword_screen_is_case_insensitive_substring() {
        let kw = default_keywords();
        assert!(keyword_filter("my Depression diary", &kw));
        assert!(keyword_filter("such sadness inside", &kw)); // "sad" substring
        assert!(keyword_filter("Mental Health matters", &kw));
        assert!(!keyword_filter("a lovely day outside", &kw));
        assert!(!keyword_filter("mental arithmetic for health", &kw));
    }

    #[test]
    fn tweet_lines_round_trip_with_commas_in_text() {
        let t = Tweet {
            twitter_id: "123456789012345678".into(),
            tweet_id: "987654321098765432".into(),
            t_ns: 1_555_000_000_000_000_000,
            text: "feeling tired, sad, and done".into(),
        };
        let line = t.format_line();
        let back = Tweet::parse_line(&line, 1).unwrap();
        assert_eq!(back, t);

        assert!(Tweet::parse_line("only\ttwo", 1).is_err());
        assert!(Tweet::parse_line("a\tb\tnotanumber\ttext", 1).is_err());
        let batch = format!("{}\n\n{}\n", line, line);
        assert_eq!(parse_tweet_records(&batch).unwrap().len(), 2);
    }
}
