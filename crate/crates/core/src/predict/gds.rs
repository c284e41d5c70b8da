//! GDS scores, severity levels and deviation measurement.

use crate::features::WeeklyFeatureVector;
use crate::scalar::Real;

use super::PredictError;

/// A 15-item short-form GDS total, an integer in 0..=15.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GdsScore(u8);

impl GdsScore {
    pub const MAX: u8 = 15;

    pub fn new(value: u8) -> Result<Self, PredictError> {
        if value > Self::MAX {
            return Err(PredictError::BadGds(value as i64));
        }
        Ok(Self(value))
    }

    /// Rounds a raw regression output to the nearest score, clamping into
    /// the instrument's range.
    pub fn from_raw(raw: f64) -> Self {
        if raw.is_nan() {
            return Self(0);
        }
        Self(raw.round().clamp(0.0, Self::MAX as f64) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl std::fmt::Display for GdsScore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The three severity levels the score maps onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepressionLevel {
    Absence = 0,
    MildModerate = 1,
    Severe = 2,
}

impl DepressionLevel {
    pub const ALL: [DepressionLevel; 3] = [
        DepressionLevel::Absence,
        DepressionLevel::MildModerate,
        DepressionLevel::Severe,
    ];

    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DepressionLevel::Absence => "Absence",
            DepressionLevel::MildModerate => "MildModerate",
            DepressionLevel::Severe => "Severe",
        }
    }
}

impl std::fmt::Display for DepressionLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DepressionLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown severity level {s:?}"))
    }
}

/// Severity thresholds: below 5 absence, 5 through 9 mild/moderate, above 9
/// severe.
pub fn classify_level(score: GdsScore) -> DepressionLevel {
    match score.value() {
        0..=4 => DepressionLevel::Absence,
        5..=9 => DepressionLevel::MildModerate,
        _ => DepressionLevel::Severe,
    }
}

/// Root mean square deviation between two equal-length series.
pub fn rmsd<S: Real>(pred: &[S], truth: &[S]) -> Result<S, PredictError> {
    if pred.len() != truth.len() {
        return Err(PredictError::LengthMismatch {
            a: pred.len(),
            b: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(PredictError::EmptyData);
    }
    let mut acc = S::zero();
    for (&p, &t) in pred.iter().zip(truth) {
        let d = p - t;
        acc += d * d;
    }
    Ok((acc / S::c(pred.len() as f64)).sqrt())
}

/// One labeled participant-week: the 27 weekly features plus the reported
/// GDS total.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantWeek<S> {
    pub vector: WeeklyFeatureVector<S>,
    pub gds: GdsScore,
}

impl<S: Real> ParticipantWeek<S> {
    pub fn new(vector: WeeklyFeatureVector<S>, gds: u8) -> Result<Self, PredictError> {
        Ok(Self {
            vector,
            gds: GdsScore::new(gds)?,
        })
    }

    pub fn level(&self) -> DepressionLevel {
        classify_level(self.gds)
    }
}
