//! Daily and weekly behavioral features.
//!
//! A day yields nine features: six activity durations in seconds (sitting,
//! walking, standing, jogging, upstairs, downstairs) and three tweet
//! sentiment counts (negative, neutral, positive). A week runs Saturday
//! through Friday and is summarized three ways: all seven days, the working
//! days (Sunday through Thursday) and the weekend (Friday and Saturday),
//! giving a 27-value vector per participant-week.

use chrono::{Datelike, NaiveDate, Weekday};

use crate::har::ActivityLabel;
use crate::scalar::Real;
use crate::text::SentimentLabel;

/// Upper bound on any single activity duration within one day.
pub const DAY_SECONDS: f64 = 86_400.0;

/// Short names of the nine daily features, in vector order.
pub const BASE_FEATURE_NAMES: [&str; 9] = [
    "ST", "WT", "StT", "JoT", "UpT", "DownT", "NeS", "NuS", "PoS",
];

/// Column names of the weekly vector: the nine features over the full week,
/// then over working days, then over the weekend.
pub const FEATURE_NAMES: [&str; 27] = [
    "ST_week", "WT_week", "StT_week", "JoT_week", "UpT_week", "DownT_week", "NeS_week",
    "NuS_week", "PoS_week", "ST_work", "WT_work", "StT_work", "JoT_work", "UpT_work",
    "DownT_work", "NeS_work", "NuS_work", "PoS_work", "ST_wkend", "WT_wkend", "StT_wkend",
    "JoT_wkend", "UpT_wkend", "DownT_wkend", "NeS_wkend", "NuS_wkend", "PoS_wkend",
];

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("window at {t_ns} ns falls on {found}, not {expected}")]
    DateMismatch {
        t_ns: i64,
        expected: NaiveDate,
        found: NaiveDate,
    },
    #[error("two windows share start time {0} ns")]
    DuplicateWindow(i64),
    #[error("activity seconds {0} invalid: must be finite, >= 0 and <= 86400")]
    BadSeconds(f64),
    #[error("window timing invalid: window {window_secs} s, stride {stride_secs} s")]
    BadTiming { window_secs: f64, stride_secs: f64 },
    #[error("week must start on a Saturday, got {0}")]
    NotSaturday(NaiveDate),
    #[error("day {date} outside week starting {week_start}")]
    OutOfWeek { date: NaiveDate, week_start: NaiveDate },
    #[error("day belongs to {found:?}, expected {expected:?}")]
    WrongParticipant { expected: String, found: String },
    #[error("two day records share date {0}")]
    DuplicateDate(NaiveDate),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Time credit for overlapped windows: a window normally counts for its
/// stride, and the final window of a run of equal labels counts in full.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowTiming {
    pub window_secs: f64,
    pub stride_secs: f64,
}

impl Default for WindowTiming {
    fn default() -> Self {
        // 180-sample windows at 20 Hz with 50% overlap.
        Self {
            window_secs: 9.0,
            stride_secs: 4.5,
        }
    }
}

impl WindowTiming {
    pub fn new(window_secs: f64, stride_secs: f64) -> Result<Self, FeatureError> {
        let ok = window_secs.is_finite()
            && stride_secs.is_finite()
            && stride_secs > 0.0
            && stride_secs <= window_secs;
        if !ok {
            return Err(FeatureError::BadTiming {
                window_secs,
                stride_secs,
            });
        }
        Ok(Self {
            window_secs,
            stride_secs,
        })
    }

    /// Timing implied by a segmentation scheme.
    pub fn from_segmentation(
        window_len: usize,
        overlap: f64,
        rate_hz: f64,
    ) -> Result<Self, FeatureError> {
        let stride = crate::signal::window_stride(window_len, overlap);
        Self::new(window_len as f64 / rate_hz, stride as f64 / rate_hz)
    }

    fn stride_ns(&self) -> i64 {
        (self.stride_secs * 1e9).round() as i64
    }
}

/// One classified window, reduced to what daily aggregation needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPrediction {
    pub start_t_ns: i64,
    pub label: ActivityLabel,
}

impl WindowPrediction {
    pub fn from_window<S: Real>(
        window: &crate::signal::ActivityWindow<S>,
        label: ActivityLabel,
    ) -> Self {
        Self {
            start_t_ns: window.start_t_ns,
            label,
        }
    }
}

/// Nine features for one participant-day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyFeatures<S> {
    pub participant_id: String,
    pub date: NaiveDate,
    /// Seconds per activity, indexed by [`ActivityLabel::index`].
    pub activity_secs: [S; 6],
    /// Tweet counts: negative, neutral, positive.
    pub sentiment_counts: [u32; 3],
}

impl<S: Real> DailyFeatures<S> {
    pub fn new(
        participant_id: impl Into<String>,
        date: NaiveDate,
        activity_secs: [S; 6],
        sentiment_counts: [u32; 3],
    ) -> Result<Self, FeatureError> {
        for &s in &activity_secs {
            let v = s.to_f64_lossy();
            if !v.is_finite() || v < 0.0 || v > DAY_SECONDS {
                return Err(FeatureError::BadSeconds(v));
            }
        }
        Ok(Self {
            participant_id: participant_id.into(),
            date,
            activity_secs,
            sentiment_counts,
        })
    }

    pub fn zero(participant_id: impl Into<String>, date: NaiveDate) -> Self {
        Self {
            participant_id: participant_id.into(),
            date,
            activity_secs: [S::zero(); 6],
            sentiment_counts: [0; 3],
        }
    }

    /// The day's feature values in vector order: six durations then the
    /// three sentiment counts.
    pub fn values(&self) -> [S; 9] {
        let mut out = [S::zero(); 9];
        out[..6].copy_from_slice(&self.activity_secs);
        for (i, &c) in self.sentiment_counts.iter().enumerate() {
            out[6 + i] = S::c(c as f64);
        }
        out
    }
}

fn date_of_ns(t_ns: i64) -> NaiveDate {
    chrono::DateTime::from_timestamp_nanos(t_ns).date_naive()
}

/// Builds one day's features from classified windows and tweet sentiments.
///
/// Windows are sorted by start time; a window followed exactly one stride
/// later by another window of the same label is credited stride seconds,
/// any other window (run-final, isolated, or before a gap or label change)
/// is credited the full window length. Inputs may arrive in any order.
pub fn aggregate_day<S: Real>(
    participant_id: &str,
    date: NaiveDate,
    predictions: &[WindowPrediction],
    sentiments: &[SentimentLabel],
    timing: &WindowTiming,
) -> Result<DailyFeatures<S>, FeatureError> {
    let mut preds = predictions.to_vec();
    preds.sort_unstable_by_key(|p| p.start_t_ns);
    for pair in preds.windows(2) {
        if pair[0].start_t_ns == pair[1].start_t_ns {
            return Err(FeatureError::DuplicateWindow(pair[0].start_t_ns));
        }
    }
    for p in &preds {
        let found = date_of_ns(p.start_t_ns);
        if found != date {
            return Err(FeatureError::DateMismatch {
                t_ns: p.start_t_ns,
                expected: date,
                found,
            });
        }
    }

    let stride_ns = timing.stride_ns();
    let mut secs = [S::zero(); 6];
    for (i, p) in preds.iter().enumerate() {
        let continues = preds.get(i + 1).is_some_and(|next| {
            next.label == p.label && next.start_t_ns - p.start_t_ns == stride_ns
        });
        let credit = if continues {
            timing.stride_secs
        } else {
            timing.window_secs
        };
        secs[p.label.index()] += S::c(credit);
    }

    let mut counts = [0u32; 3];
    for s in sentiments {
        counts[s.index()] += 1;
    }

    DailyFeatures::new(participant_id, date, secs, counts)
}

/// The three calendar slices a week is summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DaySubgroup {
    /// All seven days, Saturday through Friday.
    Weekdays,
    /// Sunday through Thursday.
    WorkingDays,
    /// Friday and Saturday.
    Weekends,
}

impl DaySubgroup {
    pub fn contains(self, day: Weekday) -> bool {
        match self {
            DaySubgroup::Weekdays => true,
            DaySubgroup::WorkingDays => !matches!(day, Weekday::Fri | Weekday::Sat),
            DaySubgroup::Weekends => matches!(day, Weekday::Fri | Weekday::Sat),
        }
    }
}

fn check_week(days: &[DailyFeatures<impl Real>], week_start: NaiveDate) -> Result<(), FeatureError> {
    if week_start.weekday() != Weekday::Sat {
        return Err(FeatureError::NotSaturday(week_start));
    }
    let mut seen = std::collections::BTreeSet::new();
    for d in days {
        let offset = (d.date - week_start).num_days();
        if !(0..7).contains(&offset) {
            return Err(FeatureError::OutOfWeek {
                date: d.date,
                week_start,
            });
        }
        if !seen.insert(d.date) {
            return Err(FeatureError::DuplicateDate(d.date));
        }
    }
    Ok(())
}

/// Sums the nine features over one calendar subgroup of a Saturday-start
/// week. Missing days contribute zero. The full-week sum is formed as
/// working days plus weekend so the partition identity is exact in floating
/// point.
pub fn subgroup_sum<S: Real>(
    days: &[DailyFeatures<S>],
    week_start: NaiveDate,
    subgroup: DaySubgroup,
) -> Result<[S; 9], FeatureError> {
    check_week(days, week_start)?;
    Ok(subgroup_sum_unchecked(days, subgroup))
}

fn subgroup_sum_unchecked<S: Real>(days: &[DailyFeatures<S>], subgroup: DaySubgroup) -> [S; 9] {
    if let DaySubgroup::Weekdays = subgroup {
        let working = subgroup_sum_unchecked(days, DaySubgroup::WorkingDays);
        let weekend = subgroup_sum_unchecked(days, DaySubgroup::Weekends);
        let mut out = [S::zero(); 9];
        for k in 0..9 {
            out[k] = working[k] + weekend[k];
        }
        return out;
    }
    let mut sorted: Vec<&DailyFeatures<S>> = days.iter().collect();
    sorted.sort_by_key(|d| d.date);
    let mut out = [S::zero(); 9];
    for d in sorted {
        if subgroup.contains(d.date.weekday()) {
            let v = d.values();
            for k in 0..9 {
                out[k] += v[k];
            }
        }
    }
    out
}

/// One participant-week of features: the nine sums over the full week, then
/// over working days, then over the weekend.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyFeatureVector<S> {
    pub participant_id: String,
    pub week_index: u32,
    pub values: [S; 27],
}

impl<S: Real> WeeklyFeatureVector<S> {
    /// Assembles the 27-value layout from the two disjoint subgroup sums;
    /// the full-week block is their elementwise sum, which makes
    /// `values[k] == values[k + 9] + values[k + 18]` hold exactly.
    pub fn from_subgroups(
        participant_id: impl Into<String>,
        week_index: u32,
        working: [S; 9],
        weekend: [S; 9],
    ) -> Self {
        let mut values = [S::zero(); 27];
        for k in 0..9 {
            values[k] = working[k] + weekend[k];
            values[k + 9] = working[k];
            values[k + 18] = weekend[k];
        }
        Self {
            participant_id: participant_id.into(),
            week_index,
            values,
        }
    }

    /// Validates an externally supplied 27-value layout: nonnegative entries
    /// and the partition identity within rounding slack.
    pub fn from_values(
        participant_id: impl Into<String>,
        week_index: u32,
        values: [S; 27],
    ) -> Result<Self, FeatureError> {
        for (k, v) in values.iter().enumerate() {
            let x = v.to_f64_lossy();
            if !x.is_finite() || x < 0.0 {
                return Err(FeatureError::Parse {
                    line: 0,
                    reason: format!("{} = {x} must be finite and >= 0", FEATURE_NAMES[k]),
                });
            }
        }
        for k in 0..9 {
            let whole = values[k].to_f64_lossy();
            let parts = values[k + 9].to_f64_lossy() + values[k + 18].to_f64_lossy();
            if (whole - parts).abs() > 1e-9 * whole.abs().max(1.0) {
                return Err(FeatureError::Parse {
                    line: 0,
                    reason: format!(
                        "{} = {whole} does not split into {} + {}",
                        FEATURE_NAMES[k],
                        FEATURE_NAMES[k + 9],
                        FEATURE_NAMES[k + 18]
                    ),
                });
            }
        }
        Ok(Self {
            participant_id: participant_id.into(),
            week_index,
            values,
        })
    }

    pub fn value(&self, name: &str) -> Option<S> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }

    /// True when every feature splits exactly into its two subgroups.
    pub fn partition_holds(&self) -> bool {
        (0..9).all(|k| self.values[k] == self.values[k + 9] + self.values[k + 18])
    }
}

/// Builds the weekly vector for one participant from that week's day
/// records. Days must share the participant and fall inside the
/// Saturday-start week; absent days contribute zero.
pub fn build_week_vector<S: Real>(
    days: &[DailyFeatures<S>],
    participant_id: &str,
    week_index: u32,
    week_start: NaiveDate,
) -> Result<WeeklyFeatureVector<S>, FeatureError> {
    for d in days {
        if d.participant_id != participant_id {
            return Err(FeatureError::WrongParticipant {
                expected: participant_id.to_string(),
                found: d.participant_id.clone(),
            });
        }
    }
    check_week(days, week_start)?;
    let working = subgroup_sum_unchecked(days, DaySubgroup::WorkingDays);
    let weekend = subgroup_sum_unchecked(days, DaySubgroup::Weekends);
    Ok(WeeklyFeatureVector::from_subgroups(
        participant_id,
        week_index,
        working,
        weekend,
    ))
}

/// Header of the weekly-vector table.
pub fn week_csv_header() -> String {
    let mut cols = vec!["participant_id".to_string(), "week_index".to_string()];
    cols.extend(FEATURE_NAMES.iter().map(|n| n.to_string()));
    cols.push("gds".to_string());
    cols.join(",")
}

/// Serializes labeled weekly vectors as a comma-separated table.
pub fn write_week_csv<S: Real>(rows: &[(WeeklyFeatureVector<S>, u8)]) -> String {
    let mut out = week_csv_header();
    out.push('\n');
    for (vec, gds) in rows {
        out.push_str(&vec.participant_id);
        out.push(',');
        out.push_str(&vec.week_index.to_string());
        for v in &vec.values {
            out.push(',');
            out.push_str(&format!("{}", v.to_f64_lossy()));
        }
        out.push(',');
        out.push_str(&gds.to_string());
        out.push('\n');
    }
    out
}

/// Parses the weekly-vector table, validating the header, entry ranges and
/// the partition identity.
pub fn parse_week_csv<S: Real>(text: &str) -> Result<Vec<(WeeklyFeatureVector<S>, u8)>, FeatureError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(FeatureError::Parse {
        line: 1,
        reason: "empty table".into(),
    })?;
    if header.trim() != week_csv_header() {
        return Err(FeatureError::Parse {
            line: 1,
            reason: "header does not match the weekly-vector layout".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let err = |reason: String| FeatureError::Parse {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 30 {
            return Err(err(format!("{} fields, expected 30", fields.len())));
        }
        let participant_id = fields[0].to_string();
        if participant_id.is_empty() {
            return Err(err("empty participant_id".into()));
        }
        let week_index: u32 = fields[1]
            .parse()
            .map_err(|e| err(format!("bad week_index: {e}")))?;
        let mut values = [S::zero(); 27];
        for k in 0..27 {
            let v: f64 = fields[2 + k]
                .parse()
                .map_err(|e| err(format!("bad {}: {e}", FEATURE_NAMES[k])))?;
            values[k] = S::c(v);
        }
        let gds: u8 = fields[29]
            .parse()
            .map_err(|e| err(format!("bad gds: {e}")))?;
        if gds > 15 {
            return Err(err(format!("gds {gds} out of range 0..=15")));
        }
        let vec = WeeklyFeatureVector::from_values(participant_id, week_index, values)
            .map_err(|e| match e {
                FeatureError::Parse { reason, .. } => FeatureError::Parse {
                    line: line_no,
                    reason,
                },
                other => other,
            })?;
        rows.push((vec, gds));
    }
    Ok(rows)
}
