//! Shared readers for the stage-to-stage tables.

use std::collections::BTreeMap;

use anyhow::{Context, Result};

use hscreen_core::features::parse_week_csv;
use hscreen_core::predict::DepressionLevel;
use hscreen_core::ParticipantWeek;

use crate::paths::{read_text, require, DataRoot};

/// Labeled weekly vectors from the feature table, in file order.
pub fn load_weeks(root: &DataRoot) -> Result<Vec<ParticipantWeek>> {
    let path = root.weeks_csv();
    require(&path, "featurize")?;
    let rows = parse_week_csv::<f64>(&read_text(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    rows.into_iter()
        .map(|(vector, gds)| ParticipantWeek::new(vector, gds).map_err(Into::into))
        .collect()
}

/// Week indexes per participant in file order. Cross-validation folds
/// report held-out predictions in exactly this order, so zipping against
/// it recovers each prediction's week.
pub fn week_indexes(weeks: &[ParticipantWeek]) -> BTreeMap<String, Vec<u32>> {
    let mut map: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for w in weeks {
        map.entry(w.vector.participant_id.clone())
            .or_default()
            .push(w.vector.week_index);
    }
    map
}

/// Dense design matrix of the named features plus the score targets.
pub fn design_matrix(
    weeks: &[ParticipantWeek],
    names: &[String],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut x = Vec::with_capacity(weeks.len());
    let mut y = Vec::with_capacity(weeks.len());
    for w in weeks {
        let row = names
            .iter()
            .map(|n| {
                w.vector
                    .value(n)
                    .ok_or_else(|| anyhow::anyhow!("unknown weekly feature {n:?}"))
            })
            .collect::<Result<Vec<f64>>>()?;
        x.push(row);
        y.push(f64::from(w.gds.value()));
    }
    Ok((x, y))
}

pub fn parse_level(s: &str) -> Result<DepressionLevel> {
    DepressionLevel::ALL
        .into_iter()
        .find(|l| l.name() == s)
        .ok_or_else(|| anyhow::anyhow!("unknown severity level {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hscreen_core::features::{build_week_vector, DailyFeatures};
    use chrono::NaiveDate;

    fn week(pid: &str, index: u32, gds: u8) -> ParticipantWeek {
        let start = NaiveDate::from_ymd_opt(2019, 4, 6).unwrap();
        let days: Vec<DailyFeatures<f64>> = (0..7)
            .map(|d| DailyFeatures::zero(pid, start + chrono::Days::new(d)))
            .collect();
        ParticipantWeek::new(build_week_vector(&days, pid, index, start).unwrap(), gds).unwrap()
    }

    #[test]
    fn week_indexes_follow_file_order() {
        let weeks = vec![week("p02", 0, 3), week("p01", 1, 5), week("p02", 4, 7)];
        let map = week_indexes(&weeks);
        assert_eq!(map["p01"], vec![1]);
        assert_eq!(map["p02"], vec![0, 4]);
    }

    #[test]
    fn levels_round_trip_through_their_names() {
        for level in DepressionLevel::ALL {
            assert_eq!(parse_level(level.name()).unwrap(), level);
        }
        assert!(parse_level("bogus").is_err());
    }
}
