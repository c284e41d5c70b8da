//! Accelerometer preprocessing: each stored week is regularized onto the
//! 20 Hz grid, low-pass denoised, and split into gravity and body motion.
//! Only the body streams go to disk, one file per participant-week, with
//! recording gaps kept visible as blank lines so no later window spans one.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use hscreen_core::signal::{
    lowpass_stream, parse_accel_records, regularize_timestamps, AccelSample, TARGET_RATE_HZ,
};
use hscreen_ingest::IngestService;

use crate::config::PipelineConfig;
use crate::paths::{require, write_atomic, DataRoot, Manifest};

/// Body segments of one raw stream: denoised, then reduced by the gravity
/// low-pass. At the default cutoffs this matches the training-side
/// preprocessing exactly; a test below pins that.
pub(crate) fn body_segments(
    raw: &[AccelSample<f64>],
    noise_cutoff_hz: f64,
    gravity_cutoff_hz: f64,
) -> Result<Vec<Vec<AccelSample<f64>>>> {
    if raw.len() < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for seg in regularize_timestamps(raw, TARGET_RATE_HZ)? {
        if seg.len() < 2 {
            continue;
        }
        let denoised = lowpass_stream(&seg, noise_cutoff_hz)?;
        let gravity = lowpass_stream(&denoised, gravity_cutoff_hz)?;
        out.push(
            denoised
                .iter()
                .zip(&gravity)
                .map(|(s, g)| AccelSample {
                    t_ns: s.t_ns,
                    x: s.x - g.x,
                    y: s.y - g.y,
                    z: s.z - g.z,
                })
                .collect(),
        );
    }
    Ok(out)
}

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
    if participants.is_empty() {
        bail!(
            "store {} has no registered participants; run `hscreen generate` first",
            root.store().display()
        );
    }

    let mut weeks_done = 0usize;
    let mut segments = 0usize;
    let mut samples = 0usize;
    for pid in &participants {
        for w in 0..shape.weeks {
            let data = service.fetch_week(pid, w)?;
            let mut out = String::new();
            if let Some(bytes) = data.accel {
                let text = String::from_utf8(bytes)
                    .with_context(|| format!("accel upload for {pid} week {w}"))?;
                let raw: Vec<AccelSample<f64>> = parse_accel_records::<f64>(&text)
                    .with_context(|| format!("accel upload for {pid} week {w}"))?
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect();
                for body in body_segments(&raw, cfg.noise_cutoff_hz, cfg.gravity_cutoff_hz)? {
                    if !out.is_empty() {
                        out.push('\n');
                    }
                    for s in &body {
                        let _ = writeln!(
                            out,
                            "{},{},{:.6},{:.6},{:.6}",
                            pid, s.t_ns, s.x, s.y, s.z
                        );
                    }
                    segments += 1;
                    samples += body.len();
                }
            }
            write_atomic(&root.body_file(pid, w), out.as_bytes())?;
            weeks_done += 1;
        }
    }
    Ok(format!(
        "preprocess: {} participants, {weeks_done} weeks, {segments} segments, {samples} samples",
        participants.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hscreen_core::signal::{preprocess_stream, GRAVITY_CUTOFF_HZ, NOISE_CUTOFF_HZ};

    /// A two-bout stream with a gap wide enough to split segments.
    fn raw_stream() -> Vec<AccelSample<f64>> {
        let step = 50_000_000i64;
        let mut out = Vec::new();
        for k in 0..400i64 {
            let t = k as f64 / 20.0;
            out.push(
                AccelSample::new(k * step, (6.3 * t).sin(), 0.25 * (2.0 * t).cos(), 9.81)
                    .unwrap(),
            );
        }
        let resume = 400 * step + 3_000_000_000;
        for k in 0..300i64 {
            let t = k as f64 / 20.0;
            out.push(
                AccelSample::new(resume + k * step, (9.4 * t).sin(), 0.0, 9.81 + t.sin())
                    .unwrap(),
            );
        }
        out
    }

    #[test]
    fn default_cutoffs_reproduce_the_training_side_chain() {
        let raw = raw_stream();
        let mine = body_segments(&raw, NOISE_CUTOFF_HZ, GRAVITY_CUTOFF_HZ).unwrap();
        let reference = preprocess_stream(&raw).unwrap();
        assert_eq!(mine.len(), reference.len());
        assert_eq!(mine.len(), 2, "gap should split the stream");
        for (a, b) in mine.iter().zip(&reference) {
            assert_eq!(a.len(), b.body.len());
            for (x, y) in a.iter().zip(&b.body) {
                assert_eq!(x.t_ns, y.t_ns);
                assert_eq!([x.x, x.y, x.z], [y.x, y.y, y.z]);
            }
        }
    }

    #[test]
    fn streams_too_short_to_filter_become_empty_output() {
        let raw = vec![AccelSample::new(0, 0.0, 0.0, 9.81).unwrap()];
        assert!(body_segments(&raw, 5.0, 0.3).unwrap().is_empty());
        assert!(body_segments(&[], 5.0, 0.3).unwrap().is_empty());
    }
}
