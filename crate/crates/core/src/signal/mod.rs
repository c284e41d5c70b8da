//! Accelerometer stream handling: parsing, timestamp regularization, noise
//! filtering, gravity separation and sliding-window segmentation.
//!
//! Streams arrive as timestamped triaxial samples (m/s^2, nanosecond clock).
//! The preprocessing chain is: regularize onto a uniform grid, low-pass the
//! noise, split gravity from body acceleration, then cut the body signal into
//! fixed-length overlapping windows for the activity classifier.

mod filter;

pub use filter::{ButterworthSpec, LowpassFilter, BUTTERWORTH_ORDER};

use crate::scalar::Real;

/// Physically implausible readings above this magnitude are rejected at parse
/// time rather than clipped.
pub const MAX_ABS_ACCEL: f64 = 40.0;

/// Gaps longer than this are never interpolated across; the stream splits.
pub const GAP_SPLIT_NS: i64 = 2_000_000_000;

/// Default sampling rate of the pipeline (Hz).
pub const TARGET_RATE_HZ: f64 = 20.0;

/// Cutoff for the body/gravity split (Hz).
pub const GRAVITY_CUTOFF_HZ: f64 = 0.3;

/// Cutoff for the noise-removal low-pass applied before the split (Hz).
pub const NOISE_CUTOFF_HZ: f64 = 5.0;

/// Window geometry used by the activity classifier: 180 samples (9 s at
/// 20 Hz) with 50% overlap.
pub const WINDOW_LEN: usize = 180;
pub const WINDOW_OVERLAP: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("stream has {len} samples, need at least 2")]
    TooShort { len: usize },
    #[error("timestamps not strictly increasing at sample {index}")]
    NonMonotonic { index: usize },
    #[error("stream is not uniformly sampled: step changes at sample {index}")]
    NonUniform { index: usize },
    #[error("invalid sample rate {hz} Hz")]
    BadRate { hz: f64 },
    #[error("cutoff {cutoff_hz} Hz must lie in (0, {nyquist_hz}) (below Nyquist)")]
    BadCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("acceleration component {value} exceeds +/-{MAX_ABS_ACCEL} m/s^2")]
    OutOfRange { value: f64 },
    #[error("non-finite acceleration component")]
    NonFinite,
    #[error("window length must be at least 1")]
    BadWindowLen,
    #[error("overlap fraction {overlap} outside [0, 1)")]
    BadOverlap { overlap: f64 },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// One triaxial accelerometer reading. Components are capped at
/// [`MAX_ABS_ACCEL`]; timestamps are nanoseconds on a shared clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSample<S> {
    pub t_ns: i64,
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> AccelSample<S> {
    pub fn new(t_ns: i64, x: S, y: S, z: S) -> Result<Self, SignalError> {
        for v in [x, y, z] {
            if !v.is_finite() {
                return Err(SignalError::NonFinite);
            }
            if v.abs().to_f64_lossy() > MAX_ABS_ACCEL {
                return Err(SignalError::OutOfRange {
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(Self { t_ns, x, y, z })
    }

    pub fn axes(&self) -> [S; 3] {
        [self.x, self.y, self.z]
    }
}

/// Parses one `participant_id,t_ns,x,y,z` record.
pub fn parse_accel_line<S: Real>(
    line: &str,
    line_no: usize,
) -> Result<(String, AccelSample<S>), SignalError> {
    let parse = |reason: String| SignalError::Parse {
        line: line_no,
        reason,
    };
    let mut fields = line.split(',');
    let pid = fields
        .next()
        .filter(|p| !p.trim().is_empty())
        .ok_or_else(|| parse("missing participant_id".into()))?
        .trim()
        .to_string();
    let t_ns: i64 = fields
        .next()
        .ok_or_else(|| parse("missing t_ns".into()))?
        .trim()
        .parse()
        .map_err(|e| parse(format!("bad t_ns: {e}")))?;
    let mut axis = [0.0f64; 3];
    for (i, name) in ["x", "y", "z"].iter().enumerate() {
        let raw = fields
            .next()
            .ok_or_else(|| parse(format!("missing {name}")))?;
        axis[i] = raw
            .trim()
            .parse()
            .map_err(|e| parse(format!("bad {name}: {e}")))?;
    }
    if fields.next().is_some() {
        return Err(parse("too many fields".into()));
    }
    let sample = AccelSample::new(t_ns, S::c(axis[0]), S::c(axis[1]), S::c(axis[2]))
        .map_err(|e| parse(e.to_string()))?;
    Ok((pid, sample))
}

pub fn format_accel_line<S: Real>(pid: &str, s: &AccelSample<S>) -> String {
    format!(
        "{},{},{},{},{}",
        pid,
        s.t_ns,
        s.x.to_f64_lossy(),
        s.y.to_f64_lossy(),
        s.z.to_f64_lossy()
    )
}

/// Reads a whole accelerometer batch, one record per line. Blank lines are
/// skipped; any malformed line aborts with its line number.
pub fn parse_accel_records<S: Real>(
    text: &str,
) -> Result<Vec<(String, AccelSample<S>)>, SignalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_accel_line(line, i + 1)?);
    }
    Ok(out)
}

fn check_monotonic<S: Real>(samples: &[AccelSample<S>]) -> Result<(), SignalError> {
    for i in 1..samples.len() {
        if samples[i].t_ns <= samples[i - 1].t_ns {
            return Err(SignalError::NonMonotonic { index: i });
        }
    }
    Ok(())
}

/// Resamples an irregular stream onto a uniform `1/target_hz` grid by linear
/// interpolation. Gaps longer than [`GAP_SPLIT_NS`] are not interpolated
/// across; the stream splits into independent segments at each such gap.
/// Grid points that land exactly on an input timestamp copy that sample
/// bit-for-bit, so an already-uniform stream passes through unchanged.
pub fn regularize_timestamps<S: Real>(
    samples: &[AccelSample<S>],
    target_hz: f64,
) -> Result<Vec<Vec<AccelSample<S>>>, SignalError> {
    if samples.len() < 2 {
        return Err(SignalError::TooShort { len: samples.len() });
    }
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(SignalError::BadRate { hz: target_hz });
    }
    let step_ns = (1.0e9 / target_hz).round() as i64;
    if step_ns < 1 {
        return Err(SignalError::BadRate { hz: target_hz });
    }
    check_monotonic(samples)?;

    let mut segments = Vec::new();
    let mut start = 0usize;
    for i in 1..=samples.len() {
        let split = i == samples.len() || samples[i].t_ns - samples[i - 1].t_ns > GAP_SPLIT_NS;
        if split {
            segments.push(resample_segment(&samples[start..i], step_ns));
            start = i;
        }
    }
    Ok(segments)
}

fn resample_segment<S: Real>(seg: &[AccelSample<S>], step_ns: i64) -> Vec<AccelSample<S>> {
    if seg.len() == 1 {
        return vec![seg[0]];
    }
    let end = seg[seg.len() - 1].t_ns;
    let mut out = Vec::with_capacity(((end - seg[0].t_ns) / step_ns + 1) as usize);
    let mut left = 0usize;
    let mut t = seg[0].t_ns;
    while t <= end {
        while seg[left + 1].t_ns < t {
            left += 1;
        }
        let (lo, hi) = (&seg[left], &seg[left + 1]);
        let sample = if t == lo.t_ns {
            AccelSample { t_ns: t, ..*lo }
        } else if t == hi.t_ns {
            AccelSample { t_ns: t, ..*hi }
        } else {
            let w = S::c((t - lo.t_ns) as f64 / (hi.t_ns - lo.t_ns) as f64);
            AccelSample {
                t_ns: t,
                x: lo.x + w * (hi.x - lo.x),
                y: lo.y + w * (hi.y - lo.y),
                z: lo.z + w * (hi.z - lo.z),
            }
        };
        out.push(sample);
        t += step_ns;
    }
    out
}

/// Returns the constant sample step of a uniform stream, in nanoseconds.
fn uniform_step_ns<S: Real>(stream: &[AccelSample<S>]) -> Result<i64, SignalError> {
    if stream.len() < 2 {
        return Err(SignalError::TooShort { len: stream.len() });
    }
    check_monotonic(stream)?;
    let step = stream[1].t_ns - stream[0].t_ns;
    for i in 2..stream.len() {
        if stream[i].t_ns - stream[i - 1].t_ns != step {
            return Err(SignalError::NonUniform { index: i });
        }
    }
    Ok(step)
}

/// Applies a third-order Butterworth low-pass to each axis of a uniform
/// stream. Timestamps pass through untouched.
pub fn lowpass_stream<S: Real>(
    stream: &[AccelSample<S>],
    cutoff_hz: f64,
) -> Result<Vec<AccelSample<S>>, SignalError> {
    let step = uniform_step_ns(stream)?;
    let fs = 1.0e9 / step as f64;
    let filt = ButterworthSpec::new(S::c(cutoff_hz), S::c(fs))?.design();
    let mut axes: Vec<Vec<S>> = (0..3)
        .map(|k| stream.iter().map(|s| s.axes()[k]).collect())
        .collect();
    for axis in &mut axes {
        *axis = filt.apply(axis);
    }
    Ok(stream
        .iter()
        .enumerate()
        .map(|(i, s)| AccelSample {
            t_ns: s.t_ns,
            x: axes[0][i],
            y: axes[1][i],
            z: axes[2][i],
        })
        .collect())
}

/// Result of splitting a stream into a slow gravity component and the
/// residual body acceleration. `gravity + body` reconstructs the input
/// exactly, sample for sample.
#[derive(Debug, Clone)]
pub struct GravitySplit<S> {
    pub gravity: Vec<AccelSample<S>>,
    pub body: Vec<AccelSample<S>>,
}

/// Separates gravity from body acceleration on a uniform stream. Gravity is
/// the per-axis low-pass at [`GRAVITY_CUTOFF_HZ`]; body is the pointwise
/// remainder.
pub fn separate_gravity<S: Real>(
    stream: &[AccelSample<S>],
) -> Result<GravitySplit<S>, SignalError> {
    let gravity = lowpass_stream(stream, GRAVITY_CUTOFF_HZ)?;
    let body = stream
        .iter()
        .zip(&gravity)
        .map(|(s, g)| AccelSample {
            t_ns: s.t_ns,
            x: s.x - g.x,
            y: s.y - g.y,
            z: s.z - g.z,
        })
        .collect();
    Ok(GravitySplit { gravity, body })
}

/// A fixed-length run of consecutive body-acceleration triples, tagged with
/// its owner and start time. The standard pipeline uses [`WINDOW_LEN`]
/// samples per window; model code accepts other lengths for small harnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityWindow<S> {
    pub participant_id: String,
    pub start_t_ns: i64,
    pub samples: Vec<[S; 3]>,
}

impl<S: Real> ActivityWindow<S> {
    pub fn new(
        participant_id: impl Into<String>,
        start_t_ns: i64,
        samples: Vec<[S; 3]>,
    ) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::BadWindowLen);
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite);
        }
        Ok(Self {
            participant_id: participant_id.into(),
            start_t_ns,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Stride for a window length and overlap fraction, floored at one sample.
pub fn window_stride(window_len: usize, overlap: f64) -> usize {
    ((window_len as f64 * (1.0 - overlap)).round() as usize).max(1)
}

/// Number of full windows that fit over `n` samples.
pub fn window_count(n: usize, window_len: usize, stride: usize) -> usize {
    if n < window_len {
        0
    } else {
        (n - window_len) / stride + 1
    }
}

/// Cuts a uniform stream into overlapping fixed-length windows. Samples past
/// the last full window are dropped.
pub fn segment_windows<S: Real>(
    participant_id: &str,
    stream: &[AccelSample<S>],
    window_len: usize,
    overlap: f64,
) -> Result<Vec<ActivityWindow<S>>, SignalError> {
    if window_len == 0 {
        return Err(SignalError::BadWindowLen);
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(SignalError::BadOverlap { overlap });
    }
    if stream.len() >= window_len {
        uniform_step_ns(stream)?;
    }
    let stride = window_stride(window_len, overlap);
    let count = window_count(stream.len(), window_len, stride);
    let mut out = Vec::with_capacity(count);
    for w in 0..count {
        let lo = w * stride;
        let slice = &stream[lo..lo + window_len];
        out.push(ActivityWindow {
            participant_id: participant_id.to_string(),
            start_t_ns: slice[0].t_ns,
            samples: slice.iter().map(|s| s.axes()).collect(),
        });
    }
    Ok(out)
}

/// Full preprocessing for one raw stream: regularize to [`TARGET_RATE_HZ`],
/// low-pass the noise at [`NOISE_CUTOFF_HZ`], then split out gravity. One
/// `GravitySplit` per gap-delimited segment.
pub fn preprocess_stream<S: Real>(
    raw: &[AccelSample<S>],
) -> Result<Vec<GravitySplit<S>>, SignalError> {
    let segments = regularize_timestamps(raw, TARGET_RATE_HZ)?;
    let mut out = Vec::with_capacity(segments.len());
    for seg in &segments {
        if seg.len() < 2 {
            continue;
        }
        let denoised = lowpass_stream(seg, NOISE_CUTOFF_HZ)?;
        out.push(separate_gravity(&denoised)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_stream(times_ns: &[i64], xs: &[f64]) -> Vec<AccelSample<f64>> {
        times_ns
            .iter()
            .zip(xs)
            .map(|(&t, &x)| AccelSample::new(t, x, 0.0, 0.0).unwrap())
            .collect()
    }

    #[test]
    fn resample_interpolates_linear_ramp() {
        // Two knots a second apart at 20 Hz give 21 grid points; a linear
        // ramp 0..20 must hit every integer exactly.
        let s = ramp_stream(&[0, 1_000_000_000], &[0.0, 20.0]);
        let segs = regularize_timestamps(&s, 20.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].len(), 21);
        for (k, sample) in segs[0].iter().enumerate() {
            assert_eq!(sample.t_ns, k as i64 * 50_000_000);
            assert!(
                (sample.x - k as f64).abs() < 1e-12,
                "grid point {k}: got {}",
                sample.x
            );
        }
    }

    #[test]
    fn resample_is_identity_on_uniform_stream() {
        let times: Vec<i64> = (0..100).map(|k| k * 50_000_000).collect();
        let xs: Vec<f64> = (0..100).map(|k| (k as f64 * 0.37).sin()).collect();
        let s = ramp_stream(&times, &xs);
        let segs = regularize_timestamps(&s, 20.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0], s);
    }

    #[test]
    fn resample_splits_at_long_gaps() {
        let mut times: Vec<i64> = (0..40).map(|k| k * 50_000_000).collect();
        // 10 s gap, then a second run.
        let resume = times[39] + 10_000_000_000;
        times.extend((0..40).map(|k| resume + k * 50_000_000));
        let xs = vec![1.0; 80];
        let segs = regularize_timestamps(&ramp_stream(&times, &xs), 20.0).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].len(), 40);
        assert_eq!(segs[1].len(), 40);
        assert_eq!(segs[1][0].t_ns, resume);
    }

    #[test]
    fn resample_rejects_short_and_unordered_streams() {
        let one = ramp_stream(&[0], &[1.0]);
        assert!(matches!(
            regularize_timestamps(&one, 20.0),
            Err(SignalError::TooShort { len: 1 })
        ));
        let bad = ramp_stream(&[0, 100, 50], &[0.0, 1.0, 2.0]);
        assert!(matches!(
            regularize_timestamps(&bad, 20.0),
            Err(SignalError::NonMonotonic { index: 2 })
        ));
        let ok = ramp_stream(&[0, 100], &[0.0, 1.0]);
        assert!(matches!(
            regularize_timestamps(&ok, 0.0),
            Err(SignalError::BadRate { .. })
        ));
    }

    #[test]
    fn sample_bounds_are_enforced() {
        assert!(AccelSample::new(0, 40.0, 0.0, 0.0).is_ok());
        assert!(matches!(
            AccelSample::new(0, 40.5, 0.0, 0.0),
            Err(SignalError::OutOfRange { .. })
        ));
        assert!(matches!(
            AccelSample::new(0, f64::NAN, 0.0, 0.0),
            Err(SignalError::NonFinite)
        ));
    }

    #[test]
    fn accel_line_round_trips_and_rejects_garbage() {
        let (pid, s) = parse_accel_line::<f64>("07,1200,0.5,-1.25,9.81", 1).unwrap();
        assert_eq!(pid, "07");
        assert_eq!(s.t_ns, 1200);
        assert_eq!(s.z, 9.81);
        let line = format_accel_line(&pid, &s);
        let (pid2, s2) = parse_accel_line::<f64>(&line, 1).unwrap();
        assert_eq!(pid2, pid);
        assert_eq!(s2, s);

        for bad in [
            "07,1200,0.5,-1.25",
            "07,abc,0,0,0",
            "07,0,0,0,0,9",
            "07,0,99,0,0",
            ",0,0,0,0",
        ] {
            assert!(parse_accel_line::<f64>(bad, 3).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn gravity_split_reconstructs_exactly() {
        let times: Vec<i64> = (0..800).map(|k| k * 50_000_000).collect();
        let s: Vec<AccelSample<f64>> = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let tt = k as f64 / 20.0;
                AccelSample {
                    t_ns: t,
                    x: (2.0 * std::f64::consts::TAU * tt).sin(),
                    y: 0.3 * (5.0 * tt).cos(),
                    z: 9.81 + 0.1 * (1.3 * tt).sin(),
                }
            })
            .collect();
        let split = separate_gravity(&s).unwrap();
        for i in 0..s.len() {
            let g = &split.gravity[i];
            let b = &split.body[i];
            assert!((g.x + b.x - s[i].x).abs() <= 1e-12);
            assert!((g.y + b.y - s[i].y).abs() <= 1e-12);
            assert!((g.z + b.z - s[i].z).abs() <= 1e-12);
        }
    }

    #[test]
    fn gravity_split_recovers_static_orientation() {
        let s: Vec<AccelSample<f64>> = (0..1200)
            .map(|k| AccelSample {
                t_ns: k * 50_000_000,
                x: 0.0,
                y: 0.0,
                z: 9.81,
            })
            .collect();
        let split = separate_gravity(&s).unwrap();
        // Judge after the filter transient has decayed.
        for i in 800..1200 {
            assert!((split.gravity[i].z - 9.81).abs() < 0.05);
            let b = &split.body[i];
            assert!(b.x.abs() < 0.05 && b.y.abs() < 0.05 && b.z.abs() < 0.05);
        }
    }

    #[test]
    fn gravity_tracks_dc_under_fast_oscillation() {
        // 2 Hz oscillation rides on a constant 9.81; the 0.3 Hz gravity
        // estimate should hold the constant to within 0.1.
        let s: Vec<AccelSample<f64>> = (0..2400)
            .map(|k| {
                let t = k as f64 / 20.0;
                AccelSample {
                    t_ns: k * 50_000_000,
                    x: 0.0,
                    y: 0.0,
                    z: 9.81 + 2.0 * (std::f64::consts::TAU * 2.0 * t).sin(),
                }
            })
            .collect();
        let split = separate_gravity(&s).unwrap();
        for i in 1200..2400 {
            assert!(
                (split.gravity[i].z - 9.81).abs() < 0.1,
                "sample {i}: gravity z = {}",
                split.gravity[i].z
            );
        }
    }

    #[test]
    fn gravity_split_requires_uniform_spacing() {
        let s = ramp_stream(&[0, 50_000_000, 170_000_000], &[0.0, 0.0, 0.0]);
        assert!(matches!(
            separate_gravity(&s),
            Err(SignalError::NonUniform { index: 2 })
        ));
    }

    #[test]
    fn window_counts_match_closed_form() {
        // stride = round(180 * 0.5) = 90; count = floor((N - 180)/90) + 1.
        assert_eq!(window_stride(180, 0.5), 90);
        assert_eq!(window_count(1800, 180, 90), 19);
        assert_eq!(window_count(180, 180, 90), 1);
        assert_eq!(window_count(179, 180, 90), 0);
        // Degenerate rounding can't stall the sweep.
        assert_eq!(window_stride(1, 0.9), 1);
    }

    #[test]
    fn segment_windows_layout_and_bounds() {
        let s: Vec<AccelSample<f64>> = (0..450)
            .map(|k| AccelSample {
                t_ns: k * 50_000_000,
                x: k as f64,
                y: 0.0,
                z: 0.0,
            })
            .collect();
        let wins = segment_windows("03", &s, 180, 0.5).unwrap();
        assert_eq!(wins.len(), 4);
        assert_eq!(wins[0].start_t_ns, 0);
        assert_eq!(wins[1].start_t_ns, 90 * 50_000_000);
        assert_eq!(wins[1].samples[0][0], 90.0);
        assert_eq!(wins[3].samples[179][0], 449.0);
        assert!(wins.iter().all(|w| w.len() == 180));
        assert!(wins.iter().all(|w| w.participant_id == "03"));

        assert!(segment_windows("03", &s, 0, 0.5).is_err());
        assert!(segment_windows("03", &s, 180, 1.0).is_err());
        assert!(segment_windows("03", &s[..100], 180, 0.5).unwrap().is_empty());
    }

    #[test]
    fn preprocess_chains_resample_filter_and_split() {
        // Irregular-but-dense walking-like signal with one long gap.
        let mut samples = Vec::new();
        let mut t: i64 = 0;
        for k in 0..2000 {
            let tt = t as f64 * 1e-9;
            samples.push(AccelSample {
                t_ns: t,
                x: 1.2 * (std::f64::consts::TAU * 2.0 * tt).sin(),
                y: 0.0,
                z: 9.81,
            });
            t += if k % 7 == 0 { 47_000_000 } else { 51_000_000 };
            if k == 1200 {
                t += 8_000_000_000;
            }
        }
        let splits = preprocess_stream(&samples).unwrap();
        assert_eq!(splits.len(), 2);
        for split in &splits {
            assert_eq!(split.gravity.len(), split.body.len());
            let step = split.body[1].t_ns - split.body[0].t_ns;
            assert_eq!(step, 50_000_000);
        }
    }

    #[test]
    fn windows_work_in_f32_too() {
        let s: Vec<AccelSample<f32>> = (0..200)
            .map(|k| AccelSample {
                t_ns: k * 50_000_000,
                x: k as f32,
                y: 0.0,
                z: 0.0,
            })
            .collect();
        let wins = segment_windows("p", &s, 180, 0.5).unwrap();
        assert_eq!(wins.len(), 1);
        assert_eq!(wins[0].samples[10][0], 10.0f32);
    }
}
