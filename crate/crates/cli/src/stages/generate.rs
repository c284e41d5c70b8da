//! Cohort synthesis. Every weekly upload goes through the same intake code
//! path the HTTP service uses, so generated data exercises exactly the
//! store layout later stages read, and a rerun with identical settings is
//! absorbed by replay suppression instead of corrupting the store.

use anyhow::{bail, Result};
use chrono::Days;

use hscreen_cohort::{generate_cohort, synth_accel_day, synth_gds, synth_tweets};
use hscreen_core::AccelSample;
use hscreen_ingest::{Envelope, IngestService};

use crate::config::PipelineConfig;
use crate::paths::{write_atomic, DataRoot, Manifest};

/// Four decimals keep upload files compact; the resolution sits two orders
/// of magnitude under the quietest synthetic noise floor.
fn accel_line(pid: &str, s: &AccelSample) -> String {
    format!("{},{},{:.4},{:.4},{:.4}\n", pid, s.t_ns, s.x, s.y, s.z)
}

fn send(
    service: &IngestService,
    key: &str,
    cn: &str,
    week: u32,
    payload: Vec<u8>,
) -> Result<bool> {
    let envelope = Envelope::new(key, cn, week, payload)?;
    Ok(service.route(&envelope)?.deduplicated)
}

pub fn run(cfg: &PipelineConfig, n: Option<usize>, weeks: Option<u32>) -> Result<String> {
    let n = n.unwrap_or(cfg.participants);
    let weeks = weeks.unwrap_or(cfg.weeks);
    if n < 3 {
        bail!("--n {n} needs at least one participant per severity stratum (3)");
    }
    if weeks == 0 {
        bail!("--weeks must be at least 1");
    }

    let root = DataRoot::new(&cfg.data_dir);
    let manifest = Manifest {
        seed: cfg.seed,
        participants: n,
        weeks,
        start_date: cfg.start_date,
    };
    if let Some(old) = Manifest::load(&root)? {
        if old != manifest {
            bail!(
                "{} already holds a cohort generated with different settings; \
                 remove it or pick another --data-dir",
                root.root().display()
            );
        }
    }

    let profiles = generate_cohort(n, cfg.seed)?;
    let service = IngestService::open(&root.store())?;
    let mut csv = String::from("participant_id,imei,twitter_id\n");
    let mut routed = 0usize;
    let mut replayed = 0usize;
    for p in &profiles {
        let rec = service.register(&p.imei, &p.twitter_id)?;
        if rec.participant_id != p.participant_id {
            bail!(
                "store assigned {} to imei {}, generator expected {}; \
                 the root holds registrations from another source",
                rec.participant_id,
                p.imei,
                p.participant_id
            );
        }
        csv.push_str(&format!("{},{},{}\n", p.participant_id, p.imei, p.twitter_id));
        for w in 0..weeks {
            let week_start = cfg.start_date + Days::new(7 * u64::from(w));
            let gds = synth_gds(p, week_start);
            replayed +=
                usize::from(send(&service, &p.imei, "01", w, format!("{}\n", gds.value()).into_bytes())?);
            routed += 1;

            let mut accel = String::new();
            for d in 0..7 {
                let date = week_start + Days::new(d);
                for s in synth_accel_day(p, date) {
                    accel.push_str(&accel_line(&p.participant_id, &s));
                }
            }
            if !accel.is_empty() {
                replayed += usize::from(send(&service, &p.imei, "02", w, accel.into_bytes())?);
                routed += 1;
            }

            let tweets = synth_tweets(p, week_start);
            if !tweets.is_empty() {
                let payload: String = tweets
                    .iter()
                    .map(|t| format!("{}\n", t.format_line()))
                    .collect();
                replayed +=
                    usize::from(send(&service, &p.twitter_id, "03", w, payload.into_bytes())?);
                routed += 1;
            }
        }
    }
    write_atomic(&root.participants_csv(), csv.as_bytes())?;
    write_atomic(&root.manifest(), manifest.render().as_bytes())?;
    Ok(format!(
        "generate: {n} participants, {weeks} weeks, {routed} uploads routed \
         ({replayed} replays suppressed), store {}",
        root.store().display()
    ))
}
