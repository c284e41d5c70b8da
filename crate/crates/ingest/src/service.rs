//! Registry and store. All state lives under one root directory: a JSON
//! registry at the top, one directory per participant, one data file per
//! (week, stream) pair holding verbatim line-delimited payloads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{SecondsFormat, Utc};
use hscreen_core::predict::GdsScore;
use hscreen_core::signal::{parse_accel_line, SignalError};
use hscreen_core::text::{TextError, Tweet};
use serde::{Deserialize, Serialize};

use crate::envelope::{check_key, CnCode, Envelope, KeyKind};
use crate::IngestError;

const REGISTRY_FORMAT: &str = "hscreen-registry-v1";

/// One enrolled participant. The id is assigned at registration; both keys
/// are unique across the registry for the life of the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub imei: String,
    pub twitter_id: String,
    /// RFC 3339 UTC registration time. Informational only; no pipeline
    /// output depends on it.
    pub registered_at: String,
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    format: String,
    participants: Vec<ParticipantRecord>,
}

/// Immutable registry snapshot. Writers build a new one and swap it in;
/// readers keep whatever snapshot they grabbed.
#[derive(Default)]
struct Registry {
    records: Vec<ParticipantRecord>,
    by_imei: BTreeMap<String, usize>,
    by_twitter: BTreeMap<String, usize>,
    by_id: BTreeMap<String, usize>,
}

impl Registry {
    fn index(records: Vec<ParticipantRecord>) -> Result<Self, IngestError> {
        let mut reg = Registry {
            records,
            ..Registry::default()
        };
        for (i, r) in reg.records.iter().enumerate() {
            if reg.by_imei.insert(r.imei.clone(), i).is_some() {
                return Err(IngestError::BadRegistry(format!(
                    "IMEI {:?} appears twice",
                    r.imei
                )));
            }
            if reg.by_twitter.insert(r.twitter_id.clone(), i).is_some() {
                return Err(IngestError::BadRegistry(format!(
                    "twitter id {:?} appears twice",
                    r.twitter_id
                )));
            }
            if reg.by_id.insert(r.participant_id.clone(), i).is_some() {
                return Err(IngestError::BadRegistry(format!(
                    "participant id {:?} appears twice",
                    r.participant_id
                )));
            }
        }
        Ok(reg)
    }
}

/// Where an accepted envelope landed, plus the dedup notice for replays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordRef {
    pub participant_id: String,
    pub cn: CnCode,
    pub week_index: u32,
    pub file: PathBuf,
    /// Record lines carried by this envelope.
    pub records: usize,
    /// True when an identical payload was already stored for this stream;
    /// nothing was written.
    pub deduplicated: bool,
}

/// Everything stored for one participant-week. Streams that never arrived
/// are `None`; present ones are the file bytes, verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeekData {
    pub participant_id: String,
    pub week_index: u32,
    pub gds: Option<Vec<u8>>,
    pub accel: Option<Vec<u8>>,
    pub tweets: Option<Vec<u8>>,
}

impl WeekData {
    pub fn stream(&self, cn: CnCode) -> Option<&[u8]> {
        match cn {
            CnCode::Gds => self.gds.as_deref(),
            CnCode::Accel => self.accel.as_deref(),
            CnCode::Tweets => self.tweets.as_deref(),
        }
    }

    pub fn missing(&self) -> Vec<CnCode> {
        CnCode::ALL
            .into_iter()
            .filter(|&cn| self.stream(cn).is_none())
            .collect()
    }

    fn slot_mut(&mut self, cn: CnCode) -> &mut Option<Vec<u8>> {
        match cn {
            CnCode::Gds => &mut self.gds,
            CnCode::Accel => &mut self.accel,
            CnCode::Tweets => &mut self.tweets,
        }
    }
}

/// One lock per (participant, week, stream) write target.
type StreamLocks = Mutex<BTreeMap<(String, u32, CnCode), Arc<Mutex<()>>>>;

/// File-backed intake service. Safe to share across threads: registry
/// updates swap an immutable snapshot after the new file is durably in
/// place, data writes are serialized per (participant, week, stream), and
/// reads touch no locks beyond grabbing a snapshot.
pub struct IngestService {
    root: PathBuf,
    registry: RwLock<Arc<Registry>>,
    streams: StreamLocks,
}

impl IngestService {
    /// Opens (or initializes) a store rooted at `root`. An existing
    /// registry is reloaded and revalidated, so dedup and key uniqueness
    /// survive restarts.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        let path = root.join("registry.json");
        let registry = match fs::read_to_string(&path) {
            Ok(text) => {
                let file: RegistryFile = serde_json::from_str(&text)
                    .map_err(|e| IngestError::BadRegistry(e.to_string()))?;
                if file.format != REGISTRY_FORMAT {
                    return Err(IngestError::BadRegistry(format!(
                        "format {:?}, expected {REGISTRY_FORMAT:?}",
                        file.format
                    )));
                }
                for r in &file.participants {
                    check_key(&r.imei, KeyKind::Imei)?;
                    check_key(&r.twitter_id, KeyKind::TwitterId)?;
                }
                Registry::index(file.participants)?
            }
            Err(e) if e.kind() == ErrorKind::NotFound => Registry::default(),
            Err(e) => return Err(io_err(&path, e)),
        };
        Ok(Self {
            root,
            registry: RwLock::new(Arc::new(registry)),
            streams: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Registration order, which is also participant-id order.
    pub fn participants(&self) -> Vec<ParticipantRecord> {
        self.registry.read().unwrap().records.clone()
    }

    /// Enrolls a (device, account) pair and returns its record. The exact
    /// pair registers once and then replays idempotently; either key
    /// reappearing with a different partner is a collision.
    pub fn register(
        &self,
        imei: &str,
        twitter_id: &str,
    ) -> Result<ParticipantRecord, IngestError> {
        check_key(imei, KeyKind::Imei)?;
        check_key(twitter_id, KeyKind::TwitterId)?;
        let mut guard = self.registry.write().unwrap();
        match (guard.by_imei.get(imei), guard.by_twitter.get(twitter_id)) {
            (Some(&i), Some(&j)) if i == j => Ok(guard.records[i].clone()),
            (Some(&i), _) => Err(IngestError::Collision {
                key: imei.to_string(),
                holder: guard.records[i].participant_id.clone(),
            }),
            (None, Some(&j)) => Err(IngestError::Collision {
                key: twitter_id.to_string(),
                holder: guard.records[j].participant_id.clone(),
            }),
            (None, None) => {
                let mut n = guard.records.len() + 1;
                let participant_id = loop {
                    let candidate = format!("p{n:02}");
                    if !guard.by_id.contains_key(&candidate) {
                        break candidate;
                    }
                    n += 1;
                };
                let record = ParticipantRecord {
                    participant_id,
                    imei: imei.to_string(),
                    twitter_id: twitter_id.to_string(),
                    registered_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
                };
                let mut records = guard.records.clone();
                records.push(record.clone());
                let next = Arc::new(Registry::index(records)?);
                self.persist_registry(&next)?;
                *guard = next;
                Ok(record)
            }
        }
    }

    /// Validates an envelope against the registry and its stream's line
    /// format, then appends the payload to the stream file. Routing reads
    /// nothing but the registry and the envelope; a payload whose content
    /// hash was already accepted for the stream is dropped with a notice.
    pub fn route(&self, env: &Envelope) -> Result<RecordRef, IngestError> {
        let reg = self.registry.read().unwrap().clone();
        let idx = match env.cn.key_kind() {
            KeyKind::Imei => reg.by_imei.get(&env.source_key),
            KeyKind::TwitterId => reg.by_twitter.get(&env.source_key),
        };
        let idx = *idx.ok_or_else(|| IngestError::UnknownKey(env.source_key.clone()))?;
        let participant_id = reg.records[idx].participant_id.clone();
        let records = validate_payload(env, &participant_id)?;

        let file = self.data_file(&participant_id, env.week_index, env.cn);
        let stored = RecordRef {
            participant_id: participant_id.clone(),
            cn: env.cn,
            week_index: env.week_index,
            file: file.clone(),
            records,
            deduplicated: false,
        };

        let lock = self.stream_lock(&participant_id, env.week_index, env.cn);
        let _held = lock.lock().unwrap();

        let hash_file = self.hash_file(&participant_id, env.week_index, env.cn);
        let mut seen = read_hashes(&hash_file)?;
        let hash = fnv1a64(&env.payload);
        if seen.contains(&hash) {
            return Ok(RecordRef {
                deduplicated: true,
                ..stored
            });
        }

        let mut content = match fs::read(&file) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&file, e)),
        };
        // Keep line structure intact if an earlier payload lacked a final
        // newline; otherwise bytes are stored exactly as sent.
        if !content.is_empty() && content.last() != Some(&b'\n') {
            content.push(b'\n');
        }
        content.extend_from_slice(&env.payload);
        write_atomic(&file, &content)?;
        // Data lands before its hash. A crash between the two replays as a
        // duplicate append, never as silent data loss.
        seen.insert(hash);
        write_hashes(&hash_file, &seen)?;
        Ok(stored)
    }

    /// Returns whatever subset of the week's streams exists. Never
    /// fabricates and never mutates; absent streams come back `None`.
    pub fn fetch_week(
        &self,
        participant_id: &str,
        week_index: u32,
    ) -> Result<WeekData, IngestError> {
        let reg = self.registry.read().unwrap().clone();
        if !reg.by_id.contains_key(participant_id) {
            return Err(IngestError::UnknownParticipant(participant_id.to_string()));
        }
        let mut data = WeekData {
            participant_id: participant_id.to_string(),
            week_index,
            gds: None,
            accel: None,
            tweets: None,
        };
        for cn in CnCode::ALL {
            let path = self.data_file(participant_id, week_index, cn);
            match fs::read(&path) {
                Ok(bytes) => *data.slot_mut(cn) = Some(bytes),
                Err(e) if e.kind() == ErrorKind::NotFound => {}
                Err(e) => return Err(io_err(&path, e)),
            }
        }
        Ok(data)
    }

    fn data_file(&self, participant_id: &str, week: u32, cn: CnCode) -> PathBuf {
        self.root
            .join(participant_id)
            .join(format!("week{week:03}-{}.txt", cn.file_stem()))
    }

    fn hash_file(&self, participant_id: &str, week: u32, cn: CnCode) -> PathBuf {
        self.root
            .join(participant_id)
            .join(".dedup")
            .join(format!("week{week:03}-{}", cn.file_stem()))
    }

    fn stream_lock(&self, participant_id: &str, week: u32, cn: CnCode) -> Arc<Mutex<()>> {
        let mut map = self.streams.lock().unwrap();
        map.entry((participant_id.to_string(), week, cn))
            .or_default()
            .clone()
    }

    fn persist_registry(&self, registry: &Registry) -> Result<(), IngestError> {
        let file = RegistryFile {
            format: REGISTRY_FORMAT.to_string(),
            participants: registry.records.clone(),
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| IngestError::BadRegistry(e.to_string()))?;
        write_atomic(&self.root.join("registry.json"), json.as_bytes())
    }
}

/// Checks every record line under the stream's format and pins it to the
/// resolved participant, so cross-wired uploads fail loudly with a line
/// number instead of polluting another participant's store.
fn validate_payload(env: &Envelope, participant_id: &str) -> Result<usize, IngestError> {
    let text = std::str::from_utf8(&env.payload).map_err(|e| IngestError::BadPayload {
        line: 1,
        reason: format!("payload is not UTF-8 text: {e}"),
    })?;
    let mut records = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match env.cn {
            CnCode::Gds => {
                let value: u8 =
                    line.trim()
                        .parse()
                        .map_err(|e| IngestError::BadPayload {
                            line: line_no,
                            reason: format!("bad GDS score: {e}"),
                        })?;
                if value > GdsScore::MAX {
                    return Err(IngestError::BadPayload {
                        line: line_no,
                        reason: format!("GDS score {value} outside 0..={}", GdsScore::MAX),
                    });
                }
            }
            CnCode::Accel => {
                let (pid, _) = parse_accel_line::<f64>(line, line_no).map_err(|e| match e {
                    SignalError::Parse { line, reason } => {
                        IngestError::BadPayload { line, reason }
                    }
                    other => IngestError::BadPayload {
                        line: line_no,
                        reason: other.to_string(),
                    },
                })?;
                if pid != participant_id {
                    return Err(IngestError::BadPayload {
                        line: line_no,
                        reason: format!(
                            "record names participant {pid:?}, key resolves to {participant_id:?}"
                        ),
                    });
                }
            }
            CnCode::Tweets => {
                let tweet = Tweet::parse_line(line, line_no).map_err(|e| match e {
                    TextError::Parse { line, reason } => IngestError::BadPayload { line, reason },
                    other => IngestError::BadPayload {
                        line: line_no,
                        reason: other.to_string(),
                    },
                })?;
                if tweet.twitter_id != env.source_key {
                    return Err(IngestError::BadPayload {
                        line: line_no,
                        reason: format!(
                            "record names account {:?}, envelope came from {:?}",
                            tweet.twitter_id, env.source_key
                        ),
                    });
                }
            }
        }
        records += 1;
    }
    if records == 0 {
        return Err(IngestError::EmptyPayload);
    }
    Ok(records)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn read_hashes(path: &Path) -> Result<BTreeSet<u64>, IngestError> {
    match fs::read_to_string(path) {
        Ok(text) => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                u64::from_str_radix(l.trim(), 16)
                    .map_err(|e| IngestError::BadRegistry(format!("dedup entry {l:?}: {e}")))
            })
            .collect(),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(BTreeSet::new()),
        Err(e) => Err(io_err(path, e)),
    }
}

fn write_hashes(path: &Path, hashes: &BTreeSet<u64>) -> Result<(), IngestError> {
    let mut text = String::new();
    for h in hashes {
        text.push_str(&format!("{h:016x}\n"));
    }
    write_atomic(path, text.as_bytes())
}

/// Full rewrite through a temp file plus rename, so a reader always sees
/// either the old file or the new one, never a torn middle.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let parent = path.parent().expect("store paths always have a parent");
    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    let mut name = path.file_name().expect("store paths name a file").to_owned();
    name.push(".tmp");
    let tmp = parent.join(name);
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}
