//! Upload envelope and the stream codes that type its payload.

use crate::IngestError;

/// Payload stream codes. The two-digit wire strings are fixed; anything
/// else is rejected before routing is attempted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CnCode {
    /// Weekly GDS self-report, one integer score per line.
    Gds,
    /// Raw accelerometer records in the signal line format.
    Accel,
    /// Tweet records in the text line format.
    Tweets,
}

impl CnCode {
    pub const ALL: [CnCode; 3] = [CnCode::Gds, CnCode::Accel, CnCode::Tweets];

    pub fn parse(code: &str) -> Result<Self, IngestError> {
        match code {
            "01" => Ok(CnCode::Gds),
            "02" => Ok(CnCode::Accel),
            "03" => Ok(CnCode::Tweets),
            other => Err(IngestError::BadCn(other.to_string())),
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            CnCode::Gds => "01",
            CnCode::Accel => "02",
            CnCode::Tweets => "03",
        }
    }

    /// Which key namespace a sender on this stream identifies itself with.
    /// Phone-borne streams carry the device IMEI; tweets carry the account
    /// id.
    pub fn key_kind(self) -> KeyKind {
        match self {
            CnCode::Gds | CnCode::Accel => KeyKind::Imei,
            CnCode::Tweets => KeyKind::TwitterId,
        }
    }

    pub(crate) fn file_stem(self) -> &'static str {
        match self {
            CnCode::Gds => "cn01",
            CnCode::Accel => "cn02",
            CnCode::Tweets => "cn03",
        }
    }
}

impl std::fmt::Display for CnCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// The two source-key namespaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Imei,
    TwitterId,
}

impl KeyKind {
    pub fn describe(self) -> &'static str {
        match self {
            KeyKind::Imei => "15-digit IMEI",
            KeyKind::TwitterId => "18-digit twitter id",
        }
    }

    fn digits(self) -> usize {
        match self {
            KeyKind::Imei => 15,
            KeyKind::TwitterId => 18,
        }
    }
}

/// Rejects a key that is not exactly the namespace's count of ASCII digits.
pub fn check_key(key: &str, kind: KeyKind) -> Result<(), IngestError> {
    if key.len() != kind.digits() || !key.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IngestError::BadKey {
            key: key.to_string(),
            expected: kind.describe(),
        });
    }
    Ok(())
}

/// One upload: a sender key, a stream code, a week slot and opaque bytes.
/// Construction pins the key format to the stream's namespace; payload
/// content is checked at routing, where the registry is available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub source_key: String,
    pub cn: CnCode,
    pub week_index: u32,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub fn new(
        source_key: impl Into<String>,
        cn: &str,
        week_index: u32,
        payload: Vec<u8>,
    ) -> Result<Self, IngestError> {
        let cn = CnCode::parse(cn)?;
        let source_key = source_key.into();
        check_key(&source_key, cn.key_kind())?;
        Ok(Self {
            source_key,
            cn,
            week_index,
            payload,
        })
    }
}
