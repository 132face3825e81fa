//! Snapshot image: an 8-byte magic followed by exactly one log-style frame
//! whose payload is the JSON image of the full engine state.

use alloc::{format, string::String, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::log::{checksum, frame, FRAME_HEADER_LEN};
use crate::record::Record;
use crate::state::EngineState;

pub const MAGIC: &[u8; 8] = b"FLRSNAP1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot has bad magic")]
    BadMagic,
    #[error("snapshot is truncated")]
    Truncated,
    #[error("snapshot checksum mismatch")]
    ChecksumMismatch,
    #[error("snapshot is undecodable: {0}")]
    Undecodable(String),
    #[error(transparent)]
    Inconsistent(#[from] CoreError),
}

#[derive(Serialize, Deserialize)]
struct Image {
    last_seq: u64,
    records: Vec<Record>,
}

pub fn encode(state: &EngineState) -> Vec<u8> {
    let image = Image { last_seq: state.last_seq(), records: state.records().cloned().collect() };
    let payload = serde_json::to_vec(&image).expect("snapshot images always serialize");
    let mut out = Vec::with_capacity(MAGIC.len() + FRAME_HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend(frame(&payload));
    out
}

pub fn decode(bytes: &[u8]) -> Result<EngineState, SnapshotError> {
    let rest = bytes.strip_prefix(&MAGIC[..]).ok_or(SnapshotError::BadMagic)?;
    if rest.len() < FRAME_HEADER_LEN {
        return Err(SnapshotError::Truncated);
    }
    let len = u32::from_le_bytes(rest[0..4].try_into().unwrap()) as usize;
    let crc = u32::from_le_bytes(rest[4..8].try_into().unwrap());
    let payload = &rest[FRAME_HEADER_LEN..];
    if payload.len() != len {
        return Err(SnapshotError::Truncated);
    }
    if checksum(payload) != crc {
        return Err(SnapshotError::ChecksumMismatch);
    }
    let image: Image =
        serde_json::from_slice(payload).map_err(|e| SnapshotError::Undecodable(format!("{e}")))?;
    Ok(EngineState::from_parts(image.last_seq, image.records)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::AppId;
    use crate::record::{Collection, FieldEntry, FieldName, Fields, Scope};

    #[test]
    fn empty_state_round_trips() {
        let state = EngineState::new();
        assert_eq!(decode(&encode(&state)).unwrap(), state);
    }

    #[test]
    fn populated_state_round_trips_and_detects_damage() {
        let mut state = EngineState::new();
        for i in 0..3 {
            let mut fields = Fields::new();
            fields.insert(FieldName::parse("n").unwrap(), FieldEntry::private(format!("{i}")));
            let e = state
                .prepare_append(AppId::from("a"), Scope::Static, Collection::parse("c").unwrap(), fields, i)
                .unwrap();
            state.apply(e).unwrap();
        }
        let bytes = encode(&state);
        assert_eq!(decode(&bytes).unwrap(), state);
        assert_eq!(decode(&bytes[..bytes.len() - 1]), Err(SnapshotError::Truncated));
        let mut bad = bytes.clone();
        let last = bad.len() - 2;
        bad[last] ^= 1;
        assert_eq!(decode(&bad), Err(SnapshotError::ChecksumMismatch));
        assert_eq!(decode(b"NOTASNAP"), Err(SnapshotError::BadMagic));
    }
}
