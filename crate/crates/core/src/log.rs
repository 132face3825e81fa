//! Append-only log framing.
//!
//! Each entry is one frame:
//!
//! ```text
//! +-----------------+-------------------+----------------------+
//! | len: u32 LE     | crc32: u32 LE     | payload: len bytes   |
//! +-----------------+-------------------+----------------------+
//! ```
//!
//! `crc32` is the IEEE CRC-32 of the payload bytes alone. The payload is the
//! JSON encoding of a [`LogEntry`].
//!
//! A frame that runs past the end of the input, or whose checksum fails and
//! which is the last frame in the input, is a torn tail left by an
//! interrupted write and is dropped. A checksum failure anywhere else means
//! the log is corrupt.

use alloc::{string::String, vec::Vec};

use crate::state::LogEntry;

pub const FRAME_HEADER_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogError {
    #[error("checksum mismatch in log entry at byte {offset}")]
    ChecksumMismatch { offset: usize },
    #[error("undecodable log entry at byte {offset}: {reason}")]
    Undecodable { offset: usize, reason: String },
}

pub fn checksum(payload: &[u8]) -> u32 {
    crc32fast::hash(payload)
}

pub fn frame(payload: &[u8]) -> Vec<u8> {
    let len = u32::try_from(payload.len()).expect("log payload exceeds 4 GiB");
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&checksum(payload).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn encode_entry(entry: &LogEntry) -> Vec<u8> {
    frame(&serde_json::to_vec(entry).expect("log entries always serialize"))
}

/// Payload slices of the intact frames in `bytes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frames<'a> {
    /// `(offset, payload)` for each intact frame, in order.
    pub payloads: Vec<(usize, &'a [u8])>,
    /// Length of the intact prefix; everything past it is a torn tail.
    pub valid_len: usize,
}

impl Frames<'_> {
    pub fn torn(&self, total_len: usize) -> bool {
        self.valid_len < total_len
    }
}

pub fn split_frames(bytes: &[u8]) -> Result<Frames<'_>, LogError> {
    let mut payloads = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        if rest.len() < FRAME_HEADER_LEN {
            break;
        }
        let len = u32::from_le_bytes(rest[0..4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(rest[4..8].try_into().unwrap());
        let Some(payload) = rest.get(FRAME_HEADER_LEN..FRAME_HEADER_LEN + len) else {
            break;
        };
        let end = offset + FRAME_HEADER_LEN + len;
        if checksum(payload) != crc {
            if end == bytes.len() {
                break;
            }
            return Err(LogError::ChecksumMismatch { offset });
        }
        payloads.push((offset, payload));
        offset = end;
    }
    Ok(Frames { payloads, valid_len: offset })
}

/// Decoded log: the entries of every intact frame plus the intact prefix length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedLog {
    pub entries: Vec<LogEntry>,
    pub valid_len: usize,
}

pub fn decode_log(bytes: &[u8]) -> Result<DecodedLog, LogError> {
    let frames = split_frames(bytes)?;
    let entries = frames
        .payloads
        .iter()
        .map(|&(offset, payload)| {
            serde_json::from_slice(payload)
                .map_err(|e| LogError::Undecodable { offset, reason: alloc::format!("{e}") })
        })
        .collect::<Result<_, _>>()?;
    Ok(DecodedLog { entries, valid_len: frames.valid_len })
}
