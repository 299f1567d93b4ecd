//! Seed sidecar wire format.
//!
//! The record that crosses the wire instead of extra image bits. Layout,
//! all integers little-endian:
//!
//! | offset | size | field                   |
//! |--------|------|-------------------------|
//! | 0      | 4    | magic `"GSDS"`          |
//! | 4      | 1    | version (0x01)          |
//! | 5      | 2    | total_steps T (u16)     |
//! | 7      | 2    | num_candidates N (u16)  |
//! | 9      | 2    | selected_index (u16)    |
//! | 11     | 8    | base_seed (u64)         |
//! | 19     | 4    | CRC-32 of bytes 0..19   |
//!
//! The 19-byte payload is constant regardless of image size; with the
//! CRC-32 (IEEE polynomial) appended, a record is exactly 23 bytes. The
//! CRC is checked before anything else so that any single corrupted bit is
//! reported as corruption.

use crate::error::{Error, Result};

pub const SIDECAR_MAGIC: [u8; 4] = *b"GSDS";
pub const SIDECAR_VERSION: u8 = 0x01;
/// Bytes covered by the CRC.
pub const SIDECAR_PAYLOAD_LEN: usize = 19;
/// Total record size on the wire.
pub const SIDECAR_LEN: usize = SIDECAR_PAYLOAD_LEN + 4;

/// The transmitted record: base seed, candidate count, and winning index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SeedSidecar {
    pub total_steps: u16,
    pub num_candidates: u16,
    pub selected_index: u16,
    pub base_seed: u64,
}

/// Serialize to the fixed 23-byte record.
pub fn encode_sidecar(s: &SeedSidecar) -> Result<Vec<u8>> {
    if s.selected_index >= s.num_candidates {
        return Err(Error::Config {
            field: "selected_index".to_string(),
            message: format!(
                "index {} out of range for {} candidates",
                s.selected_index, s.num_candidates
            ),
        });
    }
    let mut bytes = Vec::with_capacity(SIDECAR_LEN);
    bytes.extend_from_slice(&SIDECAR_MAGIC);
    bytes.push(SIDECAR_VERSION);
    bytes.extend_from_slice(&s.total_steps.to_le_bytes());
    bytes.extend_from_slice(&s.num_candidates.to_le_bytes());
    bytes.extend_from_slice(&s.selected_index.to_le_bytes());
    bytes.extend_from_slice(&s.base_seed.to_le_bytes());
    debug_assert_eq!(bytes.len(), SIDECAR_PAYLOAD_LEN);
    let crc = crc32(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    Ok(bytes)
}

/// Parse and validate a record. Error classes are distinguishable:
/// truncation, corruption (CRC), format (magic/version), and semantic
/// (index out of range).
pub fn decode_sidecar(bytes: &[u8]) -> Result<SeedSidecar> {
    if bytes.len() < SIDECAR_LEN {
        return Err(Error::Truncated {
            expected: SIDECAR_LEN,
            got: bytes.len(),
        });
    }
    if bytes.len() > SIDECAR_LEN {
        return Err(Error::Format(format!(
            "trailing bytes: record is {SIDECAR_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let stored_crc = u32::from_le_bytes(bytes[19..23].try_into().unwrap());
    let computed_crc = crc32(&bytes[..SIDECAR_PAYLOAD_LEN]);
    if stored_crc != computed_crc {
        return Err(Error::Corrupt(format!(
            "crc mismatch: stored {stored_crc:#010x}, computed {computed_crc:#010x}"
        )));
    }
    if bytes[0..4] != SIDECAR_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}",
            &bytes[0..4]
        )));
    }
    if bytes[4] != SIDECAR_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {:#04x}",
            bytes[4]
        )));
    }
    let record = SeedSidecar {
        total_steps: u16::from_le_bytes(bytes[5..7].try_into().unwrap()),
        num_candidates: u16::from_le_bytes(bytes[7..9].try_into().unwrap()),
        selected_index: u16::from_le_bytes(bytes[9..11].try_into().unwrap()),
        base_seed: u64::from_le_bytes(bytes[11..19].try_into().unwrap()),
    };
    if record.selected_index >= record.num_candidates {
        return Err(Error::Semantic(format!(
            "selected index {} out of range for {} candidates",
            record.selected_index, record.num_candidates
        )));
    }
    Ok(record)
}

/// CRC-32, IEEE polynomial (reflected 0xEDB88320), init and final XOR
/// 0xFFFFFFFF. Table-driven.
pub fn crc32(bytes: &[u8]) -> u32 {
    const fn build_table() -> [u32; 256] {
        let mut table = [0u32; 256];
        let mut i = 0;
        while i < 256 {
            let mut c = i as u32;
            let mut bit = 0;
            while bit < 8 {
                c = if c & 1 != 0 {
                    0xEDB8_8320 ^ (c >> 1)
                } else {
                    c >> 1
                };
                bit += 1;
            }
            table[i] = c;
            i += 1;
        }
        table
    }
    const TABLE: [u32; 256] = build_table();

    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc = TABLE[((crc ^ b as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    crc ^ 0xFFFF_FFFF
}
