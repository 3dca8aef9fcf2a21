//! Wire format for one patient record.
//!
//! ```text
//! 0      SOF 0x7E
//! 1      version 0x01
//! 2      payload length (26)
//! 3..29  payload
//! 29     CRC-8/ATM over bytes 1..29
//!
//! payload:
//! 0..2   serial, u16 BE
//! 2..10  name code, ASCII, space padded
//! 10     age
//! 11..22 mobile, 11 ASCII digits
//! 22..24 temperature in tenths of °C, i16 BE (0 = unmeasured)
//! 24     bpm (0 = unmeasured)
//! 25     flags: bit0 temperature measured, bit1 pulse measured
//! ```

use thiserror::Error;

use crate::queue::{validate_temperature, FieldError, PatientRecord, NAME_MAX_LEN, RECORD_BYTES};

pub const SOF: u8 = 0x7E;
pub const VERSION: u8 = 0x01;
pub const FRAME_LEN: usize = RECORD_BYTES + 4;

const FLAG_TEMP: u8 = 0x01;
const FLAG_PULSE: u8 = 0x02;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("bad start-of-frame byte")]
    BadSof,
    #[error("unsupported frame version {0:#04x}")]
    BadVersion(u8),
    #[error("bad frame length")]
    BadLength,
    #[error("crc mismatch: computed {computed:#04x}, frame has {received:#04x}")]
    BadCrc { computed: u8, received: u8 },
    #[error("bad field: {0}")]
    BadField(#[from] FieldError),
    #[error("bad flags byte {0:#04x}")]
    BadFlags(u8),
}

impl FrameError {
    /// Field-level failures after a good CRC.
    pub fn is_field_error(&self) -> bool {
        matches!(self, FrameError::BadField(_) | FrameError::BadFlags(_))
    }
}

const CRC8_POLY: u8 = 0x07;

const fn crc8_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x80 != 0 {
                (crc << 1) ^ CRC8_POLY
            } else {
                crc << 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

static CRC8_TABLE: [u8; 256] = crc8_table();

/// CRC-8/ATM: poly 0x07, init 0x00, no reflection, no final xor.
pub fn crc8(data: &[u8]) -> u8 {
    data.iter()
        .fold(0u8, |crc, &byte| CRC8_TABLE[usize::from(crc ^ byte)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame([u8; FRAME_LEN]);

impl Frame {
    pub fn as_bytes(&self) -> &[u8; FRAME_LEN] {
        &self.0
    }

    pub fn payload(&self) -> &[u8] {
        &self.0[3..3 + RECORD_BYTES]
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

fn put_padded(dst: &mut [u8], text: &str) {
    dst.fill(b' ');
    let bytes = text.as_bytes();
    let n = bytes.len().min(dst.len());
    dst[..n].copy_from_slice(&bytes[..n]);
}

/// The record is assumed valid; oversized text fields are truncated.
pub fn encode_frame(record: &PatientRecord) -> Frame {
    let mut buf = [0u8; FRAME_LEN];
    buf[0] = SOF;
    buf[1] = VERSION;
    buf[2] = RECORD_BYTES as u8;
    let p = &mut buf[3..3 + RECORD_BYTES];
    p[0..2].copy_from_slice(&record.serial.to_be_bytes());
    put_padded(&mut p[2..10], &record.name_code);
    p[10] = record.age;
    put_padded(&mut p[11..22], &record.mobile);
    p[22..24].copy_from_slice(&record.temp_deci_c.to_be_bytes());
    p[24] = record.bpm;
    let mut flags = 0;
    if record.temp_deci_c != 0 {
        flags |= FLAG_TEMP;
    }
    if record.bpm != 0 {
        flags |= FLAG_PULSE;
    }
    p[25] = flags;
    buf[FRAME_LEN - 1] = crc8(&buf[1..FRAME_LEN - 1]);
    Frame(buf)
}

fn ascii_field(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).trim_end_matches(' ').to_string()
}

/// Checks run in wire order: SOF, version, length, CRC, then field ranges.
pub fn decode_frame(bytes: &[u8]) -> Result<PatientRecord, FrameError> {
    match bytes.first() {
        Some(&SOF) => {}
        Some(_) => return Err(FrameError::BadSof),
        None => return Err(FrameError::BadLength),
    }
    match bytes.get(1) {
        Some(&VERSION) => {}
        Some(&v) => return Err(FrameError::BadVersion(v)),
        None => return Err(FrameError::BadLength),
    }
    if bytes.len() != FRAME_LEN || bytes[2] as usize != RECORD_BYTES {
        return Err(FrameError::BadLength);
    }
    let computed = crc8(&bytes[1..FRAME_LEN - 1]);
    let received = bytes[FRAME_LEN - 1];
    if computed != received {
        return Err(FrameError::BadCrc { computed, received });
    }

    let p = &bytes[3..3 + RECORD_BYTES];
    let name_bytes = &p[2..2 + NAME_MAX_LEN];
    let record = PatientRecord {
        serial: u16::from_be_bytes([p[0], p[1]]),
        name_code: ascii_field(name_bytes),
        age: p[10],
        mobile: ascii_field(&p[11..22]),
        temp_deci_c: i16::from_be_bytes([p[22], p[23]]),
        bpm: p[24],
    };
    // interior padding would not survive a round trip
    if record.name_code.len() != name_bytes.iter().take_while(|&&b| b != b' ').count() {
        return Err(FieldError::Name(record.name_code).into());
    }
    validate_temperature(record.temp_deci_c)?;
    record.validate()?;
    let flags = p[25];
    let expected = (if record.temp_deci_c != 0 { FLAG_TEMP } else { 0 })
        | (if record.bpm != 0 { FLAG_PULSE } else { 0 });
    if flags != expected {
        return Err(FrameError::BadFlags(flags));
    }
    Ok(record)
}
