//! Envelope (de)serialization and length-prefixed framing: a 4-byte
//! big-endian payload length followed by the payload.

use std::io::{Read, Write};

use crate::error::{ProtocolError, Result};
use crate::message::{Envelope, PROTOCOL_VERSION};

/// Generous ceiling; a desk-scale batch frame is a few hundred KB.
pub const MAX_FRAME_LEN: u32 = 64 * 1024 * 1024;

pub fn encode(env: &Envelope) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(env)?)
}

pub fn decode(bytes: &[u8]) -> Result<Envelope> {
    let env: Envelope = serde_json::from_slice(bytes)?;
    if env.protocol_version != PROTOCOL_VERSION {
        return Err(ProtocolError::VersionMismatch {
            got: env.protocol_version,
            expected: PROTOCOL_VERSION,
        });
    }
    Ok(env)
}

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> Result<()> {
    let len = payload.len() as u64;
    if len > MAX_FRAME_LEN as u64 {
        return Err(ProtocolError::FrameTooLarge(len));
    }
    w.write_all(&(len as u32).to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_frame(r: &mut impl Read) -> Result<Vec<u8>> {
    let mut header = [0u8; 4];
    r.read_exact(&mut header)?;
    let len = u32::from_be_bytes(header);
    if len > MAX_FRAME_LEN {
        return Err(ProtocolError::FrameTooLarge(len as u64));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Ok(payload)
}
