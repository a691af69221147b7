use crate::error::{Error, Result};

use super::DepthFrame;

const ELEVEN_BITS: u16 = 0x07FF;

/// Decodes headerless little-endian 16-bit samples, keeping the low 11 bits.
pub fn read_raw(bytes: &[u8], width: usize, height: usize) -> Result<DepthFrame> {
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| Error::format(0, "raw dimensions overflow"))?;
    if width == 0 || height == 0 {
        return Err(Error::format(0, "raw dimensions must be positive"));
    }
    if bytes.len() != expected {
        return Err(Error::format(
            bytes.len().min(expected),
            format!(
                "raw frame {width}x{height} needs {expected} bytes, got {}",
                bytes.len()
            ),
        ));
    }
    let samples = bytes
        .chunks_exact(2)
        .map(|p| u16::from_le_bytes([p[0], p[1]]) & ELEVEN_BITS)
        .collect();
    DepthFrame::new(width, height, samples)
}

/// Encodes a frame as headerless little-endian 16-bit samples.
pub fn write_raw(frame: &DepthFrame) -> Vec<u8> {
    frame
        .samples()
        .iter()
        .flat_map(|s| s.to_le_bytes())
        .collect()
}
