use crate::depth_model::SENTINEL;
use crate::error::{Error, Result};

use super::DepthFrame;

/// Result of decoding a PGM file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmDecoded {
    pub frame: DepthFrame,
    /// Number of samples above 2047 that were clamped to the sentinel.
    pub clamped: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::format(start, format!("{what} out of range")))
    }
}

/// Decodes a binary 16-bit PGM (`P5`, maxval 256..=65535).
///
/// Samples above 2047 are clamped to the sentinel and counted.
pub fn read_pgm(bytes: &[u8]) -> Result<PgmDecoded> {
    if bytes.len() < 2 {
        return Err(Error::format(0, "truncated magic number"));
    }
    match &bytes[..2] {
        b"P5" => {}
        b"P2" => return Err(Error::format(0, "ASCII PGM (P2) is not supported")),
        _ => return Err(Error::format(0, "not a binary PGM (expected P5)")),
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(2, "expected whitespace after magic number"));
    }
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    cur.skip_whitespace_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(maxval_at, "zero image dimension"));
    }
    if !(256..=65535).contains(&maxval) {
        return Err(Error::format(
            maxval_at,
            format!("maxval {maxval} not in 256..=65535"),
        ));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::format(
                cur.pos,
                "expected single whitespace after maxval",
            ))
        }
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(maxval_at, "image dimensions overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < 2 * count {
        return Err(Error::format(
            bytes.len(),
            format!(
                "truncated payload: need {} bytes, have {}",
                2 * count,
                payload.len()
            ),
        ));
    }
    let mut clamped = 0usize;
    let samples = payload[..2 * count]
        .chunks_exact(2)
        .map(|pair| {
            let v = u16::from_be_bytes([pair[0], pair[1]]);
            if v > SENTINEL {
                clamped += 1;
                SENTINEL
            } else {
                v
            }
        })
        .collect();
    let frame = DepthFrame::new(width, height, samples)?;
    Ok(PgmDecoded { frame, clamped })
}

/// Encodes a frame as canonical `P5` with maxval 2047.
pub fn write_pgm(frame: &DepthFrame) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), SENTINEL);
    let mut out = Vec::with_capacity(header.len() + 2 * frame.samples().len());
    out.extend_from_slice(header.as_bytes());
    for &s in frame.samples() {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pgm(header: &str, samples: &[u16]) -> Vec<u8> {
        let mut v = header.as_bytes().to_vec();
        for s in samples {
            v.extend_from_slice(&s.to_be_bytes());
        }
        v
    }

    #[test]
    fn decodes_small_frame() {
        let bytes = pgm("P5\n2 2\n2047\n", &[0, 500, 1000, 2047]);
        let d = read_pgm(&bytes).unwrap();
        assert_eq!(d.frame.samples(), &[0, 500, 1000, 2047]);
        assert_eq!(d.clamped, 0);
        assert_eq!(write_pgm(&d.frame), bytes);
    }

    #[test]
    fn smallest_frame_bytes() {
        let f = DepthFrame::new(1, 1, vec![0]).unwrap();
        assert_eq!(write_pgm(&f), b"P5\n1 1\n2047\n\x00\x00".to_vec());
    }

    #[test]
    fn payload_is_big_endian() {
        let f = DepthFrame::new(2, 1, vec![2047, 7]).unwrap();
        let bytes = write_pgm(&f);
        assert_eq!(&bytes[bytes.len() - 4..], &[0x07, 0xFF, 0x00, 0x07]);
    }

    #[test]
    fn rejects_ascii_variant() {
        let err = read_pgm(b"P2\n1 1\n2047\n0\n").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }));
    }

    #[test]
    fn rejects_truncated_and_bad_maxval() {
        let bytes = pgm("P5\n2 2\n2047\n", &[1, 2, 3]);
        assert!(matches!(read_pgm(&bytes), Err(Error::Format { .. })));
        let bytes = pgm("P5\n1 1\n255\n", &[]);
        assert!(matches!(
            read_pgm(&bytes),
            Err(Error::Format { offset: 7, .. })
        ));
        assert!(matches!(read_pgm(b"P5\n1"), Err(Error::Format { .. })));
        assert!(matches!(
            read_pgm(b"P6\n1 1\n2047\n"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn clamps_wide_samples_and_accepts_comments() {
        let bytes = pgm("P5\n# recorder v2\n3 1\n65535\n", &[100, 2048, 65535]);
        let d = read_pgm(&bytes).unwrap();
        assert_eq!(d.frame.samples(), &[100, 2047, 2047]);
        assert_eq!(d.clamped, 2);
    }

    proptest! {
        #[test]
        fn round_trip(f in super::super::arb_frame()) {
            let bytes = write_pgm(&f);
            let d = read_pgm(&bytes).unwrap();
            prop_assert_eq!(&d.frame, &f);
            prop_assert_eq!(write_pgm(&d.frame), bytes);
        }
    }
}
