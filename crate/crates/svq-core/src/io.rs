//! Binary codebook persistence.
//!
//! The on-disk format is self-describing and fixed-layout: the magic bytes
//! `SVQ1`, then little-endian `u32` version (currently 1), `u32` M, `u32` d,
//! `u8` mode (0 = affine, 1 = thresholded), `f64` θ (0 for affine mode),
//! `f64` w0 (0 when the norm constraint is inactive), followed for each code
//! index in order by d×`f64` weight, `f64` bias, d×`f64` reconstruction, and
//! `f64` reconstruction scale. Round trips are bit-exact.

use crate::codebook::{CodeEntry, Codebook, CodebookMode};
use crate::{Error, Result};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"SVQ1";
const VERSION: u32 = 1;

/// Serializes a codebook into the `SVQ1` byte layout.
pub fn to_bytes(cb: &Codebook) -> Vec<u8> {
    let d = cb.dim();
    let m = cb.len();
    let (mode_tag, theta) = match cb.mode() {
        CodebookMode::Affine => (0u8, 0.0),
        CodebookMode::Thresholded { theta } => (1u8, theta),
    };
    let mut out = Vec::with_capacity(4 + 4 + 4 + 4 + 1 + 16 + m * (8 * (2 * d + 2)));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.push(mode_tag);
    out.extend_from_slice(&theta.to_le_bytes());
    out.extend_from_slice(&cb.w0().to_le_bytes());
    for entry in cb.entries() {
        for w in &entry.weight {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&entry.bias.to_le_bytes());
        for r in &entry.recon {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out.extend_from_slice(&entry.recon_scale.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated codebook file: needed {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Parses a codebook from the `SVQ1` byte layout, re-validating all
/// structural invariants.
pub fn from_bytes(bytes: &[u8]) -> Result<Codebook> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a codebook file (bad magic bytes)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported codebook version {version} (this build reads version {VERSION})"
        )));
    }
    let m = r.u32()? as usize;
    let d = r.u32()? as usize;
    let mode_tag = r.u8()?;
    let theta = r.f64()?;
    let w0 = r.f64()?;
    let mode = match mode_tag {
        0 => {
            if theta != 0.0 {
                return Err(Error::Format(format!(
                    "affine codebook stores nonzero threshold {theta}"
                )));
            }
            CodebookMode::Affine
        }
        1 => CodebookMode::Thresholded { theta },
        other => return Err(Error::Format(format!("unknown codebook mode tag {other}"))),
    };
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let weight = r.f64_vec(d)?;
        let bias = r.f64()?;
        let recon = r.f64_vec(d)?;
        let recon_scale = r.f64()?;
        entries.push(CodeEntry { weight, bias, recon, recon_scale });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "trailing bytes after codebook payload: {} extra",
            bytes.len() - r.pos
        )));
    }
    Codebook::new(mode, w0, entries)
}

/// Writes a codebook to `path` in the `SVQ1` format.
pub fn save_codebook<P: AsRef<Path>>(cb: &Codebook, path: P) -> Result<()> {
    fs::write(path, to_bytes(cb))?;
    Ok(())
}

/// Reads a codebook from a file written by [`save_codebook`].
pub fn load_codebook<P: AsRef<Path>>(path: P) -> Result<Codebook> {
    from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_codebook() -> Codebook {
        let theta = 0.75;
        let entries = (0..3)
            .map(|i| {
                let weight = vec![1.0 + i as f64, -0.5 * i as f64, 0.25];
                let bias = -theta * crate::linalg::norm(&weight);
                CodeEntry {
                    weight,
                    bias,
                    recon: vec![0.1 * i as f64, 0.2, -0.3],
                    recon_scale: 0.5 + i as f64,
                }
            })
            .collect();
        Codebook::new(CodebookMode::Thresholded { theta }, 0.0, entries).unwrap()
    }

    fn assert_codebooks_equal(a: &Codebook, b: &Codebook) {
        assert_eq!(a.dim(), b.dim());
        assert_eq!(a.len(), b.len());
        assert_eq!(a.mode(), b.mode());
        assert_eq!(a.w0().to_bits(), b.w0().to_bits());
        for (ea, eb) in a.entries().iter().zip(b.entries()) {
            let bits = |v: &[f64]| v.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&ea.weight), bits(&eb.weight));
            assert_eq!(ea.bias.to_bits(), eb.bias.to_bits());
            assert_eq!(bits(&ea.recon), bits(&eb.recon));
            assert_eq!(ea.recon_scale.to_bits(), eb.recon_scale.to_bits());
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cb = sample_codebook();
        let bytes = to_bytes(&cb);
        let back = from_bytes(&bytes).unwrap();
        assert_codebooks_equal(&cb, &back);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn affine_round_trip() {
        let entries = vec![CodeEntry {
            weight: vec![3.0, 4.0],
            bias: 0.7,
            recon: vec![0.0, 1.0],
            recon_scale: 1.0,
        }];
        let cb = Codebook::new(CodebookMode::Affine, 5.0, entries).unwrap();
        let back = from_bytes(&to_bytes(&cb)).unwrap();
        assert_codebooks_equal(&cb, &back);
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("svq-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.svq");
        let cb = sample_codebook();
        save_codebook(&cb, &path).unwrap();
        let back = load_codebook(&path).unwrap();
        assert_codebooks_equal(&cb, &back);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_input_is_rejected() {
        let bytes = to_bytes(&sample_codebook());
        for cut in [0, 3, 4, 8, 12, 17, bytes.len() - 1] {
            let err = from_bytes(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "cut at {cut}: {err}");
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = to_bytes(&sample_codebook());
        bytes.push(0);
        assert!(matches!(from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = to_bytes(&sample_codebook());
        bytes[0] = b'X';
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn future_version_is_rejected() {
        let mut bytes = to_bytes(&sample_codebook());
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
    }

    #[test]
    fn affine_with_nonzero_theta_is_rejected() {
        let entries = vec![CodeEntry {
            weight: vec![1.0],
            bias: 0.0,
            recon: vec![0.0],
            recon_scale: 0.0,
        }];
        let cb = Codebook::new(CodebookMode::Affine, 0.0, entries).unwrap();
        let mut bytes = to_bytes(&cb);
        // θ lives right after magic(4) + version(4) + M(4) + d(4) + mode(1).
        bytes[17..25].copy_from_slice(&0.5f64.to_le_bytes());
        assert!(matches!(from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn corrupted_invariants_fail_validation() {
        // Break the thresholded bias tie in the serialized bytes.
        let cb = sample_codebook();
        let d = cb.dim();
        let mut bytes = to_bytes(&cb);
        let bias_offset = 4 + 4 + 4 + 4 + 1 + 8 + 8 + d * 8;
        bytes[bias_offset..bias_offset + 8].copy_from_slice(&100.0f64.to_le_bytes());
        assert!(from_bytes(&bytes).is_err());
    }
}
