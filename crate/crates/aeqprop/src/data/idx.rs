//! IDX container parsing (the MNIST on-disk format).
//!
//! Big-endian header: magic, then one u32 per dimension. Only the
//! unsigned-byte element type is supported (magic `0x0000 08 <ndims>`),
//! which covers image files (`0x00000803`) and label files
//! (`0x00000801`). Gzip-compressed payloads are accepted transparently.

use std::io::Read;

use crate::error::{AeqError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxTensor {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

fn parse_err(offset: usize, reason: impl Into<String>) -> AeqError {
    AeqError::IdxParse {
        offset,
        reason: reason.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(parse_err(offset, "truncated header"));
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Decode one IDX tensor; gunzips first when the gzip magic is present.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut decoded = Vec::new();
        flate2::read::GzDecoder::new(bytes)
            .read_to_end(&mut decoded)
            .map_err(|e| parse_err(0, format!("gzip: {e}")))?;
        return parse_idx_plain(&decoded);
    }
    parse_idx_plain(bytes)
}

fn parse_idx_plain(bytes: &[u8]) -> Result<IdxTensor> {
    let magic = read_u32(bytes, 0)?;
    if magic >> 16 != 0 {
        return Err(parse_err(0, format!("bad magic 0x{magic:08x}")));
    }
    let dtype = (magic >> 8) & 0xff;
    if dtype != 0x08 {
        return Err(parse_err(
            2,
            format!("unsupported element type 0x{dtype:02x} (only unsigned byte)"),
        ));
    }
    let ndims = (magic & 0xff) as usize;
    if ndims == 0 {
        return Err(parse_err(3, "zero dimensions"));
    }
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        dims.push(read_u32(bytes, 4 + 4 * d)? as usize);
    }
    let payload_start = 4 + 4 * ndims;
    let expect: usize = dims.iter().product();
    let payload = &bytes[payload_start.min(bytes.len())..];
    if payload.len() != expect {
        return Err(parse_err(
            payload_start,
            format!("payload holds {} bytes, dims need {expect}", payload.len()),
        ));
    }
    Ok(IdxTensor {
        magic,
        dims,
        data: payload.to_vec(),
    })
}

/// Serialize a tensor back to IDX bytes (fixtures and round-trip checks).
pub fn encode_idx(magic: u32, dims: &[usize], data: &[u8]) -> Vec<u8> {
    assert_eq!(dims.iter().product::<usize>(), data.len());
    assert_eq!((magic & 0xff) as usize, dims.len());
    let mut out = Vec::with_capacity(4 + 4 * dims.len() + data.len());
    out.extend_from_slice(&magic.to_be_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(data);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minimal_single_pixel_image() {
        // 4 (magic) + 3 * 4 (dims) + 1 payload byte = 17 bytes
        let bytes = encode_idx(IMAGE_MAGIC, &[1, 1, 1], &[255]);
        assert_eq!(bytes.len(), 17);
        let t = parse_idx(&bytes).unwrap();
        assert_eq!(t.dims, vec![1, 1, 1]);
        assert_eq!(t.data, vec![255]);
        assert_eq!(t.data[0] as f64 / 255.0, 1.0);
    }

    #[test]
    fn label_pair_fixture() {
        let bytes = encode_idx(LABEL_MAGIC, &[2], &[0, 9]);
        let t = parse_idx(&bytes).unwrap();
        assert_eq!(t.data, vec![0, 9]);
    }

    #[test]
    fn random_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let dims = vec![
                rng.random_range(1..5usize),
                rng.random_range(1..8usize),
                rng.random_range(1..8usize),
            ];
            let n: usize = dims.iter().product();
            let data: Vec<u8> = (0..n).map(|_| rng.random()).collect();
            let bytes = encode_idx(IMAGE_MAGIC, &dims, &data);
            let t = parse_idx(&bytes).unwrap();
            assert_eq!(t.dims, dims);
            assert_eq!(t.data, data);
            assert_eq!(encode_idx(t.magic, &t.dims, &t.data), bytes);
        }
    }

    #[test]
    fn gzip_round_trip() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write;
        let bytes = encode_idx(LABEL_MAGIC, &[3], &[1, 2, 3]);
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes).unwrap();
        let gz = enc.finish().unwrap();
        let t = parse_idx(&gz).unwrap();
        assert_eq!(t.data, vec![1, 2, 3]);
    }

    #[test]
    fn bad_magic_and_truncation_diagnose_offsets() {
        let err = parse_idx(&[0xff, 0, 0, 3, 0]).unwrap_err();
        assert!(matches!(err, AeqError::IdxParse { offset: 0, .. }), "{err}");

        let mut bytes = encode_idx(IMAGE_MAGIC, &[2, 2, 2], &[0; 8]);
        bytes.truncate(bytes.len() - 3);
        let err = parse_idx(&bytes).unwrap_err();
        assert!(matches!(err, AeqError::IdxParse { .. }), "{err}");

        // wrong element type
        let err = parse_idx(&encode_header_like(0x0000_0D01, &[1])).unwrap_err();
        assert!(matches!(err, AeqError::IdxParse { offset: 2, .. }), "{err}");
    }

    fn encode_header_like(magic: u32, dims: &[usize]) -> Vec<u8> {
        let mut out = magic.to_be_bytes().to_vec();
        for &d in dims {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.push(0);
        out
    }
}
