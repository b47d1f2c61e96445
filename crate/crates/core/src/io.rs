//! Binary channel-tensor files.
//!
//! Little-endian layout, version 1:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DMCT"
//! 4       2     version (u16) = 1
//! 6       8     dims T, L, K, M (u16 each)
//! 14      2     AP count (u16)
//! 16      M     AP index per antenna (u8, 0-based, contiguous groups)
//! 16+M    8·TLKM  (re, im) f32 pairs, antenna index fastest, then k, l, t
//! ```
//!
//! Coefficients are stored in single precision: `read(write(h))` equals `h`
//! rounded to `f32`, and rewriting a file that was read reproduces it
//! byte for byte.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{ChannelTensor, Dims};

pub const MAGIC: [u8; 4] = *b"DMCT";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 16;

/// Total file size for a tensor of `dims`, or `None` on overflow.
pub fn expected_file_len(dims: Dims) -> Option<u64> {
    let entries = (dims.t as u64).checked_mul(dims.l as u64)?.checked_mul(dims.k as u64)?.checked_mul(dims.m as u64)?;
    HEADER_LEN.checked_add(dims.m as u64)?.checked_add(entries.checked_mul(8)?)
}

pub fn encode_channel(ch: &ChannelTensor) -> Result<Vec<u8>> {
    let d = ch.dims();
    let dim16 = |v: usize, name: &str| {
        u16::try_from(v).map_err(|_| Error::Dimension(format!("{name} = {v} exceeds the u16 file limit")))
    };
    let ids = ch.ap_ids();
    let n_aps = ids.iter().max().map_or(0, |m| m + 1);
    if n_aps > 256 {
        return Err(Error::Dimension(format!("AP index {} does not fit in one byte", n_aps - 1)));
    }
    let len = expected_file_len(d).ok_or_else(|| Error::Dimension("tensor too large".into()))?;
    let mut out = Vec::with_capacity(len as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for (v, name) in [(d.t, "T"), (d.l, "L"), (d.k, "K"), (d.m, "M")] {
        out.extend_from_slice(&dim16(v, name)?.to_le_bytes());
    }
    out.extend_from_slice(&dim16(n_aps, "AP count")?.to_le_bytes());
    out.extend(ch.ap_map().iter().map(|&a| a as u8));
    for z in ch.data() {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_channel(bytes: &[u8]) -> Result<ChannelTensor> {
    let actual = bytes.len() as u64;
    if actual < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(Error::Format { offset: 0, msg: "bad magic".into() });
        }
        return Err(Error::Truncated { expected: HEADER_LEN, actual });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format { offset: 0, msg: format!("bad magic {:?}", &bytes[..4]) });
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::Format { offset: 4, msg: format!("unsupported version {version}") });
    }
    let (t, l, k, m) = (u16_at(6), u16_at(8), u16_at(10), u16_at(12));
    for (i, v) in [t, l, k, m].iter().enumerate() {
        if *v == 0 {
            return Err(Error::Format { offset: 6 + 2 * i as u64, msg: "dimension is zero".into() });
        }
    }
    let n_aps = u16_at(14) as usize;
    let dims = Dims::new(t as usize, l as usize, k as usize, m as usize);
    let expected = expected_file_len(dims)
        .ok_or_else(|| Error::Format { offset: 6, msg: "dimension product overflows".into() })?;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::Format { offset: expected, msg: format!("{} trailing bytes", actual - expected) });
    }

    let map_start = HEADER_LEN as usize;
    let ap_map: Vec<usize> = bytes[map_start..map_start + dims.m].iter().map(|&b| b as usize).collect();
    if let Some(i) = ap_map.iter().position(|&a| a >= n_aps) {
        return Err(Error::Format {
            offset: (map_start + i) as u64,
            msg: format!("AP index {} not below AP count {n_aps}", ap_map[i]),
        });
    }

    let payload = map_start + dims.m;
    let mut data = Vec::with_capacity(dims.len());
    for i in 0..dims.len() {
        let o = payload + 8 * i;
        let re = f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let im = f32::from_le_bytes(bytes[o + 4..o + 8].try_into().expect("4 bytes"));
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Format { offset: o as u64, msg: "non-finite coefficient".into() });
        }
        data.push(Complex64::new(re as f64, im as f64));
    }
    ChannelTensor::new(dims, data, ap_map).map_err(|e| Error::Format { offset: map_start as u64, msg: e.to_string() })
}

pub fn write_channel_file(ch: &ChannelTensor, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_channel(ch)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_channel_file(path: impl AsRef<Path>) -> Result<ChannelTensor> {
    decode_channel(&fs::read(path)?)
}

/// Round every coefficient to the nearest `f32`, i.e. what a file stores.
pub fn to_file_precision(ch: &ChannelTensor) -> ChannelTensor {
    let data = ch.data().iter().map(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64)).collect();
    ChannelTensor::new(ch.dims(), data, ch.ap_map().to_vec()).expect("rounding keeps a valid tensor")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;
    use crate::synth::gen_iid_rayleigh;

    #[test]
    fn tiny_roundtrip() {
        let h = ChannelTensor::colocated(Dims::new(1, 1, 1, 1), vec![Complex64::new(0.5, -1.25)]).unwrap();
        let bytes = encode_channel(&h).unwrap();
        assert_eq!(bytes.len(), 16 + 1 + 8);
        assert_eq!(decode_channel(&bytes).unwrap(), h);
    }

    #[test]
    fn seeded_roundtrip_payload() {
        let h = gen_iid_rayleigh(Dims::new(2, 3, 4, 8), RngHandle::new(1, 2)).unwrap().with_uniform_aps(2).unwrap();
        let bytes = encode_channel(&h).unwrap();
        let back = decode_channel(&bytes).unwrap();
        assert_eq!(back, to_file_precision(&h));
        assert_eq!(encode_channel(&back).unwrap(), bytes);
        assert_eq!(back.ap_map(), h.ap_map());
    }

    #[test]
    fn truncated_payload_reports_expected_size() {
        let h = gen_iid_rayleigh(Dims::new(1, 1, 2, 128), RngHandle::new(0, 0)).unwrap();
        let bytes = encode_channel(&h).unwrap();
        let expected = 16 + 128 + 2 * 128 * 8;
        assert_eq!(bytes.len(), expected);
        match decode_channel(&bytes[..expected - 5]) {
            Err(Error::Truncated { expected: e, actual }) => {
                assert_eq!(e, expected as u64);
                assert_eq!(actual, expected as u64 - 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn format_errors() {
        let h = gen_iid_rayleigh(Dims::new(1, 1, 1, 2), RngHandle::new(0, 0)).unwrap();
        let good = encode_channel(&h).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_channel(&bad), Err(Error::Format { offset: 0, .. })));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode_channel(&bad), Err(Error::Format { offset: 4, .. })));

        let mut bad = good.clone();
        bad[16] = 7;
        assert!(matches!(decode_channel(&bad), Err(Error::Format { offset: 16, .. })));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(decode_channel(&bad), Err(Error::Format { offset: 34, .. })));

        assert!(matches!(decode_channel(&good[..10]), Err(Error::Truncated { expected: 16, actual: 10 })));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.dmct");
        let h = to_file_precision(&gen_iid_rayleigh(Dims::new(1, 2, 2, 4), RngHandle::new(4, 4)).unwrap());
        write_channel_file(&h, &path).unwrap();
        assert_eq!(read_channel_file(&path).unwrap(), h);
    }
}
