//! Versioned little-endian binary blob of tensors.
//!
//! Layout: magic `PHNN`, `u32` version, `u32` tensor count, then for each
//! tensor `u64` rows, `u64` cols and `rows * cols` `f64` values. Values are
//! stored as raw bits so a round trip is bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::optim::Adam;
use crate::nn::tensor::Tensor2;

const MAGIC: &[u8; 4] = b"PHNN";
const VERSION: u32 = 1;

pub fn encode_tensors(tensors: &[Tensor2]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + tensors.iter().map(|t| 16 + 8 * t.len()).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
        for v in t.data() {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    out
}

pub fn decode_tensors(mut bytes: &[u8]) -> Result<Vec<Tensor2>> {
    let bad = |detail: &str| Error::Format {
        what: "tensor checkpoint",
        detail: detail.to_string(),
    };
    let mut magic = [0u8; 4];
    bytes.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut bytes).ok_or_else(|| bad("truncated header"))?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let count = read_u32(&mut bytes).ok_or_else(|| bad("truncated header"))? as usize;
    let mut tensors = Vec::with_capacity(count);
    for i in 0..count {
        let rows = read_u64(&mut bytes).ok_or_else(|| bad(&format!("truncated shape of tensor {i}")))? as usize;
        let cols = read_u64(&mut bytes).ok_or_else(|| bad(&format!("truncated shape of tensor {i}")))? as usize;
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| bad(&format!("truncated data of tensor {i}")))?;
        let data = (0..n)
            .map(|_| f64::from_bits(read_u64(&mut bytes).expect("length checked")))
            .collect();
        tensors.push(Tensor2::new(rows, cols, data)?);
    }
    if !bytes.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(tensors)
}

fn read_u32(r: &mut &[u8]) -> Option<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).ok()?;
    Some(u32::from_le_bytes(b))
}

fn read_u64(r: &mut &[u8]) -> Option<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).ok()?;
    Some(u64::from_le_bytes(b))
}

pub fn save_tensors(path: &Path, tensors: &[Tensor2]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_tensors(tensors)).map_err(|e| Error::io(path, e))
}

pub fn load_tensors(path: &Path) -> Result<Vec<Tensor2>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensors(&bytes)
}

/// Optimizer state as tensors: a 1x5 header `[step, lr, beta1, beta2, eps]`
/// followed by all first moments, then all second moments.
pub fn adam_to_tensors(opt: &Adam) -> Vec<Tensor2> {
    let (m, v) = opt.moments();
    let mut out = vec![Tensor2::row(&[
        opt.step as f64,
        opt.learning_rate,
        opt.beta1,
        opt.beta2,
        opt.epsilon,
    ])];
    out.extend(m.iter().cloned());
    out.extend(v.iter().cloned());
    out
}

pub fn adam_from_tensors(mut tensors: Vec<Tensor2>) -> Result<Adam> {
    if tensors.is_empty() || tensors.len() % 2 != 1 || tensors[0].shape() != (1, 5) {
        return Err(Error::Format {
            what: "optimizer checkpoint",
            detail: format!("{} tensors", tensors.len()),
        });
    }
    let rest = tensors.split_off(1);
    let h = tensors[0].data();
    let n = rest.len() / 2;
    let mut opt = Adam::new(h[1], &rest[..n]);
    opt.step = h[0] as u64;
    opt.beta1 = h[2];
    opt.beta2 = h[3];
    opt.epsilon = h[4];
    opt.restore_moments(rest[..n].to_vec(), rest[n..].to_vec())?;
    Ok(opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(shapes in proptest::collection::vec((0usize..4, 0usize..4), 0..5), seed in any::<u64>()) {
            let mut x = seed;
            let tensors: Vec<Tensor2> = shapes.iter().map(|&(r, c)| {
                let data = (0..r * c).map(|_| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    f64::from_bits(x >> 2)
                }).collect();
                Tensor2::new(r, c, data).unwrap()
            }).collect();
            let back = decode_tensors(&encode_tensors(&tensors)).unwrap();
            prop_assert_eq!(back.len(), tensors.len());
            for (a, b) in back.iter().zip(&tensors) {
                prop_assert_eq!(a.shape(), b.shape());
                let abits: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
                let bbits: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(abits, bbits);
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let blob = encode_tensors(&[Tensor2::row(&[1.0, 2.0])]);
        assert!(decode_tensors(&blob[..blob.len() - 1]).is_err());
        let mut bad = blob.clone();
        bad[0] = b'X';
        assert!(decode_tensors(&bad).is_err());
        let mut long = blob;
        long.push(0);
        assert!(decode_tensors(&long).is_err());
    }

    #[test]
    fn optimizer_state_round_trips() {
        let mut p = vec![Tensor2::row(&[0.5, -0.5]), Tensor2::scalar(1.0)];
        let mut opt = Adam::new(0.03, &p);
        opt.step(&mut p, &[Tensor2::row(&[0.1, 0.2]), Tensor2::scalar(-1.0)]).unwrap();
        let back = adam_from_tensors(decode_tensors(&encode_tensors(&adam_to_tensors(&opt))).unwrap()).unwrap();
        assert_eq!(back, opt);
    }
}
