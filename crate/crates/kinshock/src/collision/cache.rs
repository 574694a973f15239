//! Binary tensor cache.
//!
//! Layout (little endian): `b"KSHK"`, format version `u32`, degree `N` as
//! `u32`, `gamma` and `s` as `f64`, the six quadrature orders as `u32`, the
//! main tensor then the lift tensor as `dim^3` `f64` values each in
//! `[k][a][b]` order, and finally a `u64` checksum (the first eight bytes of
//! the SHA-256 digest of the two tensors' bytes).

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hermite::{build_index_set, HermiteIndexSet};

use super::{assemble_tensor, BilinearForm, CollisionError, CollisionTensor, KernelParams, QuadratureConfig};

pub const CACHE_MAGIC: &[u8; 4] = b"KSHK";
pub const CACHE_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 6 * 4;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a tensor cache (bad magic)")]
    BadMagic,
    #[error("unsupported cache version {0}")]
    Version(u32),
    #[error("cache file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("cache checksum mismatch")]
    Checksum,
    #[error("cache parameters do not match the request: {0}")]
    ParamMismatch(String),
}

fn checksum(payload: &[u8]) -> u64 {
    let digest = Sha256::digest(payload);
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

fn io_err(path: &Path, source: std::io::Error) -> CacheError {
    CacheError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serializes the tensor to `path`, creating parent directories.
pub fn save_tensor(tensor: &CollisionTensor, path: &Path) -> Result<(), CacheError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
        }
    }
    let mut payload = Vec::with_capacity(16 * tensor.main.data.len());
    for x in tensor.main.data.iter().chain(&tensor.lift.data) {
        payload.extend_from_slice(&x.to_le_bytes());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 8);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensor.degree as u32).to_le_bytes());
    out.extend_from_slice(&tensor.gamma.to_le_bytes());
    out.extend_from_slice(&tensor.s.to_le_bytes());
    for q in tensor.quad.as_array() {
        out.extend_from_slice(&q.to_le_bytes());
    }
    out.extend_from_slice(&payload);
    out.extend_from_slice(&checksum(&payload).to_le_bytes());
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(&out).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn read_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Reads a cache file. When `expected` is given, the header must match the
/// degree, kernel exponents and quadrature orders exactly.
pub fn load_tensor(
    path: &Path,
    expected: Option<(usize, f64, f64, QuadratureConfig)>,
) -> Result<CollisionTensor, CacheError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(CacheError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != CACHE_MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = read_u32(&bytes, 4);
    if version != CACHE_VERSION {
        return Err(CacheError::Version(version));
    }
    let degree = read_u32(&bytes, 8) as usize;
    let gamma = read_f64(&bytes, 12);
    let s = read_f64(&bytes, 20);
    let mut q = [0u32; 6];
    for (i, v) in q.iter_mut().enumerate() {
        *v = read_u32(&bytes, 28 + 4 * i);
    }
    let quad = QuadratureConfig::from_array(q);
    if let Some((n, g, ss, qq)) = expected {
        let mut bad = Vec::new();
        if n != degree {
            bad.push(format!("degree {degree} != {n}"));
        }
        if g.to_bits() != gamma.to_bits() {
            bad.push(format!("gamma {gamma} != {g}"));
        }
        if ss.to_bits() != s.to_bits() {
            bad.push(format!("s {s} != {ss}"));
        }
        if qq != quad {
            bad.push(format!("quadrature {:?} != {:?}", quad.as_array(), qq.as_array()));
        }
        if !bad.is_empty() {
            return Err(CacheError::ParamMismatch(bad.join("; ")));
        }
    }
    let set = build_index_set(degree.max(2)).map_err(|e| CacheError::ParamMismatch(e.to_string()))?;
    let dim = set.dim();
    let n3 = dim * dim * dim;
    let total = HEADER_LEN + 16 * n3 + 8;
    if bytes.len() != total {
        return Err(CacheError::Truncated {
            expected: total,
            found: bytes.len(),
        });
    }
    let payload = &bytes[HEADER_LEN..HEADER_LEN + 16 * n3];
    let stored = u64::from_le_bytes(bytes[total - 8..].try_into().expect("8 bytes"));
    if checksum(payload) != stored {
        return Err(CacheError::Checksum);
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(CollisionTensor {
        degree,
        gamma,
        s,
        quad,
        main: BilinearForm {
            dim,
            data: values[..n3].to_vec(),
        },
        lift: BilinearForm {
            dim,
            data: values[n3..].to_vec(),
        },
    })
}

/// Returns the cached tensor when the file matches, otherwise assembles and
/// writes it. The flag reports a cache hit.
pub fn load_or_assemble(
    path: Option<&Path>,
    set: &HermiteIndexSet,
    params: &KernelParams,
    quad: &QuadratureConfig,
) -> Result<(CollisionTensor, bool), CollisionError> {
    if let Some(p) = path {
        if p.exists() {
            match load_tensor(p, Some((set.degree, params.gamma, params.s, *quad))) {
                Ok(t) => {
                    let t = scale_cb(t, params.c_b);
                    return Ok((t, true));
                }
                Err(CacheError::Io { .. }) | Err(CacheError::ParamMismatch(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    let unit = KernelParams { c_b: 1.0, ..*params };
    let t = assemble_tensor(set, &unit, quad)?;
    if let Some(p) = path {
        save_tensor(&t, p)?;
    }
    Ok((scale_cb(t, params.c_b), false))
}

fn scale_cb(mut t: CollisionTensor, c_b: f64) -> CollisionTensor {
    if c_b != 1.0 {
        t.main.data.iter_mut().for_each(|x| *x *= c_b);
        t.lift.data.iter_mut().for_each(|x| *x *= c_b);
    }
    t
}
