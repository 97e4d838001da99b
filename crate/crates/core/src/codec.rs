//! Little-endian binary encoding of parameters, keys, samples, and
//! encrypted integers and matrices.
//!
//! ```text
//! params  "TLWP" u32 dimension, f64 alpha, u32 mu
//! key     "TLWK" params-body, dimension x u8 key bit
//! sample  u32 m, m x u32 a, u32 b, f64 noise_bound
//! int     u32 width, width x sample
//! matrix  "TLWM" u32 rows, u32 cols, u32 width, rows*cols x (width x sample)
//! ```

use std::io::{Read, Write};

use crate::engine::{EncBit, OracleBootstrapEngine};
use crate::error::{Error, Result};
use crate::int::EncryptedInt;
use crate::linalg::{EncryptedIntVector, EncryptedMatrix};
use crate::lwe::{LweParams, LweSample, SecretKey};
use crate::torus::Torus32;

const PARAMS_MAGIC: &[u8; 4] = b"TLWP";
const KEY_MAGIC: &[u8; 4] = b"TLWK";
const MATRIX_MAGIC: &[u8; 4] = b"TLWM";

/// Upper bound on any length field, to reject corrupt headers before
/// allocating.
const MAX_LEN: u32 = 1 << 24;

fn io_err(e: std::io::Error) -> Error {
    Error::Codec(e.to_string())
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn put_len(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Codec(format!("length {v} exceeds u32")))?;
    put_u32(w, v)
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(buf)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    get::<4>(r).map(u32::from_le_bytes)
}

fn get_len(r: &mut impl Read) -> Result<usize> {
    let v = get_u32(r)?;
    if v > MAX_LEN {
        return Err(Error::Codec(format!("length field {v} is implausibly large")));
    }
    Ok(v as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    get::<8>(r).map(f64::from_le_bytes)
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let found = get::<4>(r)?;
    if &found != magic {
        return Err(Error::Codec(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn put_params_body(w: &mut impl Write, p: &LweParams) -> Result<()> {
    put_len(w, p.dimension)?;
    put_f64(w, p.alpha)?;
    put_u32(w, p.mu.raw())
}

fn get_params_body(r: &mut impl Read) -> Result<LweParams> {
    let dimension = get_len(r)?;
    let alpha = get_f64(r)?;
    let mu = Torus32::from_raw(get_u32(r)?);
    LweParams::new(dimension, alpha, mu)
}

pub fn write_params(w: &mut impl Write, p: &LweParams) -> Result<()> {
    w.write_all(PARAMS_MAGIC).map_err(io_err)?;
    put_params_body(w, p)
}

pub fn read_params(r: &mut impl Read) -> Result<LweParams> {
    expect_magic(r, PARAMS_MAGIC)?;
    get_params_body(r)
}

/// Key file: the parameters followed by the key bits.
pub fn write_key(w: &mut impl Write, params: &LweParams, key: &SecretKey) -> Result<()> {
    if key.dimension() != params.dimension {
        return Err(Error::DimensionMismatch {
            expected: params.dimension,
            found: key.dimension(),
        });
    }
    w.write_all(KEY_MAGIC).map_err(io_err)?;
    put_params_body(w, params)?;
    w.write_all(key.bits()).map_err(io_err)
}

pub fn read_key(r: &mut impl Read) -> Result<(LweParams, SecretKey)> {
    expect_magic(r, KEY_MAGIC)?;
    let params = get_params_body(r)?;
    let mut bits = vec![0u8; params.dimension];
    r.read_exact(&mut bits).map_err(io_err)?;
    Ok((params, SecretKey::from_bits(bits)?))
}

pub fn write_sample(w: &mut impl Write, s: &LweSample) -> Result<()> {
    put_len(w, s.dimension())?;
    for a in s.a() {
        put_u32(w, a.raw())?;
    }
    put_u32(w, s.b().raw())?;
    put_f64(w, s.noise_bound())
}

pub fn read_sample(r: &mut impl Read) -> Result<LweSample> {
    let m = get_len(r)?;
    let a = (0..m)
        .map(|_| get_u32(r).map(Torus32::from_raw))
        .collect::<Result<_>>()?;
    let b = Torus32::from_raw(get_u32(r)?);
    let noise_bound = get_f64(r)?;
    if !noise_bound.is_finite() || noise_bound < 0.0 {
        return Err(Error::Codec(format!("invalid noise bound {noise_bound}")));
    }
    Ok(LweSample::new(a, b, noise_bound))
}

fn put_bits(w: &mut impl Write, bits: &[EncBit]) -> Result<()> {
    for bit in bits {
        let sample = bit
            .as_lwe()
            .ok_or(Error::Codec("only LWE bits can be serialized".into()))?;
        write_sample(w, sample)?;
    }
    Ok(())
}

fn get_int(r: &mut impl Read, engine: &OracleBootstrapEngine, width: usize) -> Result<EncryptedInt> {
    let bits = (0..width)
        .map(|_| engine.import(read_sample(r)?))
        .collect::<Result<_>>()?;
    EncryptedInt::from_bits(bits)
}

pub fn write_int(w: &mut impl Write, x: &EncryptedInt) -> Result<()> {
    put_len(w, x.width())?;
    put_bits(w, x.bits())
}

/// Reads an integer and tags its bits as belonging to `engine`.
pub fn read_int(r: &mut impl Read, engine: &OracleBootstrapEngine) -> Result<EncryptedInt> {
    let width = get_len(r)?;
    get_int(r, engine, width)
}

pub fn write_matrix(w: &mut impl Write, m: &EncryptedMatrix) -> Result<()> {
    w.write_all(MATRIX_MAGIC).map_err(io_err)?;
    put_len(w, m.rows())?;
    put_len(w, m.cols())?;
    put_len(w, m.width())?;
    for e in m.data().elems() {
        put_bits(w, e.bits())?;
    }
    Ok(())
}

pub fn read_matrix(r: &mut impl Read, engine: &OracleBootstrapEngine) -> Result<EncryptedMatrix> {
    expect_magic(r, MATRIX_MAGIC)?;
    let rows = get_len(r)?;
    let cols = get_len(r)?;
    let width = get_len(r)?;
    let elems = (0..rows * cols)
        .map(|_| get_int(r, engine, width))
        .collect::<Result<_>>()?;
    EncryptedMatrix::new(rows, cols, EncryptedIntVector::new(elems)?)
}
