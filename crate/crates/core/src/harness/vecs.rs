//! `fvecs` / `ivecs` / `bvecs` files: each record is a little-endian `u32`
//! dimension followed by that many elements. All records share one
//! dimension.

use std::path::Path;
use std::str::FromStr;

use crate::codec::ByteReader;
use crate::error::{Error, Result};
use crate::types::Vectors;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecsKind {
    F32,
    I32,
    U8,
}

impl FromStr for VecsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "fvecs" => Ok(Self::F32),
            "i32" | "ivecs" => Ok(Self::I32),
            "u8" | "bvecs" => Ok(Self::U8),
            _ => Err(Error::Parse(format!("unknown vecs kind {s:?}"))),
        }
    }
}

pub trait VecsElement: Copy + Sized {
    const KIND: VecsKind;
    const WIDTH: usize;
    fn read(bytes: &[u8]) -> Self;
    fn write(self, out: &mut Vec<u8>);
    fn to_f32(self) -> f32;
}

impl VecsElement for f32 {
    const KIND: VecsKind = VecsKind::F32;
    const WIDTH: usize = 4;

    fn read(b: &[u8]) -> Self {
        f32::from_le_bytes(b.try_into().expect("4 bytes"))
    }

    fn write(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn to_f32(self) -> f32 {
        self
    }
}

impl VecsElement for i32 {
    const KIND: VecsKind = VecsKind::I32;
    const WIDTH: usize = 4;

    fn read(b: &[u8]) -> Self {
        i32::from_le_bytes(b.try_into().expect("4 bytes"))
    }

    fn write(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn to_f32(self) -> f32 {
        self as f32
    }
}

impl VecsElement for u8 {
    const KIND: VecsKind = VecsKind::U8;
    const WIDTH: usize = 1;

    fn read(b: &[u8]) -> Self {
        b[0]
    }

    fn write(self, out: &mut Vec<u8>) {
        out.push(self);
    }

    fn to_f32(self) -> f32 {
        self as f32
    }
}

/// Row-major matrix read from a vecs file. An empty file has `dim == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: VecsElement> Matrix<T> {
    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_vectors(&self) -> Result<Vectors> {
        if self.dim == 0 {
            return Ok(Vectors::new(0));
        }
        Vectors::from_flat(self.dim, self.data.iter().map(|x| x.to_f32()).collect())
    }
}

pub fn decode_vecs<T: VecsElement>(buf: &[u8]) -> Result<Matrix<T>> {
    let mut r = ByteReader::new(buf);
    let mut dim = None;
    let mut data = Vec::new();
    while !r.is_empty() {
        let at = r.offset();
        let d = r.u32()? as usize;
        match dim {
            None if d == 0 => return Err(Error::format(at, "zero dimension")),
            None => dim = Some(d),
            Some(prev) if prev != d => {
                return Err(Error::format(at, format!("record dimension {d} differs from {prev}")));
            }
            Some(_) => {}
        }
        let body = r.bytes(d * T::WIDTH)?;
        data.extend(body.chunks_exact(T::WIDTH).map(T::read));
    }
    Ok(Matrix {
        dim: dim.unwrap_or(0),
        data,
    })
}

pub fn encode_vecs<T: VecsElement>(m: &Matrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.rows() * (4 + m.dim * T::WIDTH));
    for i in 0..m.rows() {
        out.extend_from_slice(&(m.dim as u32).to_le_bytes());
        for &x in m.row(i) {
            x.write(&mut out);
        }
    }
    out
}

pub fn read_vecs<T: VecsElement>(path: &Path) -> Result<Matrix<T>> {
    decode_vecs(&std::fs::read(path)?)
}

pub fn write_vecs<T: VecsElement>(path: &Path, m: &Matrix<T>) -> Result<()> {
    std::fs::write(path, encode_vecs(m))?;
    Ok(())
}

/// Reads any element kind and widens it to `f32`.
pub fn read_vectors(path: &Path, kind: VecsKind) -> Result<Vectors> {
    match kind {
        VecsKind::F32 => read_vecs::<f32>(path)?.to_vectors(),
        VecsKind::I32 => read_vecs::<i32>(path)?.to_vectors(),
        VecsKind::U8 => read_vecs::<u8>(path)?.to_vectors(),
    }
}

pub fn write_vectors(path: &Path, v: &Vectors) -> Result<()> {
    write_vecs(
        path,
        &Matrix {
            dim: v.dim(),
            data: v.as_flat().to_vec(),
        },
    )
}
