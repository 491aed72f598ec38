//! Little-endian byte reading with offset-carrying errors.

use crate::error::{Error, Result};

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

macro_rules! read_le {
    ($name:ident, $t:ty) => {
        pub(crate) fn $name(&mut self) -> Result<$t> {
            let b = self.bytes(std::mem::size_of::<$t>())?;
            Ok(<$t>::from_le_bytes(b.try_into().expect("length checked")))
        }
    };
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn expect(&mut self, magic: &[u8]) -> Result<()> {
        let at = self.offset();
        if self.bytes(magic.len())? != magic {
            return Err(Error::format(at, format!("bad magic, expected {:?}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }

    /// A `u32` length that must not exceed `max`.
    pub(crate) fn len_at_most(&mut self, max: usize) -> Result<usize> {
        let at = self.offset();
        let n = self.u32()? as usize;
        if n > max {
            return Err(Error::format(at, format!("length {n} exceeds {max}")));
        }
        Ok(n)
    }

    pub(crate) fn uleb(&mut self) -> Result<u64> {
        let at = self.offset();
        let mut out = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            out |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(out);
            }
        }
        Err(Error::format(at, "varint longer than 64 bits"))
    }

    pub(crate) fn sleb(&mut self) -> Result<i64> {
        let z = self.uleb()?;
        Ok((z >> 1) as i64 ^ -((z & 1) as i64))
    }

    read_le!(u8, u8);
    read_le!(u32, u32);
    read_le!(u64, u64);
    read_le!(f32, f32);
    read_le!(f64, f64);
}

#[derive(Default)]
pub(crate) struct ByteWriter {
    pub(crate) buf: Vec<u8>,
}

impl ByteWriter {
    pub(crate) fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub(crate) fn u8(&mut self, x: u8) {
        self.buf.push(x);
    }

    pub(crate) fn u32(&mut self, x: u32) {
        self.bytes(&x.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, x: u64) {
        self.bytes(&x.to_le_bytes());
    }

    pub(crate) fn f32(&mut self, x: f32) {
        self.bytes(&x.to_le_bytes());
    }

    pub(crate) fn f64(&mut self, x: f64) {
        self.bytes(&x.to_le_bytes());
    }

    pub(crate) fn uleb(&mut self, mut x: u64) {
        loop {
            let b = (x & 0x7f) as u8;
            x >>= 7;
            if x == 0 {
                self.u8(b);
                return;
            }
            self.u8(b | 0x80);
        }
    }

    pub(crate) fn sleb(&mut self, x: i64) {
        self.uleb(((x << 1) ^ (x >> 63)) as u64);
    }
}
