//! MSB-first bit stream writer/reader and LEB128 varints.

use crate::{Error, Result};

#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    /// Bits used in the final partial byte (0 = byte aligned).
    fill: u8,
}

impl BitWriter {
    pub fn new() -> BitWriter {
        BitWriter::default()
    }

    /// Append the low `count` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, count: u8) {
        debug_assert!(count <= 64);
        for i in (0..count).rev() {
            let bit = ((value >> i) & 1) as u8;
            if self.fill == 0 {
                self.bytes.push(0);
            }
            let last = self.bytes.len() - 1;
            self.bytes[last] |= bit << (7 - self.fill);
            self.fill = (self.fill + 1) % 8;
        }
    }

    pub fn bit_len(&self) -> u64 {
        if self.fill == 0 {
            self.bytes.len() as u64 * 8
        } else {
            (self.bytes.len() as u64 - 1) * 8 + self.fill as u64
        }
    }

    /// Pad to a byte boundary with zero bits; returns the padding size.
    pub fn align(&mut self) -> u8 {
        let pad = if self.fill == 0 { 0 } else { 8 - self.fill };
        if pad > 0 {
            self.write_bits(0, pad);
        }
        pad
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.align();
        self.bytes
    }
}

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> BitReader<'a> {
        BitReader { data, pos: 0 }
    }

    pub fn bit_pos(&self) -> u64 {
        self.pos
    }

    pub fn read_bit(&mut self) -> Result<u8> {
        let byte = (self.pos / 8) as usize;
        if byte >= self.data.len() {
            return Err(Error::Corrupt("bit stream truncated".into()));
        }
        let bit = (self.data[byte] >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, count: u8) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..count {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }
}

pub fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub fn read_varint(data: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0u32;
    loop {
        let byte = *data
            .get(*pos)
            .ok_or_else(|| Error::Corrupt("varint truncated".into()))?;
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Corrupt("varint overflow".into()));
        }
        v |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}
