//! T×C×H×W stacks of gridded fields and their binary file format.
//!
//! File layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `GSTK` |
//! | 4 | version (u32, currently 1) |
//! | 16 | T, C, H, W (u32 each) |
//! | per channel | name length (u32) then UTF-8 bytes |
//! | T·C·H·W·4 | f32 payload, T-major then C, H (south to north), W (west to east) |
//!
//! Missing cells are NaN; the canonical marker is the quiet NaN
//! `0x7FC0_0000`, but any NaN bit pattern is preserved on round trip.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::MaskedGrid;

pub const MAGIC: &[u8; 4] = b"GSTK";
pub const VERSION: u32 = 1;
pub const MISSING_BITS: u32 = 0x7FC0_0000;

#[derive(Debug, Clone)]
pub struct GridStack {
    dims: [usize; 4],
    channels: Vec<String>,
    data: Vec<f32>,
}

/// Bitwise equality, so NaN payloads compare equal to themselves.
impl PartialEq for GridStack {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.channels == other.channels
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl GridStack {
    /// All-missing stack.
    pub fn new(t: usize, channels: Vec<String>, h: usize, w: usize) -> Self {
        let c = channels.len();
        GridStack {
            dims: [t, c, h, w],
            channels,
            data: vec![f32::from_bits(MISSING_BITS); t * c * h * w],
        }
    }

    pub fn from_raw(dims: [usize; 4], channels: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if channels.len() != dims[1] {
            return Err(Error::CorruptFile(format!(
                "{} channel names for C = {}",
                channels.len(),
                dims[1]
            )));
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::CorruptFile(format!(
                "payload has {} values, dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(GridStack { dims, channels, data })
    }

    pub fn n_times(&self) -> usize {
        self.dims[0]
    }
    pub fn n_channels(&self) -> usize {
        self.dims[1]
    }
    pub fn height(&self) -> usize {
        self.dims[2]
    }
    pub fn width(&self) -> usize {
        self.dims[3]
    }
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }
    pub fn channels(&self) -> &[String] {
        &self.channels
    }
    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }
    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    fn offset(&self, t: usize, c: usize, i: usize, j: usize) -> usize {
        let [_, nc, h, w] = self.dims;
        ((t * nc + c) * h + i) * w + j
    }

    pub fn get(&self, t: usize, c: usize, i: usize, j: usize) -> Option<f64> {
        let v = self.data[self.offset(t, c, i, j)];
        (!v.is_nan()).then_some(v as f64)
    }

    pub fn set(&mut self, t: usize, c: usize, i: usize, j: usize, value: Option<f64>) {
        let k = self.offset(t, c, i, j);
        self.data[k] = match value {
            Some(v) => v as f32,
            None => f32::from_bits(MISSING_BITS),
        };
    }

    pub fn frame(&self, t: usize, c: usize) -> MaskedGrid {
        let (h, w) = (self.height(), self.width());
        let mut g = MaskedGrid::masked(h, w);
        for i in 0..h {
            for j in 0..w {
                if let Some(v) = self.get(t, c, i, j) {
                    g.set(i, j, v);
                }
            }
        }
        g
    }

    /// Applies `f(channel, value)` to every valid cell.
    pub fn map_valid(&self, f: impl Fn(usize, f64) -> f64) -> GridStack {
        let mut out = self.clone();
        let [t, c, h, w] = self.dims;
        for tt in 0..t {
            for cc in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        if let Some(v) = self.get(tt, cc, i, j) {
                            out.set(tt, cc, i, j, Some(f(cc, v)));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for d in self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for name in &self.channels {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptFile(m.to_string());
        let mut buf4 = [0u8; 4];
        let mut u32_le = |r: &mut R, what: &str| -> Result<u32> {
            r.read_exact(&mut buf4)
                .map_err(|_| corrupt(&format!("truncated header ({what})")))?;
            Ok(u32::from_le_bytes(buf4))
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| corrupt("truncated header (magic)"))?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32_le(&mut r, "version")?;
        if version != VERSION {
            return Err(Error::CorruptFile(format!("unsupported version {version}")));
        }
        let mut dims32 = [0u32; 4];
        for d in dims32.iter_mut() {
            *d = u32_le(&mut r, "dims")?;
        }
        let count = dims32
            .iter()
            .try_fold(1u32, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::CorruptFile(format!("dims {dims32:?} overflow 2^32 cells")))?;
        let mut channels = Vec::with_capacity(dims32[1] as usize);
        for _ in 0..dims32[1] {
            let len = u32_le(&mut r, "channel name length")? as usize;
            if len > 4096 {
                return Err(corrupt("channel name too long"));
            }
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)
                .map_err(|_| corrupt("truncated channel table"))?;
            channels.push(String::from_utf8(name).map_err(|_| corrupt("channel name is not UTF-8"))?);
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)
            .map_err(|e| Error::CorruptFile(format!("payload read failed: {e}")))?;
        let expected = count as u64 * 4;
        if payload.len() as u64 != expected {
            return Err(Error::CorruptFile(format!(
                "payload is {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_bits(u32::from_le_bytes([b[0], b[1], b[2], b[3]])))
            .collect();
        GridStack::from_raw(dims32.map(|d| d as usize), channels, data)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f))
    }
}

/// Read-only access to gridded predictor values. Implemented by
/// [`GridStack`] and by the audited training views of the CV harness.
pub trait GridSource {
    /// (T, C, H, W)
    fn grid_dims(&self) -> [usize; 4];
    fn grid_value(&self, t: usize, c: usize, i: usize, j: usize) -> Result<Option<f64>>;
}

impl GridSource for GridStack {
    fn grid_dims(&self) -> [usize; 4] {
        self.dims
    }
    fn grid_value(&self, t: usize, c: usize, i: usize, j: usize) -> Result<Option<f64>> {
        Ok(self.get(t, c, i, j))
    }
}
