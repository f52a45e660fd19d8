//! The FLD1 container: little-endian `"FLD1"`, `u32` version (1), `u32`
//! dim, `u32` kind, `u32` N, `f64` L, `f64` time, then the `f64` samples of
//! every component in row-major order, components concatenated.
//!
//! Kinds: 0 scalar, 1 vector (`d` components), 2 tensor (`d²` components,
//! row-major), 3 kernel table. Kernel tables carry a header extension
//! between the fixed header and the payload: `u32` kernel id, `u32` packed
//! index tuple, `f64` r0, `f64` r1. A time series is a concatenation of
//! records with increasing times. Grids are read back centred at the
//! origin.

use std::path::Path;

use wsp_core::fields::{Grid, ScalarField, TensorField, TimeSeries, VectorField};
use wsp_core::kernels::{CutoffSpec, KernelId, KernelTable};

use crate::error::{Result, WspError};

pub const MAGIC: &[u8; 4] = b"FLD1";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 * 4 + 2 * 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Scalar(ScalarField),
    Vector(VectorField),
    Tensor(TensorField),
    Kernel(KernelTable),
}

impl Record {
    pub fn kind(&self) -> u32 {
        match self {
            Record::Scalar(_) => 0,
            Record::Vector(_) => 1,
            Record::Tensor(_) => 2,
            Record::Kernel(_) => 3,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        ["scalar", "vector", "tensor", "kernel table"][self.kind() as usize]
    }

    fn grid_time(&self) -> (Grid, f64) {
        match self {
            Record::Scalar(f) => (f.grid, f.time),
            Record::Vector(f) => (f.grid, f.time),
            Record::Tensor(f) => (f.grid, f.time),
            Record::Kernel(k) => (k.values.grid, k.values.time),
        }
    }

    fn components(&self) -> Vec<&[f64]> {
        match self {
            Record::Scalar(f) => vec![&f.values[..]],
            Record::Vector(f) => f.components.iter().map(|c| &c.values[..]).collect(),
            Record::Tensor(f) => f.components.iter().map(|c| &c.values[..]).collect(),
            Record::Kernel(k) => vec![&k.values.values[..]],
        }
    }
}

pub fn encode(record: &Record, out: &mut Vec<u8>) {
    let (grid, time) = record.grid_time();
    out.extend_from_slice(MAGIC);
    for v in [VERSION, grid.dim() as u32, record.kind(), grid.n() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    if let Record::Kernel(k) = record {
        out.extend_from_slice(&k.id.code().to_le_bytes());
        out.extend_from_slice(&k.id.packed_indices().to_le_bytes());
        out.extend_from_slice(&k.spec.r0.to_le_bytes());
        out.extend_from_slice(&k.spec.r1.to_le_bytes());
    }
    for c in record.components() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(WspError::Format {
            offset,
            message: message.into(),
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return self.fail(self.pos, format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

fn decode_one(cur: &mut Cursor<'_>) -> Result<Record> {
    let start = cur.pos;
    if cur.take(4, "magic")? != MAGIC {
        return cur.fail(start, "bad magic, expected \"FLD1\"");
    }
    let at = cur.pos;
    let version = cur.u32("version")?;
    if version != VERSION {
        return cur.fail(at, format!("unsupported version {version}"));
    }
    let at = cur.pos;
    let dim = cur.u32("dim")? as usize;
    if dim != 2 && dim != 3 {
        return cur.fail(at, format!("dimension {dim} is not 2 or 3"));
    }
    let at = cur.pos;
    let kind = cur.u32("kind")?;
    if kind > 3 {
        return cur.fail(at, format!("unknown kind {kind}"));
    }
    let at = cur.pos;
    let n = cur.u32("N")? as usize;
    let l_at = cur.pos;
    let l = cur.f64("L")?;
    let time = cur.f64("time")?;
    let grid = match Grid::new(dim, n, l) {
        Ok(g) => g,
        Err(e) => {
            let off = if n < 4 || n % 2 != 0 { at } else { l_at };
            return cur.fail(off, e.to_string());
        }
    };
    let ext = if kind == 3 {
        let at = cur.pos;
        let code = cur.u32("kernel id")?;
        let packed = cur.u32("index tuple")?;
        let r0 = cur.f64("r0")?;
        let r1 = cur.f64("r1")?;
        let id = KernelId::from_parts(code, packed).or_else(|e| cur.fail(at, e.to_string()))?;
        let spec = CutoffSpec::new(r0, r1).or_else(|e| cur.fail(at + 8, e.to_string()))?;
        Some((id, spec))
    } else {
        None
    };
    let ncomp = match kind {
        0 | 3 => 1,
        1 => dim,
        _ => dim * dim,
    };
    let payload = ncomp * grid.len() * 8;
    let avail = cur.bytes.len() - cur.pos;
    if avail < payload {
        return cur.fail(cur.pos, format!("payload holds {avail} bytes, header requires {payload}"));
    }
    let mut comps = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let at = cur.pos;
        let vals: Vec<f64> = cur
            .take(grid.len() * 8, "payload")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        comps.push(ScalarField::new(grid, time, vals).or_else(|e| cur.fail(at, e.to_string()))?);
    }
    Ok(match kind {
        0 => Record::Scalar(comps.pop().expect("one component")),
        1 => Record::Vector(VectorField::new(comps).or_else(|e| cur.fail(start, e.to_string()))?),
        2 => {
            let sym = (0..dim).all(|i| (0..i).all(|j| comps[i * dim + j].values == comps[j * dim + i].values));
            Record::Tensor(TensorField::new(comps, sym).or_else(|e| cur.fail(start, e.to_string()))?)
        }
        _ => {
            let (id, spec) = ext.expect("kernel header");
            let values = comps.pop().expect("one component");
            let singular = match id {
                KernelId::Far { .. } => None,
                _ => (0..grid.len()).find(|&l| grid.point(l).iter().all(|c| *c == 0.0)),
            };
            Record::Kernel(KernelTable {
                id,
                spec,
                values,
                singular,
            })
        }
    })
}

/// Every record in `bytes`; trailing bytes that do not form a record are an
/// error at their offset.
pub fn decode(bytes: &[u8]) -> Result<Vec<Record>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let mut out = Vec::new();
    while cur.pos < bytes.len() {
        out.push(decode_one(&mut cur)?);
    }
    if out.is_empty() {
        return cur.fail(0, "empty file");
    }
    Ok(out)
}

/// Exactly one record.
pub fn decode_single(bytes: &[u8]) -> Result<Record> {
    let mut cur = Cursor { bytes, pos: 0 };
    let r = decode_one(&mut cur)?;
    if cur.pos != bytes.len() {
        return cur.fail(cur.pos, format!("{} trailing bytes after the payload", bytes.len() - cur.pos));
    }
    Ok(r)
}

pub fn read(path: &Path) -> Result<Vec<Record>> {
    let bytes = std::fs::read(path).map_err(|e| WspError::io(path, e))?;
    decode(&bytes)
}

pub fn write(path: &Path, records: &[Record]) -> Result<()> {
    let mut out = Vec::with_capacity(HEADER);
    for r in records {
        encode(r, &mut out);
    }
    std::fs::write(path, out).map_err(|e| WspError::io(path, e))
}

fn expect_kind<T>(records: Vec<Record>, name: &str, pick: impl Fn(Record) -> Option<T>) -> Result<Vec<T>> {
    records
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let kind = r.kind_name();
            pick(r).ok_or_else(|| WspError::Config(format!("record {k} is a {kind} field, expected {name}")))
        })
        .collect()
}

pub fn scalars(records: Vec<Record>) -> Result<Vec<ScalarField>> {
    expect_kind(records, "scalar", |r| match r {
        Record::Scalar(f) => Some(f),
        _ => None,
    })
}

pub fn vectors(records: Vec<Record>) -> Result<Vec<VectorField>> {
    expect_kind(records, "vector", |r| match r {
        Record::Vector(f) => Some(f),
        _ => None,
    })
}

pub fn tensors(records: Vec<Record>) -> Result<Vec<TensorField>> {
    expect_kind(records, "tensor", |r| match r {
        Record::Tensor(f) => Some(f),
        _ => None,
    })
}

pub fn vector_series(records: Vec<Record>) -> Result<TimeSeries<VectorField>> {
    Ok(TimeSeries::new(vectors(records)?)?)
}

pub fn tensor_series(records: Vec<Record>) -> Result<TimeSeries<TensorField>> {
    Ok(TimeSeries::new(tensors(records)?)?)
}
