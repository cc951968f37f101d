//! Binary container for encoded samples.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "IRLDSET1"
//! max_tokens u32, dim u32, count u32
//! per sample:
//!   id, program                  str (u32 length + UTF-8)
//!   label                        i32 count (-1: unlabeled) + u32 indices
//!   tokens, window_start         u32, u32
//!   locations                    u32 count + str each ("" or "file:line")
//!   lines                        u32 count + (statement, start, end) u32
//!   inputs                       max_tokens·dim f64
//! ```

use super::{EncodedSample, EncodingError, LineSpan};
use crate::ir::DebugLoc;
use crate::FileId;

pub const DATASET_MAGIC: &[u8; 8] = b"IRLDSET1";

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&u32::try_from(v).expect("value fits in u32").to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

pub fn write_dataset(samples: &[EncodedSample], max_tokens: usize, dim: usize) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(DATASET_MAGIC);
    w.u32(max_tokens);
    w.u32(dim);
    w.u32(samples.len());
    for s in samples {
        assert!(s.max_tokens == max_tokens && s.dim == dim, "sample {} has a different shape", s.id);
        w.str(&s.id);
        w.str(&s.program);
        match &s.label {
            None => w.0.extend_from_slice(&(-1i32).to_le_bytes()),
            Some(l) => {
                w.u32(l.len());
                l.iter().for_each(|&i| w.u32(i));
            }
        }
        w.u32(s.tokens);
        w.u32(s.window_start);
        w.u32(s.locations.len());
        for l in &s.locations {
            w.str(&l.as_ref().map(DebugLoc::to_string).unwrap_or_default());
        }
        w.u32(s.lines.len());
        for l in &s.lines {
            w.u32(l.statement);
            w.u32(l.start);
            w.u32(l.end);
        }
        for v in &s.inputs {
            w.0.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.0
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], EncodingError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| EncodingError::Format(format!("dataset truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize, EncodingError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn i32(&mut self) -> Result<i32, EncodingError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, EncodingError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String, EncodingError> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| EncodingError::Format("dataset string is not UTF-8".into()))
    }
}

fn parse_loc(s: &str) -> Result<Option<DebugLoc>, EncodingError> {
    if s.is_empty() {
        return Ok(None);
    }
    let bad = || EncodingError::Format(format!("bad source location `{s}`"));
    let (file, line) = s.rsplit_once(':').ok_or_else(bad)?;
    Ok(Some(DebugLoc { file: FileId::new(file), line: line.parse().map_err(|_| bad())? }))
}

/// Reads a dataset; returns `(max_tokens, dim, samples)`.
pub fn read_dataset(bytes: &[u8]) -> Result<(usize, usize, Vec<EncodedSample>), EncodingError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8).ok() != Some(&DATASET_MAGIC[..]) {
        return Err(EncodingError::Format("not an encoded dataset (bad magic)".into()));
    }
    let (max_tokens, dim, count) = (r.u32()?, r.u32()?, r.u32()?);
    let mut samples = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id = r.str()?;
        let program = r.str()?;
        let label = match r.i32()? {
            -1 => None,
            n if n >= 0 => Some((0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?),
            _ => return Err(EncodingError::Format(format!("{id}: bad label count"))),
        };
        let tokens = r.u32()?;
        let window_start = r.u32()?;
        let n = r.u32()?;
        let locations = (0..n).map(|_| parse_loc(&r.str()?)).collect::<Result<Vec<_>, _>>()?;
        let n = r.u32()?;
        let lines = (0..n)
            .map(|_| Ok(LineSpan { statement: r.u32()?, start: r.u32()?, end: r.u32()? }))
            .collect::<Result<Vec<_>, EncodingError>>()?;
        if tokens > max_tokens || lines.iter().any(|l| l.start >= l.end || l.end > tokens || l.statement == 0 || l.statement > locations.len()) {
            return Err(EncodingError::Format(format!("{id}: line spans out of range")));
        }
        let inputs = (0..max_tokens * dim).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        samples.push(EncodedSample { id, program, label, max_tokens, dim, inputs, tokens, window_start, lines, locations });
    }
    if r.pos != bytes.len() {
        return Err(EncodingError::Format("trailing bytes after the last sample".into()));
    }
    Ok((max_tokens, dim, samples))
}
