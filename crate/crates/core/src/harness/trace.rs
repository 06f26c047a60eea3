//! Trace persistence: one CSV row per outer iteration, header first, columns
//! in `TraceRecord` field order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::Result;
use crate::solvers::TraceRecord;

pub fn write_trace<W: Write>(writer: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_trace_file(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    let file = File::create(path)?;
    write_trace(std::io::BufWriter::new(file), records)
}

pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    read_trace(File::open(path)?)
}
