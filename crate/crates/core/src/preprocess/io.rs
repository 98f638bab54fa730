//! Dataset CSV reading and writing.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::record::{DeviceRecord, Material, MAX_LAYERS};

pub const CSV_HEADER: [&str; 12] = [
    "record_id",
    "al_content",
    "barrier_thickness_nm",
    "anneal_temp_c",
    "anneal_time_s",
    "anneal_ambient",
    "layer1",
    "layer2",
    "layer3",
    "layer4",
    "r_c_ohm_mm",
    "provenance",
];

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(line: u64, field: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{field}: {raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{field}: {raw:?} is not finite")));
    }
    Ok(v)
}

/// Parses a dataset CSV. The header must match [`CSV_HEADER`] exactly; every
/// error names the offending line.
pub fn read_records<R: Read>(input: R) -> Result<Vec<DeviceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, format!("unreadable header: {e}")))?
        .clone();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != CSV_HEADER {
        return Err(parse_err(
            1,
            format!("header must be `{}`", CSV_HEADER.join(",")),
        ));
    }
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let record_id = field(0).trim().to_string();
        if record_id.is_empty() {
            return Err(parse_err(line, "record_id is empty"));
        }
        if !seen.insert(record_id.clone()) {
            return Err(parse_err(line, format!("duplicate record_id {record_id:?}")));
        }
        let mut metal_stack = Vec::with_capacity(MAX_LAYERS);
        let mut gap = false;
        for slot in 0..MAX_LAYERS {
            let raw = field(6 + slot).trim();
            if raw.is_empty() {
                gap = true;
                continue;
            }
            if gap {
                return Err(parse_err(line, format!("layer{} follows an empty layer", slot + 1)));
            }
            let m: Material = raw.parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
            metal_stack.push(m);
        }
        let r_raw = field(10).trim();
        let r_c = if r_raw.is_empty() {
            None
        } else {
            Some(number(line, "r_c_ohm_mm", r_raw)?)
        };
        let rec = DeviceRecord {
            record_id,
            al_content: number(line, "al_content", field(1))?,
            barrier_thickness_nm: number(line, "barrier_thickness_nm", field(2))?,
            anneal_temp_c: number(line, "anneal_temp_c", field(3))?,
            anneal_time_s: number(line, "anneal_time_s", field(4))?,
            anneal_ambient: field(5).parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
            metal_stack,
            r_c,
            provenance: field(11).parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
        };
        rec.validate().map_err(|e| parse_err(line, e.to_string()))?;
        records.push(rec);
    }
    Ok(records)
}

pub fn read_records_path(path: &Path) -> Result<Vec<DeviceRecord>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_records(std::io::BufReader::new(file))
}

pub fn write_records<W: Write>(out: W, records: &[DeviceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.record_id.clone(),
            r.al_content.to_string(),
            r.barrier_thickness_nm.to_string(),
            r.anneal_temp_c.to_string(),
            r.anneal_time_s.to_string(),
            r.anneal_ambient.to_string(),
        ];
        for slot in 0..MAX_LAYERS {
            row.push(r.metal_stack.get(slot).map_or(String::new(), |m| m.to_string()));
        }
        row.push(r.r_c.map_or(String::new(), |v| v.to_string()));
        row.push(r.provenance.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_path(path: &Path, records: &[DeviceRecord]) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    write_records(std::io::BufWriter::new(file), records)
}
