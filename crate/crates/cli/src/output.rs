use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub const TOOL_VERSION: &str = concat!("optpuf ", env!("CARGO_PKG_VERSION"));

/// Provenance lines written as `#` comments above every CSV body.
pub struct Header {
    pub command: &'static str,
    pub config_json: String,
    pub digest: String,
    pub started: u64,
}

impl Header {
    pub fn new(command: &'static str, (config_json, digest): (String, String)) -> Self {
        let started = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Header {
            command,
            config_json,
            digest,
            started,
        }
    }

    fn write_to(&self, w: &mut dyn Write, wall_seconds: f64) -> io::Result<()> {
        writeln!(w, "# {TOOL_VERSION}")?;
        writeln!(w, "# command: {}", self.command)?;
        writeln!(w, "# config_sha256: {}", self.digest)?;
        writeln!(w, "# config: {}", self.config_json)?;
        writeln!(w, "# started_unix: {}", self.started)?;
        writeln!(w, "# wall_seconds: {wall_seconds:.3}")
    }
}

pub fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Header comments followed by a CSV table of `rows`.
pub fn write_csv<T: Serialize>(path: Option<&Path>, header: &Header, wall_seconds: f64, rows: &[T]) -> Result<()> {
    let mut sink = open_sink(path)?;
    header.write_to(&mut sink, wall_seconds)?;
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Top-level JSON object: `value`'s fields plus the tool version and config digest.
pub fn write_json<T: Serialize>(path: Option<&Path>, header: &Header, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("tool_version".into(), TOOL_VERSION.into());
        map.insert("config_sha256".into(), header.digest.clone().into());
    }
    let mut sink = open_sink(path)?;
    serde_json::to_writer_pretty(&mut sink, &v)?;
    writeln!(sink)?;
    sink.flush()?;
    Ok(())
}


/// Header comments followed by raw CSV records (first record is the column row).
pub fn write_records(path: Option<&Path>, header: &Header, wall_seconds: f64, records: &[Vec<String>]) -> Result<()> {
    let mut sink = open_sink(path)?;
    header.write_to(&mut sink, wall_seconds)?;
    let mut w = csv::Writer::from_writer(sink);
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
