//! CSV and JSON writers. Both are byte-deterministic for a given table.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::args::Format;

pub struct Table<'a, R> {
    pub command: &'a str,
    pub header: &'a [&'a str],
    pub rows: Vec<R>,
}

#[derive(Serialize)]
struct JsonDoc<'a, R> {
    command: &'a str,
    columns: &'a [&'a str],
    rows: &'a [R],
}

impl<R: Serialize> Table<'_, R> {
    pub fn write(&self, format: Format, out: Option<&Path>) -> io::Result<()> {
        let sink: Box<dyn Write> = match out {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        };
        let mut w = BufWriter::new(sink);
        match format {
            Format::Csv => self.write_csv(&mut w)?,
            Format::Json => {
                let doc = JsonDoc { command: self.command, columns: self.header, rows: &self.rows };
                serde_json::to_writer_pretty(&mut w, &doc)?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()
    }

    fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        csv.write_record(self.header)?;
        for row in &self.rows {
            csv.serialize(row)?;
        }
        csv.flush()
    }
}

/// Writes a ready-made JSON value.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> io::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}
