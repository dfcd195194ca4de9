//! Metrics CSV files.
//!
//! Layout: `# key = value` comment lines echoing the effective configuration,
//! then a header row with [`CSV_COLUMNS`], then one row per evaluation point.
//! `seconds` is empty unless wall-clock recording was requested.

use std::io::{Read, Write};

use crate::agents::Metrics;
use crate::{Error, Result};

pub const CSV_COLUMNS: [&str; 6] = ["iteration", "throughput", "loss", "epsilon", "mean_abs_invalid_q", "seconds"];

/// Streams metric rows, flushing after each so partial runs stay readable.
pub struct MetricsWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, settings: &[(&str, String)]) -> Result<Self> {
        for (k, v) in settings {
            writeln!(out, "# {k} = {v}")?;
        }
        let mut out = csv::Writer::from_writer(out);
        out.write_record(CSV_COLUMNS)?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write(&mut self, m: &Metrics) -> Result<()> {
        self.out.write_record([
            m.iteration.to_string(),
            m.throughput.to_string(),
            m.loss.to_string(),
            m.epsilon.to_string(),
            m.mean_abs_invalid_q.to_string(),
            m.seconds.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_metrics<W: Write>(out: W, settings: &[(&str, String)], metrics: &[Metrics]) -> Result<W> {
    let mut w = MetricsWriter::new(out, settings)?;
    for m in metrics {
        w.write(m)?;
    }
    w.into_inner()
}

/// Parses a metrics CSV back into rows plus its `# key = value` settings.
pub fn read_metrics<R: Read>(mut input: R) -> Result<(Vec<(String, String)>, Vec<Metrics>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let settings = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::InvalidConfig(format!("unexpected metrics header {header:?}")));
    }
    let bad = |what: &str| Error::InvalidConfig(format!("bad {what} in metrics row"));
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        let num = |i: usize, what: &str| r[i].parse::<f64>().map_err(|_| bad(what));
        rows.push(Metrics {
            iteration: r[0].parse().map_err(|_| bad("iteration"))?,
            throughput: num(1, "throughput")?,
            loss: num(2, "loss")?,
            epsilon: num(3, "epsilon")?,
            mean_abs_invalid_q: num(4, "mean_abs_invalid_q")?,
            seconds: if r[5].is_empty() { None } else { Some(num(5, "seconds")?) },
        });
    }
    Ok((settings, rows))
}
