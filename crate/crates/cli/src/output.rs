use anyhow::Context;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => anyhow::bail!("unknown format '{s}' (json or csv)"),
        }
    }
}

/// Rows of a flat table: header plus string cells.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn re_im(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

/// Emit `value` as pretty JSON or `table` as CSV.
pub fn emit<T: Serialize>(
    value: &T,
    table: impl FnOnce() -> Table,
    format: Format,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let bytes = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let t = table();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?
        }
    };
    write_bytes(out, &bytes)
}
