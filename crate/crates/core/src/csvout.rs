//! CSV artifacts with fixed headers.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, records end
//! with `\n`, and identical tables give identical bytes.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Trace,
    Sweep,
    Power,
    Trajectory,
    SpeedScan,
}

impl Schema {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Trace => &["t_s", "delta_mm", "delta_filt_mm"],
            Schema::Sweep => &["f_hz", "dc_pct", "amado_mm", "amado_std_mm", "amado_norm"],
            Schema::Power => &["t_s", "v_t", "v_b", "i_t", "i_b", "p_a"],
            Schema::Trajectory => &["t_s", "x_mm", "y_mm", "psi_deg", "v_mm_s"],
            Schema::SpeedScan => &[
                "f_hz",
                "amado_mm",
                "tail_amp_deg",
                "v_mm_s",
                "v_fixed_amp_mm_s",
                "reynolds",
                "bl_per_s",
            ],
        }
    }
}

/// Named columns with rows of numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Self {
            columns: schema.columns().iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }
}

fn check(schema: Schema, table: &Table) -> Result<()> {
    let expected = schema.columns();
    for (i, want) in expected.iter().enumerate() {
        match table.columns.get(i) {
            Some(got) if got == want => {}
            Some(got) => {
                return Err(Error::Schema {
                    column: got.clone(),
                    msg: format!("expected `{want}` at position {i}"),
                })
            }
            None => {
                return Err(Error::Schema {
                    column: want.to_string(),
                    msg: "missing".into(),
                })
            }
        }
    }
    if let Some(extra) = table.columns.get(expected.len()) {
        return Err(Error::Schema {
            column: extra.clone(),
            msg: "not part of the schema".into(),
        });
    }
    for (r, row) in table.rows.iter().enumerate() {
        if row.len() != expected.len() {
            let column = expected.get(row.len()).copied().unwrap_or("<extra>");
            return Err(Error::Schema {
                column: column.to_string(),
                msg: format!("row {r} has {} values, expected {}", row.len(), expected.len()),
            });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Schema {
                column: expected[c].to_string(),
                msg: format!("row {r} holds a non-finite value"),
            });
        }
    }
    Ok(())
}

pub fn write_csv<W: Write>(out: W, schema: Schema, table: &Table) -> Result<()> {
    check(schema, table)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(schema.columns()).map_err(io)?;
    let mut fields = Vec::with_capacity(schema.columns().len());
    for row in &table.rows {
        fields.clear();
        fields.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&fields).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, schema: Schema, table: &Table) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(&mut buf, schema, table)?;
    std::fs::write(path, buf)?;
    Ok(())
}
