//! Field files: one JSON header line followed by the node values in
//! x-fastest order, either as CSV text (one value per line) or as raw
//! little-endian `f64`.
//!
//! ```text
//! {"lengths":[1.0,1.0,1.0],"counts":[9,9,9],"format":"csv"}
//! 0
//! 0.0123...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Grid, ScalarField};
use crate::error::{KgmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Csv,
    F64le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub lengths: [f64; 3],
    pub counts: [usize; 3],
    #[serde(default = "default_format")]
    pub format: FieldFormat,
}

fn default_format() -> FieldFormat {
    FieldFormat::Csv
}

pub fn write_field(path: impl AsRef<Path>, field: &ScalarField, format: FieldFormat) -> Result<()> {
    let grid = field.grid();
    let header = FieldHeader {
        lengths: grid.lengths(),
        counts: grid.counts(),
        format,
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    match format {
        FieldFormat::Csv => {
            for v in field.values() {
                // Display for f64 prints the shortest representation that round-trips.
                writeln!(out, "{v}")?;
            }
        }
        FieldFormat::F64le => {
            for v in field.values() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Read a field together with the grid described by its header.
pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim())
        .map_err(|e| KgmError::Format(format!("bad header: {e}")))?;
    let grid = Arc::new(Grid::new(header.lengths, header.counts)?);
    let n = grid.len();
    let values = match header.format {
        FieldFormat::Csv => {
            let mut values = Vec::with_capacity(n);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                for tok in t.split(',') {
                    let v: f64 = tok.trim().parse().map_err(|_| {
                        KgmError::Format(format!("line {}: cannot parse `{tok}`", lineno + 2))
                    })?;
                    values.push(v);
                }
            }
            values
        }
        FieldFormat::F64le => {
            let mut bytes = Vec::new();
            reader.read_to_end(&mut bytes)?;
            if bytes.len() != 8 * n {
                return Err(KgmError::Format(format!(
                    "expected {} payload bytes, found {}",
                    8 * n,
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect()
        }
    };
    if values.len() != n {
        return Err(KgmError::Format(format!("expected {n} values, found {}", values.len())));
    }
    ScalarField::new(grid, values)
}

/// Read a field and rebind it to an existing grid, which must match the header.
pub fn read_field_on(grid: &Arc<Grid>, path: impl AsRef<Path>) -> Result<ScalarField> {
    let f = read_field(path)?;
    if **f.grid() != **grid {
        return Err(KgmError::Format(format!(
            "field grid {:?}/{:?} does not match {:?}/{:?}",
            f.grid().lengths(),
            f.grid().counts(),
            grid.lengths(),
            grid.counts()
        )));
    }
    ScalarField::new(grid.clone(), f.into_values())
}
