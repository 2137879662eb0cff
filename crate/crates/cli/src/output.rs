use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::args::Format;
use crate::engines::{Row, COLUMNS};

pub fn write_table<W: Write>(rows: &[Row], format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COLUMNS)?;
            for r in rows {
                w.write_record(r.cells())?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let mut out = BufWriter::new(out);
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

/// `path`, or stdout when absent.
pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}
