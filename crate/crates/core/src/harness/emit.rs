use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::SweepRecord;
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Scalar};

pub const CSV_HEADER: [&str; 6] = ["m", "error", "error_bar", "rescaled", "theory", "ratio"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    /// JSON array of records with round-trip float formatting.
    Record,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "record" => Ok(Format::Record),
            other => Err(Error::config("output.format", format!("unknown format `{other}`; expected csv or record"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Record => "record",
        })
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_f64_record<T: Scalar>(r: &SweepRecord<T>) -> SweepRecord<f64> {
    SweepRecord {
        m: r.m,
        error: to_f64(r.error),
        error_bar: to_f64(r.error_bar),
        rescaled: to_f64(r.rescaled),
        theory: to_f64(r.theory),
        ratio: to_f64(r.ratio),
    }
}

pub fn render<T: Scalar>(records: &[SweepRecord<T>], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
            w.write_record(CSV_HEADER).map_err(io)?;
            for r in records.iter().map(to_f64_record) {
                w.write_record([
                    r.m.to_string(),
                    format_real(r.error),
                    format_real(r.error_bar),
                    format_real(r.rescaled),
                    format_real(r.theory),
                    format_real(r.ratio),
                ])
                .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
        }
        Format::Record => {
            let rows: Vec<SweepRecord<f64>> = records.iter().map(to_f64_record).collect();
            let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn parse(text: &str, format: Format) -> Result<Vec<SweepRecord<f64>>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
            if header.iter().ne(CSV_HEADER) {
                return Err(Error::Parse(format!("unexpected CSV header `{}`", header.iter().collect::<Vec<_>>().join(","))));
            }
            r.deserialize().map(|row| row.map_err(|e| Error::Parse(e.to_string()))).collect()
        }
        Format::Record => serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string())),
    }
}

/// Writes the rendered records to `path`, or to stdout when `path` is
/// `None`.
pub fn emit<T: Scalar>(records: &[SweepRecord<T>], format: Format, path: Option<&Path>) -> Result<()> {
    write_text(&render(records, format)?, path)
}

pub fn write_text(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SweepRecord<f64>> {
        (0..8)
            .map(|k| {
                let m = 1usize << k;
                let e = 1.0 / (24.0 * (m * m) as f64);
                SweepRecord { m, error: e, error_bar: 1e-17, rescaled: 1.0 / 24.0, theory: 1.0 / 24.0, ratio: 1.0 }
            })
            .collect()
    }

    #[test]
    fn csv_has_header_and_one_row_per_record() {
        let text = render(&sample(), Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "m,error,error_bar,rescaled,theory,ratio");
        assert!(lines[1].starts_with("1,4.1666666666666664e-2,"), "{}", lines[1]);
    }

    #[test]
    fn empty_list_is_header_only() {
        let text = render::<f64>(&[], Format::Csv).unwrap();
        assert_eq!(text, "m,error,error_bar,rescaled,theory,ratio\n");
        assert!(parse(&text, Format::Csv).unwrap().is_empty());
    }

    #[test]
    fn both_formats_round_trip() {
        let recs = sample();
        for fmt in [Format::Csv, Format::Record] {
            let back = parse(&render(&recs, fmt).unwrap(), fmt).unwrap();
            assert_eq!(back, recs, "{fmt}");
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(render(&sample(), Format::Csv).unwrap(), render(&sample(), Format::Csv).unwrap());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(parse("a,b\n1,2\n", Format::Csv), Err(Error::Parse(_))));
    }

    #[test]
    fn format_names() {
        assert_eq!("record".parse::<Format>().unwrap(), Format::Record);
        assert!("xml".parse::<Format>().is_err());
    }
}
