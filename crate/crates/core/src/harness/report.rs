//! CSV output of experiment rows.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::experiment::{ExperimentRow, Method};

pub const CSV_HEADER: [&str; 7] = ["method", "alpha", "n_views", "rmse", "runtime_s", "stage", "seed"];

/// `%g`-style formatting with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".to_string() } else if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        trim(format!("{x:.*}", (5 - exp) as usize))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::param("refusing to write a CSV without rows"));
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            format_sig6(r.alpha),
            r.n_views.to_string(),
            format_sig6(r.rmse),
            format_sig6(r.runtime_s),
            r.stage.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ExperimentRow], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn parse_csv<R: Read>(input: R, label: &Path) -> Result<Vec<ExperimentRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let bad = |m: String| Error::ingestion(label, m);
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: {} = {:?}", line + 1, CSV_HEADER[i], field(i))))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse::<u64>()
                .map_err(|_| bad(format!("row {}: {} = {:?}", line + 1, CSV_HEADER[i], field(i))))
        };
        rows.push(ExperimentRow {
            method: field(0).parse::<Method>()?,
            alpha: num(1)?,
            n_views: int(2)? as usize,
            rmse: num(3)?,
            runtime_s: num(4)?,
            stage: int(5)? as usize,
            seed: int(6)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ExperimentRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    parse_csv(file, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, rmse: f64) -> ExperimentRow {
        ExperimentRow {
            method,
            alpha: 0.025,
            n_views: 31,
            rmse,
            runtime_s: 0.0,
            stage: 14,
            seed: 7,
        }
    }

    #[test]
    fn sig6_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.025, "0.025"),
            (123456789.0, "1.23457e+08"),
            (0.000123456789, "0.000123457"),
            (0.0000123456, "1.23456e-05"),
            (2.5, "2.5"),
            (-0.1, "-0.1"),
            (999999.5, "1e+06"),
            (f64::NAN, "nan"),
        ];
        for (x, s) in cases {
            assert_eq!(format_sig6(x), s, "{x}");
        }
    }

    #[test]
    fn one_row_two_lines() {
        let mut buf = Vec::new();
        write_csv(&[row(Method::WelschL1, 0.1234567)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "method,alpha,n_views,rmse,runtime_s,stage,seed\nWelsch-L1,0.025,31,0.123457,0,14,7\n");
    }

    #[test]
    fn round_trip_and_empty() {
        let rows = vec![row(Method::L2L2, 0.5), row(Method::L1L1, 1.0 / 3.0)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = parse_csv(&buf[..], Path::new("rows.csv")).unwrap();
        assert_eq!(back[0], rows[0]);
        assert_eq!(back[1].rmse, 0.333333);
        let err = write_csv(&[], Vec::new()).unwrap_err().to_string();
        assert!(err.contains("without rows"));
    }
}
