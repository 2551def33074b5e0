//! CSV schemas shared by the library and the command-line tool.
//!
//! All readers skip `#` comment lines; writers may prepend comment lines
//! (used for config fingerprints). Floats are written with 17 significant
//! digits so values round-trip exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fgp::DecompositionSeries;
use crate::intensity::{JumpSample, SampleProvenance};
use crate::simplex::{CapitalSeries, MarketPath, SimplexPoint};

/// 17 significant digits: enough to reproduce any f64 bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn reader_from(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_field(field: &str, line: usize, what: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::CsvFormat {
        line,
        msg: format!("cannot parse {what} '{field}' as a number"),
    })
}

/// Reads a price/capitalization table: header row, first column a date
/// label, remaining columns one asset each, values strictly positive.
pub fn read_capital_series(r: impl Read) -> Result<CapitalSeries> {
    let mut rdr = reader_from(r);
    let headers = rdr.headers().map_err(|e| Error::CsvFormat {
        line: 1,
        msg: format!("missing header row: {e}"),
    })?;
    if headers.len() < 3 {
        return Err(Error::CsvFormat {
            line: 1,
            msg: format!(
                "need a date column and at least 2 asset columns, got {} columns",
                headers.len()
            ),
        });
    }
    let asset_names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != asset_names.len() + 1 {
            return Err(Error::CsvFormat {
                line,
                msg: format!(
                    "expected {} fields, got {}",
                    asset_names.len() + 1,
                    rec.len()
                ),
            });
        }
        labels.push(rec[0].to_string());
        let mut row = Vec::with_capacity(asset_names.len());
        for field in rec.iter().skip(1) {
            row.push(parse_field(field, line, "price")?);
        }
        rows.push(row);
    }
    CapitalSeries::with_labels(rows, Some(labels), Some(asset_names))
}

pub fn read_capital_series_path(path: impl AsRef<Path>) -> Result<CapitalSeries> {
    read_capital_series(BufReader::new(File::open(path)?))
}

/// Writes a market path as a weights table with the same shape as the price
/// CSV (date label + one weight column per asset).
pub fn write_market_path(
    w: impl Write,
    path: &MarketPath,
    asset_names: Option<&[String]>,
    comments: &[String],
) -> Result<()> {
    let mut w = BufWriter::new(w);
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let n = path.dim();
    let names: Vec<String> = match asset_names {
        Some(names) => names.to_vec(),
        None => (1..=n).map(|i| format!("asset_{i}")).collect(),
    };
    writeln!(w, "date,{}", names.join(","))?;
    for (t, p) in path.points().iter().enumerate() {
        let label = path
            .timestamps()
            .map(|ts| ts[t].clone())
            .unwrap_or_else(|| t.to_string());
        let weights: Vec<String> = p.coords().iter().map(|&c| fmt_f64(c)).collect();
        writeln!(w, "{label},{}", weights.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a weights table back into a market path.
pub fn read_market_path(r: impl Read) -> Result<MarketPath> {
    let mut rdr = reader_from(r);
    let headers = rdr.headers().map_err(|e| Error::CsvFormat {
        line: 1,
        msg: format!("missing header row: {e}"),
    })?;
    let n = headers.len().saturating_sub(1);
    if n < 2 {
        return Err(Error::CsvFormat {
            line: 1,
            msg: "need at least 2 weight columns".into(),
        });
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?;
        labels.push(rec[0].to_string());
        let mut coords = Vec::with_capacity(n);
        for field in rec.iter().skip(1) {
            coords.push(parse_field(field, line, "weight")?);
        }
        points.push(SimplexPoint::new(coords).map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?);
    }
    MarketPath::with_timestamps(points, Some(labels))
}

pub fn read_market_path_path(path: impl AsRef<Path>) -> Result<MarketPath> {
    read_market_path(BufReader::new(File::open(path)?))
}

/// Writes a decomposition as (t, log_V, generator_term, drift).
pub fn write_decomposition(
    w: impl Write,
    series: &DecompositionSeries,
    comments: &[String],
) -> Result<()> {
    let mut w = BufWriter::new(w);
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "t,log_V,generator_term,drift")?;
    for t in 0..series.len() {
        writeln!(
            w,
            "{t},{},{},{}",
            fmt_f64(series.log_relative_value[t]),
            fmt_f64(series.generator_term[t]),
            fmt_f64(series.drift[t])
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a jump sample as (p_1..p_n, q_1..q_n, weight).
pub fn write_jump_sample(w: impl Write, sample: &JumpSample, comments: &[String]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let n = sample.pairs()[0].0.dim();
    let mut header: Vec<String> = (1..=n).map(|i| format!("p_{i}")).collect();
    header.extend((1..=n).map(|i| format!("q_{i}")));
    header.push("weight".into());
    writeln!(w, "{}", header.join(","))?;
    for ((p, q), &wt) in sample.pairs().iter().zip(sample.weights()) {
        let mut fields: Vec<String> = p.coords().iter().map(|&c| fmt_f64(c)).collect();
        fields.extend(q.coords().iter().map(|&c| fmt_f64(c)));
        fields.push(fmt_f64(wt));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a jump sample written by `write_jump_sample`.
pub fn read_jump_sample(r: impl Read, description: &str) -> Result<JumpSample> {
    let mut rdr = reader_from(r);
    let headers = rdr.headers().map_err(|e| Error::CsvFormat {
        line: 1,
        msg: format!("missing header row: {e}"),
    })?;
    let cols = headers.len();
    if cols < 5 || cols % 2 == 0 {
        return Err(Error::CsvFormat {
            line: 1,
            msg: format!("expected p_1..p_n,q_1..q_n,weight, got {cols} columns"),
        });
    }
    let n = (cols - 1) / 2;
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?;
        if rec.len() != cols {
            return Err(Error::CsvFormat {
                line,
                msg: format!("expected {cols} fields, got {}", rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(cols);
        for field in rec.iter() {
            vals.push(parse_field(field, line, "sample value")?);
        }
        let p = SimplexPoint::new(vals[..n].to_vec()).map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?;
        let q = SimplexPoint::new(vals[n..2 * n].to_vec()).map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?;
        pairs.push((p, q));
        weights.push(vals[2 * n]);
    }
    // Absorb tiny rounding in stored weights.
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() <= 1e-9 {
        for w in weights.iter_mut() {
            *w /= sum;
        }
    }
    JumpSample::new(
        pairs,
        weights,
        SampleProvenance {
            seed: None,
            path_count: None,
            description: description.to_string(),
        },
    )
}

pub fn read_jump_sample_path(path: impl AsRef<Path>, description: &str) -> Result<JumpSample> {
    read_jump_sample(BufReader::new(File::open(path)?), description)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::weights_from_capitalizations;

    #[test]
    fn capital_series_round_trip() {
        let csv = "date,US,CN\n2001-01,1.0,1.0\n2001-02,1.1,0.9\n";
        let caps = read_capital_series(csv.as_bytes()).unwrap();
        assert_eq!(caps.n_assets(), 2);
        assert_eq!(caps.labels().unwrap()[1], "2001-02");
        let path = weights_from_capitalizations(&caps).unwrap();
        let mut buf = Vec::new();
        write_market_path(&mut buf, &path, caps.asset_names(), &["fingerprint test".into()])
            .unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# fingerprint test\n"));
        let back = read_market_path(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.points()[1].coords()[0], 0.55);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let csv = "date,US,CN\n2001-01,1.0,1.0\n2001-02,oops,0.9\n";
        match read_capital_series(csv.as_bytes()) {
            Err(Error::CsvFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        // Nonpositive value is caught with its cell.
        let csv = "date,US,CN\n2001-01,1.0,-1.0\n";
        assert!(matches!(
            read_capital_series(csv.as_bytes()),
            Err(Error::NonpositiveCapitalization { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn jump_sample_round_trip() {
        let pairs = vec![
            (
                SimplexPoint::two_asset(0.2).unwrap(),
                SimplexPoint::two_asset(0.21).unwrap(),
            ),
            (
                SimplexPoint::two_asset(0.21).unwrap(),
                SimplexPoint::two_asset(0.19).unwrap(),
            ),
        ];
        let sample = JumpSample::new(
            pairs,
            vec![0.5, 0.5],
            SampleProvenance {
                seed: Some(1),
                path_count: Some(1),
                description: "test".into(),
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_jump_sample(&mut buf, &sample, &[]).unwrap();
        let back = read_jump_sample(buf.as_slice(), "test").unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.pairs()[1].1.coords()[0], 0.19);
        assert_eq!(back.weights()[0], 0.5);
    }
}
