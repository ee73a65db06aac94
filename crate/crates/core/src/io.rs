//! CSV interchange. Numbers are written with 17 significant digits so a round trip is exact.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::flow::PolyCurve;
use crate::geometry::{CurveSample, VecN};
use crate::shrinker::ClosureReport;

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Csv(e.to_string())
}

/// `{:.16e}`: shortest fixed width that reproduces every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn axis_names(dim: usize) -> Vec<String> {
    match dim {
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        n => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

/// Header for a curve of dimension `dim`: `t,x,y,dx,dy,ddx,ddy` in the plane,
/// `t,x,y,z,...` in space and `t,x1..xn,dx1..dxn,ddx1..ddxn` beyond.
pub fn curve_header(dim: usize) -> Vec<String> {
    let axes = axis_names(dim);
    let mut h = vec!["t".to_string()];
    h.extend(axes.iter().cloned());
    h.extend(axes.iter().map(|a| format!("d{a}")));
    h.extend(axes.iter().map(|a| format!("dd{a}")));
    h
}

pub fn write_curve_csv<W: Write>(out: W, curve: &CurveSample<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(curve_header(curve.dim())).map_err(csv_err)?;
    for i in 0..curve.len() {
        let mut row = vec![fmt_f64(curve.params()[i])];
        for block in [&curve.positions()[i], &curve.d1()[i], &curve.d2()[i]] {
            row.extend(block.as_slice().iter().map(|&x| fmt_f64(x)));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

fn read_table<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Csv(format!("row {}: `{f}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn column_index(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

/// Infers the dimension from a curve header and checks the column layout.
fn curve_dim(header: &[String]) -> Result<usize> {
    if header.len() < 7 || !(header.len() - 1).is_multiple_of(3) {
        return Err(Error::Csv(format!(
            "curve header needs `t` plus 3 blocks of coordinates, got {} columns",
            header.len()
        )));
    }
    let dim = (header.len() - 1) / 3;
    if header != curve_header(dim).as_slice() {
        return Err(Error::Csv(format!(
            "unexpected curve header `{}`, expected `{}`",
            header.join(","),
            curve_header(dim).join(",")
        )));
    }
    Ok(dim)
}

pub fn read_curve_csv<R: Read>(input: R) -> Result<CurveSample<f64>> {
    let (header, rows) = read_table(input)?;
    let dim = curve_dim(&header)?;
    let mut params = Vec::with_capacity(rows.len());
    let (mut pos, mut d1, mut d2) = (Vec::new(), Vec::new(), Vec::new());
    for row in &rows {
        params.push(row[0]);
        pos.push(VecN::from_slice(&row[1..1 + dim])?);
        d1.push(VecN::from_slice(&row[1 + dim..1 + 2 * dim])?);
        d2.push(VecN::from_slice(&row[1 + 2 * dim..1 + 3 * dim])?);
    }
    CurveSample::new(params, pos, d1, d2).map_err(|e| Error::Csv(e.to_string()))
}

/// Points from either a curve CSV or a snapshot CSV (`x,y[,z]` or `x1,..,xn`).
pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<VecN<f64>>> {
    let (header, rows) = read_table(input)?;
    let dim = if column_index(&header, "t").is_some() {
        curve_dim(&header)?
    } else {
        let dim = header.len();
        if dim < 2 || header != axis_names(dim).as_slice() {
            return Err(Error::Csv(format!("unexpected point header `{}`", header.join(","))));
        }
        dim
    };
    let offset = usize::from(column_index(&header, "t").is_some());
    rows.iter()
        .map(|r| VecN::from_slice(&r[offset..offset + dim]))
        .collect()
}

pub fn write_points_csv<W: Write>(out: W, curve: &PolyCurve<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(axis_names(curve.dim())).map_err(csv_err)?;
    for v in curve.vertices() {
        w.write_record(v.as_slice().iter().map(|&x| fmt_f64(x))).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub const CLOSURE_HEADER: [&str; 6] = ["alpha0", "period", "delta_theta", "rotation_ratio", "closure_gap", "closed"];

/// One row per scan point; failed points get `NaN` entries and `closed = false`.
pub fn write_closure_csv<W: Write>(out: W, rows: &[(f64, Result<ClosureReport<f64>>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CLOSURE_HEADER).map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), fmt_f64);
    for (alpha0, res) in rows {
        let row = match res {
            Ok(r) => [
                fmt_f64(r.alpha0),
                opt(r.period_t),
                opt(r.delta_theta),
                opt(r.rotation_ratio),
                fmt_f64(r.closure_gap),
                r.closed.to_string(),
            ],
            Err(_) => [
                fmt_f64(*alpha0),
                "NaN".into(),
                "NaN".into(),
                "NaN".into(),
                "NaN".into(),
                "false".into(),
            ],
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
