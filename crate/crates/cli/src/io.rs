//! CSV artifacts. Every number is written with 17 significant digits.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};

use thermoinv::model::{Measurements, SamplePoint};
use thermoinv::rules::LadderStep;

pub const MEASUREMENTS_HEADER: [&str; 3] = ["x", "t", "u"];
pub const RECONSTRUCTION_HEADER: [&str; 3] = ["s", "f_hat", "f_true"];
pub const TRACE_HEADER: [&str; 2] = ["alpha", "objective"];
pub const FIGURE_HEADER: [&str; 3] = ["series", "x", "y"];

pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        bail!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            header.join(","),
            found.join(",")
        );
    }
    Ok(rdr)
}

fn parse(field: &str, path: &Path, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .with_context(|| format!("{}:{}: `{}` is not a number", path.display(), line, field))
}

pub fn write_measurements(path: &Path, m: &Measurements) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(MEASUREMENTS_HEADER)?;
    for (p, u) in m.points().iter().zip(m.values()) {
        w.write_record([number(p.x), number(p.t), number(*u)])?;
    }
    w.flush()?;
    Ok(())
}

pub struct MeasurementRows {
    pub points: Vec<SamplePoint>,
    pub values: Vec<f64>,
}

pub fn read_measurements(path: &Path) -> Result<MeasurementRows> {
    let mut rdr = reader(path, &MEASUREMENTS_HEADER)?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed row {}", path.display(), i + 2))?;
        if record.len() != 3 {
            bail!(
                "{}:{}: expected 3 columns, found {}",
                path.display(),
                i + 2,
                record.len()
            );
        }
        let x = parse(&record[0], path, i + 2)?;
        let t = parse(&record[1], path, i + 2)?;
        let u = parse(&record[2], path, i + 2)?;
        if !(x.is_finite() && t.is_finite() && u.is_finite()) {
            bail!("{}:{}: non-finite value", path.display(), i + 2);
        }
        points.push(SamplePoint { x, t });
        values.push(u);
    }
    if points.is_empty() {
        bail!("{}: no measurement rows", path.display());
    }
    Ok(MeasurementRows { points, values })
}

pub fn write_reconstruction(path: &Path, nodes: &[f64], f_hat: &[f64], f_true: Option<&[f64]>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RECONSTRUCTION_HEADER)?;
    for (j, (&s, &f)) in nodes.iter().zip(f_hat).enumerate() {
        let truth = f_true.map(|t| number(t[j])).unwrap_or_default();
        w.write_record([number(s), number(f), truth])?;
    }
    w.flush()?;
    Ok(())
}

pub struct ReconstructionRows {
    pub nodes: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub f_true: Option<Vec<f64>>,
}

pub fn read_reconstruction(path: &Path) -> Result<ReconstructionRows> {
    let mut rdr = reader(path, &RECONSTRUCTION_HEADER)?;
    let (mut nodes, mut f_hat, mut f_true) = (Vec::new(), Vec::new(), Vec::new());
    let mut has_truth = true;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        nodes.push(parse(&record[0], path, i + 2)?);
        f_hat.push(parse(&record[1], path, i + 2)?);
        match record.get(2).filter(|s| !s.is_empty()) {
            Some(v) => f_true.push(parse(v, path, i + 2)?),
            None => has_truth = false,
        }
    }
    Ok(ReconstructionRows {
        nodes,
        f_hat,
        f_true: has_truth.then_some(f_true),
    })
}

pub fn write_trace(path: &Path, steps: &[LadderStep]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER)?;
    for s in steps {
        w.write_record([number(s.alpha), number(s.objective)])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format figure data: one row per plotted point.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureRow {
    pub series: String,
    pub x: String,
    pub y: String,
}

pub fn write_figure(path: &Path, rows: &[FigureRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(FIGURE_HEADER)?;
    for r in rows {
        w.write_record([&r.series, &r.x, &r.y])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_figure(path: &Path) -> Result<Vec<FigureRow>> {
    let mut rdr = reader(path, &FIGURE_HEADER)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            Ok(FigureRow {
                series: r[0].to_owned(),
                x: r[1].to_owned(),
                y: r[2].to_owned(),
            })
        })
        .collect()
}
