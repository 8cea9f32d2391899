//! CSV artifacts. Floats are written in their shortest round-tripping form so
//! identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use sqg_core::eigenbasis::EigenBasis;
use sqg_core::galerkin::{CouplingTensor, TrajectoryRecord};
use sqg_core::grid::GridField;
use sqg_core::spectral::SpectralField;

use crate::config::float;

/// One row of a bound-measurement report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRecord {
    pub quantity: String,
    pub x: [f64; 2],
    pub t: f64,
    pub measured: f64,
    pub bound_form: String,
}

/// One row of `commutator_report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub tag: &'static str,
    pub input_id: String,
    pub oversampling: usize,
    pub measured: f64,
    pub normalizer: f64,
    pub ratio: f64,
}

/// One row of `study.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub m: usize,
    pub quantity: &'static str,
    pub t_or_pair: String,
    pub value: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Generic table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// Basis manifest `j,p,q,lambda` for the first `count` modes.
pub fn write_basis(path: &Path, basis: &EigenBasis, count: usize) -> Result<()> {
    let rows = basis.modes()[..count]
        .iter()
        .map(|m| vec![m.index.to_string(), m.p.to_string(), m.q.to_string(), m.eigenvalue_int().to_string()]);
    write_table(path, &["j", "p", "q", "lambda"], rows)
}

/// `j,coeff` preceded by a comment line naming the basis.
pub fn write_spectral(path: &Path, field: &SpectralField) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# basis: dirichlet_square (0,pi)^2, M = {}", field.len())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "coeff"])?;
    for (j, c) in field.coeffs().iter().enumerate() {
        w.write_record([(j + 1).to_string(), float(*c)])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// Coefficients from a file written by [`write_spectral`].
pub fn read_spectral(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut coeffs = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let j: usize = rec[0].parse()?;
        anyhow::ensure!(j == i + 1, "{}: coefficients out of order at row {}", path.display(), i + 1);
        coeffs.push(rec[1].parse()?);
    }
    Ok(coeffs)
}

pub fn write_grid(path: &Path, field: &GridField) -> Result<()> {
    let rows = field.points().map(|(x, y, v)| vec![float(x), float(y), float(v)]);
    write_table(path, &["x", "y", "value"], rows)
}

/// `t,energy,hamiltonian[,theta_1..theta_m]`; coefficient columns need snapshots.
pub fn write_trajectory(path: &Path, record: &TrajectoryRecord, coefficients: bool) -> Result<()> {
    let mut header = vec!["t".to_string(), "energy".into(), "hamiltonian".into()];
    let with_theta = coefficients && record.snapshots.len() == record.len();
    if with_theta {
        header.extend((1..=record.m).map(|j| format!("theta_{j}")));
    }
    let mut w = writer(path)?;
    w.write_record(&header)?;
    for i in 0..record.len() {
        let mut row = vec![float(record.times[i]), float(record.energy[i]), float(record.hamiltonian[i])];
        if with_theta {
            row.extend(record.snapshots[i].iter().map(|&c| float(c)));
        }
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// Nonzero entries `j,k,l,gamma` (1-based).
pub fn write_tensor(path: &Path, tensor: &CouplingTensor) -> Result<()> {
    let rows = tensor
        .entries()
        .map(|(j, k, l, g)| vec![(j + 1).to_string(), (k + 1).to_string(), (l + 1).to_string(), float(g)]);
    write_table(path, &["j", "k", "l", "gamma"], rows)
}

pub fn write_bounds(path: &Path, rows: &[BoundRecord]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.quantity.clone(),
            float(r.x[0]),
            float(r.x[1]),
            float(r.t),
            float(r.measured),
            r.bound_form.clone(),
        ]
    });
    write_table(path, &["quantity", "x1", "x2", "t", "measured", "bound_form"], rows)
}

pub fn write_commutator_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.tag.to_string(),
            r.input_id.clone(),
            r.oversampling.to_string(),
            float(r.measured),
            float(r.normalizer),
            float(r.ratio),
        ]
    });
    write_table(path, &["tag", "input_id", "M", "measured", "normalizer", "ratio"], rows)
}

pub fn write_study(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| vec![r.m.to_string(), r.quantity.to_string(), r.t_or_pair.clone(), float(r.value)]);
    write_table(path, &["m", "quantity", "t_or_pair", "value"], rows)
}
