//! CSV tables of `f64` columns.
//!
//! Values are written with 17 significant digits, so output is
//! byte-identical for identical inputs and round-trips exactly.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use corrproj::evolution::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| format_value(x)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write to `path`, or to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => {
                let file = std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
                self.write(std::io::BufWriter::new(file))
            }
            None => self.write(std::io::stdout().lock()),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record.with_context(|| format!("{}: bad record {}", path.display(), line + 2))?;
            let row = record
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("{}: non-numeric value in row {}", path.display(), line + 2))?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let Some(k) = self.header.iter().position(|h| h == name) else {
            bail!("no column named {name:?} (have {})", self.header.join(", "));
        };
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// `t, tr_rho_1…n, p_e (dim 2 only), min_eig, total_trace, conserved_1…`.
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let first = &traj.states()[0];
    let n = first.n();
    let with_pe = first.dim_sys() == 2;
    let n_conserved = traj.diagnostics()[0].conserved.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("tr_rho_{i}")));
    if with_pe {
        header.push("p_e".into());
    }
    header.push("min_eig".into());
    header.push("total_trace".into());
    header.extend((1..=n_conserved).map(|k| format!("conserved_{k}")));
    let mut table = Table::new(header);
    for ((t, state), diag) in traj.times().iter().zip(traj.states()).zip(traj.diagnostics()) {
        let mut row = vec![*t];
        row.extend(state.traces());
        if with_pe {
            row.push(corrproj::evolution::excited_population(state));
        }
        row.push(diag.min_eigenvalue);
        row.push(diag.total_trace);
        row.extend(&diag.conserved);
        table.push(row);
    }
    table
}

/// Maximum absolute difference of `column` between two tables sharing a
/// time grid (to 1e-12).
pub fn column_deviation(a: &Table, b: &Table, column: &str) -> Result<f64> {
    let (ta, tb) = (a.column("t")?, b.column("t")?);
    ensure!(ta.len() == tb.len(), "time grids differ in length ({} vs {})", ta.len(), tb.len());
    for (k, (x, y)) in ta.iter().zip(&tb).enumerate() {
        ensure!((x - y).abs() <= 1e-12, "time grids differ at row {k}: {x} vs {y}");
    }
    let (ca, cb) = (a.column(column)?, b.column(column)?);
    let diffs = ca.iter().zip(&cb).map(|(x, y)| (x - y).abs());
    // a NaN anywhere must not be swallowed by `max`
    Ok(diffs.fold(0.0, |acc, d| if d.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(d) }))
}
