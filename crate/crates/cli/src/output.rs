//! Run artifacts and CSV formats. Everything is assembled in memory and written only once
//! the computation succeeded, so a failed run leaves no partial output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use beltrami::{Field3D, SpectralModel, SurfaceProfile};
use num_complex::Complex64;

use crate::error::CliError;

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// A CSV table with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Outputs of one run: `report.txt`, `summary.csv` and files under `fields/`.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub report: String,
    pub summary: Option<Table>,
    pub fields: Vec<(String, Table)>,
}

impl Artifacts {
    pub fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }

    pub fn field(&mut self, name: impl Into<String>, t: Table) {
        self.fields.push((name.into(), t));
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
        let fields = out.join("fields");
        fs::create_dir_all(&fields).map_err(|e| io(&fields, e))?;
        let p = out.join("report.txt");
        fs::write(&p, &self.report).map_err(|e| io(&p, e))?;
        if let Some(s) = &self.summary {
            let p = out.join("summary.csv");
            fs::write(&p, s.to_bytes()).map_err(|e| io(&p, e))?;
        }
        for (name, t) in &self.fields {
            let p = fields.join(name);
            fs::write(&p, t.to_bytes()).map_err(|e| io(&p, e))?;
        }
        Ok(())
    }
}

/// Spectral coefficient dump `n1,n2,z_index,component,re,im` (components 1 to 3).
pub fn coefficient_table(field: &Field3D) -> Table {
    let mut t = Table::new(&["n1", "n2", "z_index", "component", "re", "im"]);
    for (idx, n1, n2) in field.modes().iter() {
        for c in 0..3 {
            for (j, v) in field.profile(c, idx).iter().enumerate() {
                if *v != Complex64::new(0.0, 0.0) {
                    t.push(vec![n1.to_string(), n2.to_string(), j.to_string(), (c + 1).to_string(), num(v.re), num(v.im)]);
                }
            }
        }
    }
    t
}

/// Surface coefficients `n1,n2,value` (nonzero entries only).
pub fn surface_table(eta: &SurfaceProfile) -> Table {
    let mut t = Table::new(&["n1", "n2", "value"]);
    for (idx, n1, n2) in eta.modes().iter() {
        let v = eta.coeffs()[idx];
        if v != 0.0 {
            t.push(vec![n1.to_string(), n2.to_string(), num(v)]);
        }
    }
    t
}

/// Physical velocity samples `x,y,z,u1,u2,u3` on a `points × points` cell grid and
/// `levels` flattened depths from the bottom to the surface.
pub fn physical_table(
    model: &SpectralModel,
    dotted: &Field3D,
    eta: &SurfaceProfile,
    points: usize,
    levels: usize,
) -> Result<Table, CliError> {
    let mut t = Table::new(&["x", "y", "z", "u1", "u2", "u3"]);
    let d = model.params.d;
    for a in 0..points {
        for b in 0..points {
            let x = model.lattice.point(a as f64 / points as f64, b as f64 / points as f64);
            for l in 0..levels {
                let zd = -d + d * l as f64 / (levels - 1) as f64;
                let (z, u) = model.eval_physical(dotted, eta, x, zd)?;
                t.push(vec![num(x[0]), num(x[1]), num(z), num(u[0]), num(u[1]), num(u[2])]);
            }
        }
    }
    Ok(t)
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Reads a CSV file with the given header into numeric rows.
pub fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut r = open(path)?;
    let h = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if h.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(bad(format!("expected header {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {s:?}: {e}", line + 2))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(vals);
    }
    Ok(rows)
}

/// Integer column value, rejecting fractional or out-of-range input.
pub fn int(path: &Path, v: f64) -> Result<i32, CliError> {
    if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
        return Err(CliError::Config(format!("{}: expected an integer, got {v}", path.display())));
    }
    Ok(v as i32)
}

/// Surface coefficients from `n1,n2,value`. Entries at `±k` must agree.
pub fn read_surface(path: &Path, n: usize) -> Result<SurfaceProfile, CliError> {
    let mut eta = SurfaceProfile::zeros(n);
    let mut seen = vec![false; eta.modes().len()];
    for r in read_rows(path, &["n1", "n2", "value"])? {
        let (n1, n2) = (int(path, r[0])?, int(path, r[1])?);
        let idx = eta.modes().index(n1, n2).ok_or_else(|| {
            CliError::Precondition(format!("{}: mode ({n1}, {n2}) lies outside truncation {n}", path.display()))
        })?;
        let neg = eta.modes().neg(idx);
        if seen[neg] && eta.coeffs()[neg] != r[2] {
            return Err(CliError::Precondition(format!("{}: coefficients at ±({n1}, {n2}) differ", path.display())));
        }
        seen[idx] = true;
        eta.set(n1, n2, r[2])?;
    }
    Ok(eta)
}

/// Dotted field from a coefficient dump. Absent entries are zero.
pub fn read_field(path: &Path, model: &SpectralModel) -> Result<Field3D, CliError> {
    let mut f = model.zero_field();
    for r in read_rows(path, &["n1", "n2", "z_index", "component", "re", "im"])? {
        let (n1, n2, j, c) = (int(path, r[0])?, int(path, r[1])?, int(path, r[2])?, int(path, r[3])?);
        let idx = model.modes().index(n1, n2).ok_or_else(|| {
            CliError::Precondition(format!("{}: mode ({n1}, {n2}) lies outside the truncation", path.display()))
        })?;
        if !(1..=3).contains(&c) || j < 0 || j as usize >= model.nz() {
            return Err(CliError::Precondition(format!(
                "{}: component {c} / z_index {j} outside 1..=3 / 0..{}",
                path.display(),
                model.nz()
            )));
        }
        f.profile_mut(c as usize - 1, idx)[j as usize] = Complex64::new(r[4], r[5]);
    }
    Ok(f)
}

/// Harmonic table `n,value` of a 2D surface, index `n + n_max`.
pub fn read_line_surface(path: &Path) -> Result<Vec<(i32, f64)>, CliError> {
    read_rows(path, &["n", "value"])?.into_iter().map(|r| Ok((int(path, r[0])?, r[1]))).collect()
}

/// Stream function profiles `n,z_index,re,im`.
pub fn read_psi(path: &Path) -> Result<Vec<(i32, usize, Complex64)>, CliError> {
    read_rows(path, &["n", "z_index", "re", "im"])?
        .into_iter()
        .map(|r| {
            let j = int(path, r[1])?;
            if j < 0 {
                return Err(CliError::Config(format!("{}: negative z_index", path.display())));
            }
            Ok((int(path, r[0])?, j as usize, Complex64::new(r[2], r[3])))
        })
        .collect()
}

/// Key-value lines for reports, padded for alignment.
pub fn kv(out: &mut String, key: &str, val: impl std::fmt::Display) {
    let _ = writeln!(out, "  {key:<28} {val}");
}

