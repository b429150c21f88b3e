//! Field files, metadata sidecars and modulus CSVs.
//!
//! A field file is one JSON header line `{"n", "domain", "kind"}` followed by
//! one comma-separated line per lattice row, `y` outer and `x` inner. Exterior
//! nodes are written as `nan`, vector values as `v1;v2`, and every float with
//! 17 significant digits. All writers go through a temporary file that is
//! renamed into place on success.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Domain, Grid2D, NodeKind, ScalarField, VectorField2};
use crate::hamilton_jacobi::SolveMeta;
use crate::regularity::{BoundValue, ModulusReport};
use crate::scalar::Real;

/// Serializable form of [`Domain`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { radius: f64 },
    Rect { x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64 },
}

impl DomainSpec {
    pub fn to_domain<T: Real>(self) -> Domain<T> {
        match self {
            DomainSpec::Disk { radius } => Domain::disk(T::lit(radius)),
            DomainSpec::Rect { x_lo, x_hi, y_lo, y_hi } => Domain::rect(T::lit(x_lo), T::lit(x_hi), T::lit(y_lo), T::lit(y_hi)),
        }
    }

    pub fn from_domain<T: Real>(d: &Domain<T>) -> Self {
        match *d {
            Domain::Disk { radius } => DomainSpec::Disk { radius: radius.as_f64() },
            Domain::Rect { x_lo, x_hi, y_lo, y_hi } => {
                DomainSpec::Rect { x_lo: x_lo.as_f64(), x_hi: x_hi.as_f64(), y_lo: y_lo.as_f64(), y_hi: y_hi.as_f64() }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Vector,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n: usize,
    pub domain: DomainSpec,
    pub kind: FieldKind,
}

/// 17 significant digits; `nan`, `inf` and `-inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::InvalidInput(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn header_line<T: Real>(grid: &Grid2D<T>, kind: FieldKind) -> Result<String> {
    let h = FieldHeader { n: grid.n(), domain: DomainSpec::from_domain(grid.domain()), kind };
    Ok(serde_json::to_string(&h)?)
}

fn render<T: Real>(grid: &Grid2D<T>, kind: FieldKind, node: impl Fn(usize) -> String) -> Result<String> {
    let mut out = header_line(grid, kind)?;
    out.push('\n');
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if i > 0 {
                out.push(',');
            }
            let k = grid.index(i, j);
            if grid.kind(k) == NodeKind::Exterior {
                out.push_str("nan");
            } else {
                out.push_str(&node(k));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn scalar_field_to_string<T: Real>(field: &ScalarField<T>) -> Result<String> {
    render(field.grid(), FieldKind::Scalar, |k| fmt_f64(field.get(k).as_f64()))
}

pub fn vector_field_to_string<T: Real>(field: &VectorField2<T>) -> Result<String> {
    render(field.grid(), FieldKind::Vector, |k| {
        let v = field.get(k);
        format!("{};{}", fmt_f64(v[0].as_f64()), fmt_f64(v[1].as_f64()))
    })
}

pub fn write_scalar_field<T: Real>(path: &Path, field: &ScalarField<T>) -> Result<()> {
    write_atomic(path, scalar_field_to_string(field)?.as_bytes())
}

pub fn write_vector_field<T: Real>(path: &Path, field: &VectorField2<T>) -> Result<()> {
    write_atomic(path, vector_field_to_string(field)?.as_bytes())
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("bad number {tok:?}: {e}") })
}

/// Header, grid and per-node tokens; exterior tokens must be `nan`.
fn parse_body<T: Real>(text: &str, want: FieldKind) -> Result<(Arc<Grid2D<T>>, Vec<Option<String>>)> {
    let mut lines = text.lines();
    let head = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let header: FieldHeader = serde_json::from_str(head).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    if header.kind != want {
        return Err(Error::Parse { line: 1, msg: format!("expected a {want:?} field, found {:?}", header.kind) });
    }
    let grid = Arc::new(Grid2D::new(header.domain.to_domain::<T>(), header.n)?);
    let mut toks = vec![None; grid.len()];
    let mut rows = 0;
    for (j, l) in lines.enumerate() {
        let line = j + 2;
        if l.trim().is_empty() {
            continue;
        }
        if j >= grid.ny() {
            return Err(Error::Parse { line, msg: format!("more than {} rows", grid.ny()) });
        }
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != grid.nx() {
            return Err(Error::Parse { line, msg: format!("{} values, expected {}", cells.len(), grid.nx()) });
        }
        for (i, c) in cells.into_iter().enumerate() {
            let k = grid.index(i, j);
            let c = c.trim();
            if grid.kind(k) == NodeKind::Exterior {
                if c != "nan" {
                    return Err(Error::Parse { line, msg: format!("exterior node {i} must be nan, found {c:?}") });
                }
            } else {
                toks[k] = Some(c.to_string());
            }
        }
        rows += 1;
    }
    if rows != grid.ny() {
        return Err(Error::Parse { line: rows + 1, msg: format!("{rows} rows, expected {}", grid.ny()) });
    }
    Ok((grid, toks))
}

pub fn parse_scalar_field<T: Real>(text: &str) -> Result<ScalarField<T>> {
    let (grid, toks) = parse_body::<T>(text, FieldKind::Scalar)?;
    let mut values = vec![T::nan(); grid.len()];
    for (k, t) in toks.iter().enumerate() {
        if let Some(t) = t {
            values[k] = T::lit(parse_f64(t, grid.ij(k).1 + 2)?);
        }
    }
    ScalarField::from_values(grid, values)
}

pub fn parse_vector_field<T: Real>(text: &str) -> Result<VectorField2<T>> {
    let (grid, toks) = parse_body::<T>(text, FieldKind::Vector)?;
    let mut values = vec![[T::nan(); 2]; grid.len()];
    for (k, t) in toks.iter().enumerate() {
        if let Some(t) = t {
            let line = grid.ij(k).1 + 2;
            let (a, b) = t.split_once(';').ok_or(Error::Parse { line, msg: format!("vector value {t:?} lacks ';'") })?;
            values[k] = [T::lit(parse_f64(a, line)?), T::lit(parse_f64(b, line)?)];
        }
    }
    VectorField2::from_values(grid, values)
}

pub fn read_scalar_field<T: Real>(path: &Path) -> Result<ScalarField<T>> {
    parse_scalar_field(&fs::read_to_string(path)?)
}

pub fn read_vector_field<T: Real>(path: &Path) -> Result<VectorField2<T>> {
    parse_vector_field(&fs::read_to_string(path)?)
}

/// Metadata written next to a solver output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub cycles: usize,
    pub final_residual: f64,
    pub config: serde_json::Value,
    pub warnings: Vec<String>,
}

impl Sidecar {
    pub fn new(meta: &SolveMeta, config: serde_json::Value) -> Self {
        Sidecar { cycles: meta.cycles, final_residual: meta.final_residual, config, warnings: meta.warnings.clone() }
    }
}

pub const MODULUS_CSV_HEADER: &str = "r,osc_onesided,osc_twosided,bound,regime";

/// One row per radius; `bound` and `regime` are empty where `bound` returns `None`.
pub fn modulus_csv(report: &ModulusReport, bound: impl Fn(f64) -> Option<BoundValue>) -> String {
    let mut out = String::from(MODULUS_CSV_HEADER);
    out.push('\n');
    for i in 0..report.radii.len() {
        let r = report.radii[i];
        let (b, reg) = match bound(r) {
            Some(b) => (fmt_f64(b.value), b.regime.to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!("{},{},{},{b},{reg}\n", fmt_f64(r), fmt_f64(report.oscillations[i]), fmt_f64(report.twosided[i])));
    }
    out
}

/// Comma-joined rows under a fixed header, floats via [`fmt_f64`].
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        if r.len() != header.len() {
            return invalid(format!("row of {} values under {} columns", r.len(), header.len()));
        }
        out.push_str(&r.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}
