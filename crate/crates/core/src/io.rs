//! CSV ingestion and export.
//!
//! Long files have the columns `id, variable, t, value`, one row per observed
//! point. Wide files hold one variable: the first column is the id, the
//! remaining header cells are argument values and empty cells are missing.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::basis::SampledCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Long,
    Wide,
}

/// All curves of one variable, ids in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableCurves {
    pub variable: String,
    pub curves: Vec<SampledCurve>,
}

impl VariableCurves {
    pub fn ids(&self) -> Vec<String> {
        self.curves.iter().map(|c| c.id.clone()).collect()
    }
}

/// Reads `path`. Wide files are named after their file stem.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Vec<VariableCurves>> {
    let file = fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    match format {
        InputFormat::Long => read_long(file),
        InputFormat::Wide => {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(vec![read_wide(file, &name)?])
        }
    }
}

fn parse_number(cell: &str, line: u64, what: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data(format!("line {line}: cannot parse {what} `{cell}`")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn build_curve(id: String, mut points: Vec<(f64, f64)>, variable: &str) -> Result<SampledCurve> {
    if points.is_empty() {
        return Err(Error::Data(format!("curve `{id}` of `{variable}` has no observed points")));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Data(format!("curve `{id}` of `{variable}` has two values at t = {}", w[0].0)));
    }
    let (t, v) = points.into_iter().unzip();
    SampledCurve::new(id, t, v)
}

/// Id order and points per id for one variable.
type LongGroup = (Vec<String>, HashMap<String, Vec<(f64, f64)>>);

/// Long format: `id, variable, t, value` with a header row.
pub fn read_long<R: Read>(reader: R) -> Result<Vec<VariableCurves>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 4 {
        return Err(Error::Data(format!(
            "line 1: long format needs columns id, variable, t, value; found {} columns",
            headers.len()
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, LongGroup> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            return Err(Error::Data(format!("line {line}: expected 4 fields, found {}", rec.len())));
        }
        let id = rec[0].trim().to_string();
        let var = rec[1].trim().to_string();
        if id.is_empty() || var.is_empty() {
            return Err(Error::Data(format!("line {line}: empty id or variable")));
        }
        let t = parse_number(&rec[2], line, "argument")?;
        if rec[3].trim().is_empty() {
            continue;
        }
        let v = parse_number(&rec[3], line, "value")?;
        let entry = groups.entry(var.clone()).or_insert_with(|| {
            order.push(var.clone());
            (Vec::new(), HashMap::new())
        });
        entry
            .1
            .entry(id.clone())
            .or_insert_with(|| {
                entry.0.push(id.clone());
                Vec::new()
            })
            .push((t, v));
    }
    if order.is_empty() {
        return Err(Error::Data("no records".into()));
    }
    order
        .into_iter()
        .map(|var| {
            let (ids, mut pts) = groups.remove(&var).unwrap();
            let curves = ids
                .into_iter()
                .map(|id| {
                    let p = pts.remove(&id).unwrap();
                    build_curve(id, p, &var)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(VariableCurves { variable: var, curves })
        })
        .collect()
}

/// Wide format: header `id, t_1, ..., t_m`, one row per curve.
pub fn read_wide<R: Read>(reader: R, variable: &str) -> Result<VariableCurves> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Data("line 1: wide format needs an id column and at least one argument".into()));
    }
    let args: Vec<f64> = headers.iter().skip(1).map(|h| parse_number(h, 1, "argument")).collect::<Result<_>>()?;
    let mut curves = Vec::new();
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
        }
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::Data(format!("line {line}: empty id")));
        }
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(Error::Data(format!("line {line}: id `{id}` already used on line {prev}")));
        }
        let mut points = Vec::with_capacity(args.len());
        for (cell, &t) in rec.iter().skip(1).zip(&args) {
            if !cell.trim().is_empty() {
                points.push((t, parse_number(cell, line, "value")?));
            }
        }
        curves.push(build_curve(id, points, variable)?);
    }
    if curves.is_empty() {
        return Err(Error::Data(format!("`{variable}`: no curves")));
    }
    Ok(VariableCurves { variable: variable.to_string(), curves })
}

/// A numeric table with row ids and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledMatrix {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    pub values: Array2<f64>,
}

/// Plain data matrix: header `id, name_1, ..., name_m`, no missing cells.
pub fn read_matrix<R: Read>(reader: R) -> Result<LabelledMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Data("line 1: need an id column and at least one variable".into()));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                rec.len()
            )));
        }
        ids.push(rec[0].trim().to_string());
        for (cell, name) in rec.iter().skip(1).zip(&columns) {
            if cell.trim().is_empty() {
                return Err(Error::Data(format!("line {line}: missing value for `{name}`")));
            }
            flat.push(parse_number(cell, line, "value")?);
        }
    }
    if ids.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    let values = Array2::from_shape_vec((ids.len(), columns.len()), flat).expect("row lengths checked");
    Ok(LabelledMatrix { ids, columns, values })
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = temp_name(path);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(e)
    })
}

pub(crate) fn temp_name(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// CSV with a leading `id` column and named value columns.
pub fn labelled_matrix_csv(ids: &[String], columns: &[String], m: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("id").chain(columns.iter().map(String::as_str)))?;
    for (id, row) in ids.iter().zip(m.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Archetypoid table: position, 0-based row index, id.
pub fn archetypoids_csv(indices: &[usize], ids: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["archetypoid", "index", "id"])?;
    for (j, &i) in indices.iter().enumerate() {
        w.write_record([(j + 1).to_string(), i.to_string(), ids[i].clone()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
