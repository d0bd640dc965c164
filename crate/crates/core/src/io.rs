//! File formats: ellipse/feature/LR/label CSVs, model JSON, report JSON.
//!
//! All floating-point output goes through [`fmt_f64`], which rounds to nine
//! significant digits and formats deterministically, so repeated runs over
//! the same inputs produce byte-identical files. Orientation angles cross
//! this boundary in degrees; everything inside the crate is radians.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Vector2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::eval::TippettCurves;
use crate::model::{GaussianModel, LRResult};
use crate::types::{Ellipse, FeatureKind, Mechanism};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{path}: expected header {expected:?}, found {found:?}")]
    Header {
        path: PathBuf,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}: {msg}")]
    Json { path: PathBuf, msg: String },
    #[error("{path}: invalid model: {msg}")]
    InvalidModel { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DataError + '_ {
    move |source| DataError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Formats a float with nine significant digits: fixed notation for
/// moderate magnitudes, scientific outside of them, trailing zeros trimmed.
/// `-0.0` prints as `0` so equal values always print identically.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:.8e}", v);
    let (mant, exp) = sci.split_once('e').expect("{:e} always contains an exponent");
    let mut exp: i32 = exp.parse().expect("exponent is an integer");
    let neg = mant.starts_with('-');
    let mut digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    if digits.len() == 10 {
        // 9.999999995 rounds up to a 10-digit mantissa ("10.00000000")
        digits.truncate(9);
        exp += 1;
    }
    debug_assert_eq!(digits.len(), 9);
    let body = if (-4..=12).contains(&exp) {
        let e = exp as isize;
        if e >= 8 {
            let mut s = digits;
            s.extend(std::iter::repeat('0').take((e - 8) as usize));
            s
        } else if e >= 0 {
            let (int, frac) = digits.split_at(e as usize + 1);
            trim_fraction(format!("{int}.{frac}"))
        } else {
            let zeros: String = std::iter::repeat('0').take((-e - 1) as usize).collect();
            trim_fraction(format!("0.{zeros}{digits}"))
        }
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        if tail.is_empty() {
            format!("{head}e{exp}")
        } else {
            format!("{head}.{tail}e{exp}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: String) -> String {
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// serde_json pretty formatter that routes every float through [`fmt_f64`].
/// Non-finite floats become `null`, as in stock serde_json.
struct NineSigFormatter {
    indent: usize,
    has_value: bool,
}

impl NineSigFormatter {
    fn new() -> Self {
        NineSigFormatter {
            indent: 0,
            has_value: false,
        }
    }

    fn newline<W: ?Sized + std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.indent {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for NineSigFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, _w: &mut W) -> std::io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, _w: &mut W) -> std::io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

/// Serializes to pretty JSON with nine-significant-digit floats and a
/// trailing newline.
pub fn to_json_9sig<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, NineSigFormatter::new());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// Writes a value as report-style JSON to a file.
pub fn write_json_9sig<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let s = to_json_9sig(value).map_err(|e| DataError::Json {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    fs::write(path, s).map_err(io_err(path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DataError::Json {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

const ELLIPSE_HEADER: [&str; 5] = ["x", "y", "a", "b", "phi"];

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<(), DataError> {
    let found_vec: Vec<String> = found.iter().map(|s| s.trim().to_string()).collect();
    if found_vec != expected {
        return Err(DataError::Header {
            path: path.to_path_buf(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found_vec,
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    name: &str,
    raw: &str,
) -> Result<T, DataError>
where
    T::Err: std::fmt::Display,
{
    raw.trim().parse().map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("bad {name} {raw:?}: {e}"),
    })
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Writes an ellipse table: header `x,y,a,b,phi`, orientation in degrees.
pub fn write_ellipse_csv(path: &Path, ellipses: &[Ellipse]) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("x,y,a,b,phi\n");
    for e in ellipses {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(e.x),
            fmt_f64(e.y),
            fmt_f64(e.a),
            fmt_f64(e.b),
            fmt_f64(e.phi_degrees())
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Reads an ellipse table written by [`write_ellipse_csv`] (or by hand).
/// Axes in either order are accepted; orientation is degrees and gets
/// wrapped into `[0, 180)`.
pub fn read_ellipse_csv(path: &Path) -> Result<Vec<Ellipse>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    check_header(path, rdr.headers().map_err(csv_err(path))?, &ELLIPSE_HEADER)?;
    let mut ellipses = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = record_line(&rec);
        if rec.len() != 5 {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        let mut vals = [0.0f64; 5];
        for (i, name) in ELLIPSE_HEADER.iter().enumerate() {
            vals[i] = parse_field(path, line, name, &rec[i])?;
        }
        let e = Ellipse::from_degrees(vals[0], vals[1], vals[2], vals[3], vals[4]).map_err(|r| {
            DataError::Parse {
                path: path.to_path_buf(),
                line,
                msg: r.to_string(),
            }
        })?;
        ellipses.push(e);
    }
    Ok(ellipses)
}

/// One row of the features CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub pattern_id: String,
    pub kind: FeatureKind,
    pub f1: f64,
    pub f2: f64,
    pub n_ellipses: usize,
    /// Empty in the file when unknown.
    pub mechanism: Option<Mechanism>,
}

const FEATURE_HEADER: [&str; 6] = ["pattern_id", "kind", "f1", "f2", "n_ellipses", "mechanism"];

/// Writes the features CSV: `pattern_id,kind,f1,f2,n_ellipses,mechanism`.
pub fn write_features_csv(path: &Path, rows: &[FeatureRecord]) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("pattern_id,kind,f1,f2,n_ellipses,mechanism\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.pattern_id,
            r.kind,
            fmt_f64(r.f1),
            fmt_f64(r.f2),
            r.n_ellipses,
            r.mechanism.as_ref().map_or("", |m| m.label())
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    check_header(path, rdr.headers().map_err(csv_err(path))?, &FEATURE_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = record_line(&rec);
        if rec.len() != 6 {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 6 fields, found {}", rec.len()),
            });
        }
        rows.push(FeatureRecord {
            pattern_id: rec[0].to_string(),
            kind: parse_field(path, line, "kind", &rec[1])?,
            f1: parse_field(path, line, "f1", &rec[2])?,
            f2: parse_field(path, line, "f2", &rec[3])?,
            n_ellipses: parse_field(path, line, "n_ellipses", &rec[4])?,
            mechanism: if rec[5].is_empty() {
                None
            } else {
                Some(Mechanism::from_label(&rec[5]))
            },
        });
    }
    Ok(rows)
}

/// Writes likelihood ratios: `pattern_id,kind,lr,log10_lr`.
pub fn write_lr_csv(path: &Path, results: &[LRResult]) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("pattern_id,kind,lr,log10_lr\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.pattern_id,
            r.kind,
            fmt_f64(r.lr),
            fmt_f64(r.log10_lr)
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

/// One row of the LR CSV, without hypothesis labels (those live in the
/// report; the CSV is the minimal interchange form).
#[derive(Debug, Clone, PartialEq)]
pub struct LrRecord {
    pub pattern_id: String,
    pub kind: FeatureKind,
    pub lr: f64,
    pub log10_lr: f64,
}

const LR_HEADER: [&str; 4] = ["pattern_id", "kind", "lr", "log10_lr"];

pub fn read_lr_csv(path: &Path) -> Result<Vec<LrRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    check_header(path, rdr.headers().map_err(csv_err(path))?, &LR_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = record_line(&rec);
        if rec.len() != 4 {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 4 fields, found {}", rec.len()),
            });
        }
        let lr_raw = &rec[2];
        let lr = if lr_raw == "inf" {
            f64::INFINITY
        } else if lr_raw == "-inf" {
            f64::NEG_INFINITY
        } else {
            parse_field(path, line, "lr", lr_raw)?
        };
        rows.push(LrRecord {
            pattern_id: rec[0].to_string(),
            kind: parse_field(path, line, "kind", &rec[1])?,
            lr,
            log10_lr: parse_field(path, line, "log10_lr", &rec[3])?,
        });
    }
    Ok(rows)
}

/// Writes a Tippett curve: `x,prop_h1_le,prop_h2_ge`.
pub fn write_tippett_csv(path: &Path, curves: &TippettCurves) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("x,prop_h1_le,prop_h2_ge\n");
    for p in &curves.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.prop_num_le),
            fmt_f64(p.prop_den_ge)
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Ground-truth sidecar row: labels and acquisition conditions by pattern id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub pattern_id: String,
    pub mechanism: Option<Mechanism>,
    pub distance_cm: Option<f64>,
    pub velocity_level: Option<String>,
}

const LABEL_HEADER: [&str; 4] = ["pattern_id", "mechanism", "distance_cm", "velocity_level"];

pub fn write_labels_csv(path: &Path, rows: &[LabelRecord]) -> Result<(), DataError> {
    let mut out = String::new();
    out.push_str("pattern_id,mechanism,distance_cm,velocity_level\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.pattern_id,
            r.mechanism.as_ref().map_or("", |m| m.label()),
            r.distance_cm.map_or(String::new(), fmt_f64),
            r.velocity_level.as_deref().unwrap_or("")
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Reads the label sidecar. Empty fields mean unknown.
pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    check_header(path, rdr.headers().map_err(csv_err(path))?, &LABEL_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = record_line(&rec);
        if rec.len() != 4 {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 4 fields, found {}", rec.len()),
            });
        }
        rows.push(LabelRecord {
            pattern_id: rec[0].to_string(),
            mechanism: if rec[1].is_empty() {
                None
            } else {
                Some(Mechanism::from_label(&rec[1]))
            },
            distance_cm: if rec[2].is_empty() {
                None
            } else {
                Some(parse_field(path, line, "distance_cm", &rec[2])?)
            },
            velocity_level: if rec[3].is_empty() {
                None
            } else {
                Some(rec[3].to_string())
            },
        });
    }
    Ok(rows)
}

/// Per-pattern metadata JSON, an alternative label source to the sidecar CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMeta {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<Mechanism>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity_level: Option<String>,
}

pub fn read_pattern_meta(path: &Path) -> Result<PatternMeta, DataError> {
    read_json(path)
}

pub fn write_pattern_meta(path: &Path, meta: &PatternMeta) -> Result<(), DataError> {
    write_json_9sig(path, meta)
}

/// On-disk form of a fitted model.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    kind: FeatureKind,
    hypothesis: String,
    mu: [f64; 2],
    sigma: [[f64; 2]; 2],
    n_train: usize,
    regularized: bool,
}

pub fn write_model_json(path: &Path, model: &GaussianModel) -> Result<(), DataError> {
    let file = ModelFile {
        kind: model.kind,
        hypothesis: model.hypothesis.clone(),
        mu: [model.mu.x, model.mu.y],
        sigma: [
            [model.sigma[(0, 0)], model.sigma[(0, 1)]],
            [model.sigma[(1, 0)], model.sigma[(1, 1)]],
        ],
        n_train: model.n_train,
        regularized: model.regularized,
    };
    write_json_9sig(path, &file)
}

/// Loads a model and checks it is usable: finite entries, symmetric and
/// positive-definite covariance.
pub fn read_model_json(path: &Path) -> Result<GaussianModel, DataError> {
    let f: ModelFile = read_json(path)?;
    let invalid = |msg: String| DataError::InvalidModel {
        path: path.to_path_buf(),
        msg,
    };
    let nums = [f.mu[0], f.mu[1], f.sigma[0][0], f.sigma[0][1], f.sigma[1][0], f.sigma[1][1]];
    if nums.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite entry in mu or sigma".into()));
    }
    let asym = (f.sigma[0][1] - f.sigma[1][0]).abs();
    let scale = f.sigma[0][1].abs().max(f.sigma[1][0].abs()).max(1.0);
    if asym > 1e-9 * scale {
        return Err(invalid(format!(
            "sigma is not symmetric: {} vs {}",
            f.sigma[0][1], f.sigma[1][0]
        )));
    }
    let det = f.sigma[0][0] * f.sigma[1][1] - f.sigma[0][1] * f.sigma[1][0];
    if !(f.sigma[0][0] > 0.0 && det > 0.0) {
        return Err(invalid("sigma is not positive definite".into()));
    }
    Ok(GaussianModel {
        mu: Vector2::new(f.mu[0], f.mu[1]),
        sigma: Matrix2::new(f.sigma[0][0], f.sigma[0][1], f.sigma[1][0], f.sigma[1][1]),
        n_train: f.n_train,
        kind: f.kind,
        hypothesis: f.hypothesis,
        regularized: f.regularized,
    })
}

/// Writes bytes only if the content differs, creating parent directories.
/// Handy for idempotent report output.
pub fn write_text(path: &Path, content: &str) -> Result<(), DataError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(content.as_bytes()).map_err(io_err(path))
}
