//! JSON descriptors for operators, problems and Lur'e systems, and CSV
//! matrix/vector I/O.
//!
//! Matrices and vectors are given inline (nested arrays) or as `{"csv": path}`
//! with paths resolved against a base directory. Non-finite bounds can be
//! written as the strings `"inf"` / `"-inf"`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::composite::{KmSchedule, Parameter, ResolventProblem, SolveOptions, SumResolventProblem};
use crate::error::{Error, Result};
use crate::linop::LinearMap;
use crate::lure::LureSystem;
use crate::monotone::{
    BoxIndicatorSubdifferential, L1Subdifferential, LinearMonotoneOp, MonotoneOp, ResolventOnly, ScaledOp, ZeroOp,
};

/// A real that may be spelled as a string (`"inf"`, `"-inf"`, `"nan"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Text(#[serde(with = "real_text")] f64),
}

impl Real {
    pub fn value(self) -> f64 {
        match self {
            Real::Number(v) | Real::Text(v) => v,
        }
    }
}

mod real_text {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_real(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_real(&text).ok_or_else(|| de::Error::custom(format!("`{text}` is not a real number")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Inline(Vec<Vec<Real>>),
    Csv { csv: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSource {
    Inline(Vec<Real>),
    Csv { csv: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum OperatorKind {
    L1 {
        dim: usize,
    },
    Box {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<VectorSource>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<VectorSource>,
    },
    Linear {
        dim: usize,
        #[serde(rename = "A")]
        a: MatrixSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<VectorSource>,
    },
    Zero {
        dim: usize,
    },
}

/// An operator with an optional positive scale factor. `resolvent_only`
/// hides the value-set geometry (see [`ResolventOnly`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDescriptor {
    #[serde(flatten)]
    pub kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub resolvent_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    #[serde(rename = "C")]
    pub c: MatrixSource,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<OperatorDescriptor>,
    #[serde(rename = "M1", default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<OperatorDescriptor>,
    #[serde(rename = "M2", default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<OperatorDescriptor>,
    pub lambda: f64,
    pub y: VectorSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParameterDescriptor {
    Value(f64),
    Auto(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaDescriptor {
    Constant(f64),
    Sequence(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptionsDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<ParameterDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<ParameterDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_history: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricDescriptor {
    Matrix(MatrixSource),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LureDescriptor {
    #[serde(rename = "A")]
    pub a: MatrixSource,
    pub b: VectorSource,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub input: Option<MatrixSource>,
    #[serde(rename = "C")]
    pub c: MatrixSource,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<MetricDescriptor>,
    #[serde(rename = "M")]
    pub m: OperatorDescriptor,
}

/// Owned data of a resolvent or sum problem.
#[derive(Debug)]
pub struct LoadedProblem {
    pub c: LinearMap,
    pub op: Option<Box<dyn MonotoneOp>>,
    pub op1: Option<Box<dyn MonotoneOp>>,
    pub op2: Option<Box<dyn MonotoneOp>>,
    pub lambda: f64,
    pub y: DVector<f64>,
}

impl LoadedProblem {
    pub fn resolvent_problem(&self) -> Result<ResolventProblem<'_>> {
        let op = self
            .op
            .as_deref()
            .ok_or_else(|| Error::invalid("problem descriptor has no \"M\" operator"))?;
        ResolventProblem::new(&self.c, op, self.lambda, self.y.clone())
    }

    pub fn sum_problem(&self) -> Result<SumResolventProblem<'_>> {
        let (op1, op2) = match (self.op1.as_deref(), self.op2.as_deref()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid("sum problem needs both \"M1\" and \"M2\"")),
        };
        SumResolventProblem::new(&self.c, op1, op2, self.lambda, self.y.clone())
    }
}

pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => t.parse().ok(),
    }
}

/// 17 significant digits; parsing the output recovers the value exactly.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let context = path.display().to_string();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::format(context.clone(), format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                parse_real(field).ok_or_else(|| {
                    Error::format(context.clone(), format!("line {line}, column {}: `{field}` is not a number", j + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(context, "no data rows"));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::format(
            context,
            format!("row {} has {} entries, expected {width}", bad + 1, rows[bad].len()),
        ));
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let rows = csv_rows(path)?;
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(m, n, rows.into_iter().flatten()))
}

/// Single-column CSV; a single row is accepted as well.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let rows = csv_rows(path)?;
    if rows[0].len() == 1 {
        Ok(DVector::from_iterator(rows.len(), rows.into_iter().flatten()))
    } else if rows.len() == 1 {
        Ok(DVector::from_vec(rows.into_iter().next().unwrap_or_default()))
    } else {
        Err(Error::format(
            path.display().to_string(),
            format!("expected a single column, found {} columns", rows[0].len()),
        ))
    }
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| format_real(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn vector_to_csv(v: &DVector<f64>) -> String {
    v.iter().map(|&x| format_real(x) + "\n").collect()
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_text(path, &vector_to_csv(v))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Error::format(
            path.display().to_string(),
            format!("line {}, column {}: {e}", e.line(), e.column()),
        )
    })
}

impl MatrixSource {
    pub fn load(&self, base: &Path) -> Result<DMatrix<f64>> {
        match self {
            MatrixSource::Csv { csv } => read_matrix_csv(&resolve(base, csv)),
            MatrixSource::Inline(rows) => {
                if rows.is_empty() || rows[0].is_empty() {
                    return Err(Error::invalid("inline matrix is empty"));
                }
                let width = rows[0].len();
                if rows.iter().any(|r| r.len() != width) {
                    return Err(Error::invalid("inline matrix rows differ in length"));
                }
                Ok(DMatrix::from_row_iterator(
                    rows.len(),
                    width,
                    rows.iter().flatten().map(|r| r.value()),
                ))
            }
        }
    }

    pub fn inline(m: &DMatrix<f64>) -> Self {
        MatrixSource::Inline(
            (0..m.nrows())
                .map(|i| m.row(i).iter().map(|&v| Real::Number(v)).collect())
                .collect(),
        )
    }
}

impl VectorSource {
    pub fn load(&self, base: &Path) -> Result<DVector<f64>> {
        match self {
            VectorSource::Csv { csv } => read_vector_csv(&resolve(base, csv)),
            VectorSource::Inline(values) => Ok(DVector::from_iterator(values.len(), values.iter().map(|r| r.value()))),
        }
    }

    pub fn inline(v: &DVector<f64>) -> Self {
        VectorSource::Inline(v.iter().map(|&x| Real::Number(x)).collect())
    }
}

fn sized_vector(source: &Option<VectorSource>, base: &Path, dim: usize, default: f64, what: &str) -> Result<DVector<f64>> {
    match source {
        None => Ok(DVector::from_element(dim, default)),
        Some(s) => {
            let v = s.load(base)?;
            if v.len() != dim {
                return Err(Error::invalid(format!("{what} has length {}, expected {dim}", v.len())));
            }
            Ok(v)
        }
    }
}

impl OperatorDescriptor {
    pub fn build(&self, base: &Path) -> Result<Box<dyn MonotoneOp>> {
        let op: Box<dyn MonotoneOp> = match &self.kind {
            OperatorKind::L1 { dim } => Box::new(L1Subdifferential::new(*dim)),
            OperatorKind::Zero { dim } => Box::new(ZeroOp::new(*dim)),
            OperatorKind::Box { dim, lower, upper } => {
                let lo = sized_vector(lower, base, *dim, f64::NEG_INFINITY, "lower")?;
                let hi = sized_vector(upper, base, *dim, f64::INFINITY, "upper")?;
                Box::new(BoxIndicatorSubdifferential::new(lo, hi)?)
            }
            OperatorKind::Linear { dim, a, b } => {
                let a = a.load(base)?;
                if a.nrows() != *dim || a.ncols() != *dim {
                    return Err(Error::invalid(format!(
                        "A is {}x{}, expected {dim}x{dim}",
                        a.nrows(),
                        a.ncols()
                    )));
                }
                let b = sized_vector(b, base, *dim, 0.0, "b")?;
                Box::new(LinearMonotoneOp::new(a, b)?)
            }
        };
        if op.dim() == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        let op: Box<dyn MonotoneOp> = match self.scale {
            None => op,
            Some(s) => Box::new(ScaledOp::new(op, s)?),
        };
        Ok(if self.resolvent_only {
            Box::new(ResolventOnly::new(op))
        } else {
            op
        })
    }
}

impl ProblemDescriptor {
    pub fn load(&self, base: &Path) -> Result<LoadedProblem> {
        let build = |d: &Option<OperatorDescriptor>| d.as_ref().map(|d| d.build(base)).transpose();
        Ok(LoadedProblem {
            c: LinearMap::from_matrix(self.c.load(base)?)?,
            op: build(&self.m)?,
            op1: build(&self.m1)?,
            op2: build(&self.m2)?,
            lambda: self.lambda,
            y: self.y.load(base)?,
        })
    }
}

fn parameter(d: &Option<ParameterDescriptor>, name: &str) -> Result<Parameter> {
    match d {
        None => Ok(Parameter::Auto),
        Some(ParameterDescriptor::Value(v)) => Ok(Parameter::Value(*v)),
        Some(ParameterDescriptor::Auto(s)) if s.eq_ignore_ascii_case("auto") => Ok(Parameter::Auto),
        Some(ParameterDescriptor::Auto(s)) => Err(Error::invalid(format!("{name} must be a number or \"auto\", got \"{s}\""))),
    }
}

impl OptionsDescriptor {
    pub fn to_options(&self) -> Result<SolveOptions> {
        let defaults = SolveOptions::default();
        let opts = SolveOptions {
            mu: parameter(&self.mu, "mu")?,
            kappa: parameter(&self.kappa, "kappa")?,
            schedule: match &self.alpha {
                None => defaults.schedule,
                Some(AlphaDescriptor::Constant(a)) => KmSchedule::Constant(*a),
                Some(AlphaDescriptor::Sequence(v)) => KmSchedule::Sequence(v.clone()),
            },
            tol: self.tol.unwrap_or(defaults.tol),
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            record_history: self.record_history.unwrap_or(defaults.record_history),
        };
        opts.validate()?;
        Ok(opts)
    }
}

impl LureDescriptor {
    pub fn load(&self, base: &Path) -> Result<LureSystem> {
        let a = self.a.load(base)?;
        let b = self.b.load(base)?;
        let c = LinearMap::from_matrix(self.c.load(base)?)?;
        let op = self.m.build(base)?;
        let metric = match &self.p {
            None => None,
            Some(MetricDescriptor::Named(s)) if s == "auto-identity" || s == "identity" => None,
            Some(MetricDescriptor::Named(s)) => {
                return Err(Error::invalid(format!("P must be a matrix or \"auto-identity\", got \"{s}\"")))
            }
            Some(MetricDescriptor::Matrix(m)) => Some(m.load(base)?),
        };
        let n = b.len();
        let p = metric.unwrap_or_else(|| DMatrix::identity(n, n));
        let input = match &self.input {
            Some(m) => LinearMap::from_matrix(m.load(base)?)?,
            None => {
                let p_inv = p
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::invalid("P must be symmetric positive definite"))?
                    .inverse();
                LinearMap::from_matrix(p_inv * c.matrix().transpose())?
            }
        };
        LureSystem::new(a, b, input, c, p, op)
    }
}
