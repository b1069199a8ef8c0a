//! JSON spec and result files.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major arrays of
//! rows, and every index in a file is 1-based. Floats are written with 17
//! significant digits (`d.dddddddddddddddde±x`), so output is byte-stable
//! for a fixed input and tolerance.
//!
//! Spec file:
//!
//! ```json
//! {
//!   "N": 2,
//!   "basis": "standard",
//!   "H": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
//!   "gamma": {
//!     "format": "blocks",
//!     "pairs": [{"i": 1, "j": 2, "block": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}],
//!     "diag": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
//!   }
//! }
//! ```
//!
//! With `"basis": "standard"` (the default), `gamma` is `Gamma` in the
//! standard ordering: `"dense"` takes the full `N^2 x N^2` matrix, `"blocks"`
//! takes the `ij` blocks (rows `(ij, ji)`, `i < j`) and the `N x N` block
//! `Gamma^D` with entries `gamma_{kkll}`. Omitted blocks are zero.
//!
//! With `"basis": "gellmann"`, `gamma` is the coefficient matrix `C` on the
//! traceless Gell-Mann labels: `"dense"` is `(N^2 - 1) x (N^2 - 1)`, pair
//! blocks are on `(lambda_ij, lambda_ji)` and `"diag"` is the
//! `(N - 1) x (N - 1)` block on the diagonal labels.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::basis::{self, BasisOrdering, Block2, BlockRepr, CMatrix, Label};
use crate::error::{GkslError, Result};
use crate::generator::{self, GellMannSpec, GeneratorSpec};

pub type CPair = [f64; 2];
pub type MatrixJson = Vec<Vec<CPair>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    #[default]
    Standard,
    Gellmann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisName>,
    #[serde(rename = "H")]
    pub h: MatrixJson,
    pub gamma: GammaFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase", deny_unknown_fields)]
pub enum GammaFile {
    Dense {
        matrix: MatrixJson,
    },
    Blocks {
        #[serde(default)]
        pairs: Vec<PairEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diag: Option<MatrixJson>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub block: MatrixJson,
}

fn parse_err(path: impl Into<String>, message: impl Into<String>) -> GkslError {
    GkslError::Parse { path: path.into(), message: message.into() }
}

pub fn c(z: Complex64) -> CPair {
    [z.re, z.im]
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|col| c(m[(r, col)])).collect()).collect()
}

/// Dense matrix from rows, checking the shape and naming `field` on error.
pub fn matrix_from_json(rows: &MatrixJson, nrows: usize, ncols: usize, field: &str) -> Result<CMatrix> {
    if rows.len() != nrows {
        return Err(parse_err(field, format!("expected {nrows} rows, found {}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(parse_err(format!("{field}[{r}]"), format!("expected {ncols} entries, found {}", row.len())));
        }
        if let Some(col) = row.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(parse_err(format!("{field}[{r}][{col}]"), "non-finite value"));
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, col| {
        let z = rows[r][col];
        Complex64::new(z[0], z[1])
    }))
}

impl SpecFile {
    /// Parses JSON text; errors name the field path and line/column.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            parse_err(if path.is_empty() { ".".into() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            GkslError::Parse { path: field, message } => {
                GkslError::Parse { path: format!("{}: {field}", path.display()), message }
            }
            other => other,
        })
    }

    pub fn basis_name(&self) -> BasisName {
        self.basis.unwrap_or_default()
    }

    /// The standard-basis generator described by the file.
    pub fn to_generator(&self) -> Result<GeneratorSpec> {
        let n = self.n;
        if n == 0 {
            return Err(parse_err("N", "must be at least 1"));
        }
        let h = matrix_from_json(&self.h, n, n, "H")?;
        if !basis::is_hermitian(&h, basis::scaled_tol(crate::DEFAULT_TOL, &h)) {
            return Err(GkslError::InvalidSpec("H is not Hermitian".into()));
        }
        match self.basis_name() {
            BasisName::Standard => {
                let mut spec = GeneratorSpec::new(h, CMatrix::zeros(n * n, n * n))?;
                match &self.gamma {
                    GammaFile::Dense { matrix } => {
                        let g = matrix_from_json(matrix, n * n, n * n, "gamma.matrix")?;
                        let (h, _) = spec.into_parts();
                        spec = GeneratorSpec::new(h, g)?;
                    }
                    GammaFile::Blocks { pairs, diag } => {
                        for (idx, (i, j, b)) in checked_pairs(pairs, n)?.into_iter().enumerate() {
                            spec.set_pair_block(i, j, b).map_err(|e| parse_err(format!("gamma.pairs[{idx}]"), e.to_string()))?;
                        }
                        if let Some(d) = diag {
                            spec.set_gamma_diag_block(&matrix_from_json(d, n, n, "gamma.diag")?)?;
                        }
                    }
                }
                Ok(spec)
            }
            BasisName::Gellmann => {
                let m = n * n - 1;
                let cm = match &self.gamma {
                    GammaFile::Dense { matrix } => matrix_from_json(matrix, m, m, "gamma.matrix")?,
                    GammaFile::Blocks { pairs, diag } => {
                        let gm = BasisOrdering::gell_mann(n);
                        let mut cm = CMatrix::zeros(m, m);
                        for (i, j, b) in checked_pairs(pairs, n)? {
                            let p = gm.position(Label::Pair(i, j)).expect("pair label");
                            let q = gm.position(Label::Pair(j, i)).expect("pair label");
                            let e = b.entries;
                            cm[(p, p)] = e[0][0];
                            cm[(p, q)] = e[0][1];
                            cm[(q, p)] = e[1][0];
                            cm[(q, q)] = e[1][1];
                        }
                        if let Some(d) = diag {
                            let off = n * (n - 1);
                            let d = matrix_from_json(d, n - 1, n - 1, "gamma.diag")?;
                            cm.view_mut((off, off), (n - 1, n - 1)).copy_from(&d);
                        }
                        cm
                    }
                };
                Ok(GellMannSpec::new(h, cm)?.to_standard())
            }
        }
    }

    /// Standard-basis file for `spec`: blocks when `Gamma` is pair block
    /// diagonal, dense otherwise.
    pub fn from_generator(spec: &GeneratorSpec, tol: f64) -> Self {
        let n = spec.dim();
        let gamma = if generator::classify_pair_block_diagonal_with_tol(spec, tol).is_pbd {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let b = spec.pair_block(i, j).expect("i < j < N").to_matrix();
                    if b.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
                        pairs.push(PairEntry { i: i + 1, j: j + 1, block: matrix_to_json(&b) });
                    }
                }
            }
            GammaFile::Blocks { pairs, diag: Some(matrix_to_json(&spec.gamma_diag_block())) }
        } else {
            GammaFile::Dense { matrix: matrix_to_json(spec.gamma()) }
        };
        SpecFile { n, basis: None, h: matrix_to_json(spec.h()), gamma }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    /// SHA-256 of the normalized JSON rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// 0-based `(i, j, block)` from file entries; enforces `1 <= i < j <= N`.
fn checked_pairs(pairs: &[PairEntry], n: usize) -> Result<Vec<(usize, usize, Block2)>> {
    let mut out = Vec::with_capacity(pairs.len());
    for (idx, p) in pairs.iter().enumerate() {
        let field = format!("gamma.pairs[{idx}]");
        if p.i == 0 || p.j == 0 || p.i > n || p.j > n {
            return Err(parse_err(field, format!("indices ({}, {}) outside 1..={n}", p.i, p.j)));
        }
        if p.i >= p.j {
            return Err(parse_err(field, format!("pair entries need i < j, got ({}, {})", p.i, p.j)));
        }
        let b = matrix_from_json(&p.block, 2, 2, &format!("{field}.block"))?;
        let entries = [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]];
        out.push((p.i - 1, p.j - 1, Block2::new(entries, BlockRepr::Standard)));
    }
    Ok(out)
}

/// Sets entries below `rel * max(1, max|m|)` to zero, clearing roundoff.
pub fn flush_small(m: &CMatrix, rel: f64) -> CMatrix {
    let t = rel * basis::max_abs(m).max(1.0);
    m.map(|z| Complex64::new(if z.re.abs() <= t { 0.0 } else { z.re }, if z.im.abs() <= t { 0.0 } else { z.im }))
}

/// Serializes with 17 significant digits per float; objects are indented,
/// arrays of scalars and rows of `[re, im]` pairs stay on one line.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

fn format_number(n: &serde_json::Number) -> String {
    if n.is_f64() {
        let x = n.as_f64().expect("f64");
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    } else {
        n.to_string()
    }
}

fn is_flat(v: &Value, depth: usize) -> bool {
    match v {
        Value::Object(_) => false,
        Value::Array(items) => depth > 0 && items.iter().all(|x| is_flat(x, depth - 1)),
        _ => true,
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n("  ", k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => write!(out, "{b}").expect("string write"),
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if is_flat(v, 2) => {
            out.push('[');
            for (k, x) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, x, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(key).expect("string"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Reads a density matrix file: a bare `N x N` matrix of `[re, im]` pairs.
pub fn read_state(path: &Path, n: usize) -> Result<CMatrix> {
    let text = std::fs::read_to_string(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let rows: MatrixJson = serde_path_to_error::deserialize(de)
        .map_err(|e| parse_err(format!("{}: {}", path.display(), e.path()), e.into_inner().to_string()))?;
    matrix_from_json(&rows, n, n, &format!("{}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultFile {
    pub command: String,
    pub input: Option<String>,
    pub spec_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<KernelJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenpairs: Option<Vec<EigenPairJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digraph: Option<DigraphJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<InvariantJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosscheck: Option<CrosscheckJson>,
    pub diagnostics: Diagnostics,
}

impl ResultFile {
    pub fn new(command: &str, input: Option<&Path>, spec: &SpecFile, tol: f64) -> Self {
        Self {
            command: command.into(),
            input: input.map(|p| p.display().to_string()),
            spec_hash: spec.hash(),
            validation: None,
            kernel: None,
            oracle: None,
            eigenpairs: None,
            digraph: None,
            invariant: None,
            crosscheck: None,
            diagnostics: Diagnostics { tol, warnings: Vec::new() },
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub tol: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationJson {
    pub verdict: bool,
    pub psd_on_traceless: bool,
    pub real_trace: bool,
    pub min_eigenvalue: f64,
    pub compression_hermitian: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psd_witness: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_witness: Option<TraceWitnessJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceWitnessJson {
    pub a: MatrixJson,
    pub re_tr_gamma_a: f64,
    pub re_tr_gamma_i_a: f64,
}

impl From<&generator::ValidationReport> for ValidationJson {
    fn from(r: &generator::ValidationReport) -> Self {
        Self {
            verdict: r.verdict,
            psd_on_traceless: r.psd_on_traceless,
            real_trace: r.real_trace,
            min_eigenvalue: r.min_eigenvalue,
            compression_hermitian: r.compression_hermitian,
            psd_witness: r.psd_witness.as_ref().map(matrix_to_json),
            trace_witness: r.trace_witness.as_ref().map(|w| TraceWitnessJson {
                a: matrix_to_json(&w.a),
                re_tr_gamma_a: w.lhs,
                re_tr_gamma_i_a: w.rhs,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelJson {
    /// `"analytic"` or `"brute-force"`.
    pub method: String,
    pub dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
    pub elements: Vec<KernelElementJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelElementJson {
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<[usize; 2]>,
    pub matrix: MatrixJson,
}

impl KernelJson {
    pub fn from_basis(k: &crate::kernel::KernelBasis, fallback_reason: Option<String>) -> Self {
        use crate::kernel::{KernelMethod, KernelTag};
        let elements = k
            .basis
            .iter()
            .zip(&k.tags)
            .map(|(m, tag)| {
                let (component, pair) = match tag {
                    KernelTag::Diagonal { component } => (Some(component.iter().map(|v| v + 1).collect()), None),
                    KernelTag::SinkPair { k, l } | KernelTag::SingularTwoSink { k, l } => (None, Some([k + 1, l + 1])),
                    KernelTag::Numerical => (None, None),
                };
                KernelElementJson { tag: tag.name().into(), component, pair, matrix: matrix_to_json(&flush_small(m, 1e-15)) }
            })
            .collect();
        Self {
            method: match k.method {
                KernelMethod::Analytic => "analytic".into(),
                KernelMethod::BruteForce => "brute-force".into(),
            },
            dimension: k.dim(),
            fallback_reason,
            elements,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPairJson {
    pub pair: [usize; 2],
    /// `"+"` or `"-"`.
    pub branch: String,
    pub mu: CPair,
    pub matrix: MatrixJson,
    pub fallback: bool,
    /// `||L(A) - mu A||_max / ||A||_max`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigraphJson {
    pub vertices: usize,
    /// `[from, to, weight]`.
    pub edges: Vec<(usize, usize, f64)>,
    pub sccs: Vec<Vec<usize>>,
    pub tsccs: Vec<Vec<usize>>,
    pub sinks: Vec<usize>,
    pub singular_2sinks: Vec<[usize; 2]>,
    pub stationary: Vec<StationaryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryJson {
    pub component: Vec<usize>,
    pub rho: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantJson {
    pub holds: bool,
    pub is_state: bool,
    pub generator_residual: f64,
    pub times: Vec<f64>,
    pub evolution_residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosscheckJson {
    pub analytic_dimension: Option<usize>,
    pub oracle_dimension: usize,
    pub principal_angle_sines: Vec<f64>,
    pub max_principal_angle: Option<f64>,
    pub agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_error: Option<String>,
}
