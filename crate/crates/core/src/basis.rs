//! Dense complex matrices and the two ordered operator bases of `M_N(C)`.
//!
//! Indices are 0-based throughout the library API. A label `Pair(i, j)` names
//! `E_ij` in the standard basis. In the Gell-Mann basis the same label names
//! the symmetric matrix when `i < j`, the antisymmetric matrix when `i > j`,
//! and the diagonal matrix `lambda_nn` when `i == j` (only for `n < N - 1`).
//! [`Label::Identity`] is the normalized identity `I_N / sqrt(N)`.
//!
//! Both orderings pair `(i, j)` with `(j, i)` for `i < j` in lexicographic
//! order and then append the diagonal labels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GkslError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entry magnitude, used to scale absolute tolerances.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `tol` scaled by the largest entry of `m`, never below `tol` itself.
pub fn scaled_tol(tol: f64, m: &CMatrix) -> f64 {
    tol * max_abs(m).max(1.0)
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Positive semidefinite within `tol`: Hermitian and
/// `min eig >= -tol * max(1, max eig)`.
pub fn is_psd(a: &CMatrix, tol: f64) -> bool {
    if !is_hermitian(a, tol) {
        return false;
    }
    let vals = hermitian_eigenvalues(a);
    match (vals.first(), vals.last()) {
        (Some(&lo), Some(&hi)) => lo >= -tol * hi.max(1.0),
        _ => true,
    }
}

/// `E_ij` in `M_n(C)`.
pub fn std_basis(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

/// Hilbert-Schmidt inner product `Tr(A* B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    if a.shape() != b.shape() {
        return Err(GkslError::ShapeMismatch(format!(
            "hs_inner: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub(crate) fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Pair(usize, usize),
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Standard,
    GellMann,
}

/// Ordered basis of `M_N(C)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisOrdering {
    kind: BasisKind,
    n: usize,
    labels: Vec<Label>,
}

impl BasisOrdering {
    pub fn standard(n: usize) -> Self {
        let mut labels = off_diagonal_labels(n);
        labels.extend((0..n).map(|k| Label::Pair(k, k)));
        Self { kind: BasisKind::Standard, n, labels }
    }

    pub fn gell_mann(n: usize) -> Self {
        let mut labels = off_diagonal_labels(n);
        labels.extend((0..n.saturating_sub(1)).map(|k| Label::Pair(k, k)));
        labels.push(Label::Identity);
        Self { kind: BasisKind::GellMann, n, labels }
    }

    pub fn new(kind: BasisKind, n: usize) -> Self {
        match kind {
            BasisKind::Standard => Self::standard(n),
            BasisKind::GellMann => Self::gell_mann(n),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, pos: usize) -> Label {
        self.labels[pos]
    }

    /// Position of `label`, or `None` if the label is not part of this basis.
    pub fn position(&self, label: Label) -> Option<usize> {
        let n = self.n;
        let off = n * (n.saturating_sub(1));
        match (self.kind, label) {
            (_, Label::Pair(i, j)) if i >= n || j >= n => None,
            (_, Label::Pair(i, j)) if i != j => Some(pair_position(n, i.min(j), i.max(j)) + usize::from(i > j)),
            (BasisKind::Standard, Label::Pair(k, _)) => Some(off + k),
            (BasisKind::Standard, Label::Identity) => None,
            (BasisKind::GellMann, Label::Pair(k, _)) => (k + 1 < n).then_some(off + k),
            (BasisKind::GellMann, Label::Identity) => Some(n * n - 1),
        }
    }

    /// The basis matrix at `pos`.
    pub fn element(&self, pos: usize) -> CMatrix {
        let label = self.labels[pos];
        match self.kind {
            BasisKind::Standard => match label {
                Label::Pair(i, j) => std_basis(self.n, i, j),
                Label::Identity => unreachable!("standard ordering has no identity label"),
            },
            BasisKind::GellMann => gell_mann_unchecked(label, self.n),
        }
    }

    /// Coordinates of `a` in this (orthonormal) basis.
    pub fn coordinates(&self, a: &CMatrix) -> CVector {
        match self.kind {
            BasisKind::Standard => CVector::from_iterator(
                self.len(),
                self.labels.iter().map(|l| match *l {
                    Label::Pair(i, j) => a[(i, j)],
                    Label::Identity => ZERO,
                }),
            ),
            BasisKind::GellMann => CVector::from_iterator(
                self.len(),
                (0..self.len()).map(|p| gm_inner(self.labels[p], self.n, a)),
            ),
        }
    }

    /// Inverse of [`coordinates`](Self::coordinates).
    pub fn assemble(&self, coords: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for (p, c) in coords.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            match (self.kind, self.labels[p]) {
                (BasisKind::Standard, Label::Pair(i, j)) => out[(i, j)] += *c,
                _ => out += self.element(p) * *c,
            }
        }
        out
    }
}

fn off_diagonal_labels(n: usize) -> Vec<Label> {
    let mut labels = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in (i + 1)..n {
            labels.push(Label::Pair(i, j));
            labels.push(Label::Pair(j, i));
        }
    }
    labels
}

/// Position of the `(i, j)` label (with `i < j`) among the off-diagonal pairs.
fn pair_position(n: usize, i: usize, j: usize) -> usize {
    // pairs before row i: sum_{r<i} (n - 1 - r)
    let before = i * (2 * n - i - 1) / 2;
    2 * (before + (j - i - 1))
}

/// Generalized Gell-Mann matrix for `label` in dimension `n`.
pub fn gellmann(label: Label, n: usize) -> Result<CMatrix> {
    match label {
        Label::Pair(i, j) if i >= n || j >= n => Err(GkslError::IndexOutOfRange(format!(
            "Gell-Mann label ({i}, {j}) for N = {n}"
        ))),
        Label::Pair(i, j) if i == j && i + 1 >= n => Err(GkslError::IndexOutOfRange(format!(
            "diagonal Gell-Mann label ({i}, {i}) requires i < N - 1 = {}",
            n.saturating_sub(1)
        ))),
        Label::Identity if n == 0 => Err(GkslError::IndexOutOfRange("N = 0".into())),
        _ => Ok(gell_mann_unchecked(label, n)),
    }
}

fn gell_mann_unchecked(label: Label, n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(n, n);
    match label {
        Label::Pair(i, j) if i < j => {
            m[(i, j)] = Complex64::new(s, 0.0);
            m[(j, i)] = Complex64::new(s, 0.0);
        }
        Label::Pair(i, j) if i > j => {
            // (-i/sqrt2)(E_ji - E_ij)
            m[(j, i)] = Complex64::new(0.0, -s);
            m[(i, j)] = Complex64::new(0.0, s);
        }
        Label::Pair(k, _) => {
            let d = (k + 1) as f64;
            let c = 1.0 / (d * (d + 1.0)).sqrt();
            for r in 0..=k {
                m[(r, r)] = Complex64::new(c, 0.0);
            }
            m[(k + 1, k + 1)] = Complex64::new(-d * c, 0.0);
        }
        Label::Identity => {
            let c = 1.0 / (n as f64).sqrt();
            for r in 0..n {
                m[(r, r)] = Complex64::new(c, 0.0);
            }
        }
    }
    m
}

/// `<lambda_label, a>` computed from the sparse structure of the basis element.
fn gm_inner(label: Label, n: usize, a: &CMatrix) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match label {
        Label::Pair(i, j) if i < j => (a[(i, j)] + a[(j, i)]) * s,
        // conj of (-i/sqrt2) at (j,i) and (i/sqrt2) at (i,j)
        Label::Pair(i, j) if i > j => (a[(j, i)] * I - a[(i, j)] * I) * s,
        Label::Pair(k, _) => {
            let d = (k + 1) as f64;
            let c = 1.0 / (d * (d + 1.0)).sqrt();
            let head: Complex64 = (0..=k).map(|r| a[(r, r)]).sum();
            (head - a[(k + 1, k + 1)] * d) * c
        }
        Label::Identity => a.trace() / (n as f64).sqrt(),
    }
}

/// Coefficients of `E_ij` over the Gell-Mann ordering, from the closed-form
/// expansion (telescoping sum for the diagonal, `lambda_00 := 0`).
pub fn expand_standard_in_gellmann(i: usize, j: usize, n: usize) -> Result<CVector> {
    if i >= n || j >= n {
        return Err(GkslError::IndexOutOfRange(format!("E_({i},{j}) for N = {n}")));
    }
    let basis = BasisOrdering::gell_mann(n);
    let mut c = CVector::zeros(n * n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pos = |l: Label| basis.position(l).expect("valid Gell-Mann label");
    if i < j {
        c[pos(Label::Pair(i, j))] = Complex64::new(s, 0.0);
        c[pos(Label::Pair(j, i))] = Complex64::new(0.0, s);
    } else if i > j {
        c[pos(Label::Pair(j, i))] = Complex64::new(s, 0.0);
        c[pos(Label::Pair(i, j))] = Complex64::new(0.0, -s);
    } else {
        // 1-based j: -sqrt((j-1)/j) lambda_{j-1} + sum_{m=j}^{N-1} lambda_m / sqrt(m(m+1)) + I/N
        let jj = (j + 1) as f64;
        if j >= 1 {
            c[pos(Label::Pair(j - 1, j - 1))] = Complex64::new(-((jj - 1.0) / jj).sqrt(), 0.0);
        }
        for m in j..n.saturating_sub(1) {
            let mm = (m + 1) as f64;
            c[pos(Label::Pair(m, m))] = Complex64::new(1.0 / (mm * (mm + 1.0)).sqrt(), 0.0);
        }
        c[pos(Label::Identity)] = Complex64::new((n as f64).sqrt() / n as f64, 0.0);
    }
    Ok(c)
}

/// Unitary whose column `b` holds the coordinates of `to.element(b)` in `from`.
pub fn change_of_basis(from: &BasisOrdering, to: &BasisOrdering) -> Result<CMatrix> {
    if from.dim() != to.dim() {
        return Err(GkslError::ShapeMismatch(format!(
            "basis dimensions {} and {}",
            from.dim(),
            to.dim()
        )));
    }
    let len = from.len();
    let mut u = CMatrix::zeros(len, len);
    for b in 0..len {
        let coords = from.coordinates(&to.element(b));
        u.set_column(b, &coords);
    }
    Ok(u)
}

/// Re-express an operator on `M_N(C)` given in the `from` ordering in the
/// `to` ordering: `U* M U`.
pub fn operator_basis_change(m: &CMatrix, from: &BasisOrdering, to: &BasisOrdering) -> Result<CMatrix> {
    let len = from.len();
    if m.shape() != (len, len) {
        return Err(GkslError::ShapeMismatch(format!(
            "operator is {:?}, basis has {} elements",
            m.shape(),
            len
        )));
    }
    if from == to {
        return Ok(m.clone());
    }
    let u = change_of_basis(from, to)?;
    Ok(u.adjoint() * m * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRepr {
    /// Standard-basis coefficients `[[g_ij, alpha + i beta], [alpha - i beta, g_ji]]`.
    Standard,
    /// Gell-Mann coefficients `[[c_ij, a + i b], [a - i b, c_ji]]`.
    GellMann,
}

/// One `ij` block of a coefficient matrix, rows/columns ordered `(ij, ji)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block2 {
    pub entries: [[Complex64; 2]; 2],
    pub repr: BlockRepr,
}

impl Block2 {
    pub fn new(entries: [[Complex64; 2]; 2], repr: BlockRepr) -> Self {
        Self { entries, repr }
    }

    /// Standard-basis block from `gamma_ij`, `gamma_ji`, `alpha`, `beta`.
    pub fn standard(g_ij: f64, g_ji: f64, alpha: f64, beta: f64) -> Self {
        Self::new(
            [
                [Complex64::new(g_ij, 0.0), Complex64::new(alpha, beta)],
                [Complex64::new(alpha, -beta), Complex64::new(g_ji, 0.0)],
            ],
            BlockRepr::Standard,
        )
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let e = &self.entries;
        e[0][0].im.abs() <= tol && e[1][1].im.abs() <= tol && (e[0][1] - e[1][0].conj()).norm() <= tol
    }

    pub fn determinant(&self) -> Complex64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn to_matrix(&self) -> CMatrix {
        let e = &self.entries;
        CMatrix::from_row_slice(2, 2, &[e[0][0], e[0][1], e[1][0], e[1][1]])
    }
}

/// Equal-contribution conversion of an `ij` block between representations.
pub fn convert_block(b: Block2, target: BlockRepr) -> Block2 {
    if b.repr == target {
        return b;
    }
    let [[p, z], [w, q]] = b.entries;
    let half = 0.5;
    let entries = match target {
        // Gamma -> C:  (1/2)[[g+h+z+w, -i(g-h)+i(z-w)], [i(g-h)+i(z-w), g+h-z-w]]
        BlockRepr::GellMann => [
            [(p + q + z + w) * half, (-(p - q) * I + (z - w) * I) * half],
            [((p - q) * I + (z - w) * I) * half, (p + q - z - w) * half],
        ],
        // C -> Gamma:  (1/2)[[c+d+iz-iw, c-d-iz-iw], [c-d+iz+iw, c+d-iz+iw]]
        BlockRepr::Standard => [
            [(p + q + z * I - w * I) * half, (p - q - z * I - w * I) * half],
            [(p - q + z * I + w * I) * half, (p + q - z * I + w * I) * half],
        ],
    };
    Block2::new(entries, target)
}
