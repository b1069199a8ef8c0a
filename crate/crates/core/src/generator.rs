//! GKSL generators in standard-basis form
//! `L(rho) = -i[H, rho] + 1/2 sum gamma_{ijkl} D_{ijkl}(rho)`
//! with `D_{ijkl}(rho) = 2 E_ij rho E_lk - rho E_lk E_ij - E_lk E_ij rho`.
//!
//! `gamma_{ijkl}` is the entry of `Gamma` in row `(i, j)` and column `(k, l)`
//! of the standard ordering.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{
    self, commutator, is_hermitian, scaled_tol, std_basis, BasisKind, BasisOrdering,
    Block2, BlockRepr, CMatrix, Label, I, ZERO,
};
use crate::error::{GkslError, Result};
use crate::DEFAULT_TOL;

/// Hamiltonian plus standard-basis coefficient matrix. May hold invalid
/// candidates; see [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    n: usize,
    h: CMatrix,
    gamma: CMatrix,
}

impl GeneratorSpec {
    pub fn new(h: CMatrix, gamma: CMatrix) -> Result<Self> {
        Self::with_tol(h, gamma, DEFAULT_TOL)
    }

    pub fn with_tol(h: CMatrix, gamma: CMatrix, tol: f64) -> Result<Self> {
        let n = h.nrows();
        if n == 0 || !h.is_square() {
            return Err(GkslError::ShapeMismatch(format!("H must be square and non-empty, got {:?}", h.shape())));
        }
        if gamma.shape() != (n * n, n * n) {
            return Err(GkslError::ShapeMismatch(format!(
                "Gamma must be {0}x{0} for N = {n}, got {1:?}",
                n * n,
                gamma.shape()
            )));
        }
        if !is_hermitian(&h, scaled_tol(tol, &h)) {
            return Err(GkslError::InvalidSpec("H is not Hermitian".into()));
        }
        Ok(Self { n, h, gamma })
    }

    /// `H = 0`, `Gamma = 0`.
    pub fn zero(n: usize) -> Self {
        Self { n, h: CMatrix::zeros(n, n), gamma: CMatrix::zeros(n * n, n * n) }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn into_parts(self) -> (CMatrix, CMatrix) {
        (self.h, self.gamma)
    }

    pub fn set_h(&mut self, h: CMatrix) -> Result<()> {
        *self = Self::new(h, self.gamma.clone())?;
        Ok(())
    }

    pub fn basis(&self) -> BasisOrdering {
        BasisOrdering::standard(self.n)
    }

    fn pos(&self, i: usize, j: usize) -> usize {
        BasisOrdering::standard(self.n).position(Label::Pair(i, j)).expect("index in range")
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&x| x >= self.n) {
            Some(x) => Err(GkslError::IndexOutOfRange(format!("index {x} for N = {}", self.n))),
            None => Ok(()),
        }
    }

    /// `gamma_{ijkl}`.
    pub fn gamma_at(&self, i: usize, j: usize, k: usize, l: usize) -> Result<Complex64> {
        self.check(&[i, j, k, l])?;
        Ok(self.gamma[(self.pos(i, j), self.pos(k, l))])
    }

    pub fn set_gamma_at(&mut self, i: usize, j: usize, k: usize, l: usize, v: Complex64) -> Result<()> {
        self.check(&[i, j, k, l])?;
        let (r, c) = (self.pos(i, j), self.pos(k, l));
        self.gamma[(r, c)] = v;
        Ok(())
    }

    /// The `ij` block (rows/columns `(ij, ji)`) of `Gamma^O`, `i < j`.
    pub fn pair_block(&self, i: usize, j: usize) -> Result<Block2> {
        self.check(&[i, j])?;
        if i >= j {
            return Err(GkslError::InvalidArgument(format!("pair block needs i < j, got ({i}, {j})")));
        }
        let (a, b) = (self.pos(i, j), self.pos(j, i));
        let g = &self.gamma;
        Ok(Block2::new([[g[(a, a)], g[(a, b)]], [g[(b, a)], g[(b, b)]]], BlockRepr::Standard))
    }

    /// Overwrite the `ij` block; a Gell-Mann block is converted first.
    pub fn set_pair_block(&mut self, i: usize, j: usize, block: Block2) -> Result<()> {
        self.check(&[i, j])?;
        if i >= j {
            return Err(GkslError::InvalidArgument(format!("pair block needs i < j, got ({i}, {j})")));
        }
        let b = basis::convert_block(block, BlockRepr::Standard).entries;
        let (p, q) = (self.pos(i, j), self.pos(j, i));
        self.gamma[(p, p)] = b[0][0];
        self.gamma[(p, q)] = b[0][1];
        self.gamma[(q, p)] = b[1][0];
        self.gamma[(q, q)] = b[1][1];
        Ok(())
    }

    /// `Gamma^D` as an `N x N` matrix with entries `gamma_{kkll}`.
    pub fn gamma_diag_block(&self) -> CMatrix {
        let off = self.n * (self.n - 1);
        self.gamma.view((off, off), (self.n, self.n)).into_owned()
    }

    pub fn set_gamma_diag_block(&mut self, d: &CMatrix) -> Result<()> {
        if d.shape() != (self.n, self.n) {
            return Err(GkslError::ShapeMismatch(format!("Gamma^D must be {0}x{0}", self.n)));
        }
        let off = self.n * (self.n - 1);
        self.gamma.view_mut((off, off), (self.n, self.n)).copy_from(d);
        Ok(())
    }

    /// Weight `gamma_ij` of the edge `j -> i`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        let p = self.pos(i, j);
        self.gamma[(p, p)].re
    }

    /// Same generator in Gell-Mann form. The identity row and column of the
    /// transformed coefficient matrix are dropped, so this is faithful only
    /// when `Gamma(I) = 0` and `Tr Gamma(A) = 0` (e.g. after [`canonicalize`]).
    pub fn to_gell_mann(&self) -> GellMannSpec {
        let ct = gamma_in_gell_mann(&self.gamma, self.n);
        let m = self.n * self.n - 1;
        GellMannSpec { n: self.n, h: self.h.clone(), c: ct.view((0, 0), (m, m)).into_owned() }
    }
}

/// Hamiltonian plus Gell-Mann coefficient matrix `C` on the traceless labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GellMannSpec {
    n: usize,
    h: CMatrix,
    c: CMatrix,
}

impl GellMannSpec {
    pub fn new(h: CMatrix, c: CMatrix) -> Result<Self> {
        let n = h.nrows();
        if n == 0 || !h.is_square() {
            return Err(GkslError::ShapeMismatch(format!("H must be square and non-empty, got {:?}", h.shape())));
        }
        let m = n * n - 1;
        if c.shape() != (m, m) {
            return Err(GkslError::ShapeMismatch(format!("C must be {m}x{m} for N = {n}, got {:?}", c.shape())));
        }
        if !is_hermitian(&h, scaled_tol(DEFAULT_TOL, &h)) {
            return Err(GkslError::InvalidSpec("H is not Hermitian".into()));
        }
        Ok(Self { n, h, c })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    /// `Gamma = U* C~ U` with `C~` the identity-annihilating extension of `C`.
    pub fn to_standard(&self) -> GeneratorSpec {
        let nn = self.n * self.n;
        let mut ct = CMatrix::zeros(nn, nn);
        ct.view_mut((0, 0), (nn - 1, nn - 1)).copy_from(&self.c);
        GeneratorSpec { n: self.n, h: self.h.clone(), gamma: gamma_from_gell_mann(&ct, self.n) }
    }

    /// Valid iff `C` is Hermitian positive semidefinite within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        basis::is_psd(&self.c, scaled_tol(tol, &self.c))
    }
}

fn gamma_in_gell_mann(gamma: &CMatrix, n: usize) -> CMatrix {
    basis::operator_basis_change(gamma, &BasisOrdering::standard(n), &BasisOrdering::gell_mann(n))
        .expect("matching dimensions")
}

fn gamma_from_gell_mann(ct: &CMatrix, n: usize) -> CMatrix {
    basis::operator_basis_change(ct, &BasisOrdering::gell_mann(n), &BasisOrdering::standard(n))
        .expect("matching dimensions")
}

fn shape_check(spec: &GeneratorSpec, rho: &CMatrix) -> Result<()> {
    if rho.shape() != (spec.n, spec.n) {
        return Err(GkslError::ShapeMismatch(format!("rho is {:?}, N = {}", rho.shape(), spec.n)));
    }
    Ok(())
}

/// `L(rho)` for the standard-basis form.
pub fn apply_generator(spec: &GeneratorSpec, rho: &CMatrix) -> Result<CMatrix> {
    shape_check(spec, rho)?;
    let n = spec.n;
    let std = BasisOrdering::standard(n);
    let pos: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).map(|j| std.position(Label::Pair(i, j)).unwrap()).collect()).collect();
    let g = &spec.gamma;

    // sum gamma_{ijkl} E_ij rho E_lk   and   G = sum gamma_{ijkl} E_lk E_ij
    let mut jump = CMatrix::zeros(n, n);
    let mut gmat = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let row = pos[i][j];
            for k in 0..n {
                for l in 0..n {
                    let c = g[(row, pos[k][l])];
                    if c == ZERO {
                        continue;
                    }
                    jump[(i, k)] += c * rho[(j, l)];
                    if i == k {
                        gmat[(l, j)] += c;
                    }
                }
            }
        }
    }
    let half = Complex64::new(0.5, 0.0);
    Ok(commutator(&spec.h, rho) * (-I) + jump - (rho * &gmat + &gmat * rho) * half)
}

/// `D_{ijkl}(rho) = 2 E_ij rho E_lk - rho E_lk E_ij - E_lk E_ij rho`.
pub fn lindblad_dissipator(i: usize, j: usize, k: usize, l: usize, rho: &CMatrix) -> Result<CMatrix> {
    let n = rho.nrows();
    if !rho.is_square() {
        return Err(GkslError::ShapeMismatch(format!("rho is {:?}", rho.shape())));
    }
    if let Some(x) = [i, j, k, l].into_iter().find(|&x| x >= n) {
        return Err(GkslError::IndexOutOfRange(format!("index {x} for N = {n}")));
    }
    let eij = std_basis(n, i, j);
    let elk = std_basis(n, l, k);
    let two = Complex64::new(2.0, 0.0);
    Ok(&eij * rho * &elk * two - rho * &elk * &eij - &elk * &eij * rho)
}

/// Scalar `c` with `D^lambda_{nn}(lambda_kl) = c lambda_kl`, where
/// `D^lambda_{nn}(rho) = 2 lambda_nn rho lambda_nn - {lambda_nn^2, rho}`.
///
/// Indices are 0-based: `n` names the diagonal label `lambda_nn` with
/// `n < N - 1`, and `k < l < N`.
pub fn gm_diag_dissipator_coeff(n: usize, k: usize, l: usize, dim: usize) -> Result<f64> {
    if n + 1 >= dim || k >= l || l >= dim {
        return Err(GkslError::IndexOutOfRange(format!("(n, k, l) = ({n}, {k}, {l}) for N = {dim}")));
    }
    // 1-based case table
    let (n, k, l) = ((n + 1) as f64, k + 1, l + 1);
    let ni = n as usize;
    Ok(if ni + 1 == k {
        -n / (n + 1.0)
    } else if k <= ni && ni + 2 <= l {
        -1.0 / (n * (n + 1.0))
    } else if ni + 1 == l {
        -(n + 1.0) / n
    } else {
        0.0
    })
}

/// Matrix of `L` in the standard ordering: column `b` holds the coordinates
/// of `L(E_b)`.
pub fn superoperator(spec: &GeneratorSpec) -> CMatrix {
    let n = spec.n;
    let std = BasisOrdering::standard(n);
    let mut s = CMatrix::zeros(n * n, n * n);
    for b in 0..std.len() {
        let out = apply_generator(spec, &std.element(b)).expect("shapes agree");
        s.set_column(b, &std.coordinates(&out));
    }
    s
}

/// Matrix of `L` in the requested ordering.
pub fn superoperator_in(spec: &GeneratorSpec, kind: BasisKind) -> CMatrix {
    let s = superoperator(spec);
    match kind {
        BasisKind::Standard => s,
        BasisKind::GellMann => basis::operator_basis_change(
            &s,
            &BasisOrdering::standard(spec.n),
            &BasisOrdering::gell_mann(spec.n),
        )
        .expect("matching dimensions"),
    }
}

/// Subspaces used for compressions `P L|_V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    /// `O`: span of `E_ij`, `i != j`.
    OffDiagonal,
    /// `D`: diagonal matrices.
    Diagonal,
    /// `D0`: traceless diagonal matrices (span of `lambda_nn`).
    TracelessDiagonal,
}

/// Compression of the superoperator to `v`, in the standard ordering for
/// `O` and `D` and in the Gell-Mann ordering for `D0`.
pub fn compression(spec: &GeneratorSpec, v: Subspace) -> CMatrix {
    let n = spec.n;
    let off = n * (n - 1);
    match v {
        Subspace::OffDiagonal => superoperator(spec).view((0, 0), (off, off)).into_owned(),
        Subspace::Diagonal => superoperator(spec).view((off, off), (n, n)).into_owned(),
        Subspace::TracelessDiagonal => {
            superoperator_in(spec, BasisKind::GellMann).view((off, off), (n - 1, n - 1)).into_owned()
        }
    }
}

/// Failing trace-condition witness: `Re Tr Gamma(A)` versus `Re Tr(Gamma(I) A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceWitness {
    pub a: CMatrix,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub psd_on_traceless: bool,
    pub real_trace: bool,
    pub verdict: bool,
    /// Smallest eigenvalue of the compression of `Gamma` to traceless matrices.
    pub min_eigenvalue: f64,
    /// Whether that compression is Hermitian within tolerance.
    pub compression_hermitian: bool,
    /// Eigenmatrix for `min_eigenvalue` when the PSD flag fails.
    pub psd_witness: Option<CMatrix>,
    pub trace_witness: Option<TraceWitness>,
    pub tol: f64,
}

/// `Gamma(A)` with `Gamma` acting on coordinates in the standard basis.
pub fn gamma_action(spec: &GeneratorSpec, a: &CMatrix) -> Result<CMatrix> {
    shape_check(spec, a)?;
    let std = spec.basis();
    Ok(std.assemble(&(&spec.gamma * std.coordinates(a))))
}

/// Check both conditions for `Gamma` to define a GKSL generator.
pub fn validate(spec: &GeneratorSpec) -> ValidationReport {
    validate_with_tol(spec, DEFAULT_TOL)
}

pub fn validate_with_tol(spec: &GeneratorSpec, tol: f64) -> ValidationReport {
    let n = spec.n;
    let gm = BasisOrdering::gell_mann(n);
    let m = n * n - 1;
    let ct = gamma_in_gell_mann(&spec.gamma, n);
    let comp = ct.view((0, 0), (m, m)).into_owned();
    let stol = scaled_tol(tol, &spec.gamma);

    let compression_hermitian = is_hermitian(&comp, stol);
    let (min_eigenvalue, max_eigenvalue, witness_vec) = if m == 0 {
        (0.0, 0.0, None)
    } else {
        let herm = (&comp + comp.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        let (imin, &lo) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi, Some(eig.eigenvectors.column(imin).into_owned()))
    };
    let psd_on_traceless = compression_hermitian && min_eigenvalue >= -tol * max_eigenvalue.max(1.0);
    let psd_witness = if psd_on_traceless {
        None
    } else {
        witness_vec.map(|v| {
            let mut coords = basis::CVector::zeros(n * n);
            coords.rows_mut(0, m).copy_from(&v);
            gm.assemble(&coords)
        })
    };

    let gi = gamma_action(spec, &CMatrix::identity(n, n)).expect("shapes agree");
    let mut trace_witness = None;
    for p in 0..gm.len() {
        let a = gm.element(p);
        let lhs = gamma_action(spec, &a).expect("shapes agree").trace().re;
        let rhs = (&gi * &a).trace().re;
        if (lhs - rhs).abs() > stol {
            trace_witness = Some(TraceWitness { a, lhs, rhs });
            break;
        }
    }
    let real_trace = trace_witness.is_none();
    ValidationReport {
        psd_on_traceless,
        real_trace,
        verdict: psd_on_traceless && real_trace,
        min_eigenvalue,
        compression_hermitian,
        psd_witness,
        trace_witness,
        tol,
    }
}

/// Canonical representative: traceless `H`, `Gamma >= 0`, `Gamma(I) = 0`,
/// and `Tr Gamma(A) = 0` for all `A`, with the same superoperator.
pub fn canonicalize(spec: &GeneratorSpec) -> Result<GeneratorSpec> {
    canonicalize_with_tol(spec, DEFAULT_TOL)
}

pub fn canonicalize_with_tol(spec: &GeneratorSpec, tol: f64) -> Result<GeneratorSpec> {
    let report = validate_with_tol(spec, tol);
    if !report.verdict {
        return Err(GkslError::InvalidSpec(format!(
            "cannot canonicalize: psd_on_traceless = {}, real_trace = {}",
            report.psd_on_traceless, report.real_trace
        )));
    }
    let n = spec.n;
    let gm = BasisOrdering::gell_mann(n);
    let mut ct = gamma_in_gell_mann(&spec.gamma, n);
    let id = n * n - 1;
    let sqrt_n = (n as f64).sqrt();

    // imaginary parts of the identity row/column act as a commutator
    let mut h = spec.h.clone();
    for p in 0..id {
        let shift = (ct[(id, p)] - ct[(p, id)]).im / (2.0 * sqrt_n);
        if shift != 0.0 {
            h += gm.element(p) * Complex64::new(shift, 0.0);
        }
    }
    for p in 0..=id {
        ct[(id, p)] = ZERO;
        ct[(p, id)] = ZERO;
    }
    let tr = h.trace() / n as f64;
    for r in 0..n {
        h[(r, r)] -= tr;
    }
    // exact Hermitian H
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(GeneratorSpec { n, h, gamma: gamma_from_gell_mann(&ct, n) })
}

/// Pair-block-diagonal classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PbdClass {
    pub is_pbd: bool,
    pub h_diagonal: bool,
}

pub fn classify_pair_block_diagonal(spec: &GeneratorSpec) -> PbdClass {
    classify_pair_block_diagonal_with_tol(spec, DEFAULT_TOL)
}

pub fn classify_pair_block_diagonal_with_tol(spec: &GeneratorSpec, tol: f64) -> PbdClass {
    let std = spec.basis();
    let stol = scaled_tol(tol, &spec.gamma);
    let mut is_pbd = true;
    'outer: for (r, lr) in std.labels().iter().enumerate() {
        for (c, lc) in std.labels().iter().enumerate() {
            let (Label::Pair(i, j), Label::Pair(k, l)) = (*lr, *lc) else { unreachable!() };
            let allowed = match (i == j, k == l) {
                (true, true) => true,
                (false, false) => (i == k && j == l) || (i == l && j == k),
                _ => false,
            };
            if !allowed && spec.gamma[(r, c)].norm() > stol {
                is_pbd = false;
                break 'outer;
            }
        }
    }
    let htol = scaled_tol(tol, &spec.h);
    let n = spec.n;
    let h_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || spec.h[(i, j)].norm() <= htol));
    PbdClass { is_pbd, h_diagonal }
}

/// `ij` block for the jump `a|i> + b|j>  ->  c|i> + d|j>` at rate `gamma`.
pub fn superposition_block(a: Complex64, b: Complex64, c: Complex64, d: Complex64, gamma: f64) -> Result<Block2> {
    let tiny = 1e-300;
    if a.norm() <= tiny || b.norm() <= tiny {
        return Err(GkslError::InvalidArgument("source amplitudes a and b must be nonzero".into()));
    }
    if ((a.norm_sqr() + b.norm_sqr()) - 1.0).abs() > DEFAULT_TOL || ((c.norm_sqr() + d.norm_sqr()) - 1.0).abs() > DEFAULT_TOL
    {
        return Err(GkslError::InvalidArgument("superposition amplitudes must be normalized".into()));
    }
    if gamma < 0.0 {
        return Err(GkslError::InvalidArgument(format!("rate must be nonnegative, got {gamma}")));
    }
    let g = Complex64::new(gamma, 0.0);
    Ok(Block2::new(
        [
            [g * c * c.conj() / (b * b.conj()), g * c * d.conj() / (a.conj() * b)],
            [g * c.conj() * d / (a * b.conj()), g * d * d.conj() / (a * a.conj())],
        ],
        BlockRepr::Standard,
    ))
}

/// `L(I_N) = 0` within tolerance.
pub fn identity_preserving(spec: &GeneratorSpec) -> bool {
    identity_preserving_with_tol(spec, DEFAULT_TOL)
}

pub fn identity_preserving_with_tol(spec: &GeneratorSpec, tol: f64) -> bool {
    let out = apply_generator(spec, &CMatrix::identity(spec.n, spec.n)).expect("shapes agree");
    basis::max_abs(&out) <= tol * basis::max_abs(&spec.gamma).max(basis::max_abs(&spec.h)).max(1.0)
}

/// The `D` compression with imaginary parts dropped.
pub fn diagonal_compression_real(spec: &GeneratorSpec) -> DMatrix<f64> {
    compression(spec, Subspace::Diagonal).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ONE;
    use crate::fixtures;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    #[test]
    fn hamiltonian_only_action() {
        let h = CMatrix::from_diagonal(&basis::CVector::from_vec(vec![c(1.0, 0.0), c(-0.5, 0.0), c(2.0, 0.0)]));
        let spec = GeneratorSpec::new(h, CMatrix::zeros(9, 9)).unwrap();
        let out = apply_generator(&spec, &std_basis(3, 0, 2)).unwrap();
        let expect = std_basis(3, 0, 2) * c(0.0, -(1.0 - 2.0));
        assert!(max_diff(&out, &expect) < 1e-15);
        let zero = GeneratorSpec::zero(3);
        let rho = CMatrix::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        assert_eq!(apply_generator(&zero, &rho).unwrap(), CMatrix::zeros(3, 3));
    }

    #[test]
    fn single_rate_moves_population() {
        let mut spec = GeneratorSpec::zero(2);
        spec.set_gamma_at(0, 1, 0, 1, ONE).unwrap();
        let out = apply_generator(&spec, &std_basis(2, 1, 1)).unwrap();
        assert!(max_diff(&out, &(std_basis(2, 0, 0) - std_basis(2, 1, 1))) < 1e-15);
        assert!(apply_generator(&spec, &CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn dissipator_examples() {
        let e = |i, j| std_basis(3, i, j);
        assert!(max_diff(&lindblad_dissipator(0, 1, 0, 1, &e(1, 2)).unwrap(), &-e(1, 2)) < 1e-15);
        assert!(max_diff(&lindblad_dissipator(0, 1, 1, 0, &e(1, 0)).unwrap(), &(e(0, 1) * c(2.0, 0.0))) < 1e-15);
        assert!(max_diff(&lindblad_dissipator(0, 0, 1, 1, &e(0, 1)).unwrap(), &(e(0, 1) * c(2.0, 0.0))) < 1e-15);
        assert!(lindblad_dissipator(0, 3, 0, 0, &e(0, 0)).is_err());
    }

    #[test]
    fn dissipator_matches_delta_closed_form() {
        let n = 3;
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for (i, j, k, l) in (0..81).map(|x| (x / 27, (x / 9) % 3, (x / 3) % 3, x % 3)) {
            for (s, t) in (0..9).map(|x| (x / 3, x % 3)) {
                let got = lindblad_dissipator(i, j, k, l, &std_basis(n, s, t)).unwrap();
                let want = std_basis(n, i, k) * c(2.0 * d(j, s) * d(l, t), 0.0)
                    - std_basis(n, l, t) * c(d(i, k) * d(j, s), 0.0)
                    - std_basis(n, s, j) * c(d(l, t) * d(i, k), 0.0);
                assert!(max_diff(&got, &want) < 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_dissipator_coefficients() {
        assert!((gm_diag_dissipator_coeff(0, 1, 2, 3).unwrap() + 0.5).abs() < 1e-15);
        assert!((gm_diag_dissipator_coeff(1, 1, 3, 4).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        assert!((gm_diag_dissipator_coeff(2, 0, 3, 4).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert!(gm_diag_dissipator_coeff(2, 0, 1, 3).is_err());
        assert!(gm_diag_dissipator_coeff(0, 1, 1, 3).is_err());
    }

    #[test]
    fn superoperator_columns_match_action() {
        let spec = fixtures::superposition(1.0, 2.0, 3.0);
        let s = superoperator(&spec);
        let std = spec.basis();
        for b in 0..9 {
            let col = std.assemble(&s.column(b).into_owned());
            let direct = apply_generator(&spec, &std.element(b)).unwrap();
            assert!(max_diff(&col, &direct) < 1e-14);
        }
        assert_eq!(superoperator(&GeneratorSpec::zero(3)), CMatrix::zeros(9, 9));
    }

    #[test]
    fn superposition_diagonal_block_is_laplacian() {
        let (a, b, cc) = (1.0, 2.0, 3.0);
        let spec = fixtures::superposition(a, b, cc);
        let ld = diagonal_compression_real(&spec);
        let want = DMatrix::from_row_slice(3, 3, &[-a, a, b, a, -a, cc, 0.0, 0.0, -b - cc]);
        assert!((ld - want).abs().max() < 1e-14);
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&fixtures::rydberg(1.0, 2.0, 3.0)).verdict);

        let mut spec = GeneratorSpec::zero(3);
        spec.set_gamma_diag_block(&CMatrix::from_diagonal(&basis::CVector::from_vec(vec![
            c(-1.0, 0.0),
            c(2.0, 0.0),
            c(2.0, 0.0),
        ])))
        .unwrap();
        let r = validate(&spec);
        assert!(r.verdict, "{r:?}");

        // -identity on the traceless subspace
        let gm = GellMannSpec::new(CMatrix::zeros(3, 3), -CMatrix::identity(8, 8)).unwrap();
        let r = validate(&gm.to_standard());
        assert!(!r.psd_on_traceless && !r.verdict && r.psd_witness.is_some());
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_condition_failure_has_witness() {
        // Re C_{m,a} != Re C_{a,m}: add a real entry only in the identity row
        let n = 2;
        let mut ct = CMatrix::zeros(4, 4);
        ct[(3, 0)] = c(1.0, 0.0);
        let gamma = gamma_from_gell_mann(&ct, n);
        let spec = GeneratorSpec::new(CMatrix::zeros(2, 2), gamma).unwrap();
        let r = validate(&spec);
        assert!(!r.real_trace && !r.verdict);
        let w = r.trace_witness.unwrap();
        assert!((w.lhs - w.rhs).abs() > 0.5);
    }

    #[test]
    fn canonicalize_rydberg_matches_display() {
        let (ge, er, gr) = (1.0, 2.0, 3.0);
        let canon = canonicalize(&fixtures::rydberg(ge, er, gr)).unwrap();
        let d = canon.gamma_diag_block();
        let want = [
            [4.0 * ge + 4.0 * gr - 2.0 * er, gr - 5.0 * ge + er, ge - 5.0 * gr + er],
            [gr - 5.0 * ge + er, 4.0 * ge - 2.0 * gr + 4.0 * er, ge + gr - 5.0 * er],
            [ge - 5.0 * gr + er, ge + gr - 5.0 * er, 4.0 * gr - 2.0 * ge + 4.0 * er],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d[(i, j)] - c(want[i][j] / 18.0, 0.0)).norm() < 1e-12, "({i},{j}) {}", d[(i, j)]);
            }
        }
        let n = canon.dim();
        let off = n * (n - 1);
        assert!(canon.gamma().view((0, 0), (off, off)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn canonicalize_preserves_superoperator_and_annihilates_identity() {
        let mut spec = GeneratorSpec::zero(3);
        spec.set_gamma_diag_block(&CMatrix::from_diagonal(&basis::CVector::from_vec(vec![
            c(-1.0, 0.0),
            c(2.0, 0.0),
            c(2.0, 0.0),
        ])))
        .unwrap();
        let canon = canonicalize(&spec).unwrap();
        assert!(max_diff(&superoperator(&spec), &superoperator(&canon)) < 1e-12);
        let gi = gamma_action(&canon, &CMatrix::identity(3, 3)).unwrap();
        assert!(basis::max_abs(&gi) < 1e-12);
        assert!(basis::is_psd(canon.gamma(), 1e-9));
        assert!(canon.h().trace().norm() < 1e-12);
        let twice = canonicalize(&canon).unwrap();
        assert!(max_diff(twice.gamma(), canon.gamma()) < 1e-12);
        assert!(max_diff(twice.h(), canon.h()) < 1e-12);
    }

    #[test]
    fn canonicalize_folds_imaginary_identity_terms_into_h() {
        let n = 2;
        let mut ct = CMatrix::zeros(4, 4);
        ct[(3, 0)] = c(0.0, 0.7);
        ct[(0, 3)] = c(0.0, 0.2);
        ct[(1, 1)] = c(1.0, 0.0);
        let spec = GeneratorSpec::new(CMatrix::zeros(2, 2), gamma_from_gell_mann(&ct, n)).unwrap();
        assert!(validate(&spec).verdict);
        let canon = canonicalize(&spec).unwrap();
        assert!(max_diff(&superoperator(&spec), &superoperator(&canon)) < 1e-12);
        assert!(basis::max_abs(canon.h()) > 0.1);
        assert!(canonicalize(&GellMannSpec::new(CMatrix::zeros(2, 2), -CMatrix::identity(3, 3)).unwrap().to_standard())
            .is_err());
    }

    #[test]
    fn classification_examples() {
        let m = fixtures::manifest(&[0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(classify_pair_block_diagonal(&m), PbdClass { is_pbd: true, h_diagonal: true });
        let mut spec = GeneratorSpec::zero(3);
        spec.set_gamma_at(0, 1, 0, 2, ONE).unwrap();
        assert!(!classify_pair_block_diagonal(&spec).is_pbd);
        let mut spec = GeneratorSpec::zero(3);
        spec.set_gamma_at(0, 1, 1, 1, ONE).unwrap();
        assert!(!classify_pair_block_diagonal(&spec).is_pbd);
        // digraph-induced: diagonal Gamma^O, Gamma^D = 0
        let mut spec = GeneratorSpec::zero(4);
        for (i, j, w) in [(0, 1, 1.0), (2, 0, 0.5), (3, 2, 2.0)] {
            spec.set_gamma_at(i, j, i, j, c(w, 0.0)).unwrap();
        }
        assert!(classify_pair_block_diagonal(&spec).is_pbd);
        let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let spec = GeneratorSpec::new(h, CMatrix::zeros(4, 4)).unwrap();
        assert!(!classify_pair_block_diagonal(&spec).h_diagonal);
    }

    #[test]
    fn superposition_block_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = superposition_block(c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0), 1.5).unwrap();
        for row in b.entries {
            for z in row {
                assert!((z - c(1.5, 0.0)).norm() < 1e-14);
            }
        }
        let b = superposition_block(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(s, 0.0), 2.0).unwrap();
        assert!(b.entries.iter().flatten().all(|z| (z - c(2.0, 0.0)).norm() < 1e-14));
        assert!(b.determinant().norm() < 1e-12);
        assert!(superposition_block(ZERO, ONE, ONE, ZERO, 1.0).is_err());
    }

    #[test]
    fn identity_preserving_examples() {
        assert!(!identity_preserving(&fixtures::superposition(1.0, 2.0, 3.0)));
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(-3.0, 0.0)]);
        assert!(identity_preserving(&GeneratorSpec::new(h, CMatrix::zeros(4, 4)).unwrap()));
        // C^O diagonal, arbitrary C^{D0}
        let n = 3;
        let mut cm = CMatrix::zeros(8, 8);
        for p in 0..6 {
            cm[(p, p)] = c(0.3 + p as f64, 0.0);
        }
        cm[(6, 6)] = c(2.0, 0.0);
        cm[(7, 7)] = c(1.0, 0.0);
        cm[(6, 7)] = c(0.5, 0.4);
        cm[(7, 6)] = c(0.5, -0.4);
        let spec = GellMannSpec::new(CMatrix::zeros(n, n), cm).unwrap().to_standard();
        assert!(identity_preserving(&spec));
    }

    #[test]
    fn gell_mann_round_trip() {
        let spec = canonicalize(&fixtures::manifest(&[0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let back = spec.to_gell_mann().to_standard();
        assert!(max_diff(back.gamma(), spec.gamma()) < 1e-12);
    }
}
