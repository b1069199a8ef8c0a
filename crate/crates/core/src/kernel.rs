//! Invariant states: kernels of generators from graph data, eigenpairs of the
//! off-diagonal `kl` blocks, a singular-value null-space oracle, the
//! K-operator containment check and the connected-component lower bound.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{self, scaled_tol, std_basis, BasisOrdering, CMatrix, CVector, Label, ZERO};
use crate::digraph::{self, SinkReport};
use crate::error::{GkslError, Result};
use crate::expm::expm;
use crate::generator::{self, GellMannSpec, GeneratorSpec};
use crate::DEFAULT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Eigenvalue and eigenmatrix of one `kl` block, supported on `{E_kl, E_lk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub k: usize,
    pub l: usize,
    pub branch: Branch,
    pub mu: Complex64,
    pub a: CMatrix,
    /// The closed-form eigenvector vanished and an equivalent one was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelTag {
    /// Stationary state of one terminal strongly connected component.
    Diagonal { component: Vec<usize> },
    /// `E_kl` or `E_lk` for two sinks `k`, `l`.
    SinkPair { k: usize, l: usize },
    /// The single kernel element of a singular 2-sink block.
    SingularTwoSink { k: usize, l: usize },
    /// Null vector of the superoperator.
    Numerical,
}

impl KernelTag {
    pub fn name(&self) -> &'static str {
        match self {
            KernelTag::Diagonal { .. } => "diagonal",
            KernelTag::SinkPair { .. } => "sink-pair",
            KernelTag::SingularTwoSink { .. } => "singular-2-sink",
            KernelTag::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Analytic,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub basis: Vec<CMatrix>,
    pub tags: Vec<KernelTag>,
    pub method: KernelMethod,
    pub warnings: Vec<String>,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

fn precondition(spec: &GeneratorSpec, tol: f64) -> Result<()> {
    let class = generator::classify_pair_block_diagonal_with_tol(spec, tol);
    if !class.is_pbd {
        return Err(GkslError::Precondition("Gamma is not pair block diagonal".into()));
    }
    if !class.h_diagonal {
        return Err(GkslError::Precondition("H is not diagonal".into()));
    }
    Ok(())
}

fn check_pair(spec: &GeneratorSpec, k: usize, l: usize) -> Result<()> {
    if k >= l || l >= spec.dim() {
        return Err(GkslError::IndexOutOfRange(format!("pair ({k}, {l}) needs k < l < N = {}", spec.dim())));
    }
    Ok(())
}

/// Scalars entering the `kl` block of `L^O`.
struct BlockData {
    /// `gamma_{kllk}` and `gamma_{lkkl}` (`alpha +- i beta` for Hermitian `Gamma`).
    p: Complex64,
    q: Complex64,
    g_kl: f64,
    g_lk: f64,
    g_kk: Complex64,
    g_ll: Complex64,
    g_kkll: Complex64,
    g_llkk: Complex64,
    h_k: f64,
    h_l: f64,
    /// Total weight of edges leaving `{k, l}`.
    out: f64,
}

impl BlockData {
    fn read(spec: &GeneratorSpec, k: usize, l: usize) -> Self {
        let g = |i, j, a, b| spec.gamma_at(i, j, a, b).expect("in range");
        let n = spec.dim();
        let out = (0..n)
            .filter(|&v| v != k && v != l)
            .map(|v| spec.rate(v, k) + spec.rate(v, l))
            .sum();
        Self {
            p: g(k, l, l, k),
            q: g(l, k, k, l),
            g_kl: spec.rate(k, l),
            g_lk: spec.rate(l, k),
            g_kk: g(k, k, k, k),
            g_ll: g(l, l, l, l),
            g_kkll: g(k, k, l, l),
            g_llkk: g(l, l, k, k),
            h_k: spec.h()[(k, k)].re,
            h_l: spec.h()[(l, l)].re,
            out,
        }
    }

    /// Matrix of the block on `(E_kl, E_lk)`, columns are images.
    fn matrix(&self) -> [[Complex64; 2]; 2] {
        let y = Complex64::new(0.5 * (self.g_kl + self.g_lk), 0.0);
        let avg = (self.g_kk + self.g_ll) * 0.5;
        let ih = Complex64::new(0.0, self.h_k - self.h_l);
        let o = Complex64::new(0.5 * self.out, 0.0);
        [[-y + (self.g_kkll - avg) - ih - o, self.p], [self.q, -y + (self.g_llkk - avg) + ih - o]]
    }

    /// `(gamma_kkll - gamma_llkk)/2 - i(h_k - h_l)`.
    fn s(&self) -> Complex64 {
        (self.g_kkll - self.g_llkk) * 0.5 - Complex64::new(0.0, self.h_k - self.h_l)
    }
}

fn pair_matrix(n: usize, k: usize, l: usize, x: Complex64, y: Complex64) -> CMatrix {
    std_basis(n, k, l) * x + std_basis(n, l, k) * y
}

/// Both eigenpairs of the `kl` block of `L^O` (`k < l`, 0-based).
pub fn block_eigenpairs(spec: &GeneratorSpec, k: usize, l: usize) -> Result<(EigenPair, EigenPair)> {
    block_eigenpairs_with_tol(spec, k, l, DEFAULT_TOL)
}

pub fn block_eigenpairs_with_tol(spec: &GeneratorSpec, k: usize, l: usize, tol: f64) -> Result<(EigenPair, EigenPair)> {
    check_pair(spec, k, l)?;
    precondition(spec, tol)?;
    let n = spec.dim();
    let d = BlockData::read(spec, k, l);
    let m = d.matrix();
    let t = tol * basis::max_abs(spec.gamma()).max(basis::max_abs(spec.h())).max(1.0);

    let pair = |branch, mu, x, y, fallback| EigenPair { k, l, branch, mu, a: pair_matrix(n, k, l, x, y), fallback };

    if d.p.norm() <= t && d.q.norm() <= t {
        return Ok((
            pair(Branch::Plus, m[0][0], Complex64::new(1.0, 0.0), ZERO, false),
            pair(Branch::Minus, m[1][1], ZERO, Complex64::new(1.0, 0.0), false),
        ));
    }

    let s = d.s();
    let r = (d.p * d.q + s * s).sqrt();
    let mean = (m[0][0] + m[1][1]) * 0.5;
    let make = |branch: Branch| {
        let sr = if branch == Branch::Plus { r } else { -r };
        let mu = mean + sr;
        let (x, y) = (d.p + s + sr, d.q - s + sr);
        // equivalent eigenvectors, used when the closed form degenerates
        let alt1 = (m[0][1], mu - m[0][0]);
        let alt2 = (mu - m[1][1], m[1][0]);
        let norm = |(a, b): (Complex64, Complex64)| (a.norm_sqr() + b.norm_sqr()).sqrt();
        let best = if norm(alt1) >= norm(alt2) { alt1 } else { alt2 };
        if norm((x, y)) >= 0.5 * norm(best) && norm((x, y)) > 0.0 {
            pair(branch, mu, x, y, false)
        } else if norm(best) > 0.0 {
            pair(branch, mu, best.0, best.1, true)
        } else {
            // block is a multiple of the identity
            let (x, y) = if branch == Branch::Plus { (1.0, 0.0) } else { (0.0, 1.0) };
            pair(branch, m[0][0], Complex64::new(x, 0.0), Complex64::new(y, 0.0), true)
        }
    };
    Ok((make(Branch::Plus), make(Branch::Minus)))
}

/// Kernel of the `kl` block with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKernel {
    pub elements: Vec<CMatrix>,
    pub tags: Vec<KernelTag>,
    pub warnings: Vec<String>,
}

/// Kernel of the `kl` block of `L^O` for a pair-block-diagonal generator with
/// diagonal `H` and `Gamma >= 0`.
pub fn block_kernel(spec: &GeneratorSpec, k: usize, l: usize) -> Result<Vec<CMatrix>> {
    Ok(block_kernel_with_tol(spec, k, l, DEFAULT_TOL)?.elements)
}

pub fn block_kernel_with_tol(spec: &GeneratorSpec, k: usize, l: usize, tol: f64) -> Result<BlockKernel> {
    check_pair(spec, k, l)?;
    precondition(spec, tol)?;
    if !basis::is_psd(spec.gamma(), scaled_tol(tol, spec.gamma())) {
        return Err(GkslError::Precondition("Gamma is not positive semidefinite".into()));
    }
    let sinks = digraph::sinks_and_singular_2sinks_with_tol(spec, tol);
    Ok(block_kernel_inner(spec, k, l, tol, &sinks))
}

fn unit_phase(n: usize, k: usize, l: usize, x: Complex64, y: Complex64) -> CMatrix {
    let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
    let phase = if x.norm() > 0.0 { x.conj() / x.norm() } else { y.conj() / y.norm() };
    pair_matrix(n, k, l, x * phase / norm, y * phase / norm)
}

fn block_kernel_inner(spec: &GeneratorSpec, k: usize, l: usize, tol: f64, sinks: &SinkReport) -> BlockKernel {
    let n = spec.dim();
    let d = BlockData::read(spec, k, l);
    let t = tol * basis::max_abs(spec.gamma()).max(basis::max_abs(spec.h())).max(1.0);
    let mut warnings = Vec::new();

    let gaps = [
        ("h_k - h_l", (d.h_k - d.h_l).abs()),
        ("gamma_kk - gamma_ll", (d.g_kk - d.g_ll).norm()),
        ("gamma_kk - gamma_kkll", (d.g_kk - d.g_kkll).norm()),
    ];
    for (what, gap) in gaps {
        if gap > t && gap <= 10.0 * t {
            warnings.push(format!(
                "pair ({}, {}): {what} = {gap:.3e} is within 10*tol of the degeneracy boundary",
                k + 1,
                l + 1
            ));
        }
    }
    let mut out = BlockKernel { elements: Vec::new(), tags: Vec::new(), warnings };
    if gaps.iter().any(|(_, g)| *g > t) {
        return out;
    }
    if sinks.is_sink(k) && sinks.is_sink(l) {
        out.elements.push(std_basis(n, k, l));
        out.elements.push(std_basis(n, l, k));
        out.tags.push(KernelTag::SinkPair { k, l });
        out.tags.push(KernelTag::SinkPair { k, l });
    } else if sinks.is_singular2(k, l) {
        let g = Complex64::new(d.g_kl, 0.0);
        // p = alpha + i beta; Gamma is Hermitian, so q = conj(p)
        let (mut x, mut y) = (g + d.p, g + d.p.conj());
        if (x.norm_sqr() + y.norm_sqr()).sqrt() <= t {
            // alpha = -gamma, beta = 0: the closed form vanishes
            x = d.p;
            y = g;
            out.warnings.push(format!(
                "pair ({}, {}): closed-form 2-sink vector vanishes; using (alpha + i beta) E_kl + gamma E_lk",
                k + 1,
                l + 1
            ));
        }
        out.elements.push(unit_phase(n, k, l, x, y));
        out.tags.push(KernelTag::SingularTwoSink { k, l });
    }
    out
}

/// Null space of the `kl` block from its eigenpairs; valid without
/// `Gamma >= 0`. Experimental.
fn block_kernel_from_eigenpairs(spec: &GeneratorSpec, k: usize, l: usize, tol: f64) -> Result<BlockKernel> {
    let (plus, minus) = block_eigenpairs_with_tol(spec, k, l, tol)?;
    let m = BlockData::read(spec, k, l).matrix();
    let t = tol * basis::max_abs(spec.gamma()).max(basis::max_abs(spec.h())).max(1.0);
    let mut out = BlockKernel { elements: Vec::new(), tags: Vec::new(), warnings: Vec::new() };
    let all_zero = m.iter().flatten().all(|z| z.norm() <= t);
    if all_zero {
        out.elements.push(std_basis(spec.dim(), k, l));
        out.elements.push(std_basis(spec.dim(), l, k));
        out.tags.extend([KernelTag::SinkPair { k, l }, KernelTag::SinkPair { k, l }]);
        return Ok(out);
    }
    let mut seen: Vec<CMatrix> = Vec::new();
    for ep in [plus, minus] {
        if ep.mu.norm() <= t {
            let (x, y) = (ep.a[(k, l)], ep.a[(l, k)]);
            let v = unit_phase(spec.dim(), k, l, x, y);
            if seen.iter().all(|s| (s - &v).iter().any(|z| z.norm() > 1e-8)) {
                seen.push(v.clone());
                out.elements.push(v);
                out.tags.push(KernelTag::SingularTwoSink { k, l });
            }
        }
    }
    Ok(out)
}

/// One unit-trace diagonal state per terminal component of the induced digraph.
pub fn diagonal_kernel(spec: &GeneratorSpec) -> Vec<CMatrix> {
    diagonal_kernel_tagged(spec, DEFAULT_TOL).into_iter().map(|(m, _)| m).collect()
}

fn diagonal_kernel_tagged(spec: &GeneratorSpec, tol: f64) -> Vec<(CMatrix, KernelTag)> {
    let g = digraph::induced_digraph_with_tol(spec, tol);
    digraph::tscc_stationary_vectors(&g)
        .into_iter()
        .map(|sv| {
            let d = CVector::from_iterator(spec.dim(), sv.rho.iter().map(|&x| Complex64::new(x, 0.0)));
            (CMatrix::from_diagonal(&d), KernelTag::Diagonal { component: sv.vertices })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub tol: f64,
    /// Use eigenpair roots `mu = 0` for each block instead of the closed
    /// form that assumes `Gamma >= 0`.
    pub experimental_mu_zero: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, experimental_mu_zero: false }
    }
}

/// Kernel of a pair-block-diagonal generator with diagonal `H`, assembled
/// from the diagonal states and the off-diagonal block kernels of its
/// canonical form.
pub fn full_kernel(spec: &GeneratorSpec) -> Result<KernelBasis> {
    full_kernel_with(spec, KernelOptions::default())
}

pub fn full_kernel_with(spec: &GeneratorSpec, opts: KernelOptions) -> Result<KernelBasis> {
    let tol = opts.tol;
    let canon = if opts.experimental_mu_zero {
        spec.clone()
    } else {
        generator::canonicalize_with_tol(spec, tol)?
    };
    precondition(&canon, tol)?;
    if !opts.experimental_mu_zero && !basis::is_psd(canon.gamma(), scaled_tol(tol, canon.gamma())) {
        return Err(GkslError::Precondition("canonical Gamma is not positive semidefinite".into()));
    }
    let sinks = digraph::sinks_and_singular_2sinks_with_tol(&canon, tol);
    let mut out = KernelBasis { basis: Vec::new(), tags: Vec::new(), method: KernelMethod::Analytic, warnings: Vec::new() };
    for (m, tag) in diagonal_kernel_tagged(&canon, tol) {
        out.basis.push(m);
        out.tags.push(tag);
    }
    let n = canon.dim();
    for k in 0..n {
        for l in (k + 1)..n {
            let bk = if opts.experimental_mu_zero {
                block_kernel_from_eigenpairs(&canon, k, l, tol)?
            } else {
                block_kernel_inner(&canon, k, l, tol, &sinks)
            };
            out.basis.extend(bk.elements);
            out.tags.extend(bk.tags);
            out.warnings.extend(bk.warnings);
        }
    }
    Ok(out)
}

/// Orthonormal null-space basis of the superoperator, threshold
/// `tol * sigma_max` on the singular values.
pub fn brute_force_kernel(spec: &GeneratorSpec, tol: f64) -> KernelBasis {
    let n = spec.dim();
    let std = BasisOrdering::standard(n);
    let s = generator::superoperator(spec);
    let basis = null_space(&s, tol).into_iter().map(|v| std.assemble(&v)).collect::<Vec<_>>();
    let tags = vec![KernelTag::Numerical; basis.len()];
    KernelBasis { basis, tags, method: KernelMethod::BruteForce, warnings: Vec::new() }
}

/// Right null vectors of `m` (singular values `<= tol * sigma_max`).
pub fn null_space(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let dim = m.ncols();
    let smax = m.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if smax == 0.0 {
        return (0..dim).map(|k| CVector::from_fn(dim, |i, _| if i == k { Complex64::new(1.0, 0.0) } else { ZERO })).collect();
    }
    // a square system keeps the full right factor
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tau = tol * sigma_max;
    let mut out: Vec<CVector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tau)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect();
    // rows beyond min(rows, cols) are never returned for wide inputs
    if m.nrows() < dim {
        let full = CMatrix::from_fn(dim, dim, |i, j| if i < m.nrows() { m[(i, j)] } else { ZERO });
        return null_space(&full, tol);
    }
    out.sort_by_key(lead_index);
    out
}

fn lead_index(v: &CVector) -> usize {
    let max = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    v.iter().position(|z| z.norm() >= 0.5 * max).unwrap_or(0)
}

fn orthonormal_columns(mats: &[CMatrix]) -> CMatrix {
    if mats.is_empty() {
        return CMatrix::zeros(0, 0);
    }
    let len = mats[0].len();
    let a = CMatrix::from_fn(len, mats.len(), |i, j| {
        let n = mats[j].nrows();
        mats[j][(i / n, i % n)]
    });
    let svd = a.svd(true, false);
    let u = svd.u.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-12 * smax).collect();
    CMatrix::from_fn(len, keep.len(), |i, j| u[(i, keep[j])])
}

/// Sines of the principal angles between `span(a)` and `span(b)`.
pub fn principal_angle_sines(a: &[CMatrix], b: &[CMatrix]) -> Result<Vec<f64>> {
    let qa = orthonormal_columns(a);
    let qb = orthonormal_columns(b);
    if qa.ncols() != qb.ncols() {
        return Err(GkslError::ShapeMismatch(format!(
            "subspace dimensions differ: {} vs {}",
            qa.ncols(),
            qb.ncols()
        )));
    }
    if qa.ncols() == 0 {
        return Ok(Vec::new());
    }
    let resid = &qb - &qa * (qa.adjoint() * &qb);
    let mut s: Vec<f64> = resid.svd(false, false).singular_values.iter().map(|x| x.min(1.0)).collect();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Largest principal angle (radians) between two spans of equal dimension.
pub fn max_principal_angle(a: &[CMatrix], b: &[CMatrix]) -> Result<f64> {
    Ok(principal_angle_sines(a, b)?.into_iter().fold(0.0, f64::max).asin())
}

/// The diagonal-coefficient generator built from Gell-Mann labels orthogonal
/// to `ker C`.
#[derive(Debug, Clone, PartialEq)]
pub struct KOperatorSpec {
    /// Labels (Gell-Mann positions) with `K_aa = 1`.
    pub labels: Vec<usize>,
    pub generator: GellMannSpec,
    /// Smallest eigenvalue of `C` on `(ker C)^perp`; `None` when `C = 0`.
    pub epsilon: Option<f64>,
    pub c: CMatrix,
    pub kernel_dim_c: usize,
}

impl KOperatorSpec {
    pub fn k_matrix(&self) -> &CMatrix {
        self.generator.c()
    }
}

pub fn k_operator(spec: &GeneratorSpec) -> Result<KOperatorSpec> {
    k_operator_with_tol(spec, DEFAULT_TOL)
}

pub fn k_operator_with_tol(spec: &GeneratorSpec, tol: f64) -> Result<KOperatorSpec> {
    if !generator::identity_preserving_with_tol(spec, tol) {
        return Err(GkslError::Precondition("L(I) != 0".into()));
    }
    let canon = generator::canonicalize_with_tol(spec, tol)?;
    let gm = canon.to_gell_mann();
    let c = gm.c().clone();
    let m = c.nrows();
    let herm = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let vmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let thr = tol * vmax.max(1.0);
    let ker: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] <= thr).collect();
    let labels: Vec<usize> = (0..m)
        .filter(|&a| ker.iter().map(|&i| eig.eigenvectors[(a, i)].norm_sqr()).sum::<f64>().sqrt() <= tol)
        .collect();
    let epsilon = (0..m).filter(|&i| eig.eigenvalues[i] > thr).map(|i| eig.eigenvalues[i]).reduce(f64::min);
    let mut kmat = CMatrix::zeros(m, m);
    for &a in &labels {
        kmat[(a, a)] = Complex64::new(1.0, 0.0);
    }
    let generator = GellMannSpec::new(CMatrix::zeros(canon.dim(), canon.dim()), kmat)?;
    Ok(KOperatorSpec { labels, generator, epsilon, c, kernel_dim_c: ker.len() })
}

/// The split `L = (L - eps K) + eps K` into two generators.
pub fn k_split(spec: &GeneratorSpec) -> Result<(GeneratorSpec, GeneratorSpec)> {
    let k = k_operator(spec)?;
    let canon = generator::canonicalize(spec)?;
    let eps = Complex64::new(k.epsilon.unwrap_or(0.0), 0.0);
    let rest = GellMannSpec::new(canon.h().clone(), &k.c - k.k_matrix() * eps)?;
    let part = GellMannSpec::new(CMatrix::zeros(spec.dim(), spec.dim()), k.k_matrix() * eps)?;
    Ok((rest.to_standard(), part.to_standard()))
}

/// Every oracle kernel element of `L` is annihilated by `K` (residual `<= 1e-7`).
pub fn kernel_containment_check(spec: &GeneratorSpec) -> Result<bool> {
    Ok(kernel_containment_residual(spec)? <= 1e-7)
}

pub fn kernel_containment_residual(spec: &GeneratorSpec) -> Result<f64> {
    let k = k_operator(spec)?;
    let kspec = k.generator.to_standard();
    let ker = brute_force_kernel(spec, DEFAULT_TOL);
    let mut worst = 0.0_f64;
    for b in &ker.basis {
        let out = generator::apply_generator(&kspec, b)?;
        worst = worst.max(basis::max_abs(&out));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub components: Vec<Vec<usize>>,
    /// Number of undirected components when `H` is consistent.
    pub lower_bound: Option<usize>,
    pub nullity: usize,
    /// `Tr(P_k L(A))` vanishes for every component and basis matrix.
    pub projected_traces_vanish: bool,
    pub max_projected_trace: f64,
}

impl ConsistencyReport {
    pub fn bound_holds(&self) -> bool {
        self.lower_bound.is_none_or(|b| b <= self.nullity)
    }
}

pub fn consistency_and_bound(spec: &GeneratorSpec) -> ConsistencyReport {
    consistency_and_bound_with_tol(spec, DEFAULT_TOL)
}

pub fn consistency_and_bound_with_tol(spec: &GeneratorSpec, tol: f64) -> ConsistencyReport {
    let g = digraph::induced_digraph_with_tol(spec, tol);
    let components = digraph::undirected_components(&g);
    let n = spec.dim();
    let mut comp_of = vec![0; n];
    for (ci, c) in components.iter().enumerate() {
        for &v in c {
            comp_of[v] = ci;
        }
    }
    let htol = scaled_tol(tol, spec.h());
    let consistent =
        (0..n).all(|i| (0..n).all(|j| comp_of[i] == comp_of[j] || spec.h()[(i, j)].norm() <= htol));
    let nullity = brute_force_kernel(spec, tol).dim();

    let mut max_projected_trace = 0.0_f64;
    if consistent {
        let std = spec.basis();
        for b in 0..std.len() {
            let out = generator::apply_generator(spec, &std.element(b)).expect("shapes agree");
            for comp in &components {
                let tr: Complex64 = comp.iter().map(|&v| out[(v, v)]).sum();
                max_projected_trace = max_projected_trace.max(tr.norm());
            }
        }
    }
    let ttol = tol * basis::max_abs(spec.gamma()).max(basis::max_abs(spec.h())).max(1.0);
    let report = ConsistencyReport {
        consistent,
        lower_bound: consistent.then_some(components.len()),
        components,
        nullity,
        projected_traces_vanish: consistent && max_projected_trace <= ttol,
        max_projected_trace,
    };
    debug_assert!(report.bound_holds(), "component bound exceeds the kernel dimension");
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub holds: bool,
    pub is_state: bool,
    /// `||L(rho)||_max`.
    pub generator_residual: f64,
    /// `||exp(t L) rho - rho||` for each sampled `t`.
    pub evolution_residuals: Vec<f64>,
}

/// Checks `L(rho) = 0` and `exp(tL) rho = rho` at the sampled times.
/// Thresholds are `1e-9` and `1e-7`, relative to `max(1, ||L||_max)`.
pub fn verify_invariant(spec: &GeneratorSpec, rho: &CMatrix, times: &[f64]) -> Result<InvariantCheck> {
    let n = spec.dim();
    if rho.shape() != (n, n) {
        return Err(GkslError::ShapeMismatch(format!("rho is {:?}, N = {n}", rho.shape())));
    }
    let is_state = basis::is_psd(rho, 1e-9) && (rho.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-9;
    let s = generator::superoperator(spec);
    let scale = basis::max_abs(&s).max(1.0);
    let std = spec.basis();
    let v = std.coordinates(rho);
    let generator_residual = basis::max_abs(&generator::apply_generator(spec, rho)?);
    let evolution_residuals: Vec<f64> = times
        .iter()
        .map(|&t| (expm(&(&s * Complex64::new(t, 0.0))) * &v - &v).norm())
        .collect();
    let holds = generator_residual <= 1e-9 * scale && evolution_residuals.iter().all(|&r| r <= 1e-7 * scale);
    Ok(InvariantCheck { holds, is_state, generator_residual, evolution_residuals })
}

/// Eigenvalues of the superoperator (complex Schur form).
pub fn superoperator_spectrum(spec: &GeneratorSpec) -> Vec<Complex64> {
    let s = generator::superoperator(spec);
    let t = s.schur().unpack().1;
    t.diagonal().iter().copied().collect()
}

/// Kernel dimension of a real square matrix via singular values.
pub fn real_nullity(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return m.ncols();
    }
    sv.iter().filter(|&&s| s <= tol * smax).count()
}

/// Kernel dimension of a complex square matrix via singular values.
pub fn nullity(m: &CMatrix, tol: f64) -> usize {
    null_space(m, tol).len()
}

/// Coordinates of each matrix in the Gell-Mann ordering.
pub fn gell_mann_coordinates(m: &CMatrix) -> DVector<Complex64> {
    BasisOrdering::gell_mann(m.nrows()).coordinates(m)
}

/// Gell-Mann label at `pos` for dimension `n`.
pub fn gell_mann_label(n: usize, pos: usize) -> Label {
    BasisOrdering::gell_mann(n).label(pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(spec: &GeneratorSpec, ep: &EigenPair) -> f64 {
        let la = generator::apply_generator(spec, &ep.a).unwrap();
        basis::max_abs(&(la - &ep.a * ep.mu)) / basis::max_abs(&ep.a)
    }

    const H_DISTINCT: [f64; 8] = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 5.0];
    const H_EQUAL: [f64; 8] = [1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 5.0];

    #[test]
    fn manifest_eigenpairs() {
        let spec = fixtures::manifest(&H_DISTINCT);
        let (p, m) = block_eigenpairs(&spec, 5, 6).unwrap();
        assert!((p.mu - c(-3.5, -(3.0 - 4.0))).norm() < 1e-12, "{}", p.mu);
        assert_eq!(p.a, std_basis(8, 5, 6));
        assert_eq!(m.a, std_basis(8, 6, 5));
        assert!(residual(&spec, &p) < 1e-12 && residual(&spec, &m) < 1e-12);

        let (p, m) = block_eigenpairs(&spec, 3, 4).unwrap();
        assert!(p.mu.norm() < 1e-12);
        assert!((p.a[(3, 4)] - c(1.0, 1.0)).norm() < 1e-12 && (p.a[(4, 3)] - c(1.0, -1.0)).norm() < 1e-12);
        assert!(residual(&spec, &p) < 1e-12 && residual(&spec, &m) < 1e-12);
    }

    #[test]
    fn hamiltonian_only_eigenvalues() {
        let h = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5, 0.0), c(2.0, 0.0), c(-1.0, 0.0)]));
        let spec = GeneratorSpec::new(h, CMatrix::zeros(9, 9)).unwrap();
        let (p, m) = block_eigenpairs(&spec, 0, 1).unwrap();
        assert!((p.mu - c(0.0, 1.5)).norm() < 1e-14);
        assert!((m.mu - c(0.0, -1.5)).norm() < 1e-14);
    }

    #[test]
    fn degenerate_closed_form_falls_back() {
        // s = 0, beta = 0: the minus-branch closed form vanishes
        let mut spec = GeneratorSpec::zero(2);
        spec.set_pair_block(0, 1, crate::Block2::standard(1.0, 1.0, 1.0, 0.0)).unwrap();
        let (p, m) = block_eigenpairs(&spec, 0, 1).unwrap();
        assert!(m.fallback || p.fallback);
        assert!(residual(&spec, &p) < 1e-12 && residual(&spec, &m) < 1e-12);
    }

    #[test]
    fn eigenpairs_require_pbd() {
        let mut spec = GeneratorSpec::zero(3);
        spec.set_gamma_at(0, 1, 0, 2, c(1.0, 0.0)).unwrap();
        assert!(matches!(block_eigenpairs(&spec, 0, 1), Err(GkslError::Precondition(_))));
        assert!(block_eigenpairs(&GeneratorSpec::zero(3), 1, 0).is_err());
    }

    #[test]
    fn manifest_block_kernels() {
        let spec = fixtures::manifest(&H_DISTINCT);
        let k = block_kernel(&spec, 1, 2).unwrap();
        assert_eq!(k, vec![std_basis(8, 1, 2), std_basis(8, 2, 1)]);
        assert!(block_kernel(&spec, 0, 1).unwrap().is_empty());
        let k = block_kernel(&spec, 3, 4).unwrap();
        assert_eq!(k.len(), 1);
        let ratio = k[0][(3, 4)] / k[0][(4, 3)];
        assert!((ratio - c(1.0, 1.0) / c(1.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn superposition_kernel() {
        let spec = fixtures::superposition(1.0, 2.0, 3.0);
        let k = block_kernel(&spec, 0, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((k[0][(0, 1)] - c(s, 0.0)).norm() < 1e-14 && (k[0][(1, 0)] - c(s, 0.0)).norm() < 1e-14);

        let full = full_kernel(&spec).unwrap();
        assert_eq!(full.dim(), 2);
        assert_eq!(full.tags.iter().map(|t| t.name()).collect::<Vec<_>>(), ["diagonal", "singular-2-sink"]);
        let d = &full.basis[0];
        assert!((d[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14 && (d[(1, 1)] - c(0.5, 0.0)).norm() < 1e-14);
        let oracle = brute_force_kernel(&spec, DEFAULT_TOL);
        assert_eq!(oracle.dim(), 2);
        assert!(max_principal_angle(&full.basis, &oracle.basis).unwrap() < 1e-8);
    }

    #[test]
    fn manifest_full_kernel_dimensions() {
        for (h, dim) in [(H_DISTINCT, 8), (H_EQUAL, 12)] {
            let spec = fixtures::manifest(&h);
            let full = full_kernel(&spec).unwrap();
            let oracle = brute_force_kernel(&spec, DEFAULT_TOL);
            assert_eq!(full.dim(), dim);
            assert_eq!(oracle.dim(), dim);
            assert!(max_principal_angle(&full.basis, &oracle.basis).unwrap() < 1e-7);
        }
    }

    #[test]
    fn zero_generator_kernels() {
        let spec = GeneratorSpec::zero(3);
        assert_eq!(brute_force_kernel(&spec, DEFAULT_TOL).dim(), 9);
        let d = diagonal_kernel(&spec);
        assert_eq!(d.len(), 3);
        assert_eq!(d[1], std_basis(3, 1, 1));
        assert_eq!(full_kernel(&spec).unwrap().dim(), 9);
    }

    #[test]
    fn rydberg_kernel_contains_diagonal() {
        let spec = fixtures::rydberg(1.0, 2.0, 3.0);
        let oracle = brute_force_kernel(&spec, DEFAULT_TOL);
        assert_eq!(oracle.dim(), 3);
        let diag: Vec<CMatrix> = (0..3).map(|i| std_basis(3, i, i)).collect();
        assert!(max_principal_angle(&diag, &oracle.basis).unwrap() < 1e-8);
    }

    #[test]
    fn principal_angles_detect_difference() {
        let a = vec![std_basis(2, 0, 0)];
        let b = vec![std_basis(2, 0, 0) + std_basis(2, 1, 1)];
        let ang = max_principal_angle(&a, &b).unwrap();
        assert!((ang - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!(max_principal_angle(&a, &[]).is_err());
    }

    #[test]
    fn k_operator_examples() {
        let zero = GeneratorSpec::zero(3);
        let k = k_operator(&zero).unwrap();
        assert!(k.labels.is_empty() && k.epsilon.is_none());

        let full = GellMannSpec::new(CMatrix::zeros(2, 2), CMatrix::identity(3, 3)).unwrap().to_standard();
        let k = k_operator(&full).unwrap();
        assert_eq!(k.labels, vec![0, 1, 2]);
        assert!((k.epsilon.unwrap() - 1.0).abs() < 1e-12);

        let mut cm = CMatrix::zeros(8, 8);
        cm[(0, 0)] = c(2.0, 0.0);
        let spec = GellMannSpec::new(CMatrix::zeros(3, 3), cm).unwrap().to_standard();
        let k = k_operator(&spec).unwrap();
        assert_eq!(k.labels, vec![0]);
        assert!((k.epsilon.unwrap() - 2.0).abs() < 1e-12);
        assert!(kernel_containment_check(&spec).unwrap());
        assert!(k_operator(&fixtures::superposition(1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn k_operator_is_self_contained() {
        let mut cm = CMatrix::zeros(8, 8);
        cm[(0, 0)] = c(1.0, 0.0);
        cm[(3, 3)] = c(1.0, 0.0);
        let kspec = GellMannSpec::new(CMatrix::zeros(3, 3), cm).unwrap().to_standard();
        assert!(kernel_containment_check(&kspec).unwrap());
        let (a, b) = k_split(&kspec).unwrap();
        assert!(generator::validate(&a).verdict && generator::validate(&b).verdict);
    }

    #[test]
    fn consistency_examples() {
        let spec = fixtures::manifest(&H_DISTINCT);
        let r = consistency_and_bound(&spec);
        assert!(r.consistent && r.projected_traces_vanish);
        assert_eq!(r.lower_bound, Some(5));
        assert_eq!(r.nullity, 8);

        let mut h = CMatrix::zeros(8, 8);
        h[(0, 5)] = c(0.3, 0.0);
        h[(5, 0)] = c(0.3, 0.0);
        let mut spec2 = spec.clone();
        spec2.set_h(h).unwrap();
        let r = consistency_and_bound(&spec2);
        assert!(!r.consistent && r.lower_bound.is_none());

        let (h, g) = fixtures::superposition(1.0, 1.0, 1.0).into_parts();
        let mut hh = h;
        hh[(0, 2)] = c(0.0, 1.0);
        hh[(2, 0)] = c(0.0, -1.0);
        let r = consistency_and_bound(&GeneratorSpec::new(hh, g).unwrap());
        assert!(r.consistent && r.lower_bound == Some(1));
    }

    #[test]
    fn invariant_examples() {
        let spec = fixtures::superposition(1.0, 2.0, 3.0);
        let mut rho = CMatrix::zeros(3, 3);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            rho[(i, j)] = c(0.5, 0.0);
        }
        let r = verify_invariant(&spec, &rho, &[0.5, 1.0, 5.0]).unwrap();
        assert!(r.holds && r.is_state);
        let r = verify_invariant(&spec, &std_basis(3, 2, 2), &[1.0]).unwrap();
        assert!(!r.holds);

        let mut cm = CMatrix::zeros(8, 8);
        cm[(0, 0)] = c(1.0, 0.0);
        cm[(7, 7)] = c(0.5, 0.0);
        let ip = GellMannSpec::new(CMatrix::zeros(3, 3), cm).unwrap().to_standard();
        let mixed = CMatrix::identity(3, 3) / c(3.0, 0.0);
        assert!(verify_invariant(&ip, &mixed, &[0.5, 1.0, 5.0]).unwrap().holds);
        let not_state = CMatrix::identity(3, 3);
        let r = verify_invariant(&ip, &not_state, &[1.0]).unwrap();
        assert!(!r.is_state && r.holds);
    }

    #[test]
    fn experimental_mu_zero_matches_on_psd_input() {
        let spec = fixtures::manifest(&H_EQUAL);
        let opts = KernelOptions { experimental_mu_zero: true, ..Default::default() };
        let a = full_kernel_with(&generator::canonicalize(&spec).unwrap(), opts).unwrap();
        let b = full_kernel(&spec).unwrap();
        assert_eq!(a.dim(), b.dim());
        assert!(max_principal_angle(&a.basis, &b.basis).unwrap() < 1e-8);
    }
}
