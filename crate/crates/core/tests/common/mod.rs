//! Random generators and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use gksl::basis::{self, std_basis};
use gksl::{BasisOrdering, Block2, BlockRepr, CMatrix, CVector, Complex64, GellMannSpec, GeneratorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    // Box-Muller; rand_distr is not needed for this
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gauss(rng), gauss(rng)))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let m = random_complex(rng, n, n);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

/// `M M*` with `M` of the given rank.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    let m = random_complex(rng, n, rank);
    &m * m.adjoint()
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    basis::max_abs(&(a - b))
}

fn rate(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.2..2.0)
}

/// Pair-block-diagonal spec with positive semidefinite `Gamma`, diagonal `H`.
///
/// Each spec draws a sparsity level; nonzero blocks are one-way decays,
/// two-way decays, rank-1 blocks with equal rates (singular 2-sinks when
/// isolated) or general PSD blocks. `Gamma^D` is zero, a sum of rank-1 terms
/// with entries from `{0, 1, 2}` (so the kernel conditions hold exactly for
/// some pairs), or, for non-degenerate specs, a general PSD matrix. With
/// `degenerate`, `H` takes values in `{0, 1}` so level spacings coincide.
pub fn random_pbd(rng: &mut impl Rng, n: usize, degenerate: bool) -> GeneratorSpec {
    let mut spec = GeneratorSpec::zero(n);
    let p_zero = [0.3, 0.6, 0.85][rng.random_range(0..3)];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p_zero) {
                continue;
            }
            let block = match rng.random_range(0..20) {
                0..=5 => {
                    let r = rate(rng);
                    if rng.random_bool(0.5) {
                        Block2::standard(r, 0.0, 0.0, 0.0)
                    } else {
                        Block2::standard(0.0, r, 0.0, 0.0)
                    }
                }
                6..=8 => Block2::standard(rate(rng), rate(rng), 0.0, 0.0),
                9..=14 => {
                    let g = rate(rng);
                    let th = rng.random_range(0.0..std::f64::consts::TAU);
                    Block2::standard(g, g, g * th.cos(), g * th.sin())
                }
                _ => {
                    let rank = rng.random_range(1..=2);
                    let m = random_psd(rng, 2, rank);
                    Block2::new([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]], BlockRepr::Standard)
                }
            };
            spec.set_pair_block(i, j, block).unwrap();
        }
    }
    let d = match rng.random_range(0..if degenerate { 2 } else { 3 }) {
        0 => CMatrix::zeros(n, n),
        1 => {
            let mut d = CMatrix::zeros(n, n);
            for _ in 0..rng.random_range(1..=2) {
                let v = CVector::from_fn(n, |_, _| c(rng.random_range(0..3) as f64, 0.0));
                d += &v * v.adjoint();
            }
            d
        }
        _ => {
            let rank = rng.random_range(1..=n);
            random_psd(rng, n, rank)
        }
    };
    spec.set_gamma_diag_block(&d).unwrap();
    let h = CVector::from_fn(n, |_, _| {
        if degenerate {
            c(rng.random_range(0..2) as f64, 0.0)
        } else {
            c(rng.random_range(-2.0..2.0), 0.0)
        }
    });
    spec.set_h(CMatrix::from_diagonal(&h)).unwrap();
    spec
}

/// Valid spec in the form `sum_m F_m rho F_m* - 1/2 {F_m* F_m, rho}` with
/// random (traceful) `F_m`, plus a random Hermitian `H`. `Gamma` is PSD.
pub fn random_valid(rng: &mut impl Rng, n: usize) -> GeneratorSpec {
    let rank = rng.random_range(1..=n * n);
    let g = random_psd(rng, n * n, rank) * c(1.0 / (n * n) as f64, 0.0);
    GeneratorSpec::new(random_hermitian(rng, n), g).unwrap()
}

/// Identity-preserving spec: real symmetric PSD `C` on Gell-Mann labels.
/// `C` mixes a diagonal part on a random label subset with an optional
/// rank-1 term on another subset, so `ker C` is usually nontrivial.
pub fn random_identity_preserving(rng: &mut impl Rng, n: usize) -> GeneratorSpec {
    let m = n * n - 1;
    let mut cm = CMatrix::zeros(m, m);
    for a in 0..m {
        if rng.random_bool(0.4) {
            cm[(a, a)] = c(rate(rng), 0.0);
        }
    }
    if rng.random_bool(0.5) {
        let v = CVector::from_fn(m, |_, _| if rng.random_bool(0.3) { c(gauss(rng), 0.0) } else { c(0.0, 0.0) });
        cm += &v * v.transpose();
    }
    let h = if rng.random_bool(0.5) { random_hermitian(rng, n) } else { CMatrix::zeros(n, n) };
    GellMannSpec::new(h, cm).unwrap().to_standard()
}

/// Vertex partition into `parts` nonempty groups.
pub fn random_partition(rng: &mut impl Rng, n: usize, parts: usize) -> Vec<Vec<usize>> {
    assert!(parts >= 1 && parts <= n);
    let mut labels: Vec<usize> = (0..n).map(|v| if v < parts { v } else { rng.random_range(0..parts) }).collect();
    // shuffle so the forced representatives are not always 0..parts
    for v in (1..n).rev() {
        let w = rng.random_range(0..=v);
        labels.swap(v, w);
    }
    (0..parts).map(|p| (0..n).filter(|&v| labels[v] == p).collect()).collect()
}

/// Spec whose induced digraph has exactly the given undirected components:
/// each group is connected by a random spanning chain of decays, `Gamma` is a
/// sum of rank-1 terms supported on within-group labels, and `H` is
/// block diagonal over the groups.
pub fn random_consistent(rng: &mut impl Rng, n: usize, groups: &[Vec<usize>]) -> GeneratorSpec {
    let std = BasisOrdering::standard(n);
    let mut gamma = CMatrix::zeros(n * n, n * n);
    let mut h = CMatrix::zeros(n, n);
    for g in groups {
        // chain edges guarantee connectivity
        for w in g.windows(2) {
            let (a, b) = if rng.random_bool(0.5) { (w[0], w[1]) } else { (w[1], w[0]) };
            let p = std.position(gksl::Label::Pair(a, b)).unwrap();
            gamma[(p, p)] += c(rate(rng), 0.0);
        }
        // extra mixing terms among this group's labels
        for _ in 0..rng.random_range(0..3) {
            let mut v = CVector::zeros(n * n);
            for &a in g {
                for &b in g {
                    if rng.random_bool(0.3) {
                        v[std.position(gksl::Label::Pair(a, b)).unwrap()] = c(gauss(rng), gauss(rng));
                    }
                }
            }
            gamma += &v * v.adjoint();
        }
        for &a in g {
            for &b in g {
                if a <= b && rng.random_bool(0.5) {
                    let z = if a == b { c(gauss(rng), 0.0) } else { c(gauss(rng), gauss(rng)) };
                    h[(a, b)] = z;
                    h[(b, a)] = z.conj();
                }
            }
        }
    }
    GeneratorSpec::new(h, gamma).unwrap()
}

/// Random digraph on `n` vertices, each edge present with probability `p`.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to && rng.random_bool(p) {
                edges.push((from, to, rng.random_range(0.1..3.0)));
            }
        }
    }
    edges
}

/// Total weight of spanning arborescences of `s` oriented towards `root`,
/// by enumerating every choice of one out-edge per non-root vertex.
pub fn arborescence_weight(edges: &[(usize, usize, f64)], s: &[usize], root: usize) -> f64 {
    let others: Vec<usize> = s.iter().copied().filter(|&v| v != root).collect();
    let choices: Vec<Vec<(usize, f64)>> = others
        .iter()
        .map(|&v| edges.iter().filter(|e| e.0 == v && s.contains(&e.1)).map(|e| (e.1, e.2)).collect())
        .collect();
    let mut total = 0.0;
    let mut pick = vec![0usize; others.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return if others.is_empty() { 1.0 } else { 0.0 };
    }
    loop {
        let next = |v: usize| -> usize {
            let k = others.iter().position(|&o| o == v).unwrap();
            choices[k][pick[k]].0
        };
        let reaches_root = others.iter().all(|&start| {
            let mut v = start;
            for _ in 0..=others.len() {
                if v == root {
                    return true;
                }
                v = next(v);
            }
            v == root
        });
        if reaches_root {
            total += (0..others.len()).map(|k| choices[k][pick[k]].1).product::<f64>();
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == pick.len() {
                return total;
            }
            pick[k] += 1;
            if pick[k] < choices[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// `2 F rho F - {F^2, rho}` evaluated with matrix products.
pub fn dissipator_direct(f: &CMatrix, rho: &CMatrix) -> CMatrix {
    let f2 = f * f;
    f * rho * f * c(2.0, 0.0) - &f2 * rho - rho * &f2
}

pub fn e(n: usize, i: usize, j: usize) -> CMatrix {
    std_basis(n, i, j)
}
