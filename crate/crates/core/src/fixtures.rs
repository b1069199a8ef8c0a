//! Reference generators used in tests, golden files and documentation.

use num_complex::Complex64;

use crate::basis::{Block2, CMatrix, CVector};
use crate::generator::GeneratorSpec;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Three levels: the jump `(|1> + i|2>)/sqrt2 -> (i|1> + |2>)/sqrt2` at rate
/// `a` plus `|3> -> |1>` at rate `b` and `|3> -> |2>` at rate `c`. `H = 0`.
pub fn superposition(a: f64, b: f64, c: f64) -> GeneratorSpec {
    let mut spec = GeneratorSpec::zero(3);
    spec.set_pair_block(0, 1, Block2::standard(a, a, a, 0.0)).unwrap();
    spec.set_pair_block(0, 2, Block2::standard(b, 0.0, 0.0, 0.0)).unwrap();
    spec.set_pair_block(1, 2, Block2::standard(c, 0.0, 0.0, 0.0)).unwrap();
    spec
}

/// Eight levels with sinks 1, 2, 3, the singular 2-sink {4, 5} and the
/// three-vertex terminal component {6, 7, 8}. `H = diag(h)`.
pub fn manifest(h: &[f64; 8]) -> GeneratorSpec {
    let hm = CMatrix::from_diagonal(&CVector::from_iterator(8, h.iter().map(|&x| re(x))));
    let mut spec = GeneratorSpec::new(hm, CMatrix::zeros(64, 64)).unwrap();
    spec.set_pair_block(3, 4, Block2::standard(1.0, 1.0, 0.0, 1.0)).unwrap();
    spec.set_pair_block(5, 6, Block2::standard(1.0, 2.0, 0.0, 0.0)).unwrap();
    spec.set_pair_block(5, 7, Block2::standard(3.0, 3.0, 0.0, 0.0)).unwrap();
    spec.set_pair_block(6, 7, Block2::standard(4.0, 1.0, 0.0, 0.0)).unwrap();
    spec
}

/// Laser dephasing on a ground/excited/Rydberg ladder: `Gamma` supported on
/// the diagonal subalgebra, `Gamma|_D = 1/2 diag(ge + gr - er, ge + er - gr, gr + er - ge)`.
pub fn rydberg(ge: f64, er: f64, gr: f64) -> GeneratorSpec {
    let mut spec = GeneratorSpec::zero(3);
    let d = CVector::from_vec(vec![re(0.5 * (ge + gr - er)), re(0.5 * (ge + er - gr)), re(0.5 * (gr + er - ge))]);
    spec.set_gamma_diag_block(&CMatrix::from_diagonal(&d)).unwrap();
    spec
}
