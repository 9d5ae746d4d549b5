//! Dense complex linear algebra helpers shared across the crate.
//!
//! All registers are small (at most six qubits), so everything here works on
//! heap-allocated `nalgebra` matrices without any attempt at sparsity. Basis
//! indices follow one fixed convention: qubit 0 is the most significant bit of
//! a basis-state index, so `|q0 q1 .. q_{n-1}>` has index
//! `q0*2^{n-1} + .. + q_{n-1}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Kronecker product with the left factor as the more significant subsystem.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Maximum absolute deviation from Hermiticity, `max_ij |m_ij - conj(m_ji)|`.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let mut err: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            err = err.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    err
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order together with the matching
/// eigenvector columns. The input is assumed Hermitian; callers validate.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let dim = m.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let (values, _) = eigh(m);
    values[0]
}

fn check_qubit_args(n: usize, qubits: &[usize]) {
    debug_assert!(qubits.iter().all(|&q| q < n));
    debug_assert!({
        let mut seen = vec![false; n];
        qubits.iter().all(|&q| !std::mem::replace(&mut seen[q], true))
    });
}

/// Extracts the bits of `qubits` from a full index, packed with `qubits[0]`
/// as the most significant bit of the result.
pub fn extract_bits(index: usize, qubits: &[usize], n: usize) -> usize {
    let mut out = 0;
    for &q in qubits {
        out = (out << 1) | ((index >> (n - 1 - q)) & 1);
    }
    out
}

/// Overwrites the bits of `qubits` inside `index` with the bits of `sub`
/// (same packing as [`extract_bits`]).
pub fn insert_bits(index: usize, sub: usize, qubits: &[usize], n: usize) -> usize {
    let mut out = index;
    for (pos, &q) in qubits.iter().enumerate() {
        let bit = (sub >> (qubits.len() - 1 - pos)) & 1;
        let shift = n - 1 - q;
        out = (out & !(1 << shift)) | (bit << shift);
    }
    out
}

/// Applies a unitary acting on the given qubits to an n-qubit operator:
/// `rho -> U rho U^dag`, with `u` expressed in the subsystem basis whose most
/// significant bit is `qubits[0]`.
pub fn conjugate_on_qubits(rho: &CMat, u: &CMat, qubits: &[usize], n: usize) -> CMat {
    let full = embed_unitary(u, qubits, n);
    &full * rho * full.adjoint()
}

/// Expands a k-qubit operator to the full register as `I (x) u (x) I` with the
/// appropriate index interleaving.
pub fn embed_unitary(u: &CMat, qubits: &[usize], n: usize) -> CMat {
    check_qubit_args(n, qubits);
    let dim = 1usize << n;
    let sub = u.nrows();
    debug_assert_eq!(sub, 1usize << qubits.len());
    let mut full = CMat::zeros(dim, dim);
    let rest: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    for i in 0..dim {
        let si = extract_bits(i, qubits, n);
        let ri = extract_bits(i, &rest, n);
        for sj in 0..sub {
            if u[(si, sj)] == ZERO {
                continue;
            }
            let mut j = insert_bits(0, sj, qubits, n);
            j = insert_bits(j, ri, &rest, n);
            full[(i, j)] = u[(si, sj)];
        }
    }
    full
}

/// Partial trace over `traced` qubits; the result keeps the remaining qubits
/// in their original relative order.
pub fn partial_trace(rho: &CMat, traced: &[usize], n: usize) -> CMat {
    check_qubit_args(n, traced);
    let keep: Vec<usize> = (0..n).filter(|q| !traced.contains(q)).collect();
    let kdim = 1usize << keep.len();
    let tdim = 1usize << traced.len();
    let mut out = CMat::zeros(kdim, kdim);
    for ki in 0..kdim {
        for kj in 0..kdim {
            let mut acc = ZERO;
            for t in 0..tdim {
                let mut i = insert_bits(0, ki, &keep, n);
                i = insert_bits(i, t, traced, n);
                let mut j = insert_bits(0, kj, &keep, n);
                j = insert_bits(j, t, traced, n);
                acc += rho[(i, j)];
            }
            out[(ki, kj)] = acc;
        }
    }
    out
}

/// Rebuilds a full-register operator from an operator on the kept qubits and
/// the maximally mixed state on `mixed` qubits.
pub fn insert_mixed(kept: &CMat, mixed: &[usize], n: usize) -> CMat {
    check_qubit_args(n, mixed);
    let keep: Vec<usize> = (0..n).filter(|q| !mixed.contains(q)).collect();
    let dim = 1usize << n;
    let weight = 1.0 / (1usize << mixed.len()) as f64;
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        let mi = extract_bits(i, mixed, n);
        for j in 0..dim {
            if extract_bits(j, mixed, n) != mi {
                continue;
            }
            let ki = extract_bits(i, &keep, n);
            let kj = extract_bits(j, &keep, n);
            out[(i, j)] = kept[(ki, kj)] * weight;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigh_reconstructs_hermitian_input() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(3.0, 0.0)]);
        let (vals, vecs) = eigh(&m);
        assert!(vals[0] <= vals[1]);
        let diag = CMat::from_diagonal(&CVec::from_iterator(2, vals.iter().map(|&v| c(v, 0.0))));
        let recon = &vecs * diag * vecs.adjoint();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn bit_helpers_round_trip() {
        let n = 4;
        for index in 0..16 {
            let qubits = [2usize, 0];
            let sub = extract_bits(index, &qubits, n);
            let rest: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
            let r = extract_bits(index, &rest, n);
            let mut rebuilt = insert_bits(0, sub, &qubits, n);
            rebuilt = insert_bits(rebuilt, r, &rest, n);
            assert_eq!(rebuilt, index);
        }
    }

    #[test]
    fn partial_trace_of_product_state_factors() {
        // |01><01| on two qubits: tracing qubit 0 leaves |1><1|.
        let mut rho = CMat::zeros(4, 4);
        rho[(1, 1)] = ONE;
        let reduced = partial_trace(&rho, &[0], 2);
        assert!((reduced[(1, 1)] - ONE).norm() < 1e-15);
        assert!((reduced[(0, 0)]).norm() < 1e-15);
    }

    #[test]
    fn embed_matches_kron_for_adjacent_qubits() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)],
        ) / c(std::f64::consts::SQRT_2, 0.0);
        let id = CMat::identity(2, 2);
        let expect = kron(&h, &id);
        let got = embed_unitary(&h, &[0], 2);
        assert!((expect - got).norm() < 1e-12);
    }
}
