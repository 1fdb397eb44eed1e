//! Sparse and dense linear algebra helpers shared by the operator and Hodge layers.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SparseMatrix = CsrMatrix<Complex64>;

const NORM_SEED: u64 = 0x5eed_f01d;
const NORM_ITERATIONS: usize = 60;

pub fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn zero_sparse(rows: usize, cols: usize) -> SparseMatrix {
    CsrMatrix::zeros(rows, cols)
}

/// Builds a block-diagonal matrix with one `rows × cols` block per grid point.
pub fn block_diagonal(
    points: usize,
    rows: usize,
    cols: usize,
    block: impl Fn(usize) -> DMatrix<Complex64>,
) -> SparseMatrix {
    let mut coo = CooMatrix::new(points * rows, points * cols);
    for p in 0..points {
        let b = block(p);
        debug_assert_eq!(b.shape(), (rows, cols));
        for j in 0..cols {
            for i in 0..rows {
                let v = b[(i, j)];
                if v != Complex64::default() {
                    coo.push(p * rows + i, p * cols + j, v);
                }
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(c64)
}

/// Conjugate transpose.
pub fn adjoint(a: &SparseMatrix) -> SparseMatrix {
    let mut t = a.transpose();
    t.values_mut().iter_mut().for_each(|v| *v = v.conj());
    t
}

pub fn scale(a: &SparseMatrix, s: Complex64) -> SparseMatrix {
    let mut out = a.clone();
    out.values_mut().iter_mut().for_each(|v| *v *= s);
    out
}

/// `a + s·b`.
pub fn add_scaled(a: &SparseMatrix, s: Complex64, b: &SparseMatrix) -> SparseMatrix {
    a + &scale(b, s)
}

pub fn to_dense(a: &SparseMatrix) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        m[(i, j)] += *v;
    }
    m
}

pub fn from_dense(m: &DMatrix<Complex64>) -> SparseMatrix {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != Complex64::default() {
                coo.push(i, j, m[(i, j)]);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn matvec(a: &SparseMatrix, x: &DVector<Complex64>) -> DVector<Complex64> {
    let mut y = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        let mut s = Complex64::default();
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[j];
        }
        y[i] = s;
    }
    y
}

/// Largest singular value, by power iteration on `AᴴA` from a fixed seed.
///
/// Exact for blocks with no stored entries; otherwise a lower estimate that
/// converges geometrically in the singular-value gap.
pub fn spectral_norm(a: &SparseMatrix) -> f64 {
    if a.nnz() == 0 || a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.values().iter().all(|v| *v == Complex64::default()) {
        return 0.0;
    }
    let ah = adjoint(a);
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let mut x = DVector::from_fn(a.ncols(), |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    x /= c64(x.norm());
    let mut best = 0.0f64;
    for _ in 0..NORM_ITERATIONS {
        let y = matvec(a, &x);
        let sigma = y.norm();
        best = best.max(sigma);
        let z = matvec(&ah, &y);
        let nz = z.norm();
        if nz == 0.0 {
            break;
        }
        x = z / c64(nz);
    }
    best
}

/// Spectral norm of a small dense matrix via its singular values.
pub fn dense_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Symmetric square root and inverse square root of an SPD matrix.
pub fn spd_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (m.clone(), m.clone());
    }
    if *m == DMatrix::identity(n, n) {
        return (m.clone(), m.clone());
    }
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_root = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    (v * root * v.transpose(), v * inv_root * v.transpose())
}

/// Eigenpairs of a Hermitian matrix, ascending, with each eigenvector's first
/// significant component rotated to the positive real axis.
pub fn hermitian_eigen(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), m);
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_phase(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Rotates `v` so that its first component above `1e-8·‖v‖∞` is real positive.
pub fn fix_phase(v: &mut DVector<Complex64>) {
    let amax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * amax).copied() {
        let phase = z.conj() / c64(z.norm());
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Hermitian part `(A + Aᴴ)/2` and the relative size of the discarded part.
pub fn hermitian_part(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let adj = m.adjoint();
    let skew = (m - &adj).map(|z| z.norm()).max();
    let scale = m.map(|z| z.norm()).max().max(f64::MIN_POSITIVE);
    ((m + adj) * c64(0.5), 0.5 * skew / scale)
}

/// Numerical rank from singular values with a relative threshold, together with
/// the gap ratio between the last kept and the first dropped value.
pub fn numerical_rank(singular: &[f64], relative: f64) -> (usize, f64) {
    let smax = singular.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return (0, f64::INFINITY);
    }
    let tol = relative * smax;
    let kept: Vec<f64> = singular.iter().copied().filter(|&s| s > tol).collect();
    let dropped_max = singular.iter().copied().filter(|&s| s <= tol).fold(0.0, f64::max);
    let kept_min = kept.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = if dropped_max == 0.0 {
        f64::INFINITY
    } else {
        kept_min / dropped_max
    };
    (kept.len(), gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_dense_norm() {
        let m = DMatrix::from_fn(20, 13, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64 - j as f64) * 0.1)
        });
        let s = from_dense(&m);
        let exact = dense_norm(&m);
        assert!((spectral_norm(&s) - exact).abs() < 1e-8 * exact);
        assert_eq!(spectral_norm(&zero_sparse(3, 4)), 0.0);
    }

    #[test]
    fn adjoint_conjugates() {
        let m = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)]);
        assert_eq!(to_dense(&adjoint(&from_dense(&m))), m.adjoint());
    }

    #[test]
    fn spd_roots() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (r, ir) = spd_sqrt(&m);
        assert!((&r * &r - &m).amax() < 1e-14);
        assert!((&r * &ir - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn eigen_is_sorted_and_phase_fixed() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c64(2.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), c64(2.0)],
        );
        let (vals, vecs) = hermitian_eigen(m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        for j in 0..2 {
            let first = vecs[(0, j)];
            assert!(first.im.abs() < 1e-14 && first.re > 0.0);
        }
    }

    #[test]
    fn rank_and_gap() {
        let (r, gap) = numerical_rank(&[3.0, 1.0, 1e-12], 1e-8);
        assert_eq!(r, 2);
        assert!(gap > 1e11);
    }
}
