//! Dense complex linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues below this (relative to the spectral scale) are treated as zero
/// when taking square roots of PSD matrices.
pub const EIG_FLOOR: f64 = 1e-14;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Max elementwise |M - M^dagger|.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], CMat::from_element(1, 1, ONE));
    }
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m)[0]
}

/// Rebuild `V diag(f(λ)) V^dagger`.
pub fn spectral_map(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = vectors.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        let w = f(lam);
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        for j in 0..n {
            let vj = v[j].conj() * w;
            for i in 0..n {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    out
}

/// Square root of a PSD matrix; eigenvalues below the noise floor are zeroed.
pub fn sqrt_psd(m: &CMat) -> CMat {
    let (values, vectors) = eigh(m);
    let floor = psd_floor(&values);
    spectral_map(&values, &vectors, |l| if l > floor { l.sqrt() } else { 0.0 })
}

/// Inverse square root on the support of a PSD matrix.
pub fn inv_sqrt_psd(m: &CMat) -> CMat {
    let (values, vectors) = eigh(m);
    let floor = psd_floor(&values);
    spectral_map(&values, &vectors, |l| if l > floor { 1.0 / l.sqrt() } else { 0.0 })
}

pub(crate) fn psd_floor(values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0f64, |a, &l| a.max(l.abs()));
    EIG_FLOOR * scale
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_herm(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|l| l.abs()).sum()
}

/// Sign operator `V sign(Λ) V^dagger` of a Hermitian matrix, with sign(0) = 0.
pub fn sign_operator(m: &CMat) -> CMat {
    let (values, vectors) = eigh(m);
    spectral_map(&values, &vectors, |l| {
        if l > 0.0 {
            1.0
        } else if l < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Largest-eigenvalue eigenvector of a Hermitian matrix.
pub fn top_eigvec(m: &CMat) -> (f64, CVec) {
    let (values, vectors) = eigh(m);
    let k = values.len() - 1;
    (values[k], vectors.column(k).into_owned())
}

/// Smallest-eigenvalue eigenvector of a Hermitian matrix.
pub fn bottom_eigvec(m: &CMat) -> (f64, CVec) {
    let (values, vectors) = eigh(m);
    (values[0], vectors.column(0).into_owned())
}

/// Thin SVD `m = U diag(s) V^dagger` with `s` descending, read off the
/// Hermitian dilation `[[0, M], [M^dagger, 0]]` whose eigenpairs are
/// `(+-s_i, (u_i; +-v_i) / sqrt 2)`. The dense complex SVD in nalgebra can
/// return factors that do not recompose the input (rank-one 2x2 inputs
/// included), while the Hermitian solver is reliable at every size used here.
/// Singular directions below the noise floor are completed to orthonormal
/// frames arbitrarily.
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (r, cdim) = m.shape();
    let k = r.min(cdim);
    let mut h = CMat::zeros(r + cdim, r + cdim);
    h.view_mut((0, r), (r, cdim)).copy_from(m);
    h.view_mut((r, 0), (cdim, r)).copy_from(&m.adjoint());
    let (values, vectors) = eigh(&h);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let floor = 1e-12 * top.max(f64::MIN_POSITIVE);
    let mut us: Vec<CVec> = Vec::with_capacity(k);
    let mut vs: Vec<CVec> = Vec::with_capacity(k);
    let mut s = Vec::with_capacity(k);
    for idx in (0..values.len()).rev().take(k) {
        if values[idx] <= floor {
            break;
        }
        let col = vectors.column(idx);
        let scale = c(std::f64::consts::SQRT_2, 0.0);
        us.push(col.rows(0, r).into_owned() * scale);
        vs.push(col.rows(r, cdim).into_owned() * scale);
        s.push(values[idx]);
    }
    complete_frame(&mut us, r, k);
    complete_frame(&mut vs, cdim, k);
    s.resize(k, 0.0);
    (CMat::from_columns(&us), s, CMat::from_columns(&vs))
}

/// Extend orthonormal vectors in `C^dim` to `count` of them by Gram-Schmidt
/// on the standard basis.
fn complete_frame(frame: &mut Vec<CVec>, dim: usize, count: usize) {
    let mut next = 0;
    while frame.len() < count && next < dim {
        let mut v = basis_vec(dim, next);
        next += 1;
        for _ in 0..2 {
            for q in frame.iter() {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        if let Some(v) = normalized(&v).filter(|_| v.norm() > 1e-6) {
            frame.push(v);
        }
    }
}

/// Unitary (or co-isometry / isometry) polar factor `U V^dagger` of `m`.
/// Built from the eigenvectors of the smaller Gram matrix; directions with
/// negligible singular value are completed arbitrarily and the result is
/// re-orthonormalized, so it satisfies its isometry identity to rounding.
pub fn polar_factor(m: &CMat) -> CMat {
    let (r, cdim) = m.shape();
    if r > cdim {
        return polar_factor(&m.adjoint()).adjoint();
    }
    let (values, vectors) = eigh(&(m * m.adjoint()));
    let top = values[r - 1].max(0.0).sqrt();
    let mut us = Vec::with_capacity(r);
    let mut vs: Vec<CVec> = Vec::with_capacity(r);
    for k in (0..r).rev() {
        let sigma = values[k].max(0.0).sqrt();
        if sigma <= 1e-10 * top || top == 0.0 {
            break;
        }
        let u = vectors.column(k).into_owned();
        let mut v = m.adjoint() * &u / c(sigma, 0.0);
        for q in &vs {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let Some(v) = normalized(&v) else { break };
        us.push(u);
        vs.push(v);
    }
    for k in (0..r - us.len()).rev() {
        us.push(vectors.column(k).into_owned());
    }
    complete_frame(&mut vs, cdim, r);
    let mut out = CMat::zeros(r, cdim);
    for (u, v) in us.iter().zip(&vs) {
        out += outer(u, v);
    }
    out
}

/// Trace norm `Re tr(P^dagger m)` with `P` the polar factor; errors in `P`
/// enter only at second order.
pub fn trace_norm(m: &CMat) -> f64 {
    trace_product(&polar_factor(m).adjoint(), m).re
}

/// Leading singular triple `(s, u, v)` with `m ~ s u v^dagger`.
pub fn top_singular(m: &CMat) -> (f64, CVec, CVec) {
    let (r, cdim) = m.shape();
    if r > cdim {
        let (s, u, v) = top_singular(&m.adjoint());
        return (s, v, u);
    }
    let (_, u) = top_eigvec(&(m * m.adjoint()));
    let w = m.adjoint() * &u;
    let s = w.norm();
    match normalized(&w).filter(|_| s > 0.0) {
        Some(v) => (s, u, v),
        None => (0.0, basis_vec(r, 0), basis_vec(cdim, 0)),
    }
}

/// Best product approximation of a vector on `C^da (x) C^db`:
/// `v ~ s (a (x) b)` with unit `a`, `b` and `s >= 0` maximal.
pub fn product_split(v: &CVec, da: usize, db: usize) -> (f64, CVec, CVec) {
    let m = CMat::from_fn(da, db, |i, j| v[i * db + j]);
    let (s, u, w) = top_singular(&m);
    (s, u, w.conjugate())
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m).1
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

pub fn projector(x: &CVec) -> CMat {
    outer(x, x)
}

/// `<x|M|x>` real part for Hermitian M.
pub fn expectation(m: &CMat, x: &CVec) -> f64 {
    (x.adjoint() * m * x)[(0, 0)].re
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

pub fn frobenius_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn basis_vec(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = ONE;
    v
}

pub fn normalized(v: &CVec) -> Option<CVec> {
    let n = v.norm();
    (n > 1e-300).then(|| v / c(n, 0.0))
}

/// Orthonormalize the columns of a tall matrix: thin QR with R's diagonal made
/// positive real, which maps a complex Ginibre matrix to a Haar isometry.
pub fn orthonormalize_columns(g: CMat) -> CMat {
    let cols = g.ncols();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            let phase = rjj / n;
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    q
}
