//! Two-qubit states: concurrence and an explicit product-state decomposition
//! of separable states by Wootters' construction.

use nalgebra::DMatrix;

use crate::linalg::{self, c, CMat, CVec, C64, ZERO};

/// `(sigma_y (x) sigma_y) conj(v)`.
fn spin_flip(v: &CVec) -> CVec {
    CVec::from_vec(vec![-v[3].conj(), v[2].conj(), v[1].conj(), -v[0].conj()])
}

/// Takagi factorization `a = U diag(s) U^T` of a complex symmetric matrix,
/// through the real symmetric embedding `[[Re a, Im a], [Im a, -Re a]]`,
/// whose eigenvector `[x; y]` for eigenvalue `s >= 0` gives `u = x + i y`.
fn takagi(a: &CMat) -> (Vec<f64>, CMat) {
    let r = a.nrows();
    let m = DMatrix::<f64>::from_fn(2 * r, 2 * r, |i, j| {
        let (ii, jj) = (i % r, j % r);
        let z = a[(ii, jj)];
        match (i < r, j < r) {
            (true, true) => z.re,
            (true, false) | (false, true) => z.im,
            (false, false) => -z.re,
        }
    });
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * r).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut cols: Vec<CVec> = Vec::with_capacity(r);
    for &k in &order {
        if cols.len() == r {
            break;
        }
        let e = eig.eigenvectors.column(k);
        let mut u = CVec::from_fn(r, |i, _| c(e[i], e[i + r]));
        for q in &cols {
            let proj = q.dotc(&u);
            u -= q * proj;
        }
        let n = u.norm();
        if n > 0.5 {
            cols.push(u / c(n, 0.0));
        }
    }
    let u = CMat::from_columns(&cols);
    let values = (0..r)
        .map(|k| {
            let uk = u.column(k);
            (uk.adjoint() * a * uk.conjugate())[(0, 0)].re.max(0.0)
        })
        .collect();
    (values, u)
}

/// Unit complex numbers `w` with `sum w_k l_k = 0` for `l` sorted descending,
/// or the best alignment `(1,-1,-1,-1)` when the largest entry dominates.
fn closing_phases(l: [f64; 4]) -> [C64; 4] {
    let [l1, l2, l3, l4] = l;
    if l1 >= l2 + l3 + l4 {
        return [c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)];
    }
    let cos_from = |a: f64, b: f64, len: f64| {
        if a * b <= 0.0 {
            -1.0
        } else {
            ((len * len - a * a - b * b) / (2.0 * a * b)).clamp(-1.0, 1.0)
        }
    };
    // sides l1, l2 combine to a vector of length big, cancelled by l3, l4
    let big = (l1 - l2).max(l3 - l4);
    let beta = cos_from(l1, l2, big).acos();
    let w2 = C64::from_polar(1.0, beta);
    let s = c(l1, 0.0) + w2 * l2;
    let dir = if s.norm() > 0.0 { -s / s.norm() } else { c(1.0, 0.0) };
    let psi = cos_from(l3, l4, big).acos();
    let w = c(l3, 0.0) + C64::from_polar(l4, psi);
    let rot = if w.norm() > 0.0 { w.conj() / w.norm() } else { c(1.0, 0.0) };
    // rot * w is real and equals |w| = big up to rounding
    let w3 = dir * rot;
    let w4 = dir * rot * C64::from_polar(1.0, psi);
    [c(1.0, 0.0), w2, w3, w4]
}

/// A two-qubit state's preconcurrence data: sorted Wootters values and the
/// matching vectors `x_i` with `rho = sum x_i x_i^dagger`.
fn wootters_frame(rho: &CMat) -> ([f64; 4], Vec<CVec>) {
    let (values, vectors) = linalg::eigh(rho);
    let floor = linalg::EIG_FLOOR * values.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    let vs: Vec<CVec> = values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > floor)
        .map(|(k, &l)| vectors.column(k) * c(l.sqrt(), 0.0))
        .collect();
    let r = vs.len();
    let tau = CMat::from_fn(r, r, |i, j| vs[i].dotc(&spin_flip(&vs[j])));
    let (lam, u) = takagi(&tau);
    // x_i = sum_k U_ki v_k
    let mut pairs: Vec<(f64, CVec)> = (0..r)
        .map(|i| {
            let mut x = CVec::zeros(4);
            for (k, v) in vs.iter().enumerate() {
                x += v * u[(k, i)];
            }
            (lam[i], x)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut l = [0.0; 4];
    let mut xs = Vec::with_capacity(4);
    for (i, (li, x)) in pairs.into_iter().enumerate() {
        l[i] = li;
        xs.push(x);
    }
    while xs.len() < 4 {
        xs.push(CVec::zeros(4));
    }
    (l, xs)
}

pub fn concurrence(rho: &CMat) -> f64 {
    let (l, _) = wootters_frame(rho);
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Up to four product terms `(p, a, b)` reproducing a separable two-qubit
/// state; for entangled input the terms are the closest product
/// approximations of Wootters' vectors and do not sum to `rho`.
pub fn product_terms(rho: &CMat) -> Vec<(f64, CVec, CVec)> {
    let (l, xs) = wootters_frame(rho);
    let w = closing_phases(l);
    let zs: Vec<CVec> = xs.iter().zip(w.iter()).map(|(x, wk)| x * C64::from_polar(1.0, -wk.arg() / 2.0)).collect();
    const H: [[f64; 4]; 4] = [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];
    let mut out = Vec::with_capacity(4);
    for row in H.iter() {
        let mut y = CVec::from_element(4, ZERO);
        for (k, z) in zs.iter().enumerate() {
            y += z * c(0.5 * row[k], 0.0);
        }
        let (s, a, b) = linalg::product_split(&y, 2, 2);
        if s * s > 1e-300 {
            out.push((s * s, a, b));
        }
    }
    out
}
