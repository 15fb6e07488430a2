//! Least-squares refinement of a separable decomposition: Levenberg-Marquardt
//! on the unnormalized factors of `sum_i (a_i (x) b_i)(a_i (x) b_i)^dagger`
//! against a target. Near a separable target the alternating fits converge
//! sublinearly; this closes the remaining gap quadratically.
//!
//! When the target is rank deficient every exact term lies in its support, so
//! the out-of-support part of each term is an extra (linear) residual; left
//! to the quadratic `x x^dagger` block alone it would converge sublinearly.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, c, CMat, CVec, C64};

struct Layout {
    da: usize,
    db: usize,
    terms: usize,
}

impl Layout {
    fn per_term(&self) -> usize {
        2 * (self.da + self.db)
    }

    fn unpack(&self, z: &DVector<f64>) -> Vec<(CVec, CVec)> {
        (0..self.terms)
            .map(|t| {
                let o = t * self.per_term();
                let a = CVec::from_fn(self.da, |i, _| c(z[o + 2 * i], z[o + 2 * i + 1]));
                let ob = o + 2 * self.da;
                let b = CVec::from_fn(self.db, |j, _| c(z[ob + 2 * j], z[ob + 2 * j + 1]));
                (a, b)
            })
            .collect()
    }
}

/// Real coordinates of a Hermitian matrix with `|r|^2 = |M|_F^2`.
fn herm_coords(m: &CMat, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        out[k] = m[(i, i)].re;
        k += 1;
        for j in i + 1..n {
            out[k] = s2 * m[(i, j)].re;
            out[k + 1] = s2 * m[(i, j)].im;
            k += 2;
        }
    }
}

/// Residual rows: the Hermitian mismatch, then `Q^dagger x_i` per term where
/// the columns of `Q` span the kernel of the target.
fn residual(parts: &[(CVec, CVec)], target: &CMat, q: &CMat) -> DVector<f64> {
    let n = target.nrows();
    let k = q.ncols();
    let mut m = -target.clone();
    let mut r = DVector::zeros(n * n + 2 * k * parts.len());
    for (t, (a, b)) in parts.iter().enumerate() {
        let x = linalg::kron_vec(a, b);
        m += linalg::projector(&x);
        let out = q.adjoint() * &x;
        for i in 0..k {
            r[n * n + 2 * (t * k + i)] = out[i].re;
            r[n * n + 2 * (t * k + i) + 1] = out[i].im;
        }
    }
    herm_coords(&m, &mut r.as_mut_slice()[..n * n]);
    r
}

fn jacobian(parts: &[(CVec, CVec)], lay: &Layout, q: &CMat) -> DMatrix<f64> {
    let n = lay.da * lay.db;
    let k = q.ncols();
    let cols = lay.terms * lay.per_term();
    let mut j = DMatrix::zeros(n * n + 2 * k * lay.terms, cols);
    let mut buf = vec![0.0; n * n];
    let qh = q.adjoint();
    for (t, (a, b)) in parts.iter().enumerate() {
        let x = linalg::kron_vec(a, b);
        let base = t * lay.per_term();
        for p in 0..lay.per_term() {
            let unit = if p % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
            let dx = if p < 2 * lay.da {
                let mut e = CVec::zeros(lay.da);
                e[p / 2] = unit;
                linalg::kron_vec(&e, b)
            } else {
                let mut e = CVec::zeros(lay.db);
                e[(p - 2 * lay.da) / 2] = unit;
                linalg::kron_vec(a, &e)
            };
            let dm = CMat::from_fn(n, n, |r, s| dx[r] * x[s].conj() + x[r] * dx[s].conj());
            herm_coords(&dm, &mut buf);
            let mut col = j.column_mut(base + p);
            col.rows_mut(0, n * n).copy_from_slice(&buf);
            let out = &qh * &dx;
            for i in 0..k {
                col[n * n + 2 * (t * k + i)] = out[i].re;
                col[n * n + 2 * (t * k + i) + 1] = out[i].im;
            }
        }
    }
    j
}

/// Whether `terms` live terms are cheap enough to refine: always up to
/// `2 dA dB`, beyond that while one normal-equation solve stays small.
pub(crate) fn affordable(terms: usize, da: usize, db: usize) -> bool {
    let n = da * db;
    let rows = (n * n + 2 * n * terms) as f64;
    let cols = (terms * 2 * (da + db)) as f64;
    terms <= 2 * n || rows.min(cols).powi(2) * rows.max(cols) <= 1e8
}

/// Refine `(p, a, b)` terms towards `target` in Frobenius norm. Returns the
/// refined terms (renormalized to unit trace) and their Frobenius residual.
pub(crate) fn refine(target: &CMat, terms: &[(f64, CVec, CVec)], da: usize, db: usize, iters: usize) -> (Vec<(f64, CVec, CVec)>, f64) {
    let live: Vec<&(f64, CVec, CVec)> = terms.iter().filter(|t| t.0 > 1e-12).collect();
    let (values, vectors) = linalg::eigh(target);
    let floor = 1e-10 * values.last().copied().unwrap_or(0.0).max(0.0);
    let kernel: Vec<CVec> =
        values.iter().enumerate().filter(|(_, &l)| l <= floor).map(|(k, _)| vectors.column(k).into_owned()).collect();
    let q = if kernel.is_empty() { CMat::zeros(target.nrows(), 0) } else { CMat::from_columns(&kernel) };
    let lay = Layout { da, db, terms: live.len() };
    let mut z = DVector::zeros(lay.terms * lay.per_term());
    for (t, (p, a, b)) in live.iter().enumerate() {
        let o = t * lay.per_term();
        let a = a * c(p.sqrt(), 0.0);
        for i in 0..da {
            z[o + 2 * i] = a[i].re;
            z[o + 2 * i + 1] = a[i].im;
        }
        for j in 0..db {
            z[o + 2 * da + 2 * j] = b[j].re;
            z[o + 2 * da + 2 * j + 1] = b[j].im;
        }
    }
    let mut parts = lay.unpack(&z);
    let mut r = residual(&parts, target, &q);
    let mut cost = r.norm_squared();
    let mut mu = -1.0;
    for _ in 0..iters {
        if cost < 1e-30 {
            break;
        }
        let jac = jacobian(&parts, &lay, &q);
        // the smaller normal matrix: J J^T (dual) or J^T J (primal)
        let dual = jac.nrows() <= jac.ncols();
        let normal = if dual { &jac * jac.transpose() } else { jac.transpose() * &jac };
        if mu < 0.0 {
            mu = 1e-6 * normal.diagonal().max().max(1e-300);
        }
        let mut improved = false;
        while mu < 1e12 {
            let mut lhs = normal.clone();
            for k in 0..lhs.nrows() {
                lhs[(k, k)] += mu;
            }
            let Some(ch) = lhs.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = if dual { -(jac.transpose() * ch.solve(&r)) } else { -ch.solve(&(jac.transpose() * &r)) };
            let z_try = &z + step;
            let parts_try = lay.unpack(&z_try);
            let r_try = residual(&parts_try, target, &q);
            let cost_try = r_try.norm_squared();
            if cost_try < cost {
                z = z_try;
                parts = parts_try;
                r = r_try;
                cost = cost_try;
                mu = (mu / 5.0).max(1e-300);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let mut out: Vec<(f64, CVec, CVec)> = parts
        .into_iter()
        .filter_map(|(a, b)| {
            let (na, nb) = (a.norm(), b.norm());
            let p = (na * nb).powi(2);
            (p > 0.0).then(|| (p, a / C64::new(na, 0.0), b / C64::new(nb, 0.0)))
        })
        .collect();
    let total: f64 = out.iter().map(|t| t.0).sum();
    out.iter_mut().for_each(|t| t.0 /= total);
    let n = target.nrows();
    (out, r.rows(0, n * n).norm())
}
