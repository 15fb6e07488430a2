//! Upper bounds on the trace distance to the separable set: Frank-Wolfe over
//! product pure states, with the linear-minimization step solved by
//! alternating bottom-eigenvector updates on the trace-norm subgradient.

use rand::Rng;
use serde::Serialize;

use super::ensemble::SepEnsemble;
use super::two_qubit;
use super::{bipartite_dims, ppt_min_eig, seesaw_sep_fidelity, weighted_sum, SepOptions};
use crate::convex_fit::{fit_simplex, half_trace_norm, FitOptions};
use crate::error::Result;
use crate::linalg::{self, c, CMat, CVec, ZERO};
use crate::qcore::{haar_vector, DensityOp};
use crate::rng::task_rng;

#[derive(Debug, Clone, Serialize)]
pub struct SepDistance {
    /// Trace distance to the witness; an upper bound on the distance to SEP.
    pub distance: f64,
    #[serde(skip)]
    pub witness: SepEnsemble,
    pub rounds: usize,
    pub converged: bool,
}

/// Exact separable decompositions for maximally mixed and pure product states.
pub(crate) fn exact_witness(rho: &DensityOp, da: usize, db: usize) -> Option<SepEnsemble> {
    let n = da * db;
    let m = rho.matrix();
    if linalg::max_abs_diff(m, &(CMat::identity(n, n) / c(n as f64, 0.0))) <= 1e-12 {
        let mut terms = Vec::with_capacity(n);
        for i in 0..da {
            for j in 0..db {
                terms.push((1.0, linalg::basis_vec(da, i), linalg::basis_vec(db, j)));
            }
        }
        return SepEnsemble::from_terms(terms).ok();
    }
    let (top, v) = linalg::top_eigvec(m);
    if top >= 1.0 - 1e-12 {
        let (s, a, b) = linalg::product_split(&v, da, db);
        if s * s >= 1.0 - 1e-12 {
            return SepEnsemble::from_terms(vec![(1.0, a, b)]).ok();
        }
    }
    None
}

fn marginal_product(rho: &DensityOp, da: usize, db: usize) -> Result<SepEnsemble> {
    let ra = rho.partial_trace(&[1])?;
    let rb = rho.partial_trace(&[0])?;
    let (la, va) = linalg::eigh(ra.matrix());
    let (lb, vb) = linalg::eigh(rb.matrix());
    let mut terms = Vec::with_capacity(da * db);
    for i in 0..da {
        for j in 0..db {
            let w = la[i].max(0.0) * lb[j].max(0.0);
            if w > 0.0 {
                terms.push((w, va.column(i).into_owned(), vb.column(j).into_owned()));
            }
        }
    }
    SepEnsemble::from_terms(terms)
}

/// A cheap separable starting point. For two qubits: the exact product
/// decomposition when `rho` is PPT, and otherwise the decomposition of the
/// least mixture `(1-t) rho + t rho_A (x) rho_B` that is PPT. Elsewhere: the
/// product of the marginals.
pub(crate) fn initial_witness(rho: &DensityOp, da: usize, db: usize) -> Result<SepEnsemble> {
    if let Some(e) = exact_witness(rho, da, db) {
        return Ok(e);
    }
    let product = marginal_product(rho, da, db)?;
    if (da, db) != (2, 2) {
        return Ok(product);
    }
    let pm = product.as_matrix();
    let at = |t: f64| DensityOp::from_raw(rho.matrix() * c(1.0 - t, 0.0) + &pm * c(t, 0.0), vec![2, 2]);
    let mut target = rho.clone();
    if ppt_min_eig(rho, 1)? < 0.0 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ppt_min_eig(&at(mid), 1)? >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        target = at(hi);
    }
    let terms = two_qubit::product_terms(target.matrix());
    match SepEnsemble::from_terms(terms) {
        Ok(e) if linalg::max_abs_diff(&e.as_matrix(), target.matrix()) < 1e-8 => Ok(e),
        _ => Ok(product),
    }
}

pub(crate) fn reduce_left(g: &CMat, b: &CVec, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, da, |i, k| {
        let mut acc = ZERO;
        for j in 0..db {
            for l in 0..db {
                acc += b[j].conj() * g[(i * db + j, k * db + l)] * b[l];
            }
        }
        acc
    })
}

pub(crate) fn reduce_right(g: &CMat, a: &CVec, da: usize, db: usize) -> CMat {
    CMat::from_fn(db, db, |j, l| {
        let mut acc = ZERO;
        for i in 0..da {
            for k in 0..da {
                acc += a[i].conj() * g[(i * db + j, k * db + l)] * a[k];
            }
        }
        acc
    })
}

/// Approximate `min <a (x) b| G |a (x) b>` over unit product vectors, by
/// alternating bottom eigenvectors from the split bottom eigenvector of `G`
/// and `starts` random points.
pub fn product_lmo<R: Rng + ?Sized>(g: &CMat, da: usize, db: usize, starts: usize, rng: &mut R) -> (f64, CVec, CVec) {
    let (_, v) = linalg::bottom_eigvec(g);
    let (_, _, b0) = linalg::product_split(&v, da, db);
    let mut inits = vec![b0];
    for _ in 0..starts {
        inits.push(haar_vector(db, rng));
    }
    let mut best = (f64::INFINITY, CVec::zeros(da), CVec::zeros(db));
    for mut b in inits {
        let mut value = f64::INFINITY;
        let mut a = CVec::zeros(da);
        for _ in 0..100 {
            let (_, na) = linalg::bottom_eigvec(&reduce_left(g, &b, da, db));
            let (nv, nb) = linalg::bottom_eigvec(&reduce_right(g, &na, da, db));
            a = na;
            b = nb;
            let done = value - nv < 1e-14;
            value = nv;
            if done {
                break;
            }
        }
        if value < best.0 {
            best = (value, a, b);
        }
    }
    best
}

/// Frank-Wolfe over the convex hull of product states, warm-started at `init`.
pub(crate) fn polish(rho: &CMat, da: usize, db: usize, init: &SepEnsemble, rounds: usize, seed: u64) -> Result<SepDistance> {
    let mut vecs: Vec<(CVec, CVec)> =
        init.parts_a().iter().zip(init.parts_b()).map(|(a, b)| (a.amplitudes().clone(), b.amplitudes().clone())).collect();
    let mut atoms: Vec<CMat> = vecs.iter().map(|(a, b)| linalg::projector(&linalg::kron_vec(a, b))).collect();
    let mut weights = init.weights().to_vec();
    let mut best = half_trace_norm(&(weighted_sum(&atoms, &weights) - rho));
    let mut rng = task_rng(seed, 0x5eed);
    let mut used = 0;
    let mut converged = false;
    let fit_opts = FitOptions { max_iters: 200, tol: 1e-12 };
    for round in 0..rounds {
        used = round + 1;
        if best <= 1e-15 {
            converged = true;
            break;
        }
        let sigma = weighted_sum(&atoms, &weights);
        let g = linalg::sign_operator(&(&sigma - rho)) * c(0.5, 0.0);
        let current = linalg::trace_product(&g, &sigma).re;
        let (value, a, b) = product_lmo(&g, da, db, 2, &mut rng);
        if current - value <= 1e-13 {
            converged = true;
            break;
        }
        // keep only the support plus the new atom
        let keep: Vec<usize> = (0..atoms.len()).filter(|&i| weights[i] > 0.0).collect();
        vecs = keep.iter().map(|&i| vecs[i].clone()).collect();
        atoms = keep.iter().map(|&i| atoms[i].clone()).collect();
        weights = keep.iter().map(|&i| weights[i]).collect();
        atoms.push(linalg::projector(&linalg::kron_vec(&a, &b)));
        vecs.push((a, b));
        weights.push(0.0);
        let fit = fit_simplex(&atoms, rho, Some(&weights), fit_opts);
        let gain = best - fit.distance;
        if fit.distance < best {
            weights = fit.weights;
            best = fit.distance;
        }
        if gain < 1e-10 {
            converged = true;
            break;
        }
    }
    let terms = vecs.into_iter().zip(weights).map(|((a, b), w)| (w, a, b)).collect();
    let witness = SepEnsemble::from_terms(terms)?;
    let distance = half_trace_norm(&(witness.as_matrix() - rho));
    Ok(SepDistance { distance, witness, rounds: used, converged })
}

/// Upper bound on `min_{sigma in SEP} T(rho, sigma)` with an explicit witness.
/// Starts from the better of the cheap separable witness and the see-saw
/// fidelity witness, then runs Frank-Wolfe over product states.
pub fn nearest_sep_trace_ub(rho: &DensityOp, opts: SepOptions, seed: u64) -> Result<SepDistance> {
    let (da, db) = bipartite_dims(rho)?;
    if let Some(e) = exact_witness(rho, da, db) {
        let distance = half_trace_norm(&(e.as_matrix() - rho.matrix()));
        return Ok(SepDistance { distance, witness: e, rounds: 0, converged: true });
    }
    let m = rho.matrix();
    let mut start = initial_witness(rho, da, db)?;
    let mut start_dist = half_trace_norm(&(start.as_matrix() - m));
    if start_dist <= 1e-12 {
        return Ok(SepDistance { distance: start_dist, witness: start, rounds: 0, converged: true });
    }
    let fid = seesaw_sep_fidelity(rho, opts, seed)?;
    let fid_dist = half_trace_norm(&(fid.witness.as_matrix() - m));
    if fid_dist < start_dist {
        start = fid.witness;
        start_dist = fid_dist;
    }
    let polished = polish(m, da, db, &start, opts.iters, seed)?;
    if polished.distance <= start_dist {
        Ok(polished)
    } else {
        Ok(SepDistance { distance: start_dist, witness: start, rounds: 0, converged: false })
    }
}
