//! The POVM form of the separable fidelity: with `Phi_ABE` a purification of
//! `rho`, maximize `sum_i <psi_i (x) w_i| Phi_BE |psi_i (x) w_i>` over pure
//! `psi_i` on B and rank-one POVMs `{w_i w_i^dagger}` on E.
//!
//! The POVM is the co-isometry `W = [w_1 .. w_r]`. For fixed `W` each `psi_i`
//! is a top eigenvector. For fixed `psi_i` the objective is a convex quadratic
//! in `W`, so replacing `W` by the polar factor of its gradient `[N_i w_i]`
//! cannot decrease it.

use rayon::prelude::*;
use serde::Serialize;

use super::tracefit::{reduce_left, reduce_right};
use super::{bipartite_dims, SepOptions};
use crate::error::{DlabError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::metrics::purify;
use crate::qcore::{random_isometry, DensityOp};
use crate::rng::task_rng;

#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Result {
    /// Best objective found; a lower bound on the maximum.
    pub value: f64,
    pub outcomes: usize,
    pub best_restart: usize,
    pub sweeps: usize,
}

/// `Phi_BE = tr_A |Phi><Phi|` for a purification on `(A B) (x) E`.
fn reduced_be(rho: &DensityOp, da: usize, db: usize) -> CMat {
    let n = da * db;
    let phi = purify(rho);
    let amps = phi.amplitudes();
    let width = db * n;
    let z = CMat::from_fn(da, width, |a, j| amps[a * width + j]);
    z.transpose() * z.conjugate()
}

fn sweep_value(phi_be: &CMat, w: &CMat, db: usize, n: usize) -> (f64, Vec<CVec>) {
    let mut total = 0.0;
    let mut psis = Vec::with_capacity(w.ncols());
    for i in 0..w.ncols() {
        let k = reduce_left(phi_be, &w.column(i).into_owned(), db, n);
        let (lam, psi) = linalg::top_eigvec(&k);
        total += lam;
        psis.push(psi);
    }
    (total, psis)
}

pub fn lemma2_rhs(rho: &DensityOp, r: usize, opts: SepOptions, seed: u64) -> Result<Lemma2Result> {
    if r < 1 {
        return Err(DlabError::InvalidParameter("the POVM needs at least one outcome".into()));
    }
    let (da, db) = bipartite_dims(rho)?;
    let n = da * db;
    let phi_be = reduced_be(rho, da, db);
    let runs: Vec<(f64, usize)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = task_rng(seed, restart as u64);
            let mut w = if r >= n {
                random_isometry(r, n, &mut rng).expect("r >= n").adjoint()
            } else {
                random_isometry(n, r, &mut rng).expect("r < n")
            };
            let (mut value, mut psis) = sweep_value(&phi_be, &w, db, n);
            let mut sweeps = 0;
            for _ in 0..opts.iters {
                let grad = CMat::from_columns(
                    &(0..r).map(|i| reduce_right(&phi_be, &psis[i], db, n) * w.column(i)).collect::<Vec<_>>(),
                );
                let next = linalg::polar_factor(&grad);
                let (v, p) = sweep_value(&phi_be, &next, db, n);
                if v < value {
                    break;
                }
                let gain = v - value;
                w = next;
                value = v;
                psis = p;
                sweeps += 1;
                if gain < opts.tol {
                    break;
                }
            }
            (value, sweeps)
        })
        .collect();
    let (best_restart, (value, sweeps)) = runs
        .into_iter()
        .enumerate()
        .reduce(|acc, cur| if cur.1 .0 > acc.1 .0 { cur } else { acc })
        .expect("at least one restart");
    Ok(Lemma2Result { value, outcomes: r, best_restart, sweeps })
}
