//! Lower bounds on the fidelity between a bipartite state and the separable
//! set by Uhlmann alternation.
//!
//! With `rho = Y Y^dagger` and a separable candidate `X X^dagger`, where the
//! columns of `X` are `sqrt(p_i) a_i (x) b_i`, the root fidelity is the trace
//! norm of `Y^dagger X`. One sweep fixes the polar factor `U` of that matrix,
//! which turns the objective into `Re sum_i sqrt(p_i) <g_i | a_i (x) b_i>` with
//! `g_i = Y U^dagger e_i`; each product is then the leading singular pair of
//! `g_i` reshaped to `dA x dB`, and the weights `p_i ~ c_i^2` are the exact
//! simplex maximizer. Both half-steps are exact, so the root fidelity never
//! decreases between sweeps.

use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::{caratheodory_cap, random_sep_ensemble, SepEnsemble};
use super::{bipartite_dims, SepOptions};
use crate::error::Result;
use crate::linalg::{self, c, CMat, CVec};
use crate::metrics::fidelity_matrices;
use crate::qcore::DensityOp;
use crate::rng::task_rng;

#[derive(Debug, Clone, Serialize)]
pub struct SeesawResult {
    /// Fidelity of `rho` with the witness; a lower bound on the maximum over SEP.
    pub fidelity: f64,
    #[serde(skip)]
    pub witness: SepEnsemble,
    pub best_restart: usize,
    pub sweeps: usize,
    /// Fidelity after each sweep of the winning restart; the last entry is the
    /// reported fidelity, after the final polish.
    pub trajectory: Vec<f64>,
}

/// Witnesses this close to `rho` get a least-squares polish, which converges
/// quadratically when `rho` itself is separable.
const REFINE_ABOVE: f64 = 0.99;
const REFINE_CANDIDATES: usize = 3;

struct Run {
    root_fidelity: f64,
    x: Vec<(f64, CVec, CVec)>,
    trajectory: Vec<f64>,
}

fn purification_factor(rho: &CMat) -> CMat {
    let (values, vectors) = linalg::eigh(rho);
    let floor = linalg::EIG_FLOOR * values.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    let cols: Vec<CVec> = values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > floor)
        .map(|(k, &l)| vectors.column(k) * c(l.sqrt(), 0.0))
        .collect();
    CMat::from_columns(&cols)
}

fn columns(terms: &[(f64, CVec, CVec)]) -> CMat {
    let cols: Vec<CVec> =
        terms.iter().map(|(p, a, b)| linalg::kron_vec(a, b) * c(p.max(0.0).sqrt(), 0.0)).collect();
    CMat::from_columns(&cols)
}

/// Polar factor of `Y^dagger X` and the root fidelity it certifies.
fn align(yh: &CMat, x: &CMat) -> (CMat, f64) {
    let m = yh * x;
    let p = linalg::polar_factor(&m);
    let value = linalg::trace_product(&p.adjoint(), &m).re;
    (p, value)
}

fn run(y: &CMat, mut terms: Vec<(f64, CVec, CVec)>, da: usize, db: usize, iters: usize, tol: f64) -> Run {
    let yh = y.adjoint();
    let (mut p, mut current) = align(&yh, &columns(&terms));
    let mut trajectory = vec![current * current];
    for _ in 0..iters {
        // with U = P^dagger maximizing Re tr(U M), g_i = Y U^dagger e_i
        let g = y * &p;
        let mut next: Vec<(f64, CVec, CVec)> = Vec::with_capacity(terms.len());
        let mut total = 0.0;
        for i in 0..g.ncols() {
            let (s, a, b) = linalg::product_split(&g.column(i).into_owned(), da, db);
            total += s * s;
            next.push((s * s, a, b));
        }
        if total <= 0.0 {
            break;
        }
        next.iter_mut().for_each(|t| t.0 /= total);
        let (p_next, value) = align(&yh, &columns(&next));
        debug_assert!(value >= current - 1e-9, "see-saw sweep decreased: {current} -> {value}");
        if value < current {
            break;
        }
        let gain = value - current;
        terms = next;
        p = p_next;
        current = value;
        trajectory.push(current * current);
        if gain < tol {
            break;
        }
    }
    Run { root_fidelity: current, x: terms, trajectory }
}

/// Pad `terms` to `s` entries with zero-weight random products.
fn pad_terms(mut terms: Vec<(f64, CVec, CVec)>, s: usize, da: usize, db: usize, seed: u64) -> Vec<(f64, CVec, CVec)> {
    let mut rng = task_rng(seed, u64::MAX);
    while terms.len() < s {
        terms.push((0.0, crate::qcore::haar_vector(da, &mut rng), crate::qcore::haar_vector(db, &mut rng)));
    }
    terms
}

/// Ensemble size for restart `r`. Without an explicit size the restarts
/// cycle through `dA dB`, the Caratheodory cap and `2 dA dB`: small ensembles
/// converge much faster on boundary states, large ones explore more.
fn restart_size(opts: &SepOptions, r: usize, da: usize, db: usize) -> usize {
    let cap = caratheodory_cap(da, db);
    let n = da * db;
    let s = opts.ensemble_size.unwrap_or(match r % 3 {
        0 => n,
        1 => cap,
        _ => 2 * n,
    });
    s.clamp(1, cap)
}

/// Best separable fidelity found over `opts.restarts` seeded restarts; restart
/// 0 starts from [`super::tracefit::initial_witness`].
pub fn seesaw_sep_fidelity(rho: &DensityOp, opts: SepOptions, seed: u64) -> Result<SeesawResult> {
    let (da, db) = bipartite_dims(rho)?;
    if let Some(exact) = super::tracefit::exact_witness(rho, da, db) {
        let f = fidelity_matrices(rho.matrix(), &exact.as_matrix());
        return Ok(SeesawResult { fidelity: f, witness: exact, best_restart: 0, sweeps: 0, trajectory: vec![f] });
    }
    let y = purification_factor(rho.matrix());
    let init = super::tracefit::initial_witness(rho, da, db)?;
    let runs: Vec<Run> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let s = restart_size(&opts, r, da, db);
            let terms = if r == 0 {
                pad_terms(init.terms(), s.max(init.len()), da, db, seed)
            } else {
                random_sep_ensemble(da, db, s, &mut task_rng(seed, r as u64)).expect("size within cap").terms()
            };
            run(&y, terms, da, db, opts.iters, opts.tol)
        })
        .collect();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&i, &j| runs[j].root_fidelity.total_cmp(&runs[i].root_fidelity).then(i.cmp(&j)));
    let mut chosen = order[0];
    let mut witness = SepEnsemble::from_terms(runs[chosen].x.clone())?;
    let mut fidelity = fidelity_matrices(rho.matrix(), &witness.as_matrix());
    // polish the leading near-separable runs whose ensembles are small enough
    let mut tried = 0;
    for &idx in &order {
        let run = &runs[idx];
        if tried == REFINE_CANDIDATES || run.root_fidelity * run.root_fidelity < REFINE_ABOVE || 1.0 - fidelity <= 1e-13 {
            break;
        }
        let live = run.x.iter().filter(|t| t.0 > 1e-12).count();
        if !super::lsq::affordable(live, da, db) {
            continue;
        }
        tried += 1;
        let (terms, _) = super::lsq::refine(rho.matrix(), &run.x, da, db, 200);
        if let Ok(refined) = SepEnsemble::from_terms(terms) {
            let f = fidelity_matrices(rho.matrix(), &refined.as_matrix());
            if f > fidelity {
                witness = refined;
                fidelity = f;
                chosen = idx;
            }
        }
    }
    let mut trajectory = runs[chosen].trajectory.clone();
    let sweeps = trajectory.len() - 1;
    trajectory.push(fidelity);
    let best_restart = chosen;
    Ok(SeesawResult { fidelity, witness, best_restart, sweeps, trajectory })
}
