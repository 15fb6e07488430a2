//! Frank-Wolfe over the probability simplex for the objective
//! `q -> (1/2) || sum_i q_i A_i - target ||_1`.
//!
//! Away steps are taken whenever the away gap beats the Frank-Wolfe gap, and
//! every step uses an exact (golden-section) line search on the convex 1-D
//! restriction. The linear-minimization step uses the subgradient
//! `G = sign(X)/2` of the trace norm at `X = sum q_i A_i - target`.

use serde::Serialize;

use crate::linalg::{self, c, CMat};

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop once a non-drop step improves the objective by less than this.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplexFit {
    pub distance: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn half_trace_norm(m: &CMat) -> f64 {
    0.5 * linalg::trace_norm_herm(m)
}

/// Minimize a convex function on `[0, hi]` by golden-section search.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (0.0, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 * hi.max(1.0) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [0.0, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

fn combine(atoms: &[CMat], q: &[f64]) -> CMat {
    let n = atoms[0].nrows();
    let mut x = CMat::zeros(n, n);
    for (a, &w) in atoms.iter().zip(q) {
        if w != 0.0 {
            x += a * c(w, 0.0);
        }
    }
    x
}

/// Index of the atom with the smallest single-atom objective (first on ties).
pub(crate) fn best_single_atom(atoms: &[CMat], target: &CMat) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, a) in atoms.iter().enumerate() {
        let f = half_trace_norm(&(a - target));
        if f < best.1 {
            best = (i, f);
        }
    }
    best
}

/// Run the fit. `init`, when given, must be a point of the simplex; otherwise
/// the best single atom is used, so the result never exceeds it.
pub fn fit_simplex(atoms: &[CMat], target: &CMat, init: Option<&[f64]>, opts: FitOptions) -> SimplexFit {
    assert!(!atoms.is_empty(), "simplex fit needs at least one atom");
    let m = atoms.len();
    let mut q = match init {
        Some(w) => {
            assert_eq!(w.len(), m);
            w.to_vec()
        }
        None => {
            let (i, _) = best_single_atom(atoms, target);
            let mut w = vec![0.0; m];
            w[i] = 1.0;
            w
        }
    };
    let mut x = combine(atoms, &q);
    let mut f = half_trace_norm(&(&x - target));
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it + 1;
        if f <= 1e-15 {
            converged = true;
            break;
        }
        if it % 50 == 49 {
            x = combine(atoms, &q);
        }
        let resid = &x - target;
        let g_op = linalg::sign_operator(&resid) * c(0.5, 0.0);
        let grads: Vec<f64> = atoms.iter().map(|a| linalg::trace_product(&g_op, a).re).collect();
        let gq: f64 = grads.iter().zip(&q).map(|(g, w)| g * w).sum();
        let (s, gs) = grads
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc });
        let (v, gv) = grads
            .iter()
            .enumerate()
            .filter(|(i, _)| q[*i] > 0.0)
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
        let fw_gap = gq - gs;
        let away_gap = gv - gq;
        if fw_gap.max(away_gap) <= 1e-14 {
            converged = true;
            break;
        }
        let away = away_gap > fw_gap && v != usize::MAX && q[v] < 1.0;
        let (dir, gmax) = if away {
            (&x - &atoms[v], q[v] / (1.0 - q[v]))
        } else {
            (&atoms[s] - &x, 1.0)
        };
        let (gamma, f_new) = golden_min(|t| half_trace_norm(&(&resid + &dir * c(t, 0.0))), gmax);
        if f_new >= f {
            converged = f - f_new < opts.tol;
            break;
        }
        if away {
            for w in q.iter_mut() {
                *w *= 1.0 + gamma;
            }
            q[v] -= gamma;
        } else {
            for w in q.iter_mut() {
                *w *= 1.0 - gamma;
            }
            q[s] += gamma;
        }
        for w in q.iter_mut() {
            if *w < 1e-15 {
                *w = 0.0;
            }
        }
        let total: f64 = q.iter().sum();
        for w in q.iter_mut() {
            *w /= total;
        }
        x += &dir * c(gamma, 0.0);
        let improvement = f - f_new;
        f = f_new;
        let drop_step = away && (gamma - gmax).abs() <= 1e-12 * gmax.max(1.0);
        if improvement < opts.tol && !drop_step {
            converged = true;
            break;
        }
    }
    let x = combine(atoms, &q);
    let distance = half_trace_norm(&(&x - target));
    SimplexFit { distance, weights: q, iterations, converged }
}
