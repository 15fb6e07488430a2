//! The symmetric subspace of `(C^d)^{(x)n}`: occupation basis, embedding
//! isometry, reduced states of embedded operators and convex fits of reduced
//! states by i.i.d. mixtures over a net.

use std::collections::HashMap;

use serde::Serialize;

use crate::convex_fit::{fit_simplex, golden_min, half_trace_norm, FitOptions};
use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat, CVec, ONE, ZERO};
use crate::purenet::{build_net_greedy, default_pool_size, PureNet};
use crate::qcore::{partial_trace_matrix, DensityOp, LinOp, PureState};

pub const DEFAULT_SYM_CAP: usize = 1_000_000;
/// Largest permitted `d^n * d` when the embedding is materialized.
pub const DEFAULT_EMBED_CAP: usize = 4_000_000;

/// `C(n+d-1, d-1)`, rejecting results above `cap`.
pub fn sym_dimension_capped(d: usize, n: usize, cap: usize) -> Result<usize> {
    if d == 0 || n == 0 {
        return Err(DlabError::InvalidParameter(format!("need d >= 1 and n >= 1, got d={d}, n={n}")));
    }
    let exceeded = || DlabError::CapExceeded(format!("dim of symmetric subspace for d={d}, n={n} exceeds {cap}"));
    // C(n+r, r) with r = d-1, built as a running product of exact binomials
    let r = (d - 1).min(n) as u128;
    let top = (n + d - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=r {
        acc = acc.checked_mul(top - r + i).ok_or_else(exceeded)? / i;
        if acc > cap as u128 && i == r {
            return Err(exceeded());
        }
    }
    if acc > cap as u128 {
        return Err(exceeded());
    }
    Ok(acc as usize)
}

pub fn sym_dimension(d: usize, n: usize) -> Result<usize> {
    sym_dimension_capped(d, n, DEFAULT_SYM_CAP)
}

fn checked_pow(d: usize, n: usize) -> Option<usize> {
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d))
}

fn multinomial(occ: &[usize]) -> f64 {
    // n!/prod m_i! accumulated as a product of binomials, exact in f64 for desk sizes
    let mut total = 0usize;
    let mut acc = 1.0f64;
    for &m in occ {
        for j in 1..=m {
            total += 1;
            acc = acc * total as f64 / j as f64;
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct SymBasis {
    pub d: usize,
    pub n: usize,
    /// Occupation tuples in ascending lexicographic order.
    pub occupations: Vec<Vec<usize>>,
}

impl SymBasis {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        let dim = sym_dimension(d, n)?;
        let mut occupations = Vec::with_capacity(dim);
        let mut cur = vec![0usize; d];
        fill_occupations(&mut cur, 0, n, &mut occupations);
        debug_assert_eq!(occupations.len(), dim);
        Ok(Self { d, n, occupations })
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn index_of(&self, occ: &[usize]) -> Option<usize> {
        self.occupations.binary_search_by(|o| o.as_slice().cmp(occ)).ok()
    }
}

fn fill_occupations(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for m in 0..=left {
        cur[pos] = m;
        fill_occupations(cur, pos + 1, left - m, out);
    }
}

#[derive(Debug, Clone)]
pub struct SymIsometry {
    basis: SymBasis,
    op: LinOp,
}

impl SymIsometry {
    pub fn basis(&self) -> &SymBasis {
        &self.basis
    }

    /// The `d^n x dim` embedding.
    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn op(&self) -> &LinOp {
        &self.op
    }

    pub fn full_dim(&self) -> usize {
        self.op.out_dim()
    }

    /// Coordinates of `phi^{(x)n}` in the occupation basis:
    /// `sqrt(multinomial(m)) prod_i phi_i^{m_i}`.
    pub fn power_coordinates(&self, phi: &PureState) -> Result<CVec> {
        if phi.dim() != self.basis.d {
            return Err(DlabError::DimensionMismatch(format!("state dim {} vs d={}", phi.dim(), self.basis.d)));
        }
        let a = phi.amplitudes();
        Ok(CVec::from_iterator(
            self.basis.dim(),
            self.basis.occupations.iter().map(|occ| {
                let mut z = c(multinomial(occ).sqrt(), 0.0);
                for (i, &m) in occ.iter().enumerate() {
                    z *= a[i].powu(m as u32);
                }
                z
            }),
        ))
    }
}

pub fn sym_isometry_capped(d: usize, n: usize, embed_cap: usize) -> Result<SymIsometry> {
    let basis = SymBasis::new(d, n)?;
    let full = checked_pow(d, n)
        .filter(|f| f.checked_mul(d).is_some_and(|x| x <= embed_cap))
        .ok_or_else(|| DlabError::CapExceeded(format!("embedding (C^{d})^{n} exceeds {embed_cap}")))?;
    let lookup: HashMap<&[usize], usize> =
        basis.occupations.iter().enumerate().map(|(i, o)| (o.as_slice(), i)).collect();
    let mut m = CMat::zeros(full, basis.dim());
    let mut counts = vec![0usize; basis.dim()];
    let mut occ = vec![0usize; d];
    for idx in 0..full {
        occ.iter_mut().for_each(|x| *x = 0);
        let mut rest = idx;
        for _ in 0..n {
            occ[rest % d] += 1;
            rest /= d;
        }
        let col = lookup[occ.as_slice()];
        m[(idx, col)] = ONE;
        counts[col] += 1;
    }
    for (col, &cnt) in counts.iter().enumerate() {
        let s = c(1.0 / (cnt as f64).sqrt(), 0.0);
        m.column_mut(col).iter_mut().for_each(|z| *z *= s);
    }
    let op = LinOp::new(m, vec![basis.dim()], vec![d; n])?;
    Ok(SymIsometry { basis, op })
}

pub fn sym_isometry(d: usize, n: usize) -> Result<SymIsometry> {
    sym_isometry_capped(d, n, DEFAULT_EMBED_CAP)
}

/// `tr_{first n-k copies} (U (x) I) rho (U (x) I)^dagger` for `rho` on
/// `C^{dim} (x) C^{aux}`, computed one eigenvector at a time so the full
/// `d^n`-dimensional operator is never formed. Output factors are `[d; k]`
/// followed by `aux` when `aux > 1`.
pub fn reduce_symmetric(iso: &SymIsometry, rho: &DensityOp, k: usize) -> Result<DensityOp> {
    let (d, n, dim) = (iso.basis.d, iso.basis.n, iso.basis.dim());
    if k > n || k == 0 {
        return Err(DlabError::InvalidParameter(format!("need 1 <= k <= n={n}, got k={k}")));
    }
    if rho.dim() % dim != 0 {
        return Err(DlabError::DimensionMismatch(format!("state dim {} is not a multiple of {dim}", rho.dim())));
    }
    let aux = rho.dim() / dim;
    let kept = d.pow(k as u32) * aux;
    let traced = d.pow((n - k) as u32);
    let (values, vectors) = linalg::eigh(rho.matrix());
    let u = iso.matrix();
    let mut out = CMat::zeros(kept, kept);
    for (j, &lam) in values.iter().enumerate() {
        if lam.abs() <= linalg::EIG_FLOOR {
            continue;
        }
        let x = CMat::from_fn(dim, aux, |s, a| vectors[(s * aux + a, j)]);
        let emb = u * x;
        // flat row-major index (t * d^k + kk) * aux + a = t * kept + (kk * aux + a)
        let y = CMat::from_fn(traced, kept, |t, col| {
            let flat = t * kept + col;
            emb[(flat / aux, flat % aux)]
        });
        out += y.transpose() * y.conjugate() * c(lam, 0.0);
    }
    let mut dims = vec![d; k];
    if aux > 1 {
        dims.push(aux);
    }
    Ok(DensityOp::from_raw(out, dims))
}

#[derive(Debug, Clone, Serialize)]
pub struct IIDMixture {
    pub support: Vec<crate::qcore::MatrixJson>,
    pub weights: Vec<f64>,
    pub k: usize,
    /// One auxiliary state per support point; empty when there is no auxiliary factor.
    pub aux_states: Vec<crate::qcore::MatrixJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefinettiFit {
    pub distance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub net_size: usize,
    pub net_radius: f64,
    /// Support restricted to atoms with positive weight.
    pub mixture: IIDMixture,
}

/// A greedy net fine enough for de Finetti fits: radius 0.1 for qubits,
/// 0.25 otherwise.
pub fn default_fitting_net(d: usize, seed: u64) -> Result<PureNet> {
    let eps = if d <= 2 { 0.1 } else { 0.25 };
    build_net_greedy(d, eps, default_pool_size(d), seed)
}

fn infer_copies(rho_dim: usize, d: usize, aux: usize) -> Result<usize> {
    let mut k = 0;
    let mut p = aux;
    while p < rho_dim {
        p *= d;
        k += 1;
    }
    if p != rho_dim || k == 0 {
        return Err(DlabError::DimensionMismatch(format!("state dim {rho_dim} is not {d}^k * {aux}")));
    }
    Ok(k)
}

fn pack_mixture(net: &PureNet, weights: &[f64], k: usize, aux: Option<&[CMat]>) -> IIDMixture {
    let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    IIDMixture {
        support: keep.iter().map(|&i| (&net.points()[i]).into()).collect(),
        weights: keep.iter().map(|&i| weights[i]).collect(),
        k,
        aux_states: aux
            .map(|s| keep.iter().map(|&i| crate::qcore::MatrixJson::from_matrix(&s[i], &[s[i].nrows()])).collect())
            .unwrap_or_default(),
    }
}

/// Trace distance from `rho_red` on `(C^d)^{(x)k}` to the hull of
/// `{phi^{(x)k} : phi in net}`.
pub fn definetti_fit(rho_red: &DensityOp, net: &PureNet, iters: usize) -> Result<DefinettiFit> {
    let k = infer_copies(rho_red.dim(), net.dim(), 1)?;
    let atoms: Vec<CMat> = net.points().iter().map(|p| p.power(k).projector()).collect();
    let fit = fit_simplex(&atoms, rho_red.matrix(), None, FitOptions { max_iters: iters, ..FitOptions::default() });
    Ok(DefinettiFit {
        distance: fit.distance,
        converged: fit.converged,
        iterations: fit.iterations,
        net_size: net.len(),
        net_radius: net.effective_radius(),
        mixture: pack_mixture(net, &fit.weights, k, None),
    })
}

/// As [`definetti_fit`] with atoms `phi^{(x)k} (x) sigma(phi)` on
/// `(C^d)^{(x)k} (x) C^{aux}`. Weights and auxiliary states are refit
/// alternately; each `sigma` starts at the conditional state of `rho_red`
/// given `phi^{(x)k}` and moves by Frank-Wolfe steps over density operators.
pub fn definetti_fit_general(rho_red: &DensityOp, net: &PureNet, aux: usize, iters: usize) -> Result<DefinettiFit> {
    if aux == 0 {
        return Err(DlabError::InvalidParameter("auxiliary dimension must be positive".into()));
    }
    if aux == 1 {
        let k = infer_copies(rho_red.dim(), net.dim(), 1)?;
        let mut fit = definetti_fit(&rho_red.clone().with_factor_dims(vec![net.dim(); k])?, net, iters)?;
        fit.mixture.aux_states = fit.mixture.support.iter().map(|_| CMat::identity(1, 1)).map(|m| {
            crate::qcore::MatrixJson::from_matrix(&m, &[1])
        }).collect();
        return Ok(fit);
    }
    let k = infer_copies(rho_red.dim(), net.dim(), aux)?;
    let target = rho_red.matrix();
    let sys = rho_red.dim() / aux;
    let projs: Vec<CMat> = net.points().iter().map(|p| p.power(k).projector()).collect();
    let mut sigmas: Vec<CMat> = net
        .points()
        .iter()
        .map(|p| {
            let v = p.power(k);
            let cond = conditional_aux(target, v.amplitudes(), aux);
            let t = linalg::trace(&cond).re;
            if t > 1e-12 {
                cond / c(t, 0.0)
            } else {
                CMat::identity(aux, aux) / c(aux as f64, 0.0)
            }
        })
        .collect();
    let rounds = (iters / 25).max(4);
    let inner = FitOptions { max_iters: iters, ..FitOptions::default() };
    let mut weights: Option<Vec<f64>> = None;
    let mut best = f64::INFINITY;
    let mut total_iters = 0;
    let mut converged = false;
    for _ in 0..rounds {
        let atoms: Vec<CMat> = projs.iter().zip(&sigmas).map(|(p, s)| linalg::kron(p, s)).collect();
        let fit = fit_simplex(&atoms, target, weights.as_deref(), inner);
        total_iters += fit.iterations;
        let q = fit.weights;
        let mut x = CMat::zeros(sys * aux, sys * aux);
        for (a, &w) in atoms.iter().zip(&q) {
            if w > 0.0 {
                x += a * c(w, 0.0);
            }
        }
        let mut f = half_trace_norm(&(&x - target));
        for i in 0..q.len() {
            if q[i] <= 0.0 {
                continue;
            }
            let resid = &x - target;
            let g = linalg::sign_operator(&resid) * c(0.5, 0.0);
            let grad = contract_system(&g, &projs[i], aux);
            let (_, w) = linalg::bottom_eigvec(&grad);
            let step = linalg::kron(&projs[i], &(linalg::projector(&w) - &sigmas[i])) * c(q[i], 0.0);
            let (gamma, f_new) = golden_min(|t| half_trace_norm(&(&resid + &step * c(t, 0.0))), 1.0);
            if f_new < f {
                sigmas[i] = &sigmas[i] * c(1.0 - gamma, 0.0) + linalg::projector(&w) * c(gamma, 0.0);
                x += &step * c(gamma, 0.0);
                f = f_new;
            }
        }
        weights = Some(q);
        let improvement = best - f;
        best = best.min(f);
        if improvement < inner.tol {
            converged = fit.converged;
            break;
        }
    }
    let q = weights.expect("at least one round");
    let mut x = CMat::zeros(sys * aux, sys * aux);
    for ((p, s), &w) in projs.iter().zip(&sigmas).zip(&q) {
        if w > 0.0 {
            x += linalg::kron(p, s) * c(w, 0.0);
        }
    }
    Ok(DefinettiFit {
        distance: half_trace_norm(&(&x - target)),
        converged,
        iterations: total_iters,
        net_size: net.len(),
        net_radius: net.effective_radius(),
        mixture: pack_mixture(net, &q, k, Some(&sigmas)),
    })
}

/// `(<v| (x) I) m (|v> (x) I)` on the auxiliary factor.
fn conditional_aux(m: &CMat, v: &CVec, aux: usize) -> CMat {
    let sys = v.len();
    CMat::from_fn(aux, aux, |a, b| {
        let mut acc = ZERO;
        for i in 0..sys {
            for j in 0..sys {
                acc += v[i].conj() * m[(i * aux + a, j * aux + b)] * v[j];
            }
        }
        acc
    })
}

/// `tr_sys[(P (x) I) G]` for a system projector `P`.
fn contract_system(g: &CMat, p: &CMat, aux: usize) -> CMat {
    let sys = p.nrows();
    CMat::from_fn(aux, aux, |a, b| {
        let mut acc = ZERO;
        for i in 0..sys {
            for j in 0..sys {
                acc += p[(j, i)] * g[(i * aux + a, j * aux + b)];
            }
        }
        acc
    })
}

/// Reduced state of an embedded `C^{dim} (x) C^{aux}` state computed the
/// direct way; only for small cases.
pub fn reduce_symmetric_dense(iso: &SymIsometry, rho: &DensityOp, k: usize) -> Result<DensityOp> {
    let (d, n) = (iso.basis.d, iso.basis.n);
    let aux = rho.dim() / iso.basis.dim();
    let big = linalg::kron(iso.matrix(), &CMat::identity(aux, aux));
    let full = &big * rho.matrix() * big.adjoint();
    let mut dims = vec![d; n];
    dims.push(aux);
    let (m, _) = partial_trace_matrix(&full, &dims, &(0..n - k).collect::<Vec<_>>())?;
    let mut out_dims = vec![d; k];
    if aux > 1 {
        out_dims.push(aux);
    }
    Ok(DensityOp::from_raw(m, out_dims))
}
