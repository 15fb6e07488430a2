//! Seeded random states and channels.

use rand::Rng;
use rand_distr::StandardNormal;

use super::channel::KrausChannel;
use super::state::{DensityOp, PureState};
use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat, CVec, C64};

/// Standard complex Gaussian with E|z|^2 = 1.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // column-major fill order is part of the reproducibility contract
    let mut m = CMat::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Haar-random unit vector as an unnormalized amplitude vector.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    loop {
        let v = CVec::from_fn(d, |_, _| complex_gaussian(rng));
        if let Some(u) = linalg::normalized(&v) {
            return u;
        }
    }
}

pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<PureState> {
    if d == 0 {
        return Err(DlabError::InvalidParameter("dimension must be >= 1".into()));
    }
    Ok(PureState::from_unit(haar_vector(d, rng), vec![d]))
}

/// Induced-measure density matrix `G G^dagger / tr` with `G` a d x rank Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<DensityOp> {
    if d == 0 || rank == 0 {
        return Err(DlabError::InvalidParameter("dimension and rank must be >= 1".into()));
    }
    if rank > d {
        return Err(DlabError::InvalidParameter(format!("rank {rank} exceeds dimension {d}")));
    }
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Ok(DensityOp::from_raw(m / c(tr, 0.0), vec![d]))
}

/// Haar-random isometry C^cols -> C^rows.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<CMat> {
    if cols > rows {
        return Err(DlabError::InvalidParameter(format!("isometry needs rows {rows} >= cols {cols}")));
    }
    Ok(linalg::orthonormalize_columns(ginibre(rows, cols, rng)))
}

/// Random channel from a Haar isometry into out (x) env followed by the env trace.
pub fn random_channel<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, env_dim: usize, rng: &mut R) -> Result<KrausChannel> {
    if in_dim == 0 || out_dim == 0 || env_dim == 0 {
        return Err(DlabError::InvalidParameter("channel dimensions must be >= 1".into()));
    }
    let v = random_isometry(out_dim * env_dim, in_dim, rng)?;
    let ops = (0..env_dim)
        .map(|e| CMat::from_fn(out_dim, in_dim, |o, i| v[(o * env_dim + e, i)]))
        .collect();
    KrausChannel::new(ops, vec![in_dim], vec![out_dim])
}

/// Random rank-1 POVM vectors `S^{-1/2} g_i` for `count` Gaussian vectors in C^d.
pub fn random_povm_vectors<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> Result<Vec<CVec>> {
    if count < d {
        return Err(DlabError::InvalidParameter(format!("a rank-1 POVM on C^{d} needs >= {d} outcomes")));
    }
    let g: Vec<CVec> = (0..count).map(|_| CVec::from_fn(d, |_, _| complex_gaussian(rng))).collect();
    let mut s = CMat::zeros(d, d);
    for v in &g {
        s += linalg::projector(v);
    }
    let w = linalg::inv_sqrt_psd(&s);
    Ok(g.iter().map(|v| &w * v).collect())
}
