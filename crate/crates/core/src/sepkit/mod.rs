//! Separable states across a fixed bipartition: explicit ensembles, fidelity
//! and trace-distance estimates against the separable set, the partial
//! transpose test, entanglement-breaking Choi membership and
//! measure-and-prepare channels.
//!
//! Every optimizer here is a heuristic returning a one-sided bound: fidelities
//! are lower bounds and distances are upper bounds, each backed by an explicit
//! separable witness.

mod ensemble;
mod lemma2;
mod lsq;
mod seesaw;
mod tracefit;
pub mod two_qubit;

use serde::Serialize;

pub use ensemble::{caratheodory_cap, random_sep_ensemble, Rank1Povm, SepEnsemble, SepEnsembleJson};
pub use lemma2::{lemma2_rhs, Lemma2Result};
pub use seesaw::{seesaw_sep_fidelity, SeesawResult};
pub use tracefit::{nearest_sep_trace_ub, product_lmo, SepDistance};

use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat};
use crate::qcore::{choi_of, partial_transpose_matrix, ChoiOp, DensityOp, KrausChannel, PureState};

/// Budgets shared by the separable-set optimizers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SepOptions {
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
    /// Terms in see-saw ensembles; `None` cycles restarts through `dA dB`,
    /// the Caratheodory cap `(dA dB)^2` and `2 dA dB`.
    pub ensemble_size: Option<usize>,
}

impl Default for SepOptions {
    fn default() -> Self {
        Self { restarts: 20, iters: 500, tol: 1e-9, ensemble_size: None }
    }
}

pub(crate) fn bipartite_dims(rho: &DensityOp) -> Result<(usize, usize)> {
    match rho.factor_dims() {
        [a, b] => Ok((*a, *b)),
        dims => Err(DlabError::InvalidParameter(format!("bipartite state with factor_dims [dA,dB] required, got {dims:?}"))),
    }
}

/// Smallest eigenvalue of the partial transpose on factor `cut`.
pub fn ppt_min_eig(rho: &DensityOp, cut: usize) -> Result<f64> {
    let pt = partial_transpose_matrix(rho.matrix(), rho.factor_dims(), cut)?;
    Ok(linalg::min_eigenvalue(&pt))
}

/// `rho -> sum_i <eta_i|rho|eta_i> psi_i`, with Kraus operators `|psi_i><eta_i|`.
pub fn measure_prepare_channel(povm: &Rank1Povm, prep: &[PureState]) -> Result<KrausChannel> {
    if povm.len() != prep.len() {
        return Err(DlabError::DimensionMismatch(format!("{} POVM elements vs {} states", povm.len(), prep.len())));
    }
    let Some(first) = prep.first() else {
        return Err(DlabError::InvalidParameter("empty measure-and-prepare ensemble".into()));
    };
    let dout = first.dim();
    if prep.iter().any(|p| p.dim() != dout) {
        return Err(DlabError::DimensionMismatch("prepared states differ in dimension".into()));
    }
    let ops = povm.vectors().iter().zip(prep).map(|(eta, psi)| linalg::outer(psi.amplitudes(), eta)).collect();
    KrausChannel::new(ops, vec![povm.dim()], vec![dout])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EbVerdict {
    Member,
    NonMember,
    Inconclusive,
}

/// A measure-and-prepare form of an entanglement-breaking channel.
#[derive(Debug, Clone, Serialize)]
pub struct EbDecomposition {
    pub povm: Rank1Povm,
    pub prep: Vec<crate::qcore::MatrixJson>,
    /// Max-entry difference between the rebuilt Choi operator and the input.
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EbReport {
    pub verdict: EbVerdict,
    pub tp_defect: f64,
    pub ppt_min_eig: f64,
    pub fidelity_lb: Option<f64>,
    pub decomposition: Option<EbDecomposition>,
}

/// Largest reconstruction error accepted for a member verdict.
pub const EB_RECONSTRUCTION_TOL: f64 = 1e-6;

/// Decide whether `J` is the Choi operator of an entanglement-breaking channel.
/// `tol` bounds the marginal defect, the partial-transpose violation and the
/// separable-fit fidelity gap. Members carry a decomposition whose rebuilt
/// Choi operator matches `J` within [`EB_RECONSTRUCTION_TOL`].
pub fn eb_membership(j: &ChoiOp, tol: f64, opts: SepOptions, seed: u64) -> Result<EbReport> {
    let de = j.in_dim();
    let dout = j.out_dim_total();
    let tp_defect = j.tp_defect();
    if tp_defect > tol.max(crate::qcore::CHOI_TOL) {
        return Err(DlabError::InvariantViolation(format!("Choi marginal differs from identity by {tp_defect}")));
    }
    let sigma = DensityOp::from_raw(j.matrix() / c(de as f64, 0.0), vec![de, dout]);
    let ppt = ppt_min_eig(&sigma, 1)?;
    let mut report = EbReport { verdict: EbVerdict::NonMember, tp_defect, ppt_min_eig: ppt, fidelity_lb: None, decomposition: None };
    if ppt < -tol {
        return Ok(report);
    }
    let fit = seesaw_sep_fidelity(&sigma, opts, seed)?;
    report.fidelity_lb = Some(fit.fidelity);
    report.verdict = EbVerdict::Inconclusive;
    if fit.fidelity < 1.0 - tol {
        return Ok(report);
    }
    let w = &fit.witness;
    // J^T-side vectors: sigma = sum p_i a_i a_i^dag (x) b_i b_i^dag gives eta_i = sqrt(de p_i) conj(a_i)
    let raw: Vec<_> = w
        .parts_a()
        .iter()
        .zip(w.weights())
        .map(|(a, &p)| a.amplitudes().conjugate() * c((de as f64 * p).sqrt(), 0.0))
        .collect();
    let povm = Rank1Povm::closed(raw)?;
    let prep = w.parts_b().to_vec();
    let ch = measure_prepare_channel(&povm, &prep)?;
    let err = linalg::max_abs_diff(choi_of(&ch).matrix(), j.matrix());
    if err <= EB_RECONSTRUCTION_TOL {
        report.verdict = EbVerdict::Member;
    }
    report.decomposition = Some(EbDecomposition {
        povm,
        prep: prep.iter().map(crate::qcore::MatrixJson::from).collect(),
        reconstruction_error: err,
    });
    Ok(report)
}

/// Rebuild `sum_i q_i (x)` matrices; shared by the fitters.
pub(crate) fn weighted_sum(atoms: &[CMat], weights: &[f64]) -> CMat {
    let n = atoms[0].nrows();
    let mut m = CMat::zeros(n, n);
    for (a, &w) in atoms.iter().zip(weights) {
        if w != 0.0 {
            m += a * c(w, 0.0);
        }
    }
    m
}
