//! Quantum channels in Kraus and Choi form.
//!
//! The Choi operator is `J = sum_ij |i><j| (x) Gamma(|i><j|)` with the input
//! factor first, so `J[(i*out + a, j*out + b)] = Gamma(|i><j|)[a, b]`.

use super::ptrace::check_dims;
use super::state::{DensityOp, Tensor};
use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat, ZERO};

pub const CLOSURE_TOL: f64 = 1e-10;
pub const CHOI_TOL: f64 = 1e-10;

pub trait Channel {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, rho: &DensityOp) -> Result<DensityOp>;
}

pub fn apply_channel<C: Channel + ?Sized>(ch: &C, rho: &DensityOp) -> Result<DensityOp> {
    ch.apply(rho)
}

/// CPTP map `rho -> sum_k K rho K^dagger`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<CMat>,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMat>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let ch = Self::from_ops_unchecked(ops, in_dims, out_dims)?;
        let defect = ch.closure_defect();
        if defect > CLOSURE_TOL {
            return Err(DlabError::InvariantViolation(format!(
                "Kraus operators are not trace preserving (defect {defect:e})"
            )));
        }
        Ok(ch)
    }

    /// Shape checks only; closure is the caller's responsibility.
    pub(crate) fn from_ops_unchecked(ops: Vec<CMat>, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        let din: usize = in_dims.iter().product();
        let dout: usize = out_dims.iter().product();
        if ops.is_empty() {
            return Err(DlabError::InvalidParameter("channel needs at least one Kraus operator".into()));
        }
        check_dims(&in_dims, din)?;
        check_dims(&out_dims, dout)?;
        for k in &ops {
            if k.nrows() != dout || k.ncols() != din {
                return Err(DlabError::DimensionMismatch(format!(
                    "Kraus operator {}x{} does not map {din} -> {dout}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        Ok(Self { ops, in_dims, out_dims })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self { ops: vec![CMat::identity(n, n)], in_dims: dims.clone(), out_dims: dims }
    }

    /// `rho -> tr(rho) * target`.
    pub fn replace(in_dim: usize, target: &DensityOp) -> Self {
        let (values, vectors) = linalg::eigh(target.matrix());
        let mut ops = Vec::new();
        for (k, &lam) in values.iter().enumerate() {
            if lam <= 1e-15 {
                continue;
            }
            let v = vectors.column(k) * c(lam.sqrt(), 0.0);
            for i in 0..in_dim {
                let mut op = CMat::zeros(target.dim(), in_dim);
                op.set_column(i, &v);
                ops.push(op);
            }
        }
        Self { ops, in_dims: vec![in_dim], out_dims: target.factor_dims().to_vec() }
    }

    /// Fully depolarizing channel on C^d.
    pub fn depolarizing(d: usize) -> Self {
        Self::replace(d, &DensityOp::maximally_mixed(vec![d]))
    }

    /// Unitary conjugation.
    pub fn unitary(u: CMat, dims: Vec<usize>) -> Result<Self> {
        Self::new(vec![u], dims.clone(), dims)
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    /// Max elementwise deviation of `sum K^dagger K` from the identity.
    pub fn closure_defect(&self) -> f64 {
        let din = self.in_dim();
        let mut acc = CMat::zeros(din, din);
        for k in &self.ops {
            acc += k.adjoint() * k;
        }
        linalg::max_abs_diff(&acc, &CMat::identity(din, din))
    }

    /// `self (x) id_r`.
    pub fn tensor_identity(&self, r: usize) -> Self {
        let id = CMat::identity(r, r);
        let ops = self.ops.iter().map(|k| linalg::kron(k, &id)).collect();
        let mut in_dims = self.in_dims.clone();
        in_dims.push(r);
        let mut out_dims = self.out_dims.clone();
        out_dims.push(r);
        Self { ops, in_dims, out_dims }
    }

    /// Compose with a partial trace over the listed output factors.
    pub fn trace_outputs(&self, traced: &[usize]) -> Result<Self> {
        let layout = super::ptrace::TraceLayout::new(&self.out_dims, traced)?;
        let mut ops = Vec::with_capacity(self.ops.len() * layout.traced_size());
        for k in &self.ops {
            for t in 0..layout.traced_size() {
                let op = CMat::from_fn(layout.kept_size(), k.ncols(), |r, col| k[(layout.index(r, t), col)]);
                if op.iter().any(|z| z.norm() > 0.0) {
                    ops.push(op);
                }
            }
        }
        let mut kept = layout.kept_dims.clone();
        if kept.is_empty() {
            kept.push(1);
        }
        Self::from_ops_unchecked(ops, self.in_dims.clone(), kept)
    }
}

impl Channel for KrausChannel {
    fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    fn apply(&self, rho: &DensityOp) -> Result<DensityOp> {
        if rho.dim() != self.in_dim() {
            return Err(DlabError::DimensionMismatch(format!(
                "channel input {} vs state {}",
                self.in_dim(),
                rho.dim()
            )));
        }
        let dout = self.out_dim();
        let mut out = CMat::zeros(dout, dout);
        for k in &self.ops {
            out += k * rho.matrix() * k.adjoint();
        }
        Ok(DensityOp::from_raw(out, self.out_dims.clone()))
    }
}

impl Tensor for KrausChannel {
    fn tensor(&self, other: &Self) -> Self {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(linalg::kron(a, b));
            }
        }
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        Self { ops, in_dims, out_dims }
    }
}

/// Choi operator of a CPTP map.
#[derive(Debug, Clone)]
pub struct ChoiOp {
    matrix: CMat,
    in_dim: usize,
    out_dims: Vec<usize>,
}

impl ChoiOp {
    pub fn new(matrix: CMat, in_dim: usize, out_dims: Vec<usize>) -> Result<Self> {
        let out_dim: usize = out_dims.iter().product();
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != in_dim * out_dim {
            return Err(DlabError::DimensionMismatch(format!(
                "Choi matrix {}x{} does not match {in_dim}*{out_dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > CHOI_TOL {
            return Err(DlabError::InvariantViolation(format!("Choi matrix not Hermitian (defect {herm:e})")));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -CHOI_TOL {
            return Err(DlabError::InvariantViolation(format!(
                "Choi matrix not PSD (min eigenvalue {min:e}); map is not CP"
            )));
        }
        let choi = Self { matrix: linalg::hermitize(&matrix), in_dim, out_dims };
        let tp = choi.tp_defect();
        if tp > CHOI_TOL {
            return Err(DlabError::InvariantViolation(format!(
                "output marginal deviates from identity by {tp:e}; map is not TP"
            )));
        }
        Ok(choi)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn out_dim_total(&self) -> usize {
        self.out_dims.iter().product()
    }

    /// Max elementwise deviation of `tr_out J` from the identity.
    pub fn tp_defect(&self) -> f64 {
        let (marg, _) = super::ptrace::partial_trace_matrix(&self.matrix, &[self.in_dim, self.out_dim_total()], &[1])
            .expect("consistent Choi dims");
        linalg::max_abs_diff(&marg, &CMat::identity(self.in_dim, self.in_dim))
    }

    /// `J / in_dim` as a bipartite state on input (x) output.
    pub fn normalized_state(&self) -> DensityOp {
        DensityOp::from_raw(
            &self.matrix / c(self.in_dim as f64, 0.0),
            vec![self.in_dim, self.out_dim_total()],
        )
    }
}

impl Channel for ChoiOp {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim_total()
    }

    fn apply(&self, rho: &DensityOp) -> Result<DensityOp> {
        if rho.dim() != self.in_dim {
            return Err(DlabError::DimensionMismatch(format!("channel input {} vs state {}", self.in_dim, rho.dim())));
        }
        let dout = self.out_dim_total();
        let r = rho.matrix();
        // Gamma(rho) = sum_ij rho_ij Gamma(|i><j|)
        let mut out = CMat::zeros(dout, dout);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let w = r[(i, j)];
                if w == ZERO {
                    continue;
                }
                for b in 0..dout {
                    for a in 0..dout {
                        out[(a, b)] += w * self.matrix[(i * dout + a, j * dout + b)];
                    }
                }
            }
        }
        Ok(DensityOp::from_raw(out, self.out_dims.clone()))
    }
}

/// `J = sum_k |K>><<K|` with `|K>> = sum_i |i> (x) K|i>`.
pub fn choi_of(ch: &KrausChannel) -> ChoiOp {
    let din = ch.in_dim();
    let dout = ch.out_dim();
    let mut j = CMat::zeros(din * dout, din * dout);
    for k in ch.ops() {
        let v = crate::linalg::CVec::from_fn(din * dout, |idx, _| k[(idx % dout, idx / dout)]);
        j += &v * v.adjoint();
    }
    ChoiOp { matrix: linalg::hermitize(&j), in_dim: din, out_dims: ch.out_dims().to_vec() }
}

/// Minimal Kraus representation from the eigendecomposition of the Choi matrix.
pub fn channel_of(choi: &ChoiOp) -> Result<KrausChannel> {
    let din = choi.in_dim;
    let dout = choi.out_dim_total();
    let (values, vectors) = linalg::eigh(&choi.matrix);
    let floor = linalg::psd_floor(&values);
    let mut ops = Vec::new();
    for (k, &lam) in values.iter().enumerate() {
        if lam <= floor {
            continue;
        }
        let s = c(lam.sqrt(), 0.0);
        ops.push(CMat::from_fn(dout, din, |o, i| vectors[(i * dout + o, k)] * s));
    }
    let ch = KrausChannel::from_ops_unchecked(ops, vec![din], choi.out_dims.clone())?;
    let defect = ch.closure_defect();
    if defect > 1e-9 {
        return Err(DlabError::InvariantViolation(format!("recovered Kraus set not TP (defect {defect:e})")));
    }
    Ok(ch)
}
