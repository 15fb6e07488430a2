use super::ptrace::{check_dims, partial_trace_matrix, TraceLayout};
use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat, CVec};

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

/// Kronecker product that concatenates factor structure.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

/// Unit vector in C^d with explicit tensor-factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVec,
    factor_dims: Vec<usize>,
}

impl PureState {
    pub fn new(amplitudes: CVec, factor_dims: Vec<usize>) -> Result<Self> {
        check_dims(&factor_dims, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(DlabError::InvariantViolation(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, factor_dims })
    }

    /// Single-factor state from amplitudes, rescaled to unit norm.
    pub fn normalize(amplitudes: CVec) -> Result<Self> {
        let d = amplitudes.len();
        let v = linalg::normalized(&amplitudes)
            .ok_or_else(|| DlabError::InvariantViolation("zero vector cannot be normalized".into()))?;
        Self::new(v, vec![d.max(1)])
    }

    pub fn from_slice(amps: &[(f64, f64)]) -> Result<Self> {
        Self::normalize(CVec::from_iterator(amps.len(), amps.iter().map(|&(r, i)| c(r, i))))
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self { amplitudes: linalg::basis_vec(d, i), factor_dims: vec![d] }
    }

    pub(crate) fn from_unit(amplitudes: CVec, factor_dims: Vec<usize>) -> Self {
        debug_assert!((amplitudes.norm() - 1.0).abs() < 1e-9);
        Self { amplitudes, factor_dims }
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn with_factor_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.dim())?;
        self.factor_dims = dims;
        Ok(self)
    }

    pub fn inner(&self, other: &PureState) -> crate::linalg::C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// |<self|other>|^2
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn projector(&self) -> CMat {
        linalg::projector(&self.amplitudes)
    }

    pub fn density(&self) -> DensityOp {
        DensityOp::from_raw(self.projector(), self.factor_dims.clone())
    }

    /// `self^{\otimes k}`
    pub fn power(&self, k: usize) -> PureState {
        let mut out = self.clone();
        for _ in 1..k {
            out = out.tensor(self);
        }
        out
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        Self { amplitudes: linalg::kron_vec(&self.amplitudes, &other.amplitudes), factor_dims: dims }
    }
}

/// Density operator: Hermitian, PSD, unit trace, with tensor-factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    matrix: CMat,
    factor_dims: Vec<usize>,
}

impl DensityOp {
    pub fn new(matrix: CMat, factor_dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(DlabError::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dims(&factor_dims, matrix.nrows())?;
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(DlabError::InvariantViolation(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(DlabError::InvariantViolation(format!("trace {tr} is not 1")));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < -PSD_TOL {
            return Err(DlabError::InvariantViolation(format!("not PSD (min eigenvalue {min:e})")));
        }
        Ok(Self { matrix: linalg::hermitize(&matrix), factor_dims })
    }

    /// Construct from a matrix that is a state up to rounding; Hermitian part is kept.
    pub(crate) fn from_raw(matrix: CMat, factor_dims: Vec<usize>) -> Self {
        debug_assert_eq!(factor_dims.iter().product::<usize>(), matrix.nrows());
        Self { matrix: linalg::hermitize(&matrix), factor_dims }
    }

    pub fn maximally_mixed(factor_dims: Vec<usize>) -> Self {
        let n: usize = factor_dims.iter().product();
        Self { matrix: CMat::identity(n, n) / c(n as f64, 0.0), factor_dims }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn with_factor_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.dim())?;
        self.factor_dims = dims;
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Trace out the listed factors (0-based). Tracing every factor leaves a 1x1 state.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityOp> {
        let (m, mut kept) = partial_trace_matrix(&self.matrix, &self.factor_dims, traced)?;
        if kept.is_empty() {
            kept.push(1);
        }
        Ok(Self::from_raw(m, kept))
    }

    /// Regroup the factors as a bipartition `[prod(dims[..cut]), prod(dims[cut..])]`.
    pub fn bipartition(&self, cut: usize) -> Result<DensityOp> {
        if cut == 0 || cut >= self.factor_dims.len() {
            return Err(DlabError::InvalidParameter(format!(
                "cut {cut} must split {} factors",
                self.factor_dims.len()
            )));
        }
        let a = self.factor_dims[..cut].iter().product();
        let b = self.factor_dims[cut..].iter().product();
        Ok(Self { matrix: self.matrix.clone(), factor_dims: vec![a, b] })
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn mix(&self, other: &DensityOp, t: f64) -> Result<DensityOp> {
        if self.dim() != other.dim() {
            return Err(DlabError::DimensionMismatch(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(Self::from_raw(&self.matrix * c(1.0 - t, 0.0) + &other.matrix * c(t, 0.0), self.factor_dims.clone()))
    }
}

impl Tensor for DensityOp {
    fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.factor_dims.clone();
        dims.extend_from_slice(&other.factor_dims);
        Self { matrix: linalg::kron(&self.matrix, &other.matrix), factor_dims: dims }
    }
}

/// General linear operator between tensor-structured spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct LinOp {
    matrix: CMat,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
}

impl LinOp {
    pub fn new(matrix: CMat, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        check_dims(&in_dims, matrix.ncols())?;
        check_dims(&out_dims, matrix.nrows())?;
        Ok(Self { matrix, in_dims, out_dims })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self { matrix: CMat::identity(n, n), in_dims: dims.clone(), out_dims: dims }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn adjoint(&self) -> LinOp {
        Self { matrix: self.matrix.adjoint(), in_dims: self.out_dims.clone(), out_dims: self.in_dims.clone() }
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        if v.len() != self.in_dim() {
            return Err(DlabError::DimensionMismatch(format!("vector {} vs operator input {}", v.len(), self.in_dim())));
        }
        Ok(&self.matrix * v)
    }

    /// Max elementwise deviation of `M^dagger M` from the identity.
    pub fn isometry_defect(&self) -> f64 {
        let g = self.matrix.adjoint() * &self.matrix;
        linalg::max_abs_diff(&g, &CMat::identity(self.in_dim(), self.in_dim()))
    }

    /// Partial trace of a square operator whose input and output structures agree.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<LinOp> {
        if self.in_dims != self.out_dims {
            return Err(DlabError::DimensionMismatch(format!(
                "partial trace needs matching structures, got in {:?} out {:?}",
                self.in_dims, self.out_dims
            )));
        }
        let layout = TraceLayout::new(&self.in_dims, traced)?;
        let mut kept = layout.kept_dims.clone();
        if kept.is_empty() {
            kept.push(1);
        }
        Ok(Self { matrix: layout.trace_matrix(&self.matrix), in_dims: kept.clone(), out_dims: kept })
    }
}

impl Tensor for LinOp {
    fn tensor(&self, other: &Self) -> Self {
        let mut in_dims = self.in_dims.clone();
        in_dims.extend_from_slice(&other.in_dims);
        let mut out_dims = self.out_dims.clone();
        out_dims.extend_from_slice(&other.out_dims);
        Self { matrix: linalg::kron(&self.matrix, &other.matrix), in_dims, out_dims }
    }
}

/// Maximally entangled state `sum_i |ii> / sqrt(d)` on C^d (x) C^d.
pub fn maximally_entangled(d: usize) -> PureState {
    let mut v = CVec::zeros(d * d);
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureState::from_unit(v, vec![d, d])
}

pub fn bell_state() -> PureState {
    maximally_entangled(2)
}

/// `|+> = (|0> + |1>)/sqrt 2`, `|+i> = (|0> + i|1>)/sqrt 2` and their orthogonal partners.
pub fn qubit_plus() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_unit(CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]), vec![2])
}

pub fn qubit_minus() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_unit(CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]), vec![2])
}

pub fn qubit_plus_i() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_unit(CVec::from_vec(vec![c(s, 0.0), c(0.0, s)]), vec![2])
}

pub fn qubit_minus_i() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_unit(CVec::from_vec(vec![c(s, 0.0), c(0.0, -s)]), vec![2])
}
