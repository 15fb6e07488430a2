//! Index bookkeeping for partial traces and partial transposes over an
//! explicit tensor-factor structure. Factors are ordered most-significant
//! first (row-major), matching `kronecker`.

use crate::error::{DlabError, Result};
use crate::linalg::{CMat, ZERO};

/// Flat-index tables splitting a composite space into kept and traced parts.
pub(crate) struct TraceLayout {
    pub kept_dims: Vec<usize>,
    kept_offsets: Vec<usize>,
    traced_offsets: Vec<usize>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        s[f] = s[f + 1] * dims[f + 1];
    }
    s
}

fn offsets(dims: &[usize], stride: &[usize], factors: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(out.len() * dims[f]);
        for &base in &out {
            for i in 0..dims[f] {
                next.push(base + i * stride[f]);
            }
        }
        out = next;
    }
    out
}

impl TraceLayout {
    pub fn new(dims: &[usize], traced: &[usize]) -> Result<Self> {
        let mut mask = vec![false; dims.len()];
        for &t in traced {
            if t >= dims.len() {
                return Err(DlabError::InvalidParameter(format!(
                    "factor index {t} out of range for {} factors",
                    dims.len()
                )));
            }
            if mask[t] {
                return Err(DlabError::InvalidParameter(format!("factor index {t} repeated")));
            }
            mask[t] = true;
        }
        let stride = strides(dims);
        let kept: Vec<usize> = (0..dims.len()).filter(|&f| !mask[f]).collect();
        let traced: Vec<usize> = (0..dims.len()).filter(|&f| mask[f]).collect();
        Ok(Self {
            kept_dims: kept.iter().map(|&f| dims[f]).collect(),
            kept_offsets: offsets(dims, &stride, &kept),
            traced_offsets: offsets(dims, &stride, &traced),
        })
    }

    pub fn kept_size(&self) -> usize {
        self.kept_offsets.len()
    }

    pub fn traced_size(&self) -> usize {
        self.traced_offsets.len()
    }

    /// Flat index of (kept multi-index `k`, traced multi-index `t`).
    #[inline]
    pub fn index(&self, k: usize, t: usize) -> usize {
        self.kept_offsets[k] + self.traced_offsets[t]
    }

    pub fn trace_matrix(&self, m: &CMat) -> CMat {
        let n = self.kept_size();
        let mut out = CMat::zeros(n, n);
        for col in 0..n {
            for row in 0..n {
                let mut acc = ZERO;
                for t in 0..self.traced_size() {
                    acc += m[(self.index(row, t), self.index(col, t))];
                }
                out[(row, col)] = acc;
            }
        }
        out
    }
}

pub(crate) fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(DlabError::InvalidParameter(format!("factor dims {dims:?} must be positive")));
    }
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(DlabError::DimensionMismatch(format!(
            "factor dims {dims:?} multiply to {prod}, matrix dimension is {n}"
        )));
    }
    Ok(())
}

pub fn partial_trace_matrix(m: &CMat, dims: &[usize], traced: &[usize]) -> Result<(CMat, Vec<usize>)> {
    check_dims(dims, m.nrows())?;
    let layout = TraceLayout::new(dims, traced)?;
    Ok((layout.trace_matrix(m), layout.kept_dims.clone()))
}

/// Partial transpose of factor `factor`.
pub fn partial_transpose_matrix(m: &CMat, dims: &[usize], factor: usize) -> Result<CMat> {
    check_dims(dims, m.nrows())?;
    if factor >= dims.len() {
        return Err(DlabError::InvalidParameter(format!(
            "cut index {factor} out of range for {} factors",
            dims.len()
        )));
    }
    let stride = strides(dims);
    let n = m.nrows();
    let df = dims[factor];
    let s = stride[factor];
    let digit = |i: usize| (i / s) % df;
    Ok(CMat::from_fn(n, n, |r, c| {
        let (dr, dc) = (digit(r), digit(c));
        let r2 = r - dr * s + dc * s;
        let c2 = c - dc * s + dr * s;
        m[(r2, c2)]
    }))
}
