//! Loading states, Choi operators, nets and specs from disk.

use std::path::Path;

use anyhow::{bail, Context, Result};
use dlab_core::disentangler::{DisentanglerSpec, DisentanglerSpecJson};
use dlab_core::purenet::{PureNet, PureNetJson};
use dlab_core::qcore::{parse_matrix_bytes, ChoiOp, DensityOp, MatrixJson};

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_matrix(path: &Path) -> Result<MatrixJson> {
    parse_matrix_bytes(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Factor dims for a bipartite state: explicit, stored, or an even square split.
fn bipartite_dims(n: usize, stored: &[usize], explicit: Option<&[usize]>) -> Result<Vec<usize>> {
    if let Some(d) = explicit {
        return Ok(d.to_vec());
    }
    if stored.len() >= 2 {
        return Ok(stored.to_vec());
    }
    let r = (n as f64).sqrt().round() as usize;
    if r * r != n {
        bail!("dimension {n} is not a square; pass --dims");
    }
    Ok(vec![r, r])
}

/// A density operator carrying bipartite factor dims.
pub fn read_bipartite_state(path: &Path, dims: Option<&[usize]>) -> Result<DensityOp> {
    let m = read_matrix(path)?;
    let rho = m.to_density()?;
    let dims = bipartite_dims(rho.dim(), &m.factor_dims, dims)?;
    Ok(rho.with_factor_dims(dims)?)
}

/// A Choi operator; the input dimension is the first stored factor unless given.
pub fn read_choi(path: &Path, in_dim: Option<usize>) -> Result<ChoiOp> {
    let m = read_matrix(path)?;
    let matrix = m.to_matrix()?;
    let n = matrix.nrows();
    let (din, outs) = match (in_dim, m.factor_dims.split_first()) {
        (Some(din), _) => (din, vec![n / din.max(1)]),
        (None, Some((&din, outs))) if !outs.is_empty() => (din, outs.to_vec()),
        _ => {
            let r = (n as f64).sqrt().round() as usize;
            if r * r != n {
                bail!("cannot infer the input dimension of a {n}x{n} Choi operator; pass --in-dim");
            }
            (r, vec![r])
        }
    };
    if din == 0 || din * outs.iter().product::<usize>() != n {
        bail!("input dimension {din} does not divide the Choi dimension {n}");
    }
    Ok(ChoiOp::new(matrix, din, outs)?)
}

/// A net file: either a bare net or a report holding one under `net`.
pub fn read_net(path: &Path) -> Result<PureNet> {
    let value: serde_json::Value =
        serde_json::from_slice(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let value = match value.get("net") {
        Some(inner) => inner.clone(),
        None => value,
    };
    let j: PureNetJson = serde_json::from_value(value).with_context(|| format!("reading a net from {}", path.display()))?;
    Ok(PureNet::from_json(&j)?)
}

/// A spec file: either a bare spec or a report holding one under `spec`.
pub fn read_spec(path: &Path) -> Result<DisentanglerSpec> {
    let value: serde_json::Value =
        serde_json::from_slice(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let value = match value.get("spec") {
        Some(inner) => inner.clone(),
        None => value,
    };
    let j: DisentanglerSpecJson =
        serde_json::from_value(value).with_context(|| format!("reading a spec from {}", path.display()))?;
    Ok(DisentanglerSpec::from_json(&j)?)
}
