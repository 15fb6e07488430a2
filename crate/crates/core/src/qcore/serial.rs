//! Matrix serialization.
//!
//! JSON: `{"shape":[r,c],"factor_dims":[...],"re":[...],"im":[...]}`, row-major.
//! Vectors are written with shape `[d,1]`.
//!
//! QMX1: the 4-byte magic `QMX1`, a little-endian u32 rank, `rank` little-endian
//! u32 dims, then interleaved little-endian f64 `(re, im)` pairs in row-major
//! order. Factor structure is not stored in QMX1.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::channel::ChoiOp;
use super::state::{DensityOp, PureState};
use crate::error::{DlabError, Result};
use crate::linalg::{c, CMat, CVec};

pub const QMX_MAGIC: &[u8; 4] = b"QMX1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub shape: [usize; 2],
    pub factor_dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat, factor_dims: &[usize]) -> Self {
        let (r, cols) = m.shape();
        let mut re = Vec::with_capacity(r * cols);
        let mut im = Vec::with_capacity(r * cols);
        for i in 0..r {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { shape: [r, cols], factor_dims: factor_dims.to_vec(), re, im }
    }

    pub fn from_vector(v: &CVec, factor_dims: &[usize]) -> Self {
        Self {
            shape: [v.len(), 1],
            factor_dims: factor_dims.to_vec(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let [r, cols] = self.shape;
        if self.re.len() != r * cols || self.im.len() != r * cols {
            return Err(DlabError::Serialization(format!(
                "shape {r}x{cols} needs {} entries, got re {} im {}",
                r * cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMat::from_fn(r, cols, |i, j| c(self.re[i * cols + j], self.im[i * cols + j])))
    }

    pub fn to_vector(&self) -> Result<CVec> {
        let m = self.to_matrix()?;
        if m.ncols() != 1 {
            return Err(DlabError::Serialization(format!("expected a column vector, got shape {:?}", self.shape)));
        }
        Ok(m.column(0).into_owned())
    }

    fn dims_or_default(&self, n: usize) -> Vec<usize> {
        if self.factor_dims.is_empty() {
            vec![n]
        } else {
            self.factor_dims.clone()
        }
    }

    pub fn to_density(&self) -> Result<DensityOp> {
        let m = self.to_matrix()?;
        let dims = self.dims_or_default(m.nrows());
        DensityOp::new(m, dims)
    }

    pub fn to_pure(&self) -> Result<PureState> {
        let v = self.to_vector()?;
        let dims = self.dims_or_default(v.len());
        PureState::new(v, dims)
    }
}

impl From<&DensityOp> for MatrixJson {
    fn from(rho: &DensityOp) -> Self {
        Self::from_matrix(rho.matrix(), rho.factor_dims())
    }
}

impl From<&PureState> for MatrixJson {
    fn from(s: &PureState) -> Self {
        Self::from_vector(s.amplitudes(), s.factor_dims())
    }
}

impl From<&ChoiOp> for MatrixJson {
    fn from(j: &ChoiOp) -> Self {
        let mut dims = vec![j.in_dim()];
        dims.extend_from_slice(j.out_dims());
        Self::from_matrix(j.matrix(), &dims)
    }
}

pub fn write_qmx<W: Write>(w: &mut W, m: &CMat, as_vector: bool) -> Result<()> {
    w.write_all(QMX_MAGIC)?;
    let dims: Vec<usize> = if as_vector { vec![m.nrows()] } else { vec![m.nrows(), m.ncols()] };
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in &dims {
        let d32 = u32::try_from(d).map_err(|_| DlabError::Serialization(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d32.to_le_bytes())?;
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].re.to_le_bytes())?;
            w.write_all(&m[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a QMX1 payload; rank-1 payloads come back as a column matrix.
pub fn read_qmx<R: Read>(r: &mut R) -> Result<CMat> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != QMX_MAGIC {
        return Err(DlabError::Serialization("bad QMX1 magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let rank = u32::from_le_bytes(word) as usize;
    if rank == 0 || rank > 2 {
        return Err(DlabError::Serialization(format!("unsupported QMX1 rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        r.read_exact(&mut word)?;
        dims.push(u32::from_le_bytes(word) as usize);
    }
    let (rows, cols) = if rank == 1 { (dims[0], 1) } else { (dims[0], dims[1]) };
    let mut m = CMat::zeros(rows, cols);
    let mut buf = [0u8; 8];
    for i in 0..rows {
        for j in 0..cols {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            r.read_exact(&mut buf)?;
            let im = f64::from_le_bytes(buf);
            m[(i, j)] = c(re, im);
        }
    }
    Ok(m)
}

/// Parse either format, sniffing the QMX1 magic.
pub fn parse_matrix_bytes(bytes: &[u8]) -> Result<MatrixJson> {
    if bytes.starts_with(QMX_MAGIC) {
        let m = read_qmx(&mut &bytes[..])?;
        Ok(MatrixJson::from_matrix(&m, &[]))
    } else {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::state::bell_state;
    use proptest::prelude::*;

    #[test]
    fn qmx_layout_is_bit_exact() {
        let m = CMat::from_row_slice(1, 2, &[c(1.0, -2.0), c(0.5, 0.25)]);
        let mut buf = Vec::new();
        write_qmx(&mut buf, &m, false).unwrap();
        assert_eq!(&buf[..4], b"QMX1");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &2u32.to_le_bytes());
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
        assert_eq!(&buf[24..32], &(-2.0f64).to_le_bytes());
        assert_eq!(buf.len(), 16 + 4 * 8);
    }

    #[test]
    fn json_field_order_and_vector_shape() {
        let j = MatrixJson::from(&bell_state());
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.starts_with("{\"shape\":[4,1],\"factor_dims\":[2,2],\"re\":["));
        assert_eq!(j.to_pure().unwrap(), bell_state());
    }

    #[test]
    fn rejects_truncated_payloads() {
        assert!(read_qmx(&mut &b"QMX0"[..]).is_err());
        assert!(read_qmx(&mut &b"QMX1\x02\x00\x00\x00\x02\x00\x00\x00"[..]).is_err());
        let bad = MatrixJson { shape: [2, 2], factor_dims: vec![], re: vec![1.0], im: vec![0.0] };
        assert!(bad.to_matrix().is_err());
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let mut x = seed;
            let m = CMat::from_fn(rows, cols, |_, _| {
                x = crate::rng::derive_seed(x, 1);
                c((x >> 11) as f64 / (1u64 << 53) as f64 - 0.5, (x & 0xffff) as f64 * 1e-3)
            });
            let mut buf = Vec::new();
            write_qmx(&mut buf, &m, false).unwrap();
            prop_assert_eq!(read_qmx(&mut buf.as_slice()).unwrap(), m.clone());
            let j = MatrixJson::from_matrix(&m, &[rows * cols / cols]);
            let text = serde_json::to_string(&j).unwrap();
            let back: MatrixJson = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_matrix().unwrap(), m);
        }
    }
}
