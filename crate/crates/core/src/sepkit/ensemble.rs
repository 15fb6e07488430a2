use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::qcore::{haar_vector, DensityOp, MatrixJson, PureState};

/// Default and maximal ensemble size `(dA dB)^2`.
pub fn caratheodory_cap(da: usize, db: usize) -> usize {
    (da * db) * (da * db)
}

/// `sum_i p_i |a_i><a_i| (x) |b_i><b_i|`.
#[derive(Debug, Clone)]
pub struct SepEnsemble {
    weights: Vec<f64>,
    parts_a: Vec<PureState>,
    parts_b: Vec<PureState>,
    da: usize,
    db: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SepEnsembleJson {
    pub dims: [usize; 2],
    pub weights: Vec<f64>,
    pub parts_a: Vec<MatrixJson>,
    pub parts_b: Vec<MatrixJson>,
}

impl SepEnsemble {
    /// Weights within `1e-12` of the simplex are renormalized; terms beyond
    /// the Caratheodory cap are merged away.
    pub fn new(weights: Vec<f64>, parts_a: Vec<PureState>, parts_b: Vec<PureState>) -> Result<Self> {
        if weights.is_empty() || weights.len() != parts_a.len() || weights.len() != parts_b.len() {
            return Err(DlabError::DimensionMismatch(format!(
                "ensemble lengths {} / {} / {}",
                weights.len(),
                parts_a.len(),
                parts_b.len()
            )));
        }
        let (da, db) = (parts_a[0].dim(), parts_b[0].dim());
        if parts_a.iter().any(|p| p.dim() != da) || parts_b.iter().any(|p| p.dim() != db) {
            return Err(DlabError::DimensionMismatch("ensemble parts differ in dimension".into()));
        }
        if weights.iter().any(|&w| !(w >= -1e-12)) {
            return Err(DlabError::InvariantViolation("negative ensemble weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DlabError::InvariantViolation(format!("ensemble weights sum to {total}")));
        }
        let weights = weights.iter().map(|&w| w.max(0.0) / total).collect();
        let mut e = Self { weights, parts_a, parts_b, da, db };
        e.reduce_support();
        Ok(e)
    }

    /// Build from terms `(p, a, b)` with arbitrary positive `p`.
    pub(crate) fn from_terms(terms: Vec<(f64, CVec, CVec)>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(DlabError::InvariantViolation("ensemble has no weight".into()));
        };
        let (da, db) = (first.1.len(), first.2.len());
        let mut w = Vec::with_capacity(terms.len());
        let mut pa = Vec::with_capacity(terms.len());
        let mut pb = Vec::with_capacity(terms.len());
        for (p, a, b) in terms {
            // vanishing terms can carry factors that are not unit to rounding
            let (Some(a), Some(b)) = (linalg::normalized(&a), linalg::normalized(&b)) else {
                continue;
            };
            if p <= 0.0 {
                continue;
            }
            w.push(p);
            pa.push(PureState::from_unit(a, vec![da]));
            pb.push(PureState::from_unit(b, vec![db]));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(DlabError::InvariantViolation("ensemble has no weight".into()));
        }
        w.iter_mut().for_each(|x| *x /= total);
        Self::new(w, pa, pb)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn parts_a(&self) -> &[PureState] {
        &self.parts_a
    }

    pub fn parts_b(&self) -> &[PureState] {
        &self.parts_b
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.da, self.db)
    }

    pub(crate) fn product_vectors(&self) -> Vec<CVec> {
        self.parts_a.iter().zip(&self.parts_b).map(|(a, b)| linalg::kron_vec(a.amplitudes(), b.amplitudes())).collect()
    }

    pub(crate) fn terms(&self) -> Vec<(f64, CVec, CVec)> {
        self.weights
            .iter()
            .zip(&self.parts_a)
            .zip(&self.parts_b)
            .map(|((&w, a), b)| (w, a.amplitudes().clone(), b.amplitudes().clone()))
            .collect()
    }

    pub fn as_matrix(&self) -> CMat {
        let n = self.da * self.db;
        let mut m = CMat::zeros(n, n);
        for (v, &w) in self.product_vectors().iter().zip(&self.weights) {
            m += linalg::projector(v) * c(w, 0.0);
        }
        m
    }

    pub fn as_density(&self) -> DensityOp {
        DensityOp::from_raw(self.as_matrix(), vec![self.da, self.db])
    }

    /// Drop zero weights, then shrink to the Caratheodory cap by moving along
    /// affine dependencies of the product projectors.
    fn reduce_support(&mut self) {
        let keep: Vec<usize> = (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect();
        if keep.len() < self.weights.len() {
            self.select(&keep);
        }
        let cap = caratheodory_cap(self.da, self.db);
        while self.weights.len() > cap {
            let vecs = self.product_vectors();
            let n = self.da * self.db;
            let rows = n * n + 1;
            let take = (rows + 1).min(self.weights.len());
            // real coordinates of each projector plus a row of ones
            let a = DMatrix::<f64>::from_fn(rows, take, |r, col| {
                if r == n * n {
                    return 1.0;
                }
                let (i, j) = (r / n, r % n);
                let z = vecs[col][i] * vecs[col][j].conj();
                if i <= j {
                    z.re
                } else {
                    z.im
                }
            });
            let ata = a.transpose() * &a;
            let eig = ata.symmetric_eigen();
            let k = eig.eigenvalues.imin();
            let dir = eig.eigenvectors.column(k).into_owned();
            let dir = if dir.iter().any(|&x| x > 1e-14) { dir } else { -dir };
            let mut t = f64::INFINITY;
            let mut hit = 0;
            for i in 0..take {
                if dir[i] > 1e-14 {
                    let ti = self.weights[i] / dir[i];
                    if ti < t {
                        t = ti;
                        hit = i;
                    }
                }
            }
            for i in 0..take {
                self.weights[i] -= t * dir[i];
            }
            self.weights[hit] = 0.0;
            let keep: Vec<usize> = (0..self.weights.len()).filter(|&i| self.weights[i] > 1e-300).collect();
            self.select(&keep);
            let total: f64 = self.weights.iter().sum();
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
    }

    fn select(&mut self, keep: &[usize]) {
        self.weights = keep.iter().map(|&i| self.weights[i].max(0.0)).collect();
        self.parts_a = keep.iter().map(|&i| self.parts_a[i].clone()).collect();
        self.parts_b = keep.iter().map(|&i| self.parts_b[i].clone()).collect();
    }

    pub fn to_json(&self) -> SepEnsembleJson {
        SepEnsembleJson {
            dims: [self.da, self.db],
            weights: self.weights.clone(),
            parts_a: self.parts_a.iter().map(MatrixJson::from).collect(),
            parts_b: self.parts_b.iter().map(MatrixJson::from).collect(),
        }
    }

    pub fn from_json(j: &SepEnsembleJson) -> Result<Self> {
        let pa = j.parts_a.iter().map(MatrixJson::to_pure).collect::<Result<Vec<_>>>()?;
        let pb = j.parts_b.iter().map(MatrixJson::to_pure).collect::<Result<Vec<_>>>()?;
        let e = Self::new(j.weights.clone(), pa, pb)?;
        if [e.da, e.db] != j.dims {
            return Err(DlabError::DimensionMismatch(format!("header dims {:?} vs parts {:?}", j.dims, [e.da, e.db])));
        }
        Ok(e)
    }
}

/// Haar-random parts with flat-Dirichlet weights.
pub fn random_sep_ensemble<R: Rng + ?Sized>(da: usize, db: usize, s: usize, rng: &mut R) -> Result<SepEnsemble> {
    if s == 0 || s > caratheodory_cap(da, db) {
        return Err(DlabError::InvalidParameter(format!("ensemble size {s} outside 1..={}", caratheodory_cap(da, db))));
    }
    let mut terms = Vec::with_capacity(s);
    for _ in 0..s {
        let w: f64 = Exp1.sample(rng);
        let a = haar_vector(da, rng);
        let b = haar_vector(db, rng);
        terms.push((w, a, b));
    }
    SepEnsemble::from_terms(terms)
}

/// Rank-one POVM `{|eta_i><eta_i|}` with `sum_i |eta_i><eta_i| = I`.
#[derive(Debug, Clone, Serialize)]
pub struct Rank1Povm {
    #[serde(serialize_with = "serialize_vectors")]
    vectors: Vec<CVec>,
}

fn serialize_vectors<S: serde::Serializer>(v: &[CVec], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&MatrixJson::from_vector(x, &[x.len()]))?;
    }
    seq.end()
}

pub const POVM_TOL: f64 = 1e-9;

impl Rank1Povm {
    pub fn new(vectors: Vec<CVec>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(DlabError::InvalidParameter("empty POVM".into()));
        };
        let d = first.len();
        if vectors.iter().any(|v| v.len() != d) {
            return Err(DlabError::DimensionMismatch("POVM vectors differ in length".into()));
        }
        let p = Self { vectors };
        let defect = p.closure_defect();
        if defect > POVM_TOL {
            return Err(DlabError::InvariantViolation(format!("POVM closure defect {defect}")));
        }
        Ok(p)
    }

    /// Renormalize by `S^{-1/2}` with `S = sum eta eta^dagger`, then validate.
    pub fn closed(raw: Vec<CVec>) -> Result<Self> {
        let Some(first) = raw.first() else {
            return Err(DlabError::InvalidParameter("empty POVM".into()));
        };
        let d = first.len();
        let mut s = CMat::zeros(d, d);
        for v in &raw {
            s += linalg::projector(v);
        }
        if linalg::min_eigenvalue(&s) <= 1e-12 {
            return Err(DlabError::InvariantViolation("POVM vectors do not span the space".into()));
        }
        let fix = linalg::inv_sqrt_psd(&s);
        Self::new(raw.iter().map(|v| &fix * v).collect())
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn closure_defect(&self) -> f64 {
        let d = self.dim();
        let mut s = CMat::zeros(d, d);
        for v in &self.vectors {
            s += linalg::projector(v);
        }
        linalg::max_abs_diff(&s, &CMat::identity(d, d))
    }

    pub fn from_json(items: &[MatrixJson]) -> Result<Self> {
        Self::new(items.iter().map(MatrixJson::to_vector).collect::<Result<Vec<_>>>()?)
    }
}
