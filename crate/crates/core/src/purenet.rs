//! Finite nets of pure states under trace distance: size bounds, greedy
//! construction, Monte-Carlo covering certificates and convex-hull fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_fit::{fit_simplex, FitOptions, SimplexFit};
use crate::error::{DlabError, Result};
use crate::linalg::{c, CVec};
use crate::qcore::{haar_vector, qubit_minus, qubit_minus_i, qubit_plus, qubit_plus_i, MatrixJson, PureState};
use crate::rng::{rng_from_seed, task_rng};

/// Points closer than this are treated as the same ray.
pub const DISTINCT_TOL: f64 = 1e-9;

/// Trace distance between two pure states, `sqrt(1 - |<a|b>|^2)`.
pub fn pure_distance(a: &CVec, b: &CVec) -> f64 {
    let ov = a.dotc(b).norm_sqr();
    (1.0 - ov).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetBounds {
    pub log2_lower: f64,
    pub log2_upper: f64,
    pub d: usize,
    pub epsilon: f64,
}

/// Two-sided bounds on log2 of the minimum net size in C^d at radius `eps`.
pub fn lemma1_bounds(d: usize, eps: f64) -> Result<NetBounds> {
    if d < 2 {
        return Err(DlabError::InvalidParameter(format!("net bounds need d >= 2, got {d}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(DlabError::InvalidParameter(format!("net radius must lie in (0,1], got {eps}")));
    }
    let df = d as f64;
    let log2_lower = 2.0 * (df - 1.0) * (1.0 / eps).log2();
    let log2_upper = log2_lower + (5.0 * df * df.ln()).log2();
    Ok(NetBounds { d, epsilon: eps, log2_lower, log2_upper })
}

#[derive(Debug, Clone)]
pub struct PureNet {
    points: Vec<PureState>,
    d: usize,
    nominal_radius: f64,
    certified_radius: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
}

/// JSON layout: metadata first, then the points as qcore vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PureNetJson {
    pub d: usize,
    pub nominal_radius: f64,
    pub certified_radius: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub points: Vec<MatrixJson>,
}

impl PureNet {
    pub fn new(points: Vec<PureState>, nominal_radius: f64) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(DlabError::InvalidParameter("a net needs at least one point".into()));
        };
        let d = first.dim();
        if !(nominal_radius > 0.0 && nominal_radius <= 1.0) {
            return Err(DlabError::InvalidParameter(format!("nominal radius must lie in (0,1], got {nominal_radius}")));
        }
        for (i, p) in points.iter().enumerate() {
            if p.dim() != d {
                return Err(DlabError::DimensionMismatch(format!("net point {i} has dim {} not {d}", p.dim())));
            }
            for (j, q) in points[..i].iter().enumerate() {
                if pure_distance(p.amplitudes(), q.amplitudes()) <= DISTINCT_TOL {
                    return Err(DlabError::InvariantViolation(format!("net points {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { points, d, nominal_radius, certified_radius: None, samples: None, seed: None })
    }

    /// `{|0>,|1>,|+>,|->,|+i>,|-i>}`; its covering radius is
    /// `sqrt((1 - 1/sqrt 3)/2) ~ 0.4597`, reached at the Bloch face centres.
    pub fn octahedron() -> Self {
        let points = vec![
            PureState::basis(2, 0),
            PureState::basis(2, 1),
            qubit_plus(),
            qubit_minus(),
            qubit_plus_i(),
            qubit_minus_i(),
        ];
        Self::new(points, 0.46).expect("octahedron points are distinct")
    }

    pub fn points(&self) -> &[PureState] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn nominal_radius(&self) -> f64 {
        self.nominal_radius
    }

    pub fn certified_radius(&self) -> Option<f64> {
        self.certified_radius
    }

    pub fn samples(&self) -> Option<usize> {
        self.samples
    }

    /// Seed of the certificate, when one was computed.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The larger of the nominal and certified radii.
    pub fn effective_radius(&self) -> f64 {
        self.certified_radius.map_or(self.nominal_radius, |r| r.max(self.nominal_radius))
    }

    /// Distance from `target` to the nearest point.
    pub fn nearest_distance(&self, target: &CVec) -> f64 {
        self.points.iter().map(|p| pure_distance(p.amplitudes(), target)).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> PureNetJson {
        PureNetJson {
            d: self.d,
            nominal_radius: self.nominal_radius,
            certified_radius: self.certified_radius,
            samples: self.samples,
            seed: self.seed,
            points: self.points.iter().map(MatrixJson::from).collect(),
        }
    }

    pub fn from_json(j: &PureNetJson) -> Result<Self> {
        let points = j.points.iter().map(MatrixJson::to_pure).collect::<Result<Vec<_>>>()?;
        let mut net = Self::new(points, j.nominal_radius)?;
        if net.d != j.d {
            return Err(DlabError::DimensionMismatch(format!("net header says d={} but points have d={}", j.d, net.d)));
        }
        net.certified_radius = j.certified_radius;
        net.samples = j.samples;
        net.seed = j.seed;
        Ok(net)
    }
}

/// Default candidate pool for greedy nets.
pub fn default_pool_size(d: usize) -> usize {
    if d <= 2 {
        100_000
    } else {
        10_000
    }
}

/// Greedy farthest-point insertion over a seeded Haar pool. Every pool member
/// ends within `eps` of the net; ties go to the lowest pool index.
pub fn build_net_greedy(d: usize, eps: f64, pool_size: usize, seed: u64) -> Result<PureNet> {
    if d < 2 {
        return Err(DlabError::InvalidParameter(format!("nets need d >= 2, got {d}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DlabError::NetInfeasible(format!("radius {eps} outside (0,1)")));
    }
    if pool_size == 0 {
        return Err(DlabError::NetInfeasible("empty candidate pool".into()));
    }
    let mut rng = rng_from_seed(seed);
    let pool: Vec<CVec> = (0..pool_size).map(|_| haar_vector(d, &mut rng)).collect();
    let mut nearest = vec![f64::INFINITY; pool_size];
    let mut chosen = vec![0usize];
    loop {
        let last = &pool[*chosen.last().expect("nonempty")];
        nearest.par_iter_mut().zip(pool.par_iter()).for_each(|(m, p)| {
            let dist = pure_distance(last, p);
            if dist < *m {
                *m = dist;
            }
        });
        let (idx, far) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if far <= eps {
            break;
        }
        chosen.push(idx);
    }
    let points = chosen.into_iter().map(|i| PureState::from_unit(pool[i].clone(), vec![d])).collect();
    PureNet::new(points, eps)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoverCertificate {
    pub max_observed: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Largest distance from `n_samples` seeded Haar targets to the net. Target
/// `i` is drawn from its own derived stream, so the sample set depends only on
/// `(seed, n_samples, d)`.
pub fn certify_covering(net: &mut PureNet, n_samples: usize, seed: u64) -> CoverCertificate {
    let d = net.d;
    let pts: Vec<&CVec> = net.points.iter().map(|p| p.amplitudes()).collect();
    let dists: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let t = haar_vector(d, &mut task_rng(seed, i as u64));
            pts.iter().map(|p| pure_distance(p, &t)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let max_observed = dists.into_iter().fold(0.0, f64::max);
    net.certified_radius = Some(max_observed);
    net.samples = Some(n_samples);
    net.seed = Some(seed);
    CoverCertificate { max_observed, samples: n_samples, seed }
}

/// Trace distance from `target` to the convex hull of the net's projectors.
pub fn convex_cover_distance(net: &PureNet, target: &PureState, iters: usize) -> Result<SimplexFit> {
    if target.dim() != net.d {
        return Err(DlabError::DimensionMismatch(format!("target dim {} vs net dim {}", target.dim(), net.d)));
    }
    let atoms: Vec<_> = net.points.iter().map(PureState::projector).collect();
    Ok(fit_simplex(&atoms, &target.projector(), None, FitOptions { max_iters: iters, ..FitOptions::default() }))
}

/// `(cos t)|0> + e^{i p}(sin t)|1>` helper for Bloch-sphere probes.
pub fn qubit_state(theta: f64, phi: f64) -> PureState {
    let v = CVec::from_vec(vec![c(theta.cos(), 0.0), c(phi.cos() * theta.sin(), phi.sin() * theta.sin())]);
    PureState::from_unit(v, vec![2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_examples() {
        assert_eq!(lemma1_bounds(2, 1.0).unwrap().log2_lower, 0.0);
        assert!((lemma1_bounds(2, 0.25).unwrap().log2_lower - 4.0).abs() < 1e-12);
        assert!((lemma1_bounds(3, 0.5).unwrap().log2_lower - 4.0).abs() < 1e-12);
        assert!(lemma1_bounds(1, 0.5).is_err());
        assert!(lemma1_bounds(2, 0.0).is_err());
        assert!(lemma1_bounds(2, 1.5).is_err());
    }

    #[test]
    fn greedy_rejects_bad_radius() {
        assert!(matches!(build_net_greedy(2, 0.0, 10, 1), Err(DlabError::NetInfeasible(_))));
        assert!(matches!(build_net_greedy(2, 1.0, 10, 1), Err(DlabError::NetInfeasible(_))));
    }

    #[test]
    fn greedy_covers_its_pool() {
        let net = build_net_greedy(2, 0.3, 2000, 9).unwrap();
        let mut rng = rng_from_seed(9);
        for _ in 0..2000 {
            let p = haar_vector(2, &mut rng);
            assert!(net.nearest_distance(&p) <= 0.3);
        }
    }

    #[test]
    fn duplicate_points_rejected() {
        let p = PureState::basis(2, 0);
        let q = PureState::from_unit(p.amplitudes() * c(0.0, 1.0), vec![2]);
        assert!(PureNet::new(vec![p, q], 0.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut net = PureNet::octahedron();
        certify_covering(&mut net, 100, 3);
        let back = PureNet::from_json(&net.to_json()).unwrap();
        assert_eq!(back.len(), 6);
        assert_eq!(back.certified_radius(), net.certified_radius());
        assert_eq!(back.samples(), Some(100));
    }
}
