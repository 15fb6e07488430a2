//! Trace distance, fidelity, purification and monotonicity checks.

use serde::Serialize;

use crate::error::{DlabError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::qcore::{Channel, DensityOp, PureState};

fn same_dim(rho: &DensityOp, sigma: &DensityOp) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(DlabError::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    Ok(())
}

/// `(1/2) sum |eig(rho - sigma)|`.
pub fn trace_distance(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    same_dim(rho, sigma)?;
    Ok(trace_distance_matrices(rho.matrix(), sigma.matrix()))
}

pub(crate) fn trace_distance_matrices(a: &CMat, b: &CMat) -> f64 {
    0.5 * linalg::trace_norm_herm(&(a - b))
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    same_dim(rho, sigma)?;
    Ok(fidelity_matrices(rho.matrix(), sigma.matrix()))
}

pub(crate) fn fidelity_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    let s = linalg::sqrt_psd(rho);
    let inner = &s * sigma * &s;
    let (values, _) = linalg::eigh(&inner);
    let floor = linalg::psd_floor(&values);
    let root: f64 = values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    root * root
}

/// Pure-state purification `sum_i sqrt(l_i) |v_i> (x) |i>` on C^d (x) C^d.
pub fn purify(rho: &DensityOp) -> PureState {
    let d = rho.dim();
    let (values, vectors) = linalg::eigh(rho.matrix());
    let mut v = CVec::zeros(d * d);
    for (k, &lam) in values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let w = lam.sqrt();
        for i in 0..d {
            v[i * d + k] = vectors[(i, k)] * c(w, 0.0);
        }
    }
    // clamped negative eigenvalues leave the norm short by at most a few ulps
    let n = v.norm();
    v /= c(n, 0.0);
    PureState::new(v, vec![d, d]).expect("purification is normalized")
}

/// Trace distance and fidelity together with the Fuchs-van de Graaf bounds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricReport {
    pub trace_distance: f64,
    pub fidelity: f64,
    pub fg_lower: f64,
    pub fg_upper: f64,
}

impl MetricReport {
    pub fn compute(rho: &DensityOp, sigma: &DensityOp) -> Result<Self> {
        let t = trace_distance(rho, sigma)?;
        let f = fidelity(rho, sigma)?;
        Ok(Self { trace_distance: t, fidelity: f, fg_lower: 1.0 - f.sqrt(), fg_upper: (1.0 - f).max(0.0).sqrt() })
    }

    /// Smallest slack of `fg_lower <= T <= fg_upper`.
    pub fn sandwich_slack(&self) -> f64 {
        (self.trace_distance - self.fg_lower).min(self.fg_upper - self.trace_distance)
    }
}

/// `(T(rho,sigma) - T(ch rho, ch sigma), F(ch rho, ch sigma) - F(rho,sigma))`; both are >= 0 for CPTP maps.
pub fn check_monotonicity<C: Channel + ?Sized>(rho: &DensityOp, sigma: &DensityOp, ch: &C) -> Result<(f64, f64)> {
    same_dim(rho, sigma)?;
    let a = ch.apply(rho)?;
    let b = ch.apply(sigma)?;
    let slack_t = trace_distance(rho, sigma)? - trace_distance(&a, &b)?;
    let slack_f = fidelity(&a, &b)? - fidelity(rho, sigma)?;
    Ok((slack_t, slack_f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{qubit_plus, random_density, KrausChannel};
    use crate::rng::rng_from_seed;

    fn ket0() -> DensityOp {
        PureState::basis(2, 0).density()
    }

    fn ket1() -> DensityOp {
        PureState::basis(2, 1).density()
    }

    #[test]
    fn trace_distance_examples() {
        assert!(trace_distance(&ket0(), &ket0()).unwrap().abs() < 1e-15);
        assert!((trace_distance(&ket0(), &ket1()).unwrap() - 1.0).abs() < 1e-15);
        // |0><0| - |+><+| = [[1/2,-1/2],[-1/2,-1/2]] has eigenvalues +-1/sqrt(2)
        let t = trace_distance(&ket0(), &qubit_plus().density()).unwrap();
        assert!((t - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(trace_distance(&ket0(), &DensityOp::maximally_mixed(vec![3])).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = rng_from_seed(1);
        let rho = random_density(3, 2, &mut rng).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        assert!(fidelity(&ket0(), &ket1()).unwrap().abs() < 1e-15);
        // commuting pair: (sum sqrt(p_i q_i))^2 = (sqrt(1/2))^2
        let f = fidelity(&DensityOp::maximally_mixed(vec![2]), &ket0()).unwrap();
        assert!((f - 0.5).abs() < 1e-14);
    }

    #[test]
    fn purification_reduces_back() {
        let p = purify(&ket0());
        let r = p.density().partial_trace(&[1]).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), ket0().matrix()) < 1e-10);
        let mixed = DensityOp::maximally_mixed(vec![2]);
        let r = purify(&mixed).density().partial_trace(&[1]).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), mixed.matrix()) < 1e-10);
        let rho = random_density(3, 2, &mut rng_from_seed(4)).unwrap();
        let r = purify(&rho).density().partial_trace(&[1]).unwrap();
        assert!(linalg::max_abs_diff(r.matrix(), rho.matrix()) < 1e-10);
    }

    #[test]
    fn monotonicity_examples() {
        let mut rng = rng_from_seed(2);
        let rho = random_density(2, 2, &mut rng).unwrap();
        let sigma = random_density(2, 1, &mut rng).unwrap();
        let (st, sf) = check_monotonicity(&rho, &sigma, &KrausChannel::identity(vec![2])).unwrap();
        assert!(st.abs() < 1e-12 && sf.abs() < 1e-12);
        let (st, _) = check_monotonicity(&rho, &sigma, &KrausChannel::depolarizing(2)).unwrap();
        assert!((st - trace_distance(&rho, &sigma).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn report_sandwich_holds() {
        let mut rng = rng_from_seed(8);
        let rho = random_density(4, 3, &mut rng).unwrap();
        let sigma = random_density(4, 4, &mut rng).unwrap();
        let r = MetricReport::compute(&rho, &sigma).unwrap();
        assert!(r.sandwich_slack() >= -1e-9);
    }
}
