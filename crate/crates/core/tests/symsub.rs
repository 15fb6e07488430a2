use dlab_core::linalg::{self, c, CMat, CVec};
use dlab_core::purenet::PureNet;
use dlab_core::qcore::{random_density, random_pure, DensityOp, PureState};
use dlab_core::rng::rng_from_seed;
use dlab_core::symsub::{
    default_fitting_net, definetti_fit, definetti_fit_general, reduce_symmetric, sym_dimension, sym_isometry,
    SymBasis,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn qubit_net() -> &'static PureNet {
    static NET: OnceLock<PureNet> = OnceLock::new();
    NET.get_or_init(|| default_fitting_net(2, 1).unwrap())
}

/// Swap tensor factors `a` and `b` of a vector on `(C^d)^{(x)n}`.
fn swap_factors(v: &CVec, d: usize, n: usize, a: usize, b: usize) -> CVec {
    let digits = |mut idx: usize| {
        let mut out = vec![0; n];
        for f in (0..n).rev() {
            out[f] = idx % d;
            idx /= d;
        }
        out
    };
    let mut w = CVec::zeros(v.len());
    for i in 0..v.len() {
        let mut dg = digits(i);
        dg.swap(a, b);
        let j = dg.iter().fold(0, |acc, &x| acc * d + x);
        w[j] = v[i];
    }
    w
}

fn random_sym_state(dim: usize, aux: usize, seed: u64) -> DensityOp {
    let psi = random_pure(dim * aux, &mut rng_from_seed(seed)).unwrap();
    let dims = if aux > 1 { vec![dim, aux] } else { vec![dim] };
    psi.density().with_factor_dims(dims).unwrap()
}

#[test]
fn basis_is_sorted_and_sized() {
    let b = SymBasis::new(3, 4).unwrap();
    assert_eq!(b.dim(), 15);
    assert!(b.occupations.windows(2).all(|w| w[0] < w[1]));
    assert!(b.occupations.iter().all(|o| o.iter().sum::<usize>() == 4));
}

#[test]
fn isometry_has_orthonormal_columns() {
    let iso = sym_isometry(2, 3).unwrap();
    assert_eq!(iso.matrix().ncols(), 4);
    let gram = iso.matrix().adjoint() * iso.matrix();
    assert!(linalg::max_abs_diff(&gram, &CMat::identity(4, 4)) < 1e-10);
    let iso = sym_isometry(3, 6).unwrap();
    assert!(iso.op().isometry_defect() < 1e-10);
}

#[test]
fn embedded_states_are_swap_invariant() {
    let (d, n) = (2, 5);
    let iso = sym_isometry(d, n).unwrap();
    let mut rng = rng_from_seed(77);
    for t in 0..50 {
        let x = random_pure(iso.basis().dim(), &mut rng).unwrap();
        let v = iso.matrix() * x.amplitudes();
        let (a, b) = (t % n, (t / n + 1 + t % n) % n);
        let w = swap_factors(&v, d, n, a, b);
        assert!((w - &v).norm() < 1e-10);
    }
}

#[test]
fn product_reduction_returns_the_factor() {
    let iso = sym_isometry(3, 4).unwrap();
    let phi = random_pure(3, &mut rng_from_seed(3)).unwrap();
    let x = PureState::normalize(iso.power_coordinates(&phi).unwrap()).unwrap();
    let r = reduce_symmetric(&iso, &x.density(), 1).unwrap();
    assert!(linalg::max_abs_diff(r.matrix(), &phi.projector()) < 1e-10);
}

#[test]
fn reductions_preserve_trace() {
    let iso = sym_isometry(2, 6).unwrap();
    for s in 0..50 {
        let rho = if s % 2 == 0 {
            random_sym_state(iso.basis().dim(), 2, s)
        } else {
            random_density(iso.basis().dim(), 3, &mut rng_from_seed(s)).unwrap()
        };
        let r = reduce_symmetric(&iso, &rho, 1 + (s as usize) % 3).unwrap();
        assert!((r.trace() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reduction_rejects_too_many_copies() {
    let iso = sym_isometry(2, 3).unwrap();
    assert!(reduce_symmetric(&iso, &random_sym_state(4, 1, 0), 4).is_err());
}

#[test]
fn single_copy_fits_respect_kd_over_n() {
    let iso = sym_isometry(2, 8).unwrap();
    for s in 0..50 {
        let rho = random_sym_state(iso.basis().dim(), 1, 100 + s);
        let red = reduce_symmetric(&iso, &rho, 1).unwrap();
        let fit = definetti_fit(&red, qubit_net(), 500).unwrap();
        assert!(fit.distance < 0.25, "{}", fit.distance);
        let s: f64 = fit.mixture.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn two_copy_fits_respect_kd_over_n() {
    let iso = sym_isometry(2, 6).unwrap();
    for s in 0..20 {
        let rho = random_sym_state(iso.basis().dim(), 1, 200 + s);
        let red = reduce_symmetric(&iso, &rho, 2).unwrap();
        let fit = definetti_fit(&red, qubit_net(), 500).unwrap();
        assert!(fit.distance < 2.0 / 3.0, "{}", fit.distance);
    }
}

#[test]
fn auxiliary_fits_respect_kd_over_n() {
    let iso = sym_isometry(2, 8).unwrap();
    for s in 0..20 {
        let rho = random_sym_state(iso.basis().dim(), 2, 300 + s);
        let red = reduce_symmetric(&iso, &rho, 1).unwrap();
        let fit = definetti_fit_general(&red, qubit_net(), 2, 500).unwrap();
        assert!(fit.distance < 0.25, "{}", fit.distance);
    }
}

#[test]
fn trivial_auxiliary_matches_plain_fit() {
    let iso = sym_isometry(2, 4).unwrap();
    let rho = random_sym_state(iso.basis().dim(), 1, 9);
    let red = reduce_symmetric(&iso, &rho, 2).unwrap();
    let a = definetti_fit(&red, qubit_net(), 500).unwrap();
    let b = definetti_fit_general(&red, qubit_net(), 1, 500).unwrap();
    assert!((a.distance - b.distance).abs() < 1e-9);
}

#[test]
fn product_with_auxiliary_is_fit_exactly() {
    let net = qubit_net();
    let phi = &net.points()[5];
    let tau = random_density(3, 2, &mut rng_from_seed(4)).unwrap();
    let m = linalg::kron(&phi.power(2).projector(), tau.matrix());
    let rho = DensityOp::new(m, vec![2, 2, 3]).unwrap();
    let fit = definetti_fit_general(&rho, net, 3, 500).unwrap();
    assert!(fit.distance < 1e-10, "{}", fit.distance);
}

#[test]
fn fit_never_worse_than_best_single_atom() {
    let iso = sym_isometry(2, 5).unwrap();
    let net = PureNet::octahedron();
    for s in 0..10 {
        let red = reduce_symmetric(&iso, &random_sym_state(iso.basis().dim(), 1, 50 + s), 2).unwrap();
        let fit = definetti_fit(&red, &net, 500).unwrap();
        let single = net
            .points()
            .iter()
            .map(|p| 0.5 * linalg::trace_norm_herm(&(p.power(2).projector() - red.matrix())))
            .fold(f64::INFINITY, f64::min);
        assert!(fit.distance <= single + 1e-12);
    }
}

#[test]
fn triplet_reduction_is_maximally_mixed() {
    let iso = sym_isometry(2, 2).unwrap();
    let col = iso.basis().index_of(&[1, 1]).unwrap();
    let r = reduce_symmetric(&iso, &PureState::basis(3, col).density(), 1).unwrap();
    assert!(linalg::max_abs_diff(r.matrix(), &(CMat::identity(2, 2) * c(0.5, 0.0))) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qubit_dimension_is_n_plus_one(n in 1usize..=30) {
        prop_assert_eq!(sym_dimension(2, n).unwrap(), n + 1);
    }

    #[test]
    fn iid_reduction_reproduces_single_copy(seed in 0u64..10_000, n in 2usize..7, k in 1usize..3) {
        prop_assume!(k <= n);
        let iso = sym_isometry(2, n).unwrap();
        let phi = random_pure(2, &mut rng_from_seed(seed)).unwrap();
        let x = PureState::normalize(iso.power_coordinates(&phi).unwrap()).unwrap();
        let r = reduce_symmetric(&iso, &x.density(), k).unwrap();
        prop_assert!(linalg::max_abs_diff(r.matrix(), &phi.power(k).projector()) < 1e-10);
    }

    #[test]
    fn binomial_matches_recurrence(d in 1usize..6, n in 1usize..12) {
        // C(n+d-1, d-1) = sum over occupations of the first mode
        let direct = sym_dimension(d, n).unwrap();
        let expect = if d == 1 { 1 } else { (0..=n).map(|m| if n - m == 0 { 1 } else { sym_dimension(d - 1, n - m).unwrap() }).sum() };
        prop_assert_eq!(direct, expect);
    }
}
