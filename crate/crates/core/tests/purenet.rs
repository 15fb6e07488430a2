use dlab_core::purenet::{
    build_net_greedy, certify_covering, convex_cover_distance, lemma1_bounds, pure_distance, PureNet,
};
use dlab_core::qcore::{haar_vector, qubit_plus, random_pure, PureState};
use dlab_core::rng::rng_from_seed;
use proptest::prelude::*;

/// Covering radius of a qubit net from its Bloch vectors: a latitude/longitude
/// grid followed by shrinking pattern search around the worst grid point.
/// Pure states with Bloch vectors `r`, `s` sit at trace distance `sqrt((1 - r.s)/2)`.
fn bloch_grid_radius(axes: &[[f64; 3]], steps: usize) -> f64 {
    let near = |theta: f64, phi: f64| {
        let r = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        axes.iter()
            .map(|a| ((1.0 - (a[0] * r[0] + a[1] * r[1] + a[2] * r[2])) / 2.0).max(0.0).sqrt())
            .fold(f64::INFINITY, f64::min)
    };
    let h = std::f64::consts::PI / steps as f64;
    let mut best = (0.0, 0.0, 0.0);
    for i in 0..=steps {
        for j in 0..(2 * steps) {
            let (t, p) = (h * i as f64, h * j as f64);
            let v = near(t, p);
            if v > best.2 {
                best = (t, p, v);
            }
        }
    }
    let mut step = h;
    while step > 1e-12 {
        let mut moved = false;
        for (dt, dp) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let (t, p) = (best.0 + dt * step, best.1 + dp * step);
            let v = near(t, p);
            if v > best.2 {
                best = (t, p, v);
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best.2
}

const OCTAHEDRON_AXES: [[f64; 3]; 6] =
    [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]];

#[test]
fn octahedron_radius_oracle_agrees_with_face_centre() {
    let grid = bloch_grid_radius(&OCTAHEDRON_AXES, 200);
    let face = ((1.0 - 1.0 / 3f64.sqrt()) / 2.0).sqrt();
    assert!((grid - face).abs() < 1e-9, "{grid} vs {face}");
    assert!(face < 0.46);
}

#[test]
fn octahedron_certifies_between_045_and_04597() {
    let mut net = PureNet::octahedron();
    let cert = certify_covering(&mut net, 100_000, 42);
    let oracle = bloch_grid_radius(&OCTAHEDRON_AXES, 200);
    assert!(cert.max_observed >= 0.45 && cert.max_observed <= 0.4597, "{}", cert.max_observed);
    assert!(cert.max_observed <= oracle + 1e-9);
    assert_eq!(net.samples(), Some(100_000));
    assert_eq!(net.certified_radius(), Some(cert.max_observed));
}

#[test]
fn single_point_certifies_near_one() {
    let mut net = PureNet::new(vec![PureState::basis(2, 0)], 1.0).unwrap();
    let cert = certify_covering(&mut net, 10_000, 7);
    assert!((cert.max_observed - 1.0).abs() < 0.01, "{}", cert.max_observed);
}

#[test]
fn nearly_unit_radius_needs_at_most_two_points() {
    let net = build_net_greedy(2, 0.999, 1000, 11).unwrap();
    assert!(net.len() <= 2, "{}", net.len());
    let mut rng = rng_from_seed(99);
    for _ in 0..1000 {
        assert!(net.nearest_distance(&haar_vector(2, &mut rng)) <= 1.0);
    }
}

#[test]
fn greedy_net_respects_size_lower_bound() {
    let net = build_net_greedy(2, 0.46, 100_000, 3).unwrap();
    let lb = lemma1_bounds(2, 0.46).unwrap().log2_lower;
    assert!(net.len() >= 5, "{}", net.len());
    assert!((net.len() as f64).log2() >= lb);
}

#[test]
fn pool_is_covered_by_construction() {
    let mut net = build_net_greedy(3, 0.5, 10_000, 5).unwrap();
    let cert = certify_covering(&mut net, 20_000, 17);
    // targets off the pool may exceed the nominal radius slightly, never by much
    assert!(cert.max_observed < 0.6, "{}", cert.max_observed);
}

/// `T(p|0><0| + (1-p)|1><1|, |+><+|) = sqrt((p-1/2)^2 + 1/4)`, minimised at p = 1/2.
fn diag_vs_plus(p: f64) -> f64 {
    ((p - 0.5).powi(2) + 0.25).sqrt()
}

#[test]
fn basis_pair_fits_plus_at_one_half() {
    let net = PureNet::new(vec![PureState::basis(2, 0), PureState::basis(2, 1)], 1.0).unwrap();
    let fit = convex_cover_distance(&net, &qubit_plus(), 500).unwrap();
    assert!((fit.distance - diag_vs_plus(0.5)).abs() < 1e-9);
    assert!((fit.weights[0] - 0.5).abs() < 1e-6 && (fit.weights[1] - 0.5).abs() < 1e-6);
    assert!(fit.converged);
}

#[test]
fn target_in_net_has_zero_distance() {
    let net = PureNet::octahedron();
    for (i, p) in net.points().iter().enumerate() {
        let fit = convex_cover_distance(&net, p, 500).unwrap();
        assert!(fit.distance < 1e-12);
        assert_eq!(fit.weights[i], 1.0);
    }
}

#[test]
fn octahedron_hull_is_a_squared_radius_net() {
    let net = PureNet::octahedron();
    let mut rng = rng_from_seed(2024);
    for _ in 0..100 {
        let t = random_pure(2, &mut rng).unwrap();
        let fit = convex_cover_distance(&net, &t, 500).unwrap();
        assert!(fit.distance <= 0.46 * 0.46, "{}", fit.distance);
    }
}

#[test]
fn greedy_hull_within_squared_radius_plus_slack() {
    let mut net = build_net_greedy(2, 0.3, 20_000, 8).unwrap();
    let eps = certify_covering(&mut net, 20_000, 9).max_observed;
    let mut rng = rng_from_seed(10);
    for _ in 0..100 {
        let t = random_pure(2, &mut rng).unwrap();
        let fit = convex_cover_distance(&net, &t, 500).unwrap();
        assert!(fit.distance <= eps * eps + 0.01, "{} vs {}", fit.distance, eps * eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hull_never_worse_than_nearest_point(seed in 0u64..1000) {
        let net = build_net_greedy(2, 0.6, 500, seed).unwrap();
        let t = random_pure(2, &mut rng_from_seed(seed + 1)).unwrap();
        let fit = convex_cover_distance(&net, &t, 500).unwrap();
        prop_assert!(fit.distance <= net.nearest_distance(t.amplitudes()) + 1e-12);
        let s: f64 = fit.weights.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12 && fit.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn certification_is_monotone_in_the_net(seed in 0u64..1000, extra in 1usize..4) {
        let small = build_net_greedy(2, 0.5, 300, seed).unwrap();
        let mut rng = rng_from_seed(seed ^ 0xabc);
        let mut pts = small.points().to_vec();
        for _ in 0..extra {
            pts.push(random_pure(2, &mut rng).unwrap());
        }
        let mut small = small;
        let mut big = PureNet::new(pts, 0.5).unwrap();
        let a = certify_covering(&mut small, 500, seed).max_observed;
        let b = certify_covering(&mut big, 500, seed).max_observed;
        prop_assert!(b <= a);
    }

    #[test]
    fn bounds_are_ordered(d in 2usize..12, eps in 0.01f64..1.0) {
        let b = lemma1_bounds(d, eps).unwrap();
        prop_assert!(b.log2_lower <= b.log2_upper);
        prop_assert!(b.log2_lower >= 0.0);
    }

    #[test]
    fn pure_distance_is_a_metric_on_rays(seed in 0u64..1000) {
        let mut rng = rng_from_seed(seed);
        let a = haar_vector(3, &mut rng);
        let b = haar_vector(3, &mut rng);
        let e = haar_vector(3, &mut rng);
        prop_assert!(pure_distance(&a, &a) < 1e-7);
        prop_assert!((pure_distance(&a, &b) - pure_distance(&b, &a)).abs() < 1e-15);
        prop_assert!(pure_distance(&a, &e) <= pure_distance(&a, &b) + pure_distance(&b, &e) + 1e-12);
    }
}
