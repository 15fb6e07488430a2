use dlab_core::disentangler::{
    build_definetti_disentangler, build_net_disentangler, condition2_distance, construction_size_bounds,
    eb_reduction_check, generic_input_distance, identity_control, swap_control, theorem_lower_bound,
    verify_condition1, verify_condition2, verify_strong_condition1, Condition, DefinettiCaps, DisentanglerKind,
    DisentanglerSpec, DisentanglerSpecJson, VerificationReport, VerifyOptions,
};
use dlab_core::linalg::{self, CMat, CVec};
use dlab_core::purenet::{certify_covering, PureNet};
use dlab_core::qcore::{haar_vector, random_density, Channel, DensityOp, PureState};
use dlab_core::rng::rng_from_seed;
use dlab_core::sepkit::{random_sep_ensemble, EbVerdict, SepEnsemble};
use dlab_core::symsub::{reduce_symmetric, sym_isometry};
use dlab_core::DlabError;
use proptest::prelude::*;
use std::sync::OnceLock;

fn octahedron_spec() -> &'static DisentanglerSpec {
    static SPEC: OnceLock<DisentanglerSpec> = OnceLock::new();
    SPEC.get_or_init(|| {
        let mut net = PureNet::octahedron();
        certify_covering(&mut net, 20_000, 42);
        build_net_disentangler(&net).unwrap()
    })
}

fn definetti_spec() -> &'static DisentanglerSpec {
    static SPEC: OnceLock<DisentanglerSpec> = OnceLock::new();
    SPEC.get_or_init(|| build_definetti_disentangler(2, 8, DefinettiCaps::default()).unwrap())
}

fn opts() -> VerifyOptions {
    VerifyOptions::default()
}

fn product(a: &CVec, b: &CVec) -> CMat {
    linalg::kron(&linalg::projector(a), &linalg::projector(b))
}

fn assert_report_consistent(r: &VerificationReport) {
    assert_eq!(r.passed, r.worst_observed <= r.claim + r.tolerance, "{r:?}");
}

#[test]
fn octahedron_spec_dimensions_and_claims() {
    let spec = octahedron_spec();
    assert_eq!(spec.kind, DisentanglerKind::NetBased);
    assert_eq!(spec.input_dim(), 12);
    assert_eq!(spec.channel.out_dims(), &[2, 2]);
    assert_eq!(spec.eps_claim, 0.0);
    assert!((spec.delta_claim - 0.2116).abs() < 1e-3, "{}", spec.delta_claim);
    assert!((spec.log2_input_dim - 12f64.log2()).abs() < 1e-15);
    assert!(spec.channel.closure_defect() < 1e-9);
}

#[test]
fn uncertified_net_is_rejected() {
    assert!(matches!(build_net_disentangler(&PureNet::octahedron()), Err(DlabError::Uncertified)));
}

#[test]
fn net_channel_maps_flagged_inputs_to_products() {
    let spec = octahedron_spec();
    let net = spec.net.as_ref().unwrap();
    let mut rng = rng_from_seed(5);
    for (i, phi) in net.points().iter().enumerate() {
        let psi = haar_vector(2, &mut rng);
        let input = linalg::kron_vec(&linalg::basis_vec(net.len(), i), &psi);
        let rho = DensityOp::new(linalg::projector(&input), vec![net.len(), 2]).unwrap();
        let out = spec.channel.apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), &product(phi.amplitudes(), &psi)) < 1e-14);
    }
}

#[test]
fn net_channel_matches_conditional_state_formula() {
    let spec = octahedron_spec();
    let net = spec.net.as_ref().unwrap();
    let m = net.len();
    let mut rng = rng_from_seed(8);
    for _ in 0..10 {
        let rho = random_density(2 * m, 5, &mut rng).unwrap();
        let r = rho.matrix();
        let mut expect = CMat::zeros(4, 4);
        for (i, phi) in net.points().iter().enumerate() {
            let cond = r.view((2 * i, 2 * i), (2, 2)).into_owned();
            expect += linalg::kron(&phi.projector(), &cond);
        }
        let out = spec.channel.apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), &expect) < 1e-14);
    }
}

#[test]
fn definetti_spec_sizes_and_caps() {
    let spec = definetti_spec();
    assert_eq!(spec.input_dim(), 18);
    assert_eq!(spec.eps_claim, 0.25);
    assert_eq!(spec.delta_claim, 0.0);
    assert!(spec.channel.closure_defect() < 1e-9);
    let small = build_definetti_disentangler(2, 2, DefinettiCaps::default()).unwrap();
    assert_eq!(small.input_dim(), 6);
    assert_eq!(small.eps_claim, 1.0);
    let caps = DefinettiCaps::default();
    assert!(build_definetti_disentangler(2, 10, caps).is_ok());
    assert!(build_definetti_disentangler(3, 6, caps).is_ok());
    assert!(matches!(build_definetti_disentangler(2, 11, caps), Err(DlabError::CapExceeded(_))));
    assert!(matches!(build_definetti_disentangler(3, 7, caps), Err(DlabError::CapExceeded(_))));
    assert!(build_definetti_disentangler(2, 1, caps).is_err());
}

#[test]
fn definetti_channel_reduces_embedded_products() {
    let spec = definetti_spec();
    let iso = sym_isometry(2, 8).unwrap();
    let mut rng = rng_from_seed(11);
    for _ in 0..10 {
        let phi = PureState::normalize(haar_vector(2, &mut rng)).unwrap();
        let psi = haar_vector(2, &mut rng);
        let v = linalg::kron_vec(&iso.power_coordinates(&phi).unwrap(), &psi);
        let rho = DensityOp::new(linalg::projector(&v), vec![9, 2]).unwrap();
        let out = spec.channel.apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), &product(phi.amplitudes(), &psi)) < 1e-12);
    }
}

#[test]
fn definetti_channel_agrees_with_symmetric_reduction() {
    for (d, n) in [(2, 3), (2, 8), (3, 4)] {
        let spec = build_definetti_disentangler(d, n, DefinettiCaps::default()).unwrap();
        let iso = sym_isometry(d, n).unwrap();
        let dim = iso.basis().dim();
        let mut rng = rng_from_seed(13);
        for rank in [1, 3] {
            let rho = random_density(dim * d, rank, &mut rng).unwrap().with_factor_dims(vec![dim, d]).unwrap();
            let ours = spec.channel.apply(&rho).unwrap();
            let oracle = reduce_symmetric(&iso, &rho, 1).unwrap();
            assert!(linalg::max_abs_diff(ours.matrix(), oracle.matrix()) < 1e-12, "d={d} n={n}");
        }
    }
}

#[test]
fn definetti_condition2_is_exact() {
    let r = verify_condition2(definetti_spec(), 200, 42, &opts()).unwrap();
    assert_eq!(r.condition, Condition::C2);
    assert!(r.worst_observed <= 1e-9, "{}", r.worst_observed);
    assert!(r.passed);
    assert_report_consistent(&r);
}

#[test]
fn net_condition2_vanishes_on_net_aligned_targets() {
    let spec = octahedron_spec();
    let net = spec.net.as_ref().unwrap();
    let mut rng = rng_from_seed(21);
    for k in 0..10 {
        let terms = 1 + k % 4;
        let a: Vec<PureState> = (0..terms).map(|j| net.points()[(3 * k + j) % net.len()].clone()).collect();
        let b: Vec<PureState> = (0..terms).map(|_| PureState::normalize(haar_vector(2, &mut rng)).unwrap()).collect();
        let w = vec![1.0 / terms as f64; terms];
        let sigma = SepEnsemble::new(w, a, b).unwrap();
        let dist = condition2_distance(spec, &sigma, false, &opts()).unwrap();
        assert!(dist < 1e-9, "{dist}");
    }
}

#[test]
fn net_condition2_within_squared_radius() {
    let spec = octahedron_spec();
    let r = verify_condition2(spec, 200, 42, &opts()).unwrap();
    assert!(r.worst_observed <= 0.2116 + 1e-6, "{}", r.worst_observed);
    assert!(r.worst_observed > 0.0);
    assert_eq!(r.method, "constructive inputs");
    assert_report_consistent(&r);
}

#[test]
fn condition1_for_both_constructions() {
    let net = verify_condition1(octahedron_spec(), 200, 42, &opts()).unwrap();
    assert!(net.worst_observed <= 1e-6, "{}", net.worst_observed);
    assert!(net.passed);
    let df = verify_condition1(definetti_spec(), 200, 42, &opts()).unwrap();
    assert!(df.worst_observed <= 0.25, "{}", df.worst_observed);
    assert!(df.passed);
    assert_report_consistent(&net);
    assert_report_consistent(&df);
}

#[test]
fn negative_controls_fail_condition1() {
    for spec in [identity_control(), swap_control()] {
        let r = verify_condition1(&spec, 10, 42, &opts()).unwrap();
        assert!((r.worst_observed - 0.5).abs() <= 5e-3, "{:?} {}", spec.kind, r.worst_observed);
        assert!(!r.passed);
        assert_report_consistent(&r);
    }
}

#[test]
fn strong_check_with_trivial_reference_matches_condition1() {
    for spec in [octahedron_spec(), definetti_spec()] {
        let a = verify_condition1(spec, 30, 9, &opts()).unwrap();
        let b = verify_strong_condition1(spec, 1, 30, 9, &opts()).unwrap();
        assert!((a.worst_observed - b.worst_observed).abs() <= 1e-9);
        assert_eq!(b.dim_r, Some(1));
    }
}

#[test]
fn strong_condition1_net_is_separable_across_first_output() {
    let r = verify_strong_condition1(octahedron_spec(), 2, 100, 42, &opts()).unwrap();
    assert!(r.worst_observed <= 1e-5, "{}", r.worst_observed);
    assert!(r.notes.iter().any(|n| n.contains("reference dimension 2")));
}

#[test]
fn strong_condition1_definetti_with_qubit_reference() {
    let r = verify_strong_condition1(definetti_spec(), 2, 50, 42, &opts()).unwrap();
    assert!(r.worst_observed <= 0.25 + 1e-3, "{}", r.worst_observed);
    assert_report_consistent(&r);
}

#[test]
fn strong_check_respects_output_cap() {
    let r = verify_strong_condition1(definetti_spec(), 32, 1, 1, &opts());
    assert!(matches!(r, Err(DlabError::CapExceeded(_))));
    assert!(verify_strong_condition1(definetti_spec(), 0, 1, 1, &opts()).is_err());
}

#[test]
fn eb_reduction_verdicts() {
    let net = eb_reduction_check(octahedron_spec(), 42, &opts()).unwrap();
    let eb = net.eb.as_ref().unwrap();
    assert_eq!(eb.verdict, EbVerdict::Member);
    assert!(eb.fidelity_lb.unwrap() >= 1.0 - 1e-6);
    assert!(net.passed);
    assert_report_consistent(&net);

    let id = eb_reduction_check(&identity_control(), 42, &opts()).unwrap();
    let eb = id.eb.as_ref().unwrap();
    assert_eq!(eb.verdict, EbVerdict::NonMember);
    // Gamma = tr_2 on C^2 (x) C^2: normalized Choi is Phi^+ (x) I/2, PT minimum -1/4
    assert!((eb.ppt_min_eig + 0.25).abs() < 1e-10, "{}", eb.ppt_min_eig);
    assert!(!id.passed);

    let small = build_definetti_disentangler(2, 4, DefinettiCaps::default()).unwrap();
    let df = eb_reduction_check(&small, 42, &opts()).unwrap();
    assert!(df.eb.is_some());

    let big = VerifyOptions { max_eb_choi: 16, ..opts() };
    assert!(matches!(eb_reduction_check(octahedron_spec(), 42, &big), Err(DlabError::CapExceeded(_))));
}

#[test]
fn generic_input_search_is_a_valid_fallback() {
    let g = VerifyOptions { generic_input_opt: true, ..opts() };
    let df = verify_condition2(definetti_spec(), 5, 3, &g).unwrap();
    assert_eq!(df.method, "generic input search");
    assert!(df.worst_observed < 0.05, "{}", df.worst_observed);
    // identity reaches every target; the search must come close
    let mut rng = rng_from_seed(2);
    let sigma = random_sep_ensemble(2, 2, 3, &mut rng).unwrap();
    let dist = generic_input_distance(&identity_control().channel, &sigma.as_matrix(), 400).unwrap();
    assert!(dist < 0.05, "{dist}");
}

#[test]
fn theorem_bound_hand_values() {
    let unbounded = theorem_lower_bound(5, 0.0, 0.0).unwrap();
    assert_eq!(unbounded.big_delta, 0.0);
    assert!(unbounded.unbounded && unbounded.log2_lower.is_none());

    let b = theorem_lower_bound(21, 0.0, 0.04).unwrap();
    assert!((b.big_delta - 0.36).abs() < 1e-12);
    let oracle = 10.0 * (1.0f64 / 0.36).log2() - 2.0 * 21f64.log2();
    assert!((b.log2_lower.unwrap() - oracle).abs() < 1e-12);
    assert!((b.log2_lower.unwrap() - 5.96).abs() < 1e-2);
    assert!(!b.vacuous);

    let v = theorem_lower_bound(2, 0.25, 0.0).unwrap();
    assert!((v.big_delta - 0.4375).abs() < 1e-12);
    assert!((v.log2_lower.unwrap() - (0.5 * (1.0f64 / 0.4375).log2() - 2.0)).abs() < 1e-12);
    assert!(v.vacuous);

    assert!(matches!(theorem_lower_bound(2, 0.5, 0.25), Err(DlabError::HypothesisViolated(_))));
    assert!(matches!(theorem_lower_bound(2, 1.0, 0.0), Err(DlabError::HypothesisViolated(_))));
}

#[test]
fn construction_bounds_for_built_specs() {
    let df = construction_size_bounds(definetti_spec()).unwrap();
    assert!((df.log2_actual - 18f64.log2()).abs() < 1e-12);
    let oracle = (std::f64::consts::E * (1.0 + 2.0 * (4.0 + 0.5))).log2() + 1.0;
    assert!((df.log2_upper.unwrap() - oracle).abs() < 1e-12);
    assert!(df.asserted && df.upper_holds == Some(true));

    let net = construction_size_bounds(octahedron_spec()).unwrap();
    let delta = octahedron_spec().delta_claim;
    let oracle = (1.0 / delta).log2() + (10.0 * 2f64.ln()).log2() + 1.0;
    assert!((net.log2_upper.unwrap() - oracle).abs() < 1e-12);
    assert!(net.asserted && net.upper_holds == Some(true));

    let ctrl = construction_size_bounds(&identity_control()).unwrap();
    assert!(ctrl.log2_upper.is_none());
    assert!(!ctrl.theorem_consistent, "a (0,0) claim admits no finite dimension");
}

#[test]
fn theorem_consistency_sweep_over_built_specs() {
    let mut specs = vec![octahedron_spec().clone()];
    for n in 2..=10 {
        specs.push(build_definetti_disentangler(2, n, DefinettiCaps::default()).unwrap());
    }
    for n in 2..=6 {
        specs.push(build_definetti_disentangler(3, n, DefinettiCaps::default()).unwrap());
    }
    let mut evaluated = 0;
    for spec in &specs {
        let b = construction_size_bounds(spec).unwrap();
        assert!(b.theorem_consistent, "{b:?}");
        if let Some(t) = b.theorem {
            evaluated += 1;
            if let Some(v) = t.log2_lower.filter(|v| *v > 0.0) {
                assert!(b.log2_actual >= v);
            }
        }
    }
    assert!(evaluated >= specs.len() - 4);
}

#[test]
fn spec_json_round_trip() {
    for spec in [octahedron_spec().clone(), definetti_spec().clone(), swap_control()] {
        let text = serde_json::to_string(&spec.to_json()).unwrap();
        let back: DisentanglerSpecJson = serde_json::from_str(&text).unwrap();
        let rebuilt = DisentanglerSpec::from_json(&back).unwrap();
        assert_eq!(rebuilt.kind, spec.kind);
        assert_eq!(rebuilt.input_dim(), spec.input_dim());
        assert_eq!(rebuilt.delta_claim.to_bits(), spec.delta_claim.to_bits());
        assert_eq!(serde_json::to_string(&rebuilt.to_json()).unwrap(), text);
    }
    let mut tampered = definetti_spec().to_json();
    tampered.choi.re[0] += 0.1;
    assert!(DisentanglerSpec::from_json(&tampered).is_err());
}

#[test]
fn verification_is_independent_of_worker_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let r = verify_condition1(definetti_spec(), 12, 77, &opts()).unwrap();
            serde_json::to_string(&r).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn definetti_image_contains_products(seed in any::<u64>(), n in 2usize..=6) {
        let spec = build_definetti_disentangler(2, n, DefinettiCaps::default()).unwrap();
        let mut rng = rng_from_seed(seed);
        let sigma = random_sep_ensemble(2, 2, 3, &mut rng).unwrap();
        let dist = condition2_distance(&spec, &sigma, false, &opts()).unwrap();
        prop_assert!(dist <= 1e-9, "{}", dist);
    }

    #[test]
    fn net_outputs_are_block_mixtures(seed in any::<u64>()) {
        let spec = octahedron_spec();
        let mut rng = rng_from_seed(seed);
        let rho = random_density(12, 4, &mut rng).unwrap();
        let out = spec.channel.apply(&rho).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(linalg::min_eigenvalue(out.matrix()) > -1e-12);
        // the second output is the input's second factor
        let second = out.partial_trace(&[0]).unwrap();
        let expect = rho.with_factor_dims(vec![6, 2]).unwrap().partial_trace(&[0]).unwrap();
        prop_assert!(linalg::max_abs_diff(second.matrix(), expect.matrix()) < 1e-13);
    }

    #[test]
    fn lower_bound_decreases_with_delta(d in 2usize..40, eps in 0.0f64..0.4, lo in 0.01f64..0.1, extra in 0.001f64..0.2) {
        let a = theorem_lower_bound(d, eps, lo).unwrap();
        let b = theorem_lower_bound(d, eps, lo + extra).unwrap();
        prop_assert!(b.big_delta > a.big_delta);
        prop_assert!(b.log2_lower.unwrap() < a.log2_lower.unwrap());
    }
}
