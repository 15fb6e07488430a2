//! The acceptance suite: twelve criteria, each a list of named measurements
//! compared against fixed limits. Every criterion draws from its own derived
//! seed, so results do not depend on which criteria ran before it.

use anyhow::Result;
use dlab_core::disentangler::{
    build_definetti_disentangler, build_net_disentangler, construction_size_bounds, eb_reduction_check,
    identity_control, theorem_lower_bound, verify_condition1, verify_condition2, verify_strong_condition1,
    DisentanglerSpec,
};
use dlab_core::linalg;
use dlab_core::metrics::{check_monotonicity, MetricReport};
use dlab_core::purenet::{
    build_net_greedy, certify_covering, convex_cover_distance, default_pool_size, lemma1_bounds, PureNet,
};
use dlab_core::qcore::{
    bell_state, choi_of, random_channel, random_density, random_povm_vectors, random_pure, KrausChannel,
};
use dlab_core::rng::{derive_seed, task_rng};
use dlab_core::sepkit::{
    eb_membership, lemma2_rhs, measure_prepare_channel, seesaw_sep_fidelity, EbVerdict, Rank1Povm,
};
use dlab_core::symsub::{default_fitting_net, definetti_fit, reduce_symmetric, sym_isometry};
use dlab_core::DlabError;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::{exit_code_for_reports, EXIT_FAIL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
}

impl CriterionResult {
    fn new(id: u32, title: &str) -> Self {
        Self { id, title: title.into(), passed: true, measurements: Vec::new(), notes: Vec::new() }
    }

    fn at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.push(name, value, Relation::AtMost, limit, value <= limit);
    }

    fn at_least(&mut self, name: &str, value: f64, limit: f64) {
        self.push(name, value, Relation::AtLeast, limit, value >= limit);
    }

    /// A boolean outcome recorded as `value >= 1`.
    fn holds(&mut self, name: &str, ok: bool) {
        self.at_least(name, if ok { 1.0 } else { 0.0 }, 1.0);
    }

    fn push(&mut self, name: &str, value: f64, relation: Relation, limit: f64, ok: bool) {
        // NaN fails every comparison above and is stored as a failing sentinel
        let value = if value.is_finite() { value } else { f64::MAX };
        self.passed &= ok;
        self.measurements.push(Measurement { name: name.into(), value, relation, limit, passed: ok });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

type Step = fn(u64, &Config) -> Result<CriterionResult>;

const STEPS: [Step; 11] = [
    fuchs_van_de_graaf,
    monotonicity,
    net_size_consistency,
    convex_hull_net,
    definetti_bound,
    net_disentangler,
    definetti_disentangler,
    lemma2_equivalence,
    eb_membership_checks,
    theorem_formulas,
    negative_controls,
];

/// Criteria 1 to 11; the determinism criterion reruns exactly this.
fn run_criteria(seed: u64, cfg: &Config) -> Result<Vec<CriterionResult>> {
    STEPS.iter().enumerate().map(|(i, step)| step(derive_seed(seed, i as u64 + 1), cfg)).collect()
}

pub fn run_suite(seed: u64, cfg: &Config) -> Result<SuiteReport> {
    let mut criteria = run_criteria(seed, cfg)?;
    let reference = serde_json::to_string(&criteria)?;
    criteria.push(determinism(seed, cfg, &reference)?);
    let passed = criteria.iter().all(|c| c.passed);
    Ok(SuiteReport { suite: "acceptance".into(), seed, passed, criteria })
}

fn octahedron_spec(seed: u64, cfg: &Config) -> Result<DisentanglerSpec> {
    let mut net = PureNet::octahedron();
    certify_covering(&mut net, cfg.net_samples, seed);
    Ok(build_net_disentangler(&net)?)
}

fn fuchs_van_de_graaf(seed: u64, _cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(1, "trace distance and fidelity sandwich");
    let dims = [2usize, 3, 4, 6];
    let rows: Vec<(f64, Option<f64>)> = (0..1000)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let d = dims[i % dims.len()];
            if i % 2 == 0 {
                let a = random_pure(d, &mut rng)?.density();
                let b = random_pure(d, &mut rng)?.density();
                let m = MetricReport::compute(&a, &b)?;
                Ok((m.sandwich_slack(), Some((m.trace_distance - m.fg_upper).abs())))
            } else {
                let ra = rng.random_range(1..=d);
                let rb = rng.random_range(1..=d);
                let a = random_density(d, ra, &mut rng)?;
                let b = random_density(d, rb, &mut rng)?;
                Ok((MetricReport::compute(&a, &b)?.sandwich_slack(), None))
            }
        })
        .collect::<Result<_, DlabError>>()?;
    let slack = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let gap = rows.iter().filter_map(|r| r.1).fold(0.0, f64::max);
    out.at_least("min_sandwich_slack", slack, -1e-9);
    out.at_most("max_pure_upper_gap", gap, 1e-9);
    out.notes.push("1000 pairs, even indices pure, dims cycle 2,3,4,6".into());
    Ok(out)
}

fn monotonicity(seed: u64, _cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(2, "monotonicity under channels");
    let rows: Vec<(f64, f64)> = (0..100)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let din: usize = rng.random_range(2..=4);
            let dout: usize = rng.random_range(2..=4);
            let env = rng.random_range(din.div_ceil(dout)..=4);
            let rho = random_density(din, rng.random_range(1..=din), &mut rng)?;
            let sigma = random_density(din, rng.random_range(1..=din), &mut rng)?;
            let ch = random_channel(din, dout, env, &mut rng)?;
            check_monotonicity(&rho, &sigma, &ch)
        })
        .collect::<Result<_, DlabError>>()?;
    out.at_least("min_trace_distance_slack", rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min), -1e-9);
    out.at_least("min_fidelity_slack", rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min), -1e-9);
    Ok(out)
}

fn net_size_consistency(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(3, "net sizes against the covering lower bound");
    for (k, eps) in [0.25, 0.46].into_iter().enumerate() {
        let mut net = build_net_greedy(2, eps, default_pool_size(2), derive_seed(seed, k as u64))?;
        let cert = certify_covering(&mut net, cfg.net_samples, derive_seed(seed, 10 + k as u64));
        let needed = 2f64.powf(lemma1_bounds(2, eps)?.log2_lower).ceil();
        out.at_least(&format!("net_size_eps_{eps}"), net.len() as f64, needed);
        out.notes.push(format!("eps {eps}: {} points, certified radius {}", net.len(), cert.max_observed));
    }
    let mut octa = PureNet::octahedron();
    let cert = certify_covering(&mut octa, cfg.net_samples, derive_seed(seed, 20));
    out.at_least("octahedron_certified_radius_low", cert.max_observed, 0.45);
    out.at_most("octahedron_certified_radius_high", cert.max_observed, 0.4597);
    Ok(out)
}

fn convex_hull_net(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(4, "convex hull of the octahedron covers at squared radius");
    let net = PureNet::octahedron();
    let dists: Vec<f64> = (0..100)
        .into_par_iter()
        .map(|i| {
            let t = random_pure(2, &mut task_rng(seed, i as u64))?;
            Ok(convex_cover_distance(&net, &t, cfg.fit_iters)?.distance)
        })
        .collect::<Result<_, DlabError>>()?;
    out.at_most("max_hull_distance", dists.iter().copied().fold(0.0, f64::max), 0.2116 + 0.01);
    Ok(out)
}

fn definetti_bound(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(5, "reduced symmetric states near i.i.d. mixtures");
    let net = default_fitting_net(2, derive_seed(seed, 0))?;
    for (n, k, count, limit) in [(8usize, 1usize, 50usize, 0.25), (6, 2, 20, 2.0 / 3.0)] {
        let iso = sym_isometry(2, n)?;
        let dim = iso.basis().dim();
        let dists: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|i| {
                let psi = random_pure(dim, &mut task_rng(derive_seed(seed, 1 + k as u64), i as u64))?;
                let red = reduce_symmetric(&iso, &psi.density(), k)?;
                Ok(definetti_fit(&red, &net, cfg.fit_iters)?.distance)
            })
            .collect::<Result<_, DlabError>>()?;
        let worst = dists.iter().copied().fold(0.0, f64::max);
        let violations = dists.iter().filter(|&&x| x > limit).count();
        out.at_most(&format!("max_fit_n{n}_k{k}"), worst, limit);
        out.at_most(&format!("violations_n{n}_k{k}"), violations as f64, 0.0);
    }
    Ok(out)
}

fn net_disentangler(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(6, "net-based disentangler");
    let spec = octahedron_spec(derive_seed(seed, 0), cfg)?;
    let opts = cfg.verify();
    out.at_most("input_dim_offset", (spec.input_dim() as f64 - 12.0).abs(), 0.0);
    let c1 = verify_condition1(&spec, 200, derive_seed(seed, 1), &opts)?;
    out.at_most("condition1_worst", c1.worst_observed, 1e-5);
    let c2 = verify_condition2(&spec, 200, derive_seed(seed, 2), &opts)?;
    out.at_most("condition2_worst", c2.worst_observed, 0.2116 + 1e-6);
    let eb = eb_reduction_check(&spec, derive_seed(seed, 3), &opts)?;
    let member = eb.eb.as_ref().is_some_and(|r| r.verdict == EbVerdict::Member);
    out.holds("eb_reduction_member", member);
    out.notes.push(format!("delta claim {}", spec.delta_claim));
    Ok(out)
}

fn definetti_disentangler(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(7, "symmetric-subspace disentangler");
    let spec = build_definetti_disentangler(2, 8, cfg.definetti_caps)?;
    let opts = cfg.verify();
    out.at_most("input_dim_offset", (spec.input_dim() as f64 - 18.0).abs(), 0.0);
    out.at_most("eps_claim_offset", (spec.eps_claim - 0.25).abs(), 1e-15);
    let c2 = verify_condition2(&spec, 200, derive_seed(seed, 1), &opts)?;
    out.at_most("condition2_worst", c2.worst_observed, 1e-9);
    let c1 = verify_condition1(&spec, 200, derive_seed(seed, 2), &opts)?;
    out.at_most("condition1_worst", c1.worst_observed, 0.25);
    let sc1 = verify_strong_condition1(&spec, 2, 50, derive_seed(seed, 3), &opts)?;
    out.at_most("strong_condition1_worst_dim_r2", sc1.worst_observed, 0.25 + 1e-3);
    out.notes.push("strong check covers the reference dimension 2 only".into());
    Ok(out)
}

fn lemma2_equivalence(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(8, "see-saw fidelity against the POVM form");
    let sep = cfg.sep();
    let gaps: Vec<f64> = (0..20)
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let rank = rng.random_range(1..=4);
            let rho = random_density(4, rank, &mut rng)?.with_factor_dims(vec![2, 2])?;
            let f = seesaw_sep_fidelity(&rho, sep, derive_seed(seed, 100 + i as u64))?.fidelity;
            let g = lemma2_rhs(&rho, 4, sep, derive_seed(seed, 200 + i as u64))?.value;
            Ok((f - g).abs())
        })
        .collect::<Result<_, DlabError>>()?;
    out.at_most("max_gap_random_states", gaps.iter().copied().fold(0.0, f64::max), 1e-2);
    let bell = bell_state().density();
    let f = seesaw_sep_fidelity(&bell, sep, derive_seed(seed, 300))?.fidelity;
    let g = lemma2_rhs(&bell, 4, sep, derive_seed(seed, 301))?.value;
    out.at_most("bell_seesaw_offset", (f - 0.5).abs(), 1e-2);
    out.at_most("bell_povm_offset", (g - 0.5).abs(), 1e-2);
    Ok(out)
}

fn eb_membership_checks(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(9, "entanglement-breaking membership");
    let sep = cfg.sep();
    let replace = KrausChannel::replace(2, &random_density(2, 2, &mut task_rng(seed, 0))?);
    let r = eb_membership(&choi_of(&replace), cfg.tolerance, sep, derive_seed(seed, 1))?;
    out.holds("replace_channel_member", r.verdict == EbVerdict::Member);
    let id = eb_membership(&choi_of(&KrausChannel::identity(vec![2])), cfg.tolerance, sep, derive_seed(seed, 2))?;
    out.holds("identity_non_member", id.verdict == EbVerdict::NonMember);
    out.at_most("identity_pt_offset", (id.ppt_min_eig + 0.5).abs(), 1e-10);
    let mut worst: f64 = 0.0;
    let mut all_members = true;
    for (k, (din, dout, outcomes)) in [(2usize, 2usize, 3usize), (2, 3, 4), (3, 2, 5)].into_iter().enumerate() {
        let mut rng = task_rng(seed, 10 + k as u64);
        let povm = Rank1Povm::new(random_povm_vectors(din, outcomes, &mut rng)?)?;
        let prep = (0..outcomes).map(|_| random_pure(dout, &mut rng)).collect::<Result<Vec<_>, _>>()?;
        let ch = measure_prepare_channel(&povm, &prep)?;
        let j = choi_of(&ch);
        let r = eb_membership(&j, cfg.tolerance, sep, derive_seed(seed, 20 + k as u64))?;
        all_members &= r.verdict == EbVerdict::Member;
        let err = match &r.decomposition {
            Some(dec) => {
                let prep = dec.prep.iter().map(|m| m.to_pure()).collect::<Result<Vec<_>, _>>()?;
                let rebuilt = measure_prepare_channel(&dec.povm, &prep)?;
                linalg::max_abs_diff(choi_of(&rebuilt).matrix(), j.matrix())
            }
            None => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    out.holds("measure_prepare_members", all_members);
    out.at_most("max_round_trip_choi_error", worst, 1e-6);
    Ok(out)
}

fn theorem_formulas(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(10, "lower-bound formula layer");
    let zero = theorem_lower_bound(3, 0.0, 0.0)?;
    out.holds("zero_zero_unbounded", zero.unbounded && zero.big_delta == 0.0);
    let b = theorem_lower_bound(21, 0.0, 0.04)?;
    out.at_most("delta_quantity_offset", (b.big_delta - 0.36).abs(), 1e-12);
    let hand = 10.0 * (1.0f64 / 0.36).log2() - 2.0 * 21f64.log2();
    out.at_most("bound_offset_d21", (b.log2_lower.unwrap_or(f64::NAN) - hand).abs(), 1e-12);
    let v = theorem_lower_bound(2, 0.25, 0.0)?;
    let hand = 0.5 * (1.0f64 / 0.4375).log2() - 2.0;
    out.at_most("bound_offset_d2", (v.log2_lower.unwrap_or(f64::NAN) - hand).abs(), 1e-12);
    out.holds("d2_vacuous", v.vacuous);
    let rejected = matches!(theorem_lower_bound(2, 0.5, 0.25), Err(DlabError::HypothesisViolated(_)));
    out.holds("hypothesis_violation_rejected", rejected);
    let specs = [
        octahedron_spec(derive_seed(seed, 0), cfg)?,
        build_definetti_disentangler(2, 8, cfg.definetti_caps)?,
    ];
    for spec in &specs {
        let bounds = construction_size_bounds(spec)?;
        let kind = serde_json::to_value(spec.kind)?;
        let kind = kind.as_str().unwrap_or("spec");
        out.holds(&format!("{kind}_theorem_consistent"), bounds.theorem_consistent);
        let lower = bounds.theorem.and_then(|t| t.log2_lower).unwrap_or(f64::NEG_INFINITY);
        out.notes.push(format!(
            "{kind}: log2 D = {}, construction bound {}, lower bound {lower}{}",
            bounds.log2_actual,
            bounds.log2_upper.map_or("none".into(), |u| u.to_string()),
            if lower <= 0.0 { " (vacuous)" } else { "" }
        ));
    }
    Ok(out)
}

fn negative_controls(seed: u64, cfg: &Config) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(11, "negative controls");
    let spec = identity_control();
    let rep = verify_condition1(&spec, 10, seed, &cfg.verify())?;
    out.at_most("identity_worst_offset", (rep.worst_observed - 0.5).abs(), 5e-3);
    out.holds("identity_fails", !rep.passed);
    out.holds("failure_exit_code", exit_code_for_reports(&[rep]) == EXIT_FAIL);
    Ok(out)
}

/// Reruns criteria 1 to 11 on private pools of 1 and 4 workers and compares
/// the serialized results with the run under the global pool.
fn determinism(seed: u64, cfg: &Config, reference: &str) -> Result<CriterionResult> {
    let mut out = CriterionResult::new(12, "determinism across worker counts");
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        let rerun = serde_json::to_string(&pool.install(|| run_criteria(seed, cfg))?)?;
        out.holds(&format!("identical_output_{threads}_workers"), rerun == reference);
    }
    out.notes.push("criteria 1 to 11 rerun in process; separate processes are compared by the acceptance test".into());
    Ok(out)
}
