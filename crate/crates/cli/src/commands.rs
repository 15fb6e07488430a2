//! One function per subcommand; each returns a typed report.

use anyhow::Result;
use dlab_core::disentangler::{
    build_definetti_disentangler, build_net_disentangler, construction_size_bounds, eb_reduction_check,
    identity_control, swap_control, theorem_lower_bound, verify_condition1, verify_condition2,
    verify_strong_condition1, DisentanglerKind, DisentanglerSpec, DisentanglerSpecJson, VerificationReport,
};
use dlab_core::purenet::{
    build_net_greedy, certify_covering, default_pool_size, lemma1_bounds, CoverCertificate, NetBounds, PureNet,
    PureNetJson,
};
use dlab_core::qcore::random_pure;
use dlab_core::rng::{derive_seed, rng_from_seed};
use dlab_core::sepkit::{eb_membership, lemma2_rhs, nearest_sep_trace_ub, ppt_min_eig, seesaw_sep_fidelity};
use dlab_core::symsub::{default_fitting_net, definetti_fit_general, reduce_symmetric, sym_dimension, sym_isometry};
use serde::Serialize;

use crate::acceptance::run_suite;
use crate::config::Config;
use crate::io::{read_bipartite_state, read_choi, read_net, read_spec};
use crate::{
    exit_code_for_reports, usage, CheckArg, Command, DisentCmd, KindArg, NetCmd, NetSource, Outcome, SepCmd,
    SpecSource, StateArgs, SuiteCmd, SymCmd, Table, EXIT_OK,
};

pub fn dispatch(cmd: &Command, cfg: &Config) -> Result<Outcome> {
    match cmd {
        Command::Net { cmd } => net(cmd, cfg),
        Command::Disent { cmd } => disent(cmd, cfg),
        Command::Sep { cmd } => sep(cmd, cfg),
        Command::Sym { cmd } => sym(cmd, cfg),
        Command::Suite { cmd } => suite(cmd, cfg),
    }
}

#[derive(Serialize)]
struct NetReport {
    /// Seed of this command; the net's own `seed` is its certification seed.
    seed: u64,
    net: PureNetJson,
    size: usize,
    bounds: NetBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CoverCertificate>,
}

fn load_net(src: &NetSource) -> Result<PureNet> {
    match (&src.net_file, src.octahedron) {
        (Some(path), _) => read_net(path),
        (None, true) => Ok(PureNet::octahedron()),
        (None, false) => usage("pass --net-file or --octahedron"),
    }
}

fn net(cmd: &NetCmd, cfg: &Config) -> Result<Outcome> {
    match *cmd {
        NetCmd::Build { d, eps, pool, samples, seed } => {
            let mut net = build_net_greedy(d, eps, pool.unwrap_or_else(|| default_pool_size(d)), seed)?;
            let certificate = samples.map(|s| certify_covering(&mut net, s, derive_seed(seed, 1)));
            Outcome::report(&NetReport {
                seed,
                bounds: lemma1_bounds(d, net.nominal_radius())?,
                size: net.len(),
                net: net.to_json(),
                certificate,
            })
        }
        NetCmd::Certify { ref net, samples, seed } => {
            let mut net = load_net(net)?;
            let cert = certify_covering(&mut net, samples.unwrap_or(cfg.net_samples), seed);
            Outcome::report(&NetReport {
                seed,
                bounds: lemma1_bounds(net.dim(), net.effective_radius())?,
                size: net.len(),
                net: net.to_json(),
                certificate: Some(cert),
            })
        }
        NetCmd::Bounds { d, eps } => Outcome::report(&lemma1_bounds(d, eps)?),
    }
}

/// Resolve a spec from flags. A net without a certificate is certified here,
/// which needs a seed.
fn load_spec(src: &SpecSource, seed: Option<u64>, cfg: &Config) -> Result<DisentanglerSpec> {
    if let Some(path) = &src.spec_file {
        return read_spec(path);
    }
    match src.kind {
        Some(KindArg::Net) => {
            let mut net = load_net(&src.net)?;
            if let Some(d) = src.d.filter(|&d| d != net.dim()) {
                return usage(format!("--d {d} does not match the net dimension {}", net.dim()));
            }
            if net.certified_radius().is_none() {
                let Some(seed) = seed else {
                    return usage("certifying the net needs --seed");
                };
                certify_covering(&mut net, src.samples.unwrap_or(cfg.net_samples), derive_seed(seed, 0));
            }
            Ok(build_net_disentangler(&net)?)
        }
        Some(KindArg::Definetti) => {
            let (Some(d), Some(n)) = (src.d, src.n) else {
                return usage("--kind definetti needs --d and --n");
            };
            Ok(build_definetti_disentangler(d, n, cfg.definetti_caps)?)
        }
        Some(KindArg::Identity) => Ok(identity_control()),
        Some(KindArg::Swap) => Ok(swap_control()),
        None => usage("pass --kind or --spec-file"),
    }
}

#[derive(Serialize)]
struct SpecSummary {
    kind: DisentanglerKind,
    d: usize,
    input_dim: usize,
    eps_claim: f64,
    delta_claim: f64,
    #[serde(rename = "log2_D")]
    log2_input_dim: f64,
}

impl From<&DisentanglerSpec> for SpecSummary {
    fn from(s: &DisentanglerSpec) -> Self {
        Self {
            kind: s.kind,
            d: s.d,
            input_dim: s.input_dim(),
            eps_claim: s.eps_claim,
            delta_claim: s.delta_claim,
            log2_input_dim: s.log2_input_dim,
        }
    }
}

#[derive(Serialize)]
struct SpecReport {
    spec: DisentanglerSpecJson,
}

#[derive(Serialize)]
struct VerifyReport {
    spec: SpecSummary,
    passed: bool,
    reports: Vec<VerificationReport>,
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn verify_table(reports: &[VerificationReport]) -> Table {
    let headers = ["condition", "method", "worst_observed", "worst_trial", "claim", "tolerance", "trials", "dim_r", "passed"];
    Table {
        headers: headers.iter().map(|h| h.to_string()).collect(),
        rows: reports
            .iter()
            .map(|r| {
                vec![
                    label(&r.condition),
                    r.method.clone(),
                    r.worst_observed.to_string(),
                    opt(r.worst_trial),
                    r.claim.to_string(),
                    r.tolerance.to_string(),
                    r.trials.to_string(),
                    opt(r.dim_r),
                    r.passed.to_string(),
                ]
            })
            .collect(),
    }
}

fn disent(cmd: &DisentCmd, cfg: &Config) -> Result<Outcome> {
    match cmd {
        DisentCmd::Build { spec, seed } => {
            let spec = load_spec(spec, *seed, cfg)?;
            Outcome::report(&SpecReport { spec: spec.to_json() })
        }
        DisentCmd::Verify { spec, checks, trials, dim_r, seed, generic_input_opt } => {
            let spec = load_spec(spec, Some(*seed), cfg)?;
            let mut opts = cfg.verify();
            opts.generic_input_opt = *generic_input_opt;
            let mut reports = Vec::new();
            let mut seen = Vec::new();
            for &check in checks {
                if seen.contains(&check) {
                    continue;
                }
                seen.push(check);
                // each check has its own stream, so selecting a subset changes nothing
                let s = derive_seed(*seed, 1 + check as u64);
                reports.push(match check {
                    CheckArg::C1 => verify_condition1(&spec, *trials, s, &opts)?,
                    CheckArg::C2 => verify_condition2(&spec, *trials, s, &opts)?,
                    CheckArg::StrongC1 => verify_strong_condition1(&spec, *dim_r, *trials, s, &opts)?,
                    CheckArg::Eb => eb_reduction_check(&spec, s, &opts)?,
                });
            }
            let passed = exit_code_for_reports(&reports) == EXIT_OK;
            let table = verify_table(&reports);
            let mut out = Outcome::report(&VerifyReport { spec: SpecSummary::from(&spec), passed, reports })?;
            out.table = Some(table);
            out.passed = passed;
            Ok(out)
        }
        DisentCmd::Bounds { spec, eps, delta, seed } => {
            if eps.is_some() || delta.is_some() {
                let Some(d) = spec.d else {
                    return usage("the lower bound needs --d");
                };
                return Outcome::report(&theorem_lower_bound(d, eps.unwrap_or(0.0), delta.unwrap_or(0.0))?);
            }
            let spec = load_spec(spec, *seed, cfg)?;
            Outcome::report(&construction_size_bounds(&spec)?)
        }
    }
}

#[derive(Serialize)]
struct StateInfo {
    dims: Vec<usize>,
}

#[derive(Serialize)]
struct SepReport<T: Serialize> {
    state: StateInfo,
    #[serde(flatten)]
    result: T,
}

#[derive(Serialize)]
struct PptReport {
    cut: usize,
    min_eigenvalue: f64,
    ppt: bool,
}

fn sep(cmd: &SepCmd, cfg: &Config) -> Result<Outcome> {
    let load = |s: &StateArgs| read_bipartite_state(&s.state, s.dims.as_deref());
    let info = |rho: &dlab_core::qcore::DensityOp| StateInfo { dims: rho.factor_dims().to_vec() };
    match cmd {
        SepCmd::Fidelity { state, seed } => {
            let rho = load(state)?;
            let r = seesaw_sep_fidelity(&rho, cfg.sep(), *seed)?;
            Outcome::report(&SepReport { state: info(&rho), result: r })
        }
        SepCmd::Distance { state, seed } => {
            let rho = load(state)?;
            let r = nearest_sep_trace_ub(&rho, cfg.sep(), *seed)?;
            Outcome::report(&SepReport { state: info(&rho), result: r })
        }
        SepCmd::Ppt { state, cut } => {
            let rho = load(state)?;
            let min_eigenvalue = ppt_min_eig(&rho, *cut)?;
            let ppt = min_eigenvalue >= -cfg.tolerance;
            Outcome::report(&SepReport { state: info(&rho), result: PptReport { cut: *cut, min_eigenvalue, ppt } })
        }
        SepCmd::Eb { choi, in_dim, seed } => {
            let j = read_choi(choi, *in_dim)?;
            Outcome::report(&eb_membership(&j, cfg.tolerance, cfg.sep(), *seed)?)
        }
        SepCmd::Lemma2 { state, r, seed } => {
            let rho = load(state)?;
            let res = lemma2_rhs(&rho, *r, cfg.sep(), *seed)?;
            Outcome::report(&SepReport { state: info(&rho), result: res })
        }
    }
}

#[derive(Serialize)]
struct SymDimReport {
    d: usize,
    n: usize,
    dim: usize,
}

#[derive(Serialize)]
struct DefinettiReport {
    d: usize,
    n: usize,
    k: usize,
    seed: u64,
    /// `k d / n`.
    bound: f64,
    within_bound: bool,
    fit: dlab_core::symsub::DefinettiFit,
}

fn sym(cmd: &SymCmd, cfg: &Config) -> Result<Outcome> {
    match *cmd {
        SymCmd::Dim { d, n } => Outcome::report(&SymDimReport { d, n, dim: sym_dimension(d, n)? }),
        SymCmd::Definetti { d, n, k, seed } => {
            if k == 0 || k > n {
                return usage(format!("need 1 <= k <= n, got k = {k}, n = {n}"));
            }
            let iso = sym_isometry(d, n)?;
            let psi = random_pure(iso.basis().dim(), &mut rng_from_seed(derive_seed(seed, 0)))?;
            let red = reduce_symmetric(&iso, &psi.density(), k)?;
            let net = default_fitting_net(d, derive_seed(seed, 1))?;
            let fit = definetti_fit_general(&red, &net, 1, cfg.fit_iters)?;
            let bound = (k * d) as f64 / n as f64;
            let within_bound = fit.distance <= bound;
            let mut out = Outcome::report(&DefinettiReport { d, n, k, seed, bound, within_bound, fit })?;
            out.passed = within_bound;
            Ok(out)
        }
    }
}

fn suite(cmd: &SuiteCmd, cfg: &Config) -> Result<Outcome> {
    match *cmd {
        SuiteCmd::Acceptance { seed } => {
            let report = run_suite(seed, cfg)?;
            let headers = ["criterion", "title", "measurement", "value", "relation", "limit", "passed"];
            let rows = report
                .criteria
                .iter()
                .flat_map(|c| {
                    c.measurements.iter().map(move |m| {
                        vec![
                            c.id.to_string(),
                            c.title.clone(),
                            m.name.clone(),
                            m.value.to_string(),
                            label(&m.relation),
                            m.limit.to_string(),
                            m.passed.to_string(),
                        ]
                    })
                })
                .collect();
            let mut out = Outcome::report(&report)?;
            out.table = Some(Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows });
            out.passed = report.passed;
            Ok(out)
        }
    }
}
