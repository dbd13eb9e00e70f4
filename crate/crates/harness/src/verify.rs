//! Exact and Monte Carlo checks of the model, simulator, oracle and
//! lower-bound identities, reported one line per check.

use std::fmt;

use glauber_core::learner;
use glauber_core::lowerbound::{self, CliqueEnsemble};
use glauber_core::math;
use glauber_core::model::min_update_prob;
use glauber_core::oracle::{self, StartState};
use glauber_core::{
    graphs, simulate_ct, simulate_dt, Couplings, Graph, IsingModel, ParamBounds, RngSeed,
    SpinConfig,
};

use crate::error::Result;

/// Check groups in run order.
pub const GROUPS: &[&str] = &[
    "model",
    "gibbs",
    "floor",
    "identity",
    "ratio",
    "squeeze",
    "balance",
    "stationarity",
    "sim",
    "window",
    "envelope",
    "independence",
    "kl",
    "pathspace",
    "magnetization",
    "fano",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.6e} {:.6e} {}",
            self.name,
            self.value,
            self.bound,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn at_most(group: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        group,
        name: format!("{group}/{}", name.into()),
        value,
        bound,
        pass: value <= bound,
    }
}

fn at_least(group: &'static str, name: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        group,
        name: format!("{group}/{}", name.into()),
        value,
        bound,
        pass: value >= bound,
    }
}

/// A model with a short label for report lines.
#[derive(Debug, Clone)]
pub struct Named {
    pub name: String,
    pub model: IsingModel,
}

fn named(name: &str, graph: Graph, couplings: Couplings, alpha: f64, beta: f64, d: usize) -> Named {
    Named {
        name: name.to_owned(),
        model: IsingModel::new(graph, couplings, ParamBounds::new(alpha, beta, d))
            .unwrap_or_else(|e| panic!("battery model {name}: {e}")),
    }
}

fn star(leaves: usize) -> Graph {
    Graph::new(leaves + 1, (1..=leaves).map(|l| (0, l))).expect("star graph")
}

/// Fixed models with `p <= 8` covering attractive, repulsive and mixed
/// couplings, isolated nodes, and degrees up to four.
pub fn standard_battery() -> Vec<Named> {
    let uniform = |name: &str, graph: Graph, theta: f64, d: usize| {
        let c = Couplings::constant(&graph, theta);
        named(name, graph, c, theta.abs(), theta.abs(), d)
    };
    let cycle6 = graphs::cycle(6).expect("cycle");
    let alternating: Couplings = cycle6
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, if k % 2 == 0 { 0.5 } else { -0.5 }))
        .collect();
    let grid = graphs::grid(2, 4).expect("grid");
    let mixed: Couplings = grid
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let magnitude = 0.3 + 0.1 * (k % 5) as f64;
            (e, if k % 3 == 1 { -magnitude } else { magnitude })
        })
        .collect();
    let triangle = Graph::new(5, [(0, 1), (1, 2), (0, 2)]).expect("triangle");
    let tri_couplings: Couplings = [((0, 1), 1.0), ((1, 2), -0.6), ((0, 2), 0.4)]
        .into_iter()
        .collect();
    vec![
        uniform("edge+0.5", graphs::single_edge(2).expect("edge"), 0.5, 1),
        uniform("edge-1", graphs::single_edge(2).expect("edge"), -1.0, 1),
        uniform("empty3", Graph::empty(3), 0.5, 1),
        uniform("path4-0.3", graphs::path(4).expect("path"), -0.3, 2),
        uniform("star5+0.8", star(4), 0.8, 4),
        named("triangle5", triangle, tri_couplings, 0.4, 1.0, 2),
        named("cycle6-alt", cycle6, alternating, 0.5, 0.5, 2),
        Named {
            name: "clique4".into(),
            model: lowerbound::clique_model(3, 0.2, 1.0, None).expect("clique"),
        },
        uniform("cycle8+0.8", graphs::cycle(8).expect("cycle"), 0.8, 2),
        named("grid2x4-mixed", grid, mixed, 0.3, 0.7, 3),
    ]
}

/// Models for the window-statistic expectation checks: a single edge and a
/// five-node star with `theta` in `{+-0.5, +-1}`.
pub fn envelope_battery() -> Vec<Named> {
    let mut out = Vec::new();
    for theta in [0.5, -0.5, 1.0, -1.0] {
        let g = graphs::single_edge(2).expect("edge");
        let c = Couplings::constant(&g, theta);
        out.push(named(
            &format!("edge{theta:+}"),
            g,
            c,
            theta.abs(),
            theta.abs(),
            1,
        ));
        let g = star(4);
        let c = Couplings::constant(&g, theta);
        out.push(named(
            &format!("star5{theta:+}"),
            g,
            c,
            theta.abs(),
            theta.abs(),
            4,
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Groups to run; `None` runs all of [`GROUPS`].
    pub only: Option<Vec<String>>,
    pub seed: u64,
    /// Repetitions per Monte Carlo expectation.
    pub mc_reps: u64,
    /// Extra model checked by the exact groups alongside the battery.
    pub model: Option<Named>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            only: None,
            seed: 24_301,
            mc_reps: 1_000_000,
            model: None,
        }
    }
}

pub fn run_verification_suite(options: &VerifyOptions) -> Result<Vec<Check>> {
    if let Some(only) = &options.only {
        if let Some(bad) = only.iter().find(|g| !GROUPS.contains(&g.as_str())) {
            return Err(crate::HarnessError::Config(format!(
                "unknown check group `{bad}`; known groups: {}",
                GROUPS.join(", ")
            )));
        }
    }
    let mut models = standard_battery();
    models.extend(options.model.clone());
    let small: Vec<Named> = models
        .iter()
        .filter(|m| m.model.p() <= 6)
        .cloned()
        .collect();
    let seed = RngSeed::new(options.seed);
    let mut checks = Vec::new();
    for (stream, &group) in GROUPS.iter().enumerate() {
        if !options
            .only
            .as_ref()
            .is_none_or(|o| o.iter().any(|g| g == group))
        {
            continue;
        }
        let seed = seed.with_stream(1000 * stream as u64);
        let new = match group {
            "model" => model_checks(&models)?,
            "gibbs" => gibbs_checks(&models)?,
            "floor" => floor_checks(&models)?,
            "identity" => identity_checks(&models)?,
            "ratio" => vec![ratio_bounds_grid()?],
            "squeeze" => squeeze_checks(&models)?,
            "balance" => balance_checks(&small)?,
            "stationarity" => stationarity_checks(&small, 100_000, seed)?,
            "sim" => sim_checks(seed)?,
            "window" => window_checks(seed)?,
            "envelope" => envelope_checks(&envelope_battery(), options.mc_reps, seed)?,
            "independence" => independence_checks(seed)?,
            "kl" => kl_checks()?,
            "pathspace" => pathspace_checks()?,
            "magnetization" => magnetization_checks()?,
            "fano" => fano_checks()?,
            _ => unreachable!("group list and dispatch agree"),
        };
        checks.extend(new);
    }
    Ok(checks)
}

fn all_configs(p: usize) -> impl Iterator<Item = SpinConfig> {
    (0..1usize << p).map(move |idx| SpinConfig::from_index(idx, p))
}

/// Heat-bath complement, Markov property and monotonicity by exhaustive
/// sweep.
pub fn model_checks(models: &[Named]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for Named { name, model } in models {
        let p = model.p();
        let mut complement: f64 = 0.0;
        let mut markov: f64 = 0.0;
        let mut monotone = 0u32;
        for config in all_configs(p) {
            for i in 0..p {
                let plus = model.update_prob_plus(&config, i)?;
                complement =
                    complement.max((plus + model.update_prob_minus(&config, i)? - 1.0).abs());
                for j in (0..p).filter(|&j| j != i) {
                    let mut flipped = config.clone();
                    flipped.flip(j);
                    let after = model.update_prob_plus(&flipped, i)?;
                    let theta = model.coupling(i, j);
                    if theta == 0.0 {
                        markov = markov.max((after - plus).abs());
                    } else {
                        // Raising sigma_j must move P(+1) in the direction of theta.
                        let up = if config.get(j) == -1 {
                            after - plus
                        } else {
                            plus - after
                        };
                        if theta.signum() * up <= 0.0 {
                            monotone += 1;
                        }
                    }
                }
            }
        }
        out.push(at_most(
            "model",
            format!("{name}/complement"),
            complement,
            0.0,
        ));
        out.push(at_most("model", format!("{name}/markov"), markov, 0.0));
        out.push(at_most(
            "model",
            format!("{name}/monotone-violations"),
            monotone.into(),
            0.0,
        ));
    }
    Ok(out)
}

/// Normalization, global-flip symmetry, and agreement between closed-form
/// and table-marginalized conditionals.
pub fn gibbs_checks(models: &[Named]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for Named { name, model } in models {
        let dist = oracle::exact_gibbs(model)?;
        let probs = dist.probabilities();
        let total: f64 = probs.iter().sum();
        out.push(at_most(
            "gibbs",
            format!("{name}/normalization"),
            (total - 1.0).abs(),
            1e-12,
        ));
        let mask = (1usize << model.p()) - 1;
        let flip = (0..probs.len())
            .map(|idx| (probs[idx] - probs[idx ^ mask]).abs())
            .fold(0.0, f64::max);
        out.push(at_most("gibbs", format!("{name}/flip-symmetry"), flip, 0.0));
        let mut worst: f64 = 0.0;
        for i in 0..model.p() {
            for j in (0..model.p()).filter(|&j| j != i) {
                for x in oracle::context_assignments(model, i, j) {
                    let a = oracle::exact_conditionals(model, i, j, &x)?;
                    let b = oracle::conditionals_from_table(&dist, model, i, j, &x)?;
                    worst = worst
                        .max((a.p_plus - b.p_plus).abs())
                        .max((a.p_minus - b.p_minus).abs());
                }
            }
        }
        out.push(at_most(
            "gibbs",
            format!("{name}/table-conditionals"),
            worst,
            1e-12,
        ));
    }
    Ok(out)
}

/// Smallest update probability and smallest conditional against
/// `exp(-2 beta d) / 2`.
pub fn floor_checks(models: &[Named]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for Named { name, model } in models {
        let b = model.bounds();
        let floor = min_update_prob(b.beta, b.d);
        let p = model.p();
        let mut smallest: f64 = 1.0;
        for config in all_configs(p) {
            for i in 0..p {
                smallest = smallest
                    .min(model.update_prob_plus(&config, i)?)
                    .min(model.update_prob_minus(&config, i)?);
            }
        }
        out.push(at_least("floor", format!("{name}/update"), smallest, floor));
        let mut smallest: f64 = 1.0;
        for i in 0..p {
            for j in (0..p).filter(|&j| j != i) {
                for x in oracle::context_assignments(model, i, j) {
                    let c = oracle::exact_conditionals(model, i, j, &x)?;
                    smallest = smallest
                        .min(c.p_plus)
                        .min(c.p_minus)
                        .min(c.one_minus_p_plus)
                        .min(c.one_minus_p_minus);
                }
            }
        }
        out.push(at_least(
            "floor",
            format!("{name}/conditional"),
            smallest,
            floor,
        ));
    }
    Ok(out)
}

/// Largest `|e^{4 theta_ij} - p+(1-p-)/(p-(1-p+))|` over all ordered pairs
/// and assignments.
pub fn identity_checks(models: &[Named]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for Named { name, model } in models {
        let mut worst: f64 = 0.0;
        for i in 0..model.p() {
            for j in (0..model.p()).filter(|&j| j != i) {
                for x in oracle::context_assignments(model, i, j) {
                    worst = worst.max(oracle::edge_identity_residual(model, i, j, &x)?);
                }
            }
        }
        out.push(at_most("identity", name.as_str(), worst, 1e-10));
    }
    Ok(out)
}

/// Violations of `lower <= middle <= upper` on the grid
/// `a = 0.001..=0.5`, `b = a..=0.999`, step `0.001`.
pub fn ratio_bounds_grid() -> Result<Check> {
    let mut violations = 0u32;
    for ka in 1..=500u32 {
        for kb in ka..=999u32 {
            let c = oracle::ratio_bounds(f64::from(ka) / 1000.0, f64::from(kb) / 1000.0)?;
            violations += u32::from(!c.holds);
        }
    }
    Ok(at_most("ratio", "grid-violations", violations.into(), 0.0))
}

fn squeeze_violations(model: &IsingModel) -> Result<u32> {
    let mut violations = 0;
    for &(u, v) in model.graph().edges() {
        for (i, j) in [(u, v), (v, u)] {
            for x in oracle::context_assignments(model, i, j) {
                violations += u32::from(!oracle::squeeze_check(model, i, j, &x)?.holds);
            }
        }
    }
    Ok(violations)
}

/// The coupling squeeze on every edge and assignment, plus a four-node star
/// with `theta` in `{+-0.3, +-0.8}`.
pub fn squeeze_checks(models: &[Named]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for Named { name, model } in models {
        out.push(at_most(
            "squeeze",
            name.as_str(),
            squeeze_violations(model)?.into(),
            0.0,
        ));
    }
    for theta in [0.3, -0.3, 0.8, -0.8] {
        let g = star(3);
        let m = IsingModel::uniform(g, theta, ParamBounds::new(0.3, 0.8, 3))?;
        out.push(at_most(
            "squeeze",
            format!("star4{theta:+}"),
            squeeze_violations(&m)?.into(),
            0.0,
        ));
    }
    Ok(out)
}

pub fn balance_checks(models: &[Named]) -> Result<Vec<Check>> {
    models
        .iter()
        .map(|Named { name, model }| {
            Ok(at_most(
                "balance",
                name.as_str(),
                oracle::detailed_balance_residual(model)?,
                1e-12,
            ))
        })
        .collect()
}

/// TV distance to Gibbs after one time unit from exact Gibbs draws, and
/// after 50 time units from all-plus for four free spins.
pub fn stationarity_checks(models: &[Named], runs: u64, seed: RngSeed) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, Named { name, model }) in models.iter().enumerate() {
        let tv =
            oracle::stationarity_tv(model, 1.0, runs, seed.with_stream(seed.stream + k as u64))?;
        out.push(at_most("stationarity", name.as_str(), tv, 0.02));
    }
    let free = IsingModel::new(
        Graph::empty(4),
        Couplings::new(),
        ParamBounds::new(1.0, 1.0, 1),
    )?;
    let tv = oracle::end_state_tv(
        &free,
        &StartState::Fixed(SpinConfig::all_plus(4)),
        50.0,
        runs,
        seed.with_stream(seed.stream + 999),
    )?;
    out.push(at_most("stationarity", "free4-from-plus", tv, 0.02));
    Ok(out)
}

/// Kolmogorov-Smirnov statistic of `samples` against Exp(1).
pub fn ks_exponential(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = -math::expm1(-x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance `level`.
pub fn ks_critical(level: f64, n: usize) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

pub fn sim_checks(seed: RngSeed) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let cycle = IsingModel::uniform(graphs::cycle(9)?, 0.4, ParamBounds::new(0.4, 0.4, 2))?;
    let horizon = 1e5;
    let trace = simulate_ct(&cycle, &SpinConfig::all_plus(9), horizon, seed)?;
    let worst = (0..9)
        .map(|i| (trace.node_event_count(i) as f64 / horizon - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(at_most("sim", "cycle9/rate", worst, 0.02));
    let mut gaps: Vec<f64> = {
        let times: Vec<f64> = trace.node_events(0).map(|e| e.time).collect();
        std::iter::once(times[0])
            .chain(times.windows(2).map(|w| w[1] - w[0]))
            .collect()
    };
    let n = gaps.len();
    out.push(at_most(
        "sim",
        "cycle9/ks-gaps",
        ks_exponential(&mut gaps),
        ks_critical(0.001, n),
    ));
    let again = simulate_ct(&cycle, &SpinConfig::all_plus(9), horizon, seed)?;
    out.push(at_most(
        "sim",
        "cycle9/deterministic",
        f64::from(u8::from(again != trace)),
        0.0,
    ));
    let mut replay = trace.initial().clone();
    for e in trace.events() {
        replay.set(e.node as usize, e.spin);
    }
    out.push(at_most(
        "sim",
        "cycle9/replay",
        f64::from(u8::from(trace.state_at(horizon)? != replay)),
        0.0,
    ));

    let coin = IsingModel::new(
        Graph::empty(1),
        Couplings::new(),
        ParamBounds::new(1.0, 1.0, 1),
    )?;
    let trace = simulate_ct(
        &coin,
        &SpinConfig::all_plus(1),
        1e4,
        seed.with_stream(seed.stream + 1),
    )?;
    let n = trace.events().len() as f64;
    let plus = trace.events().iter().filter(|e| e.spin == 1).count() as f64 / n;
    out.push(at_most(
        "sim",
        "free-spin/coin",
        (plus - 0.5).abs(),
        3.0 * 0.5 / n.sqrt(),
    ));

    let path = IsingModel::uniform(graphs::path(4)?, 0.5, ParamBounds::new(0.5, 0.5, 2))?;
    let trace = simulate_dt(
        &path,
        &SpinConfig::all_plus(4),
        1_000_000,
        seed.with_stream(seed.stream + 2),
    )?;
    let n = trace.events().len() as f64;
    let worst = (0..4)
        .map(|i| (trace.node_event_count(i) as f64 / n - 0.25).abs())
        .fold(0.0, f64::max);
    out.push(at_most("sim", "discrete/uniform-pick", worst, 0.002));

    let edge = IsingModel::uniform(graphs::single_edge(2)?, 0.5, ParamBounds::new(0.5, 0.5, 1))?;
    let steps = 1_000_000u64;
    let trace = simulate_dt(
        &edge,
        &SpinConfig::all_plus(2),
        steps,
        seed.with_stream(seed.stream + 3),
    )?;
    let mut counts = [0u64; 4];
    let mut state = trace.initial().clone();
    counts[state.to_index()] += 1;
    for e in trace.events() {
        state.set(e.node as usize, e.spin);
        counts[state.to_index()] += 1;
    }
    let exact = oracle::exact_gibbs(&edge)?;
    let tv = 0.5
        * counts
            .iter()
            .zip(exact.probabilities())
            .map(|(&c, &pr)| (c as f64 / steps as f64 - pr).abs())
            .sum::<f64>();
    out.push(at_most("sim", "discrete/gibbs-tv", tv, 0.01));
    Ok(out)
}

/// Frequency of the i-j-i pattern (free spins, `k_max = 10^5`) and of
/// event D on a star.
pub fn window_checks(seed: RngSeed) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let free = IsingModel::new(
        Graph::empty(2),
        Couplings::new(),
        ParamBounds::new(1.0, 1.0, 1),
    )?;
    let k_max = 100_000u64;
    for (k, window) in [0.3, 1.0, 3.0].into_iter().enumerate() {
        let trace = simulate_ct(
            &free,
            &SpinConfig::all_plus(2),
            k_max as f64 * window,
            seed.with_stream(seed.stream + k as u64),
        )?;
        let (freq, q, k) = oracle::window_event_frequency(&trace, 0, 1, window)?;
        out.push(at_most(
            "window",
            format!("event-a/L={window}"),
            (freq - q).abs(),
            4.0 * (q / k as f64).sqrt(),
        ));
    }
    let model = IsingModel::uniform(star(4), 0.5, ParamBounds::new(0.5, 0.5, 4))?;
    let window = 0.3;
    let trace = simulate_ct(
        &model,
        &SpinConfig::all_plus(5),
        k_max as f64 * window,
        seed.with_stream(seed.stream + 10),
    )?;
    let k_max = learner::window_count(trace.horizon(), window)?;
    let mut hits = 0u64;
    for k in 1..=k_max {
        hits += u64::from(oracle::event_d(&trace, model.graph(), 0, 1, k, window)?);
    }
    let freq = hits as f64 / k_max as f64;
    let expected = math::exp(-window * 3.0);
    out.push(at_most(
        "window",
        format!("event-d/L={window}"),
        (freq - expected).abs(),
        4.0 * (1.0 / k_max as f64).sqrt(),
    ));
    Ok(out)
}

fn alternating(p: usize) -> SpinConfig {
    SpinConfig::new((0..p).map(|k| if k % 2 == 0 { 1 } else { -1 }).collect()).expect("spins")
}

/// Monte Carlo `E_x X_ij` against the edge and non-edge envelopes for every
/// ordered pair, `L` in `{0.1, 1}` and `x` in {all plus, alternating}. One
/// line per (model, L, x, case) reports the tightest pair; edge cases get a
/// second line against the `1/16` envelope.
pub fn envelope_checks(models: &[Named], reps: u64, seed: RngSeed) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut stream = seed.stream;
    for Named { name, model } in models {
        let p = model.p();
        let pairs: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        for window in [0.1, 1.0] {
            for (xname, x) in [("plus", SpinConfig::all_plus(p)), ("alt", alternating(p))] {
                stream += 1;
                let estimates = oracle::mc_expected_statistics(
                    model,
                    &x,
                    &pairs,
                    window,
                    reps,
                    seed.with_stream(stream),
                )?;
                let checks: Vec<_> = pairs
                    .iter()
                    .zip(estimates)
                    .map(|(&(i, j), e)| (i, j, oracle::signal_envelope(model, i, j, window, e)))
                    .collect();
                let label = format!("{name}/L={window}/x={xname}");
                let edge = checks
                    .iter()
                    .filter(|c| c.2.is_edge)
                    .map(|(i, j, c)| {
                        (
                            model.coupling(*i, *j).signum() * c.estimate.mean
                                + 3.0 * c.estimate.stderr,
                            c,
                        )
                    })
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((value, c)) = edge {
                    out.push(at_least(
                        "envelope",
                        format!("{label}/edge"),
                        value,
                        c.bound,
                    ));
                    out.push(at_least(
                        "envelope",
                        format!("{label}/edge-1/16"),
                        value,
                        c.bound_alt,
                    ));
                }
                let nonedge = checks
                    .iter()
                    .filter(|c| !c.2.is_edge)
                    .map(|(_, _, c)| (c.estimate.mean.abs() - 3.0 * c.estimate.stderr, c))
                    .max_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((value, c)) = nonedge {
                    out.push(at_most(
                        "envelope",
                        format!("{label}/non-edge"),
                        value,
                        c.bound,
                    ));
                }
            }
        }
    }
    // Two-node model: the estimate matches the closed form, which rises
    // from 0.2 to 0.5 and falls again by 1.0.
    let mut means = Vec::new();
    for theta in [0.2, 0.5, 1.0] {
        let m = IsingModel::uniform(
            graphs::single_edge(2)?,
            theta,
            ParamBounds::new(theta, theta, 1),
        )?;
        let e = oracle::mc_expected_statistic(
            &m,
            &SpinConfig::all_plus(2),
            0,
            1,
            1.0,
            reps,
            seed.with_stream(seed.stream + 500),
        )?;
        let exact = oracle::two_node_expected_statistic(theta, 1.0);
        out.push(at_most(
            "envelope",
            format!("edge{theta:+}/closed-form"),
            (e.mean - exact).abs(),
            4.0 * e.stderr,
        ));
        means.push(e.mean);
    }
    out.push(at_least(
        "envelope",
        "edge/signal-0.2-to-0.5",
        means[1] - means[0],
        f64::MIN_POSITIVE,
    ));
    Ok(out)
}

pub fn independence_checks(seed: RngSeed) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let star5 = IsingModel::uniform(star(4), 0.5, ParamBounds::new(0.5, 0.5, 4))?;
    let free = IsingModel::new(
        Graph::empty(5),
        Couplings::new(),
        ParamBounds::new(1.0, 1.0, 1),
    )?;
    for (k, (name, model)) in [("star5", &star5), ("free5", &free)]
        .into_iter()
        .enumerate()
    {
        let c = oracle::independence_ad_check(
            model,
            0,
            1,
            1.0,
            100_000,
            seed.with_stream(seed.stream + k as u64),
        )?;
        out.push(at_most(
            "independence",
            format!("{name}/a-d"),
            (c.p_ad - c.p_a * c.p_d).abs(),
            4.0 * c.stderr,
        ));
    }
    let edge = IsingModel::uniform(graphs::single_edge(2)?, 0.5, ParamBounds::new(0.5, 0.5, 1))?;
    let c =
        oracle::independence_ad_check(&edge, 0, 1, 1.0, 10_000, seed.with_stream(seed.stream + 9))?;
    out.push(at_most(
        "independence",
        "edge/p-d-is-one",
        (c.p_d - 1.0).abs(),
        0.0,
    ));
    let mut shared = 0u32;
    for Named { model, .. } in standard_battery() {
        for i in 0..model.p() {
            for j in (0..model.p()).filter(|&j| j != i) {
                shared += u32::from(!oracle::clock_sets_disjoint(model.graph(), i, j));
            }
        }
    }
    out.push(at_most(
        "independence",
        "battery/clock-sets-shared",
        shared.into(),
        0.0,
    ));
    Ok(out)
}

/// Parameters of the KL battery: `d` in {3, 9}, `alpha` in {0.1, 0.5},
/// `beta` in {alpha, 1, 2}.
pub fn kl_battery() -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for d in [3, 9] {
        for alpha in [0.1, 0.5] {
            for beta in [alpha, 1.0, 2.0] {
                out.push((d, alpha, beta));
            }
        }
    }
    out
}

/// Two cliques' worth of nodes for each battery entry.
pub fn kl_ensemble(d: usize, alpha: f64, beta: f64) -> Result<CliqueEnsemble> {
    Ok(lowerbound::build_ensemble(2 * (d + 1), d, alpha, beta)?)
}

pub fn kl_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (d, alpha, beta) in kl_battery() {
        let e = kl_ensemble(d, alpha, beta)?;
        let label = format!("d={d}/a={alpha}/b={beta}");
        let mut c1: f64 = 0.0;
        let mut log_ratio: f64 = 0.0;
        let mut flip: f64 = 0.0;
        for v in 0..e.m() {
            let r = lowerbound::variant_report(&e, v, e.p as u64)?;
            c1 = c1.max(r.c1);
            let proj = e.projection(v)?;
            log_ratio = log_ratio.max(lowerbound::max_update_log_ratio(&proj.base, &proj.variant)?);
            if let Some(f) =
                lowerbound::max_flip_prob_under_high_magnetization(&proj.variant, proj.u)?
            {
                flip = flip.max(f);
            }
            for ratio in [1u64, 10, 100] {
                let n = ratio * e.p as u64;
                let total = lowerbound::kl_total(r.c1, r.cl, n);
                let bound = lowerbound::kl_bound(n, e.p, alpha, beta, d);
                if v == 0 || total > bound {
                    out.push(at_most(
                        "kl",
                        format!("{label}/n/p={ratio}/variant{v}"),
                        total,
                        bound,
                    ));
                }
            }
        }
        out.push(at_most("kl", format!("{label}/c1"), c1, 4.0 * alpha));
        out.push(at_most(
            "kl",
            format!("{label}/log-ratio"),
            log_ratio,
            2.0 * alpha + 1e-12,
        ));
        out.push(at_most(
            "kl",
            format!("{label}/flip-high-magnetization"),
            flip,
            math::exp(-2.0 * beta * d as f64 / 3.0),
        ));
    }
    let e = lowerbound::build_ensemble(4, 3, 0.2, 2.0)?;
    let proj = e.projection(0)?;
    let cl = lowerbound::exact_cl(&proj.base, &proj.variant, 4)?;
    out.push(at_most(
        "kl",
        "d=3/a=0.2/b=2/cl-intermediate",
        cl,
        lowerbound::cl_intermediate_bound(&proj.variant, 4)?,
    ));
    Ok(out)
}

/// Brute-force path-space KL against the chain-rule total for a single
/// four-node clique.
pub fn pathspace_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (alpha, beta) in [(0.2, 1.0), (0.5, 0.5)] {
        let e = lowerbound::build_ensemble(4, 3, alpha, beta)?;
        let proj = e.projection(0)?;
        let c1 = lowerbound::exact_c1(&proj.base, &proj.variant)?;
        let cl = lowerbound::exact_cl(&proj.base, &proj.variant, 4)?;
        for n in [2u32, 3] {
            let brute = lowerbound::path_space_kl(&proj.base, &proj.variant, n)?;
            let chain = lowerbound::kl_total(c1, cl, n.into());
            out.push(at_most(
                "pathspace",
                format!("a={alpha}/b={beta}/n={n}"),
                (brute - chain).abs(),
                1e-10,
            ));
        }
    }
    Ok(out)
}

pub fn magnetization_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (d, beta) in [(9, 0.5), (9, 1.0), (9, 5.0), (3, 1.0)] {
        for alpha in [0.1, beta] {
            let m = lowerbound::clique_model(d, alpha, beta, Some((0, 1)))?;
            let t = lowerbound::magnetization_tail(&m)?;
            out.push(at_most(
                "magnetization",
                format!("d={d}/a={alpha}/b={beta}"),
                t.exact,
                t.bound,
            ));
        }
    }
    Ok(out)
}

pub fn fano_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let f = lowerbound::fano_from_gamma(1.0 / 16.0, 100);
    out.push(at_most(
        "fano",
        "gamma=1/16/M=100",
        (f.risk - 0.72251).abs(),
        1e-5,
    ));
    let t = lowerbound::min_observation_time(1000, 3, 1.0, 1.0);
    out.push(at_most(
        "fano",
        "time/p=1000/d=3/a=b=1",
        (t - 3.954e-3).abs(),
        1e-6,
    ));
    // Exact divergences never give a larger Fano gamma (so never a weaker
    // risk bound) than the closed-form KL bound.
    for (d, alpha, beta) in kl_battery() {
        let e = kl_ensemble(d, alpha, beta)?;
        let m = e.m();
        for ratio in [1u64, 10, 100] {
            let n = ratio * e.p as u64;
            let exact: Vec<f64> = (0..m)
                .map(|v| lowerbound::variant_report(&e, v, n).map(|r| r.total))
                .collect::<Result<_, _>>()?;
            let via_exact = lowerbound::fano_bound(&exact, m)?;
            let via_bound =
                lowerbound::fano_bound(&vec![lowerbound::kl_bound(n, e.p, alpha, beta, d); m], m)?;
            out.push(at_most(
                "fano",
                format!("d={d}/a={alpha}/b={beta}/n/p={ratio}/gamma"),
                via_exact.gamma,
                via_bound.gamma,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pass_all(checks: &[Check]) {
        let failed: Vec<_> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(ToString::to_string)
            .collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn exact_groups_pass_on_battery() {
        let models = standard_battery();
        assert!(models.iter().all(|m| m.model.p() <= 8));
        pass_all(&model_checks(&models).unwrap());
        pass_all(&identity_checks(&models).unwrap());
        pass_all(&squeeze_checks(&models).unwrap());
        pass_all(&fano_checks().unwrap());
    }

    #[test]
    fn ks_statistic_flags_wrong_rate() {
        let mut ok: Vec<f64> = (1..=1000)
            .map(|k| -(1.0 - (k as f64 - 0.5) / 1000.0).ln())
            .collect();
        assert!(ks_exponential(&mut ok) < ks_critical(0.001, 1000));
        let mut slow: Vec<f64> = ok.iter().map(|x| 2.0 * x).collect();
        assert!(ks_exponential(&mut slow) > ks_critical(0.001, 1000));
    }

    #[test]
    fn unknown_group_is_an_error() {
        let opts = VerifyOptions {
            only: Some(vec!["nope".into()]),
            ..Default::default()
        };
        assert!(run_verification_suite(&opts).is_err());
    }

    #[test]
    fn check_line_format() {
        let c = at_most("identity", "edge", 1e-17, 1e-10);
        assert_eq!(
            c.to_string(),
            "identity/edge 1.000000e-17 1.000000e-10 PASS"
        );
    }
}
