//! Exact small-instance ground truth and numerical verification of the
//! learner's supporting inequalities.
//!
//! Exhaustive routines enumerate all `2^p` configurations and are guarded at
//! [`MAX_ENUM_NODES`]. Conditionals are computed in closed form from the
//! heat-bath law (conditioning on the full neighborhood fixes it); the joint
//! table route in [`conditionals_from_table`] is kept as an independent
//! cross-check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::learner::{
    self, edge_signal_lower_bound, nonedge_upper_bound, window_event_probability,
};
use crate::math;
use crate::model::{Graph, IsingModel, Spin, SpinConfig};
use crate::rng::{RngSeed, Substream};
use crate::sim::{drive_ct, Trace, TraceMode};

pub const MAX_ENUM_NODES: usize = 20;

fn guard(p: usize, max: usize) -> Result<()> {
    if p > max {
        return Err(Error::TooLarge { nodes: p, max });
    }
    Ok(())
}

/// `sum_{ij in E} theta_ij sigma_i sigma_j` for configuration `index`.
pub fn energy(model: &IsingModel, index: usize) -> f64 {
    let spin = |k: usize| if index >> k & 1 == 1 { 1.0 } else { -1.0 };
    model
        .couplings()
        .iter()
        .map(|((i, j), theta)| theta * spin(i) * spin(j))
        .sum()
}

/// Full Gibbs table. Weights are stored relative to the largest one; the
/// scale is kept in `log_scale` so that `Z = exp(log_scale) * sum(weights)`.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    p: usize,
    weights: Vec<f64>,
    log_scale: f64,
    weight_sum: f64,
    probabilities: Vec<f64>,
}

impl ExactDistribution {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Unnormalized weights `exp(energy - max energy)`, indexed as in
    /// [`SpinConfig::from_index`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_partition_function(&self) -> f64 {
        self.log_scale + math::ln(self.weight_sum)
    }

    pub fn partition_function(&self) -> f64 {
        math::exp(self.log_partition_function())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, config: &SpinConfig) -> f64 {
        self.probabilities[config.to_index()]
    }

    /// Draws configurations from the table.
    pub fn sampler(&self) -> GibbsSampler {
        GibbsSampler {
            p: self.p,
            index: WeightedIndex::new(&self.probabilities).expect("probabilities are positive"),
        }
    }
}

pub struct GibbsSampler {
    p: usize,
    index: WeightedIndex<f64>,
}

impl GibbsSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinConfig {
        SpinConfig::from_index(self.index.sample(rng), self.p)
    }
}

/// Enumerates the Gibbs distribution `P(sigma) ∝ exp(sum theta_ij sigma_i sigma_j)`.
pub fn exact_gibbs(model: &IsingModel) -> Result<ExactDistribution> {
    let p = model.p();
    guard(p, MAX_ENUM_NODES)?;
    let energies: Vec<f64> = (0..1usize << p).map(|idx| energy(model, idx)).collect();
    let log_scale = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = energies.iter().map(|e| math::exp(e - log_scale)).collect();
    let weight_sum: f64 = weights.iter().sum();
    let probabilities = weights.iter().map(|w| w / weight_sum).collect();
    Ok(ExactDistribution {
        p,
        weights,
        log_scale,
        weight_sum,
        probabilities,
    })
}

/// `P(sigma_i = +1 | ...)` with `sigma_j = +1` and `sigma_j = -1`, for a
/// fixed assignment of the rest of `i`'s neighborhood. The complements are
/// carried separately so they keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPair {
    pub i: usize,
    pub j: usize,
    pub p_plus: f64,
    pub p_minus: f64,
    pub one_minus_p_plus: f64,
    pub one_minus_p_minus: f64,
}

/// Nodes of `N(i) \ {j}` in ascending order.
pub fn context_nodes(model: &IsingModel, i: usize, j: usize) -> Vec<usize> {
    model
        .graph()
        .neighbors(i)
        .iter()
        .copied()
        .filter(|&k| k != j)
        .collect()
}

/// Every assignment of `N(i) \ {j}`.
pub fn context_assignments(
    model: &IsingModel,
    i: usize,
    j: usize,
) -> impl Iterator<Item = Vec<(usize, Spin)>> {
    let nodes = context_nodes(model, i, j);
    (0..1usize << nodes.len()).map(move |bits| {
        nodes
            .iter()
            .enumerate()
            .map(|(b, &k)| (k, if bits >> b & 1 == 1 { 1 } else { -1 }))
            .collect()
    })
}

fn check_pair(model: &IsingModel, i: usize, j: usize) -> Result<()> {
    for node in [i, j] {
        if node >= model.p() {
            return Err(Error::NodeOutOfRange { node, p: model.p() });
        }
    }
    if i == j {
        return Err(Error::SameNode(i));
    }
    Ok(())
}

fn check_assignment(model: &IsingModel, i: usize, j: usize, x: &[(usize, Spin)]) -> Result<()> {
    let mut given: Vec<usize> = x.iter().map(|&(k, _)| k).collect();
    given.sort_unstable();
    let needed = context_nodes(model, i, j);
    if given != needed {
        return Err(Error::InvalidAssignment(format!(
            "expected values for nodes {needed:?}, got {given:?}"
        )));
    }
    if let Some(&(_, s)) = x.iter().find(|&&(_, s)| s != 1 && s != -1) {
        return Err(Error::InvalidSpin(i64::from(s)));
    }
    Ok(())
}

/// Closed-form conditionals from the heat-bath law.
pub fn exact_conditionals(
    model: &IsingModel,
    i: usize,
    j: usize,
    x: &[(usize, Spin)],
) -> Result<ConditionalPair> {
    check_pair(model, i, j)?;
    check_assignment(model, i, j, x)?;
    let rest: f64 = x
        .iter()
        .map(|&(k, s)| model.coupling(i, k) * f64::from(s))
        .sum();
    let theta = model.coupling(i, j);
    let (p_plus, one_minus_p_plus) = math::heat_bath(rest + theta);
    let (p_minus, one_minus_p_minus) = math::heat_bath(rest - theta);
    Ok(ConditionalPair {
        i,
        j,
        p_plus,
        p_minus,
        one_minus_p_plus,
        one_minus_p_minus,
    })
}

/// The same conditionals obtained by summing the joint Gibbs table.
pub fn conditionals_from_table(
    dist: &ExactDistribution,
    model: &IsingModel,
    i: usize,
    j: usize,
    x: &[(usize, Spin)],
) -> Result<ConditionalPair> {
    check_pair(model, i, j)?;
    check_assignment(model, i, j, x)?;
    if dist.p() != model.p() {
        return Err(Error::ConfigLength {
            expected: model.p(),
            found: dist.p(),
        });
    }
    let matches = |idx: usize| x.iter().all(|&(k, s)| (idx >> k & 1 == 1) == (s == 1));
    // [sigma_j][sigma_i] probability mass, index 0 = -1, 1 = +1
    let mut mass = [[0.0f64; 2]; 2];
    for (idx, &pr) in dist.probabilities().iter().enumerate() {
        if matches(idx) {
            mass[idx >> j & 1][idx >> i & 1] += pr;
        }
    }
    let cond = |m: [f64; 2]| (m[1] / (m[0] + m[1]), m[0] / (m[0] + m[1]));
    let (p_plus, one_minus_p_plus) = cond(mass[1]);
    let (p_minus, one_minus_p_minus) = cond(mass[0]);
    Ok(ConditionalPair {
        i,
        j,
        p_plus,
        p_minus,
        one_minus_p_plus,
        one_minus_p_minus,
    })
}

/// `|e^{4 theta_ij} - p+(1-p-) / (p-(1-p+))|`.
pub fn edge_identity_residual(
    model: &IsingModel,
    i: usize,
    j: usize,
    x: &[(usize, Spin)],
) -> Result<f64> {
    let c = exact_conditionals(model, i, j, x)?;
    let ratio = (c.p_plus * c.one_minus_p_minus) / (c.p_minus * c.one_minus_p_plus);
    Ok((math::exp(4.0 * model.coupling(i, j)) - ratio).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `b - a <= b(1-a)/(a(1-b)) - 1 <= (b-a)/(a(1-b)^2)` for
/// `0 < a <= b < 1`, `a <= 1/2`.
pub fn ratio_bounds(a: f64, b: f64) -> Result<RatioBounds> {
    if !(a > 0.0 && a <= b && b < 1.0 && a <= 0.5) {
        return Err(Error::Precondition(format!(
            "need 0 < a <= b < 1 and a <= 1/2 (a = {a}, b = {b})"
        )));
    }
    let lower = b - a;
    let middle = b * (1.0 - a) / (a * (1.0 - b)) - 1.0;
    let upper = (b - a) / (a * (1.0 - b) * (1.0 - b));
    Ok(RatioBounds {
        lower,
        middle,
        upper,
        holds: lower <= middle && middle <= upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeCheck {
    /// `sign(theta)(p+ - p-)`
    pub lower: f64,
    /// `e^{4|theta|} - 1`
    pub middle: f64,
    /// `8 e^{8 beta d} sign(theta)(p+ - p-)`
    pub upper: f64,
    pub holds: bool,
}

/// `sign(theta)(p+ - p-) <= e^{4|theta|} - 1 <= 8e^{8 beta d} sign(theta)(p+ - p-)`
/// for an edge `{i, j}`. For negative couplings the right-hand side is
/// `8e^{8 beta d}(p- - p+)`; the commonly printed `(p- - p-)` is a typo.
pub fn squeeze_check(
    model: &IsingModel,
    i: usize,
    j: usize,
    x: &[(usize, Spin)],
) -> Result<SqueezeCheck> {
    check_pair(model, i, j)?;
    let theta = model.coupling(i, j);
    if !model.graph().has_edge(i, j) || theta == 0.0 {
        return Err(Error::NotAnEdge { i, j });
    }
    let c = exact_conditionals(model, i, j, x)?;
    let bounds = model.bounds();
    let gap = theta.signum() * (c.p_plus - c.p_minus);
    let lower = gap;
    let middle = math::expm1(4.0 * theta.abs());
    let upper = 8.0 * math::exp(8.0 * bounds.beta * bounds.d as f64) * gap;
    Ok(SqueezeCheck {
        lower,
        middle,
        upper,
        holds: lower <= middle && middle <= upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
}

fn one_window_traces<'a>(
    model: &'a IsingModel,
    start: &'a SpinConfig,
    window: f64,
    reps: u64,
    seed: RngSeed,
) -> impl Iterator<Item = Trace> + 'a {
    let mut clock = seed.rng(Substream::Clock);
    let mut coins = seed.rng(Substream::Spins);
    (0..reps).map(move |_| {
        let mut config = start.clone();
        let mut events = Vec::new();
        drive_ct(model, &mut config, window, &mut clock, &mut coins, |e| {
            events.push(e)
        });
        Trace::from_parts(TraceMode::Continuous, start.clone(), events, window)
            .expect("simulated events are ordered")
    })
}

/// Monte Carlo estimate of `E_x X_ij` over independent single windows of
/// length `window` started from `x`.
pub fn mc_expected_statistic(
    model: &IsingModel,
    x: &SpinConfig,
    i: usize,
    j: usize,
    window: f64,
    reps: u64,
    seed: RngSeed,
) -> Result<McEstimate> {
    Ok(mc_expected_statistics(model, x, &[(i, j)], window, reps, seed)?[0])
}

/// [`mc_expected_statistic`] for several ordered pairs, all evaluated on the
/// same simulated windows.
pub fn mc_expected_statistics(
    model: &IsingModel,
    x: &SpinConfig,
    pairs: &[(usize, usize)],
    window: f64,
    reps: u64,
    seed: RngSeed,
) -> Result<Vec<McEstimate>> {
    for &(i, j) in pairs {
        check_pair(model, i, j)?;
    }
    if reps < 1000 {
        return Err(Error::Precondition(format!(
            "need at least 1000 repetitions, got {reps}"
        )));
    }
    if x.len() != model.p() {
        return Err(Error::ConfigLength {
            expected: model.p(),
            found: x.len(),
        });
    }
    let mut sums = vec![(0.0f64, 0.0f64); pairs.len()];
    for trace in one_window_traces(model, x, window, reps, seed) {
        for (&(i, j), acc) in pairs.iter().zip(sums.iter_mut()) {
            let v = f64::from(learner::edge_statistic(&trace, i, j, 1, window)?);
            acc.0 += v;
            acc.1 += v * v;
        }
    }
    let n = reps as f64;
    Ok(sums
        .into_iter()
        .map(|(sum, sum_sq)| {
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
            McEstimate {
                mean,
                stderr: math::sqrt(var / n),
                reps,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalEnvelope {
    pub estimate: McEstimate,
    pub is_edge: bool,
    /// Envelope with the `1/4` constant (edges) or `2qLd` (non-edges).
    pub bound: f64,
    /// Edge envelope with the `1/16` constant; equals `bound` for non-edges.
    pub bound_alt: f64,
    pub holds: bool,
}

/// Compares the Monte Carlo estimate against the expectation envelopes with
/// a three-standard-error allowance.
pub fn signal_envelope_check(
    model: &IsingModel,
    x: &SpinConfig,
    i: usize,
    j: usize,
    window: f64,
    reps: u64,
    seed: RngSeed,
) -> Result<SignalEnvelope> {
    let estimate = mc_expected_statistic(model, x, i, j, window, reps, seed)?;
    Ok(signal_envelope(model, i, j, window, estimate))
}

/// Compares an existing estimate of `E_x X_ij` against the envelopes.
pub fn signal_envelope(
    model: &IsingModel,
    i: usize,
    j: usize,
    window: f64,
    estimate: McEstimate,
) -> SignalEnvelope {
    let b = model.bounds();
    let theta = model.coupling(i, j);
    let is_edge = model.graph().has_edge(i, j);
    let slack = 3.0 * estimate.stderr;
    let (bound, bound_alt, holds) = if is_edge {
        let bound = edge_signal_lower_bound(theta.abs(), b.d, b.beta, window, 0.25);
        let alt = edge_signal_lower_bound(theta.abs(), b.d, b.beta, window, 1.0 / 16.0);
        (bound, alt, theta.signum() * estimate.mean >= bound - slack)
    } else {
        let bound = nonedge_upper_bound(b.d, window);
        (bound, bound, estimate.mean.abs() <= bound + slack)
    };
    SignalEnvelope {
        estimate,
        is_edge,
        bound,
        bound_alt,
        holds,
    }
}

/// Exact `E_x X_01` for the two-node model with coupling `theta`.
///
/// Given the i-j-i pattern, `sigma_i` is drawn against `s = sigma_j` in
/// the first third, `sigma_j` against `sigma_i` in the middle third, and
/// `sigma_i` again in the last third. Averaging over those three heat-bath
/// draws gives `E[X | A] = t (1 - t^2) / 2` with `t = tanh(theta)`, for every
/// start `x`, so the expectation is `q` times that. It peaks at
/// `t = 1/sqrt(3)` and is not monotone in `theta`.
pub fn two_node_expected_statistic(theta: f64, window: f64) -> f64 {
    let t = libm::tanh(theta);
    window_event_probability(window) * t * (1.0 - t * t) / 2.0
}

/// No node of `N(i) \ {j}` updates during window `k`.
pub fn event_d(
    trace: &Trace,
    graph: &Graph,
    i: usize,
    j: usize,
    k: u64,
    window: f64,
) -> Result<bool> {
    if trace.mode() != TraceMode::Continuous {
        return Err(Error::NotContinuous);
    }
    if i >= graph.p() || i >= trace.p() {
        return Err(Error::NodeOutOfRange {
            node: i,
            p: trace.p(),
        });
    }
    let k_max = learner::window_count(trace.horizon(), window)?;
    if k == 0 || k > k_max {
        return Err(Error::WindowOutOfRange { k, k_max });
    }
    let w = learner::Window::new(k, window);
    Ok(graph
        .neighbors(i)
        .iter()
        .filter(|&&n| n != j)
        .all(|&n| trace.count_updates_in(n, w.start, w.end) == 0))
}

/// The clocks deciding A (`i`, `j`) and D (`N(i) \ {j}`) are disjoint.
pub fn clock_sets_disjoint(graph: &Graph, i: usize, j: usize) -> bool {
    graph
        .neighbors(i)
        .iter()
        .all(|&n| n == j || (n != i && n != j))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceCheck {
    pub p_a: f64,
    pub p_d: f64,
    pub p_ad: f64,
    pub stderr: f64,
    pub passes: bool,
}

/// Empirical test that `P(A and D) = P(A) P(D)` within four binomial
/// standard errors.
pub fn independence_ad_check(
    model: &IsingModel,
    i: usize,
    j: usize,
    window: f64,
    reps: u64,
    seed: RngSeed,
) -> Result<IndependenceCheck> {
    check_pair(model, i, j)?;
    if reps < 10_000 {
        return Err(Error::Precondition(format!(
            "need at least 10^4 repetitions, got {reps}"
        )));
    }
    let start = SpinConfig::all_plus(model.p());
    let (mut a, mut d, mut ad) = (0u64, 0u64, 0u64);
    for trace in one_window_traces(model, &start, window, reps, seed) {
        let ev_a = learner::event_a(&trace, i, j, 1, window)?;
        let ev_d = event_d(&trace, model.graph(), i, j, 1, window)?;
        a += u64::from(ev_a);
        d += u64::from(ev_d);
        ad += u64::from(ev_a && ev_d);
    }
    let n = reps as f64;
    let (p_a, p_d, p_ad) = (a as f64 / n, d as f64 / n, ad as f64 / n);
    let product = p_a * p_d;
    let stderr = math::sqrt(product * (1.0 - product) / n);
    Ok(IndependenceCheck {
        p_a,
        p_d,
        p_ad,
        stderr,
        passes: (p_ad - product).abs() <= 4.0 * stderr,
    })
}

/// How the runs of [`end_state_tv`] are started.
#[derive(Debug, Clone, PartialEq)]
pub enum StartState {
    /// Exact Gibbs draw.
    Stationary,
    Fixed(SpinConfig),
}

/// Total-variation distance between the empirical distribution of the
/// configuration after `t_burn` time units (over `n_runs` independent runs)
/// and the exact Gibbs distribution.
pub fn end_state_tv(
    model: &IsingModel,
    start: &StartState,
    t_burn: f64,
    n_runs: u64,
    seed: RngSeed,
) -> Result<f64> {
    guard(model.p(), 10)?;
    if !(t_burn >= 0.0 && t_burn.is_finite()) {
        return Err(Error::InvalidHorizon(t_burn));
    }
    if n_runs == 0 {
        return Err(Error::Precondition("need at least one run".into()));
    }
    let dist = exact_gibbs(model)?;
    let sampler = dist.sampler();
    let mut init_rng = seed.rng(Substream::Init);
    let mut clock = seed.rng(Substream::Clock);
    let mut coins = seed.rng(Substream::Spins);
    let mut counts = vec![0u64; 1 << model.p()];
    for _ in 0..n_runs {
        let mut config = match start {
            StartState::Stationary => sampler.sample(&mut init_rng),
            StartState::Fixed(c) => c.clone(),
        };
        drive_ct(model, &mut config, t_burn, &mut clock, &mut coins, |_| {});
        counts[config.to_index()] += 1;
    }
    let n = n_runs as f64;
    Ok(0.5
        * counts
            .iter()
            .zip(dist.probabilities())
            .map(|(&c, &pr)| (c as f64 / n - pr).abs())
            .sum::<f64>())
}

/// [`end_state_tv`] started from exact Gibbs draws.
pub fn stationarity_tv(model: &IsingModel, t_burn: f64, n_runs: u64, seed: RngSeed) -> Result<f64> {
    end_state_tv(model, &StartState::Stationary, t_burn, n_runs, seed)
}

/// Largest `|pi(s) P(s -> s') - pi(s') P(s' -> s)|` over all single-spin
/// moves of the discrete heat-bath chain.
pub fn detailed_balance_residual(model: &IsingModel) -> Result<f64> {
    let dist = exact_gibbs(model)?;
    let p = model.p();
    let pf = p as f64;
    let probs = dist.probabilities();
    let mut worst: f64 = 0.0;
    for idx in 0..1usize << p {
        let config = SpinConfig::from_index(idx, p);
        for i in 0..p {
            let other = idx ^ (1 << i);
            if other < idx {
                continue;
            }
            let mut flipped = config.clone();
            flipped.flip(i);
            let forward = if config.get(i) == 1 {
                model.update_prob_minus(&config, i)?
            } else {
                model.update_prob_plus(&config, i)?
            };
            let backward = if flipped.get(i) == 1 {
                model.update_prob_minus(&flipped, i)?
            } else {
                model.update_prob_plus(&flipped, i)?
            };
            let r = (probs[idx] * forward / pf - probs[other] * backward / pf).abs();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Frequency of the i-j-i window pattern over all complete windows of a
/// trace, next to its nominal probability `q`.
pub fn window_event_frequency(
    trace: &Trace,
    i: usize,
    j: usize,
    window: f64,
) -> Result<(f64, f64, u64)> {
    let k_max = learner::window_count(trace.horizon(), window)?;
    if k_max == 0 {
        return Err(Error::NoCompleteWindow {
            horizon: trace.horizon(),
            window,
        });
    }
    let mut hits = 0u64;
    for k in 1..=k_max {
        hits += u64::from(learner::event_a(trace, i, j, k, window)?);
    }
    Ok((
        hits as f64 / k_max as f64,
        window_event_probability(window),
        k_max,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;
    use crate::model::{Couplings, ParamBounds};
    use approx::assert_abs_diff_eq;

    fn edge_model(theta: f64) -> IsingModel {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        IsingModel::uniform(g, theta, ParamBounds::new(theta.abs(), theta.abs(), 1)).unwrap()
    }

    #[test]
    fn gibbs_single_free_spin() {
        let m = IsingModel::new(
            Graph::empty(1),
            Couplings::new(),
            ParamBounds::new(0.1, 1.0, 0),
        )
        .unwrap();
        let d = exact_gibbs(&m).unwrap();
        assert_eq!(d.probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn gibbs_two_spins() {
        let d = exact_gibbs(&edge_model(0.5)).unwrap();
        let pr = d.probabilities();
        assert_abs_diff_eq!(pr[0b11], 0.365529, epsilon = 1e-6);
        assert_abs_diff_eq!(pr[0b00], 0.365529, epsilon = 1e-6);
        assert_abs_diff_eq!(pr[0b01], 0.134471, epsilon = 1e-6);
        assert_abs_diff_eq!(d.partition_function(), 4.510504, epsilon = 1e-6);
    }

    #[test]
    fn gibbs_guard() {
        let m = IsingModel::new(
            Graph::empty(21),
            Couplings::new(),
            ParamBounds::new(0.1, 1.0, 0),
        )
        .unwrap();
        assert!(matches!(
            exact_gibbs(&m),
            Err(Error::TooLarge { nodes: 21, max: 20 })
        ));
    }

    #[test]
    fn conditionals_single_edge() {
        let c = exact_conditionals(&edge_model(0.5), 0, 1, &[]).unwrap();
        assert_abs_diff_eq!(c.p_plus, 0.7310586, epsilon = 1e-7);
        assert_abs_diff_eq!(c.p_minus, 0.2689414, epsilon = 1e-7);
        let r = edge_identity_residual(&edge_model(0.5), 0, 1, &[]).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn conditionals_non_edge_are_equal() {
        let g = graphs::path(3).unwrap();
        let m = IsingModel::uniform(g, 0.7, ParamBounds::new(0.5, 1.0, 2)).unwrap();
        for x in context_assignments(&m, 0, 2) {
            let c = exact_conditionals(&m, 0, 2, &x).unwrap();
            assert_eq!(c.p_plus, c.p_minus);
            assert_eq!(edge_identity_residual(&m, 0, 2, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn incomplete_assignment_is_rejected() {
        let g = graphs::path(3).unwrap();
        let m = IsingModel::uniform(g, 0.7, ParamBounds::new(0.5, 1.0, 2)).unwrap();
        assert!(matches!(
            exact_conditionals(&m, 1, 0, &[]),
            Err(Error::InvalidAssignment(_))
        ));
    }

    #[test]
    fn negative_coupling_with_extra_neighbor() {
        let g = graphs::path(3).unwrap();
        let mut c = Couplings::new();
        c.insert(0, 1, -0.3);
        c.insert(1, 2, 0.6);
        let m = IsingModel::new(g, c, ParamBounds::new(0.3, 0.6, 2)).unwrap();
        let xs: Vec<_> = context_assignments(&m, 1, 0).collect();
        assert_eq!(xs.len(), 2);
        for x in xs {
            assert!(edge_identity_residual(&m, 1, 0, &x).unwrap() < 1e-10);
            let sq = squeeze_check(&m, 1, 0, &x).unwrap();
            assert!(sq.holds);
        }
    }

    #[test]
    fn ratio_bounds_examples() {
        let eq = ratio_bounds(0.3, 0.3).unwrap();
        assert_eq!(
            (eq.lower, eq.middle, eq.upper, eq.holds),
            (0.0, 0.0, 0.0, true)
        );
        let c = ratio_bounds(0.25, 0.5).unwrap();
        assert_abs_diff_eq!(c.lower, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.middle, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.upper, 4.0, epsilon = 1e-15);
        assert!(c.holds);
        assert!(ratio_bounds(0.6, 0.7).is_err());
        assert!(ratio_bounds(0.4, 0.3).is_err());
    }

    #[test]
    fn squeeze_examples() {
        let pos = squeeze_check(&edge_model(0.5), 0, 1, &[]).unwrap();
        assert!(pos.holds && pos.lower < pos.middle && pos.middle < pos.upper);
        let m = edge_model(-0.5);
        let c = exact_conditionals(&m, 0, 1, &[]).unwrap();
        assert!(c.p_plus < c.p_minus);
        assert!(squeeze_check(&m, 0, 1, &[]).unwrap().holds);
        let g = graphs::path(3).unwrap();
        let path = IsingModel::uniform(g, 0.5, ParamBounds::new(0.5, 0.5, 2)).unwrap();
        assert!(matches!(
            squeeze_check(&path, 0, 2, &[(1, 1)]),
            Err(Error::NotAnEdge { .. })
        ));
    }

    #[test]
    fn table_route_matches_closed_form() {
        let g = graphs::cycle(5).unwrap();
        let mut c = Couplings::new();
        for (n, &(i, j)) in g.edges().iter().enumerate() {
            c.insert(i, j, if n % 2 == 0 { 0.8 } else { -0.4 });
        }
        let m = IsingModel::new(g, c, ParamBounds::new(0.4, 0.8, 2)).unwrap();
        let dist = exact_gibbs(&m).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                for x in context_assignments(&m, i, j) {
                    let a = exact_conditionals(&m, i, j, &x).unwrap();
                    let b = conditionals_from_table(&dist, &m, i, j, &x).unwrap();
                    assert_abs_diff_eq!(a.p_plus, b.p_plus, epsilon = 1e-12);
                    assert_abs_diff_eq!(a.p_minus, b.p_minus, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn detailed_balance_small_models() {
        let g = graphs::cycle(5).unwrap();
        let m = IsingModel::uniform(g, -0.9, ParamBounds::new(0.5, 1.0, 2)).unwrap();
        assert!(detailed_balance_residual(&m).unwrap() < 1e-12);
    }

    #[test]
    fn event_d_isolated_and_neighbor() {
        let g = graphs::path(3).unwrap();
        let events = vec![crate::sim::UpdateEvent {
            time: 0.5,
            node: 2,
            spin: 1,
        }];
        let t =
            Trace::from_parts(TraceMode::Continuous, SpinConfig::all_plus(3), events, 1.0).unwrap();
        // node 0's only neighbor is 1, and j = 1 is excluded
        assert!(event_d(&t, &g, 0, 1, 1, 1.0).unwrap());
        // node 1 has neighbor 2 updating at the midpoint
        assert!(!event_d(&t, &g, 1, 0, 1, 1.0).unwrap());
        assert!(event_d(&t, &Graph::empty(3), 1, 0, 1, 1.0).unwrap());
        assert!(clock_sets_disjoint(&g, 1, 0));
    }

    #[test]
    fn independence_two_nodes_is_exact() {
        let m = edge_model(0.5);
        let c = independence_ad_check(&m, 0, 1, 1.0, 10_000, RngSeed::new(2)).unwrap();
        assert_eq!(c.p_d, 1.0);
        assert_eq!(c.p_ad, c.p_a);
        assert!(c.passes);
    }

    #[test]
    fn tv_without_evolution_is_sampling_error() {
        let g = graphs::cycle(4).unwrap();
        let m = IsingModel::uniform(g, 0.5, ParamBounds::new(0.5, 0.5, 2)).unwrap();
        let tv = stationarity_tv(&m, 0.0, 100_000, RngSeed::new(8)).unwrap();
        assert!(tv <= 0.02, "{tv}");
    }

    #[test]
    fn free_spins_mix_from_all_plus() {
        let m = IsingModel::new(
            Graph::empty(4),
            Couplings::new(),
            ParamBounds::new(0.1, 1.0, 0),
        )
        .unwrap();
        let tv = end_state_tv(
            &m,
            &StartState::Fixed(SpinConfig::all_plus(4)),
            50.0,
            100_000,
            RngSeed::new(1),
        )
        .unwrap();
        assert!(tv <= 0.02, "{tv}");
    }

    #[test]
    fn two_node_expectation_matches_monte_carlo() {
        for theta in [0.5, -1.0] {
            let m = edge_model(theta);
            let x = SpinConfig::new(vec![1, -1]).unwrap();
            let e = mc_expected_statistic(&m, &x, 0, 1, 1.0, 1_000_000, RngSeed::new(3)).unwrap();
            let exact = two_node_expected_statistic(theta, 1.0);
            assert!(
                (e.mean - exact).abs() <= 4.0 * e.stderr,
                "{theta}: {e:?} vs {exact}"
            );
        }
        // Peak near theta = 0.66: 0.5 beats both 0.2 and 1.0.
        let at = |t| two_node_expected_statistic(t, 1.0);
        assert!(at(0.5) > at(0.2) && at(0.5) > at(1.0));
    }

    #[test]
    fn envelope_star_non_edge_and_free_pair() {
        let star = Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let m = IsingModel::uniform(star, 1.0, ParamBounds::new(1.0, 1.0, 4)).unwrap();
        let c = signal_envelope_check(
            &m,
            &SpinConfig::all_plus(5),
            1,
            2,
            0.1,
            1_000_000,
            RngSeed::new(4),
        )
        .unwrap();
        assert!(!c.is_edge && c.holds, "{c:?}");
        let free = IsingModel::new(
            Graph::empty(2),
            Couplings::new(),
            ParamBounds::new(1.0, 1.0, 1),
        )
        .unwrap();
        let e = mc_expected_statistic(
            &free,
            &SpinConfig::all_plus(2),
            0,
            1,
            1.0,
            100_000,
            RngSeed::new(5),
        )
        .unwrap();
        assert!(e.mean.abs() <= 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn multi_pair_estimates_share_windows() {
        let m = edge_model(0.7);
        let x = SpinConfig::all_plus(2);
        let both =
            mc_expected_statistics(&m, &x, &[(0, 1), (1, 0)], 1.0, 2000, RngSeed::new(6)).unwrap();
        let one = mc_expected_statistic(&m, &x, 1, 0, 1.0, 2000, RngSeed::new(6)).unwrap();
        assert_eq!(both[1], one);
        assert!(mc_expected_statistic(&m, &x, 0, 1, 1.0, 999, RngSeed::new(6)).is_err());
    }
}
