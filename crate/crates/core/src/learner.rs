//! Structure learning from a continuous-time trace.
//!
//! Time is cut into windows `[(k-1)L, kL)`, `k = 1..=k_max` with
//! `k_max = floor(T / L)`, each split into three half-open thirds. For an
//! ordered pair `(i, j)` a window is informative when node `i` updates in the
//! first and last thirds, node `j` updates only in the middle third, and
//! `j`'s spin actually changed across the middle third. The window statistic
//! then records whether `i`'s spin moved with or against `j`'s change; its
//! mean over all windows is compared against a threshold `tau`.
//!
//! Two implementations are provided. [`event_a`], [`event_b`] and
//! [`edge_statistic`] evaluate one window directly from the trace and are the
//! reference. [`WindowIndex`] precomputes, per node, the few windows in which
//! the node has the right third-occupancy pattern, so a pair is scored by
//! merging two short sorted lists.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{Graph, Spin};
use crate::sim::{Trace, TraceMode};

/// `q = [(1 - e^{-L/3}) e^{-L/3}]^3`, the probability of the i-j-i update
/// pattern in one window.
pub fn window_event_probability(window: f64) -> f64 {
    let third = window / 3.0;
    let hit = -math::expm1(-third);
    let miss = math::exp(-third);
    let one = hit * miss;
    one * one * one
}

/// Lower bound on `sign(theta_ij) E X_ij` for an edge:
/// `2q(|theta| * factor * e^{-10 d beta} e^{-L d} - L d)`. The published
/// statement uses `factor = 1/4`; `1/16` is the constant carried through
/// the intermediate derivation.
pub fn edge_signal_lower_bound(
    theta_abs: f64,
    d: usize,
    beta: f64,
    window: f64,
    factor: f64,
) -> f64 {
    let q = window_event_probability(window);
    let d = d as f64;
    2.0 * q
        * (theta_abs * factor * math::exp(-10.0 * d * beta) * math::exp(-window * d) - window * d)
}

/// Upper bound `2 q L d` on `|E X_ij|` for a non-edge.
pub fn nonedge_upper_bound(d: usize, window: f64) -> f64 {
    2.0 * window_event_probability(window) * window * d as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerParams {
    /// Window length `L`.
    pub window: f64,
    /// Decision threshold `tau` on `|mean X_ij|`.
    pub threshold: f64,
    /// Total observation time `T`.
    pub horizon: f64,
    /// Window-event probability for `window`.
    pub q: f64,
    /// `floor(T / L)`.
    pub k_max: u64,
}

fn check_theory_inputs(p: usize, d: usize, alpha: f64, beta: f64) -> Result<()> {
    if p < 2 || d < 1 || !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::Precondition(alloc::format!(
            "theory parameters need p >= 2, d >= 1, 0 < alpha <= beta (p = {p}, d = {d}, alpha = {alpha}, beta = {beta})"
        )));
    }
    Ok(())
}

/// `L = alpha/(16d) e^{-10 d beta}`, evaluated in log space.
pub fn theory_window(d: usize, alpha: f64, beta: f64) -> Result<f64> {
    check_theory_inputs(2, d, alpha, beta)?;
    let df = d as f64;
    let ln_window = math::ln(alpha) - math::ln(16.0 * df) - 10.0 * df * beta;
    if ln_window < math::ln(1e-300) {
        return Err(Error::ParamUnderflow("window length L"));
    }
    Ok(math::exp(ln_window))
}

/// `T = 10^6 e^{20 d beta} / alpha^2 * ln p`.
pub fn theory_horizon(p: usize, d: usize, alpha: f64, beta: f64) -> Result<f64> {
    check_theory_inputs(p, d, alpha, beta)?;
    let ln_scale = math::ln(1e6) + 20.0 * d as f64 * beta - 2.0 * math::ln(alpha);
    let horizon = math::exp(ln_scale) * math::ln(p as f64);
    if !horizon.is_finite() {
        return Err(Error::ParamOverflow("observation time T"));
    }
    Ok(horizon)
}

/// `tau = 3 L d q` for window length `L`.
pub fn theory_threshold(d: usize, window: f64) -> Result<f64> {
    let q = window_event_probability(window);
    if !(q >= f64::MIN_POSITIVE) {
        return Err(Error::ParamUnderflow("window-event probability q"));
    }
    let threshold = 3.0 * window * d as f64 * q;
    if !(threshold >= f64::MIN_POSITIVE) {
        return Err(Error::ParamUnderflow("threshold tau"));
    }
    Ok(threshold)
}

/// Parameters with the constants that carry the recovery guarantee:
/// [`theory_window`], [`theory_threshold`] and [`theory_horizon`].
pub fn theory_params(p: usize, d: usize, alpha: f64, beta: f64) -> Result<LearnerParams> {
    check_theory_inputs(p, d, alpha, beta)?;
    let window = theory_window(d, alpha, beta)?;
    let threshold = theory_threshold(d, window)?;
    let horizon = theory_horizon(p, d, alpha, beta)?;
    let k_max = window_count(horizon, window)?;
    Ok(LearnerParams {
        window,
        threshold,
        horizon,
        q: window_event_probability(window),
        k_max,
    })
}

/// Default threshold for user-chosen `L`: half the edge-signal lower bound
/// when that bound is positive, otherwise `3 L d q`.
pub fn practical_threshold(d: usize, alpha: f64, beta: f64, window: f64) -> f64 {
    let half_signal = 0.5 * edge_signal_lower_bound(alpha, d, beta, window, 0.25);
    if half_signal > 0.0 {
        half_signal
    } else {
        3.0 * window * d as f64 * window_event_probability(window)
    }
}

/// Threshold from a normal approximation to a non-edge mean. A window value
/// is nonzero with probability `rate` (at most `q`), so `Var X <= 4 rate`;
/// every one of the `p(p-1)/2` pair means then stays below
/// `z * 2 sqrt(rate / k_max)` with probability about `1 - delta`, where `z`
/// is the upper `delta / p(p-1)` normal quantile (two-sided union bound).
pub fn clt_threshold(p: usize, rate: f64, k_max: u64, delta: f64) -> Result<f64> {
    if k_max == 0 {
        return Err(Error::Precondition(
            "need at least one complete window".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(alloc::format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Precondition(alloc::format!(
            "rate must lie in [0, 1], got {rate}"
        )));
    }
    let pairs = (p * p.saturating_sub(1) / 2).max(1) as f64;
    let z = math::normal_upper_quantile(delta / (2.0 * pairs));
    Ok(2.0 * z * math::sqrt(rate / k_max as f64))
}

/// Parameters with user-supplied `L` and `T`; `tau` defaults to
/// [`practical_threshold`].
pub fn practical_params(
    d: usize,
    alpha: f64,
    beta: f64,
    window: f64,
    horizon: f64,
    threshold: Option<f64>,
) -> Result<LearnerParams> {
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "window length must be positive, got {window}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidHorizon(horizon));
    }
    let threshold = threshold.unwrap_or_else(|| practical_threshold(d, alpha, beta, window));
    if !(threshold > 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let k_max = window_count(horizon, window)?;
    Ok(LearnerParams {
        window,
        threshold,
        horizon,
        q: window_event_probability(window),
        k_max,
    })
}

/// Largest `k` with `k * window <= horizon`, allowing a few ulps of
/// rounding so that e.g. `0.3 / 0.1` gives 3.
pub fn window_count(horizon: f64, window: f64) -> Result<u64> {
    let ratio = math::floor(horizon / window);
    if !(ratio < 9.0e18) {
        return Err(Error::ParamOverflow("window count k_max"));
    }
    let limit = horizon * (1.0 + 4.0 * f64::EPSILON);
    let mut k = ratio.max(0.0) as u64;
    while k > 0 && k as f64 * window > limit {
        k -= 1;
    }
    while (k + 1) as f64 * window <= limit {
        k += 1;
    }
    Ok(k)
}

/// Boundaries of window `k` (1-based) and its thirds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub first_end: f64,
    pub second_end: f64,
    pub end: f64,
}

impl Window {
    pub fn new(k: u64, length: f64) -> Self {
        let start = (k - 1) as f64 * length;
        Window {
            start,
            first_end: start + length / 3.0,
            second_end: start + 2.0 * length / 3.0,
            end: k as f64 * length,
        }
    }

    /// Which third (0, 1, 2) a time inside the window falls into.
    #[inline]
    pub fn third(&self, t: f64) -> usize {
        if t < self.first_end {
            0
        } else if t < self.second_end {
            1
        } else {
            2
        }
    }
}

fn checked_window(trace: &Trace, k: u64, length: f64) -> Result<Window> {
    if trace.mode() != TraceMode::Continuous {
        return Err(Error::NotContinuous);
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "window length must be positive, got {length}"
        )));
    }
    let k_max = window_count(trace.horizon(), length)?;
    if k == 0 || k > k_max {
        return Err(Error::WindowOutOfRange { k, k_max });
    }
    Ok(Window::new(k, length))
}

fn check_pair(trace: &Trace, i: usize, j: usize) -> Result<()> {
    for node in [i, j] {
        if node >= trace.p() {
            return Err(Error::NodeOutOfRange { node, p: trace.p() });
        }
    }
    if i == j {
        return Err(Error::SameNode(i));
    }
    Ok(())
}

fn counts_by_third(trace: &Trace, node: usize, w: &Window) -> [usize; 3] {
    [
        trace.count_updates_in(node, w.start, w.first_end),
        trace.count_updates_in(node, w.first_end, w.second_end),
        trace.count_updates_in(node, w.second_end, w.end),
    ]
}

/// Window `k` shows the pattern: `i` but not `j` in the first third, `j` but
/// not `i` in the middle third, `i` but not `j` in the last third.
pub fn event_a(trace: &Trace, i: usize, j: usize, k: u64, length: f64) -> Result<bool> {
    check_pair(trace, i, j)?;
    let w = checked_window(trace, k, length)?;
    let ci = counts_by_third(trace, i, &w);
    let cj = counts_by_third(trace, j, &w);
    Ok(ci[0] > 0 && cj[0] == 0 && cj[1] > 0 && ci[1] == 0 && ci[2] > 0 && cj[2] == 0)
}

/// Node `j`'s spin differs between one third and two thirds into window `k`.
pub fn event_b(trace: &Trace, j: usize, k: u64, length: f64) -> Result<bool> {
    if j >= trace.p() {
        return Err(Error::NodeOutOfRange {
            node: j,
            p: trace.p(),
        });
    }
    let w = checked_window(trace, k, length)?;
    Ok(trace.spin_at(j, w.first_end) != trace.spin_at(j, w.second_end))
}

/// The window statistic `X_ij^(k)` in {-2, 0, +2}: zero unless both
/// [`event_a`] and [`event_b`] hold, otherwise
/// `(-1)^[sigma_j = +1] * (sigma_i' - sigma_i)` with `sigma_j`, `sigma_i`
/// read one third into the window and `sigma_i'` the left limit at its end.
///
/// The orientation makes `E X_ij = 2 (p+ - p-) P(C | D)` on the event that no
/// other neighbor of `i` moves, so the mean has the sign of `theta_ij`. The
/// commonly printed form `(sigma_i - sigma_i')` has the opposite sign; since
/// the learner thresholds `|mean|` the recovered edge set is the same.
pub fn edge_statistic(trace: &Trace, i: usize, j: usize, k: u64, length: f64) -> Result<i8> {
    if !event_a(trace, i, j, k, length)? || !event_b(trace, j, k, length)? {
        return Ok(0);
    }
    let w = Window::new(k, length);
    let sign: i8 = if trace.spin_at(j, w.first_end) == 1 {
        -1
    } else {
        1
    };
    Ok(sign * (trace.spin_before(i, w.end) - trace.spin_at(i, w.first_end)))
}

// Window where the node updates in the outer thirds only.
#[derive(Debug, Clone, Copy)]
struct OuterRec {
    k0: u64,
    at_first: Spin,
    before_end: Spin,
}

// Window where the node updates in the middle third only.
#[derive(Debug, Clone, Copy)]
struct MiddleRec {
    k0: u64,
    at_first: Spin,
    at_second: Spin,
}

const FIRST: u8 = 0b001;
const MIDDLE: u8 = 0b010;
const LAST: u8 = 0b100;

fn node_records(
    trace: &Trace,
    node: usize,
    length: f64,
    k_max: u64,
) -> (Vec<OuterRec>, Vec<MiddleRec>) {
    let mut outer = Vec::new();
    let mut middle = Vec::new();
    let mut before = trace.initial().get(node);
    let mut events = trace.node_events(node).peekable();
    while let Some(first) = events.next() {
        let mut k0 = math::floor(first.time / length) as u64;
        while k0 > 0 && first.time < k0 as f64 * length {
            k0 -= 1;
        }
        while first.time >= (k0 + 1) as f64 * length {
            k0 += 1;
        }
        if k0 >= k_max {
            break;
        }
        let w = Window::new(k0 + 1, length);
        let mut mask = 0u8;
        let mut at_first = before;
        let mut at_second = before;
        let mut current;
        let mut ev = first;
        loop {
            mask |= 1 << w.third(ev.time);
            current = ev.spin;
            if ev.time <= w.first_end {
                at_first = current;
            }
            if ev.time <= w.second_end {
                at_second = current;
            }
            match events.peek() {
                Some(next) if next.time < w.end => ev = events.next().unwrap(),
                _ => break,
            }
        }
        if mask == FIRST | LAST {
            outer.push(OuterRec {
                k0,
                at_first,
                before_end: current,
            });
        } else if mask == MIDDLE {
            middle.push(MiddleRec {
                k0,
                at_first,
                at_second,
            });
        }
        before = current;
    }
    (outer, middle)
}

// Sum of X_ij over all windows plus the number of windows where C_ij held.
fn merge_pair(
    outer: &[OuterRec],
    middle: &[MiddleRec],
    mut visit: impl FnMut(u64, i8),
) -> (i64, u64) {
    let (mut a, mut b) = (0, 0);
    let mut sum = 0i64;
    let mut with_c = 0u64;
    while a < outer.len() && b < middle.len() {
        let (o, m) = (&outer[a], &middle[b]);
        match o.k0.cmp(&m.k0) {
            core::cmp::Ordering::Less => a += 1,
            core::cmp::Ordering::Greater => b += 1,
            core::cmp::Ordering::Equal => {
                if m.at_first != m.at_second {
                    with_c += 1;
                    let sign: i8 = if m.at_first == 1 { -1 } else { 1 };
                    let x = sign * (o.before_end - o.at_first);
                    sum += i64::from(x);
                    visit(o.k0 + 1, x);
                }
                a += 1;
                b += 1;
            }
        }
    }
    (sum, with_c)
}

/// Per-window values of `X_ij` for one ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStatistic {
    pub i: usize,
    pub j: usize,
    /// Nonzero window values as `(k, X_ij^(k))`, `k` 1-based; all other
    /// windows contribute zero.
    pub nonzero: Vec<(u64, i8)>,
    pub mean: f64,
    pub windows_with_c: u64,
    pub k_max: u64,
}

/// Precomputed per-node window summaries for scoring every pair of a trace.
#[derive(Debug, Clone)]
pub struct WindowIndex {
    window: f64,
    k_max: u64,
    outer: Vec<Vec<OuterRec>>,
    middle: Vec<Vec<MiddleRec>>,
}

impl WindowIndex {
    /// `k_max` is recomputed from the trace horizon; the trailing partial
    /// window is discarded.
    pub fn build(trace: &Trace, window: f64) -> Result<Self> {
        let k_max = Self::k_max_for(trace, window)?;
        let (outer, middle) = (0..trace.p())
            .map(|node| node_records(trace, node, window, k_max))
            .unzip();
        Ok(WindowIndex {
            window,
            k_max,
            outer,
            middle,
        })
    }

    fn k_max_for(trace: &Trace, window: f64) -> Result<u64> {
        if trace.mode() != TraceMode::Continuous {
            return Err(Error::NotContinuous);
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::Precondition(alloc::format!(
                "window length must be positive, got {window}"
            )));
        }
        let k_max = window_count(trace.horizon(), window)?;
        if k_max == 0 {
            return Err(Error::NoCompleteWindow {
                horizon: trace.horizon(),
                window,
            });
        }
        Ok(k_max)
    }

    pub fn p(&self) -> usize {
        self.outer.len()
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// Mean of `X_ij` over all `k_max` windows (ordered pair: `i` responds
    /// to `j`).
    pub fn pair_mean(&self, i: usize, j: usize) -> f64 {
        let (sum, _) = merge_pair(&self.outer[i], &self.middle[j], |_, _| {});
        sum as f64 / self.k_max as f64
    }

    pub fn pair_statistic(&self, i: usize, j: usize) -> PairStatistic {
        let mut nonzero = Vec::new();
        let (sum, windows_with_c) = merge_pair(&self.outer[i], &self.middle[j], |k, x| {
            if x != 0 {
                nonzero.push((k, x));
            }
        });
        PairStatistic {
            i,
            j,
            nonzero,
            mean: sum as f64 / self.k_max as f64,
            windows_with_c,
            k_max: self.k_max,
        }
    }

    /// Fraction of windows with a nonzero `X_ij`, averaged over pairs
    /// `i < j`.
    pub fn nonzero_rate(&self) -> f64 {
        let p = self.p();
        if p < 2 {
            return 0.0;
        }
        let mut nonzero = 0u64;
        for i in 0..p {
            for j in i + 1..p {
                merge_pair(&self.outer[i], &self.middle[j], |_, x| {
                    nonzero += u64::from(x != 0)
                });
            }
        }
        let pairs = (p * (p - 1) / 2) as f64;
        nonzero as f64 / (pairs * self.k_max as f64)
    }

    /// [`clt_threshold`] with the nonzero rate measured on this trace.
    pub fn calibrated_threshold(&self, delta: f64) -> Result<f64> {
        clt_threshold(self.p(), self.nonzero_rate(), self.k_max, delta)
    }

    /// Decision score for the unordered pair `i < j`: `|mean X_ij|`, or
    /// `max(|mean X_ij|, |mean X_ji|)` when symmetrized.
    pub fn score(&self, i: usize, j: usize, symmetrize: bool) -> f64 {
        let forward = self.pair_mean(i, j).abs();
        if symmetrize {
            forward.max(self.pair_mean(j, i).abs())
        } else {
            forward
        }
    }
}

/// `(1 / k_max) sum_k X_ij^(k)` for `i < j`, touching only the events of the
/// two nodes.
pub fn pair_mean(trace: &Trace, i: usize, j: usize, params: &LearnerParams) -> Result<f64> {
    check_pair(trace, i, j)?;
    if i > j {
        return Err(Error::Precondition(alloc::format!(
            "pair_mean expects i < j, got ({i}, {j})"
        )));
    }
    let k_max = WindowIndex::k_max_for(trace, params.window)?;
    let (outer, _) = node_records(trace, i, params.window, k_max);
    let (_, middle) = node_records(trace, j, params.window, k_max);
    let (sum, _) = merge_pair(&outer, &middle, |_, _| {});
    Ok(sum as f64 / k_max as f64)
}

/// Set of unordered pairs, stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeSet(BTreeSet<(usize, usize)>);

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        assert_ne!(i, j, "edge endpoints must differ");
        self.0.insert((i.min(j), i.max(j)))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.0.contains(&(i.min(j), i.max(j)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn from_graph(graph: &Graph) -> Self {
        graph.edges().iter().copied().collect()
    }

    /// `(false positives, false negatives)` against the true edge set.
    pub fn errors_against(&self, truth: &EdgeSet) -> (usize, usize) {
        let fp = self.0.difference(&truth.0).count();
        let fneg = truth.0.difference(&self.0).count();
        (fp, fneg)
    }
}

impl FromIterator<(usize, usize)> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        let mut set = EdgeSet::new();
        for (i, j) in iter {
            set.insert(i, j);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnOptions {
    /// Also score the reversed pair and keep the larger magnitude.
    pub symmetrize: bool,
}

/// Thresholded structure estimate: `{i, j}` is reported when
/// `|mean X_ij| >= tau` (ties included).
pub fn glauber_learn(trace: &Trace, params: &LearnerParams) -> Result<EdgeSet> {
    glauber_learn_with(trace, params, LearnOptions::default())
}

pub fn glauber_learn_with(
    trace: &Trace,
    params: &LearnerParams,
    options: LearnOptions,
) -> Result<EdgeSet> {
    if trace.p() < 2 {
        return Err(Error::Precondition(
            "learning needs at least two nodes".into(),
        ));
    }
    let index = WindowIndex::build(trace, params.window)?;
    Ok(learn_from_index(&index, params.threshold, options))
}

pub fn learn_from_index(index: &WindowIndex, threshold: f64, options: LearnOptions) -> EdgeSet {
    let p = index.p();
    let mut edges = EdgeSet::new();
    for i in 0..p {
        for j in i + 1..p {
            if index.score(i, j, options.symmetrize) >= threshold {
                edges.insert(i, j);
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinConfig;
    use crate::sim::UpdateEvent;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn ev(time: f64, node: u32, spin: Spin) -> UpdateEvent {
        UpdateEvent { time, node, spin }
    }

    fn trace(init: Vec<Spin>, events: Vec<UpdateEvent>, horizon: f64) -> Trace {
        Trace::from_parts(
            TraceMode::Continuous,
            SpinConfig::new(init).unwrap(),
            events,
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn theory_params_examples() {
        let params = theory_params(100, 2, 0.2, 0.2).unwrap();
        assert_relative_eq!(params.window, 1.1447e-4, max_relative = 1e-4);
        assert_relative_eq!(params.horizon, 3.432e11, max_relative = 1e-3);
        assert_relative_eq!(
            params.threshold / params.q,
            3.0 * params.window * 2.0,
            max_relative = 1e-12
        );
        assert_eq!(
            params.k_max,
            window_count(params.horizon, params.window).unwrap()
        );
    }

    #[test]
    fn theory_params_underflow_is_reported() {
        match theory_params(10, 20, 0.5, 5.0) {
            Err(Error::ParamUnderflow(what)) => assert!(what.contains('L')),
            other => panic!("expected underflow, got {other:?}"),
        }
        assert!(theory_params(1, 2, 0.2, 0.2).is_err());
        assert!(theory_params(10, 2, 0.3, 0.2).is_err());
    }

    #[test]
    fn window_event_probability_matches_direct_formula() {
        for &l in &[0.01, 0.3, 1.0, 3.0] {
            let direct = ((1.0 - math::exp(-l / 3.0)) * math::exp(-l / 3.0)).powi(3);
            assert_relative_eq!(window_event_probability(l), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn window_count_handles_boundaries() {
        assert_eq!(window_count(3.0, 1.0).unwrap(), 3);
        assert_eq!(window_count(2.999, 1.0).unwrap(), 2);
        assert_eq!(window_count(0.5, 1.0).unwrap(), 0);
        assert_eq!(window_count(0.3, 0.1).unwrap(), 3);
    }

    #[test]
    fn event_a_examples() {
        let empty = trace(vec![1, 1], vec![], 1.0);
        assert!(!event_a(&empty, 0, 1, 1, 1.0).unwrap());

        let pattern = vec![ev(0.1, 0, 1), ev(0.5, 1, -1), ev(0.9, 0, 1)];
        let t = trace(vec![1, 1], pattern.clone(), 1.0);
        assert!(event_a(&t, 0, 1, 1, 1.0).unwrap());

        let mut spoiled = vec![ev(0.05, 1, 1)];
        spoiled.extend(pattern);
        let t = trace(vec![1, 1], spoiled, 1.0);
        assert!(!event_a(&t, 0, 1, 1, 1.0).unwrap());

        assert!(matches!(
            event_a(&empty, 0, 1, 2, 1.0),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(matches!(
            event_a(&empty, 0, 0, 1, 1.0),
            Err(Error::SameNode(0))
        ));
    }

    #[test]
    fn event_b_examples() {
        let quiet = trace(vec![1, 1], vec![ev(0.1, 0, -1)], 1.0);
        assert!(!event_b(&quiet, 1, 1, 1.0).unwrap());
        let flip = trace(vec![1, 1], vec![ev(0.5, 1, -1)], 1.0);
        assert!(event_b(&flip, 1, 1, 1.0).unwrap());
        let back = trace(vec![1, 1], vec![ev(0.4, 1, -1), ev(0.6, 1, 1)], 1.0);
        assert!(!event_b(&back, 1, 1, 1.0).unwrap());
    }

    #[test]
    fn edge_statistic_examples() {
        // C fails: j never flips
        let no_c = trace(
            vec![1, 1],
            vec![ev(0.1, 0, 1), ev(0.5, 1, 1), ev(0.9, 0, -1)],
            1.0,
        );
        assert_eq!(edge_statistic(&no_c, 0, 1, 1, 1.0).unwrap(), 0);

        // sigma_j(L/3) = +1, sigma_i(L/3) = +1, sigma_i(end) = -1: i follows j -> +2
        let follows = trace(
            vec![1, 1],
            vec![ev(0.1, 0, 1), ev(0.5, 1, -1), ev(0.9, 0, -1)],
            1.0,
        );
        assert_eq!(edge_statistic(&follows, 0, 1, 1, 1.0).unwrap(), 2);

        // i ends where it started -> 0
        let flat = trace(
            vec![1, 1],
            vec![ev(0.1, 0, 1), ev(0.5, 1, -1), ev(0.9, 0, 1)],
            1.0,
        );
        assert_eq!(edge_statistic(&flat, 0, 1, 1, 1.0).unwrap(), 0);

        // i moves against j -> -2
        let opposes = trace(
            vec![1, -1],
            vec![ev(0.1, 0, 1), ev(0.5, 1, 1), ev(0.9, 0, -1)],
            1.0,
        );
        assert_eq!(edge_statistic(&opposes, 0, 1, 1, 1.0).unwrap(), -2);
    }

    #[test]
    fn index_agrees_with_reference_on_hand_trace() {
        let events = vec![
            ev(0.1, 0, 1),
            ev(0.5, 1, -1),
            ev(0.9, 0, -1),
            ev(1.2, 0, -1),
            ev(1.5, 1, 1),
            ev(1.8, 0, 1),
            ev(2.5, 2, 1),
        ];
        let t = trace(vec![1, 1, 1], events, 3.0);
        let index = WindowIndex::build(&t, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let reference: i64 = (1..=3)
                    .map(|k| i64::from(edge_statistic(&t, i, j, k, 1.0).unwrap()))
                    .sum();
                assert_relative_eq!(index.pair_mean(i, j), reference as f64 / 3.0);
            }
        }
        let stat = index.pair_statistic(0, 1);
        assert_eq!(stat.nonzero, vec![(1, 2), (2, 2)]);
        assert_eq!(stat.windows_with_c, 2);
    }

    #[test]
    fn learner_rejects_short_trace() {
        let t = trace(vec![1, 1], vec![], 0.5);
        let params = practical_params(1, 0.5, 0.5, 1.0, 0.5, Some(0.01)).unwrap();
        assert!(matches!(
            glauber_learn(&t, &params),
            Err(Error::NoCompleteWindow { .. })
        ));
    }

    #[test]
    fn single_window_without_events_learns_nothing() {
        let t = trace(vec![1, 1, 1], vec![], 1.0);
        let params = practical_params(2, 0.5, 0.5, 1.0, 1.0, None).unwrap();
        assert!(glauber_learn(&t, &params).unwrap().is_empty());
        assert_eq!(pair_mean(&t, 0, 1, &params).unwrap(), 0.0);
    }

    #[test]
    fn edge_set_errors() {
        let truth: EdgeSet = [(0, 1), (1, 2)].into_iter().collect();
        let est: EdgeSet = [(1, 0), (0, 2)].into_iter().collect();
        assert_eq!(est.errors_against(&truth), (1, 1));
        assert_eq!(est.iter().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    }

    /// Sign and spread of the two-node pair mean over 100 seeds at
    /// `L = 1`, `T = 2e4`.
    fn two_node_means(theta: f64) -> Vec<f64> {
        use crate::{graphs, simulate_ct, IsingModel, ParamBounds, RngSeed};
        let graph = if theta == 0.0 {
            Graph::empty(2)
        } else {
            graphs::single_edge(2).unwrap()
        };
        let bounds = ParamBounds::new(theta.abs().max(1.0), theta.abs().max(1.0), 1);
        let model = IsingModel::uniform(graph, theta, bounds).unwrap();
        (0..100)
            .map(|s| {
                let trace =
                    simulate_ct(&model, &SpinConfig::all_plus(2), 2e4, RngSeed::new(s)).unwrap();
                WindowIndex::build(&trace, 1.0).unwrap().pair_mean(0, 1)
            })
            .collect()
    }

    #[test]
    fn two_node_edge_mean_is_positive() {
        let positive = two_node_means(1.0).iter().filter(|&&m| m > 0.0).count();
        assert!(positive >= 99, "{positive} of 100 seeds positive");
    }

    #[test]
    fn two_node_free_mean_stays_in_band() {
        let q = window_event_probability(1.0);
        // Three standard deviations with variance at most 4q per window.
        let band = 3.0 * 2.0 * math::sqrt(q) / math::sqrt(2e4);
        let inside = two_node_means(0.0)
            .iter()
            .filter(|&&m| m.abs() <= band)
            .count();
        assert!(inside >= 99, "{inside} of 100 seeds inside {band}");
    }
}
