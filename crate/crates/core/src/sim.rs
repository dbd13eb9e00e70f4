//! Glauber dynamics traces.
//!
//! A [`Trace`] stores the initial configuration and the time-ordered list of
//! update events. Every event is a resampling of one node from its heat-bath
//! conditional; the new spin may equal the old one. Configurations at any
//! time are reconstructed on demand, and a per-node index of event positions
//! supports `O(log n)` lookups of a single node's history.
//!
//! Continuous time is driven by one global exponential clock of rate `p`
//! plus a uniform node pick, which has the same law as `p` independent
//! rate-one Poisson clocks.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{IsingModel, Spin, SpinConfig};
use crate::rng::{RngSeed, Substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Rate-one Poisson clocks per node; times are reals in `[0, T]`.
    Continuous,
    /// Heat-bath chain; times are integer step indices `2..=n`.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEvent {
    pub time: f64,
    pub node: u32,
    pub spin: Spin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    p: usize,
    mode: TraceMode,
    initial: SpinConfig,
    events: Vec<UpdateEvent>,
    horizon: f64,
    per_node: Vec<Vec<u32>>,
}

impl Trace {
    /// Assembles a trace from raw parts, checking ordering, ranges and spins,
    /// and builds the per-node index.
    pub fn from_parts(
        mode: TraceMode,
        initial: SpinConfig,
        events: Vec<UpdateEvent>,
        horizon: f64,
    ) -> Result<Self> {
        let p = initial.len();
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidHorizon(horizon));
        }
        if mode == TraceMode::Discrete && math::floor(horizon) != horizon {
            return Err(Error::Precondition(alloc::format!(
                "discrete horizon must be an integer step count, got {horizon}"
            )));
        }
        let mut per_node = vec![Vec::new(); p];
        let mut last = f64::NEG_INFINITY;
        for (pos, ev) in events.iter().enumerate() {
            let node = ev.node as usize;
            if node >= p {
                return Err(Error::NodeOutOfRange { node, p });
            }
            if ev.spin != 1 && ev.spin != -1 {
                return Err(Error::InvalidSpin(i64::from(ev.spin)));
            }
            if !(ev.time >= 0.0 && ev.time <= horizon) {
                return Err(Error::TimeOutOfRange {
                    t: ev.time,
                    horizon,
                });
            }
            let ordered = match mode {
                TraceMode::Continuous => ev.time >= last,
                TraceMode::Discrete => {
                    ev.time > last && math::floor(ev.time) == ev.time && ev.time >= 2.0
                }
            };
            if !ordered {
                return Err(Error::Precondition(alloc::format!(
                    "event {pos} at time {} is out of order",
                    ev.time
                )));
            }
            last = ev.time;
            per_node[node].push(pos as u32);
        }
        Ok(Trace {
            p,
            mode,
            initial,
            events,
            horizon,
            per_node,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    pub fn initial(&self) -> &SpinConfig {
        &self.initial
    }

    pub fn events(&self) -> &[UpdateEvent] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of events recorded for node `i`.
    pub fn node_event_count(&self, i: usize) -> usize {
        self.per_node[i].len()
    }

    /// All events of node `i` in time order.
    pub fn node_events(&self, i: usize) -> impl ExactSizeIterator<Item = &UpdateEvent> + '_ {
        self.per_node[i]
            .iter()
            .map(move |&pos| &self.events[pos as usize])
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.p {
            return Err(Error::NodeOutOfRange { node: i, p: self.p });
        }
        Ok(())
    }

    /// Configuration after every event with `time <= t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<SpinConfig> {
        self.check_time(t)?;
        let upto = self.events.partition_point(|e| e.time <= t);
        let mut config = self.initial.clone();
        for ev in &self.events[..upto] {
            config.set(ev.node as usize, ev.spin);
        }
        Ok(config)
    }

    /// Configuration at the horizon, i.e. after replaying every event.
    pub fn final_state(&self) -> SpinConfig {
        let mut config = self.initial.clone();
        for ev in &self.events {
            config.set(ev.node as usize, ev.spin);
        }
        config
    }

    /// Spin of node `i` including any update at exactly time `t`.
    pub fn spin_at(&self, i: usize, t: f64) -> Spin {
        let idx = &self.per_node[i];
        let n = idx.partition_point(|&pos| self.events[pos as usize].time <= t);
        self.spin_after(i, n)
    }

    /// Spin of node `i` from updates strictly before `t` (left limit).
    pub fn spin_before(&self, i: usize, t: f64) -> Spin {
        let idx = &self.per_node[i];
        let n = idx.partition_point(|&pos| self.events[pos as usize].time < t);
        self.spin_after(i, n)
    }

    // spin after the first `n` events of node i
    fn spin_after(&self, i: usize, n: usize) -> Spin {
        if n == 0 {
            self.initial.get(i)
        } else {
            self.events[self.per_node[i][n - 1] as usize].spin
        }
    }

    /// Events of node `i` with `t1 <= time < t2`, in time order, located by
    /// binary search on the per-node index.
    pub fn updates_in(
        &self,
        i: usize,
        t1: f64,
        t2: f64,
    ) -> Result<impl ExactSizeIterator<Item = &UpdateEvent> + '_> {
        self.check_node(i)?;
        if !(t1 <= t2) {
            return Err(Error::Precondition(alloc::format!(
                "window start {t1} exceeds end {t2}"
            )));
        }
        let idx = &self.per_node[i];
        let lo = idx.partition_point(|&pos| self.events[pos as usize].time < t1);
        let hi = idx.partition_point(|&pos| self.events[pos as usize].time < t2);
        Ok(idx[lo..hi.max(lo)]
            .iter()
            .map(move |&pos| &self.events[pos as usize]))
    }

    /// Number of node-`i` events in `[t1, t2)`.
    pub fn count_updates_in(&self, i: usize, t1: f64, t2: f64) -> usize {
        let idx = &self.per_node[i];
        let lo = idx.partition_point(|&pos| self.events[pos as usize].time < t1);
        let hi = idx.partition_point(|&pos| self.events[pos as usize].time < t2);
        hi.saturating_sub(lo)
    }
}

#[inline]
fn resample<R: Rng + ?Sized>(model: &IsingModel, spins: &[Spin], i: usize, rng: &mut R) -> Spin {
    let (plus, _) = math::heat_bath(model.local_field_unchecked(spins, i));
    let u: f64 = rng.random();
    if u < plus {
        1
    } else {
        -1
    }
}

/// Runs continuous-time dynamics on `config` over `(0, horizon]`, calling
/// `sink` for every update in time order. `clock` drives event times and
/// node picks, `coins` the spin draws.
pub fn drive_ct<C, S, F>(
    model: &IsingModel,
    config: &mut SpinConfig,
    horizon: f64,
    clock: &mut C,
    coins: &mut S,
    mut sink: F,
) where
    C: Rng + ?Sized,
    S: Rng + ?Sized,
    F: FnMut(UpdateEvent),
{
    let p = model.p();
    if p == 0 {
        return;
    }
    let rate = p as f64;
    let mut t = 0.0;
    loop {
        let gap: f64 = Exp1.sample(clock);
        t += gap / rate;
        if !(t <= horizon) {
            break;
        }
        let i = clock.random_range(0..p);
        let s = resample(model, config.spins(), i, coins);
        config.set(i, s);
        sink(UpdateEvent {
            time: t,
            node: i as u32,
            spin: s,
        });
    }
}

fn check_initial(model: &IsingModel, initial: &SpinConfig) -> Result<()> {
    if initial.len() != model.p() {
        return Err(Error::ConfigLength {
            expected: model.p(),
            found: initial.len(),
        });
    }
    Ok(())
}

/// Continuous-time Glauber dynamics observed on `[0, horizon]`.
pub fn simulate_ct(
    model: &IsingModel,
    initial: &SpinConfig,
    horizon: f64,
    seed: RngSeed,
) -> Result<Trace> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidHorizon(horizon));
    }
    check_initial(model, initial)?;
    let mut clock = seed.rng(Substream::Clock);
    let mut coins = seed.rng(Substream::Spins);
    let expected = (model.p() as f64 * horizon * 1.01) as usize + 16;
    let mut events = Vec::with_capacity(expected.min(1 << 28));
    let mut config = initial.clone();
    drive_ct(model, &mut config, horizon, &mut clock, &mut coins, |ev| {
        events.push(ev)
    });
    Trace::from_parts(TraceMode::Continuous, initial.clone(), events, horizon)
}

/// Discrete-time heat-bath chain with `n` samples. The initial configuration
/// is sample 1 (its node identity is fixed to node 0 and not recorded), so
/// the trace holds `n - 1` events at steps `2..=n`, each resampling a
/// uniformly chosen node.
pub fn simulate_dt(
    model: &IsingModel,
    initial: &SpinConfig,
    n: u64,
    seed: RngSeed,
) -> Result<Trace> {
    if n == 0 {
        return Err(Error::Precondition("discrete trace needs n >= 1".into()));
    }
    check_initial(model, initial)?;
    let p = model.p();
    let mut clock = seed.rng(Substream::Clock);
    let mut coins = seed.rng(Substream::Spins);
    let mut config = initial.clone();
    let mut events = Vec::with_capacity((n - 1).min(1 << 28) as usize);
    if p > 0 {
        for step in 2..=n {
            let i = clock.random_range(0..p);
            let s = resample(model, config.spins(), i, &mut coins);
            config.set(i, s);
            events.push(UpdateEvent {
                time: step as f64,
                node: i as u32,
                spin: s,
            });
        }
    }
    Trace::from_parts(TraceMode::Discrete, initial.clone(), events, n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs;
    use crate::model::{Graph, ParamBounds};

    fn free_model(p: usize) -> IsingModel {
        IsingModel::new(
            Graph::empty(p),
            Default::default(),
            ParamBounds::new(0.1, 1.0, 0),
        )
        .unwrap()
    }

    fn ev(time: f64, node: u32, spin: Spin) -> UpdateEvent {
        UpdateEvent { time, node, spin }
    }

    fn minus(p: usize) -> SpinConfig {
        SpinConfig::new(vec![-1; p]).unwrap()
    }

    #[test]
    fn state_at_is_right_continuous() {
        let trace =
            Trace::from_parts(TraceMode::Continuous, minus(5), vec![ev(1.0, 3, 1)], 2.0).unwrap();
        assert_eq!(trace.state_at(0.0).unwrap(), minus(5));
        assert_eq!(trace.state_at(0.5).unwrap(), minus(5));
        let mut expected = minus(5);
        expected.set(3, 1);
        assert_eq!(trace.state_at(1.0).unwrap(), expected);
        assert_eq!(trace.spin_before(3, 1.0), -1);
        assert_eq!(trace.spin_at(3, 1.0), 1);
        assert!(matches!(
            trace.state_at(2.5),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn updates_in_is_half_open() {
        let trace = Trace::from_parts(
            TraceMode::Continuous,
            minus(2),
            vec![ev(0.2, 0, 1), ev(0.3, 1, 1), ev(0.7, 0, -1)],
            1.0,
        )
        .unwrap();
        assert_eq!(trace.updates_in(0, 0.5, 0.7).unwrap().count(), 0);
        let times: Vec<f64> = trace
            .updates_in(0, 0.1, 0.8)
            .unwrap()
            .map(|e| e.time)
            .collect();
        assert_eq!(times, vec![0.2, 0.7]);

        let empty = Trace::from_parts(TraceMode::Continuous, minus(2), vec![], 1.0).unwrap();
        assert_eq!(empty.updates_in(1, 0.0, 1.0).unwrap().count(), 0);
        assert!(empty.updates_in(0, 0.6, 0.5).is_err());
    }

    #[test]
    fn from_parts_rejects_disorder() {
        let bad = Trace::from_parts(
            TraceMode::Continuous,
            minus(2),
            vec![ev(0.5, 0, 1), ev(0.4, 1, 1)],
            1.0,
        );
        assert!(bad.is_err());
        let bad_node = Trace::from_parts(TraceMode::Continuous, minus(2), vec![ev(0.5, 2, 1)], 1.0);
        assert!(matches!(bad_node, Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn simulate_ct_is_deterministic() {
        let g = graphs::cycle(6).unwrap();
        let m = IsingModel::uniform(g, 0.4, ParamBounds::new(0.4, 0.4, 2)).unwrap();
        let init = SpinConfig::all_plus(6);
        let a = simulate_ct(&m, &init, 50.0, RngSeed::new(3)).unwrap();
        let b = simulate_ct(&m, &init, 50.0, RngSeed::new(3)).unwrap();
        let c = simulate_ct(&m, &init, 50.0, RngSeed::new(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.state_at(50.0).unwrap(), a.final_state());
    }

    #[test]
    fn simulate_ct_rejects_bad_horizon() {
        let m = free_model(2);
        for t in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                simulate_ct(&m, &SpinConfig::all_plus(2), t, RngSeed::new(0)),
                Err(Error::InvalidHorizon(_))
            ));
        }
    }

    #[test]
    fn tiny_horizon_is_mostly_empty() {
        let m = free_model(2);
        let nonempty = (0..2000)
            .filter(|&s| {
                !simulate_ct(&m, &SpinConfig::all_plus(2), 1e-4, RngSeed::new(s))
                    .unwrap()
                    .events()
                    .is_empty()
            })
            .count();
        // expected about 0.4 of 2000
        assert!(nonempty <= 5, "{nonempty}");
    }

    #[test]
    fn free_spin_is_a_fair_coin() {
        let m = free_model(1);
        let trace = simulate_ct(&m, &SpinConfig::all_plus(1), 1e4, RngSeed::new(11)).unwrap();
        let n = trace.events().len() as f64;
        let plus = trace.events().iter().filter(|e| e.spin == 1).count() as f64;
        assert!((plus / n - 0.5).abs() <= 3.0 * 0.5 / math::sqrt(n));
    }

    #[test]
    fn per_node_rate_is_one() {
        let g = graphs::cycle(9).unwrap();
        let m = IsingModel::uniform(g, 0.4, ParamBounds::new(0.4, 0.4, 2)).unwrap();
        let trace = simulate_ct(&m, &SpinConfig::all_plus(9), 1e5, RngSeed::new(5)).unwrap();
        for i in 0..9 {
            let rate = trace.node_event_count(i) as f64 / 1e5;
            assert!((rate - 1.0).abs() <= 0.02, "node {i}: rate {rate}");
        }
    }

    #[test]
    fn discrete_n_one_has_no_events() {
        let m = free_model(3);
        let t = simulate_dt(&m, &SpinConfig::all_plus(3), 1, RngSeed::new(0)).unwrap();
        assert!(t.events().is_empty());
        assert_eq!(t.horizon(), 1.0);
    }

    #[test]
    fn discrete_node_selection_is_uniform() {
        let m = free_model(4);
        let n = 1_000_000;
        let t = simulate_dt(&m, &SpinConfig::all_plus(4), n, RngSeed::new(9)).unwrap();
        assert_eq!(t.events().len() as u64, n - 1);
        assert_eq!(t.events()[0].time, 2.0);
        for i in 0..4 {
            let freq = t.node_event_count(i) as f64 / (n - 1) as f64;
            assert!((freq - 0.25).abs() <= 0.002, "node {i}: {freq}");
        }
    }
}
