//! Seeded structure-recovery experiments.
//!
//! Trial `t` draws its initial state and trace from stream `t + 1` of the
//! configured seed (stream 0 is reserved for model generation), so results
//! do not depend on how trials are scheduled across threads.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use glauber_core::learner::{learn_from_index, LearnOptions, WindowIndex};
use glauber_core::oracle::{exact_gibbs, GibbsSampler};
use glauber_core::rng::Substream;
use glauber_core::{simulate_ct, IsingModel, RngSeed, SpinConfig};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, ExperimentConfig, InitKind, Resolved};
use crate::error::Result;
use crate::io::create_file;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub stream: u64,
    pub events: usize,
    pub tau: f64,
    pub k_max: u64,
    pub learned: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub exact: bool,
    /// Wall-clock seconds for simulation plus learning. Not part of the
    /// deterministic output.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_false_positives: f64,
    pub mean_false_negatives: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub trials: Vec<TrialOutcome>,
    pub aggregate: Aggregate,
}

impl ExperimentResult {
    fn from_trials(trials: Vec<TrialOutcome>) -> Self {
        let n = trials.len() as u64;
        let successes = trials.iter().filter(|t| t.exact).count() as u64;
        let nf = n.max(1) as f64;
        let aggregate = Aggregate {
            trials: n,
            successes,
            success_rate: successes as f64 / nf,
            mean_false_positives: trials.iter().map(|t| t.false_positives as f64).sum::<f64>() / nf,
            mean_false_negatives: trials.iter().map(|t| t.false_negatives as f64).sum::<f64>() / nf,
        };
        ExperimentResult { trials, aggregate }
    }

    pub fn success_rate(&self) -> f64 {
        self.aggregate.success_rate
    }
}

fn initial_state(
    kind: InitKind,
    model: &IsingModel,
    sampler: Option<&GibbsSampler>,
    seed: RngSeed,
) -> SpinConfig {
    let mut rng = seed.rng(Substream::Init);
    match (kind, sampler) {
        (InitKind::AllPlus, _) => SpinConfig::all_plus(model.p()),
        (InitKind::Stationary, Some(s)) => s.sample(&mut rng),
        _ => SpinConfig::new(
            (0..model.p())
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        )
        .expect("spins are +1 or -1"),
    }
}

/// Simulates and learns a single trial.
pub fn run_trial(
    resolved: &Resolved,
    init: InitKind,
    sampler: Option<&GibbsSampler>,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    let start = Instant::now();
    let stream = trial + 1;
    let trial_seed = RngSeed::new(seed).with_stream(stream);
    let settings = &resolved.learner;
    let x0 = initial_state(init, &resolved.model, sampler, trial_seed);
    let trace = simulate_ct(&resolved.model, &x0, settings.horizon, trial_seed)?;
    let index = WindowIndex::build(&trace, settings.window)?;
    let tau = settings.threshold.for_index(&index)?;
    let learned = learn_from_index(
        &index,
        tau,
        LearnOptions {
            symmetrize: settings.symmetrize,
        },
    );
    let (false_positives, false_negatives) = learned.errors_against(&resolved.truth);
    Ok(TrialOutcome {
        trial,
        stream,
        events: trace.events().len(),
        tau,
        k_max: index.k_max(),
        learned: learned.len(),
        false_positives,
        false_negatives,
        exact: false_positives == 0 && false_negatives == 0,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs `trials` trials of an already resolved setup. Trials run on the
/// rayon pool; outcomes are returned in trial order.
pub fn run_resolved(
    resolved: &Resolved,
    init: InitKind,
    seed: u64,
    trials: u64,
) -> Result<ExperimentResult> {
    let sampler = match init {
        InitKind::Stationary => Some(exact_gibbs(&resolved.model)?.sampler()),
        _ => None,
    };
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(resolved, init, sampler.as_ref(), seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult::from_trials(outcomes))
}

pub fn run_recovery_experiment(config: &ExperimentConfig) -> Result<(Resolved, ExperimentResult)> {
    let resolved = config::resolve(config)?;
    let result = run_resolved(&resolved, config.init, config.seed, config.trials)?;
    Ok((resolved, result))
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    seed: u64,
    resolved: config::ResolvedSummary<'a>,
    aggregate: &'a Aggregate,
}

/// Writes `trials.csv`, `manifest.json` and `timings.csv` into `dir`.
/// The first two are byte-identical across runs with the same config;
/// wall-clock times are kept apart in `timings.csv`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    resolved: &Resolved,
    result: &ExperimentResult,
) -> Result<()> {
    let summary = resolved.summary(config);
    let echo = serde_json::to_string(&summary)?;

    let mut w = create_file(&dir.join("trials.csv"))?;
    writeln!(w, "# {echo}")?;
    let mut csv = csv::Writer::from_writer(w);
    for t in &result.trials {
        csv.serialize(t)?;
    }
    csv.into_inner().map_err(|e| e.into_error())?.flush()?;

    let mut w = create_file(&dir.join("timings.csv"))?;
    writeln!(w, "# {echo}")?;
    writeln!(w, "trial,seconds")?;
    for t in &result.trials {
        writeln!(w, "{},{}", t.trial, t.seconds)?;
    }
    w.flush()?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        resolved: summary,
        aggregate: &result.aggregate,
    };
    let mut w = create_file(&dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
