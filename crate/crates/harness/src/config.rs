//! Experiment configuration.
//!
//! A TOML document (or the equivalent flags) names a graph generator, a
//! coupling rule, the learner mode and the trial layout. [`resolve`] turns
//! it into a validated model, the true edge set and concrete learner
//! settings. Relative paths are taken relative to the working directory.
//!
//! ```toml
//! seed = 7
//! trials = 100
//! horizon = 20000.0
//!
//! [graph]
//! kind = "cycle"
//! p = 8
//!
//! [couplings]
//! kind = "constant"
//! theta = 0.8
//!
//! [learner]
//! mode = "practical"
//! window = 1.0
//! tau_rule = "clt"
//! ```

use std::path::{Path, PathBuf};

use glauber_core::learner::{self, WindowIndex};
use glauber_core::rng::Substream;
use glauber_core::{
    graphs, lowerbound, Couplings, EdgeSet, Graph, IsingModel, ParamBounds, RngSeed,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::io;

/// Largest expected event count a single simulated trace may have.
pub const MAX_EXPECTED_EVENTS: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Observation time `T`; required in practical mode.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub init: InitKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub d: Option<usize>,
    /// Output directory for experiment results.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub couplings: CouplingSpec,
    #[serde(default)]
    pub learner: LearnerSpec,
}

fn default_trials() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    Uniform,
    AllPlus,
    /// Exact Gibbs draw (`p <= 20`).
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub kind: GraphKind,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub rows: Option<usize>,
    #[serde(default)]
    pub cols: Option<usize>,
    /// Model file for `kind = "file"`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Empty,
    SingleEdge,
    Path,
    Cycle,
    Grid,
    RandomRegular,
    CliqueEnsemble,
    File,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    #[serde(default)]
    pub kind: CouplingKind,
    #[serde(default)]
    pub theta: Option<f64>,
    /// Model file for `kind = "file"`; defaults to the graph's file.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    /// `+theta` or `-theta` per edge with seeded fair signs.
    #[default]
    RandomSign,
    Constant,
    /// The clique ensemble's base couplings (`alpha` on matching edges,
    /// `beta` elsewhere).
    Ensemble,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub tau_rule: TauRule,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub symmetrize: bool,
}

fn default_delta() -> f64 {
    0.01
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            mode: Mode::default(),
            window: None,
            tau: None,
            tau_rule: TauRule::default(),
            delta: default_delta(),
            symmetrize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theory,
    #[default]
    Practical,
}

/// How practical mode picks `tau` when none is given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TauRule {
    /// Half the edge-signal lower bound, else `3 L d q`.
    #[default]
    Bound,
    /// Normal-approximation threshold calibrated on each trace.
    Clt,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::file(path, e))?;
        Self::from_toml(&text)
    }
}

/// Decision threshold, either fixed up front or calibrated per trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum Threshold {
    Fixed { tau: f64 },
    Calibrated { delta: f64 },
}

impl Threshold {
    pub fn for_index(&self, index: &WindowIndex) -> Result<f64> {
        match *self {
            Threshold::Fixed { tau } => Ok(tau),
            Threshold::Calibrated { delta } => Ok(index.calibrated_threshold(delta)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerSettings {
    pub mode: Mode,
    pub window: f64,
    pub horizon: f64,
    pub q: f64,
    pub k_max: u64,
    pub threshold: Threshold,
    pub symmetrize: bool,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: IsingModel,
    pub truth: EdgeSet,
    pub learner: LearnerSettings,
}

/// Everything an experiment result echoes about its setup.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSummary<'a> {
    pub config: &'a ExperimentConfig,
    pub p: usize,
    pub edges: usize,
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub learner: &'a LearnerSettings,
}

impl Resolved {
    pub fn summary<'a>(&'a self, config: &'a ExperimentConfig) -> ResolvedSummary<'a> {
        let b = self.model.bounds();
        ResolvedSummary {
            config,
            p: self.model.p(),
            edges: self.truth.len(),
            alpha: b.alpha,
            beta: b.beta,
            d: b.d,
            learner: &self.learner,
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn need<T: Copy>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| config_err(format!("missing {what}")))
}

/// Builds the model described by the graph, coupling and bound settings.
/// Random choices (regular graphs, coupling signs) use stream 0 of `seed`.
pub fn resolve_model(config: &ExperimentConfig) -> Result<IsingModel> {
    let mut rng = RngSeed::new(config.seed).rng(Substream::Aux);
    let g = &config.graph;
    let declared_d = config.d.or(g.d);
    let mut file_model = None;
    let mut ensemble = None;
    let graph = match g.kind {
        GraphKind::Empty => Graph::empty(need(g.p, "graph.p")?),
        GraphKind::SingleEdge => graphs::single_edge(g.p.unwrap_or(2))?,
        GraphKind::Path => graphs::path(need(g.p, "graph.p")?)?,
        GraphKind::Cycle => graphs::cycle(need(g.p, "graph.p")?)?,
        GraphKind::Grid => graphs::grid(need(g.rows, "graph.rows")?, need(g.cols, "graph.cols")?)?,
        GraphKind::RandomRegular => graphs::random_regular(
            need(g.p, "graph.p")?,
            need(declared_d, "graph.d")?,
            &mut rng,
        )?,
        GraphKind::CliqueEnsemble => {
            let e = lowerbound::build_ensemble(
                need(g.p, "graph.p")?,
                need(declared_d, "graph.d")?,
                need(config.alpha, "alpha")?,
                need(config.beta, "beta")?,
            )?;
            let graph = e.base.graph().clone();
            ensemble = Some(e);
            graph
        }
        GraphKind::File => {
            let path = g
                .path
                .as_deref()
                .ok_or_else(|| config_err("missing graph.path"))?;
            let m = io::load_model(path)?;
            let graph = m.graph().clone();
            file_model = Some(m);
            graph
        }
    };

    let c = &config.couplings;
    let couplings = match c.kind {
        CouplingKind::Constant => Couplings::constant(&graph, theta_for(c, &graph)?),
        CouplingKind::RandomSign => {
            let theta = theta_for(c, &graph)?;
            graph
                .edges()
                .iter()
                .map(|&e| (e, if rng.random::<bool>() { theta } else { -theta }))
                .collect()
        }
        CouplingKind::Ensemble => match &ensemble {
            Some(e) => e.base.couplings().clone(),
            None => {
                return Err(config_err(
                    "couplings.kind = \"ensemble\" needs graph.kind = \"clique-ensemble\"",
                ))
            }
        },
        CouplingKind::File => match (&c.path, &file_model) {
            (Some(path), _) => io::load_model(path)?.couplings().clone(),
            (None, Some(m)) => m.couplings().clone(),
            (None, None) => return Err(config_err("missing couplings.path")),
        },
    };

    let magnitudes = || couplings.iter().map(|(_, t)| t.abs());
    let fallback = file_model.as_ref().map(|m| *m.bounds());
    let alpha = config
        .alpha
        .or(fallback.map(|b| b.alpha))
        .or_else(|| magnitudes().reduce(f64::min))
        .or(c.theta.map(f64::abs))
        .ok_or_else(|| config_err("cannot infer alpha; set `alpha`"))?;
    let beta = config
        .beta
        .or(fallback.map(|b| b.beta))
        .or_else(|| magnitudes().reduce(f64::max))
        .unwrap_or(alpha);
    let d = declared_d
        .or(fallback.map(|b| b.d))
        .unwrap_or_else(|| graph.max_degree().max(1));
    Ok(IsingModel::new(
        graph,
        couplings,
        ParamBounds::new(alpha, beta, d),
    )?)
}

fn theta_for(spec: &CouplingSpec, graph: &Graph) -> Result<f64> {
    match spec.theta {
        Some(t) if t.is_finite() => Ok(t),
        Some(t) => Err(config_err(format!(
            "couplings.theta must be finite, got {t}"
        ))),
        None if graph.edges().is_empty() => Ok(0.0),
        None => Err(config_err("missing couplings.theta")),
    }
}

/// Learner settings for a resolved model.
pub fn resolve_learner(config: &ExperimentConfig, model: &IsingModel) -> Result<LearnerSettings> {
    let b = model.bounds();
    let spec = &config.learner;
    let (window, horizon, threshold) = match spec.mode {
        Mode::Theory => {
            let window = match spec.window {
                Some(w) => w,
                None => learner::theory_window(b.d, b.alpha, b.beta)?,
            };
            let horizon = match config.horizon {
                Some(t) => t,
                None => learner::theory_horizon(model.p(), b.d, b.alpha, b.beta).map_err(|e| {
                    config_err(format!(
                        "theory observation time is not representable ({e}); override `horizon`"
                    ))
                })?,
            };
            let tau = match spec.tau {
                Some(t) => t,
                None => learner::theory_threshold(b.d, window)?,
            };
            (window, horizon, Threshold::Fixed { tau })
        }
        Mode::Practical => {
            let window = spec
                .window
                .ok_or_else(|| config_err("practical mode needs learner.window"))?;
            let horizon = config
                .horizon
                .ok_or_else(|| config_err("practical mode needs horizon"))?;
            let threshold = match (spec.tau, spec.tau_rule) {
                (Some(tau), _) => Threshold::Fixed { tau },
                (None, TauRule::Bound) => Threshold::Fixed {
                    tau: learner::practical_threshold(b.d, b.alpha, b.beta, window),
                },
                (None, TauRule::Clt) => Threshold::Calibrated { delta: spec.delta },
            };
            (window, horizon, threshold)
        }
    };
    if !(window.is_finite() && window > 0.0) {
        return Err(config_err(format!(
            "window length must be positive, got {window}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(config_err(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    match threshold {
        Threshold::Fixed { tau } if tau.is_nan() || tau <= 0.0 => {
            return Err(config_err(format!("tau must be positive, got {tau}")));
        }
        Threshold::Calibrated { delta } if !(delta > 0.0 && delta < 1.0) => {
            return Err(config_err(format!("delta must lie in (0, 1), got {delta}")));
        }
        _ => {}
    }
    let expected_events = horizon * model.p() as f64;
    if expected_events > MAX_EXPECTED_EVENTS {
        return Err(config_err(format!(
            "horizon {horizon:.4e} means about {expected_events:.3e} events per trace \
             (limit {MAX_EXPECTED_EVENTS:.0e}); override `horizon`"
        )));
    }
    let k_max = learner::window_count(horizon, window)?;
    if k_max == 0 {
        return Err(config_err(format!(
            "horizon {horizon} is shorter than one window {window}"
        )));
    }
    Ok(LearnerSettings {
        mode: spec.mode,
        window,
        horizon,
        q: learner::window_event_probability(window),
        k_max,
        threshold,
        symmetrize: spec.symmetrize,
    })
}

pub fn resolve(config: &ExperimentConfig) -> Result<Resolved> {
    if config.trials == 0 {
        return Err(config_err("trials must be at least 1"));
    }
    let model = resolve_model(config)?;
    if config.init == InitKind::Stationary && model.p() > glauber_core::oracle::MAX_ENUM_NODES {
        return Err(config_err(format!(
            "stationary start needs p <= {}, got {}",
            glauber_core::oracle::MAX_ENUM_NODES,
            model.p()
        )));
    }
    let learner = resolve_learner(config, &model)?;
    let truth = EdgeSet::from_graph(model.graph());
    Ok(Resolved {
        model,
        truth,
        learner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CYCLE: &str = r#"
        seed = 3
        trials = 4
        horizon = 100.0

        [graph]
        kind = "cycle"
        p = 8

        [couplings]
        kind = "constant"
        theta = 0.8

        [learner]
        window = 1.0
        tau_rule = "clt"
    "#;

    #[test]
    fn cycle_config_resolves() {
        let config = ExperimentConfig::from_toml(CYCLE).unwrap();
        let r = resolve(&config).unwrap();
        assert_eq!(r.model.p(), 8);
        assert_eq!(r.truth.len(), 8);
        assert_eq!(*r.model.bounds(), ParamBounds::new(0.8, 0.8, 2));
        assert_eq!(r.learner.k_max, 100);
        assert_eq!(r.learner.threshold, Threshold::Calibrated { delta: 0.01 });
    }

    #[test]
    fn random_signs_are_seeded() {
        let text = CYCLE.replace("\"constant\"", "\"random-sign\"");
        let config = ExperimentConfig::from_toml(&text).unwrap();
        let a = resolve_model(&config).unwrap();
        let b = resolve_model(&config).unwrap();
        assert_eq!(a.couplings(), b.couplings());
        assert!(a.couplings().iter().all(|(_, t)| t.abs() == 0.8));
    }

    #[test]
    fn theory_mode_refuses_astronomical_horizons() {
        let text = CYCLE
            .replace("horizon = 100.0", "")
            .replace("window = 1.0", "mode = \"theory\"");
        let config = ExperimentConfig::from_toml(&text).unwrap();
        let err = resolve(&config).unwrap_err();
        assert!(err.to_string().contains("override `horizon`"), "{err}");
    }

    #[test]
    fn bad_configs_are_rejected() {
        let zero = CYCLE.replace("trials = 4", "trials = 0");
        assert!(resolve(&ExperimentConfig::from_toml(&zero).unwrap()).is_err());
        let unknown = CYCLE.replace("trials = 4", "trails = 4");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let no_seed = CYCLE.replace("seed = 3", "");
        assert!(ExperimentConfig::from_toml(&no_seed).is_err());
        let odd = r#"
            seed = 1
            [graph]
            kind = "random-regular"
            p = 5
            d = 3
            [couplings]
            theta = 0.5
        "#;
        assert!(resolve_model(&ExperimentConfig::from_toml(odd).unwrap()).is_err());
    }

    #[test]
    fn clique_ensemble_couplings() {
        let text = r#"
            seed = 1
            alpha = 0.2
            beta = 1.0
            [graph]
            kind = "clique-ensemble"
            p = 9
            d = 3
            [couplings]
            kind = "ensemble"
        "#;
        let m = resolve_model(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
        assert_eq!(m.p(), 9);
        assert_eq!(m.graph().edges().len(), 12);
        assert_eq!(m.coupling(0, 1), 0.2);
        assert_eq!(m.coupling(0, 2), 1.0);
    }
}
