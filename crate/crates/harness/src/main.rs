use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use glauber_core::learner::{self, learn_from_index, LearnOptions, WindowIndex};
use glauber_core::oracle::exact_gibbs;
use glauber_core::rng::Substream;
use glauber_core::{simulate_ct, simulate_dt, RngSeed, SpinConfig};
use glauber_harness::benchmark::{self, BenchmarkSpec};
use glauber_harness::config::{
    self, CouplingKind, CouplingSpec, ExperimentConfig, GraphKind, GraphSpec, InitKind,
    LearnerSpec, Mode, TauRule,
};
use glauber_harness::verify::{self, Named, VerifyOptions};
use glauber_harness::{experiment, io, report};
use rand::Rng;

/// Glauber dynamics simulation and structure learning.
#[derive(Parser)]
#[command(name = "glauber", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model file from a graph generator and coupling rule.
    Generate(GenerateArgs),
    /// Simulate a trace from a model file.
    Simulate(SimulateArgs),
    /// Learn the edge set from a trace file.
    Learn(LearnArgs),
    /// Run a seeded recovery experiment from a config file.
    Experiment(ExperimentArgs),
    /// Time the learner across node counts.
    Benchmark(BenchmarkArgs),
    /// Run the verification battery.
    Verify(VerifyArgs),
    /// KL report for the clique ensemble.
    Lowerbound(LowerboundArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    graph: GraphKind,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Model file for `--graph file`.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random-sign")]
    couplings: CouplingKind,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Continuous observation time.
    #[arg(long, conflicts_with = "steps")]
    horizon: Option<f64>,
    /// Discrete heat-bath sample count.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, value_enum, default_value = "uniform")]
    init: InitKind,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum, default_value = "practical")]
    mode: Mode,
    /// Window length.
    #[arg(long = "L")]
    window: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum, default_value = "bound")]
    tau_rule: TauRule,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    symmetrize: bool,
    /// Model file supplying `d`, `alpha`, `beta` when the flags are absent.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long = "L")]
    window: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    tau_rule: Option<TauRule>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    symmetrize: bool,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 when the success rate is below this value.
    #[arg(long)]
    min_success: Option<f64>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Ascending node counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    p: Vec<usize>,
    #[arg(long, default_value_t = 1000.0)]
    horizon: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    window: f64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 unless the fitted exponent lies in `[lo, hi]`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    expect_exponent: Option<Vec<f64>>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict to these check groups (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Model file to check alongside the built-in battery.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = VerifyOptions::default().seed)]
    seed: u64,
    /// Monte Carlo repetitions per expectation.
    #[arg(long, default_value_t = VerifyOptions::default().mc_reps)]
    reps: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerboundArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Number of discrete samples.
    #[arg(long)]
    n: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Learn(a) => learn(a),
        Command::Experiment(a) => run_experiment(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Verify(a) => run_verify(a),
        Command::Lowerbound(a) => lowerbound(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn generate(a: GenerateArgs) -> anyhow::Result<bool> {
    let config = ExperimentConfig {
        seed: a.seed,
        trials: 1,
        horizon: None,
        init: InitKind::default(),
        alpha: a.alpha,
        beta: a.beta,
        d: a.d,
        out: None,
        graph: GraphSpec {
            kind: a.graph,
            p: a.p,
            d: a.d,
            rows: a.rows,
            cols: a.cols,
            path: a.graph_file,
        },
        couplings: CouplingSpec {
            kind: a.couplings,
            theta: a.theta,
            path: None,
        },
        learner: LearnerSpec::default(),
    };
    let model = config::resolve_model(&config)?;
    io::save_model(&a.out, &model)?;
    eprintln!(
        "wrote model with p = {} and {} edges",
        model.p(),
        model.graph().edges().len()
    );
    Ok(true)
}

fn simulate(a: SimulateArgs) -> anyhow::Result<bool> {
    let model = io::load_model(&a.model)?;
    let seed = RngSeed::new(a.seed);
    let mut rng = seed.rng(Substream::Init);
    let init = match a.init {
        InitKind::AllPlus => SpinConfig::all_plus(model.p()),
        InitKind::Uniform => SpinConfig::new(
            (0..model.p())
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        )?,
        InitKind::Stationary => exact_gibbs(&model)?.sampler().sample(&mut rng),
    };
    let trace = match (a.horizon, a.steps) {
        (Some(t), None) => simulate_ct(&model, &init, t, seed)?,
        (None, Some(n)) => simulate_dt(&model, &init, n, seed)?,
        _ => bail!("give exactly one of --horizon and --steps"),
    };
    io::save_trace(&a.out, &trace)?;
    eprintln!("wrote {} events", trace.events().len());
    Ok(true)
}

fn learn(a: LearnArgs) -> anyhow::Result<bool> {
    let trace = io::load_trace(&a.trace)?;
    let model_bounds = a
        .model
        .as_deref()
        .map(io::load_model)
        .transpose()?
        .map(|m| *m.bounds());
    let d = a.d.or(model_bounds.map(|b| b.d));
    let alpha = a.alpha.or(model_bounds.map(|b| b.alpha));
    let beta = a.beta.or(model_bounds.map(|b| b.beta));
    let need = |name: &str| anyhow::anyhow!("--{name} (or --model) is required for this mode");
    let (window, tau) = match a.mode {
        Mode::Theory => {
            let (d, alpha, beta) = (
                d.ok_or_else(|| need("d"))?,
                alpha.ok_or_else(|| need("alpha"))?,
                beta.ok_or_else(|| need("beta"))?,
            );
            let window = match a.window {
                Some(w) => w,
                None => learner::theory_window(d, alpha, beta)?,
            };
            let tau = match a.tau {
                Some(t) => t,
                None => learner::theory_threshold(d, window)?,
            };
            (window, Some(tau))
        }
        Mode::Practical => {
            let window = a.window.context("--L is required in practical mode")?;
            let tau = match (a.tau, a.tau_rule) {
                (Some(t), _) => Some(t),
                (None, TauRule::Bound) => Some(learner::practical_threshold(
                    d.ok_or_else(|| need("d"))?,
                    alpha.ok_or_else(|| need("alpha"))?,
                    beta.ok_or_else(|| need("beta"))?,
                    window,
                )),
                (None, TauRule::Clt) => None,
            };
            (window, tau)
        }
    };
    let index = WindowIndex::build(&trace, window)?;
    let tau = match tau {
        Some(t) => t,
        None => index.calibrated_threshold(a.delta)?,
    };
    let edges = learn_from_index(
        &index,
        tau,
        LearnOptions {
            symmetrize: a.symmetrize,
        },
    );
    io::save_edges(&a.out, &edges)?;
    eprintln!(
        "L = {window}, tau = {tau:.6e}, q = {:.6e}, k_max = {}, edges = {}",
        learner::window_event_probability(window),
        index.k_max(),
        edges.len()
    );
    Ok(true)
}

fn run_experiment(a: ExperimentArgs) -> anyhow::Result<bool> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.trials {
        config.trials = v;
    }
    if let Some(v) = a.horizon {
        config.horizon = Some(v);
    }
    if let Some(v) = a.mode {
        config.learner.mode = v;
    }
    if let Some(v) = a.window {
        config.learner.window = Some(v);
    }
    if let Some(v) = a.tau {
        config.learner.tau = Some(v);
    }
    if let Some(v) = a.tau_rule {
        config.learner.tau_rule = v;
    }
    if let Some(v) = a.delta {
        config.learner.delta = v;
    }
    if a.symmetrize {
        config.learner.symmetrize = true;
    }
    if let Some(v) = a.init {
        config.init = v;
    }
    if let Some(v) = a.out {
        config.out = Some(v);
    }
    let (resolved, result) = experiment::run_recovery_experiment(&config)?;
    if let Some(dir) = &config.out {
        experiment::write_outputs(dir, &config, &resolved, &result)?;
    }
    let agg = &result.aggregate;
    println!(
        "trials {} successes {} success_rate {} mean_fp {} mean_fn {}",
        agg.trials,
        agg.successes,
        agg.success_rate,
        agg.mean_false_positives,
        agg.mean_false_negatives
    );
    Ok(a.min_success.is_none_or(|m| agg.success_rate >= m))
}

fn run_benchmark(a: BenchmarkArgs) -> anyhow::Result<bool> {
    let spec = BenchmarkSpec {
        horizon: a.horizon,
        window: a.window,
        // Any positive threshold; every pair is scored regardless.
        tau: learner::practical_threshold(1, 1.0, 1.0, a.window).max(f64::MIN_POSITIVE),
        repeats: a.repeats,
        seed: a.seed,
    };
    let report = benchmark::run_scaling_benchmark(&a.p, spec)?;
    let stdout = std::io::stdout();
    benchmark::write_report(stdout.lock(), &report)?;
    if let Some(path) = &a.out {
        let mut w = io::create_file(path)?;
        benchmark::write_report(&mut w, &report)?;
        w.flush()?;
    }
    Ok(match a.expect_exponent.as_deref() {
        Some([lo, hi]) => (*lo..=*hi).contains(&report.exponent),
        _ => true,
    })
}

fn run_verify(a: VerifyArgs) -> anyhow::Result<bool> {
    let model = match &a.model {
        Some(path) => Some(Named {
            name: path.display().to_string(),
            model: io::load_model(path)?,
        }),
        None => None,
    };
    let options = VerifyOptions {
        only: (!a.only.is_empty()).then_some(a.only),
        seed: a.seed,
        mc_reps: a.reps,
        model,
    };
    let checks = verify::run_verification_suite(&options)?;
    let mut lines = String::new();
    for c in &checks {
        lines.push_str(&c.to_string());
        lines.push('\n');
    }
    print!("{lines}");
    if let Some(path) = &a.out {
        let mut w = io::create_file(path)?;
        w.write_all(lines.as_bytes())?;
        w.flush()?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    eprintln!("{} checks, {failed} failed", checks.len());
    Ok(failed == 0)
}

fn lowerbound(a: LowerboundArgs) -> anyhow::Result<bool> {
    let r = report::lowerbound_report(a.p, a.d, a.alpha, a.beta, a.n)?;
    let mut w = io::create_file(&a.out)?;
    report::write_csv(&mut w, &r)?;
    w.flush()?;
    println!(
        "M {} gamma {} fano_risk {} applicable {} time_lower_bound {}",
        r.ensemble.m(),
        r.fano.gamma,
        r.fano.risk,
        r.fano.applicable,
        r.time_lower_bound
    );
    Ok(r.rows.iter().all(|row| row.margin() >= 0.0))
}
