//! Learner wall-clock scaling in `p`.

use std::io::Write;
use std::time::Instant;

use glauber_core::learner::{learn_from_index, LearnOptions, WindowIndex};
use glauber_core::{simulate_ct, Graph, IsingModel, ParamBounds, RngSeed, SpinConfig};
use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub p: usize,
    pub events: usize,
    pub k_max: u64,
    /// Simulation time (single run).
    pub simulate_seconds: f64,
    /// Index build plus all-pairs learning, best of the repeats.
    pub learn_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    /// Least-squares slope of `ln learn_seconds` against `ln p`.
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSpec {
    pub horizon: f64,
    pub window: f64,
    pub tau: f64,
    pub repeats: usize,
    pub seed: u64,
}

/// Least-squares slope through `(x, y)` points.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Times the learner on traces of the `theta = 0` model for each `p` and
/// fits the log-log exponent. `ps` must be strictly ascending.
pub fn run_scaling_benchmark(ps: &[usize], spec: BenchmarkSpec) -> Result<BenchmarkReport> {
    if ps.len() < 2 || ps.windows(2).any(|w| w[0] >= w[1]) || ps[0] < 2 {
        return Err(HarnessError::Config(format!(
            "benchmark needs at least two ascending p values >= 2, got {ps:?}"
        )));
    }
    let mut rows = Vec::with_capacity(ps.len());
    for (idx, &p) in ps.iter().enumerate() {
        let model = IsingModel::new(
            Graph::empty(p),
            Default::default(),
            ParamBounds::new(1.0, 1.0, 1),
        )?;
        let seed = RngSeed::new(spec.seed).with_stream(idx as u64);
        let start = Instant::now();
        let trace = simulate_ct(&model, &SpinConfig::all_plus(p), spec.horizon, seed)?;
        let simulate_seconds = start.elapsed().as_secs_f64();
        let mut best = f64::INFINITY;
        let mut k_max = 0;
        for _ in 0..spec.repeats.max(1) {
            let start = Instant::now();
            let index = WindowIndex::build(&trace, spec.window)?;
            let edges = learn_from_index(&index, spec.tau, LearnOptions::default());
            std::hint::black_box(edges);
            best = best.min(start.elapsed().as_secs_f64());
            k_max = index.k_max();
        }
        rows.push(BenchmarkRow {
            p,
            events: trace.events().len(),
            k_max,
            simulate_seconds,
            learn_seconds: best,
        });
    }
    let points: Vec<_> = rows
        .iter()
        .map(|r| ((r.p as f64).ln(), r.learn_seconds.ln()))
        .collect();
    Ok(BenchmarkReport {
        exponent: slope(&points),
        rows,
    })
}

pub fn write_report<W: Write>(w: W, report: &BenchmarkReport) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for row in &report.rows {
        csv.serialize(row)?;
    }
    let mut w = csv.into_inner().map_err(|e| e.into_error())?;
    writeln!(w, "# exponent {}", report.exponent)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<_> = [10.0f64, 20.0, 40.0]
            .iter()
            .map(|&p| (p.ln(), (3.0 * p * p).ln()))
            .collect();
        assert!((slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsorted_sizes() {
        let spec = BenchmarkSpec {
            horizon: 10.0,
            window: 1.0,
            tau: 0.1,
            repeats: 1,
            seed: 0,
        };
        assert!(run_scaling_benchmark(&[20, 10], spec).is_err());
        let r = run_scaling_benchmark(&[4, 8], spec).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].k_max, 10);
    }
}
