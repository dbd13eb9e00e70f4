//! Clique-ensemble KL report.

use std::io::Write;

use glauber_core::lowerbound::{self, CliqueEnsemble, FanoBound, KlReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone)]
pub struct LowerBoundReport {
    pub ensemble: CliqueEnsemble,
    pub rows: Vec<KlReport>,
    pub fano: FanoBound,
    /// Observation time below which risk 1/2 is impossible.
    pub time_lower_bound: f64,
}

#[derive(Serialize)]
struct Row {
    variant: usize,
    u: usize,
    v: usize,
    c1: f64,
    cl: f64,
    total: f64,
    bound: f64,
    margin: f64,
}

/// Exact KL for every variant of the `(p, d, alpha, beta)` ensemble after
/// `n` samples, with the Fano bound on those divergences.
pub fn lowerbound_report(
    p: usize,
    d: usize,
    alpha: f64,
    beta: f64,
    n: u64,
) -> Result<LowerBoundReport> {
    let ensemble = lowerbound::build_ensemble(p, d, alpha, beta)?;
    // Variants in different cliques are relabelings of each other; the
    // divergences are still computed per variant.
    let rows = (0..ensemble.m())
        .into_par_iter()
        .map(|v| lowerbound::variant_report(&ensemble, v, n))
        .collect::<Result<Vec<_>, _>>()?;
    let kl: Vec<f64> = rows.iter().map(|r| r.total).collect();
    let fano = if ensemble.m() >= 2 {
        lowerbound::fano_bound(&kl, ensemble.m())?
    } else {
        FanoBound {
            gamma: f64::NAN,
            risk: f64::NAN,
            applicable: false,
        }
    };
    Ok(LowerBoundReport {
        time_lower_bound: lowerbound::min_observation_time(p, d, alpha, beta),
        ensemble,
        rows,
        fano,
    })
}

pub fn write_csv<W: Write>(w: W, report: &LowerBoundReport) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in &report.rows {
        csv.serialize(Row {
            variant: r.variant,
            u: r.u,
            v: r.v,
            c1: r.c1,
            cl: r.cl,
            total: r.total,
            bound: r.bound,
            margin: r.margin(),
        })?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_one_row_per_variant() {
        let r = lowerbound_report(8, 3, 0.5, 1.0, 80).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.margin() >= 0.0));
        let mut buf = Vec::new();
        write_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("variant,u,v,c1,cl,total,bound,margin\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
