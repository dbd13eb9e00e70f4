//! Clique ensembles and the information-theoretic side: exact KL between
//! trace distributions, the KL envelope, the magnetization tail, Fano's
//! risk bound and the observation-time lower bound.
//!
//! The ensemble consists of `floor(p / (d+1))` disjoint `(d+1)`-cliques. Inside
//! each clique nodes `2m` and `2m+1` (clique-local) are matched with coupling
//! `alpha`; every other clique edge has coupling `beta`. A variant removes a
//! single matching edge. Variants only differ from the base inside one
//! clique, so all KL computations run on the clique projection.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{Couplings, Graph, IsingModel, ParamBounds, Spin, SpinConfig};
use crate::oracle::{self, MAX_ENUM_NODES};

#[derive(Debug, Clone)]
pub struct Variant {
    pub u: usize,
    pub v: usize,
    pub clique: usize,
    pub model: IsingModel,
}

#[derive(Debug, Clone)]
pub struct CliqueEnsemble {
    pub p: usize,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub base: IsingModel,
    pub variants: Vec<Variant>,
}

impl CliqueEnsemble {
    pub fn cliques(&self) -> usize {
        self.p / (self.d + 1)
    }

    /// Number of hypotheses `M`.
    pub fn m(&self) -> usize {
        self.variants.len()
    }

    /// Base and variant restricted to the clique containing the removed
    /// edge, with `u`, `v` mapped to clique-local indices.
    pub fn projection(&self, variant: usize) -> Result<Projection> {
        let var = self
            .variants
            .get(variant)
            .ok_or_else(|| Error::Precondition(format!("no variant {variant}")))?;
        let offset = var.clique * (self.d + 1);
        let (u, v) = (var.u - offset, var.v - offset);
        Ok(Projection {
            base: clique_model(self.d, self.alpha, self.beta, None)?,
            variant: clique_model(self.d, self.alpha, self.beta, Some((u, v)))?,
            u,
            v,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub base: IsingModel,
    pub variant: IsingModel,
    pub u: usize,
    pub v: usize,
}

fn clique_couplings(
    size: usize,
    offset: usize,
    alpha: f64,
    beta: f64,
    removed: Option<(usize, usize)>,
) -> Couplings {
    let mut c = Couplings::new();
    for a in 0..size {
        for b in a + 1..size {
            if removed == Some((a, b)) {
                continue;
            }
            let theta = if a / 2 == b / 2 { alpha } else { beta };
            c.insert(offset + a, offset + b, theta);
        }
    }
    c
}

/// A single `(d+1)`-clique from the ensemble, optionally with the
/// clique-local edge `removed` (which must be a matching edge) taken out.
pub fn clique_model(
    d: usize,
    alpha: f64,
    beta: f64,
    removed: Option<(usize, usize)>,
) -> Result<IsingModel> {
    let size = d + 1;
    let couplings = clique_couplings(size, 0, alpha, beta, removed);
    let graph = Graph::new(size, couplings.iter().map(|(e, _)| e))?;
    IsingModel::new(graph, couplings, ParamBounds::new(alpha, beta, d))
}

/// Builds the base model and its `M = floor(p/(d+1)) * (d+1)/2` single-edge
/// variants. Leftover nodes are isolated.
pub fn build_ensemble(p: usize, d: usize, alpha: f64, beta: f64) -> Result<CliqueEnsemble> {
    if d.is_multiple_of(2) {
        return Err(Error::Infeasible(format!(
            "clique degree must be odd, got d = {d}"
        )));
    }
    if p < d + 1 {
        return Err(Error::Infeasible(format!(
            "need p >= d + 1 = {}, got p = {p}",
            d + 1
        )));
    }
    let size = d + 1;
    let cliques = p / size;
    let bounds = ParamBounds::new(alpha, beta, d);
    let all = |removed: Option<(usize, usize, usize)>| -> Result<IsingModel> {
        let mut couplings = Couplings::new();
        for c in 0..cliques {
            let local = removed
                .filter(|&(rc, _, _)| rc == c)
                .map(|(_, a, b)| (a, b));
            for (e, theta) in clique_couplings(size, c * size, alpha, beta, local).iter() {
                couplings.insert(e.0, e.1, theta);
            }
        }
        let graph = Graph::new(p, couplings.iter().map(|(e, _)| e))?;
        IsingModel::new(graph, couplings, bounds)
    };
    let base = all(None)?;
    let mut variants = Vec::with_capacity(cliques * size / 2);
    for c in 0..cliques {
        for m in 0..size / 2 {
            let (a, b) = (2 * m, 2 * m + 1);
            variants.push(Variant {
                u: c * size + a,
                v: c * size + b,
                clique: c,
                model: all(Some((c, a, b)))?,
            });
        }
    }
    Ok(CliqueEnsemble {
        p,
        d,
        alpha,
        beta,
        base,
        variants,
    })
}

/// The single edge present in `base` but absent from `variant`, or `None`
/// when the two models are identical.
pub fn removed_edge(base: &IsingModel, variant: &IsingModel) -> Result<Option<(usize, usize)>> {
    if base.p() != variant.p() {
        return Err(Error::NotSingleEdgeVariant);
    }
    let mut missing = None;
    for ((i, j), theta) in base.couplings().iter() {
        let other = variant.coupling(i, j);
        if other == theta {
            continue;
        }
        if other != 0.0 || missing.is_some() {
            return Err(Error::NotSingleEdgeVariant);
        }
        missing = Some((i, j));
    }
    let extra = variant
        .couplings()
        .iter()
        .any(|((i, j), _)| !base.graph().has_edge(i, j));
    if extra {
        return Err(Error::NotSingleEdgeVariant);
    }
    Ok(missing)
}

fn log_probs(model: &IsingModel) -> Result<Vec<f64>> {
    let dist = oracle::exact_gibbs(model)?;
    let log_z = dist.log_partition_function();
    Ok((0..1usize << model.p())
        .map(|idx| oracle::energy(model, idx) - log_z)
        .collect())
}

/// `KL(P_variant || P_base)` of the stationary laws, by enumeration.
pub fn exact_c1(base: &IsingModel, variant: &IsingModel) -> Result<f64> {
    if removed_edge(base, variant)?.is_none() {
        return Ok(0.0);
    }
    let lv = log_probs(variant)?;
    let lb = log_probs(base)?;
    let kl: f64 = lv
        .iter()
        .zip(&lb)
        .map(|(&a, &b)| math::exp(a) * (a - b))
        .sum();
    Ok(kl.max(0.0))
}

/// `KL` between the update laws of node `u` under the two models, from
/// configuration `spins`.
fn update_kl(base: &IsingModel, variant: &IsingModel, spins: &[Spin], u: usize) -> f64 {
    let sv = variant.local_field_unchecked(spins, u);
    let sb = base.local_field_unchecked(spins, u);
    [1, -1]
        .iter()
        .map(|&s| {
            let lv = math::ln_heat_bath(s, sv);
            let lb = math::ln_heat_bath(s, sb);
            math::exp(lv) * (lv - lb)
        })
        .sum()
}

/// Per-step KL of the discrete chain with `p` nodes in total: an update
/// only differs between the models when `u` or `v` is picked, which by
/// symmetry gives `(2/p) E_{sigma ~ P_variant} KL_u(sigma)`.
pub fn exact_cl(base: &IsingModel, variant: &IsingModel, p: usize) -> Result<f64> {
    let Some((u, _)) = removed_edge(base, variant)? else {
        return Ok(0.0);
    };
    if p < base.p() {
        return Err(Error::Precondition(format!(
            "p = {p} is smaller than the clique"
        )));
    }
    let dist = oracle::exact_gibbs(variant)?;
    let n = variant.p();
    let mut expectation = 0.0;
    for (idx, &prob) in dist.probabilities().iter().enumerate() {
        let config = SpinConfig::from_index(idx, n);
        expectation += prob * update_kl(base, variant, config.spins(), u);
    }
    Ok((2.0 / p as f64) * expectation.max(0.0))
}

/// `C1 + (n-1) Cl`: the KL of `n` observed samples. `n = 0` is treated as
/// no observation at all.
pub fn kl_total(c1: f64, cl: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    c1 + (n - 1) as f64 * cl
}

/// `4 alpha + (n/p) 18 alpha d e^d e^{-2 beta d / 3}`.
pub fn kl_bound(n: u64, p: usize, alpha: f64, beta: f64, d: usize) -> f64 {
    let d = d as f64;
    4.0 * alpha
        + (n as f64 / p as f64) * 18.0 * alpha * d * math::exp(d) * math::exp(-2.0 * beta * d / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlReport {
    pub variant: usize,
    pub u: usize,
    pub v: usize,
    pub c1: f64,
    pub cl: f64,
    pub n: u64,
    pub total: f64,
    pub bound: f64,
}

impl KlReport {
    pub fn margin(&self) -> f64 {
        self.bound - self.total
    }
}

/// Exact KL report for one variant after `n` discrete samples.
pub fn variant_report(ensemble: &CliqueEnsemble, variant: usize, n: u64) -> Result<KlReport> {
    let proj = ensemble.projection(variant)?;
    guard(proj.base.p())?;
    let c1 = exact_c1(&proj.base, &proj.variant)?;
    let cl = exact_cl(&proj.base, &proj.variant, ensemble.p)?;
    let var = &ensemble.variants[variant];
    Ok(KlReport {
        variant,
        u: var.u,
        v: var.v,
        c1,
        cl,
        n,
        total: kl_total(c1, cl, n),
        bound: kl_bound(n, ensemble.p, ensemble.alpha, ensemble.beta, ensemble.d),
    })
}

fn guard(nodes: usize) -> Result<()> {
    if nodes > MAX_ENUM_NODES {
        return Err(Error::TooLarge {
            nodes,
            max: MAX_ENUM_NODES,
        });
    }
    Ok(())
}

/// Brute-force KL between the laws of `n`-sample discrete paths, enumerating
/// `(sigma^1, (I^l, sigma^l_{I^l})_{l=2..n})` with `sigma^1` stationary and
/// each step picking a node uniformly. Used to validate [`kl_total`].
pub fn path_space_kl(base: &IsingModel, variant: &IsingModel, n: u32) -> Result<f64> {
    const MAX_PATHS: f64 = 1e8;
    let p = base.p();
    if variant.p() != p {
        return Err(Error::NotSingleEdgeVariant);
    }
    if n == 0 {
        return Ok(0.0);
    }
    let paths = (1u64 << p) as f64 * math::powf((2 * p) as f64, f64::from(n - 1));
    if paths > MAX_PATHS {
        return Err(Error::TooLarge {
            nodes: p,
            max: MAX_ENUM_NODES,
        });
    }
    let lv = log_probs(variant)?;
    let lb = log_probs(base)?;
    let ln_pick = -math::ln(p as f64);
    let mut total = 0.0;
    let mut stack: Vec<(SpinConfig, u32, f64, f64)> = (0..1usize << p)
        .map(|idx| (SpinConfig::from_index(idx, p), 1, lv[idx], lb[idx]))
        .collect();
    while let Some((config, depth, log_qv, log_qb)) = stack.pop() {
        if depth == n {
            total += math::exp(log_qv) * (log_qv - log_qb);
            continue;
        }
        for i in 0..p {
            let sv = variant.local_field_unchecked(config.spins(), i);
            let sb = base.local_field_unchecked(config.spins(), i);
            for s in [1, -1] {
                let mut next = config.clone();
                next.set(i, s);
                stack.push((
                    next,
                    depth + 1,
                    log_qv + ln_pick + math::ln_heat_bath(s, sv),
                    log_qb + ln_pick + math::ln_heat_bath(s, sb),
                ));
            }
        }
    }
    Ok(total)
}

/// Largest `|log P_variant(s | sigma) - log P_base(s | sigma)|` over all
/// configurations, spins `s` and both endpoints of the removed edge.
pub fn max_update_log_ratio(base: &IsingModel, variant: &IsingModel) -> Result<f64> {
    let Some((u, v)) = removed_edge(base, variant)? else {
        return Ok(0.0);
    };
    guard(base.p())?;
    let p = base.p();
    let mut worst: f64 = 0.0;
    for idx in 0..1usize << p {
        let config = SpinConfig::from_index(idx, p);
        for node in [u, v] {
            let sv = variant.local_field_unchecked(config.spins(), node);
            let sb = base.local_field_unchecked(config.spins(), node);
            for s in [1, -1] {
                worst = worst.max((math::ln_heat_bath(s, sv) - math::ln_heat_bath(s, sb)).abs());
            }
        }
    }
    Ok(worst)
}

/// Largest `P_variant(sigma_u = -1 | sigma)` over configurations with
/// magnetization at least `d/3 + 2`, where `d` is taken from the model's
/// bounds. Returns `None` when no configuration qualifies.
pub fn max_flip_prob_under_high_magnetization(
    variant: &IsingModel,
    u: usize,
) -> Result<Option<f64>> {
    guard(variant.p())?;
    let p = variant.p();
    let d = variant.bounds().d as i64;
    let mut worst = None::<f64>;
    for idx in 0..1usize << p {
        let config = SpinConfig::from_index(idx, p);
        if 3 * config.magnetization() < d + 6 {
            continue;
        }
        let s = variant.local_field_unchecked(config.spins(), u);
        let minus = math::heat_bath(s).1;
        worst = Some(worst.map_or(minus, |w| w.max(minus)));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetizationTail {
    /// `P(|sum sigma| <= d/3 + 1)`
    pub exact: f64,
    /// `d (3e)^{d/3+1} e^{-beta d (d-3)/3}`
    pub bound: f64,
}

pub fn magnetization_bound(d: usize, beta: f64) -> f64 {
    let d = d as f64;
    d * math::powf(3.0 * core::f64::consts::E, d / 3.0 + 1.0)
        * math::exp(-beta * d * (d - 3.0) / 3.0)
}

fn magnetization_mass(model: &IsingModel, keep: impl Fn(i64) -> bool) -> Result<f64> {
    let dist = oracle::exact_gibbs(model)?;
    let p = model.p();
    Ok(dist
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(idx, _)| keep(SpinConfig::from_index(*idx, p).magnetization()))
        .map(|(_, &pr)| pr)
        .sum())
}

/// Exact low-magnetization probability of a clique model next to its tail
/// bound. `d` and `beta` come from the model's bounds.
pub fn magnetization_tail(model: &IsingModel) -> Result<MagnetizationTail> {
    let b = model.bounds();
    let d = b.d as i64;
    let exact = magnetization_mass(model, |m| 3 * m.abs() <= d + 3)?;
    Ok(MagnetizationTail {
        exact,
        bound: magnetization_bound(b.d, b.beta),
    })
}

/// `(2/p)(9 alpha e^{-2 beta d/3} + 2 alpha P(|sum sigma| < d/3 + 2))`, the
/// intermediate bound on `Cl` before the magnetization tail is replaced by
/// its closed form.
pub fn cl_intermediate_bound(variant: &IsingModel, p: usize) -> Result<f64> {
    let b = variant.bounds();
    let d = b.d as i64;
    let low = magnetization_mass(variant, |m| 3 * m.abs() < d + 6)?;
    let df = b.d as f64;
    Ok((2.0 / p as f64)
        * (9.0 * b.alpha * math::exp(-2.0 * b.beta * df / 3.0) + 2.0 * b.alpha * low))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoBound {
    pub gamma: f64,
    /// `(ln(M+1) - 1)/ln M - gamma`; only a valid risk bound when
    /// `applicable`.
    pub risk: f64,
    pub applicable: bool,
}

/// Fano's bound from the average KL: `gamma = sum(kl) / ((M+1) ln M)`,
/// applicable iff `0 < gamma < 1/8`.
pub fn fano_bound(kl_values: &[f64], m: usize) -> Result<FanoBound> {
    if m < 2 {
        return Err(Error::Precondition(format!(
            "Fano's bound needs M >= 2, got {m}"
        )));
    }
    if kl_values.len() != m {
        return Err(Error::Precondition(format!(
            "expected {m} KL values, got {}",
            kl_values.len()
        )));
    }
    let mf = m as f64;
    let gamma = kl_values.iter().sum::<f64>() / ((mf + 1.0) * math::ln(mf));
    Ok(fano_from_gamma(gamma, m))
}

/// Fano's bound for a given `gamma`.
pub fn fano_from_gamma(gamma: f64, m: usize) -> FanoBound {
    let mf = m as f64;
    FanoBound {
        gamma,
        risk: (math::ln(mf + 1.0) - 1.0) / math::ln(mf) - gamma,
        applicable: gamma > 0.0 && gamma < 0.125,
    }
}

/// Observation time below which no estimator reaches risk 1/2:
/// `e^{2 beta d/3} / (32 e^6 alpha) ln p`.
pub fn min_observation_time(p: usize, d: usize, alpha: f64, beta: f64) -> f64 {
    let d = d as f64;
    math::exp(2.0 * beta * d / 3.0) / (32.0 * math::exp(6.0) * alpha) * math::ln(p as f64)
}
