use rayon::prelude::*;
use serde::Serialize;

use crate::energy::min_pairwise_distance;
use crate::error::{Error, Result};
use crate::fractal::Fractal;
use crate::minimizer::{
    exhaustive_minimize, lift_addresses, local_search_from, local_search_minimize, minimize,
    MinimizeResult, SearchOptions, Strategy,
};
use crate::rng::split_seed;

use super::{lift_chain_bound, require_hypersingular, tail_bound, theta};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub k: u32,
    pub n: usize,
    pub energy: f64,
    pub normalized: f64,
    /// `|a_k − a_{k−1}|`; absent on the first row.
    pub delta: Option<f64>,
    /// Largest further rise of the normalized energy along lifts from `n`.
    pub tail_bound: f64,
    /// Energy bound after lifting the first row's configuration `k − 1` times.
    pub chain_bound: f64,
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricLimit {
    pub n0: usize,
    /// The normalized energy at the largest `k`.
    pub limit_estimate: f64,
    pub rows: Vec<LimitRow>,
    /// Every delta is at most the previous row's tail bound.
    pub cauchy: bool,
    /// Every energy is at most its chain bound.
    pub chain_holds: bool,
}

/// Normalized near-minimal energies along `N = M^k n0`, `k = 1..=k_max`.
/// The first size is minimized from scratch (exhaustively when the options
/// ask for it); every later one is the lift of its predecessor, polished by
/// local search.
pub fn geometric_limit(
    fractal: &Fractal,
    s: f64,
    n0: usize,
    k_max: u32,
    opts: &SearchOptions,
) -> Result<GeometricLimit> {
    fractal.require_equal_ratios()?;
    require_hypersingular(fractal, s)?;
    opts.validate()?;
    if n0 == 0 || k_max == 0 {
        return Err(Error::Domain("geometric limit needs n0 ≥ 1 and k_max ≥ 1".into()));
    }
    let m = fractal.map_count();
    let mut rows: Vec<LimitRow> = Vec::with_capacity(k_max as usize);
    let mut previous: Option<MinimizeResult> = None;
    let mut first: Option<(usize, f64)> = None;
    for k in 1..=k_max {
        let n = m
            .checked_pow(k)
            .and_then(|p| p.checked_mul(n0))
            .ok_or_else(|| Error::Domain(format!("M^{k} · {n0} overflows")))?;
        let result = match &previous {
            None if opts.strategy == Strategy::Exhaustive => {
                exhaustive_minimize(fractal, n, s, opts.depth, opts.enumeration_budget)?
            }
            None => local_search_minimize(fractal, n, s, opts)?,
            Some(prev) => {
                let lifted = lift_addresses(fractal, prev.addresses())?;
                local_search_from(fractal, s, lifted, opts)?
            }
        };
        let (n_first, e_first) = *first.get_or_insert((n, result.record.energy));
        let normalized = result.record.normalized;
        rows.push(LimitRow {
            k,
            n,
            energy: result.record.energy,
            normalized,
            delta: rows.last().map(|r| (normalized - r.normalized).abs()),
            tail_bound: tail_bound(fractal, n, s)?,
            chain_bound: lift_chain_bound(fractal, n_first, e_first, k - 1, s)?,
            min_distance: min_pairwise_distance(&result.config)?,
        });
        log::info!("geometric limit: k = {k}, N = {n}, normalized = {normalized}");
        previous = Some(result);
    }
    let cauchy = rows
        .windows(2)
        .all(|w| w[1].delta.is_some_and(|delta| delta <= w[0].tail_bound));
    let chain_holds = rows.iter().all(|r| r.energy <= r.chain_bound * (1.0 + 1e-12));
    Ok(GeometricLimit {
        n0,
        limit_estimate: rows.last().map_or(f64::NAN, |r| r.normalized),
        rows,
        cauchy,
        chain_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GSample {
    pub n: usize,
    pub theta: f64,
    pub bin: usize,
    pub energy: f64,
    pub normalized: f64,
}

/// One θ bin `[low, high)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GCurvePoint {
    pub bin: usize,
    pub theta: f64,
    pub theta_low: f64,
    pub theta_high: f64,
    pub n_values: Vec<usize>,
    pub normalized: Vec<f64>,
    /// Normalized energy at the largest `N` in the bin.
    pub estimate: Option<f64>,
    /// `max − min` of the bin's normalized energies.
    pub spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GCurve {
    pub bins: Vec<GCurvePoint>,
    pub samples: Vec<GSample>,
    pub empty_bins: Vec<usize>,
    /// Largest `|estimate_{b+1} − estimate_b|` over adjacent non-empty bins.
    pub max_adjacent_jump: Option<f64>,
    /// `max / min` of the bin estimates: the empirical liminf/limsup gap.
    pub empirical_gap: Option<f64>,
}

fn per_n_options(opts: &SearchOptions, n: usize) -> SearchOptions {
    SearchOptions {
        seed: split_seed(opts.seed, n as u64),
        ..opts.clone()
    }
}

fn minimize_range(
    fractal: &Fractal,
    s: f64,
    ns: &[usize],
    opts: &SearchOptions,
) -> Result<Vec<MinimizeResult>> {
    ns.par_iter()
        .map(|&n| minimize(fractal, n, s, &per_n_options(opts, n)))
        .collect()
}

/// Groups `N ∈ [n_min, n_max]` by `{log_M N}` into `bins` half-open bins and
/// collects the normalized near-minimal energies in each.
pub fn g_curve(
    fractal: &Fractal,
    s: f64,
    bins: usize,
    n_min: usize,
    n_max: usize,
    opts: &SearchOptions,
) -> Result<GCurve> {
    fractal.require_equal_ratios()?;
    require_hypersingular(fractal, s)?;
    opts.validate()?;
    let m = fractal.map_count();
    if bins < 4 {
        return Err(Error::Domain(format!("g-curve needs at least 4 bins, got {bins}")));
    }
    if n_min < 2 || n_max < n_min.saturating_mul(m * m) {
        return Err(Error::Domain(format!(
            "g-curve needs 2 ≤ N_min and N_max ≥ M² N_min, got [{n_min}, {n_max}]"
        )));
    }
    let ns: Vec<usize> = (n_min..=n_max).collect();
    let results = minimize_range(fractal, s, &ns, opts)?;

    let width = 1.0 / bins as f64;
    let mut points: Vec<GCurvePoint> = (0..bins)
        .map(|b| GCurvePoint {
            bin: b,
            theta: (b as f64 + 0.5) * width,
            theta_low: b as f64 * width,
            theta_high: (b + 1) as f64 * width,
            n_values: Vec::new(),
            normalized: Vec::new(),
            estimate: None,
            spread: None,
        })
        .collect();
    let mut samples = Vec::with_capacity(ns.len());
    for (&n, r) in ns.iter().zip(&results) {
        let t = theta(n, m);
        let bin = ((t * bins as f64) as usize).min(bins - 1);
        points[bin].n_values.push(n);
        points[bin].normalized.push(r.record.normalized);
        samples.push(GSample {
            n,
            theta: t,
            bin,
            energy: r.record.energy,
            normalized: r.record.normalized,
        });
    }
    for p in &mut points {
        p.estimate = p.normalized.last().copied();
        if !p.normalized.is_empty() {
            let hi = p.normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = p.normalized.iter().copied().fold(f64::INFINITY, f64::min);
            p.spread = Some(hi - lo);
        }
    }
    let empty_bins: Vec<usize> = points.iter().filter(|p| p.estimate.is_none()).map(|p| p.bin).collect();
    for b in &empty_bins {
        log::warn!("g-curve bin {b} received no N");
    }
    let estimates: Vec<f64> = points.iter().filter_map(|p| p.estimate).collect();
    let max_adjacent_jump = estimates
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .reduce(f64::max);
    let empirical_gap = (!estimates.is_empty()).then(|| {
        let hi = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = estimates.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    });
    Ok(GCurve {
        bins: points,
        samples,
        empty_bins,
        max_adjacent_jump,
        empirical_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityRow {
    pub n: usize,
    pub energy: f64,
    pub normalized: f64,
    /// `E(N) − E(N−1)`; absent on the first row.
    pub increment: Option<f64>,
    /// `increment / (N−1)^{s/d}`, the constant in the increment bound.
    pub increment_coeff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
    /// Sizes `N` with `E(N) < E(N−1)`: search failures, not theory failures.
    pub violations: Vec<usize>,
    pub monotone: bool,
    pub coeff_min: Option<f64>,
    pub coeff_max: Option<f64>,
}

impl MonotonicityReport {
    /// `coeff_max / coeff_min`.
    pub fn coeff_spread(&self) -> Option<f64> {
        Some(self.coeff_max? / self.coeff_min?)
    }
}

/// Minimizes every `N ∈ [n_min, n_max]` with the same options and checks
/// `E(N+1) ≥ E(N)` together with the increment bound `E(N+1) − E(N) ≤ C N^{s/d}`.
pub fn monotonicity_check(
    fractal: &Fractal,
    s: f64,
    n_min: usize,
    n_max: usize,
    opts: &SearchOptions,
) -> Result<MonotonicityReport> {
    opts.validate()?;
    if n_min < 2 || n_max <= n_min {
        return Err(Error::Domain(format!(
            "monotonicity needs 2 ≤ N_min < N_max, got [{n_min}, {n_max}]"
        )));
    }
    let p = s / fractal.dimension();
    let ns: Vec<usize> = (n_min..=n_max).collect();
    let results = minimize_range(fractal, s, &ns, opts)?;
    let mut rows: Vec<MonotonicityRow> = Vec::with_capacity(ns.len());
    let mut violations = Vec::new();
    for (&n, r) in ns.iter().zip(&results) {
        let increment = rows.last().map(|prev| r.record.energy - prev.energy);
        if increment.is_some_and(|inc| inc < 0.0) {
            violations.push(n);
        }
        rows.push(MonotonicityRow {
            n,
            energy: r.record.energy,
            normalized: r.record.normalized,
            increment,
            increment_coeff: increment.map(|inc| inc / ((n - 1) as f64).powf(p)),
        });
    }
    let coeffs: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.increment_coeff)
        .filter(|c| *c > 0.0)
        .collect();
    Ok(MonotonicityReport {
        monotone: violations.is_empty(),
        violations,
        coeff_min: coeffs.iter().copied().reduce(f64::min),
        coeff_max: coeffs.iter().copied().reduce(f64::max),
        rows,
    })
}
