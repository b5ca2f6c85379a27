//! Near-minimizers of the Riesz energy on a fractal.
//!
//! Points are kept symbolic ([`PointAddress`]), so every candidate lies
//! exactly on the fractal. Three strategies are available:
//!
//! - [`Strategy::Exhaustive`]: global minimum over all `N`-subsets of the
//!   depth-`depth` nodes (see [`Fractal::nodes`]); certified at that depth.
//! - [`Strategy::LocalSearch`]: relocation/descent moves over cells, best of
//!   several restarts.
//! - [`Strategy::LiftSeeded`]: minimize at `n0`, then apply the similitude
//!   lift `ω ↦ ⋃ ψ_m(ω)` repeatedly, polishing after each lift.

mod exhaustive;
mod lift;
mod local_search;
mod packing;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{Configuration, EnergyRecord};
use crate::error::{Error, Result};
use crate::fractal::{squared_distance, Fractal, PointAddress};

pub use exhaustive::{binomial, exhaustive_minimize};
pub use lift::{lift, lift_addresses, lift_bound, LiftBound};
pub use local_search::{local_search_from, local_search_minimize};
pub use packing::{best_packing, PackingResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    LocalSearch,
    LiftSeeded,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::LocalSearch => "local-search",
            Strategy::LiftSeeded => "lift-seeded",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Strategy::Exhaustive),
            "local-search" => Ok(Strategy::LocalSearch),
            "lift-seeded" => Ok(Strategy::LiftSeeded),
            _ => Err(Error::Usage(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    /// Address depth of the initial grid.
    pub depth: usize,
    /// Longest address local moves may create.
    pub max_depth: usize,
    pub restarts: usize,
    /// Accepted moves allowed per search.
    pub moves_budget: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Largest number of subsets an exhaustive search may enumerate.
    pub enumeration_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            depth: 3,
            max_depth: 32,
            restarts: 4,
            moves_budget: 200_000,
            seed: 0,
            strategy: Strategy::LocalSearch,
            enumeration_budget: 50_000_000,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.depth > self.max_depth {
            return Err(Error::Usage(format!(
                "depth {} exceeds max_depth {}",
                self.depth, self.max_depth
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Usage("restarts must be at least 1".into()));
        }
        if self.moves_budget == 0 || self.enumeration_budget == 0 {
            return Err(Error::Usage("budgets must be positive".into()));
        }
        Ok(())
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub config: Configuration,
    pub record: EnergyRecord,
    pub strategy: Strategy,
    /// Only exhaustive searches are certified, and only at their depth.
    pub certified: bool,
    pub iterations: usize,
}

impl MinimizeResult {
    pub(crate) fn new(
        fractal: &Fractal,
        addresses: Vec<PointAddress>,
        s: f64,
        strategy: Strategy,
        certified: bool,
        iterations: usize,
    ) -> Result<Self> {
        let config = Configuration::from_addresses(fractal, addresses)?;
        let record = EnergyRecord::of(&config, s, fractal.dimension())?;
        Ok(Self {
            config,
            record,
            strategy,
            certified,
            iterations,
        })
    }

    pub fn addresses(&self) -> &[PointAddress] {
        self.config.addresses().unwrap_or(&[])
    }
}

pub(crate) fn check_problem(fractal: &Fractal, n: usize, s: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("minimization needs N ≥ 2, got {n}")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("Riesz exponent {s} is not positive")));
    }
    if fractal.map_count() < 2 {
        return Err(Error::Domain("a one-map fractal holds a single point".into()));
    }
    Ok(())
}

/// Runs the strategy selected in `opts`.
pub fn minimize(fractal: &Fractal, n: usize, s: f64, opts: &SearchOptions) -> Result<MinimizeResult> {
    opts.validate()?;
    match opts.strategy {
        Strategy::Exhaustive => exhaustive_minimize(fractal, n, s, opts.depth, opts.enumeration_budget),
        Strategy::LocalSearch => local_search_minimize(fractal, n, s, opts),
        Strategy::LiftSeeded => lift_seeded_minimize(fractal, n, s, opts),
    }
}

/// Splits `n = M^k · n0` with `n0 ≥ 2` as small as possible.
pub fn geometric_base(n: usize, m: usize) -> (usize, u32) {
    let (mut base, mut k) = (n, 0);
    while m > 1 && base % m == 0 && base / m >= 2 {
        base /= m;
        k += 1;
    }
    (base, k)
}

/// Minimizes at the geometric base of `n`, then lifts and polishes.
pub fn lift_seeded_minimize(
    fractal: &Fractal,
    n: usize,
    s: f64,
    opts: &SearchOptions,
) -> Result<MinimizeResult> {
    check_problem(fractal, n, s)?;
    opts.validate()?;
    let (base, lifts) = geometric_base(n, fractal.map_count());
    let mut best = local_search_minimize(fractal, base, s, opts)?;
    let mut iterations = best.iterations;
    for _ in 0..lifts {
        let lifted = lift_addresses(fractal, best.addresses())?;
        best = local_search_from(fractal, s, lifted, opts)?;
        iterations += best.iterations;
    }
    best.strategy = Strategy::LiftSeeded;
    best.iterations = iterations;
    Ok(best)
}

/// Greedy farthest-point selection of `n` nodes starting from `start`;
/// ties go to the lowest index.
pub(crate) fn farthest_point_indices(points: &[Vec<f64>], n: usize, start: usize) -> Vec<usize> {
    let mut chosen = vec![start];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[start]))
        .collect();
    while chosen.len() < n.min(points.len()) {
        let mut next = usize::MAX;
        let mut far = -1.0;
        for (k, &d) in nearest.iter().enumerate() {
            if d > far {
                far = d;
                next = k;
            }
        }
        chosen.push(next);
        for (k, p) in points.iter().enumerate() {
            nearest[k] = nearest[k].min(squared_distance(p, &points[next]));
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_validation() {
        assert!(SearchOptions::default().validate().is_ok());
        let bad = SearchOptions {
            depth: 9,
            max_depth: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchOptions {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("lift-seeded".parse::<Strategy>().unwrap(), Strategy::LiftSeeded);
        assert!("annealing".parse::<Strategy>().is_err());
    }

    #[test]
    fn geometric_bases() {
        assert_eq!(geometric_base(2, 2), (2, 0));
        assert_eq!(geometric_base(8, 2), (2, 2));
        assert_eq!(geometric_base(12, 2), (3, 2));
        assert_eq!(geometric_base(5, 2), (5, 0));
        assert_eq!(geometric_base(18, 3), (2, 2));
    }

    #[test]
    fn farthest_point_picks_extremes() {
        let pts: Vec<Vec<f64>> = [0.0, 0.2, 0.5, 0.9, 1.0].iter().map(|x| vec![*x]).collect();
        assert_eq!(farthest_point_indices(&pts, 3, 0), vec![0, 4, 2]);
    }
}
