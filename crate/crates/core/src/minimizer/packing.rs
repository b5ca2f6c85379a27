//! Best packing: maximize the minimal pairwise distance over grid nodes.

use crate::energy::{min_pairwise_distance, Configuration};
use crate::error::{Error, Result};
use crate::fractal::{distance, Fractal};

use super::{binomial, farthest_point_indices, SearchOptions};

#[derive(Debug, Clone)]
pub struct PackingResult {
    pub config: Configuration,
    /// Minimal pairwise distance of `config`.
    pub delta: f64,
    /// True when every `N`-subset of the grid was examined.
    pub certified: bool,
    pub iterations: usize,
}

/// Maximin configuration over the depth-`depth` nodes. Exhaustive (first
/// maximum in lexicographic order) within the enumeration budget, otherwise
/// farthest-point greedy followed by single-swap exchange.
pub fn best_packing(
    fractal: &Fractal,
    n: usize,
    depth: usize,
    opts: &SearchOptions,
) -> Result<PackingResult> {
    if n < 2 {
        return Err(Error::Domain(format!("packing needs N ≥ 2, got {n}")));
    }
    let nodes = fractal.nodes(depth, usize::MAX)?;
    if nodes.len() < n {
        return Err(Error::Domain(format!(
            "depth {depth} has {} nodes, fewer than N = {n}",
            nodes.len()
        )));
    }
    let points: Vec<Vec<f64>> = nodes.iter().map(|(_, x)| x.clone()).collect();
    let count = points.len();
    let mut dist = vec![0.0; count * count];
    for i in 0..count {
        for j in i + 1..count {
            let d = distance(&points[i], &points[j]);
            dist[i * count + j] = d;
            dist[j * count + i] = d;
        }
    }

    let (picks, certified, iterations) = if binomial(count, n) <= opts.enumeration_budget as u128 {
        let mut search = Maximin {
            dist: &dist,
            count,
            n,
            chosen: Vec::with_capacity(n),
            best_delta: 0.0,
            best: Vec::new(),
            visited: 0,
        };
        search.descend(0, f64::INFINITY);
        (search.best, true, search.visited)
    } else {
        log::warn!("packing N = {n} over {count} nodes exceeds the budget; using exchange heuristic");
        let (picks, swaps) = exchange(&dist, count, farthest_point_indices(&points, n, 0), opts.moves_budget);
        (picks, false, swaps)
    };

    let addresses = picks.iter().map(|&k| nodes[k].0.clone()).collect();
    let config = Configuration::from_addresses(fractal, addresses)?;
    let delta = min_pairwise_distance(&config)?;
    Ok(PackingResult {
        config,
        delta,
        certified,
        iterations,
    })
}

struct Maximin<'a> {
    dist: &'a [f64],
    count: usize,
    n: usize,
    chosen: Vec<usize>,
    best_delta: f64,
    best: Vec<usize>,
    visited: usize,
}

impl Maximin<'_> {
    fn descend(&mut self, start: usize, partial: f64) {
        self.visited += 1;
        if self.chosen.len() == self.n {
            if partial > self.best_delta {
                self.best_delta = partial;
                self.best = self.chosen.clone();
            }
            return;
        }
        let remaining = self.n - self.chosen.len();
        for i in start..=self.count - remaining {
            let row = &self.dist[i * self.count..(i + 1) * self.count];
            let next = self.chosen.iter().map(|&c| row[c]).fold(partial, f64::min);
            if next <= self.best_delta {
                continue;
            }
            self.chosen.push(i);
            self.descend(i + 1, next);
            self.chosen.pop();
        }
    }
}

/// Packing quality: minimal distance, then fewer pairs attaining it.
fn score(dist: &[f64], count: usize, picks: &[usize]) -> (f64, usize) {
    let mut min = f64::INFINITY;
    let mut hits = 0;
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            let d = dist[i * count + j];
            if d < min {
                min = d;
                hits = 1;
            } else if d == min {
                hits += 1;
            }
        }
    }
    (min, hits)
}

fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn exchange(dist: &[f64], count: usize, mut picks: Vec<usize>, budget: usize) -> (Vec<usize>, usize) {
    let mut current = score(dist, count, &picks);
    let mut swaps = 0;
    'sweep: loop {
        for slot in 0..picks.len() {
            for candidate in 0..count {
                if picks.contains(&candidate) {
                    continue;
                }
                let old = picks[slot];
                picks[slot] = candidate;
                let trial = score(dist, count, &picks);
                if better(trial, current) {
                    current = trial;
                    swaps += 1;
                    if swaps >= budget {
                        break 'sweep;
                    }
                    continue 'sweep;
                }
                picks[slot] = old;
            }
        }
        break;
    }
    picks.sort_unstable();
    (picks, swaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cantor() -> Fractal {
        Fractal::cantor(1.0 / 3.0).unwrap()
    }

    #[test]
    fn cantor_packing_constants() {
        let opts = SearchOptions::default();
        let two = best_packing(&cantor(), 2, 3, &opts).unwrap();
        assert!(two.certified);
        assert_eq!(two.delta, 1.0);
        let three = best_packing(&cantor(), 3, 3, &opts).unwrap();
        assert_relative_eq!(three.delta, 1.0 / 3.0, epsilon = 1e-15);
        let four = best_packing(&cantor(), 4, 3, &opts).unwrap();
        assert_relative_eq!(four.delta, 1.0 / 3.0, epsilon = 1e-15);
        let xs = four.config.coords();
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[3], 1.0);
    }

    #[test]
    fn heuristic_fallback_is_flagged() {
        let opts = SearchOptions {
            enumeration_budget: 10,
            ..Default::default()
        };
        let r = best_packing(&cantor(), 8, 3, &opts).unwrap();
        assert!(!r.certified);
        // eight points: two per depth-2 cell, so δ = 1/27 (gap inside a depth-2 cell's children)
        let exact = best_packing(&cantor(), 8, 3, &SearchOptions::default()).unwrap();
        assert!(r.delta <= exact.delta + 1e-15);
        assert!(r.delta > 0.0);
    }

    #[test]
    fn too_few_nodes() {
        assert!(best_packing(&cantor(), 9, 1, &SearchOptions::default()).is_err());
        assert!(best_packing(&cantor(), 1, 1, &SearchOptions::default()).is_err());
    }
}
