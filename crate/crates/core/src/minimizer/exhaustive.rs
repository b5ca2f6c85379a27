use crate::energy::kernel;
use crate::error::{Error, Result};
use crate::fractal::{squared_distance, Fractal};

use super::{check_problem, MinimizeResult, Strategy};

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Global minimum of the energy over all `n`-subsets of the depth-`depth`
/// nodes, in lexicographic subset order keeping the first minimum.
///
/// Partial sums only grow, so branches whose partial energy already reaches
/// the incumbent are cut without changing the result.
pub fn exhaustive_minimize(
    fractal: &Fractal,
    n: usize,
    s: f64,
    depth: usize,
    budget: u64,
) -> Result<MinimizeResult> {
    check_problem(fractal, n, s)?;
    let node_budget = fractal.map_count().saturating_pow(depth as u32 + 1);
    let nodes = fractal.nodes(depth, node_budget)?;
    let subsets = binomial(nodes.len(), n);
    if subsets > budget as u128 {
        return Err(Error::Resource {
            what: "exhaustive subset enumeration",
            needed: subsets,
            budget: budget as u128,
        });
    }
    if subsets == 0 {
        return Err(Error::Domain(format!(
            "depth {depth} has {} nodes, fewer than N = {n}",
            nodes.len()
        )));
    }
    let count = nodes.len();
    let half_s = 0.5 * s;
    let mut pair = vec![0.0; count * count];
    for i in 0..count {
        for j in i + 1..count {
            let v = kernel(squared_distance(&nodes[i].1, &nodes[j].1), half_s);
            pair[i * count + j] = v;
            pair[j * count + i] = v;
        }
    }

    let mut search = SubsetSearch {
        pair: &pair,
        count,
        n,
        chosen: Vec::with_capacity(n),
        best_energy: f64::INFINITY,
        best: Vec::new(),
        visited: 0,
    };
    search.descend(0, 0.0);

    let addresses = search.best.iter().map(|&i| nodes[i].0.clone()).collect();
    MinimizeResult::new(fractal, addresses, s, Strategy::Exhaustive, true, search.visited)
}

struct SubsetSearch<'a> {
    pair: &'a [f64],
    count: usize,
    n: usize,
    chosen: Vec<usize>,
    best_energy: f64,
    best: Vec<usize>,
    visited: usize,
}

impl SubsetSearch<'_> {
    fn descend(&mut self, start: usize, partial: f64) {
        self.visited += 1;
        if self.chosen.len() == self.n {
            if partial < self.best_energy {
                self.best_energy = partial;
                self.best = self.chosen.clone();
            }
            return;
        }
        let remaining = self.n - self.chosen.len();
        for i in start..=self.count - remaining {
            let row = &self.pair[i * self.count..(i + 1) * self.count];
            let added: f64 = self.chosen.iter().map(|&c| row[c]).sum();
            let next = partial + added;
            if next >= self.best_energy {
                continue;
            }
            self.chosen.push(i);
            self.descend(i + 1, next);
            self.chosen.pop();
        }
    }
}
