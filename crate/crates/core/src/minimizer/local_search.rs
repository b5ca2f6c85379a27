//! Cell-structured local search.
//!
//! The fractal is totally disconnected, so instead of gradient steps each
//! point is moved between symbolic cells. For a point `w·t^∞` with
//! `w = (m_1, …, m_l)` the move set is
//!
//! - relocation: replace `m_k` by a sibling index, keeping the rest of the word;
//! - jump: truncate after a sibling `m'_k` and end in any fixed point tail;
//! - tail change: swap the periodic tail;
//! - descent: append one index (up to `max_depth`), with any tail;
//! - exchange: any node of the initial grid, when that grid is small.
//!
//! Each sweep visits the points in order and applies the best strictly
//! improving move of each. The search stops after a sweep with no
//! improvement or when the move budget is spent.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::energy::kernel;
use crate::error::{Error, Result};
use crate::fractal::{squared_distance, CellAddress, Fractal, PointAddress};
use crate::rng;

use super::{check_problem, farthest_point_indices, MinimizeResult, SearchOptions, Strategy};

/// Exchange moves are offered only when `grid × N` stays below this.
const EXCHANGE_WORK_LIMIT: usize = 1 << 16;

/// Relative decrease a move must achieve to count as an improvement.
const IMPROVEMENT: f64 = 1e-13;

pub fn local_search_minimize(
    fractal: &Fractal,
    n: usize,
    s: f64,
    opts: &SearchOptions,
) -> Result<MinimizeResult> {
    check_problem(fractal, n, s)?;
    opts.validate()?;
    fractal.require_separated()?;
    let m = fractal.map_count();
    let mut depth = opts.depth;
    while m.saturating_pow(depth as u32 + 1) < n {
        depth += 1;
    }
    if depth > opts.max_depth {
        return Err(Error::Usage(format!(
            "N = {n} needs initial depth {depth} beyond max_depth {}",
            opts.max_depth
        )));
    }
    let nodes = fractal.nodes(depth, usize::MAX)?;
    let positions: Vec<Vec<f64>> = nodes.iter().map(|(_, x)| x.clone()).collect();
    let exchange = if nodes.len() * n <= EXCHANGE_WORK_LIMIT {
        nodes.clone()
    } else {
        Vec::new()
    };

    let runs: Vec<Result<(f64, Vec<PointAddress>, usize)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|restart| {
            let picks = initial_indices(&positions, n, restart, opts.seed);
            let start = picks.iter().map(|&k| nodes[k].0.clone()).collect();
            let mut search = Search::new(fractal, s, opts.max_depth, start, &exchange);
            let moves = search.run(opts.moves_budget);
            Ok((search.total_energy(), search.addresses, moves))
        })
        .collect();

    let mut best: Option<(f64, Vec<PointAddress>, usize)> = None;
    let mut iterations = 0;
    for run in runs {
        let run = run?;
        iterations += run.2;
        if best.as_ref().is_none_or(|b| run.0 < b.0) {
            best = Some(run);
        }
    }
    let (_, addresses, _) = best.expect("at least one restart");
    MinimizeResult::new(fractal, addresses, s, Strategy::LocalSearch, false, iterations)
}

/// Polishes a given configuration with the same move set (no exchange grid).
pub fn local_search_from(
    fractal: &Fractal,
    s: f64,
    start: Vec<PointAddress>,
    opts: &SearchOptions,
) -> Result<MinimizeResult> {
    check_problem(fractal, start.len(), s)?;
    fractal.require_separated()?;
    for a in &start {
        fractal.check_address(&a.cell)?;
    }
    let mut search = Search::new(fractal, s, opts.max_depth, start, &[]);
    if let Some((i, j)) = search.coincident_pair() {
        return Err(Error::Singular { first: i, second: j });
    }
    let moves = search.run(opts.moves_budget);
    MinimizeResult::new(fractal, search.addresses, s, Strategy::LocalSearch, false, moves)
}

/// Restart 0 is the deterministic farthest-point grid; odd restarts grow a
/// farthest-point set from a random node, even ones draw a uniform subset.
fn initial_indices(points: &[Vec<f64>], n: usize, restart: usize, seed: u64) -> Vec<usize> {
    if restart == 0 {
        return farthest_point_indices(points, n, 0);
    }
    let mut rng = rng::stream(seed, restart as u64);
    if restart % 2 == 1 {
        let start = rng.random_range(0..points.len());
        farthest_point_indices(points, n, start)
    } else {
        let mut picks = sample(&mut rng, points.len(), n).into_vec();
        picks.sort_unstable();
        picks
    }
}

struct Search<'a> {
    fractal: &'a Fractal,
    half_s: f64,
    max_depth: usize,
    dim: usize,
    addresses: Vec<PointAddress>,
    coords: Vec<f64>,
    exchange: &'a [(PointAddress, Vec<f64>)],
}

impl<'a> Search<'a> {
    fn new(
        fractal: &'a Fractal,
        s: f64,
        max_depth: usize,
        addresses: Vec<PointAddress>,
        exchange: &'a [(PointAddress, Vec<f64>)],
    ) -> Self {
        let dim = fractal.ambient_dim();
        let mut coords = vec![0.0; addresses.len() * dim];
        for (a, chunk) in addresses.iter().zip(coords.chunks_mut(dim)) {
            fractal.position_into(a, chunk);
        }
        Self {
            fractal,
            half_s: 0.5 * s,
            max_depth,
            dim,
            addresses,
            coords,
            exchange,
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn coincident_pair(&self) -> Option<(usize, usize)> {
        let n = self.addresses.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .find(|&(i, j)| self.point(i) == self.point(j))
    }

    /// `Σ_{j≠skip} |y − x_j|^{−s}`, infinite on collision.
    fn point_energy(&self, y: &[f64], skip: usize) -> f64 {
        let mut total = 0.0;
        for (j, x) in self.coords.chunks(self.dim).enumerate() {
            if j == skip {
                continue;
            }
            let d2 = squared_distance(x, y);
            if d2 == 0.0 {
                return f64::INFINITY;
            }
            total += kernel(d2, self.half_s);
        }
        total
    }

    fn total_energy(&self) -> f64 {
        let n = self.addresses.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                total += kernel(squared_distance(self.point(i), self.point(j)), self.half_s);
            }
        }
        2.0 * total
    }

    fn candidates(&self, current: &PointAddress) -> Vec<PointAddress> {
        let m = self.fractal.map_count();
        let word = current.cell.indices();
        let mut out = Vec::new();
        for (k, &letter) in word.iter().enumerate() {
            for sibling in (0..m).filter(|&x| x != letter) {
                let mut moved = word.to_vec();
                moved[k] = sibling;
                out.push(PointAddress::new(CellAddress(moved), current.tail));
                for tail in 0..m {
                    let mut jump = word[..k].to_vec();
                    jump.push(sibling);
                    out.push(PointAddress::new(CellAddress(jump), tail));
                }
            }
        }
        for tail in (0..m).filter(|&t| t != current.tail) {
            out.push(PointAddress::new(current.cell.clone(), tail));
        }
        if word.len() < self.max_depth {
            for child in 0..m {
                for tail in 0..m {
                    if child == current.tail && tail == current.tail {
                        continue;
                    }
                    out.push(PointAddress::new(current.cell.child(child), tail));
                }
            }
        }
        out
    }

    fn run(&mut self, budget: usize) -> usize {
        let n = self.addresses.len();
        let mut moves = 0;
        let mut y = vec![0.0; self.dim];
        loop {
            let mut improved = false;
            for i in 0..n {
                let current = self.point_energy(self.point(i), i);
                let mut best_energy = current * (1.0 - IMPROVEMENT);
                let mut best: Option<(PointAddress, Vec<f64>)> = None;
                for cand in self.candidates(&self.addresses[i]) {
                    self.fractal.position_into(&cand, &mut y);
                    let e = self.point_energy(&y, i);
                    if e < best_energy {
                        best_energy = e;
                        best = Some((cand, y.clone()));
                    }
                }
                for (cand, x) in self.exchange {
                    let e = self.point_energy(x, i);
                    if e < best_energy {
                        best_energy = e;
                        best = Some((cand.clone(), x.clone()));
                    }
                }
                if let Some((address, x)) = best {
                    self.addresses[i] = address.canonical();
                    self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(&x);
                    moves += 1;
                    improved = true;
                    if moves >= budget {
                        return moves;
                    }
                }
            }
            if !improved {
                return moves;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::riesz_energy;
    use crate::minimizer::exhaustive_minimize;

    fn cantor() -> Fractal {
        Fractal::cantor(1.0 / 3.0).unwrap()
    }

    #[test]
    fn two_points_reach_the_endpoints() {
        for seed in [0, 1, 99] {
            let opts = SearchOptions {
                seed,
                ..Default::default()
            };
            let r = local_search_minimize(&cantor(), 2, 3.0, &opts).unwrap();
            assert!((r.record.energy - 2.0).abs() < 1e-9, "{}", r.record.energy);
            assert!(!r.certified);
        }
    }

    #[test]
    fn matches_or_beats_the_exhaustive_oracle() {
        let c = cantor();
        let s = 6.0;
        let oracle = exhaustive_minimize(&c, 4, s, 4, 1 << 24).unwrap();
        let r = local_search_minimize(&c, 4, s, &SearchOptions::default()).unwrap();
        assert!(r.record.energy <= oracle.record.energy * (1.0 + 1e-9));
    }

    #[test]
    fn more_restarts_never_hurt() {
        let c = cantor();
        let one = SearchOptions {
            restarts: 1,
            seed: 5,
            ..Default::default()
        };
        let eight = SearchOptions {
            restarts: 8,
            ..one.clone()
        };
        let a = local_search_minimize(&c, 7, 2.0, &one).unwrap();
        let b = local_search_minimize(&c, 7, 2.0, &eight).unwrap();
        assert!(b.record.energy <= a.record.energy);
    }

    #[test]
    fn polishing_never_increases_energy() {
        let c = cantor();
        let start: Vec<PointAddress> = ["1.1.2", "1.2", "2.1.2", "2.2.1", "2*2"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let before = riesz_energy(
            &crate::energy::Configuration::from_addresses(&c, start.clone()).unwrap(),
            3.0,
        )
        .unwrap();
        let r = local_search_from(&c, 3.0, start, &SearchOptions::default()).unwrap();
        assert!(r.record.energy <= before);
        let recomputed = riesz_energy(&r.config, 3.0).unwrap();
        assert!((recomputed - r.record.energy).abs() <= 1e-12 * recomputed);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let c = cantor();
        let opts = SearchOptions {
            seed: 42,
            restarts: 6,
            ..Default::default()
        };
        let a = local_search_minimize(&c, 9, 2.5, &opts).unwrap();
        let b = local_search_minimize(&c, 9, 2.5, &opts).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.record.energy.to_bits(), b.record.energy.to_bits());
    }

    #[test]
    fn rejects_unseparated_fractals() {
        let overlap = Fractal::uniform(3, 0.5).unwrap();
        assert!(matches!(
            local_search_minimize(&overlap, 3, 2.0, &SearchOptions::default()),
            Err(Error::Hypothesis(_))
        ));
        let start = vec![PointAddress::default(), PointAddress::default()];
        assert!(matches!(
            local_search_from(&cantor(), 2.0, start, &SearchOptions::default()),
            Err(Error::Singular { .. })
        ));
    }
}
