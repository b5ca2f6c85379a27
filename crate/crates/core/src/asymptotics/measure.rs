use serde::Serialize;

use crate::energy::Configuration;
use crate::error::{Error, Result};
use crate::fractal::{distance, CellAddress, Fractal, PointAddress};

/// Largest cell enumeration a report may request.
const CELL_BUDGET: usize = 1 << 20;
/// Anchor-cloud size used when classifying bare coordinates.
const CLOUD_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMeasureRow {
    pub address: String,
    pub count: usize,
    pub empirical: f64,
    /// Self-similar measure `∏ r_{m_i}^d` of the cell.
    pub target: f64,
}

/// Cell counts of a configuration at one depth against the natural
/// self-similar measure. Rows follow the lexicographic cell order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMeasureReport {
    pub depth: usize,
    pub n: usize,
    pub cells: Vec<CellMeasureRow>,
    pub max_abs_dev: f64,
}

pub fn empirical_cell_measure(
    fractal: &Fractal,
    config: &Configuration,
    depth: usize,
) -> Result<CellMeasureReport> {
    if depth == 0 {
        return Err(Error::Domain("cell measure needs depth ≥ 1".into()));
    }
    if config.is_empty() {
        return Err(Error::Domain("cell measure of an empty configuration".into()));
    }
    if config.dim() != fractal.ambient_dim() {
        return Err(Error::Domain("configuration and fractal dimensions differ".into()));
    }
    let m = fractal.map_count();
    let needed = (m as u128).saturating_pow(depth as u32);
    if needed > CELL_BUDGET as u128 {
        return Err(Error::Resource {
            what: "cell enumeration",
            needed,
            budget: CELL_BUDGET as u128,
        });
    }
    let cells = CellAddress::enumerate(m, depth);
    let mut counts = vec![0usize; cells.len()];
    let classifier = Classifier::new(fractal);
    for i in 0..config.len() {
        let cell = match config.addresses() {
            Some(addresses) => addresses[i].prefix(depth),
            None => classifier.classify(config.point(i), depth)?,
        };
        fractal.check_address(&cell)?;
        counts[flat_index(&cell, m)] += 1;
    }

    let d = fractal.dimension();
    let weights: Vec<f64> = fractal.ratios().iter().map(|r| r.powf(d)).collect();
    let n = config.len();
    let mut max_abs_dev: f64 = 0.0;
    let rows = cells
        .into_iter()
        .zip(counts)
        .map(|(cell, count)| {
            let empirical = count as f64 / n as f64;
            let target: f64 = cell.indices().iter().map(|&k| weights[k]).product();
            max_abs_dev = max_abs_dev.max((empirical - target).abs());
            CellMeasureRow {
                address: cell.to_string(),
                count,
                empirical,
                target,
            }
        })
        .collect();
    Ok(CellMeasureReport {
        depth,
        n,
        cells: rows,
        max_abs_dev,
    })
}

fn flat_index(cell: &CellAddress, m: usize) -> usize {
    cell.indices().iter().fold(0, |acc, &k| acc * m + k)
}

/// Assigns bare coordinates to cells by descending one level at a time and
/// choosing the child whose anchor cloud is nearest.
struct Classifier<'a> {
    fractal: &'a Fractal,
    extra: usize,
}

impl<'a> Classifier<'a> {
    fn new(fractal: &'a Fractal) -> Self {
        let m = fractal.map_count().max(2);
        let mut extra = 0;
        while m.pow(extra as u32 + 1) <= CLOUD_POINTS {
            extra += 1;
        }
        Self { fractal, extra }
    }

    fn classify(&self, x: &[f64], depth: usize) -> Result<CellAddress> {
        let f = self.fractal;
        let rmax_extra = f.max_ratio().powi(self.extra as i32);
        let mut cell = CellAddress::root();
        for _ in 0..depth {
            let mut best: Option<(f64, usize)> = None;
            for child in 0..f.map_count() {
                let c = cell.child(child);
                let near = CellAddress::enumerate(f.map_count(), self.extra)
                    .iter()
                    .map(|tail| distance(x, &f.position(&PointAddress::anchor(c.concat(tail)))))
                    .fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(d, _)| near < d) {
                    best = Some((near, child));
                }
            }
            let (near, child) = best.expect("at least one map");
            let c = cell.child(child);
            let tolerance = f.cell_diameter(&c) * rmax_extra + 1e-9 * f.diameter().max(1e-300);
            if near > tolerance {
                return Err(Error::Classification {
                    point: x.to_vec(),
                    depth,
                });
            }
            cell = c;
        }
        Ok(cell)
    }
}
