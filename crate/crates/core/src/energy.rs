//! Riesz kernel sums and geometric statistics of point configurations.
//!
//! Energies follow the ordered-pair convention `E_s(ω) = Σ_{i≠j} |x_i − x_j|^{−s}`,
//! so every unordered pair contributes twice. All sums run in a fixed
//! i-major order and are single-threaded, which keeps results bit-stable.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{squared_distance, Fractal, PointAddress};

/// An `N`-point configuration in `ℝ^p`, optionally tagged with the symbolic
/// address of every point.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
    addresses: Option<Vec<PointAddress>>,
    fractal_label: String,
}

impl Configuration {
    pub fn new(dim: usize, coords: Vec<f64>, fractal_label: impl Into<String>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Domain(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("configuration has non-finite coordinates".into()));
        }
        Ok(Self {
            dim,
            coords,
            addresses: None,
            fractal_label: fractal_label.into(),
        })
    }

    pub fn from_points(points: &[Vec<f64>], fractal_label: impl Into<String>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Domain("points have different dimensions".into()));
        }
        Self::new(dim, points.concat(), fractal_label)
    }

    /// One-dimensional configuration from scalars.
    pub fn on_line(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec(), "")
    }

    /// Places every address at its exact position on the fractal.
    pub fn from_addresses(fractal: &Fractal, addresses: Vec<PointAddress>) -> Result<Self> {
        let p = fractal.ambient_dim();
        let mut coords = vec![0.0; addresses.len() * p];
        for (a, chunk) in addresses.iter().zip(coords.chunks_mut(p)) {
            fractal.check_address(&a.cell)?;
            if a.tail >= fractal.map_count() {
                return Err(Error::Domain(format!("address tail {} out of range", a.tail + 1)));
            }
            fractal.position_into(a, chunk);
        }
        let mut config = Self::new(p, coords, fractal.label())?;
        config.addresses = Some(addresses);
        Ok(config)
    }

    pub fn with_addresses(mut self, addresses: Vec<PointAddress>) -> Result<Self> {
        if addresses.len() != self.len() {
            return Err(Error::Domain(format!(
                "{} addresses for {} points",
                addresses.len(),
                self.len()
            )));
        }
        self.addresses = Some(addresses);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn addresses(&self) -> Option<&[PointAddress]> {
        self.addresses.as_deref()
    }

    pub fn fractal_label(&self) -> &str {
        &self.fractal_label
    }

    /// Points `indices` in the given order; addresses follow along.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let coords = indices.iter().flat_map(|&i| self.point(i).to_vec()).collect();
        let mut out = Self::new(self.dim, coords, self.fractal_label.clone())?;
        out.addresses = self
            .addresses
            .as_ref()
            .map(|a| indices.iter().map(|&i| a[i].clone()).collect());
        Ok(out)
    }

    /// Concatenation of two configurations in the same ambient space.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Domain("configurations live in different dimensions".into()));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut out = Self::new(self.dim, coords, self.fractal_label.clone())?;
        if let (Some(a), Some(b)) = (&self.addresses, &other.addresses) {
            out.addresses = Some(a.iter().chain(b).cloned().collect());
        }
        Ok(out)
    }

    /// Applies `x ↦ f(x)` to every point, dropping addresses.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let points: Vec<Vec<f64>> = self.points().map(f).collect();
        Configuration::from_points(&points, self.fractal_label.clone())
    }

    /// Writes the configuration as CSV: columns `x1..xp` at 17 significant
    /// digits, plus `address` when addresses are present.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        if self.addresses.is_some() {
            header.push("address".into());
        }
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|v| format_real(*v)).collect();
            if let Some(a) = &self.addresses {
                row.push(a[i].to_string());
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, fractal_label: impl Into<String>) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let header = input.headers()?.clone();
        let has_address = header.iter().next_back() == Some("address");
        let dim = header.len() - usize::from(has_address);
        for (k, name) in header.iter().take(dim).enumerate() {
            if name != format!("x{}", k + 1) {
                return Err(Error::Usage(format!("unexpected CSV column {name:?}")));
            }
        }
        let mut coords = Vec::new();
        let mut addresses = Vec::new();
        for record in input.records() {
            let record = record?;
            for field in record.iter().take(dim) {
                coords.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Usage(format!("bad coordinate {field:?}")))?,
                );
            }
            if has_address {
                addresses.push(record.get(dim).unwrap_or("").parse::<PointAddress>()?);
            }
        }
        let config = Self::new(dim, coords, fractal_label)?;
        if has_address {
            config.with_addresses(addresses)
        } else {
            Ok(config)
        }
    }
}

/// Shortest decimal form that round-trips, in scientific notation with 17
/// significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `(N, s, raw energy, normalized energy, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub n: usize,
    pub s: f64,
    pub energy: f64,
    pub normalized: f64,
    pub d: f64,
}

impl EnergyRecord {
    pub fn new(n: usize, s: f64, energy: f64, d: f64) -> Result<Self> {
        Ok(Self {
            n,
            s,
            energy,
            normalized: normalized_energy(energy, n, s, d)?,
            d,
        })
    }

    pub fn of(config: &Configuration, s: f64, d: f64) -> Result<Self> {
        Self::new(config.len(), s, riesz_energy(config, s)?, d)
    }
}

/// `|x − y|^{−s}` from a squared distance.
#[inline]
pub(crate) fn kernel(squared: f64, half_s: f64) -> f64 {
    squared.powf(-half_s)
}

fn check_exponent(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("Riesz exponent {s} is not positive")));
    }
    Ok(())
}

/// Ordered-pair Riesz `s`-energy `Σ_{i≠j} |x_i − x_j|^{−s}`.
pub fn riesz_energy(config: &Configuration, s: f64) -> Result<f64> {
    check_exponent(s)?;
    let half_s = 0.5 * s;
    let n = config.len();
    let mut total = 0.0;
    for i in 0..n {
        let x = config.point(i);
        let mut row = 0.0;
        for j in i + 1..n {
            let d2 = squared_distance(x, config.point(j));
            if d2 == 0.0 {
                return Err(Error::Singular { first: i, second: j });
            }
            row += kernel(d2, half_s);
        }
        total += row;
    }
    Ok(2.0 * total)
}

/// `energy / N^{1+s/d}`.
pub fn normalized_energy(energy: f64, n: usize, s: f64, d: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("normalization needs N ≥ 2, got {n}")));
    }
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Domain(format!("normalization needs d > 0, got {d}")));
    }
    Ok(energy / (n as f64).powf(1.0 + s / d))
}

/// `2 Σ_{x∈part1, y∈part2} |x − y|^{−s}`, the interaction term in
/// `E(part1 ∪ part2) = E(part1) + E(part2) + cross`.
pub fn cross_energy(part1: &Configuration, part2: &Configuration, s: f64) -> Result<f64> {
    check_exponent(s)?;
    if part1.dim() != part2.dim() {
        return Err(Error::Domain("configurations live in different dimensions".into()));
    }
    let half_s = 0.5 * s;
    let mut total = 0.0;
    for (i, x) in part1.points().enumerate() {
        for (j, y) in part2.points().enumerate() {
            let d2 = squared_distance(x, y);
            if d2 == 0.0 {
                return Err(Error::Singular {
                    first: i,
                    second: part1.len() + j,
                });
            }
            total += kernel(d2, half_s);
        }
    }
    Ok(2.0 * total)
}

/// Point energy `Σ_j |y − x_j|^{−s}`; `+∞` when `y` hits a point.
pub fn point_energy(config: &Configuration, y: &[f64], s: f64) -> f64 {
    let half_s = 0.5 * s;
    config
        .points()
        .map(|x| {
            let d2 = squared_distance(x, y);
            if d2 == 0.0 {
                f64::INFINITY
            } else {
                kernel(d2, half_s)
            }
        })
        .sum()
}

/// Candidate with the smallest point energy; ties go to the lowest index.
pub fn min_point_energy(
    config: &Configuration,
    candidates: &[Vec<f64>],
    s: f64,
) -> Result<(usize, f64)> {
    check_exponent(s)?;
    if candidates.is_empty() {
        return Err(Error::Domain("no candidate points".into()));
    }
    let mut best = (0, f64::INFINITY);
    for (k, y) in candidates.iter().enumerate() {
        let value = point_energy(config, y, s);
        if value < best.1 {
            best = (k, value);
        }
    }
    if best.1.is_infinite() {
        return Err(Error::Singular {
            first: 0,
            second: config.len(),
        });
    }
    Ok(best)
}

/// Smallest distance between two distinct points.
pub fn min_pairwise_distance(config: &Configuration) -> Result<f64> {
    let n = config.len();
    if n < 2 {
        return Err(Error::Domain("minimum distance needs N ≥ 2".into()));
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(squared_distance(config.point(i), config.point(j)));
        }
    }
    Ok(best.sqrt())
}

/// A finite net of the fractal: the anchors of every cell at one depth.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub points: Vec<Vec<f64>>,
    /// Largest diameter of the cells the mesh points represent.
    pub cell_diameter: f64,
}

impl Mesh {
    pub fn anchors(fractal: &Fractal, depth: usize, budget: usize) -> Result<Self> {
        let points = fractal
            .anchors(depth, budget)?
            .into_iter()
            .map(|(_, x)| x)
            .collect();
        Ok(Self {
            points,
            cell_diameter: fractal.max_ratio().powi(depth as i32) * fractal.diameter(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringRadius {
    /// `max_{y ∈ mesh} min_i |y − x_i|`.
    pub radius: f64,
    /// Mesh resolution; the true covering radius lies within `radius ± slack`.
    pub slack: f64,
}

pub fn covering_radius(config: &Configuration, mesh: &Mesh) -> Result<CoveringRadius> {
    if mesh.points.is_empty() {
        return Err(Error::Domain("empty mesh".into()));
    }
    let mut radius: f64 = 0.0;
    for y in &mesh.points {
        let nearest = config
            .points()
            .map(|x| squared_distance(x, y))
            .fold(f64::INFINITY, f64::min);
        radius = radius.max(nearest);
    }
    Ok(CoveringRadius {
        radius: radius.sqrt(),
        slack: mesh.cell_diameter,
    })
}
