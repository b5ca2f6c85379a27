//! Similitudes, self-similar fractals and their symbolic cell geometry.
//!
//! A fractal is the attractor of a finite family of similitudes
//! `x ↦ r·O·x + z`. Points on it are addressed symbolically: a finite word
//! `w = (m_1, …, m_l)` names the cell `ψ_{m_1} ∘ … ∘ ψ_{m_l}(A)`, and a
//! [`PointAddress`] extends the word with an eventually periodic tail `t^∞`,
//! which names the exact point `ψ_w(fix ψ_t)`. The canonical representative
//! of a cell (its *anchor*) uses the tail of the first map.
//!
//! Indices are zero-based in memory and one-based in every text form.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of cells any implicit enumeration (diameter, σ, meshes)
/// is allowed to visit.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 1 << 14;

/// Cap on the refinement depth accepted by [`Fractal::cell_anchor`].
pub const MAX_REFINE_DEPTH: usize = 64;

/// Depth cap for automatically derived diameter and σ.
const AUTO_DEPTH_CAP: usize = 12;

/// Budget for automatically derived diameter and σ.
const AUTO_BUDGET: usize = 1 << 12;

const MORAN_TOLERANCE: f64 = 1e-14;
const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

/// A similitude `x ↦ ratio · rotation · x + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similitude {
    ratio: f64,
    /// Row-major `p × p` orthogonal matrix.
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

impl Similitude {
    pub fn new(ratio: f64, rotation: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let p = translation.len();
        if p == 0 {
            return Err(Error::Domain("similitude needs a non-empty translation".into()));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Domain(format!("contraction ratio {ratio} is not in (0,1)")));
        }
        if rotation.len() != p * p {
            return Err(Error::Domain(format!(
                "rotation has {} entries, expected {}",
                rotation.len(),
                p * p
            )));
        }
        if rotation.iter().chain(&translation).any(|v| !v.is_finite()) {
            return Err(Error::Domain("similitude has non-finite entries".into()));
        }
        // OᵀO = I
        for i in 0..p {
            for j in 0..p {
                let dot: f64 = (0..p).map(|k| rotation[k * p + i] * rotation[k * p + j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > ORTHOGONALITY_TOLERANCE {
                    return Err(Error::Domain(format!(
                        "rotation is not orthogonal: (OᵀO)[{i}][{j}] = {dot}"
                    )));
                }
            }
        }
        Ok(Self {
            ratio,
            rotation,
            translation,
        })
    }

    /// Similitude with identity rotation.
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Result<Self> {
        let p = translation.len();
        Self::new(ratio, identity(p), translation)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// Writes `ψ(x)` into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let p = self.dim();
        for ((o, row), z) in out.iter_mut().zip(self.rotation.chunks(p)).zip(&self.translation) {
            let rx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            *o = self.ratio * rx + z;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// The unique fixed point, solving `(I − r·O) x = z`.
    pub fn fixed_point(&self) -> Vec<f64> {
        let p = self.dim();
        let mut a: Vec<f64> = (0..p * p)
            .map(|k| {
                let (i, j) = (k / p, k % p);
                let id = if i == j { 1.0 } else { 0.0 };
                id - self.ratio * self.rotation[k]
            })
            .collect();
        let mut b = self.translation.clone();
        solve_in_place(&mut a, &mut b, p);
        b
    }
}

fn identity(p: usize) -> Vec<f64> {
    (0..p * p).map(|k| if k / p == k % p { 1.0 } else { 0.0 }).collect()
}

/// Gaussian elimination with partial pivoting; `a` is row-major and
/// nonsingular (`I − rO` always is for `r < 1`).
fn solve_in_place(a: &mut [f64], b: &mut [f64], p: usize) {
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i * p + col].abs().total_cmp(&a[j * p + col].abs()))
            .unwrap_or(col);
        if pivot != col {
            for k in 0..p {
                a.swap(col * p + k, pivot * p + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * p + col];
        for row in col + 1..p {
            let factor = a[row * p + col] / diag;
            if factor != 0.0 {
                for k in col..p {
                    a[row * p + k] -= factor * a[col * p + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for col in (0..p).rev() {
        let tail: f64 = (col + 1..p).map(|k| a[col * p + k] * b[k]).sum();
        b[col] = (b[col] - tail) / a[col * p + col];
    }
}

/// Solves the Moran equation `Σ r_m^d = 1` for the similarity dimension `d`.
///
/// `f(d) = Σ r_m^d − 1` is strictly decreasing, so plain bisection on a
/// bracket `[0, d_hi]` converges unconditionally. A single ratio describes a
/// point and yields `0`.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::Domain("moran equation needs at least one ratio".into()));
    }
    if let Some(bad) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::Domain(format!("contraction ratio {bad} is not in (0,1)")));
    }
    if ratios.len() == 1 {
        log::warn!("single similitude: the attractor is a point, dimension 0");
        return Ok(0.0);
    }
    let f = |d: f64| ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    let r_max = ratios.iter().cloned().fold(0.0, f64::max);
    let m = ratios.len() as f64;
    let mut hi = f64::max(1.0, m.ln() / (1.0 / r_max).ln()) + 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let value = f(mid);
        if value == 0.0 {
            return Ok(mid);
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    debug_assert!(f(d).abs() < MORAN_TOLERANCE);
    Ok(d)
}

/// A finite word naming the cell `ψ_{m_1} ∘ … ∘ ψ_{m_l}(A)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct CellAddress(pub Vec<usize>);

impl CellAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn child(&self, m: usize) -> Self {
        let mut word = self.0.clone();
        word.push(m);
        Self(word)
    }

    pub fn concat(&self, other: &CellAddress) -> Self {
        let mut word = self.0.clone();
        word.extend_from_slice(&other.0);
        Self(word)
    }

    /// Every word of length `depth` over `m` letters, lexicographically.
    pub fn enumerate(m: usize, depth: usize) -> Vec<CellAddress> {
        let count = m.pow(depth as u32);
        (0..count)
            .map(|mut code| {
                let mut word = vec![0; depth];
                for slot in word.iter_mut().rev() {
                    *slot = code % m;
                    code /= m;
                }
                CellAddress(word)
            })
            .collect()
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| (m + 1).to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for CellAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::root());
        }
        s.split('.')
            .map(|part| match part.trim().parse::<usize>() {
                Ok(m) if m >= 1 => Ok(m - 1),
                _ => Err(Error::Usage(format!("bad address component {part:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(CellAddress)
    }
}

/// Exact symbolic point `ψ_w(fix ψ_tail)`, i.e. the infinite word `w·tail^∞`.
///
/// Text form: `"1.2.2"` for tail 1 (the cell anchor), `"1.2.2*3"` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PointAddress {
    pub cell: CellAddress,
    pub tail: usize,
}

impl PointAddress {
    pub fn new(cell: CellAddress, tail: usize) -> Self {
        Self { cell, tail }
    }

    pub fn anchor(cell: CellAddress) -> Self {
        Self { cell, tail: 0 }
    }

    /// Letter `k` of the infinite word.
    pub fn letter(&self, k: usize) -> usize {
        self.cell.0.get(k).copied().unwrap_or(self.tail)
    }

    /// The depth-`depth` cell containing this point.
    pub fn prefix(&self, depth: usize) -> CellAddress {
        CellAddress((0..depth).map(|k| self.letter(k)).collect())
    }

    /// Drops trailing letters equal to the tail, which name the same point.
    pub fn canonical(&self) -> Self {
        let mut word = self.cell.0.clone();
        while word.last() == Some(&self.tail) {
            word.pop();
        }
        Self {
            cell: CellAddress(word),
            tail: self.tail,
        }
    }

    /// `ψ_m` applied symbolically.
    pub fn mapped(&self, m: usize) -> Self {
        let mut word = Vec::with_capacity(self.cell.len() + 1);
        word.push(m);
        word.extend_from_slice(&self.cell.0);
        Self {
            cell: CellAddress(word),
            tail: self.tail,
        }
    }
}

impl Ord for PointAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cell.cmp(&other.cell).then(self.tail.cmp(&other.tail))
    }
}

impl PartialOrd for PointAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PointAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.cell)?;
        if self.tail != 0 {
            write!(f, "*{}", self.tail + 1)?;
        }
        Ok(())
    }
}

impl FromStr for PointAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (word, tail) = match s.split_once('*') {
            Some((word, tail)) => {
                let tail = match tail.trim().parse::<usize>() {
                    Ok(t) if t >= 1 => t - 1,
                    _ => return Err(Error::Usage(format!("bad address tail in {s:?}"))),
                };
                (word, tail)
            }
            None => (s, 0),
        };
        Ok(Self {
            cell: word.parse()?,
            tail,
        })
    }
}

/// Result of [`Fractal::estimate_diameter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterEstimate {
    /// Largest distance between two anchors; a lower bound for the diameter.
    pub estimate: f64,
    /// `estimate / (1 − 2 r_max^depth)`, or `+∞` when that is not positive.
    pub upper_bound: f64,
}

impl DiameterEstimate {
    pub fn is_bounded(&self) -> bool {
        self.upper_bound.is_finite()
    }
}

/// JSON description of a fractal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub ambient_dim: usize,
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<f64>>,
    pub translation: Vec<f64>,
}

/// Either a catalog name such as `"cantor(1/3)"` or a full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FractalSource {
    Catalog(String),
    Spec(FractalSpec),
}

impl FractalSource {
    pub fn build(&self) -> Result<Fractal> {
        match self {
            FractalSource::Catalog(name) => Fractal::from_catalog(name),
            FractalSource::Spec(spec) => Fractal::from_spec(spec),
        }
    }
}

/// A self-similar fractal `A = ⋃ ψ_m(A)`.
#[derive(Debug, Clone)]
pub struct Fractal {
    label: String,
    ambient_dim: usize,
    maps: Vec<Similitude>,
    dimension: f64,
    diameter: f64,
    sigma: f64,
    fixed_points: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

impl Fractal {
    /// Builds a fractal; missing diameter and σ are estimated from anchors.
    pub fn new(
        label: impl Into<String>,
        maps: Vec<Similitude>,
        diameter: Option<f64>,
        sigma: Option<f64>,
    ) -> Result<Self> {
        let label = label.into();
        let Some(first) = maps.first() else {
            return Err(Error::Domain("a fractal needs at least one similitude".into()));
        };
        let ambient_dim = first.dim();
        if maps.iter().any(|m| m.dim() != ambient_dim) {
            return Err(Error::Domain("similitudes act on different dimensions".into()));
        }
        let ratios: Vec<f64> = maps.iter().map(Similitude::ratio).collect();
        let dimension = moran_dimension(&ratios)?;
        let fixed_points = maps.iter().map(Similitude::fixed_point).collect();
        let mut fractal = Self {
            label,
            ambient_dim,
            maps,
            dimension,
            diameter: diameter.unwrap_or(0.0),
            sigma: sigma.unwrap_or(0.0),
            fixed_points,
            warnings: Vec::new(),
        };
        if fractal.maps.len() == 1 {
            fractal.warn("single similitude: the fractal is a point".into());
        }
        if dimension > ambient_dim as f64 + 1e-12 {
            fractal.warn(format!(
                "similarity dimension {dimension} exceeds the ambient dimension {ambient_dim}; the images overlap"
            ));
        }
        if let Some(d) = diameter {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Domain(format!("declared diameter {d} is not positive")));
            }
        } else if fractal.maps.len() > 1 {
            let depth = fractal.auto_depth();
            let est = fractal.estimate_diameter(depth, AUTO_BUDGET)?;
            fractal.diameter = if est.is_bounded() {
                est.upper_bound
            } else {
                est.estimate
            };
        }
        if let Some(s) = sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!("declared sigma {s} is negative")));
            }
        } else if fractal.maps.len() > 1 {
            let depth = fractal.auto_depth();
            fractal.sigma = fractal.separation_sigma(depth, AUTO_BUDGET)?;
        }
        if fractal.maps.len() > 1 && fractal.sigma <= 0.0 {
            fractal.warn("first-level cells are not certified to be separated (sigma = 0)".into());
        }
        Ok(fractal)
    }

    fn warn(&mut self, message: String) {
        log::warn!("{}: {}", self.label, message);
        self.warnings.push(message);
    }

    fn auto_depth(&self) -> usize {
        let m = self.maps.len();
        let mut depth = 1;
        while depth < AUTO_DEPTH_CAP && m.pow(depth as u32 + 1) <= AUTO_BUDGET {
            depth += 1;
        }
        depth
    }

    pub fn from_spec(spec: &FractalSpec) -> Result<Self> {
        let maps = spec
            .maps
            .iter()
            .map(|m| {
                if m.translation.len() != spec.ambient_dim {
                    return Err(Error::Domain(format!(
                        "translation has {} entries, ambient_dim is {}",
                        m.translation.len(),
                        spec.ambient_dim
                    )));
                }
                let rotation = m.rotation.clone().unwrap_or_else(|| identity(spec.ambient_dim));
                Similitude::new(m.ratio, rotation, m.translation.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        let label = spec.label.clone().unwrap_or_else(|| "custom".into());
        Self::new(label, maps, spec.diameter, spec.sigma)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let source: FractalSource = serde_json::from_str(text)?;
        source.build()
    }

    /// Built-in catalog: `cantor(r)`, `cantor-dust-2d(r)`, `uniform(M,r)`.
    /// Ratios may be written as decimals or fractions (`1/3`).
    pub fn from_catalog(name: &str) -> Result<Self> {
        let name = name.trim();
        let (kind, args) = name
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| Error::Usage(format!("unknown fractal {name:?}")))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        match (kind.trim(), args.as_slice()) {
            ("cantor", [r]) => Self::cantor(parse_real(r)?),
            ("cantor-dust-2d", [r]) => Self::cantor_dust_2d(parse_real(r)?),
            ("uniform", [m, r]) => {
                let m = m
                    .parse::<usize>()
                    .map_err(|_| Error::Usage(format!("bad map count {m:?}")))?;
                Self::uniform(m, parse_real(r)?)
            }
            _ => Err(Error::Usage(format!("unknown fractal {name:?}"))),
        }
    }

    /// Middle-gap Cantor set in `[0,1]`: `x ↦ r x`, `x ↦ r x + 1 − r`.
    pub fn cantor(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 0.5) {
            return Err(Error::Domain(format!("cantor ratio {r} is not in (0,1/2)")));
        }
        let maps = vec![
            Similitude::scaling(r, vec![0.0])?,
            Similitude::scaling(r, vec![1.0 - r])?,
        ];
        Self::new(format!("cantor({r})"), maps, Some(1.0), Some(1.0 - 2.0 * r))
    }

    /// Product Cantor dust in `[0,1]²` with the four corner maps.
    pub fn cantor_dust_2d(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 0.5) {
            return Err(Error::Domain(format!("cantor dust ratio {r} is not in (0,1/2)")));
        }
        let shift = 1.0 - r;
        let maps = [[0.0, 0.0], [shift, 0.0], [0.0, shift], [shift, shift]]
            .into_iter()
            .map(|z| Similitude::scaling(r, z.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            format!("cantor-dust-2d({r})"),
            maps,
            Some(std::f64::consts::SQRT_2),
            Some(1.0 - 2.0 * r),
        )
    }

    /// `M` collinear maps of ratio `r` spread over `[0,1]` with equal gaps
    /// `(1 − M r)/(M − 1)`. Overlapping parameters (`M r ≥ 1`) are accepted
    /// with σ = 0.
    pub fn uniform(m: usize, r: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("uniform fractal needs at least one map".into()));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain(format!("ratio {r} is not in (0,1)")));
        }
        let label = format!("uniform({m},{r})");
        if m == 1 {
            let maps = vec![Similitude::scaling(r, vec![0.0])?];
            return Self::new(label, maps, None, None);
        }
        let step = (1.0 - r) / (m - 1) as f64;
        let maps = (0..m)
            .map(|k| {
                let z = if k + 1 == m { 1.0 - r } else { k as f64 * step };
                Similitude::scaling(r, vec![z])
            })
            .collect::<Result<Vec<_>>>()?;
        let gap = (1.0 - m as f64 * r) / (m - 1) as f64;
        Self::new(label, maps, Some(1.0), Some(gap.max(0.0)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Lower bound on the distance between distinct first-level cells.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(Similitude::ratio).collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.maps.iter().map(Similitude::ratio).fold(0.0, f64::max)
    }

    /// The common ratio when every map contracts by the same factor.
    pub fn equal_ratio(&self) -> Option<f64> {
        let r = self.maps[0].ratio();
        self.maps
            .iter()
            .all(|m| (m.ratio() - r).abs() <= 1e-15 * r)
            .then_some(r)
    }

    pub fn fixed_point(&self, m: usize) -> &[f64] {
        &self.fixed_points[m]
    }

    pub fn check_address(&self, address: &CellAddress) -> Result<()> {
        match address.0.iter().find(|&&m| m >= self.maps.len()) {
            Some(m) => Err(Error::Domain(format!(
                "address index {} exceeds the {} maps",
                m + 1,
                self.maps.len()
            ))),
            None => Ok(()),
        }
    }

    /// Position of a symbolic point, `ψ_{m_1} ∘ … ∘ ψ_{m_l}(fix ψ_tail)`.
    pub fn position(&self, point: &PointAddress) -> Vec<f64> {
        let mut x = self.fixed_points[point.tail].clone();
        self.position_into(point, &mut x);
        x
    }

    /// Like [`Fractal::position`] but writes into `out` (length `p`).
    pub fn position_into(&self, point: &PointAddress, out: &mut [f64]) {
        out.copy_from_slice(&self.fixed_points[point.tail]);
        let mut scratch = vec![0.0; self.ambient_dim];
        for &m in point.cell.0.iter().rev() {
            self.maps[m].apply_into(out, &mut scratch);
            out.copy_from_slice(&scratch);
        }
    }

    /// Canonical representative of a cell: the image of the fixed point of
    /// the first map, refined by appending `refine_depth` copies of the first
    /// index (which leaves the anchor unchanged).
    pub fn cell_anchor(&self, address: &CellAddress, refine_depth: usize) -> Result<Vec<f64>> {
        self.check_address(address)?;
        if refine_depth > MAX_REFINE_DEPTH {
            return Err(Error::Domain(format!(
                "refine depth {refine_depth} exceeds {MAX_REFINE_DEPTH}"
            )));
        }
        let mut word = address.0.clone();
        word.extend(std::iter::repeat_n(0, refine_depth));
        Ok(self.position(&PointAddress::anchor(CellAddress(word))))
    }

    /// `(∏ r_{m_i}) · diameter`, multiplied in address order.
    pub fn cell_diameter(&self, address: &CellAddress) -> f64 {
        address.0.iter().map(|&m| self.maps[m].ratio()).product::<f64>() * self.diameter
    }

    pub fn cell_ratio(&self, address: &CellAddress) -> f64 {
        address.0.iter().map(|&m| self.maps[m].ratio()).product()
    }

    fn check_budget(&self, depth: usize, budget: usize) -> Result<()> {
        let needed = (self.maps.len() as u128).saturating_pow(depth as u32);
        if needed > budget as u128 {
            return Err(Error::Resource {
                what: "cell enumeration",
                needed,
                budget: budget as u128,
            });
        }
        Ok(())
    }

    /// Anchors of every depth-`depth` cell, lexicographic by address.
    pub fn anchors(&self, depth: usize, budget: usize) -> Result<Vec<(CellAddress, Vec<f64>)>> {
        self.check_budget(depth, budget)?;
        Ok(CellAddress::enumerate(self.maps.len(), depth)
            .into_iter()
            .map(|a| {
                let x = self.position(&PointAddress::anchor(a.clone()));
                (a, x)
            })
            .collect())
    }

    /// Depth-`depth` nodes: the images `ψ_w(fix ψ_t)` of every map's fixed
    /// point under every depth-`depth` cell, ordered by `(w, t)`. Unlike the
    /// anchors alone, this grid contains the extreme points of each cell.
    /// Coincident positions (possible only for overlapping systems) keep
    /// their first address.
    pub fn nodes(&self, depth: usize, budget: usize) -> Result<Vec<(PointAddress, Vec<f64>)>> {
        self.check_budget(depth + 1, budget)?;
        let m = self.maps.len();
        let mut out: Vec<(PointAddress, Vec<f64>)> = Vec::with_capacity(m.pow(depth as u32 + 1));
        for cell in CellAddress::enumerate(m, depth) {
            for tail in 0..m {
                let point = PointAddress::new(cell.clone(), tail);
                let x = self.position(&point);
                if !out.iter().any(|(_, y)| *y == x) {
                    out.push((point, x));
                }
            }
        }
        Ok(out)
    }

    /// Largest pairwise anchor distance at `depth`, with the certified upper
    /// bound `estimate / (1 − 2 r_max^depth)`.
    pub fn estimate_diameter(&self, depth: usize, budget: usize) -> Result<DiameterEstimate> {
        if depth == 0 {
            return Err(Error::Domain("diameter estimate needs depth ≥ 1".into()));
        }
        let anchors = self.anchors(depth, budget)?;
        let mut estimate: f64 = 0.0;
        for (i, (_, x)) in anchors.iter().enumerate() {
            for (_, y) in &anchors[i + 1..] {
                estimate = estimate.max(distance(x, y));
            }
        }
        let shrink = 1.0 - 2.0 * self.max_ratio().powi(depth as i32);
        let upper_bound = if shrink > 0.0 {
            estimate / shrink
        } else {
            f64::INFINITY
        };
        Ok(DiameterEstimate {
            estimate,
            upper_bound,
        })
    }

    /// Certified lower bound for σ: the smallest distance between anchor
    /// clouds of different first-level cells minus twice the largest
    /// depth-level cell diameter, clamped at zero.
    pub fn separation_sigma(&self, depth: usize, budget: usize) -> Result<f64> {
        if self.maps.len() < 2 {
            return Err(Error::Domain("separation needs at least two maps".into()));
        }
        if depth == 0 {
            return Err(Error::Domain("separation needs depth ≥ 1".into()));
        }
        let anchors = self.anchors(depth, budget)?;
        let mut closest = f64::INFINITY;
        for (i, (a, x)) in anchors.iter().enumerate() {
            for (b, y) in &anchors[i + 1..] {
                if a.0[0] != b.0[0] {
                    closest = closest.min(distance(x, y));
                }
            }
        }
        let diameter = if self.diameter > 0.0 {
            self.diameter
        } else {
            let est = self.estimate_diameter(depth, budget)?;
            if est.is_bounded() {
                est.upper_bound
            } else {
                f64::INFINITY
            }
        };
        let cell = self.max_ratio().powi(depth as i32) * diameter;
        let bound = (closest - 2.0 * cell).max(0.0);
        if bound == 0.0 {
            log::warn!(
                "{}: open set condition not certified at depth {depth}",
                self.label
            );
        }
        Ok(bound)
    }

    /// Copy of this fractal scaled by `factor` about the origin.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!("scale factor {factor} is not positive")));
        }
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let z = m.translation.iter().map(|v| v * factor).collect();
                Similitude::new(m.ratio, m.rotation.clone(), z)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            self.label.clone(),
            maps,
            Some(self.diameter * factor),
            Some(self.sigma * factor),
        )
    }

    /// Rejects fractals whose first-level separation is not certified.
    pub fn require_separated(&self) -> Result<()> {
        if self.maps.len() < 2 || self.sigma <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "{} has no certified separation (sigma = {})",
                self.label, self.sigma
            )));
        }
        Ok(())
    }

    pub fn require_equal_ratios(&self) -> Result<f64> {
        self.equal_ratio().ok_or_else(|| {
            Error::Hypothesis(format!("{} does not have equal contraction ratios", self.label))
        })
    }
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    squared_distance(x, y).sqrt()
}

#[inline]
pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Parses `0.25` or `1/4`.
pub fn parse_real(text: &str) -> Result<f64> {
    let bad = || Error::Usage(format!("bad number {text:?}"));
    match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            Ok(num / den)
        }
        None => text.trim().parse().map_err(|_| bad()),
    }
}
