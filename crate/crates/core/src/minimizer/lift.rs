use crate::energy::{riesz_energy, Configuration};
use crate::error::{Error, Result};
use crate::fractal::{Fractal, PointAddress};

/// `ψ(ω) = ⋃_m ψ_m(ω)`, ordered map-major. Addresses, when present, gain
/// the map index as a new first letter.
pub fn lift(fractal: &Fractal, config: &Configuration) -> Result<Configuration> {
    if config.dim() != fractal.ambient_dim() {
        return Err(Error::Domain("configuration and fractal dimensions differ".into()));
    }
    let mut coords = Vec::with_capacity(config.coords().len() * fractal.map_count());
    for map in fractal.maps() {
        for x in config.points() {
            coords.extend(map.apply(x));
        }
    }
    let lifted = Configuration::new(config.dim(), coords, fractal.label())?;
    if let Some((first, second)) = first_collision(&lifted) {
        return Err(Error::Singular { first, second });
    }
    match config.addresses() {
        Some(addresses) => lifted.with_addresses(lift_addresses(fractal, addresses)?),
        None => Ok(lifted),
    }
}

/// Symbolic lift: `w·t^∞ ↦ m·w·t^∞` for every map `m`, map-major.
pub fn lift_addresses(fractal: &Fractal, addresses: &[PointAddress]) -> Result<Vec<PointAddress>> {
    let out: Vec<PointAddress> = (0..fractal.map_count())
        .flat_map(|m| addresses.iter().map(move |a| a.mapped(m)))
        .collect();
    for a in &out {
        fractal.check_address(&a.cell)?;
    }
    Ok(out)
}

fn first_collision(config: &Configuration) -> Option<(usize, usize)> {
    let n = config.len();
    for i in 0..n {
        for j in i + 1..n {
            if config.point(i) == config.point(j) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Both sides of `E(ψ(ω)) ≤ M^{1+s/d} E(ω) + σ^{−s} N² M²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftBound {
    pub lifted_energy: f64,
    pub bound: f64,
}

impl LiftBound {
    pub fn holds(&self) -> bool {
        self.lifted_energy <= self.bound * (1.0 + 1e-12)
    }
}

/// Lifts `config` and evaluates the one-step bound; needs equal ratios and
/// a certified σ.
pub fn lift_bound(fractal: &Fractal, config: &Configuration, s: f64) -> Result<(Configuration, LiftBound)> {
    fractal.require_equal_ratios()?;
    fractal.require_separated()?;
    let lifted = lift(fractal, config)?;
    let m = fractal.map_count() as f64;
    let n = config.len() as f64;
    let d = fractal.dimension();
    let bound = m.powf(1.0 + s / d) * riesz_energy(config, s)? + fractal.sigma().powf(-s) * n * n * m * m;
    let lifted_energy = riesz_energy(&lifted, s)?;
    Ok((
        lifted,
        LiftBound {
            lifted_energy,
            bound,
        },
    ))
}
