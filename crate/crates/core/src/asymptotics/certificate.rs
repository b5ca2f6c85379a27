use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractal::Fractal;

/// Analytic certificate that the liminf and limsup of the normalized energy
/// differ. Lengths are measured after rescaling the fractal to diameter 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCertificate {
    pub s: f64,
    pub map_count: usize,
    pub ratio: f64,
    pub dimension: f64,
    /// First-level separation after rescaling.
    pub sigma: f64,
    /// `(r/σ)(1 + r^d)^{1/d}`.
    pub separation_ratio: f64,
    /// `max{2d, log_{1/R}(2M(M+1))}`; absent when the separation ratio is ≥ 1.
    pub s_threshold: Option<f64>,
    /// `σ^{−s} / (M^{s/d−1} − 1)`; absent when `s ≤ d`.
    pub upper_coeff: Option<f64>,
    /// `M^{s/d}`.
    pub lower_coeff: f64,
    /// `R^s · M^{s/d−1}/(M^{s/d−1} − 1) · M(M+1)`; absent when `s ≤ d`.
    pub certificate_ratio: Option<f64>,
    pub certified: bool,
}

pub fn gap_certificate(fractal: &Fractal, s: f64) -> Result<GapCertificate> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("Riesz exponent {s} is not positive")));
    }
    let r = fractal.require_equal_ratios()?;
    fractal.require_separated()?;
    let diameter = fractal.diameter();
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::Domain(format!("diameter {diameter} cannot be normalized")));
    }
    let sigma = fractal.sigma() / diameter;
    let m = fractal.map_count() as f64;
    let d = fractal.dimension();
    let p = s / d;

    let big_r = (r / sigma) * (1.0 + r.powf(d)).powf(1.0 / d);
    let s_threshold = (big_r < 1.0).then(|| (2.0 * d).max((2.0 * m * (m + 1.0)).ln() / (1.0 / big_r).ln()));
    let geometric = m.powf(p - 1.0);
    let (upper_coeff, certificate_ratio) = if p > 1.0 {
        (
            Some(sigma.powf(-s) / (geometric - 1.0)),
            Some(big_r.powf(s) * geometric / (geometric - 1.0) * m * (m + 1.0)),
        )
    } else {
        (None, None)
    };
    Ok(GapCertificate {
        s,
        map_count: fractal.map_count(),
        ratio: r,
        dimension: d,
        sigma,
        separation_ratio: big_r,
        s_threshold,
        upper_coeff,
        lower_coeff: m.powf(p),
        certificate_ratio,
        certified: certificate_ratio.is_some_and(|q| q < 1.0),
    })
}

/// The gap check specialised to the ternary Cantor set, in two forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CantorGapCheck {
    pub s: f64,
    /// `(3/4)^{s/d} · 2^{s/d−1}/(2^{s/d−1} − 1) · 3/2`; absent when `s ≤ d`.
    pub ratio: Option<f64>,
    pub certified: bool,
    /// Upper over lower coefficient with every pair counted twice:
    /// `(2^{−s/d} + 2/(2^{s/d−1} − 1)) / (2 · 2^{s/d} / 3^{1+s/d})`.
    pub ordered_ratio: Option<f64>,
    pub ordered_certified: bool,
}

pub fn cantor_gap_check(s: f64) -> Result<CantorGapCheck> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("Riesz exponent {s} is not positive")));
    }
    let d = 2f64.ln() / 3f64.ln();
    let p = s / d;
    let (ratio, ordered_ratio) = if p > 1.0 {
        let geometric = 2f64.powf(p - 1.0);
        let ratio = 0.75f64.powf(p) * geometric / (geometric - 1.0) * 1.5;
        let upper = 2f64.powf(-p) + 2.0 / (geometric - 1.0);
        let lower = 2.0 * 2f64.powf(p) / 3f64.powf(1.0 + p);
        (Some(ratio), Some(upper / lower))
    } else {
        (None, None)
    };
    Ok(CantorGapCheck {
        s,
        ratio,
        certified: ratio.is_some_and(|q| q < 1.0),
        ordered_ratio,
        ordered_certified: ordered_ratio.is_some_and(|q| q < 1.0),
    })
}

fn geometric_inputs(fractal: &Fractal, s: f64) -> Result<(f64, f64)> {
    fractal.require_equal_ratios()?;
    super::require_hypersingular(fractal, s)?;
    Ok((fractal.map_count() as f64, s / fractal.dimension()))
}

/// Lower bound `diam^{−s} · M^{s/d} (M^k)^{1+s/d}` on the energy of any
/// `M^{k+1} + M^k` points.
pub fn pigeonhole_lower_bound(fractal: &Fractal, k: u32, s: f64) -> Result<f64> {
    let (m, p) = geometric_inputs(fractal, s)?;
    Ok(fractal.diameter().powf(-s) * m.powf(p) * m.powi(k as i32).powf(1.0 + p))
}

/// `n^{1−s/d} σ^{−s} / (M^{s/d−1} − 1)`: how far the normalized energy can
/// rise along the lift chain started from `n` points.
pub fn tail_bound(fractal: &Fractal, n: usize, s: f64) -> Result<f64> {
    let (m, p) = geometric_inputs(fractal, s)?;
    Ok((n as f64).powf(1.0 - p) * fractal.sigma().powf(-s) / (m.powf(p - 1.0) - 1.0))
}

/// Upper bound on the energy after `k` lifts of an `n0`-point
/// configuration with energy `e0`:
/// `(M^k)^{1+s/d} e0 + n0^{1−s/d} σ^{−s}/(M^{s/d−1} − 1) · (M^k n0)^{1+s/d}`.
pub fn lift_chain_bound(fractal: &Fractal, n0: usize, e0: f64, k: u32, s: f64) -> Result<f64> {
    let (m, p) = geometric_inputs(fractal, s)?;
    let scale = m.powi(k as i32);
    Ok(scale.powf(1.0 + p) * e0 + tail_bound(fractal, n0, s)? * (scale * n0 as f64).powf(1.0 + p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thin_cantor_certificate() {
        let f = Fractal::uniform(2, 0.1).unwrap();
        let c = gap_certificate(&f, 4.0).unwrap();
        assert_relative_eq!(c.sigma, 0.8, epsilon = 1e-15);
        assert_relative_eq!(c.separation_ratio, 0.480_698_219_742_113_7, epsilon = 1e-13);
        assert_relative_eq!(c.s_threshold.unwrap(), 3.392_291_746_614_547, epsilon = 1e-12);
        assert!(c.certified);
        assert!(!gap_certificate(&f, 1.0).unwrap().certified);
    }

    #[test]
    fn ternary_cantor_is_not_certified() {
        let c = gap_certificate(&Fractal::cantor(1.0 / 3.0).unwrap(), 3.0).unwrap();
        assert!(c.separation_ratio > 1.9 && c.separation_ratio < 1.91);
        assert!(c.s_threshold.is_none());
        assert!(!c.certified);
    }

    #[test]
    fn equal_ratio_substitution() {
        // r^{−s} = M^{s/d}
        for (m, r) in [(2, 0.1), (3, 0.2), (5, 0.05)] {
            let f = Fractal::uniform(m, r).unwrap();
            for s in [0.5, 2.0, 7.0] {
                let c = gap_certificate(&f, s).unwrap();
                assert_relative_eq!(r.powf(-s), c.lower_coeff, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rescaling_does_not_change_the_certificate() {
        let f = Fractal::uniform(2, 0.1).unwrap();
        let a = gap_certificate(&f, 5.0).unwrap();
        let b = gap_certificate(&f.rescaled(7.5).unwrap(), 5.0).unwrap();
        assert_relative_eq!(a.separation_ratio, b.separation_ratio, max_relative = 1e-14);
        assert_relative_eq!(a.certificate_ratio.unwrap(), b.certificate_ratio.unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn unequal_ratios_are_rejected() {
        let f = Fractal::from_json(
            r#"{"ambient_dim":1,"maps":[{"ratio":0.5,"translation":[0]},{"ratio":0.25,"translation":[0.75]}]}"#,
        )
        .unwrap();
        assert!(matches!(gap_certificate(&f, 3.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn cantor_check_values() {
        let d = 2f64.ln() / 3f64.ln();
        let at3 = cantor_gap_check(3.0 * d).unwrap();
        assert_relative_eq!(at3.ratio.unwrap(), 0.84375, epsilon = 1e-12);
        assert!(at3.certified);
        assert!(cantor_gap_check(1.1 * d).unwrap().ratio.unwrap() > 1.0);
        let boundary = cantor_gap_check(d).unwrap();
        assert!(boundary.ratio.is_none() && !boundary.certified);
        assert!(cantor_gap_check(200.0 * d).unwrap().ratio.unwrap() < 1e-20);
        assert_relative_eq!(at3.ordered_ratio.unwrap(), (1.0 / 8.0 + 2.0 / 3.0) * 81.0 / 16.0, max_relative = 1e-12);
    }

    #[test]
    fn tail_bound_for_cantor() {
        let c = Fractal::cantor(1.0 / 3.0).unwrap();
        let d = c.dimension();
        let expected = 8f64.powf(1.0 - 3.0 / d) * 27.0 / (2f64.powf(3.0 / d - 1.0) - 1.0);
        assert_relative_eq!(tail_bound(&c, 8, 3.0).unwrap(), expected, max_relative = 1e-13);
        assert!(tail_bound(&c, 8, 0.5).is_err());
        let lb = pigeonhole_lower_bound(&c, 2, 3.0).unwrap();
        assert_relative_eq!(lb, 2f64.powf(3.0 / d) * 4f64.powf(1.0 + 3.0 / d), max_relative = 1e-13);
    }
}
