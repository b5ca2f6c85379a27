//! Asymptotic experiments and analytic certificates for the normalized
//! energy `E_s(ω_N) / N^{1+s/d}` in the hypersingular regime `s > d`.

mod beta;
mod certificate;
mod limits;
mod measure;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fractal::Fractal;

pub use beta::{beta_objective, beta_optimum, BetaOptimum};
pub use certificate::{
    cantor_gap_check, gap_certificate, lift_chain_bound, pigeonhole_lower_bound, tail_bound,
    CantorGapCheck, GapCertificate,
};
pub use limits::{
    g_curve, geometric_limit, monotonicity_check, GCurve, GCurvePoint, GeometricLimit, LimitRow,
    MonotonicityReport, MonotonicityRow,
};
pub use measure::{empirical_cell_measure, CellMeasureReport, CellMeasureRow};

/// Default number of θ bins.
pub const DEFAULT_BINS: usize = 16;

/// Rejects `s ≤ d` and fractals without certified separation.
pub(crate) fn require_hypersingular(fractal: &Fractal, s: f64) -> Result<()> {
    let d = fractal.dimension();
    if !(s.is_finite() && s > d) {
        return Err(Error::Domain(format!(
            "s = {s} is not in the hypersingular range s > d = {d}"
        )));
    }
    fractal.require_separated()
}

/// Fractional part of `log_M N` in `[0, 1)`. Values within 1e-12 of an
/// integer are snapped, so exact powers of `M` land on 0.
pub fn theta(n: usize, m: usize) -> f64 {
    let x = (n as f64).ln() / (m as f64).ln();
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 {
        0.0
    } else {
        x - x.floor()
    }
}

/// Least-squares line through `(log N, log value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

pub fn scaling_exponent_fit(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return Err(Error::Domain(format!(
            "exponent fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if let Some((n, v)) = samples.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(Error::Domain(format!("sample ({n}, {v}) is not positive")));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|(n, v)| (n.ln(), v.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("exponent fit needs at least two distinct N".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn theta_of_powers_and_triples() {
        for k in 0..20 {
            assert_eq!(theta(1 << k, 2), 0.0);
        }
        let expected = 3f64.log2() - 1.0;
        for n in [3, 6, 12, 24, 48] {
            assert_abs_diff_eq!(theta(n, 2), expected, epsilon = 1e-12);
        }
        assert_eq!(theta(27, 3), 0.0);
    }

    #[test]
    fn exact_power_law() {
        let samples: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|&n: &f64| (n, n.powi(-2))).collect();
        let fit = scaling_exponent_fit(&samples).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-12);
        assert!(fit.residual < 1e-12);

        let flat: Vec<(f64, f64)> = (2..8).map(|n| (n as f64, 3.5)).collect();
        assert_abs_diff_eq!(scaling_exponent_fit(&flat).unwrap().slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_bad_samples() {
        assert!(scaling_exponent_fit(&[(1.0, 1.0); 3]).is_err());
        assert!(scaling_exponent_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(scaling_exponent_fit(&[(2.0, 1.0); 5]).is_err());
    }

    proptest! {
        #[test]
        fn fit_recovers_any_power_law(p in -4.0f64..4.0, c in 0.1f64..10.0) {
            let samples: Vec<(f64, f64)> = (1..8).map(|k| {
                let n = (3 * k) as f64;
                (n, c * n.powf(p))
            }).collect();
            let fit = scaling_exponent_fit(&samples).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-10);
            prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
