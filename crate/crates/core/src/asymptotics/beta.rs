use serde::Serialize;

use crate::error::{Error, Result};

/// Minimizer of `Σ β_m^{1+s/d} w_m^{−s/d}` over the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaOptimum {
    pub beta: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

const SIMPLEX_TOLERANCE: f64 = 1e-10;
const MAX_NEWTON_STEPS: usize = 200;

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Domain("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::Domain(format!("weight {w} is not positive")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::Domain(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn exponent(s: f64, d: f64) -> Result<f64> {
    if !(d > 0.0 && s > d && s.is_finite()) {
        return Err(Error::Domain(format!("need s > d > 0, got s = {s}, d = {d}")));
    }
    Ok(s / d)
}

/// `Σ β_m^{1+s/d} w_m^{−s/d}`.
pub fn beta_objective(beta: &[f64], weights: &[f64], s: f64, d: f64) -> Result<f64> {
    let p = exponent(s, d)?;
    if beta.len() != weights.len() {
        return Err(Error::Domain("beta and weights differ in length".into()));
    }
    if beta.iter().any(|b| b.is_nan() || *b < 0.0) {
        return Err(Error::Domain("beta has a negative entry".into()));
    }
    Ok(beta
        .iter()
        .zip(weights)
        .map(|(b, w)| b.powf(1.0 + p) * w.powf(-p))
        .sum())
}

/// Equality-constrained Newton iteration from the barycenter. The
/// objective is strictly convex, so the KKT point is the global minimum.
pub fn beta_optimum(weights: &[f64], s: f64, d: f64) -> Result<BetaOptimum> {
    check_weights(weights)?;
    let p = exponent(s, d)?;
    let m = weights.len();
    let objective = |beta: &[f64]| -> f64 {
        beta.iter()
            .zip(weights)
            .map(|(b, w)| b.powf(1.0 + p) * w.powf(-p))
            .sum()
    };
    let mut beta = vec![1.0 / m as f64; m];
    let mut value = objective(&beta);
    let mut iterations = 0;
    while iterations < MAX_NEWTON_STEPS {
        iterations += 1;
        let grad: Vec<f64> = beta
            .iter()
            .zip(weights)
            .map(|(b, w)| (1.0 + p) * (b / w).powf(p))
            .collect();
        let hess: Vec<f64> = beta
            .iter()
            .zip(weights)
            .map(|(b, w)| (1.0 + p) * p * b.powf(p - 1.0) * w.powf(-p))
            .collect();
        let inv_sum: f64 = hess.iter().map(|h| 1.0 / h).sum();
        let multiplier = grad.iter().zip(&hess).map(|(g, h)| g / h).sum::<f64>() / inv_sum;
        let step: Vec<f64> = grad
            .iter()
            .zip(&hess)
            .map(|(g, h)| -(g - multiplier) / h)
            .collect();
        if step.iter().all(|v| v.abs() <= 1e-16) {
            break;
        }
        let mut t = 1.0;
        let mut trial;
        loop {
            trial = beta.iter().zip(&step).map(|(b, v)| b + t * v).collect::<Vec<f64>>();
            if trial.iter().all(|b| *b > 0.0) && objective(&trial) <= value + 1e-15 {
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                break;
            }
        }
        if t < 1e-20 {
            break;
        }
        let total: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|b| *b /= total);
        let moved = trial.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = trial;
        value = objective(&beta);
        if moved <= 1e-16 {
            break;
        }
    }
    Ok(BetaOptimum {
        beta,
        value,
        iterations,
    })
}
