use super::{backwards_rows, DiscreteDistribution, KernelMatrix};
use crate::error::{Error, Result};

const STATIONARITY_TOL: f64 = 1e-8;

/// `Σ ν log(ν/μ)` with `0 log 0 = 0`; `μ` must be strictly positive.
pub fn relative_entropy(nu: &DiscreteDistribution, mu: &DiscreteDistribution) -> f64 {
    kl(&nu.weights, &mu.weights)
}

fn kl(p: &[f64], r: &[f64]) -> f64 {
    p.iter()
        .zip(r)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0)
}

/// `‖μM − μ‖_TV`.
pub fn stationarity_check(m: &KernelMatrix, mu: &DiscreteDistribution) -> f64 {
    m.push_forward(mu).total_variation(mu)
}

/// Entropy lost in one step and its expression through backwards kernels:
/// `(D(ν‖μ) − D(νM‖μ),  Σ_η (νM)(η) D(Q̂_ν(η,·) ‖ Q̂_μ(η,·)))`.
pub fn entropy_loss_identity(
    nu: &DiscreteDistribution,
    m: &KernelMatrix,
    mu: &DiscreteDistribution,
) -> Result<(f64, f64)> {
    if mu.weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Param("mu must be strictly positive".into()));
    }
    let defect = stationarity_check(m, mu);
    if !(defect <= STATIONARITY_TOL) {
        return Err(Error::NotStationary { tv: defect });
    }
    let m_nu = m.push_forward(nu);
    let loss = relative_entropy(nu, mu) - relative_entropy(&m_nu, mu);

    let back_nu = backwards_rows(m, nu);
    let back_mu = backwards_rows(m, mu);
    let mut rhs = 0.0;
    for (eta, (bn, bm)) in back_nu.iter().zip(&back_mu).enumerate() {
        if let (Some(bn), Some(bm)) = (bn, bm) {
            rhs += m_nu.weights[eta] * kl(bn, bm);
        }
    }
    Ok((loss, rhs))
}
