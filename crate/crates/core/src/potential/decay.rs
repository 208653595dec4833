//! Pointwise decay rates of normalized monomial masses.

use crate::error::{Error, Result};
use crate::special::{ln_one_plus_sum_exp, xlogx};

const TOL: f64 = 1e-12;

fn lambda0(lambda: &[f64], p: f64) -> Result<f64> {
    let sum: f64 = lambda.iter().sum();
    if lambda
        .iter()
        .any(|&l| l < -TOL * p.max(1.0) || !l.is_finite())
        || sum > p * (1.0 + TOL)
    {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda:?} is outside {p} * Sigma"
        )));
    }
    Ok((p - sum).max(0.0))
}

/// `b(lambda; rho) = sum_{j=0}^m lambda_j ln(lambda_j / p) - <rho, lambda> + p ln(1 + sum e^rho)`.
///
/// Nonnegative, vanishing exactly at the moment point `p e^rho / (1 + sum e^rho)`.
pub fn decay_rate(lambda: &[f64], rho: &[f64], p: f64) -> Result<f64> {
    if lambda.len() != rho.len() {
        return Err(Error::InvalidArgument(
            "lambda and rho dimensions differ".into(),
        ));
    }
    let l0 = lambda0(lambda, p)?;
    let entropy = xlogx(l0) + lambda.iter().map(|&l| xlogx(l.max(0.0))).sum::<f64>() - p * p.ln();
    let pairing: f64 = lambda.iter().zip(rho).map(|(l, r)| l * r).sum();
    Ok((entropy - pairing + p * ln_one_plus_sum_exp(rho)).max(0.0))
}

/// The minimizer `p e^{rho_j} / (1 + sum e^rho)` of the decay rate.
pub fn moment_point(rho: &[f64], p: f64) -> Vec<f64> {
    let l = ln_one_plus_sum_exp(rho);
    rho.iter().map(|r| p * (r - l).exp()).collect()
}

/// Sup of the decay rate over `p * Sigma`, attained at a vertex.
pub fn decay_sup(rho: &[f64], p: f64) -> f64 {
    let l = p * ln_one_plus_sum_exp(rho);
    let min_vertex = rho.iter().fold(0.0f64, |acc, &r| acc.min(p * r));
    l - min_vertex
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!(decay_rate(&[0.5], &[0.0], 1.0).unwrap().abs() < 1e-15);
        for r in [-3.0, 0.0, 2.5] {
            let v = decay_rate(&[0.0], &[r], 1.0).unwrap();
            assert!((v - (1.0 + f64::exp(r)).ln()).abs() < 1e-14);
        }
        assert!(decay_rate(&[1.2], &[0.0], 1.0).is_err());
        assert!(decay_rate(&[-0.1], &[0.0], 1.0).is_err());
    }

    #[test]
    fn sup_is_attained_at_a_vertex() {
        for r in [-2.0, 0.3, 4.0] {
            let s = decay_sup(&[r], 1.0);
            let want = (1.0 + r.exp()).ln().max((1.0 + (-r).exp()).ln());
            assert!((s - want).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn reflection_symmetry(l in 0.0f64..=1.0, r in -6.0f64..6.0) {
            let a = decay_rate(&[l], &[r], 1.0).unwrap();
            let b = decay_rate(&[1.0 - l], &[-r], 1.0).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn nonnegative_with_zero_at_moment_point(
            a in 0.0f64..1.0, b in 0.0f64..1.0, r1 in -5.0f64..5.0, r2 in -5.0f64..5.0, p in 0.5f64..3.0
        ) {
            let lam = [a * p * (1.0 - b), b * p * (1.0 - a)];
            let rho = [r1, r2];
            prop_assert!(decay_rate(&lam, &rho, p).unwrap() >= 0.0);
            let mu = moment_point(&rho, p);
            prop_assert!(decay_rate(&mu, &rho, p).unwrap() < 1e-12);
            prop_assert!(decay_rate(&lam, &rho, p).unwrap() <= decay_sup(&rho, p) + 1e-12);
        }
    }
}
