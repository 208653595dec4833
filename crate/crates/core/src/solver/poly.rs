//! Sparse Laurent-free polynomials in `m` variables.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::ensemble::SparseEquation;
use crate::error::{Error, Result};
use crate::solver::scaled::Scaled;
use crate::special::logsumexp;

/// `sum_k c_k z^{a_k}` with distinct exponents and nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePoly {
    dim: usize,
    terms: Vec<(Vec<u32>, Complex64)>,
}

impl SparsePoly {
    /// Merges repeated exponents and drops zero coefficients.
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, Complex64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "polynomial needs at least one variable".into(),
            ));
        }
        let mut map: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (a, c) in terms {
            if a.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "exponent {a:?} has wrong dimension"
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
            *map.entry(a).or_default() += c;
        }
        let terms = map.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        Ok(Self { dim, terms })
    }

    pub fn from_equation(eq: &SparseEquation) -> Result<Self> {
        Self::new(eq.spectrum.dim(), eq.monomial_terms())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<u32>, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `P(e^{s/2} z)` for a shift `s` per variable.
    pub fn rescaled(&self, s: &[f64]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| {
                let l: f64 = a.iter().zip(s).map(|(&k, s)| k as f64 * s / 2.0).sum();
                (a.clone(), c * l.exp())
            })
            .collect();
        Self {
            dim: self.dim,
            terms,
        }
    }

    pub fn conj(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| (a.clone(), c.conj()))
            .collect();
        Self {
            dim: self.dim,
            terms,
        }
    }

    fn scaled_terms(&self, z: &[Complex64]) -> impl Iterator<Item = Scaled<f64>> + '_ {
        let zs: Vec<Scaled<f64>> = z.iter().map(|&z| Scaled::new(z)).collect();
        self.terms.iter().map(move |(a, c)| {
            a.iter()
                .zip(&zs)
                .fold(Scaled::new(*c), |acc, (&k, s)| acc.mul(s.powu(k)))
        })
    }

    /// `(ln|P(z)|, ln sum_k |c_k z^{a_k}|)`, safe for large exponents.
    pub fn log_value_and_scale(&self, z: &[Complex64]) -> (f64, f64) {
        let mut sum = Scaled::zero();
        let mut logs = Vec::with_capacity(self.terms.len());
        for t in self.scaled_terms(z) {
            logs.push(t.ln_abs());
            sum = sum.add(t);
        }
        (sum.ln_abs(), logsumexp(logs.iter().copied()))
    }

    /// `|P(z)| / sum_k |c_k z^{a_k}|`, the backward error of an evaluation.
    pub fn relative_residual(&self, z: &[Complex64]) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let (v, s) = self.log_value_and_scale(z);
        (v - s).exp()
    }

    /// Direct evaluation; overflows for large degrees.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(a, c)| a.iter().zip(z).fold(*c, |acc, (&k, z)| acc * z.powu(k)))
            .sum()
    }

    /// Value and gradient via scaled arithmetic, returned relative to `exp(-shift)` where
    /// `shift` is the log of the term-magnitude sum.
    pub fn value_and_gradient_scaled(&self, z: &[Complex64]) -> (Complex64, Vec<Complex64>, f64) {
        let ts: Vec<Scaled<f64>> = self.scaled_terms(z).collect();
        let shift = logsumexp(ts.iter().map(|t| t.ln_abs()));
        let unit = Scaled {
            m: Complex64::new(1.0, 0.0),
            e: 0,
        };
        // Express each term relative to e^shift.
        let k = (shift / std::f64::consts::LN_2).floor() as i64;
        let denom = Scaled { e: k, ..unit };
        let rel: Vec<Complex64> = ts.iter().map(|t| t.div(denom)).collect();
        let value = rel.iter().sum();
        let grad = (0..self.dim)
            .map(|j| {
                self.terms
                    .iter()
                    .zip(&rel)
                    .map(|((a, _), t)| t * a[j] as f64)
                    .sum::<Complex64>()
                    / z[j]
            })
            .collect();
        (value, grad, k as f64 * std::f64::consts::LN_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn construction_merges_and_drops() {
        let p = SparsePoly::new(
            1,
            vec![(vec![2], c(1.0)), (vec![2], c(-1.0)), (vec![0], c(3.0))],
        )
        .unwrap();
        assert_eq!(p.terms(), &[(vec![0], c(3.0))]);
        assert!(SparsePoly::new(2, vec![(vec![1], c(1.0))]).is_err());
    }

    #[test]
    fn residual_is_scale_free() {
        let p = SparsePoly::new(1, vec![(vec![0], c(-1.0)), (vec![400], c(1.0))]).unwrap();
        let root = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 7.0 / 400.0);
        assert!(p.relative_residual(&[root]) < 1e-12);
        let far = Complex64::new(3.0, 0.0);
        assert!((p.relative_residual(&[far]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_gradient_matches_direct() {
        let p = SparsePoly::new(
            2,
            vec![
                (vec![0, 0], c(1.0)),
                (vec![2, 1], Complex64::new(0.5, -1.0)),
                (vec![0, 3], c(2.0)),
            ],
        )
        .unwrap();
        let z = [Complex64::new(0.7, 0.2), Complex64::new(-0.4, 1.1)];
        let (v, g, shift) = p.value_and_gradient_scaled(&z);
        let e = shift.exp();
        assert!((v * e - p.eval(&z)).norm() < 1e-12);
        let h = 1e-6;
        for j in 0..2 {
            let mut zp = z;
            zp[j] += h;
            let mut zm = z;
            zm[j] -= h;
            let fd = (p.eval(&zp) - p.eval(&zm)) / (2.0 * h);
            assert!((g[j] * e - fd).norm() < 1e-7);
        }
    }
}
