//! Symplectic potentials `u` on `p * Sigma`.

use std::fmt;
use std::sync::Arc;

use crate::special::xlogx;

/// A convex function on `p * Sigma`, finite on the interior.
pub trait SymplecticPotential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// The dilation `p` of the simplex the potential lives on.
    fn scale(&self) -> f64 {
        1.0
    }

    fn value(&self, lambda: &[f64]) -> f64;

    fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..lambda.len())
            .map(|j| {
                let mut a = lambda.to_vec();
                let mut b = lambda.to_vec();
                a[j] += h;
                b[j] -= h;
                (self.value(&a) - self.value(&b)) / (2.0 * h)
            })
            .collect()
    }

    /// Row-major Hessian.
    fn hessian(&self, lambda: &[f64]) -> Vec<f64> {
        let m = lambda.len();
        let h = 1e-4;
        let mut out = vec![0.0; m * m];
        for j in 0..m {
            let mut a = lambda.to_vec();
            let mut b = lambda.to_vec();
            a[j] += h;
            b[j] -= h;
            let (ga, gb) = (self.gradient(&a), self.gradient(&b));
            for i in 0..m {
                out[i * m + j] = (ga[i] - gb[i]) / (2.0 * h);
            }
        }
        // Symmetrize away finite-difference asymmetry.
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (out[i * m + j] + out[j * m + i]);
                out[i * m + j] = s;
                out[j * m + i] = s;
            }
        }
        out
    }

    /// Whether derivatives blow up on the boundary of the simplex.
    fn singular_on_boundary(&self) -> bool {
        true
    }

    fn name(&self) -> String;
}

pub type SharedPotential = Arc<dyn SymplecticPotential>;

/// The entropy `u(lambda) = sum_{j=0}^m lambda_j ln lambda_j`, `lambda_0 = p - |lambda|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FubiniStudy {
    pub dim: usize,
    pub p: f64,
}

impl FubiniStudy {
    pub fn new(dim: usize) -> Self {
        Self { dim, p: 1.0 }
    }

    pub fn with_scale(dim: usize, p: f64) -> Self {
        Self { dim, p }
    }
}

fn lambda0(p: f64, lambda: &[f64]) -> f64 {
    (p - lambda.iter().sum::<f64>()).max(0.0)
}

impl SymplecticPotential for FubiniStudy {
    fn dim(&self) -> usize {
        self.dim
    }

    fn scale(&self) -> f64 {
        self.p
    }

    fn value(&self, lambda: &[f64]) -> f64 {
        xlogx(lambda0(self.p, lambda)) + lambda.iter().map(|&l| xlogx(l)).sum::<f64>()
    }

    fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let l0 = lambda0(self.p, lambda).ln();
        lambda.iter().map(|&l| l.ln() - l0).collect()
    }

    fn hessian(&self, lambda: &[f64]) -> Vec<f64> {
        let m = lambda.len();
        let inv0 = 1.0 / lambda0(self.p, lambda);
        let mut h = vec![inv0; m * m];
        for j in 0..m {
            h[j * m + j] += 1.0 / lambda[j];
        }
        h
    }

    fn name(&self) -> String {
        "fubini_study".into()
    }
}

/// `u + weight * |lambda - center|^2`, a strictly convex perturbation.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbed<U> {
    pub base: U,
    pub weight: f64,
    pub center: Vec<f64>,
}

impl<U: SymplecticPotential> SymplecticPotential for Perturbed<U> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn scale(&self) -> f64 {
        self.base.scale()
    }

    fn value(&self, lambda: &[f64]) -> f64 {
        let q: f64 = lambda
            .iter()
            .zip(&self.center)
            .map(|(l, c)| (l - c) * (l - c))
            .sum();
        self.base.value(lambda) + self.weight * q
    }

    fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(lambda);
        for ((g, l), c) in g.iter_mut().zip(lambda).zip(&self.center) {
            *g += 2.0 * self.weight * (l - c);
        }
        g
    }

    fn hessian(&self, lambda: &[f64]) -> Vec<f64> {
        let m = lambda.len();
        let mut h = self.base.hessian(lambda);
        for j in 0..m {
            h[j * m + j] += 2.0 * self.weight;
        }
        h
    }

    fn singular_on_boundary(&self) -> bool {
        self.base.singular_on_boundary()
    }

    fn name(&self) -> String {
        format!("{}+{}|x-c|^2", self.base.name(), self.weight)
    }
}

/// `factor * u`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaled<U> {
    pub base: U,
    pub factor: f64,
}

impl<U: SymplecticPotential> SymplecticPotential for Scaled<U> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn scale(&self) -> f64 {
        self.base.scale()
    }

    fn value(&self, lambda: &[f64]) -> f64 {
        self.factor * self.base.value(lambda)
    }

    fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        self.base
            .gradient(lambda)
            .into_iter()
            .map(|g| self.factor * g)
            .collect()
    }

    fn hessian(&self, lambda: &[f64]) -> Vec<f64> {
        self.base
            .hessian(lambda)
            .into_iter()
            .map(|h| self.factor * h)
            .collect()
    }

    fn singular_on_boundary(&self) -> bool {
        self.base.singular_on_boundary()
    }

    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.base.name())
    }
}

/// A potential given by a closure; derivatives by finite differences.
pub struct FnPotential<F> {
    pub dim: usize,
    pub scale: f64,
    pub label: String,
    pub f: F,
}

impl<F> fmt::Debug for FnPotential<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnPotential")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl<F> SymplecticPotential for FnPotential<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn value(&self, lambda: &[f64]) -> f64 {
        (self.f)(lambda)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}
