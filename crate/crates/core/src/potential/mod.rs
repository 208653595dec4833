//! Limiting potentials of zero distributions and their Monge-Ampere densities.

pub mod averaged;
pub mod decay;
pub mod density;
pub mod kac;
pub mod legendre;
pub mod symplectic;

pub use averaged::{AveragedDb, PooledAveraged, ToricAveraged1d};
pub use decay::{decay_rate, moment_point};
pub use density::{ma_density, ma_density_geometric, Axis, DensityGrid, GridSpec};
pub use kac::KacPotential;
pub use legendre::{discrete_legendre, ma_corner_measure, Corner, DiscreteLegendre};
pub use symplectic::{FubiniStudy, Perturbed, SymplecticPotential};

use crate::special::ln_one_plus_sum_exp;

/// What a potential field represents, for reports.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    DiscreteLegendre {
        p: f64,
    },
    Averaged {
        f: usize,
        method: String,
        samples: Option<usize>,
    },
    Kac {
        f: usize,
    },
    FubiniStudy,
    Toric {
        name: String,
    },
}

/// A convex, torus-invariant function of `rho`.
pub trait PotentialField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, rho: &[f64]) -> f64;
    fn kind(&self) -> PotentialKind;
}

/// `p ln(1 + sum_j e^{rho_j})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FubiniStudyPotential {
    pub dim: usize,
    pub p: f64,
}

impl PotentialField for FubiniStudyPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, rho: &[f64]) -> f64 {
        self.p * ln_one_plus_sum_exp(rho)
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::FubiniStudy
    }
}

/// A potential given by a closure.
pub struct FnField<F> {
    pub dim: usize,
    pub kind: PotentialKind,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> PotentialField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, rho: &[f64]) -> f64 {
        (self.f)(rho)
    }

    fn kind(&self) -> PotentialKind {
        self.kind.clone()
    }
}
