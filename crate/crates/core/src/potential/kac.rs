//! The potential of the unweighted (Kac) fewnomial ensemble.

use rand::Rng;

use crate::error::{Error, Result};
use crate::potential::averaged::{sample_uniform_simplex, McEstimate};
use crate::potential::{PotentialField, PotentialKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KacMethod {
    /// Order statistics of uniforms, one variable only.
    Closed1d,
    MonteCarlo {
        samples: usize,
    },
}

/// `E max_j rho lambda^j` over `f` uniform points of `[0, 1]`: `E max = f/(f+1)`, `E min = 1/(f+1)`.
pub fn kac_potential_closed1d(f: usize, rho: f64) -> f64 {
    let f = f as f64;
    if rho >= 0.0 {
        rho * f / (f + 1.0)
    } else {
        rho / (f + 1.0)
    }
}

/// Monte Carlo estimate of `E max_j <lambda^j, rho>` over `f` uniform points of `Sigma`.
pub fn kac_potential_mc<R: Rng + ?Sized>(
    f: usize,
    rho: &[f64],
    samples: usize,
    rng: &mut R,
) -> McEstimate {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let best = (0..f)
            .map(|_| {
                let l = sample_uniform_simplex(rho.len(), 1.0, rng);
                l.iter().zip(rho).map(|(l, r)| l * r).sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        s += best;
        s2 += best * best;
    }
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    }
}

pub fn kac_potential<R: Rng + ?Sized>(
    f: usize,
    rho: &[f64],
    method: KacMethod,
    rng: &mut R,
) -> Result<f64> {
    if f == 0 {
        return Err(Error::InvalidArgument("f must be >= 1".into()));
    }
    match method {
        KacMethod::Closed1d if rho.len() == 1 => Ok(kac_potential_closed1d(f, rho[0])),
        KacMethod::Closed1d => Err(Error::InvalidArgument("closed form needs m = 1".into())),
        KacMethod::MonteCarlo { samples } => Ok(kac_potential_mc(f, rho, samples, rng).mean),
    }
}

/// The closed one-variable Kac potential as a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KacPotential {
    pub f: usize,
}

impl KacPotential {
    /// Slope jump at the corner `rho = 0`.
    pub fn corner_mass(&self) -> f64 {
        (self.f as f64 - 1.0) / (self.f as f64 + 1.0)
    }
}

impl PotentialField for KacPotential {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, rho: &[f64]) -> f64 {
        kac_potential_closed1d(self.f, rho[0])
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::Kac { f: self.f }
    }
}
