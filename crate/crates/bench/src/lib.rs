//! Shared fixtures for benchmarks.

use fewnomial::ensemble::{FewnomialSystem, Weighting};
use fewnomial::lattice::Lattice;
use fewnomial::solver::SparsePoly;
use fewnomial::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `k = m` random SU equations of degree `n` with `f` monomials each, as solver input.
pub fn random_system(m: usize, n: u32, f: usize, seed: u64) -> Result<Vec<SparsePoly>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lattice = Lattice::new(n, m, None)?;
    let spectra = (0..m)
        .map(|_| lattice.sample(f, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let sys = FewnomialSystem::sample(spectra, &Weighting::Su, &mut rng)?;
    sys.equations
        .iter()
        .map(SparsePoly::from_equation)
        .collect()
}
