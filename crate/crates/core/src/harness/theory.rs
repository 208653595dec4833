//! Limiting zero densities for each ensemble.
//!
//! Zero counts are normalized by `D^m` with `D` the full degree (`N p` for dilated spectra),
//! so every limit is expressed with points rescaled into the unit simplex.

use rand::seq::index::sample as sample_indices;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::config::{Ensemble, ExperimentConfig};
use crate::harness::seeds::theory_rng;
use crate::lattice::{enumerate_lattice, NewtonPolytope};
use crate::potential::averaged::{
    sample_uniform_simplex, AveragedDb, PooledAveraged, ToricAveraged1d,
};
use crate::potential::density::{ma_density, ma_density_geometric, DensityGrid, GridSpec};
use crate::potential::kac::KacPotential;
use crate::potential::legendre::{ma_corner_measure, Corner, DiscreteLegendre};
use crate::potential::symplectic::{FnPotential, FubiniStudy, SymplecticPotential};
use crate::potential::{FubiniStudyPotential, PotentialField, PotentialKind};
use crate::solver::mixed::convex_hull_f64;

/// The theory side of a comparison.
#[derive(Clone, Debug)]
pub struct Theory {
    pub density: DensityGrid,
    /// Atoms of the limit measure, when it is atomic in one variable.
    pub corners: Option<Vec<Corner>>,
    pub description: String,
}

/// Mean of several potentials.
struct Mixture {
    parts: Vec<DiscreteLegendre>,
}

impl PotentialField for Mixture {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn value(&self, rho: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.value(rho)).sum::<f64>() / self.parts.len() as f64
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::DiscreteLegendre { p: 1.0 }
    }
}

struct Sum<'a>(&'a dyn PotentialField, &'a dyn PotentialField);

impl PotentialField for Sum<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, rho: &[f64]) -> f64 {
        self.0.value(rho) + self.1.value(rho)
    }

    fn kind(&self) -> PotentialKind {
        self.0.kind()
    }
}

enum Limit {
    Atoms(Vec<Corner>),
    Fields(Vec<Box<dyn PotentialField + Send>>),
}

/// Spreads atoms into the cells that contain them.
pub fn atoms_on_grid(corners: &[Corner], grid: &GridSpec) -> Result<DensityGrid> {
    let vol = grid.cell_volume();
    let mut values = vec![0.0; grid.len()];
    for c in corners {
        if let Some(i) = grid.cell_of(&[c.rho]) {
            values[i] += c.mass / vol;
        }
    }
    DensityGrid::new(grid.clone(), values)
}

fn merge_corners(mut corners: Vec<Corner>) -> Vec<Corner> {
    corners.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    let mut out: Vec<Corner> = Vec::new();
    for c in corners {
        match out.last_mut() {
            Some(last) if (last.rho - c.rho).abs() <= 1e-12 * (1.0 + c.rho.abs()) => {
                last.mass += c.mass
            }
            _ => out.push(c),
        }
    }
    out
}

/// Lattice points of `Delta`, divided by `p` so that they lie in `Sigma`.
fn unit_lattice(polytope: &NewtonPolytope) -> Result<Vec<Vec<f64>>> {
    let p = polytope.scale() as f64;
    Ok(enumerate_lattice(1, polytope.dim(), Some(polytope))?
        .iter()
        .map(|a| a.coords().iter().map(|&c| c as f64 / p).collect())
        .collect())
}

/// All `f`-subsets of `0..len` when there are at most `cap`, else `cap` uniform ones.
fn subsets(len: usize, f: usize, cap: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if f == 0 || f > len {
        return Err(Error::SpectrumTooLarge {
            requested: f,
            available: len,
        });
    }
    let count = crate::lattice::binomial(&(len as u64).into(), f as u64);
    if count <= (cap as u64).into() {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..f).collect();
        loop {
            out.push(cur.clone());
            let Some(i) = (0..f).rev().find(|&i| cur[i] < len - f + i) else {
                break;
            };
            cur[i] += 1;
            for j in i + 1..f {
                cur[j] = cur[j - 1] + 1;
            }
        }
        Ok(out)
    } else {
        Ok((0..cap)
            .map(|_| sample_indices(rng, len, f).into_vec())
            .collect())
    }
}

/// Uniform points of `Delta / p` by rejection from the simplex.
fn polytope_pool(
    polytope: &NewtonPolytope,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let p = polytope.scale() as f64;
    let verts: Vec<[f64; 2]> = polytope
        .vertices()
        .iter()
        .map(|v| {
            let c = |r: &num_rational::Ratio<i64>| *r.numer() as f64 / *r.denom() as f64 / p;
            [c(&v[0]), c(&v[1])]
        })
        .collect();
    let hull = convex_hull_f64(&verts);
    let inside = |x: &[f64]| {
        (0..hull.len()).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= 0.0
        })
    };
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * n {
            return Err(Error::DegeneratePolytope);
        }
        let x = sample_uniform_simplex(2, 1.0, rng);
        if inside(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

fn interval(polytope: &NewtonPolytope) -> (f64, f64) {
    let p = polytope.scale() as f64;
    let xs: Vec<f64> = polytope
        .vertices()
        .iter()
        .map(|v| *v[0].numer() as f64 / *v[0].denom() as f64 / p)
        .collect();
    (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn limit(cfg: &ExperimentConfig) -> Result<(Limit, String)> {
    let m = cfg.ensemble.m;
    let k = cfg.k();
    let t = &cfg.theory;
    let seed = cfg.ensemble.seed;
    let zero = FnPotential {
        dim: m,
        scale: 1.0,
        label: "zero".into(),
        f: |_: &[f64]| 0.0,
    };
    let pooled = |j: usize,
                  f: usize,
                  u: &dyn SymplecticPotential|
     -> Result<Box<dyn PotentialField + Send>> {
        Ok(Box::new(PooledAveraged::new(
            f,
            u,
            t.pool,
            &mut theory_rng(seed, j as u64),
        )?))
    };
    // Equations with equal laws share one potential.
    let distinct = |f: Vec<usize>| {
        if f.iter().all(|&x| x == f[0]) {
            vec![f[0]]
        } else {
            f
        }
    };
    Ok(match cfg.ensemble()? {
        Ensemble::FixedSpectrum { points, p } => {
            let unit: Vec<Vec<f64>> = points
                .iter()
                .map(|a| a.iter().map(|&c| c as f64 / p as f64).collect())
                .collect();
            let desc = format!("discrete Legendre transform of {points:?} in {p} * Sigma");
            if m == 1 {
                let xs: Vec<f64> = unit.iter().map(|x| x[0]).collect();
                (Limit::Atoms(ma_corner_measure(&xs, 1.0)?), desc)
            } else {
                (
                    Limit::Fields(vec![Box::new(DiscreteLegendre::new(unit, 1.0)?)]),
                    desc,
                )
            }
        }
        Ensemble::DilatedRandom { polytope, f } => {
            let f = distinct(f);
            let lattice = unit_lattice(&polytope)?;
            let desc =
                format!("Legendre transforms averaged over spectra of the polytope, f = {f:?}");
            let mut atoms = Vec::new();
            let mut fields: Vec<Box<dyn PotentialField + Send>> = Vec::new();
            for (j, &fj) in f.iter().enumerate() {
                let family = subsets(
                    lattice.len(),
                    fj,
                    t.max_spectra,
                    &mut theory_rng(seed, j as u64),
                )?;
                let weight = 1.0 / family.len() as f64;
                if m == 1 {
                    for s in &family {
                        let xs: Vec<f64> = s.iter().map(|&i| lattice[i][0]).collect();
                        atoms.extend(ma_corner_measure(&xs, 1.0)?.into_iter().map(|c| Corner {
                            mass: c.mass * weight,
                            ..c
                        }));
                    }
                    break;
                }
                let parts = family
                    .iter()
                    .map(|s| {
                        DiscreteLegendre::new(s.iter().map(|&i| lattice[i].clone()).collect(), 1.0)
                    })
                    .collect::<Result<Vec<_>>>()?;
                fields.push(Box::new(Mixture { parts }));
            }
            if m == 1 {
                (Limit::Atoms(merge_corners(atoms)), desc)
            } else {
                (Limit::Fields(fields), desc)
            }
        }
        Ensemble::RandomSimplex { f } => {
            let f = distinct(f);
            let desc = format!("averaged Fubini-Study potential, f = {f:?}");
            if m == 1 {
                (Limit::Fields(vec![Box::new(AveragedDb::new(f[0]))]), desc)
            } else {
                let u = FubiniStudy::new(2);
                (
                    Limit::Fields(
                        f.iter()
                            .enumerate()
                            .map(|(j, &fj)| pooled(j, fj, &u))
                            .collect::<Result<_>>()?,
                    ),
                    desc,
                )
            }
        }
        Ensemble::RandomPolytope { polytope, f } => {
            let f = distinct(f);
            let desc = format!("Fubini-Study potential averaged over the polytope, f = {f:?}");
            if m == 1 {
                let u = std::sync::Arc::new(FubiniStudy::new(1));
                (
                    Limit::Fields(vec![Box::new(ToricAveraged1d::on_interval(
                        u,
                        interval(&polytope),
                        f[0],
                    )?)]),
                    desc,
                )
            } else {
                let u = FubiniStudy::new(2);
                let fields = f
                    .iter()
                    .enumerate()
                    .map(|(j, &fj)| {
                        let mut rng = theory_rng(seed, j as u64);
                        let pool = polytope_pool(&polytope, t.pool, &mut rng)?;
                        Ok(Box::new(PooledAveraged::from_points(fj, &u, pool)?)
                            as Box<dyn PotentialField + Send>)
                    })
                    .collect::<Result<_>>()?;
                (Limit::Fields(fields), desc)
            }
        }
        Ensemble::Kac { f } => {
            let f = distinct(f);
            let desc = format!("Kac potential, f = {f:?}");
            if m == 1 {
                let mass = KacPotential { f: f[0] }.corner_mass();
                (Limit::Atoms(vec![Corner { rho: 0.0, mass }]), desc)
            } else {
                (
                    Limit::Fields(
                        f.iter()
                            .enumerate()
                            .map(|(j, &fj)| pooled(j, fj, &zero))
                            .collect::<Result<_>>()?,
                    ),
                    desc,
                )
            }
        }
        Ensemble::Toric { u, f } => {
            let f = distinct(f);
            let desc = format!("averaged toric potential of {}, f = {f:?}", u.name());
            if m == 1 {
                (
                    Limit::Fields(vec![Box::new(ToricAveraged1d::new(u, f[0])?)]),
                    desc,
                )
            } else {
                (
                    Limit::Fields(
                        f.iter()
                            .enumerate()
                            .map(|(j, &fj)| pooled(j, fj, u.as_ref()))
                            .collect::<Result<_>>()?,
                    ),
                    desc,
                )
            }
        }
        Ensemble::FullSpectrum => (
            Limit::Fields(vec![Box::new(FubiniStudyPotential { dim: m, p: 1.0 })]),
            "Fubini-Study potential".into(),
        ),
    })
    .and_then(|(l, d)| match (&l, k == m) {
        (_, true) => Ok((l, d)),
        _ => Err(Error::Config(format!(
            "point zero measures need k = m, got k = {k}, m = {m}"
        ))),
    })
}

/// Density of `dd^c phi_1 ^ dd^c phi_2` from gradient-image areas, by polarization.
fn mixed_geometric(
    a: &dyn PotentialField,
    b: &dyn PotentialField,
    grid: &GridSpec,
) -> Result<DensityGrid> {
    let ab = ma_density_geometric(&Sum(a, b), grid)?;
    let (da, db) = (
        ma_density_geometric(a, grid)?,
        ma_density_geometric(b, grid)?,
    );
    let values = ab
        .values
        .iter()
        .zip(&da.values)
        .zip(&db.values)
        .map(|((s, x), y)| (0.5 * (s - x - y)).max(0.0))
        .collect();
    DensityGrid::new(grid.clone(), values)
}

/// The limiting zero density of the configured ensemble. One-variable densities live on the
/// native grid; two-variable ones on the comparison grid.
pub fn theory(cfg: &ExperimentConfig) -> Result<Theory> {
    let (limit, description) = limit(cfg)?;
    let m = cfg.ensemble.m;
    match limit {
        Limit::Atoms(corners) => {
            let grid = cfg.grid_spec()?;
            Ok(Theory {
                density: atoms_on_grid(&corners, &grid)?,
                corners: Some(corners),
                description,
            })
        }
        Limit::Fields(fields) => {
            let density = if m == 1 {
                ma_density(fields[0].as_ref(), &cfg.grid_spec()?, cfg.theory.fd_step)?
            } else {
                let grid = cfg.compare_grid()?;
                match &fields[..] {
                    [one] => ma_density_geometric(one.as_ref(), &grid)?,
                    [a, b] => mixed_geometric(a.as_ref(), b.as_ref(), &grid)?,
                    _ => {
                        return Err(Error::Config(
                            "two-variable theory needs one or two potentials".into(),
                        ))
                    }
                }
            };
            Ok(Theory {
                density,
                corners: None,
                description,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn three_point_spectrum_has_two_half_atoms() {
        let c = cfg("[ensemble]\nkind = \"fixed_spectrum\"\nm = 1\np = 2\nspectrum = [[0], [1], [2]]\nn = 10\nsystems = 1\n");
        let t = theory(&c).unwrap();
        let corners = t.corners.unwrap();
        assert_eq!(corners.len(), 2);
        let l2 = 2.0 * std::f64::consts::LN_2;
        assert!((corners[0].rho + l2).abs() < 1e-12 && (corners[1].rho - l2).abs() < 1e-12);
        assert!(corners.iter().all(|c| (c.mass - 0.5).abs() < 1e-12));
        assert!((t.density.total_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dilated_random_mass_is_mean_spread() {
        // Pairs of {0, 1, 2} / 2: spreads 1/2, 1, 1/2, so mean mass 2/3.
        let c = cfg(
            "[ensemble]\nkind = \"dilated_random\"\nm = 1\np = 2\nf = 2\nn = 10\nsystems = 1\n",
        );
        let t = theory(&c).unwrap();
        let total: f64 = t.corners.unwrap().iter().map(|c| c.mass).sum();
        assert!((total - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn subset_enumeration_is_complete() {
        let mut rng = theory_rng(0, 0);
        let s = subsets(5, 3, 100, &mut rng).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.iter().all(|v| v.windows(2).all(|w| w[0] < w[1])));
        assert_eq!(subsets(50, 3, 100, &mut rng).unwrap().len(), 100);
    }

    #[test]
    fn kac_and_simplex_totals_match_order_statistics() {
        let kac = cfg("[ensemble]\nkind = \"kac\"\nm = 1\nf = 3\nn = 10\nsystems = 1\n");
        assert!((theory(&kac).unwrap().density.total_mass - 0.5).abs() < 1e-12);
        let rs = cfg("[ensemble]\nkind = \"random_simplex\"\nm = 1\nf = 3\nn = 10\nsystems = 1\n[grid]\nmin = -12.0\nmax = 12.0\nbins = 240\n");
        assert!((theory(&rs).unwrap().density.total_mass - 0.5).abs() < 0.01);
    }

    #[test]
    fn polytope_interval_and_pool() {
        let c = cfg("[ensemble]\nkind = \"random_polytope\"\nm = 2\nn = 5\nf = 2\nsystems = 1\npolytope = [[0, 0], [\"1/2\", 0], [0, \"1/2\"]]\n");
        let Ensemble::RandomPolytope { polytope, .. } = c.ensemble().unwrap() else {
            panic!()
        };
        let pool = polytope_pool(&polytope, 500, &mut theory_rng(1, 0)).unwrap();
        assert!(pool.iter().all(|x| x[0] + x[1] <= 0.5 + 1e-12));
        let mean: f64 = pool.iter().map(|x| x[0]).sum::<f64>() / 500.0;
        assert!((mean - 1.0 / 6.0).abs() < 0.02);
    }

    #[test]
    fn mixed_density_of_equal_fields_is_the_plain_one() {
        let grid = GridSpec::uniform(2, -6.0, 6.0, 24).unwrap();
        let fs = FubiniStudyPotential { dim: 2, p: 1.0 };
        let mixed = mixed_geometric(&fs, &fs, &grid).unwrap();
        let plain = ma_density_geometric(&fs, &grid).unwrap();
        assert!((mixed.total_mass - plain.total_mass).abs() < 1e-9);
    }

    #[test]
    fn fewer_equations_than_variables_is_rejected() {
        let c = cfg("[ensemble]\nkind = \"full_spectrum\"\nm = 2\nk = 1\nn = 5\nsystems = 1\n");
        assert!(matches!(theory(&c), Err(Error::Config(_))));
    }
}
