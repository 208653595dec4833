use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::ensemble::{FewnomialSystem, ToricNormingConfig, Weighting};
use crate::error::{Error, Result};
use crate::harness::config::{Ensemble, ExperimentConfig};
use crate::harness::kernel_check::uniform_error;
use crate::harness::seeds::system_rng;
use crate::harness::theory::{theory, Theory};
use crate::lattice::{dilate_spectrum, Lattice, Spectrum};
use crate::potential::density::{coarsen_masses, total_variation, wasserstein1};
use crate::solver::zeros::MAX_FAILURE_RATE;
use crate::solver::{
    roots_bivariate_resultant, roots_univariate, EmpiricalMeasure, SolverConfig, SparsePoly,
    ZeroSet,
};

/// Comparison metrics at one degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// Dilation or degree parameter `N` from the configuration.
    pub n: u32,
    /// Full degree of the sampled polynomials, used to normalize zero counts.
    pub degree: u32,
    pub tv: f64,
    /// Wasserstein-1 between the normalized measures, one variable only.
    pub w1: Option<f64>,
    pub theory_mass: f64,
    pub empirical_mass: f64,
    pub empirical_se: f64,
    /// Normalized zero mass falling outside the grid.
    pub outside_mass: f64,
    pub failure_rate: f64,
    /// `|theory - empirical| <= 3 SE + outside mass`.
    pub mass_consistent: bool,
    /// Kernel-level sup error on `[-5, 5]^m`, for fixed spectra.
    pub potential_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub theory: Theory,
    pub empirical: EmpiricalMeasure,
    pub zero_sets: Vec<ZeroSet>,
    pub metrics: Metrics,
    /// Set when the solver failure rate exceeds the tolerated fraction.
    pub failed: bool,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub reports: Vec<ComparisonReport>,
    /// Least-squares slope of `ln error` against `ln N`.
    pub slope: Option<f64>,
    /// Which error the slope was fitted to.
    pub slope_metric: &'static str,
}

fn weighting(ens: &Ensemble) -> Weighting {
    match ens {
        Ensemble::Kac { .. } => Weighting::Kac,
        Ensemble::Toric { u, .. } => Weighting::Toric(u.clone(), ToricNormingConfig::default()),
        _ => Weighting::Su,
    }
}

/// Lattices reused across systems.
enum Source {
    Fixed(Spectrum),
    Dilate(Lattice, u32),
    Draw(Lattice),
    Full(Spectrum),
}

fn source(ens: &Ensemble, m: usize, n: u32) -> Result<Source> {
    Ok(match ens {
        Ensemble::FixedSpectrum { points, p } => {
            Source::Fixed(dilate_spectrum(&Spectrum::from_exponents(points, *p)?, n))
        }
        Ensemble::DilatedRandom { polytope, .. } => {
            Source::Dilate(Lattice::new(1, m, Some(polytope))?, n)
        }
        Ensemble::RandomPolytope { polytope, .. } => {
            Source::Draw(Lattice::new(n, m, Some(polytope))?)
        }
        Ensemble::RandomSimplex { .. } | Ensemble::Kac { .. } | Ensemble::Toric { .. } => {
            Source::Draw(Lattice::new(n, m, None)?)
        }
        Ensemble::FullSpectrum => Source::Full(Spectrum::full(n, m)?),
    })
}

fn f_list(ens: &Ensemble) -> Option<&[usize]> {
    match ens {
        Ensemble::DilatedRandom { f, .. }
        | Ensemble::RandomSimplex { f }
        | Ensemble::RandomPolytope { f, .. }
        | Ensemble::Kac { f }
        | Ensemble::Toric { f, .. } => Some(f),
        _ => None,
    }
}

/// The sampled systems at degree index `idx` of the configuration, reproducible from the seed.
pub fn build_systems(cfg: &ExperimentConfig, idx: usize, n: u32) -> Result<Vec<FewnomialSystem>> {
    let ens = cfg.ensemble()?;
    let (m, k) = (cfg.ensemble.m, cfg.k());
    let src = source(&ens, m, n)?;
    let w = weighting(&ens);
    let fs = f_list(&ens);
    (0..cfg.ensemble.systems)
        .into_par_iter()
        .map(|i| {
            let mut rng = system_rng(cfg.ensemble.seed, idx, i);
            let spectra = (0..k)
                .map(|j| match &src {
                    Source::Fixed(s) | Source::Full(s) => Ok(s.clone()),
                    Source::Dilate(l, n) => Ok(dilate_spectrum(
                        &l.sample(fs.map_or(1, |f| f[j]), &mut rng)?,
                        *n,
                    )),
                    Source::Draw(l) => l.sample(fs.map_or(1, |f| f[j]), &mut rng),
                })
                .collect::<Result<Vec<_>>>()?;
            FewnomialSystem::sample(spectra, &w, &mut rng)
        })
        .collect()
}

/// Zeros of one system in the complex torus.
pub fn solve_system(id: u64, sys: &FewnomialSystem, cfg: &SolverConfig) -> Result<ZeroSet> {
    let polys = sys
        .equations
        .iter()
        .map(SparsePoly::from_equation)
        .collect::<Result<Vec<_>>>()?;
    let mut zs = match (sys.dim(), &polys[..]) {
        (1, [p]) if p.terms().len() < 2 => ZeroSet::default(),
        (1, [p]) => roots_univariate(p, cfg)?,
        (2, [p, q]) => roots_bivariate_resultant(p, q, cfg)?,
        _ => {
            return Err(Error::InvalidArgument(
                "need k = m equations in one or two variables".into(),
            ))
        }
    };
    zs.system_id = id;
    Ok(zs)
}

/// Samples and solves every system at degree `n`, keeping individual outcomes.
pub fn sample_and_solve(
    cfg: &ExperimentConfig,
    idx: usize,
    n: u32,
) -> Result<(Vec<FewnomialSystem>, Vec<Result<ZeroSet>>)> {
    let systems = build_systems(cfg, idx, n)?;
    let scfg = cfg.solver_config();
    let results = systems
        .par_iter()
        .enumerate()
        .map(|(i, s)| solve_system(i as u64, s, &scfg))
        .collect();
    Ok((systems, results))
}

fn full_degree(cfg: &ExperimentConfig, n: u32) -> u32 {
    match cfg.ensemble.kind {
        crate::harness::EnsembleKind::FixedSpectrum
        | crate::harness::EnsembleKind::DilatedRandom
        | crate::harness::EnsembleKind::RandomPolytope => n * cfg.ensemble.p,
        _ => n,
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        v.to_vec()
    }
}

fn compare(
    cfg: &ExperimentConfig,
    n: u32,
    theory: &Theory,
    emp: &EmpiricalMeasure,
) -> Result<Metrics> {
    let grid = cfg.grid_spec()?;
    let coarse = cfg.compare_grid()?;
    let factor = grid.axes[0].bins / coarse.axes[0].bins;
    let (_, emp_masses) = coarsen_masses(&grid, &emp.masses(), factor)?;
    let th_masses = theory.density.coarsen_to(&coarse)?.masses();
    let tv = total_variation(&th_masses, &emp_masses);
    let w1 = (cfg.ensemble.m == 1).then(|| {
        wasserstein1(
            &coarse.axes[0],
            &normalized(&th_masses),
            &normalized(&emp_masses),
        )
    });
    let norm = (emp.degree as f64).powi(cfg.ensemble.m as i32) * emp.systems.max(1) as f64;
    let outside_mass = emp.outside as f64 / norm;
    let (theory_mass, empirical_mass, empirical_se) = (
        theory.density.total_mass,
        emp.mean_count(),
        emp.count_std_error(),
    );
    let potential_error = match cfg.ensemble() {
        Ok(Ensemble::FixedSpectrum { points, p }) => {
            let axis: Vec<f64> = (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect();
            let rhos: Vec<Vec<f64>> = match cfg.ensemble.m {
                1 => axis.iter().map(|&r| vec![r]).collect(),
                _ => axis
                    .iter()
                    .step_by(5)
                    .flat_map(|&a| axis.iter().step_by(5).map(move |&b| vec![a, b]))
                    .collect(),
            };
            Some(uniform_error(&points, p, n, &rhos)?)
        }
        _ => None,
    };
    Ok(Metrics {
        n,
        degree: emp.degree,
        tv,
        w1,
        theory_mass,
        empirical_mass,
        empirical_se,
        outside_mass,
        failure_rate: emp.failure_rate(),
        mass_consistent: (theory_mass - empirical_mass).abs() <= 3.0 * empirical_se + outside_mass,
        potential_error,
    })
}

/// Runs the degree at position `idx` of the configured degree list.
pub fn run_at(cfg: &ExperimentConfig, idx: usize) -> Result<ComparisonReport> {
    let start = Instant::now();
    let n = *cfg
        .degrees()
        .get(idx)
        .ok_or_else(|| Error::Config(format!("no degree at position {idx}")))?;
    let theory = theory(cfg)?;
    let (_, results) = sample_and_solve(cfg, idx, n)?;
    let mut emp = EmpiricalMeasure::new(cfg.grid_spec()?, full_degree(cfg, n));
    let mut zero_sets = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(zs) => {
                emp.add(&zs);
                zero_sets.push(zs);
            }
            Err(e) => {
                log::warn!("solve failed at N = {n}: {e}");
                emp.failures += 1;
            }
        }
    }
    let metrics = compare(cfg, n, &theory, &emp)?;
    let failed = emp.failure_rate() > MAX_FAILURE_RATE;
    if failed {
        log::error!(
            "failure rate {:.3} exceeds {MAX_FAILURE_RATE}",
            emp.failure_rate()
        );
    }
    Ok(ComparisonReport {
        config: cfg.clone(),
        theory,
        empirical: emp,
        zero_sets,
        metrics,
        failed,
        wall_time: start.elapsed(),
    })
}

/// Runs the first configured degree.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    run_at(cfg, 0)
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One run per degree of the list, with the decay exponent of the potential-level error
/// (or of the total variation when no potential error is defined).
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceStudy> {
    let degrees = cfg.degrees();
    if degrees.len() < 3 {
        return Err(Error::Config(format!(
            "ensemble.n_list: convergence needs at least 3 degrees, got {}",
            degrees.len()
        )));
    }
    let reports = (0..degrees.len())
        .map(|i| run_at(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let pot: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|r| r.metrics.potential_error.map(|e| (r.metrics.n as f64, e)))
        .collect();
    let (slope, slope_metric) = if pot.len() == reports.len() {
        (fit_slope(&pot), "potential_error")
    } else {
        (
            fit_slope(
                &reports
                    .iter()
                    .map(|r| (r.metrics.n as f64, r.metrics.tv))
                    .collect::<Vec<_>>(),
            ),
            "tv",
        )
    };
    Ok(ConvergenceStudy {
        reports,
        slope,
        slope_metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 / n))
            .collect();
        assert!((fit_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_spectrum_concentrates_at_the_corner() {
        let c = cfg("[ensemble]\nkind = \"fixed_spectrum\"\nm = 1\nspectrum = [[0], [1]]\nn = 60\nsystems = 20\nseed = 3\n");
        let r = run_experiment(&c).unwrap();
        assert!(!r.failed);
        assert_eq!(r.metrics.degree, 60);
        assert!((r.metrics.empirical_mass - 1.0).abs() < 1e-12);
        assert!(r.metrics.w1.unwrap() < 0.2, "{:?}", r.metrics);
        assert!(r.metrics.potential_error.unwrap() < 0.2);
    }

    #[test]
    fn runs_are_deterministic() {
        let c = cfg("[ensemble]\nkind = \"kac\"\nm = 1\nf = 3\nn = 40\nsystems = 12\nseed = 9\n");
        let (a, b) = (run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.empirical.counts, b.empirical.counts);
    }

    #[test]
    fn full_spectrum_mass_is_one() {
        let c = cfg("[ensemble]\nkind = \"full_spectrum\"\nm = 1\nn = 30\nsystems = 10\n[grid]\ncompare_bins = 40\n");
        let r = run_experiment(&c).unwrap();
        assert!((r.metrics.empirical_mass - 1.0).abs() < 1e-12);
        assert!((r.metrics.theory_mass - 1.0).abs() < 1e-3);
        assert!(r.metrics.mass_consistent);
    }

    #[test]
    fn per_equation_systems_in_two_variables() {
        let c = cfg("[ensemble]\nkind = \"random_simplex\"\nm = 2\nn = 6\nf = [3, 4]\nsystems = 4\n[grid]\nbins = 40\n[theory]\npool = 400\n");
        let r = run_experiment(&c).unwrap();
        assert!(!r.failed);
        assert_eq!(r.zero_sets.len(), 4);
        assert!(r.metrics.theory_mass > 0.0 && r.metrics.theory_mass < 1.0);
    }

    #[test]
    fn convergence_needs_three_degrees() {
        let c = cfg("[ensemble]\nkind = \"kac\"\nm = 1\nf = 2\nn_list = [10, 20]\nsystems = 2\n");
        assert!(matches!(convergence_study(&c), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_spectrum_convergence_slope_is_negative() {
        let c = cfg("[ensemble]\nkind = \"fixed_spectrum\"\nm = 1\np = 2\nspectrum = [[0], [1], [2]]\nn_list = [10, 20, 40]\nsystems = 4\n");
        let s = convergence_study(&c).unwrap();
        assert_eq!(s.slope_metric, "potential_error");
        assert!(s.slope.unwrap() < -0.5, "{:?}", s.slope);
    }
}
