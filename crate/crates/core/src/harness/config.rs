//! Experiment configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [ensemble]
//! kind = "random_simplex"
//! m = 1
//! n = 150
//! f = 3
//! systems = 300
//! seed = 7
//!
//! [grid]
//! min = -10.0
//! max = 10.0
//! bins = 400
//! compare_bins = 40
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::NewtonPolytope;
use crate::potential::density::GridSpec;
use crate::potential::symplectic::{FubiniStudy, Perturbed, SharedPotential};
use crate::solver::{Precision, SolverConfig};

/// Largest degree accepted for two-variable systems.
pub const MAX_BIVARIATE_DEGREE: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// A fixed spectrum in `p * Sigma`, dilated by `N`.
    FixedSpectrum,
    /// A random spectrum of the polytope (default `p * Sigma`), dilated by `N`.
    DilatedRandom,
    /// Random `f`-subsets of `N * Sigma`.
    RandomSimplex,
    /// Random `f`-subsets of `N * Delta`.
    RandomPolytope,
    /// Random `f`-subsets of `N * Sigma` with unit weights.
    Kac,
    /// Random `f`-subsets of `N * Sigma` weighted by a symplectic potential.
    Toric,
    /// Every lattice point of `N * Sigma`.
    FullSpectrum,
}

/// `f` for all equations, or one value per equation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FewnomialNumber {
    Same(usize),
    PerEquation(Vec<usize>),
}

/// A rational polytope coordinate written as an integer or as `"a/b"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coordinate {
    Int(i64),
    Text(String),
}

impl Coordinate {
    fn to_ratio(&self) -> std::result::Result<Ratio<i64>, String> {
        match self {
            Coordinate::Int(v) => Ok(Ratio::from_integer(*v)),
            Coordinate::Text(t) => {
                let t = t.trim();
                let parse = |s: &str| {
                    s.trim()
                        .parse::<i64>()
                        .map_err(|_| format!("bad rational {t:?}"))
                };
                match t.split_once('/') {
                    Some((a, b)) => {
                        let b = parse(b)?;
                        if b == 0 {
                            return Err(format!("zero denominator in {t:?}"));
                        }
                        Ok(Ratio::new(parse(a)?, b))
                    }
                    None => Ok(Ratio::from_integer(parse(t)?)),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub kind: EnsembleKind,
    pub m: usize,
    /// Number of equations; defaults to `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<FewnomialNumber>,
    /// Dilation of the simplex holding `spectrum` or `polytope`.
    #[serde(default = "one_u32")]
    pub p: u32,
    /// Lattice points of `p * Sigma` for `fixed_spectrum`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<Vec<u32>>>,
    /// Vertices of `Delta` inside `p * Sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polytope: Option<Vec<Vec<Coordinate>>>,
    /// Symplectic potential for `toric`: `"fs"` or `"perturbed"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    pub systems: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub precision: Precision,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub merge_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            precision: d.precision,
            max_iter: d.max_iter,
            residual_tol: d.residual_tol,
            merge_tol: d.merge_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
    /// Bins per axis of the comparison grid; must divide `bins`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_bins: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            min: -8.0,
            max: 8.0,
            bins: 400,
            compare_bins: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheorySection {
    /// Finite-difference step for one-variable densities.
    pub fd_step: f64,
    /// Pool size for averaged potentials in two variables.
    pub pool: usize,
    /// Cap on enumerated spectra when averaging over a finite lattice; larger families are sampled.
    pub max_spectra: usize,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            fd_step: 1e-3,
            pool: 20_000,
            max_spectra: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub theory: TheorySection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one_u32() -> u32 {
    1
}

/// The ensemble after validation, with its data attached.
#[derive(Clone, Debug)]
pub enum Ensemble {
    FixedSpectrum {
        points: Vec<Vec<u32>>,
        p: u32,
    },
    DilatedRandom {
        polytope: NewtonPolytope,
        f: Vec<usize>,
    },
    RandomSimplex {
        f: Vec<usize>,
    },
    RandomPolytope {
        polytope: NewtonPolytope,
        f: Vec<usize>,
    },
    Kac {
        f: Vec<usize>,
    },
    Toric {
        u: SharedPotential,
        f: Vec<usize>,
    },
    FullSpectrum,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn k(&self) -> usize {
        self.ensemble.k.unwrap_or(self.ensemble.m)
    }

    /// Degrees to run: the list when given, else the single `n`.
    pub fn degrees(&self) -> Vec<u32> {
        match (&self.ensemble.n_list, self.ensemble.n) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => Vec::new(),
        }
    }

    /// Fewnomial number of each equation.
    pub fn f_per_equation(&self) -> Option<Vec<usize>> {
        match &self.ensemble.f {
            Some(FewnomialNumber::Same(f)) => Some(vec![*f; self.k()]),
            Some(FewnomialNumber::PerEquation(v)) => Some(v.clone()),
            None => None,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            precision: s.precision,
            max_iter: s.max_iter,
            residual_tol: s.residual_tol,
            merge_tol: s.merge_tol,
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::uniform(
            self.ensemble.m,
            self.grid.min,
            self.grid.max,
            self.grid.bins,
        )
    }

    /// The grid used for metrics: the native grid merged down to `compare_bins`. In two
    /// variables the default merges down to at most 80 bins per axis, which is also the
    /// grid the theory density is computed on.
    pub fn compare_grid(&self) -> Result<GridSpec> {
        let bins = self
            .grid
            .compare_bins
            .unwrap_or_else(|| match self.ensemble.m {
                1 => self.grid.bins,
                _ => (1..=self.grid.bins.min(80))
                    .rev()
                    .find(|d| self.grid.bins.is_multiple_of(*d))
                    .unwrap_or(1),
            });
        GridSpec::uniform(self.ensemble.m, self.grid.min, self.grid.max, bins)
    }

    /// Checks every field and lists all offending ones in a single error.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let e = &self.ensemble;
        let mut flag = |field: &str, msg: String| bad.push(format!("{field}: {msg}"));

        if !(1..=2).contains(&e.m) {
            flag("ensemble.m", format!("must be 1 or 2, got {}", e.m));
        }
        let k = self.k();
        if k == 0 || k > e.m {
            flag(
                "ensemble.k",
                format!("must satisfy 1 <= k <= m, got k = {k}, m = {}", e.m),
            );
        }
        match (&e.n, &e.n_list) {
            (Some(_), Some(_)) => flag("ensemble.n", "give either n or n_list, not both".into()),
            (None, None) => flag("ensemble.n", "one of n or n_list is required".into()),
            (Some(0), None) => flag("ensemble.n", "must be >= 1".into()),
            (None, Some(list)) => {
                if list.is_empty() || list[0] == 0 {
                    flag(
                        "ensemble.n_list",
                        "must be nonempty with positive entries".into(),
                    );
                } else if list.windows(2).any(|w| w[0] >= w[1]) {
                    flag(
                        "ensemble.n_list",
                        format!("must be strictly increasing, got {list:?}"),
                    );
                }
            }
            _ => {}
        }
        if e.m == 2 {
            let top = self.degrees().into_iter().max().unwrap_or(0) as u64 * e.p as u64;
            if top > MAX_BIVARIATE_DEGREE as u64 {
                flag(
                    "ensemble.n",
                    format!("two-variable degree {top} exceeds {MAX_BIVARIATE_DEGREE}"),
                );
            }
        }
        if e.systems == 0 {
            flag("ensemble.systems", "must be >= 1".into());
        }
        if e.p == 0 {
            flag("ensemble.p", "must be >= 1".into());
        }

        let needs_f = !matches!(
            e.kind,
            EnsembleKind::FixedSpectrum | EnsembleKind::FullSpectrum
        );
        match (&e.f, needs_f) {
            (None, true) => flag("ensemble.f", format!("required for {:?}", e.kind)),
            (Some(FewnomialNumber::Same(0)), _) => flag("ensemble.f", "must be >= 1".into()),
            (Some(FewnomialNumber::PerEquation(v)), _) => {
                if v.len() != k {
                    flag(
                        "ensemble.f",
                        format!("per-equation list has {} entries for k = {k}", v.len()),
                    );
                }
                if v.contains(&0) {
                    flag("ensemble.f", "every entry must be >= 1".into());
                }
            }
            _ => {}
        }

        if e.kind == EnsembleKind::FixedSpectrum {
            match &e.spectrum {
                None => flag("ensemble.spectrum", "required for fixed_spectrum".into()),
                Some(pts) if pts.len() < 2 => {
                    flag("ensemble.spectrum", "needs at least two points".into())
                }
                Some(pts) => {
                    if pts.iter().any(|a| a.len() != e.m) {
                        flag(
                            "ensemble.spectrum",
                            format!("every point needs {} coordinates", e.m),
                        );
                    } else if pts.iter().any(|a| a.iter().sum::<u32>() > e.p) {
                        flag(
                            "ensemble.spectrum",
                            format!("points must lie in {} * Sigma", e.p),
                        );
                    }
                    let mut sorted = pts.clone();
                    sorted.sort();
                    sorted.dedup();
                    if sorted.len() != pts.len() {
                        flag("ensemble.spectrum", "points must be distinct".into());
                    }
                }
            }
        }
        if matches!(
            e.kind,
            EnsembleKind::DilatedRandom | EnsembleKind::RandomPolytope
        ) && e.polytope.is_some()
        {
            if let Err(msg) = self.polytope() {
                flag("ensemble.polytope", msg);
            }
        }
        if e.kind == EnsembleKind::RandomPolytope && e.polytope.is_none() {
            flag("ensemble.polytope", "required for random_polytope".into());
        }
        if e.kind == EnsembleKind::Toric {
            match e.potential.as_deref() {
                Some("fs" | "perturbed") => {}
                other => flag(
                    "ensemble.potential",
                    format!("expected \"fs\" or \"perturbed\", got {other:?}"),
                ),
            }
        }

        let g = &self.grid;
        if !(g.min < g.max) || !g.min.is_finite() || !g.max.is_finite() {
            flag(
                "grid.min",
                format!("need finite min < max, got [{}, {}]", g.min, g.max),
            );
        }
        if g.bins == 0 {
            flag("grid.bins", "must be >= 1".into());
        }
        if let Some(c) = g.compare_bins {
            if c == 0 || !g.bins.is_multiple_of(c) {
                flag(
                    "grid.compare_bins",
                    format!("must divide bins = {}, got {c}", g.bins),
                );
            }
        }
        if !(self.theory.fd_step > 0.0) {
            flag("theory.fd_step", "must be positive".into());
        }
        if self.theory.pool == 0 {
            flag("theory.pool", "must be >= 1".into());
        }
        if self.theory.max_spectra == 0 {
            flag("theory.max_spectra", "must be >= 1".into());
        }
        if !(self.solver.residual_tol > 0.0) {
            flag("solver.residual_tol", "must be positive".into());
        }
        if self.solver.max_iter == 0 {
            flag("solver.max_iter", "must be >= 1".into());
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid configuration: {}",
                bad.join("; ")
            )))
        }
    }

    /// The polytope of the ensemble, `p * Sigma` when none is given.
    fn polytope(&self) -> std::result::Result<NewtonPolytope, String> {
        let e = &self.ensemble;
        match &e.polytope {
            None => NewtonPolytope::simplex(e.m, e.p).map_err(|err| err.to_string()),
            Some(verts) => {
                let verts = verts
                    .iter()
                    .map(|v| {
                        v.iter()
                            .map(Coordinate::to_ratio)
                            .collect::<std::result::Result<Vec<_>, _>>()
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if verts.iter().any(|v| v.len() != e.m) {
                    return Err(format!("every vertex needs {} coordinates", e.m));
                }
                NewtonPolytope::new(verts, e.p).map_err(|err| err.to_string())
            }
        }
    }

    /// The validated ensemble.
    pub fn ensemble(&self) -> Result<Ensemble> {
        self.validate()?;
        let e = &self.ensemble;
        let f = || self.f_per_equation().unwrap_or_default();
        Ok(match e.kind {
            EnsembleKind::FixedSpectrum => Ensemble::FixedSpectrum {
                points: e.spectrum.clone().unwrap_or_default(),
                p: e.p,
            },
            EnsembleKind::DilatedRandom => Ensemble::DilatedRandom {
                polytope: self.polytope().map_err(Error::Config)?,
                f: f(),
            },
            EnsembleKind::RandomSimplex => Ensemble::RandomSimplex { f: f() },
            EnsembleKind::RandomPolytope => Ensemble::RandomPolytope {
                polytope: self.polytope().map_err(Error::Config)?,
                f: f(),
            },
            EnsembleKind::Kac => Ensemble::Kac { f: f() },
            EnsembleKind::Toric => {
                let fs = FubiniStudy::new(e.m);
                let u: SharedPotential = match e.potential.as_deref() {
                    Some("perturbed") => Arc::new(Perturbed {
                        base: fs,
                        weight: 0.1,
                        center: vec![1.0 / (e.m as f64 + 1.0); e.m],
                    }),
                    _ => Arc::new(fs),
                };
                Ensemble::Toric { u, f: f() }
            }
            EnsembleKind::FullSpectrum => Ensemble::FullSpectrum,
        })
    }
}
