//! Roots of sparse univariate polynomials by simultaneous Aberth-Ehrlich iteration.
//!
//! Evaluation works term by term with power-of-two scaled powers, so degrees in the
//! hundreds and root moduli far from one never overflow. Starting points lie on
//! circles whose radii are the slopes of the Newton polygon. A double-precision run
//! that fails verification falls back to companion-matrix eigenvalues and then to a
//! double-double rerun.

use nalgebra::{DMatrix, Schur};
use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::solver::poly::SparsePoly;
use crate::solver::scaled::{cast, uncast, Real, Scaled};
use crate::solver::zeros::{Zero, ZeroSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Double precision with companion and extended fallbacks.
    #[default]
    Double,
    /// Double-double arithmetic throughout the iteration.
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub precision: Precision,
    pub max_iter: usize,
    /// Largest accepted `|P(z)| / sum |c_k z^k|`.
    pub residual_tol: f64,
    /// Relative distance below which two roots count as one.
    pub merge_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            precision: Precision::Double,
            max_iter: 500,
            residual_tol: 1e-8,
            merge_tol: 1e-7,
        }
    }
}

/// A polynomial `sum_k c_k z^{e_k}` with `e_0 = 0`, ready for iteration in type `T`.
#[derive(Clone, Debug)]
pub(crate) struct Reduced<T> {
    exps: Vec<u32>,
    coeffs: Vec<Complex<T>>,
    log_abs: Vec<f64>,
}

impl<T: Real> Reduced<T> {
    /// Sorted exponents and nonzero coefficients; divides out `z^{e_min}`.
    pub(crate) fn new(mut terms: Vec<(u32, Complex64)>) -> Result<Self> {
        terms.retain(|t| t.1.norm() > 0.0);
        terms.sort_by_key(|t| t.0);
        if terms.len() < 2 || terms[0].0 == terms[terms.len() - 1].0 {
            return Err(Error::InvalidArgument(
                "need two distinct exponents with nonzero coefficients".into(),
            ));
        }
        let e0 = terms[0].0;
        Ok(Self {
            exps: terms.iter().map(|t| t.0 - e0).collect(),
            coeffs: terms.iter().map(|t| cast(t.1)).collect(),
            log_abs: terms.iter().map(|t| t.1.norm().ln()).collect(),
        })
    }

    pub(crate) fn degree(&self) -> usize {
        *self.exps.last().unwrap() as usize
    }

    /// `(P / P', |P| / sum |terms|)` at `z`.
    fn newton(&self, z: Complex<T>) -> (Complex<T>, f64) {
        let zs = Scaled::new(z);
        let mut power = Scaled::one();
        let mut prev = 0;
        let mut p = Scaled::zero();
        let mut d = Scaled::zero();
        let mut abs = Scaled::<f64>::zero();
        for (&e, &c) in self.exps.iter().zip(&self.coeffs) {
            power = power.mul(zs.powu(e - prev));
            prev = e;
            let t = power.scale(c);
            p = p.add(t);
            d = d.add(t.scale(Complex::new(T::of(e as f64), T::zero())));
            abs = abs.add(Scaled {
                m: Complex64::new(uncast(t.m).norm(), 0.0),
                e: t.e,
            });
        }
        let rel = (p.ln_abs() - abs.ln_abs()).exp();
        if d.is_zero() {
            return (Complex::new(T::infinity(), T::zero()), rel);
        }
        (p.div(d) * z, rel)
    }

    /// Circles from the upper convex hull of `(e_k, ln|c_k|)`.
    pub(crate) fn initial_guesses(&self) -> Vec<Complex64> {
        let pts: Vec<(f64, f64)> = self
            .exps
            .iter()
            .zip(&self.log_abs)
            .map(|(&e, &l)| (e as f64, l))
            .collect();
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for &q in &pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0) >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(q);
        }
        let mut out = Vec::with_capacity(self.degree());
        for (edge, w) in hull.windows(2).enumerate() {
            let count = (w[1].0 - w[0].0) as usize;
            let radius = ((w[0].1 - w[1].1) / (w[1].0 - w[0].0)).exp();
            let offset = 0.4 + 1.3 * edge as f64;
            for q in 0..count {
                let angle = std::f64::consts::TAU * q as f64 / count as f64 + offset;
                out.push(Complex64::from_polar(radius, angle));
            }
        }
        out
    }

    fn aberth(&self, start: &[Complex64], max_iter: usize) -> (Vec<Complex<T>>, bool) {
        let noise = 8.0 * T::roundoff() * self.exps.len() as f64;
        aberth(
            |z| self.newton(z),
            start,
            max_iter,
            noise,
            4.0 * T::roundoff(),
        )
    }

    /// Plain Newton steps, kept only while the residual decreases.
    fn polish(&self, z: Complex<T>, steps: usize) -> (Complex<T>, f64) {
        let (mut ratio, mut rel) = self.newton(z);
        let mut z = z;
        for _ in 0..steps {
            let cand = z - ratio;
            let (r2, rel2) = self.newton(cand);
            if !(rel2 < rel) {
                break;
            }
            z = cand;
            ratio = r2;
            rel = rel2;
        }
        (z, rel)
    }
}

/// Gauss-Seidel Aberth sweeps. `newton` returns the Newton ratio `P / P'` and the
/// relative residual at a point. The correction uses the ratio in `T` and the
/// repulsion sum in `f64`. An iterate stops once its residual is at `noise` or its
/// step is below `step_tol` relative to its modulus. Returns the iterates and whether
/// all of them stopped.
pub(crate) fn aberth<T: Real, F>(
    newton: F,
    start: &[Complex64],
    max_iter: usize,
    noise: f64,
    step_tol: f64,
) -> (Vec<Complex<T>>, bool)
where
    F: Fn(Complex<T>) -> (Complex<T>, f64),
{
    let n = start.len();
    let mut z: Vec<Complex<T>> = start.iter().map(|&s| cast(s)).collect();
    let mut z64: Vec<Complex64> = start.to_vec();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut all = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (ratio, rel) = newton(z[k]);
            let r64 = uncast(ratio);
            if !(r64.re.is_finite() && r64.im.is_finite()) {
                all = false;
                continue;
            }
            let s: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z64[k] - z64[j]).inv())
                .sum();
            let factor = (Complex64::new(1.0, 0.0) - r64 * s).inv();
            let w = ratio * cast::<T>(factor);
            z[k] = z[k] - w;
            z64[k] = uncast(z[k]);
            if rel <= noise || uncast(w).norm() <= step_tol * z64[k].norm() {
                done[k] = true;
            } else {
                all = false;
            }
        }
        if all {
            return (z, true);
        }
    }
    (z, false)
}

/// Dense monic companion matrix of the reduced polynomial in the variable `z / sigma`.
fn companion_roots(red: &Reduced<f64>) -> Option<Vec<Complex64>> {
    let n = red.degree();
    let (l0, ln) = (red.log_abs[0], *red.log_abs.last().unwrap());
    let log_sigma = (l0 - ln) / n as f64;
    let lead = *red.coeffs.last().unwrap();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for (&e, &c) in red.exps.iter().zip(&red.coeffs) {
        let e = e as usize;
        if e < n {
            let scale = ((e as f64 - n as f64) * log_sigma).exp();
            m[(e, n - 1)] = -(c / lead) * scale;
        }
    }
    if m.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return None;
    }
    let sigma = log_sigma.exp();
    // The unbounded Schur iteration can cycle forever on some inputs.
    let ev = Schur::try_new(m, f64::EPSILON, 100 * n)?.eigenvalues()?;
    Some(ev.iter().map(|&y| y * sigma).collect())
}

fn has_duplicates(z: &[Complex64], tol: f64) -> bool {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].re.total_cmp(&z[b].re));
    for (i, &a) in idx.iter().enumerate() {
        for &b in &idx[i + 1..] {
            let scale = z[a].norm().max(z[b].norm());
            if z[b].re - z[a].re > tol * scale {
                break;
            }
            if (z[a] - z[b]).norm() <= tol * scale {
                return true;
            }
        }
    }
    false
}

/// Groups roots within the merge tolerance, summing multiplicities.
fn merge(z: &[(Complex64, f64)], tol: f64) -> Vec<(Complex64, u32, f64)> {
    let mut out: Vec<(Complex64, u32, f64)> = Vec::new();
    for &(r, res) in z {
        match out
            .iter_mut()
            .find(|o| (o.0 - r).norm() <= tol * o.0.norm().max(r.norm()))
        {
            Some(o) => {
                o.1 += 1;
                o.2 = o.2.max(res);
            }
            None => out.push((r, 1, res)),
        }
    }
    out
}

enum Attempt {
    Ok(Vec<(Complex64, f64)>),
    Failed(Vec<(Complex64, f64)>),
}

fn verify(red: &Reduced<f64>, roots: Vec<Complex64>, cfg: &SolverConfig) -> Attempt {
    let polished: Vec<(Complex64, f64)> = roots.into_iter().map(|z| red.polish(z, 3)).collect();
    let ok = polished.len() == red.degree()
        && polished.iter().all(|(z, r)| {
            z.re.is_finite() && z.im.is_finite() && z.norm() > 0.0 && *r <= cfg.residual_tol
        })
        && !has_duplicates(
            &polished.iter().map(|p| p.0).collect::<Vec<_>>(),
            cfg.merge_tol,
        );
    if ok {
        Attempt::Ok(polished)
    } else {
        Attempt::Failed(polished)
    }
}

fn extended(
    red64: &Reduced<f64>,
    terms: &[(u32, Complex64)],
    cfg: &SolverConfig,
) -> Result<Vec<Complex64>> {
    let red = Reduced::<TwoFloat>::new(terms.to_vec())?;
    let (z, _) = red.aberth(&red64.initial_guesses(), 2 * cfg.max_iter);
    Ok(z.into_iter().map(|z| uncast(red.polish(z, 2).0)).collect())
}

/// All roots in the punctured plane of a sparse univariate polynomial given as
/// `(exponent, coefficient)` pairs.
pub fn roots_of_terms(
    terms: &[(u32, Complex64)],
    cfg: &SolverConfig,
) -> Result<Vec<(Complex64, u32, f64)>> {
    let red = Reduced::<f64>::new(terms.to_vec())?;
    let start = red.initial_guesses();
    let mut last = Vec::new();
    let attempts: [&dyn Fn() -> Result<Vec<Complex64>>; 3] = match cfg.precision {
        Precision::Double => [
            &|| Ok(red.aberth(&start, cfg.max_iter).0),
            &|| companion_roots(&red).ok_or(Error::Solver("companion eigenvalues failed".into())),
            &|| extended(&red, terms, cfg),
        ],
        Precision::Extended => [
            &|| extended(&red, terms, cfg),
            &|| Ok(red.aberth(&start, cfg.max_iter).0),
            &|| companion_roots(&red).ok_or(Error::Solver("companion eigenvalues failed".into())),
        ],
    };
    for attempt in attempts {
        match verify(&red, attempt()?, cfg) {
            Attempt::Ok(r) => return Ok(r.into_iter().map(|(z, res)| (z, 1, res)).collect()),
            Attempt::Failed(r) => last = r,
        }
    }
    let merged = merge(&last, cfg.merge_tol);
    let total: u32 = merged.iter().map(|m| m.1).sum();
    if total as usize == red.degree() && merged.iter().all(|m| m.2 <= cfg.residual_tol) {
        return Ok(merged);
    }
    Err(Error::Solver(format!(
        "no verified root set for a degree {} polynomial",
        red.degree()
    )))
}

/// Zeros in the punctured plane of a univariate sparse polynomial.
pub fn roots_univariate(p: &SparsePoly, cfg: &SolverConfig) -> Result<ZeroSet> {
    if p.dim() != 1 {
        return Err(Error::InvalidArgument(
            "roots_univariate needs one variable".into(),
        ));
    }
    let terms: Vec<(u32, Complex64)> = p.terms().iter().map(|(a, c)| (a[0], *c)).collect();
    let roots = roots_of_terms(&terms, cfg)?;
    let zeros = roots
        .into_iter()
        .map(|(z, mult, _)| Zero::new(vec![z], mult, p.relative_residual(&[z])))
        .collect::<Result<Vec<_>>>()?;
    Ok(ZeroSet::new(0, zeros))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn poly(terms: &[(u32, Complex64)]) -> SparsePoly {
        SparsePoly::new(1, terms.iter().map(|(e, c)| (vec![*e], *c)).collect()).unwrap()
    }

    fn random_terms(exps: &[u32], seed: u64) -> Vec<(u32, Complex64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        exps.iter()
            .map(|&e| {
                let (a, b): (f64, f64) = (
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                (e, Complex64::new(a, b))
            })
            .collect()
    }

    fn sorted(mut z: Vec<Complex64>) -> Vec<Complex64> {
        z.sort_by(|a, b| {
            a.arg()
                .total_cmp(&b.arg())
                .then(a.norm().total_cmp(&b.norm()))
        });
        z
    }

    #[test]
    fn roots_of_unity() {
        let one = Complex64::new(1.0, 0.0);
        for n in [1u32, 2, 7, 64, 300] {
            let zs =
                roots_univariate(&poly(&[(0, -one), (n, one)]), &SolverConfig::default()).unwrap();
            assert_eq!(zs.count(), n as u64);
            assert!(zs.residual <= 1e-8);
            let mut thetas: Vec<f64> = zs
                .zeros
                .iter()
                .map(|z| {
                    assert!(z.point.rho()[0].abs() < 1e-12);
                    z.point.theta()[0].rem_euclid(std::f64::consts::TAU)
                })
                .collect();
            thetas.sort_by(f64::total_cmp);
            for (j, t) in thetas.iter().enumerate() {
                let want = std::f64::consts::TAU * j as f64 / n as f64;
                assert!((t - want).abs() < 1e-10, "n={n} j={j} {t} {want}");
            }
        }
    }

    #[test]
    fn lacunary_count_is_interval_length() {
        for seed in 0..20 {
            let zs = roots_univariate(
                &poly(&random_terms(&[2, 5, 11], seed)),
                &SolverConfig::default(),
            )
            .unwrap();
            assert_eq!(zs.count(), 9);
            assert!(zs
                .zeros
                .iter()
                .all(|z| z.residual <= 1e-8 && z.z[0].norm() > 0.0));
        }
    }

    #[test]
    fn huge_dynamic_range() {
        // Roots of modulus e^{+-20} next to roots on the unit circle.
        let one = Complex64::new(1.0, 0.0);
        let terms = [
            (0, one * (-200f64).exp()),
            (10, one),
            (20, one),
            (30, one * (-200f64).exp()),
        ];
        let zs = roots_univariate(&poly(&terms), &SolverConfig::default()).unwrap();
        assert_eq!(zs.count(), 30);
        let big = zs.zeros.iter().filter(|z| z.point.rho()[0] > 30.0).count();
        let small = zs.zeros.iter().filter(|z| z.point.rho()[0] < -30.0).count();
        assert_eq!((big, small), (10, 10));
    }

    #[test]
    fn double_matches_extended() {
        let exps = [0u32, 37, 121, 200];
        let ext = SolverConfig {
            precision: Precision::Extended,
            ..Default::default()
        };
        for seed in 0..10 {
            let p = poly(&random_terms(&exps, seed));
            let a = sorted(
                roots_univariate(&p, &SolverConfig::default())
                    .unwrap()
                    .zeros
                    .iter()
                    .map(|z| z.z[0])
                    .collect(),
            );
            let b = sorted(
                roots_univariate(&p, &ext)
                    .unwrap()
                    .zeros
                    .iter()
                    .map(|z| z.z[0])
                    .collect(),
            );
            assert_eq!(a.len(), 200);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() <= 1e-6 * x.norm(), "seed {seed}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn companion_agrees_with_aberth() {
        let red = Reduced::<f64>::new(random_terms(&[0, 3, 8, 20], 5)).unwrap();
        let a = sorted(red.aberth(&red.initial_guesses(), 500).0);
        let b = sorted(
            companion_roots(&red)
                .unwrap()
                .into_iter()
                .map(|z| red.polish(z, 3).0)
                .collect(),
        );
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9 * x.norm());
        }
    }

    #[test]
    fn conjugation_equivariance() {
        let p = poly(&random_terms(&[0, 4, 9, 60], 11));
        let a = roots_univariate(&p, &SolverConfig::default()).unwrap();
        let b = roots_univariate(&p.conj(), &SolverConfig::default()).unwrap();
        let a = sorted(a.zeros.iter().map(|z| z.z[0].conj()).collect());
        let b = sorted(b.zeros.iter().map(|z| z.z[0]).collect());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-10 * x.norm().max(1.0));
        }
    }

    #[test]
    fn scaling_shifts_rho() {
        let p = poly(&random_terms(&[1, 6, 13, 40], 3));
        let base = roots_univariate(&p, &SolverConfig::default()).unwrap();
        let mut r0: Vec<f64> = base.zeros.iter().map(|z| z.point.rho()[0]).collect();
        r0.sort_by(f64::total_cmp);
        for s in [-1.0, 1.0] {
            let q = roots_univariate(&p.rescaled(&[s]), &SolverConfig::default()).unwrap();
            let mut r1: Vec<f64> = q.zeros.iter().map(|z| z.point.rho()[0]).collect();
            r1.sort_by(f64::total_cmp);
            for (a, b) in r0.iter().zip(&r1) {
                assert!((b - (a - s)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_monomials() {
        let one = Complex64::new(1.0, 0.0);
        assert!(roots_univariate(&poly(&[(3, one)]), &SolverConfig::default()).is_err());
    }

    #[test]
    fn multiple_root_is_merged() {
        // (z - 1)^2 = z^2 - 2 z + 1.
        let c = |x: f64| Complex64::new(x, 0.0);
        let zs = roots_univariate(
            &poly(&[(0, c(1.0)), (1, c(-2.0)), (2, c(1.0))]),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(zs.count(), 2);
        assert!(zs.zeros.iter().all(|z| (z.z[0] - c(1.0)).norm() < 1e-6));
    }
}
