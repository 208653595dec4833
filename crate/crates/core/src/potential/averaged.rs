//! Potentials averaged over random spectra.
//!
//! With `f` i.i.d. uniform points `lambda^j` of the simplex, the averaged potential is
//! `Phi(rho) = E max_j [<rho, lambda^j> - u(lambda^j)]`. Writing `b = L(rho) - <rho, lambda> + u(lambda)`
//! with `L` the Legendre transform of `u`, `Phi = L - int_0^inf (1 - D_b(t))^f dt`, where `D_b` is the
//! distribution function of `b` under the uniform law.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::potential::decay::{decay_rate, decay_sup};
use crate::potential::symplectic::SymplecticPotential;
use crate::potential::{PotentialField, PotentialKind};
use crate::quad::{integrate_breaks, AdaptiveConfig};
use crate::special::xlogx;

/// A uniform point of `p * Sigma`, by normalized exponential spacings.
pub fn sample_uniform_simplex<R: Rng + ?Sized>(m: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..=m).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    e[1..].iter().map(|x| p * x / total).collect()
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            samples: self.n,
        }
    }
}

/// Monte Carlo estimate of `E max_j [<rho, lambda^j> - u(lambda^j)]` over `f` uniform points.
pub fn averaged_potential_mc<R: Rng + ?Sized>(
    f: usize,
    u: &dyn SymplecticPotential,
    rho: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if f == 0 || n_samples == 0 {
        return Err(Error::InvalidArgument(
            "need f >= 1 and at least one sample".into(),
        ));
    }
    if rho.len() != u.dim() {
        return Err(Error::InvalidArgument(
            "rho dimension differs from the potential".into(),
        ));
    }
    let mut acc = Welford::default();
    for _ in 0..n_samples {
        let best = (0..f)
            .map(|_| {
                let l = sample_uniform_simplex(rho.len(), u.scale(), rng);
                l.iter().zip(rho).map(|(l, r)| l * r).sum::<f64>() - u.value(&l)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        acc.push(best);
    }
    Ok(acc.finish())
}

/// How `D_b` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbMethod {
    /// Exact branch inversion, one variable only.
    Invert1d,
    /// Hit-or-miss sampling.
    MonteCarlo { samples: usize },
}

/// `D_b(t; rho)` for the Fubini-Study decay rate on `Sigma`.
pub fn db_distribution<R: Rng + ?Sized>(
    t: f64,
    rho: &[f64],
    method: DbMethod,
    rng: &mut R,
) -> Result<f64> {
    match method {
        DbMethod::Invert1d => {
            if rho.len() != 1 {
                return Err(Error::InvalidArgument(
                    "branch inversion needs m = 1".into(),
                ));
            }
            Ok(db_distribution_1d(t, rho[0]))
        }
        DbMethod::MonteCarlo { samples } => Ok(db_distribution_mc(t, rho, samples, rng)?.mean),
    }
}

/// Hit-or-miss estimate of `D_b(t; rho)` in any dimension.
pub fn db_distribution_mc<R: Rng + ?Sized>(
    t: f64,
    rho: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let mut hits = 0usize;
    for _ in 0..samples {
        let l = sample_uniform_simplex(rho.len(), 1.0, rng);
        if decay_rate(&l, rho, 1.0)? <= t {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        mean: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// Root of a decreasing function on `[lo, hi]` by safeguarded Newton.
fn decreasing_root(
    mut lo: f64,
    mut hi: f64,
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(x);
        if v == 0.0 {
            return x;
        }
        if v > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let d = dg(x);
        let newton = x - v / d;
        x = if d.is_finite() && d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if x == lo || x == hi {
            break;
        }
    }
    x
}

fn fs_decay_1d(l: f64, rho: f64, big_l: f64) -> f64 {
    xlogx(l) + xlogx(1.0 - l) - rho * l + big_l
}

/// Lower root `g(t, rho)` of `b(lambda; rho) = t` on `[0, e^rho / (1 + e^rho)]`.
pub fn lower_branch(t: f64, rho: f64) -> f64 {
    let big_l = ln_1p_exp(rho);
    let peak = (rho - big_l).exp();
    if t >= big_l {
        return 0.0;
    }
    if t <= 0.0 {
        return peak;
    }
    decreasing_root(
        0.0,
        peak,
        |l| fs_decay_1d(l, rho, big_l) - t,
        |l| (l / (1.0 - l)).ln() - rho,
    )
}

fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `D_b(t; rho) = 1 - g(t, rho) - g(t, -rho)` in one variable.
pub fn db_distribution_1d(t: f64, rho: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (1.0 - lower_branch(t, rho) - lower_branch(t, -rho)).clamp(0.0, 1.0)
}

/// Quadrature settings for averaged potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DbConfig {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for DbConfig {
    fn default() -> Self {
        // Tight enough that second differences at step 1e-3 stay accurate.
        Self {
            abs_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

/// `int_0^{t_max} (1 - D(t))^f dt` after the substitution `t = s^2`, which removes the
/// square-root behaviour of `D` at `t = 0`.
fn tail_integral(f: usize, kinks: [f64; 2], d: impl Fn(f64) -> f64, cfg: DbConfig) -> Result<f64> {
    let mut breaks = vec![0.0, kinks[0].max(0.0).sqrt(), kinks[1].max(0.0).sqrt()];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut integrand = |s: f64| 2.0 * s * (1.0 - d(s * s)).powi(f as i32);
    let acfg = AdaptiveConfig {
        abs_tol: cfg.abs_tol,
        rel_tol: 0.0,
        max_intervals: cfg.max_intervals,
    };
    integrate_breaks(&mut integrand, &breaks, acfg)
}

/// The averaged Fubini-Study potential in one variable, via `D_b`.
pub fn averaged_potential_db(f: usize, rho: f64, cfg: DbConfig) -> Result<f64> {
    if f == 0 {
        return Err(Error::InvalidArgument("f must be >= 1".into()));
    }
    let t1 = ln_1p_exp(rho);
    let t2 = ln_1p_exp(-rho);
    Ok(t1 - tail_integral(f, [t1, t2], |t| db_distribution_1d(t, rho), cfg)?)
}

/// Largest value of `b` over the simplex, past which `D_b = 1`.
pub fn t_max(rho: &[f64]) -> f64 {
    decay_sup(rho, 1.0)
}

/// [`averaged_potential_db`] as a potential field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragedDb {
    pub f: usize,
    pub cfg: DbConfig,
}

impl AveragedDb {
    pub fn new(f: usize) -> Self {
        Self {
            f,
            cfg: DbConfig::default(),
        }
    }
}

impl PotentialField for AveragedDb {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, rho: &[f64]) -> f64 {
        averaged_potential_db(self.f, rho[0], self.cfg).unwrap_or(f64::NAN)
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::Averaged {
            f: self.f,
            method: "db".into(),
            samples: None,
        }
    }
}

/// The averaged potential of a general convex `u` on an interval `[a, b]`, through the
/// same `D_b` route but with a numerical Legendre transform.
#[derive(Clone, Debug)]
pub struct ToricAveraged1d {
    pub u: Arc<dyn SymplecticPotential>,
    pub interval: (f64, f64),
    pub f: usize,
    pub cfg: DbConfig,
}

impl ToricAveraged1d {
    pub fn new(u: Arc<dyn SymplecticPotential>, f: usize) -> Result<Self> {
        let p = u.scale();
        Self::on_interval(u, (0.0, p), f)
    }

    pub fn on_interval(
        u: Arc<dyn SymplecticPotential>,
        interval: (f64, f64),
        f: usize,
    ) -> Result<Self> {
        let (a, b) = interval;
        if u.dim() != 1 || !(a < b) || a < 0.0 || b > u.scale() || f == 0 {
            return Err(Error::InvalidArgument(
                "need m = 1, f >= 1 and a nondegenerate interval".into(),
            ));
        }
        Ok(Self {
            u,
            interval,
            f,
            cfg: DbConfig::default(),
        })
    }

    fn du(&self, l: f64) -> f64 {
        self.u.gradient(&[l])[0]
    }

    /// Maximizer of `rho * lambda - u(lambda)` on the interval.
    pub fn argmax(&self, rho: f64) -> f64 {
        let (a, b) = self.interval;
        let edge = |l: f64| {
            let g = self.du(l);
            if g.is_nan() {
                None
            } else {
                Some(g)
            }
        };
        if edge(a).is_some_and(|g| g >= rho) {
            return a;
        }
        if edge(b).is_some_and(|g| g <= rho) {
            return b;
        }
        decreasing_root(a, b, |l| rho - self.du(l), |l| -self.u.hessian(&[l])[0])
    }

    /// The Legendre transform `L(rho)` restricted to the interval.
    pub fn legendre(&self, rho: f64) -> f64 {
        let l = self.argmax(rho);
        rho * l - self.u.value(&[l])
    }

    fn distribution(&self, t: f64, rho: f64, peak: f64, big_l: f64) -> f64 {
        let (a, b) = self.interval;
        let bfun = |l: f64| big_l - rho * l + self.u.value(&[l]);
        let dbfun = |l: f64| self.du(l) - rho;
        let lower = if t >= bfun(a) {
            a
        } else {
            decreasing_root(a, peak, |l| bfun(l) - t, dbfun)
        };
        let upper = if t >= bfun(b) {
            b
        } else {
            // Increasing on [peak, b]; flip to reuse the decreasing solver.
            decreasing_root(peak, b, |l| t - bfun(l), |l| -dbfun(l))
        };
        ((upper - lower) / (b - a)).clamp(0.0, 1.0)
    }

    pub fn evaluate(&self, rho: f64) -> Result<f64> {
        let (a, b) = self.interval;
        let peak = self.argmax(rho);
        let big_l = rho * peak - self.u.value(&[peak]);
        let ta = big_l - rho * a + self.u.value(&[a]);
        let tb = big_l - rho * b + self.u.value(&[b]);
        let tail = tail_integral(
            self.f,
            [ta, tb],
            |t| self.distribution(t, rho, peak, big_l),
            self.cfg,
        )?;
        Ok(big_l - tail)
    }
}

impl PotentialField for ToricAveraged1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, rho: &[f64]) -> f64 {
        self.evaluate(rho[0]).unwrap_or(f64::NAN)
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::Averaged {
            f: self.f,
            method: format!("db[{}]", self.u.name()),
            samples: None,
        }
    }
}

/// `E max` over `f` draws with replacement from a fixed pool of `n` uniform points.
///
/// Sorting the pool values `a_(1) >= ... >= a_(n)`, the estimate is `sum_k w_k a_(k)` with
/// `w_k = (1 - (k-1)/n)^f - (1 - k/n)^f`. Being an average of maxima of affine functions it is
/// convex in `rho`, and one pool serves every `rho`.
#[derive(Clone, Debug)]
pub struct PooledAveraged {
    points: Vec<f64>,
    offsets: Vec<f64>,
    weights: Vec<f64>,
    m: usize,
    f: usize,
}

impl PooledAveraged {
    pub fn new<R: Rng + ?Sized>(
        f: usize,
        u: &dyn SymplecticPotential,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if f == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "need f >= 1 and a nonempty pool".into(),
            ));
        }
        let pool = (0..n)
            .map(|_| sample_uniform_simplex(u.dim(), u.scale(), rng))
            .collect();
        Self::from_points(f, u, pool)
    }

    /// A pool of given points, for laws other than the uniform one on the simplex.
    pub fn from_points(f: usize, u: &dyn SymplecticPotential, pool: Vec<Vec<f64>>) -> Result<Self> {
        let m = u.dim();
        let n = pool.len();
        if f == 0 || n == 0 || pool.iter().any(|l| l.len() != m) {
            return Err(Error::InvalidArgument(
                "need f >= 1 and a nonempty pool of matching dimension".into(),
            ));
        }
        let mut points = Vec::with_capacity(n * m);
        let mut offsets = Vec::with_capacity(n);
        for l in pool {
            offsets.push(-u.value(&l));
            points.extend(l);
        }
        let nf = n as f64;
        let weights = (1..=n)
            .map(|k| {
                (1.0 - (k as f64 - 1.0) / nf).powi(f as i32) - (1.0 - k as f64 / nf).powi(f as i32)
            })
            .collect();
        Ok(Self {
            points,
            offsets,
            weights,
            m,
            f,
        })
    }

    pub fn pool_size(&self) -> usize {
        self.offsets.len()
    }
}

impl PotentialField for PooledAveraged {
    fn dim(&self) -> usize {
        self.m
    }

    fn value(&self, rho: &[f64]) -> f64 {
        let mut vals: Vec<f64> = self
            .points
            .chunks_exact(self.m)
            .zip(&self.offsets)
            .map(|(l, b)| l.iter().zip(rho).map(|(l, r)| l * r).sum::<f64>() + b)
            .collect();
        vals.sort_unstable_by(|a, b| b.total_cmp(a));
        vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::Averaged {
            f: self.f,
            method: "pooled".into(),
            samples: Some(self.offsets.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::symplectic::{FnPotential, FubiniStudy, Perturbed};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_sampler_is_uniform() {
        // Coordinates of a uniform point of the triangle are Beta(1, 2): mean 1/3, var 1/18.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let l = sample_uniform_simplex(2, 1.0, &mut rng);
            assert!(l[0] >= 0.0 && l[1] >= 0.0 && l[0] + l[1] <= 1.0);
            s += l[0];
            s2 += l[0] * l[0];
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 1.0 / 3.0).abs() < 0.003);
        assert!((var - 1.0 / 18.0).abs() < 0.001);
    }

    #[test]
    fn single_point_average_is_affine() {
        // f = 1: E[rho lambda] - E[u] = rho / 2 + 1/2.
        let u = FubiniStudy::new(1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for rho in [-2.0, 0.0, 1.5] {
            let est = averaged_potential_mc(1, &u, &[rho], 200_000, &mut rng).unwrap();
            assert!((est.mean - (rho / 2.0 + 0.5)).abs() < 3.0 * est.std_error);
            let db = averaged_potential_db(1, rho, DbConfig::default()).unwrap();
            assert!((db - (rho / 2.0 + 0.5)).abs() < 1e-12, "{db}");
        }
    }

    #[test]
    fn distribution_limits() {
        for rho in [-3.0, 0.0, 0.7] {
            assert_eq!(db_distribution_1d(0.0, rho), 0.0);
            let top = ln_1p_exp(rho).max(ln_1p_exp(-rho));
            assert_eq!(db_distribution_1d(top, rho), 1.0);
            assert_eq!(db_distribution_1d(top + 1.0, rho), 1.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(db_distribution(0.5, &[0.0, 0.0], DbMethod::Invert1d, &mut rng).is_err());
    }

    #[test]
    fn branch_roots_solve_the_decay_equation() {
        for rho in [-4.0, -0.5, 0.0, 2.0] {
            for t in [1e-6, 0.01, 0.3, 0.69] {
                let g = lower_branch(t, rho);
                if g > 0.0 {
                    let b = decay_rate(&[g], &[rho], 1.0).unwrap();
                    assert!((b - t).abs() < 1e-13, "rho={rho} t={t}");
                }
            }
        }
    }

    #[test]
    fn inversion_matches_hit_or_miss() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000;
        for t in [0.1, 0.5, 1.0, 2.0] {
            for rho in [-3.0, -1.0, 0.0, 1.5, 3.0] {
                let exact = db_distribution_1d(t, rho);
                let mc = db_distribution_mc(t, &[rho], n, &mut rng).unwrap();
                let se = (exact * (1.0 - exact) / n as f64).sqrt().max(1e-9);
                assert!(
                    (mc.mean - exact).abs() <= 4.0 * se,
                    "t={t} rho={rho}: {} vs {exact}",
                    mc.mean
                );
            }
        }
    }

    #[test]
    fn db_potential_is_monotone_in_f_and_tends_to_legendre() {
        for rho in [-3.0, 0.0, 2.0] {
            let vals: Vec<f64> = [1, 2, 3, 5, 20, 200]
                .iter()
                .map(|&f| averaged_potential_db(f, rho, DbConfig::default()).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1] + 1e-13));
            assert!(vals[5] < ln_1p_exp(rho));
            assert!(ln_1p_exp(rho) - vals[5] < 0.02);
        }
        // Reflecting lambda to 1 - lambda gives Phi(-rho) = Phi(rho) - rho.
        let vp = averaged_potential_db(3, 1.3, DbConfig::default()).unwrap();
        let vm = averaged_potential_db(3, -1.3, DbConfig::default()).unwrap();
        assert!((vp - vm - 1.3).abs() < 1e-12);
    }

    #[test]
    fn generic_toric_route_reproduces_the_dedicated_one() {
        let fs = FubiniStudy::new(1);
        let generic = FnPotential {
            dim: 1,
            scale: 1.0,
            label: "fs".into(),
            f: move |l: &[f64]| fs.value(l),
        };
        let t = ToricAveraged1d::new(Arc::new(generic), 3).unwrap();
        for rho in [-3.0, -1.0, 0.0, 0.4, 3.0] {
            let a = t.evaluate(rho).unwrap();
            let b = averaged_potential_db(3, rho, DbConfig::default()).unwrap();
            assert!((a - b).abs() < 1e-9, "rho={rho}: {a} vs {b}");
        }
    }

    #[test]
    fn toric_route_matches_monte_carlo_for_perturbed_potential() {
        let u = Perturbed {
            base: FubiniStudy::new(1),
            weight: 0.1,
            center: vec![0.5],
        };
        let t = ToricAveraged1d::new(Arc::new(u.clone()), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for rho in [-2.0, 0.5, 3.0] {
            let est = averaged_potential_mc(2, &u, &[rho], 200_000, &mut rng).unwrap();
            let v = t.evaluate(rho).unwrap();
            assert!((est.mean - v).abs() < 4.0 * est.std_error, "rho={rho}");
        }
    }

    #[test]
    fn sub_interval_route_matches_monte_carlo() {
        // Uniform points of [0.2, 0.7] with the entropy.
        let u = FubiniStudy::new(1);
        let t = ToricAveraged1d::on_interval(Arc::new(u), (0.2, 0.7), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for rho in [-1.0, 2.0] {
            let n = 200_000;
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let best = (0..3)
                    .map(|_| {
                        let l = 0.2 + 0.5 * rng.random::<f64>();
                        rho * l - u.value(&[l])
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                s += best;
                s2 += best * best;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            assert!((mean - t.evaluate(rho).unwrap()).abs() < 4.0 * se);
        }
    }

    #[test]
    fn pooled_estimator_tracks_exact_route() {
        let u = FubiniStudy::new(1);
        let pool = PooledAveraged::new(3, &u, 50_000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for rho in [-2.0, 0.0, 2.0] {
            let exact = averaged_potential_db(3, rho, DbConfig::default()).unwrap();
            assert!((pool.value(&[rho]) - exact).abs() < 0.01);
        }
        let w: f64 = pool.weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-12);
    }
}
