//! Gaussian fewnomial ensembles: norming constants, monomial masses and kernels.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lattice::Spectrum;
use crate::potential::symplectic::SymplecticPotential;
use crate::quad::{self, AdaptiveConfig};
use crate::special::{ln_factorial, ln_one_plus_sum_exp, ln_rising, logsumexp};

/// A point `z = exp(rho/2 + i theta)` of the complex torus.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPolarPoint {
    rho: Vec<f64>,
    theta: Vec<f64>,
}

impl LogPolarPoint {
    pub fn new(rho: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if rho.is_empty() || rho.len() != theta.len() {
            return Err(Error::InvalidArgument(
                "rho and theta must have equal nonzero length".into(),
            ));
        }
        if rho.iter().chain(&theta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "log-polar coordinates must be finite".into(),
            ));
        }
        Ok(Self { rho, theta })
    }

    pub fn from_rho(rho: Vec<f64>) -> Result<Self> {
        let theta = vec![0.0; rho.len()];
        Self::new(rho, theta)
    }

    pub fn from_complex(z: &[Complex64]) -> Result<Self> {
        let rho = z.iter().map(|z| z.norm_sqr().ln()).collect();
        let theta = z.iter().map(|z| z.arg()).collect();
        Self::new(rho, theta)
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.rho
            .iter()
            .zip(&self.theta)
            .map(|(&r, &t)| Complex64::from_polar((0.5 * r).exp(), t))
            .collect()
    }
}

fn check_alpha(alpha: &[u32], n: u32) -> Result<()> {
    let norm: u64 = alpha.iter().map(|&a| a as u64).sum();
    if norm > n as u64 {
        return Err(Error::Domain {
            norm,
            degree: n as u64,
        });
    }
    Ok(())
}

/// `ln Q(alpha) = ln N! - ln (N+m)! - ln binom(N, alpha)` for the Fubini-Study weight.
pub fn log_norming_constant_su(alpha: &[u32], n: u32) -> Result<f64> {
    check_alpha(alpha, n)?;
    let norm: u64 = alpha.iter().map(|&a| a as u64).sum();
    let ln_multinomial = ln_factorial(n as u64)
        - ln_factorial(n as u64 - norm)
        - alpha.iter().map(|&a| ln_factorial(a as u64)).sum::<f64>();
    Ok(-ln_rising(n as u64, alpha.len()) - ln_multinomial)
}

fn dot(alpha: &[u32], rho: &[f64]) -> f64 {
    alpha.iter().zip(rho).map(|(&a, r)| a as f64 * r).sum()
}

/// `ln |m_alpha(z)|^2` given `ln Q(alpha)`.
pub fn log_mass_with_norming(log_q: f64, alpha: &[u32], n: u32, rho: &[f64]) -> f64 {
    -log_q + dot(alpha, rho) - n as f64 * ln_one_plus_sum_exp(rho)
}

/// `ln |m_alpha(z)|^2 = -ln Q(alpha) + <rho, alpha> - N ln(1 + sum e^rho)`.
pub fn eval_log_monomial_mass(alpha: &[u32], n: u32, point: &LogPolarPoint) -> Result<f64> {
    if alpha.len() != point.dim() {
        return Err(Error::InvalidArgument(
            "alpha and point dimensions differ".into(),
        ));
    }
    Ok(log_mass_with_norming(
        log_norming_constant_su(alpha, n)?,
        alpha,
        n,
        point.rho(),
    ))
}

/// `f` i.i.d. standard complex normals with `E|c|^2 = 1`.
pub fn sample_coefficients<R: Rng + ?Sized>(s: &Spectrum, rng: &mut R) -> Vec<Complex64> {
    sample_complex_normals(s.len(), rng)
}

pub fn sample_complex_normals<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(scale * re, scale * im)
        })
        .collect()
}

/// `ln Pi_{N|S}(z, z)`: log-sum of monomial masses over `S`, with `S` inside `N Sigma`.
pub fn conditional_szego_kernel(s: &Spectrum, n: u32, point: &LogPolarPoint) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let terms = s
        .points()
        .iter()
        .map(|a| eval_log_monomial_mass(a.coords(), n, point))
        .collect::<Result<Vec<_>>>()?;
    Ok(logsumexp(terms))
}

/// `ln sum_{alpha in S} e^{<rho, alpha>}`, the unweighted kernel.
pub fn kac_kernel(s: &Spectrum, point: &LogPolarPoint) -> f64 {
    logsumexp(s.points().iter().map(|a| dot(a.coords(), point.rho())))
}

/// How toric norming constants are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToricMethod {
    /// Steepest descent at `alpha / N`, including the Hessian correction.
    Laplace,
    /// Direct quadrature of the norming integral.
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToricNormingConfig {
    pub method: ToricMethod,
    /// Gauss-Legendre nodes per axis for two-dimensional quadrature.
    pub nodes: usize,
    /// Inset from the simplex boundary.
    pub boundary_eps: f64,
}

impl Default for ToricNormingConfig {
    fn default() -> Self {
        Self {
            method: ToricMethod::Laplace,
            nodes: 200,
            boundary_eps: 1e-8,
        }
    }
}

/// `(1/N) ln Q(alpha)` for the toric weight with symplectic potential `u`.
///
/// The norming integral is `Q(alpha) = int_Sigma exp(N [u(x) + <alpha/N - x, grad u(x)>]) dx`,
/// whose exponent peaks at `x = alpha / N` with value `N u(alpha / N)`.
pub fn toric_log_norming(
    alpha: &[u32],
    n: u32,
    u: &dyn SymplecticPotential,
    cfg: &ToricNormingConfig,
) -> Result<f64> {
    check_alpha(alpha, n)?;
    let m = alpha.len();
    if u.dim() != m {
        return Err(Error::InvalidArgument(
            "potential dimension differs from alpha".into(),
        ));
    }
    let nf = n as f64;
    let y: Vec<f64> = alpha.iter().map(|&a| a as f64 / nf).collect();
    let on_boundary = y.contains(&0.0) || y.iter().sum::<f64>() >= 1.0;
    match cfg.method {
        ToricMethod::Laplace => {
            if on_boundary && u.singular_on_boundary() {
                return Err(Error::Boundary);
            }
            let h = u.hessian(&y);
            let det = match m {
                1 => h[0],
                2 => h[0] * h[3] - h[1] * h[2],
                _ => nalgebra::DMatrix::from_row_slice(m, m, &h).determinant(),
            };
            if det <= 0.0 || !det.is_finite() {
                return Err(Error::InvalidArgument(
                    "potential is not strictly convex at alpha/N".into(),
                ));
            }
            let correction =
                0.5 * m as f64 * (2.0 * std::f64::consts::PI / nf).ln() - 0.5 * det.ln();
            Ok(u.value(&y) + correction / nf)
        }
        ToricMethod::Quadrature => {
            let peak = nf * u.value(&y);
            let exponent = |x: &[f64]| {
                let g = u.gradient(x);
                let shift: f64 = y.iter().zip(x).zip(&g).map(|((y, x), g)| (y - x) * g).sum();
                nf * (u.value(x) + shift) - peak
            };
            let integral = match m {
                1 => {
                    let cfg = AdaptiveConfig {
                        abs_tol: 0.0,
                        rel_tol: 1e-12,
                        max_intervals: 4000,
                    };
                    let mut f = |x: f64| exponent(&[x]).exp();
                    let mut breaks = vec![0.0, 1.0];
                    if y[0] > 0.0 && y[0] < 1.0 {
                        breaks.insert(1, y[0]);
                    }
                    quad::integrate_breaks(&mut f, &breaks, cfg)?
                }
                2 => duffy_square(&exponent, cfg.nodes, cfg.boundary_eps),
                _ => {
                    return Err(Error::InvalidArgument(
                        "toric quadrature supports m <= 2".into(),
                    ))
                }
            };
            if integral <= 0.0 || !integral.is_finite() {
                return Err(Error::Quadrature(f64::NAN));
            }
            Ok((peak + integral.ln()) / nf)
        }
    }
}

/// Tensor Gauss-Legendre over the triangle via `x = (s, (1 - s) t)`.
fn duffy_square(exponent: &dyn Fn(&[f64]) -> f64, nodes: usize, eps: f64) -> f64 {
    let (gx, gw) = quad::gauss_legendre(nodes);
    let lo = eps;
    let hi = 1.0 - eps;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut total = 0.0;
    for (xs, ws) in gx.iter().zip(&gw) {
        let s = mid + half * xs;
        for (xt, wt) in gx.iter().zip(&gw) {
            let t = mid + half * xt;
            let x = [s, (1.0 - s) * t];
            total += ws * wt * half * half * (1.0 - s) * exponent(&x).exp();
        }
    }
    total
}

/// The weight attached to monomials of an ensemble.
#[derive(Clone)]
pub enum Weighting {
    /// Fubini-Study norming constants.
    Su,
    /// Unit norming constants.
    Kac,
    /// Norming constants of a general symplectic potential.
    Toric(Arc<dyn SymplecticPotential>, ToricNormingConfig),
}

impl fmt::Debug for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weighting::Su => write!(f, "Su"),
            Weighting::Kac => write!(f, "Kac"),
            Weighting::Toric(u, _) => write!(f, "Toric({})", u.name()),
        }
    }
}

impl Weighting {
    pub fn name(&self) -> String {
        match self {
            Weighting::Su => "su".into(),
            Weighting::Kac => "kac".into(),
            Weighting::Toric(u, _) => format!("toric({})", u.name()),
        }
    }
}

/// `ln Q(alpha)` for every point of a spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct NormingTable {
    degree: u32,
    entries: Vec<(Vec<u32>, f64)>,
}

impl NormingTable {
    pub fn build(s: &Spectrum, n: u32, weighting: &Weighting) -> Result<Self> {
        let entries = s
            .points()
            .iter()
            .map(|a| {
                let alpha = a.coords();
                let log_q = match weighting {
                    Weighting::Su => log_norming_constant_su(alpha, n)?,
                    Weighting::Kac => 0.0,
                    Weighting::Toric(u, cfg) => {
                        n as f64 * toric_log_norming(alpha, n, u.as_ref(), cfg)?
                    }
                };
                Ok((alpha.to_vec(), log_q))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { degree: n, entries })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn get(&self, alpha: &[u32]) -> Option<f64> {
        self.entries
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, q)| *q)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.entries.iter().map(|(a, q)| (a.as_slice(), *q))
    }
}

/// One random sparse polynomial `sum_alpha c_alpha z^alpha / sqrt(Q(alpha))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseEquation {
    pub spectrum: Spectrum,
    pub coeffs: Vec<Complex64>,
    pub log_norming: Vec<f64>,
}

impl SparseEquation {
    /// Monomial-basis coefficients `c_alpha Q(alpha)^{-1/2}`, multiplied by a common
    /// factor that centers their log-magnitudes. Zeros are unaffected by the factor.
    pub fn monomial_terms(&self) -> Vec<(Vec<u32>, Complex64)> {
        let (lo, hi) = self
            .log_norming
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &q| {
                (lo.min(-0.5 * q), hi.max(-0.5 * q))
            });
        let center = 0.5 * (lo + hi);
        self.spectrum
            .points()
            .iter()
            .zip(&self.coeffs)
            .zip(&self.log_norming)
            .map(|((a, c), q)| (a.coords().to_vec(), c * (-0.5 * q - center).exp()))
            .collect()
    }
}

/// `k` random sparse polynomials in `m` variables.
#[derive(Clone, Debug)]
pub struct FewnomialSystem {
    pub equations: Vec<SparseEquation>,
    pub weighting: String,
    pub degree: u32,
}

impl FewnomialSystem {
    pub fn sample<R: Rng + ?Sized>(
        spectra: Vec<Spectrum>,
        weighting: &Weighting,
        rng: &mut R,
    ) -> Result<Self> {
        let first = spectra.first().ok_or(Error::InvalidArgument(
            "system needs k >= 1 equations".into(),
        ))?;
        let (m, n) = (first.dim(), first.degree());
        if spectra.len() > m || spectra.iter().any(|s| s.dim() != m || s.degree() != n) {
            return Err(Error::InvalidArgument(
                "need 1 <= k <= m spectra of common dimension and degree".into(),
            ));
        }
        let equations = spectra
            .into_iter()
            .map(|s| {
                let table = NormingTable::build(&s, n, weighting)?;
                let log_norming = table.iter().map(|(_, q)| q).collect();
                let coeffs = sample_coefficients(&s, rng);
                Ok(SparseEquation {
                    spectrum: s,
                    coeffs,
                    log_norming,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            equations,
            weighting: weighting.name(),
            degree: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.equations[0].spectrum.dim()
    }

    /// `ln(|P_j(z)|^2 e^{-N phi(z)})` with the Fubini-Study weight `phi = ln(1 + sum e^rho)`.
    pub fn log_weighted_mass(&self, j: usize, point: &LogPolarPoint) -> f64 {
        let eq = &self.equations[j];
        let n = self.degree;
        let mut acc = Complex64::new(0.0, 0.0);
        let logs: Vec<f64> = eq
            .spectrum
            .points()
            .iter()
            .zip(&eq.log_norming)
            .map(|(a, &q)| 0.5 * log_mass_with_norming(q, a.coords(), n, point.rho()))
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for ((a, c), l) in eq.spectrum.points().iter().zip(&eq.coeffs).zip(&logs) {
            let phase: f64 = a
                .coords()
                .iter()
                .zip(point.theta())
                .map(|(&k, t)| k as f64 * t)
                .sum();
            acc += c * Complex64::from_polar((l - top).exp(), phase);
        }
        2.0 * top + acc.norm_sqr().ln()
    }
}
