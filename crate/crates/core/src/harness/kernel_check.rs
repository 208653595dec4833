//! Numerical checks of the monomial mass bounds and of the kernel-to-potential limit.
//!
//! Stirling's formula with `1/(12n+1) < eps_n < 1/(12n)` gives, for interior `alpha`,
//! `ln |m_alpha|^2 = -N b_{alpha/N} + (m/2) ln N - (1/2) sum_j ln(alpha_j/N) + R` with
//! `|R| <= C_m = sum_{j=1}^m ln(1+j) + (m/2) ln 2 pi + (m+1)/12`. Bounding the middle term
//! and reducing boundary points to faces yields the two-sided bound with `C'_m` below.

use crate::ensemble::{conditional_szego_kernel, eval_log_monomial_mass, LogPolarPoint};
use crate::error::{Error, Result};
use crate::lattice::{dilate_spectrum, enumerate_lattice, Spectrum};
use crate::potential::decay::decay_rate;
use crate::potential::legendre::discrete_legendre;
use crate::special::ln_one_plus_sum_exp;

/// The remainder bound `C_m` for interior points.
pub fn stirling_constant(m: usize) -> f64 {
    let mf = m as f64;
    (1..=m).map(|j| (1.0 + j as f64).ln()).sum::<f64>()
        + 0.5 * mf * (2.0 * std::f64::consts::PI).ln()
        + (mf + 1.0) / 12.0
}

/// `C'_m = C_m + (1/2) ln(m+1) + m`: the interior upper bound adds `(1/2) ln(m+1)`, and a
/// point on a `k`-face adds at most `(m^2 - k m)/N <= m` through `ln((N+m)!/(N+k)!)`.
/// `C_k` is increasing in `k`, so the interior constant dominates every face.
pub fn stirling_constant_prime(m: usize) -> f64 {
    stirling_constant(m) + 0.5 * (m as f64 + 1.0).ln() + m as f64
}

/// Outcome of the bound suite at one `(m, N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StirlingCheck {
    pub m: usize,
    pub n: u32,
    pub evaluations: usize,
    pub c_prime: f64,
    /// Smallest `value - lower bound`.
    pub lower_margin: f64,
    /// Smallest `upper bound - value`.
    pub upper_margin: f64,
}

impl StirlingCheck {
    pub fn passed(&self) -> bool {
        self.lower_margin >= 0.0 && self.upper_margin >= 0.0
    }
}

fn test_points(m: usize) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![-3.0], vec![0.0], vec![2.5]],
        _ => vec![vec![-3.0, 1.0], vec![0.0, 0.0], vec![2.5, -1.5]],
    }
}

/// Checks `-N b + (m/2) ln N - C'_m <= ln |m_alpha|^2 <= -N b + m ln N + C'_m` at every
/// lattice point of `N Sigma` and a few `rho`.
pub fn stirling_bounds(m: usize, n: u32) -> Result<StirlingCheck> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("need m >= 1 and N >= 1".into()));
    }
    let c = stirling_constant_prime(m);
    let (nf, mf) = (n as f64, m as f64);
    let rhos = test_points(m);
    let mut out = StirlingCheck {
        m,
        n,
        evaluations: 0,
        c_prime: c,
        lower_margin: f64::INFINITY,
        upper_margin: f64::INFINITY,
    };
    for alpha in enumerate_lattice(n, m, None)? {
        let x: Vec<f64> = alpha.coords().iter().map(|&a| a as f64 / nf).collect();
        for rho in rhos.iter().filter(|r| r.len() == m) {
            let point = LogPolarPoint::from_rho(rho.clone())?;
            let value = eval_log_monomial_mass(alpha.coords(), n, &point)?;
            let nb = nf * decay_rate(&x, rho, 1.0)?;
            out.lower_margin = out.lower_margin.min(value - (-nb + 0.5 * mf * nf.ln() - c));
            out.upper_margin = out.upper_margin.min(-nb + mf * nf.ln() + c - value);
            out.evaluations += 1;
        }
    }
    Ok(out)
}

/// `sup_rho |(1/N) ln Pi_{Np|NS} + p ln(1 + sum e^rho) - L_S(rho) - p ln p|` over the given points,
/// with `S` a set of lattice points of `p Sigma` and `L_S` its entropy transform on `p Sigma`.
pub fn uniform_error(points: &[Vec<u32>], p: u32, n: u32, rhos: &[Vec<f64>]) -> Result<f64> {
    let s = Spectrum::from_exponents(points, p)?;
    let dilated = dilate_spectrum(&s, n);
    let real: Vec<Vec<f64>> = s.real_points(1.0);
    let (pf, nf) = (p as f64, n as f64);
    let mut sup = 0.0f64;
    for rho in rhos {
        let point = LogPolarPoint::from_rho(rho.clone())?;
        let kernel = conditional_szego_kernel(&dilated, n * p, &point)?;
        let limit = discrete_legendre(&real, pf, rho)? + pf * pf.ln();
        sup = sup.max((kernel / nf + pf * ln_one_plus_sum_exp(rho) - limit).abs());
    }
    Ok(sup)
}

/// `(m ln(Np) + C'_m + ln f) / N`, the envelope the uniform error must stay under.
pub fn uniform_bound(m: usize, f: usize, p: u32, n: u32) -> f64 {
    let np = (n as f64) * (p as f64);
    (m as f64 * np.ln() + stirling_constant_prime(m) + (f as f64).ln()) / n as f64
}

/// One row of the uniform convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformRow {
    pub n: u32,
    pub error: f64,
    pub bound: f64,
}

/// Errors and envelopes over a list of degrees, with `rho` on a uniform grid of the box `[lo, hi]^m`.
pub fn uniform_table(
    points: &[Vec<u32>],
    p: u32,
    ns: &[u32],
    box_: (f64, f64),
    steps: usize,
) -> Result<Vec<UniformRow>> {
    let m = points.first().ok_or(Error::EmptySpectrum)?.len();
    let axis: Vec<f64> = (0..=steps)
        .map(|i| box_.0 + (box_.1 - box_.0) * i as f64 / steps as f64)
        .collect();
    let rhos: Vec<Vec<f64>> = match m {
        1 => axis.iter().map(|&r| vec![r]).collect(),
        2 => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect(),
        _ => {
            return Err(Error::InvalidArgument(
                "uniform table supports m = 1, 2".into(),
            ))
        }
    };
    ns.iter()
        .map(|&n| {
            Ok(UniformRow {
                n,
                error: uniform_error(points, p, n, &rhos)?,
                bound: uniform_bound(m, points.len(), p, n),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let c1 = 2f64.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() + 2.0 / 12.0;
        assert!((stirling_constant(1) - c1).abs() < 1e-14);
        assert!(stirling_constant_prime(2) > stirling_constant_prime(1));
    }

    #[test]
    fn bounds_hold_at_small_degree() {
        for m in [1, 2] {
            let c = stirling_bounds(m, 12).unwrap();
            assert!(c.passed(), "{c:?}");
            assert!(
                c.lower_margin.min(c.upper_margin) < c.c_prime,
                "bound should not be vacuous: {c:?}"
            );
        }
    }

    #[test]
    fn interior_remainder_is_within_the_interior_constant() {
        // ln |m_alpha|^2 + N b - (m/2) ln N + (1/2) sum ln x_j is the remainder R.
        let (n, m) = (40u32, 1usize);
        for a in 1..n {
            let x = a as f64 / n as f64;
            let point = LogPolarPoint::from_rho(vec![0.3]).unwrap();
            let v = eval_log_monomial_mass(&[a], n, &point).unwrap();
            let nb = n as f64 * decay_rate(&[x], &[0.3], 1.0).unwrap();
            let r = v + nb - 0.5 * (n as f64).ln() + 0.5 * (x.ln() + (1.0 - x).ln());
            assert!(r.abs() <= stirling_constant(m), "alpha = {a}: R = {r}");
        }
    }

    #[test]
    fn uniform_error_decreases_and_respects_the_envelope() {
        let rows = uniform_table(
            &[vec![0], vec![1], vec![2]],
            2,
            &[10, 20, 40, 80],
            (-5.0, 5.0),
            40,
        )
        .unwrap();
        for w in rows.windows(2) {
            assert!(w[1].error < w[0].error, "{rows:?}");
        }
        assert!(rows.iter().all(|r| r.error <= r.bound), "{rows:?}");
        assert!(rows[3].error < 0.1);
    }

    #[test]
    fn uniform_error_in_two_variables() {
        let pts = [vec![0, 0], vec![1, 0], vec![0, 1]];
        let rows = uniform_table(&pts, 1, &[10, 40], (-3.0, 3.0), 6).unwrap();
        assert!(rows[1].error < rows[0].error && rows.iter().all(|r| r.error <= r.bound));
    }
}
