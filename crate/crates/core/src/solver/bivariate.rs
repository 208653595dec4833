//! Zeros in the torus of two sparse polynomials in two variables.
//!
//! `z2` is eliminated through the resultant `R(z1)`, which is never expanded. Aberth
//! iteration runs directly on `R(z1) / z1^a` with Newton ratios from `R'/R`. The primary
//! evaluator uses the product formula `R = lc_A^{d_B} prod_k B(z1, w_k)` over the roots
//! `w_k` of `A(z1, .)`, which stays accurate far from the unit circle where the Sylvester
//! determinant loses every digit to cancellation. The Sylvester matrix, with `R'/R` as
//! `tr(S^{-1} S')` from a scaled LU factorization, detects identically vanishing
//! resultants and serves as the fallback in double and double-double arithmetic.
//! Winding numbers on circles give the order `a` of `R` at the origin and starting radii.
//! Each root is completed by solving for `z2` and polished by two-dimensional Newton steps.

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::solver::mixed::bkk_count;
use crate::solver::poly::SparsePoly;
use crate::solver::scaled::{cast, uncast, Real, Scaled};
use crate::solver::univariate::{aberth, roots_of_terms, SolverConfig};
use crate::solver::zeros::{Zero, ZeroSet};

/// Largest total degree accepted.
pub const MAX_DEGREE: u32 = 40;

/// Largest Sylvester matrix retried in double-double arithmetic.
const MAX_EXTENDED_SYLVESTER: usize = 30;

/// Divides out the largest monomial factor `z1^a z2^b`.
fn strip_monomial(p: &SparsePoly) -> Vec<(Vec<u32>, Complex64)> {
    let lo = |j: usize| p.terms().iter().map(|t| t.0[j]).min().unwrap_or(0);
    let (a, b) = (lo(0), lo(1));
    p.terms()
        .iter()
        .map(|(e, c)| (vec![e[0] - a, e[1] - b], *c))
        .collect()
}

/// Coefficients of `z2^k` as univariate polynomials in `z1`.
fn by_z2_power(terms: &[(Vec<u32>, Complex64)]) -> Vec<Vec<(u32, Complex64)>> {
    let d = terms.iter().map(|t| t.0[1]).max().unwrap_or(0) as usize;
    let mut out = vec![Vec::new(); d + 1];
    for (e, c) in terms {
        out[e[1] as usize].push((e[0], *c));
    }
    out
}

/// `(sum c_j z^j, sum j c_j z^j)` in scaled form.
fn eval_with_euler<T: Real>(terms: &[(u32, Complex<T>)], z: Scaled<T>) -> (Scaled<T>, Scaled<T>) {
    let mut v = Scaled::zero();
    let mut d = Scaled::zero();
    for &(j, c) in terms {
        let t = z.powu(j).scale(c);
        v = v.add(t);
        d = d.add(t.scale(Complex::new(T::of(j as f64), T::zero())));
    }
    (v, d)
}

struct Sylvester<T> {
    c: [Vec<Vec<(u32, Complex<T>)>>; 2],
    n: usize,
}

/// Result of one resultant evaluation.
struct Eval<T> {
    /// `R'(z) / R(z)`.
    dlog: Complex<T>,
    /// Smallest pivot of the scaled factorization.
    min_pivot: f64,
    /// `ln|det|` of the scaled matrix.
    log_det: f64,
}

impl<T: Real> Sylvester<T> {
    fn new(c1: &[Vec<(u32, Complex64)>], c2: &[Vec<(u32, Complex64)>]) -> Self {
        let conv = |c: &[Vec<(u32, Complex64)>]| -> Vec<Vec<(u32, Complex<T>)>> {
            c.iter()
                .map(|row| row.iter().map(|&(j, v)| (j, cast(v))).collect())
                .collect()
        };
        let n = c1.len() - 1 + c2.len() - 1;
        Self {
            c: [conv(c1), conv(c2)],
            n,
        }
    }

    fn eval(&self, z: Complex<T>) -> Option<Eval<T>> {
        let n = self.n;
        let size = uncast(z).norm();
        if !(size.is_finite() && size > 0.0) {
            return None;
        }
        let zs = Scaled::new(z);
        let d2 = self.c[1].len() - 1;
        let vals: [Vec<(Scaled<T>, Scaled<T>)>; 2] = [
            self.c[0].iter().map(|t| eval_with_euler(t, zs)).collect(),
            self.c[1].iter().map(|t| eval_with_euler(t, zs)).collect(),
        ];
        // Nonzero pattern: row r < d2 holds P1 shifted by r, row d2 + r holds P2 shifted by r.
        let entry = |i: usize, j: usize| -> Option<&(Scaled<T>, Scaled<T>)> {
            let (which, shift) = if i < d2 { (0, i) } else { (1, i - d2) };
            j.checked_sub(shift).and_then(|k| vals[which].get(k))
        };
        let log2 = |s: &Scaled<T>| {
            if s.is_zero() {
                f64::NEG_INFINITY
            } else {
                s.ln_abs() / std::f64::consts::LN_2
            }
        };
        let mut lg = vec![f64::NEG_INFINITY; n * n];
        for i in 0..n {
            for j in 0..n {
                if let Some(e) = entry(i, j) {
                    lg[i * n + j] = log2(&e.0);
                }
            }
        }
        let mut rs = vec![0i64; n];
        let mut cs = vec![0i64; n];
        for _ in 0..2 {
            for i in 0..n {
                let m = (0..n)
                    .map(|j| lg[i * n + j] + cs[j] as f64)
                    .fold(f64::NEG_INFINITY, f64::max);
                rs[i] = if m.is_finite() {
                    -(m.round() as i64)
                } else {
                    0
                };
            }
            for j in 0..n {
                let m = (0..n)
                    .map(|i| lg[i * n + j] + rs[i] as f64)
                    .fold(f64::NEG_INFINITY, f64::max);
                cs[j] = if m.is_finite() {
                    -(m.round() as i64)
                } else {
                    0
                };
            }
        }
        let zero = Complex::new(T::zero(), T::zero());
        let one = Scaled::<T>::one();
        let mut a = vec![zero; n * n];
        let mut b = vec![zero; n * n];
        for i in 0..n {
            for j in 0..n {
                if let Some((v, d)) = entry(i, j) {
                    let shift = rs[i] + cs[j];
                    a[i * n + j] = Scaled {
                        m: v.m,
                        e: v.e + shift,
                    }
                    .div(one);
                    b[i * n + j] = Scaled {
                        m: d.m,
                        e: d.e + shift,
                    }
                    .div(one)
                        / z;
                }
            }
        }
        let shift: i64 = rs.iter().sum::<i64>() + cs.iter().sum::<i64>();
        lu_trace(&mut a, &b, n).map(|mut e| {
            e.log_det -= shift as f64 * std::f64::consts::LN_2;
            e
        })
    }
}

/// Factors `a` in place and returns `tr(a^{-1} b)` with the smallest pivot.
fn lu_trace<T: Real>(a: &mut [Complex<T>], b: &[Complex<T>], n: usize) -> Option<Eval<T>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut min_pivot = f64::INFINITY;
    let mut log_det = 0.0;
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| {
            a[x * n + k]
                .norm()
                .approx()
                .total_cmp(&a[y * n + k].norm().approx())
        })?;
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let piv = a[k * n + k];
        let size = piv.norm().approx();
        min_pivot = min_pivot.min(size);
        log_det += size.ln();
        if size == 0.0 {
            return Some(Eval {
                dlog: Complex::new(T::infinity(), T::zero()),
                min_pivot: 0.0,
                log_det: f64::NEG_INFINITY,
            });
        }
        for i in k + 1..n {
            let f = a[i * n + k] / piv;
            a[i * n + k] = f;
            if f.re == T::zero() && f.im == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let u = a[k * n + j];
                a[i * n + j] = a[i * n + j] - f * u;
            }
        }
    }
    // Solve a x = b e_j for each column and sum the diagonal entries x_j.
    let mut tr = Complex::new(T::zero(), T::zero());
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for col in 0..n {
        for i in 0..n {
            x[i] = b[perm[i] * n + col];
        }
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - a[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        tr = tr + x[col];
    }
    Some(Eval {
        dlog: tr,
        min_pivot,
        log_det,
    })
}

/// `R'/R` from the product formula `R(z1) = lc_A(z1)^{d_B} prod_k B(z1, w_k(z1))` over the
/// roots `w_k` of `A(z1, .)`. Each `w_k` comes from the sparse univariate solver, so the
/// evaluation keeps full relative accuracy however far `z1` is from the unit circle.
struct Poisson<'a> {
    /// Coefficients of `A` by power of `z2`.
    c: &'a [Vec<(u32, Complex64)>],
    a: SparsePoly,
    b: SparsePoly,
    /// Formal `z2`-degree of `B`.
    db: usize,
    cfg: SolverConfig,
}

impl Poisson<'_> {
    fn dlog(&self, z: Complex64) -> Option<Complex64> {
        if !(z.norm().is_finite() && z.norm() > 0.0) {
            return None;
        }
        let zs = Scaled::new(z);
        let vals: Vec<(Scaled<f64>, Scaled<f64>)> =
            self.c.iter().map(|t| eval_with_euler(t, zs)).collect();
        let (lc, lc_euler) = *vals.last()?;
        if lc.is_zero() {
            return None;
        }
        let top = vals
            .iter()
            .map(|v| v.0)
            .filter(|v| !v.is_zero())
            .max_by(|a, b| a.ln_abs().total_cmp(&b.ln_abs()))?;
        let terms: Vec<(u32, Complex64)> = vals
            .iter()
            .enumerate()
            .map(|(k, v)| (k as u32, v.0.div(top)))
            .collect();
        let roots = roots_of_terms(&terms, &self.cfg).ok()?;
        let mut sum = lc_euler.div(lc) / z * self.db as f64;
        for (w, mult, _) in roots {
            let p = [z, w];
            let (_, ga, _) = self.a.value_and_gradient_scaled(&p);
            let (vb, gb, _) = self.b.value_and_gradient_scaled(&p);
            // Implicit derivative of the root w_k(z1).
            let dw = -ga[0] / ga[1];
            sum += (gb[0] + gb[1] * dw) / vb * mult as f64;
        }
        Some(sum)
    }
}

/// Fraction of points on `|z| = e^s` where the scaled Sylvester matrix is singular to
/// working precision.
fn singular_fraction(syl: &Sylvester<f64>, s: f64) -> f64 {
    let singular = circle(s)
        .filter(|&z| {
            syl.eval(z).is_none_or(|e| {
                e.min_pivot < 1e3 * f64::EPSILON || !e.dlog.re.is_finite()
            })
        })
        .count();
    singular as f64 / ANGLES as f64
}

fn circle(s: f64) -> impl Iterator<Item = Complex64> {
    (0..ANGLES).map(move |q| {
        Complex64::from_polar(
            s.exp(),
            std::f64::consts::TAU * (q as f64 + 0.317) / ANGLES as f64,
        )
    })
}

/// Mean of `Re(z R'/R)` on `|z| = e^s`: the number of resultant roots inside.
fn winding(dlog: &dyn Fn(Complex64) -> Option<Complex64>, s: f64) -> f64 {
    let (mut sum, mut used) = (0.0, 0);
    for z in circle(s) {
        if let Some(w) = dlog(z).map(|d| d * z).filter(|w| w.re.is_finite()) {
            sum += w.re;
            used += 1;
        }
    }
    if used == 0 {
        f64::NAN
    } else {
        sum / used as f64
    }
}

/// Circles at `|z| = e^s` for integer `|s| <= 40`, then geometrically wider shells up
/// to where `z^40` is still representable in scaled form with `f64` roots.
const S_RANGE: f64 = 40.0;
const S_MAX: f64 = 640.0;
const ANGLES: usize = 24;

/// First pair of trusted circles whose counts differ by exactly `expected`, as
/// `(lower index, upper index, count at the lower)`.
fn bracket(counts: &[f64], expected: usize) -> Option<(usize, usize, i64)> {
    let trusted: Vec<(usize, i64)> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c.is_finite() && (c - c.round()).abs() < 0.05 && c > -0.5)
        .map(|(i, c)| (i, c.round() as i64))
        .collect();
    trusted.iter().find_map(|&(j, hi)| {
        trusted
            .iter()
            .rev()
            .find(|&&(i, lo)| i < j && hi - lo == expected as i64)
            .map(|&(i, lo)| (i, j, lo))
    })
}

/// Order at the origin and starting points for the roots in the punctured plane.
///
/// Circle counts are trusted only where they are near integers, so the bracketing
/// circles are the first pair of trusted circles whose counts differ by exactly the
/// expected root count. Zeros of skewed sparse systems can sit far from the unit
/// circle, so the range grows until such a pair exists.
fn starting_points(
    dlog: &dyn Fn(Complex64) -> Option<Complex64>,
    expected: usize,
) -> Result<(i64, Vec<Complex64>)> {
    let mut grid: Vec<f64> = (-40..=40).map(f64::from).collect();
    let mut counts: Vec<f64> = grid.iter().map(|&s| winding(dlog, s)).collect();
    let mut reach = S_RANGE;
    let found = loop {
        if let Some(b) = bracket(&counts, expected) {
            break b;
        }
        if reach >= S_MAX {
            return Err(Error::Solver(format!(
                "no pair of circles encloses the {expected} expected resultant roots"
            )));
        }
        let shell: Vec<f64> = (1..=20).map(|i| reach * (1.0 + i as f64 / 20.0)).collect();
        let (lo, hi): (Vec<f64>, Vec<f64>) = (shell.iter().rev().map(|s| -s).collect(), shell);
        let (clo, chi): (Vec<f64>, Vec<f64>) = (
            lo.iter().map(|&s| winding(dlog, s)).collect(),
            hi.iter().map(|&s| winding(dlog, s)).collect(),
        );
        grid = [lo, grid, hi].concat();
        counts = [clo, counts, chi].concat();
        reach *= 2.0;
    };
    let (lo_idx, hi_idx, a) = found;
    // Monotone envelope of the counting function between the brackets, then quantiles.
    let mut env: Vec<f64> = counts[lo_idx..=hi_idx]
        .iter()
        .map(|c| {
            if c.is_finite() {
                (c - a as f64).clamp(0.0, expected as f64)
            } else {
                0.0
            }
        })
        .collect();
    let last = env.len() - 1;
    env[0] = 0.0;
    env[last] = expected as f64;
    for i in 1..env.len() {
        env[i] = env[i].max(env[i - 1]);
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(expected);
    for q in 0..expected {
        let t = q as f64 + 0.5;
        let i = env.iter().position(|&v| v >= t).unwrap_or(last).max(1);
        let (c0, c1) = (env[i - 1], env[i]);
        let frac = if c1 > c0 {
            ((t - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        let (s0, s1) = (grid[lo_idx + i - 1], grid[lo_idx + i]);
        out.push(Complex64::from_polar(
            (s0 + frac * (s1 - s0)).exp(),
            golden * q as f64 + 0.25,
        ));
    }
    Ok((a, out))
}

/// `max_j |P_j(z)| / sum |terms of P_j|`.
fn system_residual(ps: &[&SparsePoly; 2], z: &[Complex64]) -> f64 {
    ps.iter()
        .map(|p| p.relative_residual(z))
        .fold(0.0, f64::max)
}

/// Newton steps on the square system, kept only while the residual decreases.
pub fn newton_polish_2d(
    ps: &[&SparsePoly; 2],
    z: [Complex64; 2],
    steps: usize,
) -> ([Complex64; 2], f64) {
    let mut z = z;
    let mut res = system_residual(ps, &z);
    for _ in 0..steps {
        let (v1, g1, _) = ps[0].value_and_gradient_scaled(&z);
        let (v2, g2, _) = ps[1].value_and_gradient_scaled(&z);
        let det = g1[0] * g2[1] - g1[1] * g2[0];
        if det.norm() == 0.0 || !det.re.is_finite() {
            break;
        }
        let dz1 = (v1 * g2[1] - v2 * g1[1]) / det;
        let dz2 = (g1[0] * v2 - g2[0] * v1) / det;
        let cand = [z[0] - dz1, z[1] - dz2];
        let r = system_residual(ps, &cand);
        if !(r < res) {
            break;
        }
        z = cand;
        res = r;
    }
    (z, res)
}

/// Roots in `z2` of `sum_k C_k(z1) z2^k` at a fixed `z1`.
fn z2_roots(c: &[Vec<(u32, Complex64)>], z1: Complex64, cfg: &SolverConfig) -> Vec<Complex64> {
    let zs = Scaled::new(z1);
    let vals: Vec<Scaled<f64>> = c.iter().map(|t| eval_with_euler(t, zs).0).collect();
    let Some(top) = vals
        .iter()
        .filter(|v| !v.is_zero())
        .max_by(|a, b| a.ln_abs().total_cmp(&b.ln_abs()))
        .copied()
    else {
        return Vec::new();
    };
    let terms: Vec<(u32, Complex64)> = vals
        .iter()
        .enumerate()
        .map(|(k, v)| (k as u32, v.div(top)))
        .collect();
    match roots_of_terms(&terms, cfg) {
        Ok(r) => r.into_iter().map(|r| r.0).collect(),
        Err(_) => Vec::new(),
    }
}

fn duplicated(z: &[[Complex64; 2]], tol: f64) -> bool {
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= tol * a.norm().max(b.norm());
    (0..z.len())
        .any(|i| (i + 1..z.len()).any(|j| close(z[i][0], z[j][0]) && close(z[i][1], z[j][1])))
}

/// Restarts iterates that converged onto another iterate, deflating all the others.
fn separate_duplicates<T: Real, F>(newton: &F, z: &mut [Complex<T>], max_iter: usize, step_tol: f64)
where
    F: Fn(Complex<T>) -> (Complex<T>, f64),
{
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    for round in 1..=4 {
        let z64: Vec<Complex64> = z.iter().map(|&v| uncast(v)).collect();
        let dups: Vec<usize> = (0..z.len())
            .filter(|&k| (0..k).any(|j| (z64[k] - z64[j]).norm() <= 1e-9 * z64[k].norm()))
            .collect();
        if dups.is_empty() {
            return;
        }
        for k in dups {
            let mut zk = z[k]
                * cast::<T>(Complex64::from_polar(
                    1.0 + 0.2 * round as f64,
                    golden * round as f64,
                ));
            for _ in 0..max_iter {
                let (ratio, _) = newton(zk);
                let (r64, zk64) = (uncast(ratio), uncast(zk));
                if !(r64.re.is_finite() && r64.im.is_finite()) {
                    break;
                }
                let s: Complex64 = (0..z.len())
                    .filter(|&j| j != k)
                    .map(|j| (zk64 - uncast(z[j])).inv())
                    .sum();
                let w = ratio * cast::<T>((Complex64::new(1.0, 0.0) - r64 * s).inv());
                zk = zk - w;
                if uncast(w).norm() <= step_tol * uncast(zk).norm() {
                    break;
                }
            }
            z[k] = zk;
        }
    }
}

/// Aberth iteration on `R(z1) / z1^a` followed by completion and polishing.
fn solve_resultant<T: Real>(
    ps: &[&SparsePoly; 2],
    c: &[Vec<Vec<(u32, Complex64)>>; 2],
    expected: usize,
    cfg: &SolverConfig,
    dlog: impl Fn(Complex<T>) -> Option<Complex<T>>,
) -> Result<Vec<([Complex64; 2], f64)>> {
    let count = |z: Complex64| dlog(cast(z)).map(uncast);
    let (a, start) = starting_points(&count, expected)?;
    let at = T::of(a as f64);
    let newton = |z: Complex<T>| -> (Complex<T>, f64) {
        match dlog(z) {
            Some(d) => (
                Complex::new(T::one(), T::zero()) / (d - Complex::new(at, T::zero()) / z),
                f64::INFINITY,
            ),
            None => (Complex::new(T::nan(), T::zero()), f64::INFINITY),
        }
    };
    let step_tol = (1e3 * T::roundoff()).max(1e-28);
    let (mut z1s, _) = aberth(&newton, &start, cfg.max_iter, 0.0, step_tol);
    separate_duplicates(&newton, &mut z1s, cfg.max_iter, step_tol);
    // Complete with z2 from the equation of lower z2-degree, checked against the other.
    // Equal z1 values take distinct z2 candidates.
    let by = if c[0].len() <= c[1].len() { 0 } else { 1 };
    let mut out: Vec<([Complex64; 2], f64)> = Vec::with_capacity(expected);
    for z1 in z1s {
        let z1 = uncast(z1);
        let mut cands: Vec<([Complex64; 2], f64)> = z2_roots(&c[by], z1, cfg)
            .into_iter()
            .map(|z2| ([z1, z2], system_residual(ps, &[z1, z2])))
            .collect();
        cands.sort_by(|a, b| a.1.total_cmp(&b.1));
        let taken = |z: &[Complex64; 2]| out.iter().any(|(o, _)| duplicated(&[*o, *z], 1e-6));
        let Some(&(z, _)) = cands.iter().find(|c| !taken(&c.0)).or(cands.first()) else {
            return Err(Error::Solver(
                "no second coordinate for a resultant root".into(),
            ));
        };
        out.push(newton_polish_2d(ps, z, 6));
    }
    Ok(out)
}

/// Product-formula elimination of `z2`, or of `z1` when `swap` is set.
fn solve_product(
    ps: &[&SparsePoly; 2],
    stripped: &[Vec<(Vec<u32>, Complex64)>; 2],
    expected: usize,
    cfg: &SolverConfig,
    swap: bool,
) -> Result<Vec<([Complex64; 2], f64)>> {
    let flip = |t: &[(Vec<u32>, Complex64)]| -> Vec<(Vec<u32>, Complex64)> {
        t.iter()
            .map(|(e, c)| (if swap { vec![e[1], e[0]] } else { e.clone() }, *c))
            .collect()
    };
    let st = [flip(&stripped[0]), flip(&stripped[1])];
    let qs = [
        SparsePoly::new(2, flip(ps[0].terms()))?,
        SparsePoly::new(2, flip(ps[1].terms()))?,
    ];
    let c = [by_z2_power(&st[0]), by_z2_power(&st[1])];
    let by = if c[0].len() <= c[1].len() { 0 } else { 1 };
    let poisson = Poisson {
        c: &c[by],
        a: SparsePoly::new(2, st[by].clone())?,
        b: SparsePoly::new(2, st[1 - by].clone())?,
        db: c[1 - by].len() - 1,
        cfg: *cfg,
    };
    let sols = solve_resultant::<f64>(&[&qs[0], &qs[1]], &c, expected, cfg, |z| poisson.dlog(z))?;
    Ok(if swap {
        sols.into_iter().map(|(z, r)| ([z[1], z[0]], r)).collect()
    } else {
        sols
    })
}

fn verified(sols: &[([Complex64; 2], f64)], expected: usize, cfg: &SolverConfig) -> bool {
    sols.len() == expected
        && sols.iter().all(|(z, r)| {
            *r <= cfg.residual_tol && z.iter().all(|c| c.norm() > 0.0 && c.norm().is_finite())
        })
        && !duplicated(&sols.iter().map(|s| s.0).collect::<Vec<_>>(), cfg.merge_tol)
}

/// Solves when one equation involves a single variable.
fn solve_triangular(
    ps: &[&SparsePoly; 2],
    stripped: &[Vec<(Vec<u32>, Complex64)>; 2],
    cfg: &SolverConfig,
) -> Option<Result<Vec<([Complex64; 2], f64)>>> {
    for (i, var) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
        let other_var = 1 - var;
        if stripped[i].iter().any(|t| t.0[other_var] != 0) {
            continue;
        }
        let uni: Vec<(u32, Complex64)> = stripped[i].iter().map(|t| (t.0[var], t.1)).collect();
        let run = || -> Result<Vec<([Complex64; 2], f64)>> {
            let mut out = Vec::new();
            for (x, _, _) in roots_of_terms(&uni, cfg)? {
                // Substitute into the other equation, leaving a polynomial in the other variable.
                let xs = Scaled::new(x);
                let mut by_power: std::collections::BTreeMap<u32, Scaled<f64>> = Default::default();
                for (e, cf) in &stripped[1 - i] {
                    let t = xs.powu(e[var]).scale(*cf);
                    let slot = by_power.entry(e[other_var]).or_insert_with(Scaled::zero);
                    *slot = slot.add(t);
                }
                let Some(top) = by_power
                    .values()
                    .max_by(|a, b| a.ln_abs().total_cmp(&b.ln_abs()))
                    .copied()
                else {
                    continue;
                };
                let terms: Vec<(u32, Complex64)> =
                    by_power.iter().map(|(&k, v)| (k, v.div(top))).collect();
                for (y, _, _) in roots_of_terms(&terms, cfg)? {
                    let z = if var == 0 { [x, y] } else { [y, x] };
                    out.push(newton_polish_2d(ps, z, 3));
                }
            }
            Ok(out)
        };
        return Some(run());
    }
    None
}

/// Zeros in the torus of a generic pair of sparse polynomials of degree at most 40.
pub fn roots_bivariate_resultant(
    p1: &SparsePoly,
    p2: &SparsePoly,
    cfg: &SolverConfig,
) -> Result<ZeroSet> {
    if p1.dim() != 2 || p2.dim() != 2 {
        return Err(Error::InvalidArgument(
            "bivariate solver needs two variables".into(),
        ));
    }
    if p1.is_zero() || p2.is_zero() {
        return Err(Error::DegenerateSystem("zero polynomial".into()));
    }
    let deg = |p: &SparsePoly| p.terms().iter().map(|t| t.0[0] + t.0[1]).max().unwrap_or(0);
    if deg(p1).max(deg(p2)) > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "degree exceeds {MAX_DEGREE}"
        )));
    }
    let ps = [p1, p2];
    let stripped = [strip_monomial(p1), strip_monomial(p2)];
    let supports = |t: &[(Vec<u32>, Complex64)]| t.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    let expected = bkk_count(&supports(&stripped[0]), &supports(&stripped[1])) as usize;
    let finish = |sols: Vec<([Complex64; 2], f64)>| -> Result<ZeroSet> {
        let zeros = sols
            .into_iter()
            .map(|(z, r)| Zero::new(z.to_vec(), 1, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(ZeroSet::new(0, zeros))
    };
    if expected == 0 {
        return Ok(ZeroSet::new(0, Vec::new()));
    }
    if let Some(sols) = solve_triangular(&ps, &stripped, cfg) {
        let sols = sols?;
        if verified(&sols, expected, cfg) {
            return finish(sols);
        }
        return Err(Error::Solver(format!(
            "found {} of {expected} zeros",
            sols.len()
        )));
    }
    let c = [by_z2_power(&stripped[0]), by_z2_power(&stripped[1])];
    let syl = Sylvester::<f64>::new(&c[0], &c[1]);
    // An identically vanishing resultant is singular everywhere, including near |z| = 1.
    if [-1.0, 0.0, 1.0]
        .iter()
        .all(|&s| singular_fraction(&syl, s) > 0.9)
    {
        return Err(Error::DegenerateSystem(
            "resultant vanishes identically".into(),
        ));
    }
    let n = c[0].len() + c[1].len() - 2;
    let mut last = String::new();
    let attempts: [&dyn Fn() -> Result<Vec<([Complex64; 2], f64)>>; 4] = [
        &|| solve_product(&ps, &stripped, expected, cfg, false),
        &|| solve_product(&ps, &stripped, expected, cfg, true),
        &|| solve_resultant::<f64>(&ps, &c, expected, cfg, |z| syl.eval(z).map(|e| e.dlog)),
        &|| {
            if n > MAX_EXTENDED_SYLVESTER {
                return Err(Error::Solver(format!(
                    "Sylvester size {n} too large for an extended precision retry"
                )));
            }
            let dd = Sylvester::<TwoFloat>::new(&c[0], &c[1]);
            solve_resultant::<TwoFloat>(&ps, &c, expected, cfg, |z| dd.eval(z).map(|e| e.dlog))
        },
    ];
    for attempt in attempts {
        match attempt() {
            Ok(sols) if verified(&sols, expected, cfg) => return finish(sols),
            Ok(sols) => {
                last = format!(
                    "{} candidate zeros of {expected} failed verification",
                    sols.len()
                )
            }
            Err(e) => last = e.to_string(),
        }
        log::debug!("bivariate attempt failed: {last}");
    }
    Err(Error::Solver(last))
}
