//! Discrete Legendre transforms of the entropy and their corner measures.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lattice::Spectrum;
use crate::potential::symplectic::{FubiniStudy, SymplecticPotential};
use crate::potential::{PotentialField, PotentialKind};

fn check_in_simplex(points: &[Vec<f64>], p: f64) -> Result<usize> {
    let m = points.first().ok_or(Error::EmptySpectrum)?.len();
    for l in points {
        let sum: f64 = l.iter().sum();
        if l.len() != m || l.iter().any(|&x| x < 0.0) || sum > p * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "point {l:?} is outside {p} * Sigma"
            )));
        }
    }
    Ok(m)
}

/// `max_{lambda in S} [<rho, lambda> - sum_{j=0}^m lambda_j ln lambda_j]` with `lambda_0 = p - |lambda|`.
pub fn discrete_legendre(points: &[Vec<f64>], p: f64, rho: &[f64]) -> Result<f64> {
    Ok(DiscreteLegendre::new(points.to_vec(), p)?.value(rho))
}

/// The max of finitely many affine functions `<rho, lambda> - u(lambda)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLegendre {
    slopes: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    p: f64,
}

impl DiscreteLegendre {
    /// Entropy intercepts on `p * Sigma`.
    pub fn new(points: Vec<Vec<f64>>, p: f64) -> Result<Self> {
        let m = check_in_simplex(&points, p)?;
        Self::with_potential(points, &FubiniStudy::with_scale(m, p))
    }

    /// Lattice points of a spectrum of degree `d`, viewed inside `d * Sigma`.
    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        Self::new(s.real_points(1.0), s.degree() as f64)
    }

    /// Intercepts `-u(lambda)` for an arbitrary symplectic potential.
    pub fn with_potential(points: Vec<Vec<f64>>, u: &dyn SymplecticPotential) -> Result<Self> {
        let p = u.scale();
        check_in_simplex(&points, p)?;
        let intercepts = points.iter().map(|l| -u.value(l)).collect();
        Ok(Self {
            slopes: points,
            intercepts,
            p,
        })
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }
}

impl PotentialField for DiscreteLegendre {
    fn dim(&self) -> usize {
        self.slopes[0].len()
    }

    fn value(&self, rho: &[f64]) -> f64 {
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(l, b)| l.iter().zip(rho).map(|(l, r)| l * r).sum::<f64>() + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn kind(&self) -> PotentialKind {
        PotentialKind::DiscreteLegendre { p: self.p }
    }
}

/// An atom of the Monge-Ampere measure of a piecewise-linear potential in one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub rho: f64,
    pub mass: f64,
}

/// Breakpoints of the upper envelope of lines `slope * rho + intercept`, with the
/// slope jump at each as its mass.
pub fn envelope_corners(slopes: &[f64], intercepts: &[f64]) -> Vec<Corner> {
    let mut lines: Vec<(f64, f64)> = slopes
        .iter()
        .copied()
        .zip(intercepts.iter().copied())
        .collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    lines.dedup_by(|later, earlier| later.0 == earlier.0);
    // Hull of lines, increasing slope; a line is dropped when it never strictly wins.
    let mut hull: Vec<(f64, f64)> = Vec::new();
    let cross = |a: (f64, f64), b: (f64, f64)| (a.1 - b.1) / (b.0 - a.0);
    for line in lines {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(a, line) <= cross(a, b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(line);
    }
    hull.windows(2)
        .map(|w| Corner {
            rho: cross(w[0], w[1]),
            mass: w[1].0 - w[0].0,
        })
        .collect()
}

/// Atoms of the Monge-Ampere measure of the entropy transform of `S` in `p * Sigma`, `m = 1`.
pub fn ma_corner_measure(points: &[f64], p: f64) -> Result<Vec<Corner>> {
    let pts: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
    let dl = DiscreteLegendre::new(pts, p)?;
    let slopes: Vec<f64> = dl.slopes.iter().map(|s| s[0]).collect();
    Ok(envelope_corners(&slopes, &dl.intercepts))
}

pub fn write_corners_csv<W: Write>(corners: &[Corner], mut out: W) -> std::io::Result<()> {
    writeln!(out, "rho_star,mass")?;
    for c in corners {
        writeln!(out, "{:.16e},{:.16e}", c.rho, c.mass)?;
    }
    Ok(())
}

pub fn read_corners_csv<R: BufRead>(input: R) -> Result<Vec<Corner>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',').map(|t| t.trim().parse::<f64>());
        match (it.next(), it.next()) {
            (Some(Ok(rho)), Some(Ok(mass))) => out.push(Corner { rho, mass }),
            _ => return Err(Error::Parse(format!("bad corner row {line:?}"))),
        }
    }
    Ok(out)
}
