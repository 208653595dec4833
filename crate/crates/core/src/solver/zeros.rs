//! Zero sets of single systems and empirical zero measures over many systems.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ensemble::{FewnomialSystem, LogPolarPoint};
use crate::error::{Error, Result};
use crate::potential::density::{read_grid_csv, write_grid_csv, GridSpec};

/// One zero with its multiplicity and normalized residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Zero {
    pub z: Vec<Complex64>,
    pub point: LogPolarPoint,
    pub multiplicity: u32,
    pub residual: f64,
}

impl Zero {
    pub fn new(z: Vec<Complex64>, multiplicity: u32, residual: f64) -> Result<Self> {
        let point = LogPolarPoint::from_complex(&z)?;
        Ok(Self {
            z,
            point,
            multiplicity,
            residual,
        })
    }
}

/// All zeros in the complex torus of one system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZeroSet {
    pub system_id: u64,
    pub zeros: Vec<Zero>,
    /// Largest normalized residual over zeros and equations.
    pub residual: f64,
}

impl ZeroSet {
    pub fn new(system_id: u64, zeros: Vec<Zero>) -> Self {
        let residual = zeros.iter().map(|z| z.residual).fold(0.0, f64::max);
        Self {
            system_id,
            zeros,
            residual,
        }
    }

    /// Zeros counted with multiplicity.
    pub fn count(&self) -> u64 {
        self.zeros.iter().map(|z| z.multiplicity as u64).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        self.zeros.first().map(|z| z.z.len())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let m = self.dim().unwrap_or(1);
        let mut head: Vec<String> = Vec::new();
        for j in 1..=m {
            head.push(format!("re_{j}"));
            head.push(format!("im_{j}"));
        }
        head.extend((1..=m).map(|j| format!("rho_{j}")));
        head.extend((1..=m).map(|j| format!("theta_{j}")));
        head.push("multiplicity".into());
        head.push("residual".into());
        writeln!(out, "{}", head.join(","))?;
        for z in &self.zeros {
            let mut row: Vec<String> = Vec::new();
            for c in &z.z {
                row.push(format!("{:.16e}", c.re));
                row.push(format!("{:.16e}", c.im));
            }
            row.extend(z.point.rho().iter().map(|v| format!("{v:.16e}")));
            row.extend(z.point.theta().iter().map(|v| format!("{v:.16e}")));
            row.push(z.multiplicity.to_string());
            row.push(format!("{:.6e}", z.residual));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, system_id: u64) -> Result<Self> {
        let mut lines = input.lines();
        let head = lines
            .next()
            .ok_or(Error::Parse("empty zero file".into()))??;
        let m = head.split(',').filter(|h| h.starts_with("rho_")).count();
        let mut zeros = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 * m + 2 {
                return Err(Error::Parse(format!("bad zero row {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
            let z = (0..m)
                .map(|j| Ok(Complex64::new(num(f[2 * j])?, num(f[2 * j + 1])?)))
                .collect::<Result<Vec<_>>>()?;
            let mult = f[4 * m]
                .parse()
                .map_err(|_| Error::Parse(format!("bad multiplicity in {line:?}")))?;
            zeros.push(Zero::new(z, mult, num(f[4 * m + 1])?)?);
        }
        Ok(Self::new(system_id, zeros))
    }
}

/// Histogram of zero `rho` coordinates, each zero weighted `1 / (N^m * systems)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub grid: GridSpec,
    /// Integer counts per cell, row-major.
    pub counts: Vec<u64>,
    /// Zeros falling outside the grid.
    pub outside: u64,
    pub systems: u64,
    pub failures: u64,
    pub degree: u32,
    /// Per-system normalized zero counts, for the mean and its standard error.
    pub normalized_counts: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(grid: GridSpec, degree: u32) -> Self {
        let len = grid.len();
        Self {
            grid,
            counts: vec![0; len],
            outside: 0,
            systems: 0,
            failures: 0,
            degree,
            normalized_counts: Vec::new(),
        }
    }

    fn norm(&self) -> f64 {
        (self.degree as f64).powi(self.grid.axes.len() as i32)
    }

    pub fn add(&mut self, zs: &ZeroSet) {
        for z in &zs.zeros {
            match self.grid.cell_of(z.point.rho()) {
                Some(i) => self.counts[i] += z.multiplicity as u64,
                None => self.outside += z.multiplicity as u64,
            }
        }
        self.systems += 1;
        self.normalized_counts.push(zs.count() as f64 / self.norm());
    }

    /// Commutative merge of two partial histograms.
    pub fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        self.systems += other.systems;
        self.failures += other.failures;
        self.normalized_counts.extend(other.normalized_counts);
        self
    }

    /// Mass per cell.
    pub fn masses(&self) -> Vec<f64> {
        let w = 1.0 / (self.norm() * self.systems.max(1) as f64);
        self.counts.iter().map(|&c| c as f64 * w).collect()
    }

    /// Density per cell: mass over cell volume.
    pub fn densities(&self) -> Vec<f64> {
        let v = self.grid.cell_volume();
        self.masses().into_iter().map(|m| m / v).collect()
    }

    /// Mass on the grid.
    pub fn grid_mass(&self) -> f64 {
        self.masses().iter().sum()
    }

    pub fn mean_count(&self) -> f64 {
        let n = self.normalized_counts.len().max(1) as f64;
        self.normalized_counts.iter().sum::<f64>() / n
    }

    pub fn count_std_error(&self) -> f64 {
        let n = self.normalized_counts.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let mean = self.mean_count();
        let var = self
            .normalized_counts
            .iter()
            .map(|c| (c - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        (var / n as f64).sqrt()
    }

    pub fn failure_rate(&self) -> f64 {
        let total = self.systems + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }

    /// Same schema as the theory density file.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid_csv(&self.grid, &self.densities(), out)
    }

    /// Densities and grid back from CSV.
    pub fn read_csv<R: BufRead>(input: R) -> Result<(GridSpec, Vec<f64>)> {
        read_grid_csv(input)
    }
}

/// Largest tolerated fraction of failed solves.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Solves every system in parallel and accumulates the histogram. Failed solves are
/// counted; more than 1% failures is an error.
pub fn empirical_zero_measure<F>(
    systems: &[FewnomialSystem],
    solver: F,
    grid: &GridSpec,
) -> Result<EmpiricalMeasure>
where
    F: Fn(usize, &FewnomialSystem) -> Result<ZeroSet> + Sync,
{
    let first = systems
        .first()
        .ok_or(Error::InvalidArgument("no systems".into()))?;
    let (m, n) = (first.dim(), first.degree);
    if grid.axes.len() != m || systems.iter().any(|s| s.dim() != m || s.degree != n) {
        return Err(Error::InvalidArgument(
            "systems and grid must share dimension and degree".into(),
        ));
    }
    let empty = || EmpiricalMeasure::new(grid.clone(), n);
    // Indexed collection keeps the merge order, and so the per-system list, deterministic.
    let results: Vec<Result<ZeroSet>> = systems
        .par_iter()
        .enumerate()
        .map(|(i, s)| solver(i, s))
        .collect();
    let mut acc = empty();
    for r in results {
        match r {
            Ok(zs) => acc.add(&zs),
            Err(e) => {
                log::warn!("solve failed: {e}");
                acc.failures += 1;
            }
        }
    }
    if acc.failure_rate() > MAX_FAILURE_RATE {
        return Err(Error::Solver(format!(
            "failure rate {:.3} exceeds {MAX_FAILURE_RATE} ({} of {})",
            acc.failure_rate(),
            acc.failures,
            acc.failures + acc.systems
        )));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::density::Axis;

    fn zs(points: &[(f64, f64)]) -> ZeroSet {
        let zeros = points
            .iter()
            .map(|&(r, t)| {
                Zero::new(vec![Complex64::from_polar((r / 2.0).exp(), t)], 1, 1e-14).unwrap()
            })
            .collect();
        ZeroSet::new(0, zeros)
    }

    #[test]
    fn csv_round_trip() {
        let a = zs(&[(0.5, 1.0), (-2.0, -0.3)]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("re_1,im_1,rho_1,theta_1,multiplicity,residual\n"));
        let b = ZeroSet::read_csv(&buf[..], 0).unwrap();
        assert_eq!(b.count(), 2);
        for (x, y) in a.zeros.iter().zip(&b.zeros) {
            assert_eq!(x.z, y.z);
        }
    }

    #[test]
    fn histogram_normalization() {
        let grid = GridSpec {
            axes: vec![Axis {
                min: -1.0,
                max: 1.0,
                bins: 4,
            }],
        };
        let mut e = EmpiricalMeasure::new(grid, 2);
        e.add(&zs(&[(0.1, 0.0), (0.2, 0.0), (5.0, 0.0)]));
        e.add(&zs(&[(-0.9, 0.0)]));
        assert_eq!(e.counts, vec![1, 0, 2, 0]);
        assert_eq!(e.outside, 1);
        assert!((e.grid_mass() - 0.75).abs() < 1e-15);
        assert!((e.mean_count() - 1.0).abs() < 1e-15);
        let merged = e.clone().merge(e.clone());
        assert_eq!(merged.systems, 4);
        assert!((merged.grid_mass() - e.grid_mass()).abs() < 1e-15);
    }
}
