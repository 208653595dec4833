//! Monge-Ampere densities on uniform `rho` grids.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialField;

/// Clamp applied to slightly negative finite-difference determinants.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;

/// One axis of a uniform grid of cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, bins: usize) -> Result<Self> {
        if !(min < max) || bins == 0 || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad axis [{min}, {max}] with {bins} bins"
            )));
        }
        Ok(Self { min, max, bins })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.step()
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.min && x < self.max) {
            return None;
        }
        Some((((x - self.min) / self.step()) as usize).min(self.bins - 1))
    }
}

/// A box of cells; cell index is row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn uniform(m: usize, min: f64, max: f64, bins: usize) -> Result<Self> {
        Ok(Self {
            axes: vec![Axis::new(min, max, bins)?; m],
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (j, a) in self.axes.iter().enumerate().rev() {
            idx[j] = flat % a.bins;
            flat /= a.bins;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.bins + i)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.center(i))
            .collect()
    }

    /// Cell containing `rho`, if inside the box.
    pub fn cell_of(&self, rho: &[f64]) -> Option<usize> {
        let idx = rho
            .iter()
            .zip(&self.axes)
            .map(|(&x, a)| a.bin_of(x))
            .collect::<Option<Vec<_>>>()?;
        Some(self.flat_index(&idx))
    }

    /// Merge `factor` consecutive cells along every axis.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.axes.iter().any(|a| a.bins % factor != 0) {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen by {factor}"
            )));
        }
        Ok(Self {
            axes: self
                .axes
                .iter()
                .map(|a| Axis {
                    bins: a.bins / factor,
                    ..*a
                })
                .collect(),
        })
    }

    /// Whether `other` is this grid with cells merged by `factor`.
    fn coarsen_factor_to(&self, other: &GridSpec) -> Option<usize> {
        let first = (self.axes.first()?, other.axes.first()?);
        if first.1.bins == 0 || first.0.bins % first.1.bins != 0 {
            return None;
        }
        let factor = first.0.bins / first.1.bins;
        (self.coarsen(factor).ok()? == *other).then_some(factor)
    }
}

/// Cell masses accumulated from any source; `mass_per_cell[i] / cell_volume` is the density.
pub fn coarsen_masses(
    grid: &GridSpec,
    masses: &[f64],
    factor: usize,
) -> Result<(GridSpec, Vec<f64>)> {
    let coarse = grid.coarsen(factor)?;
    let mut out = vec![0.0; coarse.len()];
    for (flat, &v) in masses.iter().enumerate() {
        let idx: Vec<usize> = grid.multi_index(flat).iter().map(|i| i / factor).collect();
        out[coarse.flat_index(&idx)] += if v.is_finite() { v } else { 0.0 };
    }
    Ok((coarse, out))
}

/// A Monge-Ampere density sampled at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub grid: GridSpec,
    /// Density per unit `rho`-volume; `NaN` marks masked cells.
    pub values: Vec<f64>,
    pub total_mass: f64,
}

impl DensityGrid {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "value count differs from grid size".into(),
            ));
        }
        let vol = grid.cell_volume();
        let total_mass = values.iter().filter(|v| v.is_finite()).sum::<f64>() * vol;
        Ok(Self {
            grid,
            values,
            total_mass,
        })
    }

    /// Mass in each cell, masked cells contributing zero.
    pub fn masses(&self) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        self.values
            .iter()
            .map(|v| if v.is_finite() { v * vol } else { 0.0 })
            .collect()
    }

    pub fn masked_cells(&self) -> usize {
        self.values.iter().filter(|v| !v.is_finite()).count()
    }

    /// Resample onto a coarser grid that merges whole cells.
    pub fn coarsen_to(&self, target: &GridSpec) -> Result<Self> {
        if *target == self.grid {
            return Ok(self.clone());
        }
        let factor = self.grid.coarsen_factor_to(target).ok_or_else(|| {
            Error::InvalidArgument("target grid does not merge whole cells".into())
        })?;
        let (grid, masses) = coarsen_masses(&self.grid, &self.masses(), factor)?;
        let vol = grid.cell_volume();
        Self::new(grid, masses.into_iter().map(|m| m / vol).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_grid_csv(&self.grid, &self.values, out)
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (grid, values) = read_grid_csv(input)?;
        Self::new(grid, values)
    }
}

/// CSV with header `rho_1,...,rho_m,density`, one row per cell center.
pub fn write_grid_csv<W: Write>(
    grid: &GridSpec,
    values: &[f64],
    mut out: W,
) -> std::io::Result<()> {
    let header: Vec<String> = (1..=grid.dim()).map(|j| format!("rho_{j}")).collect();
    writeln!(out, "{},density", header.join(","))?;
    for (flat, v) in values.iter().enumerate() {
        for x in grid.center(flat) {
            write!(out, "{x:.16e},")?;
        }
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

pub fn read_grid_csv<R: BufRead>(input: R) -> Result<(GridSpec, Vec<f64>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty grid csv".into()))??;
    let m = header.split(',').count().saturating_sub(1);
    if m == 0 || !header.trim_end().ends_with("density") {
        return Err(Error::Parse(format!("bad grid csv header {header:?}")));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number in {line:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != m + 1 {
            return Err(Error::Parse(format!("row {line:?} has the wrong width")));
        }
        rows.push(row);
    }
    let mut axes = Vec::with_capacity(m);
    for j in 0..m {
        let mut coords: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        coords.sort_by(f64::total_cmp);
        coords.dedup();
        if coords.len() < 2 {
            return Err(Error::Parse("need at least two cells per axis".into()));
        }
        let bins = coords.len();
        let step = (coords[bins - 1] - coords[0]) / (bins - 1) as f64;
        axes.push(Axis::new(
            coords[0] - 0.5 * step,
            coords[bins - 1] + 0.5 * step,
            bins,
        )?);
    }
    let grid = GridSpec { axes };
    if rows.len() != grid.len() {
        return Err(Error::Parse("rows do not fill the grid".into()));
    }
    let mut values = vec![f64::NAN; grid.len()];
    for r in &rows {
        let idx: Vec<usize> = grid
            .axes
            .iter()
            .zip(r)
            .map(|(a, &x)| ((x - a.min) / a.step() - 0.5).round() as usize)
            .collect();
        values[grid.flat_index(&idx)] = r[m];
    }
    Ok((grid, values))
}

fn finalize(det: f64, m: usize) -> f64 {
    if !det.is_finite() {
        return f64::NAN;
    }
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    (factorial * det).max(-NEGATIVE_TOLERANCE)
}

fn hessian_det(values: &dyn Fn(&[isize]) -> f64, m: usize, h: f64) -> f64 {
    let at = |offs: &[isize]| values(offs);
    match m {
        1 => (at(&[1]) - 2.0 * at(&[0]) + at(&[-1])) / (h * h),
        2 => {
            let c = at(&[0, 0]);
            let fxx = (at(&[1, 0]) - 2.0 * c + at(&[-1, 0])) / (h * h);
            let fyy = (at(&[0, 1]) - 2.0 * c + at(&[0, -1])) / (h * h);
            let fxy = (at(&[1, 1]) - at(&[1, -1]) - at(&[-1, 1]) + at(&[-1, -1])) / (4.0 * h * h);
            fxx * fyy - fxy * fxy
        }
        _ => f64::NAN,
    }
}

/// `m! det D^2 Phi` at every cell center by central differences with step `h`.
///
/// The `m!` makes the full-spectrum Fubini-Study density integrate to one in every
/// dimension, matching zero counts divided by `N^m`. When `h` equals the cell width the
/// potential is evaluated once on the padded lattice of centers and shared between stencils.
pub fn ma_density(potential: &dyn PotentialField, grid: &GridSpec, h: f64) -> Result<DensityGrid> {
    let m = grid.dim();
    if m == 0 || m > 2 || potential.dim() != m {
        return Err(Error::InvalidArgument(
            "densities are supported for m = 1, 2 with matching potential".into(),
        ));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(
            "finite-difference step must be positive".into(),
        ));
    }
    let steps: Vec<f64> = grid.axes.iter().map(Axis::step).collect();
    let shared = steps.iter().all(|s| ((s - h) / h).abs() < 1e-9);
    let values: Vec<f64> = if shared {
        // Padded lattice with one extra center on each side.
        let padded = GridSpec {
            axes: grid
                .axes
                .iter()
                .map(|a| Axis {
                    min: a.min - h,
                    max: a.max + h,
                    bins: a.bins + 2,
                })
                .collect(),
        };
        let phi: Vec<f64> = (0..padded.len())
            .into_par_iter()
            .map(|i| potential.value(&padded.center(i)))
            .collect();
        (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let base: Vec<usize> = grid.multi_index(flat).iter().map(|i| i + 1).collect();
                let lookup = |offs: &[isize]| {
                    let idx: Vec<usize> = base
                        .iter()
                        .zip(offs)
                        .map(|(&b, &o)| (b as isize + o) as usize)
                        .collect();
                    phi[padded.flat_index(&idx)]
                };
                finalize(hessian_det(&lookup, m, h), m)
            })
            .collect()
    } else {
        (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let c = grid.center(flat);
                let eval = |offs: &[isize]| {
                    let x: Vec<f64> = c.iter().zip(offs).map(|(x, &o)| x + o as f64 * h).collect();
                    potential.value(&x)
                };
                finalize(hessian_det(&eval, m, h), m)
            })
            .collect()
    };
    DensityGrid::new(grid.clone(), values)
}

/// `m!` times the area of the image of each cell under the finite-difference gradient.
///
/// Gradients are central differences at cell corners with the cell width as step, and each
/// cell contributes the signed area of the quadrilateral spanned by its corner gradients.
/// The cell areas telescope, so the total mass is the area enclosed by the gradient image of
/// the box boundary regardless of how coarse the grid is. Intended for potentials that are
/// expensive to evaluate or only piecewise smooth; needs equal steps on both axes.
pub fn ma_density_geometric(
    potential: &dyn PotentialField,
    grid: &GridSpec,
) -> Result<DensityGrid> {
    let m = grid.dim();
    if m != 2 || potential.dim() != 2 {
        return Err(Error::InvalidArgument(
            "gradient-image densities need m = 2".into(),
        ));
    }
    let (ax, ay) = (grid.axes[0], grid.axes[1]);
    let h = ax.step();
    if ((ay.step() - h) / h).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "gradient-image densities need square cells".into(),
        ));
    }
    // Corner lattice padded by one node on each side.
    let (nx, ny) = (ax.bins + 3, ay.bins + 3);
    let node = |i: usize, j: usize| [ax.min + (i as f64 - 1.0) * h, ay.min + (j as f64 - 1.0) * h];
    let phi: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|k| potential.value(&node(k / ny, k % ny)))
        .collect();
    let at = |i: usize, j: usize| phi[i * ny + j];
    let grad = |i: usize, j: usize| {
        [
            (at(i + 1, j) - at(i - 1, j)) / (2.0 * h),
            (at(i, j + 1) - at(i, j - 1)) / (2.0 * h),
        ]
    };
    let values = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / ay.bins + 1, flat % ay.bins + 1);
            let quad = [
                grad(i, j),
                grad(i + 1, j),
                grad(i + 1, j + 1),
                grad(i, j + 1),
            ];
            let mut area = 0.0;
            for k in 0..4 {
                let (p, q) = (quad[k], quad[(k + 1) % 4]);
                area += p[0] * q[1] - p[1] * q[0];
            }
            finalize(0.5 * area / (h * h), 2)
        })
        .collect();
    DensityGrid::new(grid.clone(), values)
}

/// Largest pointwise change of the density when the step is halved.
pub fn richardson_gap(potential: &dyn PotentialField, grid: &GridSpec, h: f64) -> Result<f64> {
    let a = ma_density(potential, grid, h)?;
    let b = ma_density(potential, grid, 0.5 * h)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// `1/2 sum |a_i - b_i|` over cell masses.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `int |F_a - F_b|` for one-variable cell masses on a shared axis.
pub fn wasserstein1(axis: &Axis, a: &[f64], b: &[f64]) -> f64 {
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        fa += x;
        fb += y;
        acc += (fa - fb).abs();
    }
    acc * axis.step()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::averaged::AveragedDb;
    use crate::potential::legendre::{ma_corner_measure, DiscreteLegendre};
    use crate::potential::{FnField, FubiniStudyPotential, PotentialKind};

    #[test]
    fn fubini_study_density_in_one_variable() {
        let grid = GridSpec::uniform(1, -8.0, 8.0, 400).unwrap();
        let d = ma_density(&FubiniStudyPotential { dim: 1, p: 1.0 }, &grid, 1e-3).unwrap();
        for (i, v) in d.values.iter().enumerate() {
            let r = grid.center(i)[0];
            let want = r.exp() / (1.0 + r.exp()).powi(2);
            assert!((v - want).abs() < 1e-5, "rho={r}");
        }
        assert!((d.total_mass - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fubini_study_density_in_two_variables_has_unit_mass() {
        let fs = FubiniStudyPotential { dim: 2, p: 1.0 };
        let grid = GridSpec::uniform(2, -14.0, 14.0, 140).unwrap();
        let fine = ma_density(&fs, &grid, 1e-3).unwrap();
        assert!((fine.total_mass - 1.0).abs() < 1e-3, "{}", fine.total_mass);
        // Coarse steps bias the determinant but not the gradient-image area.
        let geo = ma_density_geometric(&fs, &grid).unwrap();
        assert!((geo.total_mass - 1.0).abs() < 1e-4, "{}", geo.total_mass);
        for (a, b) in geo.values.iter().zip(&fine.values) {
            assert!((a - b).abs() < 5e-3);
        }
    }

    #[test]
    fn geometric_density_of_pooled_potential_matches_hull_area() {
        use crate::potential::averaged::PooledAveraged;
        use crate::potential::symplectic::FnPotential;
        use rand::SeedableRng;
        // With u = 0 and f = 1 the pool is a point cloud and the potential is affine: no mass.
        let zero = FnPotential {
            dim: 2,
            scale: 1.0,
            label: "zero".into(),
            f: |_: &[f64]| 0.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pool = PooledAveraged::new(1, &zero, 50, &mut rng).unwrap();
        let grid = GridSpec::uniform(2, -40.0, 40.0, 40).unwrap();
        let d = ma_density_geometric(&pool, &grid).unwrap();
        assert!(d.total_mass.abs() < 1e-9);
    }

    #[test]
    fn affine_potential_has_no_mass() {
        let grid = GridSpec::uniform(1, -4.0, 4.0, 50).unwrap();
        let d = ma_density(&AveragedDb::new(1), &grid, 1e-3).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn averaged_density_mass_matches_order_statistics() {
        let grid = GridSpec::uniform(1, -20.0, 20.0, 400).unwrap();
        for f in [2usize, 3, 5] {
            let d = ma_density(&AveragedDb::new(f), &grid, 1e-3).unwrap();
            let want = (f as f64 - 1.0) / (f as f64 + 1.0);
            assert!(
                (d.total_mass - want).abs() < 0.01,
                "f={f}: {}",
                d.total_mass
            );
            assert!(d.values.iter().all(|&v| v >= -NEGATIVE_TOLERANCE));
        }
    }

    #[test]
    fn grid_density_of_corners_is_close_in_wasserstein() {
        let grid = GridSpec::uniform(1, -6.0, 6.0, 240).unwrap();
        let h = grid.axes[0].step();
        let dl = DiscreteLegendre::new(vec![vec![0.0], vec![0.5], vec![1.0]], 1.0).unwrap();
        let d = ma_density(&dl, &grid, h).unwrap();
        let mut atoms = vec![0.0; grid.len()];
        for c in ma_corner_measure(&[0.0, 0.5, 1.0], 1.0).unwrap() {
            atoms[grid.cell_of(&[c.rho]).unwrap()] += c.mass;
        }
        assert!(wasserstein1(&grid.axes[0], &d.masses(), &atoms) <= 5.0 * h);
        assert!((d.total_mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn masked_cells_are_excluded() {
        let grid = GridSpec::uniform(1, -1.0, 1.0, 4).unwrap();
        let field = FnField {
            dim: 1,
            kind: PotentialKind::FubiniStudy,
            f: |r: &[f64]| if r[0] > 0.4 { f64::NAN } else { r[0] * r[0] },
        };
        let d = ma_density(&field, &grid, 1e-3).unwrap();
        assert_eq!(d.masked_cells(), 1);
        assert!((d.total_mass - 2.0 * 1.5).abs() < 1e-6);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let grid = GridSpec {
            axes: vec![
                Axis::new(-2.0, 3.0, 7).unwrap(),
                Axis::new(-1.0, 1.0, 3).unwrap(),
            ],
        };
        let d = ma_density(&FubiniStudyPotential { dim: 2, p: 1.0 }, &grid, 1e-3).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("rho_1,rho_2,density\n"));
        let back = DensityGrid::read_csv(&buf[..]).unwrap();
        for (a, b) in d.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in d.grid.axes.iter().zip(&back.grid.axes) {
            assert_eq!(a.bins, b.bins);
            assert!((a.min - b.min).abs() < 1e-12 && (a.max - b.max).abs() < 1e-12);
        }
    }

    #[test]
    fn coarsening_preserves_mass() {
        let grid = GridSpec::uniform(1, -8.0, 8.0, 400).unwrap();
        let d = ma_density(&FubiniStudyPotential { dim: 1, p: 1.0 }, &grid, 1e-3).unwrap();
        let coarse = d
            .coarsen_to(&GridSpec::uniform(1, -8.0, 8.0, 40).unwrap())
            .unwrap();
        assert!((coarse.total_mass - d.total_mass).abs() < 1e-12);
        assert!(d
            .coarsen_to(&GridSpec::uniform(1, -8.0, 8.0, 32).unwrap())
            .is_err());
    }

    #[test]
    fn richardson_gap_is_small_for_smooth_potentials() {
        let grid = GridSpec::uniform(1, -5.0, 5.0, 40).unwrap();
        let gap = richardson_gap(&FubiniStudyPotential { dim: 1, p: 1.0 }, &grid, 1e-3).unwrap();
        assert!(gap < 1e-6);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
        let axis = Axis::new(0.0, 4.0, 4).unwrap();
        // Moving unit mass three cells costs three.
        assert!(
            (wasserstein1(&axis, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]) - 3.0).abs() < 1e-15
        );
    }
}
