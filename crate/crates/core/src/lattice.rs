//! Lattice points, spectra and rational Newton polytopes.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};

type Q = Ratio<i128>;

/// An exponent multi-index `alpha` with `|alpha| <= degree`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    coords: Vec<u32>,
    degree: u32,
}

impl LatticePoint {
    pub fn new(coords: Vec<u32>, degree: u32) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "lattice point must have m >= 1".into(),
            ));
        }
        let norm: u64 = coords.iter().map(|&c| c as u64).sum();
        if norm > degree as u64 {
            return Err(Error::Domain {
                norm,
                degree: degree as u64,
            });
        }
        Ok(Self { coords, degree })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The ambient degree `N`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn norm1(&self) -> u32 {
        self.coords.iter().sum()
    }

    /// Homogeneous coordinates `(N - |alpha|, alpha_1, ..., alpha_m)`.
    pub fn homogeneous(&self) -> Vec<u32> {
        let mut h = Vec::with_capacity(self.coords.len() + 1);
        h.push(self.degree - self.norm1());
        h.extend_from_slice(&self.coords);
        h
    }

    /// Exponents as reals.
    pub fn to_real(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| c as f64).collect()
    }

    fn scaled(&self, factor: u32) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| c * factor).collect(),
            degree: self.degree * factor,
        }
    }
}

/// A convex polytope `Delta` inside `p * Sigma`, given by rational vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolytope {
    vertices: Vec<Vec<Ratio<i64>>>,
    scale: u32,
    /// Half-spaces `normal . x <= offset`.
    facets: Vec<(Vec<Q>, Q)>,
}

impl NewtonPolytope {
    pub fn new(vertices: Vec<Vec<Ratio<i64>>>, scale: u32) -> Result<Self> {
        let m = vertices
            .first()
            .map(|v| v.len())
            .ok_or(Error::DegeneratePolytope)?;
        if m == 0 || m > 3 || vertices.iter().any(|v| v.len() != m) {
            return Err(Error::InvalidArgument(
                "polytope vertices must share a dimension 1..=3".into(),
            ));
        }
        let p = Ratio::from_integer(scale as i64);
        for v in &vertices {
            let sum: Ratio<i64> = v.iter().cloned().sum();
            if v.iter().any(|c| c.is_negative()) || sum > p {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v:?} lies outside {scale}*Sigma"
                )));
            }
        }
        let pts: Vec<Vec<Q>> = vertices
            .iter()
            .map(|v| {
                v.iter()
                    .map(|c| Q::new(*c.numer() as i128, *c.denom() as i128))
                    .collect()
            })
            .collect();
        let facets = facets(&pts, m)?;
        Ok(Self {
            vertices,
            scale,
            facets,
        })
    }

    /// The polytope `p * Sigma` itself.
    pub fn simplex(m: usize, scale: u32) -> Result<Self> {
        let mut verts = vec![vec![Ratio::zero(); m]];
        for j in 0..m {
            let mut v = vec![Ratio::zero(); m];
            v[j] = Ratio::from_integer(scale as i64);
            verts.push(v);
        }
        Self::new(verts, scale)
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn vertices(&self) -> &[Vec<Ratio<i64>>] {
        &self.vertices
    }

    /// Exact test of `alpha / n in Delta`.
    pub fn contains_dilated(&self, alpha: &[u32], n: u32) -> bool {
        let n = Q::from_integer(n as i128);
        self.facets.iter().all(|(normal, offset)| {
            let lhs: Q = normal
                .iter()
                .zip(alpha)
                .map(|(a, &x)| a * Q::from_integer(x as i128))
                .sum();
            lhs <= offset * n
        })
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Facet half-spaces by brute force over vertex subsets; fine for the handful of
/// vertices a user polytope carries.
fn facets(pts: &[Vec<Q>], m: usize) -> Result<Vec<(Vec<Q>, Q)>> {
    let mut out: Vec<(Vec<Q>, Q)> = Vec::new();
    let mut push = |normal: Vec<Q>, base: &[Q]| {
        if normal.iter().all(|c| c.is_zero()) {
            return;
        }
        let offset = dot(&normal, base);
        let sides: Vec<Q> = pts.iter().map(|p| dot(&normal, p) - offset).collect();
        let (neg, pos) = (
            sides.iter().any(|s| s.is_negative()),
            sides.iter().any(|s| s.is_positive()),
        );
        let (normal, offset) = match (neg, pos) {
            (true, false) => (normal, offset),
            (false, true) => (normal.iter().map(|c| -c).collect(), -offset),
            _ => return,
        };
        if !out
            .iter()
            .any(|(n, o)| proportional(n, o, &normal, &offset))
        {
            out.push((normal, offset));
        }
    };
    match m {
        1 => {
            for p in pts {
                push(vec![Q::one()], p);
            }
        }
        2 => {
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let d = sub(&pts[j], &pts[i]);
                    push(vec![-d[1], d[0]], &pts[i]);
                }
            }
        }
        _ => {
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    for k in j + 1..pts.len() {
                        let a = sub(&pts[j], &pts[i]);
                        let b = sub(&pts[k], &pts[i]);
                        let n = vec![
                            a[1] * b[2] - a[2] * b[1],
                            a[2] * b[0] - a[0] * b[2],
                            a[0] * b[1] - a[1] * b[0],
                        ];
                        push(n, &pts[i]);
                    }
                }
            }
        }
    }
    // A full-dimensional polytope is bounded by at least m + 1 facets.
    if out.len() < m + 1 {
        return Err(Error::DegeneratePolytope);
    }
    Ok(out)
}

fn proportional(n1: &[Q], o1: &Q, n2: &[Q], o2: &Q) -> bool {
    // Both normals point outward, so equality up to a positive factor suffices.
    let k = n1
        .iter()
        .zip(n2)
        .find(|(a, _)| !a.is_zero())
        .map(|(a, b)| b / a);
    match k {
        Some(k) if k.is_positive() => n1.iter().zip(n2).all(|(a, b)| a * k == *b) && o1 * k == *o2,
        _ => false,
    }
}

/// Which lattice region a spectrum was drawn from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Simplex,
    Polytope(NewtonPolytope),
}

/// A sorted set of distinct lattice points of common degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    points: Vec<LatticePoint>,
    degree: u32,
    region: Region,
}

impl Spectrum {
    pub fn new(mut points: Vec<LatticePoint>, degree: u32, region: Region) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        let m = points[0].dim();
        for p in &points {
            if p.dim() != m || p.degree != degree {
                return Err(Error::InvalidArgument(
                    "spectrum points must share dimension and degree".into(),
                ));
            }
        }
        points.sort();
        points.dedup();
        Ok(Self {
            points,
            degree,
            region,
        })
    }

    /// Convenience constructor from raw exponent vectors in `degree * Sigma`.
    pub fn from_exponents(exps: &[Vec<u32>], degree: u32) -> Result<Self> {
        let pts = exps
            .iter()
            .map(|e| LatticePoint::new(e.clone(), degree))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, degree, Region::Simplex)
    }

    /// The full lattice `N Sigma` as a spectrum.
    pub fn full(n: u32, m: usize) -> Result<Self> {
        Self::new(enumerate_lattice(n, m, None)?, n, Region::Simplex)
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// The fewnomial number `f`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Points as real vectors, divided by `divisor` (use `degree` to land in `Sigma`).
    pub fn real_points(&self, divisor: f64) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.coords.iter().map(|&c| c as f64 / divisor).collect())
            .collect()
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.degree, self.dim(), self.len())?;
        for p in &self.points {
            let coords: Vec<String> = p.coords.iter().map(u32::to_string).collect();
            write!(f, "; {}", coords.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for Spectrum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("{msg} in spectrum record {s:?}"));
        let mut parts = s.trim().split(';');
        let head: Vec<usize> = parts
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header integer")))
            .collect::<Result<_>>()?;
        let [n, m, f] = head[..] else {
            return Err(bad("header must be `N m f`"));
        };
        let mut pts = Vec::with_capacity(f);
        for part in parts {
            let coords: Vec<u32> = part
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| bad("bad exponent")))
                .collect::<Result<_>>()?;
            if coords.len() != m {
                return Err(bad("multi-index length differs from m"));
            }
            pts.push(LatticePoint::new(coords, n as u32)?);
        }
        let spec = Spectrum::new(pts, n as u32, Region::Simplex)?;
        if spec.len() != f {
            return Err(bad("point count differs from f"));
        }
        Ok(spec)
    }
}

/// All lattice points of `N Sigma`, or of `N Delta` when a polytope is given, in
/// lexicographic order. Polytope points carry ambient degree `N p`.
pub fn enumerate_lattice(
    n: u32,
    m: usize,
    polytope: Option<&NewtonPolytope>,
) -> Result<Vec<LatticePoint>> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let (bound, degree) = match polytope {
        None => (n, n),
        Some(p) => {
            if p.dim() != m {
                return Err(Error::InvalidArgument(
                    "polytope dimension differs from m".into(),
                ));
            }
            (n * p.scale(), n * p.scale())
        }
    };
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    fill(&mut cur, 0, bound, &mut |alpha| {
        if polytope.is_none_or(|p| p.contains_dilated(alpha, n)) {
            out.push(LatticePoint {
                coords: alpha.to_vec(),
                degree,
            });
        }
    });
    if out.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    Ok(out)
}

fn fill(cur: &mut [u32], j: usize, remaining: u32, emit: &mut impl FnMut(&[u32])) {
    if j == cur.len() {
        emit(cur);
        return;
    }
    for v in 0..=remaining {
        cur[j] = v;
        fill(cur, j + 1, remaining - v, emit);
    }
    cur[j] = 0;
}

/// `binom(n, k)` as a big integer.
pub fn binomial(n: &BigUint, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    let kb = BigUint::from(k);
    if &kb > n {
        return BigUint::zero();
    }
    for i in 0..k {
        acc = acc * (n - BigUint::from(i)) / BigUint::from(i + 1);
    }
    acc
}

/// Number of `f`-point spectra in `N Sigma`: `binom(binom(N+m, m), f)`.
pub fn count_spectra(n: u32, m: usize, f: u64) -> BigUint {
    let lattice = binomial(&BigUint::from(n as u64 + m as u64), m as u64);
    binomial(&lattice, f)
}

/// A cached lattice from which spectra are drawn repeatedly.
#[derive(Clone, Debug)]
pub struct Lattice {
    points: Vec<LatticePoint>,
    degree: u32,
    region: Region,
}

impl Lattice {
    pub fn new(n: u32, m: usize, polytope: Option<&NewtonPolytope>) -> Result<Self> {
        let points = enumerate_lattice(n, m, polytope)?;
        let degree = points[0].degree;
        let region = polytope.map_or(Region::Simplex, |p| Region::Polytope(p.clone()));
        Ok(Self {
            points,
            degree,
            region,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    /// A uniformly random `f`-subset, by a sparse partial Fisher-Yates shuffle.
    pub fn sample<R: Rng + ?Sized>(&self, f: usize, rng: &mut R) -> Result<Spectrum> {
        let len = self.points.len();
        if f == 0 || f > len {
            return Err(Error::SpectrumTooLarge {
                requested: f,
                available: len,
            });
        }
        let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(2 * f);
        let mut chosen = Vec::with_capacity(f);
        for i in 0..f {
            let j = rng.random_range(i..len);
            let at_j = *swapped.get(&j).unwrap_or(&j);
            let at_i = *swapped.get(&i).unwrap_or(&i);
            swapped.insert(j, at_i);
            chosen.push(self.points[at_j].clone());
        }
        Spectrum::new(chosen, self.degree, self.region.clone())
    }
}

/// Draw one uniformly random `f`-point spectrum from `N Sigma` (or `N Delta`).
pub fn sample_spectrum_uniform<R: Rng + ?Sized>(
    n: u32,
    m: usize,
    f: usize,
    polytope: Option<&NewtonPolytope>,
    rng: &mut R,
) -> Result<Spectrum> {
    Lattice::new(n, m, polytope)?.sample(f, rng)
}

/// The dilate `N S`, of degree `N p`.
pub fn dilate_spectrum(s: &Spectrum, n: u32) -> Spectrum {
    Spectrum {
        points: s.points.iter().map(|p| p.scaled(n)).collect(),
        degree: s.degree * n,
        region: s.region.clone(),
    }
}
