//! Planar convex hulls, Minkowski sums and mixed areas.
//!
//! The mixed area `MV(A, B) = area(A + B) - area(A) - area(B)` counts the zeros in
//! the torus of a generic pair of polynomials with Newton polygons `A` and `B`.

use rand::Rng;

use crate::potential::averaged::{sample_uniform_simplex, McEstimate};

fn cross<T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<Output = T>>(
    o: [T; 2],
    a: [T; 2],
    b: [T; 2],
) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull vertices with collinear points removed.
pub fn convex_hull_i64(points: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut p = points.to_vec();
    p.sort();
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<[i64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[i64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Twice the area of the hull of the points.
pub fn twice_hull_area_i64(points: &[[i64; 2]]) -> i64 {
    let h = convex_hull_i64(points);
    if h.len() < 3 {
        return 0;
    }
    (0..h.len())
        .map(|i| {
            let (a, b) = (h[i], h[(i + 1) % h.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum()
}

fn minkowski_i64(a: &[[i64; 2]], b: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let (ha, hb) = (convex_hull_i64(a), convex_hull_i64(b));
    ha.iter()
        .flat_map(|p| hb.iter().map(move |q| [p[0] + q[0], p[1] + q[1]]))
        .collect()
}

/// Exact mixed area of the hulls of two lattice point sets.
pub fn mixed_area_i64(a: &[[i64; 2]], b: &[[i64; 2]]) -> i64 {
    let twice =
        twice_hull_area_i64(&minkowski_i64(a, b)) - twice_hull_area_i64(a) - twice_hull_area_i64(b);
    debug_assert!(twice % 2 == 0, "lattice mixed area is an integer");
    twice / 2
}

/// Number of zeros in the torus of a generic system with these supports.
pub fn bkk_count(a: &[Vec<u32>], b: &[Vec<u32>]) -> u64 {
    let conv = |s: &[Vec<u32>]| {
        s.iter()
            .map(|p| [p[0] as i64, p[1] as i64])
            .collect::<Vec<_>>()
    };
    mixed_area_i64(&conv(a), &conv(b)) as u64
}

/// Hull of real points, counter-clockwise.
pub fn convex_hull_f64(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in [p.clone(), p.into_iter().rev().collect()] {
        let start = hull.len();
        for q in pass {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0
            {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

pub fn hull_area_f64(points: &[[f64; 2]]) -> f64 {
    let h = convex_hull_f64(points);
    if h.len() < 3 {
        return 0.0;
    }
    0.5 * (0..h.len())
        .map(|i| {
            let (a, b) = (h[i], h[(i + 1) % h.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

pub fn mixed_area_f64(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let (ha, hb) = (convex_hull_f64(a), convex_hull_f64(b));
    let sum: Vec<[f64; 2]> = ha
        .iter()
        .flat_map(|p| hb.iter().map(move |q| [p[0] + q[0], p[1] + q[1]]))
        .collect();
    hull_area_f64(&sum) - hull_area_f64(&ha) - hull_area_f64(&hb)
}

/// Monte Carlo estimate of `E[MV(conv A, conv B)]` for independent sets of `f` uniform
/// points in the unit triangle. This is the limiting normalized zero count of the
/// random-simplex ensemble with two equations in two variables.
pub fn expected_mixed_area_mc<R: Rng + ?Sized>(
    f: usize,
    samples: usize,
    rng: &mut R,
) -> McEstimate {
    let draw = |rng: &mut R| -> Vec<[f64; 2]> {
        (0..f)
            .map(|_| {
                let v = sample_uniform_simplex(2, 1.0, rng);
                [v[0], v[1]]
            })
            .collect()
    };
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let (a, b) = (draw(rng), draw(rng));
        let v = mixed_area_f64(&a, &b);
        sum += v;
        sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_mixed_area_is_bezout() {
        let s = |n: i64| vec![[0, 0], [n, 0], [0, n]];
        assert_eq!(mixed_area_i64(&s(3), &s(3)), 9);
        assert_eq!(mixed_area_i64(&s(2), &s(5)), 10);
        // z1 - 1 and z2 - 2.
        assert_eq!(mixed_area_i64(&[[0, 0], [1, 0]], &[[0, 0], [0, 1]]), 1);
        // Parallel segments have no isolated common zeros.
        assert_eq!(mixed_area_i64(&[[0, 0], [1, 0]], &[[0, 0], [3, 0]]), 0);
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let h = convex_hull_i64(&[[0, 0], [2, 0], [1, 0], [1, 1], [0, 2], [2, 2]]);
        assert_eq!(h.len(), 4);
        assert_eq!(
            twice_hull_area_i64(&[[0, 0], [2, 0], [0, 2], [2, 2], [1, 1]]),
            8
        );
    }

    #[test]
    fn mc_mixed_area_of_single_triangle_sample() {
        // f = 3: MV >= 0 and at most 2 * area(Sigma) = 1.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = expected_mixed_area_mc(3, 2000, &mut rng);
        assert!(e.mean > 0.0 && e.mean < 1.0);
        assert!(e.std_error < 0.01);
    }

    proptest! {
        #[test]
        fn mixed_area_symmetric_and_homogeneous(
            a in proptest::collection::vec((0i64..20, 0i64..20), 1..7),
            b in proptest::collection::vec((0i64..20, 0i64..20), 1..7),
        ) {
            let a: Vec<[i64; 2]> = a.into_iter().map(|(x, y)| [x, y]).collect();
            let b: Vec<[i64; 2]> = b.into_iter().map(|(x, y)| [x, y]).collect();
            let ab = mixed_area_i64(&a, &b);
            prop_assert_eq!(ab, mixed_area_i64(&b, &a));
            prop_assert!(ab >= 0);
            prop_assert_eq!(mixed_area_i64(&a, &a), twice_hull_area_i64(&a));
            let fa: Vec<[f64; 2]> = a.iter().map(|p| [p[0] as f64, p[1] as f64]).collect();
            let fb: Vec<[f64; 2]> = b.iter().map(|p| [p[0] as f64, p[1] as f64]).collect();
            prop_assert!((mixed_area_f64(&fa, &fb) - ab as f64).abs() < 1e-9);
        }
    }
}
