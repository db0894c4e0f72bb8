use alloc::vec::Vec;
use hashbrown::HashMap;
use num_traits::Float;

use crate::math::Vec3;

type Key = [i64; 3];

struct Grid<'a> {
    pts: &'a [Vec3],
    cell: f64,
    cells: HashMap<Key, Vec<usize>>,
    lo: Key,
    hi: Key,
}

impl<'a> Grid<'a> {
    fn new(pts: &'a [Vec3]) -> Self {
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let diag = (hi - lo).norm();
        let per_axis = Float::cbrt(pts.len() as f64).max(1.0);
        let cell = if diag > 0.0 { diag / per_axis } else { 1.0 };
        let mut g = Self { pts, cell, cells: HashMap::new(), lo: [i64::MAX; 3], hi: [i64::MIN; 3] };
        for (i, p) in pts.iter().enumerate() {
            let k = g.key(p);
            for a in 0..3 {
                g.lo[a] = g.lo[a].min(k[a]);
                g.hi[a] = g.hi[a].max(k[a]);
            }
            g.cells.entry(k).or_default().push(i);
        }
        g
    }

    fn key(&self, p: &Vec3) -> Key {
        [0, 1, 2].map(|a| Float::floor(p[a] / self.cell) as i64)
    }

    fn nearest(&self, p: &Vec3) -> f64 {
        let c = self.key(p);
        // Chebyshev distance from c to the occupied box, and to its far corner
        let mut r0 = 0i64;
        let mut rmax = 0i64;
        for a in 0..3 {
            r0 = r0.max(self.lo[a] - c[a]).max(c[a] - self.hi[a]);
            rmax = rmax.max((c[a] - self.lo[a]).abs()).max((self.hi[a] - c[a]).abs());
        }
        let mut best = f64::INFINITY;
        for r in r0..=rmax {
            if best.is_finite() && (r - 1) as f64 * self.cell >= best {
                break;
            }
            for dx in -r..=r {
                for dy in -r..=r {
                    let edge = dx.abs() == r || dy.abs() == r;
                    let dzs: &mut dyn Iterator<Item = i64> = if edge { &mut (-r..=r) } else { &mut [-r, r].into_iter() };
                    for dz in dzs {
                        if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &i in ids {
                                best = best.min((self.pts[i] - p).norm());
                            }
                        }
                        if r == 0 {
                            break;
                        }
                    }
                }
            }
        }
        best
    }
}

fn directed(a: &[Vec3], grid: &Grid) -> f64 {
    a.iter().map(|p| grid.nearest(p)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two finite point sets. Returns
/// infinity if exactly one set is empty.
pub fn hausdorff_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let (ga, gb) = (Grid::new(a), Grid::new(b));
    directed(a, &gb).max(directed(b, &ga))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    fn brute(a: &[Vec3], b: &[Vec3]) -> f64 {
        let d = |x: &[Vec3], y: &[Vec3]| {
            x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        d(a, b).max(d(b, a))
    }

    #[test]
    fn matches_brute_force() {
        let a: Vec<Vec3> = (0..300).map(|i| {
            let t = i as f64 * 0.37;
            vec3(t.sin() * 3.0, (1.3 * t).cos(), (0.2 * t).sin() * 5.0)
        }).collect();
        let b: Vec<Vec3> = (0..200).map(|i| {
            let t = i as f64 * 0.53;
            vec3((0.7 * t).cos() * 2.0, t.sin() + 4.0, (0.3 * t).cos())
        }).collect();
        assert!((hausdorff_distance(&a, &b) - brute(&a, &b)).abs() < 1e-12);
        assert!((hausdorff_distance(&a, &a[..10]) - brute(&a, &a[..10])).abs() < 1e-12);
    }

    #[test]
    fn identical_and_single_points() {
        let a = [vec3(1.0, 2.0, 3.0)];
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        assert!((hausdorff_distance(&a, &[vec3(1.0, 2.0, 7.0)]) - 4.0).abs() < 1e-15);
    }
}
