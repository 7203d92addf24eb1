//! Shared brute-force oracles and random generators for the integration
//! suites. Everything here is deliberately independent of the library's
//! hull and calipers code paths.

#![allow(dead_code)]

use std::collections::BTreeSet;

use apronid_core::geometry::{PixelMask, PixelPoint};
use rand::Rng;

/// Orientation of `r` against the directed line `a -> b`, own sign
/// convention; only the left/right split matters here.
fn side(a: PixelPoint, b: PixelPoint, r: PixelPoint) -> i64 {
    (b.x - a.x) * (r.y - a.y) - (b.y - a.y) * (r.x - a.x)
}

/// O(n^3) hull-vertex oracle. A pair of points whose line keeps every other
/// point on a single side spans a supporting line of the set; the extreme
/// points along each supporting line are exactly the hull vertices.
pub fn brute_force_hull_vertices(points: &[PixelPoint]) -> BTreeSet<PixelPoint> {
    let mut pts: Vec<PixelPoint> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let mut vertices = BTreeSet::new();
    if pts.len() == 1 {
        vertices.insert(pts[0]);
        return vertices;
    }
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (a, b) = (pts[i], pts[j]);
            let mut has_left = false;
            let mut has_right = false;
            for &r in &pts {
                let s = side(a, b, r);
                if s > 0 {
                    has_left = true;
                } else if s < 0 {
                    has_right = true;
                }
                if has_left && has_right {
                    break;
                }
            }
            if has_left && has_right {
                continue;
            }
            let along = |p: PixelPoint| (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
            let mut lo = a;
            let mut hi = a;
            for &r in &pts {
                if side(a, b, r) != 0 {
                    continue;
                }
                if along(r) < along(lo) {
                    lo = r;
                }
                if along(r) > along(hi) {
                    hi = r;
                }
            }
            vertices.insert(lo);
            vertices.insert(hi);
        }
    }
    vertices
}

/// All-pairs maximum squared distance, exact in `i64`.
pub fn brute_force_diameter_sq(points: &[PixelPoint]) -> i64 {
    let mut best = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = points[i].x - points[j].x;
            let dy = points[i].y - points[j].y;
            best = best.max(dx * dx + dy * dy);
        }
    }
    best
}

pub fn random_point_set<R: Rng>(rng: &mut R, n: usize, max_coord: i64) -> Vec<PixelPoint> {
    (0..n)
        .map(|_| {
            PixelPoint::new(
                rng.random_range(0..max_coord),
                rng.random_range(0..max_coord),
            )
        })
        .collect()
}

/// A random blob mask: a few filled ellipses plus salt noise, at least one
/// foreground pixel, dimensions up to `max_dim`.
pub fn random_blob_mask<R: Rng>(rng: &mut R, max_dim: u32) -> PixelMask {
    let w = rng.random_range(4..=max_dim);
    let h = rng.random_range(4..=max_dim);
    let mut set: BTreeSet<(i64, i64)> = BTreeSet::new();
    for _ in 0..rng.random_range(1..=3u32) {
        let cx = rng.random_range(0..w) as f64;
        let cy = rng.random_range(0..h) as f64;
        let rx = rng.random_range(1..=(w / 3).max(1)) as f64;
        let ry = rng.random_range(1..=(h / 3).max(1)) as f64;
        for y in 0..h {
            for x in 0..w {
                let dx = (f64::from(x) - cx) / rx;
                let dy = (f64::from(y) - cy) / ry;
                if dx * dx + dy * dy <= 1.0 {
                    set.insert((i64::from(x), i64::from(y)));
                }
            }
        }
    }
    for _ in 0..rng.random_range(0..20u32) {
        set.insert((
            i64::from(rng.random_range(0..w)),
            i64::from(rng.random_range(0..h)),
        ));
    }
    if set.is_empty() {
        set.insert((
            i64::from(rng.random_range(0..w)),
            i64::from(rng.random_range(0..h)),
        ));
    }
    let points = set
        .into_iter()
        .map(|(x, y)| PixelPoint::new(x, y))
        .collect();
    PixelMask::new(w, h, points).expect("generated points are in bounds")
}
