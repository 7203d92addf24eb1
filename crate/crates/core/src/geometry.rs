//! Exact integer geometry over pixel grids: convex hulls, antipodal
//! diameters, pixel counting.
//!
//! Storage convention: `x` is the column index and `y` the row index, with
//! rows growing downward as in raster files. Orientation predicates flip the
//! sign of `y`, so hulls come out counter-clockwise in the usual y-up sense
//! while operating directly on raster coordinates. Every orientation and
//! distance comparison is done in 64-bit integer arithmetic; floating point
//! appears only in the final square root of a diameter. Coordinates are
//! expected to stay below 2^20 in magnitude so all intermediate products fit
//! in `i64`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("cannot build a convex hull from an empty point set")]
    EmptyPointSet,
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("point ({x}, {y}) lies outside the {width}x{height} mask")]
    PointOutOfBounds {
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },
}

/// A pixel center on the integer grid. `x` is the column, `y` the row.
///
/// The derived ordering is lexicographic by `(x, y)`, which is the sweep
/// order used by hull construction. Masks store their pixels row-major,
/// i.e. sorted by `(y, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelPoint {
    pub x: i64,
    pub y: i64,
}

impl PixelPoint {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

impl std::fmt::Display for PixelPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// z-component of `(a - o) x (b - o)` with the y-axis flipped to point
/// upward. Positive means `o -> a -> b` is a counter-clockwise turn,
/// negative a clockwise turn, zero collinear.
#[inline]
pub(crate) fn cross(o: PixelPoint, a: PixelPoint, b: PixelPoint) -> i64 {
    (a.y - o.y) * (b.x - o.x) - (a.x - o.x) * (b.y - o.y)
}

/// Squared Euclidean distance between two pixel centers, exact in `i64`.
#[inline]
pub fn dist_sq(a: PixelPoint, b: PixelPoint) -> i64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Binary foreground raster for one object instance.
///
/// Pixels are stored row-major ascending with no duplicates; construction
/// canonicalizes any input order and treats the input as a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: u32,
    height: u32,
    foreground: Vec<PixelPoint>,
}

impl PixelMask {
    /// Builds a mask from a set of foreground points, verifying every point
    /// lies inside the `width x height` rectangle.
    pub fn new(
        width: u32,
        height: u32,
        mut points: Vec<PixelPoint>,
    ) -> Result<Self, GeometryError> {
        for p in &points {
            if p.x < 0 || p.y < 0 || p.x >= i64::from(width) || p.y >= i64::from(height) {
                return Err(GeometryError::PointOutOfBounds {
                    x: p.x,
                    y: p.y,
                    width,
                    height,
                });
            }
        }
        points.sort_unstable_by_key(|p| (p.y, p.x));
        points.dedup();
        Ok(Self {
            width,
            height,
            foreground: points,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            foreground: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of covered pixels.
    pub fn pixel_count(&self) -> usize {
        self.foreground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.foreground.is_empty()
    }

    /// Foreground pixels in row-major ascending order.
    pub fn foreground(&self) -> &[PixelPoint] {
        &self.foreground
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        self.foreground
            .binary_search_by_key(&(p.y, p.x), |q| (q.y, q.x))
            .is_ok()
    }
}

/// Convex hull of a pixel set.
///
/// Vertices are counter-clockwise in the y-up sense, start at the leftmost
/// point (ties broken by smallest row), and contain no collinear triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexHull {
    vertices: Vec<PixelPoint>,
}

impl ConvexHull {
    pub fn vertices(&self) -> &[PixelPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True when `p` lies inside or on the hull polygon.
    pub fn contains(&self, p: PixelPoint) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0] == p,
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                cross(a, b, p) == 0
                    && p.x >= a.x.min(b.x)
                    && p.x <= a.x.max(b.x)
                    && p.y >= a.y.min(b.y)
                    && p.y <= a.y.max(b.y)
            }
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                cross(a, b, p) >= 0
            }),
        }
    }
}

/// Deduplicated copy of `points` sorted by `(x, y)`.
fn sorted_point_set(points: &[PixelPoint]) -> Result<Vec<PixelPoint>, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyPointSet);
    }
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    Ok(pts)
}

/// Convex hull by gift wrapping: start at the leftmost point and wrap
/// counter-clockwise, always taking the most counter-clockwise candidate
/// (farthest one on ties) until the walk closes.
pub fn convex_hull_giftwrap(points: &[PixelPoint]) -> Result<ConvexHull, GeometryError> {
    let pts = sorted_point_set(points)?;
    if pts.len() == 1 {
        return Ok(ConvexHull { vertices: pts });
    }
    let start = pts[0];
    let mut vertices = vec![start];
    let mut current = start;
    loop {
        let mut next = if pts[0] == current { pts[1] } else { pts[0] };
        for &cand in &pts {
            if cand == current || cand == next {
                continue;
            }
            let turn = cross(current, next, cand);
            // cand strictly right of current->next: next cannot be a hull
            // edge endpoint. On collinear candidates keep the farthest so
            // interior collinear points never become vertices.
            if turn < 0 || (turn == 0 && dist_sq(current, cand) > dist_sq(current, next)) {
                next = cand;
            }
        }
        if next == start {
            break;
        }
        debug_assert!(vertices.len() <= pts.len(), "gift wrap failed to close");
        vertices.push(next);
        current = next;
    }
    Ok(ConvexHull { vertices })
}

/// Convex hull by Andrew's monotone chain over the `(x, y)`-sorted points.
/// Identical contract and output ordering to [`convex_hull_giftwrap`].
pub fn convex_hull_monotone(points: &[PixelPoint]) -> Result<ConvexHull, GeometryError> {
    let pts = sorted_point_set(points)?;
    if pts.len() == 1 {
        return Ok(ConvexHull { vertices: pts });
    }
    let mut chain: Vec<PixelPoint> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while chain.len() >= 2 && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0 {
            chain.pop();
        }
        chain.push(p);
    }
    chain.pop();
    let lower_len = chain.len();
    for &p in pts.iter().rev() {
        while chain.len() >= lower_len + 2
            && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0
        {
            chain.pop();
        }
        chain.push(p);
    }
    chain.pop();
    Ok(ConvexHull { vertices: chain })
}

/// Squared diameter of a hull via rotating calipers: for each edge, advance
/// the opposite vertex while it moves farther from the edge's line, taking
/// the best squared distance among antipodal candidates. Exact in `i64`.
pub fn hull_diameter_sq(hull: &ConvexHull) -> i64 {
    let vs = hull.vertices();
    match vs.len() {
        0 | 1 => 0,
        2 => dist_sq(vs[0], vs[1]),
        n => {
            let mut best = 0;
            let mut j = 1;
            for i in 0..n {
                let ni = (i + 1) % n;
                loop {
                    let nj = (j + 1) % n;
                    if cross(vs[i], vs[ni], vs[nj]) > cross(vs[i], vs[ni], vs[j]) {
                        j = nj;
                    } else {
                        break;
                    }
                }
                best = best.max(dist_sq(vs[i], vs[j])).max(dist_sq(vs[ni], vs[j]));
            }
            best
        }
    }
}

/// Farthest center-to-center distance between any two foreground pixels,
/// in pixels. Runs rotating calipers over the convex hull; the square root
/// is taken only on the winning squared distance.
pub fn mask_diameter_px(mask: &PixelMask) -> Result<f64, GeometryError> {
    if mask.is_empty() {
        return Err(GeometryError::EmptyMask);
    }
    let hull = convex_hull_monotone(mask.foreground())?;
    Ok((hull_diameter_sq(&hull) as f64).sqrt())
}
