//! Cross-section geometry: polygons, the boundary-distance field `δ(x')`,
//! in-radius `R(ω)`, boundary layers `ω^β` and the functional `l(ω)`.
//!
//! All grids live on the lattice `h·ℤ²` anchored at the origin, so a
//! dilation of the polygon by `t` together with `h → t·h` maps nodes onto
//! nodes exactly.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

/// Simple polygon with counterclockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;

    fn try_from(vertices: Vec<Point>) -> Result<Self> {
        Polygon::new(vertices)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    (p[0] - cx).hypot(p[1] - cy)
}

impl Polygon {
    /// Validates and builds a polygon. Clockwise input is reversed so the
    /// stored orientation is always counterclockwise.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices
            .iter()
            .position(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(Error::InvalidPolygon(format!("vertex {i} is not finite")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidPolygon(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        for i in 0..n {
            let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2) {
                    return Err(Error::InvalidPolygon(format!(
                        "edges {i} and {j} intersect (polygon is not simple)"
                    )));
                }
            }
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(Error::InvalidPolygon("zero enclosed area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    /// Regular `n`-gon inscribed in the circle of radius `radius` about
    /// `center`, first vertex at angle 0.
    pub fn regular(n: usize, radius: f64, center: Point) -> Result<Self> {
        let vertices = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Polygon::new(vertices)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Uniform dilation about the origin.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Polygon::new(self.vertices.iter().map(|v| [t * v[0], t * v[1]]).collect())
    }

    /// `(xmin, ymin, xmax, ymax)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), v| (x0.min(v[0]), y0.min(v[1]), x1.max(v[0]), y1.max(v[1])),
        )
    }

    /// Even-odd rule point-in-polygon test. Points on the boundary may
    /// land on either side; callers combine this with a distance check.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when every turn is a left turn (collinear vertices allowed).
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            cross(
                self.vertices[i],
                self.vertices[(i + 1) % n],
                self.vertices[(i + 2) % n],
            ) >= 0.0
        })
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Shoelace area of a validated polygon.
pub fn polygon_area(poly: &Polygon) -> f64 {
    signed_area(poly.vertices())
}

/// `δ(p) = dist(p, ∂ω)` for `p` inside the polygon, 0 elsewhere.
pub fn distance_to_boundary(poly: &Polygon, p: Point) -> f64 {
    if !poly.contains(p) {
        return 0.0;
    }
    poly.edges()
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Interior nodes of the lattice `h·ℤ²` inside a polygon, ordered by row
/// (`x₂` outer, `x₁` inner).
#[derive(Debug, Clone)]
pub struct Grid2D {
    h: f64,
    i_range: (i64, i64),
    j_range: (i64, i64),
    nodes: Vec<(i64, i64)>,
    // dense lookup over the bounding index box; usize::MAX marks non-nodes
    lookup: Vec<usize>,
}

impl Grid2D {
    /// Nodes closer to the boundary than `1e-9·h` count as boundary nodes.
    pub fn new(poly: &Polygon, h: f64) -> Result<Self> {
        Ok(Self::with_distances(poly, h)?.0)
    }

    fn with_distances(poly: &Polygon, h: f64) -> Result<(Self, Vec<f64>)> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        let (x0, y0, x1, y1) = poly.bounding_box();
        let i_range = ((x0 / h).floor() as i64, (x1 / h).ceil() as i64);
        let j_range = ((y0 / h).floor() as i64, (y1 / h).ceil() as i64);
        let width = (i_range.1 - i_range.0 + 1) as usize;
        let height = (j_range.1 - j_range.0 + 1) as usize;
        let mut lookup = vec![usize::MAX; width * height];
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let eps = 1e-9 * h;
        for j in j_range.0..=j_range.1 {
            for i in i_range.0..=i_range.1 {
                let d = distance_to_boundary(poly, [i as f64 * h, j as f64 * h]);
                if d > eps {
                    lookup[(j - j_range.0) as usize * width + (i - i_range.0) as usize] =
                        nodes.len();
                    nodes.push((i, j));
                    values.push(d);
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::EmptyGrid(format!(
                "no lattice node at spacing {h} lies inside the polygon; use a finer spacing"
            )));
        }
        Ok((Grid2D { h, i_range, j_range, nodes, lookup }, values))
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lattice indices `(i, j)` of each node.
    pub fn nodes(&self) -> &[(i64, i64)] {
        &self.nodes
    }

    pub fn point(&self, node: usize) -> Point {
        let (i, j) = self.nodes[node];
        [i as f64 * self.h, j as f64 * self.h]
    }

    /// Node index of lattice point `(i, j)`, if it is an interior node.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        if i < self.i_range.0 || i > self.i_range.1 || j < self.j_range.0 || j > self.j_range.1 {
            return None;
        }
        let width = (self.i_range.1 - self.i_range.0 + 1) as usize;
        let k = self.lookup[(j - self.j_range.0) as usize * width + (i - self.i_range.0) as usize];
        (k != usize::MAX).then_some(k)
    }

    /// Inclusive lattice index ranges covering the polygon's bounding box.
    pub fn index_ranges(&self) -> ((i64, i64), (i64, i64)) {
        (self.i_range, self.j_range)
    }
}

/// Exact boundary distance sampled at every interior grid node.
#[derive(Debug, Clone)]
pub struct DistanceField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn new(poly: &Polygon, h: f64) -> Result<Self> {
        let (grid, values) = Grid2D::with_distances(poly, h)?;
        Ok(DistanceField { grid, values })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.grid.h
    }

    pub fn cell_area(&self) -> f64 {
        self.grid.h * self.grid.h
    }
}

/// Grid estimate of `R(ω) = sup δ`. For convex `ω` this underestimates the
/// true in-radius by at most `h·√2/2`.
pub fn inradius(field: &DistanceField) -> Result<f64> {
    field
        .values
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::EmptyGrid("distance field has no interior nodes".into()))
}

/// Node-count estimate of `|ω^β| = |{δ < β}|`.
pub fn sublevel_area(field: &DistanceField, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let count = field.values.iter().filter(|&&d| d < beta).count();
    Ok(count as f64 * field.cell_area())
}

/// Value of `l(ω)` and the minimizing `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LOmega {
    pub value: f64,
    pub beta_star: f64,
}

/// `(b − a)·inf_β |ω^β|/β`, with the infimum taken over `n_beta`
/// geometrically spaced values in `(h, R(ω)]`.
pub fn l_omega(field: &DistanceField, height: f64, n_beta: usize) -> Result<LOmega> {
    if !(height > 0.0) {
        return Err(Error::InvalidInput(format!("height must be positive, got {height}")));
    }
    if n_beta < 2 {
        return Err(Error::InvalidInput(format!("n_beta must be at least 2, got {n_beta}")));
    }
    let r = inradius(field)?;
    let h = field.spacing();
    let betas: Vec<f64> = if r <= h {
        vec![r]
    } else {
        let ratio = r / h;
        (1..=n_beta)
            .map(|i| {
                if i == n_beta {
                    r
                } else {
                    h * ratio.powf(i as f64 / n_beta as f64)
                }
            })
            .collect()
    };
    let mut best = LOmega { value: f64::INFINITY, beta_star: r };
    for beta in betas {
        let q = sublevel_area(field, beta)? / beta;
        if q < best.value {
            best = LOmega { value: q, beta_star: beta };
        }
    }
    best.value *= height;
    Ok(best)
}

/// Geometric data of the cylinder `ω × (a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub area_omega: f64,
    pub inradius: f64,
    pub l_omega: f64,
    pub beta_star: f64,
    pub height: f64,
    pub volume_omega: f64,
}

impl GeometrySummary {
    pub const CSV_HEADER: &'static str = "area,inradius,l_omega,height,volume";

    pub fn compute(poly: &Polygon, field: &DistanceField, a: f64, b: f64, n_beta: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput(format!("need a < b, got a={a}, b={b}")));
        }
        let height = b - a;
        let area_omega = polygon_area(poly);
        let l = l_omega(field, height, n_beta)?;
        Ok(GeometrySummary {
            area_omega,
            inradius: inradius(field)?,
            l_omega: l.value,
            beta_star: l.beta_star,
            height,
            volume_omega: area_omega * height,
        })
    }

    pub fn csv_row(&self) -> String {
        use crate::format::fmt_f64;
        [self.area_omega, self.inradius, self.l_omega, self.height, self.volume_omega]
            .iter()
            .map(|&x| fmt_f64(x))
            .collect::<Vec<_>>()
            .join(",")
    }
}
