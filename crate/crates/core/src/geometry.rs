//! Points, triangle shape helpers, quadrature rules on triangles, and the
//! level-set description of the embedded domain `D` with interface `Γ = ∂D`.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::{Error, Result};

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    /// Checked constructor rejecting NaN and infinite coordinates.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(Error::NonFinitePoint(x, y))
        }
    }

    /// Unchecked constructor for internal use where finiteness is known.
    #[inline]
    pub const fn xy(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::xy(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Rotation by -90 degrees: `(x, y) -> (y, -x)`.
    #[inline]
    pub fn perp_cw(self) -> Point2 {
        Point2::xy(self.y, -self.x)
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::xy(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::xy(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::xy(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise order.
#[inline]
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Longest edge length.
#[inline]
pub fn diameter(tri: [Point2; 3]) -> f64 {
    let [a, b, c] = tri;
    a.dist(b).max(b.dist(c)).max(c.dist(a))
}

#[inline]
pub fn barycenter(tri: [Point2; 3]) -> Point2 {
    let [a, b, c] = tri;
    Point2::xy((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
}

/// Maps barycentric coordinates `(l0, l1, l2)` to the physical point.
#[inline]
pub fn from_barycentric(tri: [Point2; 3], l: [f64; 3]) -> Point2 {
    let [a, b, c] = tri;
    Point2::xy(
        l[0] * a.x + l[1] * b.x + l[2] * c.x,
        l[0] * a.y + l[1] * b.y + l[2] * c.y,
    )
}

/// Smallest interior angle of a triangle, in degrees.
pub fn min_angle_degrees(tri: [Point2; 3]) -> f64 {
    let mut min = f64::INFINITY;
    for k in 0..3 {
        let p = tri[k];
        let u = tri[(k + 1) % 3] - p;
        let v = tri[(k + 2) % 3] - p;
        let ang = u.cross(v).abs().atan2(u.dot(v)).to_degrees();
        min = min.min(ang);
    }
    min
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// True when `p` lies in the closed triangle (any orientation).
pub fn triangle_contains(tri: [Point2; 3], p: Point2) -> bool {
    let [a, b, c] = tri;
    let d1 = signed_area(a, b, p);
    let d2 = signed_area(b, c, p);
    let d3 = signed_area(c, a, p);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}

/// Signed distance of a point to the unit circle centred at the origin.
#[inline]
pub fn circle_signed_distance(p: Point2) -> f64 {
    p.norm() - 1.0
}

type LevelSetFn = dyn Fn(Point2) -> f64 + Send + Sync;

#[derive(Clone)]
enum Shape {
    Circle { center: Point2, radius: f64 },
    LevelSet(Arc<LevelSetFn>),
}

/// Implicit description of the embedded domain `D`.
///
/// The level-set function is negative strictly inside `D`, zero on `Γ` and
/// positive outside. Circles carry the exact Euclidean signed distance;
/// arbitrary level sets are treated as approximate distances.
#[derive(Clone)]
pub struct ImplicitDomain {
    shape: Shape,
}

impl fmt::Debug for ImplicitDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Circle { center, radius } => f
                .debug_struct("Circle")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Shape::LevelSet(_) => f.write_str("LevelSet(..)"),
        }
    }
}

/// Range `[min, max]` of `|signed_distance|` over a triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRange {
    pub min: f64,
    pub max: f64,
}

impl DistanceRange {
    /// Whether the closed tube `{|d| <= eps}` meets the triangle.
    #[inline]
    pub fn meets_tube(&self, eps: f64) -> bool {
        self.min <= eps
    }

    /// Whether the level curve `{|d| = level}` meets the triangle.
    #[inline]
    pub fn meets_level(&self, level: f64) -> bool {
        self.min <= level && level <= self.max
    }

    /// Whether the triangle lies entirely inside the closed tube `{|d| <= eps}`.
    #[inline]
    pub fn inside_tube(&self, eps: f64) -> bool {
        self.max <= eps
    }
}

impl ImplicitDomain {
    /// The unit disk `B_1(0)`.
    pub fn unit_circle() -> Self {
        Self::circle(Point2::xy(0.0, 0.0), 1.0)
    }

    pub fn circle(center: Point2, radius: f64) -> Self {
        ImplicitDomain {
            shape: Shape::Circle { center, radius },
        }
    }

    /// A domain described by a generic level-set function (not necessarily a
    /// distance function).
    pub fn level_set<F>(f: F) -> Self
    where
        F: Fn(Point2) -> f64 + Send + Sync + 'static,
    {
        ImplicitDomain {
            shape: Shape::LevelSet(Arc::new(f)),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.shape, Shape::Circle { .. })
    }

    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        match &self.shape {
            Shape::Circle { center, radius } => (p - *center).norm() - radius,
            Shape::LevelSet(f) => f(p),
        }
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Range of `|signed_distance|` over the closed triangle.
    ///
    /// Exact for circles: the radial coordinate attains its maximum at a vertex
    /// and its minimum at the closest point of the triangle to the centre.
    /// For generic level sets the vertex values are widened by the diameter,
    /// which over-approximates the range for 1-Lipschitz functions.
    pub fn distance_range(&self, tri: [Point2; 3]) -> DistanceRange {
        match &self.shape {
            Shape::Circle { center, radius } => {
                let c = *center;
                let r_max = tri.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
                let r_min = if triangle_contains(tri, c) {
                    0.0
                } else {
                    (0..3)
                        .map(|k| point_segment_distance(c, tri[k], tri[(k + 1) % 3]))
                        .fold(f64::INFINITY, f64::min)
                };
                let lo = r_min - radius;
                let hi = r_max - radius;
                let min = if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    lo.abs().min(hi.abs())
                };
                DistanceRange {
                    min,
                    max: lo.abs().max(hi.abs()),
                }
            }
            Shape::LevelSet(f) => {
                let d = tri.map(|p| f(p));
                let diam = diameter(tri);
                let vmin = d.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
                let vmax = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let crosses = d.iter().any(|v| *v <= 0.0) && d.iter().any(|v| *v >= 0.0);
                DistanceRange {
                    min: if crosses { 0.0 } else { (vmin - diam).max(0.0) },
                    max: vmax + diam,
                }
            }
        }
    }
}

/// Whether the triangle meets the closed two-sided tube
/// `S^ε = {p : |signed_distance(p)| <= eps}`.
///
/// Exact for circles. For generic level sets this is the conservative test
/// `min_vertex |d| <= eps + diameter`, which may over-classify.
pub fn triangle_tube_overlap(tri: [Point2; 3], dom: &ImplicitDomain, eps: f64) -> Result<bool> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("tube width must be >= 0, got {eps}")));
    }
    let [a, b, c] = tri;
    let area = signed_area(a, b, c).abs();
    let scale = diameter(tri);
    if !(area > 1e-14 * scale * scale) {
        return Err(Error::DegenerateElement(0));
    }
    Ok(dom.distance_range(tri).meets_tube(eps))
}

/// Symmetric quadrature rule on triangles.
///
/// Points are barycentric coordinates; weights are relative to the triangle
/// area and sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Integrates `f` over the triangle.
    pub fn integrate<F: FnMut(Point2) -> f64>(&self, tri: [Point2; 3], mut f: F) -> f64 {
        let [a, b, c] = tri;
        let area = signed_area(a, b, c).abs();
        let mut s = 0.0;
        for (l, w) in self.points.iter().zip(&self.weights) {
            s += w * f(from_barycentric(tri, *l));
        }
        s * area
    }
}

/// Returns the symmetric rule exact up to `degree` (1, 2 or 4).
#[allow(clippy::excessive_precision)]
pub fn quadrature(degree: usize) -> Result<QuadratureRule> {
    let rule = match degree {
        1 => QuadratureRule {
            degree,
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        },
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            QuadratureRule {
                degree,
                points: vec![[a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 3.0; 3],
            }
        }
        4 => {
            // Strang-Fix / Dunavant 6-point rule
            let a1 = 0.445_948_490_915_964_886_32;
            let w1 = 0.223_381_589_678_011_465_70;
            let a2 = 0.091_576_213_509_770_743_46;
            let w2 = 0.109_951_743_655_321_867_64;
            let b1 = 1.0 - 2.0 * a1;
            let b2 = 1.0 - 2.0 * a2;
            QuadratureRule {
                degree,
                points: vec![
                    [a1, a1, b1],
                    [a1, b1, a1],
                    [b1, a1, a1],
                    [a2, a2, b2],
                    [a2, b2, a2],
                    [b2, a2, a2],
                ],
                weights: vec![w1, w1, w1, w2, w2, w2],
            }
        }
        d => return Err(Error::UnsupportedQuadrature(d)),
    };
    Ok(rule)
}
