//! Error norms of P1 fields against analytic solutions, and experimental
//! orders of convergence.

use std::fmt;
use std::str::FromStr;

use crate::assembly::ScalarField;
use crate::cases::AnalyticCase;
use crate::geometry::{self, quadrature, Point2, QuadratureRule};
use crate::mesh::TriMesh;
use crate::region::RegionMap;
use crate::{Error, Result};

/// Set of triangles over which norms are accumulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorRegion {
    All,
    /// Triangles whose barycenter lies inside `D`.
    InsideD,
    OutsideD,
    /// Triangles outside the discrete tube `S^ε_h`.
    FreeOnly,
}

impl ErrorRegion {
    pub fn name(self) -> &'static str {
        match self {
            ErrorRegion::All => "all",
            ErrorRegion::InsideD => "inside",
            ErrorRegion::OutsideD => "outside",
            ErrorRegion::FreeOnly => "free",
        }
    }
}

impl fmt::Display for ErrorRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorRegion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ErrorRegion::All),
            "inside" => Ok(ErrorRegion::InsideD),
            "outside" => Ok(ErrorRegion::OutsideD),
            "free" => Ok(ErrorRegion::FreeOnly),
            other => Err(Error::InvalidArgument(format!("unknown region '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub l2: f64,
    /// `‖∇(u − u_h)‖_{L²}`.
    pub h1_semi: f64,
    /// `(‖u − u_h‖² + ‖∇(u − u_h)‖²)^{1/2}`.
    pub h1_full: f64,
    pub region: ErrorRegion,
    pub h: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub kappa: f64,
    pub dofs: usize,
}

/// Quadrature used for the error integrals.
#[derive(Clone, Copy, Debug)]
pub struct ErrorQuadrature {
    pub degree: usize,
    /// Levels of 4-fold midpoint subdivision applied to each triangle first.
    pub subdivisions: u32,
}

impl Default for ErrorQuadrature {
    fn default() -> Self {
        ErrorQuadrature {
            degree: 4,
            subdivisions: 0,
        }
    }
}

pub fn in_region(mesh: &TriMesh, case: &dyn AnalyticCase, region_map: &RegionMap, sel: ErrorRegion, t: usize) -> bool {
    match sel {
        ErrorRegion::All => true,
        ErrorRegion::FreeOnly => !region_map.is_tube(t),
        ErrorRegion::InsideD | ErrorRegion::OutsideD => {
            let inside = case.domain().signed_distance(geometry::barycenter(mesh.triangle_points(t))) < 0.0;
            inside == (sel == ErrorRegion::InsideD)
        }
    }
}

/// L² and H¹-seminorm errors with the degree-4 rule.
///
/// On triangles cut by `Γ` the exact solution and its gradient follow the
/// pointwise branch at each quadrature point.
pub fn compute_errors(
    mesh: &TriMesh,
    field: &ScalarField,
    case: &dyn AnalyticCase,
    sel: ErrorRegion,
    region_map: &RegionMap,
) -> Result<ErrorReport> {
    compute_errors_with(mesh, field, case, sel, region_map, ErrorQuadrature::default())
}

pub fn compute_errors_with(
    mesh: &TriMesh,
    field: &ScalarField,
    case: &dyn AnalyticCase,
    sel: ErrorRegion,
    region_map: &RegionMap,
    quad: ErrorQuadrature,
) -> Result<ErrorReport> {
    if field.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_vertices(),
            got: field.len(),
        });
    }
    if region_map.triangle_tag.len() != mesh.n_triangles() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_triangles(),
            got: region_map.triangle_tag.len(),
        });
    }
    let rule = quadrature(quad.degree)?;
    let u = field.values();
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        if !in_region(mesh, case, region_map, sel, t) {
            continue;
        }
        let (el2, eh1) = triangle_errors(mesh, u, case, t, &rule, quad.subdivisions);
        l2 += el2;
        h1 += eh1;
    }
    Ok(ErrorReport {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        h1_full: (l2 + h1).sqrt(),
        region: sel,
        h: mesh.h_grid().unwrap_or_else(|| mesh.max_diameter()),
        epsilon: region_map.epsilon,
        delta: region_map.delta,
        kappa: region_map.kappa,
        dofs: region_map.n_free_vertices(),
    })
}

/// Squared L² and H¹-seminorm error contributions of one triangle.
fn triangle_errors(
    mesh: &TriMesh,
    u: &[f64],
    case: &dyn AnalyticCase,
    t: usize,
    rule: &QuadratureRule,
    subdivisions: u32,
) -> (f64, f64) {
    let tri = mesh.triangles()[t];
    let p = mesh.triangle_points(t);
    let g = mesh.hat_gradients(t);
    let vals = tri.map(|v| u[v]);
    let grad_h = (0..3).fold(Point2::default(), |acc, k| acc + g[k] * vals[k]);
    // u_h is affine: u_h(x) = u_0 + ∇u_h · (x − p_0)
    let uh = |x: Point2| vals[0] + grad_h.dot(x - p[0]);
    let mut acc = (0.0, 0.0);
    accumulate(p, subdivisions, &mut |sub| {
        acc.0 += rule.integrate(sub, |x| (case.exact_u(x) - uh(x)).powi(2));
        acc.1 += rule.integrate(sub, |x| {
            let d = case.exact_grad(x) - grad_h;
            d.dot(d)
        });
    });
    acc
}

fn accumulate(tri: [Point2; 3], depth: u32, f: &mut dyn FnMut([Point2; 3])) {
    if depth == 0 {
        f(tri);
        return;
    }
    let [a, b, c] = tri;
    let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
    for sub in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
        accumulate(sub, depth - 1, f);
    }
}

/// `(‖a − b‖_{L²}, ‖∇(a − b)‖_{L²})` for two P1 fields on the same mesh,
/// integrated exactly.
pub fn p1_difference_norms(mesh: &TriMesh, a: &ScalarField, b: &ScalarField) -> Result<(f64, f64)> {
    for f in [a, b] {
        if f.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_vertices(),
                got: f.len(),
            });
        }
    }
    let (a, b) = (a.values(), b.values());
    let (mut l2, mut h1) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let e = tri.map(|v| a[v] - b[v]);
        let area = mesh.area(t);
        let sum = e[0] + e[1] + e[2];
        l2 += area / 12.0 * (e.iter().map(|x| x * x).sum::<f64>() + sum * sum);
        let g = mesh.hat_gradients(t);
        let grad = (0..3).fold(Point2::default(), |acc, k| acc + g[k] * e[k]);
        h1 += area * grad.dot(grad);
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

/// Rates `log(e_k / e_{k+1}) / log(p_k / p_{k+1})` between consecutive
/// `(parameter, error)` pairs.
pub fn eoc(values: &[(f64, f64)]) -> Result<Vec<f64>> {
    for &(p, e) in values {
        if !(e > 0.0) {
            return Err(Error::NonPositiveError(e));
        }
        if !(p > 0.0) {
            return Err(Error::InvalidArgument(format!("parameter must be positive, got {p}")));
        }
    }
    values
        .windows(2)
        .map(|w| {
            let ((p0, e0), (p1, e1)) = (w[0], w[1]);
            if !(p1 < p0) {
                return Err(Error::InvalidArgument(format!(
                    "parameters must be strictly decreasing ({p0} then {p1})"
                )));
            }
            Ok((e0 / e1).ln() / (p0 / p1).ln())
        })
        .collect()
}
