//! Assembly of the box-method linear system.
//!
//! The stiffness matrix is available through two independent routes: box
//! fluxes over the dual segments, and the usual P1 Galerkin integrals. For
//! the barycentric dual they coincide entrywise.

use crate::dual::DualMesh;
use crate::geometry::{quadrature, Point2};
use crate::linalg::{self, SolveReport, SparseMatrix};
use crate::mesh::TriMesh;
use crate::region::{RegionMap, VertexTag};
use crate::{Error, Result};

/// Nodal values of a P1 field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(mesh: &TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_vertices(),
                got: values.len(),
            });
        }
        Ok(ScalarField(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `∫ ∇φ_v · ∇φ_w` assembled triangle by triangle.
pub fn assemble_stiffness_fem(mesh: &TriMesh) -> Result<SparseMatrix> {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement(t));
        }
        let g = mesh.hat_gradients(t);
        let tri = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], area * g[i].dot(g[j])));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_vertices(), triplets)
}

/// Row `v` holds `−∮_{∂b_v} ∇φ_w · n_b ds`, assembled edge by edge over the
/// dual segments. Boundary-vertex rows use the same dual segments, leaving
/// out the pieces of `∂b_v` on `∂Ω`.
pub fn assemble_stiffness_box(mesh: &TriMesh, dual: &DualMesh) -> Result<SparseMatrix> {
    let mut triplets = Vec::with_capacity(12 * mesh.edges().len());
    for e in 0..dual.n_edges() {
        for seg in dual.edge_segments(e) {
            let g = mesh.hat_gradients(seg.triangle);
            let tri = mesh.triangles()[seg.triangle];
            for k in 0..3 {
                let flux = g[k].dot(seg.normal) * seg.length;
                // the normal points out of b_from and into b_to
                triplets.push((seg.from, tri[k], -flux));
                triplets.push((seg.to, tri[k], flux));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_vertices(), triplets)
}

/// `(f, χ_{b_v})`: each box fragment is split into two triangles and
/// integrated with the degree-2 rule.
pub fn assemble_load_box<F>(mesh: &TriMesh, dual: &DualMesh, f: F) -> Vec<f64>
where
    F: Fn(Point2) -> f64,
{
    let q = quadrature(2).expect("degree 2 rule exists");
    let mut load = vec![0.0; mesh.n_vertices()];
    for frag in dual.fragments() {
        for sub in frag.sub_triangles() {
            load[frag.vertex] += q.integrate(sub, &f);
        }
    }
    load
}

/// `(f, φ_v)` with the degree-4 rule: the Galerkin load vector.
pub fn assemble_load_fem<F>(mesh: &TriMesh, f: F) -> Vec<f64>
where
    F: Fn(Point2) -> f64,
{
    let q = quadrature(4).expect("degree 4 rule exists");
    let mut load = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let area = mesh.area(t);
        for (l, w) in q.points.iter().zip(&q.weights) {
            let x = crate::geometry::from_barycentric(p, *l);
            let fx = f(x) * w * area;
            for k in 0..3 {
                load[tri[k]] += fx * l[k];
            }
        }
    }
    load
}

/// Lagrange P1 interpolant: nodal evaluation.
pub fn interpolate<F>(g: F, mesh: &TriMesh) -> ScalarField
where
    F: Fn(Point2) -> f64,
{
    ScalarField(mesh.vertices().iter().map(|&p| g(p)).collect())
}

/// A linear system with Dirichlet rows eliminated symmetrically.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Prescribed value per vertex, `None` for free vertices.
    pub constraints: Vec<Option<f64>>,
}

impl SparseSystem {
    pub fn n_free(&self) -> usize {
        self.constraints.iter().filter(|c| c.is_none()).count()
    }

    /// Jacobi-CG solve starting from the prescribed values.
    pub fn solve(&self, tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
        let x0 = self.constraints.iter().map(|c| c.unwrap_or(0.0)).collect();
        linalg::cg_solve_from(&self.matrix, &self.rhs, x0, tol, maxit)
    }
}

/// Constrains every vertex with a prescribed value.
///
/// For each constrained vertex `c` with value `g_c`, `g_c` times column `c` is
/// moved to the right-hand side of the free rows, then row and column `c`
/// are replaced by the identity with `rhs(c) = g_c`.
pub fn apply_dirichlet(matrix: &SparseMatrix, rhs: &[f64], constraints: Vec<Option<f64>>) -> Result<SparseSystem> {
    let n = matrix.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    if constraints.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: constraints.len(),
        });
    }
    let mut triplets = Vec::with_capacity(matrix.nnz());
    let mut b = rhs.to_vec();
    for i in 0..n {
        match constraints[i] {
            Some(g) => {
                triplets.push((i, i, 1.0));
                b[i] = g;
            }
            None => {
                for (j, v) in matrix.row(i) {
                    match constraints[j] {
                        Some(g) => b[i] -= v * g,
                        None => triplets.push((i, j, v)),
                    }
                }
            }
        }
    }
    Ok(SparseSystem {
        matrix: SparseMatrix::from_triplets(n, triplets)?,
        rhs: b,
        constraints,
    })
}

/// Dirichlet elimination driven by a [`RegionMap`]: interface-constrained
/// vertices take `g_tilde_h`, outer-boundary vertices take `outer`.
///
/// A NaN in the relevant vector marks a missing prescribed value.
pub fn apply_constraints(
    matrix: &SparseMatrix,
    rhs: &[f64],
    region: &RegionMap,
    g_tilde_h: &[f64],
    outer: &[f64],
) -> Result<SparseSystem> {
    let n = matrix.dim();
    for len in [region.vertex_tag.len(), g_tilde_h.len(), outer.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let constraints = region
        .vertex_tag
        .iter()
        .enumerate()
        .map(|(v, tag)| {
            let value = match tag {
                VertexTag::Free => return Ok(None),
                VertexTag::ConstrainedInterface => g_tilde_h[v],
                VertexTag::ConstrainedOuter => outer[v],
            };
            if value.is_nan() {
                Err(Error::MissingConstraintValue(v))
            } else {
                Ok(Some(value))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    apply_dirichlet(matrix, rhs, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::build_dual;
    use crate::geometry::{self, ImplicitDomain};
    use crate::linalg::DEFAULT_TOLERANCE;
    use crate::mesh::{generate_uniform, refine_near_interface};
    use crate::region::{classify, TriangleTag};

    fn reference() -> TriMesh {
        TriMesh::from_triangles(
            vec![Point2::xy(0.0, 0.0), Point2::xy(1.0, 0.0), Point2::xy(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn no_interface(mesh: &TriMesh) -> RegionMap {
        classify(mesh, &ImplicitDomain::circle(Point2::xy(50.0, 50.0), 1.0), 0.0)
    }

    #[test]
    fn reference_local_stiffness() {
        let k = assemble_stiffness_fem(&reference()).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
        let kb = assemble_stiffness_box(&reference(), &build_dual(&reference())).unwrap();
        assert!(kb.max_abs_diff(&k).unwrap() < 1e-15);
    }

    #[test]
    fn fem_rows_sum_to_zero_and_grid_diagonal_is_four() {
        let n = 8;
        let m = generate_uniform(n).unwrap();
        let k = assemble_stiffness_fem(&m).unwrap();
        assert!(k.row_sums().iter().all(|s| s.abs() < 1e-12));
        assert!(k.symmetry_defect() < 1e-13);
        let v = 3 * (n + 1) + 4;
        assert!((k.get(v, v) - 4.0).abs() < 1e-13);
        // the diagonal-split grid reproduces the five-point stencil
        assert!((k.get(v, v + 1) + 1.0).abs() < 1e-13);
        assert!((k.get(v, v + n + 1) + 1.0).abs() < 1e-13);
        assert!(k.get(v, v + n + 2).abs() < 1e-13);
    }

    #[test]
    fn box_equals_fem_on_uniform_and_refined() {
        let m = generate_uniform(8).unwrap();
        let kb = assemble_stiffness_box(&m, &build_dual(&m)).unwrap();
        let kf = assemble_stiffness_fem(&m).unwrap();
        assert!(kb.max_abs_diff(&kf).unwrap() <= 1e-12);
        assert!(kb.row_sums().iter().all(|s| s.abs() < 1e-12));

        let r = refine_near_interface(&m, &ImplicitDomain::unit_circle(), 0.05, 0.03).unwrap();
        let kb = assemble_stiffness_box(&r, &build_dual(&r)).unwrap();
        let kf = assemble_stiffness_fem(&r).unwrap();
        assert!(kb.max_abs_diff(&kf).unwrap() <= 1e-12);
    }

    #[test]
    fn box_load_examples() {
        let m = generate_uniform(8).unwrap();
        let d = build_dual(&m);
        let ones = assemble_load_box(&m, &d, |_| 1.0);
        for v in 0..m.n_vertices() {
            assert!((ones[v] - d.box_area(v)).abs() < 1e-13);
        }
        let center = 4 * 9 + 4;
        assert_eq!(m.vertices()[center], Point2::xy(0.0, 0.0));
        let odd = assemble_load_box(&m, &d, |p| p.x);
        assert!(odd[center].abs() < 1e-13);
    }

    #[test]
    fn box_load_matches_subdivision_oracle() {
        let n = 4;
        let m = generate_uniform(n).unwrap();
        let d = build_dual(&m);
        let f = |p: Point2| p.x * p.x + p.y * p.y;
        let center = 2 * (n + 1) + 2;
        let load = assemble_load_box(&m, &d, f);
        // centroid rule on eight levels of midpoint subdivision
        fn subdivide(tri: [Point2; 3], depth: u32, f: &dyn Fn(Point2) -> f64) -> f64 {
            if depth == 0 {
                let area = geometry::signed_area(tri[0], tri[1], tri[2]);
                return f(geometry::barycenter(tri)) * area;
            }
            let [a, b, c] = tri;
            let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
            [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
                .into_iter()
                .map(|t| subdivide(t, depth - 1, f))
                .sum()
        }
        let oracle: f64 = d
            .box_fragments(center)
            .flat_map(|frag| frag.sub_triangles())
            .map(|tri| subdivide(tri, 8, &f))
            .sum();
        assert!((load[center] - oracle).abs() < 1e-6, "{} vs {}", load[center], oracle);
    }

    #[test]
    fn fem_load_of_constant_is_a_third_of_patch_area() {
        let m = generate_uniform(5).unwrap();
        let load = assemble_load_fem(&m, |_| 1.0);
        for v in 0..m.n_vertices() {
            let patch: f64 = m.incident(v).iter().map(|&t| m.area(t)).sum();
            assert!((load[v] - patch / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_examples() {
        let m = generate_uniform(4).unwrap();
        let c = interpolate(|_| 2.5, &m);
        assert!(c.values().iter().all(|&v| v == 2.5));
        let g = |p: Point2| (4.0 - p.x * p.x) * (4.0 - p.y * p.y) * (1.0 - p.x * p.x - p.y * p.y).cos();
        let gi = interpolate(g, &m);
        let origin = 2 * 5 + 2;
        assert!((gi.values()[origin] - 8.644837).abs() < 1e-5);
        let east = 2 * 5 + 3;
        assert_eq!(m.vertices()[east + 1], Point2::xy(1.0, 0.0));
        assert_eq!(gi.values()[east + 1], 12.0);
        assert!(ScalarField::new(&m, vec![0.0; 3]).is_err());
    }

    #[test]
    fn no_constraints_leaves_system_unchanged() {
        let m = generate_uniform(4).unwrap();
        let k = assemble_stiffness_fem(&m).unwrap();
        let rhs: Vec<f64> = (0..m.n_vertices()).map(|i| i as f64).collect();
        let sys = apply_dirichlet(&k, &rhs, vec![None; m.n_vertices()]).unwrap();
        assert_eq!(sys.matrix, k);
        assert_eq!(sys.rhs, rhs);
    }

    #[test]
    fn fully_constrained_returns_prescribed_values() {
        let m = generate_uniform(6).unwrap();
        let d = build_dual(&m);
        let region = classify(&m, &ImplicitDomain::unit_circle(), 10.0);
        let k = assemble_stiffness_box(&m, &d).unwrap();
        let rhs = assemble_load_box(&m, &d, |_| 1.0);
        let g: Vec<f64> = m.vertices().iter().map(|p| p.x * p.y + 1.0).collect();
        let outer = vec![-3.0; m.n_vertices()];
        let sys = apply_constraints(&k, &rhs, &region, &g, &outer).unwrap();
        assert_eq!(sys.matrix, SparseMatrix::identity(m.n_vertices()));
        let (x, _) = sys.solve(DEFAULT_TOLERANCE, 10).unwrap();
        for v in 0..m.n_vertices() {
            let want = if m.is_boundary_vertex(v) { -3.0 } else { g[v] };
            assert_eq!(x[v], want);
        }
    }

    #[test]
    fn missing_constraint_value_is_an_error() {
        let m = generate_uniform(4).unwrap();
        let region = classify(&m, &ImplicitDomain::unit_circle(), 0.1);
        let k = assemble_stiffness_fem(&m).unwrap();
        let rhs = vec![0.0; m.n_vertices()];
        let g = vec![f64::NAN; m.n_vertices()];
        let outer = vec![0.0; m.n_vertices()];
        assert!(matches!(
            apply_constraints(&k, &rhs, &region, &g, &outer),
            Err(Error::MissingConstraintValue(_))
        ));
    }

    #[test]
    fn constrained_system_is_symmetric_positive_definite() {
        let m = generate_uniform(12).unwrap();
        let d = build_dual(&m);
        let region = classify(&m, &ImplicitDomain::unit_circle(), 0.05);
        assert!(region.triangle_tag.contains(&TriangleTag::Tube));
        let k = assemble_stiffness_box(&m, &d).unwrap();
        let rhs = assemble_load_box(&m, &d, |_| 1.0);
        let g = vec![1.0; m.n_vertices()];
        let sys = apply_constraints(&k, &rhs, &region, &g, &g).unwrap();
        assert!(sys.matrix.symmetry_defect() < 1e-13);
        for s in 0..5u32 {
            let x: Vec<f64> = (0..m.n_vertices())
                .map(|i| if sys.constraints[i].is_none() { ((i as f64) * (1.3 + s as f64)).sin() } else { 0.0 })
                .collect();
            let ax = sys.matrix.matvec(&x).unwrap();
            assert!(linalg::dot(&x, &ax) > 0.0);
        }
        let (_, rep) = sys.solve(DEFAULT_TOLERANCE, 1000).unwrap();
        assert!(rep.converged);
    }

    #[test]
    fn patch_test_reproduces_linear_field() {
        let dom = ImplicitDomain::unit_circle();
        let base = generate_uniform(9).unwrap();
        let refined = refine_near_interface(&base, &dom, 0.05, 0.05).unwrap();
        for m in [base, refined] {
            let d = build_dual(&m);
            let k = assemble_stiffness_box(&m, &d).unwrap();
            let lin = |p: Point2| 0.7 - 1.3 * p.x + 2.1 * p.y;
            let rhs = assemble_load_box(&m, &d, |_| 0.0);
            assert!(rhs.iter().all(|&v| v == 0.0));
            let outer = interpolate(lin, &m);
            let region = no_interface(&m);
            let sys = apply_constraints(&k, &rhs, &region, outer.values(), outer.values()).unwrap();
            let (x, rep) = sys.solve(1e-14, 5000).unwrap();
            assert!(rep.converged);
            let err = x
                .iter()
                .zip(m.vertices())
                .map(|(u, p)| (u - lin(*p)).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-10, "patch test error {err}");
        }
    }
}
