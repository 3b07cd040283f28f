//! Barycentric dual ("box") mesh.
//!
//! Inside every triangle the segments joining the edge midpoints to the
//! barycenter cut the triangle into three quadrilateral fragments, one per
//! vertex. The box `b_v` of a vertex is the union of its fragments over the
//! incident triangles. Boxes of vertices on `∂Ω` are clipped by the outer
//! boundary.

use crate::geometry::{self, Point2};
use crate::mesh::TriMesh;
use crate::{Error, Result};

/// The part of a box lying in one triangle: the quadrilateral
/// `(vertex, midpoint of first incident edge, barycenter, midpoint of second incident edge)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxFragment {
    pub triangle: usize,
    pub vertex: usize,
    pub polygon: [Point2; 4],
    pub area: f64,
}

impl BoxFragment {
    /// The fragment as two triangles sharing the diagonal vertex–barycenter.
    pub fn sub_triangles(&self) -> [[Point2; 3]; 2] {
        let [v, m1, c, m2] = self.polygon;
        [[v, m1, c], [v, c, m2]]
    }
}

/// Segment from the midpoint of edge `(from, to)` to the barycenter of
/// `triangle`; it separates the boxes of `from` and `to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualSegment {
    pub triangle: usize,
    pub from: usize,
    pub to: usize,
    /// Unit normal pointing out of the box of `from` (into the box of `to`).
    pub normal: Point2,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct DualMesh {
    /// `fragments[3 t + k]` belongs to local vertex `k` of triangle `t`.
    fragments: Vec<BoxFragment>,
    /// `segments[3 t + k]` lies on local edge `(k, k + 1)` of triangle `t`.
    segments: Vec<DualSegment>,
    /// Segment indices per mesh edge: one per adjacent triangle.
    edge_segments: Vec<[usize; 2]>,
    box_area: Vec<f64>,
    boxes: Vec<Vec<usize>>,
    interior: Vec<bool>,
}

impl DualMesh {
    pub fn fragments(&self) -> &[BoxFragment] {
        &self.fragments
    }

    pub fn segments(&self) -> &[DualSegment] {
        &self.segments
    }

    /// Dual segments crossing mesh edge `e` (one or two).
    pub fn edge_segments(&self, e: usize) -> impl Iterator<Item = &DualSegment> + '_ {
        self.edge_segments[e]
            .iter()
            .filter(|&&s| s != usize::MAX)
            .map(move |&s| &self.segments[s])
    }

    pub fn n_edges(&self) -> usize {
        self.edge_segments.len()
    }

    pub fn box_area(&self, v: usize) -> f64 {
        self.box_area[v]
    }

    pub fn box_areas(&self) -> &[f64] {
        &self.box_area
    }

    /// Fragments composing the box of vertex `v`.
    pub fn box_fragments(&self, v: usize) -> impl Iterator<Item = &BoxFragment> + '_ {
        self.boxes[v].iter().map(move |&f| &self.fragments[f])
    }

    /// Dual segments on the boundary of box `v` with their outward normals.
    pub fn box_boundary(&self, v: usize) -> impl Iterator<Item = (&DualSegment, Point2)> + '_ {
        self.boxes[v].iter().flat_map(move |&f| {
            let (t, k) = (f / 3, f % 3);
            // local edges (k, k+1) and (k+2, k) both touch local vertex k
            [3 * t + k, 3 * t + (k + 2) % 3].into_iter().map(move |s| {
                let seg = &self.segments[s];
                let n = if seg.from == v { seg.normal } else { seg.normal * -1.0 };
                (seg, n)
            })
        })
    }
}

/// Builds the barycentric dual of `mesh`, including the clipped boxes of
/// boundary vertices.
pub fn build_dual(mesh: &TriMesh) -> DualMesh {
    let nt = mesh.n_triangles();
    let nv = mesh.n_vertices();
    let mut fragments = Vec::with_capacity(3 * nt);
    let mut segments = Vec::with_capacity(3 * nt);
    let mut box_area = vec![0.0; nv];
    let mut boxes = vec![Vec::new(); nv];

    for t in 0..nt {
        let tri = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let c = geometry::barycenter(p);
        // mids[k] is the midpoint of local edge (k, k+1)
        let mids: [Point2; 3] = std::array::from_fn(|k| p[k].midpoint(p[(k + 1) % 3]));
        for k in 0..3 {
            let polygon = [p[k], mids[k], c, mids[(k + 2) % 3]];
            let area = geometry::signed_area(polygon[0], polygon[1], polygon[2])
                + geometry::signed_area(polygon[0], polygon[2], polygon[3]);
            box_area[tri[k]] += area;
            boxes[tri[k]].push(fragments.len());
            fragments.push(BoxFragment {
                triangle: t,
                vertex: tri[k],
                polygon,
                area,
            });

            let (from, to) = (tri[k], tri[(k + 1) % 3]);
            let d = c - mids[k];
            let length = d.norm();
            let mut normal = d.perp_cw() * (1.0 / length);
            if normal.dot(p[(k + 1) % 3] - p[k]) < 0.0 {
                normal = normal * -1.0;
            }
            segments.push(DualSegment {
                triangle: t,
                from,
                to,
                normal,
                length,
            });
        }
    }

    let mut edge_segments = vec![[usize::MAX; 2]; mesh.edges().len()];
    for t in 0..nt {
        for (k, e) in mesh.triangle_edges(t).into_iter().enumerate() {
            let slot = &mut edge_segments[e];
            if slot[0] == usize::MAX {
                slot[0] = 3 * t + k;
            } else {
                slot[1] = 3 * t + k;
            }
        }
    }

    let interior = (0..nv).map(|v| !mesh.is_boundary_vertex(v)).collect();
    DualMesh {
        fragments,
        segments,
        edge_segments,
        box_area,
        boxes,
        interior,
    }
}

/// `−∮_{∂b_v} ∇u_h · n_b ds` for a P1 field given by its per-triangle gradient.
///
/// Only interior vertices carry a test function.
pub fn box_boundary_integral_of_flux(dual: &DualMesh, gradients: &[Point2], v: usize) -> Result<f64> {
    if v >= dual.interior.len() {
        return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
    }
    if !dual.interior[v] {
        return Err(Error::BoundaryVertex(v));
    }
    if gradients.len() * 3 != dual.segments.len() {
        return Err(Error::DimensionMismatch {
            expected: dual.segments.len() / 3,
            got: gradients.len(),
        });
    }
    let flux: f64 = dual
        .box_boundary(v)
        .map(|(seg, n)| gradients[seg.triangle].dot(n) * seg.length)
        .sum();
    Ok(-flux)
}

/// Per-triangle gradients of the P1 interpolant with nodal `values`.
pub fn p1_gradients(mesh: &TriMesh, values: &[f64]) -> Vec<Point2> {
    (0..mesh.n_triangles())
        .map(|t| {
            let g = mesh.hat_gradients(t);
            let tri = mesh.triangles()[t];
            (0..3).fold(Point2::default(), |acc, k| acc + g[k] * values[tri[k]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_uniform;

    fn reference() -> TriMesh {
        TriMesh::from_triangles(
            vec![Point2::xy(0.0, 0.0), Point2::xy(1.0, 0.0), Point2::xy(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    fn hat(mesh: &TriMesh, v: usize) -> Vec<f64> {
        let mut u = vec![0.0; mesh.n_vertices()];
        u[v] = 1.0;
        u
    }

    #[test]
    fn reference_triangle_fragments() {
        let d = build_dual(&reference());
        for f in d.fragments() {
            assert!((f.area - 1.0 / 6.0).abs() < 1e-15);
            let [s1, s2] = f.sub_triangles();
            let a = geometry::signed_area(s1[0], s1[1], s1[2]) + geometry::signed_area(s2[0], s2[1], s2[2]);
            assert!((a - f.area).abs() < 1e-15);
        }
    }

    #[test]
    fn fragments_are_a_third_and_areas_partition() {
        for n in [2, 5, 8] {
            let m = generate_uniform(n).unwrap();
            let d = build_dual(&m);
            for f in d.fragments() {
                let third = m.area(f.triangle) / 3.0;
                assert!(((f.area - third) / third).abs() < 1e-13);
            }
            let total: f64 = d.box_areas().iter().sum();
            assert!((total - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_box_area_on_uniform_grid() {
        let n = 8;
        let m = generate_uniform(n).unwrap();
        let d = build_dual(&m);
        let v = 4 * (n + 1) + 3;
        assert_eq!(m.incident(v).len(), 6);
        let want = 4.0 / (n * n) as f64;
        assert!((d.box_area(v) - want).abs() < 1e-15);
    }

    #[test]
    fn box_contains_its_vertex_and_is_closed() {
        let m = generate_uniform(4).unwrap();
        let d = build_dual(&m);
        for v in 0..m.n_vertices() {
            for f in d.box_fragments(v) {
                assert_eq!(f.vertex, v);
                assert_eq!(f.polygon[0], m.vertices()[v]);
            }
            if !m.is_boundary_vertex(v) {
                // a closed polygon has zero net normal
                let s = d
                    .box_boundary(v)
                    .fold(Point2::default(), |acc, (seg, n)| acc + n * seg.length);
                assert!(s.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn flux_of_constant_and_linear_fields_vanish() {
        let m = generate_uniform(6).unwrap();
        let d = build_dual(&m);
        let constant = p1_gradients(&m, &vec![3.0; m.n_vertices()]);
        let xs: Vec<f64> = m.vertices().iter().map(|p| p.x).collect();
        let linear = p1_gradients(&m, &xs);
        for v in (0..m.n_vertices()).filter(|&v| !m.is_boundary_vertex(v)) {
            assert_eq!(box_boundary_integral_of_flux(&d, &constant, v).unwrap(), 0.0);
            assert!(box_boundary_integral_of_flux(&d, &linear, v).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_vertex_has_no_test_function() {
        let m = generate_uniform(4).unwrap();
        let d = build_dual(&m);
        let g = p1_gradients(&m, &vec![0.0; m.n_vertices()]);
        assert!(matches!(
            box_boundary_integral_of_flux(&d, &g, 0),
            Err(Error::BoundaryVertex(0))
        ));
    }

    #[test]
    fn hat_flux_equals_grid_diagonal() {
        let n = 4;
        let m = generate_uniform(n).unwrap();
        let d = build_dual(&m);
        let v = 2 * (n + 1) + 2;
        let g = p1_gradients(&m, &hat(&m, v));
        let flux = box_boundary_integral_of_flux(&d, &g, v).unwrap();
        assert!((flux - 4.0).abs() < 1e-13);
    }

    #[test]
    fn compactly_supported_flux_sums_to_zero() {
        let n = 10;
        let m = generate_uniform(n).unwrap();
        let d = build_dual(&m);
        // bump supported away from ∂Ω
        let u: Vec<f64> = m
            .vertices()
            .iter()
            .map(|p| {
                let r2 = p.x * p.x + p.y * p.y;
                if r2 < 0.5 {
                    (0.5 - r2).powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let g = p1_gradients(&m, &u);
        let total: f64 = (0..m.n_vertices())
            .filter(|&v| !m.is_boundary_vertex(v))
            .map(|v| box_boundary_integral_of_flux(&d, &g, v).unwrap())
            .sum();
        assert!(total.abs() < 1e-12);
    }
}
