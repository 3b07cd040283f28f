//! Conforming triangulations of the hold-all square with vertex/edge
//! adjacency, boundary flags, and local refinement around an interface.

use std::collections::HashMap;

use crate::geometry::{self, ImplicitDomain, Point2};
use crate::{Error, Result};

/// Membership of a vertex in the interior set or on the outer boundary `∂Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexFlag {
    Interior,
    OuterBoundary,
}

/// A mesh edge with its one (boundary) or two (interior) adjacent triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: [usize; 2],
    pub n_triangles: u8,
}

impl Edge {
    #[inline]
    pub fn is_boundary(&self) -> bool {
        self.n_triangles == 1
    }
}

/// Conforming, counterclockwise-oriented triangulation.
///
/// For meshes produced by [`generate_uniform`] and [`refine_near_interface`]
/// the edge opposite local vertex 0 of each triangle is its refinement
/// (bisection) edge.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    vertex_flags: Vec<VertexFlag>,
    incident: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// `triangle_edges[t][k]` joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    h_grid: Option<f64>,
}

#[inline]
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    /// Builds the adjacency structure for a triangle soup.
    ///
    /// Triangles must be counterclockwise with positive area, and every edge
    /// must be shared by at most two triangles.
    pub fn from_triangles(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = geometry::signed_area(a, b, c);
            let scale = geometry::diameter([a, b, c]);
            if !(area > 1e-14 * scale * scale) {
                return Err(Error::DegenerateElement(t));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 2);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [t, usize::MAX],
                        n_triangles: 0,
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[e];
                match edge.n_triangles {
                    0 => edge.triangles[0] = t,
                    1 => edge.triangles[1] = t,
                    _ => {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({}, {}) shared by more than two triangles",
                            key.0, key.1
                        )))
                    }
                }
                edge.n_triangles += 1;
                te[k] = e;
            }
            triangle_edges.push(te);
        }

        let mut incident = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                incident[v].push(t);
            }
        }
        let mut vertex_flags = vec![VertexFlag::Interior; nv];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            vertex_flags[e.vertices[0]] = VertexFlag::OuterBoundary;
            vertex_flags[e.vertices[1]] = VertexFlag::OuterBoundary;
        }

        Ok(TriMesh {
            vertices,
            triangles,
            vertex_flags,
            incident,
            edges,
            triangle_edges,
            h_grid: None,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_flags(&self) -> &[VertexFlag] {
        &self.vertex_flags
    }

    /// Triangles sharing vertex `v` (the set `w_v`).
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Spacing `2/n` of the structured grid this mesh was generated from.
    pub fn h_grid(&self) -> Option<f64> {
        self.h_grid
    }

    #[inline]
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_flags[v] == VertexFlag::OuterBoundary
    }

    #[inline]
    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    #[inline]
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        geometry::signed_area(a, b, c)
    }

    /// Compensated (Neumaier) sum of the triangle areas.
    pub fn total_area(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for t in 0..self.n_triangles() {
            let a = self.area(t);
            let s = sum + a;
            comp += if sum.abs() >= a.abs() { (sum - s) + a } else { (a - s) + sum };
            sum = s;
        }
        sum + comp
    }

    #[inline]
    pub fn diameter(&self, t: usize) -> f64 {
        geometry::diameter(self.triangle_points(t))
    }

    /// `h = max_t h_t`.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    pub fn min_angle_degrees(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| geometry::min_angle_degrees(self.triangle_points(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Gradients of the three local hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Point2; 3] {
        let p = self.triangle_points(t);
        let two_area = 2.0 * geometry::signed_area(p[0], p[1], p[2]);
        // ∇λ_k = perp(p_{k+2} - p_{k+1}) / (2|t|), with perp rotating by -90°
        std::array::from_fn(|k| (p[(k + 2) % 3] - p[(k + 1) % 3]).perp_cw() * (-1.0 / two_area))
    }

    /// Verifies orientation, conformity (no hanging vertices), the Euler
    /// relation for a simply connected domain, and the minimum angle bound.
    pub fn check_invariants(&self, min_angle_deg: f64) -> Result<()> {
        for t in 0..self.n_triangles() {
            if !(self.area(t) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} is not positively oriented")));
            }
        }
        let (nv, ne, nt) = (self.n_vertices() as i64, self.edges.len() as i64, self.n_triangles() as i64);
        if nv - ne + nt != 1 {
            return Err(Error::InvalidMesh(format!("Euler characteristic V-E+T = {}", nv - ne + nt)));
        }
        // A hanging vertex shows up as a boundary vertex lying inside another boundary edge.
        let bverts: Vec<usize> = (0..self.n_vertices()).filter(|&v| self.is_boundary_vertex(v)).collect();
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let (a, b) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
            let len = a.dist(b);
            for &v in &bverts {
                if v == e.vertices[0] || v == e.vertices[1] {
                    continue;
                }
                let p = self.vertices[v];
                if geometry::point_segment_distance(p, a, b) < 1e-12 * len {
                    return Err(Error::InvalidMesh(format!(
                        "hanging vertex {v} on edge ({}, {})",
                        e.vertices[0], e.vertices[1]
                    )));
                }
            }
        }
        let min_angle = self.min_angle_degrees();
        if min_angle < min_angle_deg {
            return Err(Error::InvalidMesh(format!(
                "minimum angle {min_angle:.3}° below threshold {min_angle_deg}°"
            )));
        }
        Ok(())
    }
}

/// Structured triangulation of `(-1, 1)²` with `n × n` squares, each split by
/// its lower-left to upper-right diagonal.
pub fn generate_uniform(n: usize) -> Result<TriMesh> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution must be >= 2, got {n}")));
    }
    let h = 2.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints at ±1
            let x = if i == n { 1.0 } else { -1.0 + i as f64 * h };
            let y = if j == n { 1.0 } else { -1.0 + j as f64 * h };
            vertices.push(Point2::xy(x, y));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p11, p01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // right-angle vertex first, so the diagonal is the refinement edge
            triangles.push([p10, p11, p00]);
            triangles.push([p01, p00, p11]);
        }
    }
    let mut mesh = TriMesh::from_triangles(vertices, triangles)?;
    mesh.h_grid = Some(h);
    Ok(mesh)
}

/// Free-function form of [`TriMesh::max_diameter`].
pub fn max_diameter(mesh: &TriMesh) -> f64 {
    mesh.max_diameter()
}

#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    pub max_sweeps: usize,
    pub min_angle_deg: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_sweeps: 25,
            min_angle_deg: 20.0,
        }
    }
}

/// Refines every triangle meeting the band `{|d| <= band}` until its
/// diameter is at most `target`.
///
/// Each sweep splits the marked triangles into four similar children (two
/// nested newest-vertex bisections) and closes the mesh conformingly by
/// bisecting neighbours across split edges. Existing vertices never move.
pub fn refine_near_interface(
    mesh: &TriMesh,
    dom: &ImplicitDomain,
    band: f64,
    target: f64,
) -> Result<TriMesh> {
    refine_near_interface_with(mesh, dom, band, target, RefineOptions::default())
}

pub fn refine_near_interface_with(
    mesh: &TriMesh,
    dom: &ImplicitDomain,
    band: f64,
    target: f64,
    opts: RefineOptions,
) -> Result<TriMesh> {
    if !(band > 0.0) || !(target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "band and target must be positive (band={band}, target={target})"
        )));
    }
    let wants_refinement = |verts: &[Point2], tri: &[usize; 3]| {
        let p = tri.map(|v| verts[v]);
        geometry::diameter(p) > target && dom.distance_range(p).meets_tube(band)
    };

    let mut vertices = mesh.vertices.clone();
    let mut triangles = mesh.triangles.clone();
    let mut levels = vec![0u32; triangles.len()];
    let mut sweeps = 0;
    loop {
        let marked: Vec<Option<u32>> = triangles
            .iter()
            .zip(&levels)
            .map(|(tri, &l)| wants_refinement(&vertices, tri).then_some(l + 2))
            .collect();
        if marked.iter().all(Option::is_none) {
            break;
        }
        if sweeps == opts.max_sweeps {
            return Err(Error::RefinementLimit(opts.max_sweeps));
        }
        sweeps += 1;

        // first bisection of every marked triangle, then of their children
        let mut goal = marked;
        for _ in 0..2 {
            let flags: Vec<bool> = goal
                .iter()
                .zip(&levels)
                .map(|(g, &l)| g.is_some_and(|g| l < g))
                .collect();
            let out = bisect_round(&mut vertices, &triangles, &levels, &flags);
            goal = out.parents.iter().map(|&p| goal[p]).collect();
            triangles = out.triangles;
            levels = out.levels;
        }
    }

    if sweeps == 0 {
        return Ok(mesh.clone());
    }
    let mut refined = TriMesh::from_triangles(vertices, triangles)?;
    refined.h_grid = mesh.h_grid;
    refined.check_invariants(opts.min_angle_deg)?;
    Ok(refined)
}

struct BisectOutput {
    triangles: Vec<[usize; 3]>,
    levels: Vec<u32>,
    parents: Vec<usize>,
}

/// One round of conforming newest-vertex bisection: every flagged triangle is
/// bisected at least once, and every triangle touching a split edge is
/// bisected until that edge is split in it too.
fn bisect_round(
    vertices: &mut Vec<Point2>,
    triangles: &[[usize; 3]],
    levels: &[u32],
    flags: &[bool],
) -> BisectOutput {
    let mut adjacency: HashMap<(usize, usize), [usize; 2]> = HashMap::with_capacity(triangles.len() * 2);
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            adjacency
                .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                .and_modify(|a| a[1] = t)
                .or_insert([t, usize::MAX]);
        }
    }
    let refinement_edge = |t: usize| edge_key(triangles[t][1], triangles[t][2]);

    // closure: a triangle with any split edge must also split its refinement edge
    let mut split: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue: Vec<(usize, usize)> = Vec::new();
    let mut push = |e: (usize, usize), split: &mut HashMap<_, _>, queue: &mut Vec<_>| {
        if let std::collections::hash_map::Entry::Vacant(slot) = split.entry(e) {
            slot.insert(usize::MAX);
            order.push(e);
            queue.push(e);
        }
    };
    for t in (0..triangles.len()).filter(|&t| flags[t]) {
        push(refinement_edge(t), &mut split, &mut queue);
        while let Some(e) = queue.pop() {
            for &nt in adjacency[&e].iter().filter(|&&nt| nt != usize::MAX) {
                push(refinement_edge(nt), &mut split, &mut queue);
            }
        }
    }
    for e in &order {
        let m = vertices[e.0].midpoint(vertices[e.1]);
        vertices.push(m);
        split.insert(*e, vertices.len() - 1);
    }

    let mut out = BisectOutput {
        triangles: Vec::with_capacity(triangles.len() + 2 * order.len()),
        levels: Vec::with_capacity(triangles.len() + 2 * order.len()),
        parents: Vec::with_capacity(triangles.len() + 2 * order.len()),
    };
    let mut stack = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        stack.push((*tri, levels[t]));
        while let Some((tri, level)) = stack.pop() {
            match split.get(&edge_key(tri[1], tri[2])) {
                Some(&m) => {
                    // pushed in reverse so children come out in order
                    stack.push(([m, tri[2], tri[0]], level + 1));
                    stack.push(([m, tri[0], tri[1]], level + 1));
                }
                None => {
                    out.triangles.push(tri);
                    out.levels.push(level);
                    out.parents.push(t);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_conforming(mesh: &TriMesh) {
        mesh.check_invariants(20.0).unwrap();
        for e in mesh.edges() {
            let a = mesh.vertices()[e.vertices[0]];
            let b = mesh.vertices()[e.vertices[1]];
            let on_square = |p: Point2| p.x.abs() == 1.0 || p.y.abs() == 1.0;
            let same_side = (a.x == b.x && a.x.abs() == 1.0) || (a.y == b.y && a.y.abs() == 1.0);
            if e.is_boundary() {
                assert!(on_square(a) && on_square(b) && same_side);
            } else {
                assert_eq!(e.n_triangles, 2);
            }
        }
    }

    #[test]
    fn uniform_two_by_two() {
        let m = generate_uniform(2).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_triangles(), 8);
        let outer = m.vertex_flags().iter().filter(|f| **f == VertexFlag::OuterBoundary).count();
        assert_eq!(outer, 8);
        assert_eq!(m.vertex_flags()[4], VertexFlag::Interior);
        assert!((m.max_diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_conforming(&m);
    }

    #[test]
    fn uniform_rejects_small_n() {
        assert!(generate_uniform(1).is_err());
        assert!(generate_uniform(0).is_err());
    }

    #[test]
    fn uniform_counts_and_area() {
        for n in [2, 3, 5, 8, 36] {
            let m = generate_uniform(n).unwrap();
            assert_eq!(m.n_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.n_triangles(), 2 * n * n);
            assert!((m.total_area() - 4.0).abs() < 1e-12);
            assert!((m.max_diameter() - 2.0 * 2f64.sqrt() / n as f64).abs() < 1e-14);
            assert_conforming(&m);
        }
        let fine = generate_uniform(288).unwrap();
        assert!((fine.h_grid().unwrap() - 0.006944444444444444).abs() < 1e-15);
    }

    #[test]
    fn reference_triangle_diameter() {
        let m = TriMesh::from_triangles(
            vec![Point2::xy(0.0, 0.0), Point2::xy(1.0, 0.0), Point2::xy(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!((max_diameter(&m) - 2f64.sqrt()).abs() < 1e-15);
        assert!(m.vertex_flags().iter().all(|f| *f == VertexFlag::OuterBoundary));
    }

    #[test]
    fn rejects_clockwise_and_overshared_edges() {
        let v = vec![Point2::xy(0.0, 0.0), Point2::xy(1.0, 0.0), Point2::xy(0.0, 1.0)];
        assert!(matches!(
            TriMesh::from_triangles(v.clone(), vec![[0, 2, 1]]),
            Err(Error::DegenerateElement(0))
        ));
        let mut v4 = v;
        v4.push(Point2::xy(1.0, 1.0));
        v4.push(Point2::xy(-1.0, -1.0));
        let r = TriMesh::from_triangles(v4, vec![[0, 1, 2], [1, 3, 2], [4, 1, 2]]);
        assert!(r.is_err());
    }

    #[test]
    fn hat_gradients_sum_to_zero_and_interpolate() {
        let m = generate_uniform(3).unwrap();
        for t in 0..m.n_triangles() {
            let g = m.hat_gradients(t);
            let s = g[0] + g[1] + g[2];
            assert!(s.norm() < 1e-13);
            // ∇(Σ x_k λ_k) = (1, 0)
            let p = m.triangle_points(t);
            let gx = g[0] * p[0].x + g[1] * p[1].x + g[2] * p[2].x;
            assert!((gx.x - 1.0).abs() < 1e-13 && gx.y.abs() < 1e-13);
        }
    }

    #[test]
    fn incident_sets_tile_without_overlap() {
        let m = generate_uniform(5).unwrap();
        for v in 0..m.n_vertices() {
            let tris = m.incident(v);
            for (i, &a) in tris.iter().enumerate() {
                for &b in &tris[i + 1..] {
                    // interiors are disjoint: neither barycenter inside the other triangle
                    let ca = geometry::barycenter(m.triangle_points(a));
                    assert!(!geometry::triangle_contains(m.triangle_points(b), ca));
                }
            }
        }
        let interior_center = 3 * 6 + 2;
        assert_eq!(m.incident(interior_center).len(), 6);
    }

    #[test]
    fn refine_with_large_target_is_identity() {
        let m = generate_uniform(6).unwrap();
        let dom = ImplicitDomain::unit_circle();
        let r = refine_near_interface(&m, &dom, 0.1, m.max_diameter()).unwrap();
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.triangles(), m.triangles());
    }

    #[test]
    fn refine_band_reaches_target() {
        let m = generate_uniform(36).unwrap();
        let dom = ImplicitDomain::unit_circle();
        let target = (2.0f64 / 36.0).powi(2);
        let r = refine_near_interface(&m, &dom, 0.1, target).unwrap();
        for t in 0..r.n_triangles() {
            let p = r.triangle_points(t);
            if dom.distance_range(p).meets_tube(0.1) {
                assert!(r.diameter(t) <= 0.00309);
            }
        }
        assert!((r.total_area() - 4.0).abs() < 1e-12, "{}", r.total_area() - 4.0);
        assert_conforming(&r);
        // original vertices untouched
        assert_eq!(&r.vertices()[..m.n_vertices()], m.vertices());
    }

    #[test]
    fn refine_sweep_limit() {
        let m = generate_uniform(4).unwrap();
        let dom = ImplicitDomain::unit_circle();
        let opts = RefineOptions {
            max_sweeps: 1,
            ..Default::default()
        };
        let r = refine_near_interface_with(&m, &dom, 0.05, 1e-3, opts);
        assert!(matches!(r, Err(Error::RefinementLimit(1))));
        assert!(refine_near_interface(&m, &dom, 0.0, 1e-3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn refinement_preserves_invariants(
            n in 2usize..12, cx in -0.5..0.5f64, cy in -0.5..0.5f64,
            radius in 0.2..0.9f64, band in 0.01..0.2f64, factor in 0.1..0.9f64
        ) {
            let m = generate_uniform(n).unwrap();
            let dom = ImplicitDomain::circle(Point2::xy(cx, cy), radius);
            let target = factor * m.max_diameter() / 2.0;
            let r = refine_near_interface(&m, &dom, band, target).unwrap();
            prop_assert!((r.total_area() - 4.0).abs() < 1e-12);
            prop_assert_eq!(&r.vertices()[..m.n_vertices()], m.vertices());
            assert_conforming(&r);
            prop_assert!(r.min_angle_degrees() >= 45.0 - 1e-9);
        }
    }
}
