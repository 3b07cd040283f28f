//! Classification of the triangulation against the diffuse interface.

use crate::geometry::ImplicitDomain;
use crate::mesh::TriMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriangleTag {
    /// Meets the tube `S^ε`; part of the discrete tube `S^ε_h`.
    Tube,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexTag {
    /// Vertex of a tube triangle; its value is prescribed by `g̃_h`.
    ConstrainedInterface,
    /// On `∂Ω`; takes the outer Dirichlet value. Wins over the interface tag.
    ConstrainedOuter,
    Free,
}

impl VertexTag {
    pub fn is_constrained(self) -> bool {
        self != VertexTag::Free
    }

    pub fn code(self) -> i32 {
        match self {
            VertexTag::Free => 0,
            VertexTag::ConstrainedInterface => 1,
            VertexTag::ConstrainedOuter => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegionMap {
    pub triangle_tag: Vec<TriangleTag>,
    pub vertex_tag: Vec<VertexTag>,
    pub epsilon: f64,
    /// Largest diameter of tube triangles not contained in `S^ε` (crossed by `∂S^ε`).
    pub delta: f64,
    /// Largest diameter of triangles meeting `∂S^{ε+h}`, `h` the mesh size.
    pub kappa: f64,
}

impl RegionMap {
    pub fn n_tube(&self) -> usize {
        self.triangle_tag.iter().filter(|t| **t == TriangleTag::Tube).count()
    }

    pub fn n_free_vertices(&self) -> usize {
        self.vertex_tag.iter().filter(|t| **t == VertexTag::Free).count()
    }

    pub fn is_tube(&self, t: usize) -> bool {
        self.triangle_tag[t] == TriangleTag::Tube
    }
}

/// Builds `S^ε_h`, the constrained vertex set, and measures `δ` and `κ`.
///
/// A negative `eps` is treated as zero.
pub fn classify(mesh: &TriMesh, dom: &ImplicitDomain, eps: f64) -> RegionMap {
    let eps = eps.max(0.0);
    let h = mesh.max_diameter();
    let mut triangle_tag = Vec::with_capacity(mesh.n_triangles());
    let mut vertex_tag: Vec<VertexTag> = (0..mesh.n_vertices())
        .map(|v| {
            if mesh.is_boundary_vertex(v) {
                VertexTag::ConstrainedOuter
            } else {
                VertexTag::Free
            }
        })
        .collect();
    let mut delta: f64 = 0.0;
    let mut kappa: f64 = 0.0;

    for t in 0..mesh.n_triangles() {
        let p = mesh.triangle_points(t);
        let range = dom.distance_range(p);
        let diam = mesh.diameter(t);
        if range.meets_level(eps + h) {
            kappa = kappa.max(diam);
        }
        if range.meets_tube(eps) {
            triangle_tag.push(TriangleTag::Tube);
            if !range.inside_tube(eps) {
                delta = delta.max(diam);
            }
            for &v in &mesh.triangles()[t] {
                if vertex_tag[v] == VertexTag::Free {
                    vertex_tag[v] = VertexTag::ConstrainedInterface;
                }
            }
        } else {
            triangle_tag.push(TriangleTag::Free);
        }
    }

    RegionMap {
        triangle_tag,
        vertex_tag,
        epsilon: eps,
        delta,
        kappa,
    }
}
