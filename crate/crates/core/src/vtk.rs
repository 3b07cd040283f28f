//! Legacy ASCII VTK (version 3.0) export of meshes, box meshes and fields.

use std::io::Write;

use crate::dual::DualMesh;
use crate::mesh::TriMesh;
use crate::{Error, Result};

const VTK_TRIANGLE: u8 = 5;

/// Writes the triangulation as an `UNSTRUCTURED_GRID` with per-vertex
/// (`POINT_DATA`) and per-triangle (`CELL_DATA`) scalar fields.
pub fn write_mesh<W: Write>(
    mut w: W,
    title: &str,
    mesh: &TriMesh,
    point_fields: &[(&str, &[f64])],
    cell_fields: &[(&str, &[f64])],
) -> Result<()> {
    check_lengths(point_fields, mesh.n_vertices())?;
    check_lengths(cell_fields, mesh.n_triangles())?;

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e} 0", p.x, p.y)?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }
    write_fields(&mut w, "POINT_DATA", mesh.n_vertices(), point_fields)?;
    write_fields(&mut w, "CELL_DATA", nt, cell_fields)?;
    Ok(())
}

/// Writes the box fragments as `POLYDATA` quadrilaterals, tagged with the
/// owning vertex and the fragment area.
pub fn write_dual<W: Write>(mut w: W, title: &str, dual: &DualMesh) -> Result<()> {
    let frags = dual.fragments();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", 4 * frags.len())?;
    for f in frags {
        for p in f.polygon {
            writeln!(w, "{:.17e} {:.17e} 0", p.x, p.y)?;
        }
    }
    writeln!(w, "POLYGONS {} {}", frags.len(), 5 * frags.len())?;
    for i in 0..frags.len() {
        let b = 4 * i;
        writeln!(w, "4 {} {} {} {}", b, b + 1, b + 2, b + 3)?;
    }
    let owner: Vec<f64> = frags.iter().map(|f| f.vertex as f64).collect();
    let area: Vec<f64> = frags.iter().map(|f| f.area).collect();
    write_fields(&mut w, "CELL_DATA", frags.len(), &[("vertex", &owner), ("area", &area)])?;
    Ok(())
}

fn check_lengths(fields: &[(&str, &[f64])], n: usize) -> Result<()> {
    for (name, values) in fields {
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "field '{name}' has {} values, expected {n}",
                values.len()
            )));
        }
    }
    Ok(())
}

fn write_fields<W: Write>(w: &mut W, section: &str, n: usize, fields: &[(&str, &[f64])]) -> Result<()> {
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(w, "{section} {n}")?;
    for (name, values) in fields {
        let name: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values.iter() {
            writeln!(w, "{v:.17e}")?;
        }
    }
    Ok(())
}
