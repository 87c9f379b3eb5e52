//! Legacy ASCII VTK (POLYDATA) output with per-cell scalar fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SurfaceMesh;

pub fn write_vtk<W: Write>(mesh: &SurfaceMesh, title: &str, cell_fields: &[(&str, &[f64])], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
    }
    writeln!(out, "POLYGONS {} {}", mesh.n_triangles(), 4 * mesh.n_triangles())?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2])?;
    }
    if !cell_fields.is_empty() {
        writeln!(out, "CELL_DATA {}", mesh.n_triangles())?;
        for (name, values) in cell_fields {
            assert_eq!(values.len(), mesh.n_triangles(), "cell field '{name}' has the wrong length");
            writeln!(out, "SCALARS {} double 1", name.replace(char::is_whitespace, "_"))?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in *values {
                if v.is_finite() {
                    writeln!(out, "{v}")?;
                } else {
                    writeln!(out, "nan")?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_vtk_file(
    path: impl AsRef<Path>,
    mesh: &SurfaceMesh,
    title: &str,
    cell_fields: &[(&str, &[f64])],
) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_vtk(mesh, title, cell_fields, &mut out)?;
    out.flush()
}
