//! Legacy VTK (ASCII) writers.

use std::io::Write;
use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::mesh::{CurveMesh, Mesh};

/// Writes the bulk mesh as an unstructured grid with optional point fields.
pub fn write_mesh<W: Write>(out: &mut W, mesh: &Mesh, fields: &[(&str, &[f64])]) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "perfuse mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    write_points(out, mesh.vertices())?;
    let k = mesh.nodes_per_cell();
    writeln!(out, "CELLS {} {}", mesh.num_cells(), mesh.num_cells() * (k + 1))?;
    for cell in mesh.cells() {
        write!(out, "{k}")?;
        for v in cell {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    let cell_type = if mesh.dim() == 2 { 5 } else { 10 };
    writeln!(out, "CELL_TYPES {}", mesh.num_cells())?;
    for _ in 0..mesh.num_cells() {
        writeln!(out, "{cell_type}")?;
    }
    write_point_data(out, mesh.num_vertices(), fields)
}

/// Writes the curve as polylines with one line per segment; radii are always
/// included as a point field.
pub fn write_curve<W: Write>(out: &mut W, curve: &CurveMesh, fields: &[(&str, &[f64])]) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "perfuse curve")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    write_points(out, &curve.vertices)?;
    writeln!(out, "LINES {} {}", curve.num_segments(), 3 * curve.num_segments())?;
    for &[a, b] in &curve.segments {
        writeln!(out, "2 {a} {b}")?;
    }
    let mut all: Vec<(&str, &[f64])> = vec![("radius", &curve.radii)];
    all.extend_from_slice(fields);
    write_point_data(out, curve.num_vertices(), &all)
}

fn write_points<W: Write>(out: &mut W, points: &[[f64; 3]]) -> std::io::Result<()> {
    writeln!(out, "POINTS {} double", points.len())?;
    for p in points {
        writeln!(out, "{:e} {:e} {:e}", p[0], p[1], p[2])?;
    }
    Ok(())
}

fn write_point_data<W: Write>(out: &mut W, n: usize, fields: &[(&str, &[f64])]) -> std::io::Result<()> {
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "POINT_DATA {n}")?;
    for (name, values) in fields {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values.iter() {
            writeln!(out, "{v:e}")?;
        }
    }
    Ok(())
}

fn check_fields(n: usize, fields: &[(&str, &[f64])]) -> Result<()> {
    for (_, values) in fields {
        check_len("vtk point field", n, values.len())?;
    }
    Ok(())
}

pub fn save_mesh(path: &Path, mesh: &Mesh, fields: &[(&str, &[f64])]) -> Result<()> {
    check_fields(mesh.num_vertices(), fields)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_mesh(&mut out, mesh, fields)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn save_curve(path: &Path, curve: &CurveMesh, fields: &[(&str, &[f64])]) -> Result<()> {
    check_fields(curve.num_vertices(), fields)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_curve(&mut out, curve, fields)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
