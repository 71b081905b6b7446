use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// One-dimensional mesh whose vertices are bulk vertices and whose segments
/// are bulk edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMesh {
    pub vertices: Vec<[f64; 3]>,
    pub segments: Vec<[usize; 2]>,
    /// Bulk-mesh index of each curve vertex.
    pub parent_vertex: Vec<usize>,
    pub radii: Vec<f64>,
    /// Curve vertices where inflow boundary data is imposed.
    pub inlets: Vec<usize>,
}

/// The branching curves used for the condition-number and iteration studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyGeometry {
    /// Vertical stem `x = 1/2, y ∈ [0, 3/4]` topped by `y = 3/4, x ∈ [1/4, 3/4]`.
    TShape,
    /// Stem `x = y = 1/2, z ∈ [0, 3/4]` with arms towards `+x` and `-y`.
    Branch3d,
}

impl StudyGeometry {
    pub fn for_dimension(dim: usize) -> Result<Self> {
        match dim {
            2 => Ok(StudyGeometry::TShape),
            3 => Ok(StudyGeometry::Branch3d),
            _ => Err(Error::Mesh(format!("no study curve in dimension {dim}"))),
        }
    }

    fn dimension(self) -> usize {
        match self {
            StudyGeometry::TShape => 2,
            StudyGeometry::Branch3d => 3,
        }
    }
}

/// Builds curve meshes edge by edge from lattice paths, sharing vertices.
pub(crate) struct CurveBuilder<'a> {
    mesh: &'a Mesh,
    local: Vec<Option<usize>>,
    curve: CurveMesh,
}

impl<'a> CurveBuilder<'a> {
    pub(crate) fn new(mesh: &'a Mesh) -> Self {
        CurveBuilder {
            mesh,
            local: vec![None; mesh.num_vertices()],
            curve: CurveMesh {
                vertices: vec![],
                segments: vec![],
                parent_vertex: vec![],
                radii: vec![],
                inlets: vec![],
            },
        }
    }

    pub(crate) fn num_vertices(&self) -> usize {
        self.curve.vertices.len()
    }

    pub(crate) fn is_used(&self, bulk: usize) -> bool {
        self.local[bulk].is_some()
    }

    /// Curve index of a bulk vertex, creating it with `radius` if new.
    pub(crate) fn vertex(&mut self, bulk: usize, radius: f64) -> usize {
        if let Some(q) = self.local[bulk] {
            return q;
        }
        let q = self.curve.vertices.len();
        self.local[bulk] = Some(q);
        self.curve.vertices.push(self.mesh.vertices()[bulk]);
        self.curve.parent_vertex.push(bulk);
        self.curve.radii.push(radius);
        q
    }

    /// Adds the straight lattice path from `from` along unit direction `dir`
    /// for `steps` edges.
    pub(crate) fn path(&mut self, from: [usize; 3], dir: [i64; 3], steps: usize, radius: f64) -> Result<()> {
        let mut cur = from;
        let mut a = self.vertex(self.mesh.lattice_vertex(cur)?, radius);
        for _ in 0..steps {
            for c in 0..3 {
                let next = cur[c] as i64 + dir[c];
                if next < 0 {
                    return Err(Error::Mesh(format!("curve path leaves the lattice at {cur:?}")));
                }
                cur[c] = next as usize;
            }
            let b = self.vertex(self.mesh.lattice_vertex(cur)?, radius);
            self.curve.segments.push([a, b]);
            a = b;
        }
        Ok(())
    }

    pub(crate) fn mark_inlet(&mut self, bulk: usize) {
        if let Some(q) = self.local[bulk] {
            self.curve.inlets.push(q);
        }
    }

    pub(crate) fn finish(self) -> CurveMesh {
        self.curve
    }
}

/// Study curve on a lattice mesh of the unit square or cube. The resolution
/// must be a multiple of 4 so that all corners of the curve are vertices.
pub fn embedded_curve(mesh: &Mesh, kind: StudyGeometry, radius: f64) -> Result<CurveMesh> {
    let n = mesh.resolution();
    if n % 4 != 0 {
        return Err(Error::Mesh(format!("study curves need a resolution divisible by 4, got {n}")));
    }
    if kind.dimension() != mesh.dim() {
        return Err(Error::Mesh(format!("{kind:?} curve needs a {}D mesh", kind.dimension())));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("curve radius must be positive, got {radius}")));
    }
    let (q, half, tq) = (n / 4, n / 2, 3 * n / 4);
    let mut b = CurveBuilder::new(mesh);
    match kind {
        StudyGeometry::TShape => {
            b.path([half, 0, 0], [0, 1, 0], tq, radius)?;
            b.path([q, tq, 0], [1, 0, 0], half, radius)?;
            b.mark_inlet(mesh.lattice_vertex([half, 0, 0])?);
        }
        StudyGeometry::Branch3d => {
            b.path([half, half, 0], [0, 0, 1], tq, radius)?;
            b.path([half, half, tq], [1, 0, 0], q, radius)?;
            b.path([half, half, tq], [0, -1, 0], q, radius)?;
            b.mark_inlet(mesh.lattice_vertex([half, half, 0])?);
        }
    }
    Ok(b.finish())
}

impl CurveMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_length(&self, s: usize) -> f64 {
        let [a, b] = self.segments[s];
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn total_length(&self) -> f64 {
        (0..self.num_segments()).map(|s| self.segment_length(s)).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices()];
        for &[a, b] in &self.segments {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// `∫_Γ π R²` with the radius interpolated linearly along segments.
    pub fn vessel_volume(&self) -> f64 {
        self.segments
            .iter()
            .enumerate()
            .map(|(s, &[a, b])| {
                let (ra, rb) = (self.radii[a], self.radii[b]);
                std::f64::consts::PI * self.segment_length(s) * (ra * ra + ra * rb + rb * rb) / 3.0
            })
            .sum()
    }

    /// True when every segment is an edge of `mesh`.
    pub fn conforms_to(&self, mesh: &Mesh) -> bool {
        let edges: HashSet<(usize, usize)> = mesh.edges().into_iter().collect();
        self.segments.iter().all(|&[a, b]| {
            let (p, q) = (self.parent_vertex[a], self.parent_vertex[b]);
            edges.contains(&(p.min(q), p.max(q)))
        })
    }
}

pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_cube_mesh, unit_square_mesh};

    #[test]
    fn t_shape_at_n4() {
        let m = unit_square_mesh(4).unwrap();
        let c = embedded_curve(&m, StudyGeometry::TShape, 0.02).unwrap();
        assert_eq!(c.num_segments(), 5);
        assert_eq!(c.num_vertices(), 6);
        let deg = c.degrees();
        assert_eq!(deg.iter().filter(|&&d| d == 3).count(), 1);
        assert_eq!(deg.iter().filter(|&&d| d == 1).count(), 3);
        assert!(c.conforms_to(&m));
        assert_eq!(c.inlets, vec![0]);
    }

    #[test]
    fn lengths_are_five_quarters() {
        for n in [4, 8, 32] {
            let m = unit_square_mesh(n).unwrap();
            let c = embedded_curve(&m, StudyGeometry::TShape, 0.02).unwrap();
            assert!((c.total_length() - 1.25).abs() < 1e-12);
            assert_eq!(c.num_vertices(), 5 * n / 4 + 1);
        }
        for n in [4, 8] {
            let m = unit_cube_mesh(n).unwrap();
            let c = embedded_curve(&m, StudyGeometry::Branch3d, 0.02).unwrap();
            assert!((c.total_length() - 1.25).abs() < 1e-12);
            assert!(c.conforms_to(&m));
            assert_eq!(c.degrees().iter().filter(|&&d| d == 3).count(), 1);
        }
    }

    #[test]
    fn rejects_bad_resolution_and_dimension() {
        let m = unit_square_mesh(6).unwrap();
        assert!(embedded_curve(&m, StudyGeometry::TShape, 0.02).is_err());
        let m = unit_square_mesh(8).unwrap();
        assert!(embedded_curve(&m, StudyGeometry::Branch3d, 0.02).is_err());
    }
}
