//! Continuous piecewise-linear finite elements on simplicial meshes.

use std::path::Path;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{vtk, CurveMesh, Mesh};

/// P1 space on a mesh of `d`-simplices embedded in three dimensions. The
/// degrees of freedom are the vertices, in vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpace {
    points: Vec<[f64; 3]>,
    cells: Vec<usize>,
    cell_dim: usize,
}

impl FunctionSpace {
    pub fn on_mesh(mesh: &Mesh) -> Arc<Self> {
        let cells = mesh.cells().flatten().copied().collect();
        Arc::new(FunctionSpace {
            points: mesh.vertices().to_vec(),
            cells,
            cell_dim: mesh.dim(),
        })
    }

    pub fn on_curve(curve: &CurveMesh) -> Arc<Self> {
        Arc::new(FunctionSpace {
            points: curve.vertices.clone(),
            cells: curve.segments.iter().flatten().copied().collect(),
            cell_dim: 1,
        })
    }

    /// Builds a space from raw simplices of topological dimension `cell_dim`.
    pub fn from_simplices(points: Vec<[f64; 3]>, cells: Vec<usize>, cell_dim: usize) -> Result<Arc<Self>> {
        if !(1..=3).contains(&cell_dim) || cells.len() % (cell_dim + 1) != 0 {
            return Err(Error::Mesh(format!("{} indices do not form {cell_dim}-simplices", cells.len())));
        }
        if let Some(&bad) = cells.iter().find(|&&v| v >= points.len()) {
            return Err(Error::Mesh(format!("cell refers to vertex {bad} of {}", points.len())));
        }
        Ok(Arc::new(FunctionSpace { points, cells, cell_dim }))
    }

    pub fn dof_count(&self) -> usize {
        self.points.len()
    }

    pub fn dof_coords(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn cell_dim(&self) -> usize {
        self.cell_dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.cell_dim + 1)
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.cell_dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    /// Measure of cell `c` together with the local stiffness matrix.
    fn local(&self, c: usize) -> Result<(f64, [[f64; 4]; 4])> {
        let d = self.cell_dim;
        let cell = self.cell(c);
        let p0 = self.points[cell[0]];
        let mut edges = [[0.0; 3]; 3];
        for i in 0..d {
            let p = self.points[cell[i + 1]];
            edges[i] = [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]];
        }
        let mut gram = [[0.0; 3]; 3];
        let mut scale = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                gram[i][j] = (0..3).map(|a| edges[i][a] * edges[j][a]).sum();
            }
            scale = scale.max(gram[i][i]);
        }
        let det = det_small(&gram, d);
        if !(det > 1e-13 * scale.powi(d as i32)) {
            return Err(Error::DegenerateCell(c));
        }
        let measure = det.sqrt() / FACTORIAL[d];
        let ginv = inverse_small(&gram, d, det);
        // B = [-1 ... -1; I], stiffness = |K| B G^{-1} B'
        let mut k = [[0.0; 4]; 4];
        let row = |i: usize, j: usize| -> f64 {
            match (i, j) {
                (0, 0) => (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| ginv[a][b]).sum(),
                (0, j) => -(0..d).map(|a| ginv[a][j - 1]).sum::<f64>(),
                (i, 0) => -(0..d).map(|b| ginv[i - 1][b]).sum::<f64>(),
                (i, j) => ginv[i - 1][j - 1],
            }
        };
        for (i, ki) in k.iter_mut().enumerate().take(d + 1) {
            for (j, kij) in ki.iter_mut().enumerate().take(d + 1) {
                *kij = measure * row(i, j);
            }
        }
        Ok((measure, k))
    }

    pub fn cell_measure(&self, c: usize) -> Result<f64> {
        self.local(c).map(|(m, _)| m)
    }

    /// Total measure of the mesh.
    pub fn measure(&self) -> Result<f64> {
        (0..self.num_cells()).map(|c| self.cell_measure(c)).sum()
    }
}

const FACTORIAL: [f64; 4] = [1.0, 1.0, 2.0, 6.0];

fn det_small(g: &[[f64; 3]; 3], d: usize) -> f64 {
    match d {
        1 => g[0][0],
        2 => g[0][0] * g[1][1] - g[0][1] * g[1][0],
        _ => {
            g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
        }
    }
}

fn inverse_small(g: &[[f64; 3]; 3], d: usize, det: f64) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    match d {
        1 => inv[0][0] = 1.0 / g[0][0],
        2 => {
            inv[0][0] = g[1][1] / det;
            inv[1][1] = g[0][0] / det;
            inv[0][1] = -g[0][1] / det;
            inv[1][0] = -g[1][0] / det;
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let (r1, r2) = ((j + 1) % 3, (j + 2) % 3);
                    let (c1, c2) = ((i + 1) % 3, (i + 2) % 3);
                    inv[i][j] = (g[r1][c1] * g[r2][c2] - g[r1][c2] * g[r2][c1]) / det;
                }
            }
        }
    }
    inv
}

/// Mass matrix `∫ φ_i φ_j`, integrated exactly.
pub fn assemble_mass(space: &FunctionSpace) -> Result<SparseMatrix> {
    let d = space.cell_dim;
    let k = d + 1;
    let denom = ((d + 1) * (d + 2)) as f64;
    let mut t = TripletBuilder::with_capacity(space.dof_count(), space.dof_count(), space.num_cells() * k * k);
    for c in 0..space.num_cells() {
        let vol = space.cell_measure(c)?;
        let cell = space.cell(c);
        for (a, &i) in cell.iter().enumerate() {
            for (b, &j) in cell.iter().enumerate() {
                let factor = if a == b { 2.0 } else { 1.0 };
                t.push(i, j, vol * factor / denom);
            }
        }
    }
    Ok(t.build())
}

/// Stiffness matrix `∫ ∇φ_i · ∇φ_j` (tangential gradients on curves).
pub fn assemble_stiffness(space: &FunctionSpace) -> Result<SparseMatrix> {
    let k = space.cell_dim + 1;
    let mut t = TripletBuilder::with_capacity(space.dof_count(), space.dof_count(), space.num_cells() * k * k);
    for c in 0..space.num_cells() {
        let (_, local) = space.local(c)?;
        let cell = space.cell(c);
        for (a, &i) in cell.iter().enumerate() {
            for (b, &j) in cell.iter().enumerate() {
                t.push(i, j, local[a][b]);
            }
        }
    }
    Ok(t.build())
}

/// Coefficient vector attached to a space.
#[derive(Debug, Clone, PartialEq)]
pub struct FemVector {
    pub space: Arc<FunctionSpace>,
    pub coefficients: Vec<f64>,
}

impl FemVector {
    pub fn new(space: Arc<FunctionSpace>, coefficients: Vec<f64>) -> Result<Self> {
        check_len("fem vector", space.dof_count(), coefficients.len())?;
        Ok(FemVector { space, coefficients })
    }

    pub fn zeros(space: Arc<FunctionSpace>) -> Self {
        let n = space.dof_count();
        FemVector {
            space,
            coefficients: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Nodal interpolation of `f`.
pub fn interpolate(space: &Arc<FunctionSpace>, f: impl Fn([f64; 3]) -> f64) -> Result<FemVector> {
    let mut coefficients = Vec::with_capacity(space.dof_count());
    for &p in space.dof_coords() {
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("interpolated function at {p:?}")));
        }
        coefficients.push(v);
    }
    Ok(FemVector {
        space: Arc::clone(space),
        coefficients,
    })
}

/// Writes named bulk fields as VTK point data.
pub fn save_vtk(path: &Path, mesh: &Mesh, fields: &[(&str, &FemVector)]) -> Result<()> {
    let raw: Vec<(&str, &[f64])> = fields.iter().map(|(n, v)| (*n, v.coefficients.as_slice())).collect();
    vtk::save_mesh(path, mesh, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{embedded_curve, unit_cube_mesh, unit_square_mesh, StudyGeometry};

    fn interval(n: usize) -> Arc<FunctionSpace> {
        let pts = (0..=n).map(|i| [i as f64 / n as f64, 0.0, 0.0]).collect();
        let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
        FunctionSpace::from_simplices(pts, cells, 1).unwrap()
    }

    #[test]
    fn interval_matrices_by_hand() {
        let s = interval(2);
        let h = 0.5;
        let m = assemble_mass(&s).unwrap().to_dense();
        let expect_m = [[2.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 2.0]];
        let a = assemble_stiffness(&s).unwrap().to_dense();
        let expect_a = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[(i, j)] - h / 6.0 * expect_m[i][j]).abs() < 1e-15);
                assert!((a[(i, j)] - expect_a[i][j] / h).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_totals() {
        let sq = FunctionSpace::on_mesh(&unit_square_mesh(5).unwrap());
        let cube = FunctionSpace::on_mesh(&unit_cube_mesh(3).unwrap());
        for s in [&sq, &cube] {
            let total: f64 = assemble_mass(s).unwrap().values().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let m = unit_cube_mesh(8).unwrap();
        let c = embedded_curve(&m, StudyGeometry::Branch3d, 0.02).unwrap();
        let g = FunctionSpace::on_curve(&c);
        let mg = assemble_mass(&g).unwrap();
        assert!((mg.values().iter().sum::<f64>() - 1.25).abs() < 1e-12);
        assert!(mg.is_symmetric(1e-15));
    }

    #[test]
    fn five_point_stencil() {
        let s = FunctionSpace::on_mesh(&unit_square_mesh(2).unwrap());
        let a = assemble_stiffness(&s).unwrap();
        // centre vertex (1, 1) has index 4
        assert!((a.get(4, 4) - 4.0).abs() < 1e-14);
        for nb in [1, 3, 5, 7] {
            assert!((a.get(4, nb) + 1.0).abs() < 1e-14);
        }
        assert_eq!(a.get(4, 0), 0.0);
    }

    #[test]
    fn constants_in_kernel() {
        for s in [
            FunctionSpace::on_mesh(&unit_square_mesh(4).unwrap()),
            FunctionSpace::on_mesh(&unit_cube_mesh(3).unwrap()),
        ] {
            let a = assemble_stiffness(&s).unwrap();
            let r = a.spmv(&vec![1.0; s.dof_count()]).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn linear_energy_is_exact() {
        let s = FunctionSpace::on_mesh(&unit_cube_mesh(3).unwrap());
        let a = assemble_stiffness(&s).unwrap();
        let u = interpolate(&s, |p| 2.0 * p[0] - p[1] + 0.5 * p[2]).unwrap();
        let au = a.spmv(&u.coefficients).unwrap();
        let energy: f64 = au.iter().zip(&u.coefficients).map(|(x, y)| x * y).sum();
        assert!((energy - 5.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cell_is_named() {
        let s = FunctionSpace::from_simplices(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![0, 1, 2], 2).unwrap();
        assert!(matches!(assemble_mass(&s), Err(Error::DegenerateCell(0))));
    }

    #[test]
    fn interpolation_rejects_nan() {
        let s = interval(3);
        assert!(interpolate(&s, |_| f64::NAN).is_err());
        let x = interpolate(&s, |p| p[0]).unwrap();
        assert_eq!(x.coefficients, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }
}
