//! Coupling between the bulk space and the curve space: the trace in 2D and
//! the circle average around the curve in 3D.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::{FemVector, FunctionSpace};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{CurveMesh, Mesh};

/// Sparse coupling matrix with rows indexed by curve dofs and columns by bulk
/// dofs: `pi[q, i] = ∫_Γ ψ_q (Π φ_i)`.
#[derive(Debug, Clone)]
pub struct CouplingOperator {
    pub pi: SparseMatrix,
    pub radius_field: Vec<f64>,
    /// Points per circle actually used; 0 for the trace.
    pub quadrature_points_per_circle: usize,
}

/// How many points to place on each averaging circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CircleQuadrature {
    Fixed(usize),
    /// Start from `start` points and double until no entry moves by more
    /// than `tol` times the largest entry, or `max` points are reached.
    Adaptive { start: usize, tol: f64, max: usize },
}

impl Default for CircleQuadrature {
    fn default() -> Self {
        CircleQuadrature::Adaptive {
            start: 16,
            tol: 1e-9,
            max: 1 << 16,
        }
    }
}

fn check_spaces(omega: &FunctionSpace, gamma: &FunctionSpace, curve: &CurveMesh) -> Result<()> {
    check_len("curve space dofs", curve.num_vertices(), gamma.dof_count())?;
    check_len("curve radii", curve.num_vertices(), curve.radii.len())?;
    for (q, &v) in curve.parent_vertex.iter().enumerate() {
        let bulk = omega.dof_coords().get(v).copied();
        if bulk != Some(curve.vertices[q]) {
            return Err(Error::Mesh(format!("curve vertex {q} is not bulk vertex {v}")));
        }
    }
    Ok(())
}

/// Trace coupling: `∫_Γ ψ_q φ_i`, exact for P1 traces along bulk edges.
pub fn assemble_trace(omega: &FunctionSpace, gamma: &FunctionSpace, curve: &CurveMesh) -> Result<CouplingOperator> {
    check_spaces(omega, gamma, curve)?;
    let mut t = TripletBuilder::new(gamma.dof_count(), omega.dof_count());
    for (s, &[a, b]) in curve.segments.iter().enumerate() {
        let len = curve.segment_length(s);
        let (pa, pb) = (curve.parent_vertex[a], curve.parent_vertex[b]);
        t.push(a, pa, len / 3.0);
        t.push(a, pb, len / 6.0);
        t.push(b, pa, len / 6.0);
        t.push(b, pb, len / 3.0);
    }
    Ok(CouplingOperator {
        pi: t.build(),
        radius_field: curve.radii.clone(),
        quadrature_points_per_circle: 0,
    })
}

/// Circle-average coupling for a curve inside a 3D lattice mesh.
///
/// Each segment uses two Gauss points; at each one the bulk basis functions
/// are averaged over `nq` equispaced points of the circle orthogonal to the
/// segment, with the radius interpolated from the vertex radii. Circle points
/// falling outside the box are clamped onto it.
pub fn assemble_averaging(mesh: &Mesh, gamma: &FunctionSpace, curve: &CurveMesh, quadrature: CircleQuadrature) -> Result<CouplingOperator> {
    if mesh.dim() != 3 {
        return Err(Error::Mesh("circle averaging needs a 3D mesh".into()));
    }
    check_len("curve space dofs", curve.num_vertices(), gamma.dof_count())?;
    if let Some(r) = curve.radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidParameter(format!("averaging radius must be positive, got {r}")));
    }
    let (pi, nq) = match quadrature {
        CircleQuadrature::Fixed(nq) => (averaging_matrix(mesh, curve, nq)?, nq),
        CircleQuadrature::Adaptive { start, tol, max } => {
            let mut nq = start.max(3);
            let mut current = averaging_matrix(mesh, curve, nq)?;
            while 2 * nq <= max {
                let finer = averaging_matrix(mesh, curve, 2 * nq)?;
                nq *= 2;
                let change = max_entry_change(&current, &finer);
                current = finer;
                if change <= tol * current.max_abs() {
                    break;
                }
            }
            (current, nq)
        }
    };
    Ok(CouplingOperator {
        pi,
        radius_field: curve.radii.clone(),
        quadrature_points_per_circle: nq,
    })
}

fn max_entry_change(a: &SparseMatrix, b: &SparseMatrix) -> f64 {
    match a.add(1.0, b, -1.0) {
        Ok(d) => d.max_abs(),
        Err(_) => f64::INFINITY,
    }
}

fn averaging_matrix(mesh: &Mesh, curve: &CurveMesh, nq: usize) -> Result<SparseMatrix> {
    if nq == 0 {
        return Err(Error::InvalidParameter("circle quadrature needs at least one point".into()));
    }
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let extent = mesh.extent();
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..nq)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / nq as f64;
            (theta.cos(), theta.sin())
        })
        .unzip();
    let mut t = TripletBuilder::new(curve.num_vertices(), mesh.num_vertices());
    let mut row = Vec::new();
    for (s, &[a, b]) in curve.segments.iter().enumerate() {
        let (xa, xb) = (curve.vertices[a], curve.vertices[b]);
        let len = curve.segment_length(s);
        let tangent = [(xb[0] - xa[0]) / len, (xb[1] - xa[1]) / len, (xb[2] - xa[2]) / len];
        let (e1, e2) = normal_frame(tangent);
        for &xi in &gauss {
            let x = [0.0, 1.0, 2.0].map(|c: f64| {
                let c = c as usize;
                xa[c] + xi * (xb[c] - xa[c])
            });
            let radius = (1.0 - xi) * curve.radii[a] + xi * curve.radii[b];
            let weight = 0.5 * len / nq as f64;
            row.clear();
            for j in 0..nq {
                let y = [0, 1, 2].map(|c| (x[c] + radius * (cos[j] * e1[c] + sin[j] * e2[c])).clamp(0.0, extent));
                let loc = mesh.locate(y)?;
                row.extend(loc.iter());
            }
            for &(i, phi) in &row {
                if phi != 0.0 {
                    t.push(a, i, (1.0 - xi) * weight * phi);
                    t.push(b, i, xi * weight * phi);
                }
            }
        }
    }
    Ok(t.build())
}

// orthonormal pair spanning the plane orthogonal to `t`
fn normal_frame(t: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = (0..3).min_by(|&i, &j| t[i].abs().total_cmp(&t[j].abs())).unwrap();
    let mut ref_axis = [0.0; 3];
    ref_axis[axis] = 1.0;
    let e1 = normalize(cross(t, ref_axis));
    let e2 = cross(t, e1);
    (e1, e2)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

impl CouplingOperator {
    /// `Π u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.pi.spmv(u)
    }
}

/// `Π' μ`, the bulk load generated by a curve density.
pub fn apply_adjoint(op: &CouplingOperator, mu: &FemVector) -> Result<Vec<f64>> {
    op.pi.spmv_transpose(&mu.coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, interpolate};
    use crate::mesh::{embedded_curve, unit_cube_mesh, unit_square_mesh, StudyGeometry};

    #[test]
    fn trace_matches_curve_mass_on_curve_columns() {
        let m = unit_square_mesh(8).unwrap();
        let c = embedded_curve(&m, StudyGeometry::TShape, 0.02).unwrap();
        let (o, g) = (FunctionSpace::on_mesh(&m), FunctionSpace::on_curve(&c));
        let op = assemble_trace(&o, &g, &c).unwrap();
        let mg = assemble_mass(&g).unwrap();
        for (q, cols) in (0..g.dof_count()).map(|q| (q, op.pi.row(q))) {
            for (&i, &v) in cols.0.iter().zip(cols.1) {
                let local = c.parent_vertex.iter().position(|&p| p == i).expect("column on the curve");
                assert!((mg.get(q, local) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn averaging_reproduces_constants_and_linear_symmetry() {
        let m = unit_cube_mesh(8).unwrap();
        let c = embedded_curve(&m, StudyGeometry::Branch3d, 0.02).unwrap();
        let (o, g) = (FunctionSpace::on_mesh(&m), FunctionSpace::on_curve(&c));
        let op = assemble_averaging(&m, &g, &c, CircleQuadrature::Fixed(16)).unwrap();
        let mg = assemble_mass(&g).unwrap();
        let p1 = op.apply(&vec![1.0; o.dof_count()]).unwrap();
        let m1 = mg.spmv(&vec![1.0; g.dof_count()]).unwrap();
        for (a, b) in p1.iter().zip(&m1) {
            assert!((a - b).abs() < 1e-12);
        }
        // circles around lattice-aligned segments are symmetric, so the
        // average of x is the x-coordinate of the centre: 1/2 on the stem
        // and on the -y arm, and a mean of 5/8 on the +x arm
        let x = interpolate(&o, |p| p[0]).unwrap();
        let total: f64 = op.apply(&x.coefficients).unwrap().iter().sum();
        let expect = 0.5 * 0.75 + 0.625 * 0.25 + 0.5 * 0.25;
        assert!((total - expect).abs() < 1e-10);
    }

    #[test]
    fn adaptive_quadrature_refines() {
        let m = unit_cube_mesh(4).unwrap();
        let c = embedded_curve(&m, StudyGeometry::Branch3d, 0.1).unwrap();
        let g = FunctionSpace::on_curve(&c);
        let op = assemble_averaging(&m, &g, &c, CircleQuadrature::default()).unwrap();
        assert!(op.quadrature_points_per_circle >= 16);
        let finer = assemble_averaging(&m, &g, &c, CircleQuadrature::Fixed(2 * op.quadrature_points_per_circle)).unwrap();
        assert!(max_entry_change(&op.pi, &finer.pi) < 1e-8);
    }
}
