//! Discretization of the unit-domain study problems.

use std::sync::Arc;

use crate::coupling::{assemble_averaging, assemble_trace, CircleQuadrature, CouplingOperator};
use crate::error::Result;
use crate::fem::FunctionSpace;
use crate::mesh::{embedded_curve, CurveMesh, Mesh, StudyGeometry};

/// Mesh, curve, spaces and coupling for the branching study curve: trace
/// coupling in 2D, circle averaging in 3D.
#[derive(Debug, Clone)]
pub struct StudyDiscretization {
    pub mesh: Mesh,
    pub curve: CurveMesh,
    pub omega: Arc<FunctionSpace>,
    pub gamma: Arc<FunctionSpace>,
    pub coupling: CouplingOperator,
}

impl StudyDiscretization {
    pub fn new(dim: usize, n: usize, radius: f64) -> Result<Self> {
        Self::with_quadrature(dim, n, radius, CircleQuadrature::default())
    }

    pub fn with_quadrature(dim: usize, n: usize, radius: f64, quadrature: CircleQuadrature) -> Result<Self> {
        let mesh = Mesh::lattice(dim, n, 1.0)?;
        let curve = embedded_curve(&mesh, StudyGeometry::for_dimension(dim)?, radius)?;
        let omega = FunctionSpace::on_mesh(&mesh);
        let gamma = FunctionSpace::on_curve(&curve);
        let coupling = if dim == 2 {
            assemble_trace(&omega, &gamma, &curve)?
        } else {
            assemble_averaging(&mesh, &gamma, &curve, quadrature)?
        };
        Ok(StudyDiscretization {
            mesh,
            curve,
            omega,
            gamma,
            coupling,
        })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }
}
