//! Coupled tissue/vessel transport on meshes with an embedded curve, with a
//! parameter-robust block preconditioner for the saddle-point time step.

pub mod coupling;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod pencil;
pub mod precond;
pub mod study;
pub mod system;

pub use error::{Error, Result};
