//! Structured simplicial meshes and embedded curve meshes.

mod curve;
mod tree;
pub mod vtk;

pub use curve::{embedded_curve, CurveMesh, StudyGeometry};
pub use tree::{synthetic_vascular_tree, TreeSpec, VascularTree};

use crate::error::{Error, Result};

/// Simplicial mesh of a square or cube `[0, extent]^dim` built on a uniform
/// lattice with `n` cells per side.
///
/// Vertices are numbered lexicographically with `x` fastest. Points are
/// stored in three components; the unused ones are zero in 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    n: usize,
    extent: f64,
    vertices: Vec<[f64; 3]>,
    cells: Vec<usize>,
}

/// P1 basis functions that are nonzero at a point, with their values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLocation {
    pub vertices: [usize; 4],
    pub weights: [f64; 4],
    /// Number of used entries (`dim + 1`).
    pub len: usize,
}

impl PointLocation {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.vertices[..self.len].iter().copied().zip(self.weights[..self.len].iter().copied())
    }
}

pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    Mesh::lattice(2, n, 1.0)
}

pub fn unit_cube_mesh(n: usize) -> Result<Mesh> {
    Mesh::lattice(3, n, 1.0)
}

impl Mesh {
    /// Lattice mesh of `[0, extent]^dim`: single-diagonal triangles in 2D,
    /// six Kuhn tetrahedra per cube in 3D.
    pub fn lattice(dim: usize, n: usize, extent: f64) -> Result<Mesh> {
        if n < 2 {
            return Err(Error::Mesh(format!("need at least 2 cells per side, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Mesh(format!("box extent must be positive, got {extent}")));
        }
        let h = extent / n as f64;
        let m = n + 1;
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        match dim {
            2 => {
                for j in 0..m {
                    for i in 0..m {
                        vertices.push([i as f64 * h, j as f64 * h, 0.0]);
                    }
                }
                for j in 0..n {
                    for i in 0..n {
                        let v = |a: usize, b: usize| (i + a) + m * (j + b);
                        cells.extend_from_slice(&[v(0, 0), v(1, 0), v(1, 1)]);
                        cells.extend_from_slice(&[v(0, 0), v(1, 1), v(0, 1)]);
                    }
                }
            }
            3 => {
                for k in 0..m {
                    for j in 0..m {
                        for i in 0..m {
                            vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
                        }
                    }
                }
                let stride = [1, m, m * m];
                for k in 0..n {
                    for j in 0..n {
                        for i in 0..n {
                            let base = i + m * (j + m * k);
                            for (perm, odd) in KUHN_PATHS {
                                let a = base + stride[perm[0]];
                                let b = a + stride[perm[1]];
                                let c = b + stride[perm[2]];
                                if odd {
                                    cells.extend_from_slice(&[base, a, c, b]);
                                } else {
                                    cells.extend_from_slice(&[base, a, b, c]);
                                }
                            }
                        }
                    }
                }
            }
            _ => return Err(Error::Mesh(format!("dimension must be 2 or 3, got {dim}"))),
        }
        Ok(Mesh {
            dim,
            n,
            extent,
            vertices,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per side.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn h(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.dim + 1
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / self.nodes_per_cell()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.nodes_per_cell();
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.cells.chunks_exact(self.nodes_per_cell())
    }

    /// Signed measure of a cell (area or volume).
    pub fn cell_volume(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let p0 = self.vertices[cell[0]];
        let e = |v: usize| {
            let p = self.vertices[cell[v]];
            [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]]
        };
        match self.dim {
            2 => {
                let (a, b) = (e(1), e(2));
                0.5 * (a[0] * b[1] - a[1] * b[0])
            }
            _ => {
                let (a, b, c) = (e(1), e(2), e(3));
                let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0]);
                det / 6.0
            }
        }
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Index of the lattice vertex with integer coordinates `ijk`.
    pub fn lattice_vertex(&self, ijk: [usize; 3]) -> Result<usize> {
        let m = self.n + 1;
        let used = &ijk[..self.dim];
        if used.iter().any(|&c| c > self.n) || ijk[self.dim..].iter().any(|&c| c != 0) {
            return Err(Error::Mesh(format!("lattice index {ijk:?} outside a {}-cell lattice", self.n)));
        }
        Ok(used.iter().rev().fold(0, |acc, &c| acc * m + c))
    }

    /// Integer lattice coordinates of vertex `v`.
    pub fn lattice_coords(&self, v: usize) -> [usize; 3] {
        let m = self.n + 1;
        let mut out = [0; 3];
        let mut rest = v;
        for c in out.iter_mut().take(self.dim) {
            *c = rest % m;
            rest /= m;
        }
        out
    }

    /// All edges as sorted vertex pairs, sorted and deduplicated.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_cells() * 6);
        for cell in self.cells() {
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    let (p, q) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                    edges.push((p, q));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Locates `p` and returns the P1 basis values there.
    ///
    /// On the lattice the containing simplex follows from sorting the
    /// fractional coordinates, so no search is needed. Points within a
    /// relative `1e-12` of the box are accepted.
    pub fn locate(&self, p: [f64; 3]) -> Result<PointLocation> {
        let h = self.h();
        let d = self.dim;
        let slack = 1e-12 * self.extent;
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..d {
            let x = p[a];
            if !x.is_finite() || x < -slack || x > self.extent + slack {
                return Err(Error::PointOutside(p));
            }
            let t = (x / h).clamp(0.0, self.n as f64);
            let c = (t.floor() as usize).min(self.n - 1);
            cell[a] = c;
            frac[a] = t - c as f64;
        }
        let mut order = [0usize, 1, 2];
        order[..d].sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
        let mut loc = PointLocation {
            vertices: [0; 4],
            weights: [0.0; 4],
            len: d + 1,
        };
        let mut ijk = cell;
        loc.vertices[0] = self.lattice_vertex(ijk)?;
        loc.weights[0] = 1.0 - frac[order[0]];
        for s in 0..d {
            ijk[order[s]] += 1;
            loc.vertices[s + 1] = self.lattice_vertex(ijk)?;
            let next = if s + 1 < d { frac[order[s + 1]] } else { 0.0 };
            loc.weights[s + 1] = frac[order[s]] - next;
        }
        Ok(loc)
    }
}

// axis permutations for the Kuhn split, with the parity of each
const KUHN_PATHS: [([usize; 3], bool); 6] = [
    ([0, 1, 2], false),
    ([1, 2, 0], false),
    ([2, 0, 1], false),
    ([0, 2, 1], true),
    ([2, 1, 0], true),
    ([1, 0, 2], true),
];
