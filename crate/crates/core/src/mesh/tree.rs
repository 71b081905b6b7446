use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::curve::CurveBuilder;
use crate::mesh::{CurveMesh, Mesh};

/// Parameters of a seeded binary vessel tree grown on the edges of a box mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    /// Number of generations, the root vessel being the first.
    pub depth: usize,
    /// Side length of the box.
    pub extent: f64,
    /// Cells per side of the box mesh.
    pub resolution: usize,
    pub radius_root: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct VascularTree {
    pub mesh: Mesh,
    pub curve: CurveMesh,
    /// Generation of each curve vertex (0 for the root vessel).
    pub generation: Vec<usize>,
}

const MIN_RADIUS: f64 = 1.0;

/// Grows a tree from the centre of the bottom face (`z = 0`), which is the
/// inlet. The root runs upwards for half the box; every vessel ends in two
/// children pointing in opposite directions along an axis perpendicular to
/// it, each half as long and with half the radius (never below 1).
pub fn synthetic_vascular_tree(spec: &TreeSpec) -> Result<VascularTree> {
    if spec.depth == 0 {
        return Err(Error::InvalidParameter("tree depth must be at least 1".into()));
    }
    if !(1.0..=15.0).contains(&spec.radius_root) {
        return Err(Error::InvalidParameter(format!(
            "root radius {} outside [1, 15]",
            spec.radius_root
        )));
    }
    let mesh = Mesh::lattice(3, spec.resolution, spec.extent)?;
    let n = spec.resolution;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut builder = CurveBuilder::new(&mesh);
    let mut generation = Vec::new();

    let root = [n / 2, n / 2, 0];
    let root_len = (n / 2).max(1);
    builder.path(root, [0, 0, 1], root_len, spec.radius_root)?;
    generation.resize(builder.num_vertices(), 0);
    builder.mark_inlet(mesh.lattice_vertex(root)?);

    // (tip, axis of the parent vessel, parent length)
    let mut tips = vec![([n / 2, n / 2, root_len], 2usize, root_len)];
    for g in 1..spec.depth {
        let radius = (spec.radius_root / f64::powi(2.0, g as i32)).max(MIN_RADIUS);
        let mut next = Vec::new();
        for (tip, axis, len) in tips {
            let mut axes: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
            axes.shuffle(&mut rng);
            let wanted = len.div_ceil(2).max(1);
            let (child_axis, child_len) = (1..=wanted)
                .rev()
                .flat_map(|l| axes.iter().map(move |&a| (a, l)))
                .find(|&(a, l)| fits(&mesh, &builder, tip, a, l))
                .ok_or_else(|| Error::Mesh(format!("no room for the children of the vessel ending at {tip:?}")))?;
            for sign in [1i64, -1] {
                let mut dir = [0i64; 3];
                dir[child_axis] = sign;
                builder.path(tip, dir, child_len, radius)?;
                let mut end = tip;
                end[child_axis] = (end[child_axis] as i64 + sign * child_len as i64) as usize;
                next.push((end, child_axis, child_len));
            }
            generation.resize(builder.num_vertices(), g);
        }
        tips = next;
    }
    let curve = builder.finish();
    Ok(VascularTree { mesh, curve, generation })
}

// both children of length `len` along `axis` stay on the lattice and avoid
// vertices already taken by the tree
fn fits(mesh: &Mesh, b: &CurveBuilder<'_>, tip: [usize; 3], axis: usize, len: usize) -> bool {
    let n = mesh.resolution() as i64;
    [1i64, -1].iter().all(|&sign| {
        (1..=len as i64).all(|step| {
            let c = tip[axis] as i64 + sign * step;
            if c < 0 || c > n {
                return false;
            }
            let mut p = tip;
            p[axis] = c as usize;
            mesh.lattice_vertex(p).map(|v| !b.is_used(v)).unwrap_or(false)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(depth: usize, seed: u64) -> TreeSpec {
        TreeSpec {
            depth,
            extent: 240.0,
            resolution: 12,
            radius_root: 12.0,
            seed,
        }
    }

    #[test]
    fn depth_one_is_a_single_vessel() {
        let t = synthetic_vascular_tree(&spec(1, 3)).unwrap();
        assert_eq!(t.curve.inlets.len(), 1);
        let deg = t.curve.degrees();
        assert!(deg.iter().all(|&d| d <= 2));
        assert_eq!(deg.iter().filter(|&&d| d == 1).count(), 2);
    }

    #[test]
    fn seeded_trees_repeat() {
        let a = synthetic_vascular_tree(&spec(3, 11)).unwrap();
        let b = synthetic_vascular_tree(&spec(3, 11)).unwrap();
        assert_eq!(a.curve, b.curve);
        assert!(a.curve.conforms_to(&a.mesh));
    }

    #[test]
    fn radii_follow_generations() {
        let t = synthetic_vascular_tree(&spec(4, 5)).unwrap();
        assert_eq!(t.generation.len(), t.curve.num_vertices());
        for &[a, b] in &t.curve.segments {
            // segments are stored parent end first
            assert!(t.curve.radii[b] <= t.curve.radii[a]);
            assert!(t.generation[b] >= t.generation[a]);
        }
        assert!(t.curve.radii.iter().all(|&r| r >= 1.0));
    }
}
