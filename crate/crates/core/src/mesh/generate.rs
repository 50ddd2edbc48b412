//! Built-in mesh generators: Cartesian boxes, a smoothly deformed curved box,
//! the TGV box, and a wall-bounded channel.

use super::{BcKind, BcTag, Face, Mesh};
use crate::basis::{build_basis, NodeKind};
use crate::error::{Error, Result};

/// Default tag names for the six box sides, in side-id order.
const SIDE_NAMES: [&str; 6] = ["xmin", "xmax", "ymin", "ymax", "zmin", "zmax"];

/// Cartesian hexahedral box mesh with geometry of order `n_geo`.
///
/// Non-periodic sides receive default FreeSlipWall tags named after the side
/// (`xmin`, `ymax`, ...); adjust with [`Mesh::set_boundary_kind`].
pub fn box_mesh(
    n_cells: [usize; 3],
    extents: [[f64; 2]; 3],
    periodic: [bool; 3],
    n_geo: usize,
) -> Result<Mesh> {
    if n_cells.iter().any(|&n| n == 0) {
        return Err(Error::Config("cell counts must be at least 1".into()));
    }
    if n_geo == 0 {
        return Err(Error::Config("geometry order must be at least 1".into()));
    }
    for d in 0..3 {
        if !(extents[d][1] > extents[d][0]) {
            return Err(Error::Config(format!(
                "extent {} must be a non-empty interval, got [{}, {}]",
                ["x", "y", "z"][d],
                extents[d][0],
                extents[d][1]
            )));
        }
    }
    let geo_basis = build_basis(NodeKind::GaussLobatto, n_geo)?;
    let npg = n_geo + 1;
    let [nx, ny, nz] = n_cells;

    // Geometry nodes from the global formula x = lo + len * (cell + (xi+1)/2) / n,
    // making shared face nodes bit-identical between neighbors.
    let coord = |d: usize, cell: usize, xi: f64| -> f64 {
        let lo = extents[d][0];
        let len = extents[d][1] - extents[d][0];
        lo + len * ((cell as f64 + 0.5 * (xi + 1.0)) / n_cells[d] as f64)
    };

    let mut geometry = Vec::with_capacity(nx * ny * nz);
    for ez in 0..nz {
        for ey in 0..ny {
            for ex in 0..nx {
                let mut nodes = Vec::with_capacity(npg * npg * npg);
                for c in 0..npg {
                    for b in 0..npg {
                        for a in 0..npg {
                            nodes.push([
                                coord(0, ex, geo_basis.nodes[a]),
                                coord(1, ey, geo_basis.nodes[b]),
                                coord(2, ez, geo_basis.nodes[c]),
                            ]);
                        }
                    }
                }
                geometry.push(nodes);
            }
        }
    }

    let eid = |ex: usize, ey: usize, ez: usize| (ez * ny + ey) * nx + ex;

    let mut bc_tags: Vec<BcTag> = Vec::new();
    let mut side_tag = [usize::MAX; 6];
    for (side, name) in SIDE_NAMES.iter().enumerate() {
        if !periodic[side / 2] {
            side_tag[side] = bc_tags.len();
            bc_tags.push(BcTag {
                name: (*name).to_string(),
                kind: BcKind::FreeSlipWall,
            });
        }
    }

    let mut faces = Vec::new();
    let counts = [nx, ny, nz];
    for axis in 0..3usize {
        let side_neg = (2 * axis) as u8;
        let side_pos = side_neg + 1;
        let (t1_n, t2_n) = match axis {
            0 => (ny, nz),
            1 => (nx, nz),
            _ => (nx, ny),
        };
        for t2 in 0..t2_n {
            for t1 in 0..t1_n {
                let cell = |slab: usize| -> usize {
                    match axis {
                        0 => eid(slab, t1, t2),
                        1 => eid(t1, slab, t2),
                        _ => eid(t1, t2, slab),
                    }
                };
                // interior faces between consecutive slabs
                for s in 0..counts[axis] - 1 {
                    faces.push(Face {
                        left: cell(s),
                        left_side: side_pos,
                        right: Some((cell(s + 1), side_neg)),
                        orientation: 0,
                        bc: None,
                        periodic: false,
                    });
                }
                if periodic[axis] {
                    faces.push(Face {
                        left: cell(counts[axis] - 1),
                        left_side: side_pos,
                        right: Some((cell(0), side_neg)),
                        orientation: 0,
                        bc: None,
                        periodic: true,
                    });
                } else {
                    faces.push(Face {
                        left: cell(0),
                        left_side: side_neg,
                        right: None,
                        orientation: 0,
                        bc: Some(side_tag[side_neg as usize]),
                        periodic: false,
                    });
                    faces.push(Face {
                        left: cell(counts[axis] - 1),
                        left_side: side_pos,
                        right: None,
                        orientation: 0,
                        bc: Some(side_tag[side_pos as usize]),
                        periodic: false,
                    });
                }
            }
        }
    }

    let mut mesh = Mesh {
        n_geo,
        geometry,
        faces,
        bc_tags,
        elem_faces: Vec::new(),
    };
    mesh.rebuild_adjacency()?;
    Ok(mesh)
}

/// Box mesh with a smooth periodic sinusoidal coordinate perturbation, giving
/// genuinely curved elements (use `n_geo >= 2` for non-affine curvature).
///
/// The displacement of each coordinate is `amplitude * len_d` times a product
/// of sines of the other two normalized coordinates, so periodic face pairs
/// and interior faces remain watertight. The mapping is checked for positive
/// Jacobians; a fold names the offending element.
pub fn deformed_box_mesh(
    n_cells: [usize; 3],
    extents: [[f64; 2]; 3],
    periodic: [bool; 3],
    n_geo: usize,
    amplitude: f64,
) -> Result<Mesh> {
    let mut mesh = box_mesh(n_cells, extents, periodic, n_geo)?;
    if amplitude == 0.0 {
        return Ok(mesh);
    }
    let len = [
        extents[0][1] - extents[0][0],
        extents[1][1] - extents[1][0],
        extents[2][1] - extents[2][0],
    ];
    let tau = std::f64::consts::TAU;
    for elem in &mut mesh.geometry {
        for node in elem.iter_mut() {
            let u = (node[0] - extents[0][0]) / len[0];
            let v = (node[1] - extents[1][0]) / len[1];
            let w = (node[2] - extents[2][0]) / len[2];
            let (su, sv, sw) = ((tau * u).sin(), (tau * v).sin(), (tau * w).sin());
            node[0] += amplitude * len[0] * sv * sw;
            node[1] += amplitude * len[1] * sw * su;
            node[2] += amplitude * len[2] * su * sv;
        }
    }
    // Validate the mapping at a finer Gauss-Lobatto set than the geometry
    // itself so folds between control nodes are caught too.
    let check_order = (n_geo + 1).min(crate::basis::MAX_ORDER);
    let check_basis = build_basis(NodeKind::GaussLobatto, check_order)?;
    super::metrics::validate_positive_jacobians(&mesh, &check_basis)?;
    Ok(mesh)
}

/// Periodic `[0, 2 pi]^3` box for the Taylor-Green vortex.
pub fn tgv_box_mesh(cells_per_direction: usize, n_geo: usize) -> Result<Mesh> {
    let l = std::f64::consts::TAU;
    box_mesh(
        [cells_per_direction; 3],
        [[0.0, l], [0.0, l], [0.0, l]],
        [true, true, true],
        n_geo,
    )
}

/// Wall-bounded channel: periodic in x and z, solid walls in y.
///
/// The floor (`ymin`) is a no-slip wall and the lid (`ymax`) a moving wall;
/// the lid velocity is supplied through the solver's boundary table.
pub fn channel_mesh(
    n_cells: [usize; 3],
    extents: [[f64; 2]; 3],
    n_geo: usize,
) -> Result<Mesh> {
    let mut mesh = box_mesh(n_cells, extents, [true, false, true], n_geo)?;
    mesh.set_boundary_kind("ymin", BcKind::NoSlipWall)?;
    mesh.set_boundary_kind("ymax", BcKind::MovingWall)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_mesh_counts() {
        let tau = std::f64::consts::TAU;
        let m = box_mesh(
            [4, 4, 4],
            [[0.0, tau]; 3],
            [true, true, true],
            1,
        )
        .unwrap();
        assert_eq!(m.n_elements(), 64);
        // fully periodic: 3 * nx*ny*nz interior faces, no boundary tags
        assert_eq!(m.faces.len(), 3 * 64);
        assert!(m.faces.iter().all(|f| f.right.is_some()));
        assert!(m.bc_tags.is_empty());
    }

    #[test]
    fn box_mesh_two_cells_periodic_x() {
        let m = box_mesh(
            [2, 1, 1],
            [[0.0, 2.0], [0.0, 1.0], [0.0, 1.0]],
            [true, false, false],
            1,
        )
        .unwrap();
        assert_eq!(m.n_elements(), 2);
        let periodic: Vec<_> = m.faces.iter().filter(|f| f.periodic).collect();
        assert_eq!(periodic.len(), 1);
        assert_eq!(m.faces.iter().filter(|f| f.right.is_some()).count(), 2);
        // 2 y-min + 2 y-max + 2 z-min + 2 z-max boundary faces
        assert_eq!(m.faces.iter().filter(|f| f.bc.is_some()).count(), 8);
    }

    #[test]
    fn shared_face_nodes_bit_identical() {
        let m = box_mesh(
            [3, 2, 2],
            [[0.0, 1.1], [-0.3, 0.9], [0.0, 0.7]],
            [false, false, false],
            2,
        )
        .unwrap();
        let npg = m.n_geo + 1;
        for f in &m.faces {
            let Some((re, rs)) = f.right else { continue };
            for a in 0..npg {
                for b in 0..npg {
                    let li = super::super::face_node_index(f.left_side, a, b, npg);
                    let (ra, rb) = super::super::orient_map(f.orientation, a, b, npg - 1);
                    let ri = super::super::face_node_index(rs, ra, rb, npg);
                    assert_eq!(m.geometry[f.left][li], m.geometry[re][ri]);
                }
            }
        }
    }

    #[test]
    fn deformed_amplitude_zero_identical() {
        let args = ([2, 2, 2], [[0.0, 1.0]; 3], [true, true, true], 3);
        let plain = box_mesh(args.0, args.1, args.2, args.3).unwrap();
        let deformed = deformed_box_mesh(args.0, args.1, args.2, args.3, 0.0).unwrap();
        assert_eq!(plain, deformed);
    }

    #[test]
    fn deformed_large_amplitude_folds() {
        let r = deformed_box_mesh([2, 2, 2], [[0.0, 1.0]; 3], [true, true, true], 2, 10.0);
        match r {
            Err(Error::MeshInvalid { .. }) => {}
            other => panic!("expected MeshInvalid, got {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(box_mesh([0, 1, 1], [[0.0, 1.0]; 3], [false; 3], 1).is_err());
        assert!(box_mesh([1, 1, 1], [[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]], [false; 3], 1).is_err());
        assert!(box_mesh([1, 1, 1], [[0.0, 1.0]; 3], [false; 3], 0).is_err());
    }

    #[test]
    fn channel_tags() {
        let m = channel_mesh([2, 2, 1], [[0.0, 2.0], [0.0, 1.0], [0.0, 0.4]], 1).unwrap();
        let floor = &m.bc_tags[m.tag_index("ymin").unwrap()];
        let lid = &m.bc_tags[m.tag_index("ymax").unwrap()];
        assert_eq!(floor.kind, BcKind::NoSlipWall);
        assert_eq!(lid.kind, BcKind::MovingWall);
    }
}
