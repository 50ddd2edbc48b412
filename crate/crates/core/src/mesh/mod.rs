//! Curvilinear hexahedral meshes: connectivity, boundary tags, high-order
//! geometry, and the discrete metric terms used by the solver.

mod generate;
mod io;
mod metrics;

pub use generate::{box_mesh, channel_mesh, deformed_box_mesh, tgv_box_mesh};
pub use io::{mesh_hash, read_mesh, read_mesh_bytes, write_mesh, write_mesh_bytes};
pub use metrics::{compute_metrics, metric_identity_residual, DiscreteGeometry, ElemGeometry, FaceGeometry};

use crate::error::{Error, Result};

/// Boundary condition kinds understood by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Inflow,
    Outflow,
    FreeSlipWall,
    NoSlipWall,
    MovingWall,
    Periodic,
}

impl BcKind {
    pub fn name(&self) -> &'static str {
        match self {
            BcKind::Inflow => "Inflow",
            BcKind::Outflow => "Outflow",
            BcKind::FreeSlipWall => "FreeSlipWall",
            BcKind::NoSlipWall => "NoSlipWall",
            BcKind::MovingWall => "MovingWall",
            BcKind::Periodic => "Periodic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "Inflow" => BcKind::Inflow,
            "Outflow" => BcKind::Outflow,
            "FreeSlipWall" => BcKind::FreeSlipWall,
            "NoSlipWall" => BcKind::NoSlipWall,
            "MovingWall" => BcKind::MovingWall,
            "Periodic" => BcKind::Periodic,
            _ => return Err(Error::UnknownBcTag { tag: s.to_string() }),
        })
    }

    /// Walls where surface quantities (Cp, Cf, forces) are defined.
    pub fn is_wall(&self) -> bool {
        matches!(
            self,
            BcKind::NoSlipWall | BcKind::MovingWall | BcKind::FreeSlipWall
        )
    }
}

/// A named boundary patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BcTag {
    pub name: String,
    pub kind: BcKind,
}

/// One face of the mesh. Interior faces (including periodic pairs) connect
/// two element sides; boundary faces carry a tag index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub left: usize,
    pub left_side: u8,
    pub right: Option<(usize, u8)>,
    /// One of 8 rotations/flips mapping left-face tangential indices (a, b)
    /// to the right element's face indices.
    pub orientation: u8,
    /// Boundary tag index, `None` on interior faces.
    pub bc: Option<usize>,
    pub periodic: bool,
}

/// A conforming curvilinear hexahedral mesh.
///
/// Geometry control nodes live at tensor-product Gauss-Lobatto points of
/// order `n_geo` in each element. Immutable in practice once built; the
/// solver only reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n_geo: usize,
    /// Per element: (n_geo+1)^3 geometry nodes, i-fastest ordering.
    pub geometry: Vec<Vec<[f64; 3]>>,
    pub faces: Vec<Face>,
    pub bc_tags: Vec<BcTag>,
    /// Per element and side: (face index, element is the face's left side).
    pub elem_faces: Vec<[(u32, bool); 6]>,
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.geometry.len()
    }

    /// Rebuild the per-element face table, verifying that every element side
    /// is referenced exactly once (watertight conforming connectivity).
    pub fn rebuild_adjacency(&mut self) -> Result<()> {
        let n = self.n_elements();
        let mut table = vec![[(u32::MAX, false); 6]; n];
        let mut seen = vec![[false; 6]; n];
        for (fid, face) in self.faces.iter().enumerate() {
            let mut link = |elem: usize, side: u8, is_left: bool| -> Result<()> {
                if elem >= n || side > 5 {
                    return Err(Error::MeshParse {
                        offset: 0,
                        detail: format!(
                            "face {fid} references element {elem} side {side} (mesh has {n} elements)"
                        ),
                    });
                }
                if seen[elem][side as usize] {
                    return Err(Error::MeshInvalid {
                        element: elem,
                        detail: format!("side {side} referenced by more than one face"),
                    });
                }
                seen[elem][side as usize] = true;
                table[elem][side as usize] = (fid as u32, is_left);
                Ok(())
            };
            link(face.left, face.left_side, true)?;
            if let Some((re, rs)) = face.right {
                link(re, rs, false)?;
            }
            if face.orientation > 7 {
                return Err(Error::MeshParse {
                    offset: 0,
                    detail: format!("face {fid} has orientation {} (legal 0..=7)", face.orientation),
                });
            }
            if let Some(b) = face.bc {
                if b >= self.bc_tags.len() {
                    return Err(Error::MeshParse {
                        offset: 0,
                        detail: format!("face {fid} references boundary tag {b} of {}", self.bc_tags.len()),
                    });
                }
            }
            if face.right.is_none() && face.bc.is_none() {
                return Err(Error::MeshInvalid {
                    element: face.left,
                    detail: format!("face {fid} has neither a neighbor nor a boundary tag"),
                });
            }
        }
        for (e, sides) in seen.iter().enumerate() {
            if let Some(s) = sides.iter().position(|&x| !x) {
                return Err(Error::MeshInvalid {
                    element: e,
                    detail: format!("side {s} is not covered by any face"),
                });
            }
        }
        self.elem_faces = table;
        Ok(())
    }

    /// Change the kind of a named boundary tag.
    pub fn set_boundary_kind(&mut self, name: &str, kind: BcKind) -> Result<()> {
        if kind == BcKind::Periodic {
            return Err(Error::Config(
                "periodic pairing must be built into the mesh, not assigned as a tag".into(),
            ));
        }
        match self.bc_tags.iter_mut().find(|t| t.name == name) {
            Some(tag) => {
                tag.kind = kind;
                Ok(())
            }
            None => Err(Error::Config(format!(
                "no boundary tag named `{name}`; tags: {:?}",
                self.bc_tags.iter().map(|t| &t.name).collect::<Vec<_>>()
            ))),
        }
    }

    pub fn tag_index(&self, name: &str) -> Option<usize> {
        self.bc_tags.iter().position(|t| t.name == name)
    }
}

/// Decompose a side id: returns (normal axis, positive side, tangential axes).
#[inline]
pub fn face_axes(side: u8) -> (usize, bool, usize, usize) {
    let axis = (side / 2) as usize;
    let positive = side % 2 == 1;
    match axis {
        0 => (0, positive, 1, 2),
        1 => (1, positive, 0, 2),
        _ => (2, positive, 0, 1),
    }
}

/// Volume node index of face node (a, b) on the given side of a cube with
/// `np` nodes per direction.
#[inline]
pub fn face_node_index(side: u8, a: usize, b: usize, np: usize) -> usize {
    let (axis, positive, t1, t2) = face_axes(side);
    let mut c = [0usize; 3];
    c[axis] = if positive { np - 1 } else { 0 };
    c[t1] = a;
    c[t2] = b;
    (c[2] * np + c[1]) * np + c[0]
}

/// Map left-face tangential indices (a, b) to the right element's face
/// indices under one of the 8 conforming orientations.
#[inline]
pub fn orient_map(orientation: u8, a: usize, b: usize, n_max: usize) -> (usize, usize) {
    let (mut u, mut v) = if orientation & 4 != 0 { (b, a) } else { (a, b) };
    if orientation & 1 != 0 {
        u = n_max - u;
    }
    if orientation & 2 != 0 {
        v = n_max - v;
    }
    (u, v)
}
