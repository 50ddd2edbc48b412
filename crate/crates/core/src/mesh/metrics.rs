//! Discrete metric terms for curvilinear hexahedra.
//!
//! The contravariant vectors are built in the conservative curl form, so the
//! discrete metric identity sum_d d(Ja^d)/dxi_d = 0 holds to roundoff on every
//! element and uniform flow is an exact steady state of the spatial operator.
//!
//! All metric quantities are first computed on Gauss-Lobatto nodes of the
//! solution order. On Gauss-Lobatto faces the metric depends only on the face
//! restriction of the geometry, so watertight meshes get equal-and-opposite
//! normals from both sides. For Gauss solution nodes the same degree-N metric
//! polynomials are resampled; this keeps volume terms, face terms and the
//! metric identity mutually consistent between the two node families.

use super::{face_axes, face_node_index, orient_map, Mesh};
use crate::basis::{build_basis, interpolation_matrix, BasisSet, NodeKind};
use crate::error::{Error, Result};
use crate::tensor::{apply_axis, derivative_axis};

/// Per-element discrete geometry at the solution nodes.
#[derive(Debug, Clone)]
pub struct ElemGeometry {
    /// Physical coordinates of the solution nodes.
    pub xyz: Vec<[f64; 3]>,
    /// Mapping Jacobian determinant at each node.
    pub jac: Vec<f64>,
    /// 1 / J at each node.
    pub inv_jac: Vec<f64>,
    /// Contravariant vectors scaled by J: `ja[node][d*3 + c]` is the Cartesian
    /// component c of J a^d.
    pub ja: Vec<[f64; 9]>,
    /// Quadrature volume sum w_i w_j w_k J.
    pub volume: f64,
}

/// Per-face geometry at the face quadrature nodes, seen from the left element
/// (outward unit normal and surface Jacobian); indexed `a + b * (N+1)` in the
/// left element's face coordinates.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    pub normal: Vec<[f64; 3]>,
    pub js: Vec<f64>,
    pub xyz: Vec<[f64; 3]>,
}

/// Metric terms for a mesh/basis pair.
#[derive(Debug, Clone)]
pub struct DiscreteGeometry {
    pub elems: Vec<ElemGeometry>,
    pub faces: Vec<FaceGeometry>,
    pub total_volume: f64,
    /// Largest interior-face normal mismatch |n_L Js_L + n_R Js_R| observed
    /// while building (diagnostic; tiny on watertight meshes).
    pub face_mismatch: f64,
}

/// Geometry mapping data for one element at Gauss-Lobatto nodes of the
/// solution order.
struct GlMapping {
    /// Coordinates, 3 components per node.
    x: Vec<f64>,
    jac: Vec<f64>,
    /// ja[node][d*3 + c]
    ja: Vec<[f64; 9]>,
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Map geometry control nodes to GL(N) nodes and differentiate.
fn gl_mapping(
    elem: usize,
    geometry: &[[f64; 3]],
    interp: &[f64],
    npg: usize,
    gl: &BasisSet,
    with_metrics: bool,
) -> Result<GlMapping> {
    let np = gl.len();
    let flat: Vec<f64> = geometry.iter().flat_map(|p| p.iter().copied()).collect();
    let mut shape = [npg, npg, npg];
    let mut x = flat;
    for axis in 0..3 {
        let (s, d) = apply_axis(interp, np, npg, axis, shape, &x, 3);
        shape = s;
        x = d;
    }
    let dx = [
        derivative_axis(&gl.diff, np, 0, &x, 3),
        derivative_axis(&gl.diff, np, 1, &x, 3),
        derivative_axis(&gl.diff, np, 2, &x, 3),
    ];
    let nn = np * np * np;
    let mut jac = vec![0.0; nn];
    for node in 0..nn {
        let mut m = [[0.0; 3]; 3];
        for c in 0..3 {
            for d in 0..3 {
                m[c][d] = dx[d][node * 3 + c];
            }
        }
        let j = det3(&m);
        if !(j > 0.0) || !j.is_finite() {
            return Err(Error::MeshInvalid {
                element: elem,
                detail: format!("non-positive mapping Jacobian {j:.3e} at node {node}"),
            });
        }
        jac[node] = j;
    }
    let mut ja = vec![[0.0f64; 9]; nn];
    if with_metrics {
        // a_n = I^N(X_l grad_xi X_m) with (n, m, l) cyclic; Ja^d_n = -(curl a_n)_d
        for n in 0..3usize {
            let m_idx = (n + 1) % 3;
            let l_idx = (n + 2) % 3;
            let mut a = vec![0.0f64; nn * 3];
            for node in 0..nn {
                let xl = x[node * 3 + l_idx];
                for j in 0..3 {
                    a[node * 3 + j] = xl * dx[j][node * 3 + m_idx];
                }
            }
            let da = [
                derivative_axis(&gl.diff, np, 0, &a, 3),
                derivative_axis(&gl.diff, np, 1, &a, 3),
                derivative_axis(&gl.diff, np, 2, &a, 3),
            ];
            for node in 0..nn {
                for d in 0..3usize {
                    let d1 = (d + 1) % 3;
                    let d2 = (d + 2) % 3;
                    let curl_d = da[d1][node * 3 + d2] - da[d2][node * 3 + d1];
                    ja[node][d * 3 + n] = -curl_d;
                }
            }
        }
    }
    Ok(GlMapping { x, jac, ja })
}

/// Check J > 0 for every element at GL nodes of the given basis order.
pub(super) fn validate_positive_jacobians(mesh: &Mesh, basis: &BasisSet) -> Result<()> {
    let npg = mesh.n_geo + 1;
    let geo = build_basis(NodeKind::GaussLobatto, mesh.n_geo)?;
    let interp = interpolation_matrix(&geo.nodes, &basis.nodes);
    for (e, geom) in mesh.geometry.iter().enumerate() {
        gl_mapping(e, geom, &interp, npg, basis, false)?;
    }
    Ok(())
}

/// Compute the discrete metric terms of `mesh` for the given solution basis.
///
/// Requires the geometry order to not exceed the solution order so metric
/// polynomials are representable.
pub fn compute_metrics(mesh: &Mesh, basis: &BasisSet) -> Result<DiscreteGeometry> {
    if mesh.n_geo > basis.order {
        return Err(Error::Config(format!(
            "geometry order {} exceeds solution order {}; metric products of the mapping \
             would not be representable in the solution space",
            mesh.n_geo, basis.order
        )));
    }
    let np = basis.len();
    let nn = np * np * np;
    let gl = if basis.kind == NodeKind::GaussLobatto {
        basis.clone()
    } else {
        build_basis(NodeKind::GaussLobatto, basis.order)?
    };
    let geo = build_basis(NodeKind::GaussLobatto, mesh.n_geo)?;
    let npg = mesh.n_geo + 1;
    let interp_geo = interpolation_matrix(&geo.nodes, &gl.nodes);
    // GL -> solution resampling (identity when the solution basis is GL)
    let resample = interpolation_matrix(&gl.nodes, &basis.nodes);
    let is_gl = basis.kind == NodeKind::GaussLobatto;

    let mut gl_maps = Vec::with_capacity(mesh.n_elements());
    for (e, geom) in mesh.geometry.iter().enumerate() {
        gl_maps.push(gl_mapping(e, geom, &interp_geo, npg, &gl, true)?);
    }

    // Face metrics from GL nodal values on the face, tangentially resampled
    // to the solution face quadrature.
    let mut faces = Vec::with_capacity(mesh.faces.len());
    let mut face_mismatch = 0.0f64;
    for face in &mesh.faces {
        let gmap = &gl_maps[face.left];
        let (axis, positive, ..) = face_axes(face.left_side);
        let sign = if positive { 1.0 } else { -1.0 };
        let nf = np * np;
        // face arrays at GL tangential nodes: scaled normal (3) + position (3)
        let mut raw = vec![0.0f64; nf * 6];
        for b in 0..np {
            for a in 0..np {
                let vid = face_node_index(face.left_side, a, b, np);
                let fid = (b * np + a) * 6;
                for c in 0..3 {
                    raw[fid + c] = sign * gmap.ja[vid][axis * 3 + c];
                    raw[fid + 3 + c] = gmap.x[vid * 3 + c];
                }
            }
        }
        if let Some((re, rs)) = face.right {
            if !face.periodic {
                let rmap = &gl_maps[re];
                let (raxis, rpositive, ..) = face_axes(rs);
                let rsign = if rpositive { 1.0 } else { -1.0 };
                for b in 0..np {
                    for a in 0..np {
                        let (ra, rb) = orient_map(face.orientation, a, b, np - 1);
                        let rvid = face_node_index(rs, ra, rb, np);
                        let fid = (b * np + a) * 6;
                        for c in 0..3 {
                            let mismatch =
                                (raw[fid + c] + rsign * rmap.ja[rvid][raxis * 3 + c]).abs();
                            face_mismatch = face_mismatch.max(mismatch);
                        }
                    }
                }
            }
        }
        let mut shape = [np, np, 1];
        let mut data = raw;
        if !is_gl {
            for t in 0..2 {
                let (s, d) = apply_axis(&resample, np, np, t, shape, &data, 6);
                shape = s;
                data = d;
            }
        }
        let mut normal = Vec::with_capacity(nf);
        let mut js = Vec::with_capacity(nf);
        let mut xyz = Vec::with_capacity(nf);
        for f in 0..nf {
            let v = [data[f * 6], data[f * 6 + 1], data[f * 6 + 2]];
            let mag = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            js.push(mag);
            normal.push([v[0] / mag, v[1] / mag, v[2] / mag]);
            xyz.push([data[f * 6 + 3], data[f * 6 + 4], data[f * 6 + 5]]);
        }
        faces.push(FaceGeometry { normal, js, xyz });
    }

    // Volume metrics at the solution nodes.
    let mut elems = Vec::with_capacity(mesh.n_elements());
    let mut total_volume = 0.0;
    for (e, gmap) in gl_maps.iter().enumerate() {
        let (xyz_f, jac, ja_f) = if is_gl {
            let ja_flat: Vec<f64> = gmap.ja.iter().flat_map(|r| r.iter().copied()).collect();
            (gmap.x.clone(), gmap.jac.clone(), ja_flat)
        } else {
            let resample3 = |data: &[f64], ncomp: usize| -> Vec<f64> {
                let mut shape = [np, np, np];
                let mut d = data.to_vec();
                for axis in 0..3 {
                    let (s, nd) = apply_axis(&resample, np, np, axis, shape, &d, ncomp);
                    shape = s;
                    d = nd;
                }
                d
            };
            let ja_flat: Vec<f64> = gmap.ja.iter().flat_map(|r| r.iter().copied()).collect();
            (
                resample3(&gmap.x, 3),
                resample3(&gmap.jac, 1),
                resample3(&ja_flat, 9),
            )
        };
        let mut xyz = Vec::with_capacity(nn);
        let mut ja = Vec::with_capacity(nn);
        let mut inv_jac = Vec::with_capacity(nn);
        let mut volume = 0.0;
        for node in 0..nn {
            let j = jac[node];
            if !(j > 0.0) {
                return Err(Error::MeshInvalid {
                    element: e,
                    detail: format!("non-positive resampled Jacobian {j:.3e} at node {node}"),
                });
            }
            xyz.push([xyz_f[node * 3], xyz_f[node * 3 + 1], xyz_f[node * 3 + 2]]);
            let mut row = [0.0f64; 9];
            row.copy_from_slice(&ja_f[node * 9..node * 9 + 9]);
            ja.push(row);
            inv_jac.push(1.0 / j);
            let (i, jn, k) = (node % np, (node / np) % np, node / (np * np));
            volume += basis.weights[i] * basis.weights[jn] * basis.weights[k] * j;
        }
        total_volume += volume;
        elems.push(ElemGeometry {
            xyz,
            jac,
            inv_jac,
            ja,
            volume,
        });
    }

    Ok(DiscreteGeometry {
        elems,
        faces,
        total_volume,
        face_mismatch,
    })
}

/// Max-norm of the discrete metric identity residual
/// sum_d D_d (J a^d)_n over all elements, nodes and Cartesian components.
pub fn metric_identity_residual(geom: &DiscreteGeometry, basis: &BasisSet) -> f64 {
    let np = basis.len();
    let nn = np * np * np;
    let mut max = 0.0f64;
    for elem in &geom.elems {
        for n in 0..3usize {
            let mut fields = [vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]];
            for node in 0..nn {
                for d in 0..3 {
                    fields[d][node] = elem.ja[node][d * 3 + n];
                }
            }
            let mut div = vec![0.0f64; nn];
            for d in 0..3 {
                let der = derivative_axis(&basis.diff, np, d, &fields[d], 1);
                for node in 0..nn {
                    div[node] += der[node];
                }
            }
            for v in div {
                max = max.max(v.abs());
            }
        }
    }
    max
}
