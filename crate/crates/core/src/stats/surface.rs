//! Surface quantities on wall patches: time-averaged pressure and wall shear,
//! Cp / Cf / y+ / x+ profiles, and integrated force coefficients.

use super::FlowReference;
use crate::error::{Error, Result};
use crate::mesh::{face_axes, BcKind};
use crate::physics::primitive_unchecked;
use crate::solver::{SolutionField, Solver, Workspace};

/// One surface quadrature node with accumulated means and frozen geometry.
#[derive(Debug, Clone)]
pub struct SurfaceNode {
    pub xyz: [f64; 3],
    pub normal: [f64; 3],
    /// Quadrature weight w_a w_b Js.
    pub weight: f64,
    /// Wall distance of the y+ reference node (second node of the
    /// wall-normal line on Gauss-Lobatto, first node on Gauss).
    pub y_ref: f64,
    /// Streamwise node spacings along the two face coordinate directions.
    pub spacing: [f64; 2],
    /// Unit tangents of the two face coordinate directions.
    pub tangents: [[f64; 3]; 2],
    /// Time-averaged pressure.
    pub p: f64,
    /// Time-averaged velocity gradient (9, same layout as the solver).
    pub grad: [f64; 9],
}

/// Accumulated surface data for one patch.
#[derive(Debug, Clone)]
pub struct SurfaceRecord {
    pub patch: String,
    pub kind: BcKind,
    pub nodes: Vec<SurfaceNode>,
}

/// Running time averages of p and the velocity gradient on wall patches.
#[derive(Debug, Clone)]
pub struct SurfaceAccumulator {
    patches: Vec<(String, BcKind)>,
    /// (patch index, face id).
    faces: Vec<(usize, usize)>,
    /// Frozen geometry per face node, parallel to `faces`.
    geometry: Vec<Vec<SurfaceNode>>,
    count: u64,
    p_sum: Vec<Vec<f64>>,
    grad_sum: Vec<Vec<[f64; 9]>>,
}

impl SurfaceAccumulator {
    /// Select the boundary faces of the named patches and freeze their
    /// geometry (positions, normals, weights, y+ reference distances).
    pub fn new(solver: &Solver, patches: &[String]) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Config("empty surface patch selection".into()));
        }
        let mut patch_list = Vec::new();
        for name in patches {
            let idx = solver
                .mesh
                .tag_index(name)
                .ok_or_else(|| Error::Config(format!("unknown surface patch `{name}`")))?;
            patch_list.push((name.clone(), solver.mesh.bc_tags[idx].kind, idx));
        }
        let np = solver.basis.len();
        let w = &solver.basis.weights;
        let mut faces = Vec::new();
        let mut geometry = Vec::new();
        for (fid, face) in solver.mesh.faces.iter().enumerate() {
            let Some(bc) = face.bc else { continue };
            let Some(pi) = patch_list.iter().position(|(.., idx)| *idx == bc) else {
                continue;
            };
            let fg = &solver.geom.faces[fid];
            let elem = &solver.geom.elems[face.left];
            let (axis, positive, t1, t2) = face_axes(face.left_side);
            let mut nodes = Vec::with_capacity(np * np);
            for b in 0..np {
                for a in 0..np {
                    let fnode = b * np + a;
                    // wall-normal reference node for y+ (element interior side)
                    let ref_line_idx = match (solver.basis.nodal_boundary, positive) {
                        (true, true) => np - 2,
                        (true, false) => 1,
                        (false, true) => np - 1,
                        (false, false) => 0,
                    };
                    let mut c = [0usize; 3];
                    c[axis] = ref_line_idx;
                    c[t1] = a;
                    c[t2] = b;
                    let vnode = (c[2] * np + c[1]) * np + c[0];
                    let xr = elem.xyz[vnode];
                    let xw = fg.xyz[fnode];
                    let y_ref = ((xr[0] - xw[0]).powi(2)
                        + (xr[1] - xw[1]).powi(2)
                        + (xr[2] - xw[2]).powi(2))
                    .sqrt();
                    // tangential spacings and directions from face neighbors
                    let neighbor = |da: isize, db: isize| -> [f64; 3] {
                        let na = (a as isize + da).clamp(0, np as isize - 1) as usize;
                        let nb = (b as isize + db).clamp(0, np as isize - 1) as usize;
                        fg.xyz[nb * np + na]
                    };
                    let mut spacing = [0.0f64; 2];
                    let mut tangents = [[0.0f64; 3]; 2];
                    for (t, (da, db)) in [(1isize, 0isize), (0, 1)].iter().enumerate() {
                        let (p1, p0) = if (t == 0 && a + 1 < np) || (t == 1 && b + 1 < np) {
                            (neighbor(*da, *db), xw)
                        } else {
                            (xw, neighbor(-da, -db))
                        };
                        let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
                        let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                        spacing[t] = len;
                        if len > 0.0 {
                            tangents[t] = [d[0] / len, d[1] / len, d[2] / len];
                        }
                    }
                    nodes.push(SurfaceNode {
                        xyz: xw,
                        normal: fg.normal[fnode],
                        weight: w[a] * w[b] * fg.js[fnode],
                        y_ref,
                        spacing,
                        tangents,
                        p: 0.0,
                        grad: [0.0; 9],
                    });
                }
            }
            faces.push((pi, fid));
            geometry.push(nodes);
        }
        let p_sum = geometry.iter().map(|g| vec![0.0; g.len()]).collect();
        let grad_sum = geometry.iter().map(|g| vec![[0.0; 9]; g.len()]).collect();
        Ok(Self {
            patches: patch_list
                .into_iter()
                .map(|(name, kind, _)| (name, kind))
                .collect(),
            faces,
            geometry,
            count: 0,
            p_sum,
            grad_sum,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Add one sample of wall pressure and velocity gradient. The workspace
    /// must hold current gradients (any operator evaluation of `q`).
    pub fn accumulate(&mut self, solver: &Solver, q: &SolutionField, ws: &Workspace) {
        let np = solver.basis.len();
        let nf = np * np;
        let nn = solver.nodes_per_element();
        let gas = solver.scheme.gas;
        self.count += 1;
        let mut u_face = vec![0.0f64; nf * 5];
        let mut g_face = vec![0.0f64; nf * 12];
        for (slot, &(_, fid)) in self.faces.iter().enumerate() {
            let face = &solver.mesh.faces[fid];
            let e = face.left;
            solver.gather_face(
                &q.data[e * nn * 5..(e + 1) * nn * 5],
                5,
                face.left_side,
                &mut u_face,
            );
            solver.gather_face(
                &ws.gradients()[e * nn * 12..(e + 1) * nn * 12],
                12,
                face.left_side,
                &mut g_face,
            );
            for fnode in 0..nf {
                let u: crate::physics::State =
                    u_face[fnode * 5..fnode * 5 + 5].try_into().unwrap();
                let p = primitive_unchecked(&u, &gas).p;
                self.p_sum[slot][fnode] += p;
                for c in 0..9 {
                    self.grad_sum[slot][fnode][c] += g_face[fnode * 12 + c];
                }
            }
        }
    }

    /// Time-averaged surface records, one per patch.
    pub fn finalize(&self) -> Result<Vec<SurfaceRecord>> {
        if self.count == 0 {
            return Err(Error::InsufficientData(
                "no surface samples accumulated".into(),
            ));
        }
        let n = self.count as f64;
        let mut records: Vec<SurfaceRecord> = self
            .patches
            .iter()
            .map(|(name, kind)| SurfaceRecord {
                patch: name.clone(),
                kind: *kind,
                nodes: Vec::new(),
            })
            .collect();
        for (slot, &(pi, _)) in self.faces.iter().enumerate() {
            for (fnode, geo) in self.geometry[slot].iter().enumerate() {
                let mut node = geo.clone();
                node.p = self.p_sum[slot][fnode] / n;
                for c in 0..9 {
                    node.grad[c] = self.grad_sum[slot][fnode][c] / n;
                }
                records[pi].nodes.push(node);
            }
        }
        Ok(records)
    }
}

/// Spanwise-average samples sharing the same chordwise coordinate.
fn span_average(mut samples: Vec<(f64, Vec<f64>)>) -> Vec<(f64, Vec<f64>)> {
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, Vec<f64>, usize)> = Vec::new();
    let tol = 1e-9;
    for (x, vals) in samples {
        match out.last_mut() {
            Some((x0, acc, n)) if (x - *x0).abs() <= tol * x0.abs().max(1.0) => {
                for (a, v) in acc.iter_mut().zip(vals.iter()) {
                    *a += v;
                }
                *n += 1;
            }
            _ => out.push((x, vals, 1)),
        }
    }
    out.into_iter()
        .map(|(x, vals, n)| (x, vals.into_iter().map(|v| v / n as f64).collect()))
        .collect()
}

/// Pressure coefficient profile Cp(x/c) = (p - p_inf) / (rho U^2 / 2),
/// spanwise averaged and sorted by the chordwise coordinate (the position
/// along the drag axis over the chord).
pub fn surface_cp(record: &SurfaceRecord, reference: &FlowReference) -> Vec<(f64, f64)> {
    let q_inf = reference.dynamic_head();
    let ax = reference.drag_axis;
    let samples = record
        .nodes
        .iter()
        .map(|n| {
            let x = (n.xyz[0] * ax[0] + n.xyz[1] * ax[1] + n.xyz[2] * ax[2]) / reference.chord;
            (x, vec![(n.p - reference.p_inf) / q_inf])
        })
        .collect();
    span_average(samples)
        .into_iter()
        .map(|(x, v)| (x, v[0]))
        .collect()
}

/// One skin-friction sample.
#[derive(Debug, Clone, Copy)]
pub struct CfPoint {
    pub x_over_c: f64,
    pub cf: f64,
    pub yplus: f64,
    pub xplus: f64,
}

/// Viscous traction tau . n from a velocity gradient (alpha layout) and an
/// effective viscosity.
pub(crate) fn viscous_traction(grad: &[f64; 9], mu_eff: f64, n: &[f64; 3]) -> [f64; 3] {
    let div = grad[0] + grad[4] + grad[8];
    let mut t = [0.0f64; 3];
    for c in 0..3 {
        for d in 0..3 {
            let mut tau = mu_eff * (grad[d * 3 + c] + grad[c * 3 + d]);
            if c == d {
                tau -= 2.0 / 3.0 * mu_eff * div;
            }
            t[c] += tau * n[d];
        }
    }
    t
}

/// Skin friction Cf = 2 tau_w / (rho U^2) with viscous wall units
/// y+ = u_tau y2 / nu and x+ = u_tau dx / nu, spanwise averaged.
///
/// The wall shear comes from the time-averaged velocity gradient with the
/// molecular viscosity (the eddy viscosity vanishes at walls); its sign
/// follows the streamwise tangent (drag axis projected on the wall).
pub fn surface_cf(
    record: &SurfaceRecord,
    reference: &FlowReference,
    solver: &Solver,
) -> Result<Vec<CfPoint>> {
    if !record.kind.is_wall() {
        return Err(Error::Config(format!(
            "skin friction requested on non-wall patch `{}` of kind {}",
            record.patch,
            record.kind.name()
        )));
    }
    let mu = solver.scheme.gas.mu;
    let nu = mu / reference.rho_inf;
    let q_inf = reference.dynamic_head();
    let ax = reference.drag_axis;
    let samples = record
        .nodes
        .iter()
        .map(|node| {
            // wall shear on the wall: traction along the body-outward normal,
            // which is the reverse of the stored fluid-outward face normal
            let n = [-node.normal[0], -node.normal[1], -node.normal[2]];
            let t_full = viscous_traction(&node.grad, mu, &n);
            let tn = t_full[0] * n[0] + t_full[1] * n[1] + t_full[2] * n[2];
            let tau_w = [
                t_full[0] - tn * n[0],
                t_full[1] - tn * n[1],
                t_full[2] - tn * n[2],
            ];
            // streamwise unit tangent: drag axis minus its normal component
            let axn = ax[0] * n[0] + ax[1] * n[1] + ax[2] * n[2];
            let mut ts = [ax[0] - axn * n[0], ax[1] - axn * n[1], ax[2] - axn * n[2]];
            let tl = (ts[0] * ts[0] + ts[1] * ts[1] + ts[2] * ts[2]).sqrt();
            if tl > 0.0 {
                ts = [ts[0] / tl, ts[1] / tl, ts[2] / tl];
            }
            let tau_signed = tau_w[0] * ts[0] + tau_w[1] * ts[1] + tau_w[2] * ts[2];
            let tau_mag =
                (tau_w[0] * tau_w[0] + tau_w[1] * tau_w[1] + tau_w[2] * tau_w[2]).sqrt();
            let u_tau = (tau_mag / reference.rho_inf).sqrt();
            let yplus = if nu > 0.0 { u_tau * node.y_ref / nu } else { 0.0 };
            // streamwise spacing: the face coordinate direction most aligned
            // with the streamwise tangent
            let proj0 = (node.tangents[0][0] * ts[0]
                + node.tangents[0][1] * ts[1]
                + node.tangents[0][2] * ts[2])
                .abs();
            let proj1 = (node.tangents[1][0] * ts[0]
                + node.tangents[1][1] * ts[1]
                + node.tangents[1][2] * ts[2])
                .abs();
            let dx = if proj0 >= proj1 {
                node.spacing[0]
            } else {
                node.spacing[1]
            };
            let xplus = if nu > 0.0 { u_tau * dx / nu } else { 0.0 };
            let x = (node.xyz[0] * ax[0] + node.xyz[1] * ax[1] + node.xyz[2] * ax[2])
                / reference.chord;
            // Cf = 2 tau_w / (rho U^2) = tau_w / q_inf
            (x, vec![tau_signed / q_inf, yplus, xplus])
        })
        .collect();
    Ok(span_average(samples)
        .into_iter()
        .map(|(x, v)| CfPoint {
            x_over_c: x,
            cf: v[0],
            yplus: v[1],
            xplus: v[2],
        })
        .collect())
}

/// Integrated aerodynamic force coefficients.
#[derive(Debug, Clone)]
pub struct ForceCoefficients {
    pub patches: Vec<String>,
    /// Per patch: [C_L, C_D].
    pub per_patch: Vec<[f64; 2]>,
    pub cl_total: f64,
    pub cd_total: f64,
}

/// Surface-quadrature force integral F = sum (-p n + tau . n) w Js over the
/// selected patches with n the body-outward normal, normalized by the dynamic
/// head and reference area. Downforce gives negative lift coefficients.
///
/// `gradients`/`mu_t` supply the viscous contribution (pass the workspace
/// arrays after an operator evaluation; `None` for inviscid bookkeeping).
pub fn integrate_forces(
    solver: &Solver,
    q: &SolutionField,
    gradients: Option<&[f64]>,
    mu_t: Option<&[f64]>,
    patches: &[String],
    reference: &FlowReference,
) -> Result<ForceCoefficients> {
    if patches.is_empty() {
        return Err(Error::Config("empty force patch selection".into()));
    }
    let mut tag_of_patch = Vec::new();
    for name in patches {
        let idx = solver
            .mesh
            .tag_index(name)
            .ok_or_else(|| Error::Config(format!("unknown force patch `{name}`")))?;
        tag_of_patch.push(idx);
    }
    let np = solver.basis.len();
    let nf = np * np;
    let nn = solver.nodes_per_element();
    let w = &solver.basis.weights;
    let gas = solver.scheme.gas;
    let mut force = vec![[0.0f64; 3]; patches.len()];
    let mut u_face = vec![0.0f64; nf * 5];
    let mut g_face = vec![0.0f64; nf * 12];
    let mut m_face = vec![0.0f64; nf];
    for (fid, face) in solver.mesh.faces.iter().enumerate() {
        let Some(bc) = face.bc else { continue };
        let Some(pi) = tag_of_patch.iter().position(|&t| t == bc) else {
            continue;
        };
        let e = face.left;
        solver.gather_face(
            &q.data[e * nn * 5..(e + 1) * nn * 5],
            5,
            face.left_side,
            &mut u_face,
        );
        if let Some(g) = gradients {
            solver.gather_face(&g[e * nn * 12..(e + 1) * nn * 12], 12, face.left_side, &mut g_face);
        }
        if let Some(m) = mu_t {
            solver.gather_face(&m[e * nn..(e + 1) * nn], 1, face.left_side, &mut m_face);
        }
        let fg = &solver.geom.faces[fid];
        for b in 0..np {
            for a in 0..np {
                let fnode = b * np + a;
                let u: crate::physics::State =
                    u_face[fnode * 5..fnode * 5 + 5].try_into().unwrap();
                let p = primitive_unchecked(&u, &gas).p;
                // force on the body: traction along the body-outward normal
                // (the reverse of the stored fluid-outward face normal)
                let n = [
                    -fg.normal[fnode][0],
                    -fg.normal[fnode][1],
                    -fg.normal[fnode][2],
                ];
                let quad = w[a] * w[b] * fg.js[fnode];
                let mut t = [-p * n[0], -p * n[1], -p * n[2]];
                if let Some(_) = gradients {
                    let grad: [f64; 9] =
                        g_face[fnode * 12..fnode * 12 + 9].try_into().unwrap();
                    let mu_eff = gas.mu + if mu_t.is_some() { m_face[fnode] } else { 0.0 };
                    let tv = viscous_traction(&grad, mu_eff, &n);
                    t[0] += tv[0];
                    t[1] += tv[1];
                    t[2] += tv[2];
                }
                force[pi][0] += quad * t[0];
                force[pi][1] += quad * t[1];
                force[pi][2] += quad * t[2];
            }
        }
    }
    let denom = reference.dynamic_head() * reference.area;
    let (la, da) = (reference.lift_axis, reference.drag_axis);
    let mut per_patch = Vec::with_capacity(patches.len());
    let (mut cl_total, mut cd_total) = (0.0, 0.0);
    for f in &force {
        let cl = (f[0] * la[0] + f[1] * la[1] + f[2] * la[2]) / denom;
        let cd = (f[0] * da[0] + f[1] * da[1] + f[2] * da[2]) / denom;
        per_patch.push([cl, cd]);
        cl_total += cl;
        cd_total += cd;
    }
    Ok(ForceCoefficients {
        patches: patches.to_vec(),
        per_patch,
        cl_total,
        cd_total,
    })
}
