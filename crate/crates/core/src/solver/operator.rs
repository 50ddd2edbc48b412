//! The semi-discrete spatial operator.
//!
//! Explicit LES path: weak-form DGSEM volume terms with pointwise fluxes and
//! Vreman eddy viscosity on Gauss nodes. Implicit LES path: strong-form flux
//! differencing with metric-averaged Kennedy-Gruber two-point fluxes on
//! Gauss-Lobatto nodes. Both share BR1 gradients and the same face machinery;
//! face fluxes are computed once per face and consumed by both neighbor
//! elements, so interface terms telescope exactly.

use rayon::prelude::*;

use super::bc::{boundary_viscous_flux, ghost_state};
use super::{Formulation, SolutionField, Solver, Workspace};
use crate::error::{Error, Result};
use crate::mesh::{face_axes, face_node_index, orient_map};
use crate::physics::{
    self, euler_flux_normal, euler_flux_prim, interface_flux_prim, kg_flux_prim,
    primitive_unchecked, viscous_flux_normal, viscous_flux_prim, PrimitiveState, State,
    VelocityGradient,
};

/// Scratch buffers for one operator evaluation (everything except the
/// residual and RK registers, which the time integrator owns).
#[derive(Debug, Clone)]
pub struct OpScratch {
    pub(crate) prim: Vec<PrimitiveState>,
    /// Packed (v1, v2, v3, T) per node for gradient work.
    pub(crate) phi: Vec<f64>,
    /// 12 per node: alpha (alpha[d*3+j] = d v_j / d x_d) + grad T.
    pub(crate) grad: Vec<f64>,
    pub(crate) mu_t: Vec<f64>,
    /// Gradient face scratch, 8 per face node: the BR1 lift jumps
    /// (phi* - phi_side) for the left and right elements.
    pub(crate) face_phi: Vec<f64>,
    /// Flux face scratch, 15 per face node: numerical total flux (outward from
    /// the left element, scaled by Js), left interior flux, right interior
    /// flux (the latter outward from the right element).
    pub(crate) face_flux: Vec<f64>,
}

impl OpScratch {
    pub(crate) fn new(solver: &Solver) -> Self {
        let nn = solver.nodes_per_element();
        let ne = solver.mesh.n_elements();
        let nf = solver.basis.len() * solver.basis.len();
        let quiet = PrimitiveState {
            rho: 1.0,
            v: [0.0; 3],
            p: 1.0,
            t: 1.0,
            a: 1.0,
            h: 1.0,
        };
        Self {
            prim: vec![quiet; ne * nn],
            phi: vec![0.0; ne * nn * 4],
            grad: vec![0.0; ne * nn * 12],
            mu_t: vec![0.0; ne * nn],
            face_phi: vec![0.0; solver.mesh.faces.len() * nf * 8],
            face_flux: vec![0.0; solver.mesh.faces.len() * nf * 15],
        }
    }
}

#[inline]
fn line_node(axis: usize, t1: usize, t2: usize, a: usize, b: usize, i: usize, np: usize) -> usize {
    let mut c = [0usize; 3];
    c[axis] = i;
    c[t1] = a;
    c[t2] = b;
    (c[2] * np + c[1]) * np + c[0]
}

/// Visit every tensor line along `axis`: yields (base index, stride).
#[inline]
fn for_each_line(np: usize, axis: usize, mut f: impl FnMut(usize, usize)) {
    let np2 = np * np;
    match axis {
        0 => {
            for kj in 0..np2 {
                f(kj * np, 1);
            }
        }
        1 => {
            for k in 0..np {
                for i in 0..np {
                    f(k * np2 + i, np);
                }
            }
        }
        _ => {
            for ji in 0..np2 {
                f(ji, np2);
            }
        }
    }
}

/// Left-face coordinates that map to own coordinates (a, b) under
/// `orientation` (inverse of [`orient_map`]).
#[inline]
pub(crate) fn invert_orient(orientation: u8, a: usize, b: usize, n_max: usize) -> (usize, usize) {
    let (mut u, mut v) = (a, b);
    if orientation & 1 != 0 {
        u = n_max - u;
    }
    if orientation & 2 != 0 {
        v = n_max - v;
    }
    if orientation & 4 != 0 {
        (v, u)
    } else {
        (u, v)
    }
}

impl Solver {
    /// Scan a raw field for NaNs, non-positive density or pressure; reports
    /// the first offending element/node (deterministic).
    pub fn validate_field(&self, data: &[f64]) -> Result<()> {
        let nn = self.nodes_per_element();
        let gas = self.scheme.gas;
        let bad = data
            .par_chunks(nn * 5)
            .enumerate()
            .filter_map(|(e, chunk)| {
                for node in 0..nn {
                    let u: State = chunk[node * 5..node * 5 + 5].try_into().unwrap();
                    if !physics::state_is_valid(&u, &gas) {
                        let rho = u[0];
                        let ke = if rho != 0.0 {
                            0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / rho
                        } else {
                            f64::NAN
                        };
                        let p = (gas.gamma - 1.0) * (u[4] - ke);
                        return Some((e, node, rho, p));
                    }
                }
                None
            })
            .min_by_key(|&(e, node, ..)| (e, node));
        match bad {
            None => Ok(()),
            Some((e, node, rho, p)) => Err(Error::InvalidState {
                rho,
                pressure: p,
                element: Some(e),
                node: Some(node),
            }),
        }
    }

    /// Fill the primitive cache and packed (v, T) array.
    pub(crate) fn update_primitives(&self, data: &[f64], op: &mut OpScratch) {
        let nn = self.nodes_per_element();
        let gas = self.scheme.gas;
        op.prim
            .par_chunks_mut(nn)
            .zip(op.phi.par_chunks_mut(nn * 4))
            .zip(data.par_chunks(nn * 5))
            .for_each(|((prim, phi), u)| {
                for node in 0..nn {
                    let s: State = u[node * 5..node * 5 + 5].try_into().unwrap();
                    let q = primitive_unchecked(&s, &gas);
                    prim[node] = q;
                    phi[node * 4] = q.v[0];
                    phi[node * 4 + 1] = q.v[1];
                    phi[node * 4 + 2] = q.v[2];
                    phi[node * 4 + 3] = q.t;
                }
            });
    }

    /// Face values of an `ncomp`-strided per-element field on `side`, indexed
    /// by this side's own (a, b) coordinates. Nodal pick on Gauss-Lobatto,
    /// boundary interpolation on Gauss.
    pub(crate) fn gather_face(&self, elem_data: &[f64], ncomp: usize, side: u8, out: &mut [f64]) {
        match ncomp {
            1 => self.gather_face_n::<1>(elem_data, side, out),
            4 => self.gather_face_n::<4>(elem_data, side, out),
            5 => self.gather_face_n::<5>(elem_data, side, out),
            12 => self.gather_face_n::<12>(elem_data, side, out),
            _ => unreachable!("unsupported gather width"),
        }
    }

    fn gather_face_n<const NC: usize>(&self, elem_data: &[f64], side: u8, out: &mut [f64]) {
        let np = self.basis.len();
        let (axis, positive, t1, t2) = face_axes(side);
        if self.basis.nodal_boundary {
            for b in 0..np {
                for a in 0..np {
                    let vid = face_node_index(side, a, b, np);
                    out[(b * np + a) * NC..(b * np + a + 1) * NC]
                        .copy_from_slice(&elem_data[vid * NC..(vid + 1) * NC]);
                }
            }
        } else {
            let lvec = if positive {
                &self.basis.interp_right
            } else {
                &self.basis.interp_left
            };
            let stride = [1, np, np * np][axis] * NC;
            for b in 0..np {
                for a in 0..np {
                    let o = (b * np + a) * NC;
                    let mut acc = [0.0f64; NC];
                    let mut src = line_node(axis, t1, t2, a, b, 0, np) * NC;
                    for &w in lvec {
                        for c in 0..NC {
                            acc[c] += w * elem_data[src + c];
                        }
                        src += stride;
                    }
                    out[o..o + NC].copy_from_slice(&acc);
                }
            }
        }
    }

    /// Reindex an own-coordinate face array into the left element's (a, b).
    fn remap_to_left(&self, own: &[f64], ncomp: usize, orientation: u8, out: &mut [f64]) {
        let np = self.basis.len();
        if orientation == 0 {
            out[..np * np * ncomp].copy_from_slice(&own[..np * np * ncomp]);
            return;
        }
        for b in 0..np {
            for a in 0..np {
                let (ra, rb) = orient_map(orientation, a, b, np - 1);
                let src = (rb * np + ra) * ncomp;
                let dst = (b * np + a) * ncomp;
                out[dst..dst + ncomp].copy_from_slice(&own[src..src + ncomp]);
            }
        }
    }

    /// BR1 gradients of velocity and temperature (conservative volume term
    /// plus surface lifting of arithmetic-mean interface values), and the
    /// Vreman eddy viscosity on the explicit-LES path.
    pub fn compute_gradients(&self, q: &SolutionField, ws: &mut Workspace) -> Result<()> {
        self.validate_field(&q.data)?;
        self.update_primitives(&q.data, &mut ws.op);
        self.gradient_face_phase(&q.data, &mut ws.op, 0.0);
        self.gradient_element_phase(&mut ws.op);
        Ok(())
    }

    /// Face phase of the gradient computation: store the mean (v, T) values.
    pub(crate) fn gradient_face_phase(&self, data: &[f64], op: &mut OpScratch, t: f64) {
        let np = self.basis.len();
        let nf = np * np;
        let nn = self.nodes_per_element();
        let gas = self.scheme.gas;
        let faces = &self.mesh.faces;
        let OpScratch {
            phi, face_phi, ..
        } = op;
        let phi: &[f64] = phi;
        face_phi
            .par_chunks_mut(nf * 8)
            .enumerate()
            .for_each_init(
                || {
                    (
                        vec![0.0f64; nf * 4],
                        vec![0.0f64; nf * 4],
                        vec![0.0f64; nf * 4],
                        vec![0.0f64; nf * 5],
                    )
                },
                |(left, tmp, right, ul), (fid, out)| {
                    let face = &faces[fid];
                    let e = face.left;
                    self.gather_face(&phi[e * nn * 4..(e + 1) * nn * 4], 4, face.left_side, left);
                    match face.right {
                        Some((re, rs)) => {
                            self.gather_face(&phi[re * nn * 4..(re + 1) * nn * 4], 4, rs, tmp);
                            self.remap_to_left(tmp, 4, face.orientation, right);
                            // phi* = (L + R)/2, so the per-side jumps are
                            // +-(R - L)/2
                            for f in 0..nf {
                                for s in 0..4 {
                                    let jump = 0.5 * (right[f * 4 + s] - left[f * 4 + s]);
                                    out[f * 8 + s] = jump;
                                    out[f * 8 + 4 + s] = -jump;
                                }
                            }
                        }
                        None => {
                            let bc = &self.bc_resolved[face.bc.unwrap()];
                            self.gather_face(
                                &data[e * nn * 5..(e + 1) * nn * 5],
                                5,
                                face.left_side,
                                ul,
                            );
                            let fg = &self.geom.faces[fid];
                            for fnode in 0..nf {
                                let u: State = ul[fnode * 5..fnode * 5 + 5].try_into().unwrap();
                                let ghost = ghost_state(&u, bc, &fg.normal[fnode], t, &gas);
                                let qg = primitive_unchecked(&ghost, &gas);
                                let ghost_phi = [qg.v[0], qg.v[1], qg.v[2], qg.t];
                                for s in 0..4 {
                                    out[fnode * 8 + s] =
                                        0.5 * (ghost_phi[s] - left[fnode * 4 + s]);
                                    out[fnode * 8 + 4 + s] = 0.0;
                                }
                            }
                        }
                    }
                },
            );
    }

    /// Element phase of the gradient computation: conservative volume
    /// derivative, lifting, division by J, eddy viscosity.
    pub(crate) fn gradient_element_phase(&self, op: &mut OpScratch) {
        let np = self.basis.len();
        let nn = self.nodes_per_element();
        let nf = np * np;
        let diff = &self.basis.diff;
        let use_vreman = self.scheme.formulation == Formulation::ExplicitLesVremanGauss
            && self.scheme.c_vreman > 0.0;
        let OpScratch {
            prim,
            phi,
            grad,
            mu_t,
            face_phi,
            ..
        } = op;
        let phi: &[f64] = phi;
        let face_phi: &[f64] = face_phi;
        let prim: &[PrimitiveState] = prim;
        let deltas = &self.delta;
        grad.par_chunks_mut(nn * 12)
            .zip(mu_t.par_chunks_mut(nn))
            .enumerate()
            .for_each_init(
                || vec![0.0f64; nn * 12],
                |prod, (e, (grad, mu_t))| {
                    grad.fill(0.0);
                    let elem = &self.geom.elems[e];
                    let phi_e = &phi[e * nn * 4..(e + 1) * nn * 4];
                    // volume: J grad_c phi_s = sum_d D_d ( ja^d_c phi_s ),
                    // accumulated in the packed slot c*4+s
                    for d in 0..3 {
                        for node in 0..nn {
                            let ja = &elem.ja[node];
                            for c in 0..3 {
                                let m = ja[d * 3 + c];
                                for s in 0..4 {
                                    prod[node * 12 + c * 4 + s] = m * phi_e[node * 4 + s];
                                }
                            }
                        }
                        for_each_line(np, d, |base, stride| {
                            for i in 0..np {
                                let row = &diff[i * np..(i + 1) * np];
                                let out = (base + i * stride) * 12;
                                for (m, &dm) in row.iter().enumerate() {
                                    let src = (base + m * stride) * 12;
                                    for c in 0..12 {
                                        grad[out + c] += dm * prod[src + c];
                                    }
                                }
                            }
                        });
                    }
                    // packed (c*4+s) -> final layout (alpha[c*3+s], grad_t[9+c])
                    for node in 0..nn {
                        let g = &mut grad[node * 12..node * 12 + 12];
                        let packed: [f64; 12] = g[..].try_into().unwrap();
                        for c in 0..3 {
                            for s in 0..3 {
                                g[c * 3 + s] = packed[c * 4 + s];
                            }
                            g[9 + c] = packed[c * 4 + 3];
                        }
                    }
                    // lifting of the stored jumps (phi* - phi_own) per face
                    for side in 0..6u8 {
                        let (fid, is_left) = self.mesh.elem_faces[e][side as usize];
                        let fid = fid as usize;
                        let face = &self.mesh.faces[fid];
                        let fg = &self.geom.faces[fid];
                        let (axis, positive, t1, t2) = face_axes(side);
                        let lift = if positive {
                            &self.lift_right
                        } else {
                            &self.lift_left
                        };
                        let sgn = if is_left { 1.0 } else { -1.0 };
                        let slot = if is_left { 0 } else { 4 };
                        let jumps = &face_phi[fid * nf * 8..(fid + 1) * nf * 8];
                        let np1 = np - 1;
                        let stride12 = [1, np, np * np][axis] * 12;
                        for b in 0..np {
                            for a in 0..np {
                                let (la, lb) = if is_left {
                                    (a, b)
                                } else {
                                    invert_orient(face.orientation, a, b, np1)
                                };
                                let lf = lb * np + la;
                                let nrm = fg.normal[lf];
                                let js = fg.js[lf];
                                let dphi = &jumps[lf * 8 + slot..lf * 8 + slot + 4];
                                let mut node12 = line_node(axis, t1, t2, a, b, 0, np) * 12;
                                for &li in lift {
                                    if li != 0.0 {
                                        let g = &mut grad[node12..node12 + 12];
                                        for c in 0..3 {
                                            let w = li * sgn * nrm[c] * js;
                                            for s in 0..3 {
                                                g[c * 3 + s] += w * dphi[s];
                                            }
                                            g[9 + c] += w * dphi[3];
                                        }
                                    }
                                    node12 += stride12;
                                }
                            }
                        }
                    }
                    // divide by J; eddy viscosity
                    for node in 0..nn {
                        let inv_j = elem.inv_jac[node];
                        for c in 0..12 {
                            grad[node * 12 + c] *= inv_j;
                        }
                        mu_t[node] = if use_vreman {
                            let alpha: [f64; 9] =
                                grad[node * 12..node * 12 + 9].try_into().unwrap();
                            physics::vreman_mu_t(
                                &alpha,
                                prim[e * nn + node].rho,
                                deltas[e],
                                self.scheme.c_vreman,
                            )
                        } else {
                            0.0
                        };
                    }
                },
            );
    }

    /// Face phase of the flux computation: numerical total flux (and, for the
    /// split form, the interior fluxes entering the SATs).
    fn flux_face_phase(&self, data: &[f64], op: &mut OpScratch, t: f64, viscous: bool) {
        let np = self.basis.len();
        let nf = np * np;
        let nn = self.nodes_per_element();
        let gas = self.scheme.gas;
        let scheme = self.scheme.interface;
        let need_interior = self.scheme.formulation == Formulation::ImplicitLesKgGaussLobatto;
        let faces = &self.mesh.faces;
        let OpScratch {
            grad,
            mu_t,
            face_flux,
            ..
        } = op;
        let grad: &[f64] = grad;
        let mu_t: &[f64] = mu_t;
        face_flux
            .par_chunks_mut(nf * 15)
            .enumerate()
            .for_each_init(
                || FaceScratch::new(nf),
                |s, (fid, out)| {
                    let face = &faces[fid];
                    let fg = &self.geom.faces[fid];
                    let e = face.left;
                    self.gather_face(&data[e * nn * 5..(e + 1) * nn * 5], 5, face.left_side, &mut s.ul);
                    if viscous {
                        self.gather_face(
                            &grad[e * nn * 12..(e + 1) * nn * 12],
                            12,
                            face.left_side,
                            &mut s.gl,
                        );
                        self.gather_face(
                            &mu_t[e * nn..(e + 1) * nn],
                            1,
                            face.left_side,
                            &mut s.ml,
                        );
                    }
                    let interior = face.right.is_some();
                    if let Some((re, rs)) = face.right {
                        self.gather_face(&data[re * nn * 5..(re + 1) * nn * 5], 5, rs, &mut s.tmp5);
                        self.remap_to_left(&s.tmp5, 5, face.orientation, &mut s.ur);
                        if viscous {
                            self.gather_face(
                                &grad[re * nn * 12..(re + 1) * nn * 12],
                                12,
                                rs,
                                &mut s.tmp12,
                            );
                            self.remap_to_left(&s.tmp12, 12, face.orientation, &mut s.gr);
                            self.gather_face(&mu_t[re * nn..(re + 1) * nn], 1, rs, &mut s.tmp1);
                            self.remap_to_left(&s.tmp1, 1, face.orientation, &mut s.mr);
                        }
                    }
                    let bc = face.bc.map(|b| &self.bc_resolved[b]);
                    for fnode in 0..nf {
                        let n = fg.normal[fnode];
                        let js = fg.js[fnode];
                        let ul: State = s.ul[fnode * 5..fnode * 5 + 5].try_into().unwrap();
                        let ur: State = if interior {
                            s.ur[fnode * 5..fnode * 5 + 5].try_into().unwrap()
                        } else {
                            ghost_state(&ul, bc.unwrap(), &n, t, &gas)
                        };
                        let ql = primitive_unchecked(&ul, &gas);
                        let qr = primitive_unchecked(&ur, &gas);
                        let f_inv = interface_flux_prim(&ql, &qr, &ul, &ur, &n, scheme);
                        // viscous numerical flux and per-side interior fluxes
                        let (f_visc, fv_l) = if viscous {
                            let grad_l = grad_at(&s.gl, fnode);
                            let fv_l =
                                viscous_flux_normal(&ql.v, &grad_l, s.ml[fnode], &gas, &n);
                            if interior {
                                let grad_r = grad_at(&s.gr, fnode);
                                let fv_r =
                                    viscous_flux_normal(&qr.v, &grad_r, s.mr[fnode], &gas, &n);
                                let mut mean = [0.0; 5];
                                for c in 0..5 {
                                    mean[c] = 0.5 * (fv_l[c] + fv_r[c]);
                                }
                                (mean, fv_l)
                            } else {
                                let fb = boundary_viscous_flux(
                                    bc.unwrap(),
                                    &ql.v,
                                    &grad_l,
                                    s.ml[fnode],
                                    &gas,
                                    &n,
                                );
                                (fb, fv_l)
                            }
                        } else {
                            ([0.0; 5], [0.0; 5])
                        };
                        let o = fnode * 15;
                        for c in 0..5 {
                            out[o + c] = (f_inv[c] - f_visc[c]) * js;
                        }
                        if need_interior {
                            let fe_l = euler_flux_normal(&ql, &n);
                            for c in 0..5 {
                                out[o + 5 + c] = (fe_l[c] - fv_l[c]) * js;
                            }
                            if interior {
                                // right element's outward normal is -n
                                let neg = [-n[0], -n[1], -n[2]];
                                let fe_r = euler_flux_normal(&qr, &neg);
                                let grad_r = if viscous {
                                    grad_at(&s.gr, fnode)
                                } else {
                                    VelocityGradient::default()
                                };
                                let fv_rn = if viscous {
                                    viscous_flux_normal(&qr.v, &grad_r, s.mr[fnode], &gas, &neg)
                                } else {
                                    [0.0; 5]
                                };
                                for c in 0..5 {
                                    out[o + 10 + c] = (fe_r[c] - fv_rn[c]) * js;
                                }
                            }
                        }
                    }
                },
            );
    }

    /// Element phase: volume terms (weak form or flux differencing), surface
    /// lifting / SATs, division by J. Fills `dudt`.
    fn residual_element_phase(&self, data: &[f64], op: &OpScratch, dudt: &mut [f64], viscous: bool) {
        let np = self.basis.len();
        let nn = self.nodes_per_element();
        let nf = np * np;
        let gas = self.scheme.gas;
        let split = self.scheme.formulation == Formulation::ImplicitLesKgGaussLobatto;
        let diff = &self.basis.diff;
        let dhat = &self.dhat;
        let prim: &[PrimitiveState] = &op.prim;
        let grad: &[f64] = &op.grad;
        let mu_t: &[f64] = &op.mu_t;
        let face_flux: &[f64] = &op.face_flux;
        let _ = data;
        dudt.par_chunks_mut(nn * 5).enumerate().for_each_init(
            || vec![0.0f64; nn * 15],
            |ftil, (e, res)| {
                res.fill(0.0);
                let elem = &self.geom.elems[e];
                let prim_e = &prim[e * nn..(e + 1) * nn];
                if split {
                    // Euler part: two-point flux differencing with arithmetic
                    // metric averages; res -= 2 sum_m D_im F_S(u_i, u_m)
                    for d in 0..3 {
                        for_each_line(np, d, |base, stride| {
                            for i in 0..np {
                                let ni = base + i * stride;
                                let ja_i = [
                                    elem.ja[ni][d * 3],
                                    elem.ja[ni][d * 3 + 1],
                                    elem.ja[ni][d * 3 + 2],
                                ];
                                // diagonal: consistent flux with own metric
                                let dii = diff[i * np + i];
                                if dii != 0.0 {
                                    let f = euler_flux_normal(&prim_e[ni], &ja_i);
                                    for c in 0..5 {
                                        res[ni * 5 + c] -= 2.0 * dii * f[c];
                                    }
                                }
                                for m in (i + 1)..np {
                                    let nm = base + m * stride;
                                    let javg = [
                                        0.5 * (ja_i[0] + elem.ja[nm][d * 3]),
                                        0.5 * (ja_i[1] + elem.ja[nm][d * 3 + 1]),
                                        0.5 * (ja_i[2] + elem.ja[nm][d * 3 + 2]),
                                    ];
                                    let fs = kg_flux_prim(&prim_e[ni], &prim_e[nm], &javg);
                                    let dim = diff[i * np + m];
                                    let dmi = diff[m * np + i];
                                    for c in 0..5 {
                                        res[ni * 5 + c] -= 2.0 * dim * fs[c];
                                        res[nm * 5 + c] -= 2.0 * dmi * fs[c];
                                    }
                                }
                            }
                        });
                    }
                    // viscous part: strong derivative of the contravariant
                    // viscous flux; res += sum_d D_d Fv~^d
                    if viscous {
                        for node in 0..nn {
                            let g = grad_at(&grad[e * nn * 12..(e + 1) * nn * 12], node);
                            let fv = viscous_flux_prim(&prim_e[node].v, &g, mu_t[e * nn + node], &gas);
                            let ja = &elem.ja[node];
                            for d in 0..3 {
                                for c in 0..5 {
                                    ftil[(node * 3 + d) * 5 + c] = ja[d * 3] * fv[0][c]
                                        + ja[d * 3 + 1] * fv[1][c]
                                        + ja[d * 3 + 2] * fv[2][c];
                                }
                            }
                        }
                        for d in 0..3 {
                            for_each_line(np, d, |base, stride| {
                                for i in 0..np {
                                    let row = &diff[i * np..(i + 1) * np];
                                    let out = (base + i * stride) * 5;
                                    for (m, &dm) in row.iter().enumerate() {
                                        let src = ((base + m * stride) * 3 + d) * 5;
                                        for c in 0..5 {
                                            res[out + c] += dm * ftil[src + c];
                                        }
                                    }
                                }
                            });
                        }
                    }
                } else {
                    // weak form: res_i += sum_m dhat_im Ftot~^d_m per direction
                    for node in 0..nn {
                        let q = &prim_e[node];
                        let fe = euler_flux_prim(q);
                        let fv = if viscous {
                            let g = grad_at(&grad[e * nn * 12..(e + 1) * nn * 12], node);
                            viscous_flux_prim(&q.v, &g, mu_t[e * nn + node], &gas)
                        } else {
                            [[0.0; 5]; 3]
                        };
                        let ja = &elem.ja[node];
                        for d in 0..3 {
                            for c in 0..5 {
                                let tot0 = fe[0][c] - fv[0][c];
                                let tot1 = fe[1][c] - fv[1][c];
                                let tot2 = fe[2][c] - fv[2][c];
                                ftil[(node * 3 + d) * 5 + c] = ja[d * 3] * tot0
                                    + ja[d * 3 + 1] * tot1
                                    + ja[d * 3 + 2] * tot2;
                            }
                        }
                    }
                    for d in 0..3 {
                        for_each_line(np, d, |base, stride| {
                            for i in 0..np {
                                let row = &dhat[i * np..(i + 1) * np];
                                let out = (base + i * stride) * 5;
                                for (m, &dm) in row.iter().enumerate() {
                                    let src = ((base + m * stride) * 3 + d) * 5;
                                    for c in 0..5 {
                                        res[out + c] += dm * ftil[src + c];
                                    }
                                }
                            }
                        });
                    }
                }
                // surface terms: weak lift of the numerical flux, or SATs of
                // (numerical - interior) for the split form
                for side in 0..6u8 {
                    let (fid, is_left) = self.mesh.elem_faces[e][side as usize];
                    let fid = fid as usize;
                    let face = &self.mesh.faces[fid];
                    let (axis, positive, t1, t2) = face_axes(side);
                    let lift = if positive {
                        &self.lift_right
                    } else {
                        &self.lift_left
                    };
                    let sgn = if is_left { 1.0 } else { -1.0 };
                    let flux = &face_flux[fid * nf * 15..(fid + 1) * nf * 15];
                    let np1 = np - 1;
                    for b in 0..np {
                        for a in 0..np {
                            let (la, lb) = if is_left {
                                (a, b)
                            } else {
                                invert_orient(face.orientation, a, b, np1)
                            };
                            let o = (lb * np + la) * 15;
                            let mut sat = [0.0f64; 5];
                            if split {
                                let int_off = if is_left { 5 } else { 10 };
                                for c in 0..5 {
                                    sat[c] = sgn * flux[o + c] - flux[o + int_off + c];
                                }
                            } else {
                                for c in 0..5 {
                                    sat[c] = sgn * flux[o + c];
                                }
                            }
                            for (i, &li) in lift.iter().enumerate() {
                                if li == 0.0 {
                                    continue;
                                }
                                let node = line_node(axis, t1, t2, a, b, i, np);
                                for c in 0..5 {
                                    res[node * 5 + c] -= li * sat[c];
                                }
                            }
                        }
                    }
                }
                for node in 0..nn {
                    let inv_j = elem.inv_jac[node];
                    for c in 0..5 {
                        res[node * 5 + c] *= inv_j;
                    }
                }
            },
        );
    }

    /// Face fluxes + residual assembly after primitives/gradients have been
    /// prepared for this stage.
    pub(crate) fn finish_operator(
        &self,
        data: &[f64],
        t: f64,
        op: &mut OpScratch,
        dudt: &mut [f64],
        viscous: bool,
    ) {
        self.flux_face_phase(data, op, t, viscous);
        self.residual_element_phase(data, op, dudt, viscous);
    }

    /// Full spatial operator dq/dt for a raw field, assuming the field has
    /// been validated. Fills `dudt`.
    pub(crate) fn spatial_operator_into(
        &self,
        data: &[f64],
        t: f64,
        op: &mut OpScratch,
        dudt: &mut [f64],
    ) {
        let viscous = self.needs_gradients();
        self.prepare_stage(data, t, op, viscous);
        self.finish_operator(data, t, op, dudt, viscous);
    }

    /// Spatial operator dq/dt at time `t` (validates the field first).
    ///
    /// The result is in `ws.dudt`; gradients and eddy viscosity remain
    /// available in the workspace.
    pub fn spatial_operator(&self, q: &SolutionField, t: f64, ws: &mut Workspace) -> Result<()> {
        self.validate_field(&q.data)?;
        let Workspace { op, dudt, .. } = ws;
        self.spatial_operator_into(&q.data, t, op, dudt);
        Ok(())
    }
}

/// Per-face gather scratch.
struct FaceScratch {
    ul: Vec<f64>,
    ur: Vec<f64>,
    gl: Vec<f64>,
    gr: Vec<f64>,
    ml: Vec<f64>,
    mr: Vec<f64>,
    tmp5: Vec<f64>,
    tmp12: Vec<f64>,
    tmp1: Vec<f64>,
}

impl FaceScratch {
    fn new(nf: usize) -> Self {
        Self {
            ul: vec![0.0; nf * 5],
            ur: vec![0.0; nf * 5],
            gl: vec![0.0; nf * 12],
            gr: vec![0.0; nf * 12],
            ml: vec![0.0; nf],
            mr: vec![0.0; nf],
            tmp5: vec![0.0; nf * 5],
            tmp12: vec![0.0; nf * 12],
            tmp1: vec![0.0; nf],
        }
    }
}

#[inline]
fn grad_at(g: &[f64], node: usize) -> VelocityGradient {
    let base = node * 12;
    VelocityGradient {
        alpha: g[base..base + 9].try_into().unwrap(),
        grad_t: [g[base + 9], g[base + 10], g[base + 11]],
    }
}
