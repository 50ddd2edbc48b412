//! Wake-station profile extraction by element-local polynomial evaluation,
//! matching the spectral representation of the solution (no nearest-node
//! artifacts).

use super::{FlowReference, VelocityStats};
use crate::basis::{barycentric_weights, build_basis, lagrange_derivatives, lagrange_values, NodeKind};
use crate::error::{Error, Result};
use crate::solver::Solver;

/// Vertical sampling line specification for wake stations.
#[derive(Debug, Clone, Copy)]
pub struct WakeLine {
    /// Spanwise coordinate of the line.
    pub z: f64,
    /// Vertical range [y_min, y_max].
    pub y_range: [f64; 2],
    /// Number of samples along the line.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct WakeRow {
    pub y_over_c: f64,
    pub u_over_uinf: f64,
    pub u_rms: f64,
    pub tke: f64,
}

#[derive(Debug, Clone)]
pub struct WakeProfile {
    pub station: f64,
    pub rows: Vec<WakeRow>,
}

/// Newton inversion of the element mapping; returns reference coordinates
/// when the point lies inside the element.
fn invert_mapping(
    geom_nodes: &[[f64; 3]],
    geo_nodes_1d: &[f64],
    geo_bary: &[f64],
    target: [f64; 3],
    scale: f64,
) -> Option<[f64; 3]> {
    let npg = geo_nodes_1d.len();
    let mut xi = [0.0f64; 3];
    for _ in 0..60 {
        let lx = lagrange_values(geo_nodes_1d, geo_bary, xi[0]);
        let ly = lagrange_values(geo_nodes_1d, geo_bary, xi[1]);
        let lz = lagrange_values(geo_nodes_1d, geo_bary, xi[2]);
        let dx = lagrange_derivatives(geo_nodes_1d, geo_bary, xi[0]);
        let dy = lagrange_derivatives(geo_nodes_1d, geo_bary, xi[1]);
        let dz = lagrange_derivatives(geo_nodes_1d, geo_bary, xi[2]);
        let mut x = [0.0f64; 3];
        let mut jac = [[0.0f64; 3]; 3]; // jac[c][d] = d x_c / d xi_d
        for k in 0..npg {
            for j in 0..npg {
                let lyz = ly[j] * lz[k];
                let dyz = dy[j] * lz[k];
                let ydz = ly[j] * dz[k];
                for i in 0..npg {
                    let node = geom_nodes[(k * npg + j) * npg + i];
                    let w = lx[i] * lyz;
                    let wx = dx[i] * lyz;
                    let wy = lx[i] * dyz;
                    let wz = lx[i] * ydz;
                    for c in 0..3 {
                        x[c] += w * node[c];
                        jac[c][0] += wx * node[c];
                        jac[c][1] += wy * node[c];
                        jac[c][2] += wz * node[c];
                    }
                }
            }
        }
        let r = [x[0] - target[0], x[1] - target[1], x[2] - target[2]];
        let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if rn <= 1e-12 * scale {
            break;
        }
        // solve jac * delta = r
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / det;
        let adj = [
            [
                jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1],
                jac[0][2] * jac[2][1] - jac[0][1] * jac[2][2],
                jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1],
            ],
            [
                jac[1][2] * jac[2][0] - jac[1][0] * jac[2][2],
                jac[0][0] * jac[2][2] - jac[0][2] * jac[2][0],
                jac[0][2] * jac[1][0] - jac[0][0] * jac[1][2],
            ],
            [
                jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0],
                jac[0][1] * jac[2][0] - jac[0][0] * jac[2][1],
                jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
            ],
        ];
        for d in 0..3 {
            let delta = inv * (adj[d][0] * r[0] + adj[d][1] * r[1] + adj[d][2] * r[2]);
            xi[d] -= delta;
            xi[d] = xi[d].clamp(-1.5, 1.5);
        }
    }
    let tol = 1e-9;
    if xi.iter().all(|v| v.abs() <= 1.0 + tol) {
        Some([
            xi[0].clamp(-1.0, 1.0),
            xi[1].clamp(-1.0, 1.0),
            xi[2].clamp(-1.0, 1.0),
        ])
    } else {
        None
    }
}

/// Find the element containing a physical point and its reference
/// coordinates.
pub fn locate_point(solver: &Solver, p: [f64; 3]) -> Option<(usize, [f64; 3])> {
    let geo = build_basis(NodeKind::GaussLobatto, solver.mesh.n_geo).ok()?;
    let geo_bary = barycentric_weights(&geo.nodes);
    locate_point_with(solver, &geo.nodes, &geo_bary, p)
}

fn locate_point_with(
    solver: &Solver,
    geo_nodes: &[f64],
    geo_bary: &[f64],
    p: [f64; 3],
) -> Option<(usize, [f64; 3])> {
    for (e, nodes) in solver.mesh.geometry.iter().enumerate() {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for n in nodes {
            for c in 0..3 {
                lo[c] = lo[c].min(n[c]);
                hi[c] = hi[c].max(n[c]);
            }
        }
        let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2))
            .sqrt();
        let margin = 0.2 * diag + 1e-12;
        if (0..3).any(|c| p[c] < lo[c] - margin || p[c] > hi[c] + margin) {
            continue;
        }
        if let Some(xi) = invert_mapping(nodes, geo_nodes, geo_bary, p, diag.max(1e-12)) {
            return Some((e, xi));
        }
    }
    None
}

/// Evaluate nodal per-node scalar data of one element at reference point xi
/// by tensor-product Lagrange interpolation.
fn eval_nodal(
    values: impl Fn(usize) -> f64,
    np: usize,
    lx: &[f64],
    ly: &[f64],
    lz: &[f64],
) -> f64 {
    let mut out = 0.0;
    for k in 0..np {
        for j in 0..np {
            let lyz = ly[j] * lz[k];
            for i in 0..np {
                out += lx[i] * lyz * values((k * np + j) * np + i);
            }
        }
    }
    out
}

/// Sample mean/RMS/TKE wake profiles at the given chordwise stations by
/// exact polynomial evaluation inside the owning elements.
pub fn sample_wake_profiles(
    solver: &Solver,
    stats: &VelocityStats,
    stations: &[f64],
    line: WakeLine,
    reference: &FlowReference,
) -> Result<Vec<WakeProfile>> {
    if line.samples < 2 {
        return Err(Error::Config("wake line needs at least 2 samples".into()));
    }
    let np = solver.basis.len();
    let nn = solver.nodes_per_element();
    let geo = build_basis(NodeKind::GaussLobatto, solver.mesh.n_geo)?;
    let geo_bary = barycentric_weights(&geo.nodes);
    let sol_bary = &solver.basis.bary;
    // streamwise axis: the dominant component of the drag axis
    let ax = reference.drag_axis;
    let stream = (0..3)
        .max_by(|&a, &b| ax[a].abs().total_cmp(&ax[b].abs()))
        .unwrap();
    let mut profiles = Vec::with_capacity(stations.len());
    for &station in stations {
        let mut rows = Vec::with_capacity(line.samples);
        for s in 0..line.samples {
            let frac = s as f64 / (line.samples - 1) as f64;
            let y = line.y_range[0] + frac * (line.y_range[1] - line.y_range[0]);
            let x = station * reference.chord;
            let p = [x, y, line.z];
            let Some((e, xi)) = locate_point_with(solver, &geo.nodes, &geo_bary, p) else {
                return Err(Error::OutOfRange(format!(
                    "wake sample point ({}, {}, {}) at station x/c = {station} lies outside the mesh",
                    p[0], p[1], p[2]
                )));
            };
            let lx = lagrange_values(&solver.basis.nodes, sol_bary, xi[0]);
            let ly = lagrange_values(&solver.basis.nodes, sol_bary, xi[1]);
            let lz = lagrange_values(&solver.basis.nodes, sol_bary, xi[2]);
            let base = e * nn;
            let u_mean = eval_nodal(|n| stats.mean[base + n][stream], np, &lx, &ly, &lz);
            let u_rms = eval_nodal(|n| stats.rms[base + n][stream], np, &lx, &ly, &lz);
            let tke = eval_nodal(|n| stats.tke[base + n], np, &lx, &ly, &lz);
            rows.push(WakeRow {
                y_over_c: y / reference.chord,
                u_over_uinf: u_mean / reference.u_inf,
                u_rms,
                tke,
            });
        }
        profiles.push(WakeProfile { station, rows });
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::box_mesh;
    use crate::physics::{conservative, GasModel};
    use crate::solver::{Formulation, SchemeConfig, SolutionField};
    use crate::stats::StatisticsAccumulator;

    fn setup(order: usize) -> (Solver, FlowReference) {
        let gas = GasModel::air(0.1, None).unwrap();
        let mesh = box_mesh(
            [2, 2, 1],
            [[0.0, 2.0], [0.0, 1.0], [0.0, 0.5]],
            [false; 3],
            1,
        )
        .unwrap();
        let solver = Solver::new(
            mesh,
            order,
            SchemeConfig::new(Formulation::ImplicitLesKgGaussLobatto, gas),
        )
        .unwrap();
        let r = FlowReference {
            rho_inf: 1.0,
            u_inf: 1.0,
            p_inf: gas.p_inf(),
            chord: 1.0,
            area: 1.0,
            drag_axis: [1.0, 0.0, 0.0],
            lift_axis: [0.0, 1.0, 0.0],
        };
        (solver, r)
    }

    fn stats_of_steady(
        solver: &Solver,
        field: impl Fn([f64; 3]) -> crate::physics::State + Copy,
    ) -> VelocityStats {
        let q = SolutionField::from_fn(&solver.geom, solver.order(), field);
        let nn = solver.mesh.n_elements() * solver.nodes_per_element();
        let mut acc = StatisticsAccumulator::new(nn);
        acc.accumulate(solver, &q, 0.0);
        acc.accumulate(solver, &q, 1.0);
        acc.finalize().unwrap()
    }

    #[test]
    fn uniform_flow_gives_flat_profile() {
        let (solver, r) = setup(3);
        let gas = *solver.gas();
        let stats = stats_of_steady(&solver, move |_| {
            conservative(1.0, [1.0, 0.0, 0.0], gas.p_inf(), &gas)
        });
        let line = WakeLine {
            z: 0.25,
            y_range: [0.05, 0.95],
            samples: 7,
        };
        let profiles = sample_wake_profiles(&solver, &stats, &[0.5, 1.5], line, &r).unwrap();
        for p in &profiles {
            for row in &p.rows {
                assert!((row.u_over_uinf - 1.0).abs() < 1e-12);
                assert!(row.u_rms.abs() < 1e-12 && row.tke.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polynomial_field_is_reproduced_exactly() {
        let (solver, r) = setup(3);
        let gas = *solver.gas();
        // u = cubic polynomial in (x, y, z): within the degree-3 basis
        let poly = |x: [f64; 3]| 0.3 + x[0] * x[1] - 0.1 * x[2] * x[0] * x[1] + 0.01 * x[1].powi(3);
        let stats = stats_of_steady(&solver, move |x| {
            conservative(1.0, [poly(x), 0.0, 0.0], gas.p_inf(), &gas)
        });
        let line = WakeLine {
            z: 0.2,
            y_range: [0.1, 0.9],
            samples: 9,
        };
        let profiles = sample_wake_profiles(&solver, &stats, &[0.77], line, &r).unwrap();
        for row in &profiles[0].rows {
            let expect = poly([0.77, row.y_over_c, 0.2]);
            assert!(
                (row.u_over_uinf - expect).abs() <= 1e-12,
                "{} vs {expect}",
                row.u_over_uinf
            );
        }
    }

    #[test]
    fn station_outside_domain_is_an_error() {
        let (solver, r) = setup(2);
        let gas = *solver.gas();
        let stats = stats_of_steady(&solver, move |_| {
            conservative(1.0, [1.0, 0.0, 0.0], gas.p_inf(), &gas)
        });
        let line = WakeLine {
            z: 0.25,
            y_range: [0.1, 0.9],
            samples: 3,
        };
        match sample_wake_profiles(&solver, &stats, &[5.0], line, &r) {
            Err(Error::OutOfRange(msg)) => assert!(msg.contains("outside")),
            other => panic!("expected OutOfRange, got {other:?}"),
        }
    }
}
