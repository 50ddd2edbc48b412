//! Boundary conditions: ghost states for the weakly imposed interface fluxes
//! and the viscous wall rules.

use crate::error::{Error, Result};
use crate::mesh::{BcKind, Mesh};
use crate::physics::{
    conservative, primitive_unchecked, GasModel, State, Vec3, VelocityGradient,
};
use crate::solver::SchemeConfig;

/// User-supplied boundary data, matched to the mesh tag kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum BcData {
    Inflow {
        rho: f64,
        velocity: Vec3,
        pressure: f64,
    },
    Outflow {
        pressure: f64,
    },
    FreeSlip,
    NoSlip,
    MovingWall {
        velocity: Vec3,
    },
}

/// Boundary data resolved against a mesh tag.
#[derive(Debug, Clone)]
pub(crate) enum ResolvedBc {
    Inflow { state: State },
    Outflow { pressure: f64 },
    FreeSlip,
    NoSlip,
    MovingWall { velocity: Vec3 },
}

/// Match the scheme's boundary table against the mesh tags.
///
/// Defaults when a tag has no entry: inflow carries the freestream with
/// U = (1,0,0), outflow the freestream pressure, moving walls U = (1,0,0);
/// free-slip and no-slip walls need no data.
pub(crate) fn resolve_bc_table(mesh: &Mesh, scheme: &SchemeConfig) -> Result<Vec<ResolvedBc>> {
    let gas = &scheme.gas;
    for (name, _) in &scheme.bc {
        if mesh.tag_index(name).is_none() {
            return Err(Error::Config(format!(
                "boundary data given for unknown mesh tag `{name}`"
            )));
        }
    }
    mesh.bc_tags
        .iter()
        .map(|tag| {
            let data = scheme.bc.iter().find(|(n, _)| n == &tag.name).map(|(_, d)| d);
            let resolved = match (tag.kind, data) {
                (BcKind::Inflow, Some(BcData::Inflow { rho, velocity, pressure })) => {
                    ResolvedBc::Inflow {
                        state: conservative(*rho, *velocity, *pressure, gas),
                    }
                }
                (BcKind::Inflow, None) => ResolvedBc::Inflow {
                    state: gas.freestream([1.0, 0.0, 0.0]),
                },
                (BcKind::Outflow, Some(BcData::Outflow { pressure })) => ResolvedBc::Outflow {
                    pressure: *pressure,
                },
                (BcKind::Outflow, None) => ResolvedBc::Outflow {
                    pressure: gas.p_inf(),
                },
                (BcKind::FreeSlipWall, Some(BcData::FreeSlip) | None) => ResolvedBc::FreeSlip,
                (BcKind::NoSlipWall, Some(BcData::NoSlip) | None) => ResolvedBc::NoSlip,
                (BcKind::MovingWall, Some(BcData::MovingWall { velocity })) => {
                    ResolvedBc::MovingWall {
                        velocity: *velocity,
                    }
                }
                (BcKind::MovingWall, None) => ResolvedBc::MovingWall {
                    velocity: [1.0, 0.0, 0.0],
                },
                (BcKind::Periodic, _) => {
                    return Err(Error::Config(format!(
                        "tag `{}` is Periodic but appears on an unpaired boundary face",
                        tag.name
                    )))
                }
                (kind, Some(data)) => {
                    return Err(Error::Config(format!(
                        "boundary data {data:?} does not match the kind {} of tag `{}`",
                        kind.name(),
                        tag.name
                    )))
                }
            };
            Ok(resolved)
        })
        .collect()
}

/// Exterior ghost state for the weakly imposed boundary flux.
///
/// Inflow: prescribed full state. Outflow: interior with the pressure replaced
/// by the reference outlet pressure. Free-slip: normal velocity mirrored.
/// No-slip/moving wall: velocity reflected about the wall velocity (adiabatic;
/// the wall heat flux is zeroed separately in the viscous flux).
pub(crate) fn ghost_state(
    interior: &State,
    bc: &ResolvedBc,
    n: &Vec3,
    _t: f64,
    gas: &GasModel,
) -> State {
    match bc {
        ResolvedBc::Inflow { state } => *state,
        ResolvedBc::Outflow { pressure } => {
            let q = primitive_unchecked(interior, gas);
            conservative(q.rho, q.v, *pressure, gas)
        }
        ResolvedBc::FreeSlip => {
            let q = primitive_unchecked(interior, gas);
            let vn = q.v[0] * n[0] + q.v[1] * n[1] + q.v[2] * n[2];
            let v = [
                q.v[0] - 2.0 * vn * n[0],
                q.v[1] - 2.0 * vn * n[1],
                q.v[2] - 2.0 * vn * n[2],
            ];
            conservative(q.rho, v, q.p, gas)
        }
        ResolvedBc::NoSlip => {
            let q = primitive_unchecked(interior, gas);
            conservative(q.rho, [-q.v[0], -q.v[1], -q.v[2]], q.p, gas)
        }
        ResolvedBc::MovingWall { velocity } => {
            let q = primitive_unchecked(interior, gas);
            let v = [
                2.0 * velocity[0] - q.v[0],
                2.0 * velocity[1] - q.v[1],
                2.0 * velocity[2] - q.v[2],
            ];
            conservative(q.rho, v, q.p, gas)
        }
    }
}

/// Public form of the ghost-state map, taking mesh-level boundary kinds and
/// their data.
pub fn apply_boundary_state(
    interior: &State,
    data: &BcData,
    n: &Vec3,
    t: f64,
    gas: &GasModel,
) -> State {
    let resolved = match data {
        BcData::Inflow {
            rho,
            velocity,
            pressure,
        } => ResolvedBc::Inflow {
            state: conservative(*rho, *velocity, *pressure, gas),
        },
        BcData::Outflow { pressure } => ResolvedBc::Outflow {
            pressure: *pressure,
        },
        BcData::FreeSlip => ResolvedBc::FreeSlip,
        BcData::NoSlip => ResolvedBc::NoSlip,
        BcData::MovingWall { velocity } => ResolvedBc::MovingWall {
            velocity: *velocity,
        },
    };
    ghost_state(interior, &resolved, n, t, gas)
}

/// Numerical viscous flux at a boundary face, projected on the outward normal.
///
/// Inflow/outflow copy the interior viscous flux; free-slip walls carry no
/// viscous traction; no-slip and moving walls use the wall velocity in the
/// work term and drop the conductive term (adiabatic).
pub(crate) fn boundary_viscous_flux(
    bc: &ResolvedBc,
    v_int: &Vec3,
    grad_int: &VelocityGradient,
    mu_t_int: f64,
    gas: &GasModel,
    n: &Vec3,
) -> State {
    match bc {
        ResolvedBc::Inflow { .. } | ResolvedBc::Outflow { .. } => {
            crate::physics::viscous_flux_normal(v_int, grad_int, mu_t_int, gas, n)
        }
        ResolvedBc::FreeSlip => [0.0; 5],
        ResolvedBc::NoSlip => wall_viscous_flux(&[0.0; 3], grad_int, mu_t_int, gas, n),
        ResolvedBc::MovingWall { velocity } => {
            wall_viscous_flux(velocity, grad_int, mu_t_int, gas, n)
        }
    }
}

/// Adiabatic wall: stress from the interior gradients, work term with the
/// wall velocity, zero conductive heat flux.
fn wall_viscous_flux(
    v_wall: &Vec3,
    grad: &VelocityGradient,
    mu_t: f64,
    gas: &GasModel,
    n: &Vec3,
) -> State {
    let mut g = *grad;
    g.grad_t = [0.0; 3];
    crate::physics::viscous_flux_normal(v_wall, &g, mu_t, gas, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas() -> GasModel {
        GasModel::air(0.1, Some(100.0)).unwrap()
    }

    #[test]
    fn free_slip_reflects_normal_velocity() {
        let g = gas();
        let n = [0.0, 1.0, 0.0];
        let interior = conservative(1.0, [0.0, 1.0, 0.0], g.p_inf(), &g);
        let ghost = apply_boundary_state(&interior, &BcData::FreeSlip, &n, 0.0, &g);
        let qg = primitive_unchecked(&ghost, &g);
        assert!((qg.v[1] + 1.0).abs() < 1e-15);
        // mean normal velocity across the interface is zero
        assert!((qg.v[1] + 1.0).abs() < 1e-15 && qg.v[0].abs() < 1e-15);
        assert!((qg.rho - 1.0).abs() < 1e-15);
        assert!((qg.p - g.p_inf()).abs() < 1e-12);
    }

    #[test]
    fn moving_wall_is_a_fixed_point_at_wall_velocity() {
        let g = gas();
        let n = [0.0, -1.0, 0.0];
        let vw = [1.0, 0.0, 0.0];
        let interior = conservative(1.0, vw, g.p_inf(), &g);
        let ghost = apply_boundary_state(
            &interior,
            &BcData::MovingWall { velocity: vw },
            &n,
            0.0,
            &g,
        );
        assert_eq!(ghost, interior);
    }

    #[test]
    fn outflow_with_reference_pressure_copies_interior() {
        let g = gas();
        let interior = conservative(1.2, [0.7, 0.1, 0.0], g.p_inf(), &g);
        let ghost = apply_boundary_state(
            &interior,
            &BcData::Outflow { pressure: g.p_inf() },
            &[1.0, 0.0, 0.0],
            0.0,
            &g,
        );
        for c in 0..5 {
            assert!((ghost[c] - interior[c]).abs() <= 1e-14 * interior[c].abs().max(1.0));
        }
    }

    #[test]
    fn no_slip_ghost_gives_zero_mean_velocity() {
        let g = gas();
        let interior = conservative(0.9, [0.3, -0.4, 0.5], 2.0, &g);
        let ghost = apply_boundary_state(&interior, &BcData::NoSlip, &[1.0, 0.0, 0.0], 0.0, &g);
        let qi = primitive_unchecked(&interior, &g);
        let qg = primitive_unchecked(&ghost, &g);
        for c in 0..3 {
            assert!((qi.v[c] + qg.v[c]).abs() < 1e-14);
        }
    }

    #[test]
    fn free_slip_wall_has_no_viscous_flux() {
        let g = gas();
        let mut grad = VelocityGradient::default();
        grad.alpha[1] = 3.0;
        grad.grad_t = [1.0, 2.0, 3.0];
        let f = boundary_viscous_flux(
            &ResolvedBc::FreeSlip,
            &[1.0, 0.0, 0.0],
            &grad,
            0.1,
            &g,
            &[0.0, 1.0, 0.0],
        );
        assert_eq!(f, [0.0; 5]);
    }

    #[test]
    fn adiabatic_wall_drops_heat_flux() {
        let g = gas();
        let mut grad = VelocityGradient::default();
        grad.grad_t = [10.0, 10.0, 10.0];
        let f = boundary_viscous_flux(
            &ResolvedBc::NoSlip,
            &[0.5, 0.0, 0.0],
            &grad,
            0.0,
            &g,
            &[0.0, 1.0, 0.0],
        );
        // no velocity gradients and no conducted heat: the whole flux vanishes
        assert_eq!(f, [0.0; 5]);
    }
}
