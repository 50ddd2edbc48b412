//! Canonical initial conditions used by the built-in cases, the benchmark
//! harness and the test suites.

use crate::physics::{conservative, GasModel, State, Vec3};

/// Uniform (freestream-like) state.
pub fn uniform_state(gas: GasModel, rho: f64, v: Vec3, p: f64) -> impl Fn([f64; 3]) -> State {
    move |_| conservative(rho, v, p, &gas)
}

/// Taylor-Green vortex on the [0, 2 pi]^3 periodic box: isothermal T = 1 with
/// the incompressible-balance pressure field.
pub fn taylor_green(gas: GasModel) -> impl Fn([f64; 3]) -> State {
    let p0 = gas.p_inf();
    move |x| {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        let cz = x[2].cos();
        let v = [sx * cy * cz, -cx * sy * cz, 0.0];
        let p = p0
            + ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0) / 16.0;
        // isothermal: T = 1, so rho tracks p
        let rho = p / p0;
        conservative(rho, v, p, &gas)
    }
}

/// Smooth density wave advecting along x: rho = 1 + A sin(k x), constant
/// velocity and pressure. An exact solution of the Euler equations.
pub fn density_wave(
    gas: GasModel,
    amplitude: f64,
    wavenumber: f64,
    velocity: Vec3,
    pressure: f64,
) -> impl Fn([f64; 3]) -> State {
    move |x| density_wave_exact(&gas, amplitude, wavenumber, velocity, pressure, x, 0.0)
}

/// The density wave at time `t` (for convergence measurement).
pub fn density_wave_exact(
    gas: &GasModel,
    amplitude: f64,
    wavenumber: f64,
    velocity: Vec3,
    pressure: f64,
    x: [f64; 3],
    t: f64,
) -> State {
    let rho = 1.0 + amplitude * (wavenumber * (x[0] - velocity[0] * t)).sin();
    conservative(rho, velocity, pressure, gas)
}

/// Plane Couette start: linear profile v1 = u_wall * y / height, uniform
/// density and pressure (the steady solution up to slow viscous heating).
pub fn couette_profile(gas: GasModel, u_wall: f64, height: f64) -> impl Fn([f64; 3]) -> State {
    let p0 = gas.p_inf();
    move |x| conservative(1.0, [u_wall * x[1] / height, 0.0, 0.0], p0, &gas)
}

/// Isentropic vortex centered at (xc, yc), strength beta, superposed on a
/// quiescent background; smooth positive states for operator verification.
pub fn isentropic_vortex(gas: GasModel, center: [f64; 2], beta: f64) -> impl Fn([f64; 3]) -> State {
    move |x| {
        let dx = x[0] - center[0];
        let dy = x[1] - center[1];
        let r2 = dx * dx + dy * dy;
        let envelope = (0.5 * (1.0 - r2)).exp();
        let du = -beta / (2.0 * std::f64::consts::PI) * dy * envelope;
        let dv = beta / (2.0 * std::f64::consts::PI) * dx * envelope;
        let gm1 = gas.gamma - 1.0;
        let bm = beta * gas.mach;
        let t = 1.0
            - gm1 * bm * bm / (8.0 * std::f64::consts::PI * std::f64::consts::PI)
                * (1.0 - r2).exp();
        let rho = t.powf(1.0 / gm1);
        let p = rho * t / (gas.gamma * gas.mach * gas.mach);
        conservative(rho, [du, dv, 0.0], p, &gas)
    }
}
