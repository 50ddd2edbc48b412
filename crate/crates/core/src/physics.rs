//! Pointwise physics: equation of state, Euler and viscous fluxes, the Vreman
//! eddy-viscosity model, the Kennedy-Gruber two-point flux, and interface
//! (Riemann) fluxes.
//!
//! Nondimensionalization: velocities by U_ref, density by rho_ref, lengths by
//! the chord, temperature by T_ref. Then p = rho T / (gamma M^2), the
//! freestream sound speed is 1/M, the dynamic viscosity is 1/Re, and the
//! thermal conductivity is mu / ((gamma-1) M^2 Pr).

use crate::error::{Error, Result};

/// Conservative state [rho, rho v1, rho v2, rho v3, rho E] at one node.
pub type State = [f64; 5];
pub type Vec3 = [f64; 3];

/// Default Vreman model constant.
pub const C_VREMAN: f64 = 0.07;

/// Guard for the 0/0 limit of the Vreman denominator; the model limit at
/// vanishing gradients is zero.
pub const VREMAN_EPS_DENOM: f64 = 1e-30;

/// Gas model and reference quantities, frozen at construction.
#[derive(Debug, Clone, Copy)]
pub struct GasModel {
    /// Ratio of specific heats.
    pub gamma: f64,
    /// Molecular Prandtl number.
    pub prandtl: f64,
    /// Turbulent Prandtl number for the eddy heat flux.
    pub prandtl_turb: f64,
    /// Reference Mach number.
    pub mach: f64,
    /// Reference Reynolds number; `None` for inviscid flow.
    pub reynolds: Option<f64>,
    /// Constant nondimensional dynamic viscosity (1/Re, or 0 when inviscid).
    pub mu: f64,
    /// Thermal conductivity derived from mu, gamma, Pr.
    pub kappa: f64,
    /// kappa_t per unit mu_t: 1 / ((gamma-1) M^2 Pr_t).
    pub kappa_turb_factor: f64,
}

impl GasModel {
    pub fn new(mach: f64, reynolds: Option<f64>, gamma: f64, prandtl: f64) -> Result<Self> {
        if gamma <= 1.0 {
            return Err(Error::Config(format!("gamma must exceed 1, got {gamma}")));
        }
        if prandtl <= 0.0 {
            return Err(Error::Config(format!(
                "Prandtl number must be positive, got {prandtl}"
            )));
        }
        if mach <= 0.0 {
            return Err(Error::Config(format!(
                "Mach number must be positive, got {mach}"
            )));
        }
        if let Some(re) = reynolds {
            if re <= 0.0 {
                return Err(Error::Config(format!(
                    "Reynolds number must be positive, got {re}"
                )));
            }
        }
        let prandtl_turb = 0.9;
        let mu = reynolds.map_or(0.0, |re| 1.0 / re);
        let m2 = mach * mach;
        let kappa = mu / ((gamma - 1.0) * m2 * prandtl);
        let kappa_turb_factor = 1.0 / ((gamma - 1.0) * m2 * prandtl_turb);
        Ok(Self {
            gamma,
            prandtl,
            prandtl_turb,
            mach,
            reynolds,
            mu,
            kappa,
            kappa_turb_factor,
        })
    }

    /// Standard air model at the given Mach/Reynolds: gamma 1.4, Pr 0.72.
    pub fn air(mach: f64, reynolds: Option<f64>) -> Result<Self> {
        Self::new(mach, reynolds, 1.4, 0.72)
    }

    /// Freestream pressure in solver units (rho = 1, T = 1).
    pub fn p_inf(&self) -> f64 {
        1.0 / (self.gamma * self.mach * self.mach)
    }

    /// Freestream conservative state with the given velocity.
    pub fn freestream(&self, velocity: Vec3) -> State {
        conservative(1.0, velocity, self.p_inf(), self)
    }

    /// Temperature from density and pressure: T = gamma M^2 p / rho.
    pub fn temperature(&self, rho: f64, p: f64) -> f64 {
        self.gamma * self.mach * self.mach * p / rho
    }
}

/// Primitive quantities derived from a conservative state.
#[derive(Debug, Clone, Copy)]
pub struct PrimitiveState {
    pub rho: f64,
    pub v: Vec3,
    pub p: f64,
    /// Temperature, T = gamma M^2 p / rho.
    pub t: f64,
    /// Sound speed, a^2 = gamma p / rho.
    pub a: f64,
    /// Total enthalpy, H = E + p / rho.
    pub h: f64,
}

impl PrimitiveState {
    /// Specific total energy E = (rho E) / rho = H - p / rho.
    #[inline]
    pub fn e(&self) -> f64 {
        self.h - self.p / self.rho
    }
}

/// Velocity and temperature gradients at a node.
///
/// `alpha[i*3 + j]` holds alpha_ij = d v_j / d x_i.
#[derive(Debug, Clone, Copy, Default)]
pub struct VelocityGradient {
    pub alpha: [f64; 9],
    pub grad_t: Vec3,
}

/// Conservative state from primitive quantities.
pub fn conservative(rho: f64, v: Vec3, p: f64, gas: &GasModel) -> State {
    let ke = 0.5 * rho * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [
        rho,
        rho * v[0],
        rho * v[1],
        rho * v[2],
        p / (gas.gamma - 1.0) + ke,
    ]
}

/// Primitive decomposition without positivity checks.
///
/// Callers must have validated the state (see [`to_primitive`]); used in
/// kernels after the per-stage validity scan.
#[inline]
pub fn primitive_unchecked(u: &State, gas: &GasModel) -> PrimitiveState {
    let rho = u[0];
    let inv_rho = 1.0 / rho;
    let v = [u[1] * inv_rho, u[2] * inv_rho, u[3] * inv_rho];
    let ke = 0.5 * (u[1] * v[0] + u[2] * v[1] + u[3] * v[2]);
    let p = (gas.gamma - 1.0) * (u[4] - ke);
    PrimitiveState {
        rho,
        v,
        p,
        t: gas.temperature(rho, p),
        a: (gas.gamma * p * inv_rho).sqrt(),
        h: (u[4] + p) * inv_rho,
    }
}

/// Primitive decomposition with positivity validation.
pub fn to_primitive(u: &State, gas: &GasModel) -> Result<PrimitiveState> {
    let rho = u[0];
    let ke = if rho > 0.0 {
        0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / rho
    } else {
        f64::NAN
    };
    let p = (gas.gamma - 1.0) * (u[4] - ke);
    if !(rho > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidState {
            rho,
            pressure: p,
            element: None,
            node: None,
        });
    }
    Ok(primitive_unchecked(u, gas))
}

/// True when the state has positive density and pressure and no NaNs.
#[inline]
pub fn state_is_valid(u: &State, gas: &GasModel) -> bool {
    if !u.iter().all(|x| x.is_finite()) {
        return false;
    }
    let rho = u[0];
    if !(rho > 0.0) {
        return false;
    }
    let ke = 0.5 * (u[1] * u[1] + u[2] * u[2] + u[3] * u[3]) / rho;
    (gas.gamma - 1.0) * (u[4] - ke) > 0.0
}

/// The three Euler flux 5-vectors (F, G, H).
pub fn euler_flux(u: &State, gas: &GasModel) -> [State; 3] {
    let q = primitive_unchecked(u, gas);
    euler_flux_prim(&q)
}

pub fn euler_flux_prim(q: &PrimitiveState) -> [State; 3] {
    let mut out = [[0.0; 5]; 3];
    for d in 0..3 {
        let mv = q.rho * q.v[d];
        out[d][0] = mv;
        out[d][1] = mv * q.v[0];
        out[d][2] = mv * q.v[1];
        out[d][3] = mv * q.v[2];
        out[d][1 + d] += q.p;
        out[d][4] = mv * q.h;
    }
    out
}

/// Euler flux triple projected on a direction vector (not necessarily unit).
#[inline]
pub fn euler_flux_normal(q: &PrimitiveState, n: &Vec3) -> State {
    let vn = q.v[0] * n[0] + q.v[1] * n[1] + q.v[2] * n[2];
    let mvn = q.rho * vn;
    [
        mvn,
        mvn * q.v[0] + q.p * n[0],
        mvn * q.v[1] + q.p * n[1],
        mvn * q.v[2] + q.p * n[2],
        mvn * q.h,
    ]
}

/// Vreman modified length scale Delta = V^{1/3} / (N+1).
pub fn filter_width(element_volume: f64, order: usize) -> f64 {
    element_volume.cbrt() / (order as f64 + 1.0)
}

/// Vreman dynamic turbulent viscosity.
///
/// beta_ij = Delta^2 alpha_mi alpha_mj,
/// B_beta  = beta11 beta22 - beta12^2 + beta11 beta33 - beta13^2
///         + beta22 beta33 - beta23^2,
/// mu_t    = C_v rho sqrt(B_beta / (alpha_ij alpha_ij)),
/// with mu_t = 0 in the vanishing-gradient limit. The model reduces
/// automatically in laminar and simple-shear regions (B_beta = 0 there).
pub fn vreman_mu_t(alpha: &[f64; 9], rho: f64, delta: f64, c_v: f64) -> f64 {
    let mut norm2 = 0.0;
    for a in alpha {
        norm2 += a * a;
    }
    if norm2 <= VREMAN_EPS_DENOM {
        return 0.0;
    }
    let d2 = delta * delta;
    // beta_ij = Delta^2 sum_m alpha_mi alpha_mj (i <= j needed)
    let mut beta = [0.0f64; 6]; // 11, 22, 33, 12, 13, 23
    for m in 0..3 {
        let a1 = alpha[m * 3];
        let a2 = alpha[m * 3 + 1];
        let a3 = alpha[m * 3 + 2];
        beta[0] += a1 * a1;
        beta[1] += a2 * a2;
        beta[2] += a3 * a3;
        beta[3] += a1 * a2;
        beta[4] += a1 * a3;
        beta[5] += a2 * a3;
    }
    for b in &mut beta {
        *b *= d2;
    }
    let b_beta = beta[0] * beta[1] - beta[3] * beta[3] + beta[0] * beta[2] - beta[4] * beta[4]
        + beta[1] * beta[2]
        - beta[5] * beta[5];
    // B_beta >= 0 analytically; roundoff can drive tiny rank-deficient cases negative
    let b_beta = b_beta.max(0.0);
    c_v * rho * (b_beta / norm2).sqrt()
}

/// The three viscous/turbulent flux 5-vectors.
///
/// tau = (mu + mu_t)(grad v + grad v^T) - (2/3)(mu + mu_t) I div v; the energy
/// rows carry sum_j v_j tau_dj plus the conductive flux kappa_eff dT/dx_d.
pub fn viscous_flux(u: &State, grad: &VelocityGradient, mu_t: f64, gas: &GasModel) -> [State; 3] {
    let inv_rho = 1.0 / u[0];
    let v = [u[1] * inv_rho, u[2] * inv_rho, u[3] * inv_rho];
    viscous_flux_prim(&v, grad, mu_t, gas)
}

pub fn viscous_flux_prim(
    v: &Vec3,
    grad: &VelocityGradient,
    mu_t: f64,
    gas: &GasModel,
) -> [State; 3] {
    let mu_eff = gas.mu + mu_t;
    let kappa_eff = gas.kappa + mu_t * gas.kappa_turb_factor;
    let a = &grad.alpha;
    let div = a[0] + a[4] + a[8];
    let lam = -(2.0 / 3.0) * mu_eff * div;
    // tau_dc, symmetric
    let mut tau = [[0.0f64; 3]; 3];
    for d in 0..3 {
        for c in d..3 {
            let mut t = mu_eff * (a[d * 3 + c] + a[c * 3 + d]);
            if c == d {
                t += lam;
            }
            tau[d][c] = t;
            tau[c][d] = t;
        }
    }
    let mut out = [[0.0; 5]; 3];
    for d in 0..3 {
        out[d][1] = tau[d][0];
        out[d][2] = tau[d][1];
        out[d][3] = tau[d][2];
        out[d][4] = v[0] * tau[d][0] + v[1] * tau[d][1] + v[2] * tau[d][2]
            + kappa_eff * grad.grad_t[d];
    }
    out
}

/// Viscous flux triple projected on a direction vector.
#[inline]
pub fn viscous_flux_normal(
    v: &Vec3,
    grad: &VelocityGradient,
    mu_t: f64,
    gas: &GasModel,
    n: &Vec3,
) -> State {
    let f = viscous_flux_prim(v, grad, mu_t, gas);
    let mut out = [0.0; 5];
    for (d, fd) in f.iter().enumerate() {
        for c in 0..5 {
            out[c] += fd[c] * n[d];
        }
    }
    out
}

/// Kennedy-Gruber two-point flux in the given direction (any vector; pass a
/// unit normal for interface use, a metric average for flux differencing).
///
/// Built from arithmetic means of rho, v, specific total energy e = (rho E)/rho
/// and p: mass {rho}{v_n}, momentum {rho}{v_n}{v} + {p} n, energy
/// {rho}{v_n}{e} + {p}{v_n}. Consistent (kg(u,u,n) = Euler flux . n) and
/// symmetric under argument swap.
pub fn kg_two_point_flux(ul: &State, ur: &State, n: &Vec3, gas: &GasModel) -> Result<State> {
    let ql = to_primitive(ul, gas)?;
    let qr = to_primitive(ur, gas)?;
    Ok(kg_flux_prim(&ql, &qr, n))
}

#[inline]
pub fn kg_flux_prim(ql: &PrimitiveState, qr: &PrimitiveState, n: &Vec3) -> State {
    let rho = 0.5 * (ql.rho + qr.rho);
    let v = [
        0.5 * (ql.v[0] + qr.v[0]),
        0.5 * (ql.v[1] + qr.v[1]),
        0.5 * (ql.v[2] + qr.v[2]),
    ];
    let e = 0.5 * (ql.e() + qr.e());
    let p = 0.5 * (ql.p + qr.p);
    let vn = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    let m = rho * vn;
    [
        m,
        m * v[0] + p * n[0],
        m * v[1] + p * n[1],
        m * v[2] + p * n[2],
        m * e + p * vn,
    ]
}

/// Interface (Riemann) flux menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceScheme {
    /// Kennedy-Gruber flux alone; zero interface dissipation.
    CentralKG,
    /// Kennedy-Gruber flux with local Lax-Friedrichs dissipation.
    KGLaxFriedrichs,
    /// Local Lax-Friedrichs applied to the arithmetic-average Euler flux.
    Upwind,
}

/// Largest convective signal speed |v.n| + a over the two states.
#[inline]
pub fn max_signal_speed(ql: &PrimitiveState, qr: &PrimitiveState, n: &Vec3) -> f64 {
    let vnl = (ql.v[0] * n[0] + ql.v[1] * n[1] + ql.v[2] * n[2]).abs() + ql.a;
    let vnr = (qr.v[0] * n[0] + qr.v[1] * n[1] + qr.v[2] * n[2]).abs() + qr.a;
    vnl.max(vnr)
}

/// Numerical interface flux along the unit normal `n`.
pub fn interface_flux(
    ul: &State,
    ur: &State,
    n: &Vec3,
    gas: &GasModel,
    scheme: InterfaceScheme,
) -> Result<State> {
    let ql = to_primitive(ul, gas)?;
    let qr = to_primitive(ur, gas)?;
    Ok(interface_flux_prim(&ql, &qr, ul, ur, n, scheme))
}

#[inline]
pub fn interface_flux_prim(
    ql: &PrimitiveState,
    qr: &PrimitiveState,
    ul: &State,
    ur: &State,
    n: &Vec3,
    scheme: InterfaceScheme,
) -> State {
    match scheme {
        InterfaceScheme::CentralKG => kg_flux_prim(ql, qr, n),
        InterfaceScheme::KGLaxFriedrichs => {
            let mut f = kg_flux_prim(ql, qr, n);
            let lam = max_signal_speed(ql, qr, n);
            for c in 0..5 {
                f[c] -= 0.5 * lam * (ur[c] - ul[c]);
            }
            f
        }
        InterfaceScheme::Upwind => {
            let fl = euler_flux_normal(ql, n);
            let fr = euler_flux_normal(qr, n);
            let lam = max_signal_speed(ql, qr, n);
            let mut f = [0.0; 5];
            for c in 0..5 {
                f[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * lam * (ur[c] - ul[c]);
            }
            f
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn gas() -> GasModel {
        GasModel::air(0.1, Some(1000.0)).unwrap()
    }

    fn random_state(rng: &mut StdRng) -> State {
        let rho = rng.random_range(0.1..10.0);
        let v = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        ];
        let p = rng.random_range(0.01..50.0);
        conservative(rho, v, p, &gas())
    }

    #[test]
    fn quiescent_state_algebra() {
        let g = gas();
        let u = conservative(1.0, [0.0; 3], 1.0 / g.gamma, &g);
        let expect = 1.0 / (g.gamma * (g.gamma - 1.0));
        assert!((u[4] - expect).abs() < 1e-15);
    }

    #[test]
    fn primitive_round_trip() {
        let g = gas();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let u = random_state(&mut rng);
            let q = to_primitive(&u, &g).unwrap();
            let back = conservative(q.rho, q.v, q.p, &g);
            for c in 0..5 {
                let scale = u[c].abs().max(1.0);
                assert!((back[c] - u[c]).abs() <= 1e-14 * scale);
            }
            // Invariants: H = E + p/rho, a^2 = gamma p / rho
            let e = u[4] / u[0];
            assert!((q.h - (e + q.p / q.rho)).abs() <= 1e-13 * q.h.abs().max(1.0));
            assert!((q.a * q.a - g.gamma * q.p / q.rho).abs() <= 1e-13 * q.a * q.a);
        }
    }

    #[test]
    fn negative_internal_energy_rejected() {
        let g = gas();
        // rho E below the kinetic energy
        let u = [1.0, 2.0, 0.0, 0.0, 1.9];
        match to_primitive(&u, &g) {
            Err(Error::InvalidState { pressure, .. }) => assert!(pressure <= 0.0),
            other => panic!("expected InvalidState, got {other:?}"),
        }
        let u = [-1.0, 0.0, 0.0, 0.0, 1.0];
        assert!(to_primitive(&u, &g).is_err());
    }

    #[test]
    fn euler_flux_quiescent_is_pressure_only() {
        let g = gas();
        let p0 = 2.5;
        let u = conservative(1.3, [0.0; 3], p0, &g);
        let f = euler_flux(&u, &g);
        for d in 0..3 {
            for c in 0..5 {
                let expect = if c == 1 + d { p0 } else { 0.0 };
                assert!((f[d][c] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn euler_flux_unit_velocity() {
        // Hand-substitution: rho=1, v=(1,0,0), p=1/gamma.
        let g = gas();
        let u = conservative(1.0, [1.0, 0.0, 0.0], 1.0 / g.gamma, &g);
        let f = euler_flux(&u, &g);
        assert!((f[0][0] - 1.0).abs() < 1e-15);
        assert!((f[0][1] - (1.0 + 1.0 / g.gamma)).abs() < 1e-15);
        assert!(f[0][2].abs() < 1e-15 && f[0][3].abs() < 1e-15);
    }

    /// Apply a signed axis permutation (a rotation by multiples of 90 degrees)
    /// to a state vector.
    fn rotate_state(u: &State, perm: [usize; 3], sign: [f64; 3]) -> State {
        let mut out = [u[0], 0.0, 0.0, 0.0, u[4]];
        for i in 0..3 {
            out[1 + i] = sign[i] * u[1 + perm[i]];
        }
        out
    }

    #[test]
    fn euler_flux_rotational_equivariance() {
        let g = gas();
        let u = conservative(1.7, [0.4, -0.9, 1.3], 3.0, &g);
        // 90-degree rotation about z: x' = -y, y' = x
        let perm = [1, 0, 2];
        let sign = [-1.0, 1.0, 1.0];
        let ur = rotate_state(&u, perm, sign);
        let f = euler_flux(&u, &g);
        let fr = euler_flux(&ur, &g);
        // flux vector d' in rotated frame = sign[d'] * rotate_state(flux[perm[d']])
        for dp in 0..3 {
            let expect = rotate_state(&f[perm[dp]], perm, sign);
            for c in 0..5 {
                assert_eq!(fr[dp][c], sign[dp] * expect[c], "d'={dp} c={c}");
            }
        }
    }

    #[test]
    fn filter_width_examples() {
        assert!((filter_width(1.0, 4) - 0.2).abs() < 1e-15);
        assert!((filter_width(8.0, 1) - 1.0).abs() < 1e-15);
        assert!((filter_width(0.001, 4) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn vreman_zero_gradient() {
        assert_eq!(vreman_mu_t(&[0.0; 9], 1.0, 0.2, C_VREMAN), 0.0);
    }

    #[test]
    fn vreman_pure_shear_vanishes() {
        // alpha_21 = S only: beta has a single diagonal entry, every 2x2 minor
        // in B_beta vanishes identically.
        let mut alpha = [0.0; 9];
        alpha[1 * 3 + 0] = 2.3; // alpha_21 in 1-based = d v1 / d x2
        assert_eq!(vreman_mu_t(&alpha, 1.4, 0.3, C_VREMAN), 0.0);
    }

    #[test]
    fn vreman_isotropic_dilatation_closed_form() {
        // alpha = s I: B_beta = 3 Delta^4 s^4, |alpha|^2 = 3 s^2,
        // mu_t = C_v rho Delta^2 |s|.
        for &s in &[0.7, -1.9, 3.3] {
            let mut alpha = [0.0; 9];
            alpha[0] = s;
            alpha[4] = s;
            alpha[8] = s;
            let (rho, delta) = (1.2, 0.25);
            let got = vreman_mu_t(&alpha, rho, delta, C_VREMAN);
            let expect = C_VREMAN * rho * delta * delta * s.abs();
            assert!((got - expect).abs() <= 1e-12 * expect, "{got} vs {expect}");
        }
    }

    #[test]
    fn vreman_nonnegative_and_rank_deficient() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..100_000 {
            let mut alpha = [0.0; 9];
            for a in &mut alpha {
                *a = rng.random_range(-10.0..10.0);
            }
            let mu_t = vreman_mu_t(&alpha, 1.0, 0.1, C_VREMAN);
            assert!(mu_t >= 0.0 && mu_t.is_finite());
        }
        // any single-row alpha has B_beta = 0 analytically
        for row in 0..3 {
            for _ in 0..1000 {
                let mut alpha = [0.0; 9];
                for j in 0..3 {
                    alpha[row * 3 + j] = rng.random_range(-10.0..10.0);
                }
                // B_beta cancels to O(eps) of its products; the spurious mu_t
                // is bounded by sqrt(eps) times the dilatation-scale mu_t.
                let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
                let mu_t = vreman_mu_t(&alpha, 1.0, 0.1, C_VREMAN);
                assert!(
                    mu_t <= 1e-7 * C_VREMAN * 0.01 * norm,
                    "single-row mu_t = {mu_t}"
                );
            }
        }
    }

    #[test]
    fn viscous_flux_zero_gradient() {
        let g = gas();
        let u = conservative(1.0, [1.0, 2.0, 3.0], 1.0, &g);
        let f = viscous_flux(&u, &VelocityGradient::default(), 0.0, &g);
        for d in 0..3 {
            assert!(f[d].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn viscous_flux_dilatation_deviatoric_zero() {
        // grad v = s I: tau = 2 mu s I - 2 mu s I = 0.
        let g = gas();
        let u = conservative(1.0, [0.0; 3], 1.0, &g);
        let mut grad = VelocityGradient::default();
        let s = 0.9;
        grad.alpha[0] = s;
        grad.alpha[4] = s;
        grad.alpha[8] = s;
        let f = viscous_flux(&u, &grad, 0.4, &g);
        for d in 0..3 {
            for c in 0..5 {
                assert!(f[d][c].abs() < 1e-15, "d={d} c={c}: {}", f[d][c]);
            }
        }
    }

    #[test]
    fn viscous_flux_pure_shear() {
        // d v1 / d x2 = S: tau_12 = tau_21 = (mu + mu_t) S, everything else 0.
        let g = gas();
        let u = conservative(1.0, [0.0; 3], 1.0, &g);
        let mut grad = VelocityGradient::default();
        let s = 1.7;
        grad.alpha[1 * 3 + 0] = s;
        let mu_t = 0.3;
        let f = viscous_flux(&u, &grad, mu_t, &g);
        let tau_expect = (g.mu + mu_t) * s;
        // flux direction x carries tau_xy in the v2 row; direction y carries tau_yx in v1
        assert!((f[0][2] - tau_expect).abs() < 1e-15);
        assert!((f[1][1] - tau_expect).abs() < 1e-15);
        let mut total = 0.0;
        for d in 0..3 {
            for c in 0..5 {
                total += f[d][c].abs();
            }
        }
        assert!((total - 2.0 * tau_expect.abs()).abs() < 1e-14);
    }

    #[test]
    fn viscous_flux_rotational_equivariance() {
        let g = gas();
        let u = conservative(1.2, [0.5, -0.2, 0.8], 2.0, &g);
        let mut grad = VelocityGradient::default();
        for (i, a) in grad.alpha.iter_mut().enumerate() {
            *a = (i as f64 * 0.37).sin();
        }
        grad.grad_t = [0.3, -0.6, 0.9];
        let perm = [2, 0, 1]; // cyclic, a proper rotation with positive signs
        let sign = [1.0, 1.0, 1.0];
        let ur = rotate_state(&u, perm, sign);
        let mut grad_r = VelocityGradient::default();
        for i in 0..3 {
            for j in 0..3 {
                grad_r.alpha[i * 3 + j] = grad.alpha[perm[i] * 3 + perm[j]];
            }
            grad_r.grad_t[i] = grad.grad_t[perm[i]];
        }
        let f = viscous_flux(&u, &grad, 0.2, &g);
        let fr = viscous_flux(&ur, &grad_r, 0.2, &g);
        for dp in 0..3 {
            let expect = rotate_state(&f[perm[dp]], perm, sign);
            for c in 0..5 {
                assert!((fr[dp][c] - expect[c]).abs() < 1e-15, "d'={dp} c={c}");
            }
        }
    }

    /// Independent term-by-term evaluation of the Kennedy-Gruber averages.
    fn kg_oracle(ul: &State, ur: &State, n: &Vec3, g: &GasModel) -> State {
        let (rl, rr) = (ul[0], ur[0]);
        let vl = [ul[1] / rl, ul[2] / rl, ul[3] / rl];
        let vr = [ur[1] / rr, ur[2] / rr, ur[3] / rr];
        let pl = (g.gamma - 1.0)
            * (ul[4] - 0.5 * rl * (vl[0] * vl[0] + vl[1] * vl[1] + vl[2] * vl[2]));
        let pr = (g.gamma - 1.0)
            * (ur[4] - 0.5 * rr * (vr[0] * vr[0] + vr[1] * vr[1] + vr[2] * vr[2]));
        let el = ul[4] / rl;
        let er = ur[4] / rr;
        let rho_b = 0.5 * (rl + rr);
        let v_b = [
            0.5 * (vl[0] + vr[0]),
            0.5 * (vl[1] + vr[1]),
            0.5 * (vl[2] + vr[2]),
        ];
        let e_b = 0.5 * (el + er);
        let p_b = 0.5 * (pl + pr);
        let vn_b = v_b[0] * n[0] + v_b[1] * n[1] + v_b[2] * n[2];
        [
            rho_b * vn_b,
            rho_b * vn_b * v_b[0] + p_b * n[0],
            rho_b * vn_b * v_b[1] + p_b * n[1],
            rho_b * vn_b * v_b[2] + p_b * n[2],
            rho_b * vn_b * e_b + p_b * vn_b,
        ]
    }

    #[test]
    fn kg_consistency_symmetry_and_oracle() {
        let g = gas();
        let mut rng = StdRng::seed_from_u64(99);
        let n_hat = |rng: &mut StdRng| -> Vec3 {
            let v: Vec3 = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-3);
            [v[0] / norm, v[1] / norm, v[2] / norm]
        };
        for _ in 0..10_000 {
            let ul = random_state(&mut rng);
            let ur = random_state(&mut rng);
            let n = n_hat(&mut rng);

            // consistency
            let f_cons = kg_two_point_flux(&ul, &ul, &n, &g).unwrap();
            let q = to_primitive(&ul, &g).unwrap();
            let f_euler = euler_flux_normal(&q, &n);
            for c in 0..5 {
                let scale = f_euler[c].abs().max(1.0);
                assert!((f_cons[c] - f_euler[c]).abs() <= 1e-14 * scale);
            }

            // bit-for-bit symmetry
            let f_lr = kg_two_point_flux(&ul, &ur, &n, &g).unwrap();
            let f_rl = kg_two_point_flux(&ur, &ul, &n, &g).unwrap();
            assert_eq!(f_lr, f_rl);

            // independent term-by-term oracle
            let f_orc = kg_oracle(&ul, &ur, &n, &g);
            for c in 0..5 {
                let scale = f_orc[c].abs().max(1.0);
                assert!((f_lr[c] - f_orc[c]).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn interface_schemes_agree_on_zero_jump() {
        let g = gas();
        let u = conservative(1.1, [0.8, -0.1, 0.2], 2.2, &g);
        let n = [0.6, 0.8, 0.0];
        let q = to_primitive(&u, &g).unwrap();
        let exact = euler_flux_normal(&q, &n);
        for scheme in [
            InterfaceScheme::CentralKG,
            InterfaceScheme::KGLaxFriedrichs,
            InterfaceScheme::Upwind,
        ] {
            let f = interface_flux(&u, &u, &n, &g, scheme).unwrap();
            for c in 0..5 {
                assert!((f[c] - exact[c]).abs() <= 1e-14 * exact[c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn lax_friedrichs_linearized_mass_flux() {
        // Quiescent, small density jump: mass flux = -(a/2) d_rho to first order.
        let g = gas();
        let rho = 1.0;
        let p = 1.0 / g.gamma; // a = 1 at this state
        let d_rho = 1e-6;
        let ul = conservative(rho, [0.0; 3], p, &g);
        let ur = conservative(rho + d_rho, [0.0; 3], p, &g);
        let n = [1.0, 0.0, 0.0];
        let f = interface_flux(&ul, &ur, &n, &g, InterfaceScheme::KGLaxFriedrichs).unwrap();
        let expect = -0.5 * 1.0 * d_rho;
        assert!((f[0] - expect).abs() <= 1e-2 * d_rho.abs(), "{} vs {expect}", f[0]);
        // lambda itself: a = 1 for rho=1, p=1/gamma, v=0
        let q = to_primitive(&ul, &g).unwrap();
        assert!((max_signal_speed(&q, &q, &n) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn kg_symmetry_property(
            rho_l in 0.1f64..5.0, rho_r in 0.1f64..5.0,
            vx in -2.0f64..2.0, vy in -2.0f64..2.0,
            p_l in 0.05f64..10.0, p_r in 0.05f64..10.0,
        ) {
            let g = gas();
            let ul = conservative(rho_l, [vx, vy, 0.3], p_l, &g);
            let ur = conservative(rho_r, [vy, vx, -0.2], p_r, &g);
            let n = [0.0, 1.0, 0.0];
            let a = kg_two_point_flux(&ul, &ur, &n, &g).unwrap();
            let b = kg_two_point_flux(&ur, &ul, &n, &g).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn vreman_nonnegativity_property(entries in proptest::array::uniform9(-50.0f64..50.0)) {
            let mu_t = vreman_mu_t(&entries, 1.0, 0.2, C_VREMAN);
            prop_assert!(mu_t >= 0.0 && mu_t.is_finite());
        }
    }
}
