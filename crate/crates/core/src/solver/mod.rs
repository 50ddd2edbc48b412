//! The semi-discrete DG operator in both LES formulations, boundary
//! conditions, BR1 gradients, and low-storage RK3 time advancement.

mod bc;
mod cases;
mod checkpoint;
mod operator;
mod time;

pub use bc::{apply_boundary_state, BcData};
pub use cases::{
    couette_profile, density_wave, density_wave_exact, isentropic_vortex, taylor_green,
    uniform_state,
};
pub use checkpoint::{checkpoint_compatible, read_checkpoint, write_checkpoint, CheckpointMeta};
pub use time::{lsrk3_advance, RunOptions, RunReport, StepInfo, RK3_A, RK3_B, RK3_C};

use crate::basis::{build_basis, BasisSet, NodeKind};
use crate::error::{Error, Result};
use crate::mesh::{compute_metrics, mesh_hash, DiscreteGeometry, Mesh};
use crate::physics::{GasModel, InterfaceScheme, State, C_VREMAN};

/// Which LES formulation drives the spatial discretization.
///
/// The formulation fixes the node family: Vreman runs on Gauss nodes with the
/// weak form, the Kennedy-Gruber split form runs on Gauss-Lobatto nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Explicit LES: weak-form DGSEM on Gauss nodes + Vreman eddy viscosity.
    ExplicitLesVremanGauss,
    /// Implicit LES: Kennedy-Gruber flux differencing on Gauss-Lobatto nodes.
    ImplicitLesKgGaussLobatto,
}

impl Formulation {
    pub fn node_kind(&self) -> NodeKind {
        match self {
            Formulation::ExplicitLesVremanGauss => NodeKind::Gauss,
            Formulation::ImplicitLesKgGaussLobatto => NodeKind::GaussLobatto,
        }
    }

    /// Production interface flux for this formulation.
    pub fn default_interface(&self) -> InterfaceScheme {
        match self {
            Formulation::ExplicitLesVremanGauss => InterfaceScheme::Upwind,
            Formulation::ImplicitLesKgGaussLobatto => InterfaceScheme::KGLaxFriedrichs,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Formulation::ExplicitLesVremanGauss => "eles_vreman_gauss",
            Formulation::ImplicitLesKgGaussLobatto => "iles_kg_gauss_lobatto",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eles_vreman_gauss" => Ok(Formulation::ExplicitLesVremanGauss),
            "iles_kg_gauss_lobatto" => Ok(Formulation::ImplicitLesKgGaussLobatto),
            _ => Err(Error::Config(format!("unknown formulation `{s}`"))),
        }
    }
}

/// Scheme configuration: formulation, interface flux, model constants, CFL and
/// the boundary table mapping mesh tag names to boundary data.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub formulation: Formulation,
    pub interface: InterfaceScheme,
    /// Vreman model constant (used by the explicit formulation only).
    pub c_vreman: f64,
    pub cfl: f64,
    /// Fixed time step; overrides the CFL-based estimate when set.
    pub fixed_dt: Option<f64>,
    pub gas: GasModel,
    /// Boundary data by mesh tag name.
    pub bc: Vec<(String, BcData)>,
}

impl SchemeConfig {
    pub fn new(formulation: Formulation, gas: GasModel) -> Self {
        Self {
            formulation,
            interface: formulation.default_interface(),
            c_vreman: C_VREMAN,
            cfl: 0.4,
            fixed_dt: None,
            gas,
            bc: Vec::new(),
        }
    }

    pub fn with_interface(mut self, interface: InterfaceScheme) -> Self {
        self.interface = interface;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_bc(mut self, tag: impl Into<String>, data: BcData) -> Self {
        self.bc.push((tag.into(), data));
        self
    }

    /// Reject basis/formulation mismatches (the formulation fixes the node
    /// family).
    pub fn check_basis(&self, kind: NodeKind) -> Result<()> {
        let want = self.formulation.node_kind();
        if want != kind {
            return Err(Error::Config(format!(
                "formulation {} requires {:?} nodes, got {:?}",
                self.formulation.name(),
                want,
                kind
            )));
        }
        Ok(())
    }
}

/// Per-element tensor-product nodal storage of the conservative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    /// Polynomial order N.
    pub order: usize,
    pub n_elem: usize,
    /// `n_elem * (N+1)^3 * 5`, element-major, node-major, variable-minor.
    pub data: Vec<f64>,
}

impl SolutionField {
    pub fn np(&self) -> usize {
        self.order + 1
    }

    pub fn nodes_per_element(&self) -> usize {
        let np = self.order + 1;
        np * np * np
    }

    pub fn zeros(order: usize, n_elem: usize) -> Self {
        let np = order + 1;
        Self {
            order,
            n_elem,
            data: vec![0.0; n_elem * np * np * np * 5],
        }
    }

    /// Fill from a pointwise function of the physical node coordinates.
    pub fn from_fn(geom: &DiscreteGeometry, order: usize, f: impl Fn([f64; 3]) -> State) -> Self {
        let mut field = Self::zeros(order, geom.elems.len());
        let nn = field.nodes_per_element();
        for (e, elem) in geom.elems.iter().enumerate() {
            for (node, &xyz) in elem.xyz.iter().enumerate() {
                field.set_state(e, node, &f(xyz));
            }
            debug_assert_eq!(elem.xyz.len(), nn);
        }
        field
    }

    #[inline]
    pub fn state(&self, elem: usize, node: usize) -> State {
        let nn = self.nodes_per_element();
        let base = (elem * nn + node) * 5;
        [
            self.data[base],
            self.data[base + 1],
            self.data[base + 2],
            self.data[base + 3],
            self.data[base + 4],
        ]
    }

    #[inline]
    pub fn set_state(&mut self, elem: usize, node: usize, u: &State) {
        let nn = self.nodes_per_element();
        let base = (elem * nn + node) * 5;
        self.data[base..base + 5].copy_from_slice(u);
    }
}

/// Scratch buffers reused across operator evaluations and RK stages.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub(crate) op: operator::OpScratch,
    /// Residual dq/dt from the latest operator evaluation.
    pub dudt: Vec<f64>,
    /// Low-storage RK register.
    pub(crate) rk: Vec<f64>,
}

impl Workspace {
    pub fn new(solver: &Solver) -> Self {
        let n = solver.mesh.n_elements() * solver.nodes_per_element() * 5;
        Self {
            op: operator::OpScratch::new(solver),
            dudt: vec![0.0; n],
            rk: vec![0.0; n],
        }
    }

    /// Velocity/temperature gradients from the latest evaluation, 12 per node:
    /// alpha[d*3+j] = d v_j / d x_d followed by the temperature gradient.
    pub fn gradients(&self) -> &[f64] {
        &self.op.grad
    }

    /// Vreman eddy viscosity per node from the latest evaluation.
    pub fn mu_t(&self) -> &[f64] {
        &self.op.mu_t
    }
}

/// Frozen spatial discretization: mesh, basis, metric terms, scheme, boundary
/// table and the derived operator matrices.
#[derive(Debug, Clone)]
pub struct Solver {
    pub mesh: Mesh,
    pub basis: BasisSet,
    pub geom: DiscreteGeometry,
    pub scheme: SchemeConfig,
    pub mesh_hash: u64,
    /// Resolved boundary data per mesh tag index.
    pub(crate) bc_resolved: Vec<bc::ResolvedBc>,
    /// Vreman filter width per element.
    pub(crate) delta: Vec<f64>,
    /// Weak-form derivative matrix: dhat[i*np+m] = D[m*np+i] * w[m] / w[i].
    pub(crate) dhat: Vec<f64>,
    /// Strong-form lift coefficients l_i(+-1)/w_i.
    pub(crate) lift_left: Vec<f64>,
    pub(crate) lift_right: Vec<f64>,
}

impl Solver {
    /// Build a solver for `mesh` at polynomial order `order`; the node family
    /// comes from the formulation.
    pub fn new(mesh: Mesh, order: usize, scheme: SchemeConfig) -> Result<Self> {
        let basis = build_basis(scheme.formulation.node_kind(), order)?;
        Self::with_basis(mesh, basis, scheme)
    }

    pub fn with_basis(mesh: Mesh, basis: BasisSet, scheme: SchemeConfig) -> Result<Self> {
        scheme.check_basis(basis.kind)?;
        if scheme.cfl <= 0.0 {
            return Err(Error::Config(format!(
                "CFL must be positive, got {}",
                scheme.cfl
            )));
        }
        if let Some(dt) = scheme.fixed_dt {
            if dt <= 0.0 {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
        }
        let geom = compute_metrics(&mesh, &basis)?;
        let bc_resolved = bc::resolve_bc_table(&mesh, &scheme)?;
        let np = basis.len();
        let mut dhat = vec![0.0; np * np];
        for i in 0..np {
            for m in 0..np {
                dhat[i * np + m] = basis.diff[m * np + i] * basis.weights[m] / basis.weights[i];
            }
        }
        let lift_left: Vec<f64> = (0..np)
            .map(|i| basis.interp_left[i] / basis.weights[i])
            .collect();
        let lift_right: Vec<f64> = (0..np)
            .map(|i| basis.interp_right[i] / basis.weights[i])
            .collect();
        let delta: Vec<f64> = geom
            .elems
            .iter()
            .map(|e| crate::physics::filter_width(e.volume, basis.order))
            .collect();
        let mesh_hash = mesh_hash(&mesh);
        Ok(Self {
            mesh,
            basis,
            geom,
            scheme,
            mesh_hash,
            bc_resolved,
            delta,
            dhat,
            lift_left,
            lift_right,
        })
    }

    pub fn order(&self) -> usize {
        self.basis.order
    }

    pub fn nodes_per_element(&self) -> usize {
        let np = self.basis.len();
        np * np * np
    }

    pub fn gas(&self) -> &GasModel {
        &self.scheme.gas
    }

    /// True when the run needs BR1 gradients (viscosity or an active Vreman
    /// model).
    pub fn needs_gradients(&self) -> bool {
        self.scheme.gas.mu > 0.0
            || (self.scheme.formulation == Formulation::ExplicitLesVremanGauss
                && self.scheme.c_vreman > 0.0)
    }

    /// Quadrature integral of each conserved variable, accumulated in element
    /// order with compensated summation (deterministic under threading).
    pub fn conserved_totals(&self, q: &SolutionField) -> [f64; 5] {
        let np = self.basis.len();
        let nn = self.nodes_per_element();
        let w = &self.basis.weights;
        let mut sum = [0.0f64; 5];
        let mut comp = [0.0f64; 5];
        for (e, elem) in self.geom.elems.iter().enumerate() {
            for node in 0..nn {
                let (i, j, k) = (node % np, (node / np) % np, node / (np * np));
                let jw = elem.jac[node] * w[i] * w[j] * w[k];
                let base = (e * nn + node) * 5;
                for c in 0..5 {
                    let term = jw * q.data[base + c];
                    let y = term - comp[c];
                    let t = sum[c] + y;
                    comp[c] = (t - sum[c]) - y;
                    sum[c] = t;
                }
            }
        }
        sum
    }

    /// Quadrature integral of the kinetic energy density rho |v|^2 / 2.
    pub fn kinetic_energy(&self, q: &SolutionField) -> f64 {
        let np = self.basis.len();
        let nn = self.nodes_per_element();
        let w = &self.basis.weights;
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (e, elem) in self.geom.elems.iter().enumerate() {
            for node in 0..nn {
                let (i, j, k) = (node % np, (node / np) % np, node / (np * np));
                let jw = elem.jac[node] * w[i] * w[j] * w[k];
                let base = (e * nn + node) * 5;
                let rho = q.data[base];
                let ke = 0.5
                    * (q.data[base + 1] * q.data[base + 1]
                        + q.data[base + 2] * q.data[base + 2]
                        + q.data[base + 3] * q.data[base + 3])
                    / rho;
                let term = jw * ke;
                let y = term - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
        }
        sum
    }
}
