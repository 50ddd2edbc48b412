//! Running turbulence statistics, surface quantities, force coefficients,
//! wake-station profiles and the Q-criterion field.

mod surface;
mod wake;

pub use surface::{
    integrate_forces, surface_cf, surface_cp, CfPoint, ForceCoefficients, SurfaceAccumulator,
    SurfaceNode, SurfaceRecord,
};
pub use wake::{locate_point, sample_wake_profiles, WakeLine, WakeProfile, WakeRow};

use crate::error::{Error, Result};
use crate::solver::{SolutionField, Solver};

/// Freestream references and force-normalization conventions.
#[derive(Debug, Clone, Copy)]
pub struct FlowReference {
    pub rho_inf: f64,
    pub u_inf: f64,
    pub p_inf: f64,
    pub chord: f64,
    /// Reference area for force coefficients (chord x span by convention).
    pub area: f64,
    pub drag_axis: [f64; 3],
    pub lift_axis: [f64; 3],
}

impl FlowReference {
    pub fn dynamic_head(&self) -> f64 {
        0.5 * self.rho_inf * self.u_inf * self.u_inf
    }
}

/// Running sums of velocity moments per node, with compensated summation so
/// long windows do not lose digits. Merging two accumulators equals
/// accumulating the concatenated sample stream.
#[derive(Debug, Clone)]
pub struct StatisticsAccumulator {
    n_nodes: usize,
    count: u64,
    /// First/last sample times (convective time units).
    pub start_time: f64,
    pub stop_time: f64,
    /// Per node: u1, u2, u3, u1u1, u2u2, u3u3, u1u2, u1u3, u2u3.
    sums: Vec<f64>,
    comp: Vec<f64>,
}

/// Finalized velocity statistics.
#[derive(Debug, Clone)]
pub struct VelocityStats {
    pub count: u64,
    pub mean: Vec<[f64; 3]>,
    /// Diagonal RMS of the fluctuations, sqrt(<u_i' u_i'>).
    pub rms: Vec<[f64; 3]>,
    pub tke: Vec<f64>,
}

impl StatisticsAccumulator {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            count: 0,
            start_time: f64::INFINITY,
            stop_time: f64::NEG_INFINITY,
            sums: vec![0.0; n_nodes * 9],
            comp: vec![0.0; n_nodes * 9],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    fn add(&mut self, idx: usize, value: f64) {
        let y = value - self.comp[idx];
        let t = self.sums[idx] + y;
        self.comp[idx] = (t - self.sums[idx]) - y;
        self.sums[idx] = t;
    }

    /// Add one velocity sample per node.
    pub fn accumulate(&mut self, solver: &Solver, q: &SolutionField, time: f64) {
        let nn = solver.nodes_per_element();
        debug_assert_eq!(self.n_nodes, q.n_elem * nn);
        self.count += 1;
        self.start_time = self.start_time.min(time);
        self.stop_time = self.stop_time.max(time);
        for g in 0..self.n_nodes {
            let base = g * 5;
            let inv_rho = 1.0 / q.data[base];
            let v = [
                q.data[base + 1] * inv_rho,
                q.data[base + 2] * inv_rho,
                q.data[base + 3] * inv_rho,
            ];
            let s = g * 9;
            self.add(s, v[0]);
            self.add(s + 1, v[1]);
            self.add(s + 2, v[2]);
            self.add(s + 3, v[0] * v[0]);
            self.add(s + 4, v[1] * v[1]);
            self.add(s + 5, v[2] * v[2]);
            self.add(s + 6, v[0] * v[1]);
            self.add(s + 7, v[0] * v[2]);
            self.add(s + 8, v[1] * v[2]);
        }
    }

    /// Fold another accumulator into this one (associative to roundoff).
    pub fn merge(&mut self, other: &StatisticsAccumulator) -> Result<()> {
        if self.n_nodes != other.n_nodes {
            return Err(Error::Config(format!(
                "cannot merge accumulators over {} and {} nodes",
                self.n_nodes, other.n_nodes
            )));
        }
        self.count += other.count;
        self.start_time = self.start_time.min(other.start_time);
        self.stop_time = self.stop_time.max(other.stop_time);
        for i in 0..self.sums.len() {
            self.add(i, other.sums[i]);
            self.add(i, other.comp[i]);
        }
        Ok(())
    }

    /// Mean, RMS and TKE fields. Requires at least two samples.
    pub fn finalize(&self) -> Result<VelocityStats> {
        if self.count < 2 {
            return Err(Error::InsufficientData(format!(
                "variance needs at least 2 samples, have {}",
                self.count
            )));
        }
        let n = self.count as f64;
        let mut mean = Vec::with_capacity(self.n_nodes);
        let mut rms = Vec::with_capacity(self.n_nodes);
        let mut tke = Vec::with_capacity(self.n_nodes);
        for g in 0..self.n_nodes {
            let s = &self.sums[g * 9..g * 9 + 9];
            let m = [s[0] / n, s[1] / n, s[2] / n];
            let var = [
                (s[3] / n - m[0] * m[0]).max(0.0),
                (s[4] / n - m[1] * m[1]).max(0.0),
                (s[5] / n - m[2] * m[2]).max(0.0),
            ];
            mean.push(m);
            rms.push([var[0].sqrt(), var[1].sqrt(), var[2].sqrt()]);
            tke.push(0.5 * (var[0] + var[1] + var[2]));
        }
        Ok(VelocityStats {
            count: self.count,
            mean,
            rms,
            tke,
        })
    }
}

/// Time series of force coefficients with uniform sampling for the PSD.
#[derive(Debug, Clone, Default)]
pub struct ForceSeries {
    pub patches: Vec<String>,
    pub times: Vec<f64>,
    pub cl_total: Vec<f64>,
    pub cd_total: Vec<f64>,
    /// Per patch, per sample.
    pub cl_patch: Vec<Vec<f64>>,
    pub cd_patch: Vec<Vec<f64>>,
}

impl ForceSeries {
    pub fn new(patches: Vec<String>) -> Self {
        let n = patches.len();
        Self {
            patches,
            times: Vec::new(),
            cl_total: Vec::new(),
            cd_total: Vec::new(),
            cl_patch: vec![Vec::new(); n],
            cd_patch: vec![Vec::new(); n],
        }
    }

    pub fn push(&mut self, time: f64, forces: &ForceCoefficients) {
        debug_assert_eq!(forces.patches.len(), self.patches.len());
        self.times.push(time);
        self.cl_total.push(forces.cl_total);
        self.cd_total.push(forces.cd_total);
        for (i, pf) in forces.per_patch.iter().enumerate() {
            self.cl_patch[i].push(pf[0]);
            self.cd_patch[i].push(pf[1]);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The uniform sampling interval, verified against the timestamps.
    pub fn uniform_dt(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::InsufficientData(
                "need at least two force samples".into(),
            ));
        }
        let dt = self.times[1] - self.times[0];
        for w in self.times.windows(2) {
            let d = w[1] - w[0];
            if (d - dt).abs() > 1e-9 * dt.abs().max(1e-300) {
                return Err(Error::Sampling(format!(
                    "non-uniform sampling: intervals {dt} and {d}"
                )));
            }
        }
        Ok(dt)
    }
}

/// Q-criterion Q = (|Omega|^2 - |S|^2) / 2 per node, from the velocity
/// gradients of the latest operator evaluation.
pub fn q_criterion(gradients: &[f64]) -> Vec<f64> {
    let n = gradients.len() / 12;
    let mut out = Vec::with_capacity(n);
    for g in 0..n {
        let a = &gradients[g * 12..g * 12 + 9];
        let mut s2 = 0.0;
        let mut o2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let sym = 0.5 * (a[i * 3 + j] + a[j * 3 + i]);
                let asym = 0.5 * (a[i * 3 + j] - a[j * 3 + i]);
                s2 += sym * sym;
                o2 += asym * asym;
            }
        }
        out.push(0.5 * (o2 - s2));
    }
    out
}
