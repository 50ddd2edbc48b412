//! CFL-ramp search for the maximum stable time step of each formulation, and
//! cost accounting per iteration and per convective time unit.
//!
//! The ramp protocol: start every rung from the same initial state, advance a
//! fixed number of probe iterations, and call the rung stable when no
//! divergence or nodal invariant violation occurs. 100 iterations from a
//! uniform start is a weak stability probe for developed turbulence; the
//! defaults reproduce it, the knobs let harsher probes be configured.

use crate::error::{Error, Result};
use crate::physics::State;
use crate::solver::{Formulation, RunOptions, SolutionField, Solver, Workspace};

/// Ramp protocol knobs (defaults: CFL 0.5 upward in steps of 0.1, probing 100
/// iterations per rung).
#[derive(Debug, Clone, Copy)]
pub struct RampConfig {
    pub start: f64,
    pub increment: f64,
    pub probe_steps: usize,
    /// Safety cap on the number of rungs.
    pub max_rungs: usize,
    /// Steps excluded from the per-iteration timing.
    pub warmup: usize,
}

impl Default for RampConfig {
    fn default() -> Self {
        Self {
            start: 0.5,
            increment: 0.1,
            probe_steps: 100,
            max_rungs: 200,
            warmup: 5,
        }
    }
}

impl RampConfig {
    pub fn validate(&self) -> Result<()> {
        if self.probe_steps == 0 {
            return Err(Error::Config("probe step count must be positive".into()));
        }
        if !(self.start > 0.0) || !(self.increment > 0.0) {
            return Err(Error::Config(
                "ramp start and increment must be positive".into(),
            ));
        }
        if self.max_rungs == 0 {
            return Err(Error::Config("rung cap must be positive".into()));
        }
        Ok(())
    }
}

/// One tested rung of the CFL ladder.
#[derive(Debug, Clone, Copy)]
pub struct RampRung {
    pub cfl: f64,
    /// First-step time step at this CFL (same initial state every rung).
    pub dt: f64,
    pub stable: bool,
    /// Mean wall seconds per iteration past the warm-up (stable rungs only).
    pub sec_per_iter: Option<f64>,
}

/// Outcome of a CFL ramp for one formulation.
#[derive(Debug, Clone)]
pub struct RampReport {
    pub formulation: Formulation,
    pub mesh_hash: u64,
    /// Tested ladder, in increasing CFL order.
    pub rungs: Vec<RampRung>,
    pub last_stable: Option<RampRung>,
    pub first_unstable: Option<f64>,
}

impl RampReport {
    /// Cost per convective time unit in hours (CTU duration = chord/U = 1 in
    /// solver units): (1 / dt_max) * sec_per_iter / 3600.
    pub fn hours_per_ctu(&self) -> Option<f64> {
        let rung = self.last_stable?;
        Some(rung.sec_per_iter? / rung.dt / 3600.0)
    }
}

/// Progressively raise the CFL from `config.start` in `config.increment`
/// steps, probing `config.probe_steps` iterations per rung from the same
/// initial state, until the first unstable rung.
pub fn cfl_ramp(
    solver: &mut Solver,
    initial: impl Fn([f64; 3]) -> State,
    config: &RampConfig,
) -> Result<RampReport> {
    config.validate()?;
    let order = solver.order();
    let mut rungs = Vec::new();
    let mut last_stable = None;
    let mut first_unstable = None;
    let mut ws = Workspace::new(solver);
    for rung_idx in 0..config.max_rungs {
        let cfl = config.start + rung_idx as f64 * config.increment;
        solver.scheme.cfl = cfl;
        solver.scheme.fixed_dt = None;
        let mut q = SolutionField::from_fn(&solver.geom, order, &initial);
        let mut first_dt = f64::NAN;
        let outcome = solver.run(
            &mut q,
            0.0,
            0,
            RunOptions::steps(config.probe_steps),
            &mut ws,
            |info, _, _| {
                if info.step == 1 {
                    first_dt = info.dt;
                }
                Ok(())
            },
        );
        match outcome {
            Ok(report) => {
                let rung = RampRung {
                    cfl,
                    dt: first_dt,
                    stable: true,
                    sec_per_iter: report.sec_per_iter(config.warmup.min(report.steps / 2)),
                };
                rungs.push(rung);
                last_stable = Some(rung);
            }
            Err(Error::Divergence { .. }) | Err(Error::InvalidState { .. }) => {
                rungs.push(RampRung {
                    cfl,
                    dt: first_dt,
                    stable: false,
                    sec_per_iter: None,
                });
                first_unstable = Some(cfl);
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(RampReport {
        formulation: solver.scheme.formulation,
        mesh_hash: solver.mesh_hash,
        rungs,
        last_stable,
        first_unstable,
    })
}

/// One row of the cost comparison table.
#[derive(Debug, Clone)]
pub struct CostRow {
    pub formulation: Formulation,
    pub cfl_max: f64,
    pub dt_max: f64,
    pub sec_per_iter: f64,
    pub hours_per_ctu: f64,
}

/// Normalized comparison across formulations.
#[derive(Debug, Clone)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
    /// (dt ratio, per-iteration cost ratio, per-CTU cost ratio) of the
    /// split-form row over the Vreman row, when both are present.
    pub gl_over_gauss: Option<CostRatios>,
}

#[derive(Debug, Clone, Copy)]
pub struct CostRatios {
    pub cfl: f64,
    pub dt: f64,
    pub sec_per_iter: f64,
    pub hours_per_ctu: f64,
}

/// Build the cost table from completed ramps (same mesh required). The
/// per-CTU figures satisfy hours_per_ctu * dt_max / sec_per_iter * 3600 = 1
/// by construction; the identity is verified on every report.
pub fn cost_report(reports: &[RampReport]) -> Result<CostReport> {
    if reports.is_empty() {
        return Err(Error::Comparison("no ramp reports supplied".into()));
    }
    let hash0 = reports[0].mesh_hash;
    if reports.iter().any(|r| r.mesh_hash != hash0) {
        return Err(Error::Comparison(
            "ramp reports come from different meshes".into(),
        ));
    }
    let mut rows = Vec::new();
    for report in reports {
        let Some(rung) = report.last_stable else {
            return Err(Error::Comparison(format!(
                "formulation {} has no stable rung",
                report.formulation.name()
            )));
        };
        let Some(sec) = rung.sec_per_iter else {
            return Err(Error::Comparison(format!(
                "formulation {} has no timing data",
                report.formulation.name()
            )));
        };
        let hours = sec / rung.dt / 3600.0;
        let identity = hours * rung.dt / sec * 3600.0;
        if (identity - 1.0).abs() > 1e-12 {
            return Err(Error::Comparison(format!(
                "per-CTU identity violated: {identity}"
            )));
        }
        rows.push(CostRow {
            formulation: report.formulation,
            cfl_max: rung.cfl,
            dt_max: rung.dt,
            sec_per_iter: sec,
            hours_per_ctu: hours,
        });
    }
    let gauss = rows
        .iter()
        .find(|r| r.formulation == Formulation::ExplicitLesVremanGauss);
    let gl = rows
        .iter()
        .find(|r| r.formulation == Formulation::ImplicitLesKgGaussLobatto);
    let gl_over_gauss = match (gauss, gl) {
        (Some(g), Some(l)) => Some(CostRatios {
            cfl: l.cfl_max / g.cfl_max,
            dt: l.dt_max / g.dt_max,
            sec_per_iter: l.sec_per_iter / g.sec_per_iter,
            hours_per_ctu: l.hours_per_ctu / g.hours_per_ctu,
        }),
        _ => None,
    };
    Ok(CostReport {
        rows,
        gl_over_gauss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tgv_box_mesh;
    use crate::physics::GasModel;
    use crate::solver::{density_wave, SchemeConfig};

    fn small_solver(formulation: Formulation) -> Solver {
        let gas = GasModel::air(0.1, None).unwrap();
        let mesh = tgv_box_mesh(2, 1).unwrap();
        Solver::new(mesh, 2, SchemeConfig::new(formulation, gas)).unwrap()
    }

    #[test]
    fn probe_steps_zero_rejected() {
        let mut solver = small_solver(Formulation::ImplicitLesKgGaussLobatto);
        let gas = *solver.gas();
        let config = RampConfig {
            probe_steps: 0,
            ..Default::default()
        };
        assert!(matches!(
            cfl_ramp(
                &mut solver,
                density_wave(gas, 0.05, 1.0, [0.5, 0.0, 0.0], 1.0 / gas.gamma),
                &config
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ladder_bookkeeping() {
        // a handful of cheap rungs on a smooth case; the ladder is strictly
        // increasing, ends at the first failure, and last stable < first
        // unstable when a failure occurs
        let mut solver = small_solver(Formulation::ImplicitLesKgGaussLobatto);
        let gas = *solver.gas();
        let config = RampConfig {
            start: 0.4,
            increment: 0.4,
            probe_steps: 12,
            max_rungs: 30,
            warmup: 2,
        };
        let report = cfl_ramp(
            &mut solver,
            density_wave(gas, 0.05, 1.0, [0.5, 0.0, 0.0], 1.0 / gas.gamma),
            &config,
        )
        .unwrap();
        assert!(!report.rungs.is_empty());
        for w in report.rungs.windows(2) {
            assert!(w[1].cfl > w[0].cfl);
            assert!((w[1].cfl - w[0].cfl - config.increment).abs() < 1e-12);
        }
        if let (Some(stable), Some(unstable)) = (report.last_stable, report.first_unstable) {
            assert!(stable.cfl < unstable);
            assert!(report.rungs.iter().rev().skip(1).all(|r| r.stable));
        }
        assert!(!report.rungs.last().unwrap().stable || report.rungs.len() == config.max_rungs);
    }

    #[test]
    fn cost_report_identity_and_errors() {
        let rung = RampRung {
            cfl: 0.6,
            dt: 1e-3,
            stable: true,
            sec_per_iter: Some(0.02),
        };
        let report_a = RampReport {
            formulation: Formulation::ExplicitLesVremanGauss,
            mesh_hash: 42,
            rungs: vec![rung],
            last_stable: Some(rung),
            first_unstable: Some(0.7),
        };
        let mut rung_b = rung;
        rung_b.cfl = 1.0;
        rung_b.dt = 1.52e-3;
        let report_b = RampReport {
            formulation: Formulation::ImplicitLesKgGaussLobatto,
            mesh_hash: 42,
            rungs: vec![rung_b],
            last_stable: Some(rung_b),
            first_unstable: None,
        };
        let table = cost_report(&[report_a.clone(), report_b.clone()]).unwrap();
        let ratios = table.gl_over_gauss.unwrap();
        // identical per-iteration cost, dt ratio 1.52: per-CTU ratio = 1/1.52
        assert!((ratios.sec_per_iter - 1.0).abs() < 1e-12);
        assert!((ratios.dt - 1.52).abs() < 1e-12);
        assert!((ratios.hours_per_ctu - 1.0 / 1.52).abs() < 1e-12);
        for row in &table.rows {
            let identity = row.hours_per_ctu * row.dt_max / row.sec_per_iter * 3600.0;
            assert!((identity - 1.0).abs() < 1e-12);
        }

        // identical inputs give unit ratios
        let mut twin = report_a.clone();
        twin.formulation = Formulation::ImplicitLesKgGaussLobatto;
        let table = cost_report(&[report_a.clone(), twin]).unwrap();
        let ratios = table.gl_over_gauss.unwrap();
        assert!((ratios.dt - 1.0).abs() < 1e-12);
        assert!((ratios.hours_per_ctu - 1.0).abs() < 1e-12);

        // mismatched meshes are refused
        let mut other_mesh = report_b.clone();
        other_mesh.mesh_hash = 7;
        assert!(matches!(
            cost_report(&[report_a.clone(), other_mesh]),
            Err(Error::Comparison(_))
        ));

        // single formulation: rows come back, ratio columns stay blank
        let table = cost_report(&[report_a]).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.gl_over_gauss.is_none());
    }

    #[test]
    fn ramp_is_deterministic() {
        let config = RampConfig {
            start: 0.4,
            increment: 0.4,
            probe_steps: 10,
            max_rungs: 12,
            warmup: 2,
        };
        let mut reports = Vec::new();
        for _ in 0..2 {
            let mut solver = small_solver(Formulation::ImplicitLesKgGaussLobatto);
            let gas = *solver.gas();
            reports.push(
                cfl_ramp(
                    &mut solver,
                    density_wave(gas, 0.05, 1.0, [0.5, 0.0, 0.0], 1.0 / gas.gamma),
                    &config,
                )
                .unwrap(),
            );
        }
        assert_eq!(
            reports[0].last_stable.map(|r| r.cfl),
            reports[1].last_stable.map(|r| r.cfl)
        );
        assert_eq!(reports[0].first_unstable, reports[1].first_unstable);
        assert_eq!(reports[0].rungs.len(), reports[1].rungs.len());
    }
}
