//! The five subcommands: mesh generation, simulation runs, post-processing,
//! PSD analysis and the CFL/cost benchmark.

use std::path::{Path, PathBuf};

use dgles::basis::{build_basis, NodeKind};
use dgles::bench::{cfl_ramp, cost_report, RampConfig, RampReport};
use dgles::error::{Error, Result};
use dgles::mesh::{compute_metrics, metric_identity_residual, write_mesh};
use dgles::solver::{
    read_checkpoint, write_checkpoint, RunOptions, SolutionField, Solver, StepInfo, Workspace,
};
use dgles::spectral::{dominant_peaks, welch_psd};
use dgles::stats::{
    integrate_forces, sample_wake_profiles, surface_cf, surface_cp, StatisticsAccumulator,
    SurfaceAccumulator, WakeLine,
};
use dgles::vtk::write_vtk;

use crate::config::RunConfig;
use crate::csvio;
use crate::statsio;

pub fn out_dir(config: &RunConfig) -> PathBuf {
    PathBuf::from(&config.run.output_dir)
}

fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("missing input {path:?}"),
        )));
    }
    Ok(())
}

/// `mesh`: generate the configured mesh, validate curved-mesh metric
/// identities, and write the mesh file.
pub fn cmd_mesh(config: &RunConfig, out: Option<PathBuf>) -> Result<PathBuf> {
    let mesh = config.build_mesh()?;
    // curved meshes must satisfy the discrete metric identity before they are
    // worth writing out
    let check_order = config.order.max(mesh.n_geo).max(2).min(dgles::basis::MAX_ORDER);
    let basis = build_basis(NodeKind::GaussLobatto, check_order)?;
    let geom = compute_metrics(&mesh, &basis)?;
    let residual = metric_identity_residual(&geom, &basis);
    if residual > 1e-11 {
        return Err(Error::MeshInvalid {
            element: 0,
            detail: format!("metric identity residual {residual:.3e} exceeds 1e-11"),
        });
    }
    let dir = out_dir(config);
    std::fs::create_dir_all(&dir)?;
    let path = out.unwrap_or_else(|| dir.join("mesh.dgm"));
    write_mesh(&mesh, &path)?;
    println!(
        "mesh: {} elements, {} faces, metric residual {residual:.3e} -> {}",
        mesh.n_elements(),
        mesh.faces.len(),
        path.display()
    );
    Ok(path)
}

/// `run`: advance the configured case, emitting the force series at every
/// step, checkpoints at the configured cadence, and statistics files when the
/// window closes.
pub fn cmd_run(config: &RunConfig, resume: Option<&Path>) -> Result<()> {
    let gas = config.gas_model()?;
    let mesh = config.build_mesh()?;
    let scheme = config.scheme()?;
    let solver = Solver::new(mesh, config.order, scheme)?;
    let reference = config.flow_reference(&gas);
    let dir = out_dir(config);
    std::fs::create_dir_all(&dir)?;

    let (mut q, t0, step0) = match resume {
        Some(path) => {
            require_file(path)?;
            let (meta, q) = read_checkpoint(path)?;
            dgles::solver::checkpoint_compatible(&meta, &solver)?;
            println!("resuming from {} at step {}, t = {}", path.display(), meta.step, meta.time);
            (q, meta.time, meta.step)
        }
        None => {
            let ic = config.initial_condition(&gas)?;
            (
                SolutionField::from_fn(&solver.geom, config.order, |x| ic(x)),
                0.0,
                0,
            )
        }
    };

    let t_end = config.ctu_to_time(config.run.t_end_ctu);
    let patches = config.forces.patches.clone();
    let mut forces_writer = if patches.is_empty() {
        None
    } else {
        Some(csvio::ForcesWriter::create(
            &dir.join("forces.csv"),
            &patches,
        )?)
    };
    let stats_window = if config.stats.enabled {
        let start = config.ctu_to_time(config.stats.start_ctu);
        Some((start, start + config.ctu_to_time(config.stats.window_ctu)))
    } else {
        None
    };
    let n_nodes = solver.mesh.n_elements() * solver.nodes_per_element();
    let mut vol_acc = stats_window.map(|_| StatisticsAccumulator::new(n_nodes));
    let mut surf_acc = match (&stats_window, patches.is_empty()) {
        (Some(_), false) => Some(SurfaceAccumulator::new(&solver, &patches)?),
        _ => None,
    };
    let checkpoint_every = config
        .run
        .checkpoint_every_ctu
        .map(|c| config.ctu_to_time(c));
    let mut next_checkpoint = checkpoint_every.map(|c| t0 + c);
    let viscous = solver.needs_gradients();

    let mut ws = Workspace::new(&solver);
    let mut cb_ws = Workspace::new(&solver);
    let run_result = {
        let solver_ref = &solver;
        let reference = reference;
        let cb = |info: &StepInfo, q: &SolutionField, _run_ws: &Workspace| -> Result<()> {
            // instantaneous force sample at every accepted step
            if let Some(w) = forces_writer.as_mut() {
                let (grads, mu_t) = if viscous {
                    solver_ref.compute_gradients(q, &mut cb_ws)?;
                    (Some(cb_ws.gradients()), Some(cb_ws.mu_t()))
                } else {
                    (None, None)
                };
                let f = integrate_forces(solver_ref, q, grads, mu_t, &patches, &reference)?;
                w.append(info.time, &f)?;
                if let Some(acc) = surf_acc.as_mut() {
                    if stats_window.is_some_and(|(s, e)| info.time >= s && info.time <= e) {
                        // surface statistics share the freshly computed gradients
                        if !viscous {
                            solver_ref.compute_gradients(q, &mut cb_ws)?;
                        }
                        acc.accumulate(solver_ref, q, &cb_ws);
                    }
                }
            }
            if let Some(acc) = vol_acc.as_mut() {
                if stats_window.is_some_and(|(s, e)| info.time >= s && info.time <= e) {
                    acc.accumulate(solver_ref, q, info.time);
                }
            }
            if let Some(next) = next_checkpoint {
                if info.time >= next - 1e-12 {
                    let path = dir.join(format!("ckpt_{:08}.dgc", info.step));
                    write_checkpoint(&path, solver_ref, q, info.step, info.time)?;
                    next_checkpoint = Some(next + checkpoint_every.unwrap());
                }
            }
            Ok(())
        };
        solver.run(&mut q, t0, step0, RunOptions::until(t_end), &mut ws, cb)
    };

    if let Some(w) = forces_writer.as_mut() {
        w.flush()?;
    }

    match run_result {
        Ok(report) => {
            let final_step = step0 + report.steps;
            write_checkpoint(&dir.join("final.dgc"), &solver, &q, final_step, report.time)?;
            if let Some(acc) = vol_acc.as_ref() {
                let stats = acc.finalize()?;
                statsio::write_volume_stats(&dir.join("stats_volume.dgs"), &stats)?;
            }
            if let Some(acc) = surf_acc.as_ref() {
                let records = acc.finalize()?;
                statsio::write_surface_stats(&dir.join("stats_surface.dgs"), &records)?;
            }
            let warmup = report.steps.min(5);
            let sec = report.sec_per_iter(warmup);
            let ctu = config.reference.chord / config.reference.u_inf;
            println!(
                "run: {} steps to t = {:.6} ({:.3} CTU), {} per iteration, {} per CTU",
                report.steps,
                report.time,
                report.time * config.reference.u_inf / config.reference.chord,
                sec.map_or("n/a".to_string(), |s| format!("{:.3e} s", s)),
                report
                    .sec_per_ctu(warmup, ctu)
                    .map_or("n/a".to_string(), |s| format!("{:.3e} s", s)),
            );
            Ok(())
        }
        Err(e) => {
            // preserve the last valid state for diagnosis
            let path = dir.join("last_valid.dgc");
            write_checkpoint(&path, &solver, &q, step0, t0)
                .unwrap_or_else(|werr| eprintln!("could not write {path:?}: {werr}"));
            Err(e)
        }
    }
}

/// `post`: surface.csv, wake profiles, VTK field export and psd.csv from a
/// completed run's artifacts.
pub fn cmd_post(config: &RunConfig) -> Result<()> {
    let gas = config.gas_model()?;
    let mesh = config.build_mesh()?;
    let scheme = config.scheme()?;
    let solver = Solver::new(mesh, config.order, scheme)?;
    let reference = config.flow_reference(&gas);
    let dir = out_dir(config);

    // instantaneous field export from the final checkpoint
    let ckpt = dir.join("final.dgc");
    require_file(&ckpt)?;
    let (meta, q) = read_checkpoint(&ckpt)?;
    dgles::solver::checkpoint_compatible(&meta, &solver)?;
    let mut ws = Workspace::new(&solver);
    solver.compute_gradients(&q, &mut ws)?;
    write_vtk(
        &dir.join("field.vtk"),
        &solver,
        &q,
        &ws,
        &format!("{} step {} t {:.6}", config.case, meta.step, meta.time),
    )?;
    println!("post: wrote field.vtk (density, velocity, pressure, q_criterion, mu_t)");

    // surface quantities from the accumulated window
    if !config.forces.patches.is_empty() {
        let path = dir.join("stats_surface.dgs");
        require_file(&path)?;
        let records = statsio::read_surface_stats(&path)?;
        let mut rows = Vec::new();
        for record in &records {
            let cp = surface_cp(record, &reference);
            let cf = surface_cf(record, &reference, &solver)?;
            rows.push((record.patch.clone(), cp, cf));
        }
        csvio::write_surface_csv(&dir.join("surface.csv"), &rows)?;
        println!("post: wrote surface.csv for {} patch(es)", records.len());
    }

    // wake-station profiles
    match &config.wake {
        Some(wake) => {
            let path = dir.join("stats_volume.dgs");
            require_file(&path)?;
            let stats = statsio::read_volume_stats(&path)?;
            let line = WakeLine {
                z: wake.z,
                y_range: wake.y_range,
                samples: wake.samples,
            };
            let profiles =
                sample_wake_profiles(&solver, &stats, &wake.stations, line, &reference)?;
            for profile in &profiles {
                let path = csvio::write_wake_csv(&dir, profile)?;
                println!("post: wrote {}", path.display());
            }
        }
        None => println!("post: no wake stations configured, skipping wake profiles"),
    }

    // force-series PSD
    if !config.forces.patches.is_empty() {
        cmd_psd(config)?;
    }
    Ok(())
}

/// `psd`: Welch power spectral density of the recorded force series.
///
/// Requires uniform sampling (run with a fixed `run.dt`). A final step capped
/// to land on t_end is tolerated by trimming it; any interior non-uniformity
/// is a sampling error.
pub fn cmd_psd(config: &RunConfig) -> Result<()> {
    let dir = out_dir(config);
    let forces_path = dir.join("forces.csv");
    require_file(&forces_path)?;
    let mut series = csvio::read_forces(&forces_path)?;
    let dt = match series.uniform_dt() {
        Ok(dt) => dt,
        Err(Error::Sampling(_)) if series.len() >= 3 => {
            // retry without the final (possibly capped) sample
            series.times.pop();
            series.cl_total.pop();
            series.cd_total.pop();
            for p in &mut series.cl_patch {
                p.pop();
            }
            for p in &mut series.cd_patch {
                p.pop();
            }
            let dt = series.uniform_dt()?;
            println!("psd: dropped the final capped sample to restore uniform sampling");
            dt
        }
        Err(e) => return Err(e),
    };
    let psd_cfg = config.psd_config(dt)?;
    let chord = config.reference.chord;
    let u = config.reference.u_inf;
    let total = welch_psd(&series.cl_total, &psd_cfg, chord, u)?;
    let mut per_patch = Vec::new();
    for cl in &series.cl_patch {
        per_patch.push(welch_psd(cl, &psd_cfg, chord, u)?.psd);
    }
    csvio::write_psd_csv(
        &dir.join("psd.csv"),
        &series.patches,
        &total.strouhal,
        &total.psd,
        &per_patch,
    )?;
    println!(
        "psd: {} segments of {} samples (dt* = {dt:.3e}), {} bins -> psd.csv",
        total.segments,
        psd_cfg.segment_length,
        total.strouhal.len()
    );
    if let Ok(peaks) = dominant_peaks(&total, 3) {
        for (st, power) in peaks {
            println!("  peak: St = {st:.4}, psd = {power:.4e}");
        }
    }
    Ok(())
}

/// `bench`: CFL-ramp both formulations on the same mesh and report the cost
/// table. Returns false when any requested formulation had no stable rung.
pub fn cmd_bench(config: &RunConfig, which: &str) -> Result<bool> {
    let gas = config.gas_model()?;
    let mesh = config.build_mesh()?;
    let dir = out_dir(config);
    std::fs::create_dir_all(&dir)?;
    let formulations = match which {
        "both" => vec![
            dgles::solver::Formulation::ExplicitLesVremanGauss,
            dgles::solver::Formulation::ImplicitLesKgGaussLobatto,
        ],
        "eles" => vec![dgles::solver::Formulation::ExplicitLesVremanGauss],
        "iles" => vec![dgles::solver::Formulation::ImplicitLesKgGaussLobatto],
        other => {
            return Err(Error::Config(format!(
                "unknown formulation selection `{other}` (both, eles, iles)"
            )))
        }
    };
    let ramp = RampConfig {
        start: config.bench.start,
        increment: config.bench.increment,
        probe_steps: config.bench.probe_steps,
        max_rungs: config.bench.max_rungs,
        warmup: 5,
    };
    let mut reports: Vec<RampReport> = Vec::new();
    for formulation in formulations {
        let mut scheme = config.scheme()?;
        scheme.formulation = formulation;
        scheme.interface = formulation.default_interface();
        let mut solver = Solver::new(mesh.clone(), config.order, scheme)?;
        let ic = config.initial_condition(&gas)?;
        println!("bench: ramping {}", formulation.name());
        let report = cfl_ramp(&mut solver, |x| ic(x), &ramp)?;
        match report.last_stable {
            Some(r) => println!(
                "  last stable CFL {:.3} (dt = {:.3e}), first unstable {:?}",
                r.cfl, r.dt, report.first_unstable
            ),
            None => println!("  no stable CFL on the tested ladder"),
        }
        reports.push(report);
    }
    csvio::write_bench_csv(&dir.join("bench.csv"), &reports)?;
    let all_stable = reports.iter().all(|r| r.last_stable.is_some());
    if all_stable {
        let table = cost_report(&reports)?;
        println!("formulation              cfl_max   dt_max      sec/iter    hours/CTU");
        for row in &table.rows {
            println!(
                "{:<24} {:<9.3} {:<11.4e} {:<11.4e} {:<11.4e}",
                row.formulation.name(),
                row.cfl_max,
                row.dt_max,
                row.sec_per_iter,
                row.hours_per_ctu
            );
        }
        if let Some(r) = table.gl_over_gauss {
            println!(
                "GL/Gauss ratios: cfl {:.3}, dt {:.3}, sec/iter {:.3}, hours/CTU {:.3}",
                r.cfl, r.dt, r.sec_per_iter, r.hours_per_ctu
            );
        }
    }
    Ok(all_stable)
}
