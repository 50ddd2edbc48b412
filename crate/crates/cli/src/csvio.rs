//! CSV emitters with fixed documented headers, and the forces.csv reader used
//! by the PSD command.

use std::io::Write;
use std::path::Path;

use dgles::error::{Error, Result};
use dgles::stats::{CfPoint, ForceSeries, WakeProfile};

pub const SURFACE_HEADER: &str = "patch,x_over_c,cp,cf,yplus,xplus";
pub const WAKE_HEADER: &str = "y_over_c,u_over_uinf,u_rms,tke";
pub const BENCH_HEADER: &str = "formulation,cfl,dt,sec_per_iter,hours_per_ctu,stable";

/// forces.csv header: time, totals, then cl_<patch>, cd_<patch> per patch.
pub fn forces_header(patches: &[String]) -> String {
    let mut h = String::from("time,cl_total,cd_total");
    for p in patches {
        h.push_str(&format!(",cl_{p},cd_{p}"));
    }
    h
}

/// psd.csv header: st, psd_total, then psd_<patch> per patch.
pub fn psd_header(patches: &[String]) -> String {
    let mut h = String::from("st,psd_total");
    for p in patches {
        h.push_str(&format!(",psd_{p}"));
    }
    h
}

pub struct ForcesWriter {
    file: std::io::BufWriter<std::fs::File>,
}

impl ForcesWriter {
    pub fn create(path: &Path, patches: &[String]) -> Result<Self> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "{}", forces_header(patches))?;
        Ok(Self { file })
    }

    pub fn append(
        &mut self,
        time: f64,
        forces: &dgles::stats::ForceCoefficients,
    ) -> Result<()> {
        write!(
            self.file,
            "{:.17e},{:.17e},{:.17e}",
            time, forces.cl_total, forces.cd_total
        )?;
        for pf in &forces.per_patch {
            write!(self.file, ",{:.17e},{:.17e}", pf[0], pf[1])?;
        }
        writeln!(self.file)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.file.flush()?;
        Ok(())
    }
}

/// Read forces.csv back: (patches, series).
pub fn read_forces(path: &Path) -> Result<ForceSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{path:?} is empty")))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.get(0) != Some(&"time") || cols.get(1) != Some(&"cl_total") || cols.get(2) != Some(&"cd_total")
    {
        return Err(Error::Config(format!(
            "{path:?} does not look like a forces file (header `{header}`)"
        )));
    }
    let mut patches = Vec::new();
    let mut c = 3;
    while c + 1 < cols.len() + 1 && c < cols.len() {
        let name = cols[c]
            .strip_prefix("cl_")
            .ok_or_else(|| Error::Config(format!("unexpected column `{}`", cols[c])))?;
        if cols.get(c + 1) != Some(&format!("cd_{name}").as_str()) {
            return Err(Error::Config(format!(
                "column `{}` is not followed by its drag column",
                cols[c]
            )));
        }
        patches.push(name.to_string());
        c += 2;
    }
    let mut series = ForceSeries::new(patches.clone());
    for (lno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::Config(format!("{path:?} line {}: bad number `{t}`", lno + 2))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 3 + 2 * patches.len() {
            return Err(Error::Config(format!(
                "{path:?} line {}: expected {} columns, found {}",
                lno + 2,
                3 + 2 * patches.len(),
                vals.len()
            )));
        }
        series.times.push(vals[0]);
        series.cl_total.push(vals[1]);
        series.cd_total.push(vals[2]);
        for (i, _) in patches.iter().enumerate() {
            series.cl_patch[i].push(vals[3 + 2 * i]);
            series.cd_patch[i].push(vals[4 + 2 * i]);
        }
    }
    Ok(series)
}

/// surface.csv: one row per spanwise-averaged chordwise sample.
pub fn write_surface_csv(
    path: &Path,
    rows: &[(String, Vec<(f64, f64)>, Vec<CfPoint>)],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(SURFACE_HEADER);
    out.push('\n');
    for (patch, cp, cf) in rows {
        debug_assert_eq!(cp.len(), cf.len());
        for (c, f) in cp.iter().zip(cf.iter()) {
            out.push_str(&format!(
                "{patch},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                c.0, c.1, f.cf, f.yplus, f.xplus
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// wake_x<station>.csv, one file per station.
pub fn write_wake_csv(dir: &Path, profile: &WakeProfile) -> Result<std::path::PathBuf> {
    // trim trailing zeros so x/c = 2.0 names wake_x2.csv and 2.5 wake_x2.5.csv
    let mut tag = format!("{}", profile.station);
    if tag.contains('.') {
        tag = tag.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    let path = dir.join(format!("wake_x{tag}.csv"));
    let mut out = String::new();
    out.push_str(WAKE_HEADER);
    out.push('\n');
    for row in &profile.rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            row.y_over_c, row.u_over_uinf, row.u_rms, row.tke
        ));
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

/// psd.csv with aligned per-patch spectra.
pub fn write_psd_csv(
    path: &Path,
    patches: &[String],
    strouhal: &[f64],
    total: &[f64],
    per_patch: &[Vec<f64>],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&psd_header(patches));
    out.push('\n');
    for (k, &st) in strouhal.iter().enumerate() {
        out.push_str(&format!("{:.17e},{:.17e}", st, total[k]));
        for p in per_patch {
            out.push_str(&format!(",{:.17e}", p[k]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// bench.csv, one row per tested rung.
pub fn write_bench_csv(path: &Path, reports: &[dgles::bench::RampReport]) -> Result<()> {
    let mut out = String::new();
    out.push_str(BENCH_HEADER);
    out.push('\n');
    for report in reports {
        for rung in &report.rungs {
            out.push_str(&format!(
                "{},{:.6},{:.17e},{},{},{}\n",
                report.formulation.name(),
                rung.cfl,
                rung.dt,
                rung.sec_per_iter
                    .map_or(String::from("nan"), |s| format!("{s:.9e}")),
                rung.sec_per_iter
                    .map_or(String::from("nan"), |s| format!("{:.9e}", s / rung.dt / 3600.0)),
                rung.stable
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
