//! Run configuration: a structured TOML file with nested sections. Unknown
//! keys are hard errors so typos cannot silently change long runs.

use serde::{Deserialize, Serialize};

use dgles::error::{Error, Result};
use dgles::mesh::{self, BcKind, Mesh};
use dgles::physics::{GasModel, InterfaceScheme};
use dgles::solver::{BcData, Formulation, SchemeConfig};
use dgles::spectral::{PsdConfig, WindowKind};
use dgles::stats::FlowReference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Initial condition: tgv | uniform | density_wave | couette.
    pub case: String,
    /// eles | iles (or the long names).
    pub formulation: String,
    pub order: usize,
    #[serde(default)]
    pub deterministic: bool,
    /// Worker threads; 0 picks the machine default.
    #[serde(default)]
    pub threads: usize,
    /// Seed for any configured perturbations (none in the built-in cases).
    #[serde(default)]
    pub seed: u64,
    pub gas: GasSection,
    pub mesh: MeshSection,
    pub run: RunSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub forces: ForcesSection,
    #[serde(default)]
    pub wake: Option<WakeSection>,
    #[serde(default)]
    pub psd: PsdSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default, rename = "bc")]
    pub bc: Vec<BcSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub mach: f64,
    /// Omit for inviscid flow.
    #[serde(default)]
    pub reynolds: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_prandtl")]
    pub prandtl: f64,
}

fn default_gamma() -> f64 {
    1.4
}
fn default_prandtl() -> f64 {
    0.72
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// tgv | box | deformed_box | channel | file.
    pub generate: String,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "default_cells")]
    pub cells: [usize; 3],
    #[serde(default = "default_interval")]
    pub x: [f64; 2],
    #[serde(default = "default_interval")]
    pub y: [f64; 2],
    #[serde(default = "default_interval")]
    pub z: [f64; 2],
    #[serde(default)]
    pub periodic: [bool; 3],
    #[serde(default = "default_ngeo")]
    pub n_geo: usize,
    #[serde(default)]
    pub amplitude: f64,
}

fn default_cells() -> [usize; 3] {
    [4, 4, 4]
}
fn default_interval() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_ngeo() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Fixed time step; overrides the CFL estimate when set.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Run length in convective time units (CTU = t U / c).
    pub t_end_ctu: f64,
    #[serde(default)]
    pub checkpoint_every_ctu: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Interface flux override: central_kg | kg_lax_friedrichs | upwind.
    #[serde(default)]
    pub interface: Option<String>,
    /// Vreman model constant (explicit LES).
    #[serde(default = "default_c_vreman")]
    pub c_vreman: f64,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_output_dir() -> String {
    "out".to_string()
}
fn default_c_vreman() -> f64 {
    dgles::physics::C_VREMAN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    /// Statistics window start, in CTU (defaults to 40 CTU of development).
    #[serde(default = "default_stats_start")]
    pub start_ctu: f64,
    /// Statistics window length, in CTU (defaults to an 8 CTU window).
    #[serde(default = "default_stats_window")]
    pub window_ctu: f64,
    #[serde(default)]
    pub enabled: bool,
}

fn default_stats_start() -> f64 {
    40.0
}
fn default_stats_window() -> f64 {
    8.0
}

impl Default for StatsSection {
    fn default() -> Self {
        Self {
            start_ctu: default_stats_start(),
            window_ctu: default_stats_window(),
            enabled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default = "one")]
    pub u_inf: f64,
    #[serde(default = "one")]
    pub rho_inf: f64,
    #[serde(default = "one")]
    pub chord: f64,
    /// Reference area (chord x span convention).
    #[serde(default = "one")]
    pub area: f64,
    #[serde(default = "default_drag_axis")]
    pub drag_axis: [f64; 3],
    #[serde(default = "default_lift_axis")]
    pub lift_axis: [f64; 3],
}

fn one() -> f64 {
    1.0
}
fn default_drag_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_lift_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            u_inf: 1.0,
            rho_inf: 1.0,
            chord: 1.0,
            area: 1.0,
            drag_axis: default_drag_axis(),
            lift_axis: default_lift_axis(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcesSection {
    /// Wall patches entering force integration and surface statistics.
    #[serde(default)]
    pub patches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WakeSection {
    pub stations: Vec<f64>,
    pub z: f64,
    pub y_range: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdSection {
    #[serde(default = "default_segment")]
    pub segment: usize,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    #[serde(default = "default_window")]
    pub window: String,
}

fn default_segment() -> usize {
    62_500
}
fn default_overlap() -> f64 {
    0.5
}
fn default_window() -> String {
    "hamming".to_string()
}

impl Default for PsdSection {
    fn default() -> Self {
        Self {
            segment: default_segment(),
            overlap: default_overlap(),
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_bench_start")]
    pub start: f64,
    #[serde(default = "default_bench_increment")]
    pub increment: f64,
    #[serde(default = "default_probe_steps")]
    pub probe_steps: usize,
    #[serde(default = "default_max_rungs")]
    pub max_rungs: usize,
}

fn default_bench_start() -> f64 {
    0.5
}
fn default_bench_increment() -> f64 {
    0.1
}
fn default_probe_steps() -> usize {
    100
}
fn default_max_rungs() -> usize {
    200
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            start: default_bench_start(),
            increment: default_bench_increment(),
            probe_steps: default_probe_steps(),
            max_rungs: default_max_rungs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub tag: String,
    /// inflow | outflow | free_slip_wall | no_slip_wall | moving_wall.
    pub kind: String,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub velocity: Option<[f64; 3]>,
    #[serde(default)]
    pub pressure: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization")
    }

    pub fn validate(&self) -> Result<()> {
        self.formulation()?;
        self.gas_model()?;
        if self.order < 1 {
            return Err(Error::Config("run.order must be at least 1".into()));
        }
        if !(self.run.t_end_ctu >= 0.0) {
            return Err(Error::Config("run.t_end_ctu must be non-negative".into()));
        }
        if self.stats.enabled {
            let end = self.stats.start_ctu + self.stats.window_ctu;
            if self.stats.start_ctu < 0.0 || end > self.run.t_end_ctu + 1e-12 {
                return Err(Error::Config(format!(
                    "statistics window [{}, {end}] CTU lies outside the run window [0, {}]",
                    self.stats.start_ctu, self.run.t_end_ctu
                )));
            }
        }
        if let Some(w) = &self.wake {
            if w.samples < 2 {
                return Err(Error::Config("wake.samples must be at least 2".into()));
            }
        }
        if !(0.0..1.0).contains(&self.psd.overlap) {
            return Err(Error::Config("psd.overlap must lie in [0, 1)".into()));
        }
        WindowKind::parse(&self.psd.window)?;
        for bc in &self.bc {
            parse_bc_kind(&bc.kind)?;
        }
        if let Some(i) = &self.run.interface {
            parse_interface(i)?;
        }
        match self.case.as_str() {
            "tgv" | "uniform" | "density_wave" | "couette" => {}
            other => {
                return Err(Error::Config(format!(
                    "unknown case `{other}` (tgv, uniform, density_wave, couette)"
                )))
            }
        }
        Ok(())
    }

    pub fn formulation(&self) -> Result<Formulation> {
        match self.formulation.as_str() {
            "eles" => Ok(Formulation::ExplicitLesVremanGauss),
            "iles" => Ok(Formulation::ImplicitLesKgGaussLobatto),
            other => Formulation::parse(other),
        }
    }

    pub fn gas_model(&self) -> Result<GasModel> {
        GasModel::new(
            self.gas.mach,
            self.gas.reynolds,
            self.gas.gamma,
            self.gas.prandtl,
        )
    }

    pub fn flow_reference(&self, gas: &GasModel) -> FlowReference {
        FlowReference {
            rho_inf: self.reference.rho_inf,
            u_inf: self.reference.u_inf,
            p_inf: gas.p_inf(),
            chord: self.reference.chord,
            area: self.reference.area,
            drag_axis: self.reference.drag_axis,
            lift_axis: self.reference.lift_axis,
        }
    }

    /// One convective time unit in solver time: CTU = t U / c, so
    /// t = CTU * c / U.
    pub fn ctu_to_time(&self, ctu: f64) -> f64 {
        ctu * self.reference.chord / self.reference.u_inf
    }

    /// Build the mesh described by the `[mesh]` section, applying boundary
    /// kind overrides from the `[[bc]]` entries.
    pub fn build_mesh(&self) -> Result<Mesh> {
        let m = &self.mesh;
        let extents = [m.x, m.y, m.z];
        let mut mesh = match m.generate.as_str() {
            "tgv" => mesh::tgv_box_mesh(m.cells[0], m.n_geo)?,
            "box" => mesh::box_mesh(m.cells, extents, m.periodic, m.n_geo)?,
            "deformed_box" => {
                mesh::deformed_box_mesh(m.cells, extents, m.periodic, m.n_geo, m.amplitude)?
            }
            "channel" => mesh::channel_mesh(m.cells, extents, m.n_geo)?,
            "file" => {
                let path = m.path.as_ref().ok_or_else(|| {
                    Error::Config("mesh.generate = \"file\" requires mesh.path".into())
                })?;
                mesh::read_mesh(std::path::Path::new(path))?
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown mesh generator `{other}` (tgv, box, deformed_box, channel, file)"
                )))
            }
        };
        for bc in &self.bc {
            let kind = parse_bc_kind(&bc.kind)?;
            mesh.set_boundary_kind(&bc.tag, kind)?;
        }
        Ok(mesh)
    }

    /// Scheme configuration with the resolved boundary table.
    pub fn scheme(&self) -> Result<SchemeConfig> {
        let formulation = self.formulation()?;
        let gas = self.gas_model()?;
        let mut scheme = SchemeConfig::new(formulation, gas).with_cfl(self.run.cfl);
        scheme.c_vreman = self.run.c_vreman;
        scheme.fixed_dt = self.run.dt;
        if let Some(i) = &self.run.interface {
            scheme.interface = parse_interface(i)?;
        }
        for bc in &self.bc {
            let kind = parse_bc_kind(&bc.kind)?;
            let data = match kind {
                BcKind::Inflow => BcData::Inflow {
                    rho: bc.rho.unwrap_or(1.0),
                    velocity: bc.velocity.unwrap_or([1.0, 0.0, 0.0]),
                    pressure: bc.pressure.unwrap_or_else(|| gas.p_inf()),
                },
                BcKind::Outflow => BcData::Outflow {
                    pressure: bc.pressure.unwrap_or_else(|| gas.p_inf()),
                },
                BcKind::FreeSlipWall => BcData::FreeSlip,
                BcKind::NoSlipWall => BcData::NoSlip,
                BcKind::MovingWall => BcData::MovingWall {
                    velocity: bc.velocity.unwrap_or([1.0, 0.0, 0.0]),
                },
                BcKind::Periodic => {
                    return Err(Error::Config(format!(
                        "boundary tag `{}` cannot be assigned Periodic through the config",
                        bc.tag
                    )))
                }
            };
            scheme = scheme.with_bc(bc.tag.clone(), data);
        }
        Ok(scheme)
    }

    pub fn psd_config(&self, dt: f64) -> Result<PsdConfig> {
        let cfg = PsdConfig {
            segment_length: self.psd.segment,
            overlap_fraction: self.psd.overlap,
            window: WindowKind::parse(&self.psd.window)?,
            dt,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Initial condition selected by `case`.
    pub fn initial_condition(&self, gas: &GasModel) -> Result<Box<dyn Fn([f64; 3]) -> dgles::physics::State>> {
        use dgles::solver as sv;
        let gas = *gas;
        Ok(match self.case.as_str() {
            "tgv" => Box::new(sv::taylor_green(gas)),
            "uniform" => Box::new(sv::uniform_state(
                gas,
                1.0,
                [self.reference.u_inf, 0.0, 0.0],
                gas.p_inf(),
            )),
            "density_wave" => Box::new(sv::density_wave(
                gas,
                0.1,
                std::f64::consts::TAU / (self.mesh.x[1] - self.mesh.x[0]),
                [self.reference.u_inf, 0.0, 0.0],
                1.0 / gas.gamma,
            )),
            "couette" => {
                let height = self.mesh.y[1] - self.mesh.y[0];
                let u_wall = self
                    .bc
                    .iter()
                    .find(|b| b.kind == "moving_wall")
                    .and_then(|b| b.velocity)
                    .map(|v| v[0])
                    .unwrap_or(1.0);
                Box::new(sv::couette_profile(gas, u_wall, height))
            }
            other => return Err(Error::Config(format!("unknown case `{other}`"))),
        })
    }
}

pub fn parse_bc_kind(s: &str) -> Result<BcKind> {
    Ok(match s {
        "inflow" => BcKind::Inflow,
        "outflow" => BcKind::Outflow,
        "free_slip_wall" => BcKind::FreeSlipWall,
        "no_slip_wall" => BcKind::NoSlipWall,
        "moving_wall" => BcKind::MovingWall,
        other => {
            return Err(Error::UnknownBcTag {
                tag: other.to_string(),
            })
        }
    })
}

pub fn parse_interface(s: &str) -> Result<InterfaceScheme> {
    Ok(match s {
        "central_kg" => InterfaceScheme::CentralKG,
        "kg_lax_friedrichs" => InterfaceScheme::KGLaxFriedrichs,
        "upwind" => InterfaceScheme::Upwind,
        other => {
            return Err(Error::Config(format!(
                "unknown interface scheme `{other}` (central_kg, kg_lax_friedrichs, upwind)"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE: &str = r#"
case = "tgv"
formulation = "iles"
order = 3

[gas]
mach = 0.1
reynolds = 1600.0

[mesh]
generate = "tgv"
cells = [4, 4, 4]

[run]
cfl = 0.4
t_end_ctu = 1.0

[stats]
enabled = true
start_ctu = 0.2
window_ctu = 0.5
"#;

    #[test]
    fn round_trip_is_identity() {
        let a = RunConfig::parse(EXAMPLE).unwrap();
        let serialized = a.to_toml();
        let b = RunConfig::parse(&serialized).unwrap();
        assert_eq!(a, b);
        // and a second cycle is stable
        assert_eq!(serialized, b.to_toml());
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let bad = EXAMPLE.replace("cfl = 0.4", "cfl = 0.4\nturbo_mode = true");
        match RunConfig::parse(&bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("turbo_mode"), "{msg}"),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn stats_window_must_fit_run_window() {
        let bad = EXAMPLE.replace("start_ctu = 0.2", "start_ctu = 0.9");
        match RunConfig::parse(&bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("window")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn formulation_shorthand() {
        let cfg = RunConfig::parse(EXAMPLE).unwrap();
        assert_eq!(
            cfg.formulation().unwrap(),
            Formulation::ImplicitLesKgGaussLobatto
        );
        let eles = EXAMPLE.replace("\"iles\"", "\"eles\"");
        assert_eq!(
            RunConfig::parse(&eles).unwrap().formulation().unwrap(),
            Formulation::ExplicitLesVremanGauss
        );
    }

    #[test]
    fn bad_bc_kind_names_the_tag() {
        let bad = format!("{EXAMPLE}\n[[bc]]\ntag = \"xmin\"\nkind = \"sticky\"\n");
        match RunConfig::parse(&bad) {
            Err(Error::UnknownBcTag { tag }) => assert_eq!(tag, "sticky"),
            other => panic!("expected UnknownBcTag, got {other:?}"),
        }
    }
}
