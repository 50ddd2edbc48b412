//! Checkpoint files: text header + little-endian binary nodal state, so a
//! write/read cycle is bit-exact and restarts reproduce unbroken runs
//! step for step in deterministic mode.

use std::path::Path;

use super::{Formulation, SolutionField, Solver};
use crate::error::{Error, Result};

/// Header of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub formulation: Formulation,
    pub order: usize,
    pub n_elem: usize,
    pub step: usize,
    pub mesh_hash: u64,
    pub time: f64,
}

const MAGIC: &str = "dgchk";
const VERSION: u64 = 1;

pub fn write_checkpoint(
    path: &Path,
    solver: &Solver,
    q: &SolutionField,
    step: usize,
    time: f64,
) -> Result<()> {
    use std::io::Write as _;
    let mut out = Vec::with_capacity(q.data.len() * 8 + 256);
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "formulation {}", solver.scheme.formulation.name()).unwrap();
    writeln!(out, "order {}", q.order).unwrap();
    writeln!(out, "elements {}", q.n_elem).unwrap();
    writeln!(out, "step {step}").unwrap();
    writeln!(out, "mesh {}", solver.mesh_hash).unwrap();
    writeln!(out, "binary").unwrap();
    out.extend_from_slice(&time.to_le_bytes());
    for v in &q.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointMeta, SolutionField)> {
    let data = std::fs::read(path)?;
    let mut offset = 0usize;
    let mut line = || -> Result<&str> {
        let rest = &data[offset..];
        let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| {
            Error::Config(format!("checkpoint {path:?}: truncated header"))
        })?;
        let s = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::Config(format!("checkpoint {path:?}: non-UTF-8 header")))?;
        offset += end + 1;
        Ok(s)
    };
    let header = line()?;
    if header != format!("{MAGIC} {VERSION}") {
        return Err(Error::Config(format!(
            "checkpoint {path:?}: bad header `{header}`"
        )));
    }
    let mut field = |key: &str| -> Result<String> {
        let l = line()?;
        let (k, v) = l
            .split_once(' ')
            .ok_or_else(|| Error::Config(format!("checkpoint {path:?}: malformed line `{l}`")))?;
        if k != key {
            return Err(Error::Config(format!(
                "checkpoint {path:?}: expected `{key}`, found `{k}`"
            )));
        }
        Ok(v.to_string())
    };
    let formulation = Formulation::parse(&field("formulation")?)?;
    let order: usize = field("order")?
        .parse()
        .map_err(|_| Error::Config("checkpoint: bad order".into()))?;
    let n_elem: usize = field("elements")?
        .parse()
        .map_err(|_| Error::Config("checkpoint: bad element count".into()))?;
    let step: usize = field("step")?
        .parse()
        .map_err(|_| Error::Config("checkpoint: bad step".into()))?;
    let mesh_hash: u64 = field("mesh")?
        .parse()
        .map_err(|_| Error::Config("checkpoint: bad mesh hash".into()))?;
    let sep = line()?;
    if sep != "binary" {
        return Err(Error::Config(format!(
            "checkpoint {path:?}: expected `binary`, found `{sep}`"
        )));
    }
    let np = order + 1;
    let n_values = n_elem * np * np * np * 5;
    let need = (n_values + 1) * 8;
    if data.len() - offset != need {
        return Err(Error::Config(format!(
            "checkpoint {path:?}: payload is {} bytes, expected {need}",
            data.len() - offset
        )));
    }
    let time = f64::from_le_bytes(data[offset..offset + 8].try_into().unwrap());
    offset += 8;
    let values: Vec<f64> = data[offset..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((
        CheckpointMeta {
            formulation,
            order,
            n_elem,
            step,
            mesh_hash,
            time,
        },
        SolutionField {
            order,
            n_elem,
            data: values,
        },
    ))
}

/// Check that a checkpoint belongs to this solver setup.
pub fn checkpoint_compatible(meta: &CheckpointMeta, solver: &Solver) -> Result<()> {
    if meta.formulation != solver.scheme.formulation {
        return Err(Error::Config(format!(
            "checkpoint formulation {} does not match run formulation {}",
            meta.formulation.name(),
            solver.scheme.formulation.name()
        )));
    }
    if meta.order != solver.order() {
        return Err(Error::Config(format!(
            "checkpoint order {} does not match run order {}",
            meta.order,
            solver.order()
        )));
    }
    if meta.mesh_hash != solver.mesh_hash {
        return Err(Error::Config(
            "checkpoint mesh hash does not match the run mesh".into(),
        ));
    }
    Ok(())
}
