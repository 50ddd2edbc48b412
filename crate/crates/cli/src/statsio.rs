//! Binary persistence of finalized statistics between `run` and `post`:
//! text header + little-endian f64 payload, same conventions as the mesh and
//! checkpoint formats.

use std::io::Write;
use std::path::Path;

use dgles::error::{Error, Result};
use dgles::mesh::BcKind;
use dgles::stats::{SurfaceNode, SurfaceRecord, VelocityStats};

pub fn write_volume_stats(path: &Path, stats: &VelocityStats) -> Result<()> {
    let n = stats.tke.len();
    let mut out = Vec::with_capacity(n * 7 * 8 + 64);
    writeln!(out, "dgvs 1").unwrap();
    writeln!(out, "count {}", stats.count).unwrap();
    writeln!(out, "nodes {n}").unwrap();
    writeln!(out, "binary").unwrap();
    let mut push = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    for g in 0..n {
        for c in 0..3 {
            push(stats.mean[g][c]);
        }
        for c in 0..3 {
            push(stats.rms[g][c]);
        }
        push(stats.tke[g]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_volume_stats(path: &Path) -> Result<VelocityStats> {
    let data = std::fs::read(path)?;
    let (header, payload) = split_header(&data, 4, path)?;
    if header[0] != "dgvs 1" {
        return Err(Error::Config(format!("{path:?}: bad volume-stats header")));
    }
    let count: u64 = parse_kv(&header[1], "count", path)?;
    let n: usize = parse_kv(&header[2], "nodes", path)?;
    let values = read_f64s(payload, n * 7, path)?;
    let mut stats = VelocityStats {
        count,
        mean: Vec::with_capacity(n),
        rms: Vec::with_capacity(n),
        tke: Vec::with_capacity(n),
    };
    for g in 0..n {
        let b = g * 7;
        stats.mean.push([values[b], values[b + 1], values[b + 2]]);
        stats.rms.push([values[b + 3], values[b + 4], values[b + 5]]);
        stats.tke.push(values[b + 6]);
    }
    Ok(stats)
}

const NODE_F64S: usize = 26;

pub fn write_surface_stats(path: &Path, records: &[SurfaceRecord]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "dgss 1").unwrap();
    writeln!(out, "patches {}", records.len()).unwrap();
    for r in records {
        writeln!(out, "{} {} {}", r.patch, r.kind.name(), r.nodes.len()).unwrap();
    }
    writeln!(out, "binary").unwrap();
    for r in records {
        for n in &r.nodes {
            let fields: Vec<f64> = n
                .xyz
                .iter()
                .chain(n.normal.iter())
                .copied()
                .chain([n.weight, n.y_ref])
                .chain(n.spacing)
                .chain(n.tangents[0])
                .chain(n.tangents[1])
                .chain([n.p])
                .chain(n.grad)
                .collect();
            debug_assert_eq!(fields.len(), NODE_F64S);
            for v in fields {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_surface_stats(path: &Path) -> Result<Vec<SurfaceRecord>> {
    let data = std::fs::read(path)?;
    let mut lines = Vec::new();
    let mut offset = 0usize;
    loop {
        let rest = &data[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Config(format!("{path:?}: truncated header")))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::Config(format!("{path:?}: non-UTF-8 header")))?;
        offset += end + 1;
        if line == "binary" {
            break;
        }
        lines.push(line.to_string());
    }
    if lines.first().map(String::as_str) != Some("dgss 1") {
        return Err(Error::Config(format!("{path:?}: bad surface-stats header")));
    }
    let n_patches: usize = parse_kv(&lines[1], "patches", path)?;
    let mut records = Vec::with_capacity(n_patches);
    let mut node_counts = Vec::with_capacity(n_patches);
    for i in 0..n_patches {
        let parts: Vec<&str> = lines[2 + i].split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "{path:?}: malformed patch line `{}`",
                lines[2 + i]
            )));
        }
        records.push(SurfaceRecord {
            patch: parts[0].to_string(),
            kind: BcKind::parse(parts[1])?,
            nodes: Vec::new(),
        });
        node_counts.push(parts[2].parse::<usize>().map_err(|_| {
            Error::Config(format!("{path:?}: bad node count `{}`", parts[2]))
        })?);
    }
    let total: usize = node_counts.iter().sum();
    let values = read_f64s(&data[offset..], total * NODE_F64S, path)?;
    let mut cursor = 0;
    for (r, &count) in records.iter_mut().zip(&node_counts) {
        for _ in 0..count {
            let v = &values[cursor..cursor + NODE_F64S];
            cursor += NODE_F64S;
            r.nodes.push(SurfaceNode {
                xyz: [v[0], v[1], v[2]],
                normal: [v[3], v[4], v[5]],
                weight: v[6],
                y_ref: v[7],
                spacing: [v[8], v[9]],
                tangents: [[v[10], v[11], v[12]], [v[13], v[14], v[15]]],
                p: v[16],
                grad: v[17..26].try_into().unwrap(),
            });
        }
    }
    Ok(records)
}

fn split_header<'a>(
    data: &'a [u8],
    n_lines: usize,
    path: &Path,
) -> Result<(Vec<String>, &'a [u8])> {
    let mut lines = Vec::with_capacity(n_lines);
    let mut offset = 0usize;
    for _ in 0..n_lines {
        let rest = &data[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Config(format!("{path:?}: truncated header")))?;
        lines.push(
            std::str::from_utf8(&rest[..end])
                .map_err(|_| Error::Config(format!("{path:?}: non-UTF-8 header")))?
                .to_string(),
        );
        offset += end + 1;
    }
    Ok((lines, &data[offset..]))
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str, path: &Path) -> Result<T> {
    let (k, v) = line
        .split_once(' ')
        .ok_or_else(|| Error::Config(format!("{path:?}: malformed `{line}`")))?;
    if k != key {
        return Err(Error::Config(format!(
            "{path:?}: expected `{key}`, found `{k}`"
        )));
    }
    v.parse()
        .map_err(|_| Error::Config(format!("{path:?}: bad value in `{line}`")))
}

fn read_f64s(payload: &[u8], count: usize, path: &Path) -> Result<Vec<f64>> {
    if payload.len() != count * 8 {
        return Err(Error::Config(format!(
            "{path:?}: payload is {} bytes, expected {}",
            payload.len(),
            count * 8
        )));
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
