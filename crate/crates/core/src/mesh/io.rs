//! Mesh file format: a small self-describing container with a text header and
//! little-endian binary payloads, so round trips are bit-exact.
//!
//! Layout:
//!
//! ```text
//! dgmesh 1
//! elements <count>
//! ngeo <geometry order>
//! tags <count>
//! <name> <kind>            one line per boundary tag
//! faces <count>
//! binary
//! <geometry>  elements x (ngeo+1)^3 x 3 f64, little endian
//! <faces>     7 x i64 per face: left, left_side, right | -1,
//!             right_side | -1, orientation, bc | -1, periodic flag
//! ```

use super::{BcKind, BcTag, Face, Mesh};
use crate::error::{Error, Result};
use std::io::Write as _;
use std::path::Path;

const MAGIC: &str = "dgmesh";
const VERSION: u64 = 1;

pub fn write_mesh_bytes(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::new();
    let npg = mesh.n_geo + 1;
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "elements {}", mesh.n_elements()).unwrap();
    writeln!(out, "ngeo {}", mesh.n_geo).unwrap();
    writeln!(out, "tags {}", mesh.bc_tags.len()).unwrap();
    for tag in &mesh.bc_tags {
        writeln!(out, "{} {}", tag.name, tag.kind.name()).unwrap();
    }
    writeln!(out, "faces {}", mesh.faces.len()).unwrap();
    writeln!(out, "binary").unwrap();
    for elem in &mesh.geometry {
        debug_assert_eq!(elem.len(), npg * npg * npg);
        for node in elem {
            for c in node {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    for f in &mesh.faces {
        let (re, rs) = f.right.map_or((-1i64, -1i64), |(e, s)| (e as i64, s as i64));
        let rec: [i64; 7] = [
            f.left as i64,
            f.left_side as i64,
            re,
            rs,
            f.orientation as i64,
            f.bc.map_or(-1, |b| b as i64),
            f.periodic as i64,
        ];
        for v in rec {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh_bytes(mesh))?;
    Ok(())
}

/// FNV-1a hash of the canonical mesh serialization; used to guard restart and
/// benchmark comparisons against mismatched meshes.
pub fn mesh_hash(mesh: &Mesh) -> u64 {
    let bytes = write_mesh_bytes(mesh);
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

struct Reader<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, detail: impl Into<String>) -> Error {
        Error::MeshParse {
            offset: self.offset as u64,
            detail: detail.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        let start = self.offset;
        let rest = &self.data[start.min(self.data.len())..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| self.err("unexpected end of file while reading header line"))?;
        self.offset = start + end + 1;
        std::str::from_utf8(&rest[..end])
            .map(|s| s.trim_end_matches('\r'))
            .map_err(|_| Error::MeshParse {
                offset: start as u64,
                detail: "header line is not valid UTF-8".into(),
            })
    }

    fn keyed_count(&mut self, key: &str) -> Result<usize> {
        let start = self.offset;
        let line = self.line()?;
        let mut it = line.split_whitespace();
        let k = it.next().unwrap_or("");
        if k != key {
            return Err(Error::MeshParse {
                offset: start as u64,
                detail: format!("expected `{key} <count>`, found `{line}`"),
            });
        }
        it.next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::MeshParse {
                offset: start as u64,
                detail: format!("malformed count in `{line}`"),
            })
    }

    fn f64_array(&mut self, count: usize) -> Result<Vec<f64>> {
        let need = count * 8;
        if self.data.len() < self.offset + need {
            return Err(self.err(format!(
                "unexpected end of file: need {need} bytes of f64 data, have {}",
                self.data.len() - self.offset
            )));
        }
        let out = self.data[self.offset..self.offset + need]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.offset += need;
        Ok(out)
    }

    fn i64_array(&mut self, count: usize) -> Result<Vec<i64>> {
        let need = count * 8;
        if self.data.len() < self.offset + need {
            return Err(self.err(format!(
                "unexpected end of file: need {need} bytes of face records, have {}",
                self.data.len() - self.offset
            )));
        }
        let out = self.data[self.offset..self.offset + need]
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.offset += need;
        Ok(out)
    }
}

pub fn read_mesh_bytes(data: &[u8]) -> Result<Mesh> {
    let mut r = Reader { data, offset: 0 };
    let header = r.line()?;
    let mut it = header.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(Error::MeshParse {
            offset: 0,
            detail: format!("bad magic, expected `{MAGIC}`"),
        });
    }
    match it.next().and_then(|v| v.parse::<u64>().ok()) {
        Some(VERSION) => {}
        Some(v) => {
            return Err(Error::MeshParse {
                offset: 0,
                detail: format!("unsupported format version {v}, expected {VERSION}"),
            })
        }
        None => {
            return Err(Error::MeshParse {
                offset: 0,
                detail: "missing format version".into(),
            })
        }
    }
    let n_elem = r.keyed_count("elements")?;
    let n_geo = r.keyed_count("ngeo")?;
    if n_geo == 0 || n_geo > crate::basis::MAX_ORDER {
        return Err(r.err(format!("geometry order {n_geo} out of range")));
    }
    if n_elem == 0 || n_elem > 100_000_000 {
        return Err(r.err(format!("element count {n_elem} out of range")));
    }
    let n_tags = r.keyed_count("tags")?;
    let mut bc_tags = Vec::with_capacity(n_tags);
    for _ in 0..n_tags {
        let start = r.offset;
        let line = r.line()?;
        let mut it = line.split_whitespace();
        let (name, kind) = (it.next(), it.next());
        match (name, kind) {
            (Some(name), Some(kind)) => bc_tags.push(BcTag {
                name: name.to_string(),
                kind: BcKind::parse(kind)?,
            }),
            _ => {
                return Err(Error::MeshParse {
                    offset: start as u64,
                    detail: format!("malformed tag line `{line}`"),
                })
            }
        }
    }
    let n_faces = r.keyed_count("faces")?;
    let start = r.offset;
    if r.line()? != "binary" {
        return Err(Error::MeshParse {
            offset: start as u64,
            detail: "expected `binary` separator".into(),
        });
    }

    let npg3 = (n_geo + 1) * (n_geo + 1) * (n_geo + 1);
    let mut geometry = Vec::with_capacity(n_elem);
    for _ in 0..n_elem {
        let flat = r.f64_array(npg3 * 3)?;
        geometry.push(
            flat.chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect::<Vec<_>>(),
        );
    }
    let mut faces = Vec::with_capacity(n_faces);
    for fi in 0..n_faces {
        let rec_offset = r.offset;
        let rec = r.i64_array(7)?;
        let to_usize = |v: i64, what: &str| -> Result<usize> {
            usize::try_from(v).map_err(|_| Error::MeshParse {
                offset: rec_offset as u64,
                detail: format!("face {fi}: negative {what}"),
            })
        };
        let right = if rec[2] < 0 {
            None
        } else {
            Some((to_usize(rec[2], "right element")?, rec[3] as u8))
        };
        faces.push(Face {
            left: to_usize(rec[0], "left element")?,
            left_side: rec[1] as u8,
            right,
            orientation: rec[4] as u8,
            bc: if rec[5] < 0 {
                None
            } else {
                Some(to_usize(rec[5], "bc index")?)
            },
            periodic: rec[6] != 0,
        });
    }
    if r.offset != data.len() {
        return Err(r.err(format!(
            "{} trailing bytes after mesh payload",
            data.len() - r.offset
        )));
    }
    let mut mesh = Mesh {
        n_geo,
        geometry,
        faces,
        bc_tags,
        elem_faces: Vec::new(),
    };
    mesh.rebuild_adjacency()?;
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let data = std::fs::read(path)?;
    read_mesh_bytes(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, deformed_box_mesh};

    #[test]
    fn round_trip_is_identity() {
        let mesh = box_mesh([4, 4, 4], [[0.0, 1.0]; 3], [true, false, true], 2).unwrap();
        let bytes = write_mesh_bytes(&mesh);
        let back = read_mesh_bytes(&bytes).unwrap();
        assert_eq!(mesh, back);
        // and the serialization itself is stable
        assert_eq!(bytes, write_mesh_bytes(&back));
    }

    #[test]
    fn round_trip_curved_via_file() {
        let mesh = deformed_box_mesh([2, 2, 2], [[0.0, 1.0]; 3], [true; 3], 3, 0.05).unwrap();
        let dir = std::env::temp_dir().join("dgles_mesh_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("curved.dgm");
        write_mesh(&mesh, &path).unwrap();
        let back = read_mesh(&path).unwrap();
        assert_eq!(mesh, back);
        assert_eq!(mesh_hash(&mesh), mesh_hash(&back));
    }

    #[test]
    fn truncated_file_names_offset() {
        let mesh = box_mesh([2, 1, 1], [[0.0, 1.0]; 3], [false; 3], 1).unwrap();
        let bytes = write_mesh_bytes(&mesh);
        let cut = bytes.len() - 40;
        match read_mesh_bytes(&bytes[..cut]) {
            Err(Error::MeshParse { offset, detail }) => {
                assert!(offset > 0, "offset should be named");
                assert!(detail.contains("end of file"));
            }
            other => panic!("expected MeshParse, got {other:?}"),
        }
    }

    /// Overwrite the first occurrence of a header token in the raw bytes
    /// (same length, so binary payload offsets stay put).
    fn patch(bytes: &mut [u8], from: &[u8], to: &[u8]) {
        assert_eq!(from.len(), to.len());
        let pos = bytes
            .windows(from.len())
            .position(|w| w == from)
            .expect("token not found");
        bytes[pos..pos + to.len()].copy_from_slice(to);
    }

    #[test]
    fn unknown_bc_kind_lists_legal_tags() {
        let mesh = box_mesh([1, 1, 1], [[0.0, 1.0]; 3], [false; 3], 1).unwrap();
        let mut bytes = write_mesh_bytes(&mesh);
        patch(&mut bytes, b"FreeSlipWall", b"StickyWall__");
        match read_mesh_bytes(&bytes) {
            Err(Error::UnknownBcTag { tag }) => assert_eq!(tag, "StickyWall__"),
            other => panic!("expected UnknownBcTag, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        assert!(matches!(
            read_mesh_bytes(b"notamesh 1\n"),
            Err(Error::MeshParse { offset: 0, .. })
        ));
        let mesh = box_mesh([1, 1, 1], [[0.0, 1.0]; 3], [false; 3], 1).unwrap();
        let mut bytes = write_mesh_bytes(&mesh);
        patch(&mut bytes, b"dgmesh 1", b"dgmesh 9");
        match read_mesh_bytes(&bytes) {
            Err(Error::MeshParse { detail, .. }) => assert!(detail.contains("version")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_face_reference_detected() {
        let mesh = box_mesh([2, 1, 1], [[0.0, 1.0]; 3], [false; 3], 1).unwrap();
        let mut bytes = write_mesh_bytes(&mesh);
        // overwrite the last face record's left element with an out-of-range id
        let face_bytes = mesh.faces.len() * 7 * 8;
        let last_face = bytes.len() - face_bytes + (mesh.faces.len() - 1) * 7 * 8;
        bytes[last_face..last_face + 8].copy_from_slice(&99i64.to_le_bytes());
        match read_mesh_bytes(&bytes) {
            Err(Error::MeshParse { detail, .. }) => assert!(detail.contains("references element")),
            Err(Error::MeshInvalid { .. }) => {}
            other => panic!("expected a dangling-reference error, got {other:?}"),
        }
    }
}
