//! Legacy ASCII VTK export of nodal fields: every element is written as a
//! block of (N)^3 hexahedral sub-cells between adjacent solution nodes, with
//! point data for density, velocity, pressure, Q-criterion and eddy
//! viscosity.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::physics::primitive_unchecked;
use crate::solver::{SolutionField, Solver, Workspace};
use crate::stats::q_criterion;

/// Write the instantaneous field (and derived Q-criterion / eddy viscosity
/// from the workspace gradients) as a legacy ASCII VTK unstructured grid.
pub fn write_vtk(
    path: &Path,
    solver: &Solver,
    q: &SolutionField,
    ws: &Workspace,
    title: &str,
) -> Result<()> {
    let np = solver.basis.len();
    let nn = solver.nodes_per_element();
    let ne = solver.mesh.n_elements();
    let n_points = ne * nn;
    let cells_per_elem = (np - 1) * (np - 1) * (np - 1);
    let n_cells = ne * cells_per_elem;
    let gas = solver.scheme.gas;
    let qc = q_criterion(ws.gradients());

    let mut out = Vec::with_capacity(n_points * 96);
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "{title}").unwrap();
    writeln!(out, "ASCII").unwrap();
    writeln!(out, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {n_points} double").unwrap();
    for elem in &solver.geom.elems {
        for p in &elem.xyz {
            writeln!(out, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]).unwrap();
        }
    }
    writeln!(out, "CELLS {n_cells} {}", n_cells * 9).unwrap();
    for e in 0..ne {
        let base = e * nn;
        let idx = |i: usize, j: usize, k: usize| base + (k * np + j) * np + i;
        for k in 0..np - 1 {
            for j in 0..np - 1 {
                for i in 0..np - 1 {
                    writeln!(
                        out,
                        "8 {} {} {} {} {} {} {} {}",
                        idx(i, j, k),
                        idx(i + 1, j, k),
                        idx(i + 1, j + 1, k),
                        idx(i, j + 1, k),
                        idx(i, j, k + 1),
                        idx(i + 1, j, k + 1),
                        idx(i + 1, j + 1, k + 1),
                        idx(i, j + 1, k + 1),
                    )
                    .unwrap();
                }
            }
        }
    }
    writeln!(out, "CELL_TYPES {n_cells}").unwrap();
    for _ in 0..n_cells {
        writeln!(out, "12").unwrap();
    }
    writeln!(out, "POINT_DATA {n_points}").unwrap();

    writeln!(out, "SCALARS density double 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for g in 0..n_points {
        writeln!(out, "{:.16e}", q.data[g * 5]).unwrap();
    }
    writeln!(out, "VECTORS velocity double").unwrap();
    for g in 0..n_points {
        let inv = 1.0 / q.data[g * 5];
        writeln!(
            out,
            "{:.16e} {:.16e} {:.16e}",
            q.data[g * 5 + 1] * inv,
            q.data[g * 5 + 2] * inv,
            q.data[g * 5 + 3] * inv
        )
        .unwrap();
    }
    writeln!(out, "SCALARS pressure double 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for g in 0..n_points {
        let u: crate::physics::State = q.data[g * 5..g * 5 + 5].try_into().unwrap();
        writeln!(out, "{:.16e}", primitive_unchecked(&u, &gas).p).unwrap();
    }
    writeln!(out, "SCALARS q_criterion double 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for g in 0..n_points {
        writeln!(out, "{:.16e}", qc[g]).unwrap();
    }
    writeln!(out, "SCALARS mu_t double 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for v in ws.mu_t() {
        writeln!(out, "{:.16e}", v).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tgv_box_mesh;
    use crate::physics::GasModel;
    use crate::solver::{taylor_green, Formulation, SchemeConfig};

    #[test]
    fn vtk_layout_is_wellformed() {
        let gas = GasModel::air(0.1, Some(100.0)).unwrap();
        let mesh = tgv_box_mesh(2, 1).unwrap();
        let solver = Solver::new(
            mesh,
            2,
            SchemeConfig::new(Formulation::ExplicitLesVremanGauss, gas),
        )
        .unwrap();
        let q = SolutionField::from_fn(&solver.geom, 2, taylor_green(gas));
        let mut ws = Workspace::new(&solver);
        solver.spatial_operator(&q, 0.0, &mut ws).unwrap();
        let dir = std::env::temp_dir().join("dgles_vtk_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.vtk");
        write_vtk(&path, &solver, &q, &ws, "test field").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        let n_points = 8 * 27;
        let n_cells = 8 * 8;
        assert!(text.contains(&format!("POINTS {n_points} double")));
        assert!(text.contains(&format!("CELLS {n_cells} {}", n_cells * 9)));
        assert!(text.contains(&format!("CELL_TYPES {n_cells}")));
        assert!(text.contains("SCALARS q_criterion double 1"));
        assert!(text.contains("SCALARS mu_t double 1"));
        // every cell line names 8 in-range points
        let cells_start = text.find("CELLS").unwrap();
        for line in text[cells_start..].lines().skip(1).take(n_cells) {
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            assert_eq!(ids[0], 8);
            assert_eq!(ids.len(), 9);
            assert!(ids[1..].iter().all(|&i| i < n_points));
        }
    }
}
