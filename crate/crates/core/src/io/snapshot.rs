//! Field and road snapshots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::mesh::CoupledMesh;
use crate::scheme::State;

use super::{IoError, SnapshotFormat};

/// Legacy VTK unstructured grid with the field values as cell data `v`.
pub fn snapshot_vtk(state: &State, mesh: &CoupledMesh) -> String {
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "fieldroad snapshot step {} time {:?}", state.step, state.time).unwrap();
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {} double", mesh.nodes().len()).unwrap();
    for [x, y] in mesh.nodes() {
        writeln!(out, "{x:?} {y:?} 0").unwrap();
    }
    let cells = mesh.field_cells();
    let size: usize = cells.iter().map(|c| c.vertices.len() + 1).sum();
    writeln!(out, "CELLS {} {size}", cells.len()).unwrap();
    for c in cells {
        write!(out, "{}", c.vertices.len()).unwrap();
        for v in &c.vertices {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "CELL_TYPES {}", cells.len()).unwrap();
    for c in cells {
        // VTK_QUAD or VTK_POLYGON
        writeln!(out, "{}", if c.vertices.len() == 4 { 9 } else { 7 }).unwrap();
    }
    writeln!(out, "CELL_DATA {}", cells.len()).unwrap();
    writeln!(out, "SCALARS v double 1\nLOOKUP_TABLE default").unwrap();
    for v in &state.field {
        writeln!(out, "{v:?}").unwrap();
    }
    out
}

/// Field rows `x,y,v` at cell centers.
pub fn snapshot_field_csv(state: &State, mesh: &CoupledMesh) -> String {
    let mut out = String::from("x,y,v\n");
    for (c, v) in mesh.field_cells().iter().zip(&state.field) {
        writeln!(out, "{:?},{:?},{v:?}", c.center[0], c.center[1]).unwrap();
    }
    out
}

/// Road rows `x,u,v_trace`; the trace column is empty when unknown.
pub fn snapshot_road_csv(state: &State, mesh: &CoupledMesh) -> String {
    let mut out = String::from("x,u,v_trace\n");
    for (r, (c, u)) in mesh.road_cells().iter().zip(&state.road).enumerate() {
        match &state.trace {
            Some(t) => writeln!(out, "{:?},{u:?},{:?}", c.center, t[r]).unwrap(),
            None => writeln!(out, "{:?},{u:?},", c.center).unwrap(),
        }
    }
    out
}

/// Companion road file of a CSV snapshot: `name.csv` → `name_road.csv`.
pub fn road_companion(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    path.with_file_name(format!("{stem}_road.csv"))
}

/// Writes `path` (and for CSV its road companion). Returns the files written.
pub fn write_snapshot(
    state: &State,
    mesh: &CoupledMesh,
    path: &Path,
    format: SnapshotFormat,
) -> Result<Vec<PathBuf>, IoError> {
    let write = |p: &Path, text: String| std::fs::write(p, text).map_err(|e| IoError::file(p, e));
    match format {
        SnapshotFormat::VtkLegacy => {
            write(path, snapshot_vtk(state, mesh))?;
            Ok(vec![path.to_path_buf()])
        }
        SnapshotFormat::Csv => {
            let road = road_companion(path);
            write(path, snapshot_field_csv(state, mesh))?;
            write(&road, snapshot_road_csv(state, mesh))?;
            Ok(vec![path.to_path_buf(), road])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Geometry};

    #[test]
    fn single_cell_vtk() {
        let mesh = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 1, 1).unwrap();
        let s = State::constant(&mesh, 0.75, 2.0);
        let vtk = snapshot_vtk(&s, &mesh);
        assert!(vtk.contains("POINTS 4 double\n"));
        assert!(vtk.contains("CELLS 1 5\n4 0 1 3 2\n"));
        assert!(vtk.contains("CELL_TYPES 1\n9\n"));
        assert!(vtk.ends_with("LOOKUP_TABLE default\n0.75\n"));
    }

    #[test]
    fn csv_values_are_exact() {
        let mesh = build_cartesian(Geometry::new(-1.0, 1.0, 1.0).unwrap(), 4, 2).unwrap();
        let mut s = State::constant(&mesh, 1.25, 6.25);
        s.field[3] = 1.0 / 3.0;
        let parsed: Vec<f64> = snapshot_field_csv(&s, &mesh)
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert_eq!(parsed, s.field);
        let road = snapshot_road_csv(&s, &mesh);
        assert_eq!(road.lines().nth(1).unwrap(), "-0.75,6.25,1.25");
        s.trace = None;
        assert!(snapshot_road_csv(&s, &mesh).lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn companion_name() {
        assert_eq!(road_companion(Path::new("out/t10.csv")), Path::new("out/t10_road.csv"));
    }
}
