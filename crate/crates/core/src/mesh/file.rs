//! Plain-text mesh files.
//!
//! ```text
//! fieldroad-mesh 1
//! geometry <omega_min> <omega_max> <height>
//! nodes <n>
//! <index> <x> <y>
//! cells <n>
//! <index> <vertex count> <vertex indices...> <center x> <center y>
//! roadcells <n>
//! <index> <left x> <right x> <center x>
//! ```
//!
//! Blank lines and `#` comments are ignored. Indices must appear in order.

use std::fmt::Write as _;

use super::{verify_admissibility, CoupledMesh, Geometry, MeshError, MeshParts};

const MAGIC: &str = "fieldroad-mesh 1";

/// Parses a mesh file, rebuilds every derived quantity and rejects meshes
/// that are not admissible.
pub fn import_mesh(text: &str) -> Result<CoupledMesh, MeshError> {
    let parts = parse(text)?;
    let mesh = CoupledMesh::from_parts(parts)?;
    let report = verify_admissibility(&mesh);
    if report.is_clean() {
        Ok(mesh)
    } else {
        Err(MeshError::NotAdmissible(report))
    }
}

pub fn export_mesh(mesh: &CoupledMesh) -> String {
    let parts = mesh.parts();
    let g = parts.geometry;
    let mut out = String::new();
    // Debug formatting of f64 is the shortest round-tripping representation.
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "geometry {:?} {:?} {:?}", g.omega_min, g.omega_max, g.height);
    let _ = writeln!(out, "nodes {}", parts.nodes.len());
    for (i, [x, y]) in parts.nodes.iter().enumerate() {
        let _ = writeln!(out, "{i} {x:?} {y:?}");
    }
    let _ = writeln!(out, "cells {}", parts.cells.len());
    for (i, (vertices, [cx, cy])) in parts.cells.iter().enumerate() {
        let _ = write!(out, "{i} {}", vertices.len());
        for v in vertices {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out, " {cx:?} {cy:?}");
    }
    let _ = writeln!(out, "roadcells {}", parts.road_cells.len());
    for (i, (left, right, center)) in parts.road_cells.iter().enumerate() {
        let _ = writeln!(out, "{i} {left:?} {right:?} {center:?}");
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<(usize, Vec<&'a str>), MeshError> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok((i + 1, content.split_whitespace().collect()));
            }
        }
        Err(MeshError::Parse {
            line: self.last + 1,
            message: "unexpected end of file".into(),
        })
    }
}

fn err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn float(line: usize, token: &str) -> Result<f64, MeshError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("invalid number {token:?}")))
}

fn count(line: usize, token: &str) -> Result<usize, MeshError> {
    token
        .parse::<usize>()
        .map_err(|_| err(line, format!("invalid count {token:?}")))
}

fn header(lines: &mut Lines<'_>, keyword: &str) -> Result<usize, MeshError> {
    let (line, tokens) = lines.next_tokens()?;
    match tokens.as_slice() {
        [k, n] if *k == keyword => count(line, n),
        _ => Err(err(line, format!("expected \"{keyword} <count>\""))),
    }
}

fn check_index(line: usize, token: &str, expected: usize) -> Result<(), MeshError> {
    if count(line, token)? != expected {
        return Err(err(line, format!("expected index {expected}")));
    }
    Ok(())
}

fn parse(text: &str) -> Result<MeshParts, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };

    let (line, tokens) = lines.next_tokens()?;
    if tokens.join(" ") != MAGIC {
        return Err(err(line, format!("expected \"{MAGIC}\"")));
    }

    let (line, tokens) = lines.next_tokens()?;
    let geometry = match tokens.as_slice() {
        ["geometry", a, b, h] => Geometry::new(float(line, a)?, float(line, b)?, float(line, h)?)
            .map_err(|e| err(line, e.to_string()))?,
        _ => return Err(err(line, "expected \"geometry <omega_min> <omega_max> <height>\"")),
    };

    let n = header(&mut lines, "nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let (line, tokens) = lines.next_tokens()?;
        let [idx, x, y] = tokens.as_slice() else {
            return Err(err(line, "expected \"<index> <x> <y>\""));
        };
        check_index(line, idx, i)?;
        nodes.push([float(line, x)?, float(line, y)?]);
    }

    let n = header(&mut lines, "cells")?;
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let (line, tokens) = lines.next_tokens()?;
        if tokens.len() < 2 {
            return Err(err(line, "truncated cell line"));
        }
        check_index(line, tokens[0], i)?;
        let nv = count(line, tokens[1])?;
        if nv < 3 || tokens.len() != 2 + nv + 2 {
            return Err(err(line, format!("cell with {nv} vertices has wrong field count")));
        }
        let vertices = tokens[2..2 + nv]
            .iter()
            .map(|t| count(line, t))
            .collect::<Result<Vec<_>, _>>()?;
        let center = [float(line, tokens[2 + nv])?, float(line, tokens[3 + nv])?];
        cells.push((vertices, center));
    }

    let n = header(&mut lines, "roadcells")?;
    let mut road_cells = Vec::with_capacity(n);
    for i in 0..n {
        let (line, tokens) = lines.next_tokens()?;
        let [idx, left, right, center] = tokens.as_slice() else {
            return Err(err(line, "expected \"<index> <left> <right> <center>\""));
        };
        check_index(line, idx, i)?;
        road_cells.push((float(line, left)?, float(line, right)?, float(line, center)?));
    }

    if let Ok((line, _)) = lines.next_tokens() {
        return Err(err(line, "trailing content after road cells"));
    }

    Ok(MeshParts {
        geometry,
        nodes,
        cells,
        road_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cartesian;

    const UNIT: &str = "\
fieldroad-mesh 1
geometry 0 1 1
nodes 4
0 0 0
1 1 0
2 0 1
3 1 1
cells 1
0 4 0 1 3 2 0.5 0.5
roadcells 1
0 0 1 0.5
";

    #[test]
    fn unit_file_matches_builder() {
        let imported = import_mesh(UNIT).unwrap();
        let built = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 1, 1).unwrap();
        assert_eq!(imported.field_cells(), built.field_cells());
        assert_eq!(imported.field_edges(), built.field_edges());
        assert_eq!(imported.road_cells(), built.road_cells());
        assert_eq!(imported.road_edges(), built.road_edges());
    }

    #[test]
    fn export_round_trip() {
        let built = build_cartesian(Geometry::new(-1.5, 2.0, 0.7).unwrap(), 7, 3).unwrap();
        let text = export_mesh(&built);
        let back = import_mesh(&text).unwrap();
        assert_eq!(back.parts(), built.parts());
        assert_eq!(back.field_edges(), built.field_edges());
    }

    #[test]
    fn skewed_center_is_not_admissible() {
        let text = UNIT.replace("0 4 0 1 3 2 0.5 0.5", "0 4 0 1 3 2 0.6 0.5");
        let e = import_mesh(&text).unwrap_err();
        assert!(matches!(e, MeshError::NotAdmissible(_)), "{e}");
    }

    #[test]
    fn orthogonality_defect_in_two_cell_file() {
        let text = "\
fieldroad-mesh 1
geometry 0 2 1
nodes 6
0 0 0
1 1 0
2 2 0
3 0 1
4 1 1
5 2 1
cells 2
0 4 0 1 4 3 0.5 0.5
1 4 1 2 5 4 1.5 0.5000001
roadcells 2
0 0 1 0.5
1 1 2 1.5
";
        let MeshError::NotAdmissible(report) = import_mesh(text).unwrap_err() else {
            panic!("expected admissibility failure");
        };
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, crate::mesh::Violation::NonOrthogonalEdge { .. })));
    }

    #[test]
    fn road_cell_without_bottom_edge() {
        let text = UNIT.replace("0 0 1 0.5\n", "0 0 0.5 0.25\n");
        assert!(matches!(
            import_mesh(&text),
            Err(MeshError::UnmatchedRoadCell(0))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = UNIT.replace("2 0 1\n", "2 0 x\n");
        match import_mesh(&text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            import_mesh("fieldroad-mesh 2\n"),
            Err(MeshError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            import_mesh(&UNIT[..UNIT.len() - 10]),
            Err(MeshError::Parse { .. })
        ));
    }
}
