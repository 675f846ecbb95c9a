use std::fmt;

use super::{
    distance, CoupledMesh, Neighbor, Point, COINCIDENCE_TOL, MEASURE_TOL, ORTHOGONALITY_TOL,
};

/// One broken admissibility or compatibility invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveCellMeasure { cell: usize, measure: f64 },
    CenterOutsideCell { cell: usize },
    NonPositiveEdge { edge: usize, measure: f64, distance: f64 },
    /// Angle (rad) between `x_K x_L` and the normal of an interior edge.
    NonOrthogonalEdge { edge: usize, defect: f64 },
    /// Angle (rad) between `x_K x_K*` and the normal of a road edge.
    NonOrthogonalRoadEdge { edge: usize, defect: f64 },
    RoadCenterOffEdge { road_cell: usize, offset: f64 },
    NonPositiveRoadCell { road_cell: usize, measure: f64 },
    BrokenCoupling { road_cell: usize, edge: usize },
    NonPositiveRoadEdge { road_edge: usize, distance: f64 },
    RoadPartitionGap { at: f64, defect: f64 },
    FieldMeasureMismatch { total: f64, expected: f64 },
    RoadMeasureMismatch { total: f64, expected: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match *self {
            NonPositiveCellMeasure { cell, measure } => {
                write!(f, "cell {cell}: measure {measure:e} is not positive")
            }
            CenterOutsideCell { cell } => write!(f, "cell {cell}: center not strictly inside"),
            NonPositiveEdge {
                edge,
                measure,
                distance,
            } => write!(f, "edge {edge}: measure {measure:e}, distance {distance:e}"),
            NonOrthogonalEdge { edge, defect } => {
                write!(f, "edge {edge}: centers deviate from orthogonality by {defect:e} rad")
            }
            NonOrthogonalRoadEdge { edge, defect } => write!(
                f,
                "road edge {edge}: field center deviates from orthogonal projection by {defect:e} rad"
            ),
            RoadCenterOffEdge { road_cell, offset } => {
                write!(f, "road cell {road_cell}: center lies {offset:e} outside its edge")
            }
            NonPositiveRoadCell { road_cell, measure } => {
                write!(f, "road cell {road_cell}: measure {measure:e} is not positive")
            }
            BrokenCoupling { road_cell, edge } => {
                write!(f, "road cell {road_cell}: coupling with edge {edge} is not a bijection")
            }
            NonPositiveRoadEdge {
                road_edge,
                distance,
            } => write!(f, "road edge {road_edge}: distance {distance:e} is not positive"),
            RoadPartitionGap { at, defect } => {
                write!(f, "road cells leave a gap of {defect:e} at x = {at}")
            }
            FieldMeasureMismatch { total, expected } => {
                write!(f, "field cells cover {total} instead of {expected}")
            }
            RoadMeasureMismatch { total, expected } => {
                write!(f, "road cells cover {total} instead of {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmissibilityReport {
    pub violations: Vec<Violation>,
}

impl AdmissibilityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "mesh is admissible and compatible");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every admissibility and compatibility invariant. Never fails: the
/// report lists violations grouped by entity kind, sorted by id.
pub fn verify_admissibility(mesh: &CoupledMesh) -> AdmissibilityReport {
    let mut violations = Vec::new();
    let nodes = mesh.nodes();

    for (k, cell) in mesh.field_cells().iter().enumerate() {
        if !(cell.measure > 0.0) {
            violations.push(Violation::NonPositiveCellMeasure {
                cell: k,
                measure: cell.measure,
            });
        }
        if !strictly_inside(cell.center, &mesh.cell_polygon(k)) {
            violations.push(Violation::CenterOutsideCell { cell: k });
        }
    }

    for (e, edge) in mesh.field_edges().iter().enumerate() {
        if !(edge.measure > 0.0 && edge.distance > 0.0) {
            violations.push(Violation::NonPositiveEdge {
                edge: e,
                measure: edge.measure,
                distance: edge.distance,
            });
            continue;
        }
        let (a, b) = (nodes[edge.nodes[0]], nodes[edge.nodes[1]]);
        let xk = mesh.field_cells()[edge.cell].center;
        match edge.neighbor {
            Neighbor::Cell(l) => {
                let defect = normal_defect(xk, mesh.field_cells()[l].center, a, b);
                if defect > ORTHOGONALITY_TOL {
                    violations.push(Violation::NonOrthogonalEdge { edge: e, defect });
                }
            }
            Neighbor::Road(r) => {
                let xr = [mesh.road_cells()[r].center, 0.0];
                let defect = normal_defect(xk, xr, a, b);
                if defect > ORTHOGONALITY_TOL {
                    violations.push(Violation::NonOrthogonalRoadEdge { edge: e, defect });
                }
            }
            Neighbor::Boundary => {}
        }
    }

    for (r, road) in mesh.road_cells().iter().enumerate() {
        if !(road.measure > 0.0) {
            violations.push(Violation::NonPositiveRoadCell {
                road_cell: r,
                measure: road.measure,
            });
        }
        let offset = (road.left - road.center).max(road.center - road.right);
        if offset >= 0.0 {
            violations.push(Violation::RoadCenterOffEdge {
                road_cell: r,
                offset,
            });
        }
        let coupled = mesh
            .field_edges()
            .get(road.edge)
            .is_some_and(|e| e.neighbor == Neighbor::Road(r));
        if !coupled {
            violations.push(Violation::BrokenCoupling {
                road_cell: r,
                edge: road.edge,
            });
        }
    }

    for (i, edge) in mesh.road_edges().iter().enumerate() {
        if !(edge.distance > 0.0) {
            violations.push(Violation::NonPositiveRoadEdge {
                road_edge: i,
                distance: edge.distance,
            });
        }
    }

    let g = mesh.geometry();
    let mut spans: Vec<(f64, f64)> = mesh.road_cells().iter().map(|r| (r.left, r.right)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cursor = g.omega_min;
    for &(left, right) in &spans {
        if (left - cursor).abs() > COINCIDENCE_TOL {
            violations.push(Violation::RoadPartitionGap {
                at: cursor,
                defect: left - cursor,
            });
        }
        cursor = right;
    }
    if (g.omega_max - cursor).abs() > COINCIDENCE_TOL {
        violations.push(Violation::RoadPartitionGap {
            at: cursor,
            defect: g.omega_max - cursor,
        });
    }

    let field_total: f64 = mesh.field_cells().iter().map(|c| c.measure).sum();
    if (field_total - g.field_area()).abs() > MEASURE_TOL * g.field_area() {
        violations.push(Violation::FieldMeasureMismatch {
            total: field_total,
            expected: g.field_area(),
        });
    }
    let road_total: f64 = mesh.road_cells().iter().map(|r| r.measure).sum();
    if (road_total - g.road_length()).abs() > MEASURE_TOL * g.road_length() {
        violations.push(Violation::RoadMeasureMismatch {
            total: road_total,
            expected: g.road_length(),
        });
    }

    AdmissibilityReport { violations }
}

/// Angle between the segment `p → q` and the normal of the edge `a b`.
fn normal_defect(p: Point, q: Point, a: Point, b: Point) -> f64 {
    let dir = [q[0] - p[0], q[1] - p[1]];
    let len = distance(a, b);
    let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    let along = dir[0] * t[0] + dir[1] * t[1];
    let across = dir[0] * t[1] - dir[1] * t[0];
    along.abs().atan2(across.abs())
}

fn strictly_inside(p: Point, polygon: &[Point]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut scale: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        scale = scale.max(distance(a, b));
        min_gap = min_gap.min(segment_distance(p, a, b));
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside && min_gap > 1e-12 * scale
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let t = [b[0] - a[0], b[1] - a[1]];
    let len2 = t[0] * t[0] + t[1] * t[1];
    let s = (((p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1]) / len2).clamp(0.0, 1.0);
    distance(p, [a[0] + s * t[0], a[1] + s * t[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Geometry, MeshParts};

    fn grid() -> (CoupledMesh, f64) {
        let g = Geometry::new(0.0, 4.0, 3.0).unwrap();
        (build_cartesian(g, 4, 3).unwrap(), 1.0)
    }

    fn rebuilt(parts: MeshParts) -> CoupledMesh {
        CoupledMesh::from_parts(parts).unwrap()
    }

    #[test]
    fn cartesian_is_clean() {
        let (mesh, _) = grid();
        let report = verify_admissibility(&mesh);
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn horizontal_shift_breaks_only_horizontal_edges() {
        let (mesh, hx) = grid();
        let k = 4 + 1; // interior cell (i = 1, j = 1)
        let mut parts = mesh.parts();
        parts.cells[k].1[0] += 0.1 * hx;
        let mesh = rebuilt(parts);
        let report = verify_admissibility(&mesh);

        let adjacent = mesh.edges_of_cell(k);
        let flagged: Vec<usize> = report
            .violations
            .iter()
            .map(|v| match v {
                Violation::NonOrthogonalEdge { edge, .. } => *edge,
                other => panic!("unexpected violation {other}"),
            })
            .collect();
        // Hand computation: the shifted center stays level with its left and
        // right neighbours; above and below, the segment tilts by atan(0.1).
        let horizontal: Vec<usize> = adjacent
            .iter()
            .copied()
            .filter(|&e| {
                let [a, b] = mesh.field_edges()[e].nodes;
                mesh.nodes()[a][1] == mesh.nodes()[b][1]
            })
            .collect();
        assert_eq!(flagged, horizontal);
        for v in &report.violations {
            if let Violation::NonOrthogonalEdge { defect, .. } = v {
                approx::assert_relative_eq!(*defect, 0.1f64.atan(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_shift_breaks_all_adjacent_edges() {
        let (mesh, hx) = grid();
        let k = 4 + 1;
        let mut parts = mesh.parts();
        parts.cells[k].1[0] += 0.1 * hx;
        parts.cells[k].1[1] += 0.1 * hx;
        let mesh = rebuilt(parts);
        let report = verify_admissibility(&mesh);
        let mut flagged: Vec<usize> = report
            .violations
            .iter()
            .map(|v| match v {
                Violation::NonOrthogonalEdge { edge, .. } => *edge,
                other => panic!("unexpected violation {other}"),
            })
            .collect();
        let mut adjacent = mesh.edges_of_cell(k).to_vec();
        flagged.sort_unstable();
        adjacent.sort_unstable();
        assert_eq!(flagged, adjacent);
    }

    #[test]
    fn bottom_cell_shift_breaks_road_projection() {
        let (mesh, hx) = grid();
        let mut parts = mesh.parts();
        parts.cells[1].1[0] += 0.1 * hx;
        let mesh = rebuilt(parts);
        let report = verify_admissibility(&mesh);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonOrthogonalRoadEdge { .. })));
    }

    #[test]
    fn missing_cell_breaks_global_measure() {
        let (mesh, _) = grid();
        let mut parts = mesh.parts();
        parts.cells.remove(5);
        let mesh = rebuilt(parts);
        let report = verify_admissibility(&mesh);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert!(matches!(
            report.violations[0],
            Violation::FieldMeasureMismatch { total, expected } if total == 11.0 && expected == 12.0
        ));
    }

    #[test]
    fn center_outside_cell() {
        let (mesh, _) = grid();
        let mut parts = mesh.parts();
        parts.cells[5].1 = [10.0, 10.0];
        let report = verify_admissibility(&rebuilt(parts));
        assert!(report
            .violations
            .contains(&Violation::CenterOutsideCell { cell: 5 }));
    }

    #[test]
    fn road_center_outside_its_interval() {
        let (mesh, _) = grid();
        let mut parts = mesh.parts();
        parts.road_cells[2].2 = parts.road_cells[2].1 + 0.5;
        let report = verify_admissibility(&rebuilt(parts));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RoadCenterOffEdge { road_cell: 2, .. })));
    }
}
