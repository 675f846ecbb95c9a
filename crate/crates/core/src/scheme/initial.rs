//! Cell averages of initial data.

use crate::mesh::{polygon_area, CoupledMesh, Point};

use super::{total_mass, SchemeError, State};

/// Anything that can be averaged over a polygonal field cell.
pub trait FieldProfile {
    fn cell_average(&self, polygon: &[Point]) -> f64;
}

/// Anything that can be averaged over a road interval.
pub trait RoadProfile {
    fn cell_average(&self, left: f64, right: f64) -> f64;
}

/// Axis-aligned box `[x0, x1] × [y0, y1]` carrying a constant value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub value: f64,
}

/// Interval `[x0, x1]` of the road carrying a constant value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadInterval {
    pub x: [f64; 2],
    pub value: f64,
}

/// Sum of box indicators; averaged exactly through overlap areas.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldPainter {
    pub boxes: Vec<FieldBox>,
}

/// Sum of interval indicators; averaged exactly through overlap lengths.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoadPainter {
    pub intervals: Vec<RoadInterval>,
}

/// A pointwise function averaged by 4×4 midpoint subsampling.
pub struct Sampled<F>(pub F);

const SUBSAMPLES: usize = 4;

impl FieldProfile for FieldPainter {
    fn cell_average(&self, polygon: &[Point]) -> f64 {
        let area = polygon_area(polygon).abs();
        let covered: f64 = self
            .boxes
            .iter()
            .map(|b| b.value * polygon_area(&clip_to_box(polygon, b)).abs())
            .sum();
        covered / area
    }
}

impl RoadProfile for RoadPainter {
    fn cell_average(&self, left: f64, right: f64) -> f64 {
        let covered: f64 = self
            .intervals
            .iter()
            .map(|iv| {
                let overlap = right.min(iv.x[1]) - left.max(iv.x[0]);
                iv.value * overlap.max(0.0)
            })
            .sum();
        covered / (right - left)
    }
}

impl<F: Fn(f64, f64) -> f64> FieldProfile for Sampled<F> {
    fn cell_average(&self, polygon: &[Point]) -> f64 {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &[x, y] in polygon {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let (hx, hy) = ((x1 - x0) / SUBSAMPLES as f64, (y1 - y0) / SUBSAMPLES as f64);
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..SUBSAMPLES {
            for i in 0..SUBSAMPLES {
                let p = [x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy];
                if contains(polygon, p) {
                    sum += (self.0)(p[0], p[1]);
                    count += 1;
                }
            }
        }
        if count == 0 {
            // Sliver cell: fall back to its vertex mean.
            let n = polygon.len() as f64;
            let cx = polygon.iter().map(|p| p[0]).sum::<f64>() / n;
            let cy = polygon.iter().map(|p| p[1]).sum::<f64>() / n;
            return (self.0)(cx, cy);
        }
        sum / count as f64
    }
}

impl<F: Fn(f64) -> f64> RoadProfile for Sampled<F> {
    fn cell_average(&self, left: f64, right: f64) -> f64 {
        let h = (right - left) / SUBSAMPLES as f64;
        (0..SUBSAMPLES)
            .map(|i| (self.0)(left + (i as f64 + 0.5) * h))
            .sum::<f64>()
            / SUBSAMPLES as f64
    }
}

/// Cell averages of `(v0, u0)` at time 0. The trace is left unset.
pub fn discretize_initial(
    field: &impl FieldProfile,
    road: &impl RoadProfile,
    mesh: &CoupledMesh,
) -> Result<State, SchemeError> {
    let field_values: Vec<f64> = (0..mesh.n_field_cells())
        .map(|k| field.cell_average(&mesh.cell_polygon(k)))
        .collect();
    let road_values: Vec<f64> = mesh
        .road_cells()
        .iter()
        .map(|r| road.cell_average(r.left, r.right))
        .collect();

    let negative = |values: &[f64], block: &str| {
        values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0))
            .map(|(i, &value)| SchemeError::NegativeInitialData {
                location: format!("{block} cell {i}"),
                value,
            })
    };
    if let Some(e) = negative(&field_values, "field").or_else(|| negative(&road_values, "road")) {
        return Err(e);
    }

    let state = State {
        field: field_values,
        trace: None,
        road: road_values,
        time: 0.0,
        step: 0,
    };
    let mass = total_mass(&state, mesh);
    if !(mass > 0.0) {
        return Err(SchemeError::DegenerateMass(mass));
    }
    Ok(state)
}

/// Sutherland–Hodgman clipping of a polygon against an axis-aligned box.
fn clip_to_box(polygon: &[Point], b: &FieldBox) -> Vec<Point> {
    // (axis, bound, keep values >= bound?)
    let planes = [
        (0, b.x[0], true),
        (0, b.x[1], false),
        (1, b.y[0], true),
        (1, b.y[1], false),
    ];
    let mut poly = polygon.to_vec();
    for (axis, bound, keep_above) in planes {
        if poly.is_empty() {
            break;
        }
        let inside = |p: &Point| {
            if keep_above {
                p[axis] >= bound
            } else {
                p[axis] <= bound
            }
        };
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let cur = poly[i];
            let prev = poly[(i + poly.len() - 1) % poly.len()];
            let cut = |a: Point, c: Point| {
                let t = (bound - a[axis]) / (c[axis] - a[axis]);
                let mut q = [a[0] + t * (c[0] - a[0]), a[1] + t * (c[1] - a[1])];
                q[axis] = bound;
                q
            };
            match (inside(&prev), inside(&cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(cut(prev, cur)),
                (false, true) => {
                    out.push(cut(prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
        poly = out;
    }
    poly
}

fn contains(polygon: &[Point], p: Point) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Geometry};

    fn builtin_mesh() -> CoupledMesh {
        build_cartesian(Geometry::new(-40.0, 40.0, 20.0).unwrap(), 160, 40).unwrap()
    }

    #[test]
    fn grouped_field_block() {
        let mesh = builtin_mesh();
        let field = FieldPainter {
            boxes: vec![FieldBox {
                x: [-2.5, 2.5],
                y: [2.5, 7.5],
                value: 100.0,
            }],
        };
        let s = discretize_initial(&field, &RoadPainter::default(), &mesh).unwrap();
        let covered = s.field.iter().filter(|&&v| v == 100.0).count();
        let empty = s.field.iter().filter(|&&v| v == 0.0).count();
        assert_eq!((covered, empty), (100, 6300));
        assert!(s.road.iter().all(|&u| u == 0.0));
        assert_eq!(total_mass(&s, &mesh), 2500.0);
        assert!(s.trace.is_none());
    }

    #[test]
    fn field_and_road_blocks() {
        let mesh = builtin_mesh();
        let field = FieldPainter {
            boxes: vec![FieldBox {
                x: [-2.5, 2.5],
                y: [2.5, 5.0],
                value: 150.0,
            }],
        };
        let road = RoadPainter {
            intervals: vec![RoadInterval {
                x: [-2.5, 2.5],
                value: 125.0,
            }],
        };
        let s = discretize_initial(&field, &road, &mesh).unwrap();
        let field_mass: f64 = s.field.iter().map(|v| 0.25 * v).sum();
        let road_mass: f64 = s.road.iter().map(|u| 0.5 * u).sum();
        assert_eq!(field_mass, 1875.0);
        assert_eq!(road_mass, 625.0);
        assert_eq!(total_mass(&s, &mesh), 2500.0);
    }

    #[test]
    fn constants_average_exactly() {
        let mesh = build_cartesian(Geometry::new(-1.0, 2.0, 0.7).unwrap(), 7, 3).unwrap();
        let s = discretize_initial(&Sampled(|_, _| 3.5), &Sampled(|_| 0.25), &mesh).unwrap();
        assert!(s.field.iter().all(|&v| v == 3.5));
        assert!(s.road.iter().all(|&u| u == 0.25));
        let field = FieldPainter {
            boxes: vec![FieldBox {
                x: [-5.0, 5.0],
                y: [-1.0, 1.0],
                value: 2.0,
            }],
        };
        let s = discretize_initial(&field, &RoadPainter::default(), &mesh).unwrap();
        for v in &s.field {
            approx::assert_relative_eq!(*v, 2.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn partial_overlap_is_area_weighted() {
        let mesh = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 1, 1).unwrap();
        let field = FieldPainter {
            boxes: vec![FieldBox {
                x: [0.25, 0.75],
                y: [0.5, 2.0],
                value: 8.0,
            }],
        };
        let road = RoadPainter {
            intervals: vec![RoadInterval {
                x: [0.9, 3.0],
                value: 10.0,
            }],
        };
        let s = discretize_initial(&field, &road, &mesh).unwrap();
        approx::assert_relative_eq!(s.field[0], 8.0 * 0.25, max_relative = 1e-15);
        approx::assert_relative_eq!(s.road[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn clipping_a_triangle() {
        let tri = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]];
        let b = FieldBox {
            x: [0.0, 1.0],
            y: [0.0, 1.0],
            value: 1.0,
        };
        // The unit square lies entirely below the hypotenuse x + y = 2.
        approx::assert_relative_eq!(polygon_area(&clip_to_box(&tri, &b)).abs(), 1.0);
        let b = FieldBox {
            x: [1.0, 3.0],
            y: [0.0, 3.0],
            value: 1.0,
        };
        approx::assert_relative_eq!(polygon_area(&clip_to_box(&tri, &b)).abs(), 0.5);
    }

    #[test]
    fn zero_mass_rejected() {
        let mesh = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 2, 2).unwrap();
        let e = discretize_initial(&FieldPainter::default(), &RoadPainter::default(), &mesh)
            .unwrap_err();
        assert_eq!(e, SchemeError::DegenerateMass(0.0));
    }

    #[test]
    fn negative_data_rejected() {
        let mesh = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 2, 2).unwrap();
        let e = discretize_initial(&Sampled(|x, _| x - 0.5), &Sampled(|_| 1.0), &mesh);
        assert!(matches!(e, Err(SchemeError::NegativeInitialData { .. })));
    }
}
