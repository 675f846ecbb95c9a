//! Coupled field/road meshes.
//!
//! The field is the rectangle `ω × (0, L)` and the road is the interval `ω`
//! lying on the bottom side `y = 0`. Every road cell coincides with exactly
//! one bottom edge of the field mesh; that pairing is the coupling through
//! which the two media exchange mass.
//!
//! All geometric quantities (measures, distances, transmissivities) are
//! derived from node coordinates and cell centers, never stored in files.

mod cartesian;
mod file;
mod verify;

pub use cartesian::build_cartesian;
pub use file::{export_mesh, import_mesh};
pub use verify::{verify_admissibility, AdmissibilityReport, Violation};

use std::collections::HashMap;

use thiserror::Error;

/// Length tolerance used when matching road cells against bottom edges.
pub const COINCIDENCE_TOL: f64 = 1e-9;
/// Maximal deviation from orthogonality accepted for TPFA edges, in radians.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Relative tolerance on the total measures of the field and the road.
pub const MEASURE_TOL: f64 = 1e-12;

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("cell counts must be positive (got nx = {nx}, ny = {ny})")]
    ZeroCount { nx: usize, ny: usize },
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cell {cell} references unknown node {node}")]
    UnknownNode { cell: usize, node: usize },
    #[error("edge between nodes {0} and {1} is shared by more than two cells")]
    NonManifoldEdge(usize, usize),
    #[error("road cell {0} does not coincide with any bottom edge of the field mesh")]
    UnmatchedRoadCell(usize),
    #[error("bottom edge {0} is not covered by any road cell")]
    UncoupledBottomEdge(usize),
    #[error("bottom edge {edge} matches both road cells {first} and {second}")]
    AmbiguousCoupling {
        edge: usize,
        first: usize,
        second: usize,
    },
    #[error("mesh is not admissible:\n{0}")]
    NotAdmissible(AdmissibilityReport),
}

/// The cylinder `Ω = ω × (0, L)` with `ω = (omega_min, omega_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub omega_min: f64,
    pub omega_max: f64,
    pub height: f64,
}

impl Geometry {
    pub fn new(omega_min: f64, omega_max: f64, height: f64) -> Result<Self, MeshError> {
        if !(omega_min.is_finite() && omega_max.is_finite() && height.is_finite()) {
            return Err(MeshError::InvalidGeometry("non-finite bound".into()));
        }
        if omega_max <= omega_min {
            return Err(MeshError::InvalidGeometry(format!(
                "empty road interval ({omega_min}, {omega_max})"
            )));
        }
        if height <= 0.0 {
            return Err(MeshError::InvalidGeometry(format!(
                "height must be positive, got {height}"
            )));
        }
        Ok(Self {
            omega_min,
            omega_max,
            height,
        })
    }

    /// Length of the road, `m_ω`.
    pub fn road_length(&self) -> f64 {
        self.omega_max - self.omega_min
    }

    /// Area of the field, `m_Ω`.
    pub fn field_area(&self) -> f64 {
        self.road_length() * self.height
    }

    pub fn road_diameter(&self) -> f64 {
        self.road_length()
    }

    pub fn field_diameter(&self) -> f64 {
        self.road_length().hypot(self.height)
    }
}

/// A polygonal control volume of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCell {
    /// Node indices, counter-clockwise or clockwise.
    pub vertices: Vec<usize>,
    pub center: Point,
    pub measure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Road,
    Exterior,
}

/// What lies on the far side of a field edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Road(usize),
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEdge {
    pub nodes: [usize; 2],
    /// The field cell owning the edge (the first one to reference it).
    pub cell: usize,
    pub neighbor: Neighbor,
    pub measure: f64,
    pub distance: f64,
}

impl FieldEdge {
    pub fn kind(&self) -> EdgeKind {
        match self.neighbor {
            Neighbor::Cell(_) => EdgeKind::Interior,
            Neighbor::Road(_) => EdgeKind::Road,
            Neighbor::Boundary => EdgeKind::Exterior,
        }
    }

    pub fn transmissivity(&self) -> f64 {
        self.measure / self.distance
    }
}

/// A control volume of the road: a sub-interval of `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadCell {
    pub left: f64,
    pub right: f64,
    pub center: f64,
    pub measure: f64,
    /// The field edge this road cell coincides with.
    pub edge: usize,
}

/// A point interface between two adjacent road cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadEdge {
    pub left: usize,
    pub right: usize,
    /// Always 1: the interface between two road cells is a point.
    pub measure: f64,
    pub distance: f64,
}

impl RoadEdge {
    pub fn transmissivity(&self) -> f64 {
        self.measure / self.distance
    }
}

/// Raw mesh description: what a mesh file stores.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshParts {
    pub geometry: Geometry,
    pub nodes: Vec<Point>,
    /// `(vertex indices, center)` per field cell.
    pub cells: Vec<(Vec<usize>, Point)>,
    /// `(left, right, center)` per road cell.
    pub road_cells: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct CoupledMesh {
    geometry: Geometry,
    nodes: Vec<Point>,
    cells: Vec<FieldCell>,
    edges: Vec<FieldEdge>,
    road_cells: Vec<RoadCell>,
    road_edges: Vec<RoadEdge>,
    cell_edges: Vec<Vec<usize>>,
    road_cell_edges: Vec<Vec<usize>>,
}

impl CoupledMesh {
    /// Derives edges, transmissivities and the field/road coupling from raw
    /// parts. Admissibility is not checked here; see [`verify_admissibility`].
    pub fn from_parts(parts: MeshParts) -> Result<Self, MeshError> {
        let MeshParts {
            geometry,
            nodes,
            cells: raw_cells,
            road_cells: raw_road,
        } = parts;

        let mut cells = Vec::with_capacity(raw_cells.len());
        for (k, (vertices, center)) in raw_cells.into_iter().enumerate() {
            if let Some(&node) = vertices.iter().find(|&&n| n >= nodes.len()) {
                return Err(MeshError::UnknownNode { cell: k, node });
            }
            let polygon: Vec<Point> = vertices.iter().map(|&n| nodes[n]).collect();
            cells.push(FieldCell {
                measure: polygon_area(&polygon).abs(),
                vertices,
                center,
            });
        }

        let mut edges: Vec<FieldEdge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_edges = vec![Vec::new(); cells.len()];
        for (k, cell) in cells.iter().enumerate() {
            let n = cell.vertices.len();
            for i in 0..n {
                let a = cell.vertices[i];
                let b = cell.vertices[(i + 1) % n];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        cell_edges[k].push(edges.len());
                        edges.push(FieldEdge {
                            nodes: [a, b],
                            cell: k,
                            neighbor: Neighbor::Boundary,
                            measure: distance(nodes[a], nodes[b]),
                            distance: 0.0,
                        });
                    }
                    Some(&e) => {
                        if edges[e].neighbor != Neighbor::Boundary || edges[e].cell == k {
                            return Err(MeshError::NonManifoldEdge(key.0, key.1));
                        }
                        edges[e].neighbor = Neighbor::Cell(k);
                        cell_edges[k].push(e);
                    }
                }
            }
        }

        // Couple road cells with boundary edges lying on y = 0.
        let bottom: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.neighbor == Neighbor::Boundary
                    && e.nodes.iter().all(|&n| nodes[n][1].abs() <= COINCIDENCE_TOL)
            })
            .map(|(i, _)| i)
            .collect();
        let mut road_cells = Vec::with_capacity(raw_road.len());
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (k, &(left, right, center)) in raw_road.iter().enumerate() {
            let mid = 0.5 * (left + right);
            let matched = bottom.iter().copied().find(|&e| {
                let (xa, xb) = (nodes[edges[e].nodes[0]][0], nodes[edges[e].nodes[1]][0]);
                let (lo, hi) = (xa.min(xb), xa.max(xb));
                (0.5 * (lo + hi) - mid).abs() <= COINCIDENCE_TOL
                    && (lo - left).abs() <= COINCIDENCE_TOL
                    && (hi - right).abs() <= COINCIDENCE_TOL
            });
            let Some(e) = matched else {
                return Err(MeshError::UnmatchedRoadCell(k));
            };
            if let Some(&first) = owner.get(&e) {
                return Err(MeshError::AmbiguousCoupling {
                    edge: e,
                    first,
                    second: k,
                });
            }
            owner.insert(e, k);
            edges[e].neighbor = Neighbor::Road(k);
            road_cells.push(RoadCell {
                left,
                right,
                center,
                measure: right - left,
                edge: e,
            });
        }
        if let Some(&e) = bottom.iter().find(|e| !owner.contains_key(e)) {
            return Err(MeshError::UncoupledBottomEdge(e));
        }

        for edge in &mut edges {
            let xk = cells[edge.cell].center;
            edge.distance = match edge.neighbor {
                Neighbor::Cell(l) => distance(xk, cells[l].center),
                Neighbor::Road(_) | Neighbor::Boundary => {
                    line_distance(xk, nodes[edge.nodes[0]], nodes[edge.nodes[1]])
                }
            };
        }

        let mut order: Vec<usize> = (0..road_cells.len()).collect();
        order.sort_by(|&a, &b| road_cells[a].left.total_cmp(&road_cells[b].left));
        let mut road_edges = Vec::new();
        let mut road_cell_edges = vec![Vec::new(); road_cells.len()];
        for pair in order.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if (road_cells[a].right - road_cells[b].left).abs() <= COINCIDENCE_TOL {
                road_cell_edges[a].push(road_edges.len());
                road_cell_edges[b].push(road_edges.len());
                road_edges.push(RoadEdge {
                    left: a,
                    right: b,
                    measure: 1.0,
                    distance: (road_cells[b].center - road_cells[a].center).abs(),
                });
            }
        }

        Ok(Self {
            geometry,
            nodes,
            cells,
            edges,
            road_cells,
            road_edges,
            cell_edges,
            road_cell_edges,
        })
    }

    /// Recovers the raw description this mesh was built from.
    pub fn parts(&self) -> MeshParts {
        MeshParts {
            geometry: self.geometry,
            nodes: self.nodes.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| (c.vertices.clone(), c.center))
                .collect(),
            road_cells: self
                .road_cells
                .iter()
                .map(|r| (r.left, r.right, r.center))
                .collect(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn field_cells(&self) -> &[FieldCell] {
        &self.cells
    }

    pub fn field_edges(&self) -> &[FieldEdge] {
        &self.edges
    }

    pub fn road_cells(&self) -> &[RoadCell] {
        &self.road_cells
    }

    pub fn road_edges(&self) -> &[RoadEdge] {
        &self.road_edges
    }

    /// Edge indices bounding field cell `k`, in vertex order.
    pub fn edges_of_cell(&self, k: usize) -> &[usize] {
        &self.cell_edges[k]
    }

    /// Road-edge indices touching road cell `k`.
    pub fn edges_of_road_cell(&self, k: usize) -> &[usize] {
        &self.road_cell_edges[k]
    }

    pub fn n_field_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_road_cells(&self) -> usize {
        self.road_cells.len()
    }

    /// The field cell sitting on top of road cell `k`.
    pub fn field_cell_above(&self, k: usize) -> usize {
        self.edges[self.road_cells[k].edge].cell
    }

    /// Polygon of field cell `k` as coordinates.
    pub fn cell_polygon(&self, k: usize) -> Vec<Point> {
        self.cells[k].vertices.iter().map(|&n| self.nodes[n]).collect()
    }
}

/// Signed shoelace area.
pub(crate) fn polygon_area(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    let mut twice = 0.0;
    for i in 0..n {
        let [x0, y0] = polygon[i];
        let [x1, y1] = polygon[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice
}

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Distance from `p` to the line through `a` and `b`.
pub(crate) fn line_distance(p: Point, a: Point, b: Point) -> f64 {
    let t = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    (t[0] * w[1] - t[1] * w[0]).abs() / t[0].hypot(t[1])
}
