use super::{CoupledMesh, Geometry, MeshError, MeshParts};

/// Uniform `nx × ny` grid of the field with the matching `nx`-cell road.
///
/// Field cells are numbered row by row from the bottom (`k = j·nx + i`),
/// road cell `i` sits under field cell `i`. Centers are cell centroids.
pub fn build_cartesian(geometry: Geometry, nx: usize, ny: usize) -> Result<CoupledMesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::ZeroCount { nx, ny });
    }
    let width = geometry.road_length();
    let xs: Vec<f64> = (0..=nx)
        .map(|i| {
            if i == nx {
                geometry.omega_max
            } else {
                geometry.omega_min + width * i as f64 / nx as f64
            }
        })
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| {
            if j == ny {
                geometry.height
            } else {
                geometry.height * j as f64 / ny as f64
            }
        })
        .collect();

    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            nodes.push([x, y]);
        }
    }

    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let vertices = vec![node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
            let center = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
            cells.push((vertices, center));
        }
    }

    let road_cells = (0..nx)
        .map(|i| (xs[i], xs[i + 1], 0.5 * (xs[i] + xs[i + 1])))
        .collect();

    CoupledMesh::from_parts(MeshParts {
        geometry,
        nodes,
        cells,
        road_cells,
    })
}
