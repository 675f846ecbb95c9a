//! Dense reference solver.
//!
//! Materializes the step matrix straight from the mesh, without going
//! through the sparse assembly, and solves it by Gaussian elimination with
//! partial pivoting. Only meant as an oracle on small meshes.

use crate::mesh::{CoupledMesh, Neighbor};

use super::{Params, SchemeError, State};

pub const DENSE_ORACLE_MAX_UNKNOWNS: usize = 2000;

pub fn dense_oracle_step(
    mesh: &CoupledMesh,
    params: &Params,
    state: &State,
) -> Result<State, SchemeError> {
    params.validate()?;
    state.check_shape(mesh)?;
    let nf = mesh.n_field_cells();
    let nr = mesh.n_road_cells();
    let n = nf + 2 * nr;
    if n > DENSE_ORACLE_MAX_UNKNOWNS {
        return Err(SchemeError::TooLarge {
            size: n,
            limit: DENSE_ORACLE_MAX_UNKNOWNS,
        });
    }
    let Params {
        field_diffusion: d,
        road_diffusion: big_d,
        road_to_field: mu,
        field_to_road: nu,
        time_step: dt,
    } = *params;

    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];

    // Field balance, one row per cell, flux by flux.
    for (k, cell) in mesh.field_cells().iter().enumerate() {
        a[k][k] += cell.measure / dt;
        b[k] = cell.measure / dt * state.field[k];
        for &e in mesh.edges_of_cell(k) {
            let edge = &mesh.field_edges()[e];
            let tau = edge.measure / edge.distance;
            let other = match edge.neighbor {
                Neighbor::Cell(l) if l == k => edge.cell,
                Neighbor::Cell(l) => l,
                Neighbor::Road(r) => nf + r,
                Neighbor::Boundary => continue,
            };
            a[k][k] += d * tau;
            a[k][other] -= d * tau;
        }
    }
    // Exchange relation on each road edge, then road balance.
    for (r, road) in mesh.road_cells().iter().enumerate() {
        let edge = &mesh.field_edges()[road.edge];
        let tau = edge.measure / edge.distance;
        let (t, u) = (nf + r, nf + nr + r);
        let m = road.measure;
        a[t][edge.cell] = -d * tau;
        a[t][t] = d * tau + m * nu;
        a[t][u] = -m * mu;

        a[u][u] += m / dt + m * mu;
        a[u][t] -= m * nu;
        b[u] = m / dt * state.road[r];
        for &s in mesh.edges_of_road_cell(r) {
            let re = &mesh.road_edges()[s];
            let other = if re.left == r { re.right } else { re.left };
            let tau = re.measure / re.distance;
            a[u][u] += big_d * tau;
            a[u][nf + nr + other] -= big_d * tau;
        }
    }

    let x = gauss_solve(a, b)?;
    Ok(State {
        field: x[..nf].to_vec(),
        trace: Some(x[nf..nf + nr].to_vec()),
        road: x[nf + nr..].to_vec(),
        time: (state.step + 1) as f64 * dt,
        step: state.step + 1,
    })
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, SchemeError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return Err(SchemeError::Solver(format!("singular column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    Ok(x)
}
