use sprs::{CsMat, FillInReduction, SymmetryCheck};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::mesh::{CoupledMesh, Neighbor};

use super::exact::Dd;
use super::{Params, SchemeError, State};

/// Relative max-norm residual every solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 3;

/// Position of each unknown block in the global vector:
/// `[field | trace | road]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_field: usize,
    pub n_road: usize,
}

impl Layout {
    pub fn size(&self) -> usize {
        self.n_field + 2 * self.n_road
    }

    pub fn field(&self, k: usize) -> usize {
        k
    }

    pub fn trace(&self, r: usize) -> usize {
        self.n_field + r
    }

    pub fn road(&self, r: usize) -> usize {
        self.n_field + self.n_road + r
    }
}

/// The assembled and factored time-step operator.
///
/// Two matrices are kept: the system `A` exactly as the scheme writes it
/// (used for residuals), and its symmetrization `W A` where the road rows
/// are scaled by `μ/ν`. The latter is a symmetric M-matrix, factored once
/// as `L D Lᵀ`. Triangular solves with an M-matrix factor only ever add
/// nonnegative terms, so positivity of the solution survives rounding.
#[derive(Debug, Clone)]
pub struct SystemOperator {
    params: Params,
    layout: Layout,
    matrix: CsMat<f64>,
    field_mass: Vec<f64>,
    road_mass: Vec<f64>,
    road_weight: f64,
    fluxes: Vec<Flux>,
    factor: LdlNumeric<f64, usize>,
}

/// `c_a x_a − c_b x_b`, added to row `gain` and subtracted from row `loss`.
#[derive(Debug, Clone, Copy)]
struct Flux {
    gain: usize,
    loss: usize,
    a: (usize, f64),
    b: (usize, f64),
}

/// Every exchange term of the scheme as a flux between two rows. Each
/// flux enters both rows with opposite signs, so the sum of all rows of
/// `A x − M x/δt` vanishes identically.
fn build_fluxes(mesh: &CoupledMesh, params: &Params, layout: Layout) -> Vec<Flux> {
    let d = params.field_diffusion;
    let (mu, nu) = (params.road_to_field, params.field_to_road);
    let mut fluxes = Vec::new();
    let diffusion = |i: usize, j: usize, c: f64| Flux {
        gain: i,
        loss: j,
        a: (i, c),
        b: (j, c),
    };
    for edge in mesh.field_edges() {
        let k = layout.field(edge.cell);
        let c = d * edge.transmissivity();
        match edge.neighbor {
            Neighbor::Cell(l) => fluxes.push(diffusion(k, layout.field(l), c)),
            Neighbor::Road(r) => fluxes.push(diffusion(k, layout.trace(r), c)),
            Neighbor::Boundary => {}
        }
    }
    for (r, road) in mesh.road_cells().iter().enumerate() {
        let (t, u) = (layout.trace(r), layout.road(r));
        let m = road.measure;
        fluxes.push(Flux {
            gain: u,
            loss: t,
            a: (u, m * mu),
            b: (t, m * nu),
        });
    }
    for edge in mesh.road_edges() {
        let c = params.road_diffusion * edge.transmissivity();
        fluxes.push(diffusion(layout.road(edge.left), layout.road(edge.right), c));
    }
    fluxes
}

/// Sorts row entries by column and merges duplicates in a fixed order.
fn finish_rows(rows: Vec<Vec<(usize, f64)>>, n: usize) -> CsMat<f64> {
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    indptr.push(0);
    for mut row in rows {
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == c {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
            }
        }
        indptr.push(indices.len());
    }
    CsMat::new((n, n), indptr, indices, data)
}

/// Builds the rows of `A` (`road_weight = 1`) or of its symmetrization
/// (`road_weight = μ/ν`).
fn build_rows(mesh: &CoupledMesh, params: &Params, layout: Layout, symmetric: bool) -> CsMat<f64> {
    let d = params.field_diffusion;
    let big_d = params.road_diffusion;
    let (mu, nu) = (params.road_to_field, params.field_to_road);
    let dt = params.time_step;
    let w = if symmetric { mu / nu } else { 1.0 };
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); layout.size()];

    for (k, cell) in mesh.field_cells().iter().enumerate() {
        rows[layout.field(k)].push((layout.field(k), cell.measure / dt));
    }
    for edge in mesh.field_edges() {
        let flux = d * edge.transmissivity();
        let k = layout.field(edge.cell);
        match edge.neighbor {
            Neighbor::Cell(l) => {
                let l = layout.field(l);
                rows[k].push((k, flux));
                rows[k].push((l, -flux));
                rows[l].push((l, flux));
                rows[l].push((k, -flux));
            }
            Neighbor::Road(r) => {
                let t = layout.trace(r);
                rows[k].push((k, flux));
                rows[k].push((t, -flux));
                rows[t].push((k, -flux));
                rows[t].push((t, flux));
            }
            Neighbor::Boundary => {}
        }
    }
    for (r, road) in mesh.road_cells().iter().enumerate() {
        let (t, u) = (layout.trace(r), layout.road(r));
        let m = road.measure;
        rows[t].push((t, m * nu));
        rows[t].push((u, -m * mu));
        rows[u].push((u, w * (m / dt + m * mu)));
        // Symmetric: W·(−m ν) written as −m μ so both triangles agree bitwise.
        rows[u].push((t, if symmetric { -m * mu } else { -m * nu }));
    }
    for edge in mesh.road_edges() {
        let flux = w * big_d * edge.transmissivity();
        let (a, b) = (layout.road(edge.left), layout.road(edge.right));
        rows[a].push((a, flux));
        rows[a].push((b, -flux));
        rows[b].push((b, flux));
        rows[b].push((a, -flux));
    }
    finish_rows(rows, layout.size())
}

/// Assembles and factors the time-step operator for `(mesh, params)`.
pub fn assemble(mesh: &CoupledMesh, params: &Params) -> Result<SystemOperator, SchemeError> {
    params.validate()?;
    let layout = Layout {
        n_field: mesh.n_field_cells(),
        n_road: mesh.n_road_cells(),
    };
    let matrix = build_rows(mesh, params, layout, false);
    let symmetric = build_rows(mesh, params, layout, true);
    let factor = Ldl::new()
        .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
        .check_symmetry(SymmetryCheck::CheckSymmetry)
        .numeric(symmetric.view())
        .map_err(|e| SchemeError::Solver(format!("{e:?}")))?;
    if factor.d().iter().any(|&p| !(p > 0.0)) {
        return Err(SchemeError::Solver("nonpositive pivot in LDLᵀ factor".into()));
    }
    let dt = params.time_step;
    Ok(SystemOperator {
        params: *params,
        layout,
        matrix,
        field_mass: mesh.field_cells().iter().map(|c| c.measure / dt).collect(),
        road_mass: mesh.road_cells().iter().map(|c| c.measure / dt).collect(),
        road_weight: params.road_to_field / params.field_to_road,
        fluxes: build_fluxes(mesh, params, layout),
        factor,
    })
}

impl SystemOperator {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// The unscaled system matrix `A`, rows in scheme order.
    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.layout.size();
        let mut dense = vec![vec![0.0; n]; n];
        for (v, (i, j)) in self.matrix.iter() {
            dense[i][j] += *v;
        }
        dense
    }

    /// Right-hand side `[m_K v_K/δt | 0 | m_K* u_K*/δt]` built from `state`.
    pub fn rhs(&self, state: &State) -> Vec<f64> {
        let mut b = vec![0.0; self.layout.size()];
        for (k, (m, v)) in self.field_mass.iter().zip(&state.field).enumerate() {
            b[self.layout.field(k)] = m * v;
        }
        for (r, (m, u)) in self.road_mass.iter().zip(&state.road).enumerate() {
            b[self.layout.road(r)] = m * u;
        }
        b
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, row) in self.matrix.outer_iterator().enumerate() {
            y[i] = row.iter().map(|(j, a)| a * x[j]).sum();
        }
        y
    }

    /// Packs a state into the global unknown vector. A missing trace is
    /// filled with zeros.
    pub fn pack(&self, state: &State) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.layout.size());
        x.extend_from_slice(&state.field);
        match &state.trace {
            Some(t) => x.extend_from_slice(t),
            None => x.resize(x.len() + self.layout.n_road, 0.0),
        }
        x.extend_from_slice(&state.road);
        x
    }

    fn solve_weighted(&self, b: &[f64]) -> Vec<f64> {
        let mut scaled = b.to_vec();
        for r in 0..self.layout.n_road {
            scaled[self.layout.road(r)] *= self.road_weight;
        }
        self.factor.solve(&scaled)
    }

    /// `b − A x` in flux form, accumulated in double-double arithmetic.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut acc: Vec<Dd> = b.iter().map(|&bi| Dd::product(bi, 1.0)).collect();
        for (k, m) in self.field_mass.iter().enumerate() {
            let i = self.layout.field(k);
            acc[i] = acc[i].add(Dd::product(*m, x[i]).neg());
        }
        for (r, m) in self.road_mass.iter().enumerate() {
            let i = self.layout.road(r);
            acc[i] = acc[i].add(Dd::product(*m, x[i]).neg());
        }
        for f in &self.fluxes {
            let value = Dd::product_difference(f.a.1, x[f.a.0], f.b.1, x[f.b.0]);
            acc[f.gain] = acc[f.gain].add(value.neg());
            acc[f.loss] = acc[f.loss].add(value);
        }
        acc.into_iter().map(Dd::value).collect()
    }

    /// Solves `A x = b`, checking the residual in the max norm.
    ///
    /// The factor belongs to `W A` with `μ/ν` and the diagonal sums
    /// rounded, so its solution conserves mass only up to `δt ‖A‖` ulps.
    /// One refinement pass with the accurate flux-form residual restores
    /// conservation to working precision. A correction that would make an
    /// entry negative is dropped when the unrefined solution already meets
    /// the tolerance.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SchemeError> {
        let mut x = self.solve_weighted(b);
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(x);
        }
        for refinements in 0..=MAX_REFINEMENTS {
            let residual = self.residual(b, &x);
            let rel = residual.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
            if !rel.is_finite() {
                break;
            }
            let converged = rel <= RESIDUAL_TOL;
            if converged && (refinements > 0 || rel == 0.0) {
                return Ok(x);
            }
            if refinements == MAX_REFINEMENTS {
                return if converged { Ok(x) } else { Err(residual_error(rel)) };
            }
            let correction = self.solve_weighted(&residual);
            let refined: Vec<f64> = x.iter().zip(&correction).map(|(xi, ci)| xi + ci).collect();
            if converged && refined.iter().zip(&x).any(|(r, xi)| *r < 0.0 && *xi >= 0.0) {
                return Ok(x);
            }
            x = refined;
        }
        Err(residual_error(f64::NAN))
    }
}

fn residual_error(residual: f64) -> SchemeError {
    SchemeError::Residual {
        residual,
        tolerance: RESIDUAL_TOL,
    }
}

/// Advances `state` by one time step.
pub fn step(op: &SystemOperator, state: &State) -> Result<State, SchemeError> {
    let layout = op.layout;
    for (block, got, expected) in [
        ("field", state.field.len(), layout.n_field),
        ("road", state.road.len(), layout.n_road),
    ] {
        if got != expected {
            return Err(SchemeError::LengthMismatch {
                block,
                got,
                expected,
            });
        }
    }
    let x = op.solve(&op.rhs(state))?;
    let (field, rest) = x.split_at(layout.n_field);
    let (trace, road) = rest.split_at(layout.n_road);
    Ok(State {
        field: field.to_vec(),
        trace: Some(trace.to_vec()),
        road: road.to_vec(),
        time: (state.step + 1) as f64 * op.params.time_step,
        step: state.step + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Geometry};
    use crate::scheme::total_mass;

    fn unit_mesh() -> CoupledMesh {
        build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 1, 1).unwrap()
    }

    #[test]
    fn hand_assembled_three_by_three() {
        let (d, big_d, mu, nu, dt) = (0.7, 1.3, 2.0, 5.0, 0.25);
        let op = assemble(&unit_mesh(), &Params::new(d, big_d, mu, nu, dt).unwrap()).unwrap();
        let expected = [
            [1.0 / dt + 2.0 * d, -2.0 * d, 0.0],
            [-2.0 * d, 2.0 * d + nu, -mu],
            [0.0, -nu, 1.0 / dt + mu],
        ];
        let a = op.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - expected[i][j]).abs() <= 1e-14, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn symmetrization_is_row_scaling() {
        let mesh = build_cartesian(Geometry::new(0.0, 3.0, 2.0).unwrap(), 3, 2).unwrap();
        let p = Params::new(0.3, 2.0, 1.5, 4.0, 0.1).unwrap();
        let layout = Layout {
            n_field: 6,
            n_road: 3,
        };
        let a = build_rows(&mesh, &p, layout, false);
        let s = build_rows(&mesh, &p, layout, true);
        let w = p.road_to_field / p.field_to_road;
        for (v, (i, j)) in a.iter() {
            let scale = if i >= layout.road(0) { w } else { 1.0 };
            let sv = *s.get(i, j).unwrap();
            approx::assert_relative_eq!(scale * v, sv, max_relative = 1e-15);
            assert_eq!(Some(&sv), s.get(j, i));
        }
    }

    #[test]
    fn fixed_point_and_mass() {
        let mesh = build_cartesian(Geometry::new(-2.0, 2.0, 1.0).unwrap(), 8, 3).unwrap();
        let p = Params::new(1.0, 1.0, 1.0, 5.0, 0.1).unwrap();
        let op = assemble(&mesh, &p).unwrap();
        let steady = State::constant(&mesh, 1.25, 6.25);
        let b = op.rhs(&steady);
        let ax = op.apply(&op.pack(&steady));
        for (x, y) in ax.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * y.abs().max(1.0));
        }
        let next = step(&op, &steady).unwrap();
        for (a, b) in op.pack(&next).iter().zip(op.pack(&steady)) {
            assert!((a - b).abs() <= 1e-13);
        }
        approx::assert_relative_eq!(
            total_mass(&next, &mesh),
            total_mass(&steady, &mesh),
            max_relative = 1e-14
        );
        assert_eq!(next.step, 1);
        approx::assert_relative_eq!(next.time, 0.1);
    }

    #[test]
    fn rejects_wrong_shape() {
        let op = assemble(&unit_mesh(), &Params::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let s = State {
            field: vec![1.0, 2.0],
            trace: None,
            road: vec![0.0],
            time: 0.0,
            step: 0,
        };
        assert!(matches!(step(&op, &s), Err(SchemeError::LengthMismatch { .. })));
    }
}
