//! Backward-Euler two-point flux scheme for the field-road system.
//!
//! Unknowns at each time level are the field values `v_K`, the traces
//! `v_K*` of the field on the road edges, and the road values `u_K*`.
//! One step solves the square system
//!
//! ```text
//! m_K (v_K − v_K^old)/δt + d Σ τ_σ (v_K − v_L) + d Σ τ_σ (v_K − v_K*) = 0
//!                   −d τ_σ (v_K − v_K*) = m_K* (μ u_K* − ν v_K*)
//! m_K* (u_K* − u_K*^old)/δt + D Σ τ_σ* (u_K* − u_L*) + m_K* (μ u_K* − ν v_K*) = 0
//! ```
//!
//! The matrix only depends on the mesh and the parameters, so it is
//! assembled and factored once by [`assemble`] and reused by [`step`].

mod dense;
mod exact;
mod initial;
mod operator;

pub use dense::{dense_oracle_step, DENSE_ORACLE_MAX_UNKNOWNS};
pub use initial::{
    discretize_initial, FieldBox, FieldPainter, FieldProfile, RoadInterval, RoadPainter,
    RoadProfile, Sampled,
};
pub use operator::{assemble, step, Layout, SystemOperator, RESIDUAL_TOL};

use thiserror::Error;

use crate::mesh::CoupledMesh;

#[derive(Debug, Error, PartialEq)]
pub enum SchemeError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("initial data must be nonnegative (found {value} in {location})")]
    NegativeInitialData { location: String, value: f64 },
    #[error("initial total mass must be positive, got {0}")]
    DegenerateMass(f64),
    #[error("state has {got} {block} entries, mesh expects {expected}")]
    LengthMismatch {
        block: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("relative residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("dense oracle limited to {limit} unknowns, system has {size}")]
    TooLarge { size: usize, limit: usize },
}

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// `d`, diffusion in the field.
    pub field_diffusion: f64,
    /// `D`, diffusion on the road.
    pub road_diffusion: f64,
    /// `μ`, rate at which individuals leave the road for the field.
    pub road_to_field: f64,
    /// `ν`, rate at which individuals on the field boundary join the road.
    pub field_to_road: f64,
    /// `δt`.
    pub time_step: f64,
}

impl Params {
    pub fn new(
        field_diffusion: f64,
        road_diffusion: f64,
        road_to_field: f64,
        field_to_road: f64,
        time_step: f64,
    ) -> Result<Self, SchemeError> {
        let p = Self {
            field_diffusion,
            road_diffusion,
            road_to_field,
            field_to_road,
            time_step,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        for (name, value) in [
            ("d", self.field_diffusion),
            ("D", self.road_diffusion),
            ("mu", self.road_to_field),
            ("nu", self.field_to_road),
            ("dt", self.time_step),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SchemeError::NonPositiveParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Discrete unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// `v_K`, one per field cell.
    pub field: Vec<f64>,
    /// `v_K*`, one per road cell. Absent for raw initial data; see
    /// [`State::with_diagnostic_trace`].
    pub trace: Option<Vec<f64>>,
    /// `u_K*`, one per road cell.
    pub road: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

impl State {
    /// Spatially constant state, trace included.
    pub fn constant(mesh: &CoupledMesh, field: f64, road: f64) -> Self {
        Self {
            field: vec![field; mesh.n_field_cells()],
            trace: Some(vec![field; mesh.n_road_cells()]),
            road: vec![road; mesh.n_road_cells()],
            time: 0.0,
            step: 0,
        }
    }

    pub fn check_shape(&self, mesh: &CoupledMesh) -> Result<(), SchemeError> {
        let checks = [
            ("field", self.field.len(), mesh.n_field_cells()),
            ("road", self.road.len(), mesh.n_road_cells()),
            (
                "trace",
                self.trace.as_ref().map_or(mesh.n_road_cells(), Vec::len),
                mesh.n_road_cells(),
            ),
        ];
        for (block, got, expected) in checks {
            if got != expected {
                return Err(SchemeError::LengthMismatch {
                    block,
                    got,
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Fills the trace from the interface relation applied to the current
    /// field and road values:
    /// `v_K* = (d τ_σ v_K + m_K* μ u_K*) / (d τ_σ + m_K* ν)`.
    ///
    /// For initial data this only serves diagnostics (entropy dissipation at
    /// `t = 0`); it does not influence the first solve.
    pub fn with_diagnostic_trace(mut self, mesh: &CoupledMesh, params: &Params) -> Self {
        let trace = mesh
            .road_cells()
            .iter()
            .zip(&self.road)
            .map(|(r, &u)| {
                let edge = &mesh.field_edges()[r.edge];
                let flux = params.field_diffusion * edge.transmissivity();
                (flux * self.field[edge.cell] + r.measure * params.road_to_field * u)
                    / (flux + r.measure * params.field_to_road)
            })
            .collect();
        self.trace = Some(trace);
        self
    }

    /// Smallest entry over field, road and (when present) trace values.
    pub fn min_entry(&self) -> f64 {
        let trace = self.trace.as_deref().unwrap_or(&[]);
        self.field
            .iter()
            .chain(&self.road)
            .chain(trace)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `Σ m_K v_K + Σ m_K* u_K*`. Traces carry no mass.
pub fn total_mass(state: &State, mesh: &CoupledMesh) -> f64 {
    let field: f64 = mesh
        .field_cells()
        .iter()
        .zip(&state.field)
        .map(|(c, v)| c.measure * v)
        .sum();
    let road: f64 = mesh
        .road_cells()
        .iter()
        .zip(&state.road)
        .map(|(c, u)| c.measure * u)
        .sum();
    field + road
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cartesian, Geometry};

    #[test]
    fn params_must_be_positive() {
        assert!(Params::new(1.0, 1.0, 1.0, 5.0, 0.1).is_ok());
        let e = Params::new(1.0, 0.0, 1.0, 5.0, 0.1).unwrap_err();
        assert_eq!(
            e,
            SchemeError::NonPositiveParameter {
                name: "D",
                value: 0.0
            }
        );
        assert!(Params::new(1.0, 1.0, 1.0, 5.0, f64::INFINITY).is_err());
        assert!(Params::new(-1.0, 1.0, 1.0, 5.0, 0.1).is_err());
    }

    #[test]
    fn zero_state_has_zero_mass() {
        let mesh = build_cartesian(Geometry::new(0.0, 2.0, 1.0).unwrap(), 4, 2).unwrap();
        let s = State::constant(&mesh, 0.0, 0.0);
        assert_eq!(total_mass(&s, &mesh), 0.0);
        let s = State::constant(&mesh, 1.0, 3.0);
        approx::assert_relative_eq!(total_mass(&s, &mesh), 2.0 + 6.0, max_relative = 1e-15);
    }

    #[test]
    fn diagnostic_trace_single_cell() {
        let mesh = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 1, 1).unwrap();
        let p = Params::new(1.0, 1.0, 2.0, 3.0, 1.0).unwrap();
        let s = State {
            field: vec![4.0],
            trace: None,
            road: vec![1.0],
            time: 0.0,
            step: 0,
        }
        .with_diagnostic_trace(&mesh, &p);
        // (d τ v + m μ u) / (d τ + m ν) = (2·4 + 2·1) / (2 + 3)
        assert_eq!(s.trace.unwrap(), vec![2.0]);
    }

    #[test]
    fn shape_mismatch_detected() {
        let mesh = build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 2, 2).unwrap();
        let mut s = State::constant(&mesh, 1.0, 1.0);
        s.road.pop();
        assert!(matches!(
            s.check_shape(&mesh),
            Err(SchemeError::LengthMismatch { block: "road", .. })
        ));
    }
}
