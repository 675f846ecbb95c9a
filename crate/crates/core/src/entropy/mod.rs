//! Relative entropies, their dissipation, and decay rates.
//!
//! For a convex generator `Φ` with `Φ(1) = Φ'(1) = 0`, the relative entropy
//! of a state with respect to the steady state `(v∞, u∞)` is
//!
//! ```text
//! H = Σ_K m_K v∞ Φ(v_K / v∞) + Σ_K* m_K* u∞ Φ(u_K* / u∞)
//! ```
//!
//! and along the scheme `(Hⁿ − Hⁿ⁻¹)/δt ≤ −Dⁿ ≤ 0`, where the dissipation
//! `Dⁿ` collects flux-weighted differences of `Φ'` across every edge plus the
//! field/road exchange mismatch.

mod rate;

pub use rate::{
    dimensional_constant, estimate_decay_rate, reference_entropy, theoretical_rate, RateEstimate,
    FIT_WINDOW,
};

use thiserror::Error;

use crate::mesh::{CoupledMesh, Geometry, Neighbor};
use crate::scheme::{Params, State};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EntropyError {
    #[error("total mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("{generator} entropy undefined at ratio {value:e} ({location})")]
    Domain {
        generator: &'static str,
        location: String,
        value: f64,
    },
    #[error("dissipation needs the trace values v_K*")]
    MissingTrace,
    #[error("dimension must be at least 1, got {0}")]
    InvalidDimension(u32),
    #[error("fit window H/H_ref in [{lower:e}, {upper:e}] holds {points} records, need {needed}")]
    InsufficientDecay {
        lower: f64,
        upper: f64,
        points: usize,
        needed: usize,
    },
    #[error("entropy series is empty")]
    EmptySeries,
}

/// The constant steady state carrying total mass `M₀`:
/// `ν v∞ = μ u∞` and `m_Ω v∞ + m_ω u∞ = M₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub field: f64,
    pub road: f64,
    pub mass: f64,
}

pub fn steady_state(
    mass: f64,
    geometry: &Geometry,
    road_to_field: f64,
    field_to_road: f64,
) -> Result<SteadyState, EntropyError> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(EntropyError::NonPositiveMass(mass));
    }
    let denom = geometry.road_length() * field_to_road + geometry.field_area() * road_to_field;
    Ok(SteadyState {
        field: road_to_field * mass / denom,
        road: field_to_road * mass / denom,
        mass,
    })
}

/// A strictly convex `Φ` with `Φ(1) = Φ'(1) = 0`.
pub trait EntropyGenerator {
    fn name(&self) -> &'static str;
    fn phi(&self, s: f64) -> f64;
    fn dphi(&self, s: f64) -> f64;
    fn ddphi(&self, s: f64) -> f64;
    /// Smallest admissible argument, if the generator is singular at 0.
    fn min_argument(&self) -> Option<f64> {
        None
    }
}

/// `Φ₂(s) = (s − 1)²/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

/// `Φ(s) = s ln s − s + 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Boltzmann;

/// Ratios below this make the logarithmic entropy raise a domain error.
pub const LOG_FLOOR: f64 = 1e-300;

impl EntropyGenerator for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }
    fn phi(&self, s: f64) -> f64 {
        0.5 * (s - 1.0) * (s - 1.0)
    }
    fn dphi(&self, s: f64) -> f64 {
        s - 1.0
    }
    fn ddphi(&self, _s: f64) -> f64 {
        1.0
    }
}

impl EntropyGenerator for Boltzmann {
    fn name(&self) -> &'static str {
        "boltzmann"
    }
    fn phi(&self, s: f64) -> f64 {
        if s < 0.5 {
            return s * s.ln() - s + 1.0;
        }
        // (1 + x) ln(1 + x) − x, accurate near s = 1.
        let x = s - 1.0;
        s * x.ln_1p() - x
    }
    fn dphi(&self, s: f64) -> f64 {
        s.ln()
    }
    fn ddphi(&self, s: f64) -> f64 {
        1.0 / s
    }
    fn min_argument(&self) -> Option<f64> {
        Some(LOG_FLOOR)
    }
}

fn check_domain<G: EntropyGenerator + ?Sized>(
    generator: &G,
    ratio: f64,
    location: impl FnOnce() -> String,
) -> Result<f64, EntropyError> {
    match generator.min_argument() {
        Some(floor) if !(ratio >= floor) => Err(EntropyError::Domain {
            generator: generator.name(),
            location: location(),
            value: ratio,
        }),
        _ => Ok(ratio),
    }
}

/// Discrete relative entropy of `state` with respect to `steady`.
pub fn entropy<G: EntropyGenerator + ?Sized>(
    state: &State,
    generator: &G,
    steady: &SteadyState,
    mesh: &CoupledMesh,
) -> Result<f64, EntropyError> {
    let mut total = 0.0;
    for (k, (cell, &v)) in mesh.field_cells().iter().zip(&state.field).enumerate() {
        let s = check_domain(generator, v / steady.field, || format!("field cell {k}"))?;
        total += cell.measure * steady.field * generator.phi(s);
    }
    for (r, (cell, &u)) in mesh.road_cells().iter().zip(&state.road).enumerate() {
        let s = check_domain(generator, u / steady.road, || format!("road cell {r}"))?;
        total += cell.measure * steady.road * generator.phi(s);
    }
    Ok(total)
}

/// Discrete entropy dissipation of `state`; requires the trace.
pub fn dissipation<G: EntropyGenerator + ?Sized>(
    state: &State,
    generator: &G,
    steady: &SteadyState,
    mesh: &CoupledMesh,
    params: &Params,
) -> Result<f64, EntropyError> {
    let trace = state.trace.as_ref().ok_or(EntropyError::MissingTrace)?;
    let field_slope = |i: usize, v: f64, what: &str| {
        check_domain(generator, v / steady.field, || format!("{what} {i}")).map(|s| generator.dphi(s))
    };
    let field_dphi: Vec<f64> = state
        .field
        .iter()
        .enumerate()
        .map(|(k, &v)| field_slope(k, v, "field cell"))
        .collect::<Result<_, _>>()?;
    let trace_dphi: Vec<f64> = trace
        .iter()
        .enumerate()
        .map(|(r, &v)| field_slope(r, v, "trace"))
        .collect::<Result<_, _>>()?;
    let road_dphi: Vec<f64> = state
        .road
        .iter()
        .enumerate()
        .map(|(r, &u)| {
            check_domain(generator, u / steady.road, || format!("road cell {r}"))
                .map(|s| generator.dphi(s))
        })
        .collect::<Result<_, _>>()?;

    let d = params.field_diffusion;
    let mut road_side = 0.0;
    let mut interior = 0.0;
    for edge in mesh.field_edges() {
        let k = edge.cell;
        match edge.neighbor {
            Neighbor::Cell(l) => {
                interior += edge.transmissivity()
                    * (state.field[k] - state.field[l])
                    * (field_dphi[k] - field_dphi[l]);
            }
            Neighbor::Road(r) => {
                road_side += edge.transmissivity()
                    * (state.field[k] - trace[r])
                    * (field_dphi[k] - trace_dphi[r]);
            }
            Neighbor::Boundary => {}
        }
    }
    let mut along_road = 0.0;
    for edge in mesh.road_edges() {
        let (a, b) = (edge.left, edge.right);
        along_road += edge.transmissivity()
            * (state.road[a] - state.road[b])
            * (road_dphi[a] - road_dphi[b]);
    }
    let mut exchange = 0.0;
    for (r, cell) in mesh.road_cells().iter().enumerate() {
        let mismatch = state.road[r] / steady.road - trace[r] / steady.field;
        exchange += cell.measure * mismatch * (road_dphi[r] - trace_dphi[r]);
    }
    Ok(d * road_side
        + d * interior
        + params.road_diffusion * along_road
        + params.road_to_field * steady.road * exchange)
}

/// Closed forms of the quadratic entropy and dissipation.
pub mod quadratic {
    use super::*;

    /// `½ Σ m_K (v_K − v∞)²/v∞ + ½ Σ m_K* (u_K* − u∞)²/u∞`.
    pub fn entropy(state: &State, steady: &SteadyState, mesh: &CoupledMesh) -> f64 {
        let field: f64 = mesh
            .field_cells()
            .iter()
            .zip(&state.field)
            .map(|(c, v)| c.measure * (v - steady.field).powi(2) / steady.field)
            .sum();
        let road: f64 = mesh
            .road_cells()
            .iter()
            .zip(&state.road)
            .map(|(c, u)| c.measure * (u - steady.road).powi(2) / steady.road)
            .sum();
        0.5 * field + 0.5 * road
    }

    pub fn dissipation(
        state: &State,
        steady: &SteadyState,
        mesh: &CoupledMesh,
        params: &Params,
    ) -> Result<f64, EntropyError> {
        let trace = state.trace.as_ref().ok_or(EntropyError::MissingTrace)?;
        let (vi, ui) = (steady.field, steady.road);
        let mut road_side = 0.0;
        let mut interior = 0.0;
        for edge in mesh.field_edges() {
            let v = state.field[edge.cell];
            match edge.neighbor {
                Neighbor::Cell(l) => {
                    interior += edge.transmissivity() * (v - state.field[l]).powi(2) / vi
                }
                Neighbor::Road(r) => {
                    road_side += edge.transmissivity() * (v - trace[r]).powi(2) / vi
                }
                Neighbor::Boundary => {}
            }
        }
        let along: f64 = mesh
            .road_edges()
            .iter()
            .map(|e| e.transmissivity() * (state.road[e.left] - state.road[e.right]).powi(2) / ui)
            .sum();
        let exchange: f64 = mesh
            .road_cells()
            .iter()
            .enumerate()
            .map(|(r, c)| c.measure * (state.road[r] / ui - trace[r] / vi).powi(2))
            .sum();
        Ok(params.field_diffusion * (road_side + interior)
            + params.road_diffusion * along
            + params.road_to_field * ui * exchange)
    }
}

/// Outcome of checking `Hⁿ − Hⁿ⁻¹ ≤ −δt Dⁿ` up to a tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCheck {
    pub passed: bool,
    /// `Hⁿ − Hⁿ⁻¹ + δt Dⁿ`; nonpositive when the inequality holds exactly.
    pub defect: f64,
}

pub fn check_step_inequality(prev_h: f64, next_h: f64, next_d: f64, dt: f64, tol: f64) -> StepCheck {
    let defect = next_h - prev_h + dt * next_d;
    StepCheck {
        passed: defect <= tol,
        defect,
    }
}

/// One row of an entropy time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRecord {
    pub step: usize,
    pub time: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub mass: f64,
    pub min_entry: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropySeries {
    pub records: Vec<EntropyRecord>,
}

impl EntropySeries {
    pub fn push(&mut self, record: EntropyRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.step < record.step));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Whether the entropy never increases along the series.
    pub fn is_nonincreasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].entropy <= w[0].entropy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cartesian;

    fn unit() -> CoupledMesh {
        build_cartesian(Geometry::new(0.0, 1.0, 1.0).unwrap(), 1, 1).unwrap()
    }

    #[test]
    fn steady_state_closed_form() {
        let g = Geometry::new(-40.0, 40.0, 20.0).unwrap();
        let s = steady_state(2500.0, &g, 1.0, 5.0).unwrap();
        assert_eq!((s.field, s.road), (1.25, 6.25));

        let g = Geometry::new(0.0, 1.0, 1.0).unwrap();
        let s = steady_state(2.0, &g, 0.3, 0.3).unwrap();
        approx::assert_relative_eq!(s.field, 1.0, max_relative = 1e-15);
        approx::assert_relative_eq!(s.road, 1.0, max_relative = 1e-15);

        let g = Geometry::new(0.0, 10.0, 10.0).unwrap();
        let s = steady_state(2000.0, &g, 2.0, 3.0).unwrap();
        approx::assert_relative_eq!(s.field, 2.0 * 2000.0 / 230.0, max_relative = 1e-15);
        approx::assert_relative_eq!(s.road, 3.0 * 2000.0 / 230.0, max_relative = 1e-15);

        assert!(steady_state(0.0, &g, 1.0, 1.0).is_err());
        assert!(steady_state(-3.0, &g, 1.0, 1.0).is_err());
    }

    #[test]
    fn generators_vanish_at_one() {
        for g in [&Quadratic as &dyn EntropyGenerator, &Boltzmann] {
            assert_eq!(g.phi(1.0), 0.0);
            assert_eq!(g.dphi(1.0), 0.0);
            assert!(g.ddphi(0.5) > 0.0 && g.ddphi(3.0) > 0.0);
        }
        approx::assert_relative_eq!(Boltzmann.phi(2.0), 2.0 * 2f64.ln() - 1.0, max_relative = 1e-15);
        approx::assert_relative_eq!(Boltzmann.phi(1e-3), 1e-3 * 1e-3f64.ln() - 1e-3 + 1.0, max_relative = 1e-14);
        assert_eq!(Boltzmann.phi(1e-250), 1.0);
    }

    #[test]
    fn single_cell_values() {
        let mesh = unit();
        let steady = SteadyState {
            field: 1.0,
            road: 1.0,
            mass: 2.0,
        };
        let s = State {
            field: vec![2.0],
            trace: Some(vec![1.0]),
            road: vec![1.0],
            time: 0.0,
            step: 1,
        };
        assert_eq!(entropy(&s, &Quadratic, &steady, &mesh).unwrap(), 0.5);
        let p = Params::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        // d τ (v − v*)²/v∞ + μ u∞ (u/u∞ − v*/v∞)² = 2·1 + 0
        assert_eq!(dissipation(&s, &Quadratic, &steady, &mesh, &p).unwrap(), 2.0);
    }

    #[test]
    fn steady_state_has_no_entropy() {
        let mesh = build_cartesian(Geometry::new(0.0, 3.0, 1.0).unwrap(), 6, 2).unwrap();
        let steady = SteadyState {
            field: 1.25,
            road: 6.25,
            mass: 0.0,
        };
        let s = State::constant(&mesh, 1.25, 6.25);
        let p = Params::new(1.0, 1.0, 1.0, 5.0, 0.1).unwrap();
        for g in [&Quadratic as &dyn EntropyGenerator, &Boltzmann] {
            assert_eq!(entropy(&s, g, &steady, &mesh).unwrap(), 0.0);
            assert_eq!(dissipation(&s, g, &steady, &mesh, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn log_entropy_domain() {
        let mesh = unit();
        let steady = SteadyState {
            field: 1.0,
            road: 1.0,
            mass: 1.0,
        };
        let s = State {
            field: vec![0.0],
            trace: None,
            road: vec![1.0],
            time: 0.0,
            step: 0,
        };
        assert!(matches!(
            entropy(&s, &Boltzmann, &steady, &mesh),
            Err(EntropyError::Domain { .. })
        ));
        assert!(entropy(&s, &Quadratic, &steady, &mesh).is_ok());
        let p = Params::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            dissipation(&s, &Quadratic, &steady, &mesh, &p),
            Err(EntropyError::MissingTrace)
        );
    }

    #[test]
    fn step_inequality_checks() {
        let c = check_step_inequality(0.0, 0.0, 0.0, 0.1, 0.0);
        assert!(c.passed);
        assert_eq!(c.defect, 0.0);
        let c = check_step_inequality(1.0, 1.5, 0.0, 0.1, 1e-10);
        assert!(!c.passed);
        assert_eq!(c.defect, 0.5);
        assert!(check_step_inequality(1.0, 0.9, 0.9, 0.1, 0.0).passed);
    }

    #[test]
    fn quadratic_dissipation_is_homogeneous() {
        let mesh = build_cartesian(Geometry::new(0.0, 2.0, 1.0).unwrap(), 4, 2).unwrap();
        let steady = SteadyState {
            field: 2.0,
            road: 3.0,
            mass: 0.0,
        };
        let p = Params::new(0.7, 1.1, 1.5, 1.0, 0.1).unwrap();
        let perturbed = |amp: f64| {
            let bump = |i: usize| amp * ((i * 7 % 5) as f64 - 2.0);
            State {
                field: (0..8).map(|i| steady.field * (1.0 + bump(i))).collect(),
                trace: Some((0..4).map(|i| steady.field * (1.0 + bump(i + 1))).collect()),
                road: (0..4).map(|i| steady.road * (1.0 + bump(i + 3))).collect(),
                time: 0.0,
                step: 1,
            }
        };
        let d1 = dissipation(&perturbed(0.01), &Quadratic, &steady, &mesh, &p).unwrap();
        let d3 = dissipation(&perturbed(0.03), &Quadratic, &steady, &mesh, &p).unwrap();
        approx::assert_relative_eq!(d3, 9.0 * d1, max_relative = 1e-12);
    }
}
