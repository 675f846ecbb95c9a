//! Reproducible runs: builtin test cases, audited time integration and
//! parameter sweeps.

mod sweep;

pub use sweep::{sweep, SweepOutcome, SweepParam, SweepPoint, SweepSpec};

use thiserror::Error;

use crate::entropy::{
    self, check_step_inequality, estimate_decay_rate, quadratic, steady_state, Boltzmann,
    EntropyError, EntropyRecord, EntropySeries, RateEstimate, SteadyState,
};
use crate::mesh::{build_cartesian, CoupledMesh, Geometry, MeshError};
use crate::scheme::{
    assemble, discretize_initial, step, total_mass, FieldBox, FieldPainter, Params, RoadInterval,
    RoadPainter, SchemeError, State,
};

/// Relative tolerance on the conserved mass.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on the entropy inequality, relative to the initial entropy.
pub const INEQUALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid test case: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("audit failed at step {step}: {check} = {value:e} (tolerance {tolerance:e})")]
    Audit {
        step: usize,
        check: &'static str,
        value: f64,
        tolerance: f64,
    },
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCaseSpec {
    /// Builtin case this spec derives from, if any.
    pub id: Option<u8>,
    pub field: FieldPainter,
    pub road: RoadPainter,
    pub geometry: Geometry,
    pub params: Params,
    pub nx: usize,
    pub ny: usize,
    pub snapshot_times: Vec<f64>,
    /// Stop once `Hⁿ/H¹` falls to this value.
    pub stop_ratio: f64,
    pub max_steps: usize,
    /// Keep every k-th step in the series (steps 0, 1 and the last are
    /// always kept). Audits still run at every step.
    pub record_every: usize,
}

const BANDS: [[f64; 2]; 4] = [[-10.0, -7.5], [-5.0, -2.5], [2.5, 5.0], [7.5, 10.0]];

pub fn builtin_test_case(id: u8) -> Result<TestCaseSpec, RunError> {
    let block = |x: [f64; 2], y: [f64; 2], value| FieldBox { x, y, value };
    let (field, road, nx, ny) = match id {
        1 => (vec![block([-2.5, 2.5], [2.5, 7.5], 100.0)], vec![], 160, 40),
        2 => (
            vec![block([-2.5, 2.5], [2.5, 5.0], 150.0)],
            vec![RoadInterval {
                x: [-2.5, 2.5],
                value: 125.0,
            }],
            160,
            40,
        ),
        3 => (
            BANDS.iter().map(|&x| block(x, [7.5, 10.0], 100.0)).collect(),
            vec![],
            160,
            40,
        ),
        4 => (
            BANDS.iter().map(|&x| block(x, [8.75, 10.0], 150.0)).collect(),
            BANDS
                .iter()
                .map(|&x| RoadInterval { x, value: 62.5 })
                .collect(),
            320,
            80,
        ),
        _ => return Err(RunError::InvalidSpec(format!("no builtin test case {id}"))),
    };
    Ok(TestCaseSpec {
        id: Some(id),
        field: FieldPainter { boxes: field },
        road: RoadPainter { intervals: road },
        geometry: Geometry::new(-40.0, 40.0, 20.0)?,
        params: Params::new(1.0, 1.0, 1.0, 5.0, 0.1)?,
        nx,
        ny,
        snapshot_times: vec![1.0, 10.0, 50.0, 100.0],
        stop_ratio: 1e-5,
        max_steps: 1_000_000,
        record_every: 1,
    })
}

impl TestCaseSpec {
    pub fn validate(&self) -> Result<(), RunError> {
        self.params.validate()?;
        if self.nx == 0 || self.ny == 0 {
            return Err(MeshError::ZeroCount {
                nx: self.nx,
                ny: self.ny,
            }
            .into());
        }
        if self.record_every == 0 {
            return Err(RunError::InvalidSpec("record_every must be at least 1".into()));
        }
        if !(self.stop_ratio > 0.0 && self.stop_ratio < 1.0) {
            return Err(RunError::InvalidSpec(format!(
                "stop ratio must lie in (0, 1), got {}",
                self.stop_ratio
            )));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(RunError::InvalidSpec(format!("bad snapshot time {t}")));
        }
        Ok(())
    }
}

/// Worst values seen by the per-step checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    /// `max |Mⁿ − M⁰| / M⁰`.
    pub mass_defect: f64,
    /// Smallest field, trace or road value from step 1 on.
    pub min_entry: f64,
    /// `max (Hⁿ − Hⁿ⁻¹ + δt Dⁿ)` for the quadratic entropy.
    pub inequality_defect: f64,
    /// Same for the logarithmic entropy, checked from step 2 on.
    pub log_inequality_defect: f64,
    /// Steps where a value underflowed below the logarithmic entropy's domain.
    pub log_checks_skipped: usize,
}

impl Default for Audit {
    fn default() -> Self {
        Self {
            mass_defect: 0.0,
            min_entry: f64::INFINITY,
            inequality_defect: f64::NEG_INFINITY,
            log_inequality_defect: f64::NEG_INFINITY,
            log_checks_skipped: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    EntropyRatio,
    StepCap,
    /// The initial datum already is the steady state.
    AtEquilibrium,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested_time: f64,
    pub state: State,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub mesh: CoupledMesh,
    pub steady: SteadyState,
    /// Quadratic relative entropy, one record per kept step.
    pub series: EntropySeries,
    pub rate: Result<RateEstimate, EntropyError>,
    pub final_state: State,
    pub snapshots: Vec<Snapshot>,
    pub audit: Audit,
    pub stop: StopReason,
}

pub fn run(spec: &TestCaseSpec) -> Result<RunResult, RunError> {
    spec.validate()?;
    let params = spec.params;
    let dt = params.time_step;
    let mesh = build_cartesian(spec.geometry, spec.nx, spec.ny)?;
    let initial = discretize_initial(&spec.field, &spec.road, &mesh)?;
    let mass0 = total_mass(&initial, &mesh);
    let steady = steady_state(mass0, &spec.geometry, params.road_to_field, params.field_to_road)?;
    let op = assemble(&mesh, &params)?;

    let mut snapshot_steps: Vec<(usize, f64)> = spec
        .snapshot_times
        .iter()
        .map(|&t| ((t / dt).round() as usize, t))
        .collect();
    snapshot_steps.sort_by_key(|s| s.0);
    let mut snapshots = Vec::new();
    let mut take_snapshots = |state: &State, snapshots: &mut Vec<Snapshot>| {
        while let Some(&(n, t)) = snapshot_steps.first() {
            if n != state.step {
                break;
            }
            snapshots.push(Snapshot {
                requested_time: t,
                state: state.clone(),
            });
            snapshot_steps.remove(0);
        }
    };

    let mut state = initial.with_diagnostic_trace(&mesh, &params);
    let mut series = EntropySeries::default();
    let record = |state: &State| -> Result<EntropyRecord, RunError> {
        Ok(EntropyRecord {
            step: state.step,
            time: state.time,
            entropy: quadratic::entropy(state, &steady, &mesh),
            dissipation: quadratic::dissipation(state, &steady, &mesh, &params)?,
            mass: total_mass(state, &mesh),
            min_entry: state.min_entry(),
        })
    };
    series.push(record(&state)?);
    take_snapshots(&state, &mut snapshots);

    let h0 = series.records[0].entropy;
    let tol = INEQUALITY_TOL * h0;
    let mut audit = Audit::default();
    let mut h_ref = None;
    let mut log_h_ref = None;
    let mut log_prev: Option<f64> = None;
    let mut prev_entropy = h0;
    let mut unrecorded = None;
    let stop = loop {
        if h0 == 0.0 {
            break StopReason::AtEquilibrium;
        }
        if state.step >= spec.max_steps {
            break StopReason::StepCap;
        }
        let next = step(&op, &state)?;
        let rec = record(&next)?;

        let mass_defect = (rec.mass - mass0).abs() / mass0;
        audit.mass_defect = audit.mass_defect.max(mass_defect);
        if mass_defect > MASS_TOL {
            return Err(audit_failure(rec.step, "relative mass defect", mass_defect, MASS_TOL));
        }
        audit.min_entry = audit.min_entry.min(rec.min_entry);
        if !(rec.min_entry > 0.0) {
            return Err(audit_failure(rec.step, "minimum value", rec.min_entry, 0.0));
        }
        let check = check_step_inequality(prev_entropy, rec.entropy, rec.dissipation, dt, tol);
        audit.inequality_defect = audit.inequality_defect.max(check.defect);
        if !check.passed {
            return Err(audit_failure(rec.step, "entropy inequality defect", check.defect, tol));
        }

        match log_entropy_pair(&next, &steady, &mesh, &params) {
            Ok((h, d)) => {
                let log_tol = INEQUALITY_TOL * *log_h_ref.get_or_insert(h);
                if let Some(prev_h) = log_prev {
                    let check = check_step_inequality(prev_h, h, d, dt, log_tol);
                    audit.log_inequality_defect = audit.log_inequality_defect.max(check.defect);
                    if !check.passed {
                        return Err(audit_failure(
                            rec.step,
                            "log entropy inequality defect",
                            check.defect,
                            log_tol,
                        ));
                    }
                }
                log_prev = Some(h);
            }
            Err(EntropyError::Domain { .. }) => {
                audit.log_checks_skipped += 1;
                log_prev = None;
            }
            Err(e) => return Err(e.into()),
        }

        state = next;
        prev_entropy = rec.entropy;
        if rec.step == 1 || rec.step % spec.record_every == 0 {
            series.push(rec);
            unrecorded = None;
        } else {
            unrecorded = Some(rec);
        }
        take_snapshots(&state, &mut snapshots);
        let h1 = *h_ref.get_or_insert(rec.entropy);
        if rec.entropy <= spec.stop_ratio * h1 {
            break StopReason::EntropyRatio;
        }
    };
    if let Some(rec) = unrecorded {
        series.push(rec);
    }
    if audit.min_entry == f64::INFINITY {
        audit.min_entry = state.min_entry();
    }

    let rate = estimate_decay_rate(&series, dt);
    Ok(RunResult {
        mesh,
        steady,
        series,
        rate,
        final_state: state,
        snapshots,
        audit,
        stop,
    })
}

fn log_entropy_pair(
    state: &State,
    steady: &SteadyState,
    mesh: &CoupledMesh,
    params: &Params,
) -> Result<(f64, f64), EntropyError> {
    Ok((
        entropy::entropy(state, &Boltzmann, steady, mesh)?,
        entropy::dissipation(state, &Boltzmann, steady, mesh, params)?,
    ))
}

fn audit_failure(step: usize, check: &'static str, value: f64, tolerance: f64) -> RunError {
    RunError::Audit {
        step,
        check,
        value,
        tolerance,
    }
}
