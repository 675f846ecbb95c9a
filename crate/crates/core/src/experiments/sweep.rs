//! Decay rate as a function of one diffusivity.

use rayon::prelude::*;

use super::{run, RunError, TestCaseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// `d`
    FieldDiffusion,
    /// `D`
    RoadDiffusion,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            Self::FieldDiffusion => "d",
            Self::RoadDiffusion => "D",
        }
    }
}

/// Per-point overrides; `None` keeps the base spec's value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub resolution: Option<(usize, usize)>,
    pub time_step: Option<f64>,
}

impl SweepPoint {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            resolution: None,
            time_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: TestCaseSpec,
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub point: SweepPoint,
    pub lambda_num: Result<f64, String>,
    pub fit_residual: Option<f64>,
    pub steps: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.points.is_empty() {
            return Err(RunError::InvalidSpec("sweep grid is empty".into()));
        }
        if let Some(p) = self.points.iter().find(|p| !(p.value > 0.0 && p.value.is_finite())) {
            return Err(RunError::InvalidSpec(format!(
                "sweep values must be positive, got {}",
                p.value
            )));
        }
        if self.points.windows(2).any(|w| w[0].value >= w[1].value) {
            return Err(RunError::InvalidSpec(
                "sweep values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// The spec run at one grid point.
    pub fn point_spec(&self, point: &SweepPoint) -> TestCaseSpec {
        let mut spec = self.base.clone();
        match self.param {
            SweepParam::FieldDiffusion => spec.params.field_diffusion = point.value,
            SweepParam::RoadDiffusion => spec.params.road_diffusion = point.value,
        }
        if let Some((nx, ny)) = point.resolution {
            spec.nx = nx;
            spec.ny = ny;
        }
        if let Some(dt) = point.time_step {
            spec.params.time_step = dt;
        }
        spec.snapshot_times.clear();
        spec
    }
}

/// Runs every grid point independently; results come back in grid order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepOutcome>, RunError> {
    spec.validate()?;
    Ok(spec
        .points
        .par_iter()
        .map(|point| match run(&spec.point_spec(point)) {
            Ok(result) => {
                let steps = result.final_state.step;
                match result.rate {
                    Ok(rate) => SweepOutcome {
                        point: *point,
                        lambda_num: Ok(rate.lambda_num),
                        fit_residual: Some(rate.residual),
                        steps,
                    },
                    Err(e) => SweepOutcome {
                        point: *point,
                        lambda_num: Err(e.to_string()),
                        fit_residual: None,
                        steps,
                    },
                }
            }
            Err(e) => SweepOutcome {
                point: *point,
                lambda_num: Err(e.to_string()),
                fit_residual: None,
                steps: 0,
            },
        })
        .collect())
}
