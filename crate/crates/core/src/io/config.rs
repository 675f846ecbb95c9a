//! `key = value` run configuration.
//!
//! ```text
//! # Test case 1 on a coarser grid
//! testcase = 1
//! nx = 80
//! ny = 20
//! snapshot_times = 1, 10
//! ```
//!
//! Lists are comma separated. `field_box = x0, x1, y0, y1, value` and
//! `road_interval = x0, x1, value` may repeat; when any is present they
//! replace the initial data of the base test case.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::experiments::{builtin_test_case, SweepParam, SweepPoint, SweepSpec, TestCaseSpec};
use crate::mesh::Geometry;
use crate::scheme::{FieldBox, RoadInterval};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// Every problem found in one document.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    VtkLegacy,
    Csv,
}

impl SnapshotFormat {
    pub fn key(self) -> &'static str {
        match self {
            Self::VtkLegacy => "vtk",
            Self::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: TestCaseSpec,
    pub sweep: Option<SweepConfig>,
    pub output_dir: PathBuf,
    pub snapshot_format: SnapshotFormat,
}

impl RunConfig {
    pub fn sweep_spec(&self) -> Option<SweepSpec> {
        self.sweep.as_ref().map(|s| SweepSpec {
            base: self.spec.clone(),
            param: s.param,
            points: s.points.clone(),
        })
    }
}

const KEYS: &[&str] = &[
    "testcase",
    "omega_min",
    "omega_max",
    "height",
    "d",
    "D",
    "mu",
    "nu",
    "dt",
    "nx",
    "ny",
    "snapshot_times",
    "stop_ratio",
    "max_steps",
    "record_every",
    "field_box",
    "road_interval",
    "sweep_param",
    "sweep_values",
    "sweep_dt_values",
    "sweep_nx_values",
    "sweep_ny_values",
    "output_dir",
    "snapshot_format",
];

const REPEATABLE: &[&str] = &["field_box", "road_interval"];

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(err(line, format!("expected `key = value`, got `{content}`")));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            errors.push(err(line, format!("unknown key `{key}`")));
            continue;
        }
        if !REPEATABLE.contains(&key) {
            if let Some(first) = entries.iter().find(|e| e.key == key) {
                errors.push(err(
                    line,
                    format!("duplicate key `{key}` (first set on line {})", first.line),
                ));
                continue;
            }
        }
        entries.push(Entry { line, key, value });
    }

    let get = |key: &str| entries.iter().find(|e| e.key == key);
    let id = match get("testcase") {
        Some(e) => match e.value.parse::<u8>() {
            Ok(id) if (1..=4).contains(&id) => id,
            _ => {
                errors.push(err(e.line, format!("testcase must be 1, 2, 3 or 4, got `{}`", e.value)));
                1
            }
        },
        None => 1,
    };
    let mut spec = builtin_test_case(id).expect("builtin id checked above");
    let mut output_dir = PathBuf::from("out");
    let mut snapshot_format = SnapshotFormat::default();
    let mut field_boxes = Vec::new();
    let mut road_intervals = Vec::new();
    let mut sweep_param = None;
    let mut sweep_lists: [Option<(usize, Vec<f64>)>; 4] = Default::default();
    let (mut omega, mut height) = ([spec.geometry.omega_min, spec.geometry.omega_max], spec.geometry.height);
    let mut geometry_line = None;

    for e in &entries {
        let line = e.line;
        let mut fail = |msg: String| errors.push(err(line, msg));
        match e.key {
            "testcase" => {}
            "omega_min" | "omega_max" | "height" => {
                geometry_line.get_or_insert(line);
                if let Some(v) = number(e, &mut fail) {
                    match e.key {
                        "omega_min" => omega[0] = v,
                        "omega_max" => omega[1] = v,
                        _ => height = v,
                    }
                }
            }
            "d" | "D" | "mu" | "nu" | "dt" | "stop_ratio" => {
                if let Some(v) = positive(e, &mut fail) {
                    match e.key {
                        "d" => spec.params.field_diffusion = v,
                        "D" => spec.params.road_diffusion = v,
                        "mu" => spec.params.road_to_field = v,
                        "nu" => spec.params.field_to_road = v,
                        "dt" => spec.params.time_step = v,
                        _ => spec.stop_ratio = v,
                    }
                }
            }
            "nx" | "ny" => {
                if let Some(n) = count(e, &mut fail) {
                    if e.key == "nx" {
                        spec.nx = n;
                    } else {
                        spec.ny = n;
                    }
                }
            }
            "record_every" => {
                if let Some(n) = count(e, &mut fail) {
                    spec.record_every = n;
                }
            }
            "max_steps" => match e.value.parse::<usize>() {
                Ok(n) => spec.max_steps = n,
                Err(_) => fail(format!("max_steps must be a nonnegative integer, got `{}`", e.value)),
            },
            "snapshot_times" => {
                if let Some(times) = list(e, &mut fail) {
                    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                        fail("snapshot times must be nonnegative".into());
                    } else {
                        spec.snapshot_times = times;
                    }
                }
            }
            "field_box" => {
                if let Some(v) = list(e, &mut fail) {
                    match v[..] {
                        [x0, x1, y0, y1, value] if x0 < x1 && y0 < y1 && value >= 0.0 => {
                            field_boxes.push(FieldBox {
                                x: [x0, x1],
                                y: [y0, y1],
                                value,
                            })
                        }
                        _ => fail("field_box needs x0 < x1, y0 < y1 and a nonnegative value".into()),
                    }
                }
            }
            "road_interval" => {
                if let Some(v) = list(e, &mut fail) {
                    match v[..] {
                        [x0, x1, value] if x0 < x1 && value >= 0.0 => {
                            road_intervals.push(RoadInterval { x: [x0, x1], value })
                        }
                        _ => fail("road_interval needs x0 < x1 and a nonnegative value".into()),
                    }
                }
            }
            "sweep_param" => match e.value {
                "d" => sweep_param = Some((line, SweepParam::FieldDiffusion)),
                "D" => sweep_param = Some((line, SweepParam::RoadDiffusion)),
                other => fail(format!("sweep_param must be `d` or `D`, got `{other}`")),
            },
            "sweep_values" | "sweep_dt_values" | "sweep_nx_values" | "sweep_ny_values" => {
                let slot = ["sweep_values", "sweep_dt_values", "sweep_nx_values", "sweep_ny_values"]
                    .iter()
                    .position(|k| *k == e.key)
                    .unwrap();
                if let Some(v) = list(e, &mut fail) {
                    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                        fail(format!("{} must be positive", e.key));
                    } else if slot >= 2 && v.iter().any(|x| x.fract() != 0.0) {
                        fail(format!("{} must be integers", e.key));
                    } else {
                        sweep_lists[slot] = Some((line, v));
                    }
                }
            }
            "output_dir" => output_dir = PathBuf::from(e.value),
            "snapshot_format" => match e.value {
                "vtk" => snapshot_format = SnapshotFormat::VtkLegacy,
                "csv" => snapshot_format = SnapshotFormat::Csv,
                other => fail(format!("snapshot_format must be `vtk` or `csv`, got `{other}`")),
            },
            _ => unreachable!("key list checked above"),
        }
    }

    match Geometry::new(omega[0], omega[1], height) {
        Ok(g) => spec.geometry = g,
        Err(e) => errors.push(err(geometry_line.unwrap_or(0), e.to_string())),
    }
    if !field_boxes.is_empty() || !road_intervals.is_empty() {
        spec.field.boxes = field_boxes;
        spec.road.intervals = road_intervals;
    }

    let sweep = build_sweep(sweep_param, sweep_lists, &mut errors);
    if errors.is_empty() {
        if let Err(e) = spec.validate() {
            errors.push(err(0, e.to_string()));
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(ConfigErrors(errors));
    }
    Ok(RunConfig {
        spec,
        sweep,
        output_dir,
        snapshot_format,
    })
}

fn build_sweep(
    param: Option<(usize, SweepParam)>,
    lists: [Option<(usize, Vec<f64>)>; 4],
    errors: &mut Vec<ConfigError>,
) -> Option<SweepConfig> {
    let [values, dts, nxs, nys] = lists;
    let Some((line, param)) = param else {
        if let Some((line, _)) = values.iter().chain(&dts).chain(&nxs).chain(&nys).next() {
            errors.push(err(*line, "sweep lists need sweep_param".into()));
        }
        return None;
    };
    let Some((values_line, values)) = values else {
        errors.push(err(line, "sweep_param needs sweep_values".into()));
        return None;
    };
    if values.windows(2).any(|w| w[0] >= w[1]) {
        errors.push(err(values_line, "sweep_values must be strictly increasing".into()));
    }
    for (name, list) in [("sweep_dt_values", &dts), ("sweep_nx_values", &nxs), ("sweep_ny_values", &nys)] {
        if let Some((l, v)) = list {
            if v.len() != values.len() {
                errors.push(err(
                    *l,
                    format!("{name} has {} entries, sweep_values has {}", v.len(), values.len()),
                ));
            }
        }
    }
    if nxs.is_some() != nys.is_some() {
        errors.push(err(values_line, "sweep_nx_values and sweep_ny_values go together".into()));
    }
    let at = |list: &Option<(usize, Vec<f64>)>, i: usize| list.as_ref().and_then(|(_, v)| v.get(i).copied());
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &value)| SweepPoint {
            value,
            resolution: at(&nxs, i).zip(at(&nys, i)).map(|(x, y)| (x as usize, y as usize)),
            time_step: at(&dts, i),
        })
        .collect();
    Some(SweepConfig { param, points })
}

fn err(line: usize, message: String) -> ConfigError {
    ConfigError { line, message }
}

fn number(e: &Entry, fail: &mut impl FnMut(String)) -> Option<f64> {
    match f64::from_str(e.value) {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            fail(format!("{} must be a finite number, got `{}`", e.key, e.value));
            None
        }
    }
}

fn positive(e: &Entry, fail: &mut impl FnMut(String)) -> Option<f64> {
    let v = number(e, fail)?;
    if v > 0.0 {
        Some(v)
    } else {
        fail(format!("{} must be positive, got {v}", e.key));
        None
    }
}

fn count(e: &Entry, fail: &mut impl FnMut(String)) -> Option<usize> {
    match e.value.parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            fail(format!("{} must be a positive integer, got `{}`", e.key, e.value));
            None
        }
    }
}

fn list(e: &Entry, fail: &mut impl FnMut(String)) -> Option<Vec<f64>> {
    if e.value.is_empty() {
        return Some(Vec::new());
    }
    let parsed: Result<Vec<f64>, _> = e.value.split(',').map(|s| f64::from_str(s.trim())).collect();
    match parsed {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Some(v),
        _ => {
            fail(format!("{} must be a comma separated list of numbers, got `{}`", e.key, e.value));
            None
        }
    }
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for RunConfig {
    /// Every setting spelled out, so that the text parses back to `self`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        let p = &s.params;
        if let Some(id) = s.id {
            writeln!(f, "testcase = {id}")?;
        }
        writeln!(f, "omega_min = {:?}", s.geometry.omega_min)?;
        writeln!(f, "omega_max = {:?}", s.geometry.omega_max)?;
        writeln!(f, "height = {:?}", s.geometry.height)?;
        writeln!(f, "d = {:?}", p.field_diffusion)?;
        writeln!(f, "D = {:?}", p.road_diffusion)?;
        writeln!(f, "mu = {:?}", p.road_to_field)?;
        writeln!(f, "nu = {:?}", p.field_to_road)?;
        writeln!(f, "dt = {:?}", p.time_step)?;
        writeln!(f, "nx = {}", s.nx)?;
        writeln!(f, "ny = {}", s.ny)?;
        writeln!(f, "snapshot_times = {}", join(s.snapshot_times.iter().copied()))?;
        writeln!(f, "stop_ratio = {:?}", s.stop_ratio)?;
        writeln!(f, "max_steps = {}", s.max_steps)?;
        writeln!(f, "record_every = {}", s.record_every)?;
        for b in &s.field.boxes {
            writeln!(f, "field_box = {}", join([b.x[0], b.x[1], b.y[0], b.y[1], b.value]))?;
        }
        for r in &s.road.intervals {
            writeln!(f, "road_interval = {}", join([r.x[0], r.x[1], r.value]))?;
        }
        if let Some(sw) = &self.sweep {
            writeln!(f, "sweep_param = {}", sw.param.key())?;
            writeln!(f, "sweep_values = {}", join(sw.points.iter().map(|p| p.value)))?;
            if sw.points.iter().all(|p| p.time_step.is_some()) {
                let dts = sw.points.iter().map(|p| p.time_step.unwrap());
                writeln!(f, "sweep_dt_values = {}", join(dts))?;
            }
            if sw.points.iter().all(|p| p.resolution.is_some()) {
                let res: Vec<(usize, usize)> = sw.points.iter().map(|p| p.resolution.unwrap()).collect();
                writeln!(f, "sweep_nx_values = {}", join(res.iter().map(|r| r.0 as f64)))?;
                writeln!(f, "sweep_ny_values = {}", join(res.iter().map(|r| r.1 as f64)))?;
            }
        }
        writeln!(f, "output_dir = {}", self.output_dir.display())?;
        writeln!(f, "snapshot_format = {}", self.snapshot_format.key())
    }
}
