//! Theoretical decay bound and numerical rate estimation.

use crate::mesh::Geometry;
use crate::scheme::Params;

use super::{EntropyError, EntropySeries};

/// Bounds of `H / H_ref` kept by [`estimate_decay_rate`].
pub const FIT_WINDOW: [f64; 2] = [1e-5, 1e-2];

const MIN_FIT_POINTS: usize = 10;

/// `C_1 = ln 2` and `C_N = (2^{N−1} − 1)/(N − 1)` for `N ≥ 2`.
pub fn dimensional_constant(dim: u32) -> Result<f64, EntropyError> {
    match dim {
        0 => Err(EntropyError::InvalidDimension(dim)),
        1 => Ok(std::f64::consts::LN_2),
        n => Ok((2f64.powi(n as i32 - 1) - 1.0) / (n - 1) as f64),
    }
}

/// Lower bound `Λ₂` on the continuous exponential decay rate of the
/// quadratic relative entropy, for the two-dimensional cylinder.
pub fn theoretical_rate(params: &Params, geometry: &Geometry) -> f64 {
    let Params {
        field_diffusion: d,
        road_diffusion: big_d,
        road_to_field: mu,
        field_to_road: nu,
        ..
    } = *params;
    let c_field = dimensional_constant(2).unwrap();
    let c_road = dimensional_constant(1).unwrap();
    let road_len = geometry.road_length();
    let area = geometry.field_area();
    let height = geometry.height;
    let diam_field = geometry.field_diameter();
    let diam_road = geometry.road_diameter();
    let weight = road_len * nu + area * mu;

    let field_term = 4.0 / (2.0 * mu * c_field * diam_field * diam_field + 3.0 * nu * height)
        * weight
        / area
        * d;
    let road_term = 2.0 / (c_road * diam_road * diam_road * (nu + 6.0 * mu * height)) * weight
        / road_len
        * big_d;
    let exchange_term = 2.0 / 3.0 * weight / area;
    field_term.min(road_term).min(exchange_term)
}

/// Result of the log-linear fit of an entropy tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// `Λ_num = −slope`.
    pub lambda_num: f64,
    /// Slope of `ln H` against `t`.
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the fit residuals in `ln H`.
    pub residual: f64,
    /// Rate of the envelope `(1 + Λ δt)^{−n}` matching the slope:
    /// `(e^{|slope| δt} − 1)/δt`.
    pub discrete_rate: f64,
    pub reference_entropy: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub points: usize,
}

/// Entropy of the first record past the initial datum, or of the only
/// record when the series has length one.
pub fn reference_entropy(series: &EntropySeries) -> Option<f64> {
    series
        .records
        .iter()
        .find(|r| r.step >= 1)
        .or_else(|| series.records.first())
        .map(|r| r.entropy)
}

pub fn estimate_decay_rate(series: &EntropySeries, dt: f64) -> Result<RateEstimate, EntropyError> {
    let h_ref = reference_entropy(series).ok_or(EntropyError::EmptySeries)?;
    let [lower, upper] = FIT_WINDOW;
    let window: Vec<(f64, f64)> = series
        .records
        .iter()
        .filter(|r| r.entropy > 0.0 && h_ref > 0.0)
        .filter(|r| {
            let ratio = r.entropy / h_ref;
            (lower..=upper).contains(&ratio)
        })
        .map(|r| (r.time, r.entropy.ln()))
        .collect();
    if window.len() < MIN_FIT_POINTS {
        return Err(EntropyError::InsufficientDecay {
            lower,
            upper,
            points: window.len(),
            needed: MIN_FIT_POINTS,
        });
    }

    let n = window.len() as f64;
    let t_mean = window.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = window.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in &window {
        sxy += (t - t_mean) * (y - y_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let residual = (window
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();

    Ok(RateEstimate {
        lambda_num: -slope,
        slope,
        intercept,
        residual,
        discrete_rate: (slope.abs() * dt).exp_m1() / dt,
        reference_entropy: h_ref,
        window_start: window[0].0,
        window_end: window[window.len() - 1].0,
        points: window.len(),
    })
}
