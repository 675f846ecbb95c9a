//! Entropy time series as CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::entropy::{reference_entropy, EntropyRecord, EntropySeries};

use super::IoError;

pub const SERIES_HEADER: &str = "step,time,entropy,dissipation,mass,min_entry,entropy_ratio";

/// One row per record; floats carry 17 significant digits.
pub fn series_to_csv(series: &EntropySeries) -> String {
    let h_ref = reference_entropy(series).unwrap_or(0.0);
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for r in &series.records {
        let ratio = if h_ref > 0.0 { r.entropy / h_ref } else { 0.0 };
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.step, r.time, r.entropy, r.dissipation, r.mass, r.min_entry, ratio
        )
        .unwrap();
    }
    out
}

pub fn write_series(series: &EntropySeries, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, series_to_csv(series)).map_err(|e| IoError::file(path, e))
}

pub fn parse_series(text: &str) -> Result<EntropySeries, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SERIES_HEADER => {}
        _ => return Err(IoError::format(1, format!("expected header `{SERIES_HEADER}`"))),
    }
    let mut series = EntropySeries::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(IoError::format(i + 1, format!("expected 7 fields, got {}", fields.len())));
        }
        let step = fields[0]
            .parse::<usize>()
            .map_err(|_| IoError::format(i + 1, format!("bad step `{}`", fields[0])))?;
        let mut v = [0.0; 5];
        for (slot, text) in v.iter_mut().zip(&fields[1..6]) {
            *slot = text
                .parse()
                .map_err(|_| IoError::format(i + 1, format!("bad number `{text}`")))?;
        }
        if series.records.last().is_some_and(|r| r.step >= step) {
            return Err(IoError::format(i + 1, "steps must increase".into()));
        }
        series.push(EntropyRecord {
            step,
            time: v[0],
            entropy: v[1],
            dissipation: v[2],
            mass: v[3],
            min_entry: v[4],
        });
    }
    Ok(series)
}

pub fn read_series(path: &Path) -> Result<EntropySeries, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    parse_series(&text)
}

/// `δt` recovered from the first record past step 0.
pub fn series_time_step(series: &EntropySeries) -> Option<f64> {
    series
        .records
        .iter()
        .find(|r| r.step > 0)
        .map(|r| r.time / r.step as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: usize, entropy: f64) -> EntropyRecord {
        EntropyRecord {
            step,
            time: step as f64 * 0.1,
            entropy,
            dissipation: 0.5,
            mass: 2500.0,
            min_entry: 1e-300,
        }
    }

    #[test]
    fn single_record() {
        let mut s = EntropySeries::default();
        s.push(record(0, 3.0));
        let text = series_to_csv(&s);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "0,0.0000000000000000e0,3.0000000000000000e0,5.0000000000000000e-1,\
             2.5000000000000000e3,1.0000000000000000e-300,1.0000000000000000e0"
        );
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = EntropySeries::default();
        for n in 0..20 {
            s.push(record(n, (1.0f64 / 3.0).powi(n as i32) * 7.1));
        }
        let back = parse_series(&series_to_csv(&s)).unwrap();
        assert_eq!(back, s);
        assert_eq!(series_time_step(&back), Some(0.1));
        let ratios: Vec<f64> = series_to_csv(&s)
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(ratios[1], 1.0);
    }

    #[test]
    fn malformed_series() {
        assert!(parse_series("step,time\n").is_err());
        let bad = format!("{SERIES_HEADER}\n1,0.1,1,1,1,1\n");
        assert!(parse_series(&bad).is_err());
        let bad = format!("{SERIES_HEADER}\n1,0.1,1,1,1,1,1\n1,0.1,1,1,1,1,1\n");
        assert!(parse_series(&bad).is_err());
    }
}
