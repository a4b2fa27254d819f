//! Finite-time-Lyapunov-exponent series handling: tail-limit estimation and
//! oscillation detection between two time schedules.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("series has {0} entries; need at least 4")]
    TooShort(usize),
    #[error("metadata mismatch between series: {0}")]
    MetadataMismatch(String),
    #[error("tail fraction {0} outside (0, 1)")]
    BadTailFraction(f64),
}

/// Default fraction of a series used by [`tail_limit`].
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
/// Default oscillation-gap tolerance for [`detect_irregular`].
pub const DEFAULT_GAP_TOL: f64 = 1e-2;

/// A finite-time exponent series: (time, (1/time)·log‖·‖) pairs along one
/// named time schedule, tagged with the system and tangent vector it came
/// from.
#[derive(Debug, Clone, Serialize)]
pub struct FtleSeries {
    pub system: String,
    pub vector: String,
    pub schedule: String,
    /// (time, exponent); times strictly increasing.
    pub entries: Vec<(f64, f64)>,
}

impl FtleSeries {
    pub fn new(system: &str, vector: &str, schedule: &str) -> Self {
        FtleSeries {
            system: system.to_string(),
            vector: vector.to_string(),
            schedule: schedule.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, exponent: f64) {
        if let Some(&(last, _)) = self.entries.last() {
            debug_assert!(time > last, "times must be strictly increasing");
        }
        self.entries.push((time, exponent));
    }
}

/// Mean and max−min spread over the final `tail_fraction` of the series.
pub fn tail_limit(series: &FtleSeries, tail_fraction: f64) -> Result<(f64, f64), AnalysisError> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(AnalysisError::BadTailFraction(tail_fraction));
    }
    let n = series.entries.len();
    if n < 4 {
        return Err(AnalysisError::TooShort(n));
    }
    let count = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let tail = &series.entries[n - count..];
    let mean = tail.iter().map(|&(_, e)| e).sum::<f64>() / count as f64;
    let max = tail.iter().map(|&(_, e)| e).fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    Ok((mean, max - min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Irregular,
    Regular,
    Inconclusive,
}

/// Outcome of comparing the tail limits of two schedules for one
/// (system, vector) pair.
#[derive(Debug, Clone, Serialize)]
pub struct IrregularityReport {
    pub system: String,
    pub vector: String,
    pub schedules: [String; 2],
    pub estimates: [f64; 2],
    pub spreads: [f64; 2],
    pub gap: f64,
    pub verdict: Verdict,
}

/// Compare tail limits of two series sharing system and vector.
///
/// `irregular` if the gap exceeds `gap_tol` while both tails have settled
/// (spread < gap_tol/4); `regular` if gap and spreads are all below
/// gap_tol/4; `inconclusive` otherwise.
pub fn detect_irregular(
    a: &FtleSeries,
    b: &FtleSeries,
    gap_tol: f64,
) -> Result<IrregularityReport, AnalysisError> {
    if a.system != b.system || a.vector != b.vector {
        return Err(AnalysisError::MetadataMismatch(format!(
            "({}, {}) vs ({}, {})",
            a.system, a.vector, b.system, b.vector
        )));
    }
    let (est_a, spread_a) = tail_limit(a, DEFAULT_TAIL_FRACTION)?;
    let (est_b, spread_b) = tail_limit(b, DEFAULT_TAIL_FRACTION)?;
    let gap = (est_a - est_b).abs();
    let settled = spread_a < gap_tol / 4.0 && spread_b < gap_tol / 4.0;
    let verdict = if settled && gap > gap_tol {
        Verdict::Irregular
    } else if settled && gap < gap_tol / 4.0 {
        Verdict::Regular
    } else {
        Verdict::Inconclusive
    };
    Ok(IrregularityReport {
        system: a.system.clone(),
        vector: a.vector.clone(),
        schedules: [a.schedule.clone(), b.schedule.clone()],
        estimates: [est_a, est_b],
        spreads: [spread_a, spread_b],
        gap,
        verdict,
    })
}
