//! Arrival forecasts for the next window.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::workload::InferenceTrace;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PredictorKind {
    /// Uses the actual next window.
    Oracle,
    /// Repeats the most recent window.
    Persistence,
    /// Per-offset exponentially weighted mean over prior windows.
    Ewma(f64),
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorKind::Oracle => f.write_str("oracle"),
            PredictorKind::Persistence => f.write_str("persistence"),
            PredictorKind::Ewma(a) => write!(f, "ewma:{a}"),
        }
    }
}

impl FromStr for PredictorKind {
    type Err = PredictError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(PredictorKind::Oracle),
            "persistence" => Ok(PredictorKind::Persistence),
            _ => {
                let alpha = s
                    .strip_prefix("ewma:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| PredictError::UnknownKind(s.to_string()))?;
                check_alpha(alpha)?;
                Ok(PredictorKind::Ewma(alpha))
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("unknown predictor `{0}` (expected oracle, persistence or ewma:<alpha>)")]
    UnknownKind(String),
    #[error("insufficient history: need at least {needed} seconds, have {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("ewma factor {0} outside (0, 1]")]
    AlphaOutOfRange(f64),
    #[error("oracle predictor needs the actual next window")]
    MissingActual,
    #[error("actual window has {got} seconds, horizon is {horizon}")]
    HorizonMismatch { got: usize, horizon: usize },
}

fn check_alpha(alpha: f64) -> Result<(), PredictError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(PredictError::AlphaOutOfRange(alpha))
    }
}

/// Predicted per-model counts, one per second of the horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrivalForecast {
    pub counts: Vec<Vec<u64>>,
}

impl ArrivalForecast {
    pub fn horizon(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn as_trace(&self) -> InferenceTrace {
        InferenceTrace::new(self.counts.clone())
    }
}

impl From<InferenceTrace> for ArrivalForecast {
    fn from(t: InferenceTrace) -> Self {
        ArrivalForecast { counts: t.counts }
    }
}

/// Forecasts the next `horizon` seconds. Prior windows are taken aligned to the
/// end of `history`, so the most recent window is its last `horizon` seconds.
pub fn predict_arrivals(
    kind: PredictorKind,
    history: &InferenceTrace,
    actual_next: Option<&InferenceTrace>,
    horizon: usize,
) -> Result<ArrivalForecast, PredictError> {
    match kind {
        PredictorKind::Oracle => {
            let actual = actual_next.ok_or(PredictError::MissingActual)?;
            if actual.len() != horizon {
                return Err(PredictError::HorizonMismatch { got: actual.len(), horizon });
            }
            Ok(ArrivalForecast { counts: actual.counts.clone() })
        }
        PredictorKind::Persistence => {
            let len = history.len();
            if len < horizon || horizon == 0 {
                return Err(PredictError::InsufficientHistory { needed: horizon, got: len });
            }
            Ok(ArrivalForecast { counts: history.counts.iter().map(|c| c[len - horizon..].to_vec()).collect() })
        }
        PredictorKind::Ewma(alpha) => {
            check_alpha(alpha)?;
            let len = history.len();
            if len < horizon || horizon == 0 {
                return Err(PredictError::InsufficientHistory { needed: horizon, got: len });
            }
            let windows = len / horizon;
            let first = len - windows * horizon;
            let counts = history
                .counts
                .iter()
                .map(|series| {
                    (0..horizon)
                        .map(|off| {
                            let mut e = series[first + off] as f64;
                            for w in 1..windows {
                                let x = series[first + w * horizon + off] as f64;
                                e = alpha * x + (1.0 - alpha) * e;
                            }
                            round_half_up(e)
                        })
                        .collect()
                })
                .collect();
            Ok(ArrivalForecast { counts })
        }
    }
}

fn round_half_up(x: f64) -> u64 {
    let r = (x + 0.5).floor();
    debug_assert!(r >= 0.0);
    r.max(0.0) as u64
}

/// Mean absolute error of a forecast against the actual window.
pub fn mean_abs_error(forecast: &ArrivalForecast, actual: &InferenceTrace) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (f, a) in forecast.counts.iter().zip(&actual.counts) {
        for (x, y) in f.iter().zip(a) {
            total += (*x as f64 - *y as f64).abs();
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}
