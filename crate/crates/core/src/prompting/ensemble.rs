use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    #[default]
    Max,
    Mean,
}

impl std::str::FromStr for EnsembleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            other => Err(Error::InvalidArgument(format!("unknown ensemble mode {other:?}"))),
        }
    }
}

/// Combines log-scores by max or arithmetic mean.
pub fn ensemble(scores: &[f64], mode: EnsembleMode) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("cannot ensemble an empty score list".into()));
    }
    Ok(match mode {
        EnsembleMode::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        EnsembleMode::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
    })
}
