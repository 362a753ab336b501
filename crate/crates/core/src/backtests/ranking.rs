//! Ranking of competing forecasts by their mean joint loss.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jointreg::fz0_loss;
use crate::types::{check_columns, ForecastSet, ProbabilityLevel};

/// A forecast set with a model label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledForecasts {
    pub label: String,
    pub forecasts: ForecastSet,
}

impl LabelledForecasts {
    pub fn new(label: impl Into<String>, forecasts: ForecastSet) -> Self {
        Self {
            label: label.into(),
            forecasts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedModel {
    pub label: String,
    pub mean_loss: f64,
}

/// Mean loss of each model, best (smallest) first; ties keep label order.
pub fn rank_by_fz0_loss(
    y: &[f64],
    models: &[LabelledForecasts],
    tau: ProbabilityLevel,
) -> Result<Vec<RankedModel>> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ranked = Vec::with_capacity(models.len());
    for m in models {
        let fc = &m.forecasts;
        let var = fc.var()?;
        if let Some(&e) = fc.es.iter().find(|&&e| e >= 0.0) {
            return Err(Error::InfeasibleEs(e));
        }
        check_columns(y.len(), &fc.es, Some(var), None)?;
        let mut total = 0.0;
        for t in 0..y.len() {
            total += fz0_loss(y[t], var[t], fc.es[t], tau)?;
        }
        ranked.push(RankedModel {
            label: m.label.clone(),
            mean_loss: total / y.len() as f64,
        });
    }
    ranked.sort_by(|a, b| a.mean_loss.total_cmp(&b.mean_loss).then_with(|| a.label.cmp(&b.label)));
    Ok(ranked)
}
