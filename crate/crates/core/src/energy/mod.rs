//! Affine system-power model and the yield trade-off metric.
//!
//! Draw is modeled as idle power plus a lidar-detector term that scales with
//! the fraction of frames actually processed. Camera processing runs on every
//! frame regardless of the schedule.

pub mod reference;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::ScheduleStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "pointpillars")]
    PointPillars,
    #[serde(rename = "pv-rcnn")]
    PvRcnn,
    #[serde(rename = "second")]
    Second,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::PointPillars, ModelId::PvRcnn, ModelId::Second];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::PointPillars => "pointpillars",
            ModelId::PvRcnn => "pv-rcnn",
            ModelId::Second => "second",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config("model_id", format!("unknown model '{s}' (pointpillars, pv-rcnn, second)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyProfile {
    pub model_id: ModelId,
    /// Watts drawn with the lidar detector idle.
    pub idle_power: f64,
    /// Watts drawn while the lidar detector processes a frame.
    pub lidar_active_power: f64,
    /// Share of the cycle the lidar detector is busy on a processed frame.
    pub lidar_busy_fraction: f64,
    pub camera_active_power: f64,
    pub camera_busy_fraction: f64,
}

impl EnergyProfile {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("idle_power", self.idle_power),
            ("lidar_active_power", self.lidar_active_power),
            ("camera_active_power", self.camera_active_power),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, format!("power must be finite and >= 0, got {v}")));
            }
        }
        for (field, v) in [
            ("lidar_busy_fraction", self.lidar_busy_fraction),
            ("camera_busy_fraction", self.camera_busy_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("fraction must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Modeled draw at a given effective processing target.
    pub fn draw_at(&self, effective_target: f64, camera_always_on: bool) -> f64 {
        let camera = if camera_always_on {
            self.camera_busy_fraction * self.camera_active_power
        } else {
            0.0
        };
        self.idle_power + effective_target * self.lidar_busy_fraction * self.lidar_active_power + camera
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

/// Modeled median system draw of a run, in watts.
pub fn simulate_draw(stats: &ScheduleStats, profile: &EnergyProfile, camera_always_on: bool) -> f64 {
    profile.draw_at(stats.effective_target(), camera_always_on)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Minimizes the sum of squared residuals.
    #[default]
    LeastSquares,
    /// Minimizes the largest absolute residual.
    Minimax,
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least-squares" => Ok(FitMethod::LeastSquares),
            "minimax" => Ok(FitMethod::Minimax),
            _ => Err(Error::config("fit_method", format!("unknown fit method '{s}' (least-squares, minimax)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub profile: EnergyProfile,
    pub intercept: f64,
    pub slope: f64,
    pub method: FitMethod,
    /// Observed minus predicted, in input order.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Fits `watts ≈ a + b · target` and maps it onto a profile with the camera
/// share folded into the intercept.
pub fn fit_profile(model_id: ModelId, observations: &[(f64, f64)], method: FitMethod) -> Result<FitResult> {
    if observations.iter().any(|(t, w)| !t.is_finite() || !w.is_finite()) {
        return Err(Error::DegenerateFit("observations must be finite".into()));
    }
    let distinct = observations.iter().any(|(t, _)| *t != observations[0].0);
    if observations.len() < 2 || !distinct {
        return Err(Error::DegenerateFit("need at least two distinct effective targets".into()));
    }
    let (a, b) = match method {
        FitMethod::LeastSquares => least_squares(observations),
        FitMethod::Minimax => minimax(observations),
    };
    if a < 0.0 || b < 0.0 {
        return Err(Error::DegenerateFit(format!(
            "fitted line {a:.3} + {b:.3}·target implies negative power"
        )));
    }
    let profile = EnergyProfile {
        model_id,
        idle_power: a,
        lidar_active_power: b,
        lidar_busy_fraction: 1.0,
        camera_active_power: 0.0,
        camera_busy_fraction: 0.0,
    };
    let residuals = observations.iter().map(|&(t, w)| w - profile.draw_at(t, true)).collect();
    Ok(FitResult {
        profile,
        intercept: a,
        slope: b,
        method,
        residuals,
    })
}

fn least_squares(obs: &[(f64, f64)]) -> (f64, f64) {
    let n = obs.len() as f64;
    let mx = obs.iter().map(|o| o.0).sum::<f64>() / n;
    let my = obs.iter().map(|o| o.1).sum::<f64>() / n;
    let sxy: f64 = obs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = obs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// For a fixed slope the best intercept centers the residual range, leaving
/// half its width as error. That error is convex and piecewise linear in the
/// slope with kinks only at chord slopes, so the optimum is one of them.
fn minimax(obs: &[(f64, f64)]) -> (f64, f64) {
    let spread = |b: f64| {
        let (lo, hi) = obs
            .iter()
            .map(|(x, y)| y - b * x)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
        (hi - lo, (hi + lo) / 2.0)
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for (i, p) in obs.iter().enumerate() {
        for q in &obs[i + 1..] {
            if p.0 == q.0 {
                continue;
            }
            let b = (q.1 - p.1) / (q.0 - p.0);
            let (width, a) = spread(b);
            if best.is_none_or(|(w, _, _)| width < w) {
                best = Some((width, a, b));
            }
        }
    }
    let (_, a, b) = best.expect("at least two distinct targets");
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldInput {
    pub draw_100: f64,
    pub hota_100: f64,
    pub draw_target: f64,
    pub hota_target: f64,
}

/// Watts saved per HOTA point lost relative to full-rate processing.
pub fn compute_yield(y: YieldInput) -> Result<f64> {
    let denom = y.hota_100 - y.hota_target;
    if denom == 0.0 {
        return Err(Error::UndefinedYield);
    }
    Ok((y.draw_100 - y.draw_target) / denom)
}
