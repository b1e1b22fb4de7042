//! The system document read by every subcommand.

use lcs2d::planar::{discriminant, Mat2, Vec2};
use lcs2d::LinearControlSystem;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Drift matrix, row major.
    #[serde(rename = "A")]
    pub a: [[f64; 2]; 2],
    pub eta: [f64; 2],
    /// `[u⁻, u⁺]`.
    pub omega: [f64; 2],
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Default target for `plan`.
    #[serde(default)]
    pub target: Option<[f64; 2]>,
    /// Default start for `reach`; the lower equilibrium when absent.
    #[serde(default)]
    pub start: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    /// Samples per orbit arc.
    pub samples: Option<usize>,
    pub grid_dx: Option<f64>,
    pub grid_dt: Option<f64>,
    pub horizon: Option<f64>,
    /// Grid bounds for `reach`; required when the drift has zero trace.
    pub grid_lower: Option<[f64; 2]>,
    pub grid_upper: Option<[f64; 2]>,
}

/// Family of sub-ranges `[α, ρ]` around a common `ν`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub nu: Option<f64>,
    /// `[α, ρ]` pairs, evaluated in order.
    pub points: Vec<[f64; 2]>,
}

impl SystemConfig {
    pub fn drift(&self) -> Mat2 {
        Mat2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1])
    }

    pub fn control(&self) -> Vec2 {
        Vec2::new(self.eta[0], self.eta[1])
    }

    /// Checks the document and builds the system. The message names the
    /// first rule that fails.
    pub fn system(&self) -> Result<LinearControlSystem, CliError> {
        let drift = self.drift();
        if drift.iter().chain(self.eta.iter()).chain(self.omega.iter()).any(|x| !x.is_finite()) {
            return Err(CliError::Validation("all entries of A, eta and omega must be finite".into()));
        }
        let disc = discriminant(&drift);
        if disc >= 0.0 {
            return Err(CliError::Validation(format!(
                "discriminant nonnegative ({disc:e}): A must have a complex eigenvalue pair"
            )));
        }
        if self.eta == [0.0, 0.0] {
            return Err(CliError::Validation("eta must be nonzero".into()));
        }
        if !(self.omega[0] < self.omega[1]) {
            return Err(CliError::Validation(format!(
                "u⁻ < u⁺ required (omega = [{}, {}])",
                self.omega[0], self.omega[1]
            )));
        }
        if let Some(e) = self.tolerances.epsilon {
            positive("tolerances.epsilon", e)?;
        }
        for (name, x) in [
            ("sampling.grid_dx", self.sampling.grid_dx),
            ("sampling.grid_dt", self.sampling.grid_dt),
            ("sampling.horizon", self.sampling.horizon),
        ] {
            if let Some(x) = x {
                positive(name, x)?;
            }
        }
        LinearControlSystem::new(drift, self.control(), self.omega[0], self.omega[1])
            .map_err(|e| CliError::Validation(e.to_string()))
    }
}

pub(crate) fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite (got {x})")))
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<SystemConfig, CliError> {
    let config: SystemConfig = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    config.system()?;
    Ok(config)
}
