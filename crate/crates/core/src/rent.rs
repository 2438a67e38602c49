//! Rent's-rule routing demand estimates.
//!
//! `E = pins / (N * S)` is the effective pin density over `N` pin-access
//! layers, `G = (E / A)^(1/r)` the implied cell density, and
//! `l = G^(r - 0.5)` the routing demand with its proportionality constant
//! fixed to 1. Only ratios of `l` are meaningful.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RentParams {
    pub r: f64,
    pub a: f64,
}

impl Default for RentParams {
    fn default() -> Self {
        Self { r: 0.75, a: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinDensityInput {
    pub total_pins: u64,
    /// µm²
    pub die_area: f64,
    pub pin_access_layers: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandEstimate {
    pub e_effective: f64,
    pub g: f64,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RentError {
    #[error("die area must be positive, got {0}")]
    Area(f64),
    #[error("pin access layer count must be at least 1")]
    Layers,
    #[error("rent exponent {0} outside (0.5, 1.0)")]
    Exponent(f64),
    #[error("pins per cell must be positive, got {0}")]
    PinsPerCell(f64),
    #[error("baseline `{0}` not among the designs")]
    MissingBaseline(String),
}

impl RentParams {
    pub fn check(&self) -> Result<(), RentError> {
        if !(self.r > 0.5 && self.r < 1.0) {
            return Err(RentError::Exponent(self.r));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(RentError::PinsPerCell(self.a));
        }
        Ok(())
    }
}

pub fn effective_pin_density(input: &PinDensityInput) -> Result<f64, RentError> {
    if !(input.die_area > 0.0) || !input.die_area.is_finite() {
        return Err(RentError::Area(input.die_area));
    }
    if input.pin_access_layers == 0 {
        return Err(RentError::Layers);
    }
    // divide by N last so N layers give exactly 1/N of the single-layer density
    Ok(input.total_pins as f64 / input.die_area / input.pin_access_layers as f64)
}

pub fn cell_density(e: f64, params: &RentParams) -> f64 {
    if e == params.a {
        return 1.0;
    }
    (e / params.a).powf(1.0 / params.r)
}

pub fn routing_demand(g: f64, params: &RentParams) -> Result<f64, RentError> {
    if !(params.r > 0.5) {
        return Err(RentError::Exponent(params.r));
    }
    Ok(g.powf(params.r - 0.5))
}

/// `l` straight from `E`, as one power: `(E/A)^((r - 0.5)/r)`.
pub fn demand_from_density(e: f64, params: &RentParams) -> Result<f64, RentError> {
    params.check()?;
    if e == params.a {
        return Ok(1.0);
    }
    Ok((e / params.a).powf((params.r - 0.5) / params.r))
}

pub fn estimate(input: &PinDensityInput, params: &RentParams) -> Result<DemandEstimate, RentError> {
    params.check()?;
    let e = effective_pin_density(input)?;
    Ok(DemandEstimate {
        e_effective: e,
        g: cell_density(e, params),
        l: demand_from_density(e, params)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRow {
    pub label: String,
    pub estimate: DemandEstimate,
    pub l_normalized: f64,
}

/// Demand of each design relative to `baseline`.
pub fn compare_demand(
    designs: &[(String, PinDensityInput)],
    params: &RentParams,
    baseline: &str,
) -> Result<Vec<DemandRow>, RentError> {
    let est = designs
        .iter()
        .map(|(label, d)| Ok((label.clone(), estimate(d, params)?)))
        .collect::<Result<Vec<_>, RentError>>()?;
    let base = est
        .iter()
        .find(|(l, _)| l == baseline)
        .map(|(_, e)| *e)
        .ok_or_else(|| RentError::MissingBaseline(baseline.to_string()))?;
    Ok(est
        .into_iter()
        .map(|(label, e)| {
            // same density gives exactly 1 even when l itself rounds
            let l_normalized = if e.e_effective == base.e_effective {
                1.0
            } else {
                e.l / base.l
            };
            DemandRow {
                label,
                estimate: e,
                l_normalized,
            }
        })
        .collect())
}

pub fn demand_csv(rows: &[DemandRow]) -> String {
    let mut out = String::from("label,E_effective,G,l_normalized\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.label, r.estimate.e_effective, r.estimate.g, r.l_normalized
        );
    }
    out
}
