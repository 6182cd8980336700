//! The single-element cube and stent scenarios: configuration, drivers
//! and output files.

pub mod config;
pub mod output;
pub mod run;

use std::path::Path;

use serde::Serialize;

pub use config::{cvs_defaults, defaults, parse_config, parse_config_str, sec_defaults, tube_current, Mode, Overrides, Scenario, ScenarioConfig};
pub use output::emit_outputs;
pub use run::{build_problem, run, run_cvs, run_sec, RunOutput, Snapshot, TimeSeriesRecord};

use crate::coil::{mqs_validity, MqsValidity};
use crate::error::Result;
use crate::thermal::{nondim_report, NondimReport};

/// Pre-run estimates printed by `--validate-only`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Validation {
    pub mqs: MqsValidity,
    pub nondim: NondimReport,
    /// Loss density used for the per-step temperature rise (W/m³).
    pub loss_estimate: f64,
}

/// MQS validity and thermal time scales of a scenario. The system length
/// is the largest bounding-box extent of the mesh; the loss estimate is
/// that of an azimuthal eddy current at the largest radius and the peak
/// coil amplitude.
pub fn validate(cfg: &ScenarioConfig, base_dir: &Path) -> Result<Validation> {
    cfg.check()?;
    let mesh = cfg.mesh.build(base_dir)?;
    cfg.check_mesh(&mesh)?;
    let (lo, hi) = mesh.bounding_box();
    let extent = (hi - lo).max();
    let r_max = mesh.nodes.iter().map(|x| x.xy().norm()).fold(0.0, f64::max);
    let i_peak = cfg.coil.amplitude.points().iter().map(|p| p[1].abs()).fold(0.0, f64::max);
    let b_dot = cfg.coil.gain() * i_peak * cfg.coil.omega() * cfg.coil.ac.abs();
    let loss_estimate = cfg.em.sigma * (0.5 * b_dot * r_max).powi(2) / 2.0;
    Ok(Validation {
        mqs: mqs_validity(&cfg.coil, cfg.em.sigma, cfg.coil.mu(), extent)?,
        nondim: nondim_report(&cfg.thermal, extent, loss_estimate, cfg.solver.dt, cfg.mech.delta_theta)?,
        loss_estimate,
    })
}
