//! Scenario configuration in TOML.
//!
//! Every section is optional and every key has a default; unknown keys are
//! rejected. An empty file gives the standard characterization protocol.
//!
//! ```toml
//! [run]
//! name = "baseline"
//! output_dir = "out"
//! duration_s = 30.0
//!
//! [drive]
//! frequency_hz = 1.0
//! dc_pct = 10.0
//! mode = "bimorph"
//!
//! [environment]
//! convection_multiplier = 1.0
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::drive::{CircuitParams, Mode, PwmConfig};
use crate::error::{Error, Result};
use crate::mech::{clearance_over_tip_envelope, mid_span_arm, ActuatorGeometry};
use crate::metrology::{ActuatorModel, CalibrationProblem, FirSpec, SweepGrid};
use crate::sma::{Environment, WireProperties};
use crate::swimmer::SwimmerParams;

/// Tether current limit, A. Not configurable.
pub const CURRENT_LIMIT: f64 = 0.250;

/// Above this duty cycle in still air the actuator may stay stuck in one state.
pub const DRY_AIR_DC_WARN_PCT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub output_dir: PathBuf,
    /// Length of each simulated run, s.
    pub duration_s: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            name: "default".into(),
            output_dir: PathBuf::from("out"),
            duration_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub frequency_hz: f64,
    pub dc_pct: f64,
    pub supply_v: f64,
    pub phase_shift: f64,
    pub mode: Mode,
    pub sample_rate_hz: f64,
    /// Resistance of each SMA sub-circuit, ohm.
    pub r_a: f64,
    /// On-current, A.
    pub i_on: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        let p = PwmConfig::default();
        let c = CircuitParams::default();
        Self {
            frequency_hz: p.frequency,
            dc_pct: 100.0 * p.duty_cycle,
            supply_v: p.supply_on_height,
            phase_shift: p.phase_shift,
            mode: p.mode,
            sample_rate_hz: p.sample_rate,
            r_a: c.r_a,
            i_on: c.i_on,
        }
    }
}

impl DriveSection {
    pub fn pwm(&self) -> PwmConfig {
        PwmConfig {
            frequency: self.frequency_hz,
            duty_cycle: self.dc_pct / 100.0,
            supply_on_height: self.supply_v,
            phase_shift: self.phase_shift,
            mode: self.mode,
            sample_rate: self.sample_rate_hz,
        }
    }

    pub fn circuit(&self) -> CircuitParams {
        CircuitParams {
            r_a: self.r_a,
            i_limit: CURRENT_LIMIT,
            i_on: self.i_on,
        }
    }
}

/// Beam geometry. `moment_arm` defaults to the mid-span wire offset of the
/// given length, angle and apex offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub length: f64,
    pub alpha_deg: f64,
    pub apex_offset: f64,
    pub moment_arm: Option<f64>,
    pub k_beam: f64,
    pub g_tip: f64,
    pub mass: f64,
    pub volume: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = ActuatorGeometry::default();
        Self {
            length: g.length,
            alpha_deg: g.alpha.to_degrees(),
            apex_offset: g.apex_offset,
            moment_arm: None,
            k_beam: g.k_beam,
            g_tip: g.g_tip,
            mass: g.mass,
            volume: g.volume,
        }
    }
}

impl GeometrySection {
    pub fn geometry(&self) -> ActuatorGeometry {
        let alpha = self.alpha_deg.to_radians();
        ActuatorGeometry {
            length: self.length,
            alpha,
            apex_offset: self.apex_offset,
            moment_arm: self
                .moment_arm
                .unwrap_or_else(|| mid_span_arm(self.length, alpha, self.apex_offset)),
            k_beam: self.k_beam,
            g_tip: self.g_tip,
            mass: self.mass,
            volume: self.volume,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetrologySection {
    pub fir: FirSpec,
    pub grid: SweepGrid,
    pub steady_window_s: f64,
}

impl Default for MetrologySection {
    fn default() -> Self {
        Self {
            fir: FirSpec::default(),
            grid: SweepGrid::default(),
            steady_window_s: 15.0,
        }
    }
}

/// Settings of the `swim` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwimSection {
    /// Drive frequency of the trajectory run, Hz.
    pub frequency_hz: f64,
    /// Frequencies of the speed scan, Hz.
    pub scan_hz: Vec<f64>,
    /// Convection multiplier of the wires next to the water surface.
    pub convection_multiplier: f64,
    /// When set, `k_thrust` is refit so that the speed at `fit_frequency_hz`
    /// equals this value, mm/s.
    pub fit_speed_mm_s: Option<f64>,
    pub fit_frequency_hz: f64,
    /// Keep every n-th sample in the trajectory file.
    pub trajectory_stride: usize,
}

impl Default for SwimSection {
    fn default() -> Self {
        Self {
            frequency_hz: 3.0,
            scan_hz: vec![1.0, 2.0, 3.0, 4.0],
            convection_multiplier: Environment::near_water().convection_multiplier,
            fit_speed_mm_s: Some(2.39),
            fit_frequency_hz: 3.0,
            trajectory_stride: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunSection,
    pub drive: DriveSection,
    pub sma: WireProperties,
    pub environment: Environment,
    pub geometry: GeometrySection,
    pub metrology: MetrologySection,
    pub swimmer: SwimmerParams,
    pub swim: SwimSection,
    pub calibration: CalibrationProblem,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.drive.pwm().validate()?;
        self.drive.circuit().validate()?;
        self.sma.validate()?;
        self.environment.validate()?;
        let geom = self.geometry.geometry();
        geom.validate()?;
        clearance_over_tip_envelope(&geom, 7e-3)?;
        self.metrology.fir.validate()?;
        self.swimmer.validate()?;
        self.calibration.validate()?;

        if self.metrology.fir.sample_rate != self.drive.sample_rate_hz {
            return Err(Error::config(
                "metrology.fir.sample_rate",
                "must equal drive.sample_rate_hz",
            ));
        }
        let run = &self.run;
        if !(run.duration_s.is_finite() && run.duration_s > 0.0) {
            return Err(Error::config("run.duration_s", "must be positive"));
        }
        let w = self.metrology.steady_window_s;
        if !(w > 0.0 && w <= run.duration_s) {
            return Err(Error::config(
                "metrology.steady_window_s",
                "must lie in (0, run.duration_s]",
            ));
        }
        let g = &self.metrology.grid;
        if let Some(f) = g.frequencies_hz.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::config(
                "metrology.grid.frequencies_hz",
                format!("frequency {f} must be positive"),
            ));
        }
        if let Some(dc) = g.dc_pct.iter().find(|d| !(0.0..=100.0).contains(*d)) {
            return Err(Error::config(
                "metrology.grid.dc_pct",
                format!("duty cycle {dc} must lie in [0, 100]"),
            ));
        }
        let s = &self.swim;
        if !(s.frequency_hz > 0.0 && s.fit_frequency_hz > 0.0) {
            return Err(Error::config("swim.frequency_hz", "must be positive"));
        }
        if s.scan_hz.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::config("swim.scan_hz", "frequencies must be positive"));
        }
        if !(s.convection_multiplier.is_finite() && s.convection_multiplier >= 1.0) {
            return Err(Error::config("swim.convection_multiplier", "must be at least 1"));
        }
        if s.fit_speed_mm_s.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::config("swim.fit_speed_mm_s", "must be positive"));
        }
        if s.trajectory_stride == 0 {
            return Err(Error::config("swim.trajectory_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Non-fatal notes about risky but valid settings.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let dry = self.environment.convection_multiplier <= 1.0;
        let max_dc = self
            .metrology
            .grid
            .dc_pct
            .iter()
            .copied()
            .fold(self.drive.dc_pct, f64::max);
        if dry && max_dc > DRY_AIR_DC_WARN_PCT {
            out.push(format!(
                "duty cycle {max_dc} % in dry air: the actuator may get stuck in one actuation state above {DRY_AIR_DC_WARN_PCT} %"
            ));
        }
        out
    }

    pub fn actuator_model(&self) -> ActuatorModel {
        ActuatorModel {
            pwm: self.drive.pwm(),
            circuit: self.drive.circuit(),
            wire: self.sma,
            env: self.environment,
            geom: self.geometry.geometry(),
            fir: self.metrology.fir,
            run_length: self.run.duration_s,
            steady_window: self.metrology.steady_window_s,
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let key = e
            .span()
            .map(|s| key_at(text, s.start))
            .unwrap_or_default();
        Error::config(key, e.message().trim())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Dotted key path of the entry containing byte offset `pos`.
fn key_at(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let end = line_start + line.len();
        let t = line.trim();
        if t.starts_with('[') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if pos < end || end == text.len() {
            let key = t
                .split_once('=')
                .map(|(k, _)| k.trim().to_string())
                .filter(|_| !t.starts_with('['));
            return match (table.is_empty(), key) {
                (true, Some(k)) => k,
                (false, Some(k)) => format!("{table}.{k}"),
                (_, None) => table,
            };
        }
        line_start = end;
    }
    table
}
