//! Two-channel PWM excitation of the bimorph and its electrical power.
//!
//! Channel A drives the top wire group and channel B the bottom one. The
//! on-state is modeled as a constant current `i_on` through the per-side
//! resistance `r_a`; supply-side drops in tethers and switches are not part of
//! the model, so the actuator-side on-voltage is `i_on * r_a` (1.1125 V at the
//! defaults).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when deciding on which side of a window edge a sample falls.
const EDGE_EPS: f64 = 1e-9;

/// Which wire groups are allowed to be excited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Bimorph,
    UnimorphUp,
    UnimorphDown,
}

impl Mode {
    pub fn top_enabled(self) -> bool {
        matches!(self, Mode::Bimorph | Mode::UnimorphUp)
    }

    pub fn bottom_enabled(self) -> bool {
        matches!(self, Mode::Bimorph | Mode::UnimorphDown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwmConfig {
    /// PWM frequency in Hz.
    pub frequency: f64,
    /// On-fraction of each period, in `[0, 1]`.
    pub duty_cycle: f64,
    /// Supply-side on-height in volts. Bookkeeping only; the actuator sees
    /// `i_on * r_a`.
    pub supply_on_height: f64,
    /// Delay of channel B relative to channel A, as a fraction of the period.
    pub phase_shift: f64,
    pub mode: Mode,
    /// Sample rate of the generated waveform in Hz.
    pub sample_rate: f64,
}

impl Default for PwmConfig {
    fn default() -> Self {
        Self {
            frequency: 1.0,
            duty_cycle: 0.10,
            supply_on_height: 15.0,
            phase_shift: 0.5,
            mode: Mode::Bimorph,
            sample_rate: 2000.0,
        }
    }
}

impl PwmConfig {
    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.frequency;
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::config("drive.frequency_hz", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.duty_cycle) {
            return Err(Error::config("drive.dc_pct", "must lie in [0, 100]"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate >= 10.0 * f) {
            return Err(Error::config(
                "drive.sample_rate_hz",
                format!("must be at least 10x the PWM frequency ({} Hz)", 10.0 * f),
            ));
        }
        if !(0.0..1.0).contains(&self.phase_shift) {
            return Err(Error::config("drive.phase_shift", "must lie in [0, 1)"));
        }
        if self.mode == Mode::Bimorph && self.windows_overlap() {
            return Err(Error::Overlap {
                duty_cycle: self.duty_cycle,
                phase_shift: self.phase_shift,
            });
        }
        Ok(())
    }

    /// Whether the channel A window `[0, DC)` and the channel B window
    /// `[phase, phase + DC)` intersect on the circle of one period.
    fn windows_overlap(&self) -> bool {
        let dc = self.duty_cycle;
        if dc <= 0.0 {
            return false;
        }
        let gap = self.phase_shift.min(1.0 - self.phase_shift);
        dc > gap + EDGE_EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Resistance of each SMA sub-circuit in ohms (top and bottom are equal).
    pub r_a: f64,
    /// Largest current the tether wires tolerate, in amperes.
    pub i_limit: f64,
    /// Current while a channel is on, in amperes.
    pub i_on: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            r_a: 4.45,
            i_limit: 0.250,
            i_on: 0.250,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_a.is_finite() && self.r_a > 0.0) {
            return Err(Error::InvalidCircuit(format!(
                "resistance must be positive, got {}",
                self.r_a
            )));
        }
        if !(self.i_on > 0.0) {
            return Err(Error::InvalidCircuit(format!(
                "on-current must be positive, got {}",
                self.i_on
            )));
        }
        if self.i_on > self.i_limit {
            return Err(Error::CurrentLimit {
                i_on: self.i_on,
                i_limit: self.i_limit,
            });
        }
        Ok(())
    }

    /// Actuator-side on-voltage under the current-source abstraction.
    pub fn on_voltage(&self) -> f64 {
        self.i_on * self.r_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveSample {
    pub t: f64,
    pub v_t: f64,
    pub v_b: f64,
    pub i_t: f64,
    pub i_b: f64,
}

impl DriveSample {
    /// The same instant with the two channels exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            t: self.t,
            v_t: self.v_b,
            v_b: self.v_t,
            i_t: self.i_b,
            i_b: self.i_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    /// Instantaneous power per sample, watts.
    pub p_a: Vec<f64>,
    /// Mean of `p_a` over the window, watts.
    pub p_bar: f64,
}

impl PowerTrace {
    pub fn peak(&self) -> f64 {
        self.p_a.iter().copied().fold(0.0, f64::max)
    }
}

/// Ohm's law for one sub-circuit.
pub fn wire_current(v: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidCircuit(format!(
            "resistance must be positive, got {r}"
        )));
    }
    Ok(v / r)
}

/// `p_a = (i_t^2 + i_b^2) * r_a`.
pub fn instantaneous_power(i_t: f64, i_b: f64, params: &CircuitParams) -> f64 {
    (i_t * i_t + i_b * i_b) * params.r_a
}

/// Fractional position of `x` cycles within its period, robust to rounding
/// right below an integer.
fn cycle_fraction(x: f64) -> f64 {
    let k = (x + EDGE_EPS).floor();
    (x - k).max(0.0)
}

fn in_window(frac: f64, duty_cycle: f64) -> bool {
    duty_cycle > 0.0 && frac < duty_cycle - EDGE_EPS
}

/// Samples the two phase-shifted PWM channels over `duration` seconds.
///
/// Channel A is on during `[0, DC*T)` of every period and channel B during
/// `[phase*T, phase*T + DC*T)` (mod `T`). Masked channels stay at zero.
pub fn make_pwm_pair(
    cfg: &PwmConfig,
    params: &CircuitParams,
    duration: f64,
) -> Result<Vec<DriveSample>> {
    cfg.validate()?;
    params.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::config("run.duration_s", "must be positive"));
    }
    let n = (duration * cfg.sample_rate).round() as usize;
    let v_on = params.on_voltage();
    let i_on = wire_current(v_on, params.r_a)?;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / cfg.sample_rate;
            let cycles = k as f64 * cfg.frequency / cfg.sample_rate;
            let frac_a = cycle_fraction(cycles);
            let frac_b = cycle_fraction(cycles - cfg.phase_shift + 1.0);
            let a_on = cfg.mode.top_enabled() && in_window(frac_a, cfg.duty_cycle);
            let b_on = cfg.mode.bottom_enabled() && in_window(frac_b, cfg.duty_cycle);
            let (v_t, i_t) = if a_on { (v_on, i_on) } else { (0.0, 0.0) };
            let (v_b, i_b) = if b_on { (v_on, i_on) } else { (0.0, 0.0) };
            DriveSample { t, v_t, v_b, i_t, i_b }
        })
        .collect();
    Ok(samples)
}

/// Instantaneous and mean power over a trace that covers whole PWM periods.
pub fn average_power(
    trace: &[DriveSample],
    cfg: &PwmConfig,
    params: &CircuitParams,
) -> Result<PowerTrace> {
    if trace.is_empty() {
        return Err(Error::Window { periods: 0.0 });
    }
    let periods = trace.len() as f64 * cfg.frequency / cfg.sample_rate;
    if (periods - periods.round()).abs() > 1e-9 || periods.round() < 1.0 {
        return Err(Error::Window { periods });
    }
    let p_a: Vec<f64> = trace
        .iter()
        .map(|s| instantaneous_power(s.i_t, s.i_b, params))
        .collect();
    let p_bar = p_a.iter().sum::<f64>() / p_a.len() as f64;
    Ok(PowerTrace { p_a, p_bar })
}
