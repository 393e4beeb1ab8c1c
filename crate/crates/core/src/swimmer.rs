//! Planar quasi-steady locomotion of the tail-flapping surface swimmer.
//!
//! The tail angle `phi` produces thrust `2 k phi_dot^2` along the body axis,
//! whose cycle mean for `phi = A sin(2 pi f t)` is `k (A 2 pi f)^2`. Forward
//! motion is resisted by `0.5 rho CdA v^2 + b v`. The lateral component of
//! the thrust acts at the tail arm and is balanced by the head's lateral drag,
//! which makes the yaw rate quasi-steady.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::rk4_step;

/// Largest step accepted by [`step_swimmer`].
pub const MAX_SWIM_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwimmerParams {
    /// Body length, m.
    pub body_length: f64,
    /// kg
    pub mass: f64,
    /// Lateral drag coefficient-area product of the head, m^2.
    pub head_lateral_cda: f64,
    /// Lateral drag coefficient-area product of the tail, m^2.
    pub tail_lateral_cda: f64,
    /// N s^2 / rad^2
    pub k_thrust: f64,
    /// Longitudinal drag coefficient-area product, m^2.
    pub longitudinal_cda: f64,
    /// Linear drag coefficient, N s/m.
    pub linear_drag: f64,
    /// Distance from the center of mass to the head drag center, m.
    pub head_arm: f64,
    /// Distance from the center of mass to the tail thrust point, m.
    pub tail_arm: f64,
    /// Tail angle per unit actuator tip displacement, rad/m.
    pub tail_gain: f64,
    /// kg/m^3
    pub rho: f64,
    /// Kinematic viscosity, m^2/s.
    pub nu: f64,
    /// Drive duty cycle, fraction.
    pub duty_cycle: f64,
}

impl Default for SwimmerParams {
    fn default() -> Self {
        Self {
            body_length: 34e-3,
            mass: 30e-6,
            head_lateral_cda: 20e-6,
            tail_lateral_cda: 4e-6,
            k_thrust: 6.35e-10,
            longitudinal_cda: 1.0e-6,
            linear_drag: 3.0e-7,
            head_arm: 10e-3,
            tail_arm: 15e-3,
            tail_gain: 100.0,
            rho: 998.0,
            nu: 1.0e-6,
            duty_cycle: 0.12,
        }
    }
}

impl SwimmerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("swimmer.body_length", self.body_length),
            ("swimmer.mass", self.mass),
            ("swimmer.head_lateral_cda", self.head_lateral_cda),
            ("swimmer.tail_lateral_cda", self.tail_lateral_cda),
            ("swimmer.k_thrust", self.k_thrust),
            ("swimmer.longitudinal_cda", self.longitudinal_cda),
            ("swimmer.head_arm", self.head_arm),
            ("swimmer.tail_arm", self.tail_arm),
            ("swimmer.tail_gain", self.tail_gain),
            ("swimmer.rho", self.rho),
            ("swimmer.nu", self.nu),
            ("swimmer.duty_cycle", self.duty_cycle),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive and finite"));
            }
        }
        if !(self.linear_drag.is_finite() && self.linear_drag >= 0.0) {
            return Err(Error::config("swimmer.linear_drag", "must be non-negative and finite"));
        }
        if self.head_lateral_cda <= self.tail_lateral_cda {
            return Err(Error::config(
                "swimmer.head_lateral_cda",
                "head lateral drag must exceed tail lateral drag",
            ));
        }
        if self.duty_cycle > 1.0 {
            return Err(Error::config("swimmer.duty_cycle", "must not exceed 1"));
        }
        Ok(())
    }

    /// Longitudinal drag at forward speed `v`, N.
    pub fn drag(&self, v: f64) -> f64 {
        0.5 * self.rho * self.longitudinal_cda * v * v.abs() + self.linear_drag * v
    }

    /// Cycle-mean thrust for a sinusoidal tail motion, N.
    pub fn mean_thrust(&self, frequency: f64, amplitude: f64) -> f64 {
        let w = amplitude * 2.0 * PI * frequency;
        self.k_thrust * w * w
    }

    /// Tail angle amplitude for an actuator peak-to-peak tip displacement, rad.
    pub fn tail_amplitude(&self, delta_p2p: f64) -> f64 {
        0.5 * self.tail_gain * delta_p2p
    }

    /// Yaw damping of the head, N m s^2: torque is `c |r| r`.
    fn yaw_damping(&self) -> f64 {
        0.5 * self.rho * self.head_lateral_cda * self.head_arm.powi(3)
    }
}

/// Forward speed at which mean thrust balances drag.
pub fn steady_speed(frequency: f64, amplitude: f64, params: &SwimmerParams) -> f64 {
    let thrust = params.mean_thrust(frequency, amplitude);
    if thrust <= 0.0 {
        return 0.0;
    }
    let b = params.linear_drag;
    // Root of q v^2 + b v - T in the cancellation-free form.
    2.0 * thrust / (b + (b * b + 2.0 * params.rho * params.longitudinal_cda * thrust).sqrt())
}

/// Thrust coefficient that makes [`steady_speed`] return `speed`.
pub fn fit_thrust(frequency: f64, amplitude: f64, speed: f64, params: &SwimmerParams) -> Result<f64> {
    let w = amplitude * 2.0 * PI * frequency;
    if !(w.is_finite() && w > 0.0 && speed.is_finite() && speed > 0.0) {
        return Err(Error::Numeric("thrust fit needs positive frequency, amplitude and speed".into()));
    }
    Ok(params.drag(speed) / (w * w))
}

pub fn reynolds(v: f64, length: f64, nu: f64) -> f64 {
    v * length / nu
}

pub fn body_lengths_per_second(v: f64, body_length: f64) -> f64 {
    v / body_length
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwimmerState {
    pub x: f64,
    pub y: f64,
    /// Heading, rad.
    pub psi: f64,
    /// Forward speed, m/s.
    pub v: f64,
    /// Tail angle, rad.
    pub tail: f64,
}

/// Advances the swimmer by `dt` with the tail moving to `tail_command`.
///
/// The tail rate is the backward difference over the step and is held
/// constant within it.
pub fn step_swimmer(
    state: &SwimmerState,
    tail_command: f64,
    params: &SwimmerParams,
    dt: f64,
) -> Result<SwimmerState> {
    if !(dt > 0.0 && dt <= MAX_SWIM_DT) {
        return Err(Error::Numeric(format!("swimmer step {dt} outside (0, {MAX_SWIM_DT}]")));
    }
    if !tail_command.is_finite() {
        return Err(Error::Numeric("non-finite tail command".into()));
    }
    let phi = tail_command;
    let rate = (tail_command - state.tail) / dt;
    let thrust = 2.0 * params.k_thrust * rate * rate;

    let torque = thrust * phi.sin() * params.tail_arm;
    let yaw_rate = torque.signum() * (torque.abs() / params.yaw_damping()).sqrt();
    let yaw_rate = if torque == 0.0 { 0.0 } else { yaw_rate };

    let forward = thrust * phi.cos();
    let [v] = rk4_step(
        |_, y| [(forward - params.drag(y[0])) / params.mass],
        0.0,
        [state.v],
        dt,
    );
    let psi = state.psi + yaw_rate * dt;
    let psi_mid = state.psi + 0.5 * yaw_rate * dt;
    let ds = 0.5 * (state.v + v) * dt;
    let next = SwimmerState {
        x: state.x + ds * psi_mid.cos(),
        y: state.y + ds * psi_mid.sin(),
        psi,
        v,
        tail: phi,
    };
    if [next.x, next.y, next.psi, next.v].iter().all(|c| c.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Numeric("non-finite swimmer state".into()))
    }
}

/// Sampled swimmer trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<SwimmerState>,
}

/// Integrates the swimmer from rest under a sampled tail-angle history.
pub fn swim(tail: &[f64], dt: f64, params: &SwimmerParams) -> Result<Trajectory> {
    params.validate()?;
    let mut state = SwimmerState {
        tail: tail.first().copied().unwrap_or(0.0),
        ..SwimmerState::default()
    };
    let mut t = Vec::with_capacity(tail.len());
    let mut states = Vec::with_capacity(tail.len());
    for (i, &phi) in tail.iter().enumerate() {
        if i > 0 {
            state = step_swimmer(&state, phi, params, dt)?;
        }
        t.push(i as f64 * dt);
        states.push(state);
    }
    Ok(Trajectory { t, states })
}

/// Sinusoidal tail history `amplitude sin(2 pi f t)` sampled at `dt`.
pub fn sinusoidal_tail(frequency: f64, amplitude: f64, duration: f64, dt: f64) -> Vec<f64> {
    let n = (duration / dt).round() as usize + 1;
    (0..n)
        .map(|i| amplitude * (2.0 * PI * frequency * i as f64 * dt).sin())
        .collect()
}
