//! Oracles and generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use proptest::prelude::*;

use sma_bimorph::mech::{wire_stress, ActuatorGeometry};
use sma_bimorph::sma::{step_wire, Direction, Environment, WireProperties, WireState};

pub const DT: f64 = 0.5e-3;

/// A drive profile for one wire: piecewise-constant current and stress.
#[derive(Debug, Clone)]
pub struct Profile {
    /// `(current A, stress Pa, steps)`
    pub segments: Vec<(f64, f64, usize)>,
}

pub fn profile_strategy() -> impl Strategy<Value = Profile> {
    prop::collection::vec((0.0f64..0.25, 0.0f64..300e6, 1usize..600), 1..12)
        .prop_map(|segments| Profile { segments })
}

/// Runs `profile` through [`step_wire`] and checks the hysteresis invariants
/// after every step.
pub fn check_profile(profile: &Profile, props: &WireProperties, env: &Environment) -> Result<(), String> {
    let mut s = WireState::relaxed(props, env);
    let mut prev_stress = s.stress;
    for &(i, sigma, steps) in &profile.segments {
        for _ in 0..steps {
            let n = step_wire(&s, i, sigma, props, env, DT).map_err(|e| e.to_string())?;
            if !(0.0..=1.0).contains(&n.xi) {
                return Err(format!("xi = {} out of [0, 1]", n.xi));
            }
            let temps = props.transformation_temps(n.stress);
            let (lo, hi) = (temps.cooling_branch(n.temperature), temps.heating_branch(n.temperature));
            if n.xi < lo - 1e-12 || n.xi > hi + 1e-12 {
                return Err(format!(
                    "xi = {} outside major loop [{lo}, {hi}] at T = {}",
                    n.xi, n.temperature
                ));
            }
            if n.stress == prev_stress {
                let ok = match n.direction {
                    Direction::Heating => n.temperature < s.temperature || n.xi <= s.xi,
                    Direction::Cooling => n.temperature > s.temperature || n.xi >= s.xi,
                };
                if !ok {
                    return Err(format!(
                        "xi moved against the branch direction {:?}: {} -> {}",
                        n.direction, s.xi, n.xi
                    ));
                }
            }
            prev_stress = n.stress;
            s = n;
        }
    }
    Ok(())
}

/// Temperatures of a constant-current run sampled every `dt_out`, integrated
/// with `substeps` RK4 steps per sample.
pub fn thermal_run(
    t0: f64,
    i: f64,
    duration: f64,
    dt_out: f64,
    substeps: usize,
    props: &WireProperties,
    env: &Environment,
) -> Vec<f64> {
    let n = (duration / dt_out).round() as usize;
    let h = dt_out / substeps as f64;
    let mut s = WireState::martensite(t0, 0.0, props);
    let mut out = vec![t0];
    for _ in 0..n {
        for _ in 0..substeps {
            s = sma_bimorph::sma::thermal_step(&s, i, props, env, h).unwrap();
        }
        out.push(s.temperature);
    }
    out
}

/// Largest deviation between two runs relative to the reference excursion.
pub fn relative_trajectory_error(coarse: &[f64], reference: &[f64]) -> f64 {
    let t0 = reference[0];
    let span = reference.iter().map(|t| (t - t0).abs()).fold(0.0, f64::max);
    coarse
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / span
}

/// `|E_in - E_stored - E_lost| / E_in` for a sampled constant-current run,
/// with the convective loss integrated by Simpson's rule.
pub fn energy_balance_residual(
    temps: &[f64],
    i: f64,
    dt: f64,
    props: &WireProperties,
    env: &Environment,
) -> f64 {
    let n = temps.len() - 1;
    assert!(n.is_multiple_of(2), "Simpson needs an even number of intervals");
    let g = props.conductance(env);
    let q = |t: f64| g * (t - env.t_amb);
    let mut lost = q(temps[0]) + q(temps[n]);
    for (k, t) in temps.iter().enumerate().take(n).skip(1) {
        lost += if k % 2 == 1 { 4.0 } else { 2.0 } * q(*t);
    }
    lost *= dt / 3.0;
    let e_in = i * i * props.resistance() * n as f64 * dt;
    let stored = props.heat_capacity() * (temps[n] - temps[0]);
    (e_in - stored - lost).abs() / e_in
}

/// Potential energy of the beam and both wire groups at `theta`.
pub fn potential_energy(
    theta: f64,
    xi_top: f64,
    xi_bottom: f64,
    props: &WireProperties,
    geom: &ActuatorGeometry,
) -> f64 {
    let eps0 = props.eps_l + props.pre_strain;
    let d = geom.moment_arm * theta / props.active_length;
    let vol = props.cross_area() * props.active_length;
    let wire = |xi: f64, eps: f64| {
        let e = props.modulus(xi);
        let s = wire_stress(xi, eps, props);
        0.5 * s * s / e
    };
    vol * (wire(xi_top, eps0 - d) + wire(xi_bottom, eps0 + d)) + 0.5 * geom.k_beam * theta * theta
}

/// Beam angle minimizing [`potential_energy`] on a uniform grid of `n` points
/// over the admissible range.
pub fn energy_oracle_theta(
    xi_top: f64,
    xi_bottom: f64,
    props: &WireProperties,
    geom: &ActuatorGeometry,
    n: usize,
) -> f64 {
    let eps0 = props.eps_l + props.pre_strain;
    let bound = 1.01 * eps0 * props.active_length / geom.moment_arm;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=n {
        let th = -bound + 2.0 * bound * k as f64 / n as f64;
        let u = potential_energy(th, xi_top, xi_bottom, props, geom);
        if u < best.0 {
            best = (u, th);
        }
    }
    best.1
}

/// Lag in samples maximizing the cross-correlation of `a` against `b` within
/// `+/- max_lag`.
pub fn xcorr_argmax(a: &[f64], b: &[f64], max_lag: isize) -> isize {
    let n = a.len() as isize;
    let mut best = (f64::NEG_INFINITY, 0);
    for lag in -max_lag..=max_lag {
        let mut s = 0.0;
        for k in 0..n {
            let j = k + lag;
            if j >= 0 && j < n {
                s += a[k as usize] * b[j as usize];
            }
        }
        if s > best.0 {
            best = (s, lag);
        }
    }
    best.1
}
