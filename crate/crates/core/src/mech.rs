//! Geometry and quasi-static mechanics of the antagonistic bimorph.
//!
//! The central beam is a rigid link on a flexure hinge at its base with
//! rotational stiffness `k_beam`; tip displacement is `g_tip * theta`. Each
//! wire group is tied between the fixed frame and the moving link, at a small
//! angle `alpha` to the beam so the wire line and the beam meet at a virtual
//! apex `apex_offset` behind the hinge. In the force model the wire elongation
//! is linearized to `-/+ r_m * theta` for the top/bottom group.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::drive::{make_pwm_pair, CircuitParams, DriveSample, Mode, PwmConfig};
use crate::error::{Error, Result};
use crate::sma::{step_wire, wire_strain, Environment, WireProperties, WireState};

/// Equilibrium torque residual tolerance, N m.
pub const TORQUE_TOL: f64 = 1e-9;
pub const MAX_SOLVER_ITERATIONS: usize = 200;
/// Clearances at or below this are treated as contact, m.
pub const CONTACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorGeometry {
    /// Device length, m.
    pub length: f64,
    /// Wire mounting angle relative to the beam, rad.
    pub alpha: f64,
    /// Distance from the virtual wire/beam apex to the hinge, m.
    pub apex_offset: f64,
    /// Moment arm of the wire force about the hinge, m.
    pub moment_arm: f64,
    /// Rotational stiffness of the beam, N m/rad.
    pub k_beam: f64,
    /// Tip displacement per radian of beam rotation, m/rad.
    pub g_tip: f64,
    /// kg
    pub mass: f64,
    /// m^3, bookkeeping only.
    pub volume: f64,
}

impl Default for ActuatorGeometry {
    fn default() -> Self {
        let length = 14e-3;
        let alpha = 3.0 * PI / 180.0;
        let apex_offset = 2e-3;
        Self {
            length,
            alpha,
            apex_offset,
            moment_arm: mid_span_arm(length, alpha, apex_offset),
            k_beam: 3.0e-3,
            g_tip: 7.857e-3,
            mass: 10e-6,
            volume: 4.8e-9,
        }
    }
}

/// Wire offset from the beam at mid-span, the default moment arm.
pub fn mid_span_arm(length: f64, alpha: f64, apex_offset: f64) -> f64 {
    (apex_offset + 0.5 * length) * alpha.tan()
}

impl ActuatorGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("alpha", self.alpha),
            ("apex_offset", self.apex_offset),
            ("moment_arm", self.moment_arm),
            ("k_beam", self.k_beam),
            ("g_tip", self.g_tip),
            ("mass", self.mass),
            ("volume", self.volume),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("geometry.{key}"), "must be positive"));
            }
        }
        if self.alpha >= PI / 4.0 {
            return Err(Error::config("geometry.alpha", "must be a small angle"));
        }
        Ok(())
    }

    /// Wire offset from the beam at the base mount, m.
    pub fn base_offset(&self) -> f64 {
        self.apex_offset * self.alpha.tan()
    }

    /// Wire offset from the beam at the distal mount, m.
    pub fn tip_offset(&self) -> f64 {
        (self.apex_offset + self.length) * self.alpha.tan()
    }

    /// Beam angle producing tip displacement `delta`.
    pub fn theta_for_tip(&self, delta: f64) -> f64 {
        delta / self.g_tip
    }

    /// Signed clearance between the slack-side wire chord and the beam at
    /// beam angle `theta`. Positive means the beam lies strictly on its own
    /// side of the wire.
    pub fn clearance_at(&self, theta: f64) -> f64 {
        // For theta >= 0 the link rotates up and the bottom group is the one
        // being stretched; the top case follows by mirror symmetry.
        let th = theta.abs();
        let (s, c) = th.sin_cos();
        let e_b = self.base_offset();
        let e_t = self.tip_offset();
        let l = self.length;
        let p0 = (0.0, -e_b);
        let p1 = (l * c + e_t * s, l * s - e_t * c);
        let dx = p1.0 - p0.0;
        let dy = p1.1 - p0.1;
        let norm = (dx * dx + dy * dy).sqrt();
        // Signed distance of a point above the wire line (beam side).
        let dist = |q: (f64, f64)| (dx * (q.1 - p0.1) - dy * (q.0 - p0.0)) / norm;
        // The beam is a straight segment, so the distance is extremal at its
        // ends: the hinge and the distal end.
        let hinge = dist((0.0, 0.0));
        let tip = dist((l * c, l * s));
        hinge.min(tip)
    }
}

/// Minimum wire-to-beam clearance over `[theta_min, theta_max]`.
pub fn clearance_check(geom: &ActuatorGeometry, theta_min: f64, theta_max: f64) -> Result<f64> {
    let (lo, hi) = if theta_min <= theta_max {
        (theta_min, theta_max)
    } else {
        (theta_max, theta_min)
    };
    const N: usize = 2000;
    let mut worst = (f64::INFINITY, 0.0);
    let mut probe = |th: f64| {
        let c = geom.clearance_at(th);
        if c < worst.0 {
            worst = (c, th);
        }
    };
    probe(lo);
    probe(hi);
    if lo < 0.0 && hi > 0.0 {
        probe(0.0);
    }
    if hi > lo {
        for k in 1..N {
            probe(lo + (hi - lo) * k as f64 / N as f64);
        }
    }
    let (clearance, theta) = worst;
    if clearance <= CONTACT_TOL {
        return Err(Error::DesignViolation { clearance, theta });
    }
    Ok(clearance)
}

/// Clearance over the symmetric tip envelope `+/- tip_travel`.
pub fn clearance_over_tip_envelope(geom: &ActuatorGeometry, tip_travel: f64) -> Result<f64> {
    let th = geom.theta_for_tip(tip_travel).abs();
    clearance_check(geom, -th, th)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub theta: f64,
    pub delta: f64,
    pub stress_top: f64,
    pub stress_bottom: f64,
    /// Torque residual at `theta`, N m.
    pub residual: f64,
}

/// Kinematic strain of each group at beam angle `theta`.
fn kinematic_strains(theta: f64, props: &WireProperties, geom: &ActuatorGeometry) -> (f64, f64) {
    let eps0 = props.eps_l + props.pre_strain;
    let d = geom.moment_arm * theta / props.active_length;
    (eps0 - d, eps0 + d)
}

/// Tension-only constitutive stress of a wire held at `strain`.
pub fn wire_stress(xi: f64, strain: f64, props: &WireProperties) -> f64 {
    (props.modulus(xi) * (strain - props.eps_l * xi)).max(0.0)
}

/// Net torque on the beam at `theta` and its derivative.
fn torque(
    theta: f64,
    xi_top: f64,
    xi_bottom: f64,
    props: &WireProperties,
    geom: &ActuatorGeometry,
) -> (f64, f64, f64, f64) {
    let (eps_t, eps_b) = kinematic_strains(theta, props, geom);
    let s_t = wire_stress(xi_top, eps_t, props);
    let s_b = wire_stress(xi_bottom, eps_b, props);
    let arm_area = geom.moment_arm * props.cross_area();
    let g = arm_area * (s_t - s_b) - geom.k_beam * theta;
    let k_t = if s_t > 0.0 { props.modulus(xi_top) } else { 0.0 };
    let k_b = if s_b > 0.0 { props.modulus(xi_bottom) } else { 0.0 };
    let dg = -arm_area * geom.moment_arm / props.active_length * (k_t + k_b) - geom.k_beam;
    (g, dg, s_t, s_b)
}

/// Quasi-static torque balance `r_m A (sigma_top - sigma_bottom) = k_beam theta`.
///
/// The residual is piecewise linear and strictly decreasing in `theta`, so a
/// Newton iteration safeguarded by the sign-change bracket converges in a
/// handful of steps.
pub fn solve_equilibrium(
    top: &WireState,
    bottom: &WireState,
    props: &WireProperties,
    geom: &ActuatorGeometry,
) -> Result<Equilibrium> {
    let eps0 = props.eps_l + props.pre_strain;
    // Beyond this angle one of the groups is slack whatever its phase.
    let bound = 1.01 * eps0 * props.active_length / geom.moment_arm;
    let mut lo = -bound;
    let mut hi = bound;
    let f = |th: f64| torque(th, top.xi, bottom.xi, props, geom);
    let (g_lo, ..) = f(lo);
    let (g_hi, ..) = f(hi);
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Bracketing { lo: g_lo, hi: g_hi });
    }
    let mut theta = 0.0;
    for _ in 0..MAX_SOLVER_ITERATIONS {
        let (g, dg, s_t, s_b) = f(theta);
        if !g.is_finite() {
            return Err(Error::Numeric("non-finite torque residual".into()));
        }
        if g.abs() < TORQUE_TOL {
            return Ok(Equilibrium {
                theta,
                delta: geom.g_tip * theta,
                stress_top: s_t,
                stress_bottom: s_b,
                residual: g,
            });
        }
        if g > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let newton = theta - g / dg;
        theta = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let (residual, ..) = f(theta);
    Err(Error::Solver {
        iterations: MAX_SOLVER_ITERATIONS,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorState {
    pub top: WireState,
    pub bottom: WireState,
    pub theta: f64,
    /// Tip displacement, m, up positive.
    pub delta: f64,
    pub mode: Mode,
    /// Torque residual of the last equilibrium solve, N m.
    pub residual: f64,
}

impl ActuatorState {
    /// Both groups martensitic at pre-strain, beam straight.
    pub fn relaxed(props: &WireProperties, env: &Environment, mode: Mode) -> Self {
        let w = WireState::relaxed(props, env);
        Self {
            top: w,
            bottom: w,
            theta: 0.0,
            delta: 0.0,
            mode,
            residual: 0.0,
        }
    }

    /// The same state with the two wire groups exchanged.
    pub fn mirrored(&self) -> Self {
        let mode = match self.mode {
            Mode::Bimorph => Mode::Bimorph,
            Mode::UnimorphUp => Mode::UnimorphDown,
            Mode::UnimorphDown => Mode::UnimorphUp,
        };
        Self {
            top: self.bottom,
            bottom: self.top,
            theta: -self.theta,
            delta: -self.delta,
            mode,
            residual: -self.residual,
        }
    }
}

/// Advances both wire groups one sample using the stresses of the previous
/// equilibrium, then re-solves the torque balance.
pub fn step_actuator(
    state: &ActuatorState,
    drive: &DriveSample,
    props: &WireProperties,
    env: &Environment,
    geom: &ActuatorGeometry,
    dt: f64,
) -> Result<ActuatorState> {
    let mut top = step_wire(&state.top, drive.i_t, state.top.stress, props, env, dt)?;
    let mut bottom = step_wire(&state.bottom, drive.i_b, state.bottom.stress, props, env, dt)?;
    let eq = solve_equilibrium(&top, &bottom, props, geom)?;
    top.stress = eq.stress_top;
    bottom.stress = eq.stress_bottom;
    top.strain = wire_strain(top.xi, top.stress, props);
    bottom.strain = wire_strain(bottom.xi, bottom.stress, props);
    Ok(ActuatorState {
        top,
        bottom,
        theta: eq.theta,
        delta: eq.delta,
        mode: state.mode,
        residual: eq.residual,
    })
}

/// Time series produced by [`run_mode_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementTrace {
    pub sample_rate: f64,
    pub t: Vec<f64>,
    /// Tip displacement, m.
    pub delta: Vec<f64>,
    pub xi_top: Vec<f64>,
    pub xi_bottom: Vec<f64>,
    pub temp_top: Vec<f64>,
    pub temp_bottom: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub max_residual: f64,
}

/// Drives the actuator from the relaxed state with the PWM pair described by
/// `cfg` for `duration` seconds.
pub fn run_mode_trace(
    cfg: &PwmConfig,
    params: &CircuitParams,
    props: &WireProperties,
    env: &Environment,
    geom: &ActuatorGeometry,
    duration: f64,
) -> Result<DisplacementTrace> {
    if duration < 2.0 / cfg.frequency {
        return Err(Error::config(
            "run.duration_s",
            "must cover at least two PWM periods",
        ));
    }
    let drive = make_pwm_pair(cfg, params, duration)?;
    run_drive(&drive, cfg.sample_rate, cfg.mode, props, env, geom)
}

/// Integrates the actuator over an explicit drive sequence.
pub fn run_drive(
    drive: &[DriveSample],
    sample_rate: f64,
    mode: Mode,
    props: &WireProperties,
    env: &Environment,
    geom: &ActuatorGeometry,
) -> Result<DisplacementTrace> {
    props.validate()?;
    env.validate()?;
    geom.validate()?;
    let dt = 1.0 / sample_rate;
    let n = drive.len();
    let mut out = DisplacementTrace {
        sample_rate,
        t: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        xi_top: Vec::with_capacity(n),
        xi_bottom: Vec::with_capacity(n),
        temp_top: Vec::with_capacity(n),
        temp_bottom: Vec::with_capacity(n),
        theta_min: 0.0,
        theta_max: 0.0,
        max_residual: 0.0,
    };
    let mut state = ActuatorState::relaxed(props, env, mode);
    let eq = solve_equilibrium(&state.top, &state.bottom, props, geom)?;
    state.theta = eq.theta;
    state.delta = eq.delta;
    for sample in drive {
        state = step_actuator(&state, sample, props, env, geom, dt)?;
        out.t.push(sample.t + dt);
        out.delta.push(state.delta);
        out.xi_top.push(state.top.xi);
        out.xi_bottom.push(state.bottom.xi);
        out.temp_top.push(state.top.temperature);
        out.temp_bottom.push(state.bottom.temperature);
        out.theta_min = out.theta_min.min(state.theta);
        out.theta_max = out.theta_max.max(state.theta);
        out.max_residual = out.max_residual.max(state.residual.abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sma::Direction;

    fn setup() -> (WireProperties, Environment, ActuatorGeometry) {
        (
            WireProperties::default(),
            Environment::default(),
            ActuatorGeometry::default(),
        )
    }

    fn wire(xi: f64, props: &WireProperties) -> WireState {
        let mut w = WireState::martensite(300.0, 0.0, props);
        w.xi = xi;
        w.anchor_xi = xi;
        w.direction = Direction::Heating;
        w.strain = wire_strain(xi, 0.0, props);
        w
    }

    #[test]
    fn static_clearance_is_exact_trigonometry() {
        let g = ActuatorGeometry::default();
        let c = clearance_check(&g, 0.0, 0.0).unwrap();
        // At rest the nearest beam point is the hinge; its distance to the
        // wire line through the apex is apex_offset * sin(alpha).
        let exact = g.apex_offset * g.alpha.sin();
        assert!((c - exact).abs() < 1e-15, "{c} vs {exact}");
    }

    #[test]
    fn default_geometry_clears_seven_mm_envelope() {
        let g = ActuatorGeometry::default();
        let c = clearance_over_tip_envelope(&g, 7e-3).unwrap();
        assert!(c > 0.0);
    }

    #[test]
    fn parallel_wires_collide() {
        let g = ActuatorGeometry {
            alpha: 0.0,
            ..ActuatorGeometry::default()
        };
        for th in [0.01, 0.2, -0.3] {
            assert!(matches!(
                clearance_check(&g, th, th),
                Err(Error::DesignViolation { .. })
            ));
        }
    }

    #[test]
    fn symmetric_relaxed_pair_is_centered() {
        let (p, env, g) = setup();
        let w = WireState::relaxed(&p, &env);
        let eq = solve_equilibrium(&w, &w, &p, &g).unwrap();
        assert_eq!(eq.theta, 0.0);
        assert_eq!(eq.delta, 0.0);
        assert!(eq.stress_top > 0.0 && eq.stress_top == eq.stress_bottom);
    }

    #[test]
    fn swapping_wires_negates_the_solution_exactly() {
        let (p, _, g) = setup();
        for (a, b) in [(0.0, 1.0), (0.3, 0.9), (0.75, 0.2)] {
            let t = wire(a, &p);
            let u = wire(b, &p);
            let e1 = solve_equilibrium(&t, &u, &p, &g).unwrap();
            let e2 = solve_equilibrium(&u, &t, &p, &g).unwrap();
            assert_eq!(e1.theta, -e2.theta);
            assert_eq!(e1.delta, -e2.delta);
            assert_eq!(e1.stress_top, e2.stress_bottom);
            assert_eq!(e1.stress_bottom, e2.stress_top);
        }
    }

    #[test]
    fn contracted_top_bends_up() {
        let (p, _, g) = setup();
        let eq = solve_equilibrium(&wire(0.0, &p), &wire(1.0, &p), &p, &g).unwrap();
        assert!(eq.theta > 0.0 && eq.delta > 0.0);
        assert!(eq.residual.abs() < TORQUE_TOL);
        assert!(eq.stress_top >= 0.0 && eq.stress_bottom >= 0.0);
    }

    #[test]
    fn slack_wire_carries_no_force() {
        let (p, _, g) = setup();
        // Without pre-strain a martensitic group sits exactly at its free
        // length; pushing the beam toward it leaves it slack.
        let p0 = WireProperties {
            pre_strain: 0.0,
            ..p
        };
        let w = wire(1.0, &p0);
        let eq = solve_equilibrium(&w, &w, &p0, &g).unwrap();
        assert_eq!((eq.theta, eq.stress_top, eq.stress_bottom), (0.0, 0.0, 0.0));
        assert_eq!(wire_stress(1.0, p0.eps_l - 1e-4, &p0), 0.0);
        assert!(wire_stress(1.0, p0.eps_l + 1e-4, &p0) > 0.0);
    }

    #[test]
    fn zero_drive_stays_at_rest() {
        let (p, env, g) = setup();
        let cfg = PwmConfig {
            duty_cycle: 0.0,
            ..PwmConfig::default()
        };
        let tr = run_mode_trace(&cfg, &CircuitParams::default(), &p, &env, &g, 10.0).unwrap();
        assert!(tr.delta.iter().all(|d| d.abs() < 1e-6));
        assert!(tr.delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn short_run_rejected() {
        let (p, env, g) = setup();
        let cfg = PwmConfig::default();
        assert!(run_mode_trace(&cfg, &CircuitParams::default(), &p, &env, &g, 1.5).is_err());
    }

    #[test]
    fn mirrored_drive_negates_trace_bit_for_bit() {
        let (p, env, g) = setup();
        let params = CircuitParams::default();
        let cfg = PwmConfig {
            frequency: 5.0,
            phase_shift: 0.3,
            duty_cycle: 0.08,
            ..PwmConfig::default()
        };
        let drive = make_pwm_pair(&cfg, &params, 3.0).unwrap();
        let mirrored: Vec<_> = drive.iter().map(DriveSample::mirrored).collect();
        let a = run_drive(&drive, cfg.sample_rate, Mode::Bimorph, &p, &env, &g).unwrap();
        let b = run_drive(&mirrored, cfg.sample_rate, Mode::Bimorph, &p, &env, &g).unwrap();
        assert!(a.delta.iter().any(|d| d.abs() > 1e-4));
        for (x, y) in a.delta.iter().zip(&b.delta) {
            assert_eq!(*x, -*y);
        }
    }
}
