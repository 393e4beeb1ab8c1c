//! Lumped electro-thermo-mechanical model of one SMA wire group.
//!
//! A wire group is `strands` identical NiTi wires in parallel. Temperature
//! follows the lumped heat balance
//!
//! ```text
//! m c_p dT/dt = i^2 R - h A_lat (T - T_amb)
//! ```
//!
//! integrated with fixed-step RK4. The martensite fraction follows cosine
//! kinetics with linearly stress-shifted transformation temperatures; a
//! reversal of the temperature direction re-anchors the active branch so
//! partial cycles trace minor loops nested inside the major loop.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::rk4_step;

/// Largest thermal step accepted by [`thermal_step`].
pub const MAX_THERMAL_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WireProperties {
    /// Strand diameter, m.
    pub diameter: f64,
    /// Active length of each strand, m.
    pub active_length: f64,
    /// Number of strands electrically in parallel on one side.
    pub strands: u32,
    /// kg/m^3
    pub density: f64,
    /// J/(kg K)
    pub specific_heat: f64,
    /// Convection coefficient in dry air, W/(m^2 K).
    pub convection: f64,
    /// Zero-stress transformation temperatures, K.
    pub m_f: f64,
    pub m_s: f64,
    pub a_s: f64,
    pub a_f: f64,
    /// Stress influence coefficients, Pa/K.
    pub c_m: f64,
    pub c_a: f64,
    /// Young's moduli of austenite and martensite, Pa.
    pub e_a: f64,
    pub e_m: f64,
    /// Maximum recoverable strain.
    pub eps_l: f64,
    /// Electrical resistivity, ohm m.
    pub resistivity: f64,
    /// Elastic strain of the relaxed (fully martensitic) wire beyond `eps_l`
    /// at assembly.
    pub pre_strain: f64,
    /// Latent heat of transformation, J/kg. Zero disables the term.
    pub latent_heat: f64,
}

impl Default for WireProperties {
    fn default() -> Self {
        Self {
            diameter: 38.1e-6,
            active_length: 12.4e-3,
            strands: 2,
            density: 6450.0,
            specific_heat: 500.0,
            convection: 150.0,
            m_f: celsius(40.0),
            m_s: celsius(60.0),
            a_s: celsius(70.0),
            a_f: celsius(90.0),
            c_m: 10e6,
            c_a: 10e6,
            e_a: 75e9,
            e_m: 28e9,
            eps_l: 0.04,
            resistivity: 8.2e-7,
            pre_strain: 0.01 * 0.04,
            latent_heat: 0.0,
        }
    }
}

pub fn celsius(c: f64) -> f64 {
    c + 273.15
}

impl WireProperties {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("diameter", self.diameter),
            ("active_length", self.active_length),
            ("density", self.density),
            ("specific_heat", self.specific_heat),
            ("convection", self.convection),
            ("c_m", self.c_m),
            ("c_a", self.c_a),
            ("e_a", self.e_a),
            ("e_m", self.e_m),
            ("resistivity", self.resistivity),
            ("m_f", self.m_f),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("sma.{key}"), "must be positive"));
            }
        }
        if self.strands == 0 {
            return Err(Error::config("sma.strands", "must be at least 1"));
        }
        if !(self.m_f < self.m_s && self.m_s <= self.a_s && self.a_s < self.a_f) {
            return Err(Error::config(
                "sma.a_f",
                "transformation temperatures must satisfy m_f < m_s <= a_s < a_f",
            ));
        }
        if !(self.eps_l > 0.0 && self.eps_l <= 0.08) {
            return Err(Error::config("sma.eps_l", "must lie in (0, 0.08]"));
        }
        if !(self.pre_strain.is_finite() && self.pre_strain >= 0.0) {
            return Err(Error::config("sma.pre_strain", "must be non-negative"));
        }
        if !(self.latent_heat.is_finite() && self.latent_heat >= 0.0) {
            return Err(Error::config("sma.latent_heat", "must be non-negative"));
        }
        Ok(())
    }

    /// Cross-section of one strand, m^2.
    pub fn strand_area(&self) -> f64 {
        PI * self.diameter * self.diameter / 4.0
    }

    /// Total load-bearing cross-section of the group, m^2.
    pub fn cross_area(&self) -> f64 {
        self.strand_area() * self.strands as f64
    }

    /// Electrical resistance of the group (strands in parallel), ohm.
    pub fn resistance(&self) -> f64 {
        self.resistivity * self.active_length / self.cross_area()
    }

    pub fn mass(&self) -> f64 {
        self.density * self.cross_area() * self.active_length
    }

    pub fn heat_capacity(&self) -> f64 {
        self.mass() * self.specific_heat
    }

    /// Lateral (convective) surface of the group, m^2.
    pub fn lateral_area(&self) -> f64 {
        PI * self.diameter * self.active_length * self.strands as f64
    }

    /// Thermal conductance to the surroundings, W/K.
    pub fn conductance(&self, env: &Environment) -> f64 {
        self.convection * env.convection_multiplier * self.lateral_area()
    }

    /// Cooling time constant `m c_p / (h A_lat)`, s.
    pub fn time_constant(&self, env: &Environment) -> f64 {
        self.heat_capacity() / self.conductance(env)
    }

    /// Transformation temperatures shifted by tensile stress `sigma`.
    pub fn transformation_temps(&self, sigma: f64) -> TransformationTemps {
        TransformationTemps {
            m_f: self.m_f + sigma / self.c_m,
            m_s: self.m_s + sigma / self.c_m,
            a_s: self.a_s + sigma / self.c_a,
            a_f: self.a_f + sigma / self.c_a,
        }
    }

    pub fn modulus(&self, xi: f64) -> f64 {
        self.e_a + xi * (self.e_m - self.e_a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformationTemps {
    pub m_f: f64,
    pub m_s: f64,
    pub a_s: f64,
    pub a_f: f64,
}

impl TransformationTemps {
    /// Major heating branch: 1 below `A_s`, 0 above `A_f`, half-cosine between.
    pub fn heating_branch(&self, t: f64) -> f64 {
        if t <= self.a_s {
            1.0
        } else if t >= self.a_f {
            0.0
        } else {
            0.5 * (1.0 + (PI * (t - self.a_s) / (self.a_f - self.a_s)).cos())
        }
    }

    /// Major cooling branch: 0 above `M_s`, 1 below `M_f`, half-cosine between.
    pub fn cooling_branch(&self, t: f64) -> f64 {
        if t >= self.m_s {
            0.0
        } else if t <= self.m_f {
            1.0
        } else {
            0.5 * (1.0 + (PI * (t - self.m_f) / (self.m_s - self.m_f)).cos())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    /// Ambient temperature, K.
    pub t_amb: f64,
    /// Multiplier on the dry-air convection coefficient.
    pub convection_multiplier: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            t_amb: celsius(20.0),
            convection_multiplier: 1.0,
        }
    }
}

impl Environment {
    /// Near-water conditions used for swimming.
    pub fn near_water() -> Self {
        Self {
            convection_multiplier: 1.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_amb.is_finite() && self.t_amb > 0.0) {
            return Err(Error::config("environment.t_amb", "must be positive"));
        }
        if !(self.convection_multiplier >= 1.0) || !self.convection_multiplier.is_finite() {
            return Err(Error::config(
                "environment.convection_multiplier",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Direction of the most recent temperature change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Heating,
    Cooling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireState {
    /// K
    pub temperature: f64,
    /// Martensite fraction.
    pub xi: f64,
    /// Tensile stress, Pa.
    pub stress: f64,
    pub strain: f64,
    pub direction: Direction,
    /// Martensite fraction at the last reversal of `direction`.
    pub anchor_xi: f64,
    /// Temperature at the last reversal.
    pub reversal_temperature: f64,
}

impl WireState {
    /// Fully martensitic wire at rest at `temperature` under `stress`.
    pub fn martensite(temperature: f64, stress: f64, props: &WireProperties) -> Self {
        Self {
            temperature,
            xi: 1.0,
            stress,
            strain: wire_strain(1.0, stress, props),
            direction: Direction::Cooling,
            anchor_xi: 1.0,
            reversal_temperature: temperature,
        }
    }

    /// Relaxed wire as assembled: ambient, martensitic, pre-tensioned.
    pub fn relaxed(props: &WireProperties, env: &Environment) -> Self {
        Self::martensite(env.t_amb, props.e_m * props.pre_strain, props)
    }

    fn is_finite(&self) -> bool {
        self.temperature.is_finite()
            && self.xi.is_finite()
            && self.stress.is_finite()
            && self.strain.is_finite()
    }
}

/// Right-hand side of the heat balance, K/s.
pub fn temperature_rate(t: f64, i: f64, props: &WireProperties, env: &Environment) -> f64 {
    (i * i * props.resistance() - props.conductance(env) * (t - env.t_amb)) / props.heat_capacity()
}

/// Advances the temperature by one RK4 step with current `i` held constant.
pub fn thermal_step(
    state: &WireState,
    i: f64,
    props: &WireProperties,
    env: &Environment,
    dt: f64,
) -> Result<WireState> {
    if !(dt > 0.0 && dt <= MAX_THERMAL_DT) {
        return Err(Error::Numeric(format!(
            "thermal step {dt} s outside (0, {MAX_THERMAL_DT}]"
        )));
    }
    if !state.is_finite() || !i.is_finite() {
        return Err(Error::Numeric("non-finite wire state or current".into()));
    }
    let [t] = rk4_step(
        |_, y| [temperature_rate(y[0], i, props, env)],
        0.0,
        [state.temperature],
        dt,
    );
    if !t.is_finite() {
        return Err(Error::Numeric("temperature diverged".into()));
    }
    Ok(WireState {
        temperature: t,
        ..*state
    })
}

/// Martensite fraction implied by the state's temperature, stress and branch
/// history.
///
/// On heating the fraction may only fall, toward `anchor * H(T)` where `H` is
/// the major heating branch; on cooling it may only rise, toward
/// `anchor + (1 - anchor) * C(T)`. The result is finally confined to the
/// band between the major cooling and heating branches.
pub fn update_phase(state: &WireState, props: &WireProperties) -> f64 {
    let temps = props.transformation_temps(state.stress.max(0.0));
    let t = state.temperature;
    let xi = state.xi;
    let branch = match state.direction {
        Direction::Heating => {
            let target = state.anchor_xi * temps.heating_branch(t);
            xi.min(target)
        }
        Direction::Cooling => {
            let target = state.anchor_xi + (1.0 - state.anchor_xi) * temps.cooling_branch(t);
            xi.max(target)
        }
    };
    branch
        .max(temps.cooling_branch(t))
        .min(temps.heating_branch(t))
        .clamp(0.0, 1.0)
}

/// `eps = sigma / E(xi) + eps_L * xi`.
pub fn wire_strain(xi: f64, sigma: f64, props: &WireProperties) -> f64 {
    sigma / props.modulus(xi) + props.eps_l * xi
}

/// One full wire update: heat balance, stress assignment, phase kinetics and
/// strain.
pub fn step_wire(
    state: &WireState,
    i: f64,
    sigma_applied: f64,
    props: &WireProperties,
    env: &Environment,
    dt: f64,
) -> Result<WireState> {
    let mut next = thermal_step(state, i, props, env, dt)?;
    let old_t = state.temperature;
    let new_direction = if next.temperature > old_t {
        Some(Direction::Heating)
    } else if next.temperature < old_t {
        Some(Direction::Cooling)
    } else {
        None
    };
    if let Some(d) = new_direction {
        if d != state.direction {
            next.direction = d;
            next.anchor_xi = state.xi;
            next.reversal_temperature = old_t;
        }
    }
    next.stress = sigma_applied.max(0.0);
    let xi = update_phase(&next, props);
    if props.latent_heat > 0.0 {
        // Austenite formation (xi falling) absorbs heat.
        next.temperature -= props.latent_heat * (state.xi - xi) / props.specific_heat;
    }
    next.xi = xi;
    next.strain = wire_strain(xi, next.stress, props);
    if !next.is_finite() {
        return Err(Error::Numeric("wire state diverged".into()));
    }
    Ok(next)
}
