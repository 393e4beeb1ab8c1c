//! Measurement pipeline: zero-phase FIR low-pass filtering, per-cycle
//! peak-to-peak displacement (MADO), its steady-state average (AMADO),
//! frequency x duty-cycle sweeps and least-squares calibration.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{CircuitParams, Mode, PwmConfig};
use crate::error::{Error, Result};
use crate::mech::{run_mode_trace, ActuatorGeometry};
use crate::sma::{Environment, WireProperties};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirSpec {
    /// Filter order (taps - 1).
    pub order: usize,
    /// Cutoff frequency, Hz.
    pub cutoff: f64,
    /// Sample rate, Hz.
    pub sample_rate: f64,
}

impl Default for FirSpec {
    fn default() -> Self {
        Self {
            order: 1000,
            cutoff: 100.0,
            sample_rate: 2000.0,
        }
    }
}

impl FirSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(Error::FilterSpec(format!(
                "order must be even and positive, got {}",
                self.order
            )));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::FilterSpec("sample rate must be positive".into()));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 0.5 * self.sample_rate) {
            return Err(Error::FilterSpec(format!(
                "cutoff {} Hz must lie in (0, {})",
                self.cutoff,
                0.5 * self.sample_rate
            )));
        }
        Ok(())
    }
}

/// Hamming window of `n` points.
fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / m).cos())
        .collect()
}

/// Hamming-windowed sinc low-pass kernel with unit DC gain.
pub fn design_fir(spec: &FirSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let taps = spec.order + 1;
    let fc = spec.cutoff / spec.sample_rate;
    let half = (spec.order / 2) as isize;
    let window = hamming(taps);
    let mut h: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let x = (k as isize - half) as f64;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            w * sinc
        })
        .collect();
    // Enforce exact symmetry before normalizing.
    for k in 0..taps / 2 {
        let avg = 0.5 * (h[k] + h[taps - 1 - k]);
        h[k] = avg;
        h[taps - 1 - k] = avg;
    }
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    Ok(h)
}

/// Magnitude response of `kernel` at `freq` Hz.
pub fn magnitude_response(kernel: &[f64], freq: f64, sample_rate: f64) -> f64 {
    let w = 2.0 * PI * freq / sample_rate;
    let (re, im) = kernel
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (k, h)| {
            let (s, c) = (w * k as f64).sin_cos();
            (re + h * c, im - h * s)
        });
    (re * re + im * im).sqrt()
}

/// Linear-phase filtering with the group delay removed.
///
/// The input is extended at both ends by `order / 2` copies of its end
/// samples, convolved with the symmetric kernel, and the valid part is
/// returned, so the output has the input's length and no phase lag.
pub fn filter_zero_phase(kernel: &[f64], signal: &[f64]) -> Result<Vec<f64>> {
    let taps = kernel.len();
    if taps.is_multiple_of(2) {
        return Err(Error::FilterSpec("kernel must have an odd number of taps".into()));
    }
    if signal.len() <= taps {
        return Err(Error::Length {
            len: signal.len(),
            taps,
        });
    }
    let half = taps / 2;
    let first = signal[0];
    let last = signal[signal.len() - 1];
    let mut padded = Vec::with_capacity(signal.len() + 2 * half);
    padded.extend(std::iter::repeat_n(first, half));
    padded.extend_from_slice(signal);
    padded.extend(std::iter::repeat_n(last, half));
    Ok(padded
        .windows(taps)
        .map(|w| w.iter().zip(kernel).map(|(x, h)| x * h).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmadoResult {
    pub frequency: f64,
    pub duty_cycle: f64,
    /// Peak-to-peak displacement of each whole period in the window, mm.
    pub mado: Vec<f64>,
    /// Mean of `mado`, mm.
    pub amado: f64,
    /// Sample standard deviation of `mado`, mm.
    pub std: f64,
    /// `amado` over the largest AMADO at this frequency.
    pub normalized: f64,
}

/// Per-period peak-to-peak statistics of a displacement trace.
///
/// `trace` is in millimeters, sampled at `sample_rate`, sample `k` taken at
/// `k / sample_rate`. Periods start at the channel-A rising edges `n / f`; only
/// periods lying entirely in the final `steady_window` seconds of the run are
/// used.
pub fn compute_amado(
    trace: &[f64],
    sample_rate: f64,
    frequency: f64,
    steady_window: f64,
    kernel: &[f64],
) -> Result<AmadoResult> {
    let run_length = trace.len() as f64 / sample_rate;
    if !(steady_window > 0.0 && steady_window <= run_length + 1e-9) {
        return Err(Error::config(
            "metrology.steady_window_s",
            format!("steady window {steady_window} s exceeds run of {run_length} s"),
        ));
    }
    let filtered = filter_zero_phase(kernel, trace)?;
    let mado = period_peak_to_peak(&filtered, sample_rate, frequency, run_length - steady_window);
    if mado.len() < 3 {
        return Err(Error::InsufficientData { periods: mado.len() });
    }
    let n = mado.len() as f64;
    let amado = mado.iter().sum::<f64>() / n;
    let var = mado.iter().map(|m| (m - amado).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(AmadoResult {
        frequency,
        duty_cycle: f64::NAN,
        mado,
        amado,
        std: var.sqrt(),
        normalized: f64::NAN,
    })
}

/// Max minus min over each whole period `[n/f, (n+1)/f)` starting at or after
/// `window_start` and ending by the end of the trace.
fn period_peak_to_peak(x: &[f64], sample_rate: f64, frequency: f64, window_start: f64) -> Vec<f64> {
    let run_end = x.len() as f64 / sample_rate;
    let first = (window_start * frequency - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::new();
    let mut p = first;
    loop {
        let t0 = p as f64 / frequency;
        let t1 = (p + 1) as f64 / frequency;
        if t1 > run_end + 1e-9 {
            break;
        }
        let k0 = (t0 * sample_rate - 1e-9).ceil() as usize;
        let k1 = ((t1 * sample_rate - 1e-9).ceil() as usize).min(x.len());
        if k1 > k0 {
            let (lo, hi) = x[k0..k1]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            out.push(hi - lo);
        }
        p += 1;
    }
    out
}

/// Everything needed to simulate one characterization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorModel {
    pub pwm: PwmConfig,
    pub circuit: CircuitParams,
    pub wire: WireProperties,
    pub env: Environment,
    pub geom: ActuatorGeometry,
    pub fir: FirSpec,
    /// Length of each run, s.
    pub run_length: f64,
    /// Trailing steady-state window, s.
    pub steady_window: f64,
}

impl Default for ActuatorModel {
    fn default() -> Self {
        Self {
            pwm: PwmConfig::default(),
            circuit: CircuitParams::default(),
            wire: WireProperties::default(),
            env: Environment::default(),
            geom: ActuatorGeometry::default(),
            fir: FirSpec::default(),
            run_length: 30.0,
            steady_window: 15.0,
        }
    }
}

impl ActuatorModel {
    pub fn pwm_at(&self, frequency: f64, duty_cycle: f64, mode: Mode) -> PwmConfig {
        PwmConfig {
            frequency,
            duty_cycle,
            mode,
            ..self.pwm
        }
    }

    /// Simulated tip displacement in millimeters at the sample rate.
    pub fn trace_mm(&self, frequency: f64, duty_cycle: f64, mode: Mode) -> Result<Vec<f64>> {
        let cfg = self.pwm_at(frequency, duty_cycle, mode);
        let tr = run_mode_trace(
            &cfg,
            &self.circuit,
            &self.wire,
            &self.env,
            &self.geom,
            self.run_length,
        )?;
        Ok(tr.delta.iter().map(|d| d * 1e3).collect())
    }

    /// Simulates one run and evaluates its AMADO.
    pub fn amado(&self, frequency: f64, duty_cycle: f64, mode: Mode) -> Result<AmadoResult> {
        let kernel = design_fir(&self.fir)?;
        self.amado_with_kernel(frequency, duty_cycle, mode, &kernel)
    }

    fn amado_with_kernel(
        &self,
        frequency: f64,
        duty_cycle: f64,
        mode: Mode,
        kernel: &[f64],
    ) -> Result<AmadoResult> {
        let trace = self.trace_mm(frequency, duty_cycle, mode)?;
        let mut r = compute_amado(
            &trace,
            self.pwm.sample_rate,
            frequency,
            self.steady_window,
            kernel,
        )?;
        r.duty_cycle = duty_cycle;
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub frequencies_hz: Vec<f64>,
    pub dc_pct: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            frequencies_hz: vec![1.0, 5.0, 10.0, 15.0, 20.0],
            dc_pct: (1..=10).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub frequency: f64,
    pub dc_pct: f64,
    pub result: std::result::Result<AmadoResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Sorted by frequency, then duty cycle.
    pub rows: Vec<SweepRow>,
    /// `(frequency, AV_max)` for each frequency.
    pub maxima: Vec<(f64, f64)>,
}

impl SweepTable {
    pub fn get(&self, frequency: f64, dc_pct: f64) -> Option<&AmadoResult> {
        self.rows
            .iter()
            .find(|r| r.frequency == frequency && r.dc_pct == dc_pct)
            .and_then(|r| r.result.as_ref().ok())
    }

    pub fn max_at(&self, frequency: f64) -> Option<f64> {
        self.maxima
            .iter()
            .find(|(f, _)| *f == frequency)
            .map(|(_, m)| *m)
    }
}

/// Runs every `(f, DC)` cell of `grid`. Cells are evaluated in parallel on
/// `threads` workers (0 = rayon default); the table order and contents do not
/// depend on the thread count.
pub fn run_sweep(grid: &SweepGrid, model: &ActuatorModel, threads: usize) -> Result<SweepTable> {
    let kernel = design_fir(&model.fir)?;
    let mut cells: Vec<(f64, f64)> = grid
        .frequencies_hz
        .iter()
        .flat_map(|&f| grid.dc_pct.iter().map(move |&dc| (f, dc)))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    cells.dedup();

    let eval = |&(f, dc): &(f64, f64)| SweepRow {
        frequency: f,
        dc_pct: dc,
        result: model
            .amado_with_kernel(f, dc / 100.0, model.pwm.mode, &kernel)
            .map_err(|e| e.to_string()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(eval).collect());

    let mut maxima = Vec::new();
    let mut freqs: Vec<f64> = rows.iter().map(|r| r.frequency).collect();
    freqs.dedup();
    for f in freqs {
        let max = rows
            .iter()
            .filter(|r| r.frequency == f)
            .filter_map(|r| r.result.as_ref().ok())
            .map(|r| r.amado)
            .fold(0.0, f64::max);
        maxima.push((f, max));
        for r in rows.iter_mut().filter(|r| r.frequency == f) {
            if let Ok(res) = r.result.as_mut() {
                res.normalized = if max > 0.0 { res.amado / max } else { 0.0 };
            }
        }
    }
    Ok(SweepTable { rows, maxima })
}

/// Model parameters the calibrator may adjust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Convection,
    ConvectionMultiplier,
    KBeam,
    GTip,
    CA,
    CM,
    EpsL,
    PreStrain,
}

impl Parameter {
    pub fn get(self, m: &ActuatorModel) -> f64 {
        match self {
            Parameter::Convection => m.wire.convection,
            Parameter::ConvectionMultiplier => m.env.convection_multiplier,
            Parameter::KBeam => m.geom.k_beam,
            Parameter::GTip => m.geom.g_tip,
            Parameter::CA => m.wire.c_a,
            Parameter::CM => m.wire.c_m,
            Parameter::EpsL => m.wire.eps_l,
            Parameter::PreStrain => m.wire.pre_strain,
        }
    }

    pub fn set(self, m: &mut ActuatorModel, v: f64) {
        match self {
            Parameter::Convection => m.wire.convection = v,
            Parameter::ConvectionMultiplier => m.env.convection_multiplier = v,
            Parameter::KBeam => m.geom.k_beam = v,
            Parameter::GTip => m.geom.g_tip = v,
            Parameter::CA => m.wire.c_a = v,
            Parameter::CM => m.wire.c_m = v,
            Parameter::EpsL => m.wire.eps_l = v,
            Parameter::PreStrain => m.wire.pre_strain = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParameter {
    pub param: Parameter,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub f_hz: f64,
    pub dc_pct: f64,
    pub amado_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationProblem {
    pub free: Vec<FreeParameter>,
    pub targets: Vec<Target>,
    /// Maximum number of model evaluations (one evaluation simulates every
    /// target once).
    pub budget: usize,
    /// Search stops once every step is below this fraction of its bound range.
    pub step_floor: f64,
    /// Search also stops once the loss drops below this value.
    pub loss_tol: f64,
}

impl Default for CalibrationProblem {
    fn default() -> Self {
        let g = ActuatorGeometry::default();
        let w = WireProperties::default();
        Self {
            free: vec![
                FreeParameter {
                    param: Parameter::GTip,
                    lower: 0.2 * g.g_tip,
                    upper: 5.0 * g.g_tip,
                },
                FreeParameter {
                    param: Parameter::Convection,
                    lower: 0.5 * w.convection,
                    upper: 2.0 * w.convection,
                },
                FreeParameter {
                    param: Parameter::KBeam,
                    lower: 0.25 * g.k_beam,
                    upper: 4.0 * g.k_beam,
                },
            ],
            targets: vec![Target {
                f_hz: 1.0,
                dc_pct: 10.0,
                amado_mm: 7.08,
            }],
            budget: 200,
            step_floor: 1e-6,
            loss_tol: 1e-10,
        }
    }
}

impl CalibrationProblem {
    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::Calibration("no free parameters".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Calibration("no targets".into()));
        }
        for fp in &self.free {
            if !(fp.lower.is_finite() && fp.upper.is_finite() && fp.lower < fp.upper) {
                return Err(Error::Calibration(format!(
                    "bounds of {:?} must satisfy lower < upper",
                    fp.param
                )));
            }
        }
        for t in &self.targets {
            if !(t.amado_mm > 0.0 && t.f_hz > 0.0 && (0.0..=100.0).contains(&t.dc_pct)) {
                return Err(Error::Calibration(format!("invalid target {t:?}")));
            }
        }
        if self.budget == 0 {
            return Err(Error::Calibration("budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParameter {
    pub param: Parameter,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResidual {
    pub f_hz: f64,
    pub dc_pct: f64,
    pub target_mm: f64,
    pub model_mm: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub converged: bool,
    pub loss: f64,
    pub evaluations: usize,
    pub parameters: Vec<FittedParameter>,
    pub residuals: Vec<TargetResidual>,
}

impl CalibrationReport {
    /// Copy of `model` with the fitted values applied.
    pub fn apply(&self, model: &ActuatorModel) -> ActuatorModel {
        let mut m = *model;
        for p in &self.parameters {
            p.param.set(&mut m, p.value);
        }
        m
    }
}

fn calibration_loss(
    model: &ActuatorModel,
    targets: &[Target],
    kernel: &[f64],
) -> (f64, Vec<TargetResidual>) {
    let mut loss = 0.0;
    let mut residuals = Vec::with_capacity(targets.len());
    for t in targets {
        let model_mm = model
            .amado_with_kernel(t.f_hz, t.dc_pct / 100.0, model.pwm.mode, kernel)
            .map(|r| r.amado)
            .unwrap_or(f64::NAN);
        let rel = (model_mm - t.amado_mm) / t.amado_mm;
        loss += if rel.is_finite() { rel * rel } else { f64::INFINITY };
        residuals.push(TargetResidual {
            f_hz: t.f_hz,
            dc_pct: t.dc_pct,
            target_mm: t.amado_mm,
            model_mm,
            relative_error: rel,
        });
    }
    (loss, residuals)
}

/// Bounded coordinate search with shrinking steps on the sum of squared
/// relative AMADO errors.
///
/// Each parameter starts at its current model value (clipped to bounds) with a
/// step of a quarter of its range. A sweep tries `x +/- step` for every
/// parameter in turn and keeps any improvement; a sweep with no improvement
/// halves every step.
pub fn calibrate(problem: &CalibrationProblem, model: &ActuatorModel) -> Result<CalibrationReport> {
    problem.validate()?;
    let kernel = design_fir(&model.fir)?;
    let mut current = *model;
    for fp in &problem.free {
        let v = fp.param.get(&current).clamp(fp.lower, fp.upper);
        fp.param.set(&mut current, v);
    }
    let mut evaluations = 1;
    let (mut best_loss, mut best_residuals) = calibration_loss(&current, &problem.targets, &kernel);
    let mut steps: Vec<f64> = problem
        .free
        .iter()
        .map(|fp| 0.25 * (fp.upper - fp.lower))
        .collect();

    let floor_reached = |steps: &[f64]| {
        problem
            .free
            .iter()
            .zip(steps)
            .all(|(fp, s)| *s < problem.step_floor * (fp.upper - fp.lower))
    };

    let mut converged = best_loss < problem.loss_tol;
    'search: while !converged {
        let mut improved = false;
        for (idx, fp) in problem.free.iter().enumerate() {
            let x = fp.param.get(&current);
            for dir in [1.0, -1.0] {
                let cand_x = (x + dir * steps[idx]).clamp(fp.lower, fp.upper);
                if cand_x == x {
                    continue;
                }
                if evaluations >= problem.budget {
                    break 'search;
                }
                let mut cand = current;
                fp.param.set(&mut cand, cand_x);
                let (loss, residuals) = calibration_loss(&cand, &problem.targets, &kernel);
                evaluations += 1;
                if loss < best_loss {
                    best_loss = loss;
                    best_residuals = residuals;
                    current = cand;
                    improved = true;
                    break;
                }
            }
            if best_loss < problem.loss_tol {
                converged = true;
                continue 'search;
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            if floor_reached(&steps) {
                converged = true;
            }
        }
    }

    Ok(CalibrationReport {
        converged,
        loss: best_loss,
        evaluations,
        parameters: problem
            .free
            .iter()
            .map(|fp| FittedParameter {
                param: fp.param,
                value: fp.param.get(&current),
            })
            .collect(),
        residuals: best_residuals,
    })
}
