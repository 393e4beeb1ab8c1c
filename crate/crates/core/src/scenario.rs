//! Command orchestration: runs one scenario and writes its artifacts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::ScenarioConfig;
use crate::csvout::{write_csv_file, Schema, Table};
use crate::drive::{average_power, make_pwm_pair};
use crate::error::{Error, Result};
use crate::metrology::{calibrate, design_fir, filter_zero_phase, run_sweep, CalibrationReport, SweepGrid};
use crate::swimmer::{body_lengths_per_second, fit_thrust, reynolds, steady_speed, swim};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    Power,
    Calibrate,
    Swim,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Simulate,
        Command::Sweep,
        Command::Power,
        Command::Calibrate,
        Command::Swim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Power => "power",
            Command::Calibrate => "calibrate",
            Command::Swim => "swim",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("command", format!("unknown command `{s}`")))
    }
}

/// Files written by a scenario and a short human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Runs `command` and writes its artifacts into `out_dir`. `threads` only
/// affects wall time (0 = all cores).
pub fn run_scenario(cfg: &ScenarioConfig, command: Command, out_dir: &Path, threads: usize) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    match command {
        Command::Simulate => simulate(cfg, out_dir),
        Command::Sweep => sweep(cfg, out_dir, threads),
        Command::Power => power(cfg, out_dir),
        Command::Calibrate => calibration(cfg, out_dir),
        Command::Swim => swimming(cfg, out_dir, threads),
    }
}

fn simulate(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.actuator_model();
    let pwm = model.pwm;
    let delta = model.trace_mm(pwm.frequency, pwm.duty_cycle, pwm.mode)?;
    let kernel = design_fir(&model.fir)?;
    let filtered = filter_zero_phase(&kernel, &delta)?;
    let mut t = Table::new(Schema::Trace);
    for (k, (d, df)) in delta.iter().zip(&filtered).enumerate() {
        t.push(vec![k as f64 / pwm.sample_rate, *d, *df]);
    }
    let path = out_dir.join("trace.csv");
    write_csv_file(&path, Schema::Trace, &t)?;

    let mut summary = vec![format!("{} samples at {} Hz", delta.len(), pwm.sample_rate)];
    match model.amado(pwm.frequency, pwm.duty_cycle, pwm.mode) {
        Ok(r) => summary.push(format!("AMADO {:.4} mm (std {:.4} mm)", r.amado, r.std)),
        Err(e) => summary.push(format!("AMADO unavailable: {e}")),
    }
    Ok(Outcome {
        artifacts: vec![path],
        summary,
    })
}

fn sweep(cfg: &ScenarioConfig, out_dir: &Path, threads: usize) -> Result<Outcome> {
    let model = cfg.actuator_model();
    let table = run_sweep(&cfg.metrology.grid, &model, threads)?;
    let mut t = Table::new(Schema::Sweep);
    for row in &table.rows {
        let r = row.result.as_ref().map_err(|msg| {
            Error::Numeric(format!(
                "sweep cell f = {} Hz, DC = {} %: {msg}",
                row.frequency, row.dc_pct
            ))
        })?;
        t.push(vec![row.frequency, row.dc_pct, r.amado, r.std, r.normalized]);
    }
    let path = out_dir.join("sweep.csv");
    write_csv_file(&path, Schema::Sweep, &t)?;
    let summary = table
        .maxima
        .iter()
        .map(|(f, m)| format!("AV_max({f} Hz) = {m:.4} mm"))
        .collect();
    Ok(Outcome {
        artifacts: vec![path],
        summary,
    })
}

fn power(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    let pwm = cfg.drive.pwm();
    let circuit = cfg.drive.circuit();
    let samples = make_pwm_pair(&pwm, &circuit, cfg.run.duration_s)?;
    let trace = average_power(&samples, &pwm, &circuit)?;
    let mut t = Table::new(Schema::Power);
    for (s, p) in samples.iter().zip(&trace.p_a) {
        t.push(vec![s.t, s.v_t, s.v_b, s.i_t, s.i_b, *p]);
    }
    let path = out_dir.join("power.csv");
    write_csv_file(&path, Schema::Power, &t)?;
    Ok(Outcome {
        artifacts: vec![path],
        summary: vec![
            format!("peak p_a = {:.4} mW", 1e3 * trace.peak()),
            format!("mean p_a = {:.4} mW", 1e3 * trace.p_bar),
        ],
    })
}

fn calibration(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.actuator_model();
    let report = calibrate(&cfg.calibration, &model)?;
    let text = report_toml(&report)?;
    let path = out_dir.join("calibration.toml");
    std::fs::write(&path, text)?;
    let mut summary = vec![format!(
        "converged = {}, loss = {:e}, evaluations = {}",
        report.converged, report.loss, report.evaluations
    )];
    for p in &report.parameters {
        summary.push(format!("{:?} = {}", p.param, p.value));
    }
    for r in &report.residuals {
        summary.push(format!(
            "AMADO({} Hz, {} %) = {:.4} mm, target {} mm",
            r.f_hz, r.dc_pct, r.model_mm, r.target_mm
        ));
    }
    Ok(Outcome {
        artifacts: vec![path],
        summary,
    })
}

pub fn report_toml(report: &CalibrationReport) -> Result<String> {
    toml::to_string(report).map_err(|e| Error::Io(e.to_string()))
}

fn swimming(cfg: &ScenarioConfig, out_dir: &Path, threads: usize) -> Result<Outcome> {
    let s = &cfg.swim;
    let mut model = cfg.actuator_model();
    model.env.convection_multiplier = s.convection_multiplier;
    let dc = cfg.swimmer.duty_cycle;

    let mut freqs = s.scan_hz.clone();
    freqs.push(s.fit_frequency_hz);
    let grid = SweepGrid {
        frequencies_hz: freqs,
        dc_pct: vec![100.0 * dc],
    };
    let table = run_sweep(&grid, &model, threads)?;
    let amado_at = |f: f64| -> Result<f64> {
        table
            .rows
            .iter()
            .find(|r| r.frequency == f)
            .map(|r| r.result.clone().map(|a| a.amado))
            .unwrap_or_else(|| Err("missing".into()))
            .map_err(|msg| Error::Numeric(format!("actuator at {f} Hz: {msg}")))
    };

    let mut params = cfg.swimmer;
    let fit_amp = params.tail_amplitude(1e-3 * amado_at(s.fit_frequency_hz)?);
    if let Some(v) = s.fit_speed_mm_s {
        params.k_thrust = fit_thrust(s.fit_frequency_hz, fit_amp, 1e-3 * v, &params)?;
    }

    let mut scan = Table::new(Schema::SpeedScan);
    let mut summary = vec![format!("k_thrust = {:e} N s^2/rad^2", params.k_thrust)];
    for &f in &s.scan_hz {
        let a_mm = amado_at(f)?;
        let amp = params.tail_amplitude(1e-3 * a_mm);
        let v = steady_speed(f, amp, &params);
        let v_fixed = steady_speed(f, fit_amp, &params);
        scan.push(vec![
            f,
            a_mm,
            amp.to_degrees(),
            1e3 * v,
            1e3 * v_fixed,
            reynolds(v, params.body_length, params.nu),
            body_lengths_per_second(v, params.body_length),
        ]);
        summary.push(format!(
            "{f} Hz: tail {:.2} deg, v = {:.3} mm/s, v at fixed amplitude = {:.3} mm/s",
            amp.to_degrees(),
            1e3 * v,
            1e3 * v_fixed
        ));
    }
    let scan_path = out_dir.join("speed_scan.csv");
    write_csv_file(&scan_path, Schema::SpeedScan, &scan)?;

    let fs = model.pwm.sample_rate;
    let delta = model.trace_mm(s.frequency_hz, dc, model.pwm.mode)?;
    let kernel = design_fir(&model.fir)?;
    let filtered = filter_zero_phase(&kernel, &delta)?;
    let n_window = ((model.steady_window * fs).round() as usize).min(filtered.len());
    let tail_window = &filtered[filtered.len() - n_window..];
    let mean = tail_window.iter().sum::<f64>() / n_window.max(1) as f64;
    let tail: Vec<f64> = filtered
        .iter()
        .map(|d| params.tail_gain * 1e-3 * (d - mean))
        .collect();
    let traj = swim(&tail, 1.0 / fs, &params)?;
    let mut t = Table::new(Schema::Trajectory);
    for (k, (time, st)) in traj.t.iter().zip(&traj.states).enumerate() {
        if k % s.trajectory_stride == 0 || k + 1 == traj.t.len() {
            t.push(vec![*time, 1e3 * st.x, 1e3 * st.y, st.psi.to_degrees(), 1e3 * st.v]);
        }
    }
    let traj_path = out_dir.join("trajectory.csv");
    write_csv_file(&traj_path, Schema::Trajectory, &t)?;
    if let Some(last) = traj.states.last() {
        summary.push(format!(
            "trajectory at {} Hz: x = {:.3} mm, y = {:.3} mm, heading {:.4} deg",
            s.frequency_hz,
            1e3 * last.x,
            1e3 * last.y,
            last.psi.to_degrees()
        ));
    }
    Ok(Outcome {
        artifacts: vec![scan_path, traj_path],
        summary,
    })
}
