mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use sma_bimorph::metrology::{
    calibrate, compute_amado, design_fir, filter_zero_phase, run_sweep, ActuatorModel,
    CalibrationProblem, FirSpec, FreeParameter, Parameter, SweepGrid, Target,
};

fn kernel() -> Vec<f64> {
    design_fir(&FirSpec::default()).unwrap()
}

#[test]
fn in_band_sinusoids_have_zero_lag() {
    let h = kernel();
    for f in [2.0, 10.0, 40.0, 80.0] {
        let x: Vec<f64> = (0..6000).map(|k| (2.0 * PI * f * k as f64 / 2000.0).cos()).collect();
        let y = filter_zero_phase(&h, &x).unwrap();
        assert_eq!(common::xcorr_argmax(&x[1000..5000], &y[1000..5000], 30), 0, "f = {f}");
    }
}

#[test]
fn normalized_is_one_at_each_maximum() {
    let grid = SweepGrid {
        frequencies_hz: vec![5.0, 10.0],
        dc_pct: vec![6.0, 8.0, 10.0],
    };
    let model = ActuatorModel {
        run_length: 12.0,
        steady_window: 6.0,
        ..ActuatorModel::default()
    };
    let t = run_sweep(&grid, &model, 2).unwrap();
    for &(f, max) in &t.maxima {
        let cells: Vec<_> = t.rows.iter().filter(|r| r.frequency == f).collect();
        let arg = cells
            .iter()
            .max_by(|a, b| {
                let (x, y) = (a.result.as_ref().unwrap(), b.result.as_ref().unwrap());
                x.amado.total_cmp(&y.amado)
            })
            .unwrap();
        let r = arg.result.as_ref().unwrap();
        assert_eq!(r.amado, max);
        assert_eq!(r.normalized, 1.0);
    }
}

#[test]
fn sweep_order_ignores_thread_count() {
    let grid = SweepGrid {
        frequencies_hz: vec![10.0, 5.0],
        dc_pct: vec![9.0, 3.0],
    };
    let model = ActuatorModel {
        run_length: 8.0,
        steady_window: 4.0,
        ..ActuatorModel::default()
    };
    let a = run_sweep(&grid, &model, 1).unwrap();
    let b = run_sweep(&grid, &model, 3).unwrap();
    assert_eq!(a, b);
    let keys: Vec<(f64, f64)> = a.rows.iter().map(|r| (r.frequency, r.dc_pct)).collect();
    assert_eq!(keys, vec![(5.0, 3.0), (5.0, 9.0), (10.0, 3.0), (10.0, 9.0)]);
}

#[test]
fn single_gain_fit_converges_from_a_distant_start() {
    let mut model = ActuatorModel::default();
    model.geom.g_tip = model.geom.length;
    let problem = CalibrationProblem {
        free: vec![FreeParameter {
            param: Parameter::GTip,
            lower: 1e-3,
            upper: 40e-3,
        }],
        ..CalibrationProblem::default()
    };
    let r = calibrate(&problem, &model).unwrap();
    assert!(r.residuals[0].relative_error.abs() < 0.05);
    assert!(r.evaluations <= problem.budget);
}

#[test]
fn calibration_recovers_known_parameters() {
    let truth = ActuatorModel::default();
    let targets: Vec<Target> = [(1.0, 10.0), (5.0, 10.0)]
        .iter()
        .map(|&(f, dc)| Target {
            f_hz: f,
            dc_pct: dc,
            amado_mm: truth.amado(f, dc / 100.0, truth.pwm.mode).unwrap().amado,
        })
        .collect();
    let mut start = truth;
    start.geom.g_tip *= 1.2;
    start.wire.convection *= 0.9;
    let problem = CalibrationProblem {
        free: vec![
            FreeParameter {
                param: Parameter::GTip,
                lower: 0.5 * truth.geom.g_tip,
                upper: 2.0 * truth.geom.g_tip,
            },
            FreeParameter {
                param: Parameter::Convection,
                lower: 100.0,
                upper: 200.0,
            },
        ],
        targets,
        budget: 400,
        ..CalibrationProblem::default()
    };
    let r = calibrate(&problem, &start).unwrap();
    assert!(r.loss < 1e-6, "loss {}", r.loss);
    let g = r.parameters[0].value;
    let h = r.parameters[1].value;
    assert!((g / truth.geom.g_tip - 1.0).abs() < 0.01, "g_tip {g}");
    assert!((h / truth.wire.convection - 1.0).abs() < 0.01, "h {h}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn filter_is_linear(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        fx in 0.5f64..200.0,
        fy in 0.5f64..200.0,
    ) {
        let h = kernel();
        let n = 3000;
        let x: Vec<f64> = (0..n).map(|k| (2.0 * PI * fx * k as f64 / 2000.0).sin() + 0.3).collect();
        let y: Vec<f64> = (0..n).map(|k| (2.0 * PI * fy * k as f64 / 2000.0).cos()).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let fm = filter_zero_phase(&h, &mix).unwrap();
        let (fx_, fy_) = (filter_zero_phase(&h, &x).unwrap(), filter_zero_phase(&h, &y).unwrap());
        let scale = mix.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for k in 0..n {
            prop_assert!((fm[k] - (a * fx_[k] + b * fy_[k])).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn amado_scales_with_the_trace(c in 0.0f64..10.0, a in 0.1f64..3.0, f in 1.0f64..20.0) {
        let h = kernel();
        let x: Vec<f64> = (0..12_000)
            .map(|k| {
                let t = k as f64 / 2000.0;
                a * (2.0 * PI * f * t).sin() + 0.2 * a * (6.0 * PI * f * t).sin()
            })
            .collect();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let r = compute_amado(&x, 2000.0, f, 4.0, &h).unwrap();
        let s = compute_amado(&scaled, 2000.0, f, 4.0, &h).unwrap();
        prop_assert!((s.amado - c * r.amado).abs() <= 1e-12 * (1.0 + c * r.amado));
    }
}
