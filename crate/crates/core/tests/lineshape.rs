//! Lineshape behaviour of the closed-form model, stationary and averaged.

use ndfwm::analysis::{default_dip_window, detect_central_dip, find_peaks, DEFAULT_PROMINENCE_FRACTION};
use ndfwm::doppler::{doppler_average, DopplerParams, ResidualMode};
use ndfwm::model::{
    fwm_amplitude, spectrum_stationary, AmplitudeModel, DetuningGrid, FieldConfig, PumpSource, PumpTermMode,
    RelaxationParams, Spectrum, Velocity,
};
use proptest::prelude::*;

fn rates(gamma2: f64) -> RelaxationParams {
    RelaxationParams::new(3.0, gamma2, 6.0, 3.0).unwrap()
}

fn stationary(relax: &RelaxationParams, grid: &DetuningGrid) -> Spectrum {
    spectrum_stationary(
        grid,
        &FieldConfig::with_detuning(50.0),
        relax,
        &PumpSource::ground_only(relax),
        PumpTermMode::BothPumps,
    )
    .unwrap()
}

/// `|Fpop(β)|²` has a local minimum at zero beat iff `4/(γ1+γ2−γ21)² > 1/γ1² + 1/γ2²`.
fn population_dip_predicted(r: &RelaxationParams) -> bool {
    let s = r.gamma1 + r.gamma2 - r.gamma21;
    4.0 / (s * s) > 1.0 / (r.gamma1 * r.gamma1) + 1.0 / (r.gamma2 * r.gamma2)
}

#[test]
fn moderate_upper_decay_gives_pump_peaks_and_a_central_dip() {
    let relax = rates(6.0);
    let s = stationary(&relax, &DetuningGrid::linspace(-150.0, 150.0, 601).unwrap());
    let peaks = find_peaks(&s, DEFAULT_PROMINENCE_FRACTION).unwrap();
    assert_eq!(peaks.positions(), vec![-49.5, -4.0, 4.0, 49.5]);
    let dip = detect_central_dip(&s, default_dip_window(&relax))
        .unwrap()
        .expect("central dip");
    assert_eq!(dip.position, 0.0);
    assert!(dip.depth > 0.1, "{dip:?}");
    assert!(population_dip_predicted(&relax));
}

#[test]
fn slow_upper_decay_gives_a_narrow_central_peak() {
    let relax = rates(0.1);
    let s = stationary(&relax, &DetuningGrid::linspace(-150.0, 150.0, 601).unwrap());
    assert!(detect_central_dip(&s, default_dip_window(&relax)).unwrap().is_none());
    let peaks = find_peaks(&s, DEFAULT_PROMINENCE_FRACTION).unwrap();
    let central = peaks.nearest(0.0).unwrap();
    assert!(central.position.abs() <= 0.5, "{central:?}");
    assert!(central.fwhm.unwrap() < 3.0, "{central:?}");
    assert!(!population_dip_predicted(&relax));
}

#[test]
fn both_pump_terms_double_the_amplitude_at_rest() {
    let relax = rates(6.0);
    let pump = PumpSource::ground_only(&relax);
    let fields = FieldConfig::with_detuning(50.0);
    for delta in [-80.0, -3.0, 0.0, 11.0, 49.0] {
        let one = fwm_amplitude(
            delta,
            Velocity::ZERO,
            &fields,
            &relax,
            &pump,
            PumpTermMode::PaperSingleTerm,
        )
        .unwrap();
        let both = fwm_amplitude(delta, Velocity::ZERO, &fields, &relax, &pump, PumpTermMode::BothPumps).unwrap();
        assert!((both - 2.0 * one).norm() <= 1e-15 * both.norm());
    }
}

#[test]
fn amplitude_scales_with_fields_and_population() {
    let relax = rates(6.0);
    let fields = FieldConfig::with_detuning(50.0);
    let v = Velocity::along(12.0);
    let base = fwm_amplitude(
        7.0,
        v,
        &fields,
        &relax,
        &PumpSource::ground_only(&relax),
        PumpTermMode::BothPumps,
    )
    .unwrap();
    let strong = FieldConfig {
        omega_f: 2.0,
        omega_b: 3.0,
        omega_p: 0.5,
        ..fields
    };
    let pumped = PumpSource::new(2.0 * relax.gamma1, 0.0).unwrap();
    let scaled = fwm_amplitude(7.0, v, &strong, &relax, &pumped, PumpTermMode::BothPumps).unwrap();
    assert!((scaled - 6.0 * base).norm() <= 1e-14 * scaled.norm());
}

#[test]
fn averaged_both_pump_spectrum_has_a_resonance_at_plus_twice_the_detuning() {
    let relax = rates(6.0);
    let width = 0.5 * (relax.gamma1 + relax.gamma2) + relax.gamma_ph;
    let grid = DetuningGrid::linspace(-300.0, 300.0, 1201).unwrap();
    for detuning in [50.0, 80.0] {
        let s = doppler_average(
            &grid,
            &FieldConfig::with_detuning(detuning),
            &relax,
            &PumpSource::ground_only(&relax),
            &DopplerParams::with_ku(300.0),
            PumpTermMode::BothPumps,
        )
        .unwrap();
        let peaks = find_peaks(&s, DEFAULT_PROMINENCE_FRACTION).unwrap();
        let plus = peaks.nearest(2.0 * detuning).unwrap();
        assert!((plus.position - 2.0 * detuning).abs() <= width, "{plus:?}");
        let minus = peaks.nearest(-2.0 * detuning).unwrap();
        assert!((minus.position + 2.0 * detuning).abs() > width, "{minus:?}");
    }
}

#[test]
fn averaging_keeps_the_central_dip_of_moderate_upper_decay() {
    let relax = rates(6.0);
    let s = doppler_average(
        &DetuningGrid::linspace(-60.0, 60.0, 241).unwrap(),
        &FieldConfig::with_detuning(50.0),
        &relax,
        &PumpSource::ground_only(&relax),
        &DopplerParams::with_ku(300.0),
        PumpTermMode::BothPumps,
    )
    .unwrap();
    assert!(detect_central_dip(&s, default_dip_window(&relax)).unwrap().is_some());
}

#[test]
fn transverse_spread_matters_more_at_larger_angles() {
    let relax = rates(6.0);
    let grid = DetuningGrid::linspace(-30.0, 30.0, 31).unwrap();
    let run = |theta, residual| {
        doppler_average(
            &grid,
            &FieldConfig {
                theta,
                ..FieldConfig::with_detuning(50.0)
            },
            &relax,
            &PumpSource::ground_only(&relax),
            &DopplerParams {
                residual,
                tolerance: None,
                ..DopplerParams::default()
            },
            PumpTermMode::BothPumps,
        )
        .unwrap()
    };
    let change = |theta| {
        run(theta, ResidualMode::IgnoreTransverse).relative_sup_distance(&run(theta, ResidualMode::GaussianBroaden))
    };
    let d: Vec<f64> = [0.001, 0.004, 0.02].into_iter().map(change).collect();
    assert!(d[0] < d[1] && d[1] < d[2], "{d:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn population_factor_dip_matches_its_criterion(
        g1 in 0.2f64..10.0,
        g2 in 0.2f64..10.0,
        g21 in 0.0f64..10.0,
    ) {
        prop_assume!((g2 - g1).abs() > 0.05);
        let relax = RelaxationParams::new(g1, g2, g21, 1.0).unwrap();
        let predicted = population_dip_predicted(&relax);
        let s = g1 + g2 - g21;
        let margin = 4.0 / (s * s) - (1.0 / (g1 * g1) + 1.0 / (g2 * g2));
        prop_assume!(margin.abs() > 1e-3 * (1.0 / (g1 * g1) + 1.0 / (g2 * g2)));
        let model = AmplitudeModel::new(
            &FieldConfig::default(),
            &relax,
            &PumpSource::ground_only(&relax),
            PumpTermMode::PaperSingleTerm,
        )
        .unwrap();
        let h = 1e-3 * g1.min(g2);
        let at = |b: f64| model.population_factor(b).norm_sqr();
        let curvature = at(h) + at(-h) - 2.0 * at(0.0);
        prop_assert_eq!(curvature > 0.0, predicted);
    }

    #[test]
    fn stationary_amplitude_is_finite(
        g1 in 0.1f64..10.0,
        g2 in 0.1f64..10.0,
        g21 in 0.0f64..10.0,
        gph in 0.0f64..10.0,
        detuning in -100.0f64..100.0,
        delta in -200.0f64..200.0,
    ) {
        prop_assume!((g2 - g1).abs() > 1e-3);
        let relax = RelaxationParams::new(g1, g2, g21, gph).unwrap();
        let a = fwm_amplitude(
            delta,
            Velocity::ZERO,
            &FieldConfig::with_detuning(detuning),
            &relax,
            &PumpSource::ground_only(&relax),
            PumpTermMode::BothPumps,
        )
        .unwrap();
        prop_assert!(a.re.is_finite() && a.im.is_finite());
    }
}
