use ndfwm::model::{
    fwm_amplitude, pulsation_weight_r, FieldConfig, PumpSource, PumpTermMode, RelaxationParams, Velocity,
};
use ndfwm::oracle::{
    evolve, pulsation_solve, third_order_signal, transient_duration, DensityState, Drive, OracleMethod,
    TimeDomainOptions, TwoLevelSystem,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Draw {
    relax: RelaxationParams,
    pump: PumpSource,
    fields: FieldConfig,
    delta: f64,
}

fn random_draw(rng: &mut ChaCha8Rng) -> Draw {
    loop {
        let relax = RelaxationParams::new(
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
        )
        .unwrap();
        if (relax.gamma2 - relax.gamma1).abs() < 0.05 {
            continue;
        }
        let pump = PumpSource::new(rng.random_range(0.5..5.0), rng.random_range(0.0..2.0)).unwrap();
        let detuning = rng.random_range(10.0..100.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let fields = FieldConfig {
            omega_f: rng.random_range(0.5..2.0),
            omega_b: rng.random_range(0.5..2.0),
            omega_p: rng.random_range(0.5..2.0),
            ..FieldConfig::with_detuning(detuning)
        };
        let magnitude: f64 = rng.random_range(1.0..30.0);
        let delta = magnitude * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        return Draw {
            relax,
            pump,
            fields,
            delta,
        };
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn partial_fractions_match_direct_pulsation_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = random_draw(&mut rng);
        let r = pulsation_weight_r(&d.relax).unwrap();
        let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let direct = pulsation_solve(d.delta, &d.relax, s).unwrap();
        let fpop =
            (1.0 - r) / Complex64::new(d.delta, d.relax.gamma1) + (1.0 + r) / Complex64::new(d.delta, d.relax.gamma2);
        worst = worst.max(rel(-Complex64::i() * s * fpop, direct));
    }
    assert!(worst < 1e-12, "worst relative error {worst:e}");
}

#[test]
fn harmonic_balance_matches_closed_form_at_rest() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = random_draw(&mut rng);
        let oracle = third_order_signal(
            d.delta,
            &d.fields,
            &d.relax,
            &d.pump,
            Velocity::ZERO,
            OracleMethod::HarmonicBalance,
        )
        .unwrap();
        let closed = fwm_amplitude(
            d.delta,
            Velocity::ZERO,
            &d.fields,
            &d.relax,
            &d.pump,
            PumpTermMode::BothPumps,
        )
        .unwrap();
        worst = worst.max(rel(oracle.coefficient, closed));
    }
    assert!(worst < 1e-10, "worst relative error {worst:e}");
}

#[test]
fn harmonic_balance_matches_closed_form_in_motion() {
    // fixes the sign of the Doppler term in the population beat
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = random_draw(&mut rng);
        let v = Velocity {
            longitudinal: rng.random_range(-50.0..50.0),
            transverse: rng.random_range(-500.0..500.0),
        };
        let oracle =
            third_order_signal(d.delta, &d.fields, &d.relax, &d.pump, v, OracleMethod::HarmonicBalance).unwrap();
        let closed = fwm_amplitude(d.delta, v, &d.fields, &d.relax, &d.pump, PumpTermMode::BothPumps).unwrap();
        worst = worst.max(rel(oracle.coefficient, closed));
    }
    assert!(worst < 1e-10, "worst relative error {worst:e}");
}

#[test]
fn time_domain_matches_closed_form_at_rest() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let d = random_draw(&mut rng);
        let oracle = third_order_signal(
            d.delta,
            &d.fields,
            &d.relax,
            &d.pump,
            Velocity::ZERO,
            OracleMethod::TimeDomainExtrapolation(TimeDomainOptions::default()),
        )
        .unwrap();
        let closed = fwm_amplitude(
            d.delta,
            Velocity::ZERO,
            &d.fields,
            &d.relax,
            &d.pump,
            PumpTermMode::BothPumps,
        )
        .unwrap();
        worst = worst.max(rel(oracle.coefficient, closed));
    }
    assert!(worst < 1e-6, "worst relative error {worst:e}");
}

fn random_state(rng: &mut ChaCha8Rng) -> DensityState {
    let p: f64 = rng.random_range(0.0..1.0);
    let c = 0.9 * (p * (1.0 - p)).sqrt();
    DensityState {
        rho11: p,
        rho22: 1.0 - p,
        rho21: Complex64::from_polar(rng.random_range(0.0..c), rng.random_range(0.0..6.3)),
    }
}

#[test]
fn driven_steady_state_forgets_initial_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let relax = RelaxationParams::new(3.0, 6.0, 4.0, 1.0).unwrap();
    let pump = PumpSource::ground_only(&relax);
    let sys = TwoLevelSystem::new(&relax, &pump, 30.0).unwrap();
    let fields = FieldConfig {
        omega_f: 2.0,
        omega_b: 1.5,
        omega_p: 1.0,
        ..FieldConfig::with_detuning(30.0)
    };
    let drive = Drive::new(4.0, &fields, Velocity::ZERO);
    let t = transient_duration(&sys);
    let opts = ndfwm::oracle::ode::OdeOptions::default();
    let a = evolve(&sys, &drive, random_state(&mut rng), 0.0, t, &opts).unwrap();
    let b = evolve(&sys, &drive, random_state(&mut rng), 0.0, t, &opts).unwrap();
    assert!((a.rho11 - b.rho11).abs() < 1e-8);
    assert!((a.rho22 - b.rho22).abs() < 1e-8);
    assert!((a.rho21 - b.rho21).norm() < 1e-8);
}

#[test]
fn populations_stay_nonnegative_for_admissible_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let relax = RelaxationParams::new(1.0, 5.0, 5.0, 0.5).unwrap();
    let sys = TwoLevelSystem::new(&relax, &PumpSource::ground_only(&relax), 5.0).unwrap();
    let fields = FieldConfig {
        omega_f: 6.0,
        omega_b: 6.0,
        omega_p: 3.0,
        ..FieldConfig::with_detuning(5.0)
    };
    let drive = Drive::new(2.0, &fields, Velocity::ZERO);
    let opts = ndfwm::oracle::ode::OdeOptions::default();
    let mut state = random_state(&mut rng);
    for step in 0..200 {
        let t0 = 0.05 * step as f64;
        state = evolve(&sys, &drive, state, t0, t0 + 0.05, &opts).unwrap();
        assert!(state.rho11 >= -1e-9 && state.rho22 >= -1e-9, "{state:?}");
    }
}

#[test]
fn closed_system_conserves_trace() {
    let relax = RelaxationParams::new(0.0, 4.0, 4.0, 1.0).unwrap();
    let sys = TwoLevelSystem {
        relax,
        pump: PumpSource::new(0.0, 0.0).unwrap(),
        detuning: 10.0,
    };
    let drive = Drive::new(3.0, &FieldConfig::with_detuning(10.0), Velocity::ZERO);
    let start = DensityState {
        rho11: 0.2,
        rho22: 0.8,
        rho21: Complex64::new(0.1, 0.05),
    };
    let end = evolve(
        &sys,
        &drive,
        start,
        0.0,
        1.0,
        &ndfwm::oracle::ode::OdeOptions::default(),
    )
    .unwrap();
    assert!((end.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn vanishing_probe_gives_zero_signal() {
    let relax = RelaxationParams::new(3.0, 6.0, 6.0, 3.0).unwrap();
    let mut fields = FieldConfig::with_detuning(50.0);
    fields.omega_p = 0.0;
    for method in [
        OracleMethod::HarmonicBalance,
        OracleMethod::TimeDomainExtrapolation(TimeDomainOptions::default()),
    ] {
        let r = third_order_signal(
            5.0,
            &fields,
            &relax,
            &PumpSource::ground_only(&relax),
            Velocity::ZERO,
            method,
        )
        .unwrap();
        assert_eq!(r.coefficient, Complex64::new(0.0, 0.0));
    }
}

#[test]
fn doubling_probe_doubles_signal() {
    let relax = RelaxationParams::new(3.0, 0.1, 6.0, 3.0).unwrap();
    let pump = PumpSource::ground_only(&relax);
    let mut fields = FieldConfig::with_detuning(50.0);
    let a = third_order_signal(
        7.0,
        &fields,
        &relax,
        &pump,
        Velocity::along(20.0),
        OracleMethod::HarmonicBalance,
    )
    .unwrap();
    fields.omega_p *= 2.0;
    let b = third_order_signal(
        7.0,
        &fields,
        &relax,
        &pump,
        Velocity::along(20.0),
        OracleMethod::HarmonicBalance,
    )
    .unwrap();
    assert!(rel(b.coefficient, 2.0 * a.coefficient) < 1e-8);
}

#[test]
fn weight_r_follows_from_pulsation_identity() {
    // recover R from the direct solve at one beat frequency and compare with the closed form
    for (g1, g2, g21, expected) in [(3.0, 6.0, 6.0, 2.0), (3.0, 0.1, 6.0, -2.068_965_517_241_379)] {
        let relax = RelaxationParams::new(g1, g2, g21, 3.0).unwrap();
        let delta = 1.3;
        let s = Complex64::new(1.0, 0.0);
        let direct = pulsation_solve(delta, &relax, s).unwrap() / (-Complex64::i() * s);
        let p1 = 1.0 / Complex64::new(delta, g1);
        let p2 = 1.0 / Complex64::new(delta, g2);
        // direct = (1-R) p1 + (1+R) p2  =>  R = (direct - p1 - p2) / (p2 - p1)
        let r = (direct - p1 - p2) / (p2 - p1);
        assert!((r.re - expected).abs() < 1e-9 && r.im.abs() < 1e-9, "{r}");
        assert!((pulsation_weight_r(&relax).unwrap() - r.re).abs() < 1e-9);
    }
}
