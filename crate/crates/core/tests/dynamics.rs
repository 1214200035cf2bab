use std::sync::Arc;

use contact_thermo::diagnostics::{audit_laws, equilibration_metrics, herglotz_residual, AuditTolerances};
use contact_thermo::systems::{
    damped_system, entropy_for_temperature, thermo_particles, thermo_springs, FnPotential, QuadraticPotential,
    ThermoSpringParams,
};
use contact_thermo::{simulate, DiscreteGradientKind, Method, Solver, State, StepperConfig};

fn dg(kind: DiscreteGradientKind) -> Method {
    Method::DiscreteGradient(kind)
}

fn quartic() -> Arc<FnPotential> {
    Arc::new(FnPotential::new(
        1,
        |q: &[f64]| 0.25 * q[0].powi(4) + 0.5 * q[0] * q[0],
        |q: &[f64]| vec![q[0].powi(3) + q[0]],
    ))
}

// Measured 0.2157 (entropy component) at h = 0.1 over 500 steps.
const DG_FIG1_HERGLOTZ_RESIDUAL: f64 = 0.25;

#[test]
fn dg_trajectory_nearly_solves_the_herglotz_equations() {
    let model = damped_system(1.0, 0.1, Arc::new(QuadraticPotential::harmonic(1, 1.0))).unwrap();
    let x0 = State::new(vec![0.0, 10.0, 0.0]);
    let traj = simulate(&model, &dg(DiscreteGradientKind::gonzalez()), &x0, &StepperConfig::default(), 500).unwrap();
    let r = herglotz_residual(&model.lagrangian().unwrap(), &traj, 0.1).unwrap();
    assert!(r.max() <= DG_FIG1_HERGLOTZ_RESIDUAL, "{r:?}");
}

#[test]
fn herglotz_residual_is_second_order() {
    let model = damped_system(1.0, 0.1, Arc::new(QuadraticPotential::harmonic(1, 1.0))).unwrap();
    let x0 = State::new(vec![0.0, 10.0, 0.0]);
    let res = |h: f64| {
        let n = (5.0 / h).round() as usize;
        let traj = simulate(&model, &dg(DiscreteGradientKind::gonzalez()), &x0, &StepperConfig::with_step(h), n).unwrap();
        herglotz_residual(&model.lagrangian().unwrap(), &traj, h).unwrap().max()
    };
    let ratio = res(0.1) / res(0.05);
    assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
}

#[test]
fn every_kind_conserves_energy_on_a_quartic_oscillator() {
    let model = damped_system(1.0, 0.2, quartic()).unwrap();
    let x0 = State::new(vec![1.5, 0.0, 0.0]);
    for kind in DiscreteGradientKind::all() {
        let traj = simulate(&model, &dg(kind), &x0, &StepperConfig::default(), 300).unwrap();
        assert!(traj.is_complete(), "{kind}");
        let report = audit_laws(&traj, &model, &AuditTolerances::default());
        assert!(report.passed(), "{kind}: {report:?}");
        assert!(report.max_first_law_residual <= 1e-10, "{kind}");
    }
}

#[test]
fn thermal_particles_equilibrate_monotonically() {
    let model = thermo_particles(1.0, 1.0, 1.0).unwrap();
    let x0 = State::new(vec![entropy_for_temperature(1.0, 273.15), entropy_for_temperature(1.0, 300.0)]);
    let traj = simulate(&model, &dg(DiscreteGradientKind::gonzalez()), &x0, &StepperConfig::default(), 500).unwrap();
    let eq = equilibration_metrics(&traj, &model).unwrap();
    assert!(eq.gap_non_increasing);
    // strictly decreasing until the gap is at rounding level
    for w in eq.gap.windows(2).take_while(|w| w[0] > 1e-9) {
        assert!(w[1] < w[0]);
    }
    assert!(eq.final_offset.unwrap() < 1e-9);
    let report = audit_laws(&traj, &model, &AuditTolerances::new(1e-9, 0.0).with_first_law(2e-6));
    assert!(report.passed(), "{report:?}");
}

#[test]
fn composed_first_law_residual_is_third_order_per_step() {
    let model = thermo_particles(1.0, 1.0, 1.0).unwrap();
    let x0 = State::new(vec![entropy_for_temperature(1.0, 273.15), entropy_for_temperature(1.0, 300.0)]);
    let first = |h: f64| {
        let traj = simulate(&model, &dg(DiscreteGradientKind::gonzalez()), &x0, &StepperConfig::with_step(h), 1).unwrap();
        audit_laws(&traj, &model, &AuditTolerances::default()).max_first_law_residual
    };
    let ratio = first(0.02) / first(0.01);
    assert!(ratio > 7.5 && ratio < 8.5, "{ratio}");
}

#[test]
fn unequal_capacities_settle_at_the_weighted_mean() {
    let (ca, cb) = (2.0, 0.5);
    let model = thermo_particles(ca, cb, 0.5).unwrap();
    let x0 = State::new(vec![entropy_for_temperature(ca, 280.0), entropy_for_temperature(cb, 320.0)]);
    let traj = simulate(&model, &dg(DiscreteGradientKind::itoh_abe()), &x0, &StepperConfig::default(), 800).unwrap();
    let eq = equilibration_metrics(&traj, &model).unwrap();
    assert!((eq.predicted_temperature.unwrap() - 288.0).abs() < 1e-12);
    assert!(eq.final_offset.unwrap() < 1e-6, "{eq:?}");
}

#[test]
fn thermo_springs_conserve_energy_and_produce_entropy() {
    let params = ThermoSpringParams::default();
    let model = thermo_springs(&params, Arc::new(QuadraticPotential::coupled_springs(1.0, 1.5, 0.5))).unwrap();
    let x0 = State::new(vec![1.0, 0.0, 1.0, -0.5, 0.3, 2.0]);
    for solver in [Solver::FixedPoint, Solver::Newton] {
        let cfg = StepperConfig {
            solver,
            ..StepperConfig::default()
        };
        let traj = simulate(&model, &dg(DiscreteGradientKind::gonzalez()), &x0, &cfg, 400).unwrap();
        let report = audit_laws(&traj, &model, &AuditTolerances::default());
        assert!(report.energy_ok, "{solver:?}: {}", report.max_energy_drift);
        assert!(report.entropy_ok, "{solver:?}: {:?}", report.min_entropy_increment);
    }
}

#[test]
fn herglotz_without_second_point_uses_initial_momentum() {
    let model = damped_system(1.0, 0.1, Arc::new(QuadraticPotential::harmonic(1, 1.0))).unwrap();
    let x0 = State::new(vec![0.0, 10.0, 0.0]);
    let traj = simulate(&model, &Method::Herglotz { q1: None }, &x0, &StepperConfig::default(), 200).unwrap();
    assert!(traj.is_complete());
    assert!((traj.states[0][1] - 10.0).abs() < 1e-10);
    // first step close to the exact flow at t = h
    let exact = contact_thermo::integrators::exact_dho(0.1, &x0, 0.1).unwrap();
    assert!((traj.states[1][0] - exact[0]).abs() < 1e-2);
    // the energy settles instead of drifting
    let late = &traj.energy[100..];
    let spread = late.iter().copied().fold(f64::NEG_INFINITY, f64::max) - late.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.0, "{spread}");
}

#[test]
fn identical_runs_are_bitwise_equal() {
    let model = thermo_particles(1.0, 1.0, 1.0).unwrap();
    let x0 = State::new(vec![5.6, 5.7]);
    let a = simulate(&model, &dg(DiscreteGradientKind::avf()), &x0, &StepperConfig::default(), 50).unwrap();
    let b = simulate(&model, &dg(DiscreteGradientKind::avf()), &x0, &StepperConfig::default(), 50).unwrap();
    assert_eq!(a.states, b.states);
}
