//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use contact_thermo::diagnostics::{convergence_study, equilibration_metrics, ConvergenceOrder, Oracle};
use contact_thermo::field::{FnField, QuadraticField, ScalarField};
use contact_thermo::geom::{self, BracketKind};
use contact_thermo::integrators::{dg_step, dg_step_closed_form_dho, herglotz_step};
use contact_thermo::lagrangian::{MechanicalLagrangian, MidpointDiscreteLagrangian};
use contact_thermo::systems::{damped_system, entropy_for_temperature, thermo_particles, QuadraticPotential};
use contact_thermo::{discrete_gradient, simulate, DiscreteGradientKind, Method, ModelSpec, State, StepperConfig};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_2019;

const FIG1_STEPS: usize = 500;
const FIG1_ENERGY: f64 = 50.0;
const TOL_ENERGY: f64 = 1e-9;
const TOL_ENTROPY: f64 = 1e-12;
const FIG1_RUNTIME: Duration = Duration::from_secs(1);

const CLOSED_FORM_STATES: usize = 20;
const TOL_CLOSED_FORM: f64 = 1e-9;

const T_A: f64 = 273.15;
const T_B: f64 = 300.0;
const T_EQUILIBRIUM: f64 = 286.575;
const TOL_EQUILIBRIUM: f64 = 0.5;

const TOL_LEMMA: f64 = 1e-10;
const DG_SAMPLES: usize = 1000;
const TOL_DG: f64 = 1e-10;
const CONTACT_STATES: usize = 1000;
const TOL_CONTACT: f64 = 1e-12;

const TOL_HERGLOTZ: f64 = 1e-10;
const HERGLOTZ_Q2: f64 = 79401.0 / 40100.0;
const HERGLOTZ_S1: f64 = 9.975;

const ORDER_STEPS: [f64; 3] = [0.1, 0.05, 0.025];
const ORDER_T_FINAL: f64 = 1.0;
/// Reported alongside, not gated: h = 0.1 is not yet asymptotic for rk4 here.
const ORDER_T_LONG: f64 = 10.0;
const DG_MIN_ORDER: f64 = 1.8;
const RK4_ORDER: (f64, f64) = (3.7, 4.3);
const ORDER_RUNTIME: Duration = Duration::from_secs(30);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn dho(gamma: f64) -> ModelSpec {
    damped_system(1.0, gamma, Arc::new(QuadraticPotential::harmonic(1, 1.0))).unwrap()
}

fn gonzalez() -> Method {
    Method::DiscreteGradient(DiscreteGradientKind::gonzalez())
}

fn dho_energy(x: &[f64], gamma: f64) -> f64 {
    0.5 * x[1] * x[1] + 0.5 * x[0] * x[0] + gamma * x[2]
}

fn fig1_run() -> (contact_thermo::Trajectory, Duration) {
    let model = dho(0.1);
    let x0 = State::new(vec![0.0, 10.0, 0.0]);
    let start = Instant::now();
    let traj = simulate(&model, &gonzalez(), &x0, &StepperConfig::default(), FIG1_STEPS).unwrap();
    (traj, start.elapsed())
}

fn energy_conservation() -> Outcome {
    let (traj, elapsed) = fig1_run();
    let drift = traj
        .states
        .iter()
        .map(|x| (dho_energy(x, 0.1) - FIG1_ENERGY).abs())
        .fold(0.0, f64::max);
    let complete = traj.is_complete() && traj.len() == FIG1_STEPS + 1;
    outcome(
        complete && drift <= TOL_ENERGY && elapsed < FIG1_RUNTIME,
        format!(
            "max|H-50| = {drift:.2e} (tol {TOL_ENERGY:.0e}), {} states, {:.3} s",
            traj.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn second_law_simple() -> Outcome {
    let (traj, _) = fig1_run();
    let min_ds = traj.states.windows(2).map(|w| w[1][2] - w[0][2]).fold(f64::INFINITY, f64::min);
    outcome(
        traj.is_complete() && min_ds >= -TOL_ENTROPY,
        format!("min S_(k+1)-S_k = {min_ds:.3e} (floor -{TOL_ENTROPY:.0e})"),
    )
}

/// The scheme for `p²/2 + q²/2 + γS` is linear in `(q, p)`: solve the 2×2
/// system directly, then `ΔS = h·p̄²`.
fn linear_dho_step(gamma: f64, h: f64, x: &[f64]) -> [f64; 3] {
    let (q0, p0, s0) = (x[0], x[1], x[2]);
    // q1 − q0 = h(p0 + p1)/2 ;  p1 − p0 = −h(q0 + q1)/2 − γh(p0 + p1)/2
    let a = [[1.0, -0.5 * h], [0.5 * h, 1.0 + 0.5 * gamma * h]];
    let b = [q0 + 0.5 * h * p0, p0 - 0.5 * h * q0 - 0.5 * gamma * h * p0];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let q1 = (b[0] * a[1][1] - a[0][1] * b[1]) / det;
    let p1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    let pm = 0.5 * (p0 + p1);
    [q1, p1, s0 + h * pm * pm]
}

fn closed_form_equivalence() -> Outcome {
    let (gamma, h) = (0.1, 0.1);
    let model = dho(gamma);
    let cfg = StepperConfig::with_step(h);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_generic = 0.0_f64;
    let mut worst_printed = 0.0_f64;
    let mut failed = None;
    for _ in 0..CLOSED_FORM_STATES {
        let mut x: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        for k in 0..FIG1_STEPS {
            let oracle = linear_dho_step(gamma, h, &x);
            let printed = dg_step_closed_form_dho(gamma, h, &x).unwrap();
            let generic = match dg_step(&model, DiscreteGradientKind::gonzalez(), &x, &cfg) {
                Ok(s) => s.state,
                Err(e) => {
                    failed = Some(format!("step {k}: {e}"));
                    break;
                }
            };
            for i in 0..3 {
                worst_generic = worst_generic.max((generic[i] - printed[i]).abs());
                worst_printed = worst_printed.max((printed[i] - oracle[i]).abs() / (1.0 + oracle[i].abs()));
            }
            x = generic.into_inner();
        }
    }
    let passed = failed.is_none() && worst_generic <= TOL_CLOSED_FORM && worst_printed <= 1e-13;
    outcome(
        passed,
        format!(
            "max|generic-closed| = {worst_generic:.2e} (tol {TOL_CLOSED_FORM:.0e}); closed form vs 2x2 solve {worst_printed:.1e}{}",
            failed.map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn composed_system() -> Outcome {
    let model = thermo_particles(1.0, 1.0, 1.0).unwrap();
    let x0 = State::new(vec![entropy_for_temperature(1.0, T_A), entropy_for_temperature(1.0, T_B)]);
    let traj = simulate(&model, &gonzalez(), &x0, &StepperConfig::default(), FIG1_STEPS).unwrap();
    let h0 = T_A + T_B;
    let drift = traj.states.iter().map(|x| (x[0].exp() + x[1].exp() - h0).abs()).fold(0.0, f64::max);
    let min_ds = traj
        .states
        .windows(2)
        .map(|w| (w[1][0] + w[1][1]) - (w[0][0] + w[0][1]))
        .fold(f64::INFINITY, f64::min);
    let eq = equilibration_metrics(&traj, &model).unwrap();
    let max_gap_rise = eq.gap.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let last = traj.last().unwrap();
    let offset = (last[0].exp() - T_EQUILIBRIUM).abs().max((last[1].exp() - T_EQUILIBRIUM).abs());
    let predicted_ok = eq.predicted_temperature.is_some_and(|t| (t - T_EQUILIBRIUM).abs() < 1e-9);
    outcome(
        traj.is_complete()
            && drift <= TOL_ENERGY
            && min_ds >= 0.0
            && max_gap_rise <= 0.0
            && offset <= TOL_EQUILIBRIUM
            && predicted_ok,
        format!(
            "H drift {drift:.2e}, min dS_total {min_ds:.2e}, max gap rise {max_gap_rise:.2e}, final |T-{T_EQUILIBRIUM}| = {offset:.2e} K"
        ),
    )
}

fn entropy_lemma() -> Outcome {
    // H = (p1² + q1² + p2² + q2²)/2 + S1²/(2c1) + S2²/(2c2) + ε S1 S2
    let (c1, c2, eps, k, h) = (1.5, 0.8, 0.05, 0.7, 0.1);
    let mut a = vec![0.0; 36];
    for i in [0, 1, 3, 4] {
        a[i * 7] = 1.0;
    }
    a[2 * 7] = 1.0 / c1;
    a[5 * 7] = 1.0 / c2;
    a[2 * 6 + 5] = eps;
    a[5 * 6 + 2] = eps;
    let temps = move |x: &[f64]| (x[2] / c1 + eps * x[5], x[5] / c2 + eps * x[2]);
    let energy = QuadraticField::new(6, a, vec![0.0; 6], 0.0);
    let model = ModelSpec::composed("quadratic", 1, 1, k, Arc::new(energy)).unwrap();
    let x0 = State::new(vec![0.4, -1.0, 3.0, 1.2, 0.5, 1.0]);
    let traj = simulate(&model, &gonzalez(), &x0, &StepperConfig::with_step(h), 300).unwrap();
    let mut worst = 0.0_f64;
    for w in traj.states.windows(2) {
        let mid: Vec<f64> = w[0].iter().zip(w[1].iter()).map(|(a, b)| 0.5 * (a + b)).collect();
        let (t1, t2) = temps(&mid);
        let predicted = h * k * (t2 - t1) * (t2 - t1) / (t1 * t2);
        let ds = (w[1][2] + w[1][5]) - (w[0][2] + w[0][5]);
        worst = worst.max((ds - predicted).abs());
    }
    outcome(
        traj.is_complete() && worst <= TOL_LEMMA,
        format!("max |dS_total - h k (T2-T1)^2/(T1 T2)| = {worst:.2e} over {} steps (tol {TOL_LEMMA:.0e})", traj.len() - 1),
    )
}

/// Random smooth energies on ℝ⁵ with exact gradients.
fn energy_family(rng: &mut ChaCha8Rng, family: usize) -> Arc<dyn ScalarField> {
    let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    match family {
        0 => {
            let a: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
            Arc::new(QuadraticField::new(5, a, c, 0.0))
        }
        1 => {
            let c2 = c.clone();
            let f = FnField::with_gradient(
                move |x: &[f64]| (0..5).map(|i| c[i] * x[i].powi(3) * x[(i + 1) % 5]).sum(),
                move |x: &[f64]| {
                    let mut g = vec![0.0; 5];
                    for i in 0..5 {
                        g[i] += 3.0 * c2[i] * x[i] * x[i] * x[(i + 1) % 5];
                        g[(i + 1) % 5] += c2[i] * x[i].powi(3);
                    }
                    g
                },
            );
            Arc::new(f)
        }
        2 => {
            let c2 = c.clone();
            let f = FnField::with_gradient(
                move |x: &[f64]| (0..5).map(|i| c[i] * x[i]).sum::<f64>().exp() + x[0] * x[1],
                move |x: &[f64]| {
                    let e = (0..5).map(|i| c2[i] * x[i]).sum::<f64>().exp();
                    let mut g: Vec<f64> = c2.iter().map(|ci| ci * e).collect();
                    g[0] += x[1];
                    g[1] += x[0];
                    g
                },
            );
            Arc::new(f)
        }
        _ => {
            let f = FnField::with_gradient(
                |x: &[f64]| (x[0] * x[3]).sin() + x[4].cos() * x[1] + x[2] * x[2],
                |x: &[f64]| {
                    let c = (x[0] * x[3]).cos();
                    vec![x[3] * c, x[4].cos(), 2.0 * x[2], x[0] * c, -x[4].sin() * x[1]]
                },
            );
            Arc::new(f)
        }
    }
}

fn random_energy(rng: &mut ChaCha8Rng) -> Arc<dyn ScalarField> {
    let family = rng.random_range(0..4);
    energy_family(rng, family)
}

fn discrete_gradient_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut worst_identity = [0.0_f64; 3];
    let mut worst_consistency = 0.0_f64;
    for _ in 0..DG_SAMPLES {
        let h = random_energy(&mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|xi| xi + rng.random_range(-0.5..0.5)).collect();
        let dh = h.value(&y) - h.value(&x);
        let exact = h.gradient(&x);
        for (k, kind) in DiscreteGradientKind::all().into_iter().enumerate() {
            let g = discrete_gradient(kind, h.as_ref(), &x, &y).unwrap();
            let terms: Vec<f64> = (0..5).map(|i| g[i] * (y[i] - x[i])).collect();
            let lhs: f64 = terms.iter().sum();
            let scale = dh.abs().max(terms.iter().map(|t| t.abs()).sum::<f64>()).max(f64::MIN_POSITIVE);
            worst_identity[k] = worst_identity[k].max((lhs - dh).abs() / scale);
            let g0 = discrete_gradient(kind, h.as_ref(), &x, &x).unwrap();
            for i in 0..5 {
                worst_consistency = worst_consistency.max((g0[i] - exact[i]).abs() / exact[i].abs().max(1.0));
            }
        }
    }
    let worst = worst_identity.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= TOL_DG && worst_consistency <= TOL_DG,
        format!(
            "{DG_SAMPLES} samples: energy identity avf {:.2e}, gonzalez {:.2e}, itoh-abe {:.2e}; consistency {worst_consistency:.2e} (rel tol {TOL_DG:.0e})",
            worst_identity[0], worst_identity[1], worst_identity[2]
        ),
    )
}

fn contact_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut hamiltonians: Vec<Arc<dyn ScalarField>> = (0..4).map(|f| energy_family(&mut rng, f)).collect();
    hamiltonians.push(Arc::new(FnField::with_gradient(
        |x: &[f64]| 0.5 * (x[2] * x[2] + x[3] * x[3] + x[0] * x[0]) + 0.3 * x[4],
        |x: &[f64]| vec![x[0], 0.0, x[2], x[3], 0.3],
    )));
    let mut worst = 0.0_f64;
    let mut record = |dev: f64, scale: f64| worst = worst.max(dev.abs() / scale.max(1.0));
    for h in &hamiltonians {
        for _ in 0..CONTACT_STATES {
            let x = State::new((0..5).map(|_| rng.random_range(-2.0..2.0)).collect());
            let hv = h.value(&x);
            let d = h.gradient(&x);
            let p = &x[2..4];
            let gnorm = d.norm_inf();
            let xnorm = x.norm_inf();
            let scale = (1.0 + xnorm) * (1.0 + gnorm) * (1.0 + gnorm + hv.abs());

            // q̇ = H_p, ṗ = −H_q − p H_S, Ṡ = p·H_p
            let evo = [
                d[2],
                d[3],
                -d[0] - p[0] * d[4],
                -d[1] - p[1] * d[4],
                p[0] * d[2] + p[1] * d[3],
            ];
            let e = geom::evolution_vf(h.as_ref(), &x).unwrap();
            let xh = geom::hamiltonian_vf(h.as_ref(), &x).unwrap();
            for i in 0..5 {
                record(e[i] - evo[i], scale);
            }
            let eta = |v: &[f64]| v[4] - p[0] * v[0] - p[1] * v[1];
            let along = |v: &[f64]| (0..5).map(|i| d[i] * v[i]).sum::<f64>();
            record(eta(&e), scale);
            record(eta(&xh) + hv, scale);
            record(along(&e), scale);
            record(along(&xh) + d[4] * hv, scale);
            for i in 0..5 {
                let reeb = if i == 4 { 1.0 } else { 0.0 };
                record(e[i] - xh[i] - hv * reeb, scale);
            }

            // single-generator decomposition against a second energy
            let g = &hamiltonians[rng.random_range(0..hamiltonians.len())];
            let dg = g.gradient(&x);
            let bscale = (1.0 + xnorm) * (1.0 + gnorm) * (1.0 + dg.norm_inf());
            let poisson0 = d[2] * dg[0] + d[3] * dg[1] - d[0] * dg[2] - d[1] * dg[3];
            let liou = |v: &[f64]| p[0] * v[2] + p[1] * v[3];
            let delta_q = dg[4] * liou(&d) - d[4] * liou(&dg);
            let br = |k| geom::bracket(k, h.as_ref(), g.as_ref(), &x).unwrap();
            record(br(BracketKind::Cartan) - (poisson0 + delta_q), bscale);
            record(br(BracketKind::Poisson0) - poisson0, bscale);
            record(br(BracketKind::DeltaQ) - delta_q, bscale);
        }
    }
    outcome(
        worst <= TOL_CONTACT,
        format!("{CONTACT_STATES} states x 5 Hamiltonians: worst scaled deviation {worst:.2e} (tol {TOL_CONTACT:.0e})"),
    )
}

/// The explicit scheme for `L = q̇²/2 − q²/2 − γS` with the midpoint rule.
fn explicit_herglotz(gamma: f64, h: f64, q0: f64, q1: f64) -> (f64, f64) {
    let q2 = (gamma * h.powi(3) * q0 + gamma * h.powi(3) * q1 + 4.0 * gamma * h * q0 - 4.0 * gamma * h * q1
        - h * h * q0
        - 2.0 * h * h * q1
        - 4.0 * q0
        + 8.0 * q1)
        / (h * h + 4.0);
    let ds = (q1 - q0) * (q1 - q0) / h - h * (q1 * q1 - q0 * q0) / 4.0;
    (q2, ds)
}

fn herglotz_scheme() -> Outcome {
    let (gamma, h) = (0.1, 0.1);
    let model = dho(gamma);
    let x0 = State::new(vec![0.0, 0.0, 0.0]);
    let traj = simulate(&model, &Method::Herglotz { q1: Some(vec![1.0]) }, &x0, &StepperConfig::with_step(h), FIG1_STEPS)
        .unwrap();

    let ld = MidpointDiscreteLagrangian::new(
        MechanicalLagrangian::new(1.0, gamma, Arc::new(QuadraticPotential::harmonic(1, 1.0))),
        h,
    );
    let first = herglotz_step(&ld, &[0.0], &[1.0], 0.0, &StepperConfig::with_step(h)).unwrap();
    let first_ok = (first.q_next[0] - HERGLOTZ_Q2).abs() <= TOL_HERGLOTZ && (first.s_cur - HERGLOTZ_S1).abs() <= TOL_HERGLOTZ;

    let (mut q0, mut q1, mut s) = (0.0, 1.0, 0.0);
    let mut worst = 0.0_f64;
    for k in 0..traj.len() {
        let x = &traj.states[k];
        worst = worst.max((x[0] - q0).abs()).max((x[2] - s).abs() / s.abs().max(1.0));
        let (q2, ds) = explicit_herglotz(gamma, h, q0, q1);
        s += ds;
        q0 = q1;
        q1 = q2;
    }
    let increments: Vec<f64> = traj.states.windows(2).map(|w| w[1][2] - w[0][2]).collect();
    let min_ds = increments.iter().copied().fold(f64::INFINITY, f64::min);
    let decreases = increments.iter().filter(|d| **d < 0.0).count();
    let monotone = decreases == 0;
    outcome(
        traj.is_complete() && first_ok && worst <= TOL_HERGLOTZ && monotone,
        format!(
            "q2 = {:.10}, S1 = {:.10}; max dev from explicit formulas {worst:.2e}; entropy min increment {min_ds:.3e}, {decreases} decreasing step(s) in {}",
            first.q_next[0],
            first.s_cur,
            increments.len()
        ),
    )
}

fn convergence_orders() -> Outcome {
    let model = dho(0.1);
    let x0 = State::new(vec![0.0, 10.0, 0.0]);
    let start = Instant::now();
    let study = |method: Method, t_final: f64| {
        convergence_study(
            &model,
            &method,
            &x0,
            &ORDER_STEPS,
            t_final,
            Oracle::ExactDho { gamma: 0.1 },
            &StepperConfig::default(),
        )
        .map(|r| r.order)
    };
    let dg = study(gonzalez(), ORDER_T_FINAL);
    let rk4 = study(Method::Rk4, ORDER_T_FINAL);
    let elapsed = start.elapsed();
    let dg_long = study(gonzalez(), ORDER_T_LONG);
    let rk4_long = study(Method::Rk4, ORDER_T_LONG);
    let fmt = |o: &Result<ConvergenceOrder, contact_thermo::Error>| match o {
        Ok(ConvergenceOrder::Estimated(p)) => format!("{p:.3}"),
        Ok(ConvergenceOrder::Undefined) => "undefined".into(),
        Err(e) => format!("error: {e}"),
    };
    let dg_ok = matches!(dg, Ok(ConvergenceOrder::Estimated(p)) if p >= DG_MIN_ORDER);
    let rk4_ok = matches!(rk4, Ok(ConvergenceOrder::Estimated(p)) if (RK4_ORDER.0..=RK4_ORDER.1).contains(&p));
    outcome(
        dg_ok && rk4_ok && elapsed < ORDER_RUNTIME,
        format!(
            "t = {ORDER_T_FINAL}: dg:gonzalez order {} (>= {DG_MIN_ORDER}), rk4 order {} (in [{}, {}]), {:.2} s; at t = {ORDER_T_LONG}: dg {}, rk4 {}",
            fmt(&dg),
            fmt(&rk4),
            RK4_ORDER.0,
            RK4_ORDER.1,
            elapsed.as_secs_f64(),
            fmt(&dg_long),
            fmt(&rk4_long)
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("energy conservation, damped oscillator", energy_conservation),
        ("second law, simple system", second_law_simple),
        ("closed-form equivalence", closed_form_equivalence),
        ("composed system equilibration", composed_system),
        ("composed entropy identity", entropy_lemma),
        ("discrete-gradient properties", discrete_gradient_properties),
        ("contact identities and brackets", contact_identities),
        ("discrete Herglotz scheme", herglotz_scheme),
        ("convergence orders", convergence_orders),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failures += 1;
        }
        println!("[{}] {}. {}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, name, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
