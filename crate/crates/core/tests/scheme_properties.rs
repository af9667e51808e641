use std::f64::consts::PI;

use mhd1d_core::diagnostics::mass;
use mhd1d_core::scheme::{advance_with, DtRule};
use mhd1d_core::*;
use proptest::prelude::*;

fn unit(beta: f64) -> PhysParams {
    PhysParams::normalized(beta).unwrap()
}

fn perturbed(n: usize, amp: f64) -> SimState {
    let f = InitFamily::single_mode(amp);
    make_initial(&f, Grid::new(n).unwrap()).unwrap()
}

fn max_diff(a: &SimState, b: &SimState) -> f64 {
    let mut m = 0.0f64;
    for (x, y) in a.v.iter().chain(&a.theta).chain(&a.u).zip(b.v.iter().chain(&b.theta).chain(&b.u)) {
        m = m.max((x - y).abs());
    }
    for (x, y) in a.w.iter().chain(&a.b).zip(b.w.iter().chain(&b.b)) {
        m = m.max((x[0] - y[0]).abs()).max((x[1] - y[1]).abs());
    }
    m
}

fn reflect(s: &SimState) -> SimState {
    let mut r = s.clone();
    r.v.reverse();
    r.theta.reverse();
    r.u = s.u.iter().rev().map(|u| -u).collect();
    r.w = s.w.iter().rev().copied().collect();
    r.b = s.b.iter().rev().map(|b| [-b[0], -b[1]]).collect();
    r
}

fn rotate(s: &SimState, angle: f64) -> SimState {
    let (sn, cs) = angle.sin_cos();
    let rot = |x: &[f64; 2]| [cs * x[0] - sn * x[1], sn * x[0] + cs * x[1]];
    let mut r = s.clone();
    r.w = s.w.iter().map(rot).collect();
    r.b = s.b.iter().map(rot).collect();
    r
}

#[test]
fn dt_examples() {
    let s = equilibrium_state(Grid::new(100).unwrap(), EquilibriumTarget::normalized()).unwrap();
    let p = PhysParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
    assert_eq!(p.gamma(), 2.0);
    let c = StepControls { cfl: 0.4, ..Default::default() };
    let dt = compute_dt(&s, &p, &c).unwrap();
    assert!((dt - 0.4 * 0.01 / 2f64.sqrt()).abs() < 1e-16);

    let mut cool = s.clone();
    cool.theta.iter_mut().for_each(|t| *t *= 0.5);
    let dt_cool = compute_dt(&cool, &p, &c).unwrap();
    assert!((dt_cool / dt - 2f64.sqrt()).abs() < 1e-12);

    let mut magnetized = s.clone();
    magnetized.b[50] = [0.3, -0.1];
    assert!(compute_dt(&magnetized, &p, &c).unwrap() < dt);

    let mut broken = s.clone();
    broken.theta[4] = f64::NAN;
    assert!(matches!(compute_dt(&broken, &p, &c), Err(SchemeError::NonFinite { .. })));
}

#[test]
fn equilibrium_is_a_fixed_point() {
    for p in [unit(0.0), PhysParams::new(0.3, 2.0, 0.7, 5.0, 1.5, 0.4, 2.5).unwrap()] {
        let s = equilibrium_state(Grid::new(30).unwrap(), EquilibriumTarget { v_s: 1.7, theta_s: 0.3 }).unwrap();
        for dt in [1e-4, 0.1, 10.0] {
            let (next, report) = step(&s, &p, &StepControls::default(), dt, None).unwrap();
            assert_eq!(next.v, s.v);
            assert_eq!(next.theta, s.theta);
            assert_eq!(next.u, s.u);
            assert_eq!(next.w, s.w);
            assert_eq!(next.b, s.b);
            assert!(report.picard_converged);
        }
    }
}

#[test]
fn zero_fields_stay_zero() {
    let mut s = perturbed(40, 0.1);
    s.w.iter_mut().for_each(|w| *w = [0.0; 2]);
    s.b.iter_mut().for_each(|b| *b = [0.0; 2]);
    let p = unit(1.0);
    let c = StepControls::default();
    for _ in 0..50 {
        let dt = compute_dt(&s, &p, &c).unwrap();
        s = step(&s, &p, &c, dt, None).unwrap().0;
        assert!(s.w.iter().chain(&s.b).all(|x| *x == [0.0; 2]));
    }
}

#[test]
fn rotation_commutes_with_step() {
    let p = unit(1.0);
    let c = StepControls::default();
    let s = perturbed(40, 0.1);
    let dt = compute_dt(&s, &p, &c).unwrap();
    let angle = 0.7;
    let a = rotate(&step(&s, &p, &c, dt, None).unwrap().0, angle);
    let b = step(&rotate(&s, angle), &p, &c, dt, None).unwrap().0;
    assert!(max_diff(&a, &b) < 1e-13);
}

#[test]
fn reflection_commutes_with_step() {
    let p = unit(2.0);
    let c = StepControls::default();
    let s = perturbed(40, 0.1);
    let dt = compute_dt(&s, &p, &c).unwrap();
    let a = reflect(&step(&s, &p, &c, dt, None).unwrap().0);
    let b = step(&reflect(&s), &p, &c, dt, None).unwrap().0;
    assert!(max_diff(&a, &b) < 1e-13);
}

#[test]
fn huge_step_fails_positivity_and_advance_retries() {
    let p = unit(1.0);
    let s = perturbed(40, 0.3);
    let err = step(&s, &p, &StepControls::default(), 5.0, None).unwrap_err();
    assert!(err.is_retryable(), "{err}");
    assert!(matches!(err, SchemeError::Positivity { field: Field::V, .. }));

    let mut halvings = Vec::new();
    let sum = advance_with(&s, &p, &StepControls::default(), 5.0, DtRule::Fixed(5.0), None, |_, dt, _| {
        halvings.push(dt)
    })
    .unwrap();
    assert!(sum.retries > 0);
    assert!(halvings[0] < 5.0);

    let strict = StepControls { max_retries: 2, ..Default::default() };
    match advance_with(&s, &p, &strict, 5.0, DtRule::Fixed(5.0), None, |_, _, _| {}) {
        Err(SchemeError::RetriesExhausted { last_good, retries, .. }) => {
            assert_eq!(retries, 2);
            assert_eq!(*last_good, s);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn advance_counts_and_lands_on_t_end() {
    let p = unit(1.0);
    let c = StepControls::default();
    let s = equilibrium_state(Grid::new(100).unwrap(), EquilibriumTarget::normalized()).unwrap();
    let dt = compute_dt(&s, &p, &c).unwrap();
    let mut calls = 0;
    let sum = advance_to(&s, &p, &c, 1.0, |_, _, _| calls += 1).unwrap();
    assert_eq!(sum.accepted_steps, (1.0 / dt).ceil() as usize);
    assert_eq!(calls, sum.accepted_steps);
    assert_eq!(sum.state.t, 1.0);
    assert_eq!(sum.state.v, s.v);
    assert_eq!(sum.state.theta, s.theta);

    assert!(matches!(
        advance_to(&s, &p, &c, 0.0, |_, _, _| {}),
        Err(SchemeError::BadEndTime { .. })
    ));
}

#[test]
fn advance_is_deterministic() {
    let p = unit(1.0);
    let c = StepControls::default();
    let s = perturbed(50, 0.1);
    let mut first = Vec::new();
    let mut second = Vec::new();
    advance_to(&s, &p, &c, 0.3, |st, _, _| first.push(st.clone())).unwrap();
    advance_to(&s, &p, &c, 0.3, |st, _, _| second.push(st.clone())).unwrap();
    assert_eq!(first, second);
}

#[test]
fn picard_budget_exhaustion_is_reported_not_fatal() {
    let p = unit(2.0);
    let c = StepControls { max_picard: 1, ..Default::default() };
    let s = perturbed(30, 0.1);
    let dt = compute_dt(&s, &p, &c).unwrap();
    let (_, report) = step(&s, &p, &c, dt, None).unwrap();
    assert_eq!(report.picard_iterations, 1);
    assert!(!report.picard_converged);

    let mut warnings = 0;
    let sum = advance_to(&s, &p, &c, 0.02, |_, _, r| warnings += usize::from(!r.picard_converged)).unwrap();
    assert_eq!(sum.picard_warnings, warnings);
    assert!(warnings > 0);
}

#[test]
fn fixed_dt_rule() {
    let p = unit(0.0);
    let c = StepControls::default();
    let s = perturbed(20, 0.05);
    let sum = advance_with(&s, &p, &c, 0.1, DtRule::Fixed(0.01), None, |_, dt, _| {
        assert!((dt - 0.01).abs() < 1e-12);
    })
    .unwrap();
    assert_eq!(sum.accepted_steps, 10);
}

#[test]
fn source_terms_drive_the_fields() {
    let p = unit(0.0);
    let c = StepControls::default();
    let s = equilibrium_state(Grid::new(20).unwrap(), EquilibriumTarget::normalized()).unwrap();
    let sources = SourceFields {
        u: Some(Box::new(|x, _| (PI * x).sin())),
        ..Default::default()
    };
    let (next, _) = step(&s, &p, &c, 1e-3, Some(&sources)).unwrap();
    assert!(next.u[10] > 0.0);
    assert_eq!(next.u[0], 0.0);
}

fn random_state() -> impl Strategy<Value = (SimState, f64)> {
    (
        8usize..40,
        prop::collection::vec(-1.0..1.0f64, 8),
        0.0..3.0f64,
    )
        .prop_map(|(n, coeffs, beta)| {
            let g = Grid::new(n).unwrap();
            let mut s = equilibrium_state(g, EquilibriumTarget::normalized()).unwrap();
            for c in 0..n {
                let x = g.cell_x(c);
                s.v[c] = 1.0 + 0.2 * coeffs[0] * (2.0 * PI * x).sin() + 0.1 * coeffs[1] * (6.0 * PI * x).cos();
                s.theta[c] = 1.0 + 0.3 * coeffs[2] * (PI * x).cos();
            }
            for j in 1..n {
                let x = g.node_x(j);
                s.u[j] = 0.2 * coeffs[3] * (PI * x).sin();
                s.w[j] = [0.2 * coeffs[4] * (2.0 * PI * x).sin(), 0.1 * coeffs[5] * (PI * x).sin()];
                s.b[j] = [0.2 * coeffs[6] * (PI * x).sin(), 0.2 * coeffs[7] * (3.0 * PI * x).sin()];
            }
            (s, beta)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_is_conserved((s, beta) in random_state()) {
        let p = unit(beta);
        let c = StepControls::default();
        let dt = compute_dt(&s, &p, &c).unwrap();
        let (next, _) = step(&s, &p, &c, dt, None).unwrap();
        prop_assert!((mass(&next) - mass(&s)).abs() < 1e-14);
        prop_assert!(validate_state(&next).is_empty());
    }

    #[test]
    fn reflection_symmetry((s, beta) in random_state()) {
        let p = unit(beta);
        let c = StepControls::default();
        let dt = compute_dt(&s, &p, &c).unwrap();
        let a = reflect(&step(&s, &p, &c, dt, None).unwrap().0);
        let b = step(&reflect(&s), &p, &c, dt, None).unwrap().0;
        prop_assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn dissipation_is_nonnegative((s, beta) in random_state()) {
        let p = unit(beta);
        prop_assert!(diagnostics::dissipation(&s, &p) >= 0.0);
        let e = diagnostics::entropy_functional(&s, &p);
        prop_assert!(e >= diagnostics::kinetic_magnetic(&s));
    }
}
