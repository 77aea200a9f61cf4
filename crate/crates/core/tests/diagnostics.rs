use std::f64::consts::PI;

use moist_core::diagnostics::{budget_residual, energy, norms};
use moist_core::{Field, Grid, ModelParams, Spectral, State, Stepper, StepperConfig, VectorField};

fn max_residual(dt: f64) -> f64 {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let p = ModelParams::default();
    let st = Stepper::new(g, p, StepperConfig::default().with_dt(dt)).unwrap();
    let mut s0 = State::zeros(g);
    s0.u = VectorField::new(Field::from_fn(g, |_, y| (2.0 * y).sin()), Field::zeros(g)).unwrap();
    let mut worst = 0.0_f64;
    st.run(s0, 0.2, |_, r| worst = worst.max(r.budget_residual)).unwrap();
    worst
}

#[test]
fn pure_diffusion_residual_is_second_order() {
    let r = [max_residual(8e-3), max_residual(4e-3), max_residual(2e-3)];
    for w in r.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "{r:?}");
    }
}

#[test]
fn exact_decay_has_matching_energy() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let p = ModelParams::default();
    let mut s = State::zeros(g);
    s.u = VectorField::new(Field::from_fn(g, |_, y| y.sin()), Field::zeros(g)).unwrap();
    // E = |u|^2 / 2 = pi^2 for a unit sine on the 2 pi square.
    assert!((energy(&s, &p) - PI * PI).abs() < 1e-12);
    let mut later = s.clone();
    later.u = s.u.scaled((-0.01f64).exp());
    later.time = 0.01;
    let e = Spectral::new(g);
    let r = budget_residual(&e, &s, &later, &p).unwrap();
    assert!(r < 1e-4, "{r}");
}

#[test]
fn norms_are_consistent() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let e = Spectral::new(g);
    let f = Field::from_fn(g, |x, y| x.cos() * y.sin());
    let n = norms(&e, &f);
    // |f|^2 = pi^2, |grad f|^2 = 2 pi^2, sup = 1.
    assert!((n.l2 - PI).abs() < 1e-12);
    assert!((n.h1_semi - 2f64.sqrt() * PI).abs() < 1e-12);
    assert!((n.linf - 1.0).abs() < 1e-12);
    assert!(n.l4 > 0.0 && n.l4 < n.l2);
}
