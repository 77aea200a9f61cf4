use std::f64::consts::PI;

use moist_core::lab::init::{make_initial_state, Family, InitialCondition};
use moist_core::tendencies::{advect, explicit_tendency};
use moist_core::{Grid, ModelParams, Spectral, State};
use proptest::prelude::*;

fn smooth_state(grid: Grid, seed: u64) -> State {
    let spec = InitialCondition {
        family: Family::RandomSmooth,
        seed,
        kmax: 3,
        amp_u: 1.0,
        amp_v: 1.0,
        amp_te: 1.0,
        amp_qe: 1.0,
        nonpositive_q: false,
        ..Default::default()
    };
    make_initial_state(&spec, grid).unwrap()
}

/// Rate of change of the weighted energy along the explicit tendency.
fn energy_rate(s: &State, p: &ModelParams, engine: &Spectral) -> (f64, f64) {
    let t = explicit_tendency(engine, s, p).unwrap();
    let a = 1.0 + p.alpha;
    let wt = 1.0 / (a * (1.0 - p.qbar));
    let wq = 1.0 / (a * (p.qbar + p.alpha));
    let terms = [
        s.u.dot(&t.du),
        s.v.dot(&t.dv),
        wt * s.te.dot(&t.dte),
        wq * s.qe.dot(&t.dqe),
    ];
    let scale = terms.iter().map(|x| x.abs()).sum::<f64>();
    (terms.iter().sum(), scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn explicit_tendency_conserves_energy(seed in any::<u64>(), alpha in -0.3f64..1.5, qbar in 0.4f64..0.95) {
        let g = Grid::new(64, 2.0 * PI * 2.0).unwrap();
        let e = Spectral::new(g);
        let p = ModelParams { alpha, qbar, ..ModelParams::default() };
        let s = smooth_state(g, seed);
        let (rate, scale) = energy_rate(&s, &p, &e);
        prop_assert!(rate.abs() <= 1e-11 * scale.max(1.0), "rate {rate:e}, scale {scale:e}");
    }

    #[test]
    fn advection_by_solenoidal_flow_is_skew(seed in any::<u64>()) {
        let g = Grid::new(64, 2.0 * PI * 2.0).unwrap();
        let e = Spectral::new(g);
        let s = smooth_state(g, seed);
        let lhs = advect(&e, &s.u, &s.te).unwrap().dot(&s.qe);
        let rhs = -s.te.dot(&advect(&e, &s.u, &s.qe).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (lhs.abs() + rhs.abs()).max(1.0));
        let own = advect(&e, &s.u, &s.te).unwrap().dot(&s.te);
        prop_assert!(own.abs() <= 1e-11 * s.te.dot(&s.te).max(1.0));
    }
}

#[test]
fn coupling_alone_exchanges_energy_between_modes() {
    // Rest state with a temperature anomaly: only the coupling terms act.
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let e = Spectral::new(g);
    let p = ModelParams::default();
    let mut s = State::zeros(g);
    s.te = moist_core::Field::from_fn(g, |x, y| x.sin() + y.cos());
    s.v.x = moist_core::Field::from_fn(g, |x, _| x.cos());
    let (rate, scale) = energy_rate(&s, &p, &e);
    assert!(scale > 1e-3);
    assert!(rate.abs() < 1e-13 * scale);
}
