//! Regression checks against closed-form solutions and kernel identities.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lab::init::{make_initial_state, taylor_green_velocity, Family, InitialCondition};
use crate::model::{ModelParams, State};
use crate::spectral::{Field, Grid, Spectral, VectorField};
use crate::stepper::{Stepper, StepperConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(Error::InvalidArgument(format!("unknown level `{other}`"))),
        }
    }
}

impl Level {
    fn n(self) -> usize {
        match self {
            Level::Quick => 64,
            Level::Full => 128,
        }
    }

    /// Step sizes for the exact-solution checks.
    fn exact_dts(self) -> &'static [f64] {
        match self {
            Level::Quick => &[1e-3],
            Level::Full => &[2e-3, 1e-3, 5e-4],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn failed(name: &str, e: impl fmt::Display) -> Check {
    check(name, false, format!("error: {e}"))
}

fn l2_error(a: &VectorField, b: &VectorField) -> f64 {
    let d = a.sub(b);
    d.dot(&d).sqrt()
}

fn run_to(stepper: &Stepper, s0: State, t_end: f64) -> Result<State> {
    stepper.run(s0, t_end, |_, _| {}).map_err(|e| e.error)
}

fn zero_state(level: Level) -> Check {
    let name = "zero-state";
    let grid = Grid::new(level.n(), 2.0 * PI).unwrap();
    let run = || -> Result<(f64, f64)> {
        let st = Stepper::new(grid, ModelParams::default(), StepperConfig::default().with_dt(1e-2))?;
        let mut worst = 0.0_f64;
        let s = st
            .run(State::zeros(grid), 0.1, |_, r| {
                worst = worst.max(r.energy.abs()).max(r.dissipation.abs()).max(r.budget_residual.abs());
            })
            .map_err(|e| e.error)?;
        let size = s.planes().iter().map(|p| p.max_abs()).fold(0.0, f64::max);
        Ok((size, worst))
    };
    match run() {
        Ok((size, worst)) => check(
            name,
            size == 0.0 && worst == 0.0,
            format!("max |field| = {size:e}, max |diagnostic| = {worst:e}"),
        ),
        Err(e) => failed(name, e),
    }
}

fn decaying_shear(level: Level) -> Check {
    let name = "decaying-shear";
    let grid = Grid::new(level.n(), 2.0 * PI).unwrap();
    let p = ModelParams { epsilon: 0.1, ..ModelParams::default() };
    let t_end = 0.5;
    let mut details = Vec::new();
    let mut ok = true;
    for &dt in level.exact_dts() {
        let res = (|| -> Result<f64> {
            let st = Stepper::new(grid, p, StepperConfig::default().with_dt(dt))?;
            let mut s0 = State::zeros(grid);
            s0.u = VectorField::new(Field::from_fn(grid, |_, y| y.sin()), Field::zeros(grid))?;
            let s = run_to(&st, s0.clone(), t_end)?;
            let exact = s0.u.scaled((-p.mu * t_end).exp());
            Ok(l2_error(&s.u, &exact))
        })();
        match res {
            Ok(err) => {
                ok &= err <= dt * dt;
                details.push(format!("dt {dt:e}: error {err:.3e} (bound {:.1e})", dt * dt));
            }
            Err(e) => return failed(name, e),
        }
    }
    check(name, ok, details.join("; "))
}

fn taylor_green(level: Level) -> Check {
    let name = "taylor-green";
    let grid = Grid::new(level.n(), 2.0 * PI).unwrap();
    let p = ModelParams { epsilon: 0.1, ..ModelParams::default() };
    let t_end = 0.5;
    let mut details = Vec::new();
    let mut ok = true;
    for &dt in level.exact_dts() {
        let res = (|| -> Result<f64> {
            let st = Stepper::new(grid, p, StepperConfig::default().with_dt(dt))?;
            let s0 = make_initial_state(&InitialCondition::taylor_green(1.0), grid)?;
            let s = run_to(&st, s0, t_end)?;
            let exact = taylor_green_velocity(grid, (-2.0 * p.mu * t_end).exp(), 1);
            Ok(l2_error(&s.u, &exact))
        })();
        match res {
            Ok(err) => {
                ok &= err < 1e-4;
                details.push(format!("dt {dt:e}: error {err:.3e}"));
            }
            Err(e) => return failed(name, e),
        }
    }
    check(name, ok, details.join("; "))
}

/// Largest per-step budget residual of a constrained moist run.
pub fn max_budget_residual(grid: Grid, p: ModelParams, dt: f64, t_end: f64) -> Result<f64> {
    let st = Stepper::new(grid, p, StepperConfig::default().with_dt(dt))?;
    let s0 = make_initial_state(&InitialCondition::default(), grid)?;
    let mut worst = 0.0_f64;
    run_to_with(&st, s0, t_end, |r| worst = worst.max(r))?;
    Ok(worst)
}

fn run_to_with(st: &Stepper, s0: State, t_end: f64, mut f: impl FnMut(f64)) -> Result<State> {
    st.run(s0, t_end, |_, r| f(r.budget_residual)).map_err(|e| e.error)
}

fn budget_refinement(level: Level) -> Check {
    let name = "budget-refinement";
    let grid = Grid::new(level.n(), 2.0 * PI * 8.0).unwrap();
    let p = ModelParams { epsilon: 0.05, ..ModelParams::default() };
    let (dts, t_end): (&[f64], f64) = match level {
        Level::Quick => (&[4e-3, 2e-3], 0.25),
        Level::Full => (&[4e-3, 2e-3, 1e-3], 0.5),
    };
    let mut res = Vec::new();
    for &dt in dts {
        match max_budget_residual(grid, p, dt, t_end) {
            Ok(r) => res.push(r),
            Err(e) => return failed(name, e),
        }
    }
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| (3.0..=5.0).contains(r));
    let detail = dts
        .iter()
        .zip(&res)
        .map(|(dt, r)| format!("dt {dt:e}: {r:.3e}"))
        .chain(ratios.iter().map(|r| format!("ratio {r:.3}")))
        .collect::<Vec<_>>()
        .join("; ");
    check(name, ok, detail)
}

fn random_velocity(grid: Grid, seed: u64) -> Result<VectorField> {
    let spec = InitialCondition {
        family: Family::RandomSmooth,
        seed,
        kmax: 8,
        nonpositive_q: false,
        ..Default::default()
    };
    // Unprojected content comes from the baroclinic part.
    Ok(make_initial_state(&spec, grid)?.v)
}

fn projector(level: Level) -> Check {
    let name = "projector";
    let grid = Grid::new(level.n(), 2.0 * PI * 2.0).unwrap();
    let engine = Spectral::new(grid);
    let (a, b) = match (random_velocity(grid, 1), random_velocity(grid, 2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return failed(name, e),
    };
    let pa = engine.leray_project(&a);
    let ppa = engine.leray_project(&pa);
    let pb = engine.leray_project(&b);
    let idem = l2_error(&ppa, &pa) / pa.dot(&pa).sqrt();
    let adj = (pa.dot(&b) - a.dot(&pb)).abs() / (a.dot(&a) * b.dot(&b)).sqrt();
    let h1 = (engine.grad_sq_spectrum(&engine.forward(&pa.x)) + engine.grad_sq_spectrum(&engine.forward(&pa.y))).sqrt();
    let d = engine.div(&pa);
    let div = d.dot(&d).sqrt() / h1;
    let ok = idem < 1e-10 && adj < 1e-10 && div < 1e-10;
    check(
        name,
        ok,
        format!("idempotence {idem:.2e}, self-adjointness {adj:.2e}, divergence {div:.2e}"),
    )
}

fn parseval(level: Level) -> Check {
    let name = "parseval";
    let grid = Grid::new(level.n(), 3.0).unwrap();
    let engine = Spectral::new(grid);
    let f = match random_velocity(grid, 3) {
        Ok(v) => v.x,
        Err(e) => return failed(name, e),
    };
    let quad = f.dot(&f);
    let spec = engine.l2_sq_spectrum(&engine.forward(&f));
    let rel = (quad - spec).abs() / quad;
    check(name, rel < 1e-12, format!("relative difference {rel:.2e}"))
}

/// Runs every check at `level`. Failures are report entries, never errors.
pub fn validation_suite(level: Level) -> ValidationReport {
    let checks = vec![
        zero_state(level),
        decaying_shear(level),
        taylor_green(level),
        budget_refinement(level),
        projector(level),
        parseval(level),
    ];
    ValidationReport { level, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_names() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert_eq!("full".parse::<Level>().unwrap(), Level::Full);
        assert!("slow".parse::<Level>().is_err());
    }

    #[test]
    fn zero_state_passes() {
        assert!(zero_state(Level::Quick).passed);
    }

    #[test]
    fn kernel_checks_pass() {
        assert!(projector(Level::Quick).passed);
        assert!(parseval(Level::Quick).passed);
    }

    #[test]
    fn report_text_marks_failures() {
        let r = ValidationReport {
            level: Level::Quick,
            checks: vec![check("a", true, "fine".into()), check("b", false, "off".into())],
        };
        assert!(!r.passed());
        let text = r.to_string();
        assert!(text.contains("PASS a: fine"));
        assert!(text.contains("FAIL b: off"));
        assert!(text.ends_with("2 checks, 1 failed\n"));
    }
}
