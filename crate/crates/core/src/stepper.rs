//! Time advancement for the relaxed (`eps > 0`) and limiting (`eps = 0`)
//! systems.
//!
//! One step is a Strang splitting: half a moisture substep, a full
//! integrating-factor RK2 step of the explicit tendencies with exact
//! diffusion, then the second moisture half substep. For `eps > 0` the
//! moisture substep is the exact solution of the relaxation sink; for
//! `eps = 0` it is the pointwise projection onto `q_e <= 0`.

use std::fmt;

use crate::diagnostics::{DiagnosticsRecord, Recorder};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::spectral::{Field, Grid, Spectral, VectorField};
use crate::tendencies::explicit_tendency;

/// Speed of the linear baroclinic waves carried by the explicit coupling
/// `grad(T_e - q_e)/(1+alpha)`, `div v`.
pub const COUPLING_WAVE_SPEED: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    StrangRk2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub min_dt: f64,
    pub max_dt: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 2e-3,
            cfl: 0.5,
            scheme: Scheme::StrangRk2,
            min_dt: 1e-8,
            max_dt: 1.0,
        }
    }
}

impl StepperConfig {
    pub fn with_dt(self, dt: f64) -> Self {
        StepperConfig {
            dt,
            max_dt: self.max_dt.max(dt),
            min_dt: self.min_dt.min(dt),
            ..self
        }
    }

    pub fn validate(self) -> Result<Self> {
        let ok = self.min_dt > 0.0
            && self.min_dt <= self.dt
            && self.dt <= self.max_dt
            && self.max_dt.is_finite();
        if !ok {
            return Err(Error::Config(format!(
                "need 0 < min_dt <= dt <= max_dt, got {} / {} / {}",
                self.min_dt, self.dt, self.max_dt
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        Ok(self)
    }
}

/// Exact solution of `dq/dt = -((1+alpha)/eps) q^+` over `dt`.
pub fn relax_substep(qe: &Field, p: &ModelParams, dt: f64) -> Result<Field> {
    if p.epsilon <= 0.0 {
        return Err(Error::EpsilonZero);
    }
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative substep {dt}")));
    }
    let decay = (-(1.0 + p.alpha) * dt / p.epsilon).exp();
    Ok(qe.map(|q| if q > 0.0 { q * decay } else { q }))
}

/// Pointwise projection onto the constraint set `q_e <= 0`.
pub fn limit_projection(qe: &Field) -> Field {
    qe.map(|q| if q > 0.0 { 0.0 } else { q })
}

/// A run that stopped early, with the last state that passed the checks.
#[derive(Debug)]
pub struct RunError {
    pub error: Error,
    pub last_good: Box<State>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (last good state at t = {})", self.error, self.last_good.time)
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// One simulation's integrator: spectral engine plus fixed parameters.
#[derive(Debug)]
pub struct Stepper {
    engine: Spectral,
    params: ModelParams,
    config: StepperConfig,
}

impl Stepper {
    pub fn new(grid: Grid, params: ModelParams, config: StepperConfig) -> Result<Self> {
        Ok(Stepper {
            engine: Spectral::new(grid),
            params: params.validate()?,
            config: config.validate()?,
        })
    }

    pub fn engine(&self) -> &Spectral {
        &self.engine
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    fn max_speed(s: &State) -> f64 {
        let um = s.u.magnitude();
        let vm = s.v.magnitude();
        um.values()
            .iter()
            .zip(vm.values())
            .fold(0.0_f64, |m, (a, b)| m.max(a + b))
            + COUPLING_WAVE_SPEED
    }

    /// Step size actually taken for a request of `requested`, capped by
    /// `max_dt` and the CFL bound.
    pub fn allowed_dt(&self, s: &State, requested: f64) -> Result<f64> {
        let dx = s.grid().dx();
        let speed = Self::max_speed(s);
        if !speed.is_finite() {
            return Err(Error::BlowUp {
                term: "velocity".into(),
                time: s.time,
            });
        }
        let cfl_dt = self.config.cfl * dx / speed;
        if cfl_dt < self.config.min_dt {
            return Err(Error::StepTooSmall {
                dt: cfl_dt,
                min_dt: self.config.min_dt,
            });
        }
        Ok(requested.min(self.config.max_dt).min(cfl_dt))
    }

    /// Courant number of a step of size `dt` from `s`.
    pub fn courant(&self, s: &State, dt: f64) -> f64 {
        Self::max_speed(s) * dt / s.grid().dx()
    }

    fn moisture_substep(&self, qe: &Field, dt: f64) -> Result<Field> {
        if self.params.is_limit() {
            Ok(limit_projection(qe))
        } else {
            relax_substep(qe, &self.params, dt)
        }
    }

    fn propagate(&self, w: &VectorField, nu: f64, dt: f64) -> VectorField {
        VectorField {
            x: self.engine.heat_propagator(&w.x, nu, dt),
            y: self.engine.heat_propagator(&w.y, nu, dt),
        }
    }

    /// Integrating-factor RK2 (Heun) over `dt` with no moisture sink or
    /// constraint:
    ///
    /// ```text
    /// y1   = E (y + dt N(y))
    /// y'   = E (y + dt/2 N(y)) + dt/2 N(y1)
    /// ```
    ///
    /// where `E` is the exact viscous/diffusive propagator.
    pub fn unconstrained_update(&self, s: &State, dt: f64) -> Result<State> {
        let (e, p) = (&self.engine, &self.params);
        let (mu, eta) = (p.mu, p.eta);
        let n0 = explicit_tendency(e, s, p)?;
        let stage = State {
            u: self.propagate(&s.u.axpy(dt, &n0.du), mu, dt),
            v: self.propagate(&s.v.axpy(dt, &n0.dv), mu, dt),
            te: e.heat_propagator(&s.te.axpy(dt, &n0.dte), eta, dt),
            qe: e.heat_propagator(&s.qe.axpy(dt, &n0.dqe), eta, dt),
            time: s.time + dt,
        };
        let n1 = explicit_tendency(e, &stage, p)?;
        let h = 0.5 * dt;
        let out = State {
            u: self.propagate(&s.u.axpy(h, &n0.du), mu, dt).axpy(h, &n1.du),
            v: self.propagate(&s.v.axpy(h, &n0.dv), mu, dt).axpy(h, &n1.dv),
            te: e.heat_propagator(&s.te.axpy(h, &n0.dte), eta, dt).axpy(h, &n1.dte),
            qe: e.heat_propagator(&s.qe.axpy(h, &n0.dqe), eta, dt).axpy(h, &n1.dqe),
            time: s.time + dt,
        };
        if !out.is_finite() {
            return Err(Error::BlowUp {
                term: "state".into(),
                time: out.time,
            });
        }
        Ok(out)
    }

    /// One step of the configured size (subject to the CFL cap).
    pub fn step(&self, s: &State) -> Result<State> {
        self.step_by(s, self.config.dt)
    }

    /// One Strang-split step with a requested size of `requested`.
    pub fn step_by(&self, s: &State, requested: f64) -> Result<State> {
        let dt = self.allowed_dt(s, requested)?;
        let half = 0.5 * dt;
        let start = State {
            qe: self.moisture_substep(&s.qe, half)?,
            ..s.clone()
        };
        let mut next = self.unconstrained_update(&start, dt)?;
        next.qe = self.moisture_substep(&next.qe, half)?;
        next.u = self.engine.leray_project(&next.u);
        Ok(next)
    }

    /// Advances `s0` to `t_end`, shortening the last step to land on it.
    /// `observer` sees the initial state and every new state with its
    /// diagnostics record.
    pub fn run<F>(&self, s0: State, t_end: f64, mut observer: F) -> std::result::Result<State, RunError>
    where
        F: FnMut(&State, &DiagnosticsRecord),
    {
        if !(t_end >= s0.time) {
            return Err(RunError {
                error: Error::InvalidArgument(format!(
                    "t_end = {t_end} precedes the initial time {}",
                    s0.time
                )),
                last_good: Box::new(s0),
            });
        }
        let mut recorder = Recorder::new(&self.engine, self.params);
        observer(&s0, &recorder.record(&s0, 0.0, 0.0));

        let mut s = s0;
        while s.time < t_end {
            let remaining = t_end - s.time;
            let landing = remaining <= self.config.dt * (1.0 + 1e-9);
            let requested = if landing { remaining } else { self.config.dt };
            let mut next = match self.step_by(&s, requested) {
                Ok(next) => next,
                Err(error) => {
                    return Err(RunError {
                        error,
                        last_good: Box::new(s),
                    })
                }
            };
            let dt = next.time - s.time;
            if landing && dt >= remaining {
                next.time = t_end;
            }
            let record = recorder.record(&next, dt, self.courant(&s, dt));
            observer(&next, &record);
            s = next;
        }
        Ok(s)
    }
}
