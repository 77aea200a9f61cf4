//! Scalar observables: norms, the weighted energy and its dissipation, the
//! discrete energy-budget defect, and state-difference metrics.

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::spectral::{Field, Spectral, VectorField};

/// Lower bound on the energy used to normalise the budget defect.
pub const ENERGY_FLOOR: f64 = 1e-30;

/// Tolerance on the time stamps of states being compared.
pub const TIME_MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub l4: f64,
    pub h1_semi: f64,
    pub linf: f64,
}

pub fn norms(engine: &Spectral, f: &Field) -> Norms {
    Norms {
        l2: lm_norm(f, 2.0),
        l4: lm_norm(f, 4.0),
        h1_semi: engine.grad_sq_spectrum(&engine.forward(f)).sqrt(),
        linf: f.max_abs(),
    }
}

/// `(sum |f|^m dx^2)^(1/m)` for finite `m >= 1`.
pub fn lm_norm(f: &Field, m: f64) -> f64 {
    let dx = f.grid().dx();
    let sum: f64 = if m == 2.0 {
        f.values().iter().map(|v| v * v).sum()
    } else {
        f.values().iter().map(|v| v.abs().powf(m)).sum()
    };
    (sum * dx * dx).powf(1.0 / m)
}

/// L^m norm of a vector field with pointwise Euclidean magnitude.
pub fn lm_norm_vector(w: &VectorField, m: f64) -> f64 {
    lm_norm(&w.magnitude(), m)
}

fn l2_sq(f: &Field) -> f64 {
    f.dot(f)
}

fn weights(p: &ModelParams) -> (f64, f64) {
    let wt = 1.0 / ((1.0 + p.alpha) * (1.0 - p.qbar));
    let wq = 1.0 / ((1.0 + p.alpha) * (p.qbar + p.alpha));
    (wt, wq)
}

/// `E = 1/2 [|u|^2 + |v|^2 + |T_e|^2/((1+a)(1-Qbar)) + |q_e|^2/((1+a)(Qbar+a))]`.
pub fn energy(s: &State, p: &ModelParams) -> f64 {
    let (wt, wq) = weights(p);
    0.5 * (l2_sq(&s.u.x) + l2_sq(&s.u.y) + l2_sq(&s.v.x) + l2_sq(&s.v.y)
        + wt * l2_sq(&s.te)
        + wq * l2_sq(&s.qe))
}

/// `||q_e^+||_2^2`.
pub fn qplus_l2_sq(qe: &Field) -> f64 {
    let dx = qe.grid().dx();
    qe.values()
        .iter()
        .map(|&q| {
            let p = q.max(0.0);
            p * p
        })
        .sum::<f64>()
        * dx
        * dx
}

/// Squared gradient norms of the six planes, in checkpoint order.
fn grad_sq_planes(engine: &Spectral, s: &State) -> [f64; 6] {
    s.planes().map(|f| engine.grad_sq_spectrum(&engine.forward(f)))
}

fn dissipation_from(g: &[f64; 6], s: &State, p: &ModelParams) -> f64 {
    let mut d = p.mu * (g[0] + g[1] + g[2] + g[3]);
    if p.epsilon > 0.0 {
        d += qplus_l2_sq(&s.qe) / (p.epsilon * (p.qbar + p.alpha));
    }
    if p.eta > 0.0 {
        let (wt, wq) = weights(p);
        d += p.eta * (wt * g[4] + wq * g[5]);
    }
    d
}

/// Energy dissipation rate `D = mu(|grad u|^2 + |grad v|^2) + |q_e^+|^2/(eps(Qbar+a))`,
/// plus the scalar-diffusion terms when `eta > 0`. The moisture term is zero
/// for the limiting system.
pub fn dissipation(engine: &Spectral, s: &State, p: &ModelParams) -> f64 {
    dissipation_from(&grad_sq_planes(engine, s), s, p)
}

fn budget_defect(e_before: f64, d_before: f64, e_after: f64, d_after: f64, dt: f64) -> f64 {
    ((e_after - e_before) / dt + 0.5 * (d_before + d_after)).abs() / e_before.max(ENERGY_FLOOR)
}

/// Relative defect of the energy identity `dE/dt + D = 0` over one step:
/// `|(E1 - E0)/dt + (D0 + D1)/2| / max(E0, floor)`.
pub fn budget_residual(
    engine: &Spectral,
    before: &State,
    after: &State,
    p: &ModelParams,
) -> Result<f64> {
    before.grid().check_same(after.grid())?;
    let dt = after.time - before.time;
    if !(dt > 0.0) {
        return Err(Error::NonConsecutive(format!(
            "after.time - before.time = {dt}"
        )));
    }
    Ok(budget_defect(
        energy(before, p),
        dissipation(engine, before, p),
        energy(after, p),
        dissipation(engine, after, p),
        dt,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDistance {
    pub l2_total: f64,
    /// `u, v, T_e, q_e`.
    pub l2_by_field: [f64; 4],
    /// H1 seminorm of the velocity differences, `u` and `v` combined.
    pub h1_uv: f64,
}

pub fn state_distance(engine: &Spectral, a: &State, b: &State) -> Result<StateDistance> {
    a.grid().check_same(b.grid())?;
    engine.grid().check_same(a.grid())?;
    if (a.time - b.time).abs() > TIME_MATCH_TOL {
        return Err(Error::TimeMismatch { a: a.time, b: b.time });
    }
    let diffs: Vec<Field> = a
        .planes()
        .iter()
        .zip(b.planes())
        .map(|(x, y)| x.sub(y))
        .collect();
    let sq: Vec<f64> = diffs.iter().map(l2_sq).collect();
    let by_field = [sq[0] + sq[1], sq[2] + sq[3], sq[4], sq[5]].map(f64::sqrt);
    let h1_sq: f64 = diffs[..4]
        .iter()
        .map(|d| engine.grad_sq_spectrum(&engine.forward(d)))
        .sum();
    Ok(StateDistance {
        l2_total: sq.iter().sum::<f64>().sqrt(),
        l2_by_field: by_field,
        h1_uv: h1_sq.sqrt(),
    })
}

/// Max over the grid of the Frobenius norm of `grad u`.
pub fn grad_velocity_linf(engine: &Spectral, u: &VectorField) -> f64 {
    let gx = engine.grad(&u.x);
    let gy = engine.grad(&u.y);
    let n = u.grid().len();
    (0..n)
        .map(|k| {
            let a = gx.x.values()[k];
            let b = gx.y.values()[k];
            let c = gy.x.values()[k];
            let d = gy.y.values()[k];
            (a * a + b * b + c * c + d * d).sqrt()
        })
        .fold(0.0, f64::max)
}

/// One row of the per-step observables.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub dt_used: f64,
    pub cfl_used: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub budget_residual: f64,
    pub l2_u: f64,
    pub l2_v: f64,
    pub l2_te: f64,
    pub l2_qe: f64,
    pub l4_u: f64,
    pub l4_v: f64,
    pub h1_u: f64,
    pub h1_v: f64,
    pub h1_te: f64,
    pub h1_qe: f64,
    /// `||q_e^+||^2 / eps`; absent for the limiting system.
    pub qplus_l2_sq_over_eps: Option<f64>,
    pub max_qe: f64,
    pub grad_u_linf: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.dt_used,
            self.cfl_used,
            self.energy,
            self.dissipation,
            self.budget_residual,
            self.l2_u,
            self.l2_v,
            self.l2_te,
            self.l2_qe,
            self.l4_u,
            self.l4_v,
            self.h1_u,
            self.h1_v,
            self.h1_te,
            self.h1_qe,
            self.max_qe,
            self.grad_u_linf,
        ]
        .iter()
        .chain(self.qplus_l2_sq_over_eps.iter())
        .all(|v| v.is_finite())
    }
}

/// Builds records along a trajectory, carrying the previous energy and
/// dissipation for the budget defect.
pub struct Recorder<'a> {
    engine: &'a Spectral,
    params: ModelParams,
    prev: Option<(f64, f64, f64)>,
}

impl<'a> Recorder<'a> {
    pub fn new(engine: &'a Spectral, params: ModelParams) -> Self {
        Recorder {
            engine,
            params,
            prev: None,
        }
    }

    /// Record for `s`. The budget defect is taken against the previously
    /// recorded state, or zero for the first call.
    pub fn record(&mut self, s: &State, dt_used: f64, cfl_used: f64) -> DiagnosticsRecord {
        let p = &self.params;
        let g = grad_sq_planes(self.engine, s);
        let e = energy(s, p);
        let d = dissipation_from(&g, s, p);
        let budget = match self.prev {
            Some((t0, e0, d0)) if s.time > t0 => budget_defect(e0, d0, e, d, s.time - t0),
            _ => 0.0,
        };
        self.prev = Some((s.time, e, d));
        let qplus = (p.epsilon > 0.0).then(|| qplus_l2_sq(&s.qe) / p.epsilon);
        DiagnosticsRecord {
            time: s.time,
            dt_used,
            cfl_used,
            energy: e,
            dissipation: d,
            budget_residual: budget,
            l2_u: (l2_sq(&s.u.x) + l2_sq(&s.u.y)).sqrt(),
            l2_v: (l2_sq(&s.v.x) + l2_sq(&s.v.y)).sqrt(),
            l2_te: l2_sq(&s.te).sqrt(),
            l2_qe: l2_sq(&s.qe).sqrt(),
            l4_u: lm_norm_vector(&s.u, 4.0),
            l4_v: lm_norm_vector(&s.v, 4.0),
            h1_u: (g[0] + g[1]).sqrt(),
            h1_v: (g[2] + g[3]).sqrt(),
            h1_te: g[4].sqrt(),
            h1_qe: g[5].sqrt(),
            qplus_l2_sq_over_eps: qplus,
            max_qe: s.qe.max(),
            grad_u_linf: grad_velocity_linf(self.engine, &s.u),
        }
    }
}
