//! Sensitivity of trajectories to small changes of the initial data.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::diagnostics::state_distance;
use crate::error::{Error, Result};
use crate::lab::config::ExperimentConfig;
use crate::lab::init::{make_initial_state, Bump};
use crate::lab::report::fmt_num;
use crate::lab::run::{drive, drive_sampled};
use crate::model::State;
use crate::spectral::{Grid, Spectral, VectorField};
use crate::stepper::Stepper;

/// Fixed smooth perturbation direction: an off-centre Gaussian `g` of twice
/// the configured width, entering as `(grad_perp g, (g, -g), g, -g)`. The
/// moisture part is non-positive, so a feasible base state stays feasible.
pub fn perturbation(grid: Grid, width: f64) -> State {
    let l = grid.length();
    let bump = Bump {
        cx: 0.4 * l,
        cy: 0.55 * l,
        width: 2.0 * width,
    };
    let g = bump.field(grid);
    let engine = Spectral::new(grid);
    State {
        u: engine.leray_project(&bump.perp_gradient(grid)),
        v: VectorField {
            x: g.clone(),
            y: g.scaled(-1.0),
        },
        te: g.clone(),
        qe: g.scaled(-1.0),
        time: 0.0,
    }
}

/// `base + delta * dir`.
pub fn perturbed(base: &State, dir: &State, delta: f64) -> State {
    State {
        u: base.u.axpy(delta, &dir.u),
        v: base.v.axpy(delta, &dir.v),
        te: base.te.axpy(delta, &dir.te),
        qe: base.qe.axpy(delta, &dir.qe),
        time: base.time,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub delta0: f64,
    pub initial_distance: f64,
    pub sup_distance: f64,
    /// `sup_t d(t) / d(0)`; `None` when the runs coincide initially.
    pub amplification: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTable {
    pub epsilon: f64,
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    /// `max / min` amplification over rows where it is defined.
    pub fn spread(&self) -> Option<f64> {
        let a: Vec<f64> = self.rows.iter().filter_map(|r| r.amplification).collect();
        if a.is_empty() {
            return None;
        }
        let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi / lo)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta0,initial_distance,sup_distance,amplification\n");
        for r in &self.rows {
            let amp = r.amplification.map(fmt_num).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{amp}",
                fmt_num(r.delta0),
                fmt_num(r.initial_distance),
                fmt_num(r.sup_distance)
            )
            .unwrap();
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("epsilon = {}\n", self.epsilon);
        for r in &self.rows {
            match r.amplification {
                Some(a) => writeln!(out, "delta0 = {:e}: amplification = {a:.6}", r.delta0),
                None => writeln!(out, "delta0 = {:e}: amplification = undefined", r.delta0),
            }
            .unwrap();
        }
        match self.spread() {
            Some(s) => writeln!(out, "spread = {s:.6}").unwrap(),
            None => writeln!(out, "spread = undefined").unwrap(),
        }
        out
    }
}

/// Runs the base trajectory once and one perturbed trajectory per `delta0`,
/// comparing at every sampled step. Uses `run.epsilon` (or the first sweep
/// entry).
pub fn continuous_dependence_probe(cfg: &ExperimentConfig, deltas: &[f64]) -> Result<ProbeTable> {
    if let Some(&d) = deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument(format!("perturbation scale must be >= 0, got {d}")));
    }
    let grid = cfg.grid()?;
    let epsilon = cfg.single_run_epsilon();
    let stepper = Stepper::new(grid, cfg.params.with_epsilon(epsilon), cfg.stepper)?;
    let engine = stepper.engine();
    let s0 = make_initial_state(&cfg.init, grid)?;
    let dir = perturbation(grid, cfg.init.width);
    let (_, base) = drive_sampled(&stepper, s0.clone(), cfg.t_end, cfg.stride).map_err(|(e, _)| e.error)?;

    let rows = deltas
        .par_iter()
        .map(|&delta0| -> Result<ProbeRow> {
            let p0 = perturbed(&s0, &dir, delta0);
            let initial_distance = state_distance(engine, &p0, &s0)?.l2_total;
            let mut sup = 0.0_f64;
            let mut err: Option<Error> = None;
            drive(&stepper, p0, cfg.t_end, cfg.stride, |k, s, _| {
                if let Some(b) = base.get(&k) {
                    match state_distance(engine, s, b) {
                        Ok(d) => sup = sup.max(d.l2_total),
                        Err(e) => {
                            err.get_or_insert(e);
                        }
                    }
                }
            })
            .map_err(|(e, _)| e.error)?;
            if let Some(e) = err {
                return Err(e);
            }
            Ok(ProbeRow {
                delta0,
                initial_distance,
                sup_distance: sup,
                amplification: (initial_distance > 0.0).then(|| sup / initial_distance),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeTable { epsilon, rows })
}
