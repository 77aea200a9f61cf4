use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::lab::checkpoint::{checkpoint_name, checkpoint_write};
use crate::lab::config::ExperimentConfig;
use crate::lab::init::make_initial_state;
use crate::lab::report::Series;
use crate::model::State;
use crate::stepper::{RunError, Stepper};

/// Everything a single simulation produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub final_state: State,
    pub series: Series,
    pub steps: usize,
}

/// Drives `stepper` from `s0` to `t_end`, keeping one series row every
/// `stride` steps plus the last one. `on_step` sees every step with its index.
pub fn drive<F>(
    stepper: &Stepper,
    s0: State,
    t_end: f64,
    stride: usize,
    mut on_step: F,
) -> std::result::Result<RunOutcome, (RunError, Series)>
where
    F: FnMut(usize, &State, &DiagnosticsRecord),
{
    let mut series = Series::default();
    let mut step = 0usize;
    let mut pending: Option<DiagnosticsRecord> = None;
    let result = stepper.run(s0, t_end, |s, r| {
        on_step(step, s, r);
        if step.is_multiple_of(stride) {
            series.push(r);
            pending = None;
        } else {
            pending = Some(r.clone());
        }
        step += 1;
    });
    if let Some(r) = pending {
        series.push(&r);
    }
    match result {
        Ok(final_state) => Ok(RunOutcome {
            final_state,
            series,
            steps: step.saturating_sub(1),
        }),
        Err(e) => Err((e, series)),
    }
}

/// States sampled at every `stride`-th step and at the final step, keyed by
/// step index.
pub type Samples = BTreeMap<usize, State>;

/// Runs and keeps the sampled states alongside the outcome.
pub fn drive_sampled(
    stepper: &Stepper,
    s0: State,
    t_end: f64,
    stride: usize,
) -> std::result::Result<(RunOutcome, Samples), (RunError, Series)> {
    let mut samples = Samples::new();
    let outcome = drive(stepper, s0, t_end, stride, |k, s, _| {
        if k.is_multiple_of(stride) {
            samples.insert(k, s.clone());
        }
    })?;
    samples.insert(outcome.steps, outcome.final_state.clone());
    Ok((outcome, samples))
}

/// Files written by [`simulate`].
#[derive(Debug)]
pub struct RunFiles {
    pub series: PathBuf,
    pub checkpoint: PathBuf,
}

/// Single simulation from the configured initial condition. Writes
/// `series.csv` and a final checkpoint into `out_dir`; on a blow-up the last
/// good state is checkpointed instead and the error is returned.
pub fn simulate(cfg: &ExperimentConfig, epsilon: f64, out_dir: &Path) -> Result<(RunOutcome, RunFiles)> {
    let grid = cfg.grid()?;
    let params = cfg.params.with_epsilon(epsilon);
    let stepper = Stepper::new(grid, params, cfg.stepper)?;
    let s0 = make_initial_state(&cfg.init, grid)?;
    let series_path = out_dir.join("series.csv");
    match drive(&stepper, s0, cfg.t_end, cfg.stride, |_, _, _| {}) {
        Ok(outcome) => {
            outcome.series.write(&series_path)?;
            let checkpoint = out_dir.join(checkpoint_name(outcome.final_state.time));
            checkpoint_write(&checkpoint, &outcome.final_state, &params)?;
            Ok((
                outcome,
                RunFiles {
                    series: series_path,
                    checkpoint,
                },
            ))
        }
        Err((err, series)) => {
            series.write(&series_path)?;
            let checkpoint = out_dir.join(checkpoint_name(err.last_good.time));
            checkpoint_write(&checkpoint, &err.last_good, &params)?;
            Err(err.error)
        }
    }
}
