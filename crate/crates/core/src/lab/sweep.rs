//! Convergence study of the relaxed system towards its limit as `epsilon`
//! shrinks.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::diagnostics::{lm_norm, state_distance};
use crate::error::{Error, Result};
use crate::lab::config::ExperimentConfig;
use crate::lab::init::{make_initial_state, require_nonpositive_moisture};
use crate::lab::report::{fmt_num, write_text, Series};
use crate::lab::run::{drive, Samples};
use crate::model::State;
use crate::spectral::Spectral;
use crate::stepper::Stepper;

/// Least-squares line through `(log x, log y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the log residuals.
    pub residual: f64,
}

/// `None` with fewer than two points or any non-positive value.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<LineFit> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub epsilon: f64,
    /// `sup_t` of the total L2 distance to the limit run.
    pub sup_l2_distance: f64,
    /// `int |grad du|^2 + |grad dv|^2 dt`, trapezoid over the samples.
    pub int_grad_velocity_diff_sq: f64,
    /// `int |q_e^+|^2 / eps dt`, trapezoid over every step.
    pub int_qplus_sq_over_eps: f64,
    pub sup_qplus_sq_over_eps: f64,
    pub status: RowStatus,
}

impl RateRow {
    fn failed(epsilon: f64, why: String) -> Self {
        RateRow {
            epsilon,
            sup_l2_distance: f64::NAN,
            int_grad_velocity_diff_sq: f64::NAN,
            int_qplus_sq_over_eps: f64::NAN,
            sup_qplus_sq_over_eps: f64::NAN,
            status: RowStatus::Failed(why),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

pub const RATES_HEADER: &str =
    "epsilon,sup_l2_distance,int_grad_velocity_diff_sq,int_qplus_sq_over_eps,sup_qplus_sq_over_eps,status";

/// Rows in descending `epsilon`, plus log-log fits over the successful rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// Slope of `log sup distance` against `log eps`.
    pub distance_fit: Option<LineFit>,
    /// Slope of `log int q+^2/eps` against `log eps`.
    pub qplus_fit: Option<LineFit>,
    /// `|(grad T_e, grad q_e)|_4` of the shared initial state, the data the
    /// rate constant depends on. Summary only; not part of `rates.csv`.
    pub initial_grad_l4: f64,
}

impl RateReport {
    pub fn from_rows(rows: Vec<RateRow>, initial_grad_l4: f64) -> Self {
        let ok: Vec<&RateRow> = rows.iter().filter(|r| r.is_ok()).collect();
        let eps: Vec<f64> = ok.iter().map(|r| r.epsilon).collect();
        let dist: Vec<f64> = ok.iter().map(|r| r.sup_l2_distance).collect();
        let qp: Vec<f64> = ok.iter().map(|r| r.int_qplus_sq_over_eps).collect();
        RateReport {
            distance_fit: fit_loglog(&eps, &dist),
            qplus_fit: fit_loglog(&eps, &qp),
            rows,
            initial_grad_l4,
        }
    }

    /// Largest relative increase of the sup distance from one row to the
    /// next (smaller) epsilon; zero when the sequence is non-increasing.
    pub fn worst_distance_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .filter(|w| w[0].is_ok() && w[1].is_ok())
            .map(|w| (w[1].sup_l2_distance / w[0].sup_l2_distance - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `max / min` of `sup_t |q+|^2 / eps` over the successful rows.
    pub fn qplus_sup_spread(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.is_ok())
            .map(|r| r.sup_qplus_sq_over_eps)
            .collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        (!v.is_empty() && lo > 0.0).then(|| hi / lo)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(RATES_HEADER);
        out.push('\n');
        for r in &self.rows {
            let status = match &r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Failed(why) => format!("failed: {}", why.replace([',', '\n'], ";")),
            };
            let nums = [
                r.epsilon,
                r.sup_l2_distance,
                r.int_grad_velocity_diff_sq,
                r.int_qplus_sq_over_eps,
                r.sup_qplus_sq_over_eps,
            ];
            for v in nums {
                out.push_str(&fmt_num(v));
                out.push(',');
            }
            out.push_str(&status);
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let fit = |name: &str, f: &Option<LineFit>, out: &mut String| match f {
            Some(f) => writeln!(
                out,
                "{name} slope = {:.6} (intercept {:.6}, rms residual {:.3e})",
                f.slope, f.intercept, f.residual
            )
            .unwrap(),
            None => writeln!(out, "{name} slope = undefined").unwrap(),
        };
        fit("sup_l2_distance", &self.distance_fit, &mut out);
        fit("int_qplus_sq_over_eps", &self.qplus_fit, &mut out);
        match self.qplus_sup_spread() {
            Some(s) => writeln!(out, "sup_qplus_sq_over_eps spread = {s:.6}").unwrap(),
            None => writeln!(out, "sup_qplus_sq_over_eps spread = undefined").unwrap(),
        }
        writeln!(out, "worst sup_l2_distance increase = {:.6}", self.worst_distance_increase()).unwrap();
        writeln!(out, "initial |grad T_e, grad q_e|_4 = {:.6e}", self.initial_grad_l4).unwrap();
        let failed = self.rows.iter().filter(|r| !r.is_ok()).count();
        writeln!(out, "rows = {}, failed = {failed}", self.rows.len()).unwrap();
        out
    }
}

/// Sweep output: the report plus every run's series.
#[derive(Debug)]
pub struct Sweep {
    pub report: RateReport,
    pub limit_series: Series,
    /// Largest `max q_e` over every step of the limit run.
    pub limit_max_qe: f64,
    pub runs: Vec<(f64, Series)>,
}

impl Sweep {
    /// `rates.csv`, `rates.txt`, `limit/series.csv`, `eps_<eps>/series.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("rates.csv"), &self.report.to_csv())?;
        write_text(&dir.join("rates.txt"), &self.report.summary())?;
        self.limit_series.write(&dir.join("limit").join("series.csv"))?;
        for (eps, series) in &self.runs {
            series.write(&dir.join(format!("eps_{eps}")).join("series.csv"))?;
        }
        Ok(())
    }
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

fn relaxed_run(cfg: &ExperimentConfig, s0: &State, eps: f64, limit: &Samples) -> (RateRow, Series) {
    let grid = *s0.grid();
    let stepper = match Stepper::new(grid, cfg.params.with_epsilon(eps), cfg.stepper) {
        Ok(s) => s,
        Err(e) => return (RateRow::failed(eps, e.to_string()), Series::default()),
    };
    let engine = stepper.engine();
    let mut sup_dist = 0.0_f64;
    let mut grad_pts = Vec::new();
    let mut q_pts = Vec::new();
    let mut mismatch: Option<Error> = None;
    let result = drive(&stepper, s0.clone(), cfg.t_end, cfg.stride, |k, s, r| {
        let q = r.qplus_l2_sq_over_eps.unwrap_or(0.0);
        q_pts.push((r.time, q));
        if let Some(reference) = limit.get(&k) {
            match state_distance(engine, s, reference) {
                Ok(d) => {
                    sup_dist = sup_dist.max(d.l2_total);
                    grad_pts.push((r.time, d.h1_uv * d.h1_uv));
                }
                Err(e) => {
                    mismatch.get_or_insert(e);
                }
            }
        }
    });
    match result {
        Err((e, series)) => (RateRow::failed(eps, e.error.to_string()), series),
        Ok(out) => {
            if let Some(e) = mismatch {
                return (RateRow::failed(eps, e.to_string()), out.series);
            }
            if grad_pts.len() != limit.len() {
                let why = format!("matched {} of {} limit samples", grad_pts.len(), limit.len());
                return (RateRow::failed(eps, why), out.series);
            }
            let row = RateRow {
                epsilon: eps,
                sup_l2_distance: sup_dist,
                int_grad_velocity_diff_sq: trapezoid(&grad_pts),
                int_qplus_sq_over_eps: trapezoid(&q_pts),
                sup_qplus_sq_over_eps: q_pts.iter().map(|p| p.1).fold(0.0, f64::max),
                status: RowStatus::Ok,
            };
            (row, out.series)
        }
    }
}

/// Runs the limit once, then every `epsilon_list` entry on up to `jobs`
/// threads, all from the same initial state with the same fixed `dt` so the
/// sampled step indices line up. A failure of the limit run is an error; a
/// failed relaxed run only marks its row.
pub fn epsilon_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Sweep> {
    let grid = cfg.grid()?;
    let s0 = make_initial_state(&cfg.init, grid)?;
    require_nonpositive_moisture(&s0)?;
    let engine = Spectral::new(grid);
    let gt = engine.grad(&s0.te).magnitude();
    let gq = engine.grad(&s0.qe).magnitude();
    let initial_grad_l4 = lm_norm(&gt.zip_map(&gq, f64::hypot)?, 4.0);
    let limit_stepper = Stepper::new(grid, cfg.params.with_epsilon(0.0), cfg.stepper)?;
    let mut limit_max_qe = f64::NEG_INFINITY;
    let mut samples = Samples::new();
    let limit = drive(&limit_stepper, s0.clone(), cfg.t_end, cfg.stride, |k, s, r| {
        limit_max_qe = limit_max_qe.max(r.max_qe);
        if k.is_multiple_of(cfg.stride) {
            samples.insert(k, s.clone());
        }
    })
    .map_err(|(e, _)| e.error)?;
    samples.insert(limit.steps, limit.final_state.clone());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<(RateRow, Series)> = pool.install(|| {
        cfg.epsilon_list
            .par_iter()
            .map(|&eps| relaxed_run(cfg, &s0, eps, &samples))
            .collect()
    });
    let (rows, series): (Vec<RateRow>, Vec<Series>) = results.into_iter().unzip();
    Ok(Sweep {
        report: RateReport::from_rows(rows, initial_grad_l4),
        limit_series: limit.series,
        limit_max_qe,
        runs: cfg.epsilon_list.iter().copied().zip(series).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::parse(
            "grid.n = 16\ngrid.length = 12.566370614359172\nrun.t_end = 0.02\n\
             stepper.dt = 0.005\noutput.stride = 2\nsweep.epsilon_list = 0.1, 0.05\n",
        )
        .unwrap();
        cfg.init.width = 2.0;
        cfg
    }

    #[test]
    fn fit_recovers_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(fit_loglog(&x[..1], &y[..1]).is_none());
        assert!(fit_loglog(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn single_epsilon_has_undefined_slope() {
        let mut cfg = small();
        cfg.epsilon_list = vec![0.1];
        let sweep = epsilon_sweep(&cfg, 1).unwrap();
        assert_eq!(sweep.report.rows.len(), 1);
        assert!(sweep.report.distance_fit.is_none());
        assert!(sweep.report.summary().contains("sup_l2_distance slope = undefined"));
    }

    #[test]
    fn rows_follow_epsilon_order_and_are_thread_independent() {
        let cfg = small();
        let a = epsilon_sweep(&cfg, 1).unwrap();
        let b = epsilon_sweep(&cfg, 2).unwrap();
        assert_eq!(a.report.to_csv(), b.report.to_csv());
        let eps: Vec<f64> = a.report.rows.iter().map(|r| r.epsilon).collect();
        assert_eq!(eps, cfg.epsilon_list);
        assert!(a.report.rows.iter().all(RateRow::is_ok));
        assert!(a.limit_max_qe <= 0.0);
        assert_eq!(a.report.to_csv().lines().count(), 3);
    }

    #[test]
    fn positive_initial_moisture_is_refused() {
        let mut cfg = small();
        cfg.init.family = crate::lab::init::Family::RandomSmooth;
        cfg.init.nonpositive_q = false;
        cfg.init.amp_qe = 1.0;
        assert!(matches!(epsilon_sweep(&cfg, 1), Err(Error::PositiveMoisture(_))));
    }

    #[test]
    fn failed_rows_are_reported() {
        let rows = vec![
            RateRow {
                epsilon: 0.1,
                sup_l2_distance: 1.0,
                int_grad_velocity_diff_sq: 1.0,
                int_qplus_sq_over_eps: 1.0,
                sup_qplus_sq_over_eps: 2.0,
                status: RowStatus::Ok,
            },
            RateRow::failed(0.05, "blow-up, dq_e".into()),
        ];
        let r = RateReport::from_rows(rows, 1.0);
        assert!(r.distance_fit.is_none());
        assert!(r.to_csv().contains("failed: blow-up; dq_e"));
        assert_eq!(r.qplus_sup_spread(), Some(1.0));
    }
}
