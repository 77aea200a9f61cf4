//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! grid.n = 128
//! params.alpha = 0.5
//! sweep.epsilon_list = 0.1, 0.05, 0.025, 0.0125
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lab::init::InitialCondition;
use crate::model::ModelParams;
use crate::spectral::Grid;
use crate::stepper::{Scheme, StepperConfig};

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "MOISTLAB_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub grid_n: usize,
    pub grid_length: f64,
    /// `epsilon` is ignored; runs take theirs from `epsilon_list` or
    /// `run_epsilon`.
    pub params: ModelParams,
    pub epsilon_list: Vec<f64>,
    /// Epsilon for single runs and the dependence probe; defaults to the
    /// first entry of `epsilon_list`. Zero selects the limiting system.
    pub run_epsilon: Option<f64>,
    pub t_end: f64,
    pub stepper: StepperConfig,
    pub init: InitialCondition,
    pub output_dir: PathBuf,
    /// Write one series row every `stride` steps (plus the final state).
    pub stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_n: 128,
            grid_length: 2.0 * std::f64::consts::PI * 8.0,
            params: ModelParams::default(),
            epsilon_list: vec![0.1, 0.05, 0.025, 0.0125],
            run_epsilon: None,
            t_end: 1.0,
            stepper: StepperConfig::default(),
            init: InitialCondition::default(),
            output_dir: PathBuf::from("out"),
            stride: 10,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: `{v}` is not a number")))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: `{v}` is not true/false"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "grid.n" => self.grid_n = parse_int(key, v)?,
            "grid.length" => self.grid_length = parse_f64(key, v)?,
            "params.alpha" => self.params.alpha = parse_f64(key, v)?,
            "params.qbar" => self.params.qbar = parse_f64(key, v)?,
            "params.qhat" => self.params.qhat = parse_f64(key, v)?,
            "params.mu" => self.params.mu = parse_f64(key, v)?,
            "params.eta" => self.params.eta = parse_f64(key, v)?,
            "sweep.epsilon_list" => {
                self.epsilon_list = v
                    .split(',')
                    .map(|s| parse_f64(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "run.epsilon" => self.run_epsilon = Some(parse_f64(key, v)?),
            "run.t_end" => self.t_end = parse_f64(key, v)?,
            "stepper.dt" => self.stepper.dt = parse_f64(key, v)?,
            "stepper.cfl" => self.stepper.cfl = parse_f64(key, v)?,
            "stepper.min_dt" => self.stepper.min_dt = parse_f64(key, v)?,
            "stepper.max_dt" => self.stepper.max_dt = parse_f64(key, v)?,
            "stepper.scheme" => {
                self.stepper.scheme = match v {
                    "strang_rk2" => Scheme::StrangRk2,
                    _ => return Err(Error::Config(format!("{key}: unknown scheme `{v}`"))),
                }
            }
            "init.family" => self.init.family = v.parse()?,
            "init.amp_u" => self.init.amp_u = parse_f64(key, v)?,
            "init.amp_v" => self.init.amp_v = parse_f64(key, v)?,
            "init.amp_te" => self.init.amp_te = parse_f64(key, v)?,
            "init.amp_qe" => self.init.amp_qe = parse_f64(key, v)?,
            "init.width" => self.init.width = parse_f64(key, v)?,
            "init.mode" => self.init.mode = parse_int(key, v)?,
            "init.seed" => self.init.seed = parse_int(key, v)?,
            "init.kmax" => self.init.kmax = parse_int(key, v)?,
            "init.nonpositive_q" => self.init.nonpositive_q = parse_bool(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "output.stride" => self.stride = parse_int(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(self) -> Result<Self> {
        self.grid()?;
        self.params
            .with_epsilon(0.0)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.stepper.validate()?;
        if self.epsilon_list.is_empty() {
            return Err(Error::Config("sweep.epsilon_list is empty".into()));
        }
        if self.epsilon_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Config("sweep.epsilon_list entries must be positive".into()));
        }
        if self.epsilon_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("sweep.epsilon_list must be strictly decreasing".into()));
        }
        if let Some(e) = self.run_epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("run.epsilon must be >= 0, got {e}")));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("run.t_end must be positive, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::Config("output.stride must be at least 1".into()));
        }
        if !(self.init.width > 0.0) {
            return Err(Error::Config("init.width must be positive".into()));
        }
        Ok(self)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_n, self.grid_length).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn single_run_epsilon(&self) -> f64 {
        self.run_epsilon.unwrap_or(self.epsilon_list[0])
    }

    /// `output.dir`, unless overridden by [`OUTPUT_DIR_ENV`].
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

impl fmt::Display for ExperimentConfig {
    /// Writes every key, in a form [`ExperimentConfig::parse`] reads back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eps: Vec<String> = self.epsilon_list.iter().map(|e| format!("{e:?}")).collect();
        writeln!(f, "grid.n = {}", self.grid_n)?;
        writeln!(f, "grid.length = {:?}", self.grid_length)?;
        writeln!(f, "params.alpha = {:?}", self.params.alpha)?;
        writeln!(f, "params.qbar = {:?}", self.params.qbar)?;
        writeln!(f, "params.qhat = {:?}", self.params.qhat)?;
        writeln!(f, "params.mu = {:?}", self.params.mu)?;
        writeln!(f, "params.eta = {:?}", self.params.eta)?;
        writeln!(f, "sweep.epsilon_list = {}", eps.join(", "))?;
        if let Some(e) = self.run_epsilon {
            writeln!(f, "run.epsilon = {e:?}")?;
        }
        writeln!(f, "run.t_end = {:?}", self.t_end)?;
        writeln!(f, "stepper.dt = {:?}", self.stepper.dt)?;
        writeln!(f, "stepper.cfl = {:?}", self.stepper.cfl)?;
        writeln!(f, "stepper.min_dt = {:?}", self.stepper.min_dt)?;
        writeln!(f, "stepper.max_dt = {:?}", self.stepper.max_dt)?;
        writeln!(f, "stepper.scheme = strang_rk2")?;
        writeln!(f, "init.family = {}", self.init.family)?;
        writeln!(f, "init.amp_u = {:?}", self.init.amp_u)?;
        writeln!(f, "init.amp_v = {:?}", self.init.amp_v)?;
        writeln!(f, "init.amp_te = {:?}", self.init.amp_te)?;
        writeln!(f, "init.amp_qe = {:?}", self.init.amp_qe)?;
        writeln!(f, "init.width = {:?}", self.init.width)?;
        writeln!(f, "init.mode = {}", self.init.mode)?;
        writeln!(f, "init.seed = {}", self.init.seed)?;
        writeln!(f, "init.kmax = {}", self.init.kmax)?;
        writeln!(f, "init.nonpositive_q = {}", self.init.nonpositive_q)?;
        writeln!(f, "output.dir = {}", self.output_dir.display())?;
        writeln!(f, "output.stride = {}", self.stride)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::init::Family;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn parses_keys_and_comments() {
        let text = "\
# sweep setup
grid.n = 64          # coarse
params.alpha = 0.25
sweep.epsilon_list = 0.2, 0.1
init.family = random-smooth
init.seed = 7
run.epsilon = 0
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.grid_n, 64);
        assert_eq!(cfg.params.alpha, 0.25);
        assert_eq!(cfg.epsilon_list, vec![0.2, 0.1]);
        assert_eq!(cfg.init.family, Family::RandomSmooth);
        assert_eq!(cfg.init.seed, 7);
        assert_eq!(cfg.single_run_epsilon(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "grid.n = 31",
            "grid.n = 12",
            "params.qbar = 1.0",
            "sweep.epsilon_list = 0.1, 0.1",
            "sweep.epsilon_list = 0.1, 0.2",
            "sweep.epsilon_list = 0.1, -0.05",
            "run.t_end = 0",
            "run.epsilon = -1",
            "stepper.cfl = 2",
            "output.stride = 0",
            "init.family = vortex",
            "bogus.key = 1",
            "grid.n 64",
            "params.mu = fast",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "accepted `{text}`");
        }
    }

    proptest! {
        #[test]
        fn display_parses_back(
            n in (8usize..64).prop_map(|h| 2 * h),
            alpha in -0.4f64..2.0,
            qbar in 0.45f64..0.99,
            eps0 in 0.01f64..1.0,
            ratio in 0.1f64..0.9,
            seed in any::<u64>(),
            stride in 1usize..50,
        ) {
            let mut cfg = ExperimentConfig {
                grid_n: n,
                epsilon_list: vec![eps0, eps0 * ratio],
                stride,
                ..Default::default()
            };
            cfg.params.alpha = alpha;
            cfg.params.qbar = qbar;
            cfg.init.seed = seed;
            let back = ExperimentConfig::parse(&cfg.to_string()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
