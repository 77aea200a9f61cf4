use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::{Field, Grid, Spectral, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    TaylorGreen,
    MoistBlob,
    RandomSmooth,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor-green" => Ok(Family::TaylorGreen),
            "moist-blob" => Ok(Family::MoistBlob),
            "random-smooth" => Ok(Family::RandomSmooth),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::TaylorGreen => "taylor-green",
            Family::MoistBlob => "moist-blob",
            Family::RandomSmooth => "random-smooth",
        })
    }
}

/// Named analytic family plus its amplitudes.
///
/// For `moist-blob` the amplitudes scale, in order, the Taylor-Green
/// barotropic flow, the rotational baroclinic flow around the bump, the
/// temperature bump and the (negative) moisture bump.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    pub family: Family,
    pub amp_u: f64,
    pub amp_v: f64,
    pub amp_te: f64,
    pub amp_qe: f64,
    /// Gaussian e-folding radius of the bump.
    pub width: f64,
    /// Taylor-Green wavenumber in units of `2*pi/L`.
    pub mode: u32,
    pub seed: u64,
    /// Highest mode index of the random family.
    pub kmax: u32,
    /// Reject (or, for the random family, shift) initial moisture above zero.
    pub nonpositive_q: bool,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition {
            family: Family::MoistBlob,
            amp_u: 0.5,
            amp_v: 0.5,
            amp_te: 4.0,
            amp_qe: 0.5,
            width: 1.5,
            mode: 1,
            seed: 0,
            kmax: 4,
            nonpositive_q: true,
        }
    }
}

impl InitialCondition {
    pub fn taylor_green(amplitude: f64) -> Self {
        InitialCondition {
            family: Family::TaylorGreen,
            amp_u: amplitude,
            nonpositive_q: false,
            ..Default::default()
        }
    }
}

/// `A (cos kx sin ky, -sin kx cos ky)` with `k = 2 pi mode / L`.
pub fn taylor_green_velocity(grid: Grid, amplitude: f64, mode: u32) -> VectorField {
    let k = 2.0 * PI * mode as f64 / grid.length();
    VectorField::from_fn(
        grid,
        |x, y| amplitude * (k * x).cos() * (k * y).sin(),
        |x, y| -amplitude * (k * x).sin() * (k * y).cos(),
    )
}

/// Gaussian bump `exp(-|r - c|^2 / w^2)` and its analytic gradient.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
}

impl Bump {
    pub fn centered(grid: Grid, width: f64) -> Self {
        let c = 0.5 * grid.length();
        Bump { cx: c, cy: c, width }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (-(dx * dx + dy * dy) / (self.width * self.width)).exp()
    }

    pub fn field(&self, grid: Grid) -> Field {
        Field::from_fn(grid, |x, y| self.value(x, y))
    }

    /// `grad_perp = (-d_y, d_x)` of the bump.
    pub fn perp_gradient(&self, grid: Grid) -> VectorField {
        let s = 2.0 / (self.width * self.width);
        VectorField::from_fn(
            grid,
            |x, y| s * (y - self.cy) * self.value(x, y),
            |x, y| -s * (x - self.cx) * self.value(x, y),
        )
    }
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng, kmax: u32, amplitude: f64) -> Field {
    let k0 = 2.0 * PI / grid.length();
    let km = kmax as i64;
    let mut modes = Vec::new();
    for mx in 0..=km {
        for my in -km..=km {
            if mx == 0 && my <= 0 {
                continue;
            }
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            modes.push((mx as f64 * k0, my as f64 * k0, a, b));
        }
    }
    let scale = amplitude / (modes.len() as f64).sqrt();
    Field::from_fn(grid, |x, y| {
        modes
            .iter()
            .map(|&(kx, ky, a, b)| {
                let ph = kx * x + ky * y;
                a * ph.cos() + b * ph.sin()
            })
            .sum::<f64>()
            * scale
    })
}

/// Builds the initial state for `spec` on `grid`. The barotropic velocity is
/// always Leray-projected after construction.
pub fn make_initial_state(spec: &InitialCondition, grid: Grid) -> Result<State> {
    let engine = Spectral::new(grid);
    let mut s = State::zeros(grid);
    match spec.family {
        Family::TaylorGreen => {
            s.u = taylor_green_velocity(grid, spec.amp_u, spec.mode);
        }
        Family::MoistBlob => {
            let bump = Bump::centered(grid, spec.width);
            let g = bump.field(grid);
            s.u = taylor_green_velocity(grid, spec.amp_u, spec.mode);
            s.v = bump.perp_gradient(grid).scaled(spec.amp_v);
            s.te = g.scaled(spec.amp_te);
            s.qe = g.scaled(-spec.amp_qe.abs());
        }
        Family::RandomSmooth => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let kmax = spec.kmax.max(1);
            s.u = VectorField {
                x: random_field(grid, &mut rng, kmax, spec.amp_u),
                y: random_field(grid, &mut rng, kmax, spec.amp_u),
            };
            s.v = VectorField {
                x: random_field(grid, &mut rng, kmax, spec.amp_v),
                y: random_field(grid, &mut rng, kmax, spec.amp_v),
            };
            s.te = random_field(grid, &mut rng, kmax, spec.amp_te);
            s.qe = random_field(grid, &mut rng, kmax, spec.amp_qe);
            if spec.nonpositive_q {
                let top = s.qe.max();
                s.qe = s.qe.map(|q| q - top);
            }
        }
    }
    s.u = engine.leray_project(&s.u);
    if spec.nonpositive_q {
        require_nonpositive_moisture(&s)?;
    }
    Ok(s)
}

/// Errors unless `q_e <= 0` everywhere.
pub fn require_nonpositive_moisture(s: &State) -> Result<()> {
    let top = s.qe.max();
    if top > 0.0 {
        Err(Error::PositiveMoisture(top))
    } else {
        Ok(())
    }
}
