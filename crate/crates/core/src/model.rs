//! Model state, parameters, the equivalent-variable change of coordinates,
//! the precipitation closure and the vertical-mode reconstruction.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Spectral, VectorField};

/// Physical and numerical parameters. `epsilon == 0` selects the limiting
/// (constrained) system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub qbar: f64,
    pub epsilon: f64,
    /// Moisture offset; only enters the conversions to and from `(theta, q)`.
    pub qhat: f64,
    pub mu: f64,
    pub eta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.5,
            qbar: 0.9,
            epsilon: 0.05,
            qhat: 1.0,
            mu: 1.0,
            eta: 0.0,
        }
    }
}

impl ModelParams {
    /// Returns `self` unchanged when every constraint holds.
    pub fn validate(self) -> Result<Self> {
        let fields = [
            ("alpha", self.alpha),
            ("qbar", self.qbar),
            ("epsilon", self.epsilon),
            ("qhat", self.qhat),
            ("mu", self.mu),
            ("eta", self.eta),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(violation(format!("{name} is not finite")));
        }
        if !(self.qbar > 0.0 && self.qbar < 1.0) {
            return Err(violation("Q̄ ∉ (0,1)"));
        }
        if self.alpha + self.qbar <= 0.0 {
            return Err(violation("α+Q̄≤0"));
        }
        if self.epsilon < 0.0 {
            return Err(violation("ε<0"));
        }
        if self.mu <= 0.0 {
            return Err(violation("μ≤0"));
        }
        if self.eta < 0.0 {
            return Err(violation("η<0"));
        }
        Ok(self)
    }

    pub fn is_limit(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        ModelParams { epsilon, ..self }
    }

    fn require_qhat(&self) -> Result<()> {
        if self.qhat > 0.0 {
            Ok(())
        } else {
            Err(violation("q̂≤0"))
        }
    }
}

fn violation(msg: impl Into<String>) -> Error {
    Error::ConstraintViolation(msg.into())
}

/// Solution tuple `(u, v, T_e, q_e)` at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    /// Barotropic velocity, divergence-free.
    pub u: VectorField,
    /// First baroclinic velocity.
    pub v: VectorField,
    pub te: Field,
    pub qe: Field,
    pub time: f64,
}

impl State {
    pub fn zeros(grid: Grid) -> Self {
        State {
            u: VectorField::zeros(grid),
            v: VectorField::zeros(grid),
            te: Field::zeros(grid),
            qe: Field::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.te.grid()
    }

    pub fn check_grids(&self) -> Result<()> {
        let g = self.grid();
        g.check_same(self.u.grid())?;
        g.check_same(self.v.grid())?;
        g.check_same(self.qe.grid())
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.u.is_finite()
            && self.v.is_finite()
            && self.te.is_finite()
            && self.qe.is_finite()
    }

    /// Fields in checkpoint order: `u_x, u_y, v_x, v_y, T_e, q_e`.
    pub fn planes(&self) -> [&Field; 6] {
        [&self.u.x, &self.u.y, &self.v.x, &self.v.y, &self.te, &self.qe]
    }

    /// `‖div u‖₂ / max(1, ‖u‖₂)`.
    pub fn relative_divergence(&self, engine: &Spectral) -> f64 {
        let d = engine.div(&self.u);
        let norm = self.u.dot(&self.u).sqrt();
        d.dot(&d).sqrt() / norm.max(1.0)
    }
}

/// First-baroclinic potential temperature and moisture.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalVars {
    pub theta: Field,
    pub q: Field,
}

/// `T_e = q + theta`, `q_e = q - alpha*theta - qhat`.
pub fn to_equivalent(phys: &PhysicalVars, p: &ModelParams) -> Result<(Field, Field)> {
    p.require_qhat()?;
    let te = phys.q.zip_map(&phys.theta, |q, th| q + th)?;
    let qe = phys
        .q
        .zip_map(&phys.theta, |q, th| q - p.alpha * th - p.qhat)?;
    Ok((te, qe))
}

/// Inverse of [`to_equivalent`].
pub fn from_equivalent(te: &Field, qe: &Field, p: &ModelParams) -> Result<PhysicalVars> {
    p.require_qhat()?;
    let d = 1.0 + p.alpha;
    let theta = te.zip_map(qe, |t, q| (t - q - p.qhat) / d)?;
    let q = te.zip_map(qe, |t, q| (p.alpha * t + q + p.qhat) / d)?;
    Ok(PhysicalVars { theta, q })
}

/// Relaxation sink as it enters the `q_e` tendency: `((1+alpha)/eps) * q_e^+`.
pub fn precipitation(qe: &Field, p: &ModelParams) -> Result<Field> {
    let rate = precipitation_rate(qe, p)?;
    Ok(rate.scaled(1.0 + p.alpha))
}

/// Raw precipitation rate `P = q_e^+ / eps`.
pub fn precipitation_rate(qe: &Field, p: &ModelParams) -> Result<Field> {
    if p.epsilon <= 0.0 {
        return Err(Error::EpsilonZero);
    }
    let inv = 1.0 / p.epsilon;
    Ok(qe.map(|q| q.max(0.0) * inv))
}

/// Three-dimensional fields at one height, rebuilt from the two vertical modes.
#[derive(Clone, Debug)]
pub struct Column3d {
    pub velocity: VectorField,
    pub w: Field,
    pub theta: Field,
}

/// Evaluates the barotropic + first-baroclinic ansatz at height `z` in a
/// layer of depth `h`. The vertical velocity amplitude follows from
/// incompressibility: `w = -(h/pi) div v`.
pub fn reconstruct_3d(
    engine: &Spectral,
    state: &State,
    p: &ModelParams,
    z: f64,
    h: f64,
) -> Result<Column3d> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("layer depth must be positive, got {h}")));
    }
    if !(0.0..=h).contains(&z) {
        return Err(Error::InvalidArgument(format!("z = {z} outside [0, {h}]")));
    }
    let c = SQRT_2 * (PI * z / h).cos();
    let s = SQRT_2 * (PI * z / h).sin();
    let velocity = state.u.axpy(c, &state.v);
    let w = engine.div(&state.v).scaled(-h / PI * s);
    let theta = from_equivalent(&state.te, &state.qe, p)?.theta.scaled(s);
    Ok(Column3d { velocity, w, theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, qbar: f64) -> ModelParams {
        ModelParams {
            alpha,
            qbar,
            ..ModelParams::default()
        }
    }

    fn violation_msg(p: ModelParams) -> String {
        match p.validate() {
            Err(Error::ConstraintViolation(m)) => m,
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn validate_examples() {
        assert!(params(0.5, 0.9).validate().is_ok());
        assert_eq!(violation_msg(params(-0.5, 0.3)), "α+Q̄≤0");
        assert_eq!(violation_msg(params(0.0, 1.0)), "Q̄ ∉ (0,1)");
    }

    #[test]
    fn validate_boundaries() {
        assert!(params(0.0, 0.0).validate().is_err());
        assert!(params(-0.3, 0.3).validate().is_err());
        assert!(params(-0.3, 0.30001).validate().is_ok());
        assert!(params(-0.99, 0.999).validate().is_ok());
        let base = ModelParams::default();
        assert!(ModelParams { epsilon: 0.0, ..base }.validate().is_ok());
        assert!(ModelParams { epsilon: -1e-300, ..base }.validate().is_err());
        assert!(ModelParams { mu: 0.0, ..base }.validate().is_err());
        assert!(ModelParams { eta: 0.0, ..base }.validate().is_ok());
        assert!(ModelParams { eta: -1e-9, ..base }.validate().is_err());
        assert!(ModelParams { alpha: f64::NAN, ..base }.validate().is_err());
    }

    fn grid() -> Grid {
        Grid::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn conversion_examples() {
        let g = grid();
        let p = params(0.5, 0.9);
        let phys = PhysicalVars {
            theta: Field::zeros(g),
            q: Field::zeros(g),
        };
        let (te, qe) = to_equivalent(&phys, &p).unwrap();
        assert_eq!(te.max_abs(), 0.0);
        assert!(qe.values().iter().all(|&v| v == -1.0));

        let phys = PhysicalVars {
            theta: Field::constant(g, 1.0),
            q: Field::constant(g, 2.0),
        };
        let (te, qe) = to_equivalent(&phys, &p).unwrap();
        assert!(te.values().iter().all(|&v| v == 3.0));
        assert!(qe.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn inverse_conversion_examples() {
        let g = grid();
        let p = params(0.5, 0.9);
        let back = from_equivalent(&Field::constant(g, 3.0), &Field::constant(g, 0.5), &p).unwrap();
        assert!(back.theta.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(back.q.values().iter().all(|&v| (v - 2.0).abs() < 1e-15));

        let back = from_equivalent(&Field::zeros(g), &Field::constant(g, -p.qhat), &p).unwrap();
        assert_eq!(back.theta.max_abs(), 0.0);
        assert_eq!(back.q.max_abs(), 0.0);
    }

    #[test]
    fn conversions_require_positive_qhat() {
        let g = grid();
        let p = ModelParams { qhat: 0.0, ..ModelParams::default() };
        assert!(from_equivalent(&Field::zeros(g), &Field::zeros(g), &p).is_err());
    }

    #[test]
    fn conversion_rejects_grid_mismatch() {
        let p = ModelParams::default();
        let phys = PhysicalVars {
            theta: Field::zeros(grid()),
            q: Field::zeros(Grid::new(32, 2.0 * PI).unwrap()),
        };
        assert!(matches!(to_equivalent(&phys, &p), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn precipitation_examples() {
        let g = grid();
        let p = ModelParams { alpha: 0.5, epsilon: 0.1, ..ModelParams::default() };
        assert_eq!(precipitation(&Field::constant(g, -1.0), &p).unwrap().max_abs(), 0.0);
        let sink = precipitation(&Field::constant(g, 2.0), &p).unwrap();
        assert!(sink.values().iter().all(|&v| (v - 30.0).abs() < 1e-12));
        let raw = precipitation_rate(&Field::constant(g, 2.0), &p).unwrap();
        assert!(raw.values().iter().all(|&v| (v - 20.0).abs() < 1e-12));

        let mixed = Field::from_fn(g, |x, y| (x + y).sin());
        let s = precipitation(&mixed, &p).unwrap();
        for (q, r) in mixed.values().iter().zip(s.values()) {
            assert_eq!(*q <= 0.0, *r == 0.0);
        }
    }

    #[test]
    fn precipitation_needs_positive_epsilon() {
        let p = ModelParams { epsilon: 0.0, ..ModelParams::default() };
        assert!(matches!(
            precipitation(&Field::zeros(grid()), &p),
            Err(Error::EpsilonZero)
        ));
    }

    fn sample_state(g: Grid) -> State {
        State {
            u: VectorField::from_fn(g, |x, y| x.cos() * y.sin(), |x, y| -x.sin() * y.cos()),
            v: VectorField::from_fn(g, |x, _| x.sin(), |_, _| 0.0),
            te: Field::from_fn(g, |x, y| 1.0 + (x - y).cos()),
            qe: Field::from_fn(g, |_, y| -1.0 + 0.5 * y.sin()),
            time: 0.0,
        }
    }

    #[test]
    fn reconstruct_mid_height_is_barotropic() {
        let g = grid();
        let e = Spectral::new(g);
        let s = sample_state(g);
        let p = ModelParams::default();
        let col = reconstruct_3d(&e, &s, &p, 0.5, 1.0).unwrap();
        assert!(col.velocity.sub(&s.u).max_abs() < 1e-15);
    }

    #[test]
    fn reconstruct_vertical_velocity_from_divergence() {
        let g = grid();
        let e = Spectral::new(g);
        let s = sample_state(g);
        let p = ModelParams::default();
        let h = PI;
        // W = w * sqrt2 * sin(pi z / H), so dividing out the profile recovers w.
        let z = h / 4.0;
        let col = reconstruct_3d(&e, &s, &p, z, h).unwrap();
        let profile = SQRT_2 * (PI * z / h).sin();
        let w = col.w.scaled(1.0 / profile);
        let expected = Field::from_fn(g, |x, _| -x.cos());
        assert!(w.sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn reconstruct_constant_baroclinic_velocity_has_no_w() {
        let g = grid();
        let e = Spectral::new(g);
        let mut s = sample_state(g);
        s.v = VectorField::new(Field::constant(g, 0.3), Field::constant(g, -1.1)).unwrap();
        let col = reconstruct_3d(&e, &s, &ModelParams::default(), 0.3, 1.0).unwrap();
        assert!(col.w.max_abs() < 1e-13);
    }

    #[test]
    fn reconstruct_boundaries() {
        let g = grid();
        let e = Spectral::new(g);
        let s = sample_state(g);
        let p = ModelParams::default();
        for z in [0.0, 2.0] {
            let col = reconstruct_3d(&e, &s, &p, z, 2.0).unwrap();
            assert!(col.w.max_abs() < 1e-13);
            assert!(col.theta.max_abs() < 1e-13);
        }
        assert!(reconstruct_3d(&e, &s, &p, 2.1, 2.0).is_err());
        assert!(reconstruct_3d(&e, &s, &p, -0.1, 2.0).is_err());
        assert!(reconstruct_3d(&e, &s, &p, 0.0, 0.0).is_err());
    }
}
