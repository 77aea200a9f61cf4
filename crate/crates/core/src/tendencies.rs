//! Explicit right-hand sides of the moist barotropic/baroclinic system.
//!
//! Viscosity, the optional scalar diffusivity and the relaxation sink are
//! left to the stepper. Every quadratic product is formed from dealiased
//! factors and truncated again by the 2/3 rule.

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::spectral::{Field, Spectral, Spectrum, VectorField};

/// Explicit part of the time derivative of each unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency {
    pub du: VectorField,
    pub dv: VectorField,
    pub dte: Field,
    pub dqe: Field,
}

/// Dealiased spectrum, its physical samples and physical gradient.
struct Resolved {
    phys: Field,
    dx: Field,
    dy: Field,
}

impl Resolved {
    fn new(engine: &Spectral, f: &Field) -> Self {
        let (spec, phys) = engine.resolve(f);
        Resolved {
            phys,
            dx: engine.inverse(&engine.ddx_spectrum(&spec)),
            dy: engine.inverse(&engine.ddy_spectrum(&spec)),
        }
    }
}

/// Dealiased spectrum of `a . grad f`.
fn advect_spectrum(engine: &Spectral, ax: &Field, ay: &Field, f: &Resolved) -> Spectrum {
    let prod = ax
        .mul(&f.dx)
        .zip_map_unchecked(&ay.mul(&f.dy), |a, b| a + b);
    let mut s = engine.forward(&prod);
    engine.dealias_spectrum(&mut s);
    s
}

/// Component `i` is `sum_j d_j (v_j w_i)`.
fn tensor_divergence_spectra(
    engine: &Spectral,
    vx: &Field,
    vy: &Field,
    wx: &Field,
    wy: &Field,
) -> (Spectrum, Spectrum) {
    let sx = engine
        .ddx_spectrum(&engine.product_spectrum(vx, wx))
        .add(&engine.ddy_spectrum(&engine.product_spectrum(vy, wx)));
    let sy = engine
        .ddx_spectrum(&engine.product_spectrum(vx, wy))
        .add(&engine.ddy_spectrum(&engine.product_spectrum(vy, wy)));
    (sx, sy)
}

fn checked(term: &str, f: Field, time: f64) -> Result<Field> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::BlowUp {
            term: term.to_string(),
            time,
        })
    }
}

/// Explicit tendency:
///
/// ```text
/// du  = -P[(u.grad)u + div(v (x) v)]
/// dv  = -(u.grad)v - (v.grad)u + grad(T_e - q_e)/(1+alpha)
/// dTe = -u.grad T_e + (1 - Qbar) div v
/// dqe = -u.grad q_e - (Qbar + alpha) div v
/// ```
pub fn explicit_tendency(engine: &Spectral, s: &State, p: &ModelParams) -> Result<Tendency> {
    s.check_grids()?;
    engine.grid().check_same(s.grid())?;
    let t = s.time;

    let ux = Resolved::new(engine, &s.u.x);
    let uy = Resolved::new(engine, &s.u.y);
    let vx = Resolved::new(engine, &s.v.x);
    let vy = Resolved::new(engine, &s.v.y);
    let te = Resolved::new(engine, &s.te);
    let qe = Resolved::new(engine, &s.qe);
    let (u1, u2) = (&ux.phys, &uy.phys);
    let (v1, v2) = (&vx.phys, &vy.phys);

    // Linear couplings use the untruncated spectra.
    let vx_hat = engine.forward(&s.v.x);
    let vy_hat = engine.forward(&s.v.y);
    let div_v = engine.ddx_spectrum(&vx_hat).add(&engine.ddy_spectrum(&vy_hat));
    let buoy = engine.forward(&s.te).sub(&engine.forward(&s.qe));

    // Barotropic momentum.
    let (tdx, tdy) = tensor_divergence_spectra(engine, v1, v2, v1, v2);
    let mut dux = advect_spectrum(engine, u1, u2, &ux).add(&tdx);
    let mut duy = advect_spectrum(engine, u1, u2, &uy).add(&tdy);
    engine.project_spectra(&mut dux, &mut duy);
    let du = VectorField {
        x: checked("du", engine.inverse(&dux.scaled(-1.0)), t)?,
        y: checked("du", engine.inverse(&duy.scaled(-1.0)), t)?,
    };

    // Baroclinic momentum.
    let coupling = 1.0 / (1.0 + p.alpha);
    let dvx = engine
        .ddx_spectrum(&buoy)
        .scaled(coupling)
        .sub(&advect_spectrum(engine, u1, u2, &vx))
        .sub(&advect_spectrum(engine, v1, v2, &ux));
    let dvy = engine
        .ddy_spectrum(&buoy)
        .scaled(coupling)
        .sub(&advect_spectrum(engine, u1, u2, &vy))
        .sub(&advect_spectrum(engine, v1, v2, &uy));
    let dv = VectorField {
        x: checked("dv", engine.inverse(&dvx), t)?,
        y: checked("dv", engine.inverse(&dvy), t)?,
    };

    let dte = div_v
        .scaled(1.0 - p.qbar)
        .sub(&advect_spectrum(engine, u1, u2, &te));
    let dqe = div_v
        .scaled(-(p.qbar + p.alpha))
        .sub(&advect_spectrum(engine, u1, u2, &qe));

    Ok(Tendency {
        du,
        dv,
        dte: checked("dT_e", engine.inverse(&dte), t)?,
        dqe: checked("dq_e", engine.inverse(&dqe), t)?,
    })
}

/// Dealiased `u . grad f`.
pub fn advect(engine: &Spectral, u: &VectorField, f: &Field) -> Result<Field> {
    u.grid().check_same(f.grid())?;
    engine.grid().check_same(f.grid())?;
    let (_, ax) = engine.resolve(&u.x);
    let (_, ay) = engine.resolve(&u.y);
    let rf = Resolved::new(engine, f);
    Ok(engine.inverse(&advect_spectrum(engine, &ax, &ay, &rf)))
}

/// Componentwise `(u . grad) w`.
pub fn vector_advect(engine: &Spectral, u: &VectorField, w: &VectorField) -> Result<VectorField> {
    Ok(VectorField {
        x: advect(engine, u, &w.x)?,
        y: advect(engine, u, &w.y)?,
    })
}

/// `div(v (x) w)`, i.e. component `i` is `sum_j d_j (v_j w_i)`.
pub fn tensor_divergence(engine: &Spectral, v: &VectorField, w: &VectorField) -> Result<VectorField> {
    v.grid().check_same(w.grid())?;
    engine.grid().check_same(v.grid())?;
    let (_, v1) = engine.resolve(&v.x);
    let (_, v2) = engine.resolve(&v.y);
    let (_, w1) = engine.resolve(&w.x);
    let (_, w2) = engine.resolve(&w.y);
    let (sx, sy) = tensor_divergence_spectra(engine, &v1, &v2, &w1, &w2);
    Ok(VectorField {
        x: engine.inverse(&sx),
        y: engine.inverse(&sy),
    })
}
