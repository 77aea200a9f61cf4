//! Periodic-torus discretization: transforms, exact spectral derivatives,
//! 2/3-rule dealiasing, Leray projection and diffusion propagators.
//!
//! Spectra use the half-plane layout of a real transform: `n/2 + 1` columns
//! in `k_x` (non-negative modes) by `n` rows in `k_y`, stored `k_x`-major so
//! that the `k_y` transforms run over contiguous chunks. The forward
//! transform is unnormalized; [`Spectral::inverse`] divides by `n^2`.

mod field;
mod grid;

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub use field::{Field, VectorField};
pub use grid::Grid;

use crate::error::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Half-plane spectrum of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Spectrum {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); (grid.n() / 2 + 1) * grid.n()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of x-slot `i` (`0..=n/2`) and y-slot `j` (`0..n`).
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[i * self.grid.n() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, c: Complex64) {
        let n = self.grid.n();
        self.coeffs[i * n + j] = c;
    }

    pub fn add(&self, other: &Spectrum) -> Spectrum {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Spectrum) -> Spectrum {
        self.zip(other, |a, b| a - b)
    }

    pub fn scaled(&self, c: f64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
        }
    }

    fn zip(&self, other: &Spectrum, f: impl Fn(Complex64, Complex64) -> Complex64) -> Spectrum {
        debug_assert_eq!(self.grid, other.grid);
        Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

/// Transform plans and wavenumber tables for one grid.
///
/// Methods take `&self` and allocate their own scratch, so one engine may be
/// shared read-only; the simulator still builds one per run.
pub struct Spectral {
    grid: Grid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Odd-derivative wavenumbers, Nyquist entries zeroed.
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// Full `|k|^2`, Nyquist included.
    k2: Vec<f64>,
    keep: Vec<bool>,
    /// Parseval multiplicity of each half-plane column.
    weight: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let nh = n / 2 + 1;
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();

        let kx: Vec<f64> = (0..nh)
            .map(|i| if grid.is_nyquist(i) { 0.0 } else { grid.wavenumber(i) })
            .collect();
        let ky: Vec<f64> = (0..n)
            .map(|j| if grid.is_nyquist(j) { 0.0 } else { grid.wavenumber(j) })
            .collect();

        let mut k2 = Vec::with_capacity(nh * n);
        let mut keep = Vec::with_capacity(nh * n);
        for i in 0..nh {
            let kxi = grid.wavenumber(i);
            let mx = grid.mode_index(i).unsigned_abs() as usize;
            for j in 0..n {
                let kyj = grid.wavenumber(j);
                let my = grid.mode_index(j).unsigned_abs() as usize;
                k2.push(kxi * kxi + kyj * kyj);
                keep.push(3 * mx <= n && 3 * my <= n);
            }
        }
        let weight = (0..nh)
            .map(|i| if i == 0 || i == n / 2 { 1.0 } else { 2.0 })
            .collect();

        Spectral {
            grid,
            r2c: real_planner.plan_fft_forward(n),
            c2r: real_planner.plan_fft_inverse(n),
            col_fwd: planner.plan_fft_forward(n),
            col_inv: planner.plan_fft_inverse(n),
            kx,
            ky,
            k2,
            keep,
            weight,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn forward(&self, f: &Field) -> Spectrum {
        debug_assert_eq!(f.grid(), &self.grid);
        let n = self.grid.n();
        let nh = n / 2 + 1;
        let mut rows = vec![Complex64::new(0.0, 0.0); nh * n];
        let mut input = vec![0.0; n];
        let mut scratch = self.r2c.make_scratch_vec();
        for (j, out) in rows.chunks_exact_mut(nh).enumerate() {
            input.copy_from_slice(&f.values()[j * n..(j + 1) * n]);
            self.r2c
                .process_with_scratch(&mut input, out, &mut scratch)
                .expect("r2c buffer sizes are fixed by the plan");
        }
        let mut spec = Spectrum::zeros(self.grid);
        for j in 0..n {
            for i in 0..nh {
                spec.coeffs[i * n + j] = rows[j * nh + i];
            }
        }
        self.col_fwd.process(&mut spec.coeffs);
        spec
    }

    /// Inverse transform. The imaginary parts of the self-conjugate `k_x`
    /// columns are discarded, as for any real inverse transform.
    pub fn inverse(&self, s: &Spectrum) -> Field {
        debug_assert_eq!(s.grid(), &self.grid);
        let n = self.grid.n();
        let nh = n / 2 + 1;
        let mut cols = s.coeffs.clone();
        self.col_inv.process(&mut cols);
        let mut values = vec![0.0; n * n];
        let mut row = vec![Complex64::new(0.0, 0.0); nh];
        let mut scratch = self.c2r.make_scratch_vec();
        let norm = 1.0 / (n * n) as f64;
        for (j, out) in values.chunks_exact_mut(n).enumerate() {
            for (i, r) in row.iter_mut().enumerate() {
                *r = cols[i * n + j];
            }
            row[0].im = 0.0;
            row[nh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut row, out, &mut scratch)
                .expect("c2r buffer sizes are fixed by the plan");
            out.iter_mut().for_each(|v| *v *= norm);
        }
        Field::from_values(self.grid, values)
    }

    fn map_modes(&self, s: &Spectrum, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Spectrum {
        let n = self.grid.n();
        let mut out = s.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            *c = f(idx / n, idx % n, *c);
        }
        out
    }

    pub fn ddx_spectrum(&self, s: &Spectrum) -> Spectrum {
        self.map_modes(s, |i, _, c| I * self.kx[i] * c)
    }

    pub fn ddy_spectrum(&self, s: &Spectrum) -> Spectrum {
        self.map_modes(s, |_, j, c| I * self.ky[j] * c)
    }

    pub fn laplacian_spectrum(&self, s: &Spectrum) -> Spectrum {
        let n = self.grid.n();
        self.map_modes(s, |i, j, c| -self.k2[i * n + j] * c)
    }

    pub fn dealias_spectrum(&self, s: &mut Spectrum) {
        for (c, &keep) in s.coeffs.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn heat_spectrum(&self, s: &mut Spectrum, nu: f64, dt: f64) {
        for (c, &k2) in s.coeffs.iter_mut().zip(&self.k2) {
            *c *= (-nu * k2 * dt).exp();
        }
    }

    /// In-place Leray projection of a vector spectrum. Each mode is projected
    /// orthogonally to the derivative wavevector; modes where that vector
    /// vanishes (mean, pure Nyquist) are left untouched.
    pub fn project_spectra(&self, sx: &mut Spectrum, sy: &mut Spectrum) {
        let n = self.grid.n();
        for idx in 0..sx.coeffs.len() {
            let (kx, ky) = (self.kx[idx / n], self.ky[idx % n]);
            let kk = kx * kx + ky * ky;
            if kk == 0.0 {
                continue;
            }
            let (a, b) = (sx.coeffs[idx], sy.coeffs[idx]);
            let proj = (a * kx + b * ky) / kk;
            sx.coeffs[idx] = a - proj * kx;
            sy.coeffs[idx] = b - proj * ky;
        }
    }

    /// Squared discrete L2 norm from the spectrum (Parseval).
    pub fn l2_sq_spectrum(&self, s: &Spectrum) -> f64 {
        self.weighted_sum(s, |_| 1.0)
    }

    /// Squared L2 norm of the spectral gradient.
    pub fn grad_sq_spectrum(&self, s: &Spectrum) -> f64 {
        let n = self.grid.n();
        self.weighted_sum(s, |idx| {
            let (kx, ky) = (self.kx[idx / n], self.ky[idx % n]);
            kx * kx + ky * ky
        })
    }

    fn weighted_sum(&self, s: &Spectrum, mult: impl Fn(usize) -> f64) -> f64 {
        let n = self.grid.n();
        let total: f64 = s
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| self.weight[idx / n] * mult(idx) * c.norm_sqr())
            .sum();
        let nf = n as f64;
        total * self.grid.area() / (nf * nf * nf * nf)
    }

    pub fn grad(&self, f: &Field) -> VectorField {
        let s = self.forward(f);
        VectorField {
            x: self.inverse(&self.ddx_spectrum(&s)),
            y: self.inverse(&self.ddy_spectrum(&s)),
        }
    }

    pub fn div(&self, w: &VectorField) -> Field {
        let d = self
            .ddx_spectrum(&self.forward(&w.x))
            .add(&self.ddy_spectrum(&self.forward(&w.y)));
        self.inverse(&d)
    }

    pub fn laplacian(&self, f: &Field) -> Field {
        self.inverse(&self.laplacian_spectrum(&self.forward(f)))
    }

    pub fn leray_project(&self, w: &VectorField) -> VectorField {
        let mut sx = self.forward(&w.x);
        let mut sy = self.forward(&w.y);
        self.project_spectra(&mut sx, &mut sy);
        VectorField {
            x: self.inverse(&sx),
            y: self.inverse(&sy),
        }
    }

    pub fn dealias(&self, f: &Field) -> Field {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        self.inverse(&s)
    }

    /// Dealiased spectrum and its physical samples.
    pub(crate) fn resolve(&self, f: &Field) -> (Spectrum, Field) {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        let phys = self.inverse(&s);
        (s, phys)
    }

    /// Dealiased spectrum of a pointwise product of already-dealiased factors.
    pub(crate) fn product_spectrum(&self, a: &Field, b: &Field) -> Spectrum {
        let mut s = self.forward(&a.mul(b));
        self.dealias_spectrum(&mut s);
        s
    }

    /// Exact integrating factor `exp(nu * dt * laplacian)`.
    pub fn heat_propagator(&self, f: &Field, nu: f64, dt: f64) -> Field {
        if nu * dt == 0.0 {
            return f.clone();
        }
        let mut s = self.forward(f);
        self.heat_spectrum(&mut s, nu, dt);
        self.inverse(&s)
    }

    /// Zero-mean solution of `-lap p = div div (u (x) u + v (x) v)` built from
    /// dealiased products.
    pub fn pressure_diagnostic(&self, u: &VectorField, v: &VectorField) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        self.grid.check_same(v.grid())?;
        let rhs = self.pressure_source_spectrum(u, v);
        let n = self.grid.n();
        let p = self.map_modes(&rhs, |i, j, c| {
            let k2 = self.k2[i * n + j];
            if i == 0 && j == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                c / k2
            }
        });
        Ok(self.inverse(&p))
    }

    /// Spectrum of `div div (u (x) u + v (x) v)`.
    pub fn pressure_source_spectrum(&self, u: &VectorField, v: &VectorField) -> Spectrum {
        let (_, ux) = self.resolve(&u.x);
        let (_, uy) = self.resolve(&u.y);
        let (_, vx) = self.resolve(&v.x);
        let (_, vy) = self.resolve(&v.y);
        let mxx = self
            .product_spectrum(&ux, &ux)
            .add(&self.product_spectrum(&vx, &vx));
        let mxy = self
            .product_spectrum(&ux, &uy)
            .add(&self.product_spectrum(&vx, &vy));
        let myy = self
            .product_spectrum(&uy, &uy)
            .add(&self.product_spectrum(&vy, &vy));
        let n = self.grid.n();
        let mut out = Spectrum::zeros(self.grid);
        for idx in 0..out.coeffs.len() {
            let (kx, ky) = (self.kx[idx / n], self.ky[idx % n]);
            out.coeffs[idx] =
                -(kx * kx * mxx.coeffs[idx] + 2.0 * kx * ky * mxy.coeffs[idx] + ky * ky * myy.coeffs[idx]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn engine(n: usize) -> Spectral {
        Spectral::new(Grid::new(n, 2.0 * PI).unwrap())
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn round_trip_recovers_samples() {
        let e = engine(32);
        let f = Field::from_fn(*e.grid(), |x, y| (x - 1.0).powi(2) * (y + 0.3).sin());
        let back = e.inverse(&e.forward(&f));
        assert!(max_diff(&f, &back) < 1e-12);
    }

    #[test]
    fn grad_of_sin_x() {
        let e = engine(32);
        let g = e.grad(&Field::from_fn(*e.grid(), |x, _| x.sin()));
        assert!(max_diff(&g.x, &Field::from_fn(*e.grid(), |x, _| x.cos())) < 1e-12);
        assert!(g.y.max_abs() < 1e-12);
    }

    #[test]
    fn grad_of_constant_is_zero() {
        let e = engine(32);
        let g = e.grad(&Field::constant(*e.grid(), 4.2));
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn grad_of_product_mode() {
        let e = engine(32);
        let g = e.grad(&Field::from_fn(*e.grid(), |x, y| x.sin() * y.sin()));
        assert!(max_diff(&g.x, &Field::from_fn(*e.grid(), |x, y| x.cos() * y.sin())) < 1e-12);
        assert!(max_diff(&g.y, &Field::from_fn(*e.grid(), |x, y| x.sin() * y.cos())) < 1e-12);
    }

    #[test]
    fn div_examples() {
        let e = engine(32);
        let g = *e.grid();
        let shear = VectorField::from_fn(g, |_, y| y.sin(), |_, _| 0.0);
        assert!(e.div(&shear).max_abs() < 1e-12);
        let w = VectorField::from_fn(g, |x, _| x.sin(), |_, y| y.sin());
        let expected = Field::from_fn(g, |x, y| x.cos() + y.cos());
        assert!(max_diff(&e.div(&w), &expected) < 1e-12);
    }

    #[test]
    fn laplacian_examples() {
        let e = engine(32);
        let g = *e.grid();
        let f = Field::from_fn(g, |x, _| x.sin());
        assert!(max_diff(&e.laplacian(&f), &f.scaled(-1.0)) < 1e-12);
        assert!(e.laplacian(&Field::constant(g, 2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn leray_examples() {
        let e = engine(32);
        let g = *e.grid();
        let phi = Field::from_fn(g, |x, y| (2.0 * x).cos() * y.sin() + (x + 3.0 * y).sin());
        assert!(e.leray_project(&e.grad(&phi)).max_abs() < 1e-12);

        let sol = VectorField::from_fn(g, |x, y| x.cos() * y.sin(), |x, y| -x.sin() * y.cos());
        let p = e.leray_project(&sol);
        assert!(p.sub(&sol).max_abs() < 1e-12);

        let w = VectorField::from_fn(g, |x, _| x.sin(), |_, _| 0.0);
        assert!(e.leray_project(&w).max_abs() < 1e-12);
    }

    #[test]
    fn leray_keeps_mean_flow() {
        let e = engine(16);
        let g = *e.grid();
        let w = VectorField::from_fn(g, |x, _| 0.7 + x.sin(), |_, _| -0.2);
        let p = e.leray_project(&w);
        assert!((p.x.mean() - 0.7).abs() < 1e-13);
        assert!((p.y.mean() + 0.2).abs() < 1e-13);
    }

    #[test]
    fn dealias_examples() {
        let e = engine(32);
        let g = *e.grid();
        let low = Field::from_fn(g, |x, y| (3.0 * x).sin() * (10.0 * y).cos());
        assert!(max_diff(&e.dealias(&low), &low) < 1e-12);
        let high = Field::from_fn(g, |x, _| (11.0 * x).cos());
        assert!(e.dealias(&high).max_abs() < 1e-12);
        let mixed = low.add(&high);
        let once = e.dealias(&mixed);
        assert!(max_diff(&e.dealias(&once), &once) < 1e-13);
    }

    #[test]
    fn heat_propagator_examples() {
        let e = engine(32);
        let g = *e.grid();
        let f = Field::from_fn(g, |x, _| x.sin());
        let half = e.heat_propagator(&f, 1.0, 2f64.ln());
        assert!(max_diff(&half, &f.scaled(0.5)) < 1e-12);
        assert_eq!(e.heat_propagator(&f, 0.0, 1.0), f);
        let c = Field::constant(g, 1.5);
        assert!(max_diff(&e.heat_propagator(&c, 3.0, 10.0), &c) < 1e-12);
    }

    #[test]
    fn pressure_of_rest_is_zero() {
        let e = engine(16);
        let z = VectorField::zeros(*e.grid());
        assert!(e.pressure_diagnostic(&z, &z).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let e = engine(16);
        let g = *e.grid();
        let nyq = Field::from_fn(g, |x, _| (8.0 * x).cos());
        assert!(e.grad(&nyq).max_abs() < 1e-12);
        assert!(max_diff(&e.laplacian(&nyq), &nyq.scaled(-64.0)) < 1e-10);
    }
}
