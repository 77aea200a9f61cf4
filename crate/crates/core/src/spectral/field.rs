use super::grid::Grid;
use crate::error::Result;

/// Real scalar samples on a [`Grid`], row-major with x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x, y)` at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            let y = grid.coord(j);
            for i in 0..n {
                values.push(f(grid.coord(i), y));
            }
        }
        Field { grid, values }
    }

    /// Panics if `values.len()` does not match the grid.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.n() + i]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(self.zip_map_unchecked(other, f))
    }

    pub(crate) fn zip_map_unchecked(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Field {
        self.zip_map_unchecked(other, |a, b| a + c * b)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map_unchecked(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map_unchecked(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map_unchecked(other, |a, b| a * b)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Grid quadrature of the field over the torus.
    pub fn integral(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().sum::<f64>() * dx * dx
    }

    /// Discrete L2 inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        let dx = self.grid.dx();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * dx
            * dx
    }
}

/// Pair of scalar fields on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: Field,
    pub y: Field,
}

impl VectorField {
    pub fn new(x: Field, y: Field) -> Result<Self> {
        x.grid().check_same(y.grid())?;
        Ok(VectorField { x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            x: Field::zeros(grid),
            y: Field::zeros(grid),
        }
    }

    pub fn from_fn(grid: Grid, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        VectorField {
            x: Field::from_fn(grid, fx),
            y: Field::from_fn(grid, fy),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scaled(&self, c: f64) -> VectorField {
        VectorField {
            x: self.x.scaled(c),
            y: self.y.scaled(c),
        }
    }

    pub fn axpy(&self, c: f64, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.axpy(c, &other.x),
            y: self.y.axpy(c, &other.y),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.axpy(-1.0, other)
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        self.x.zip_map_unchecked(&self.y, |a, b| a.hypot(b))
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }
}
