use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on the square torus `[0, L)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n must be even and >= 16, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "side length must be positive, got {length}"
            )));
        }
        Ok(Grid { n, length })
    }

    /// Points per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of grid index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Signed mode index for FFT slot `j`, in `-n/2 ..= n/2 - 1`.
    pub fn mode_index(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Physical wavenumber `2*pi*m/L` for FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_index(j) as f64 / self.length
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.n, self.length, other.n, other.length
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(15, 1.0).is_err());
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(32, 0.0).is_err());
        assert!(Grid::new(32, f64::NAN).is_err());
        assert!(Grid::new(16, 1.0).is_ok());
    }

    #[test]
    fn wavenumbers_follow_fft_ordering() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let modes: Vec<i64> = (0..16).map(|j| g.mode_index(j)).collect();
        assert_eq!(modes[..8], [0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(modes[8], -8);
        assert_eq!(modes[15], -1);
        assert!((g.wavenumber(3) - 3.0).abs() < 1e-15);
        assert!(g.is_nyquist(8));
    }
}
