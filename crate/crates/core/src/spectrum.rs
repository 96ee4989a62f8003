//! Eigenvalue summaries used to attach indices to equilibria.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// |eigenvalue| below this is treated as non-hyperbolic.
pub const HYPERBOLIC_THRESHOLD: f64 = 1e-9;
/// Matrices with max |M - M^T| below this (relative to max(1, max|M|)) use the symmetric solver.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Real parts, ascending.
    pub real_parts: Vec<f64>,
    /// Number of eigenvalues with negative real part.
    pub index: usize,
    /// Smallest |real part|.
    pub min_abs: f64,
    pub symmetric: bool,
}

impl Spectrum {
    pub fn is_hyperbolic(&self) -> bool {
        self.min_abs >= HYPERBOLIC_THRESHOLD
    }

    pub fn checked_index(&self) -> Result<usize> {
        if self.is_hyperbolic() {
            Ok(self.index)
        } else {
            let eigenvalue = self
                .real_parts
                .iter()
                .copied()
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(0.0);
            Err(Error::NonHyperbolic { eigenvalue })
        }
    }
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    (m - m.transpose()).amax() / scale
}

/// Eigenvalue real parts of a square matrix. Symmetric input goes through the
/// symmetric solver, anything else through the real Schur form.
pub fn spectrum(m: &DMatrix<f64>) -> Spectrum {
    assert!(m.is_square(), "spectrum of a non-square matrix");
    if m.nrows() == 0 {
        return Spectrum { real_parts: vec![], index: 0, min_abs: f64::INFINITY, symmetric: true };
    }
    let symmetric = asymmetry(m) < SYMMETRY_TOLERANCE;
    let mut re: Vec<f64> = if symmetric {
        let s = (m + m.transpose()) * 0.5;
        s.symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.complex_eigenvalues().iter().map(|z| z.re).collect()
    };
    re.sort_by(f64::total_cmp);
    let index = re.iter().filter(|&&x| x < 0.0).count();
    let min_abs = re.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    Spectrum { real_parts: re, index, min_abs, symmetric }
}

/// Index of a hyperbolic matrix; errors when an eigenvalue is within the threshold of zero.
pub fn hyperbolic_index(m: &DMatrix<f64>) -> Result<usize> {
    spectrum(m).checked_index()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_general() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, -3.0]);
        let sp = spectrum(&s);
        assert!(sp.symmetric);
        assert_eq!(sp.index, 1);
        let g = DMatrix::from_row_slice(2, 2, &[-1.0, 5.0, 0.0, 2.0]);
        let sp = spectrum(&g);
        assert!(!sp.symmetric);
        assert_eq!(sp.real_parts.len(), 2);
        assert!((sp.real_parts[0] + 1.0).abs() < 1e-12 && (sp.real_parts[1] - 2.0).abs() < 1e-12);
        let rot = DMatrix::from_row_slice(2, 2, &[-0.5, -1.0, 1.0, -0.5]);
        assert_eq!(spectrum(&rot).index, 2);
    }

    #[test]
    fn non_hyperbolic_is_an_error() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert!(matches!(hyperbolic_index(&m), Err(Error::NonHyperbolic { .. })));
    }
}
