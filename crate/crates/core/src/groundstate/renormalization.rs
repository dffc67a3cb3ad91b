//! Petviashvili iteration `Q <- M^(3/2) (1 - Delta)^(-1) Q^3` in the sine basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

#[derive(Clone, Debug)]
pub struct RenormalizationOptions {
    pub max_iterations: usize,
}

impl Default for RenormalizationOptions {
    fn default() -> Self {
        RenormalizationOptions {
            max_iterations: 2000,
        }
    }
}

/// Returns the converged node values on `grid` and the iteration count.
pub(crate) fn iterate(
    grid: &RadialGrid,
    start: &[f64],
    tol: f64,
    opts: &RenormalizationOptions,
) -> Result<(Vec<f64>, usize)> {
    let plan = grid.plan();
    let n = grid.len();
    let symbol: Vec<f64> = (0..n).map(|k| 1.0 + grid.wavenumber(k).powi(2)).collect();
    let norm = |c: &[Complex64]| -> f64 {
        c.iter()
            .zip(&symbol)
            .map(|(s, w)| w * s.norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    let to_coeffs = |q: &[f64]| -> Vec<Complex64> {
        let v: Vec<Complex64> = q
            .iter()
            .enumerate()
            .map(|(j, &x)| Complex64::new(x * grid.node(j), 0.0))
            .collect();
        plan.forward(&v)
    };
    let from_coeffs = |c: &[Complex64]| -> Vec<f64> {
        plan.inverse(c)
            .iter()
            .enumerate()
            .map(|(j, v)| v.re / grid.node(j))
            .collect()
    };

    let mut q = start.to_vec();
    let mut coeffs = to_coeffs(&q);
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let cubed: Vec<f64> = q.iter().map(|x| x * x * x).collect();
        let nl = to_coeffs(&cubed);
        let num: f64 = coeffs
            .iter()
            .zip(&symbol)
            .map(|(s, w)| w * s.norm_sqr())
            .sum();
        let den: f64 = coeffs.iter().zip(&nl).map(|(s, t)| (s.conj() * t).re).sum();
        if !(num > 0.0) || den.abs() < 1e-300 || norm(&coeffs) < 1e-12 {
            return Err(Error::TrivialFixedPoint);
        }
        let factor = (num / den).powf(1.5);
        if !factor.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                last,
            });
        }
        let next: Vec<Complex64> = nl
            .iter()
            .zip(&symbol)
            .map(|(t, w)| t * factor / w)
            .collect();
        let diff: Vec<Complex64> = next.iter().zip(&coeffs).map(|(a, b)| a - b).collect();
        let scale = norm(&next);
        if scale < 1e-12 {
            return Err(Error::TrivialFixedPoint);
        }
        last = norm(&diff) / scale;
        coeffs = next;
        q = from_coeffs(&coeffs);
        if last <= tol {
            return Ok((q, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        last,
    })
}
