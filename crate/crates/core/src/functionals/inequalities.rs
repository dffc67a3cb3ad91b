use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::groundstate::GroundState;

use super::{adapted_norm_sq, variance, variance_flux, PotentialSpec};

/// Both sides of the variance-weighted Cauchy-Schwarz bound
/// `(Im int (x . grad f) conj f)^2 <= ||x f||^2 (||f||^2_{Hdot^1_V} - (||f||_4^4 / (C_GN ||f||))^(2/3))`.
pub fn cauchy_schwarz_gap(
    f: &ComplexField,
    pot: &PotentialSpec,
    gs: &GroundState,
) -> Result<(f64, f64)> {
    if f.is_zero() {
        return Err(Error::param("f", "zero field: right-hand side undefined"));
    }
    let var = variance(f);
    if !var.is_finite() {
        return Err(Error::param("f", "infinite variance"));
    }
    let current = 0.25 * variance_flux(f);
    let lhs = current * current;
    let gn = (f.l4_fourth() / (gs.c_gn * f.l2_sq().sqrt())).powf(2.0 / 3.0);
    let rhs = var * (adapted_norm_sq(f, pot) - gn);
    Ok((lhs, rhs))
}

/// `(int |f|^p / |x|^mu, || |grad|^(mu/p) f ||_p^p)`; only `p = 2` is implemented.
pub fn hardy_check(f: &ComplexField, p: f64, mu: f64) -> Result<(f64, f64)> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!("hardy_check only implements p = 2, got {p}")));
    }
    if !(0.0..3.0).contains(&mu) {
        return Err(Error::param("mu", format!("must lie in [0, 3), got {mu}")));
    }
    let grid = f.grid();
    let lhs = f.quad(|idx, u| u.norm_sqr() * grid.radius(idx).powf(-mu));
    Ok((lhs, f.spectral_norm_sq(mu / 2.0)))
}
