//! Localized virial functionals built on the weight `w_R`.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::ComplexField;
use crate::grid::Grid;

use super::{im_conj_mul, PotentialSpec, VirialWeight};

/// Pointwise radial derivative and the tangential part `|grad u|^2 - |u_r|^2`,
/// shared by all radii when several functionals are evaluated on one field.
pub struct PointDerivatives {
    ur: Vec<Complex64>,
    tangential: Vec<f64>,
}

impl PointDerivatives {
    pub fn of(f: &ComplexField) -> Self {
        point_derivatives(f)
    }

    /// `u_r = x . grad u / |x|` at each node.
    pub fn radial(&self) -> &[Complex64] {
        &self.ur
    }
}

fn point_derivatives(f: &ComplexField) -> PointDerivatives {
    match f.grid() {
        Grid::Radial(_) => {
            let ur = f.radial_derivative();
            let n = ur.len();
            PointDerivatives {
                ur,
                tangential: vec![0.0; n],
            }
        }
        Grid::Cartesian(_) => {
            let g = f.gradient();
            let grid = f.grid();
            let mut ur = Vec::with_capacity(f.len());
            let mut tangential = Vec::with_capacity(f.len());
            for idx in 0..f.len() {
                let p = grid.point(idx);
                let r = grid.radius(idx);
                let d = (g[0][idx] * p[0] + g[1][idx] * p[1] + g[2][idx] * p[2]) / r;
                let full = g[0][idx].norm_sqr() + g[1][idx].norm_sqr() + g[2][idx].norm_sqr();
                ur.push(d);
                tangential.push(full - d.norm_sqr());
            }
            PointDerivatives { ur, tangential }
        }
    }
}

/// `I_R[u] = 2 Im int grad w_R . grad u conj(u)`.
pub fn localized_virial_i(f: &ComplexField, w: &VirialWeight) -> f64 {
    localized_virial_i_with(f, w, &f.radial_derivative())
}

pub(crate) fn localized_virial_i_with(f: &ComplexField, w: &VirialWeight, ur: &[Complex64]) -> f64 {
    let grid = f.grid();
    2.0 * f.quad(|idx, u| w.jet(grid.radius(idx)).w1 * im_conj_mul(u, ur[idx]))
}

/// `F_{R,V}[u] = int (-Delta Delta w)|u|^2 - int Delta w |u|^4
///   + 4 Re sum_jk conj(d_j u) d_k u d_jk w - 2 int |u|^2 grad w . grad V`.
///
/// The Hessian term is split as `8 ||grad u||^2` (spectral) plus the pointwise
/// correction `4 int (w'' - 2)|u_r|^2 + (w'/r - 2)|grad_T u|^2`, which vanishes
/// identically where `w_R = |x|^2`; hence `F_{inf,V} = 4 P_V` to round-off.
pub fn localized_virial_f(f: &ComplexField, w: &VirialWeight, pot: &PotentialSpec) -> Result<f64> {
    let d = (!w.is_infinite()).then(|| point_derivatives(f));
    localized_virial_f_with(f, w, pot, f.gradient_norm_sq(), d.as_ref())
}

/// As [`localized_virial_f`] with the spectral `||grad u||^2` and (for finite
/// `R`) the pointwise derivatives supplied by the caller.
pub(crate) fn localized_virial_f_with(
    f: &ComplexField,
    w: &VirialWeight,
    pot: &PotentialSpec,
    grad_sq: f64,
    d: Option<&PointDerivatives>,
) -> Result<f64> {
    pot.validate()?;
    let grid = f.grid();
    let mut acc = 8.0 * grad_sq;
    acc += f.quad(|idx, u| {
        let r = grid.radius(idx);
        let j = w.jet(r);
        let m = u.norm_sqr();
        let mut val = -j.bilap * m - j.lap * m * m;
        if !pot.is_free() {
            val += 2.0 * pot.mu * (j.w1 / r) * pot.value(r) * m;
        }
        val
    });
    if !w.is_infinite() {
        let d = d.expect("pointwise derivatives required for finite R");
        acc += 4.0
            * f.quad(|idx, _| {
                let r = grid.radius(idx);
                if w.is_quadratic_at(r) {
                    return 0.0;
                }
                let j = w.jet(r);
                (j.w2 - 2.0) * d.ur[idx].norm_sqr() + (j.w1 / r - 2.0) * d.tangential[idx]
            });
    }
    Ok(acc)
}

/// `J_R[u] = int w_R |u|^2`.
pub fn blowup_weight_j(f: &ComplexField, w: &VirialWeight) -> f64 {
    let grid = f.grid();
    f.quad(|idx, u| w.jet(grid.radius(idx)).w * u.norm_sqr())
}

/// `A_R[u] = int (-Delta Delta w_R)|u|^2 - int_{|x|>=R} (Delta w_R - 6)|u|^4
///   + 4 int_{|x|>=R} (phi''(x/R) - 2)|grad u|^2`.
pub fn sharp_part_a(f: &ComplexField, w: &VirialWeight) -> f64 {
    if w.is_infinite() {
        return 0.0;
    }
    let grid = f.grid();
    let big = w.radius();
    let outside = (0..f.len()).any(|idx| grid.radius(idx) >= big);
    let d = outside.then(|| point_derivatives(f));
    f.quad(|idx, u| {
        let r = grid.radius(idx);
        if r < big {
            return 0.0;
        }
        let j = w.jet(r);
        let m = u.norm_sqr();
        let d = d.as_ref().expect("derivatives computed when nodes lie outside R");
        let grad_sq = d.ur[idx].norm_sqr() + d.tangential[idx];
        -j.bilap * m - (j.lap - 6.0) * m * m + 4.0 * (j.phi2 - 2.0) * grad_sq
    })
}

/// `2 int ((mu R / |x|) phi'(|x| / R) - 4) V |u|^2`, the potential remainder in
/// `F_{R,V} = 4 delta + A_R + remainder` (valid at threshold energy).
pub fn virial_decomposition_remainder(f: &ComplexField, w: &VirialWeight, pot: &PotentialSpec) -> f64 {
    if pot.is_free() {
        return 0.0;
    }
    let grid = f.grid();
    2.0 * f.quad(|idx, u| {
        let r = grid.radius(idx);
        let j = w.jet(r);
        (pot.mu * j.w1 / r - 4.0) * pot.value(r) * u.norm_sqr()
    })
}

/// `||x u||^2`.
pub fn variance(f: &ComplexField) -> f64 {
    let grid = f.grid();
    f.quad(|idx, u| grid.radius(idx).powi(2) * u.norm_sqr())
}

/// `4 Im int conj(u) (x . grad u)`, the time derivative of the variance.
pub fn variance_flux(f: &ComplexField) -> f64 {
    let ur = f.radial_derivative();
    let grid = f.grid();
    4.0 * f.quad(|idx, u| grid.radius(idx) * im_conj_mul(u, ur[idx]))
}
