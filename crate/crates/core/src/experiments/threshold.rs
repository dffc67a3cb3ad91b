//! Initial data at and near the mass-energy threshold.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::{Ingredients, PotentialSpec};
use crate::grid::{CartesianGrid, Grid};
use crate::groundstate::GroundState;

/// Which root of the threshold cubic: `s = c^2 < 1` (then `P_V > 0`) or `s > 1`
/// (then `P_V < 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Sub,
    Super,
}

/// Relative level below which `Q` counts as vanished when placing translates.
pub const SUPPORT_LEVEL: f64 = 1e-4;

/// `u0 = c Q` with `E_V(u0) M(u0) = M(Q)^2`.
#[derive(Clone, Debug)]
pub struct ThresholdDatum {
    pub branch: Branch,
    pub s: f64,
    pub c: f64,
    pub field: ComplexField,
    pub virial: f64,
    /// `|E_V(u0) M(u0) - M(Q)^2| / M(Q)^2` by quadrature on the grid.
    pub threshold_residual: f64,
}

/// Coefficients `[k0, k1, k2, k3]` of `k0 + k1 s + k2 s^2 + k3 s^3`, the
/// threshold condition `E_V(sqrt(s) Q) M(sqrt(s) Q) = M(Q)^2` divided by
/// `E_0(Q)`, using the Pohozaev relations: `2 E_0 s^3 - (3 E_0 + V_Q/2) s^2 + E_0`.
/// `v_q` is `int V Q^2`.
pub fn threshold_cubic(gs: &GroundState, v_q: f64) -> [f64; 4] {
    let e0 = gs.e0;
    [e0, 0.0, -(3.0 * e0 + 0.5 * v_q), 2.0 * e0]
}

/// Solves for `c` on `grid`. The cubic is assembled from the quadrature
/// values of `Q` on the grid rather than from the Pohozaev relations, so the
/// threshold condition holds to round-off for the sampled field; the two
/// forms coincide when the relations hold exactly.
pub fn make_threshold_scaling(
    pot: &PotentialSpec,
    gs: &GroundState,
    branch: Branch,
    grid: &Grid,
) -> Result<ThresholdDatum> {
    pot.validate()?;
    if pot.is_free() {
        return Err(Error::param(
            "a",
            "threshold scaling needs a > 0; at a = 0 the only root is c = 1",
        ));
    }
    let q = gs.sample(grid, [0.0; 3])?;
    let ing = Ingredients::of(&q, pot);
    let target = gs.mass_m * gs.mass_m;
    // E_V(cQ) M(cQ) = s^2 A - s^3 B
    let a = 0.5 * ing.l2_sq * 0.5 * (ing.grad_sq + ing.pot_term);
    let b = 0.125 * ing.l2_sq * ing.l4_fourth;
    let f = |s: f64| target - a * s * s + b * s * s * s;
    let (lo, hi) = match branch {
        Branch::Sub => (0.0, 1.0),
        Branch::Super => {
            let mut hi = 2.0;
            while f(hi) <= 0.0 {
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(Error::RootFinding("no super-unit root of the threshold cubic".into()));
                }
            }
            (1.0, hi)
        }
    };
    let s = bisect(f, lo, hi)?;
    let c = s.sqrt();
    let field = q.scaled(Complex64::new(c, 0.0));
    let ing = Ingredients::of(&field, pot);
    let virial = ing.virial(pot);
    let sign_ok = match branch {
        Branch::Sub => virial > 0.0,
        Branch::Super => virial < 0.0,
    };
    if !sign_ok {
        return Err(Error::IdentityViolation {
            name: "threshold datum virial sign",
            residual: virial,
            tol: 0.0,
        });
    }
    Ok(ThresholdDatum {
        branch,
        s,
        c,
        field,
        virial,
        threshold_residual: (ing.energy() * ing.mass() - target).abs() / target,
    })
}

/// Bisection on a sign change, down to adjacent floats.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.signum() * fhi.signum() < 0.0) {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}]: f = {flo:e}, {fhi:e}"
        )));
    }
    let lo_positive = flo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mass rescaling `v0(x) = lambda u0(lambda x)`, `lambda = M(u0) / M(Q)`.
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub field: ComplexField,
    pub potential: PotentialSpec,
    pub lambda: f64,
    /// `|M(v0) - M(Q)| / M(Q)`.
    pub mass_residual: f64,
    /// Relative change of `E M` under the rescaling.
    pub threshold_residual: f64,
}

pub fn rescale_to_threshold_mass(
    u0: &ComplexField,
    pot: &PotentialSpec,
    gs: &GroundState,
) -> Result<Rescaled> {
    if u0.is_zero() {
        return Err(Error::param("u0", "must be nonzero"));
    }
    let before = Ingredients::of(u0, pot);
    let lambda = before.mass() / gs.mass_m;
    let field = u0.dilated(lambda)?;
    let potential = pot.rescaled(lambda);
    let after = Ingredients::of(&field, &potential);
    let em_before = before.energy() * before.mass();
    let em_after = after.energy() * after.mass();
    Ok(Rescaled {
        field,
        potential,
        lambda,
        mass_residual: (after.mass() - gs.mass_m).abs() / gs.mass_m,
        threshold_residual: (em_after - em_before).abs() / em_before.abs().max(f64::MIN_POSITIVE),
    })
}

/// `(1 - eps) Q(x - x_n)`.
#[derive(Clone, Debug)]
pub struct TranslatedDatum {
    pub eps: f64,
    pub center: [f64; 3],
    pub field: ComplexField,
    /// `E_V M - M(Q)^2`; negative below threshold.
    pub threshold_excess: f64,
    pub virial: f64,
}

/// Radius beyond which `Q < SUPPORT_LEVEL * Q(0)`.
pub fn support_radius(gs: &GroundState) -> f64 {
    let level = SUPPORT_LEVEL * gs.q0;
    let mut r = 0.0;
    while gs.profile.value(r) > level {
        r += 0.01;
    }
    r
}

pub fn make_translated_family(
    gs: &GroundState,
    eps: &[f64],
    centers: &[[f64; 3]],
    grid: &CartesianGrid,
    pot: &PotentialSpec,
) -> Result<Vec<TranslatedDatum>> {
    pot.validate()?;
    if eps.len() != centers.len() {
        return Err(Error::param(
            "centers",
            format!("{} shifts for {} amplitudes", centers.len(), eps.len()),
        ));
    }
    let reach = support_radius(gs);
    let grid = Grid::Cartesian(grid.clone());
    let target = gs.mass_m * gs.mass_m;
    eps.iter()
        .zip(centers)
        .map(|(&e, &x)| {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::param("eps", format!("must lie in [0, 1], got {e}")));
            }
            let dist = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            if dist + reach > grid.extent() {
                return Err(Error::param(
                    "centers",
                    format!(
                        "|x| = {dist} plus the support radius {reach:.2} of Q exceeds the half-width {}",
                        grid.extent()
                    ),
                ));
            }
            let field = gs.sample(&grid, x)?.scaled(Complex64::new(1.0 - e, 0.0));
            let ing = Ingredients::of(&field, pot);
            Ok(TranslatedDatum {
                eps: e,
                center: x,
                threshold_excess: ing.energy() * ing.mass() - target,
                virial: ing.virial(pot),
                field,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    fn gs() -> &'static GroundState {
        GroundState::certified().unwrap()
    }

    #[test]
    fn free_cubic_has_double_root_at_one() {
        let k = threshold_cubic(gs(), 0.0);
        let e0 = gs().e0;
        // 2 s^3 - 3 s^2 + 1 = (s - 1)^2 (2 s + 1)
        assert_eq!(k, [e0, 0.0, -3.0 * e0, 2.0 * e0]);
        let eval = |s: f64| k[0] + k[2] * s * s + k[3] * s * s * s;
        assert!(eval(1.0).abs() < 1e-12);
        assert!(eval(0.5) > 0.0 && eval(2.0) > 0.0);
    }

    #[test]
    fn scaling_rejects_free_potential() {
        let grid = Grid::Radial(RadialGrid::new(30.0, 1024).unwrap());
        assert!(make_threshold_scaling(&PotentialSpec::free(), gs(), Branch::Sub, &grid).is_err());
    }

    #[test]
    fn both_branches_sit_on_threshold() {
        let grid = Grid::Radial(RadialGrid::new(30.0, 1024).unwrap());
        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        let sub = make_threshold_scaling(&pot, gs(), Branch::Sub, &grid).unwrap();
        let sup = make_threshold_scaling(&pot, gs(), Branch::Super, &grid).unwrap();
        assert!(sub.s < 1.0 && sub.virial > 0.0);
        assert!(sup.s > 1.0 && sup.virial < 0.0);
        assert!(sub.threshold_residual < 1e-8 && sup.threshold_residual < 1e-8);
        // the grid cubic agrees with the Pohozaev form up to quadrature error
        let v_q = crate::functionals::potential_term(&gs().sample(&grid, [0.0; 3]).unwrap(), &pot);
        let k = threshold_cubic(gs(), v_q);
        for s in [sub.s, sup.s] {
            let val = k[0] + k[2] * s * s + k[3] * s * s * s;
            assert!(val.abs() < 1e-6 * gs().e0, "{val}");
        }
    }

    #[test]
    fn rescaling_preserves_threshold_product() {
        let grid = Grid::default_radial();
        let q = gs().sample(&grid, [0.0; 3]).unwrap();
        let id = rescale_to_threshold_mass(&q, &PotentialSpec::free(), gs()).unwrap();
        assert!((id.lambda - 1.0).abs() < 1e-9);
        assert!(id.field.sub(&q).unwrap().sup_norm() < 1e-6);

        let two_q = q.scaled(Complex64::new(2.0, 0.0));
        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        let r = rescale_to_threshold_mass(&two_q, &pot, gs()).unwrap();
        assert!((r.lambda - 4.0).abs() < 1e-8);
        assert!(r.mass_residual < 1e-8);
        assert_eq!(r.potential.mu, 1.5);
        assert!((r.potential.a - 4f64.powf(0.5)).abs() < 1e-7);
    }
}
