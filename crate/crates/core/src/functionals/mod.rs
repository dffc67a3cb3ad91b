//! Scalar functionals of fields: conserved quantities, virial-type
//! functionals and the inequalities they obey.

mod inequalities;
mod virial;
mod weight;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::groundstate::GroundState;

pub use inequalities::{cauchy_schwarz_gap, hardy_check};
pub use virial::{
    blowup_weight_j, localized_virial_f, localized_virial_i, sharp_part_a, variance,
    variance_flux, virial_decomposition_remainder, PointDerivatives,
};
pub(crate) use virial::{localized_virial_f_with, localized_virial_i_with};
pub use weight::{phi_derivatives, plateau, VirialWeight, WeightJet};
pub(crate) use weight::smooth_step;

/// Repulsive potential `V(x) = a |x|^(-mu)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub a: f64,
    pub mu: f64,
}

impl PotentialSpec {
    /// Admits `a >= 0` and `0 < mu < 2`.
    pub fn new(a: f64, mu: f64) -> Result<Self> {
        let p = PotentialSpec { a, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn free() -> Self {
        PotentialSpec { a: 0.0, mu: 1.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::param("a", format!("must be >= 0, got {}", self.a)));
        }
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return Err(Error::param("mu", format!("must lie in (0, 2), got {}", self.mu)));
        }
        Ok(())
    }

    /// Dynamics additionally require `mu > 1` when `a > 0`.
    pub fn validate_for_dynamics(&self) -> Result<()> {
        self.validate()?;
        if self.a > 0.0 && self.mu <= 1.0 {
            return Err(Error::param(
                "mu",
                format!("dynamics need 1 < mu < 2 when a > 0, got {}", self.mu),
            ));
        }
        Ok(())
    }

    pub fn is_free(&self) -> bool {
        self.a == 0.0
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        if self.a == 0.0 {
            0.0
        } else {
            self.a * r.powf(-self.mu)
        }
    }

    /// Coupling after the mass rescaling `x -> lambda x`: `lambda^(2 - mu) a`.
    pub fn rescaled(&self, lambda: f64) -> PotentialSpec {
        PotentialSpec {
            a: lambda.powf(2.0 - self.mu) * self.a,
            mu: self.mu,
        }
    }
}

/// `M(u) = (1/2) int |u|^2`.
pub fn mass(f: &ComplexField) -> f64 {
    0.5 * f.l2_sq()
}

/// `int V |u|^2`.
pub fn potential_term(f: &ComplexField, pot: &PotentialSpec) -> f64 {
    if pot.is_free() {
        return 0.0;
    }
    let g = f.grid();
    f.quad(|idx, u| pot.value(g.radius(idx)) * u.norm_sqr())
}

/// The three ingredient integrals shared by most functionals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ingredients {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub pot_term: f64,
    pub l4_fourth: f64,
}

impl Ingredients {
    pub fn of(f: &ComplexField, pot: &PotentialSpec) -> Self {
        Ingredients {
            l2_sq: f.l2_sq(),
            grad_sq: f.gradient_norm_sq(),
            pot_term: potential_term(f, pot),
            l4_fourth: f.l4_fourth(),
        }
    }

    pub fn mass(&self) -> f64 {
        0.5 * self.l2_sq
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.grad_sq + 0.5 * self.pot_term - 0.25 * self.l4_fourth
    }

    pub fn adapted_norm_sq(&self) -> f64 {
        self.grad_sq + self.pot_term
    }

    pub fn virial(&self, pot: &PotentialSpec) -> f64 {
        2.0 * self.grad_sq + pot.mu * self.pot_term - 1.5 * self.l4_fourth
    }

    pub fn action(&self) -> f64 {
        self.energy() + 0.5 * self.l2_sq
    }

    pub fn nehari(&self) -> f64 {
        self.grad_sq + self.l2_sq + self.pot_term - self.l4_fourth
    }

    pub fn delta(&self, gs: &GroundState) -> f64 {
        gs.hdot1_sq() - self.adapted_norm_sq()
    }
}

/// `E_V(u) = (1/2)||grad u||^2 + (1/2) int V|u|^2 - (1/4)||u||_4^4`.
pub fn energy(f: &ComplexField, pot: &PotentialSpec) -> f64 {
    Ingredients::of(f, pot).energy()
}

/// `||grad u||^2 + int V |u|^2`.
pub fn adapted_norm_sq(f: &ComplexField, pot: &PotentialSpec) -> f64 {
    f.gradient_norm_sq() + potential_term(f, pot)
}

/// `P_V(u) = 2||grad u||^2 + mu int V|u|^2 - (3/2)||u||_4^4`.
pub fn virial(f: &ComplexField, pot: &PotentialSpec) -> f64 {
    Ingredients::of(f, pot).virial(pot)
}

/// `S_V(u) = E_V(u) + (1/2)||u||^2`.
pub fn action(f: &ComplexField, pot: &PotentialSpec) -> f64 {
    Ingredients::of(f, pot).action()
}

/// `N_V(u) = ||grad u||^2 + ||u||^2 + int V|u|^2 - ||u||_4^4`.
pub fn nehari(f: &ComplexField, pot: &PotentialSpec) -> f64 {
    Ingredients::of(f, pot).nehari()
}

/// `delta(u) = ||Q||^2_{Hdot^1} - ||u||^2_{Hdot^1_V}`.
pub fn delta(f: &ComplexField, pot: &PotentialSpec, gs: &GroundState) -> f64 {
    gs.hdot1_sq() - adapted_norm_sq(f, pot)
}

/// `||u||^2_{H^1} = ||u||^2 + ||grad u||^2`.
pub fn h1_norm_sq(f: &ComplexField) -> f64 {
    f.l2_sq() + f.gradient_norm_sq()
}

#[inline]
pub(crate) fn im_conj_mul(a: Complex64, b: Complex64) -> f64 {
    (a.conj() * b).im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_profile;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn gs() -> &'static GroundState {
        GroundState::certified().unwrap()
    }

    #[test]
    fn potential_spec_ranges() {
        assert!(PotentialSpec::new(1.0, 1.5).is_ok());
        assert!(PotentialSpec::new(-1.0, 1.5).is_err());
        assert!(PotentialSpec::new(1.0, 2.5).is_err());
        assert!(PotentialSpec::new(1.0, 0.5).unwrap().validate_for_dynamics().is_err());
        assert!(PotentialSpec::new(0.0, 0.5).unwrap().validate_for_dynamics().is_ok());
    }

    #[test]
    fn zero_field_functionals_vanish() {
        let z = ComplexField::zeros(&Grid::default_radial());
        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        assert_eq!(mass(&z), 0.0);
        assert_eq!(energy(&z, &pot), 0.0);
        assert_eq!(adapted_norm_sq(&z, &pot), 0.0);
        assert_eq!(virial(&z, &pot), 0.0);
        assert_eq!(action(&z, &pot), 0.0);
        assert_eq!(nehari(&z, &pot), 0.0);
        assert_eq!(delta(&z, &pot, gs()), gs().grad_sq);
        assert!((delta(&z, &pot, gs()) - 6.0 * gs().e0).abs() < 1e-6 * gs().e0);
    }

    #[test]
    fn gaussian_mass() {
        let g = Grid::default_radial();
        let f = sample_profile(&g, |r| (-r * r / 2.0).exp(), [0.0; 3]).unwrap();
        assert!((mass(&f) - 0.5 * PI.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn ground_state_free_functionals() {
        let gs = gs();
        let grid = Grid::default_radial();
        let q = gs.sample(&grid, [0.0; 3]).unwrap();
        let free = PotentialSpec::free();
        let e0 = gs.e0;
        assert!((mass(&q) - gs.mass_m).abs() < 1e-9 * e0);
        assert!((mass(&q) - e0).abs() < 1e-8 * e0);
        assert!((energy(&q, &free) - e0).abs() < 1e-8 * e0);
        assert!(virial(&q, &free).abs() < 1e-7 * e0);
        assert!(nehari(&q, &free).abs() < 1e-7 * e0);
        assert!((action(&q, &free) - 2.0 * e0).abs() < 1e-8 * e0);
        assert!(delta(&q, &free, gs).abs() < 1e-7 * e0);

        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        let vq = potential_term(&q, &pot);
        assert!(vq > 0.0);
        assert!((energy(&q, &pot) - (e0 + 0.5 * vq)).abs() < 1e-8 * e0);
        assert!((virial(&q, &pot) - 1.5 * vq).abs() < 1e-7 * e0);
        assert!((nehari(&q, &pot) - vq).abs() < 1e-7 * e0);
        let big = q.scaled(Complex64::new(1.2, 0.0));
        assert!(delta(&big, &pot, gs) < 0.0);
        assert_eq!(adapted_norm_sq(&q, &free), q.gradient_norm_sq());
    }
}
