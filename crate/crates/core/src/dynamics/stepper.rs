//! Strang splitting for `i u_t + Delta u - V u + |u|^2 u = 0`.
//!
//! On the periodic box the potential joins the pointwise phase and the
//! linear substep is the Fourier multiplier `exp(-i dt |k|^2)`. On the radial
//! grid the nodes reach down to `r = h`, where `exp(-i dt V)` with
//! `V ~ r^(-mu)` has a gradient of order `dt h^(-mu-1)`; each phase substep
//! then injects kinetic energy that grows without bound as `h -> 0`. There
//! the linear substep propagates `H = -Delta + V` exactly instead, by a
//! Chebyshev expansion of `exp(-i dt H)`, and the phase carries `|u|^2` only.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{k_sq, ComplexField};
use crate::functionals::PotentialSpec;
use crate::grid::{Grid, RadialGrid};

/// Chebyshev terms are dropped once `|J_k|` falls below this.
const CHEBYSHEV_CUTOFF: f64 = 1e-18;

/// Reusable split-step propagator. Holds the potential sampled at the nodes
/// and the linear multiplier (or Chebyshev coefficients) for the most recent
/// `dt`, so repeated steps with an unchanged `dt` only pay for the transforms
/// and the pointwise phases.
#[derive(Clone, Debug)]
pub struct SplitStepper {
    grid: Grid,
    potential: Vec<f64>,
    symbol: Vec<f64>,
    nonlinear: bool,
    /// Radial grid with a nonzero potential: `V` lives in the linear substep.
    potential_in_linear: bool,
    cached_dt: f64,
    multiplier: Vec<Complex64>,
    chebyshev: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(grid: &Grid, pot: &PotentialSpec) -> Result<Self> {
        pot.validate_for_dynamics()?;
        let potential = (0..grid.len()).map(|idx| pot.value(grid.radius(idx))).collect();
        Ok(Self::build(grid, potential, true))
    }

    /// Free linear flow `i u_t + Delta u = 0`.
    pub fn linear(grid: &Grid) -> Self {
        Self::build(grid, vec![0.0; grid.len()], false)
    }

    fn build(grid: &Grid, potential: Vec<f64>, nonlinear: bool) -> Self {
        let symbol = match grid {
            Grid::Radial(g) => (0..g.len()).map(|k| g.wavenumber(k).powi(2)).collect(),
            Grid::Cartesian(g) => (0..g.len()).map(|idx| k_sq(g, idx)).collect(),
        };
        let potential_in_linear = grid.is_radial() && potential.iter().any(|&p| p != 0.0);
        SplitStepper {
            grid: grid.clone(),
            potential,
            symbol,
            nonlinear,
            potential_in_linear,
            cached_dt: f64::NAN,
            multiplier: Vec::new(),
            chebyshev: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `V` at each node.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// One Strang step of size `dt` in place. Returns the first non-finite
    /// node, if any; the caller decides whether that is fatal.
    pub fn step(&mut self, u: &mut [Complex64], dt: f64) -> Option<usize> {
        assert_eq!(u.len(), self.grid.len());
        self.phase(u, 0.5 * dt);
        self.linear_step(u, dt);
        self.phase(u, 0.5 * dt);
        u.iter().position(|v| !(v.re.is_finite() && v.im.is_finite()))
    }

    fn phase(&self, u: &mut [Complex64], tau: f64) {
        if self.potential_in_linear {
            if self.nonlinear {
                for v in u.iter_mut() {
                    *v *= Complex64::cis(tau * v.norm_sqr());
                }
            }
        } else if self.nonlinear {
            for (v, &pot) in u.iter_mut().zip(&self.potential) {
                *v *= Complex64::cis(tau * (v.norm_sqr() - pot));
            }
        } else if self.potential.iter().any(|&p| p != 0.0) {
            for (v, &pot) in u.iter_mut().zip(&self.potential) {
                *v *= Complex64::cis(-tau * pot);
            }
        }
    }

    fn linear_step(&mut self, u: &mut [Complex64], dt: f64) {
        if self.potential_in_linear {
            let Grid::Radial(g) = &self.grid else {
                unreachable!("potential joins the linear substep on radial grids only")
            };
            let (lo, hi) = self.spectral_bounds(g);
            let (centre, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
            if dt != self.cached_dt {
                self.chebyshev = chebyshev_coefficients(dt * half);
                self.cached_dt = dt;
            }
            let mut v: Vec<Complex64> = u
                .iter()
                .enumerate()
                .map(|(j, &uj)| uj * g.node(j))
                .collect();
            chebyshev_apply(&mut v, &self.chebyshev, |x| {
                let mut y = self.apply_h(g, x);
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = (*yi - centre * xi) / half;
                }
                y
            });
            let shift = Complex64::cis(-dt * centre);
            for (j, (uj, vj)) in u.iter_mut().zip(v).enumerate() {
                *uj = shift * vj / g.node(j);
            }
            return;
        }
        if dt != self.cached_dt {
            self.multiplier = self.symbol.iter().map(|&k2| Complex64::cis(-dt * k2)).collect();
            self.cached_dt = dt;
        }
        match &self.grid {
            Grid::Radial(g) => {
                let v: Vec<Complex64> = u
                    .iter()
                    .enumerate()
                    .map(|(j, &uj)| uj * g.node(j))
                    .collect();
                let mut coeffs = g.plan().forward(&v);
                for (c, m) in coeffs.iter_mut().zip(&self.multiplier) {
                    *c *= m;
                }
                let v = g.plan().inverse(&coeffs);
                for (j, (uj, vj)) in u.iter_mut().zip(v).enumerate() {
                    *uj = vj / g.node(j);
                }
            }
            Grid::Cartesian(g) => {
                g.plan().forward(u);
                for (c, m) in u.iter_mut().zip(&self.multiplier) {
                    *c *= m;
                }
                g.plan().inverse(u);
            }
        }
    }
}

impl SplitStepper {
    /// `0 < H <= kappa_max^2 + max V` in the `v = r u` representation.
    fn spectral_bounds(&self, g: &RadialGrid) -> (f64, f64) {
        let vmax = self.potential.iter().cloned().fold(0.0, f64::max);
        let kmax = g.wavenumber(g.len() - 1);
        (0.0, kmax * kmax + vmax)
    }

    /// `(-d^2/dr^2 + V) v` with the sine-spectral second derivative.
    fn apply_h(&self, g: &RadialGrid, v: &[Complex64]) -> Vec<Complex64> {
        let mut coeffs = g.plan().forward(v);
        for (c, &k2) in coeffs.iter_mut().zip(&self.symbol) {
            *c *= k2;
        }
        let mut out = g.plan().inverse(&coeffs);
        for ((o, &vi), &p) in out.iter_mut().zip(v).zip(&self.potential) {
            *o += p * vi;
        }
        out
    }
}

/// Coefficients `(2 - delta_k0) (-i)^k J_k(x)` of
/// `exp(-i x y) = sum_k c_k T_k(y)` on `[-1, 1]`.
fn chebyshev_coefficients(x: f64) -> Vec<Complex64> {
    let j = bessel_j_sequence(x);
    let mut out = Vec::with_capacity(j.len());
    let mut rot = Complex64::new(1.0, 0.0);
    for (k, &jk) in j.iter().enumerate() {
        let weight = if k == 0 { 1.0 } else { 2.0 };
        out.push(rot * weight * jk);
        rot *= Complex64::new(0.0, -1.0);
    }
    out
}

/// `J_0(x), J_1(x), ...` for `x > 0`, truncated where the terms become
/// negligible, by Miller's backward recurrence normalized with
/// `J_0 + 2 sum J_2k = 1`.
fn bessel_j_sequence(x: f64) -> Vec<f64> {
    let top = (x + 30.0 + 6.0 * x.cbrt()).ceil() as usize;
    let start = top + 20 + (top % 2);
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in &mut j[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut j {
        *v /= norm;
    }
    let keep = j
        .iter()
        .rposition(|v| v.abs() > CHEBYSHEV_CUTOFF)
        .map_or(1, |k| k + 1)
        .max((x.ceil() as usize + 1).min(j.len()));
    j.truncate(keep);
    j
}

/// `v <- sum_k c_k T_k(A) v` by the three-term recurrence.
fn chebyshev_apply(
    v: &mut [Complex64],
    coeffs: &[Complex64],
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
) {
    let mut prev: Vec<Complex64> = v.to_vec();
    let mut acc: Vec<Complex64> = prev.iter().map(|&p| coeffs[0] * p).collect();
    if coeffs.len() > 1 {
        let mut cur = apply(&prev);
        for (a, &c) in acc.iter_mut().zip(&cur) {
            *a += coeffs[1] * c;
        }
        for &ck in &coeffs[2..] {
            let mut next = apply(&cur);
            for (n, &p) in next.iter_mut().zip(&prev) {
                *n = 2.0 * *n - p;
            }
            for (a, &nx) in acc.iter_mut().zip(&next) {
                *a += ck * nx;
            }
            prev = cur;
            cur = next;
        }
    }
    v.copy_from_slice(&acc);
}

/// One Strang step: half pointwise phase `exp(i dt/2 (|u|^2 - V))`, exact
/// linear propagation `exp(-i dt |k|^2)`, half phase again. On radial grids
/// `V` moves from the phase into the linear substep (see the module docs).
pub fn strang_step(u: &ComplexField, dt: f64, pot: &PotentialSpec) -> Result<ComplexField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let mut stepper = SplitStepper::new(u.grid(), pot)?;
    let mut values = u.values().to_vec();
    if let Some(node) = stepper.step(&mut values, dt) {
        return Err(Error::Underresolved { node });
    }
    ComplexField::new(u.grid().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::groundstate::GroundState;

    #[test]
    fn bessel_values() {
        let j = bessel_j_sequence(1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0);
        assert!((j[5] + 0.234_061_528_186_793_6).abs() < 1e-14);
        let j = bessel_j_sequence(1e-6);
        assert!((j[0] - 1.0).abs() < 1e-12 && (j[1] - 5e-7).abs() < 1e-18);
    }

    #[test]
    fn chebyshev_series_reproduces_exponential() {
        for &x in &[0.3, 4.0, 57.0] {
            let c = chebyshev_coefficients(x);
            for &y in &[-1.0, -0.37, 0.0, 0.81, 1.0] {
                let (mut t0, mut t1) = (1.0, y);
                let mut sum = c[0] + c[1] * y;
                for ck in &c[2..] {
                    let t2 = 2.0 * y * t1 - t0;
                    sum += ck * t2;
                    t0 = t1;
                    t1 = t2;
                }
                assert!((sum - Complex64::cis(-x * y)).norm() < 1e-13, "x {x} y {y}");
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let grid = Grid::default_radial();
        let u = ComplexField::zeros(&grid);
        let out = strang_step(&u, 0.37, &PotentialSpec::new(1.0, 1.5).unwrap()).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let grid = Grid::default_radial();
        let u = ComplexField::zeros(&grid);
        assert!(strang_step(&u, 0.0, &PotentialSpec::free()).is_err());
        assert!(strang_step(&u, -1e-3, &PotentialSpec::free()).is_err());
    }

    #[test]
    fn mass_is_preserved_per_step() {
        let grid = Grid::default_radial();
        let gs = GroundState::certified().unwrap();
        let q = gs.sample(&grid, [0.0; 3]).unwrap().scaled(Complex64::new(1.2, 0.0));
        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        let mut stepper = SplitStepper::new(&grid, &pot).unwrap();
        let mut v = q.values().to_vec();
        for _ in 0..20 {
            assert!(stepper.step(&mut v, 1e-3).is_none());
        }
        let after = ComplexField::new(grid.clone(), v).unwrap();
        assert!((after.l2_sq() / q.l2_sq() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn free_gaussian_matches_exact_spreading() {
        let grid = Grid::Radial(RadialGrid::new(30.0, 2048).unwrap());
        let exact = |t: f64| {
            ComplexField::from_fn(&grid, move |p| {
                let z = Complex64::new(1.0, 2.0 * t);
                let r2 = p.r * p.r;
                z.powf(-1.5) * (-r2 / (2.0 * z)).exp()
            })
            .unwrap()
        };
        let mut stepper = SplitStepper::linear(&grid);
        let mut v = exact(0.0).into_values();
        for _ in 0..10 {
            stepper.step(&mut v, 0.1);
        }
        let got = ComplexField::new(grid.clone(), v).unwrap();
        let want = exact(1.0);
        let err = got.sub(&want).unwrap().l2_sq().sqrt() / want.l2_sq().sqrt();
        assert!(err < 1e-8, "{err}");
    }
}
