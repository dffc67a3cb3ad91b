//! Complex fields and the spectral calculus on them.
//!
//! Radial fields are handled through `v = r u`, which turns the 3-D radial
//! Laplacian into `v''` with Dirichlet walls and is diagonal in the sine basis.
//! Cartesian fields use plain Fourier multipliers. Every quadrature uses the
//! weights of [`Grid::weight`], which coincide with the natural inner product
//! of the respective spectral basis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{CartesianGrid, Grid, RadialGrid};

/// Location handed to position-dependent integrands.
#[derive(Clone, Copy, Debug)]
pub struct Position {
    pub x: [f64; 3],
    pub r: f64,
}

#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl ComplexField {
    /// Validates length and finiteness.
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { node });
        }
        Ok(ComplexField { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        ComplexField { grid, values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: vec![ZERO; grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Position) -> Complex64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|idx| {
                f(Position {
                    x: grid.point(idx),
                    r: grid.radius(idx),
                })
            })
            .collect();
        ComplexField::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Derivatives of real fields are real; drop transform round-off.
    fn match_realness(&self, out: &mut [Complex64]) {
        if self.is_real() {
            for v in out.iter_mut() {
                v.im = 0.0;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_at(&self, f: impl Fn(Complex64, Position) -> Complex64) -> ComplexField {
        let grid = &self.grid;
        ComplexField {
            grid: grid.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(idx, &v)| {
                    f(
                        v,
                        Position {
                            x: grid.point(idx),
                            r: grid.radius(idx),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn combine(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(ComplexField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.combine(other, |a, b| a - b)
    }

    /// `4 pi sum w_j r_j^2 g(u_j)` (radial) or `dx^3 sum g(u_j)` (Cartesian).
    ///
    /// Fails with the first node whose integrand is not finite.
    pub fn integrate(&self, integrand: impl Fn(Complex64) -> f64) -> Result<f64> {
        self.integrate_at(|u, _| integrand(u))
    }

    pub fn integrate_at(&self, integrand: impl Fn(Complex64, Position) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (idx, &u) in self.values.iter().enumerate() {
            let pos = Position {
                x: self.grid.point(idx),
                r: self.grid.radius(idx),
            };
            let g = integrand(u, pos);
            if !g.is_finite() {
                return Err(Error::NonFinite { node: idx });
            }
            acc += self.grid.weight(idx) * g;
        }
        Ok(acc)
    }

    /// Infallible weighted sum for integrands known to be finite.
    pub(crate) fn quad(&self, integrand: impl Fn(usize, Complex64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(idx, &u)| self.grid.weight(idx) * integrand(idx, u))
            .sum()
    }

    /// `int conj(self) * other`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(idx, (a, b))| self.grid.weight(idx) * a.conj() * b)
            .sum())
    }

    pub fn l2_sq(&self) -> f64 {
        self.quad(|_, u| u.norm_sqr())
    }

    pub fn lp_pow(&self, p: f64) -> f64 {
        self.quad(|_, u| u.norm().powf(p))
    }

    /// `int |u|^4`.
    pub fn l4_fourth(&self) -> f64 {
        self.quad(|_, u| u.norm_sqr() * u.norm_sqr())
    }

    /// `||grad u||^2`, evaluated in the spectral domain.
    pub fn gradient_norm_sq(&self) -> f64 {
        self.spectral_norm_sq(1.0)
    }

    /// `int |k|^(2s) |u_hat|^2`, i.e. `|| |grad|^s u ||^2`.
    pub fn spectral_norm_sq(&self, s: f64) -> f64 {
        match &self.grid {
            Grid::Radial(g) => {
                let coeffs = sine_coefficients(g, &self.values);
                let n = g.intervals() as f64;
                let sum: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| g.wavenumber(k).powf(2.0 * s) * c.norm_sqr())
                    .sum();
                4.0 * PI * 2.0 * g.h() / n * sum
            }
            Grid::Cartesian(g) => {
                let mut hat = self.values.clone();
                g.plan().forward(&mut hat);
                let total = g.len() as f64;
                let sum: f64 = hat
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| k_sq(g, idx).powf(s) * c.norm_sqr())
                    .sum();
                g.cell_volume() * sum / total
            }
        }
    }

    pub fn laplacian(&self) -> ComplexField {
        let mut values: Vec<Complex64> = match &self.grid {
            Grid::Radial(g) => {
                let mut coeffs = sine_coefficients(g, &self.values);
                for (k, c) in coeffs.iter_mut().enumerate() {
                    *c *= -g.wavenumber(k).powi(2);
                }
                let v = g.plan().inverse(&coeffs);
                v.iter()
                    .enumerate()
                    .map(|(j, &vj)| vj / g.node(j))
                    .collect()
            }
            Grid::Cartesian(g) => {
                let mut hat = self.values.clone();
                g.plan().forward(&mut hat);
                for (idx, c) in hat.iter_mut().enumerate() {
                    *c *= -k_sq(g, idx);
                }
                g.plan().inverse(&mut hat);
                hat
            }
        };
        self.match_realness(&mut values);
        ComplexField::from_parts_unchecked(self.grid.clone(), values)
    }

    /// Gradient components at every node. Radial fields return
    /// `[u_r, 0, 0]` (the radial derivative on the first slot).
    pub fn gradient(&self) -> [Vec<Complex64>; 3] {
        match &self.grid {
            Grid::Radial(g) => {
                let mut ur = radial_derivative(g, &self.values);
                self.match_realness(&mut ur);
                let n = ur.len();
                [ur, vec![ZERO; n], vec![ZERO; n]]
            }
            Grid::Cartesian(g) => {
                let mut hat = self.values.clone();
                g.plan().forward(&mut hat);
                let m = g.points_per_axis();
                let mut out: [Vec<Complex64>; 3] = Default::default();
                for (axis, comp) in out.iter_mut().enumerate() {
                    let mut d = hat.clone();
                    for (idx, c) in d.iter_mut().enumerate() {
                        let i = match axis {
                            0 => idx / (m * m),
                            1 => (idx / m) % m,
                            _ => idx % m,
                        };
                        *c *= Complex64::new(0.0, g.wavenumber(i));
                    }
                    g.plan().inverse(&mut d);
                    self.match_realness(&mut d);
                    *comp = d;
                }
                out
            }
        }
    }

    /// Radial derivative `x_hat . grad u` at every node.
    pub fn radial_derivative(&self) -> Vec<Complex64> {
        match &self.grid {
            Grid::Radial(g) => {
                let mut ur = radial_derivative(g, &self.values);
                self.match_realness(&mut ur);
                ur
            }
            Grid::Cartesian(_) => {
                let grad = self.gradient();
                (0..self.len())
                    .map(|idx| {
                        let p = self.grid.point(idx);
                        let r = self.grid.radius(idx);
                        (grad[0][idx] * p[0] + grad[1][idx] * p[1] + grad[2][idx] * p[2]) / r
                    })
                    .collect()
            }
        }
    }

    /// Radial fields: spectral evaluation of `u` at an arbitrary radius
    /// (zero outside the domain).
    pub fn radial_value_at(&self, coeffs: &[Complex64], r: f64) -> Complex64 {
        let g = self.grid.as_radial().expect("radial grid");
        radial_synthesis(g, coeffs, r)
    }

    /// Sine coefficients of `v = r u` (radial grids only).
    pub fn sine_coefficients(&self) -> Option<Vec<Complex64>> {
        self.grid
            .as_radial()
            .map(|g| sine_coefficients(g, &self.values))
    }

    /// Dilation `lambda * u(lambda x)` resampled on the same grid by exact
    /// trigonometric (Cartesian) or sine-series (radial) interpolation.
    pub fn dilated(&self, lambda: f64) -> Result<ComplexField> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        let values = match &self.grid {
            Grid::Radial(g) => {
                let coeffs = sine_coefficients(g, &self.values);
                g.nodes()
                    .map(|r| lambda * radial_synthesis(g, &coeffs, lambda * r))
                    .collect()
            }
            Grid::Cartesian(g) => {
                let targets: Vec<f64> = (0..g.points_per_axis())
                    .map(|i| lambda * g.coordinate(i))
                    .collect();
                let mut data = self.values.clone();
                let kernel = trig_interpolation_matrix(g, &targets);
                apply_separable(&mut data, g.points_per_axis(), &kernel);
                data.iter().map(|v| v * lambda).collect()
            }
        };
        ComplexField::new(self.grid.clone(), values)
    }
}

#[inline]
pub(crate) fn k_sq(g: &CartesianGrid, idx: usize) -> f64 {
    let m = g.points_per_axis();
    let kx = g.wavenumber(idx / (m * m));
    let ky = g.wavenumber((idx / m) % m);
    let kz = g.wavenumber(idx % m);
    kx * kx + ky * ky + kz * kz
}

pub(crate) fn sine_coefficients(g: &RadialGrid, u: &[Complex64]) -> Vec<Complex64> {
    let v: Vec<Complex64> = u.iter().enumerate().map(|(j, &uj)| uj * g.node(j)).collect();
    g.plan().forward(&v)
}

/// `u_r = (v' - v / r) / r` with `v'` from the cosine synthesis of the sine series.
pub(crate) fn radial_derivative(g: &RadialGrid, u: &[Complex64]) -> Vec<Complex64> {
    let coeffs = sine_coefficients(g, u);
    let n = g.intervals() as f64;
    let scaled: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (2.0 / n) * g.wavenumber(k))
        .collect();
    let dv = g.plan().cosine_synthesis(&scaled);
    u.iter()
        .enumerate()
        .map(|(j, &uj)| {
            let r = g.node(j);
            (dv[j + 1] - uj) / r
        })
        .collect()
}

/// `v'(r)` of the sine series at both walls, `(r = 0, r = r_max)`.
pub(crate) fn wall_slopes(g: &RadialGrid, u: &[Complex64]) -> (Complex64, Complex64) {
    let coeffs = sine_coefficients(g, u);
    let n = g.intervals() as f64;
    let mut at0 = ZERO;
    let mut at_max = ZERO;
    for (k, &c) in coeffs.iter().enumerate() {
        let a = c * (2.0 / n) * g.wavenumber(k);
        at0 += a;
        at_max += if (k + 1) % 2 == 0 { a } else { -a };
    }
    (at0, at_max)
}

pub(crate) fn radial_synthesis(g: &RadialGrid, coeffs: &[Complex64], r: f64) -> Complex64 {
    let n = g.intervals() as f64;
    if r >= g.r_max() {
        return ZERO;
    }
    let base = PI / g.r_max();
    if r < 1e-12 {
        let s: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * g.wavenumber(k))
            .sum();
        return s * (2.0 / n);
    }
    // sin(k theta) by rotation
    let step = Complex64::from_polar(1.0, base * r);
    let mut rot = step;
    let mut acc = ZERO;
    for &c in coeffs {
        acc += c * rot.im;
        rot *= step;
    }
    acc * (2.0 / n) / r
}

/// Row `a` holds the weights producing the trigonometric interpolant at `targets[a]`.
fn trig_interpolation_matrix(g: &CartesianGrid, targets: &[f64]) -> Vec<Vec<f64>> {
    let m = g.points_per_axis();
    let period = 2.0 * g.half_width();
    targets
        .iter()
        .map(|&t| {
            (0..m)
                .map(|i| {
                    let d = t - g.coordinate(i);
                    // (1/m) [1 + 2 sum_{q<m/2} cos(kq d) + cos(k_{m/2} d)]
                    let mut w = 1.0;
                    for q in 1..m / 2 {
                        w += 2.0 * (2.0 * PI * q as f64 * d / period).cos();
                    }
                    w += (PI * m as f64 * d / period).cos();
                    w / m as f64
                })
                .collect()
        })
        .collect()
}

fn apply_separable(data: &mut [Complex64], m: usize, kernel: &[Vec<f64>]) {
    let mut line = vec![ZERO; m];
    for axis in 0..3 {
        let stride = match axis {
            0 => m * m,
            1 => m,
            _ => 1,
        };
        for a in 0..m {
            for b in 0..m {
                let base = match axis {
                    0 => a * m + b,
                    1 => a * m * m + b,
                    _ => (a * m + b) * m,
                };
                for (t, row) in kernel.iter().enumerate() {
                    line[t] = row
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| data[base + i * stride] * w)
                        .sum();
                }
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride] = *v;
                }
            }
        }
    }
}

/// Pointwise samples of a radial profile centred at `center`.
///
/// Radial grids admit only the origin as centre.
pub fn sample_profile(
    grid: &Grid,
    profile: impl Fn(f64) -> f64,
    center: [f64; 3],
) -> Result<ComplexField> {
    if grid.is_radial() && center.iter().any(|&c| c != 0.0) {
        return Err(Error::Unsupported(
            "radial grids only admit profiles centred at the origin".into(),
        ));
    }
    ComplexField::from_fn(grid, |p| {
        let d = [p.x[0] - center[0], p.x[1] - center[1], p.x[2] - center[2]];
        let rho = if grid.is_radial() {
            p.r
        } else {
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        };
        Complex64::new(profile(rho), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CartesianGrid, RadialGrid};

    fn gaussian(grid: &Grid) -> ComplexField {
        sample_profile(grid, |r| (-0.5 * r * r).exp(), [0.0; 3]).unwrap()
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let g = Grid::default_radial();
        let f = ComplexField::zeros(&g);
        assert_eq!(f.integrate(|u| u.norm_sqr()).unwrap(), 0.0);
        assert_eq!(f.gradient_norm_sq(), 0.0);
        assert!(f.laplacian().is_zero());
    }

    #[test]
    fn gaussian_integrals_radial() {
        let g = Grid::default_radial();
        let f = gaussian(&g);
        let l2 = f.integrate(|u| u.norm_sqr()).unwrap();
        assert!((l2 - PI.powf(1.5)).abs() < 1e-10 * l2);
        let l4 = f.integrate(|u| u.norm_sqr().powi(2)).unwrap();
        assert!((l4 - (PI / 2.0).powf(1.5)).abs() < 1e-10 * l4);
        let grad = f.gradient_norm_sq();
        assert!((grad - 1.5 * PI.powf(1.5)).abs() < 1e-10 * grad);
    }

    #[test]
    fn gaussian_integrals_cartesian() {
        let g = Grid::Cartesian(CartesianGrid::new(8.0, 48).unwrap());
        let f = gaussian(&g);
        let l2 = f.l2_sq();
        assert!((l2 - PI.powf(1.5)).abs() < 1e-10 * l2);
        let grad = f.gradient_norm_sq();
        assert!((grad - 1.5 * PI.powf(1.5)).abs() < 1e-9 * grad);
    }

    #[test]
    fn non_finite_integrand_names_node() {
        let g = Grid::Radial(RadialGrid::new(10.0, 64).unwrap());
        let f = gaussian(&g);
        let err = f
            .integrate_at(|u, p| if p.r > 5.0 { f64::NAN } else { u.re })
            .unwrap_err();
        match err {
            Error::NonFinite { node } => {
                assert!(g.radius(node) > 5.0);
                assert!(g.radius(node - 1) <= 5.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sine_mode_is_laplacian_eigenfield() {
        let g = RadialGrid::new(30.0, 512).unwrap();
        let grid = Grid::Radial(g.clone());
        let k = 7.0;
        let kappa = k * PI / 30.0;
        let f = ComplexField::from_fn(&grid, |p| Complex64::new((kappa * p.r).sin() / p.r, 0.0))
            .unwrap();
        let lap = f.laplacian();
        for (a, b) in lap.values().iter().zip(f.values()) {
            assert!((a + kappa * kappa * b).norm() < 1e-10);
        }
    }

    #[test]
    fn nonzero_centre_rejected_on_radial_grid() {
        let g = Grid::default_radial();
        assert!(sample_profile(&g, |r| r, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn radial_dilation_matches_analytic_gaussian() {
        let g = Grid::Radial(RadialGrid::new(20.0, 1024).unwrap());
        let f = gaussian(&g);
        let lam = 1.7;
        let d = f.dilated(lam).unwrap();
        for (idx, v) in d.values().iter().enumerate() {
            let r = g.radius(idx);
            let exact = lam * (-0.5 * lam * lam * r * r).exp();
            assert!((v.re - exact).abs() < 1e-10, "r={r}");
        }
    }

    #[test]
    fn cartesian_dilation_matches_analytic_gaussian() {
        let g = Grid::Cartesian(CartesianGrid::new(8.0, 32).unwrap());
        let f = gaussian(&g);
        let lam = 0.8;
        let d = f.dilated(lam).unwrap();
        let err = d
            .values()
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let r = g.radius(idx);
                (v.re - lam * (-0.5 * lam * lam * r * r).exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "max error {err}");
    }
}
