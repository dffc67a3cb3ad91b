//! The free ground state `Q`: positive radial solution of `-Delta Q + Q - Q^3 = 0`.
//!
//! Two independent solvers are provided. The shooting solver is the reference:
//! its norms are frozen in `ground_state.toml` and [`GroundState::certified`]
//! recomputes and checks them once per process.

mod profile;
mod renormalization;
mod shooting;

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{radial_synthesis, sample_profile, sine_coefficients, wall_slopes, ComplexField};
use crate::grid::{Grid, RadialGrid};

pub use profile::RadialProfile;
pub(crate) use profile::simpson;
pub use renormalization::RenormalizationOptions;
pub use shooting::ShootingOptions;

/// Default sup-norm tolerance on the equation residual.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shooting,
    Renormalization,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    pub method: Method,
    /// `Q(0)`.
    pub q0: f64,
    #[serde(skip)]
    pub profile: RadialProfile,
    /// `M(Q) = ||Q||^2 / 2`.
    pub mass_m: f64,
    pub grad_sq: f64,
    pub l4_fourth: f64,
    pub l2_sq: f64,
    /// `E_0(Q) = ||grad Q||^2 / 2 - ||Q||_4^4 / 4`.
    pub e0: f64,
    pub c_gn: f64,
    /// Sup norm of `-Delta Q + Q - Q^3` on the working grid.
    pub residual: f64,
}

impl GroundState {
    fn from_norms(
        method: Method,
        q0: f64,
        profile: RadialProfile,
        l2_sq: f64,
        grad_sq: f64,
        l4_fourth: f64,
        residual: f64,
    ) -> Self {
        GroundState {
            method,
            q0,
            profile,
            mass_m: 0.5 * l2_sq,
            grad_sq,
            l4_fourth,
            l2_sq,
            e0: 0.5 * grad_sq - 0.25 * l4_fourth,
            c_gn: l4_fourth / (grad_sq.powf(1.5) * l2_sq.sqrt()),
            residual,
        }
    }

    /// Shooting solution with default options, checked against the bundled
    /// constants. Computed once per process.
    pub fn certified() -> Result<&'static GroundState> {
        static CELL: OnceLock<std::result::Result<GroundState, String>> = OnceLock::new();
        CELL.get_or_init(|| {
            let gs = solve_ground_state_shooting(DEFAULT_RESIDUAL_TOL).map_err(|e| e.to_string())?;
            GroundStateConstants::bundled()
                .check(&gs, 1e-9)
                .map_err(|e| e.to_string())?;
            Ok(gs)
        })
        .as_ref()
        .map_err(|e| Error::InsufficientData(format!("ground state unavailable: {e}")))
    }

    /// `||Q||^2_{Hdot^1}`.
    pub fn hdot1_sq(&self) -> f64 {
        self.grad_sq
    }

    /// Threshold constant `E_0(Q) M(Q)`.
    pub fn threshold(&self) -> f64 {
        self.e0 * self.mass_m
    }

    /// Relative residuals of `E_0 = ||Q||^2/2 = ||grad Q||^2/6 = ||Q||_4^4/8`.
    pub fn pohozaev_residuals(&self) -> [f64; 3] {
        let e = self.e0;
        [
            (e - 0.5 * self.l2_sq).abs() / e,
            (e - self.grad_sq / 6.0).abs() / e,
            (e - self.l4_fourth / 8.0).abs() / e,
        ]
    }

    /// `Q(|x - center|)` sampled on `grid`.
    pub fn sample(&self, grid: &Grid, center: [f64; 3]) -> Result<ComplexField> {
        sample_profile(grid, |r| self.profile.value(r), center)
    }
}

/// Shooting solver with default options (`Q(0)` bracket `[1, 10]`).
pub fn solve_ground_state_shooting(tol: f64) -> Result<GroundState> {
    solve_ground_state_shooting_with(tol, &ShootingOptions::default(), &Grid::default_radial())
}

/// Shooting solver; `grid` is the working grid on which the residual is certified.
pub fn solve_ground_state_shooting_with(
    tol: f64,
    opts: &ShootingOptions,
    grid: &Grid,
) -> Result<GroundState> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let (q0, profile) = shooting::solve(opts)?;
    let [l2_sq, grad_sq, l4_fourth] = profile_norms(&profile);
    let residual = equation_residual(&sample_profile(grid, |r| profile.value(r), [0.0; 3])?);
    if !(residual <= tol) {
        return Err(Error::ToleranceUnreachable { residual, tol });
    }
    Ok(GroundState::from_norms(
        Method::Shooting,
        q0,
        profile,
        l2_sq,
        grad_sq,
        l4_fourth,
        residual,
    ))
}

/// Spectral renormalization from the Gaussian start `e^(-r^2)`.
pub fn solve_ground_state_fixedpoint(grid: &RadialGrid, tol: f64) -> Result<GroundState> {
    let start: Vec<f64> = grid.nodes().map(|r| (-r * r).exp()).collect();
    solve_ground_state_fixedpoint_from(grid, tol, &start, &RenormalizationOptions::default())
}

pub fn solve_ground_state_fixedpoint_from(
    grid: &RadialGrid,
    tol: f64,
    start: &[f64],
    opts: &RenormalizationOptions,
) -> Result<GroundState> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if start.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: start.len(),
        });
    }
    let (q, _) = renormalization::iterate(grid, start, tol, opts)?;
    let g = Grid::Radial(grid.clone());
    let field = ComplexField::new(g, q.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    let l2_sq = field.l2_sq();
    let grad_sq = field.gradient_norm_sq();
    let l4_fourth = field.l4_fourth();
    let residual = equation_residual(&field);
    let profile = spectral_profile(grid, &field);
    Ok(GroundState::from_norms(
        Method::Renormalization,
        profile.value(0.0),
        profile,
        l2_sq,
        grad_sq,
        l4_fourth,
        residual,
    ))
}

/// `sup |-Delta f + f - |f|^2 f|` with the spectral Laplacian of the field's grid.
pub fn equation_residual(f: &ComplexField) -> f64 {
    let lap = f.laplacian();
    f.values()
        .iter()
        .zip(lap.values())
        .map(|(&u, &l)| (-l + u - u * u.norm_sqr()).norm())
        .fold(0.0, f64::max)
}

/// `[||Q||^2, ||grad Q||^2, ||Q||_4^4]` by Simpson on the half-spaced table
/// plus the analytic tail out to `r = 60`.
fn profile_norms(p: &RadialProfile) -> [f64; 3] {
    let end = p.table_end();
    let n = 2 * ((end / p.spacing()).round() as usize);
    let m = ((60.0 - end) / p.spacing()).ceil() as usize;
    let integral = |g: &dyn Fn([f64; 3]) -> f64| {
        let f = |r: f64| 4.0 * PI * r * r * g(p.eval(r));
        simpson(f, 0.0, end, n) + simpson(f, end, 60.0, m)
    };
    [
        integral(&|q| q[0] * q[0]),
        integral(&|q| q[1] * q[1]),
        integral(&|q| q[0].powi(4)),
    ]
}

/// Tabulates the sine-series solution with spectral derivatives.
fn spectral_profile(grid: &RadialGrid, field: &ComplexField) -> RadialProfile {
    let u = field.values();
    let coeffs = sine_coefficients(grid, u);
    let lap_coeffs: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| -c * grid.wavenumber(k).powi(2))
        .collect();
    let slope = field.radial_derivative();
    let lap = field.laplacian();
    let (_, wall) = wall_slopes(grid, u);
    let r_max = grid.r_max();

    let mut value = vec![radial_synthesis(grid, &coeffs, 0.0).re];
    let mut dq = vec![0.0];
    let mut d2q = vec![radial_synthesis(grid, &lap_coeffs, 0.0).re / 3.0];
    for j in 0..grid.len() {
        let r = grid.node(j);
        value.push(u[j].re);
        dq.push(slope[j].re);
        d2q.push(lap.values()[j].re - 2.0 * slope[j].re / r);
    }
    let wall_slope = wall.re / r_max;
    value.push(0.0);
    dq.push(wall_slope);
    d2q.push(-2.0 * wall_slope / r_max);
    RadialProfile::new(grid.h(), value, dq, d2q, None)
}

/// Sharp Gagliardo-Nirenberg constant `||Q||_4^4 / (||grad Q||^3 ||Q||)`.
///
/// Fails if the Pohozaev-based identities `[C ||Q||]^(-2/3) = (3/4) ||Q||_4^(4/3)`
/// or `C = 8 E_0 / ((6 E_0)^(3/2) (2 E_0)^(1/2))` are off by more than `1e-8`.
pub fn gn_constant(gs: &GroundState) -> Result<f64> {
    let [idbg, closed] = gn_identity_residuals(gs);
    if !(idbg <= 1e-8) {
        return Err(Error::IdentityViolation {
            name: "gn_identity",
            residual: idbg,
            tol: 1e-8,
        });
    }
    if !(closed <= 1e-8) {
        return Err(Error::IdentityViolation {
            name: "gn_closed_form",
            residual: closed,
            tol: 1e-8,
        });
    }
    Ok(gs.l4_fourth / (gs.grad_sq.powf(1.5) * gs.l2_sq.sqrt()))
}

/// Relative residuals of the two identities checked by [`gn_constant`].
pub fn gn_identity_residuals(gs: &GroundState) -> [f64; 2] {
    let c = gs.l4_fourth / (gs.grad_sq.powf(1.5) * gs.l2_sq.sqrt());
    let lhs = (c * gs.l2_sq.sqrt()).powf(-2.0 / 3.0);
    let rhs = 0.75 * gs.l4_fourth.powf(1.0 / 3.0);
    let e = gs.e0;
    let closed = 8.0 * e / ((6.0 * e).powf(1.5) * (2.0 * e).sqrt());
    [(lhs - rhs).abs() / rhs, (c - closed).abs() / closed]
}

/// Slack `C_GN ||grad f||^3 ||f|| - ||f||_4^4` of the sharp GN inequality.
pub fn gn_inequality_check(f: &ComplexField, gs: &GroundState) -> f64 {
    let grad = f.gradient_norm_sq();
    let l2 = f.l2_sq();
    let l4 = f.l4_fourth();
    gs.c_gn * grad.powf(1.5) * l2.sqrt() - l4
}

/// Versioned reference values written by the shooting solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateConstants {
    pub version: u32,
    pub q0: f64,
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub l4_fourth: f64,
    pub e0: f64,
    pub mass: f64,
    pub c_gn: f64,
}

impl GroundStateConstants {
    pub fn bundled() -> GroundStateConstants {
        toml::from_str(include_str!("ground_state.toml")).expect("bundled constants parse")
    }

    /// TOML text in the layout of the bundled file, header comment included.
    pub fn to_toml(&self) -> String {
        let header = include_str!("ground_state.toml")
            .lines()
            .take_while(|l| l.starts_with('#'))
            .fold(String::new(), |acc, l| acc + l + "\n");
        header + &toml::to_string(self).expect("constants serialize")
    }

    pub fn from_ground_state(gs: &GroundState) -> GroundStateConstants {
        GroundStateConstants {
            version: 1,
            q0: gs.q0,
            l2_sq: gs.l2_sq,
            grad_sq: gs.grad_sq,
            l4_fourth: gs.l4_fourth,
            e0: gs.e0,
            mass: gs.mass_m,
            c_gn: gs.c_gn,
        }
    }

    /// Largest relative deviation must stay below `tol`.
    pub fn check(&self, gs: &GroundState, tol: f64) -> Result<()> {
        let fresh = GroundStateConstants::from_ground_state(gs);
        let pairs = [
            (self.q0, fresh.q0),
            (self.l2_sq, fresh.l2_sq),
            (self.grad_sq, fresh.grad_sq),
            (self.l4_fourth, fresh.l4_fourth),
            (self.e0, fresh.e0),
            (self.mass, fresh.mass),
            (self.c_gn, fresh.c_gn),
        ];
        let worst = pairs
            .iter()
            .map(|(a, b)| (a - b).abs() / a.abs())
            .fold(0.0, f64::max);
        if worst > tol {
            return Err(Error::IdentityViolation {
                name: "bundled_ground_state_constants",
                residual: worst,
                tol,
            });
        }
        Ok(())
    }
}
