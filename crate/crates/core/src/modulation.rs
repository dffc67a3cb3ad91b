//! Modulation of near-soliton states: `u = e^(i theta) [g + Q(. - y)]` with
//! `g = g1 + i g2` orthogonal to `Q(. - y)` (imaginary part) and to
//! `grad Q(. - y)` (real part), then `g = alpha Q(. - y) + h`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::{Ingredients, PotentialSpec};
use crate::grid::Grid;
use crate::groundstate::GroundState;

pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Convergence target for the orthogonality residuals, relative to `||Q||^2`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Default tracking window `delta0 / ||Q||^2_{Hdot1}`.
pub const DEFAULT_DELTA0_FRACTION: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct ModulationFit {
    pub theta: f64,
    pub y: [f64; 3],
    pub alpha: f64,
    pub g: ComplexField,
    pub h: ComplexField,
    /// `<g2, Q_y>, <g1, d_j Q_y>`; the translation entries are zero on radial grids.
    pub residuals: [f64; 4],
    /// `<h1, Delta Q_y>, <h2, Q_y>, <h1, d_j Q_y>`.
    pub h_residuals: [f64; 5],
    pub iterations: usize,
}

impl ModulationFit {
    /// `e^(i theta) [g + Q(. - y)]`.
    pub fn reconstruct(&self, gs: &GroundState) -> ComplexField {
        let frame = Frame::new(self.g.grid(), gs, self.y, false);
        let rot = Complex64::cis(self.theta);
        let values = self
            .g
            .values()
            .iter()
            .zip(&frame.q)
            .map(|(g, &q)| rot * (g + q))
            .collect();
        ComplexField::from_parts_unchecked(self.g.grid().clone(), values)
    }

    pub fn g_h1(&self) -> f64 {
        h1_norm(&self.g)
    }

    pub fn h_h1(&self) -> f64 {
        h1_norm(&self.h)
    }
}

fn h1_norm(f: &ComplexField) -> f64 {
    (f.gradient_norm_sq() + f.l2_sq()).sqrt()
}

/// `Q(. - y)` with its derivatives at the grid nodes.
struct Frame {
    q: Vec<f64>,
    lap: Vec<f64>,
    /// Spectral `d_j Q_y`, so that `<Q_y, d_j Q_y> = 0` holds on the grid as
    /// it does in the continuum; empty on radial grids.
    grad: Vec<[f64; 3]>,
    /// Upper triangle `d_j d_k Q_y` in the order 11, 12, 13, 22, 23, 33.
    hess: Vec<[f64; 6]>,
}

impl Frame {
    fn new(grid: &Grid, gs: &GroundState, y: [f64; 3], with_hessian: bool) -> Frame {
        let n = grid.len();
        let cart = !grid.is_radial();
        let mut f = Frame {
            q: Vec::with_capacity(n),
            lap: Vec::with_capacity(n),
            grad: Vec::new(),
            hess: Vec::with_capacity(if cart && with_hessian { n } else { 0 }),
        };
        for idx in 0..n {
            let (z, s) = if cart {
                let p = grid.point(idx);
                let z = [p[0] - y[0], p[1] - y[1], p[2] - y[2]];
                (z, (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt())
            } else {
                ([0.0; 3], grid.radius(idx))
            };
            let [q, q1, q2] = gs.profile.eval(s);
            f.q.push(q);
            f.lap.push(if s > 1e-12 { q2 + 2.0 * q1 / s } else { 3.0 * q2 });
            if !(cart && with_hessian) {
                continue;
            }
            if s <= 1e-12 {
                f.hess.push([q2, 0.0, 0.0, q2, 0.0, q2]);
                continue;
            }
            let e = [z[0] / s, z[1] / s, z[2] / s];
            let a = q2 - q1 / s;
            let b = q1 / s;
            f.hess.push([
                a * e[0] * e[0] + b,
                a * e[0] * e[1],
                a * e[0] * e[2],
                a * e[1] * e[1] + b,
                a * e[1] * e[2],
                a * e[2] * e[2] + b,
            ]);
        }
        if cart {
            let qf = ComplexField::from_parts_unchecked(
                grid.clone(),
                f.q.iter().map(|&q| Complex64::new(q, 0.0)).collect(),
            );
            let [gx, gy, gz] = qf.gradient();
            f.grad = (0..n).map(|i| [gx[i].re, gy[i].re, gz[i].re]).collect();
        }
        f
    }
}

fn hess_index(j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    match (j, k) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

fn centroid(u: &ComplexField) -> [f64; 3] {
    let grid = u.grid();
    let mut m = 0.0;
    let mut c = [0.0; 3];
    for (idx, v) in u.values().iter().enumerate() {
        let w = grid.weight(idx) * v.norm_sqr();
        let p = grid.point(idx);
        m += w;
        for k in 0..3 {
            c[k] += w * p[k];
        }
    }
    if m > 0.0 {
        c.map(|x| x / m)
    } else {
        [0.0; 3]
    }
}

/// Newton iteration on the orthogonality conditions. The initial guess is
/// `init`, or else the `|u|^2` centroid for `y` and `arg <Q_y, u>` for `theta`.
pub fn fit_modulation(
    u: &ComplexField,
    gs: &GroundState,
    init: Option<(f64, [f64; 3])>,
) -> Result<ModulationFit> {
    if let Some(node) = u.first_non_finite() {
        return Err(Error::NonFinite { node });
    }
    let grid = u.grid().clone();
    let cart = !grid.is_radial();
    let w: Vec<f64> = (0..grid.len()).map(|i| grid.weight(i)).collect();
    let q_norm = gs.l2_sq;
    let tol = ORTHOGONALITY_TOL * q_norm;
    let dims = if cart { 4 } else { 1 };

    let (mut theta, mut y) = match init {
        Some(i) => i,
        None => {
            let y0 = if cart { centroid(u) } else { [0.0; 3] };
            let frame = Frame::new(&grid, gs, y0, false);
            let proj: Complex64 = u
                .values()
                .iter()
                .zip(&frame.q)
                .zip(&w)
                .map(|((v, &q), &wi)| wi * q * v)
                .sum();
            (proj.arg(), y0)
        }
    };

    let mut residuals = [f64::NAN; 4];
    for it in 0..=MAX_NEWTON_ITERATIONS {
        let frame = Frame::new(&grid, gs, y, cart);
        let rot = Complex64::cis(-theta);
        let g: Vec<Complex64> = u
            .values()
            .iter()
            .zip(&frame.q)
            .map(|(v, &q)| rot * v - q)
            .collect();
        let mut f = [0.0; 4];
        let mut jac = [[0.0; 4]; 4];
        for i in 0..g.len() {
            let (g1, g2, q, wi) = (g[i].re, g[i].im, frame.q[i], w[i]);
            f[0] += wi * g2 * q;
            jac[0][0] -= wi * (g1 + q) * q;
            if cart {
                let dq = frame.grad[i];
                let hq = frame.hess[i];
                for j in 0..3 {
                    f[j + 1] += wi * g1 * dq[j];
                    jac[0][j + 1] -= wi * g2 * dq[j];
                    jac[j + 1][0] += wi * g2 * dq[j];
                    for k in 0..3 {
                        jac[j + 1][k + 1] += wi * (dq[k] * dq[j] - g1 * hq[hess_index(j, k)]);
                    }
                }
            }
        }
        residuals = f;
        if f[..dims].iter().all(|r| r.abs() <= tol) {
            // -jac[0][0] = <e^(-i theta) u, Q_y>; a non-positive projection
            // means the phase locked onto the wrong branch or u is far from
            // the soliton orbit
            if !(-jac[0][0] > 0.0) {
                return Err(Error::ModulationFailure {
                    iterations: it,
                    residuals: residuals[..dims].to_vec(),
                });
            }
            return Ok(finish(&grid, &w, theta, y, g, frame, residuals, it));
        }
        if it == MAX_NEWTON_ITERATIONS {
            break;
        }
        let step = solve(&jac, &f, dims).ok_or_else(|| Error::ModulationFailure {
            iterations: it,
            residuals: residuals.to_vec(),
        })?;
        theta -= step[0];
        for k in 0..dims - 1 {
            y[k] -= step[k + 1];
        }
        if !(theta.is_finite() && y.iter().all(|c| c.is_finite())) {
            break;
        }
    }
    Err(Error::ModulationFailure {
        iterations: MAX_NEWTON_ITERATIONS,
        residuals: residuals[..dims].to_vec(),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    grid: &Grid,
    w: &[f64],
    theta: f64,
    y: [f64; 3],
    g: Vec<Complex64>,
    frame: Frame,
    residuals: [f64; 4],
    iterations: usize,
) -> ModulationFit {
    let dot = |a: &dyn Fn(usize) -> f64, b: &[f64]| -> f64 {
        b.iter().enumerate().map(|(i, &bi)| w[i] * a(i) * bi).sum()
    };
    // alpha = <g1, Delta Q_y> / <Q_y, Delta Q_y>, both by the grid rule
    let num = dot(&|i| g[i].re, &frame.lap);
    let den = dot(&|i| frame.q[i], &frame.lap);
    let alpha = num / den;
    let h: Vec<Complex64> = g
        .iter()
        .zip(&frame.q)
        .map(|(gi, &q)| gi - alpha * q)
        .collect();
    let mut h_res = [0.0; 5];
    h_res[0] = dot(&|i| h[i].re, &frame.lap);
    h_res[1] = dot(&|i| h[i].im, &frame.q);
    if !frame.grad.is_empty() {
        for j in 0..3 {
            h_res[2 + j] = frame
                .grad
                .iter()
                .enumerate()
                .map(|(i, d)| w[i] * h[i].re * d[j])
                .sum();
        }
    }
    let theta = theta.rem_euclid(std::f64::consts::TAU);
    ModulationFit {
        theta,
        y,
        alpha,
        g: ComplexField::from_parts_unchecked(grid.clone(), g),
        h: ComplexField::from_parts_unchecked(grid.clone(), h),
        residuals,
        h_residuals: h_res,
        iterations,
    }
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve(a: &[[f64; 4]; 4], b: &[f64; 4], n: usize) -> Option<[f64; 4]> {
    let mut m = *a;
    let mut r = *b;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (r[row] - s) / m[row][row];
    }
    Some(x)
}

/// One tracked snapshot.
#[derive(Clone, Debug, Serialize)]
pub struct TrackPoint {
    pub t: f64,
    pub delta: f64,
    /// `int V |u|^2` at this time.
    pub pot_term: f64,
    pub theta: Option<f64>,
    pub y: Option<[f64; 3]>,
    pub alpha: Option<f64>,
    pub g_h1: Option<f64>,
    pub h_h1: Option<f64>,
    /// Largest orthogonality residual.
    pub residual: Option<f64>,
    pub error: Option<String>,
}

impl TrackPoint {
    pub fn fitted(&self) -> bool {
        self.error.is_none()
    }
}

/// Fits every snapshot with `|delta| < delta0`, warm-starting from the last
/// successful fit. Failures become points carrying the error.
pub fn modulation_track(traj: &Trajectory, gs: &GroundState, delta0: f64) -> Vec<TrackPoint> {
    let pot: PotentialSpec = traj.potential;
    let mut warm: Option<(f64, [f64; 3])> = None;
    let mut out = Vec::new();
    for snap in &traj.snapshots {
        let ing = Ingredients::of(&snap.field, &pot);
        let delta = ing.delta(gs);
        if !(delta.abs() < delta0) {
            continue;
        }
        let mut p = TrackPoint {
            t: snap.t,
            delta,
            pot_term: ing.pot_term,
            theta: None,
            y: None,
            alpha: None,
            g_h1: None,
            h_h1: None,
            residual: None,
            error: None,
        };
        match fit_modulation(&snap.field, gs, warm) {
            Ok(fit) => {
                warm = Some((fit.theta, fit.y));
                p.theta = Some(fit.theta);
                p.y = Some(fit.y);
                p.alpha = Some(fit.alpha);
                p.g_h1 = Some(fit.g_h1());
                p.h_h1 = Some(fit.h_h1());
                p.residual = Some(fit.residuals.iter().fold(0.0, |m, r| m.max(r.abs())));
            }
            Err(e) => p.error = Some(e.to_string()),
        }
        out.push(p);
    }
    out
}

/// Range of one ratio `quantity / |delta|` over the tracked points.
#[derive(Clone, Debug, Serialize)]
pub struct RatioBand {
    pub name: &'static str,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    /// Points where both the quantity and `delta` vanish.
    pub indeterminate: usize,
}

impl RatioBand {
    /// `max / min`; `1` when no determinate sample exists.
    pub fn spread(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else if self.min > 0.0 {
            self.max / self.min
        } else if self.max == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }

    pub fn bounded(&self) -> bool {
        self.samples == 0 || self.max.is_finite()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModulationReport {
    pub fits: usize,
    pub bands: Vec<RatioBand>,
    pub notes: Vec<String>,
}

impl ModulationReport {
    pub fn band(&self, name: &str) -> Option<&RatioBand> {
        self.bands.iter().find(|b| b.name == name)
    }

    pub fn all_bounded(&self) -> bool {
        self.bands.iter().all(RatioBand::bounded)
    }
}

/// Ratios of `||g||_{H1}`, `|alpha|`, `|alpha'|`, `|y'|`, `(int V|u|^2)^(1/2)`
/// and `e^(-2|y|) / |y|^2` to `|delta|` over the successful fits. Time
/// derivatives are central differences over the fit series.
pub fn modulation_inequality_report(points: &[TrackPoint]) -> Result<ModulationReport> {
    let fits: Vec<&TrackPoint> = points.iter().filter(|p| p.fitted()).collect();
    if fits.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "modulation report needs 3 fits, have {}",
            fits.len()
        )));
    }
    let n = fits.len();
    let deriv = |i: usize, f: &dyn Fn(&TrackPoint) -> f64| -> f64 {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        (f(fits[b]) - f(fits[a])) / (fits[b].t - fits[a].t)
    };
    let alpha = |p: &TrackPoint| p.alpha.unwrap_or(0.0);
    let y_of = |k: usize| move |p: &TrackPoint| p.y.map_or(0.0, |y| y[k]);
    let mut notes = Vec::new();
    let mut quantities: Vec<(&'static str, Vec<f64>)> = vec![
        ("g_h1", fits.iter().map(|p| p.g_h1.unwrap_or(0.0)).collect()),
        ("alpha", fits.iter().map(|p| alpha(p).abs()).collect()),
        ("alpha_dot", (0..n).map(|i| deriv(i, &alpha).abs()).collect()),
        ("potential", fits.iter().map(|p| p.pot_term.max(0.0).sqrt()).collect()),
    ];
    let radial = fits.iter().all(|p| p.y.is_some_and(|y| y == [0.0; 3]));
    if radial {
        notes.push("translation terms skipped: y is identically 0".to_string());
    } else {
        let y_dot = (0..n)
            .map(|i| {
                (0..3)
                    .map(|k| deriv(i, &y_of(k)).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        quantities.push(("y_dot", y_dot));
        let tail = fits
            .iter()
            .map(|p| {
                let r = p.y.map_or(0.0, |y| (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt());
                if r > 0.0 {
                    (-2.0 * r).exp() / (r * r)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        quantities.push(("tail", tail));
    }
    let bands = quantities
        .into_iter()
        .map(|(name, vals)| {
            let mut band = RatioBand {
                name,
                samples: 0,
                min: f64::INFINITY,
                max: 0.0,
                indeterminate: 0,
            };
            for (p, v) in fits.iter().zip(vals) {
                let d = p.delta.abs();
                if d == 0.0 && v.abs() < 1e-12 {
                    band.indeterminate += 1;
                    continue;
                }
                let ratio = v / d;
                band.samples += 1;
                band.min = band.min.min(ratio);
                band.max = band.max.max(ratio);
            }
            if band.samples == 0 {
                band.min = 0.0;
            }
            band
        })
        .collect::<Vec<_>>();
    if bands.iter().any(|b| b.indeterminate > 0) {
        notes.push("0/0 ratios at exact solitons counted as passing".to_string());
    }
    Ok(ModulationReport {
        fits: n,
        bands,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CartesianGrid, RadialGrid};
    use crate::random::{random_smooth_field, seeded_rng};

    fn gs() -> &'static GroundState {
        GroundState::certified().unwrap()
    }

    #[test]
    fn exact_soliton_fits_trivially() {
        let grid = Grid::Radial(RadialGrid::new(30.0, 1024).unwrap());
        let q = gs().sample(&grid, [0.0; 3]).unwrap();
        let u = q.scaled(Complex64::cis(0.3));
        let fit = fit_modulation(&u, gs(), None).unwrap();
        assert!((fit.theta - 0.3).abs() < 1e-12);
        assert_eq!(fit.y, [0.0; 3]);
        assert!(fit.g.sup_norm() < 1e-12 && fit.alpha.abs() < 1e-12);
    }

    #[test]
    fn amplitude_perturbation_is_pure_alpha() {
        let grid = Grid::Radial(RadialGrid::new(30.0, 1024).unwrap());
        let q = gs().sample(&grid, [0.0; 3]).unwrap();
        let u = q.scaled(Complex64::cis(0.3) * 1.01);
        let fit = fit_modulation(&u, gs(), None).unwrap();
        assert!((fit.theta - 0.3).abs() < 1e-12);
        assert!((fit.alpha - 0.01).abs() < 1e-12);
        assert!(fit.h.sup_norm() < 1e-12);
    }

    #[test]
    fn translated_fit_recovers_shift_and_reconstructs() {
        let grid = Grid::Cartesian(CartesianGrid::new(12.0, 48).unwrap());
        let y = [0.7, -0.4, 0.25];
        let q = gs().sample(&grid, y).unwrap();
        let mut rng = seeded_rng(11);
        let bump = random_smooth_field(&grid, &mut rng);
        let scale = 0.02 / bump.sup_norm();
        let u = q.add(&bump.scaled(Complex64::new(scale, 0.0))).unwrap().scaled(Complex64::cis(-0.4));
        let fit = fit_modulation(&u, gs(), None).unwrap();
        let tol = ORTHOGONALITY_TOL * gs().l2_sq;
        assert!(fit.residuals.iter().all(|r| r.abs() <= tol), "{:?}", fit.residuals);
        assert!(fit.h_residuals.iter().all(|r| r.abs() <= tol), "{:?}", fit.h_residuals);
        for k in 0..3 {
            assert!((fit.y[k] - y[k]).abs() < 0.05);
        }
        let back = fit.reconstruct(gs());
        let err = back.sub(&u).unwrap().l2_sq().sqrt() / u.l2_sq().sqrt();
        assert!(err < 1e-12, "{err}");

        // gauge: fitting e^(0.5 i) u shifts theta by 0.5 and leaves g alone
        let rotated = fit_modulation(&u.scaled(Complex64::cis(0.5)), gs(), None).unwrap();
        let dtheta = (rotated.theta - fit.theta - 0.5).rem_euclid(std::f64::consts::TAU);
        assert!(dtheta.min(std::f64::consts::TAU - dtheta) < 1e-9);
        assert!(rotated.g.sub(&fit.g).unwrap().sup_norm() < 1e-9);
    }

    #[test]
    fn far_field_fails_cleanly() {
        let grid = Grid::Radial(RadialGrid::new(30.0, 256).unwrap());
        let u = ComplexField::zeros(&grid);
        assert!(matches!(
            fit_modulation(&u, gs(), None),
            Err(Error::ModulationFailure { .. })
        ));
    }

    #[test]
    fn report_needs_three_fits_and_handles_zero_over_zero() {
        let p = TrackPoint {
            t: 0.0,
            delta: 0.0,
            pot_term: 0.0,
            theta: Some(0.0),
            y: Some([0.0; 3]),
            alpha: Some(0.0),
            g_h1: Some(0.0),
            h_h1: Some(0.0),
            residual: Some(0.0),
            error: None,
        };
        assert!(modulation_inequality_report(&[p.clone(), p.clone()]).is_err());
        let pts: Vec<TrackPoint> = (0..3).map(|i| TrackPoint { t: i as f64, ..p.clone() }).collect();
        let r = modulation_inequality_report(&pts).unwrap();
        assert!(r.all_bounded());
        assert!(r.bands.iter().all(|b| b.indeterminate == 3 && b.spread() == 1.0));
    }
}
