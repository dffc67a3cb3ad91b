//! Off-grid tables built from the ground-state profile: the residual of the
//! cut-off travelling soliton and the constrained action of translated
//! ground states.
//!
//! Both integrands are axially symmetric about the line through the origin
//! and the soliton centre, so they reduce to 2D Gauss-Legendre quadrature
//! with no grid truncation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{smooth_step, PotentialSpec, VirialWeight};
use crate::groundstate::GroundState;
use crate::quadrature::composite_rule;

/// Radius beyond which the profile is treated as zero (`Q < 1e-17` there).
const PROFILE_REACH: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `chi(x) = eta(|x| / d)` with `eta = 0` below `1/4` and `1` above `1/2`.
    Smooth,
    /// `chi = 1`.
    None,
}

/// `[eta, eta', eta'']` at `u`.
fn eta(u: f64) -> [f64; 3] {
    let [s, s1, s2, _] = smooth_step(4.0 * (u - 0.25));
    [s, 4.0 * s1, 16.0 * s2]
}

/// L2 norms of the three residual pieces of `(1 - eps) e^(it) chi Q(x - x_n)`
/// at `t = 0`, `|x_n| = distance`:
///
/// * `cubic = [(1-eps)^3 chi^3 - (1-eps) chi] Q^3`
/// * `cutoff = (1-eps) [Q Delta chi + 2 grad chi . grad Q]`
/// * `potential = -(1-eps) V chi Q`
#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub distance: f64,
    pub cubic: f64,
    pub cutoff: f64,
    pub potential: f64,
    /// L2 norm of the sum.
    pub total: f64,
}

pub fn soliton_residual_decay(
    gs: &GroundState,
    eps: f64,
    distances: &[f64],
    pot: &PotentialSpec,
    cutoff: Cutoff,
) -> Result<Vec<ResidualRow>> {
    pot.validate()?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("eps", format!("must lie in [0, 1], got {eps}")));
    }
    if cutoff == Cutoff::None && !pot.is_free() && 2.0 * pot.mu >= 3.0 {
        return Err(Error::param(
            "cutoff",
            "without a cutoff V Q is not square integrable for mu >= 3/2",
        ));
    }
    let amp = 1.0 - eps;
    distances
        .iter()
        .map(|&d| {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::param("distances", format!("must be positive, got {d}")));
            }
            // Q-centred coordinates: x = x_n + s (cos th e + sin th e_perp)
            let s_rule = composite_rule(0.0, PROFILE_REACH.max(2.0 * d), 640);
            let th_rule = composite_rule(0.0, PI, 96);
            let mut acc = [0.0; 4];
            for &(s, ws) in &s_rule {
                let [q, q1, _] = gs.profile.eval(s);
                for &(th, wt) in &th_rule {
                    let (sin, cos) = th.sin_cos();
                    let rho = (d * d + s * s + 2.0 * d * s * cos).max(0.0).sqrt();
                    let [chi, dchi, ddchi] = match cutoff {
                        Cutoff::Smooth => {
                            let [e, e1, e2] = eta(rho / d);
                            [e, e1 / d, e2 / (d * d)]
                        }
                        Cutoff::None => [1.0, 0.0, 0.0],
                    };
                    let cubic = (amp.powi(3) * chi.powi(3) - amp * chi) * q.powi(3);
                    let cutoff_term = if dchi == 0.0 && ddchi == 0.0 {
                        0.0
                    } else {
                        let lap_chi = ddchi + 2.0 * dchi / rho;
                        let align = (d * cos + s) / rho;
                        amp * (q * lap_chi + 2.0 * dchi * q1 * align)
                    };
                    let potential = if chi == 0.0 { 0.0 } else { -amp * pot.value(rho) * chi * q };
                    let w = 2.0 * PI * s * s * sin * ws * wt;
                    acc[0] += w * cubic * cubic;
                    acc[1] += w * cutoff_term * cutoff_term;
                    acc[2] += w * potential * potential;
                    acc[3] += w * (cubic + cutoff_term + potential).powi(2);
                }
            }
            Ok(ResidualRow {
                distance: d,
                cubic: acc[0].sqrt(),
                cutoff: acc[1].sqrt(),
                potential: acc[2].sqrt(),
                total: acc[3].sqrt(),
            })
        })
        .collect()
}

/// `F_{R,0}[Q(. - y)]` with `|y| = d` by quadrature off the grid, in
/// origin-centred spherical coordinates: radial panels break at `R`, `2R`
/// and `d`; each sphere `|x| = r` is integrated in `rho = |x - y|`, where
/// `x/|x| . (x - y)/rho = (r^2 - d^2 + rho^2) / (2 r rho)`.
pub fn translated_soliton_virial(gs: &GroundState, d: f64, w: &VirialWeight) -> Result<f64> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::param("d", format!("must be >= 0, got {d}")));
    }
    let big = w.radius();
    let top = if w.is_infinite() { d + PROFILE_REACH } else { (2.0 * big).min(d + PROFILE_REACH) };
    let mut cuts = vec![0.0, top];
    for c in [big, 2.0 * big, d, (d - PROFILE_REACH).max(0.0)] {
        if c > 0.0 && c < top {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pointwise = |r: f64, rho: f64, c: f64| {
        let j = w.jet(r);
        let [q, q1, _] = gs.profile.eval(rho);
        let hess = j.w2 * c * c + (j.w1 / r) * (1.0 - c * c);
        4.0 * q1 * q1 * hess - j.bilap * q * q - j.lap * q.powi(4)
    };
    let sphere_mean = |r: f64| {
        if d == 0.0 {
            return pointwise(r, r, 1.0);
        }
        let (lo, hi) = ((r - d).abs(), (r + d).min(PROFILE_REACH));
        if hi <= lo {
            return 0.0;
        }
        let panels = ((hi - lo) / 0.05).ceil().max(1.0) as usize;
        let inner: f64 = composite_rule(lo, hi, panels)
            .into_iter()
            .map(|(rho, wt)| wt * rho * pointwise(r, rho, (r * r - d * d + rho * rho) / (2.0 * r * rho)))
            .sum();
        inner / (2.0 * r * d)
    };
    Ok(cuts
        .windows(2)
        .map(|c| {
            let panels = ((c[1] - c[0]) / 0.02).ceil().max(1.0) as usize;
            composite_rule(c[0], c[1], panels)
                .into_iter()
                .map(|(r, wt)| wt * 4.0 * PI * r * r * sphere_mean(r))
                .sum::<f64>()
        })
        .sum())
}

/// One entry of the constrained-action sweep over translations `|y|`.
#[derive(Clone, Debug, Serialize)]
pub struct DaRow {
    pub distance: f64,
    /// `int V Q(x - y)^2`.
    pub potential_term: f64,
    /// `t_y^2` with `P_V(t_y Q(. - y)) = 0`.
    pub t_sq: f64,
    /// `S_V(t_y Q(. - y)) = E_V + M`.
    pub action: f64,
    /// `action - S_0(Q)`.
    pub excess: f64,
}

/// `int V(x) Q(x - y)^2 dx` with `|y| = d`: the spherical mean of `Q^2`
/// over `|x| = r` integrated against `4 pi r^2 V(r)`, with `r = rho^2` to
/// soften the origin.
pub(crate) fn translated_potential_term(gs: &GroundState, pot: &PotentialSpec, d: f64) -> f64 {
    if pot.is_free() {
        return 0.0;
    }
    let q2s = |s: f64| {
        let q = gs.profile.value(s);
        q * q * s
    };
    let mean = |r: f64| {
        if d == 0.0 {
            let q = gs.profile.value(r);
            q * q
        } else {
            let (lo, hi) = ((r - d).abs(), r + d);
            let panels = ((hi - lo) / 0.25).ceil().max(1.0) as usize;
            let inner: f64 = composite_rule(lo, hi, panels).into_iter().map(|(s, w)| w * q2s(s)).sum();
            inner / (2.0 * r * d)
        }
    };
    let integrand = |rho: f64| {
        let r = rho * rho;
        4.0 * PI * r * r * pot.value(r) * mean(r) * 2.0 * rho
    };
    let top = (d + PROFILE_REACH).sqrt();
    let mut pieces = vec![0.0];
    if d > 0.0 {
        pieces.push(d.sqrt());
    }
    pieces.push(top);
    pieces
        .windows(2)
        .map(|w| {
            let panels = ((w[1] - w[0]) / 0.02).ceil().max(1.0) as usize;
            composite_rule(w[0], w[1], panels)
                .into_iter()
                .map(|(rho, wt)| wt * integrand(rho))
                .sum::<f64>()
        })
        .sum()
}

/// For `f = t Q(. - y)` the virial constraint is linear in `t^2`:
/// `t^2 = (2 ||grad Q||^2 + mu P_y) / (3/2 ||Q||_4^4)`, so no root solve is
/// needed; `S_V` then follows from the four ground-state integrals.
pub fn da_nonattainment_sweep(
    gs: &GroundState,
    pot: &PotentialSpec,
    distances: &[f64],
) -> Result<Vec<DaRow>> {
    pot.validate()?;
    let s0 = gs.e0 + gs.mass_m;
    distances
        .iter()
        .map(|&d| {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::param("distances", format!("must be >= 0, got {d}")));
            }
            let p = translated_potential_term(gs, pot, d);
            let t_sq = (2.0 * gs.grad_sq + pot.mu * p) / (1.5 * gs.l4_fourth);
            let action = 0.5 * t_sq * (gs.grad_sq + p + gs.l2_sq) - 0.25 * t_sq * t_sq * gs.l4_fourth;
            Ok(DaRow {
                distance: d,
                potential_term: p,
                t_sq,
                action,
                excess: action - s0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{potential_term, Ingredients};
    use crate::grid::{Grid, RadialGrid};
    use num_complex::Complex64;

    fn gs() -> &'static GroundState {
        GroundState::certified().unwrap()
    }

    #[test]
    fn eta_switches_between_quarter_and_half() {
        assert_eq!(eta(0.2), [0.0; 3]);
        assert_eq!(eta(0.6), [1.0, 0.0, 0.0]);
        let [e, e1, _] = eta(0.375);
        assert!((e - 0.5).abs() < 1e-12 && e1 > 0.0);
        // derivative by central difference
        let h = 1e-6;
        let fd = (eta(0.3 + h)[0] - eta(0.3 - h)[0]) / (2.0 * h);
        assert!((fd - eta(0.3)[1]).abs() < 1e-6);
        let fd2 = (eta(0.3 + h)[1] - eta(0.3 - h)[1]) / (2.0 * h);
        assert!((fd2 - eta(0.3)[2]).abs() < 1e-4 * eta(0.3)[2].abs().max(1.0));
    }

    #[test]
    fn exact_soliton_has_no_residual() {
        let rows = soliton_residual_decay(gs(), 0.0, &[3.0, 8.0], &PotentialSpec::free(), Cutoff::None).unwrap();
        for r in rows {
            assert_eq!((r.cubic, r.cutoff, r.potential, r.total), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn uncut_residual_matches_grid_norm() {
        // eps > 0, chi = 1, a = 0: the residual is [(1-eps)^3 - (1-eps)] Q^3
        let eps = 0.1;
        let rows = soliton_residual_decay(gs(), eps, &[5.0], &PotentialSpec::free(), Cutoff::None).unwrap();
        let grid = Grid::Radial(RadialGrid::new(30.0, 4096).unwrap());
        let q = gs().sample(&grid, [0.0; 3]).unwrap();
        let c = (1.0 - eps).powi(3) - (1.0 - eps);
        let want = c.abs() * q.lp_pow(6.0).sqrt();
        assert!((rows[0].cubic - want).abs() < 1e-8 * want, "{} vs {want}", rows[0].cubic);
    }

    #[test]
    fn potential_term_at_origin_matches_grid() {
        // int 4 pi r^(1/2) Q^2 dr by adaptive quadrature of an independent
        // shooting solution
        const ORACLE: f64 = 52.018_701_184_154;
        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        let got = translated_potential_term(gs(), &pot, 0.0);
        assert!((got - ORACLE).abs() < 1e-9 * ORACLE, "{got}");
        // the grid rule sees the r^(2 - mu) endpoint singularity at O(h^(3 - mu))
        let grid = Grid::Radial(RadialGrid::new(30.0, 4096).unwrap());
        let q = gs().sample(&grid, [0.0; 3]).unwrap();
        let on_grid = potential_term(&q, &pot);
        assert!((on_grid - ORACLE).abs() < 1e-3 * ORACLE, "{on_grid}");
        // far translates see V at the centre: int V Q(.-y)^2 ~ a |y|^-mu ||Q||^2
        let far = translated_potential_term(gs(), &pot, 30.0);
        let approx = 30f64.powf(-1.5) * gs().l2_sq;
        assert!((far - approx).abs() < 0.02 * approx, "{far} vs {approx}");
    }

    #[test]
    fn sweep_is_exact_at_zero_coupling() {
        let rows = da_nonattainment_sweep(gs(), &PotentialSpec::free(), &[0.0]).unwrap();
        assert!((rows[0].t_sq - 1.0).abs() < 1e-9);
        assert!(rows[0].excess.abs() < 1e-9 * gs().e0);
    }

    #[test]
    fn closed_form_scaling_zeroes_grid_virial() {
        let pot = PotentialSpec::new(1.0, 1.5).unwrap();
        let row = &da_nonattainment_sweep(gs(), &pot, &[0.0]).unwrap()[0];
        let grid = Grid::Radial(RadialGrid::new(30.0, 4096).unwrap());
        let f = gs().sample(&grid, [0.0; 3]).unwrap().scaled(Complex64::new(row.t_sq.sqrt(), 0.0));
        let ing = Ingredients::of(&f, &pot);
        // agreement limited by the grid error in int V Q^2
        assert!(ing.virial(&pot).abs() < 2e-3 * gs().grad_sq, "{}", ing.virial(&pot));
        assert!((ing.action() - row.action).abs() < 1e-3 * row.action);
    }

    #[test]
    fn translated_soliton_has_zero_localized_virial() {
        let gs = GroundState::certified().unwrap();
        for d in [0.0, 1.15, 4.0] {
            for big in [1.0, 2.0, 5.0, f64::INFINITY] {
                let f = translated_soliton_virial(gs, d, &VirialWeight::new(big).unwrap()).unwrap();
                assert!(f.abs() < 1e-8 * gs.grad_sq, "d = {d}, R = {big}: {f}");
            }
        }
    }
}
