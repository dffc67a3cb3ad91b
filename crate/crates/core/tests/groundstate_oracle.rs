//! Reference values for the ground state from an independent integrator.
//!
//! The oracle integrates the ODE in its original `(Q, Q')` form with a
//! sixth-order series start at `r = 1e-3`, bisects on `Q(0)`, and evaluates
//! norms by trapezoid with Richardson extrapolation. It shares no code with the
//! library solver. The constants below were produced by `oracle(h)` for
//! `h = 1.25e-4, 6.25e-5` and agree to the digits shown.

use std::f64::consts::PI;

use nlsv_core::groundstate::{
    gn_constant, solve_ground_state_fixedpoint, solve_ground_state_shooting, GroundState,
};
use nlsv_core::grid::RadialGrid;

const ORACLE_Q0: f64 = 4.337_387_679_977;
const ORACLE_L2_SQ: f64 = 18.897_251_302_6;
const ORACLE_GRAD_SQ: f64 = 56.691_753_907_6;
const ORACLE_L4_FOURTH: f64 = 75.589_005_210;

struct Oracle {
    q0: f64,
    l2_sq: f64,
    grad_sq: f64,
    l4_fourth: f64,
}

fn shoot(q0: f64, h: f64, keep: bool) -> (bool, Vec<(f64, f64, f64)>) {
    let a2 = (q0 - q0.powi(3)) / 6.0;
    let a4 = (a2 - 3.0 * q0 * q0 * a2) / 20.0;
    let a6 = (a4 - 3.0 * q0 * q0 * a4 - 3.0 * q0 * a2 * a2) / 42.0;
    let r0 = 1e-3;
    let mut q = q0 + a2 * r0 * r0 + a4 * r0.powi(4) + a6 * r0.powi(6);
    let mut p = 2.0 * a2 * r0 + 4.0 * a4 * r0.powi(3) + 6.0 * a6 * r0.powi(5);
    let mut r = r0;
    let f = |r: f64, q: f64, p: f64| (p, -2.0 * p / r + q - q * q * q);
    let mut out = vec![(r, q, p)];
    while r < 40.0 {
        let (k1q, k1p) = f(r, q, p);
        let (k2q, k2p) = f(r + h / 2.0, q + h / 2.0 * k1q, p + h / 2.0 * k1p);
        let (k3q, k3p) = f(r + h / 2.0, q + h / 2.0 * k2q, p + h / 2.0 * k2p);
        let (k4q, k4p) = f(r + h, q + h * k3q, p + h * k3p);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        r += h;
        if q < 0.0 {
            return (true, out);
        }
        if p > 0.0 {
            return (false, out);
        }
        if keep {
            out.push((r, q, p));
        }
    }
    (false, out)
}

fn trapezoid_norms(h: f64) -> (f64, [f64; 3]) {
    let (mut lo, mut hi) = (2.0, 6.0);
    loop {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if shoot(m, h, false).0 {
            hi = m
        } else {
            lo = m
        }
    }
    let (_, tr) = shoot(lo, h, true);
    let w = 4.0 * PI;
    let r0: f64 = 1e-3;
    let mut l2 = w * lo * lo * r0.powi(3) / 3.0;
    let mut l4 = w * lo.powi(4) * r0.powi(3) / 3.0;
    let mut g = 0.0;
    let mut last = 0;
    for i in 1..tr.len() {
        let (r1, q1, p1) = tr[i - 1];
        let (r2, q2, p2) = tr[i];
        l2 += 0.5 * h * w * (r1 * r1 * q1 * q1 + r2 * r2 * q2 * q2);
        g += 0.5 * h * w * (r1 * r1 * p1 * p1 + r2 * r2 * p2 * p2);
        l4 += 0.5 * h * w * (r1 * r1 * q1.powi(4) + r2 * r2 * q2.powi(4));
        last = i;
        if q2 < 1e-5 {
            break;
        }
    }
    // linear tail A e^{-r}/r beyond the switch
    let (rm, qm, _) = tr[last];
    let a = qm * rm * rm.exp();
    l2 += 2.0 * PI * a * a * (-2.0 * rm).exp();
    let dh = 1e-3;
    let mut r = rm;
    while r < 60.0 {
        let x = r + dh / 2.0;
        g += dh * w * a * a * (-2.0 * x).exp() * (1.0 + 1.0 / x).powi(2);
        r += dh;
    }
    (lo, [l2, g, l4])
}

fn oracle(h: f64) -> Oracle {
    let (q0, coarse) = trapezoid_norms(2.0 * h);
    let (_, fine) = trapezoid_norms(h);
    let rich = |i: usize| fine[i] + (fine[i] - coarse[i]) / 3.0;
    Oracle {
        q0,
        l2_sq: rich(0),
        grad_sq: rich(1),
        l4_fourth: rich(2),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn oracle_is_converged_to_the_frozen_digits() {
    let a = oracle(2.5e-4);
    let b = oracle(1.25e-4);
    for (x, y, frozen) in [
        (a.q0, b.q0, ORACLE_Q0),
        (a.l2_sq, b.l2_sq, ORACLE_L2_SQ),
        (a.grad_sq, b.grad_sq, ORACLE_GRAD_SQ),
        (a.l4_fourth, b.l4_fourth, ORACLE_L4_FOURTH),
    ] {
        assert!(rel(x, y) < 1e-9, "step halving moved {x} -> {y}");
        assert!(rel(y, frozen) < 1e-9, "{y} vs frozen {frozen}");
    }
}

fn check_against_oracle(gs: &GroundState, tol: f64) {
    assert!(rel(gs.l2_sq, ORACLE_L2_SQ) < tol, "l2 {}", gs.l2_sq);
    assert!(rel(gs.grad_sq, ORACLE_GRAD_SQ) < tol, "grad {}", gs.grad_sq);
    assert!(rel(gs.l4_fourth, ORACLE_L4_FOURTH) < tol, "l4 {}", gs.l4_fourth);
    assert!(rel(2.0 * gs.mass_m, ORACLE_L2_SQ) < tol);
}

#[test]
fn shooting_matches_oracle() {
    let gs = solve_ground_state_shooting(1e-8).unwrap();
    assert!(rel(gs.q0, ORACLE_Q0) < 1e-10, "q0 {}", gs.q0);
    check_against_oracle(&gs, 1e-9);
    assert!(gs.residual <= 1e-8);
}

#[test]
fn renormalization_matches_oracle() {
    let grid = RadialGrid::new(30.0, 4096).unwrap();
    let gs = solve_ground_state_fixedpoint(&grid, 1e-12).unwrap();
    assert!(rel(gs.q0, ORACLE_Q0) < 1e-9, "q0 {}", gs.q0);
    check_against_oracle(&gs, 1e-9);
}

#[test]
fn gn_constant_matches_oracle_norms() {
    let gs = solve_ground_state_shooting(1e-8).unwrap();
    let c = gn_constant(&gs).unwrap();
    let expected = ORACLE_L4_FOURTH / (ORACLE_GRAD_SQ.powf(1.5) * ORACLE_L2_SQ.sqrt());
    assert!(rel(c, expected) < 1e-9, "{c} vs {expected}");
}
