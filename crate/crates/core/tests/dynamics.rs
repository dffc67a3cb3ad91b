//! Integration tests for the split-step integrator on reference trajectories.

use nlsv_core::dynamics::{
    evolve, evolve_backward, evolve_with, variance_convexity_check, virial_identity_check,
    DiagnosticsPlan, RunStatus, SolverSettings, TrajectorySide,
};
use nlsv_core::experiments::{classify, make_threshold_scaling, Branch, Outcome};
use nlsv_core::functionals::PotentialSpec;
use nlsv_core::groundstate::GroundState;
use nlsv_core::{sample_profile, Complex64, ComplexField, Grid, RadialGrid};

/// Unstable eigenvalue of the free linearization around Q: square root of the
/// negative eigenvalue of L- L+ (L+ = -Lap + 1 - 3Q^2, L- = -Lap + 1 - Q^2),
/// from a second-order finite-difference eigen-solve on [0, 20] with
/// h = 0.025, 0.0125, 0.00625 and Richardson extrapolation; Q from an
/// adaptive shooting integrator.
const ORACLE_LAMBDA: f64 = 5.4991;

fn radial(n: usize) -> Grid {
    Grid::Radial(RadialGrid::new(30.0, n).unwrap())
}

fn fixed_step(dt: f64, t_end: f64, record_every: usize) -> SolverSettings {
    let mut s = SolverSettings {
        dt0: dt,
        t_end,
        record_every,
        ..Default::default()
    };
    s.adapt.enabled = false;
    s
}

fn rel_distance(u: &ComplexField, v: &ComplexField) -> f64 {
    u.sub(v).unwrap().l2_sq().sqrt() / v.l2_sq().sqrt()
}

#[test]
fn free_soliton_rotates_in_phase_over_a_short_window() {
    let gs = GroundState::certified().unwrap();
    let q = gs.sample(&radial(1024), [0.0; 3]).unwrap();
    let t = 0.5;
    let err = |dt: f64| {
        let tr = evolve(&q, &PotentialSpec::free(), &fixed_step(dt, t, 100)).unwrap();
        assert_eq!(tr.status, RunStatus::Completed);
        rel_distance(&tr.final_field, &q.scaled(Complex64::cis(t)))
    };
    let (coarse, fine) = (err(2e-4), err(1e-4));
    assert!(fine < 2e-5, "{fine:e}");
    // second order in dt
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.3, "order {order}");
}

#[test]
fn unstable_mode_grows_at_the_linearized_rate() {
    let gs = GroundState::certified().unwrap();
    let q = gs.sample(&radial(1024), [0.0; 3]).unwrap();
    let u0 = q.scaled(Complex64::new(1.0 - 1e-6, 0.0));
    // records every 0.05
    let tr = evolve(&u0, &PotentialSpec::free(), &fixed_step(1e-4, 1.2, 500)).unwrap();
    let pts: Vec<(f64, f64)> = tr.records.iter().map(|r| (r.t, r.delta)).collect();
    // second differences remove the neutral modes' constant and linear parts
    let d2: Vec<(f64, f64)> = pts
        .windows(3)
        .filter(|w| w[1].0 >= 0.4)
        .map(|w| (w[1].0, (w[2].1 - 2.0 * w[1].1 + w[0].1).ln()))
        .collect();
    assert!(d2.len() >= 10);
    let n = d2.len() as f64;
    let (mt, my) = d2.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let slope = d2.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>()
        / d2.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    assert!((slope - ORACLE_LAMBDA).abs() / ORACLE_LAMBDA < 0.01, "rate {slope}");
}

#[test]
fn reversed_evolution_returns_to_the_datum() {
    let grid = radial(512);
    let pot = PotentialSpec::new(1.0, 1.5).unwrap();
    let u0 = sample_profile(&grid, |r| 1.2 * (-r * r / 4.0).exp(), [0.0; 3])
        .unwrap()
        .map_at(|z, p| z * Complex64::cis(0.3 * p.r * p.r));
    let s = fixed_step(1e-3, 1.0, 50);
    let fwd = evolve(&u0, &pot, &s).unwrap();
    let back = evolve(&fwd.final_field.conj(), &pot, &s).unwrap();
    let err = rel_distance(&back.final_field.conj(), &u0);
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn backward_super_branch_blows_up() {
    let gs = GroundState::certified().unwrap();
    let grid = radial(1024);
    let pot = PotentialSpec::new(1.0, 1.5).unwrap();
    let d = make_threshold_scaling(&pot, gs, Branch::Super, &grid).unwrap();
    let s = SolverSettings { t_end: 1.0, ..Default::default() };
    let tr = evolve_backward(&d.field, &pot, &s, &DiagnosticsPlan::default()).unwrap();
    let v = classify(&tr);
    assert_eq!(v.outcome, Outcome::BlowUp, "{v:?}");
    let c = variance_convexity_check(&tr);
    assert_eq!(c.side, TrajectorySide::BlowUp);
    assert!(c.f2_negative_all && c.delta_negative_all);
}

#[test]
fn localized_virial_identity_holds_along_trajectories() {
    let grid = radial(1024);
    let pot = PotentialSpec::new(1.0, 1.5).unwrap();
    // w_inf = |x|^2 sees the wall flux of high wavenumbers emitted by the
    // singular potential; finite R keep the weight flat at the wall
    let plan = DiagnosticsPlan {
        radii: vec![2.0, 5.0],
        ..Default::default()
    };
    let u0 = sample_profile(&grid, |r| 1.5 * (-r * r / 2.0).exp(), [0.0; 3]).unwrap();
    let tr = evolve_with(&u0, &pot, &fixed_step(1e-4, 0.5, 20), &plan).unwrap();
    for radius in &plan.radii {
        let worst = virial_identity_check(&tr, *radius).unwrap();
        assert!(worst < 1e-3, "R = {radius}: {worst:e}");
    }
}

#[test]
fn infinite_radius_identity_holds_away_from_the_wall() {
    let grid = Grid::Radial(RadialGrid::new(120.0, 4096).unwrap());
    let pot = PotentialSpec::new(1.0, 1.5).unwrap();
    let u0 = sample_profile(&grid, |r| 1.5 * (-r * r / 2.0).exp(), [0.0; 3]).unwrap();
    let tr = evolve(&u0, &pot, &fixed_step(1e-3, 0.5, 2)).unwrap();
    let worst = virial_identity_check(&tr, f64::INFINITY).unwrap();
    assert!(worst < 1e-3, "{worst:e}");
    let c = variance_convexity_check(&tr);
    assert!(c.f2_mismatch.unwrap() < 1e-3, "{c:?}");
}

#[test]
fn small_datum_stays_dispersive_with_positive_virial() {
    let gs = GroundState::certified().unwrap();
    let grid = radial(1024);
    let pot = PotentialSpec::new(1.0, 1.5).unwrap();
    let u0 = gs.sample(&grid, [0.0; 3]).unwrap().scaled(Complex64::new(0.3, 0.0));
    let tr = evolve(&u0, &pot, &fixed_step(1e-3, 2.0, 10)).unwrap();
    assert!(tr.records.iter().all(|r| r.pv > 0.0 && r.delta > 0.0));
    assert!(tr.mass_drift() < 1e-10);
    let c = variance_convexity_check(&tr);
    assert!(c.holds && c.pv_positive_all);
    // the variance grows once the datum starts spreading
    let last = tr.records.last().unwrap();
    assert!(last.variance.unwrap() > tr.records[0].variance.unwrap());
}

#[test]
fn sponge_removes_outgoing_mass_and_suspends_monitors() {
    let grid = radial(512);
    let pot = PotentialSpec::new(1.0, 1.5).unwrap();
    let u0 = sample_profile(&grid, |r| 0.5 * (-r * r / 2.0).exp(), [0.0; 3]).unwrap();
    let mut s = fixed_step(1e-2, 30.0, 10);
    s.sponge.enabled = true;
    let tr = evolve(&u0, &pot, &s).unwrap();
    assert!(tr.absorbed_mass > 0.0);
    let t_cut = tr.monitors_suspended_at.expect("mass reached the layer");
    assert!(t_cut > 0.0 && t_cut < tr.t_final());
    let last = tr.records.last().unwrap();
    assert!(last.mass < tr.records[0].mass);
    assert!(tr.mass_drift() < 1e-6);
}
