use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::{
    localized_virial_f_with, localized_virial_i_with, PointDerivatives, PotentialSpec,
    VirialWeight,
};
use crate::grid::Grid;
use crate::groundstate::GroundState;

use super::{
    DiagnosticsPlan, DiagnosticsRecord, NormSample, RunStatus, Snapshot, SolverSettings,
    SplitStepper, Trajectory, MONITOR_SUSPEND_MASS,
};

/// Records needed to call a gradient blow-up.
const MONOTONE_WINDOW: usize = 10;

/// Evolve with the default diagnostics (`I_inf`, variance, no snapshots).
pub fn evolve(u0: &ComplexField, pot: &PotentialSpec, settings: &SolverSettings) -> Result<Trajectory> {
    evolve_with(u0, pot, settings, &DiagnosticsPlan::default())
}

/// Backward evolution through `v(t) = conj(u(-t))`: evolves `conj(u0)`
/// forward. The returned trajectory is that of `v`; records at time `t`
/// describe `u(-t)` up to conjugation (mass, energy, `P_V`, `delta` agree,
/// `I_R` and the variance flux flip sign).
pub fn evolve_backward(
    u0: &ComplexField,
    pot: &PotentialSpec,
    settings: &SolverSettings,
    plan: &DiagnosticsPlan,
) -> Result<Trajectory> {
    evolve_with(&u0.conj(), pot, settings, plan)
}

pub fn evolve_with(
    u0: &ComplexField,
    pot: &PotentialSpec,
    settings: &SolverSettings,
    plan: &DiagnosticsPlan,
) -> Result<Trajectory> {
    settings.validate()?;
    plan.validate()?;
    if let Some(node) = u0.first_non_finite() {
        return Err(Error::NonFinite { node });
    }
    let gs = GroundState::certified()?;
    let grid = u0.grid().clone();
    let mut stepper = SplitStepper::new(&grid, pot)?;
    let meter = Meter::new(pot, gs, plan, stepper.potential().to_vec())?;
    let sponge = settings
        .sponge
        .enabled
        .then(|| sponge_profile(&grid, settings.sponge.width, settings.sponge.strength));

    let mut u = u0.clone();
    let mut t = 0.0;
    let mut dt = settings.dt0;
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut clean = 0usize;
    let mut absorbed = 0.0;
    let mut suspended_at = None;
    let mut status = RunStatus::Completed;

    let mut records = vec![meter.record(&u, 0.0, 0, dt)?];
    let m0 = records[0].mass;
    let mut e_cur = records[0].energy;

    let mut snap_times: Vec<f64> = plan
        .snapshot_times
        .iter()
        .copied()
        .filter(|&s| s <= settings.t_end)
        .collect();
    snap_times.sort_by(f64::total_cmp);
    snap_times.dedup();
    let mut snapshots = Vec::new();
    let mut next_snap = 0;
    while next_snap < snap_times.len() && snap_times[next_snap] <= 0.0 {
        snapshots.push(Snapshot { t: 0.0, field: u.clone() });
        next_snap += 1;
    }
    let interval = plan.norm_sample_interval;
    let mut norm_samples = Vec::new();
    let mut next_sample = 1usize;
    if interval > 0.0 {
        norm_samples.push(meter.norm_sample(&u, 0.0));
    }

    let end_slack = 1e-12 * settings.t_end;
    while t < settings.t_end - end_slack {
        let mut target = settings.t_end;
        if let Some(&s) = snap_times.get(next_snap) {
            target = target.min(s);
        }
        if interval > 0.0 {
            target = target.min(next_sample as f64 * interval);
        }
        let sup2 = u.sup_norm().powi(2);
        let mut dt_try = if sup2 > 0.0 {
            dt.min(settings.cfl_like_cap / sup2)
        } else {
            dt
        };
        if dt_try < settings.dt_min {
            status = RunStatus::BlowupDetected;
            break;
        }
        let remaining = target - t;
        let hit = dt_try >= remaining * (1.0 - 1e-9);
        if hit {
            dt_try = remaining;
        }

        let backup = settings.adapt.enabled.then(|| u.values().to_vec());
        if stepper.step(u.values_mut(), dt_try).is_some() {
            if steps == 0 {
                return Err(Error::config(
                    "initial data",
                    "first time step produced non-finite values",
                ));
            }
            if let Some(b) = backup {
                u.values_mut().copy_from_slice(&b);
            }
            status = RunStatus::Underresolved;
            break;
        }
        if let Some(b) = backup {
            let e_new = meter.energy(&u);
            if (e_new - e_cur).abs() > settings.adapt.energy_tol * e_cur.abs() {
                u.values_mut().copy_from_slice(&b);
                rejected += 1;
                clean = 0;
                dt = dt_try / settings.adapt.gain;
                if dt < settings.dt_min {
                    status = RunStatus::BlowupDetected;
                    break;
                }
                continue;
            }
            e_cur = e_new;
        }

        t = if hit { target } else { t + dt_try };
        steps += 1;
        clean += 1;
        if settings.adapt.enabled && clean >= settings.adapt.clean_steps && dt < settings.dt0 {
            dt = (dt * settings.adapt.gain).min(settings.dt0);
            clean = 0;
        }

        if let Some(sigma) = &sponge {
            absorbed += absorb(&mut u, sigma, dt_try);
            if suspended_at.is_none() && absorbed > MONITOR_SUSPEND_MASS {
                suspended_at = Some(t);
            }
            if settings.adapt.enabled {
                e_cur = meter.energy(&u);
            }
        }

        while next_snap < snap_times.len() && snap_times[next_snap] <= t + end_slack {
            snapshots.push(Snapshot { t, field: u.clone() });
            next_snap += 1;
        }
        if interval > 0.0 && t >= next_sample as f64 * interval - end_slack {
            norm_samples.push(meter.norm_sample(&u, t));
            next_sample += 1;
        }

        let at_end = t >= settings.t_end - end_slack;
        if steps % settings.record_every == 0 || at_end {
            records.push(meter.record(&u, t, steps, dt_try)?);
            if gradient_blowup(&records, settings.blowup_gradfactor, gs) {
                status = RunStatus::BlowupDetected;
                break;
            }
        }
        if sponge.is_some() && m0 > 0.0 {
            let remaining = m0 - absorbed;
            if remaining < settings.sponge.stop_fraction * m0 {
                status = RunStatus::SpongeAbsorbed;
                break;
            }
        }
    }

    if records.last().is_some_and(|r| r.t < t) {
        records.push(meter.record(&u, t, steps, dt)?);
    }

    Ok(Trajectory {
        potential: *pot,
        radii: plan.radii.clone(),
        records,
        snapshots,
        norm_samples,
        status,
        steps,
        rejected_steps: rejected,
        absorbed_mass: absorbed,
        monitors_suspended_at: suspended_at,
        final_field: u,
    })
}

fn gradient_blowup(records: &[DiagnosticsRecord], factor: f64, gs: &GroundState) -> bool {
    let last = records.last().expect("at least the initial record");
    if last.grad_sq < factor * factor * gs.grad_sq || records.len() < MONOTONE_WINDOW {
        return false;
    }
    records[records.len() - MONOTONE_WINDOW..]
        .windows(2)
        .all(|w| w[1].grad_sq > w[0].grad_sq)
}

/// Smooth ramp `sigma` in the outer `width` fraction of the domain; on the
/// periodic box each axis contributes its own ramp.
fn sponge_profile(grid: &Grid, width: f64, strength: f64) -> Vec<f64> {
    let ramp = |dist: f64, extent: f64| {
        let start = extent * (1.0 - width);
        if dist <= start {
            0.0
        } else {
            let x = ((dist - start) / (extent * width)).min(1.0);
            (FRAC_PI_2 * x).sin().powi(2)
        }
    };
    match grid {
        Grid::Radial(g) => (0..g.len())
            .map(|j| strength * ramp(g.node(j), g.r_max()))
            .collect(),
        Grid::Cartesian(g) => (0..g.len())
            .map(|idx| {
                let p = g.point(idx);
                strength * p.iter().map(|c| ramp(c.abs(), g.half_width())).sum::<f64>()
            })
            .collect(),
    }
}

/// Damp by `exp(-dt sigma)` and return the mass removed.
fn absorb(u: &mut ComplexField, sigma: &[f64], dt: f64) -> f64 {
    let grid = u.grid().clone();
    let mut removed = 0.0;
    for (idx, (v, &s)) in u.values_mut().iter_mut().zip(sigma).enumerate() {
        if s > 0.0 {
            let damp = (-dt * s).exp();
            removed += 0.5 * grid.weight(idx) * v.norm_sqr() * (1.0 - damp * damp);
            *v *= damp;
        }
    }
    removed
}

/// Precomputed pieces for measuring a state.
struct Meter<'a> {
    pot: PotentialSpec,
    gs: &'a GroundState,
    potential: Vec<f64>,
    weights: Vec<VirialWeight>,
    variance: bool,
}

impl<'a> Meter<'a> {
    fn new(
        pot: &PotentialSpec,
        gs: &'a GroundState,
        plan: &DiagnosticsPlan,
        potential: Vec<f64>,
    ) -> Result<Self> {
        let weights = plan
            .radii
            .iter()
            .map(|&r| VirialWeight::new(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Meter {
            pot: *pot,
            gs,
            potential,
            weights,
            variance: plan.variance,
        })
    }

    fn pot_term(&self, u: &ComplexField) -> f64 {
        if self.pot.is_free() {
            return 0.0;
        }
        u.quad(|idx, v| self.potential[idx] * v.norm_sqr())
    }

    fn energy(&self, u: &ComplexField) -> f64 {
        0.5 * u.gradient_norm_sq() + 0.5 * self.pot_term(u) - 0.25 * u.l4_fourth()
    }

    fn norm_sample(&self, u: &ComplexField, t: f64) -> NormSample {
        NormSample {
            t,
            l4_fourth: u.l4_fourth(),
            l5_fifth: u.quad(|_, v| v.norm().powi(5)),
        }
    }

    fn record(&self, u: &ComplexField, t: f64, step: usize, dt: f64) -> Result<DiagnosticsRecord> {
        if let Some(node) = u.first_non_finite() {
            return Err(Error::Integration {
                t,
                reason: format!("non-finite field value at node {node}"),
            });
        }
        let l2_sq = u.l2_sq();
        let grad_sq = u.gradient_norm_sq();
        let pot_term = self.pot_term(u);
        let l4_fourth = u.l4_fourth();
        let grid = u.grid();
        let need_derivs = self.variance || !self.weights.is_empty();
        let derivs = need_derivs.then(|| PointDerivatives::of(u));
        let mut i_r = Vec::with_capacity(self.weights.len());
        let mut f_r = Vec::with_capacity(self.weights.len());
        for w in &self.weights {
            let d = derivs.as_ref().expect("derivatives computed");
            i_r.push(localized_virial_i_with(u, w, d.radial()));
            f_r.push(localized_virial_f_with(u, w, &self.pot, grad_sq, Some(d))?);
        }
        let (variance, flux) = if self.variance {
            let d = derivs.as_ref().expect("derivatives computed");
            let var = u.quad(|idx, v| grid.radius(idx).powi(2) * v.norm_sqr());
            let flux = localized_virial_i_with(u, &VirialWeight::infinite(), d.radial());
            (Some(var), Some(flux))
        } else {
            (None, None)
        };
        let adapted = grad_sq + pot_term;
        Ok(DiagnosticsRecord {
            t,
            step,
            mass: 0.5 * l2_sq,
            energy: 0.5 * grad_sq + 0.5 * pot_term - 0.25 * l4_fourth,
            pv: 2.0 * grad_sq + self.pot.mu * pot_term - 1.5 * l4_fourth,
            delta: self.gs.hdot1_sq() - adapted,
            grad_sq,
            l4_fourth,
            pot_term,
            i_r,
            f_r,
            variance,
            flux,
            sup_norm: u.sup_norm(),
            dt,
        })
    }
}
