//! Time-series CSV files.
//!
//! `diagnostics.csv` has one row per record with columns
//! `t, step, mass, energy, pv, delta, grad_sq, l4, pot_term`, then
//! `i_r_<R>` and `f_r_<R>` for every recorded radius (`inf` for the
//! unlocalized weight), then `variance, flux, sup_norm, dt, status`. Floats
//! use the shortest round-trip exponent form; absent values are empty. The
//! status column is `running` except on the last row, which carries the
//! terminal status. `norms.csv` has `t, l4, l5` from the norm samples.

use std::io::Write;

use crate::dynamics::Trajectory;
use crate::error::Result;

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn radius_label(r: f64) -> String {
    if r.is_infinite() {
        "inf".to_string()
    } else {
        format!("{r}")
    }
}

pub fn diagnostics_header(radii: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = ["t", "step", "mass", "energy", "pv", "delta", "grad_sq", "l4", "pot_term"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(radii.iter().map(|&r| format!("i_r_{}", radius_label(r))));
    h.extend(radii.iter().map(|&r| format!("f_r_{}", radius_label(r))));
    h.extend(["variance", "flux", "sup_norm", "dt", "status"].iter().map(|s| s.to_string()));
    h
}

pub fn write_diagnostics_csv<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(diagnostics_header(&traj.radii))?;
    let last = traj.records.len().saturating_sub(1);
    for (k, r) in traj.records.iter().enumerate() {
        let mut row = vec![
            fmt(r.t),
            r.step.to_string(),
            fmt(r.mass),
            fmt(r.energy),
            fmt(r.pv),
            fmt(r.delta),
            fmt(r.grad_sq),
            fmt(r.l4_fourth),
            fmt(r.pot_term),
        ];
        row.extend(r.i_r.iter().copied().map(fmt));
        row.extend(r.f_r.iter().copied().map(fmt));
        row.push(fmt_opt(r.variance));
        row.push(fmt_opt(r.flux));
        row.push(fmt(r.sup_norm));
        row.push(fmt(r.dt));
        row.push(if k == last { traj.status.as_str() } else { "running" }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_norms_csv<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "l4", "l5"])?;
    for s in &traj.norm_samples {
        w.write_record([fmt(s.t), fmt(s.l4_fourth), fmt(s.l5_fifth)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_lists_radii_in_order() {
        let h = diagnostics_header(&[2.0, 5.5, f64::INFINITY]);
        assert_eq!(h[9..15], ["i_r_2", "i_r_5.5", "i_r_inf", "f_r_2", "f_r_5.5", "f_r_inf"]);
        assert_eq!(h.last().unwrap(), "status");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -3.0e-17, 1.0 / 3.0, 6.02e23] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }
}
