//! Localizing weight `w_R(x) = R^2 phi(|x| / R)` for the virial functionals.
//!
//! `phi(s) = s^2` on `[0, 1]` and constant on `[2, inf)`. On `[1, 2]`
//! `phi'(s) = 2 s (1 - S(s - 1))` with the smooth step
//! `S(x) = f(x) / (f(x) + f(1 - x))`, `f(x) = e^(-1/x)`, which is flat to all
//! orders at both ends. Hence `phi` is `C^inf`, `phi'' = 2(1 - S) - 2 s S' <= 2`
//! and `0 <= phi' <= 2 s`. Smoothness matters: grid quadrature of the
//! `Delta Delta w_R` term converges only as fast as `phi` is smooth.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::RadialProfile;
use crate::quadrature::{GL8_NODES, GL8_WEIGHTS};

/// `[S, S', S'', S''']` at `x`.
pub(crate) fn smooth_step(x: f64) -> [f64; 4] {
    if x <= 0.0 {
        return [0.0; 4];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let y = 1.0 - x;
    // S = 1 / (1 + e^L), L = 1/x - 1/y
    let l = 1.0 / x - 1.0 / y;
    let l1 = -1.0 / (x * x) - 1.0 / (y * y);
    let l2 = 2.0 / (x * x * x) - 2.0 / (y * y * y);
    let l3 = -6.0 / x.powi(4) - 6.0 / y.powi(4);
    let s = 1.0 / (1.0 + l.exp());
    // S (1 - S) = 1 / (4 cosh^2(L/2)), stable at both ends
    let t = if l.abs() > 1400.0 {
        0.0
    } else {
        0.25 / (0.5 * l).cosh().powi(2)
    };
    let c = 1.0 - 2.0 * s;
    let s1 = -l1 * t;
    let s2 = -l2 * t - l1 * s1 * c;
    let s3 = -l3 * t - 2.0 * l2 * s1 * c - l1 * (s2 * c - 2.0 * s1 * s1);
    [s, s1, s2, s3]
}

/// `[phi', phi'', phi''', phi'''']` on the transition `s in [1, 2]`.
fn transition_slopes(s: f64) -> [f64; 4] {
    let [st, s1, s2, s3] = smooth_step(s - 1.0);
    [
        2.0 * s * (1.0 - st),
        2.0 * (1.0 - st) - 2.0 * s * s1,
        -4.0 * s1 - 2.0 * s * s2,
        -6.0 * s2 - 2.0 * s * s3,
    ]
}

const TABLE_INTERVALS: usize = 1024;

/// `phi(1 + x)` on `[0, 1]`, integrated from `phi'` by 8-point Gauss-Legendre
/// per table interval.
fn transition_table() -> &'static RadialProfile {
    static CELL: OnceLock<RadialProfile> = OnceLock::new();
    CELL.get_or_init(|| {
        let h = 1.0 / TABLE_INTERVALS as f64;
        let mut value = vec![1.0];
        let mut slope = vec![2.0];
        let mut curvature = vec![2.0];
        for i in 0..TABLE_INTERVALS {
            let mid = 1.0 + (i as f64 + 0.5) * h;
            let mut acc = 0.0;
            for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                acc += w
                    * (transition_slopes(mid - 0.5 * h * x)[0]
                        + transition_slopes(mid + 0.5 * h * x)[0]);
            }
            value.push(value[i] + 0.5 * h * acc);
            let [p1, p2, _, _] = transition_slopes(1.0 + (i + 1) as f64 * h);
            slope.push(p1);
            curvature.push(p2);
        }
        RadialProfile::new(h, value, slope, curvature, None)
    })
}

/// `[phi, phi', phi'', phi''', phi'''']` at `s >= 0`.
pub fn phi_derivatives(s: f64) -> [f64; 5] {
    if s <= 1.0 {
        [s * s, 2.0 * s, 2.0, 0.0, 0.0]
    } else if s >= 2.0 {
        [plateau(), 0.0, 0.0, 0.0, 0.0]
    } else {
        let [p1, p2, p3, p4] = transition_slopes(s);
        [transition_table().value(s - 1.0), p1, p2, p3, p4]
    }
}

/// Constant value `phi(s)` for `s >= 2`.
pub fn plateau() -> f64 {
    transition_table().value(1.0)
}

/// Virial weight at radius `R` (`None` means `R = infinity`, `w = |x|^2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialWeight {
    radius: Option<f64>,
}

/// Radial derivatives of `w_R` needed by the functionals at one radius.
#[derive(Clone, Copy, Debug)]
pub struct WeightJet {
    pub w: f64,
    pub w1: f64,
    pub w2: f64,
    /// `Delta w = w'' + 2 w' / r`.
    pub lap: f64,
    /// `Delta Delta w = w'''' + 4 w''' / r`.
    pub bilap: f64,
    /// `phi''(r / R)`, equal to `w''`.
    pub phi2: f64,
}

impl VirialWeight {
    pub fn new(radius: f64) -> Result<Self> {
        if radius.is_infinite() && radius > 0.0 {
            return Ok(VirialWeight::infinite());
        }
        if !(radius.is_finite() && radius >= 1.0) {
            return Err(Error::param("R", format!("must lie in [1, inf], got {radius}")));
        }
        Ok(VirialWeight {
            radius: Some(radius),
        })
    }

    pub fn infinite() -> Self {
        VirialWeight { radius: None }
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or(f64::INFINITY)
    }

    pub fn is_infinite(&self) -> bool {
        self.radius.is_none()
    }

    /// Whether `w_R = |x|^2` holds at radius `r`.
    pub fn is_quadratic_at(&self, r: f64) -> bool {
        self.radius.map_or(true, |big| r <= big)
    }

    pub fn jet(&self, r: f64) -> WeightJet {
        match self.radius {
            None => WeightJet {
                w: r * r,
                w1: 2.0 * r,
                w2: 2.0,
                lap: 6.0,
                bilap: 0.0,
                phi2: 2.0,
            },
            Some(big) => {
                let [p0, p1, p2, p3, p4] = phi_derivatives(r / big);
                let w1 = big * p1;
                let w3 = p3 / big;
                let w4 = p4 / (big * big);
                WeightJet {
                    w: big * big * p0,
                    w1,
                    w2: p2,
                    lap: p2 + 2.0 * w1 / r,
                    bilap: w4 + 4.0 * w3 / r,
                    phi2: p2,
                }
            }
        }
    }
}
