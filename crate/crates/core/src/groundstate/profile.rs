//! Tabulated radial profile with quintic Hermite interpolation.

use serde::{Deserialize, Serialize};

/// `Q, Q', Q''` on the uniform nodes `r_i = i dr`, `i = 0..`, followed by an
/// optional decaying tail `A e^(-r) / r` beyond the last node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialProfile {
    dr: f64,
    value: Vec<f64>,
    slope: Vec<f64>,
    curvature: Vec<f64>,
    tail_amplitude: Option<f64>,
}

impl RadialProfile {
    pub(crate) fn new(
        dr: f64,
        value: Vec<f64>,
        slope: Vec<f64>,
        curvature: Vec<f64>,
        tail_amplitude: Option<f64>,
    ) -> Self {
        assert!(value.len() >= 2 && value.len() == slope.len() && value.len() == curvature.len());
        RadialProfile {
            dr,
            value,
            slope,
            curvature,
            tail_amplitude,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.dr
    }

    /// Radius of the last tabulated node.
    pub fn table_end(&self) -> f64 {
        (self.value.len() - 1) as f64 * self.dr
    }

    pub fn tail_amplitude(&self) -> Option<f64> {
        self.tail_amplitude
    }

    pub fn nodes(&self) -> &[f64] {
        &self.value
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r)[0]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.eval(r)[1]
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        self.eval(r)[2]
    }

    /// `Delta Q = Q'' + 2 Q' / r` (with the `r = 0` limit `3 Q''(0)`).
    pub fn laplacian(&self, r: f64) -> f64 {
        let [_, d1, d2] = self.eval(r);
        if r.abs() < 1e-12 {
            3.0 * d2
        } else {
            d2 + 2.0 * d1 / r.abs()
        }
    }

    /// `[Q, Q', Q'']` at `|r|`.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let r = r.abs();
        let end = self.table_end();
        if r >= end {
            return match self.tail_amplitude {
                Some(a) => {
                    let e = a * (-r).exp();
                    [
                        e / r,
                        -e * (1.0 / r + 1.0 / (r * r)),
                        e * (1.0 / r + 2.0 / (r * r) + 2.0 / (r * r * r)),
                    ]
                }
                None if r == end => {
                    let last = self.value.len() - 1;
                    [self.value[last], self.slope[last], self.curvature[last]]
                }
                None => [0.0; 3],
            };
        }
        let x = r / self.dr;
        let i = (x.floor() as usize).min(self.value.len() - 2);
        let t = x - i as f64;
        let h = self.dr;
        let (p0, p1) = (self.value[i], self.value[i + 1]);
        let (d0, d1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let (s0, s1) = (self.curvature[i] * h * h, self.curvature[i + 1] * h * h);
        // monomial coefficients of the quintic Hermite interpolant in t
        let c0 = p0;
        let c1 = d0;
        let c2 = 0.5 * s0;
        let c3 = 10.0 * (p1 - p0) - 6.0 * d0 - 4.0 * d1 - 1.5 * s0 + 0.5 * s1;
        let c4 = -15.0 * (p1 - p0) + 8.0 * d0 + 7.0 * d1 + 1.5 * s0 - s1;
        let c5 = 6.0 * (p1 - p0) - 3.0 * (d0 + d1) - 0.5 * s0 + 0.5 * s1;
        let f = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
        let df = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
        let d2f = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
        [f, df / h, d2f / (h * h)]
    }
}

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
