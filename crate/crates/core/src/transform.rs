//! Spectral transforms backing the two grid kinds.
//!
//! [`SinePlan`] is a type-I discrete sine transform computed through a complex
//! FFT of the odd extension, so it accepts complex data directly. [`Fft3Plan`]
//! is a separable three-dimensional FFT on an `m x m x m` cube stored with the
//! last axis contiguous. Both plans are immutable after construction and can be
//! shared across threads.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Type-I DST on `n - 1` interior nodes: `S_k = sum_j v_j sin(pi j k / n)`.
#[derive(Clone)]
pub struct SinePlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SinePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SinePlan").field("n", &self.n).finish()
    }
}

impl SinePlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * n);
        SinePlan { n, fft }
    }

    /// Number of transformed coefficients (`n - 1`).
    pub fn len(&self) -> usize {
        self.n - 1
    }

    pub fn is_empty(&self) -> bool {
        self.n <= 1
    }

    /// Unnormalized forward transform. `input.len()` must equal `self.len()`.
    pub fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len());
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (j, &v) in input.iter().enumerate() {
            buf[j + 1] = v;
            buf[2 * n - j - 1] = -v;
        }
        self.fft.process(&mut buf);
        // Y_k = -2i S_k
        let half_i = Complex64::new(0.0, 0.5);
        buf[1..n].iter().map(|&y| y * half_i).collect()
    }

    /// Cosine synthesis `C_j = sum_k a_k cos(pi j k / n)` for `j = 0..=n`,
    /// where `a` holds the `n - 1` coefficients `k = 1..n-1`.
    pub fn cosine_synthesis(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.len());
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (k, &a) in coeffs.iter().enumerate() {
            buf[k + 1] = a;
            buf[2 * n - k - 1] = a;
        }
        self.fft.process(&mut buf);
        buf[..=n].iter().map(|&y| 0.5 * y).collect()
    }

    /// Inverse of [`SinePlan::forward`]: `v_j = (2/n) sum_k S_k sin(pi j k / n)`.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let scale = 2.0 / self.n as f64;
        let mut out = self.forward(coeffs);
        for v in &mut out {
            *v *= scale;
        }
        out
    }
}

/// Separable 3-D FFT over an `m^3` cube, index `(i * m + j) * m + k`.
#[derive(Clone)]
pub struct Fft3Plan {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft3Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft3Plan").field("m", &self.m).finish()
    }
}

impl Fft3Plan {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3Plan {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Normalized inverse transform in place (divides by `m^3`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / (self.m * self.m * self.m) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn apply(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);

        // middle axis: gather each (i, k) column of a slab into rows
        let mut slab = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            let base = i * m * m;
            for j in 0..m {
                for k in 0..m {
                    slab[k * m + j] = data[base + j * m + k];
                }
            }
            fft.process_with_scratch(&mut slab, &mut scratch);
            for j in 0..m {
                for k in 0..m {
                    data[base + j * m + k] = slab[k * m + j];
                }
            }
        }

        // first axis: for each j, gather the (i, k) plane with i contiguous
        for j in 0..m {
            for i in 0..m {
                let src = (i * m + j) * m;
                for k in 0..m {
                    slab[k * m + i] = data[src + k];
                }
            }
            fft.process_with_scratch(&mut slab, &mut scratch);
            for i in 0..m {
                let dst = (i * m + j) * m;
                for k in 0..m {
                    data[dst + k] = slab[k * m + i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dst(v: &[Complex64], n: usize) -> Vec<Complex64> {
        (1..n)
            .map(|k| {
                (1..n)
                    .map(|j| v[j - 1] * (std::f64::consts::PI * (j * k) as f64 / n as f64).sin())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dst_matches_direct_sum() {
        let n = 16;
        let v: Vec<Complex64> = (0..n - 1)
            .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
            .collect();
        let plan = SinePlan::new(n);
        let fast = plan.forward(&v);
        let slow = naive_dst(&v, n);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = plan.inverse(&fast);
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn fft3_roundtrip_and_single_mode() {
        let m = 6;
        let plan = Fft3Plan::new(m);
        let mut data: Vec<Complex64> = (0..m * m * m)
            .map(|idx| Complex64::new((idx as f64 * 0.11).sin(), (idx as f64 * 0.7).cos()))
            .collect();
        let orig = data.clone();
        plan.forward(&mut data);
        plan.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }

        // a plane wave along the first axis lands in a single coefficient
        let mut wave = vec![Complex64::new(0.0, 0.0); m * m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    wave[(i * m + j) * m + k] = Complex64::from_polar(1.0, phase);
                }
            }
        }
        plan.forward(&mut wave);
        let peak = (1 * m) * m;
        assert!((wave[peak].re - (m * m * m) as f64).abs() < 1e-9);
        let rest: f64 = wave
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != peak)
            .map(|(_, v)| v.norm())
            .sum();
        assert!(rest < 1e-8);
    }
}
