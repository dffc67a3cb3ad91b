//! Seeded random smooth fields for property suites.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::ComplexField;
use crate::grid::Grid;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sum of one to three chirped Gaussian bumps with random amplitude, width,
/// chirp and (on Cartesian grids) centre and drift. Widths are kept at least
/// three grid spacings so every field is resolved; all have finite variance.
pub fn random_smooth_field<R: Rng>(grid: &Grid, rng: &mut R) -> ComplexField {
    let spacing = match grid {
        Grid::Radial(g) => g.h(),
        Grid::Cartesian(g) => g.dx(),
    };
    let max_width = (grid.extent() / 8.0).min(2.5);
    let min_width = (3.0 * spacing).max(0.5).min(max_width);
    let terms = rng.random_range(1..=3);
    let bumps: Vec<Bump> = (0..terms)
        .map(|_| Bump {
            amp: Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
            width: rng.random_range(min_width..=max_width),
            chirp: rng.random_range(-0.3..0.3),
            poly: rng.random_range(0.0..1.0),
            center: if grid.is_radial() {
                [0.0; 3]
            } else {
                [0, 1, 2].map(|_| rng.random_range(-2.0..2.0))
            },
            drift: if grid.is_radial() {
                [0.0; 3]
            } else {
                [0, 1, 2].map(|_| rng.random_range(-1.0..1.0))
            },
        })
        .collect();
    ComplexField::from_fn(grid, |p| {
        bumps
            .iter()
            .map(|b| {
                let d = [p.x[0] - b.center[0], p.x[1] - b.center[1], p.x[2] - b.center[2]];
                let d2 = if grid.is_radial() {
                    p.r * p.r
                } else {
                    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
                };
                let phase = b.chirp * d2 + b.drift[0] * p.x[0] + b.drift[1] * p.x[1] + b.drift[2] * p.x[2];
                b.amp
                    * (1.0 + b.poly * d2 / (b.width * b.width))
                    * (-d2 / (2.0 * b.width * b.width)).exp()
                    * Complex64::from_polar(1.0, phase)
            })
            .sum()
    })
    .expect("random fields are finite")
}

struct Bump {
    amp: Complex64,
    width: f64,
    chirp: f64,
    poly: f64,
    center: [f64; 3],
    drift: [f64; 3],
}
