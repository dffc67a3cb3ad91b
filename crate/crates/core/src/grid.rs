//! Discretization geometry.
//!
//! Radial fields are stored at `r_j = j h`, `j = 1..n-1`, with the Dirichlet
//! walls `r = 0` and `r = r_max` excluded, so the inverse-power potential is
//! finite at every node. Cartesian fields live on a periodic cube of half-width
//! `l` whose nodes sit at cell centres, `x_i = -l + (i + 1/2) dx`; with an even
//! point count no node coincides with the origin.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{Fft3Plan, SinePlan};

pub const DEFAULT_RADIAL_EXTENT: f64 = 30.0;
pub const DEFAULT_RADIAL_NODES: usize = 4096;
/// Radial node count for time evolution, where the cost of the exact
/// `-Delta + V` propagator grows with the square of the node count.
pub const DEFAULT_DYNAMICS_RADIAL_NODES: usize = 1024;
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 16.0;
pub const DEFAULT_BOX_POINTS: usize = 96;

#[derive(Clone, Debug)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    h: f64,
    plan: Arc<SinePlan>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 intervals, got {n}")));
        }
        Ok(RadialGrid {
            r_max,
            n,
            h: r_max / n as f64,
            plan: Arc::new(SinePlan::new(n)),
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of intervals; the grid stores `n - 1` interior nodes.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Radius of stored node `idx` (0-based, so `r = (idx + 1) h`).
    #[inline]
    pub fn node(&self, idx: usize) -> f64 {
        (idx + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.n).map(move |j| j as f64 * self.h)
    }

    /// Wavenumber of sine mode `idx` (0-based, `kappa = (idx + 1) pi / r_max`).
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> f64 {
        (idx + 1) as f64 * PI / self.r_max
    }

    pub fn plan(&self) -> &SinePlan {
        &self.plan
    }
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.r_max == other.r_max
    }
}

#[derive(Clone, Debug)]
pub struct CartesianGrid {
    l: f64,
    m: usize,
    dx: f64,
    plan: Arc<Fft3Plan>,
}

impl CartesianGrid {
    pub fn new(l: f64, m: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {l}")));
        }
        if m < 4 || m % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 4, got {m}"
            )));
        }
        Ok(CartesianGrid {
            l,
            m,
            dx: 2.0 * l / m as f64,
            plan: Arc::new(Fft3Plan::new(m)),
        })
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Half-cell shift applied to every axis.
    pub fn offset(&self) -> f64 {
        0.5 * self.dx
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dx * self.dx
    }

    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.l + (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.m;
        let k = idx % m;
        let j = (idx / m) % m;
        let i = idx / (m * m);
        [self.coordinate(i), self.coordinate(j), self.coordinate(k)]
    }

    /// Angular wavenumber of FFT bin `i` along one axis.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        let m = self.m as isize;
        let i = i as isize;
        let f = if i <= m / 2 { i } else { i - m };
        2.0 * PI * f as f64 / (2.0 * self.l)
    }

    pub fn plan(&self) -> &Fft3Plan {
        &self.plan
    }
}

impl PartialEq for CartesianGrid {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.l == other.l
    }
}

/// Either grid kind; cheap to clone (transform plans are shared).
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Cartesian(CartesianGrid),
}

impl Grid {
    pub fn default_radial() -> Self {
        Grid::Radial(RadialGrid::new(DEFAULT_RADIAL_EXTENT, DEFAULT_RADIAL_NODES).unwrap())
    }

    pub fn default_dynamics_radial() -> Self {
        Grid::Radial(RadialGrid::new(DEFAULT_RADIAL_EXTENT, DEFAULT_DYNAMICS_RADIAL_NODES).unwrap())
    }

    pub fn default_cartesian() -> Self {
        Grid::Cartesian(CartesianGrid::new(DEFAULT_BOX_HALF_WIDTH, DEFAULT_BOX_POINTS).unwrap())
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Cartesian(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Grid::Radial(_))
    }

    /// Domain radius: `r_max` for radial grids, the box half-width otherwise.
    pub fn extent(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.r_max(),
            Grid::Cartesian(g) => g.half_width(),
        }
    }

    /// Quadrature weight of node `idx` (`4 pi h r^2` or `dx^3`).
    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        match self {
            Grid::Radial(g) => {
                let r = g.node(idx);
                4.0 * PI * g.h() * r * r
            }
            Grid::Cartesian(g) => g.cell_volume(),
        }
    }

    /// Position of node `idx`; radial nodes are reported on the first axis.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        match self {
            Grid::Radial(g) => [g.node(idx), 0.0, 0.0],
            Grid::Cartesian(g) => g.point(idx),
        }
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.node(idx),
            Grid::Cartesian(g) => {
                let p = g.point(idx);
                (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
            }
        }
    }

    pub fn as_radial(&self) -> Option<&RadialGrid> {
        match self {
            Grid::Radial(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_cartesian(&self) -> Option<&CartesianGrid> {
        match self {
            Grid::Cartesian(g) => Some(g),
            _ => None,
        }
    }

    pub fn spec(&self) -> GridSpec {
        match self {
            Grid::Radial(g) => GridSpec::Radial {
                r_max: g.r_max(),
                n: g.intervals(),
            },
            Grid::Cartesian(g) => GridSpec::Cartesian {
                l: g.half_width(),
                m: g.points_per_axis(),
            },
        }
    }
}

/// Serializable grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Radial { r_max: f64, n: usize },
    Cartesian { l: f64, m: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Radial {
            r_max: DEFAULT_RADIAL_EXTENT,
            n: DEFAULT_RADIAL_NODES,
        }
    }
}

impl GridSpec {
    pub fn dynamics_radial() -> Self {
        GridSpec::Radial {
            r_max: DEFAULT_RADIAL_EXTENT,
            n: DEFAULT_DYNAMICS_RADIAL_NODES,
        }
    }

    pub fn cartesian() -> Self {
        GridSpec::Cartesian {
            l: DEFAULT_BOX_HALF_WIDTH,
            m: DEFAULT_BOX_POINTS,
        }
    }

    pub fn build(&self) -> Result<Grid> {
        match *self {
            GridSpec::Radial { r_max, n } => Ok(Grid::Radial(RadialGrid::new(r_max, n)?)),
            GridSpec::Cartesian { l, m } => Ok(Grid::Cartesian(CartesianGrid::new(l, m)?)),
        }
    }

    /// Same geometry with twice the resolution.
    pub fn refined(&self) -> GridSpec {
        match *self {
            GridSpec::Radial { r_max, n } => GridSpec::Radial { r_max, n: 2 * n },
            GridSpec::Cartesian { l, m } => GridSpec::Cartesian { l, m: 2 * m },
        }
    }
}
