//! One-dimensional grids underlying all discretizations.
//!
//! Three grid kinds appear throughout the crate:
//!
//! * [`WallNormalGrid`] — nodes `1 = y_0 < y_1 < … < y_{n-1} = y_max` in the
//!   wall-normal direction, either uniform or geometrically stretched away
//!   from the wall;
//! * [`XGrid`] — a uniform grid in the wall-parallel direction (uniformity is
//!   structural, so FFT-based transforms cannot be fed a non-uniform grid);
//! * [`WaveNumberGrid`] — a finite, symmetric set of nonzero wavenumbers,
//!   either geometrically clustered near the smallest magnitude or induced by
//!   an [`XGrid`].

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Wall-normal height of the boundary: the fluid occupies `y >= WALL_Y`.
pub const WALL_Y: f64 = 1.0;

/// Strictly increasing wall-normal nodes starting exactly at the wall.
#[derive(Debug, Clone, PartialEq)]
pub struct WallNormalGrid {
    nodes: Vec<f64>,
}

impl WallNormalGrid {
    /// Uniform grid with `n >= 2` nodes on `[1, y_max]`.
    pub fn uniform(y_max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(y_max > WALL_Y) {
            return Err(Error::InvalidGrid(format!(
                "uniform wall grid needs n >= 2 and y_max > {WALL_Y}; got n = {n}, y_max = {y_max}"
            )));
        }
        let h = (y_max - WALL_Y) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| WALL_Y + i as f64 * h).collect();
        nodes[n - 1] = y_max;
        Ok(Self { nodes })
    }

    /// Geometrically stretched grid: first spacing `delta0`, each following
    /// spacing multiplied by `ratio >= 1`, last node clamped to `y_max`.
    pub fn stretched(y_max: f64, delta0: f64, ratio: f64) -> Result<Self> {
        if !(y_max > WALL_Y) || !(delta0 > 0.0) || !(ratio >= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "stretched wall grid needs y_max > {WALL_Y}, delta0 > 0, ratio >= 1; \
                 got y_max = {y_max}, delta0 = {delta0}, ratio = {ratio}"
            )));
        }
        let mut nodes = vec![WALL_Y];
        let mut y = WALL_Y;
        let mut h = delta0;
        while y < y_max {
            y += h;
            if y >= y_max - 0.25 * h {
                nodes.push(y_max);
                break;
            }
            nodes.push(y);
            h *= ratio;
        }
        Ok(Self { nodes })
    }

    /// Uniform spacing `delta` up to `y_fine_end`, then spacings growing by
    /// `ratio` with an upper cap, until `y_max`. Used for per-mode reference
    /// grids that need a finely resolved source region and a cheap tail.
    pub fn fine_then_stretched(
        y_fine_end: f64,
        delta: f64,
        ratio: f64,
        delta_cap: f64,
        y_max: f64,
    ) -> Result<Self> {
        if !(y_fine_end > WALL_Y) || !(y_max >= y_fine_end) || !(delta > 0.0) || !(ratio >= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "fine_then_stretched misconfigured: y_fine_end = {y_fine_end}, delta = {delta}, \
                 ratio = {ratio}, y_max = {y_max}"
            )));
        }
        let n_fine = ((y_fine_end - WALL_Y) / delta).round().max(1.0) as usize;
        let h_fine = (y_fine_end - WALL_Y) / n_fine as f64;
        let mut nodes: Vec<f64> = (0..=n_fine).map(|i| WALL_Y + i as f64 * h_fine).collect();
        let mut h = h_fine;
        let mut y = y_fine_end;
        while y < y_max {
            h = (h * ratio).min(delta_cap);
            y += h;
            if y >= y_max - 0.25 * h {
                nodes.push(y_max);
                break;
            }
            nodes.push(y);
        }
        Ok(Self { nodes })
    }

    /// Build from explicit nodes. Must be strictly increasing and start at the wall.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("wall grid needs at least 2 nodes".into()));
        }
        if (nodes[0] - WALL_Y).abs() > 1e-14 {
            return Err(Error::InvalidGrid(format!(
                "wall grid must start at y = {WALL_Y}; got {}",
                nodes[0]
            )));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("wall grid nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// Grid with a midpoint inserted in every interval (2n-1 nodes).
    /// Shares every original node, which makes refinement studies exact.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().unwrap());
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn y(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    pub fn y_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Trapezoid quadrature weights over the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.nodes)
    }

    /// Interval index and fraction for linear interpolation at `y`.
    /// Returns `None` outside `[1, y_max]`.
    pub fn bracket(&self, y: f64) -> Option<(usize, f64)> {
        bracket(&self.nodes, y)
    }

    /// Indices of nodes with `a <= y <= b`.
    pub fn window_indices(&self, a: f64, b: f64) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&j| self.nodes[j] >= a && self.nodes[j] <= b).collect()
    }
}

/// Uniform wall-parallel grid: `x_m = x0 + m * dx`, `m = 0..nx`.
///
/// Uniformity is part of the type; transform routines therefore cannot be
/// handed a non-uniform x discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    x0: f64,
    dx: f64,
    nx: usize,
}

impl XGrid {
    pub fn new(x0: f64, dx: f64, nx: usize) -> Result<Self> {
        if nx < 4 || nx % 2 != 0 || !(dx > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "x grid needs an even node count >= 4 and dx > 0; got nx = {nx}, dx = {dx}"
            )));
        }
        Ok(Self { x0, dx, nx })
    }

    /// Grid centered on `x = 0` spanning `[-half_width, half_width)`.
    pub fn centered(half_width: f64, nx: usize) -> Result<Self> {
        if nx < 4 || nx % 2 != 0 {
            return Err(Error::InvalidGrid(format!("x grid needs an even node count >= 4; got {nx}")));
        }
        let dx = 2.0 * half_width / nx as f64;
        Self::new(-half_width, dx, nx)
    }

    pub fn len(&self) -> usize {
        self.nx
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, m: usize) -> f64 {
        self.x0 + m as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|m| self.x(m)).collect()
    }

    /// Total extent `nx * dx` (the implied period for transforms).
    pub fn period(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    /// Interval index and fraction for linear interpolation at `x`.
    pub fn bracket(&self, x: f64) -> Option<(usize, f64)> {
        let t = (x - self.x0) / self.dx;
        if !(0.0..=(self.nx - 1) as f64).contains(&t) {
            return None;
        }
        let i = (t.floor() as usize).min(self.nx - 2);
        Some((i, t - i as f64))
    }
}

/// Finite symmetric set of nonzero wavenumbers, sorted ascending.
///
/// Node `i` and node `len-1-i` are exact negatives of each other, so Hermitian
/// symmetry of transforms of real fields can be checked index-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveNumberGrid {
    nodes: Vec<f64>,
}

impl WaveNumberGrid {
    /// Geometrically spaced magnitudes `k_min … k_max` with `per_side` nodes
    /// per sign. The gap `(-k_min, k_min)` stays empty: the smallest resolved
    /// magnitude is `k_min`.
    pub fn clustered(k_min: f64, k_max: f64, per_side: usize) -> Result<Self> {
        if !(k_min > 0.0) || !(k_max > k_min) || per_side < 2 {
            return Err(Error::InvalidGrid(format!(
                "wavenumber grid needs 0 < k_min < k_max and per_side >= 2; \
                 got k_min = {k_min}, k_max = {k_max}, per_side = {per_side}"
            )));
        }
        let ratio = (k_max / k_min).powf(1.0 / (per_side - 1) as f64);
        let mut pos: Vec<f64> = (0..per_side).map(|j| k_min * ratio.powi(j as i32)).collect();
        pos[per_side - 1] = k_max;
        let mut nodes: Vec<f64> = pos.iter().rev().map(|&k| -k).collect();
        nodes.extend_from_slice(&pos);
        Ok(Self { nodes })
    }

    /// The nonzero, non-Nyquist wavenumbers resolved by a uniform x grid:
    /// `k_j = 2 pi j / period`, `j = 1 .. nx/2 - 1`, and their negatives.
    pub fn from_x_grid(x: &XGrid) -> Result<Self> {
        let half = x.len() / 2;
        if half < 2 {
            return Err(Error::InvalidGrid("x grid too small to induce wavenumbers".into()));
        }
        let dk = 2.0 * std::f64::consts::PI / x.period();
        let pos: Vec<f64> = (1..half).map(|j| j as f64 * dk).collect();
        let mut nodes: Vec<f64> = pos.iter().rev().map(|&k| -k).collect();
        nodes.extend_from_slice(&pos);
        Ok(Self { nodes })
    }

    /// Build from explicit nodes; must be strictly increasing, nonzero, and
    /// exactly symmetric under negation.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() % 2 != 0 {
            return Err(Error::InvalidGrid("wavenumber grid needs an even, positive node count".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("wavenumber nodes must be strictly increasing".into()));
        }
        let n = nodes.len();
        for i in 0..n {
            if nodes[i] == 0.0 {
                return Err(Error::InvalidGrid("wavenumber grid must exclude k = 0".into()));
            }
            if (nodes[i] + nodes[n - 1 - i]).abs() > 1e-13 * nodes[n - 1].abs() {
                return Err(Error::InvalidGrid("wavenumber grid must be symmetric under negation".into()));
            }
        }
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn k(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn k_min(&self) -> f64 {
        self.nodes[self.len() / 2]
    }

    pub fn k_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Index of the node `-k_i`.
    pub fn conjugate_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Trapezoid quadrature weights across the full symmetric node set
    /// (the central gap is treated as one trapezoid interval).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.nodes)
    }

    /// Linearly interpolate sampled values at an arbitrary wavenumber,
    /// extending by zero outside `[-k_max, k_max]`.
    pub fn interp(&self, values: &[Complex64], kq: f64) -> Complex64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        match bracket(&self.nodes, kq) {
            None => Complex64::new(0.0, 0.0),
            Some((i, t)) => values[i] * (1.0 - t) + values[i + 1] * t,
        }
    }
}

/// Trapezoid weights for an arbitrary strictly increasing node set.
pub fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Interval index and fraction for linear interpolation in a sorted node set.
fn bracket(nodes: &[f64], q: f64) -> Option<(usize, f64)> {
    let n = nodes.len();
    if q < nodes[0] || q > nodes[n - 1] {
        return None;
    }
    let i = nodes.partition_point(|&v| v <= q).min(n - 1).max(1) - 1;
    let h = nodes[i + 1] - nodes[i];
    Some((i, (q - nodes[i]) / h))
}
