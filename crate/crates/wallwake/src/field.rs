//! Field containers on the half-plane above the wall.
//!
//! Physical fields live on a uniform x grid times a (possibly stretched)
//! wall-normal grid, stored row-major with one row per height. Spectral
//! fields hold complex mode amplitudes on a symmetric wavenumber grid times a
//! wall-normal grid, also one row per height so that per-height operations
//! (convolutions, inverse transforms) touch contiguous memory.

use crate::error::{Error, Result};
use crate::grid::{WallNormalGrid, WaveNumberGrid, XGrid};
use num_complex::Complex64;

/// Real scalar samples `f(x_m, y_j)`; row `j` holds all x at height `y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    x: XGrid,
    y: WallNormalGrid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(x: XGrid, y: WallNormalGrid) -> Self {
        let data = vec![0.0; x.len() * y.len()];
        Self { x, y, data }
    }

    pub fn from_fn(x: XGrid, y: WallNormalGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut s = Self::zeros(x, y);
        for j in 0..s.y.len() {
            let yj = s.y.y(j);
            for m in 0..s.x.len() {
                let xm = s.x.x(m);
                s.data[j * s.x.len() + m] = f(xm, yj);
            }
        }
        s
    }

    pub fn x_grid(&self) -> &XGrid {
        &self.x
    }

    pub fn y_grid(&self) -> &WallNormalGrid {
        &self.y
    }

    #[inline]
    pub fn get(&self, m: usize, j: usize) -> f64 {
        self.data[j * self.x.len() + m]
    }

    #[inline]
    pub fn set(&mut self, m: usize, j: usize, value: f64) {
        let nx = self.x.len();
        self.data[j * nx + m] = value;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.x.len();
        &self.data[j * nx..(j + 1) * nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        let nx = self.x.len();
        &mut self.data[j * nx..(j + 1) * nx]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Bilinear sample at an arbitrary point; zero outside the grid box.
    pub fn sample(&self, xq: f64, yq: f64) -> f64 {
        let Some((m, s)) = self.x.bracket(xq) else { return 0.0 };
        let Some((j, t)) = self.y.bracket(yq) else { return 0.0 };
        let f00 = self.get(m, j);
        let f10 = self.get(m + 1, j);
        let f01 = self.get(m, j + 1);
        let f11 = self.get(m + 1, j + 1);
        (1.0 - t) * ((1.0 - s) * f00 + s * f10) + t * ((1.0 - s) * f01 + s * f11)
    }

    /// Check that `other` shares both grids.
    pub fn check_same_grids(&self, other: &ScalarField) -> Result<()> {
        if self.x != other.x || self.y != other.y {
            return Err(Error::GridMismatch("scalar fields on different grids".into()));
        }
        Ok(())
    }
}

/// Real velocity samples `(u, v)(x_m, y_j)` on shared grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalVectorField {
    pub u: ScalarField,
    pub v: ScalarField,
}

impl PhysicalVectorField {
    pub fn zeros(x: XGrid, y: WallNormalGrid) -> Self {
        Self { u: ScalarField::zeros(x, y.clone()), v: ScalarField::zeros(x, y) }
    }

    pub fn from_fns(
        x: XGrid,
        y: WallNormalGrid,
        fu: impl FnMut(f64, f64) -> f64,
        fv: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        Self { u: ScalarField::from_fn(x, y.clone(), fu), v: ScalarField::from_fn(x, y, fv) }
    }

    pub fn x_grid(&self) -> &XGrid {
        self.u.x_grid()
    }

    pub fn y_grid(&self) -> &WallNormalGrid {
        self.u.y_grid()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    pub fn check_same_grids(&self, other: &PhysicalVectorField) -> Result<()> {
        self.u.check_same_grids(&other.u)
    }
}

/// A scalar potential with the audit from its construction: `path_audit` is
/// the largest relative disagreement between the two integration paths used
/// to build it (see `calculus::stream_function`).
#[derive(Debug, Clone)]
pub struct StreamFunction {
    pub field: ScalarField,
    pub path_audit: f64,
}

/// Complex mode amplitudes `f̂(k_i, y_j)`; row `j` holds all wavenumbers at
/// height `y_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    k: WaveNumberGrid,
    y: WallNormalGrid,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(k: WaveNumberGrid, y: WallNormalGrid) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); k.len() * y.len()];
        Self { k, y, data }
    }

    pub fn from_fn(
        k: WaveNumberGrid,
        y: WallNormalGrid,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Self {
        let mut s = Self::zeros(k, y);
        for j in 0..s.y.len() {
            let yj = s.y.y(j);
            for i in 0..s.k.len() {
                let ki = s.k.k(i);
                s.data[j * s.k.len() + i] = f(ki, yj);
            }
        }
        s
    }

    pub fn k_grid(&self) -> &WaveNumberGrid {
        &self.k
    }

    pub fn y_grid(&self) -> &WallNormalGrid {
        &self.y
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.k.len() + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        let nk = self.k.len();
        self.data[j * nk + i] = value;
    }

    /// All wavenumbers at height index `j`.
    pub fn row(&self, j: usize) -> &[Complex64] {
        let nk = self.k.len();
        &self.data[j * nk..(j + 1) * nk]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [Complex64] {
        let nk = self.k.len();
        &mut self.data[j * nk..(j + 1) * nk]
    }

    /// Copy of the wall-normal profile of mode `i`.
    pub fn profile(&self, i: usize) -> Vec<Complex64> {
        (0..self.y.len()).map(|j| self.get(i, j)).collect()
    }

    /// Overwrite the wall-normal profile of mode `i`.
    pub fn set_profile(&mut self, i: usize, profile: &[Complex64]) {
        debug_assert_eq!(profile.len(), self.y.len());
        for (j, &v) in profile.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.norm()))
    }

    /// Largest violation of the reality condition `f̂(-k) = conj(f̂(k))`.
    pub fn hermitian_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.y.len() {
            let row = self.row(j);
            for i in 0..self.k.len() / 2 {
                let other = row[self.k.conjugate_index(i)];
                worst = worst.max((row[i] - other.conj()).norm());
            }
        }
        worst
    }

    /// `self += scale * other` (grids must match).
    pub fn axpy(&mut self, scale: Complex64, other: &SpectralField) -> Result<()> {
        self.check_same_grids(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scaled(&self, scale: Complex64) -> SpectralField {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= scale;
        }
        out
    }

    /// Pointwise multiply every mode by `g(k)` (e.g. `-ik` for an x derivative).
    pub fn mode_scaled(&self, mut g: impl FnMut(f64) -> Complex64) -> SpectralField {
        let mut out = self.clone();
        let nk = self.k.len();
        let factors: Vec<Complex64> = (0..nk).map(|i| g(self.k.k(i))).collect();
        for j in 0..self.y.len() {
            for (v, &f) in out.row_mut(j).iter_mut().zip(&factors) {
                *v *= f;
            }
        }
        out
    }

    /// Wall-normal derivative of every mode profile using `stencil`-node
    /// finite differences on the grid nodes.
    pub fn y_derivative(&self, stencil: usize) -> SpectralField {
        let mut out = SpectralField::zeros(self.k.clone(), self.y.clone());
        for i in 0..self.k.len() {
            let prof = self.profile(i);
            let d = crate::fd::derivative_complex(self.y.nodes(), &prof, 1, stencil);
            out.set_profile(i, &d);
        }
        out
    }

    pub fn check_same_grids(&self, other: &SpectralField) -> Result<()> {
        if self.k != other.k || self.y != other.y {
            return Err(Error::GridMismatch("spectral fields on different grids".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grids() -> (XGrid, WallNormalGrid) {
        (XGrid::centered(4.0, 16).unwrap(), WallNormalGrid::uniform(3.0, 21).unwrap())
    }

    #[test]
    fn scalar_round_trip_indexing() {
        let (x, y) = grids();
        let f = ScalarField::from_fn(x, y, |xv, yv| xv + 10.0 * yv);
        assert_relative_eq!(f.get(3, 5), f.x_grid().x(3) + 10.0 * f.y_grid().y(5));
        assert_relative_eq!(f.row(5)[3], f.get(3, 5));
    }

    #[test]
    fn bilinear_sample_reproduces_linear_fields() {
        let (x, y) = grids();
        let f = ScalarField::from_fn(x, y, |xv, yv| 2.0 * xv - 3.0 * yv + 1.0);
        assert_relative_eq!(f.sample(0.37, 1.91), 2.0 * 0.37 - 3.0 * 1.91 + 1.0, max_relative = 1e-12);
        assert_eq!(f.sample(100.0, 2.0), 0.0);
    }

    #[test]
    fn hermitian_error_detects_symmetry_breaking() {
        let k = WaveNumberGrid::clustered(0.5, 8.0, 8).unwrap();
        let y = WallNormalGrid::uniform(2.0, 5).unwrap();
        // f̂(k) = e^{ik} is Hermitian-symmetric as transform of a real delta-like field.
        let good = SpectralField::from_fn(k.clone(), y.clone(), |kv, _| Complex64::from_polar(1.0, kv));
        assert!(good.hermitian_error() < 1e-14);
        let mut bad = good.clone();
        bad.set(0, 0, Complex64::new(5.0, 5.0));
        assert!(bad.hermitian_error() > 1.0);
    }

    #[test]
    fn y_derivative_matches_analytic() {
        let k = WaveNumberGrid::clustered(1.0, 2.0, 2).unwrap();
        let y = WallNormalGrid::uniform(3.0, 401).unwrap();
        let f = SpectralField::from_fn(k, y, |kv, yv| Complex64::new((kv * yv).sin(), yv.powi(2)));
        let d = f.y_derivative(5);
        for i in 0..4 {
            let kv = d.k_grid().k(i);
            for j in 5..d.y_grid().len() - 5 {
                let yv = d.y_grid().y(j);
                let exact = Complex64::new(kv * (kv * yv).cos(), 2.0 * yv);
                assert!((d.get(i, j) - exact).norm() < 1e-8);
            }
        }
    }
}
