//! Wall-parallel Fourier transforms.
//!
//! Convention: forward transform `f̂(k, y) = ∫ e^{+ikx} f(x, y) dx`, inverse
//! `f(x, y) = (1/2π) ∫ e^{-ikx} f̂(k, y) dk`, so `∂_x ↦ -ik` and pointwise
//! products map to `(1/2π)`-weighted convolutions in `k`.
//!
//! On a uniform x grid the forward integral is the rectangle-rule sum
//! `Δx Σ_m e^{+ik x_m} f(x_m, y)`, evaluated with an FFT. The `k = 0` and
//! Nyquist bins are dropped (the wavenumber grid excludes them); to keep the
//! roundtrip exact, each row is re-centred to zero mean before transforming
//! and the removed means are recorded in the metadata so the inverse can
//! restore them.

use crate::error::{Error, Result};
use crate::field::{PhysicalVectorField, ScalarField, SpectralField};
use crate::grid::{WaveNumberGrid, XGrid};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Relative boundary magnitude above which a transform flags poor x decay.
pub const BOUNDARY_LEAKAGE_WARN: f64 = 1e-6;

/// Bookkeeping from a forward transform.
#[derive(Debug, Clone)]
pub struct TransformMeta {
    /// Mean removed from each row before transforming (one entry per height).
    pub row_means: Vec<f64>,
    /// Largest removed row mean in absolute value.
    pub max_removed_mean: f64,
    /// Largest field magnitude on the two x-boundary columns, relative to the
    /// overall field magnitude.
    pub boundary_leakage: f64,
    /// Set when `boundary_leakage` exceeds [`BOUNDARY_LEAKAGE_WARN`]: the
    /// field does not decay inside the x window and periodic wrap-around will
    /// contaminate the spectrum.
    pub boundary_warning: bool,
}

fn leakage(f: &ScalarField) -> f64 {
    let scale = f.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let nx = f.x_grid().len();
    let mut worst = 0.0f64;
    for j in 0..f.y_grid().len() {
        let row = f.row(j);
        worst = worst.max(row[0].abs()).max(row[nx - 1].abs());
    }
    worst / scale
}

/// Forward transform of a scalar field onto the wavenumber grid induced by
/// its x grid.
pub fn transform_scalar(f: &ScalarField) -> Result<(SpectralField, TransformMeta)> {
    let x = *f.x_grid();
    let k_grid = WaveNumberGrid::from_x_grid(&x)?;
    let nx = x.len();
    let half = nx / 2;
    let dx = x.dx();
    let mut planner = FftPlanner::new();
    // rustfft's unnormalized inverse uses the e^{+2πi jm/N} kernel, matching
    // the forward convention here.
    let fft = planner.plan_fft_inverse(nx);

    let boundary_leakage = leakage(f);
    let mut out = SpectralField::zeros(k_grid, f.y_grid().clone());
    let mut row_means = Vec::with_capacity(f.y_grid().len());
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];

    // Phases e^{+i k_j x0} for positive j; negatives are conjugates.
    let dk = 2.0 * std::f64::consts::PI / x.period();
    let pos_phase: Vec<Complex64> =
        (1..half).map(|j| Complex64::from_polar(1.0, j as f64 * dk * x.x0())).collect();

    for j in 0..f.y_grid().len() {
        let row = f.row(j);
        let mean = row.iter().sum::<f64>() / nx as f64;
        row_means.push(mean);
        for (b, &v) in buf.iter_mut().zip(row) {
            *b = Complex64::new(v - mean, 0.0);
        }
        fft.process(&mut buf);
        let out_row = out.row_mut(j);
        for jj in 1..half {
            let scale_pos = pos_phase[jj - 1] * dx;
            // ascending grid layout: [-k_{half-1} … -k_1, k_1 … k_{half-1}]
            out_row[half - 2 + jj] = buf[jj] * scale_pos;
            out_row[half - 1 - jj] = buf[nx - jj] * scale_pos.conj();
        }
    }

    let max_removed_mean = row_means.iter().fold(0.0f64, |a, &m| a.max(m.abs()));
    let meta = TransformMeta {
        row_means,
        max_removed_mean,
        boundary_leakage,
        boundary_warning: boundary_leakage > BOUNDARY_LEAKAGE_WARN,
    };
    Ok((out, meta))
}

/// Inverse transform back onto the x grid that produced the spectrum.
/// `meta` restores the removed row means when provided.
pub fn inverse_scalar(
    spec: &SpectralField,
    x: &XGrid,
    meta: Option<&TransformMeta>,
) -> Result<ScalarField> {
    let expected = WaveNumberGrid::from_x_grid(x)?;
    if spec.k_grid() != &expected {
        return Err(Error::GridMismatch(
            "spectral field was not produced from this x grid (wavenumber sets differ)".into(),
        ));
    }
    if let Some(m) = meta {
        if m.row_means.len() != spec.y_grid().len() {
            return Err(Error::GridMismatch("transform metadata has wrong row count".into()));
        }
    }
    let nx = x.len();
    let half = nx / 2;
    let dx = x.dx();
    let dk = 2.0 * std::f64::consts::PI / x.period();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nx);

    let neg_phase: Vec<Complex64> =
        (1..half).map(|j| Complex64::from_polar(1.0, -(j as f64) * dk * x.x0())).collect();
    let scale = 1.0 / (nx as f64 * dx);

    let mut out = ScalarField::zeros(*x, spec.y_grid().clone());
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..spec.y_grid().len() {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        let row = spec.row(j);
        for jj in 1..half {
            let phase = neg_phase[jj - 1] * scale;
            buf[jj] = row[half - 2 + jj] * phase;
            buf[nx - jj] = row[half - 1 - jj] * phase.conj();
        }
        fft.process(&mut buf);
        let mean = meta.map_or(0.0, |m| m.row_means[j]);
        for (o, b) in out.row_mut(j).iter_mut().zip(&buf) {
            *o = b.re + mean;
        }
    }
    Ok(out)
}

/// Forward transform of both velocity components.
pub fn transform_vector(
    w: &PhysicalVectorField,
) -> Result<(SpectralField, SpectralField, TransformMeta, TransformMeta)> {
    let (u_hat, mu) = transform_scalar(&w.u)?;
    let (v_hat, mv) = transform_scalar(&w.v)?;
    Ok((u_hat, v_hat, mu, mv))
}

/// Inverse transform of both velocity components.
pub fn inverse_vector(
    u_hat: &SpectralField,
    v_hat: &SpectralField,
    x: &XGrid,
    meta: Option<(&TransformMeta, &TransformMeta)>,
) -> Result<PhysicalVectorField> {
    let (mu, mv) = match meta {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    Ok(PhysicalVectorField { u: inverse_scalar(u_hat, x, mu)?, v: inverse_scalar(v_hat, x, mv)? })
}

/// Evaluate the inverse transform of one spectral row at arbitrary positions
/// `x_m = x0 + m dx` by trapezoid quadrature over the wavenumber nodes:
/// `f(x_m) = (1/2π) Σ_i w_i f̂(k_i) e^{-i k_i x_m}`.
///
/// Used for clustered (non-FFT) wavenumber grids. The imaginary parts cancel
/// for Hermitian rows; only the real part is returned.
pub fn evaluate_row_uniform(
    k: &WaveNumberGrid,
    weights: &[f64],
    row: &[Complex64],
    x0: f64,
    dx: f64,
    nx: usize,
) -> Vec<f64> {
    debug_assert_eq!(weights.len(), k.len());
    debug_assert_eq!(row.len(), k.len());
    let inv_2pi = 0.5 / std::f64::consts::PI;
    let mut out = vec![0.0; nx];
    for i in 0..k.len() {
        let ki = k.k(i);
        let amp = row[i] * (weights[i] * inv_2pi);
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut phase = Complex64::from_polar(1.0, -ki * x0);
        let step = Complex64::from_polar(1.0, -ki * dx);
        for o in out.iter_mut() {
            *o += (amp * phase).re;
            phase *= step;
        }
    }
    out
}

/// Single-point version of [`evaluate_row_uniform`].
pub fn evaluate_row_at(k: &WaveNumberGrid, weights: &[f64], row: &[Complex64], x: f64) -> f64 {
    let inv_2pi = 0.5 / std::f64::consts::PI;
    let mut acc = 0.0;
    for i in 0..k.len() {
        let ki = k.k(i);
        acc += (row[i] * Complex64::from_polar(weights[i] * inv_2pi, -ki * x)).re;
    }
    acc
}
