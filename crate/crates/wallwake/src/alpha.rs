//! Nonlinear fixed-point solver for the forced wall-bounded flow.
//!
//! The stationary problem solved here is, in physical variables,
//!
//! ```text
//! Δu - ∂ₓu - (u·∇)u - ∇p = f,    ∇·u = 0   on  y > 1,
//! u = 0 on y = 1,                u → 0 as y → ∞,
//! ```
//!
//! with a compactly supported force `f`. Each Picard sweep freezes the
//! quadratic terms, assembles the mode sources
//!
//! ```text
//! Q₀ = (1/2π)(û ∗ ω̂) + f̂₂,      Q₁ = (1/2π)(v̂ ∗ ω̂) - f̂₁,
//! ```
//!
//! and calls the exact-propagator mode solver ([`crate::oseen`]) for every
//! wavenumber. The iteration converges geometrically for small data; the
//! observed contraction factor is part of the solver's report because the
//! small-data theory predicts it scales linearly with the force amplitude.
//!
//! Two structural identities are worth recording once:
//!
//! * the velocity pair reconstructed from the mode variables is divergence
//!   free identically (`-ikû + ∂ᵧv̂ = 0` holds before discretisation), and
//! * the pressure has the closed form `p̂ = -φ̂ - (1/4π)(û∗û + v̂∗v̂)`,
//!   where `φ̂` is the harmonic contribution to `û`. Both x- and y-momentum
//!   reduce to the mode equations under this choice, which is how the
//!   residual diagnostics below close the loop.

use num_complex::Complex64;

use crate::calculus::curl_of_stream;
use crate::convolve::product_spectrum;
use crate::error::{Error, Result};
use crate::exec;
use crate::field::{PhysicalVectorField, ScalarField, SpectralField};
use crate::grid::{WallNormalGrid, WaveNumberGrid, XGrid, WALL_Y};
use crate::norms::{b_norm, fit_ls_decay, BIndices, DecayFit};
use crate::oseen::solve_all_modes;
use crate::transform::evaluate_row_uniform;

/// Quadrature nodes used when transforming a compact source slice in `x`.
/// At the largest default wavenumber (16) and the default support width the
/// integrand completes ~8 oscillations, so 4097 nodes leave trapezoid
/// quadrature at machine accuracy for smooth bumps.
const SOURCE_QUADRATURE_POINTS: usize = 4097;

/// Number of trailing grid nodes on which the nonlinear product is forced to
/// vanish exactly, so the mode solver's source-tail contract holds by
/// construction.
const TAPER_ZERO_NODES: usize = 6;

/// Fixed amplitude of the standard ring force used by fixtures and reports.
/// Frozen by bisecting the contraction factor against amplitude at the
/// default resolution: ρ crosses 0.25 near amplitude 15.8 (measured
/// ρ(9) = 0.137, ρ(18) = 0.287, mildly superlinear), and the fixture sits at
/// half that crossing for margin, with measured ρ(a₀) ≈ 0.12. Doubling twice
/// stays contractive (ρ(4a₀) ≈ 0.5) while ~100× demonstrably diverges.
pub const STANDARD_AMPLITUDE: f64 = 8.0;

/// Closed annulus `r_inner ≤ |x - c| ≤ r_outer` around a centre above the wall.
#[derive(Clone, Copy, Debug)]
pub struct Annulus {
    pub center_x: f64,
    pub center_y: f64,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Annulus {
    /// The default support ring: radii `(h/3, 2h/3)` around `(0, 1 + h)`,
    /// the region where body-truncation forces live for a body scale `h`.
    pub fn body_ring(h: f64) -> Self {
        Annulus {
            center_x: 0.0,
            center_y: WALL_Y + h,
            r_inner: h / 3.0,
            r_outer: 2.0 * h / 3.0,
        }
    }

    /// Whether a point lies inside the closed annulus.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let r = (x - self.center_x).hypot(y - self.center_y);
        r >= self.r_inner && r <= self.r_outer
    }
}

/// A force field `f = (f₁, f₂)` supported in a closed annulus, with exact
/// zeros outside.
///
/// The analytic variant is the standard test source `f = ∇⊥G` with
/// `G = a · ring(r) · Θ(θ)` — a smooth ring potential with a generic angular
/// modulation. Writing it as a rotated gradient guarantees exact compact
/// support and smoothness simultaneously. The sampled variant wraps
/// externally produced components (for instance the compact source
/// manufactured by the truncation pipeline) given on their own grid; its
/// constructor enforces the support invariant.
#[derive(Clone, Debug)]
pub enum CompactSource {
    /// `f = ∇⊥[a · ring(r) · (1 + c₁ cos θ + s₁ sin θ)]`.
    Ring { amplitude: f64, annulus: Annulus, angular: (f64, f64) },
    /// Sampled components sharing one physical grid.
    Sampled { f1: ScalarField, f2: ScalarField, annulus: Annulus },
}

/// Smooth degree-8 reference bump on `(0, 1)`, normalised to peak value 1.
/// `C⁷` at the endpoints, so its Fourier transform decays like `|k|⁻⁸`.
fn bump01(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = t * (1.0 - t);
    65536.0 * s.powi(8)
}

/// Derivative of [`bump01`].
fn bump01_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = t * (1.0 - t);
    65536.0 * 8.0 * s.powi(7) * (1.0 - 2.0 * t)
}

impl CompactSource {
    /// The standard ring force at a caller-chosen amplitude, on the default
    /// body ring (`h = 1`). The angular weights are fixed, nonsymmetric
    /// values so the source has no accidental parity.
    pub fn standard_ring(amplitude: f64) -> Self {
        CompactSource::Ring {
            amplitude,
            annulus: Annulus::body_ring(1.0),
            angular: (0.6, 0.3),
        }
    }

    /// The standard ring force at the frozen fixture amplitude.
    pub fn standard() -> Self {
        Self::standard_ring(STANDARD_AMPLITUDE)
    }

    /// Wrap sampled force components on their shared grid, verifying the
    /// support invariant: both components must vanish identically outside
    /// the closed annulus.
    pub fn from_fields(f1: ScalarField, f2: ScalarField, annulus: Annulus) -> Result<Self> {
        f1.check_same_grids(&f2)?;
        for f in [&f1, &f2] {
            let x = f.x_grid().nodes().to_vec();
            for (j, &yj) in f.y_grid().nodes().iter().enumerate() {
                for (i, &xi) in x.iter().enumerate() {
                    let v = f.get(i, j);
                    if v != 0.0 && !annulus.contains(xi, yj) {
                        return Err(Error::SupportContamination {
                            max_leakage: v.abs(),
                            x: xi,
                            y: yj,
                            threshold: 0.0,
                        });
                    }
                }
            }
        }
        Ok(CompactSource::Sampled { f1, f2, annulus })
    }

    /// Declared annular support.
    pub fn annulus(&self) -> Annulus {
        match self {
            CompactSource::Ring { annulus, .. } => *annulus,
            CompactSource::Sampled { annulus, .. } => *annulus,
        }
    }

    /// Representative amplitude scale of the force.
    pub fn amplitude_scale(&self) -> f64 {
        match self {
            CompactSource::Ring { amplitude, .. } => amplitude.abs(),
            CompactSource::Sampled { f1, f2, .. } => f1.max_abs().max(f2.max_abs()),
        }
    }

    /// Point evaluation of both components. For the ring variant the
    /// rotated gradient `∇⊥G = (-∂ᵧG, ∂ₓG)` is evaluated in closed form.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            CompactSource::Ring { amplitude, annulus, angular } => {
                let dx = x - annulus.center_x;
                let dy = y - annulus.center_y;
                let r = dx.hypot(dy);
                if r < annulus.r_inner || r > annulus.r_outer {
                    return (0.0, 0.0);
                }
                let width = annulus.r_outer - annulus.r_inner;
                let t = (r - annulus.r_inner) / width;
                let (p, pd) = (bump01(t), bump01_d(t) / width);
                let (sin_t, cos_t) = (dy / r, dx / r);
                let theta = dy.atan2(dx);
                let (c1, s1) = *angular;
                let ang = 1.0 + c1 * theta.cos() + s1 * theta.sin();
                let ang_d = -c1 * theta.sin() + s1 * theta.cos();
                // ∂ₓG = a (p' ∂ₓr Θ + p Θ' ∂ₓθ), ∂ₓθ = -sinθ/r; likewise ∂ᵧ.
                let gx = amplitude * (pd * cos_t * ang - p * ang_d * sin_t / r);
                let gy = amplitude * (pd * sin_t * ang + p * ang_d * cos_t / r);
                (-gy, gx)
            }
            CompactSource::Sampled { f1, f2, .. } => (f1.sample(x, y), f2.sample(x, y)),
        }
    }

    /// Transform the force onto a spectral grid: `f̂(k, y) = ∫ f(x, y) e^{ikx} dx`
    /// by trapezoid quadrature over the support (spectrally accurate because
    /// the integrand is smooth and compactly supported). Rows outside the
    /// annulus in `y` are exactly zero, which keeps the mode solver's
    /// source-tail contract intact.
    pub fn spectral_on(
        &self,
        k: &WaveNumberGrid,
        y: &WallNormalGrid,
    ) -> Result<(SpectralField, SpectralField)> {
        let ann = self.annulus();
        let (x_lo, x_hi) = (ann.center_x - ann.r_outer, ann.center_x + ann.r_outer);
        let (y_lo, y_hi) = (ann.center_y - ann.r_outer, ann.center_y + ann.r_outer);
        let nq = match self {
            CompactSource::Ring { .. } => SOURCE_QUADRATURE_POINTS,
            CompactSource::Sampled { f1, .. } => (2 * f1.x_grid().len() + 1).max(1025),
        };
        let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = exec::map_indexed(y.len(), |j| {
            let yj = y.y(j);
            if yj < y_lo || yj > y_hi {
                return (
                    vec![Complex64::default(); k.len()],
                    vec![Complex64::default(); k.len()],
                );
            }
            let r1 = transform_slice(k, x_lo, x_hi, nq, |x| self.eval(x, yj).0);
            let r2 = transform_slice(k, x_lo, x_hi, nq, |x| self.eval(x, yj).1);
            (r1, r2)
        });
        let mut s1 = SpectralField::zeros(k.clone(), y.clone());
        let mut s2 = SpectralField::zeros(k.clone(), y.clone());
        for (j, (r1, r2)) in rows.iter().enumerate() {
            s1.row_mut(j).copy_from_slice(r1);
            s2.row_mut(j).copy_from_slice(r2);
        }
        Ok((s1, s2))
    }
}

/// Trapezoid transform of one compact slice: `Σ_m w_m g(x_m) e^{i k x_m}`.
/// The phase is advanced by incremental rotation (one complex multiply per
/// node); drift over a few thousand steps is far below quadrature error.
fn transform_slice(
    k: &WaveNumberGrid,
    x_lo: f64,
    x_hi: f64,
    nq: usize,
    g: impl Fn(f64) -> f64,
) -> Vec<Complex64> {
    let dq = (x_hi - x_lo) / (nq - 1) as f64;
    let samples: Vec<f64> = (0..nq).map(|m| g(x_lo + dq * m as f64)).collect();
    (0..k.len())
        .map(|i| {
            let ki = k.k(i);
            let step = Complex64::from_polar(1.0, ki * dq);
            let mut phase = Complex64::from_polar(1.0, ki * x_lo);
            let mut acc = Complex64::default();
            for (m, &s) in samples.iter().enumerate() {
                if s != 0.0 {
                    // Trapezoid endpoint halving is immaterial: the bump
                    // vanishes at both endpoints.
                    let w = if m == 0 || m == nq - 1 { 0.5 * dq } else { dq };
                    acc += phase * (s * w);
                }
                phase *= step;
            }
            acc
        })
        .collect()
}

/// Resolution and iteration controls for the fixed-point solver.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct AlphaConfig {
    /// Smallest resolved wavenumber; controls how far in `y` the far field
    /// can be trusted (roughly up to a multiple of `1/k_min`).
    pub k_min: f64,
    /// Largest resolved wavenumber; must cover the source spectrum.
    pub k_max: f64,
    /// Geometric wavenumber nodes per sign.
    pub per_side: usize,
    /// Top of the wall-normal grid.
    pub y_max: f64,
    /// Top of the uniformly fine wall-normal band. Must cover the force
    /// support: the exponential integrator is second order in the source
    /// variation, so the spacing across the source controls the equation
    /// error of the whole solve.
    pub fine_top: f64,
    /// Uniform spacing inside the fine band.
    pub fine_delta: f64,
    /// Geometric stretching ratio above the fine band.
    pub ratio: f64,
    /// Cap on the stretched spacing.
    pub delta_cap: f64,
    /// Maximum Picard sweeps before giving up.
    pub max_iter: usize,
    /// Relative increment at which the iteration is declared converged.
    pub tol: f64,
    /// Fraction of `y_max` where the nonlinear-product taper may begin.
    pub taper_start_frac: f64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self::decay_defaults()
    }
}

impl AlphaConfig {
    /// Defaults for far-field decay measurements. The wavenumber floor sits
    /// two decades below the inverse fit window so the small-`k` quadrature
    /// of the inverse transform is converged over the whole window, and the
    /// grid top leaves the slowest vortical tail (`Re λ ≈ √(k_min/2)` per
    /// unit height at the band edge... dominated here by the `k ≈ 1/64`
    /// modes) below the solver's tail tolerance. The fine wall region covers
    /// the standard ring support (`y ∈ [4/3, 8/3]`) with enough margin that
    /// the marching scheme's second-order source error — measured at
    /// `≈ 73·Δ²` for the ring's sharp radial profile — sits near `7e-5`,
    /// under the `1e-4` interior momentum-residual budget.
    pub fn decay_defaults() -> Self {
        AlphaConfig {
            k_min: 1e-4,
            k_max: 16.0,
            per_side: 160,
            y_max: 220.0,
            fine_top: 2.8,
            fine_delta: 0.001,
            ratio: 1.03,
            delta_cap: 3.0,
            max_iter: 60,
            tol: 1e-9,
            taper_start_frac: 0.85,
        }
    }

    /// Defaults for near-field comparisons (weak–strong checks): the same
    /// fine wall region as [`AlphaConfig::decay_defaults`], wider in `k`,
    /// shorter in `y`.
    pub fn weak_strong_defaults() -> Self {
        AlphaConfig {
            k_min: 1.0 / 64.0,
            k_max: 64.0,
            per_side: 128,
            y_max: 60.0,
            fine_top: 2.8,
            fine_delta: 0.001,
            ratio: 1.025,
            delta_cap: 1.5,
            max_iter: 60,
            tol: 1e-9,
            taper_start_frac: 0.85,
        }
    }

    /// Build the spectral grids described by this configuration.
    pub fn grids(&self) -> Result<(WaveNumberGrid, WallNormalGrid)> {
        let k = WaveNumberGrid::clustered(self.k_min, self.k_max, self.per_side)?;
        let y = WallNormalGrid::fine_then_stretched(
            self.fine_top,
            self.fine_delta,
            self.ratio,
            self.delta_cap,
            self.y_max,
        )?;
        Ok((k, y))
    }

    /// Fit window for decay reports: a fixed decade `[y_max/30, y_max/3]`,
    /// far above the source yet far below the grid top.
    pub fn fit_window(&self) -> (f64, f64) {
        (self.y_max / 30.0, self.y_max / 3.0)
    }
}

/// Quintic smoothstep: 0 for `t ≤ 0`, 1 for `t ≥ 1`, C² in between.
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Per-row weights that switch the nonlinear product off near the grid top.
///
/// The convolution `(v̂ ∗ ω̂)` inherits the slowest vortical tail in the
/// band and therefore cannot satisfy the mode solver's strict source-tail
/// bound on a finite grid. The taper removes an `O(10⁻⁷)`-relative piece of
/// the quadratic term in the top ~15% of the domain — far above any
/// measurement window — and makes the tail bound hold exactly. Residual
/// diagnostics restrict themselves to the untapered region.
fn taper_weights(y: &WallNormalGrid, start_frac: f64) -> Vec<f64> {
    let n = y.len();
    let y_end = y.y(n - 1 - TAPER_ZERO_NODES);
    let y_start = (start_frac * y.y_max()).min(y_end - 0.1 * y.y_max());
    y.nodes()
        .iter()
        .map(|&yj| smoothstep((y_end - yj) / (y_end - y_start)))
        .collect()
}

/// Convergence history of a Picard run.
#[derive(Clone, Debug)]
pub struct PicardReport {
    /// Sweeps actually performed.
    pub iterations: usize,
    /// Absolute sup-norm increment after each sweep.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub rho_trace: Vec<f64>,
    /// Final state scale used for the relative convergence test.
    pub scale: f64,
    /// Whether the relative tolerance was reached.
    pub converged: bool,
}

impl PicardReport {
    /// Observed contraction factor: the largest increment ratio over the
    /// sweeps whose predecessor increment is safely above round-off.
    pub fn contraction_factor(&self) -> Option<f64> {
        let floor = 1e-12 * self.scale;
        let mut worst: Option<f64> = None;
        for i in 1..self.increments.len() {
            if self.increments[i - 1] > floor {
                let r = self.increments[i] / self.increments[i - 1];
                worst = Some(worst.map_or(r, |w: f64| w.max(r)));
            }
        }
        worst
    }
}

/// Converged output of the fixed-point solver, with its diagnostics.
#[derive(Clone, Debug)]
pub struct AlphaSolution {
    /// Vorticity transform `ω̂(k, y)`.
    pub vorticity: SpectralField,
    /// Horizontal velocity transform `û(k, y)`.
    pub u: SpectralField,
    /// Vertical velocity transform `v̂(k, y)`.
    pub v: SpectralField,
    /// Harmonic contribution to `û`; enters the pressure closed form.
    pub harmonic_u: SpectralField,
    /// Transformed force component `f̂₁`.
    pub f1: SpectralField,
    /// Transformed force component `f̂₂`.
    pub f2: SpectralField,
    /// Taper weights actually applied to the nonlinear product.
    pub taper: Vec<f64>,
    /// Fraction of `y_max` below which the equation is untapered.
    pub untapered_top: f64,
    /// Convergence history.
    pub report: PicardReport,
}

/// Run the Picard iteration for a compact force on the configured grids.
///
/// Errors with [`Error::PicardDiverged`] after three consecutive
/// non-contracting sweeps (the behaviour demanded of super-critical
/// amplitudes) and with [`Error::PicardMaxIter`] if the tolerance is not
/// met within the sweep budget.
pub fn solve(source: &CompactSource, cfg: &AlphaConfig) -> Result<AlphaSolution> {
    let (kg, yg) = cfg.grids()?;
    let (f1, f2) = source.spectral_on(&kg, &yg)?;
    let taper = taper_weights(&yg, cfg.taper_start_frac);
    let n = yg.len();
    let y_start = {
        let y_end = yg.y(n - 1 - TAPER_ZERO_NODES);
        (cfg.taper_start_frac * yg.y_max()).min(y_end - 0.1 * yg.y_max())
    };

    let mut w = SpectralField::zeros(kg.clone(), yg.clone());
    let mut u = SpectralField::zeros(kg.clone(), yg.clone());
    let mut v = SpectralField::zeros(kg.clone(), yg.clone());
    let mut harmonic_u = SpectralField::zeros(kg.clone(), yg.clone());

    let mut increments = Vec::new();
    let mut rho_trace = Vec::new();
    let mut scale = 0.0_f64;
    let mut consecutive_growth = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 0..cfg.max_iter {
        iterations = iter + 1;

        // Assemble the frozen-coefficient mode sources.
        let mut q0 = product_spectrum(&u, &w)?;
        let mut q1 = product_spectrum(&v, &w)?;
        apply_taper(&mut q0, &taper);
        apply_taper(&mut q1, &taper);
        q0.axpy(Complex64::new(1.0, 0.0), &f2)?;
        q1.axpy(Complex64::new(-1.0, 0.0), &f1)?;

        let modes = solve_all_modes(&q0, &q1)?;

        let inc = diff_scale(&modes.vorticity, &w)
            .max(diff_scale(&modes.u, &u))
            .max(diff_scale(&modes.v, &v));
        w = modes.vorticity;
        u = modes.u;
        v = modes.v;
        harmonic_u = modes.harmonic_u;
        scale = w.max_abs().max(u.max_abs()).max(v.max_abs());

        if !inc.is_finite() || !scale.is_finite() {
            increments.push(inc);
            return Err(Error::PicardDiverged { iterations, rho_trace });
        }
        if let Some(&prev) = increments.last() {
            if prev > 0.0 {
                let rho = inc / prev;
                rho_trace.push(rho);
                if rho >= 1.0 {
                    consecutive_growth += 1;
                    if consecutive_growth >= 3 {
                        increments.push(inc);
                        return Err(Error::PicardDiverged { iterations, rho_trace });
                    }
                } else {
                    consecutive_growth = 0;
                }
            }
        }
        increments.push(inc);

        if scale == 0.0 || inc <= cfg.tol * scale {
            converged = true;
            break;
        }
    }

    if !converged {
        let last = increments.last().copied().unwrap_or(f64::INFINITY);
        return Err(Error::PicardMaxIter {
            max_iter: cfg.max_iter,
            last_increment: if scale > 0.0 { last / scale } else { last },
            tol: cfg.tol,
        });
    }

    Ok(AlphaSolution {
        vorticity: w,
        u,
        v,
        harmonic_u,
        f1,
        f2,
        taper,
        untapered_top: y_start,
        report: PicardReport { iterations, increments, rho_trace, scale, converged },
    })
}

/// Column-wise derivative with a single windowed-stencil application.
fn y_derivative_stencil(f: &SpectralField, order: usize, stencil: usize) -> SpectralField {
    let ys = f.y_grid().nodes().to_vec();
    let mut out = SpectralField::zeros(f.k_grid().clone(), f.y_grid().clone());
    for i in 0..f.k_grid().len() {
        let profile = f.profile(i);
        let d = crate::fd::derivative_complex(&ys, &profile, order, stencil);
        out.set_profile(i, &d);
    }
    out
}

/// Scale each row of a spectral field by a per-row real weight, skipping
/// rows whose weight is exactly one.
fn apply_taper(f: &mut SpectralField, taper: &[f64]) {
    for (j, &t) in taper.iter().enumerate() {
        if t == 1.0 {
            continue;
        }
        for z in f.row_mut(j) {
            *z *= t;
        }
    }
}

/// Sup-norm of the difference of two same-grid spectral fields.
fn diff_scale(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut d = a.clone();
    d.axpy(Complex64::new(-1.0, 0.0), b).expect("same grids");
    d.max_abs()
}

/// One height sample of the far-field decay scan.
#[derive(Clone, Copy, Debug)]
pub struct DecayRow {
    pub y: f64,
    /// `sup_x |u(·, y)|` (Euclidean magnitude of the velocity).
    pub sup_velocity: f64,
    /// `sup_x |∇u(·, y)|` (Frobenius magnitude of the gradient).
    pub sup_gradient: f64,
}

/// Weight-space parameter used by the report's membership checks.
const REPORT_ALPHA: f64 = 4.0;

/// Fitted far-field decay of the velocity and its gradient.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Log–log fit of `sup_x |u|`; `None` for a trivial field.
    pub velocity: Option<DecayFit>,
    /// Log–log fit of `sup_x |∇u|`; `None` for a trivial field.
    pub gradient: Option<DecayFit>,
    /// Weighted-space norm of `∂ₓû` (indices `(α−1, 3/2, 2)`); finiteness
    /// is the membership check for the gradient's spectral component.
    pub ux_norm: f64,
    /// Weighted-space norm of `∂ₓv̂` (indices `(α−1, 3/2, 3)`).
    pub vx_norm: f64,
    /// Set when the solution is identically zero (nothing to fit).
    pub trivial: bool,
    pub window: (f64, f64),
}

impl AlphaSolution {
    fn k_grid(&self) -> &WaveNumberGrid {
        self.u.k_grid()
    }

    fn y_grid(&self) -> &WallNormalGrid {
        self.u.y_grid()
    }

    /// Pressure transform in closed form:
    /// `p̂ = -φ̂ - (1/4π)(û ∗ û + v̂ ∗ v̂)`
    /// with `φ̂` the harmonic contribution to `û`. Derived by eliminating
    /// `∂ᵧ²` from the transformed momentum equations via the mode system;
    /// both momentum components then hold identically, which
    /// [`Self::momentum_residual`] verifies through an independent route.
    pub fn pressure_spectrum(&self) -> Result<SpectralField> {
        let mut p = self.harmonic_u.scaled(Complex64::new(-1.0, 0.0));
        let uu = product_spectrum(&self.u, &self.u)?;
        let vv = product_spectrum(&self.v, &self.v)?;
        p.axpy(Complex64::new(-0.5, 0.0), &uu)?;
        p.axpy(Complex64::new(-0.5, 0.0), &vv)?;
        Ok(p)
    }

    /// Mass-conservation defect `max |−ik û + ∂ᵧ v̂|`, relative to the
    /// larger of the two term scales. The identity is exact in the
    /// continuum; what is measured is the finite-difference defect of the
    /// wall-normal derivative.
    pub fn divergence_metric(&self) -> f64 {
        let vy = self.v.y_derivative(5);
        let k = self.k_grid();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for j in 0..self.y_grid().len() {
            let urow = self.u.row(j);
            let vrow = vy.row(j);
            for i in 0..k.len() {
                let ku = Complex64::new(0.0, -k.k(i)) * urow[i];
                scale = scale.max(ku.norm()).max(vrow[i].norm());
                worst = worst.max((ku + vrow[i]).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Independent momentum residual.
    ///
    /// Evaluates both momentum equations with the advective-form quadratic
    /// terms — a different convolution arrangement from anything the solver
    /// used — together with the closed-form pressure, wall-normal
    /// derivatives by finite differences, and returns the worst defect
    /// relative to the largest participating term.
    ///
    /// Restricted to `|k| ≤ k_band` (larger wavenumbers carry negligible
    /// energy but their boundary layers are too thin for the wall-normal
    /// stencil; per-mode accuracy there is covered by the dedicated
    /// cross-solver checks) and to heights below the taper start, where the
    /// untapered equation is the one actually solved.
    pub fn momentum_residual(&self, k_band: f64) -> Result<f64> {
        let k = self.k_grid();
        let y = self.y_grid();
        let p = self.pressure_spectrum()?;

        // Seven-node single-application stencils throughout: the defect
        // being detected is ~1e-6 of the field scale, so the verification
        // stencil must truncate well below that even on the stretched
        // spacing (~0.05–0.1) across the source band, where the force's
        // own curvature dominates the profiles.
        let dxu = self.u.mode_scaled(|kk| Complex64::new(0.0, -kk));
        let dxv = self.v.mode_scaled(|kk| Complex64::new(0.0, -kk));
        let uy = y_derivative_stencil(&self.u, 1, 7);
        let vy = y_derivative_stencil(&self.v, 1, 7);
        let uyy = y_derivative_stencil(&self.u, 2, 7);
        let vyy = y_derivative_stencil(&self.v, 2, 7);
        let py = y_derivative_stencil(&p, 1, 7);

        // Advective form: (u·∇)u = (u ∂ₓu + v ∂ᵧu, u ∂ₓv + v ∂ᵧv).
        let mut n1 = product_spectrum(&self.u, &dxu)?;
        n1.axpy(Complex64::new(1.0, 0.0), &product_spectrum(&self.v, &uy)?)?;
        let mut n2 = product_spectrum(&self.u, &dxv)?;
        n2.axpy(Complex64::new(1.0, 0.0), &product_spectrum(&self.v, &vy)?)?;

        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        // Start at the first row with a centred stencil: the wall rows use
        // one-sided differences whose truncation error would swamp the
        // defect being measured. (Wall behaviour is still covered: centred
        // rows reference the wall values as data.)
        for j in 3..y.len() {
            // The ∂ᵧ stencil reaches three rows up; stay clear of the taper.
            let top = (j + 3).min(y.len() - 1);
            if y.y(top) > self.untapered_top {
                break;
            }
            for i in 0..k.len() {
                let kk = k.k(i);
                if kk.abs() > k_band {
                    continue;
                }
                let ik = Complex64::new(0.0, -kk); // transform of ∂ₓ
                let lap_u = uyy.row(j)[i] - kk * kk * self.u.row(j)[i];
                let lap_v = vyy.row(j)[i] - kk * kk * self.v.row(j)[i];
                let r1 = lap_u - ik * self.u.row(j)[i] - n1.row(j)[i] - ik * p.row(j)[i]
                    - self.f1.row(j)[i];
                let r2 = lap_v - ik * self.v.row(j)[i] - n2.row(j)[i] - py.row(j)[i]
                    - self.f2.row(j)[i];
                for term in [
                    lap_u.norm(),
                    lap_v.norm(),
                    (ik * p.row(j)[i]).norm(),
                    self.f1.row(j)[i].norm(),
                    n1.row(j)[i].norm(),
                ] {
                    scale = scale.max(term);
                }
                worst = worst.max(r1.norm()).max(r2.norm());
            }
        }
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(worst / scale)
    }

    /// Energy identity check.
    ///
    /// For the exact problem `‖u‖²_D = -∫ f·u` (the advection and pressure
    /// terms do no work on a divergence-free field vanishing at the wall).
    /// Both sides are evaluated by Plancherel quadrature; returns
    /// `(‖u‖²_D, ∫ f·u, relative gap)`.
    pub fn energy_identity(&self) -> (f64, f64, f64) {
        let wk = self.k_grid().trapezoid_weights();
        let wy = self.y_grid().trapezoid_weights();
        let uy = self.u.y_derivative(5);
        let vy = self.v.y_derivative(5);
        let inv_2pi = 0.5 / std::f64::consts::PI;

        let mut d2 = 0.0;
        let mut work = 0.0;
        for j in 0..self.y_grid().len() {
            let (urow, vrow) = (self.u.row(j), self.v.row(j));
            let (uyr, vyr) = (uy.row(j), vy.row(j));
            let (f1r, f2r) = (self.f1.row(j), self.f2.row(j));
            for i in 0..self.k_grid().len() {
                let kk = self.k_grid().k(i);
                let wgt = wk[i] * wy[j] * inv_2pi;
                d2 += wgt
                    * (uyr[i].norm_sqr()
                        + vyr[i].norm_sqr()
                        + kk * kk * (urow[i].norm_sqr() + vrow[i].norm_sqr()));
                work += wgt * (f1r[i] * urow[i].conj() + f2r[i] * vrow[i].conj()).re;
            }
        }
        let gap = if d2 > 0.0 { (d2 + work).abs() / d2 } else { 0.0 };
        (d2, work, gap)
    }

    /// Far-field decay scan and log–log fits.
    ///
    /// For each grid height inside (a slightly padded copy of) the fit
    /// window, the velocity and its gradient are evaluated on an adaptive
    /// uniform scan in `x` — half-width `max(80, 6y)`, step `~y/40` — wide
    /// enough to capture the sup (the irrotational far field varies on the
    /// scale of `y` itself) while staying inside the range where the
    /// geometric wavenumber quadrature still resolves the oscillation.
    pub fn decay_report(&self, window: (f64, f64)) -> Result<DecayReport> {
        let k = self.k_grid().clone();
        let wk = k.trapezoid_weights();
        let y = self.y_grid();

        let dxu = self.u.mode_scaled(|kk| Complex64::new(0.0, -kk));
        let dxv = self.v.mode_scaled(|kk| Complex64::new(0.0, -kk));
        let ux_norm = b_norm(&dxu, &BIndices::new(REPORT_ALPHA - 1.0, 1.5, 2.0));
        let vx_norm = b_norm(&dxv, &BIndices::new(REPORT_ALPHA - 1.0, 1.5, 3.0));
        if self.u.max_abs() == 0.0 && self.v.max_abs() == 0.0 {
            return Ok(DecayReport {
                rows: Vec::new(),
                velocity: None,
                gradient: None,
                ux_norm,
                vx_norm,
                trivial: true,
                window,
            });
        }
        let uy = self.u.y_derivative(5);
        let vy = self.v.y_derivative(5);

        let idx = y.window_indices(window.0 / 1.3, window.1 * 1.3);
        if idx.is_empty() {
            return Err(Error::FitWindow(format!(
                "no grid rows inside the decay window [{}, {}]",
                window.0, window.1
            )));
        }
        let rows: Vec<DecayRow> = exec::map_indexed(idx.len(), |m| {
            let j = idx[m];
            let yj = y.y(j);
            let t = yj - WALL_Y;
            let half = (6.0 * t).max(80.0);
            let dx = (t / 40.0).max(0.05);
            let nx = (2.0 * half / dx).ceil() as usize + 1;
            let eval = |f: &SpectralField| evaluate_row_uniform(&k, &wk, f.row(j), -half, dx, nx);
            let (us, vs) = (eval(&self.u), eval(&self.v));
            let sup_velocity = us
                .iter()
                .zip(&vs)
                .map(|(a, b)| a.hypot(*b))
                .fold(0.0_f64, f64::max);
            let (uxs, uys) = (eval(&dxu), eval(&uy));
            let (vxs, vys) = (eval(&dxv), eval(&vy));
            let mut sup_gradient = 0.0_f64;
            for m in 0..nx {
                let g = (uxs[m] * uxs[m] + uys[m] * uys[m] + vxs[m] * vxs[m]
                    + vys[m] * vys[m])
                    .sqrt();
                sup_gradient = sup_gradient.max(g);
            }
            DecayRow { y: t, sup_velocity, sup_gradient }
        });

        let ts: Vec<f64> = rows.iter().map(|r| r.y).collect();
        let sup_v: Vec<f64> = rows.iter().map(|r| r.sup_velocity).collect();
        let sup_g: Vec<f64> = rows.iter().map(|r| r.sup_gradient).collect();
        let velocity = Some(fit_ls_decay(&ts, &sup_v, window)?);
        let gradient = Some(fit_ls_decay(&ts, &sup_g, window)?);
        Ok(DecayReport { rows, velocity, gradient, ux_norm, vx_norm, trivial: false, window })
    }

    /// Stream function transform `ψ̂ = v̂ / (−ik)` (gauge: `v = ∂ₓψ`,
    /// `u = −∂ᵧψ`). Finite at the band floor because `v̂(k→0, ·) → 0` by
    /// continuity and the wall condition.
    pub fn stream_spectrum(&self) -> SpectralField {
        self.v.mode_scaled(|kk| Complex64::new(0.0, 1.0 / kk))
    }

    /// Physical-space export on a uniform window.
    ///
    /// The stream function is evaluated directly from its transform and the
    /// velocity is its discrete curl, so the exported pair satisfies the
    /// centred-difference continuity equation identically (the x- and
    /// y-difference operators commute on a tensor grid).
    pub fn physical_velocity(&self, x: &XGrid) -> (ScalarField, PhysicalVectorField) {
        let psi_hat = self.stream_spectrum();
        let k = self.k_grid().clone();
        let wk = k.trapezoid_weights();
        let y = self.y_grid().clone();
        let nx = x.len();
        let rows: Vec<Vec<f64>> = exec::map_indexed(y.len(), |j| {
            evaluate_row_uniform(&k, &wk, psi_hat.row(j), x.x0(), x.dx(), nx)
        });
        let mut psi = ScalarField::zeros(x.clone(), y);
        for (j, row) in rows.iter().enumerate() {
            psi.row_mut(j).copy_from_slice(row);
        }
        let vel = curl_of_stream(&psi);
        (psi, vel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::divergence_residual;
    use crate::norms::u_alpha_norm;

    /// Small, fast configuration used by the unit tests only.
    fn small_cfg() -> AlphaConfig {
        AlphaConfig {
            k_min: 1.0 / 32.0,
            k_max: 8.0,
            per_side: 48,
            y_max: 60.0,
            fine_top: 3.5,
            fine_delta: 0.02,
            ratio: 1.06,
            delta_cap: 4.0,
            max_iter: 60,
            tol: 1e-9,
            taper_start_frac: 0.85,
        }
    }

    #[test]
    fn ring_gradient_closed_form_matches_finite_differences() {
        let src = CompactSource::standard_ring(0.8);
        let g_of = |x: f64, y: f64| {
            // Reconstruct the scalar potential G directly for the check.
            let ann = src.annulus();
            let (dx, dy) = (x - ann.center_x, y - ann.center_y);
            let r = dx.hypot(dy);
            let t = (r - ann.r_inner) / (ann.r_outer - ann.r_inner);
            let theta = dy.atan2(dx);
            0.8 * bump01(t) * (1.0 + 0.6 * theta.cos() + 0.3 * theta.sin())
        };
        // Central differences at h = 1e-4: truncation ~h²·G‴ ≈ 1e-4 with
        // the ring's third derivatives of order 1e3–1e4; a sign or factor
        // error in the closed form would show up at order 10.
        let h = 1e-4;
        for &(x, y) in &[(0.2, 2.45), (-0.4, 1.75), (0.5, 2.1), (0.05, 1.4)] {
            let (f1, f2) = src.eval(x, y);
            let gy = (g_of(x, y + h) - g_of(x, y - h)) / (2.0 * h);
            let gx = (g_of(x + h, y) - g_of(x - h, y)) / (2.0 * h);
            assert!((f1 + gy).abs() < 1e-3, "f1 vs -∂ᵧG at ({x},{y})");
            assert!((f2 - gx).abs() < 1e-3, "f2 vs ∂ₓG at ({x},{y})");
        }
        // Exact zeros off the ring.
        assert_eq!(src.eval(0.0, 2.0), (0.0, 0.0));
        assert_eq!(src.eval(3.0, 2.0), (0.0, 0.0));
    }

    #[test]
    fn standard_source_transform_matches_direct_quadrature() {
        let src = CompactSource::standard_ring(0.7);
        let cfg = small_cfg();
        let (kg, yg) = cfg.grids().unwrap();
        let (f1, f2) = src.spectral_on(&kg, &yg).unwrap();
        assert!(f1.hermitian_error() < 1e-13 * f1.max_abs());
        assert!(f2.hermitian_error() < 1e-13 * f2.max_abs());

        // Independent check: plain complex-exponential quadrature at a
        // different node count, evaluated at a handful of (k, y) pairs.
        let ann = src.annulus();
        let (x_lo, x_hi) = (ann.center_x - ann.r_outer, ann.center_x + ann.r_outer);
        for &(i, j) in &[(5usize, 20usize), (60, 44), (90, 70)] {
            let (kk, yj) = (kg.k(i), yg.y(j));
            let nq = 3000;
            let dq = (x_hi - x_lo) / (nq - 1) as f64;
            let mut acc = (Complex64::default(), Complex64::default());
            for m in 0..nq {
                let x = x_lo + dq * m as f64;
                let (fx, fy) = src.eval(x, yj);
                let ph = Complex64::from_polar(dq, kk * x);
                acc.0 += ph * fx;
                acc.1 += ph * fy;
            }
            for (got, want) in [(f1.get(i, j), acc.0), (f2.get(i, j), acc.1)] {
                assert!(
                    (got - want).norm() <= 1e-9 * (1.0 + want.norm()),
                    "k={kk} y={yj}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn sampled_variant_agrees_with_analytic_route() {
        let src = CompactSource::standard_ring(0.9);
        let ann = src.annulus();
        // Sample the same ring on its own fine wall-anchored grid, then
        // re-transform (mirrors how truncation-produced forces arrive).
        let x = XGrid::centered(0.75, 1024).unwrap();
        let y = WallNormalGrid::uniform(3.0, 1001).unwrap();
        let f1 = ScalarField::from_fn(x.clone(), y.clone(), |xx, yy| src.eval(xx, yy).0);
        let f2 = ScalarField::from_fn(x, y, |xx, yy| src.eval(xx, yy).1);
        let sampled = CompactSource::from_fields(f1, f2, ann).unwrap();

        let cfg = small_cfg();
        let (kg, yg) = cfg.grids().unwrap();
        let (a1, a2) = src.spectral_on(&kg, &yg).unwrap();
        let (b1, b2) = sampled.spectral_on(&kg, &yg).unwrap();
        let scale = a1.max_abs().max(a2.max_abs());
        let mut worst = 0.0_f64;
        for j in 0..yg.len() {
            for i in 0..kg.len() {
                worst = worst.max((a1.get(i, j) - b1.get(i, j)).norm());
                worst = worst.max((a2.get(i, j) - b2.get(i, j)).norm());
            }
        }
        // Bilinear sampling on the 1001-row source grid bounds the
        // difference; the x-quadrature on both routes is converged.
        assert!(worst <= 5e-4 * scale, "sampled mismatch {worst:.3e}");
    }

    #[test]
    fn sampled_support_contamination_is_rejected() {
        let ann = Annulus::body_ring(1.0);
        let x = XGrid::centered(1.0, 64).unwrap();
        let y = WallNormalGrid::uniform(3.0, 65).unwrap();
        // A field leaking outside the ring (nonzero at the centre point).
        let bad = ScalarField::from_fn(x.clone(), y.clone(), |xx, yy| {
            if xx.hypot(yy - 2.0) < 0.2 { 1.0 } else { 0.0 }
        });
        let zero = ScalarField::zeros(x, y);
        match CompactSource::from_fields(bad, zero, ann) {
            Err(Error::SupportContamination { .. }) => {}
            other => panic!("expected support contamination, got {other:?}"),
        }
    }

    #[test]
    fn taper_is_one_low_and_exactly_zero_on_trailing_nodes() {
        let cfg = small_cfg();
        let (_, yg) = cfg.grids().unwrap();
        let t = taper_weights(&yg, cfg.taper_start_frac);
        let n = yg.len();
        for j in 0..n {
            if yg.y(j) <= 0.5 * yg.y_max() {
                assert_eq!(t[j], 1.0);
            }
        }
        for j in n - 1 - TAPER_ZERO_NODES..n {
            assert_eq!(t[j], 0.0);
        }
        // Monotone non-increasing.
        for j in 1..n {
            assert!(t[j] <= t[j - 1] + 1e-15);
        }
    }

    #[test]
    fn small_amplitude_solution_passes_structural_diagnostics() {
        let cfg = small_cfg();
        let sol = solve(&CompactSource::standard_ring(0.05), &cfg).unwrap();
        assert!(sol.report.converged);

        // Mass conservation: the identity is exact in the continuum; the
        // measured defect is wall-normal FD truncation. On this deliberately
        // coarse test grid the band-edge boundary layer (k = 8, Δ₀ = 0.04)
        // spans ~3 cells, which caps the metric near 2e-3; the default-grid
        // 1e-6 claim is pinned by the integration suite.
        assert!(sol.divergence_metric() < 5e-3, "div {:.3e}", sol.divergence_metric());

        // Momentum residual through the independent advective route; the
        // checked band keeps boundary layers thicker than ~5 grid cells.
        // The residual follows the marching scheme's second-order law in the
        // source band, with a large constant (~73·Δ², verified by halving Δ:
        // 2.9e-2 at 0.02 → 7.4e-3 at 0.01) because the ring's radial profile
        // is sharp. At this test's Δ = 0.02 that is ~3e-2; the default
        // Δ = 0.001 lands near 7e-5, pinned against the 1e-4 budget by the
        // integration suite at default resolution.
        let res = sol.momentum_residual(2.0).unwrap();
        assert!(res < 5e-2, "momentum residual {res:.3e}");

        // Energy identity within quadrature accuracy.
        let (d2, work, gap) = sol.energy_identity();
        assert!(d2 > 0.0 && work < 0.0);
        assert!(gap < 0.02, "energy gap {gap:.3e}");

        // The solution triple lands in the weighted space with finite norm.
        let norm = u_alpha_norm(&sol.vorticity, &sol.u, &sol.v, 4.0).unwrap();
        assert!(norm.total.is_finite() && norm.total > 0.0);
    }

    #[test]
    fn contraction_factor_scales_roughly_linearly_with_amplitude() {
        let cfg = small_cfg();
        let r1 = solve(&CompactSource::standard_ring(0.05), &cfg)
            .unwrap()
            .report
            .contraction_factor()
            .unwrap();
        let r2 = solve(&CompactSource::standard_ring(0.10), &cfg)
            .unwrap()
            .report
            .contraction_factor()
            .unwrap();
        assert!(r1 < 0.5, "unexpectedly slow contraction {r1:.3}");
        // Quadratic nonlinearity: doubling the force should roughly double
        // the contraction factor; allow a generous 1.6x envelope on top.
        assert!(r2 <= 1.6 * 2.0 * r1, "rho(2a)={r2:.3} vs rho(a)={r1:.3}");
        assert!(r2 >= 1.2 * r1, "rho failed to grow with amplitude");
    }

    #[test]
    fn physical_export_is_discretely_divergence_free() {
        let cfg = small_cfg();
        let sol = solve(&CompactSource::standard_ring(0.05), &cfg).unwrap();
        let x = XGrid::centered(20.0, 128).unwrap();
        let (psi, vel) = sol.physical_velocity(&x);
        assert!(psi.max_abs() > 0.0);
        // Centred x/y difference operators commute, so the discrete
        // divergence of the discrete curl vanishes to round-off.
        let div = divergence_residual(&vel);
        let scale = vel.u.max_abs().max(vel.v.max_abs());
        assert!(div <= 1e-12 * scale.max(1e-300), "div residual {div:.3e}");
    }

    #[test]
    #[ignore]
    fn residual_probe() {
        let cfg = small_cfg();
        let sol = solve(&CompactSource::standard_ring(0.05), &cfg).unwrap();
        let k = sol.u.k_grid().clone();
        let y = sol.u.y_grid().clone();
        let p = sol.pressure_spectrum().unwrap();
        let dxu = sol.u.mode_scaled(|kk| Complex64::new(0.0, -kk));
        let dxv = sol.v.mode_scaled(|kk| Complex64::new(0.0, -kk));
        let uy = y_derivative_stencil(&sol.u, 1, 7);
        let vy = y_derivative_stencil(&sol.v, 1, 7);
        let uyy = y_derivative_stencil(&sol.u, 2, 7);
        let vyy = y_derivative_stencil(&sol.v, 2, 7);
        let py = y_derivative_stencil(&p, 1, 7);
        let mut n1 = product_spectrum(&sol.u, &dxu).unwrap();
        n1.axpy(Complex64::new(1.0, 0.0), &product_spectrum(&sol.v, &uy).unwrap()).unwrap();
        let mut n2 = product_spectrum(&sol.u, &dxv).unwrap();
        n2.axpy(Complex64::new(1.0, 0.0), &product_spectrum(&sol.v, &vy).unwrap()).unwrap();
        let mut worst = (0.0f64, 0usize, 0usize, 'x');
        let mut scale = 0.0f64;
        for j in 2..y.len() {
            if y.y((j + 2).min(y.len() - 1)) > sol.untapered_top { break; }
            for i in 0..k.len() {
                let kk = k.k(i);
                if kk.abs() > 2.0 { continue; }
                let ik = Complex64::new(0.0, -kk);
                let lap_u = uyy.row(j)[i] - kk * kk * sol.u.row(j)[i];
                let lap_v = vyy.row(j)[i] - kk * kk * sol.v.row(j)[i];
                let r1 = lap_u - ik * sol.u.row(j)[i] - n1.row(j)[i] - ik * p.row(j)[i]
                    - sol.f1.row(j)[i];
                let r2 = lap_v - ik * sol.v.row(j)[i] - n2.row(j)[i] - py.row(j)[i]
                    - sol.f2.row(j)[i];
                scale = scale.max(lap_u.norm()).max((ik * p.row(j)[i]).norm())
                    .max(sol.f1.row(j)[i].norm());
                if r1.norm() > worst.0 { worst = (r1.norm(), i, j, '1'); }
                if r2.norm() > worst.0 { worst = (r2.norm(), i, j, '2'); }
            }
        }
        let (r, i, j, c) = worst;
        println!("worst residual {:.3e} (rel {:.3e}) at k={:.4} y={:.4} eq{}",
            r, r / scale, k.k(i), y.y(j), c);
        let kk = k.k(i);
        let ik = Complex64::new(0.0, -kk);
        println!("scale {scale:.3e}");
        println!("  lap_u  {:.3e}", (uyy.row(j)[i] - kk * kk * sol.u.row(j)[i]).norm());
        println!("  lap_v  {:.3e}", (vyy.row(j)[i] - kk * kk * sol.v.row(j)[i]).norm());
        println!("  adv_u  {:.3e}  adv_v {:.3e}", (ik * sol.u.row(j)[i]).norm(), (ik * sol.v.row(j)[i]).norm());
        println!("  n1 {:.3e}  n2 {:.3e}", n1.row(j)[i].norm(), n2.row(j)[i].norm());
        println!("  ikp {:.3e}  py {:.3e}", (ik * p.row(j)[i]).norm(), py.row(j)[i].norm());
        println!("  f1 {:.3e}  f2 {:.3e}", sol.f1.row(j)[i].norm(), sol.f2.row(j)[i].norm());
        // profile of residual vs y at this k
        for jj in (2..y.len() - 2).step_by(6) {
            let lap_u = uyy.row(jj)[i] - kk * kk * sol.u.row(jj)[i];
            let r1 = lap_u - ik * sol.u.row(jj)[i] - n1.row(jj)[i] - ik * p.row(jj)[i]
                - sol.f1.row(jj)[i];
            let lap_v = vyy.row(jj)[i] - kk * kk * sol.v.row(jj)[i];
            let r2 = lap_v - ik * sol.v.row(jj)[i] - n2.row(jj)[i] - py.row(jj)[i]
                - sol.f2.row(jj)[i];
            println!("  y={:8.3}  r1={:.3e}  r2={:.3e}", y.y(jj), r1.norm(), r2.norm());
        }
    }

    /// Development probe (run with --ignored --nocapture in release mode):
    /// maps the contraction factor against source amplitude at the default
    /// resolution. Amplitudes come from the `RHO_AMPS` environment variable
    /// (comma-separated); this is the bisection loop that froze
    /// [`STANDARD_AMPLITUDE`].
    #[test]
    #[ignore]
    fn rho_probe() {
        let cfg = AlphaConfig::decay_defaults();
        let amps: Vec<f64> = std::env::var("RHO_AMPS")
            .unwrap_or_else(|_| "9.0".into())
            .split(',')
            .map(|s| s.trim().parse().unwrap())
            .collect();
        for a in amps {
            match solve(&CompactSource::standard_ring(a), &cfg) {
                Ok(sol) => println!(
                    "a={a:<8} rho={:?} iterations={}",
                    sol.report.contraction_factor(),
                    sol.report.iterations
                ),
                Err(e) => println!("a={a:<8} error: {e}"),
            }
        }
    }

    /// Development probe (run with --ignored --nocapture in release mode):
    /// prints the fitted far-field slopes at the default resolution.
    #[test]
    #[ignore]
    fn decay_probe_prints_slopes() {
        let cfg = AlphaConfig::decay_defaults();
        let sol = solve(&CompactSource::standard(), &cfg).unwrap();
        let rep = sol.decay_report(cfg.fit_window()).unwrap();
        let (vf, gf) = (rep.velocity.unwrap(), rep.gradient.unwrap());
        println!(
            "velocity slope {:.4} (se {:.4}), gradient slope {:.4} (se {:.4}), {} rows",
            vf.slope,
            vf.std_error,
            gf.slope,
            gf.std_error,
            rep.rows.len()
        );
        println!("ux_norm {:.4e}, vx_norm {:.4e}", rep.ux_norm, rep.vx_norm);
        println!(
            "iterations {}, rho {:?}",
            sol.report.iterations,
            sol.report.contraction_factor()
        );
    }
}
