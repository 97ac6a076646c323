//! Randomized property suites behind the `verify` subcommand.
//!
//! Four batches, each seeded from the configuration so reports are
//! reproducible byte for byte:
//!
//! - **hardy** — random wall-vanishing velocity fields must satisfy the
//!   discrete Hardy quotient `∫|u|²/(y−1)² ≤ 4·‖u‖²_D` within the configured
//!   margin, and the discretization excess over the constant 4 must not grow
//!   under 2× refinement.
//! - **antisymmetry** — for random divergence-free triples (curls of compact
//!   random stream functions), the defect `|T(a+e₁,v,w) + T(a+e₁,w,v)|` of
//!   the convective trilinear form is pure discretization error: it must be
//!   small and shrink ~4× under 2× refinement.
//! - **manufactured** — the exponential-dichotomy mode solver must reproduce
//!   closed-form manufactured modes across the wavenumber band to near
//!   round-off of its source-interpolation order.
//! - **convolution** — wavenumber-domain products must match the transform
//!   of the pointwise product for random analytic field pairs.
//!
//! The `corruption` knob is a negative control for test harnesses: it skews
//! one velocity component of the antisymmetry fields by the given relative
//! amount, which breaks the divergence-free structure the antisymmetry
//! identity rests on, and the suite must then fail.

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wallwake::calculus::{curl_of_stream, hardy_ratio, trilinear_form};
use wallwake::convolve::product_spectrum;
use wallwake::field::{PhysicalVectorField, ScalarField};
use wallwake::grid::{WallNormalGrid, XGrid, WALL_Y};
use wallwake::oseen::solve_mode;
use wallwake::reference::{manufactured_mode, Bump};
use wallwake::transform::transform_scalar;

use crate::config::PipelineConfig;
use crate::report::{all_pass, write_json, Check};

/// Suite selector for `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum SuiteKind {
    Hardy,
    Antisymmetry,
    Manufactured,
    Convolution,
    All,
}

/// Result of one suite.
#[derive(Debug, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Result of a `verify` run.
#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub config: PipelineConfig,
    /// Negative-control skew applied to the antisymmetry fields (0 = off).
    pub corruption: f64,
    pub suites: Vec<SuiteOutcome>,
    pub pass: bool,
}

/// Random fields per Hardy batch.
const HARDY_FIELDS: usize = 50;
/// The Hardy constant of the half-line inequality.
const HARDY_CONSTANT: f64 = 4.0;
/// Random stream triples per antisymmetry batch.
const ANTISYM_TRIPLES: usize = 4;
/// Modes per manufactured batch.
const MANUFACTURED_MODES: usize = 12;
/// Field pairs per convolution batch.
const CONVOLUTION_PAIRS: usize = 6;

/// Relative agreement demanded from the mode solver on manufactured modes.
/// Matches the cross-oracle acceptance tolerance: the integrator is exact on
/// the homogeneous dynamics, so only source interpolation error remains,
/// and at the suite's step size that sits well below this bound.
const MANUFACTURED_TOL: f64 = 1e-6;
/// Bound on the convolution–transform mismatch. Uniform spectral grids make
/// every shifted node land on the lattice, so the only systematic error is
/// the interpolation across the (mean-free) origin gap; observed values sit
/// near 1e-9, and this bound leaves two orders of slack.
const CONVOLUTION_TOL: f64 = 1e-7;
/// Bound on the relative antisymmetry defect at base resolution; observed
/// values sit near 1e-4 (pure quadrature error), two orders below.
const ANTISYM_DEFECT_TOL: f64 = 1e-2;
/// Acceptance band for the defect's 2× refinement ratio around the
/// second-order value 4 (±30%).
const ANTISYM_RATIO_BAND: (f64, f64) = (2.8, 5.2);

/// Run the selected suites and write `{name}-verify.json`.
pub fn run_property_suites(
    cfg: &PipelineConfig,
    kind: SuiteKind,
    corruption: f64,
) -> Result<SuiteReport> {
    cfg.validate().context("configuration stage")?;
    let selected: Vec<SuiteKind> = match kind {
        SuiteKind::All => vec![
            SuiteKind::Hardy,
            SuiteKind::Antisymmetry,
            SuiteKind::Manufactured,
            SuiteKind::Convolution,
        ],
        one => vec![one],
    };
    let mut suites = Vec::new();
    for s in selected {
        let outcome = match s {
            SuiteKind::Hardy => hardy_suite(cfg)?,
            SuiteKind::Antisymmetry => antisymmetry_suite(cfg, corruption)?,
            SuiteKind::Manufactured => manufactured_suite(cfg)?,
            SuiteKind::Convolution => convolution_suite(cfg)?,
            SuiteKind::All => unreachable!(),
        };
        suites.push(outcome);
    }
    let report = SuiteReport {
        config: cfg.clone(),
        corruption,
        pass: suites.iter().all(|s| s.pass),
        suites,
    };
    write_json(&cfg.artifact("verify.json"), &report).context("report stage")?;
    Ok(report)
}

fn outcome(name: &str, checks: Vec<Check>) -> SuiteOutcome {
    SuiteOutcome { name: name.to_string(), pass: all_pass(&checks), checks }
}

// ---------------------------------------------------------------------------
// hardy
// ---------------------------------------------------------------------------

/// One separable mode of a random wall-vanishing field:
/// `amp · cos(ω x + φ) · (y−1)^p · e^{−c (y−1)}`.
struct WallMode {
    amp: f64,
    omega: f64,
    phase: f64,
    power: f64,
    decay: f64,
}

impl WallMode {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        WallMode {
            amp: rng.gen_range(-1.0..1.0),
            omega: rng.gen_range(0.5..3.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            // powers below 1 put an integrable gradient singularity at the
            // wall, the regime where the Hardy constant is nearly attained
            // and quadrature is under real stress
            power: rng.gen_range(0.55..1.5),
            decay: rng.gen_range(0.8..2.0),
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let t = y - WALL_Y;
        self.amp * (self.omega * x + self.phase).cos() * t.powf(self.power) * (-self.decay * t).exp()
    }
}

/// Sample a random two-component wall-vanishing field on the given grids.
fn random_wall_field(rng: &mut ChaCha8Rng, x: XGrid, y: &WallNormalGrid) -> PhysicalVectorField {
    let um: Vec<WallMode> = (0..3).map(|_| WallMode::random(rng)).collect();
    let vm: Vec<WallMode> = (0..3).map(|_| WallMode::random(rng)).collect();
    PhysicalVectorField::from_fns(
        x,
        y.clone(),
        |xv, yv| um.iter().map(|m| m.eval(xv, yv)).sum(),
        |xv, yv| vm.iter().map(|m| m.eval(xv, yv)).sum(),
    )
}

fn hardy_suite(cfg: &PipelineConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4841_5244);
    let x_base = XGrid::centered(3.0, 64).context("hardy suite")?;
    let y_base = WallNormalGrid::uniform(8.0, 281).context("hardy suite")?;
    let x_fine = XGrid::centered(3.0, 128).context("hardy suite")?;
    let y_fine = WallNormalGrid::uniform(8.0, 561).context("hardy suite")?;

    let mut worst_base = 0.0f64;
    let mut worst_fine = 0.0f64;
    let mut excess_base = 0.0f64;
    let mut excess_fine = 0.0f64;
    for _ in 0..HARDY_FIELDS {
        // the analytic field description is shared, so refinement changes
        // only the quadrature, never the field
        let mut draw = rng.clone();
        let base = random_wall_field(&mut draw, x_base, &y_base);
        let mut draw2 = rng.clone();
        let fine = random_wall_field(&mut draw2, x_fine, &y_fine);
        rng = draw;

        let rb = hardy_ratio(&base).context("hardy suite")?;
        let rf = hardy_ratio(&fine).context("hardy suite")?;
        worst_base = worst_base.max(rb);
        worst_fine = worst_fine.max(rf);
        excess_base = excess_base.max((rb - HARDY_CONSTANT).max(0.0));
        excess_fine = excess_fine.max((rf - HARDY_CONSTANT).max(0.0));
    }

    let bound = HARDY_CONSTANT * (1.0 + cfg.tolerances.hardy_margin);
    let checks = vec![
        Check::at_most(format!("worst Hardy ratio over {HARDY_FIELDS} fields"), worst_base, bound),
        Check::at_most("worst Hardy ratio after 2x refinement", worst_fine, bound),
        // excess over the continuum constant is discretization error and may
        // not grow under refinement (both sides are exactly zero once the
        // quadrature is converged)
        Check::at_most("refined excess over the constant 4", excess_fine, excess_base + 1e-12),
    ];
    Ok(outcome("hardy", checks))
}

// ---------------------------------------------------------------------------
// antisymmetry
// ---------------------------------------------------------------------------

/// Compactly supported random stream function: a sum of separable
/// `(1−t²)⁶` bumps placed strictly inside the test window.
struct StreamSpec {
    parts: Vec<(f64, f64, f64, f64, f64)>,
}

impl StreamSpec {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let parts = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.2..1.2),
                    rng.gen_range(1.0..1.8),
                    rng.gen_range(2.6..3.4),
                    rng.gen_range(0.9..1.3),
                )
            })
            .collect();
        StreamSpec { parts }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        fn bump(t: f64) -> f64 {
            if t.abs() < 1.0 {
                (1.0 - t * t).powi(6)
            } else {
                0.0
            }
        }
        self.parts
            .iter()
            .map(|&(a, x0, wx, y0, wy)| a * bump((x - x0) / wx) * bump((y - y0) / wy))
            .sum()
    }
}

/// Divergence-free field from a stream spec, with an optional negative-
/// control skew of the horizontal component.
fn stream_field(
    spec: &StreamSpec,
    x: XGrid,
    y: &WallNormalGrid,
    corruption: f64,
) -> PhysicalVectorField {
    let psi = ScalarField::from_fn(x, y.clone(), |xv, yv| spec.eval(xv, yv));
    let mut vel = curl_of_stream(&psi);
    if corruption != 0.0 {
        for j in 0..y.len() {
            for uv in vel.u.row_mut(j) {
                *uv *= 1.0 + corruption;
            }
        }
    }
    vel
}

/// Worst relative defect over the triples on one grid pair, plus the worst
/// absolute defect (the refinement-ratio numerator).
fn antisymmetry_defects(
    specs: &[[StreamSpec; 3]],
    x: XGrid,
    y: &WallNormalGrid,
    corruption: f64,
) -> Result<(f64, f64)> {
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for triple in specs {
        let a = stream_field(&triple[0], x, y, corruption);
        let v = stream_field(&triple[1], x, y, 0.0);
        let w = stream_field(&triple[2], x, y, 0.0);
        let mut drifted = a.clone();
        for j in 0..y.len() {
            for uv in drifted.u.row_mut(j) {
                *uv += 1.0;
            }
        }
        let t1 = trilinear_form(&drifted, &v, &w).context("antisymmetry suite")?;
        let t2 = trilinear_form(&drifted, &w, &v).context("antisymmetry suite")?;
        let defect = (t1 + t2).abs();
        worst_abs = worst_abs.max(defect);
        worst_rel = worst_rel.max(defect / t1.abs().max(t2.abs()).max(1e-300));
    }
    Ok((worst_rel, worst_abs))
}

fn antisymmetry_suite(cfg: &PipelineConfig, corruption: f64) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x414e_5459);
    let specs: Vec<[StreamSpec; 3]> = (0..ANTISYM_TRIPLES)
        .map(|_| {
            [StreamSpec::random(&mut rng), StreamSpec::random(&mut rng), StreamSpec::random(&mut rng)]
        })
        .collect();

    let x_base = XGrid::centered(4.0, 144).context("antisymmetry suite")?;
    let y_base = WallNormalGrid::uniform(6.0, 161).context("antisymmetry suite")?;
    let x_fine = XGrid::centered(4.0, 288).context("antisymmetry suite")?;
    let y_fine = WallNormalGrid::uniform(6.0, 321).context("antisymmetry suite")?;

    let (rel_base, abs_base) = antisymmetry_defects(&specs, x_base, &y_base, corruption)?;
    let (_, abs_fine) = antisymmetry_defects(&specs, x_fine, &y_fine, corruption)?;
    let ratio = abs_base / abs_fine.max(1e-300);

    let checks = vec![
        Check::at_most("worst relative antisymmetry defect", rel_base, ANTISYM_DEFECT_TOL),
        Check::at_least("defect refinement ratio (lower)", ratio, ANTISYM_RATIO_BAND.0),
        Check::at_most("defect refinement ratio (upper)", ratio, ANTISYM_RATIO_BAND.1),
    ];
    Ok(outcome("antisymmetry", checks))
}

// ---------------------------------------------------------------------------
// manufactured
// ---------------------------------------------------------------------------

fn manufactured_suite(cfg: &PipelineConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4d41_4e55);
    let grid = WallNormalGrid::uniform(8.0, 12_001).context("manufactured suite")?;

    let mut worst = 0.0f64;
    let mut worst_k = 0.0f64;
    for i in 0..MANUFACTURED_MODES {
        // geometric ladder across the band with a seeded jitter, random sign
        let t = i as f64 / (MANUFACTURED_MODES - 1) as f64;
        let k_mag = 64f64.powf(2.0 * t - 1.0) * rng.gen_range(-0.08..0.08f64).exp();
        let k = if rng.gen_bool(0.5) { k_mag } else { -k_mag };
        let amp = |rng: &mut ChaCha8Rng| {
            num_complex_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU))
        };
        let g = Bump::new(1.35, 2.6, amp(&mut rng));
        let g2 = Bump::new(1.7, 3.1, amp(&mut rng));
        let m = manufactured_mode(k, &grid, &g, &g2);
        let sol = solve_mode(k, &grid, &m.q0, &m.q1).context("manufactured suite")?;

        let rel = mode_disagreement(&m.u, &sol.u)
            .max(mode_disagreement(&m.v, &sol.v))
            .max(mode_disagreement(&m.vorticity, &sol.vorticity));
        if rel > worst {
            worst = rel;
            worst_k = k;
        }
    }

    let checks = vec![Check::at_most(
        format!("worst manufactured-mode disagreement (at k = {worst_k})"),
        worst,
        MANUFACTURED_TOL,
    )];
    Ok(outcome("manufactured", checks))
}

fn num_complex_polar(r: f64, theta: f64) -> num_complex::Complex64 {
    num_complex::Complex64::from_polar(r, theta)
}

/// `‖a − b‖_∞ / ‖a‖_∞` over nodal samples.
fn mode_disagreement(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm())) / scale
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

/// Random analytic field with exactly mean-free rows: sums of derivatives of
/// Gaussians (their discrete window mean vanishes to round-off), modulated
/// slowly in height.
struct AnalyticField {
    parts: Vec<(f64, f64, f64)>,
    slope: f64,
}

impl AnalyticField {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let parts = (0..3)
            .map(|_| {
                (rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.6..1.0))
            })
            .collect();
        AnalyticField { parts, slope: rng.gen_range(-0.3..0.3) }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let profile: f64 = self
            .parts
            .iter()
            .map(|&(c, x0, sigma)| {
                let t = (x - x0) / sigma;
                c * (-2.0 * t / sigma) * (-t * t).exp()
            })
            .sum();
        profile * (1.0 + self.slope * (y - WALL_Y))
    }
}

fn convolution_suite(cfg: &PipelineConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x434f_4e56);
    let x = XGrid::centered(16.0, 512).context("convolution suite")?;
    let y = WallNormalGrid::uniform(2.0, 4).context("convolution suite")?;

    let mut worst = 0.0f64;
    for _ in 0..CONVOLUTION_PAIRS {
        let fa = AnalyticField::random(&mut rng);
        let fb = AnalyticField::random(&mut rng);
        let a = ScalarField::from_fn(x, y.clone(), |xv, yv| fa.eval(xv, yv));
        let b = ScalarField::from_fn(x, y.clone(), |xv, yv| fb.eval(xv, yv));
        let ab = ScalarField::from_fn(x, y.clone(), |xv, yv| fa.eval(xv, yv) * fb.eval(xv, yv));

        let (ah, _) = transform_scalar(&a).context("convolution suite")?;
        let (bh, _) = transform_scalar(&b).context("convolution suite")?;
        let (abh, _) = transform_scalar(&ab).context("convolution suite")?;
        let mut conv = product_spectrum(&ah, &bh).context("convolution suite")?;
        conv.axpy(num_complex::Complex64::new(-1.0, 0.0), &abh).context("convolution suite")?;
        worst = worst.max(conv.max_abs() / abh.max_abs().max(1e-300));
    }

    let checks =
        vec![Check::at_most("worst convolution-product mismatch", worst, CONVOLUTION_TOL)];
    Ok(outcome("convolution", checks))
}
