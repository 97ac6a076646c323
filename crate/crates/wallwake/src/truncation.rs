//! Stream-function truncation: cutting an exterior flow down to a
//! compact-source problem.
//!
//! For a divergence-free velocity `w` that vanishes at the wall, the stream
//! function `ψ = Π[w]` (built by [`crate::calculus::stream_function`]) turns
//! support surgery into scalar multiplication: the truncated velocity
//! `∇⊥(χ·ψ)` is exactly discrete-divergence-free (it is a discrete curl),
//! vanishes identically where the annular cut-off `χ` does, and coincides
//! with `∇⊥ψ` where `χ ≡ 1`. The damage this surgery does to the stationary
//! momentum balance is collected by [`tns_source`] into a force supported on
//! the cut-off's transition annulus, which converts an obstacle flow into a
//! compact-source problem for the half-plane solver.
//!
//! All cut-offs share one radial ramp,
//!
//! ```text
//! ζ(s) = g(1-s) / (g(s) + g(1-s)),   g(t) = e^{-1/t} (t > 0), 0 otherwise,
//! ```
//!
//! which equals 1 for `s ≤ 0` and 0 for `s ≥ 1` with derivatives of every
//! order vanishing at both ends. The implementation snaps `ζ` to exactly
//! `1.0`/`0.0` on a slightly widened plateau (see [`CutoffProfile::eval`]);
//! the snap is below double rounding, and it is what upgrades the support
//! statements below from "small" to bit-exact wherever a difference stencil
//! does not straddle the transition band.

use crate::alpha::{Annulus, CompactSource};
use crate::calculus::{curl_of_stream, deriv_x, deriv_y, stream_function};
use crate::error::{Error, Result};
use crate::fd;
use crate::field::{PhysicalVectorField, ScalarField};
use crate::grid::{WallNormalGrid, XGrid, WALL_Y};

/// Plateau half-width of the ramp evaluation: `ζ` is returned as exactly 1
/// for `s ≤ PLATEAU_CLAMP` and exactly 0 for `s ≥ 1 - PLATEAU_CLAMP`. At
/// `s = 1 - 0.025` the true ramp value is `≈ 1.2e-17`, below the `f64`
/// rounding unit, so the snap never changes a value by more than one ulp of
/// the fields it multiplies while making the 0/1 regions exact.
const PLATEAU_CLAMP: f64 = 0.025;

/// Relative divergence tolerance a field must meet before its stream
/// function is trusted (the construction only inverts curls of
/// divergence-free fields).
pub const STREAM_DIV_TOL: f64 = 1e-6;

/// Relative magnitude allowed outside the support annulus of a truncation
/// source before the build is rejected as contaminated. For inputs solving
/// the stationary balance the leakage is pure discretization noise; 1e-4
/// leaves an order of magnitude over the noise floor of the default grids.
pub const SUPPORT_TOL: f64 = 1e-4;

/// The smooth 1-to-0 ramp shared by every cut-off, with its plateau snap.
#[derive(Clone, Copy, Debug)]
pub struct CutoffProfile;

impl CutoffProfile {
    /// The canonical exp-ratio ramp (smooth to all orders).
    pub fn smooth() -> Self {
        CutoffProfile
    }

    /// Closed-form description of the ramp, for reports.
    pub fn describe(&self) -> &'static str {
        "zeta(s) = g(1-s)/(g(s)+g(1-s)), g(t) = exp(-1/t)"
    }

    /// Evaluate `ζ(s)`: exactly 1 below the lower plateau edge, exactly 0
    /// above the upper one, the smooth ramp in between.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= PLATEAU_CLAMP {
            1.0
        } else if s >= 1.0 - PLATEAU_CLAMP {
            0.0
        } else {
            let a = (-1.0 / (1.0 - s)).exp();
            let b = (-1.0 / s).exp();
            a / (a + b)
        }
    }
}

/// Annular cut-off around the body centre `(0, 1 + h)`: exactly 0 on the
/// ball `B(h/3)`, exactly 1 outside `B(2h/3)`, ramping smoothly in between.
#[derive(Clone, Copy, Debug)]
pub struct AnnulusCutoff {
    h: f64,
    profile: CutoffProfile,
}

impl AnnulusCutoff {
    /// Cut-off for a body scale `h > 0`.
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("body scale must be positive and finite; got {h}")));
        }
        Ok(AnnulusCutoff { h, profile: CutoffProfile::smooth() })
    }

    /// The body scale `h` every radius derives from.
    pub fn body_scale(&self) -> f64 {
        self.h
    }

    /// The transition annulus `B(2h/3) ∖ B(h/3)` this cut-off ramps across.
    pub fn support_annulus(&self) -> Annulus {
        Annulus::body_ring(self.h)
    }

    /// Evaluate `χ(x, y) = ζ(2 - 3r/h)` with `r` the distance to `(0, 1+h)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y - (WALL_Y + self.h));
        self.profile.eval(2.0 - 3.0 * r / self.h)
    }
}

/// Ball cut-off around the body centre with the reversed orientation:
/// exactly 1 on `B(δ)`, exactly 0 outside `B(2δ)`. Only radii `δ < h/3`
/// are admissible, so the plateau of the ball cut-off sits strictly inside
/// the hole of the annular one.
#[derive(Clone, Copy, Debug)]
pub struct BallCutoff {
    h: f64,
    delta: f64,
    profile: CutoffProfile,
}

impl BallCutoff {
    /// Cut-off of radius `delta ∈ (0, h/3)` for body scale `h`.
    pub fn new(h: f64, delta: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("body scale must be positive and finite; got {h}")));
        }
        if !(delta > 0.0) || !(delta < h / 3.0) {
            return Err(Error::Domain(format!(
                "ball cut-off radius must lie in (0, h/3) = (0, {:.6}); got {delta}",
                h / 3.0
            )));
        }
        Ok(BallCutoff { h, delta, profile: CutoffProfile::smooth() })
    }

    pub fn body_scale(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.delta
    }

    /// Evaluate `χ_δ(x, y) = ζ(r/δ - 1)` with `r` the distance to `(0, 1+h)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y - (WALL_Y + self.h));
        self.profile.eval(r / self.delta - 1.0)
    }
}

/// Pointwise product of a scalar field with a cut-off evaluated on its nodes.
fn apply_cutoff(f: &ScalarField, cutoff: impl Fn(f64, f64) -> f64) -> ScalarField {
    let mut out = f.clone();
    let xs = f.x_grid().nodes();
    for (j, &yj) in f.y_grid().nodes().to_vec().iter().enumerate() {
        for (i, &xi) in xs.iter().enumerate() {
            out.set(i, j, cutoff(xi, yj) * f.get(i, j));
        }
    }
    out
}

/// Velocity truncation `w ↦ ∇⊥(χ·Π[w])`.
///
/// The output is a discrete curl, hence exactly discrete-divergence-free; it
/// is bit-zero at every node whose difference stencil sees only the `χ = 0`
/// plateau (in particular on all of `B(h/3)` once the grid spacing is below
/// `h/120`), and bit-equal to `∇⊥Π[w]` at every node whose stencil sees only
/// the `χ = 1` plateau. Against the *input*, the far field agrees within the
/// stream round trip's second-order quadrature error. Fails like
/// [`stream_function`] when `w` is not divergence-free enough for its stream
/// function to be meaningful.
pub fn truncate_velocity(w: &PhysicalVectorField, chi: &AnnulusCutoff) -> Result<PhysicalVectorField> {
    let psi = stream_function(w, STREAM_DIV_TOL)?;
    let masked = apply_cutoff(&psi.field, |x, y| chi.eval(x, y));
    Ok(curl_of_stream(&masked))
}

/// Pressure truncation `q ↦ χ·q` (pointwise; exact outside the transition
/// band in both directions: bit-zero where `χ = 0`, bit-equal where `χ = 1`).
pub fn truncate_pressure(q: &ScalarField, chi: &AnnulusCutoff) -> ScalarField {
    apply_cutoff(q, |x, y| chi.eval(x, y))
}

/// Second x-derivative along rows with a 5-node (fourth-order) stencil.
fn deriv2_x(f: &ScalarField) -> ScalarField {
    let xs = f.x_grid().nodes();
    let mut out = ScalarField::zeros(*f.x_grid(), f.y_grid().clone());
    for j in 0..f.y_grid().len() {
        let d = fd::derivative(&xs, f.row(j), 2, 5);
        out.row_mut(j).copy_from_slice(&d);
    }
    out
}

/// Second y-derivative along columns with a 5-node (fourth-order) stencil.
fn deriv2_y(f: &ScalarField) -> ScalarField {
    let ys = f.y_grid().nodes();
    let (nx, ny) = (f.x_grid().len(), f.y_grid().len());
    let mut out = ScalarField::zeros(*f.x_grid(), f.y_grid().clone());
    let mut col = vec![0.0; ny];
    for m in 0..nx {
        for j in 0..ny {
            col[j] = f.get(m, j);
        }
        let d = fd::derivative(ys, &col, 2, 5);
        for j in 0..ny {
            out.set(m, j, d[j]);
        }
    }
    out
}

/// Stationary momentum misfit `(w + e₁)·∇w − Δw + ∇q`, all derivatives by
/// 5-node (fourth-order) finite differences. For an exact solution of the
/// stationary problem with force `f` this *is* `f` up to truncation error;
/// the same stencils are reused on the truncated pair so that the error
/// cancels structurally in [`tns_fields`].
fn momentum_misfit(w: &PhysicalVectorField, q: &ScalarField) -> (ScalarField, ScalarField) {
    let ux = deriv_x(&w.u, 5);
    let uy = deriv_y(&w.u, 5);
    let vx = deriv_x(&w.v, 5);
    let vy = deriv_y(&w.v, 5);
    let uxx = deriv2_x(&w.u);
    let uyy = deriv2_y(&w.u);
    let vxx = deriv2_x(&w.v);
    let vyy = deriv2_y(&w.v);
    let qx = deriv_x(q, 5);
    let qy = deriv_y(q, 5);
    let mut m1 = ScalarField::zeros(*q.x_grid(), q.y_grid().clone());
    let mut m2 = m1.clone();
    for j in 0..q.y_grid().len() {
        for m in 0..q.x_grid().len() {
            let (a, b) = (w.u.get(m, j), w.v.get(m, j));
            m1.set(
                m,
                j,
                (a + 1.0) * ux.get(m, j) + b * uy.get(m, j) - uxx.get(m, j) - uyy.get(m, j)
                    + qx.get(m, j),
            );
            m2.set(
                m,
                j,
                (a + 1.0) * vx.get(m, j) + b * vy.get(m, j) - vxx.get(m, j) - vyy.get(m, j)
                    + qy.get(m, j),
            );
        }
    }
    (m1, m2)
}

/// Raw truncation-source components, before support verification:
///
/// ```text
/// TNS[w, q] = -χ·f + [(w̃ + e₁)·∇w̃ − Δw̃ + ∇q̃],
/// ```
///
/// with `w̃, q̃` the truncated pair and `f` the momentum misfit of the input
/// pair computed by the same stencils, masked to zero inside `B(h/4)` before
/// the multiplication by `χ` (the input fields near the body may carry
/// interpolation kinks whose finite differences would otherwise leak through
/// scaled by `χ ≈ 0`).
pub fn tns_fields(
    w: &PhysicalVectorField,
    q: &ScalarField,
    chi: &AnnulusCutoff,
) -> Result<(ScalarField, ScalarField)> {
    w.u.check_same_grids(q)?;
    let wt = truncate_velocity(w, chi)?;
    let qt = truncate_pressure(q, chi);
    let (b1, b2) = momentum_misfit(&wt, &qt);
    let (f1, f2) = momentum_misfit(w, q);
    let h = chi.body_scale();
    let center_y = WALL_Y + h;
    let build = |bracket: &ScalarField, misfit: &ScalarField| {
        let mut out = bracket.clone();
        let xs = bracket.x_grid().nodes();
        for (j, &yj) in bracket.y_grid().nodes().to_vec().iter().enumerate() {
            for (i, &xi) in xs.iter().enumerate() {
                let r = xi.hypot(yj - center_y);
                let f_masked = if r < h / 4.0 { 0.0 } else { misfit.get(i, j) };
                out.set(i, j, -chi.eval(xi, yj) * f_masked + bracket.get(i, j));
            }
        }
        out
    };
    Ok((build(&b1, &f1), build(&b2, &f2)))
}

/// Build the compact source a truncated obstacle solution satisfies the
/// stationary equations with.
///
/// Verifies that the components of [`tns_fields`] stay below
/// [`SUPPORT_TOL`] (relative to their peak) outside the closed annulus
/// `B(2h/3) ∖ B(h/3)`, then zeroes that exterior exactly and wraps the
/// result as a sampled [`CompactSource`] (whose constructor re-checks the
/// now-exact support invariant).
pub fn tns_source(
    w: &PhysicalVectorField,
    q: &ScalarField,
    chi: &AnnulusCutoff,
) -> Result<CompactSource> {
    let (t1, t2) = tns_fields(w, q, chi)?;
    let annulus = chi.support_annulus();
    let scale = t1.max_abs().max(t2.max_abs());
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for f in [&t1, &t2] {
        for (j, &yj) in f.y_grid().nodes().iter().enumerate() {
            for (i, &xi) in f.x_grid().nodes().iter().enumerate() {
                let v = f.get(i, j).abs();
                if !annulus.contains(xi, yj) && v > worst.0 {
                    worst = (v, xi, yj);
                }
            }
        }
    }
    if worst.0 > SUPPORT_TOL * scale {
        return Err(Error::SupportContamination {
            max_leakage: worst.0 / scale.max(1e-300),
            x: worst.1,
            y: worst.2,
            threshold: SUPPORT_TOL,
        });
    }
    let mask = |f: &ScalarField| {
        let mut out = f.clone();
        let xs = f.x_grid().nodes();
        for (j, &yj) in f.y_grid().nodes().to_vec().iter().enumerate() {
            for (i, &xi) in xs.iter().enumerate() {
                if !annulus.contains(xi, yj) {
                    out.set(i, j, 0.0);
                }
            }
        }
        out
    };
    CompactSource::from_fields(mask(&t1), mask(&t2), annulus)
}

/// Divergence-free test field carrying a prescribed vector through the body:
/// `-∇⊥(χ_δ · [F⊥ · ((x,y) − (0, 1+h))])` for a force direction `F`.
///
/// The affine factor has `-∇⊥` equal to `F` exactly, and centered
/// differences are exact on affine functions, so the output equals `F` to
/// rounding at every node whose stencil sees only the `χ_δ = 1` plateau, and
/// is bit-zero where the stencil sees only `χ_δ = 0` (outside `B(2δ)` once
/// the spacing is below `δ/40`). Being a discrete curl it is exactly
/// discrete-divergence-free, and it scales linearly in `F` to rounding.
pub fn force_test_function(
    force: (f64, f64),
    ball: &BallCutoff,
    x: &XGrid,
    y: &WallNormalGrid,
) -> PhysicalVectorField {
    let center_y = WALL_Y + ball.body_scale();
    let phi = ScalarField::from_fn(*x, y.clone(), |xv, yv| {
        ball.eval(xv, yv) * (-force.1 * xv + force.0 * (yv - center_y))
    });
    let mut out = curl_of_stream(&phi);
    for j in 0..out.y_grid().len() {
        for v in out.u.row_mut(j) {
            *v = -*v;
        }
        for v in out.v.row_mut(j) {
            *v = -*v;
        }
    }
    out
}

/// `C^m` norm of a scalar field over the nodes selected by `keep`: the
/// largest magnitude among all partial derivatives `∂ₓ^a ∂ᵧ^b f` with
/// `a + b ≤ m`, each computed by 5-node finite differences (one-sided near
/// edges, so `keep` should select an interior region).
pub fn c_norm_scalar(f: &ScalarField, m: usize, keep: impl Fn(f64, f64) -> bool) -> f64 {
    let mut worst = 0.0f64;
    let mut by_x = f.clone();
    for a in 0..=m {
        let mut g = by_x.clone();
        for b in 0..=(m - a) {
            for (j, &yj) in g.y_grid().nodes().iter().enumerate() {
                for (i, &xi) in g.x_grid().nodes().iter().enumerate() {
                    if keep(xi, yj) {
                        worst = worst.max(g.get(i, j).abs());
                    }
                }
            }
            if b < m - a {
                g = deriv_y(&g, 5);
            }
        }
        if a < m {
            by_x = deriv_x(&by_x, 5);
        }
    }
    worst
}

/// `C^m` norm of a velocity field over a region: the larger of the
/// component norms.
pub fn c_norm_velocity(w: &PhysicalVectorField, m: usize, keep: impl Fn(f64, f64) -> bool) -> f64 {
    c_norm_scalar(&w.u, m, &keep).max(c_norm_scalar(&w.v, m, &keep))
}

/// Empirical control constant of the stream construction: the ratio
/// `‖Π[w]‖_{C^m(region)} / ‖w‖_{C^{m-1}(region)}` (requires `m ≥ 1`). The
/// ratio is expected to stay bounded and stable under grid refinement; tests
/// record it as a regression constant. The region is the caller's choice —
/// the canonical one is the closed transition annulus, a subset of the
/// collar neighbourhoods appearing in continuum estimates, so recorded
/// constants are specific to that region.
pub fn stream_control_ratio(
    w: &PhysicalVectorField,
    m: usize,
    keep: impl Fn(f64, f64) -> bool,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("stream control ratio needs m >= 1".into()));
    }
    let psi = stream_function(w, STREAM_DIV_TOL)?;
    let num = c_norm_scalar(&psi.field, m, &keep);
    let den = c_norm_velocity(w, m - 1, &keep);
    if den <= 1e-300 {
        return Err(Error::UndefinedRatio("input field vanishes on the region".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{d_norm, divergence_residual};

    /// Smooth wall-vanishing stream potential whose curl exercises the whole
    /// annulus for h = 1 (body centre (0, 2)): a degree-10 bump in y,
    /// supported on [1, 3] and peaking at the annulus centre y = 2. Its
    /// quintic contact at both support ends matters: one-sided boundary
    /// stencils compose with the stream round trip's cumulative-trapezoid
    /// noise into the dominant leakage of the truncation-source support
    /// check, and a fixture that is identically zero on the wall and top
    /// rows (with quintic, i.e. below-noise, onset) leaves that composition
    /// nothing to act on.
    fn stream_fixture(x: &XGrid, y: &WallNormalGrid) -> ScalarField {
        ScalarField::from_fn(*x, y.clone(), |xv, yv| {
            let t = (yv - 1.0) / 2.0;
            if !(0.0..=1.0).contains(&t) {
                return 0.0;
            }
            (0.8 * xv).cos() * (-xv * xv / 3.0).exp() * 1024.0 * (t * (1.0 - t)).powi(5)
        })
    }

    fn fixture_grids(delta: f64) -> (XGrid, WallNormalGrid) {
        let nx = (2.4 / delta).round() as usize;
        let ny = (2.2 / delta).round() as usize + 1;
        (XGrid::centered(1.2, nx).unwrap(), WallNormalGrid::uniform(1.0 + 2.2, ny).unwrap())
    }

    #[test]
    fn ramp_plateaus_are_exact_and_interior_is_monotone() {
        let z = CutoffProfile::smooth();
        assert_eq!(z.eval(-1.0), 1.0);
        assert_eq!(z.eval(0.02), 1.0);
        assert_eq!(z.eval(0.98), 0.0);
        assert_eq!(z.eval(2.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=200 {
            let s = i as f64 / 200.0;
            let v = z.eval(s);
            assert!(v <= prev + 1e-15, "ramp not monotone at s = {s}");
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
        // symmetry of the exp-ratio construction: ζ(s) + ζ(1-s) = 1
        assert!((z.eval(0.3) + z.eval(0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn annulus_cutoff_matches_its_declared_geometry() {
        for h in [1.0, 0.5] {
            let chi = AnnulusCutoff::new(h).unwrap();
            let cy = WALL_Y + h;
            assert_eq!(chi.eval(0.0, cy + 0.2 * h), 0.0, "inside the hole");
            assert_eq!(chi.eval(h / 3.0, cy), 0.0, "on the inner radius");
            assert_eq!(chi.eval(0.0, cy - 0.9 * h), 1.0, "outside the ring");
            assert_eq!(chi.eval(2.0 * h / 3.0, cy), 1.0, "on the outer radius");
            let mid = chi.eval(0.5 * h, cy);
            assert!(mid > 0.0 && mid < 1.0, "transition band value {mid}");
        }
        assert!(matches!(AnnulusCutoff::new(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ball_cutoff_validates_radius_and_orientation() {
        assert!(matches!(BallCutoff::new(1.0, 0.4), Err(Error::Domain(_))));
        assert!(matches!(BallCutoff::new(1.0, 0.0), Err(Error::Domain(_))));
        let ball = BallCutoff::new(1.0, 0.25).unwrap();
        assert_eq!(ball.eval(0.0, 2.0), 1.0, "at the centre");
        assert_eq!(ball.eval(0.2, 2.0), 1.0, "inside B(delta)");
        assert_eq!(ball.eval(0.55, 2.0), 0.0, "outside B(2 delta)");
        let mid = ball.eval(0.35, 2.0);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn truncated_velocity_support_divergence_and_far_field() {
        // spacing 1/160 < h/120: every stencil inside B(h/3) sees only the
        // exact-zero plateau, so the support claim is literal.
        let (x, y) = fixture_grids(1.0 / 160.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let w = curl_of_stream(&stream_fixture(&x, &y));
        let tv = truncate_velocity(&w, &chi).unwrap();
        let scale = w.max_abs();

        let mut checked_hole = 0usize;
        for (j, &yj) in y.nodes().iter().enumerate() {
            for (i, &xi) in x.nodes().to_vec().iter().enumerate() {
                if xi.hypot(yj - 2.0) <= 1.0 / 3.0 {
                    assert_eq!(tv.u.get(i, j), 0.0, "u leak at ({xi}, {yj})");
                    assert_eq!(tv.v.get(i, j), 0.0, "v leak at ({xi}, {yj})");
                    checked_hole += 1;
                }
            }
        }
        assert!(checked_hole > 1000, "hole region unexpectedly small");

        // discrete curl ⇒ discrete divergence at rounding level
        assert!(divergence_residual(&tv) < 1e-10 * scale.max(1e-300));

        // far field: reproduces the input within the stream round trip's
        // second-order error; at this spacing the cumulative-trapezoid
        // defect is ~(Δ²/4)·|ψ''| ≈ 1e-5 · scale, differentiated once more
        // by the curl, so 1e-3 relative leaves a wide safety factor.
        let mut worst = 0.0f64;
        for (j, &yj) in y.nodes().iter().enumerate() {
            for (i, &xi) in x.nodes().to_vec().iter().enumerate() {
                if xi.hypot(yj - 2.0) >= 2.0 / 3.0 + 0.02 {
                    worst = worst
                        .max((tv.u.get(i, j) - w.u.get(i, j)).abs())
                        .max((tv.v.get(i, j) - w.v.get(i, j)).abs());
                }
            }
        }
        assert!(worst < 1e-3 * scale, "far-field mismatch {worst:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn truncation_is_bit_exact_against_the_stream_route_on_the_plateau() {
        let (x, y) = fixture_grids(1.0 / 160.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let w = curl_of_stream(&stream_fixture(&x, &y));
        let psi = stream_function(&w, STREAM_DIV_TOL).unwrap().field;
        let direct = curl_of_stream(&psi);
        let tv = truncate_velocity(&w, &chi).unwrap();
        // wherever the whole 3×3 stencil neighbourhood sits on the χ = 1
        // plateau, χ·ψ and ψ agree bit-for-bit, so the curls must too.
        let nodes_x = x.nodes();
        let mut checked = 0usize;
        for j in 0..y.len() {
            for i in 0..nodes_x.len() {
                let clear = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dj| {
                        let ii = (i as i64 + di).clamp(0, nodes_x.len() as i64 - 1) as usize;
                        let jj = (j as i64 + dj).clamp(0, y.len() as i64 - 1) as usize;
                        chi.eval(nodes_x[ii], y.y(jj)) == 1.0
                    })
                });
                if clear {
                    assert_eq!(tv.u.get(i, j), direct.u.get(i, j));
                    assert_eq!(tv.v.get(i, j), direct.v.get(i, j));
                    checked += 1;
                }
            }
        }
        assert!(checked > 10_000, "plateau region unexpectedly small");
    }

    #[test]
    fn truncation_is_idempotent_outside_the_outer_ball() {
        let (x, y) = fixture_grids(1.0 / 160.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let w = curl_of_stream(&stream_fixture(&x, &y));
        let once = truncate_velocity(&w, &chi).unwrap();
        // the first output is exactly divergence-free, so re-application is
        // admissible without any tolerance relaxation.
        let twice = truncate_velocity(&once, &chi).unwrap();
        let scale = once.max_abs().max(1e-300);
        let mut worst = 0.0f64;
        for (j, &yj) in y.nodes().iter().enumerate() {
            for (i, &xi) in x.nodes().to_vec().iter().enumerate() {
                if xi.hypot(yj - 2.0) >= 2.0 / 3.0 + 0.02 {
                    worst = worst
                        .max((twice.u.get(i, j) - once.u.get(i, j)).abs())
                        .max((twice.v.get(i, j) - once.v.get(i, j)).abs());
                }
            }
        }
        // same second-order stream round-trip error budget as the far-field test
        assert!(worst < 1e-3 * scale, "idempotence defect {worst:.3e}");
    }

    #[test]
    fn pressure_truncation_is_a_pointwise_mask() {
        let (x, y) = fixture_grids(1.0 / 40.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let ones = ScalarField::from_fn(x, y.clone(), |_, _| 1.0);
        let masked = truncate_pressure(&ones, &chi);
        for (j, &yj) in y.nodes().iter().enumerate() {
            for (i, &xi) in masked.x_grid().nodes().to_vec().iter().enumerate() {
                assert_eq!(masked.get(i, j), chi.eval(xi, yj));
            }
        }
        let q = ScalarField::from_fn(x, y.clone(), |xv, yv| xv + yv);
        let qt = truncate_pressure(&q, &chi);
        for (j, &yj) in y.nodes().iter().enumerate() {
            for (i, &xi) in qt.x_grid().nodes().to_vec().iter().enumerate() {
                let r = xi.hypot(yj - 2.0);
                if r >= 2.0 / 3.0 {
                    assert_eq!(qt.get(i, j), q.get(i, j), "changed outside at ({xi}, {yj})");
                } else if r <= 1.0 / 3.0 {
                    assert_eq!(qt.get(i, j), 0.0);
                }
            }
        }
        let zero = ScalarField::zeros(x, y);
        assert_eq!(truncate_pressure(&zero, &chi).max_abs(), 0.0);
    }

    #[test]
    fn tns_of_zero_fields_is_the_zero_source() {
        let (x, y) = fixture_grids(1.0 / 40.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let w = PhysicalVectorField::zeros(x, y.clone());
        let q = ScalarField::zeros(x, y);
        let src = tns_source(&w, &q, &chi).unwrap();
        assert_eq!(src.amplitude_scale(), 0.0);
    }

    #[test]
    fn tns_source_stays_inside_the_annulus_for_smooth_inputs() {
        // The misfit of the *input* pair is computed with the same stencils
        // as the bracket of the truncated pair, so outside the annulus the
        // two cancel up to the stream round trip noise — any smooth
        // divergence-free pair exercises the support property.
        let (x, y) = fixture_grids(1.0 / 160.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let w = curl_of_stream(&stream_fixture(&x, &y));
        let q = ScalarField::from_fn(x, y.clone(), |xv, yv| {
            0.5 * (0.6 * xv).cos() * (yv - 1.0) * (-(yv - 1.0)).exp() * (-xv * xv / 3.0).exp()
        });
        let src = tns_source(&w, &q, &chi).unwrap();
        let ann = src.annulus();
        assert_eq!(ann.r_inner, 1.0 / 3.0);
        assert_eq!(ann.r_outer, 2.0 / 3.0);
        assert!(src.amplitude_scale() > 0.0);
        // the sampled source evaluates to exact zeros outside its annulus
        assert_eq!(src.eval(0.0, 2.0), (0.0, 0.0));
        assert_eq!(src.eval(0.9, 2.0), (0.0, 0.0));

        // magnitude control: sup|TNS| against the cut-off-free norms of the
        // inputs on the annulus; the ratio is a recorded regression constant
        // (measured ≈ 18 at this resolution — the χ-derivative terms scale
        // like (3/h)² · ζ'' and dominate it), asserted with slack to fail
        // only on structural regressions.
        let keep = |xv: f64, yv: f64| {
            let r = xv.hypot(yv - 2.0);
            (0.25..=0.75).contains(&r)
        };
        let bound = c_norm_velocity(&w, 2, keep)
            + c_norm_velocity(&w, 0, keep).powi(2)
            + c_norm_scalar(&q, 1, keep);
        assert!(
            src.amplitude_scale() < 60.0 * bound,
            "amplitude {:.3e} vs input bound {:.3e}",
            src.amplitude_scale(),
            bound
        );
    }

    #[test]
    fn tns_rejects_fields_that_are_not_divergence_free() {
        let (x, y) = fixture_grids(1.0 / 40.0);
        let chi = AnnulusCutoff::new(1.0).unwrap();
        let w = PhysicalVectorField::from_fns(x, y.clone(), |xv, _| xv, |_, yv| yv);
        let q = ScalarField::zeros(x, y);
        assert!(matches!(tns_source(&w, &q, &chi), Err(Error::NotDivergenceFree { .. })));
    }

    #[test]
    fn force_test_function_carries_the_force_exactly() {
        let delta = 0.25;
        let ball = BallCutoff::new(1.0, delta).unwrap();
        let x = XGrid::centered(0.8, 320).unwrap(); // spacing 1/200 < delta/40
        let y = WallNormalGrid::uniform(3.0, 401).unwrap();
        let force = (0.7, -0.4);
        let w = force_test_function(force, &ball, &x, &y);

        let fscale = force.0.abs().max(force.1.abs());
        for (j, &yj) in y.nodes().iter().enumerate() {
            for (i, &xi) in x.nodes().to_vec().iter().enumerate() {
                let r = xi.hypot(yj - 2.0);
                if r <= 0.99 * delta {
                    // centred differences are exact on affine functions
                    assert!((w.u.get(i, j) - force.0).abs() < 1e-12 * fscale);
                    assert!((w.v.get(i, j) - force.1).abs() < 1e-12 * fscale);
                } else if r >= 2.0 * delta {
                    assert_eq!(w.u.get(i, j), 0.0, "leak at ({xi}, {yj})");
                    assert_eq!(w.v.get(i, j), 0.0, "leak at ({xi}, {yj})");
                }
            }
        }
        assert!(divergence_residual(&w) < 1e-10 * fscale);

        // linearity: doubling the force doubles both norms to rounding
        let w2 = force_test_function((2.0 * force.0, 2.0 * force.1), &ball, &x, &y);
        let (d1, d2) = (d_norm(&w), d_norm(&w2));
        assert!((d2 - 2.0 * d1).abs() < 1e-12 * d1.max(1e-300));

        // recorded control constant of the construction:
        // (‖w‖_D + ‖w‖_∞) / |F| — measured ≈ 21 at delta = h/4 (the ramp
        // derivative ~ζ'/δ acting on the affine factor dominates both
        // norms); asserted with ~3x slack as a regression bound.
        let c1 = (d1 + w.max_abs()) / force.0.hypot(force.1);
        assert!(c1 > 0.0 && c1 < 60.0, "control constant {c1}");

        let zero = force_test_function((0.0, 0.0), &ball, &x, &y);
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn stream_control_ratio_is_bounded_and_refinement_stable() {
        let chi_keep = |xv: f64, yv: f64| {
            let r = xv.hypot(yv - 2.0);
            (1.0 / 3.0..=2.0 / 3.0).contains(&r)
        };
        let ratio_at = |delta: f64| {
            let (x, y) = fixture_grids(delta);
            let w = curl_of_stream(&stream_fixture(&x, &y));
            stream_control_ratio(&w, 2, chi_keep).unwrap()
        };
        let coarse = ratio_at(1.0 / 80.0);
        let fine = ratio_at(1.0 / 160.0);
        assert!(coarse.is_finite() && coarse > 0.0);
        // measured ≈ 1.0 for this fixture (the stream gains one derivative,
        // so its C² norm sits near the velocity's C¹ norm); the bound only
        // guards against blow-up.
        assert!(coarse < 50.0, "control ratio {coarse}");
        assert!(
            (fine - coarse).abs() < 0.1 * coarse.max(1e-300),
            "ratio unstable under refinement: {coarse} -> {fine}"
        );
        assert!(matches!(
            stream_control_ratio(&PhysicalVectorField::zeros(
                XGrid::centered(1.0, 16).unwrap(),
                WallNormalGrid::uniform(2.0, 17).unwrap()
            ), 2, |_, _| true),
            Err(Error::UndefinedRatio(_))
        ));
    }
}
