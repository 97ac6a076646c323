//! Discrete vector calculus on physical fields.
//!
//! Derivatives are second-order finite differences (centered in the
//! interior, one-sided at edges) acting along one axis at a time. Because an
//! x-derivative only mixes the x index and a y-derivative only the y index,
//! the discrete divergence of a discrete curl vanishes to rounding on *any*
//! tensor-product grid — the compatibility the truncation machinery relies
//! on.
//!
//! Integrals use tensor-product trapezoid quadrature on the same nodes.

use crate::error::{Error, Result};
use crate::fd;
use crate::field::{PhysicalVectorField, ScalarField, StreamFunction};
use crate::grid::WALL_Y;

/// x-derivative along every row; `stencil` nodes per difference (3 = second order).
pub fn deriv_x(f: &ScalarField, stencil: usize) -> ScalarField {
    let xs = f.x_grid().nodes();
    let mut out = ScalarField::zeros(*f.x_grid(), f.y_grid().clone());
    for j in 0..f.y_grid().len() {
        let d = fd::derivative(&xs, f.row(j), 1, stencil);
        out.row_mut(j).copy_from_slice(&d);
    }
    out
}

/// y-derivative along every column; `stencil` nodes per difference.
pub fn deriv_y(f: &ScalarField, stencil: usize) -> ScalarField {
    let ys = f.y_grid().nodes();
    let nx = f.x_grid().len();
    let ny = f.y_grid().len();
    let mut out = ScalarField::zeros(*f.x_grid(), f.y_grid().clone());
    let mut col = vec![0.0; ny];
    for m in 0..nx {
        for j in 0..ny {
            col[j] = f.get(m, j);
        }
        let d = fd::derivative(ys, &col, 1, stencil);
        for j in 0..ny {
            out.set(m, j, d[j]);
        }
    }
    out
}

/// All four first derivatives of a velocity field.
#[derive(Debug, Clone)]
pub struct VectorGradient {
    pub ux: ScalarField,
    pub uy: ScalarField,
    pub vx: ScalarField,
    pub vy: ScalarField,
}

/// Second-order gradient of a velocity field.
pub fn gradient(w: &PhysicalVectorField) -> VectorGradient {
    VectorGradient {
        ux: deriv_x(&w.u, 3),
        uy: deriv_y(&w.u, 3),
        vx: deriv_x(&w.v, 3),
        vy: deriv_y(&w.v, 3),
    }
}

/// Perpendicular gradient `∇⊥ψ = (-∂_y ψ, ∂_x ψ)`, the discrete curl that
/// produces exactly divergence-free fields.
pub fn curl_of_stream(psi: &ScalarField) -> PhysicalVectorField {
    let mut u = deriv_y(psi, 3);
    for j in 0..u.y_grid().len() {
        for v in u.row_mut(j) {
            *v = -*v;
        }
    }
    PhysicalVectorField { u, v: deriv_x(psi, 3) }
}

/// Largest absolute discrete divergence `∂_x u + ∂_y v` over the grid.
pub fn divergence_residual(w: &PhysicalVectorField) -> f64 {
    let ux = deriv_x(&w.u, 3);
    let vy = deriv_y(&w.v, 3);
    let mut worst = 0.0f64;
    for (a, b) in ux.data().iter().zip(vy.data()) {
        worst = worst.max((a + b).abs());
    }
    worst
}

/// Stream function `ψ(x, y) = -∫_1^y u(x, z) dz` of a divergence-free field.
///
/// Fails with [`Error::NotDivergenceFree`] when the divergence residual
/// (relative to the field's gradient scale) exceeds `div_tol`. The returned
/// audit is the largest relative mismatch, over a coarse subsample of points,
/// between the defining vertical path and an L-shaped path that first climbs
/// the central column and then moves horizontally (`dψ = v dx - u dy`).
pub fn stream_function(w: &PhysicalVectorField, div_tol: f64) -> Result<StreamFunction> {
    let residual = divergence_residual(w);
    let scale = gradient_scale(w);
    let threshold = div_tol * scale.max(1e-300);
    if residual > threshold {
        return Err(Error::NotDivergenceFree { residual, threshold });
    }

    let x = *w.x_grid();
    let y = w.y_grid().clone();
    let (nx, ny) = (x.len(), y.len());
    let ys = y.nodes();
    let xs = x.nodes();
    let mut psi = ScalarField::zeros(x, y.clone());
    let mut col = vec![0.0; ny];
    // Fourth-order vertical path integrals for the audit (the defining path,
    // re-integrated accurately so quadrature error does not mask a genuine
    // circulation defect).
    let mut psi4 = vec![0.0; nx * ny];
    for m in 0..nx {
        for j in 0..ny {
            col[j] = w.u.get(m, j);
        }
        let mut acc = 0.0;
        for j in 1..ny {
            let h = ys[j] - ys[j - 1];
            acc -= 0.5 * h * (col[j] + col[j - 1]);
            psi.set(m, j, acc);
        }
        for (j, c) in fd::cumint4(ys, &col).into_iter().enumerate() {
            psi4[m * ny + j] = -c;
        }
    }

    // L-shaped audit: climb the central column, then move horizontally
    // (dψ = v dx - u dy), both legs with fourth-order quadrature.
    let mc = nx / 2;
    let psi_scale =
        psi4.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    let mut audit = 0.0f64;
    for j in (1..ny).step_by(4.max(ny / 24)) {
        let horiz = fd::cumint4(&xs, w.v.row(j));
        for m in (0..nx).step_by(4.max(nx / 24)) {
            let l_path = psi4[mc * ny + j] + horiz[m] - horiz[mc];
            audit = audit.max((l_path - psi4[m * ny + j]).abs() / psi_scale);
        }
    }
    Ok(StreamFunction { field: psi, path_audit: audit })
}

/// Largest first-derivative magnitude of either component, computed without
/// materializing the full gradient (stream fixtures can be large).
fn gradient_scale(w: &PhysicalVectorField) -> f64 {
    let xs = w.x_grid().nodes();
    let ys = w.y_grid().nodes();
    let (nx, ny) = (xs.len(), ys.len());
    let mut scale = 0.0f64;
    for j in 0..ny {
        for f in [&w.u, &w.v] {
            for d in fd::derivative(&xs, f.row(j), 1, 3) {
                scale = scale.max(d.abs());
            }
        }
    }
    let mut col = vec![0.0; ny];
    for m in 0..nx {
        for f in [&w.u, &w.v] {
            for j in 0..ny {
                col[j] = f.get(m, j);
            }
            for d in fd::derivative(ys, &col, 1, 3) {
                scale = scale.max(d.abs());
            }
        }
    }
    scale
}

/// Tensor-product trapezoid weights of a field's grids.
pub fn quadrature_weights(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let wx = crate::grid::trapezoid_weights(&f.x_grid().nodes());
    let wy = f.y_grid().trapezoid_weights();
    (wx, wy)
}

/// `∫∫ f g dx dy` by trapezoid quadrature (grids must match).
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.check_same_grids(g)?;
    let (wx, wy) = quadrature_weights(f);
    let mut acc = 0.0;
    for j in 0..f.y_grid().len() {
        let (rf, rg) = (f.row(j), g.row(j));
        let mut row_acc = 0.0;
        for m in 0..f.x_grid().len() {
            row_acc += wx[m] * rf[m] * rg[m];
        }
        acc += wy[j] * row_acc;
    }
    Ok(acc)
}

/// Dirichlet (gradient) seminorm `(∫∫ |∇w|^2)^{1/2}`.
pub fn d_norm(w: &PhysicalVectorField) -> f64 {
    let g = gradient(w);
    let (wx, wy) = quadrature_weights(&w.u);
    let mut acc = 0.0;
    for j in 0..w.y_grid().len() {
        let mut row_acc = 0.0;
        for m in 0..w.x_grid().len() {
            row_acc += wx[m]
                * (g.ux.get(m, j).powi(2)
                    + g.uy.get(m, j).powi(2)
                    + g.vx.get(m, j).powi(2)
                    + g.vy.get(m, j).powi(2));
        }
        acc += wy[j] * row_acc;
    }
    acc.sqrt()
}

/// `L^2` norm of a velocity field over the nodes selected by `keep(x, y)`.
pub fn l2_norm_where(w: &PhysicalVectorField, keep: impl Fn(f64, f64) -> bool) -> f64 {
    let (wx, wy) = quadrature_weights(&w.u);
    let mut acc = 0.0;
    for j in 0..w.y_grid().len() {
        let yv = w.y_grid().y(j);
        let mut row_acc = 0.0;
        for m in 0..w.x_grid().len() {
            let xv = w.x_grid().x(m);
            if keep(xv, yv) {
                row_acc += wx[m] * (w.u.get(m, j).powi(2) + w.v.get(m, j).powi(2));
            }
        }
        acc += wy[j] * row_acc;
    }
    acc.sqrt()
}

/// Weighted-wall quotient `∫∫ |w|^2/(y-1)^2 / ∫∫ |∇w|^2`.
///
/// On the wall row the integrand's `0/0` limit is replaced by its value
/// `|∂_y w(x, 1)|^2` (one-sided difference), the convention that makes the
/// quotient finite exactly for fields vanishing at the wall.
pub fn hardy_ratio(w: &PhysicalVectorField) -> Result<f64> {
    let denom = d_norm(w).powi(2);
    if denom <= 1e-300 {
        return Err(Error::UndefinedRatio("gradient norm vanishes".into()));
    }
    let (wx, wy) = quadrature_weights(&w.u);
    let uy = deriv_y(&w.u, 3);
    let vy = deriv_y(&w.v, 3);
    let mut acc = 0.0;
    for j in 0..w.y_grid().len() {
        let yv = w.y_grid().y(j);
        let mut row_acc = 0.0;
        for m in 0..w.x_grid().len() {
            let val = if j == 0 {
                uy.get(m, 0).powi(2) + vy.get(m, 0).powi(2)
            } else {
                (w.u.get(m, j).powi(2) + w.v.get(m, j).powi(2)) / (yv - WALL_Y).powi(2)
            };
            row_acc += wx[m] * val;
        }
        acc += wy[j] * row_acc;
    }
    Ok(acc / denom)
}

/// Trilinear convective form `∫∫ ((a·∇)b)·c dx dy`.
pub fn trilinear_form(
    a: &PhysicalVectorField,
    b: &PhysicalVectorField,
    c: &PhysicalVectorField,
) -> Result<f64> {
    a.check_same_grids(b)?;
    a.check_same_grids(c)?;
    let gb = gradient(b);
    let (wx, wy) = quadrature_weights(&a.u);
    let mut acc = 0.0;
    for j in 0..a.y_grid().len() {
        let mut row_acc = 0.0;
        for m in 0..a.x_grid().len() {
            let (au, av) = (a.u.get(m, j), a.v.get(m, j));
            let adv_u = au * gb.ux.get(m, j) + av * gb.uy.get(m, j);
            let adv_v = au * gb.vx.get(m, j) + av * gb.vy.get(m, j);
            row_acc += wx[m] * (adv_u * c.u.get(m, j) + adv_v * c.v.get(m, j));
        }
        acc += wy[j] * row_acc;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{WallNormalGrid, XGrid};
    use approx::assert_relative_eq;

    fn grids() -> (XGrid, WallNormalGrid) {
        (XGrid::centered(6.0, 96).unwrap(), WallNormalGrid::uniform(4.0, 97).unwrap())
    }

    #[test]
    fn divergence_of_linear_shear_is_one() {
        let (x, y) = grids();
        let w = PhysicalVectorField::from_fns(x, y, |xv, _| xv, |_, _| 0.0);
        assert_relative_eq!(divergence_residual(&w), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn curl_fields_are_divergence_free_to_rounding() {
        let (x, y) = grids();
        let psi = ScalarField::from_fn(x, y, |xv, yv| {
            (0.7 * xv).sin() * (yv - 1.0).powi(2) * (-(yv - 1.0)).exp() * (-xv * xv / 8.0).exp()
        });
        let w = curl_of_stream(&psi);
        // exact stencil compatibility: only summation-order rounding survives
        assert!(divergence_residual(&w) < 1e-10);
    }

    #[test]
    fn stream_function_inverts_curl_up_to_quadrature_error() {
        // The audit reports genuine path dependence of the finite-difference
        // field, O(max(dx², dy²) · |ψ'''|): the shared coarse grid would sit
        // near 1e-3, so this check uses a finer one.
        let x = XGrid::centered(4.0, 128).unwrap();
        let y = WallNormalGrid::uniform(3.0, 81).unwrap();
        let psi = ScalarField::from_fn(x, y.clone(), |xv, yv| {
            (0.5 * xv).cos() * (yv - 1.0).powi(2) * (-(yv - 1.0)).exp() * (-xv * xv / 10.0).exp()
        });
        let w = curl_of_stream(&psi);
        let rec = stream_function(&w, 1e-6).unwrap();
        assert!(rec.path_audit < 1e-3, "path audit too large: {}", rec.path_audit);
        let scale = psi.max_abs();
        let mut worst = 0.0f64;
        for j in 0..y.len() {
            for m in 0..x.len() {
                worst = worst.max((rec.field.get(m, j) - psi.get(m, j)).abs());
            }
        }
        // cumulative trapezoid of a centered-difference derivative telescopes:
        // local error (h²/4)(ψ''(y) - ψ''(1)), here ≲ 2e-4 · scale
        assert!(worst < 1e-3 * scale, "stream recovery error {worst:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn stream_function_rejects_compressible_fields() {
        let (x, y) = grids();
        let w = PhysicalVectorField::from_fns(x, y, |xv, _| xv, |_, yv| yv);
        assert!(matches!(stream_function(&w, 1e-6), Err(Error::NotDivergenceFree { .. })));
    }

    #[test]
    fn d_norm_exact_on_simple_profile() {
        // w = (g(y), 0) with g = (y-1)^2 on [1,2]: ∫∫ |∇w|^2 = Lx * ∫ g'^2 = Lx * 4/3
        let x = XGrid::new(0.0, 0.05, 40).unwrap();
        let y = WallNormalGrid::uniform(2.0, 801).unwrap();
        let w = PhysicalVectorField::from_fns(x, y, |_, yv| (yv - 1.0).powi(2), |_, _| 0.0);
        let lx: f64 = 0.05 * 39.0; // trapezoid x-weights sum to the node span
        let expected = (lx * 4.0 / 3.0).sqrt();
        assert_relative_eq!(d_norm(&w), expected, max_relative = 1e-5);
    }

    #[test]
    fn trilinear_form_matches_hand_integral() {
        // a = (1,0), b = (x·s(y), 0), c = (s2(y), 0) on a periodic-friendly window:
        // ∫ ((a·∇)b)·c = ∫∫ s(y) s2(y) dx dy — all factors chosen to vanish at edges.
        let x = XGrid::centered(1.0, 160).unwrap();
        let y = WallNormalGrid::uniform(2.0, 161).unwrap();
        let s = |yv: f64| (yv - 1.0).powi(2) * (2.0 - yv).powi(2);
        let a = PhysicalVectorField::from_fns(x, y.clone(), |_, _| 1.0, |_, _| 0.0);
        let b = PhysicalVectorField::from_fns(x, y.clone(), |xv, yv| xv * s(yv), |_, _| 0.0);
        let c = PhysicalVectorField::from_fns(x, y.clone(), |_, yv| s(yv), |_, _| 0.0);
        let got = trilinear_form(&a, &b, &c).unwrap();
        // ∂_x b is exact (linear in x) and s² has vanishing derivatives up to
        // third order at both y endpoints, so trapezoid error is O(h⁶);
        // ∫ s(y)² dy over [1,2] = ∫_0^1 t⁴(1-t)⁴ dt = 1/630, and the x
        // quadrature covers the node span dx·(nx-1), not the full period.
        let expected = (0.0125 * 159.0) / 630.0;
        assert_relative_eq!(got, expected, max_relative = 1e-9);
    }

    #[test]
    fn hardy_ratio_well_below_bound_for_smooth_field() {
        let (x, y) = grids();
        let psi = ScalarField::from_fn(x, y, |xv, yv| {
            (yv - 1.0).powi(2) * (-(yv - 1.0)).exp() * (-xv * xv / 6.0).exp()
        });
        let w = curl_of_stream(&psi);
        let r = hardy_ratio(&w).unwrap();
        assert!(r > 0.0 && r < 4.0, "smooth-field Hardy quotient out of range: {r}");
    }

    #[test]
    fn hardy_ratio_undefined_for_zero_field() {
        let (x, y) = grids();
        let w = PhysicalVectorField::zeros(x, y);
        assert!(matches!(hardy_ratio(&w), Err(Error::UndefinedRatio(_))));
    }
}
