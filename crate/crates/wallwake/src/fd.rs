//! Finite-difference weights on arbitrary node sets.
//!
//! Weights come from Fornberg's recurrence, which yields the exact
//! interpolating-polynomial differentiation weights for any derivative order
//! and any stencil, uniform or not. Interior points get centered stencils;
//! points near an edge get the nearest admissible window (one-sided at the
//! boundary itself).

use num_complex::Complex64;

/// Differentiation weights at evaluation point `z` for nodes `xs`.
///
/// Returns `w` with `w[d][j]` multiplying `f(xs[j])` to approximate
/// `f^(d)(z)`, for every `d = 0..=max_order`. Requires
/// `xs.len() > max_order`.
pub fn fd_weights(z: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    assert!(n > max_order, "stencil of {n} nodes cannot give derivative order {max_order}");
    let m = max_order;
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for s in (1..=mn).rev() {
                    c[s][i] = c1 * (s as f64 * c[s - 1][i - 1] - c5 * c[s][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for s in (1..=mn).rev() {
                c[s][j] = (c4 * c[s][j] - s as f64 * c[s - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Pick the stencil window `[lo, lo + width)` nearest to centering on `i`.
fn window(i: usize, n: usize, width: usize) -> usize {
    debug_assert!(width <= n);
    let half = width / 2;
    i.saturating_sub(half).min(n - width)
}

/// `m`-th derivative of real samples on `nodes`, using `stencil`-node windows.
pub fn derivative(nodes: &[f64], values: &[f64], m: usize, stencil: usize) -> Vec<f64> {
    let n = nodes.len();
    let width = stencil.min(n);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let lo = window(i, n, width);
        let w = fd_weights(nodes[i], &nodes[lo..lo + width], m);
        out[i] = w[m]
            .iter()
            .zip(&values[lo..lo + width])
            .map(|(&wj, &vj)| wj * vj)
            .sum();
    }
    out
}

/// `m`-th derivative of complex samples on `nodes`, using `stencil`-node windows.
pub fn derivative_complex(nodes: &[f64], values: &[Complex64], m: usize, stencil: usize) -> Vec<Complex64> {
    let n = nodes.len();
    let width = stencil.min(n);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let lo = window(i, n, width);
        let w = fd_weights(nodes[i], &nodes[lo..lo + width], m);
        out[i] = w[m]
            .iter()
            .zip(&values[lo..lo + width])
            .map(|(&wj, &vj)| vj * wj)
            .sum();
    }
    out
}

/// First derivative, second-order stencils (3 nodes).
pub fn deriv1(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    derivative(nodes, values, 1, 3)
}

/// Second derivative, 3-node stencils (second order on smoothly varying grids).
pub fn deriv2(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    derivative(nodes, values, 2, 3)
}

/// First derivative, high-order centered stencils (5 nodes).
pub fn deriv1_hi(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    derivative(nodes, values, 1, 5)
}

/// Evaluate the Lagrange interpolant through `(xs[i], fs[i])` at `t`.
pub fn lagrange_eval(xs: &[f64], fs: &[f64], t: f64) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut basis = 1.0;
        for j in 0..n {
            if j != i {
                basis *= (t - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += basis * fs[i];
    }
    acc
}

/// Cumulative integral `F(x_i) = ∫_{x_0}^{x_i} f`, fourth order.
///
/// Each interval integrates the local cubic through the four nearest nodes,
/// evaluated exactly with two-point Gauss–Legendre (exact for cubics).
pub fn cumint4(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert!(n >= 2);
    let mut out = vec![0.0; n];
    if n < 4 {
        // fall back to trapezoid on tiny inputs
        for i in 1..n {
            out[i] = out[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (values[i] + values[i - 1]);
        }
        return out;
    }
    const G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    for i in 0..n - 1 {
        let lo = window(i, n, 4).min(n - 4);
        let xs = &nodes[lo..lo + 4];
        let fs = &values[lo..lo + 4];
        let (a, b) = (nodes[i], nodes[i + 1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let seg = half * (lagrange_eval(xs, fs, mid - G * half) + lagrange_eval(xs, fs, mid + G * half));
        out[i + 1] = out[i] + seg;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_on_polynomials() {
        // 5-node weights differentiate quartics exactly, even on uneven nodes.
        let nodes: [f64; 5] = [0.0, 0.13, 0.41, 0.78, 1.0];
        let f: Vec<f64> = nodes.iter().map(|&x| 2.0 + x - 3.0 * x.powi(2) + 0.5 * x.powi(4)).collect();
        let d1 = derivative(&nodes, &f, 1, 5);
        let d2 = derivative(&nodes, &f, 2, 5);
        for (i, &x) in nodes.iter().enumerate() {
            assert_relative_eq!(d1[i], 1.0 - 6.0 * x + 2.0 * x.powi(3), max_relative = 1e-10);
            assert_relative_eq!(d2[i], -6.0 + 6.0 * x.powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn converges_on_sine() {
        let err = |n: usize| -> f64 {
            let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let f: Vec<f64> = nodes.iter().map(|&x| (3.0 * x).sin()).collect();
            let d = deriv1(&nodes, &f);
            nodes
                .iter()
                .zip(&d)
                .map(|(&x, &dv)| (dv - 3.0 * (3.0 * x).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e2 < 0.35 * e1, "second-order decay expected: {e1:.3e} -> {e2:.3e}");
    }

    #[test]
    fn cumint4_exact_on_cubics() {
        let nodes: [f64; 6] = [0.0, 0.2, 0.45, 0.8, 1.0, 1.4];
        let f: Vec<f64> = nodes.iter().map(|&x| 1.0 - 2.0 * x + 3.0 * x.powi(3)).collect();
        let exact = |x: f64| x - x * x + 0.75 * x.powi(4);
        let cum = cumint4(&nodes, &f);
        for (i, &x) in nodes.iter().enumerate() {
            assert_relative_eq!(cum[i], exact(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn cumint4_fourth_order_on_sine() {
        let err = |n: usize| -> f64 {
            let nodes: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / (n - 1) as f64).collect();
            let f: Vec<f64> = nodes.iter().map(|&x| (2.5 * x).sin()).collect();
            let cum = cumint4(&nodes, &f);
            nodes
                .iter()
                .zip(&cum)
                .map(|(&x, &c)| (c - (1.0 - (2.5 * x).cos()) / 2.5).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(51), err(101));
        assert!(e2 < 0.12 * e1, "fourth-order decay expected: {e1:.3e} -> {e2:.3e}");
    }

    #[test]
    fn complex_matches_real_parts() {
        let nodes: Vec<f64> = (0..11).map(|i| 1.0 + 0.1 * i as f64).collect();
        let re: Vec<f64> = nodes.iter().map(|&y| (y * y).sin()).collect();
        let im: Vec<f64> = nodes.iter().map(|&y| y.exp().recip()).collect();
        let z: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        let dz = derivative_complex(&nodes, &z, 1, 5);
        let dr = derivative(&nodes, &re, 1, 5);
        let di = derivative(&nodes, &im, 1, 5);
        for i in 0..nodes.len() {
            assert_relative_eq!(dz[i].re, dr[i], max_relative = 1e-13);
            assert_relative_eq!(dz[i].im, di[i], max_relative = 1e-13);
        }
    }
}
