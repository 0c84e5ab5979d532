//! Quadrature and finite-difference helpers shared by the checkers.

use crate::Scalar;

/// Trapezoid rule on a (possibly nonuniform) grid.
pub fn trapezoid<S: Scalar>(xs: &[S], ys: &[S]) -> S {
    assert_eq!(xs.len(), ys.len());
    let mut acc = S::zero();
    for i in 1..xs.len() {
        acc += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) * S::real(0.5);
    }
    acc
}

/// Composite Simpson rule on a uniform grid with step `h`.
///
/// Falls back to a trapezoid correction on the last interval when the number
/// of intervals is odd.
pub fn simpson_uniform<S: Scalar>(h: S, ys: &[S]) -> S {
    let n = ys.len();
    if n < 2 {
        return S::zero();
    }
    if n == 2 {
        return h * (ys[0] + ys[1]) * S::real(0.5);
    }
    let intervals = n - 1;
    let even_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 2 };
    let third = S::real(1.0 / 3.0);
    let mut acc = S::zero();
    let mut i = 0;
    while i + 2 <= even_end {
        acc += h * third * (ys[i] + S::real(4.0) * ys[i + 1] + ys[i + 2]);
        i += 2;
    }
    if !intervals.is_multiple_of(2) {
        acc += h * (ys[n - 2] + ys[n - 1]) * S::real(0.5);
    }
    acc
}

/// First derivative on a 3-point nonuniform stencil, evaluated at the middle point.
pub fn first_derivative_nonuniform<S: Scalar>(x0: S, x1: S, x2: S, y0: S, y1: S, y2: S) -> S {
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    (y2 * h1 * h1 - y0 * h2 * h2 + y1 * (h2 * h2 - h1 * h1)) / (h1 * h2 * (h1 + h2))
}

/// Second derivative on a 3-point nonuniform stencil, evaluated at the middle point.
pub fn second_derivative_nonuniform<S: Scalar>(x0: S, x1: S, x2: S, y0: S, y1: S, y2: S) -> S {
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    S::real(2.0) * (y0 * h2 + y2 * h1 - y1 * (h1 + h2)) / (h1 * h2 * (h1 + h2))
}

/// 4th-order central first derivative with uniform step `h`.
pub fn d1_central4<S: Scalar>(h: S, fm2: S, fm1: S, fp1: S, fp2: S) -> S {
    (fm2 - fp2 + S::real(8.0) * (fp1 - fm1)) / (S::real(12.0) * h)
}

/// 4th-order central second derivative with uniform step `h`.
pub fn d2_central4<S: Scalar>(h: S, fm2: S, fm1: S, f0: S, fp1: S, fp2: S) -> S {
    (-fm2 - fp2 + S::real(16.0) * (fm1 + fp1) - S::real(30.0) * f0) / (S::real(12.0) * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let xs = [0.0, 0.3, 0.7, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert_relative_eq!(trapezoid(&xs, &ys), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let n = 9;
        let h = 1.0 / (n as f64 - 1.0);
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
        assert_relative_eq!(simpson_uniform(h, &ys), 0.25, epsilon = 1e-14);
    }

    #[test]
    fn simpson_handles_odd_interval_count() {
        let n = 8;
        let h = 1.0 / (n as f64 - 1.0);
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        let v = simpson_uniform(h, &ys);
        assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-3);
    }

    #[test]
    fn nonuniform_stencils_exact_on_quadratics() {
        let (x0, x1, x2) = (0.1, 0.25, 0.6);
        let f = |x: f64| 3.0 * x * x - x + 2.0;
        let d1 = first_derivative_nonuniform(x0, x1, x2, f(x0), f(x1), f(x2));
        let d2 = second_derivative_nonuniform(x0, x1, x2, f(x0), f(x1), f(x2));
        assert_relative_eq!(d1, 6.0 * x1 - 1.0, epsilon = 1e-12);
        assert_relative_eq!(d2, 6.0, epsilon = 1e-10);
    }

    #[test]
    fn central4_matches_quartics() {
        let h = 0.1;
        let f = |x: f64| x.powi(4);
        let x = 0.5;
        let d1 = d1_central4(h, f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h));
        let d2 = d2_central4(h, f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
        assert_relative_eq!(d1, 4.0 * x.powi(3), epsilon = 1e-10);
        assert_relative_eq!(d2, 12.0 * x * x, epsilon = 1e-8);
    }
}
