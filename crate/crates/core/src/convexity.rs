//! One-dimensional convexity primitives and the scalar special functions
//! used by every inequality checker in the crate.

use crate::{Error, Result, Scalar};
use serde::Serialize;

/// A scalar function sampled on an ordered grid over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SampledFunction1D<S> {
    grid: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> SampledFunction1D<S> {
    /// The grid must be strictly increasing with endpoints 0 and 1 and all
    /// values finite.
    pub fn new(grid: Vec<S>, values: Vec<S>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::BadParameter(format!(
                "grid/value length mismatch: {} vs {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InsufficientGrid { need: 2, got: grid.len() });
        }
        if grid[0] != S::zero() || *grid.last().unwrap() != S::one() {
            return Err(Error::BadParameter("grid endpoints must be 0 and 1".into()));
        }
        for w in grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::BadParameter("grid must be strictly increasing".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParameter("sampled values must be finite".into()));
        }
        Ok(SampledFunction1D { grid, values })
    }

    pub fn uniform(values: Vec<S>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InsufficientGrid { need: 2, got: n });
        }
        let grid = (0..n)
            .map(|i| S::from_usize(i).unwrap() / S::from_usize(n - 1).unwrap())
            .collect();
        Self::new(grid, values)
    }

    pub fn from_fn(n: usize, f: impl Fn(S) -> S) -> Result<Self> {
        let grid: Vec<S> = (0..n)
            .map(|i| S::from_usize(i).unwrap() / S::from_usize(n - 1).unwrap())
            .collect();
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[S] {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest grid step; the default finite-difference tolerance is `10 h^2`.
    pub fn max_step(&self) -> S {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(S::zero(), |m, h| m.max(h))
    }

    /// Default slack tolerance `10 h^2` for distributional checks on this grid.
    pub fn default_tolerance(&self) -> S {
        let h = self.max_step();
        S::real(10.0) * h * h
    }

    /// Restriction to a subset of grid indices (must keep both endpoints).
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        let grid = idx.iter().map(|&i| self.grid[i]).collect();
        let values = idx.iter().map(|&i| self.values[i]).collect();
        Self::new(grid, values)
    }
}

/// Location of the worst slack found by a convexity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness<S> {
    /// Grid parameters `a < b < c` of the worst triple inequality.
    Triple { a: S, b: S, c: S },
    /// Interior grid parameter of the worst finite-difference slack.
    Point { tau: S },
    /// Nothing violated / nothing evaluated.
    None,
}

/// Outcome of a convexity check: `holds` iff `min_slack >= -tol`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityVerdict<S> {
    pub holds: bool,
    pub min_slack: S,
    pub witness: Witness<S>,
}

/// Checks the triple inequality for `K`-convexity over all grid triples
/// `a < b < c`:
///
/// `u(b) <= (c-b)/(c-a) u(a) + (b-a)/(c-a) u(c) - K/2 (c-b)(b-a)`.
///
/// The reported slack is the minimum of RHS - LHS.
pub fn is_k_convex<S: Scalar>(u: &SampledFunction1D<S>, k: S, tol: S) -> Result<ConvexityVerdict<S>> {
    let n = u.len();
    if n < 3 {
        return Err(Error::InsufficientGrid { need: 3, got: n });
    }
    let g = u.grid();
    let v = u.values();
    let half = S::real(0.5);
    let mut min_slack = S::infinity();
    let mut witness = Witness::None;
    for ia in 0..n {
        for ib in ia + 1..n {
            for ic in ib + 1..n {
                let (a, b, c) = (g[ia], g[ib], g[ic]);
                let rhs = (c - b) / (c - a) * v[ia] + (b - a) / (c - a) * v[ic]
                    - k * half * (c - b) * (b - a);
                let slack = rhs - v[ib];
                if slack < min_slack {
                    min_slack = slack;
                    witness = Witness::Triple { a, b, c };
                }
            }
        }
    }
    Ok(ConvexityVerdict { holds: min_slack >= -tol, min_slack, witness })
}

/// Checks `(K, N)`-convexity, `u'' >= K + (u')^2 / N`, by central finite
/// differences at interior grid points. `N = infinity` recovers plain
/// `K`-convexity semantics.
pub fn is_kn_convex<S: Scalar>(
    u: &SampledFunction1D<S>,
    k: S,
    n_param: S,
    tol: S,
) -> Result<ConvexityVerdict<S>> {
    let n = u.len();
    if n < 4 {
        return Err(Error::InsufficientGrid { need: 4, got: n });
    }
    if n_param <= S::zero() {
        return Err(Error::BadParameter(format!("N must be positive or infinite, got {}", n_param)));
    }
    let g = u.grid();
    let v = u.values();
    let mut min_slack = S::infinity();
    let mut witness = Witness::None;
    for i in 1..n - 1 {
        let d1 = crate::quad::first_derivative_nonuniform(
            g[i - 1], g[i], g[i + 1], v[i - 1], v[i], v[i + 1],
        );
        let d2 = crate::quad::second_derivative_nonuniform(
            g[i - 1], g[i], g[i + 1], v[i - 1], v[i], v[i + 1],
        );
        let penalty = if n_param.is_infinite() { S::zero() } else { d1 * d1 / n_param };
        let slack = d2 - k - penalty;
        if slack < min_slack {
            min_slack = slack;
            witness = Witness::Point { tau: g[i] };
        }
    }
    Ok(ConvexityVerdict { holds: min_slack >= -tol, min_slack, witness })
}

/// Green function of the unit interval, `min{sigma (1-tau), tau (1-sigma)}`.
pub fn green_chi<S: Scalar>(tau: S, sigma: S) -> Result<S> {
    check_unit("tau", tau)?;
    check_unit("sigma", sigma)?;
    Ok((sigma * (S::one() - tau)).min(tau * (S::one() - sigma)))
}

/// The weight `(chi(tau,sigma) + chi(1-tau,sigma)) / tau` for `tau <= 1/2`;
/// piecewise `sigma/tau`, `1`, `(1-sigma)/tau`.
pub fn lambda_weight<S: Scalar>(tau: S, sigma: S) -> Result<S> {
    check_unit("sigma", sigma)?;
    if tau <= S::zero() || tau > S::real(0.5) {
        return Err(Error::BadParameter(format!("tau must be in (0, 1/2], got {}", tau)));
    }
    Ok((green_chi(tau, sigma)? + green_chi(S::one() - tau, sigma)?) / tau)
}

/// `Phi_N'(u) = u + u^2 / N'`; the identity for `N' = infinity`.
pub fn phi_n<S: Scalar>(u: S, n_prime: S) -> Result<S> {
    if n_prime <= S::zero() {
        return Err(Error::BadParameter(format!("N' must be positive or infinite, got {}", n_prime)));
    }
    if n_prime.is_infinite() {
        return Ok(u);
    }
    Ok(u + u * u / n_prime)
}

fn check_unit<S: Scalar>(name: &str, x: S) -> Result<()> {
    if x < S::zero() || x > S::one() {
        return Err(Error::BadParameter(format!("{} must lie in [0,1], got {}", name, x)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn quadratic(n: usize) -> SampledFunction1D<f64> {
        SampledFunction1D::from_fn(n, |t| t * t).unwrap()
    }

    #[test]
    fn quadratic_is_exactly_2_convex() {
        let u = quadratic(11);
        let v = is_k_convex(&u, 2.0, 1e-12).unwrap();
        assert!(v.holds);
        assert!(v.min_slack.abs() < 1e-12, "slack {}", v.min_slack);
    }

    #[test]
    fn quadratic_fails_k_2_5_with_predicted_slack() {
        let u = quadratic(11);
        let v = is_k_convex(&u, 2.5, 1e-12).unwrap();
        assert!(!v.holds);
        // slack at any triple is -(2.5-2)/2 (c-b)(b-a); the minimum sits at the
        // widest centered triple a=0, b=0.5, c=1
        assert_relative_eq!(v.min_slack, -0.5 * 0.25 / 2.0, epsilon = 1e-12);
        match v.witness {
            Witness::Triple { a, b, c } => {
                assert_relative_eq!(a, 0.0);
                assert_relative_eq!(b, 0.5);
                assert_relative_eq!(c, 1.0);
            }
            _ => panic!("expected triple witness"),
        }
    }

    #[test]
    fn concave_quadratic_is_minus_2_convex() {
        let u = SampledFunction1D::from_fn(11, |t: f64| -t * t).unwrap();
        let v = is_k_convex(&u, -2.0, 1e-12).unwrap();
        assert!(v.holds);
        assert!(v.min_slack.abs() < 1e-12);
    }

    #[test]
    fn is_k_convex_rejects_tiny_grids() {
        let u = SampledFunction1D::uniform(vec![0.0, 1.0]).unwrap();
        assert!(matches!(is_k_convex(&u, 0.0, 1e-9), Err(Error::InsufficientGrid { .. })));
    }

    #[test]
    fn kn_convexity_with_infinite_n_reduces_to_convexity() {
        let u = quadratic(11);
        let v = is_kn_convex(&u, 0.0, f64::INFINITY, 1e-9).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn kn_convexity_fails_where_gradient_term_dominates() {
        // u'' = 2, (u')^2 = 4 tau^2 > 2 for tau > 1/sqrt(2)
        let u = quadratic(11);
        let v = is_kn_convex(&u, 0.0, 1.0, 1e-9).unwrap();
        assert!(!v.holds);
        match v.witness {
            Witness::Point { tau } => assert!(tau > 1.0 / 2f64.sqrt()),
            _ => panic!("expected point witness"),
        }
    }

    #[test]
    fn constant_function_is_kn_convex_with_zero_slack() {
        let u = SampledFunction1D::from_fn(9, |_: f64| 1.5).unwrap();
        let v = is_kn_convex(&u, 0.0, 3.0, 1e-12).unwrap();
        assert!(v.holds);
        assert!(v.min_slack.abs() < 1e-9);
    }

    #[test]
    fn kn_rejects_nonpositive_n() {
        let u = quadratic(11);
        assert!(is_kn_convex(&u, 0.0, -1.0, 1e-9).is_err());
        assert!(is_kn_convex(&u, 0.0, 0.0, 1e-9).is_err());
    }

    #[test]
    fn chi_and_lambda_match_hand_values() {
        assert_relative_eq!(green_chi(0.25, 0.5).unwrap(), 0.125);
        assert_relative_eq!(lambda_weight(0.25, 0.5).unwrap(), 1.0);
        assert_relative_eq!(lambda_weight(0.25, 0.1).unwrap(), 0.4); // sigma/tau
        assert_relative_eq!(lambda_weight(0.25, 0.9).unwrap(), 0.4); // (1-sigma)/tau
    }

    #[test]
    fn phi_values() {
        assert_relative_eq!(phi_n(2.0, 4.0).unwrap(), 3.0);
        assert_relative_eq!(phi_n(2.0, f64::INFINITY).unwrap(), 2.0);
        assert!(phi_n(1.0, 0.0).is_err());
    }

    #[test]
    fn chi_out_of_range_errors() {
        assert!(green_chi(1.5, 0.5).is_err());
        assert!(lambda_weight(0.75, 0.5).is_err());
    }

    #[test]
    fn phi_monotone_above_minus_half_n() {
        // Phi_N' nondecreasing on [-N'/2, inf)
        for &np in &[0.5, 1.0, 4.0, 100.0] {
            let lo = -np / 2.0;
            let mut prev = f64::NEG_INFINITY;
            for i in 0..200 {
                let u = lo + i as f64 * 0.05 * np;
                let v = phi_n(u, np).unwrap();
                assert!(v >= prev - 1e-12, "Phi not monotone at u={} N'={}", u, np);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn refinement_never_increases_min_slack(
            vals in proptest::collection::vec(-5.0f64..5.0, 9..17),
            k in -2.0f64..2.0,
            mask in proptest::collection::vec(proptest::bool::ANY, 9..17),
        ) {
            let fine = SampledFunction1D::uniform(vals.clone()).unwrap();
            let n = fine.len();
            // coarse sub-grid keeping endpoints and at least one interior point
            let mut idx: Vec<usize> = vec![0];
            for i in 1..n-1 {
                if *mask.get(i).unwrap_or(&false) {
                    idx.push(i);
                }
            }
            if idx.len() < 2 { idx.push(n / 2); idx.sort(); idx.dedup(); }
            idx.push(n - 1);
            let coarse = fine.restrict(&idx).unwrap();
            let vf = is_k_convex(&fine, k, 0.0).unwrap();
            let vc = is_k_convex(&coarse, k, 0.0).unwrap();
            prop_assert!(vc.min_slack >= vf.min_slack - 1e-12);
        }

        #[test]
        fn chi_symmetries(tau in 0.0f64..1.0, sigma in 0.0f64..1.0) {
            let a = green_chi(tau, sigma).unwrap();
            prop_assert!((a - green_chi(sigma, tau).unwrap()).abs() < 1e-15);
            prop_assert!((a - green_chi(1.0 - tau, 1.0 - sigma).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn kn_agrees_with_k_at_infinity(
            vals in proptest::collection::vec(-3.0f64..3.0, 6..12),
            k in -2.0f64..2.0,
        ) {
            // The sign of the worst second difference and the sign of the
            // worst triple slack coincide exactly; only the magnitudes differ.
            let u = SampledFunction1D::uniform(vals).unwrap();
            let a = is_kn_convex(&u, k, f64::INFINITY, 0.0).unwrap();
            let b = is_k_convex(&u, k, 0.0).unwrap();
            if a.min_slack.abs() > 1e-9 && b.min_slack.abs() > 1e-9 {
                prop_assert_eq!(a.min_slack > 0.0, b.min_slack > 0.0);
            }
        }
    }
}
