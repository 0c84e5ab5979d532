//! Exact optimal transport on finite spaces: time-dependent Wasserstein
//! distances, couplings, displacement interpolation, entropy and path
//! functionals for measure curves.

pub mod oracle;
pub mod simplex;

use crate::space::{DiscreteGeodesic, DiscreteGeodesicSpace};
use crate::{Error, Result, Scalar};
use serde::Serialize;

/// Probability vector over the vertex set; weights sum to 1 within `1e-12`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector<S> {
    weights: Vec<S>,
}

impl<S: Scalar> ProbabilityVector<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::BadParameter("empty measure".into()));
        }
        if weights.iter().any(|&w| w < S::zero() || !w.is_finite()) {
            return Err(Error::BadParameter("weights must be nonnegative and finite".into()));
        }
        let total: S = weights.iter().copied().sum();
        if (total - S::one()).abs() > S::real(1e-12) {
            return Err(Error::BadParameter(format!("weights sum to {}, not 1", total)));
        }
        Ok(ProbabilityVector { weights })
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn normalized(weights: Vec<S>) -> Result<Self> {
        let total: S = weights.iter().copied().sum();
        if !(total > S::zero()) {
            return Err(Error::BadParameter("cannot normalize zero mass".into()));
        }
        let w = weights.iter().map(|&x| x / total).collect();
        ProbabilityVector::new(w)
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut w = vec![S::zero(); n];
        w[at] = S::one();
        ProbabilityVector { weights: w }
    }

    pub fn uniform(n: usize) -> Self {
        ProbabilityVector { weights: vec![S::one() / S::from_usize(n).unwrap(); n] }
    }

    /// Gaussian-type bump `exp(-d_t(x, center)^2 / (2 width^2))`, normalized.
    pub fn bump(space: &DiscreteGeodesicSpace<S>, t_idx: usize, center: usize, width: S) -> Self {
        let n = space.vertex_count();
        let w: Vec<S> = (0..n)
            .map(|x| {
                let d = space.d(t_idx, x, center);
                (-d * d / (S::real(2.0) * width * width)).exp()
            })
            .collect();
        Self::normalized(w).expect("bump has positive mass")
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > S::zero())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Coupling matrix with prescribed marginals (validated within `1e-10`).
#[derive(Debug, Clone, Serialize)]
pub struct Coupling<S> {
    pub matrix: Vec<Vec<S>>,
}

impl<S: Scalar> Coupling<S> {
    pub fn new(
        matrix: Vec<Vec<S>>,
        mu: &ProbabilityVector<S>,
        nu: &ProbabilityVector<S>,
    ) -> Result<Self> {
        let tol = S::real(1e-10);
        let n_rows = matrix.len();
        if n_rows != mu.len() {
            return Err(Error::BadParameter("coupling row count mismatch".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != nu.len() {
                return Err(Error::BadParameter("coupling column count mismatch".into()));
            }
            let s: S = row.iter().copied().sum();
            if (s - mu.weights()[i]).abs() > tol {
                return Err(Error::BadParameter(format!("row {} marginal off by {}", i, s - mu.weights()[i])));
            }
            if row.iter().any(|&q| q < -tol) {
                return Err(Error::BadParameter("negative coupling entry".into()));
            }
        }
        for j in 0..nu.len() {
            let s: S = matrix.iter().map(|row| row[j]).sum();
            if (s - nu.weights()[j]).abs() > tol {
                return Err(Error::BadParameter(format!("column {} marginal off by {}", j, s - nu.weights()[j])));
            }
        }
        Ok(Coupling { matrix })
    }

    /// Support atoms `(x, y, mass)` above the mass floor `1e-15`.
    pub fn atoms(&self) -> Vec<(usize, usize, S)> {
        let floor = S::real(1e-15);
        let mut out = Vec::new();
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                if q > floor {
                    out.push((i, j, q));
                }
            }
        }
        out
    }
}

/// Exact Wasserstein distance for cost `d_t^2` together with an optimal
/// coupling, solved by the in-house transportation simplex.
pub fn wasserstein<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    t_idx: usize,
    mu: &ProbabilityVector<S>,
    nu: &ProbabilityVector<S>,
) -> Result<(S, Coupling<S>)> {
    let n = space.vertex_count();
    if mu.len() != n || nu.len() != n {
        return Err(Error::BadParameter("measure dimension mismatch".into()));
    }
    let mu_sum: S = mu.weights().iter().copied().sum();
    let nu_sum: S = nu.weights().iter().copied().sum();
    if (mu_sum - nu_sum).abs() > S::real(1e-9) {
        return Err(Error::MarginalMismatch {
            lhs: mu_sum.to_f64().unwrap_or(f64::NAN),
            rhs: nu_sum.to_f64().unwrap_or(f64::NAN),
        });
    }
    let supp_mu = mu.support();
    let supp_nu = nu.support();
    let mut supply: Vec<S> = supp_mu.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<S> = supp_nu.iter().map(|&j| nu.weights()[j]).collect();
    // re-balance float rounding onto the largest supply atom
    let diff = demand.iter().copied().sum::<S>() - supply.iter().copied().sum::<S>();
    let argmax = (0..supply.len())
        .max_by(|&a, &b| supply[a].partial_cmp(&supply[b]).unwrap())
        .unwrap();
    supply[argmax] += diff;
    let mut cost = Vec::with_capacity(supply.len() * demand.len());
    let mut scale = S::zero();
    for &i in &supp_mu {
        for &j in &supp_nu {
            let d = space.d(t_idx, i, j);
            cost.push(d * d);
            scale = scale.max(d * d);
        }
    }
    let zero_tol = S::real(1e-13) * (scale + S::one());
    let sol = simplex::solve_transport(&supply, &demand, &cost, zero_tol);
    let mut matrix = vec![vec![S::zero(); n]; n];
    for (a, &i) in supp_mu.iter().enumerate() {
        for (b, &j) in supp_nu.iter().enumerate() {
            matrix[i][j] = sol.flow[a * demand.len() + b].max(S::zero());
        }
    }
    let w = sol.cost.max(S::zero()).sqrt();
    Ok((w, Coupling::new(matrix, mu, nu)?))
}

/// All optimal couplings reachable through degenerate pivots, capped.
pub fn optimal_couplings<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    t_idx: usize,
    mu: &ProbabilityVector<S>,
    nu: &ProbabilityVector<S>,
    cap: usize,
) -> Result<Vec<Coupling<S>>> {
    let n = space.vertex_count();
    let supp_mu = mu.support();
    let supp_nu = nu.support();
    let mut supply: Vec<S> = supp_mu.iter().map(|&i| mu.weights()[i]).collect();
    let demand: Vec<S> = supp_nu.iter().map(|&j| nu.weights()[j]).collect();
    let diff = demand.iter().copied().sum::<S>() - supply.iter().copied().sum::<S>();
    let argmax = (0..supply.len())
        .max_by(|&a, &b| supply[a].partial_cmp(&supply[b]).unwrap())
        .unwrap();
    supply[argmax] += diff;
    let mut cost = Vec::with_capacity(supply.len() * demand.len());
    let mut scale = S::zero();
    for &i in &supp_mu {
        for &j in &supp_nu {
            let d = space.d(t_idx, i, j);
            cost.push(d * d);
            scale = scale.max(d * d);
        }
    }
    let zero_tol = S::real(1e-13) * (scale + S::one());
    let flows = simplex::alternative_optima(&supply, &demand, &cost, zero_tol, cap);
    let mut out = Vec::new();
    for flow in flows {
        let mut matrix = vec![vec![S::zero(); n]; n];
        for (a, &i) in supp_mu.iter().enumerate() {
            for (b, &j) in supp_nu.iter().enumerate() {
                matrix[i][j] = flow[a * demand.len() + b].max(S::zero());
            }
        }
        out.push(Coupling::new(matrix, mu, nu)?);
    }
    Ok(out)
}

/// Places each coupled atom at the vertex nearest to arc-length position
/// `tau * d_t(x, y)` along the lexicographically smallest shortest path.
/// `tau = 0` returns `mu` exactly and `tau = 1` returns `nu` exactly.
pub fn displacement_interpolation<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    t_idx: usize,
    coupling: &Coupling<S>,
    tau: S,
) -> ProbabilityVector<S> {
    let n = space.vertex_count();
    let oracle = space.paths(t_idx);
    let mut w = vec![S::zero(); n];
    for (x, y, q) in coupling.atoms() {
        if x == y {
            w[x] += q;
            continue;
        }
        let path = oracle.lex_smallest(x, y);
        let pos = snap_along_path(space, t_idx, &path, tau);
        w[pos] += q;
    }
    // float dust: renormalize (exact at tau in {0, 1} where snapping is exact)
    ProbabilityVector::normalized(w).expect("interpolated mass is positive")
}

/// Nearest path vertex to arc-length fraction `tau`; ties resolve to the
/// earlier vertex.
pub(crate) fn snap_along_path<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    t_idx: usize,
    path: &[usize],
    tau: S,
) -> usize {
    let mut cum = vec![S::zero()];
    for w2 in path.windows(2) {
        let step = space.d(t_idx, w2[0], w2[1]);
        cum.push(*cum.last().unwrap() + step);
    }
    let total = *cum.last().unwrap();
    let target = tau * total;
    let mut best = 0usize;
    let mut best_d = (cum[0] - target).abs();
    for (i, &c) in cum.iter().enumerate().skip(1) {
        let d = (c - target).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    path[best]
}

/// Relative entropy `sum rho log rho dm` of `mu = rho m` against the weighted
/// measure `m` given as a plain nonnegative vector; `+inf` when `mu` charges
/// an `m`-null vertex.
pub fn relative_entropy<S: Scalar>(mu: &ProbabilityVector<S>, m: &[S]) -> S {
    let mut acc = S::zero();
    for (x, &w) in mu.weights().iter().enumerate() {
        if w <= S::zero() {
            continue;
        }
        if m[x] <= S::zero() {
            return S::infinity();
        }
        acc += w * (w / m[x]).ln();
    }
    acc
}

/// A curve of probability measures over a parameter grid in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MeasurePath<S> {
    pub time_index: usize,
    pub taus: Vec<S>,
    pub measures: Vec<ProbabilityVector<S>>,
}

impl<S: Scalar> MeasurePath<S> {
    pub fn new(time_index: usize, taus: Vec<S>, measures: Vec<ProbabilityVector<S>>) -> Result<Self> {
        if taus.len() != measures.len() || taus.len() < 2 {
            return Err(Error::BadParameter("measure path needs matching taus/measures".into()));
        }
        for w in taus.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::BadParameter("taus must be strictly increasing".into()));
            }
        }
        Ok(MeasurePath { time_index, taus, measures })
    }

    /// Displacement interpolation of an optimal coupling on a uniform
    /// parameter grid with `points` samples.
    pub fn displacement(
        space: &DiscreteGeodesicSpace<S>,
        t_idx: usize,
        coupling: &Coupling<S>,
        points: usize,
    ) -> Result<Self> {
        if points < 2 {
            return Err(Error::BadParameter("need at least 2 parameter samples".into()));
        }
        let taus: Vec<S> = (0..points)
            .map(|i| S::from_usize(i).unwrap() / S::from_usize(points - 1).unwrap())
            .collect();
        let measures = taus
            .iter()
            .map(|&tau| displacement_interpolation(space, t_idx, coupling, tau))
            .collect();
        MeasurePath::new(t_idx, taus, measures)
    }
}

/// Action and strain of a measure curve: supremal/infimal partition sums of
/// `W^2 / dtau` and backward `d/dt W^2 / dtau`; both are attained at the full
/// parameter grid.
pub fn measure_path_functionals<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    path: &MeasurePath<S>,
    t_idx: usize,
) -> Result<(S, S)> {
    if t_idx == 0 {
        return Err(Error::NoLeftDifference);
    }
    let dt = space.grid().step_before(t_idx);
    let mut action = S::zero();
    let mut strain = S::zero();
    for i in 1..path.taus.len() {
        let dtau = path.taus[i] - path.taus[i - 1];
        let (w_now, _) = wasserstein(space, t_idx, &path.measures[i - 1], &path.measures[i])?;
        let (w_prev, _) = wasserstein(space, t_idx - 1, &path.measures[i - 1], &path.measures[i])?;
        action += w_now * w_now / dtau;
        strain += (w_now * w_now - w_prev * w_prev) / dt / dtau;
    }
    Ok((action, strain))
}

/// Samples the entropy `S_t` along a measure path, for convexity checks.
pub fn entropy_along<S: Scalar>(path: &MeasurePath<S>, m_t: &[S]) -> Vec<S> {
    path.measures.iter().map(|mu| relative_entropy(mu, m_t)).collect()
}

/// Builds a `W_t`-geodesic skeleton (the base-space geodesic of one coupled
/// atom pair) for functionals that need a `DiscreteGeodesic`.
pub fn atom_geodesic<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    t_idx: usize,
    x: usize,
    y: usize,
) -> Result<DiscreteGeodesic<S>> {
    let path = space.paths(t_idx).lex_smallest(x, y);
    DiscreteGeodesic::from_vertex_path(space, t_idx, &path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::TimeGrid;
    use approx::assert_relative_eq;

    fn circle(n: usize) -> DiscreteGeodesicSpace<f64> {
        let grid = TimeGrid::uniform(0.0, 1.0, 4).unwrap();
        DiscreteGeodesicSpace::circle(grid, n, |_| n as f64).unwrap()
    }

    #[test]
    fn wasserstein_zero_for_equal_measures() {
        let s = circle(8);
        let mu = ProbabilityVector::uniform(8);
        let (w, q) = wasserstein(&s, 0, &mu, &mu).unwrap();
        assert_relative_eq!(w, 0.0, epsilon = 1e-12);
        for i in 0..8 {
            assert_relative_eq!(q.matrix[i][i], 0.125, epsilon = 1e-12);
        }
    }

    #[test]
    fn wasserstein_between_diracs_is_distance() {
        let s = circle(8);
        let mu = ProbabilityVector::dirac(8, 0);
        let nu = ProbabilityVector::dirac(8, 3);
        let (w, _) = wasserstein(&s, 0, &mu, &nu).unwrap();
        assert_relative_eq!(w, s.d(0, 0, 3), epsilon = 1e-12);
    }

    #[test]
    fn two_point_half_half() {
        let grid = TimeGrid::uniform(0.0, 1.0, 1).unwrap();
        let s = DiscreteGeodesicSpace::new(
            grid,
            vec!["a".into(), "b".into()],
            vec![],
            vec![(0, 1)],
            vec![vec![1.0]; 2],
        )
        .unwrap();
        let mu = ProbabilityVector::dirac(2, 0);
        let nu = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let (w, _) = wasserstein(&s, 0, &mu, &nu).unwrap();
        assert_relative_eq!(w, 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn marginal_mismatch_is_rejected() {
        let s = circle(4);
        let mu = ProbabilityVector::dirac(4, 0);
        let bad = ProbabilityVector { weights: vec![0.5, 0.25, 0.2, 0.0] };
        assert!(matches!(wasserstein(&s, 0, &mu, &bad), Err(Error::MarginalMismatch { .. })));
    }

    #[test]
    fn interpolation_endpoints_exact() {
        let s = circle(8);
        let mu = ProbabilityVector::bump(&s, 0, 0, 1.0);
        let nu = ProbabilityVector::bump(&s, 0, 4, 1.0);
        let (_, q) = wasserstein(&s, 0, &mu, &nu).unwrap();
        let m0 = displacement_interpolation(&s, 0, &q, 0.0);
        let m1 = displacement_interpolation(&s, 0, &q, 1.0);
        for i in 0..8 {
            assert_relative_eq!(m0.weights()[i], mu.weights()[i], epsilon = 1e-12);
            assert_relative_eq!(m1.weights()[i], nu.weights()[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_midpoint_is_path_midpoint() {
        let s = circle(8);
        let mu = ProbabilityVector::dirac(8, 0);
        let nu = ProbabilityVector::dirac(8, 2);
        let (_, q) = wasserstein(&s, 0, &mu, &nu).unwrap();
        let mid = displacement_interpolation(&s, 0, &q, 0.5);
        assert_relative_eq!(mid.weights()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn midpoint_measure_halves_distance() {
        let s = circle(16);
        let mu = ProbabilityVector::bump(&s, 0, 0, 1.5);
        let nu = ProbabilityVector::bump(&s, 0, 8, 1.5);
        let (w, q) = wasserstein(&s, 0, &mu, &nu).unwrap();
        let mid = displacement_interpolation(&s, 0, &q, 0.5);
        let (w0, _) = wasserstein(&s, 0, &mu, &mid).unwrap();
        let h = s.mesh(0);
        assert!((w0 - 0.5 * w).abs() <= h, "w0={} w={} h={}", w0, w, h);
    }

    #[test]
    fn entropy_values() {
        // m uniform on 4 points, mu = dirac -> log 4
        let mu = ProbabilityVector::dirac(4, 1);
        let m = vec![0.25; 4];
        assert_relative_eq!(relative_entropy(&mu, &m), 4.0f64.ln(), epsilon = 1e-12);
        // mu charging a null vertex -> +inf
        let m0 = vec![0.0f64, 0.5, 0.25, 0.25];
        let mu0 = ProbabilityVector::dirac(4, 0);
        assert!(relative_entropy(&mu0, &m0).is_infinite());
    }

    #[test]
    fn entropy_decomposition_identity() {
        // S_t(mu) = Ent(mu|m) + int f_t dmu for m_t = e^{-f} m
        let mu = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let m = [0.5, 0.5];
        let f = [0.0, 1.0]; // weight f(x) = x on a 2-point space
        let m_t: Vec<f64> = m.iter().zip(&f).map(|(&mm, &ff)| mm * (-ff as f64).exp()).collect();
        let lhs = relative_entropy(&mu, &m_t);
        let ent = relative_entropy(&mu, &m);
        let int_f: f64 = mu.weights().iter().zip(&f).map(|(&w, &ff)| w * ff).sum();
        assert_relative_eq!(lhs, ent + int_f, epsilon = 1e-10);
    }

    #[test]
    fn constant_path_has_zero_functionals() {
        let s = circle(6);
        let mu = ProbabilityVector::uniform(6);
        let path = MeasurePath::new(1, vec![0.0, 0.5, 1.0], vec![mu.clone(), mu.clone(), mu]).unwrap();
        let (a, b) = measure_path_functionals(&s, &path, 1).unwrap();
        assert_relative_eq!(a, 0.0, epsilon = 1e-12);
        assert_relative_eq!(b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_action_is_w_squared() {
        let s = circle(16);
        let mu = ProbabilityVector::dirac(16, 0);
        let nu = ProbabilityVector::dirac(16, 5);
        let (w, q) = wasserstein(&s, 1, &mu, &nu).unwrap();
        let path = MeasurePath::displacement(&s, 1, &q, 6).unwrap();
        let (a, _) = measure_path_functionals(&s, &path, 1).unwrap();
        let h: f64 = s.mesh(1);
        assert!((a - w * w).abs() <= 6.0 * h * (w + 1.0), "a={} w2={}", a, w * w);
    }

    #[test]
    fn scaled_metric_strain_matches_2kappa_action() {
        // metrics scaled e^{kt}: B = 2k A within finite-difference tolerance
        let k = 0.7;
        let grid = TimeGrid::uniform(0.0, 0.2, 4).unwrap();
        let s = DiscreteGeodesicSpace::circle(grid, 12, |t: f64| 12.0 * (k * t).exp()).unwrap();
        let mu = ProbabilityVector::dirac(12, 0);
        let nu = ProbabilityVector::dirac(12, 4);
        let (_, q) = wasserstein(&s, 2, &mu, &nu).unwrap();
        let path = MeasurePath::displacement(&s, 2, &q, 5).unwrap();
        let (a, b) = measure_path_functionals(&s, &path, 2).unwrap();
        let dt: f64 = s.grid().step_before(2);
        assert_relative_eq!(b, 2.0 * k * a, epsilon = 4.0 * k * k * dt * a + 1e-9);
    }
}

#[cfg(test)]
mod invariant_tests {
    use super::*;
    use crate::space::{estimate_controls, DiscreteGeodesicSpace, TimeGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityVector<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        ProbabilityVector::normalized(w).unwrap()
    }

    #[test]
    fn wasserstein_metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let grid = TimeGrid::uniform(0.0, 1.0, 1).unwrap();
        let s = DiscreteGeodesicSpace::circle(grid, 7, |_| 7.0).unwrap();
        for _ in 0..12 {
            let a = random_measure(&mut rng, 7);
            let b = random_measure(&mut rng, 7);
            let c = random_measure(&mut rng, 7);
            let (ab, _) = wasserstein(&s, 0, &a, &b).unwrap();
            let (ba, _) = wasserstein(&s, 0, &b, &a).unwrap();
            let (bc, _) = wasserstein(&s, 0, &b, &c).unwrap();
            let (ac, _) = wasserstein(&s, 0, &a, &c).unwrap();
            assert!((ab - ba).abs() <= 1e-9, "symmetry {} vs {}", ab, ba);
            assert!(ac <= ab + bc + 1e-9, "triangle {} > {} + {}", ac, ab, bc);
            let (aa, _) = wasserstein(&s, 0, &a, &a).unwrap();
            assert!(aa <= 1e-9);
        }
    }

    #[test]
    fn pointwise_bound_transfers_to_wasserstein() {
        // d_t^2 <= C1 + C2 d_s^2 pointwise implies the same for W
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let grid = TimeGrid::uniform(0.0, 0.5, 2).unwrap();
        let s = DiscreteGeodesicSpace::circle(grid, 9, |t: f64| 9.0 * (1.0 + t)).unwrap();
        let (t_idx, s_idx) = (2, 0);
        // find the smallest C2 with d_t^2 <= C2 d_s^2 (C1 = 0 suffices here)
        let mut c2: f64 = 0.0;
        for x in 0..9 {
            for y in 0..9 {
                if x != y {
                    let dn: f64 = s.d(t_idx, x, y);
                    let ds: f64 = s.d(s_idx, x, y);
                    c2 = c2.max(dn * dn / (ds * ds));
                }
            }
        }
        for _ in 0..8 {
            let mu = random_measure(&mut rng, 9);
            let nu = random_measure(&mut rng, 9);
            let (wt, _) = wasserstein(&s, t_idx, &mu, &nu).unwrap();
            let (ws, _) = wasserstein(&s, s_idx, &mu, &nu).unwrap();
            assert!(wt * wt <= c2 * ws * ws + 1e-9, "{} > {} * {}", wt * wt, c2, ws * ws);
        }
    }

    #[test]
    fn log_lipschitz_controls_transfer_to_wasserstein() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let grid = TimeGrid::uniform(0.0, 0.3, 3).unwrap();
        let s = DiscreteGeodesicSpace::circle(grid, 8, |t: f64| 8.0 * (0.8 * t).exp()).unwrap();
        let controls = estimate_controls(&s).unwrap();
        for _ in 0..6 {
            let mu = random_measure(&mut rng, 8);
            let nu = random_measure(&mut rng, 8);
            for ti in 1..4 {
                let (wt, _) = wasserstein(&s, ti, &mu, &nu).unwrap();
                let (ws, _) = wasserstein(&s, ti - 1, &mu, &nu).unwrap();
                let dt: f64 = s.grid().step_before(ti);
                let growth = (wt / ws).ln();
                assert!(growth <= controls.kappa_at(ti) * dt + 1e-9);
                assert!(growth >= -controls.lambda_at(ti) * dt - 1e-9);
            }
        }
    }

    #[test]
    fn generic_over_f32_scalar() {
        // the kernels accept any Float scalar; spot-check with f32
        let grid = TimeGrid::<f32>::uniform(0.0, 1.0, 1).unwrap();
        let s = DiscreteGeodesicSpace::circle(grid, 6, |_| 6.0f32).unwrap();
        let mu = ProbabilityVector::<f32>::dirac(6, 0);
        let nu = ProbabilityVector::<f32>::dirac(6, 3);
        let (w, _) = wasserstein(&s, 0, &mu, &nu).unwrap();
        assert!((w - 3.0).abs() < 1e-5);
    }
}
