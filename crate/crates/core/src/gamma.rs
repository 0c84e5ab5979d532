//! Finite-state Gamma-calculus: square field operators, their iteration,
//! Hessian and Ricci forms, the time-dependent propagator, and the
//! super-(N-)Ricci flow criteria with their gradient-estimate equivalents.
//!
//! Purely algebraic operations run on arbitrary generator families; the
//! chain-rule identities (weighted generators, the continuum meaning of the
//! Ricci form) hold only to `O(h)` and are restricted to finite-difference
//! discretizations, with residuals reported.

use crate::linalg::{null_space_basis, symmetric_eigen, Mat};
use crate::space::TimeGrid;
use crate::{Error, Result, Scalar};
use serde::Serialize;

/// Time-indexed family of generator matrices on a finite state set.
/// Rows sum to zero; with the `markov` flag the off-diagonal entries are
/// nonnegative, so the propagator is positivity preserving.
pub struct GeneratorFamily<S> {
    grid: TimeGrid<S>,
    mats: Vec<Mat<S>>,
    pub markov: bool,
}

impl<S: Scalar> GeneratorFamily<S> {
    pub fn new(grid: TimeGrid<S>, mats: Vec<Mat<S>>, markov: bool) -> Result<Self> {
        if mats.len() != grid.len() {
            return Err(Error::BadParameter("need one generator per grid time".into()));
        }
        let n = mats[0].rows;
        for m in &mats {
            if m.rows != n || m.cols != n {
                return Err(Error::BadParameter("generator dimensions differ".into()));
            }
            for i in 0..n {
                let s: S = m.row(i).iter().copied().sum();
                if s.abs() > S::real(1e-12) {
                    return Err(Error::BadParameter(format!("row {} sums to {}", i, s)));
                }
                if markov {
                    for j in 0..n {
                        if i != j && m[(i, j)] < S::zero() {
                            return Err(Error::NotMarkov { row: i, col: j });
                        }
                    }
                }
            }
        }
        Ok(GeneratorFamily { grid, mats, markov })
    }

    pub fn constant(grid: TimeGrid<S>, l: Mat<S>, markov: bool) -> Result<Self> {
        let mats = vec![l; grid.len()];
        Self::new(grid, mats, markov)
    }

    /// Two-state generator `[[-1, 1], [1, -1]]`, the standard toy example.
    pub fn two_point(grid: TimeGrid<S>) -> Self {
        let l = Mat::from_rows(&[vec![-S::one(), S::one()], vec![S::one(), -S::one()]]);
        Self::constant(grid, l, true).expect("valid generator")
    }

    /// Discrete circle Laplacian with `n` states, mesh `2 pi / n`, scaled by
    /// `scale(t)`.
    pub fn circle_laplacian(grid: TimeGrid<S>, n: usize, scale: impl Fn(S) -> S) -> Result<Self> {
        let h = S::real(std::f64::consts::TAU) / S::from_usize(n).unwrap();
        let inv_h2 = S::one() / (h * h);
        let mut base = Mat::zeros(n, n);
        for i in 0..n {
            base[(i, i)] = -S::real(2.0) * inv_h2;
            base[(i, (i + 1) % n)] = inv_h2;
            base[(i, (i + n - 1) % n)] = inv_h2;
        }
        let mats = grid.times().iter().map(|&t| base.scale(scale(t))).collect();
        Self::new(grid, mats, true)
    }

    /// 1D interval finite-difference Laplacian on `n` states with mesh `h`
    /// (reflecting endpoints), scaled by `scale(t)`.
    pub fn path_laplacian(
        grid: TimeGrid<S>,
        n: usize,
        h: S,
        scale: impl Fn(S) -> S,
    ) -> Result<Self> {
        let inv_h2 = S::one() / (h * h);
        let mut base = Mat::zeros(n, n);
        for i in 0..n {
            if i > 0 {
                base[(i, i - 1)] = inv_h2;
                base[(i, i)] -= inv_h2;
            }
            if i + 1 < n {
                base[(i, i + 1)] = inv_h2;
                base[(i, i)] -= inv_h2;
            }
        }
        let mats = grid.times().iter().map(|&t| base.scale(scale(t))).collect();
        Self::new(grid, mats, true)
    }

    pub fn grid(&self) -> &TimeGrid<S> {
        &self.grid
    }

    pub fn n_states(&self) -> usize {
        self.mats[0].rows
    }

    pub fn at_grid(&self, t_idx: usize) -> &Mat<S> {
        &self.mats[t_idx]
    }

    /// Generator at an arbitrary time by linear interpolation on the grid.
    pub fn at_time(&self, t: S) -> Mat<S> {
        let times = self.grid.times();
        if t <= times[0] {
            return self.mats[0].clone();
        }
        if t >= *times.last().unwrap() {
            return self.mats.last().unwrap().clone();
        }
        let mut hi = 1;
        while times[hi] < t {
            hi += 1;
        }
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        let mut out = self.mats[lo].clone();
        for (o, (&a, &b)) in out.data.iter_mut().zip(self.mats[lo].data.iter().zip(&self.mats[hi].data)) {
            *o = a + (b - a) * w;
        }
        out
    }
}

/// Square field operator `Gamma(u, v) = 1/2 [L(uv) - u Lv - v Lu]`,
/// evaluated exactly at every state.
pub fn gamma<S: Scalar>(l: &Mat<S>, u: &[S], v: &[S]) -> Vec<S> {
    let uv: Vec<S> = u.iter().zip(v).map(|(&a, &b)| a * b).collect();
    let l_uv = l.matvec(&uv);
    let l_v = l.matvec(v);
    let l_u = l.matvec(u);
    (0..u.len())
        .map(|x| S::real(0.5) * (l_uv[x] - u[x] * l_v[x] - v[x] * l_u[x]))
        .collect()
}

/// Iterated square field
/// `Gamma_2(u, v) = 1/2 [L Gamma(u, v) - Gamma(u, Lv) - Gamma(v, Lu)]`.
pub fn gamma2<S: Scalar>(l: &Mat<S>, u: &[S], v: &[S]) -> Vec<S> {
    let g_uv = gamma(l, u, v);
    let l_guv = l.matvec(&g_uv);
    let l_v = l.matvec(v);
    let l_u = l.matvec(u);
    let g_u_lv = gamma(l, u, &l_v);
    let g_v_lu = gamma(l, v, &l_u);
    (0..u.len())
        .map(|x| S::real(0.5) * (l_guv[x] - g_u_lv[x] - g_v_lu[x]))
        .collect()
}

/// State-indexed quadratic forms: `Form(u)(x) = u^T A_x u`.
#[derive(Debug, Clone)]
pub struct QuadraticFormField<S> {
    pub forms: Vec<Mat<S>>,
}

impl<S: Scalar> QuadraticFormField<S> {
    pub fn evaluate(&self, x: usize, u: &[S]) -> S {
        let au = self.forms[x].matvec(u);
        u.iter().zip(&au).map(|(&a, &b)| a * b).sum()
    }
}

/// The Gamma form field by polarization:
/// `A_x[i][j] = 1/2 [delta_ij L_{x,i} - delta_{x,i} L_{x,j} - delta_{x,j} L_{x,i}]`.
pub fn gamma_form<S: Scalar>(l: &Mat<S>) -> QuadraticFormField<S> {
    let n = l.rows;
    let half = S::real(0.5);
    let mut forms = Vec::with_capacity(n);
    for x in 0..n {
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut val = S::zero();
                if i == j {
                    val += l[(x, i)];
                }
                if x == i {
                    val -= l[(x, j)];
                }
                if x == j {
                    val -= l[(x, i)];
                }
                a[(i, j)] = half * val;
            }
        }
        forms.push(a);
    }
    QuadraticFormField { forms }
}

/// The Gamma_2 form field: `B_x = 1/2 [sum_y L_{x,y} A_y - A_x L - L^T A_x]`
/// symmetrized.
pub fn gamma2_form<S: Scalar>(l: &Mat<S>) -> QuadraticFormField<S> {
    let n = l.rows;
    let a = gamma_form(l);
    let half = S::real(0.5);
    let mut forms = Vec::with_capacity(n);
    for x in 0..n {
        let mut acc = Mat::zeros(n, n);
        for y in 0..n {
            let c = l[(x, y)];
            if c != S::zero() {
                acc = acc.add(&a.forms[y].scale(c));
            }
        }
        let axl = a.forms[x].matmul(l);
        let lt_ax = l.transpose().matmul(&a.forms[x]);
        let b = acc.sub(&axl).sub(&lt_ax).scale(half);
        forms.push(b.symmetrize());
    }
    QuadraticFormField { forms }
}

/// Hessian form of `u`: evaluator for
/// `H u(v, w)(x) = 1/2 [Gamma(v, Gamma(u, w)) + Gamma(w, Gamma(u, v)) - Gamma(u, Gamma(v, w))](x)`.
pub fn hessian_eval<S: Scalar>(l: &Mat<S>, u: &[S], v: &[S], w: &[S]) -> Vec<S> {
    let g_uw = gamma(l, u, w);
    let g_uv = gamma(l, u, v);
    let g_vw = gamma(l, v, w);
    let t1 = gamma(l, v, &g_uw);
    let t2 = gamma(l, w, &g_uv);
    let t3 = gamma(l, u, &g_vw);
    (0..u.len())
        .map(|x| S::real(0.5) * (t1[x] + t2[x] - t3[x]))
        .collect()
}

/// Hessian of `f` as a state-indexed quadratic form in the gradient slots:
/// `M_x[i][j] = H f(e_i, e_j)(x)`.
pub fn hessian_form<S: Scalar>(l: &Mat<S>, f: &[S]) -> QuadraticFormField<S> {
    let n = l.rows;
    let mut basis: Vec<Vec<S>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![S::zero(); n];
        e[i] = S::one();
        basis.push(e);
    }
    let mut forms = vec![Mat::zeros(n, n); n];
    for i in 0..n {
        for j in i..n {
            let h = hessian_eval(l, f, &basis[i], &basis[j]);
            for x in 0..n {
                forms[x][(i, j)] = h[x];
                forms[x][(j, i)] = h[x];
            }
        }
    }
    QuadraticFormField { forms }
}

/// Gradient constraint for the Ricci form: rows of the returned matrix are
/// forward differences `e_y - e_x` to the neighbors of `x` in the generator.
pub fn forward_difference_constraint<S: Scalar>(l: &Mat<S>, x: usize) -> Mat<S> {
    let n = l.rows;
    let mut rows = Vec::new();
    for y in 0..n {
        if y != x && l[(x, y)] != S::zero() {
            let mut row = vec![S::zero(); n];
            row[y] = S::one();
            row[x] = -S::one();
            rows.push(row);
        }
    }
    Mat::from_rows(&rows)
}

/// Value of the (N-)Ricci form at one state: the constrained minimum of
/// `Gamma_2(u + v)(x) - (L(u+v)(x))^2 / N` over `v` in the null space of the
/// gradient constraint. `unbounded` marks a `-inf` surrogate (the value
/// falls back to the unperturbed `Gamma_2(u)(x)`).
#[derive(Debug, Clone, Serialize)]
pub struct RicciValue<S> {
    pub value: S,
    pub unbounded: bool,
}

pub fn ricci_form<S: Scalar>(
    l: &Mat<S>,
    u: &[S],
    x: usize,
    constraint: &Mat<S>,
    n_param: S,
) -> RicciValue<S> {
    let n = l.rows;
    let b2 = gamma2_form(l);
    // effective quadratic form: Gamma_2 minus the rank-one L-term
    let mut bx = b2.forms[x].clone();
    if !n_param.is_infinite() {
        for i in 0..n {
            for j in 0..n {
                let v = l[(x, i)] * l[(x, j)] / n_param;
                bx[(i, j)] -= v;
            }
        }
    }
    let base_val = {
        let bu = bx.matvec(u);
        u.iter().zip(&bu).map(|(&a, &b)| a * b).sum::<S>()
    };
    let z = if constraint.rows == 0 {
        // unconstrained: every direction admissible
        (0..n)
            .map(|i| {
                let mut e = vec![S::zero(); n];
                e[i] = S::one();
                e
            })
            .collect::<Vec<_>>()
    } else {
        null_space_basis(constraint)
    };
    if z.is_empty() {
        return RicciValue { value: base_val, unbounded: false };
    }
    let k = z.len();
    // M = Z^T B Z, b = Z^T B u
    let mut m: Mat<S> = Mat::zeros(k, k);
    let bz: Vec<Vec<S>> = z.iter().map(|zi| bx.matvec(zi)).collect();
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = z[a].iter().zip(&bz[b]).map(|(&p, &q)| p * q).sum();
        }
    }
    let bu = bx.matvec(u);
    let rhs: Vec<S> = z.iter().map(|zi| zi.iter().zip(&bu).map(|(&p, &q)| p * q).sum()).collect();
    let (vals, vecs) = symmetric_eigen(&m.symmetrize());
    let scale = vals.iter().fold(S::zero(), |acc, &v| acc.max(v.abs())) + S::one();
    let tol = S::epsilon().sqrt() * scale;
    let mut value = base_val;
    for idx in 0..k {
        let lam = vals[idx];
        let d: S = (0..k).map(|r| vecs[(r, idx)] * rhs[r]).sum();
        if lam < -tol || (lam.abs() <= tol && d.abs() > tol) {
            return RicciValue { value: base_val, unbounded: true };
        }
        if lam > tol {
            value -= d * d / lam;
        }
    }
    RicciValue { value, unbounded: false }
}

/// Two-parameter propagator table `P(s, t)` for all grid pairs `s <= t`,
/// built by RK4 integration of the forward equation from every start time
/// independently (so the cocycle identity is a real consistency check).
pub struct Propagator<S> {
    n: usize,
    grid_len: usize,
    slices: Vec<Vec<Mat<S>>>, // slices[s][k] = P(s, s + k)
}

impl<S: Scalar> Propagator<S> {
    pub fn build(fam: &GeneratorFamily<S>, substeps: usize) -> Result<Self> {
        let m = fam.grid().len();
        let n = fam.n_states();
        let times = fam.grid().times().to_vec();
        let mut slices = Vec::with_capacity(m);
        for s in 0..m {
            let mut row = vec![Mat::identity(n)];
            let mut current = Mat::identity(n);
            for j in s + 1..m {
                let coarse = rk4_interval(fam, &current, times[j - 1], times[j], substeps);
                let fine = rk4_interval(fam, &current, times[j - 1], times[j], substeps * 2);
                let err = coarse.sub(&fine).max_abs();
                let scale = fine.max_abs() + S::one();
                if err > S::real(1e-8) * scale {
                    return Err(Error::StiffStep { suggested: substeps * 4 });
                }
                current = fine;
                row.push(current.clone());
            }
            slices.push(row);
        }
        Ok(Propagator { n, grid_len: m, slices })
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn slice(&self, s_idx: usize, t_idx: usize) -> &Mat<S> {
        assert!(t_idx >= s_idx && t_idx < self.grid_len);
        &self.slices[s_idx][t_idx - s_idx]
    }

    pub fn apply(&self, s_idx: usize, t_idx: usize, u: &[S]) -> Vec<S> {
        self.slice(s_idx, t_idx).matvec(u)
    }

    /// Worst Chapman-Kolmogorov residual `|P(r,t) P(s,r) - P(s,t)|_inf`.
    pub fn cocycle_residual(&self) -> S {
        let mut worst = S::zero();
        for s in 0..self.grid_len {
            for r in s..self.grid_len {
                for t in r..self.grid_len {
                    let lhs = self.slice(r, t).matmul(self.slice(s, r));
                    let diff = lhs.sub(self.slice(s, t)).max_abs();
                    worst = worst.max(diff);
                }
            }
        }
        worst
    }

    /// Worst residual of the backward equation `d/ds P(s,t) = -P(s,t) L_s`
    /// by central differences over the grid.
    pub fn backward_residual(&self, fam: &GeneratorFamily<S>) -> S {
        let times = fam.grid().times();
        let mut worst = S::zero();
        for t in 2..self.grid_len {
            for s in 1..t {
                let dp = self
                    .slice(s + 1, t)
                    .sub(self.slice(s - 1, t))
                    .scale(S::one() / (times[s + 1] - times[s - 1]));
                let rhs = self.slice(s, t).matmul(fam.at_grid(s)).scale(-S::one());
                worst = worst.max(dp.sub(&rhs).max_abs());
            }
        }
        worst
    }

    /// Positivity / mass-conservation checks for markov families.
    pub fn markov_defect(&self) -> S {
        let mut worst = S::zero();
        for s in 0..self.grid_len {
            for t in s..self.grid_len {
                let p = self.slice(s, t);
                for i in 0..self.n {
                    let mut row_sum = S::zero();
                    for j in 0..self.n {
                        row_sum += p[(i, j)];
                        if p[(i, j)] < S::zero() {
                            worst = worst.max(-p[(i, j)]);
                        }
                    }
                    worst = worst.max((row_sum - S::one()).abs());
                }
            }
        }
        worst
    }
}

fn rk4_interval<S: Scalar>(
    fam: &GeneratorFamily<S>,
    start: &Mat<S>,
    t0: S,
    t1: S,
    substeps: usize,
) -> Mat<S> {
    let mut p = start.clone();
    let h = (t1 - t0) / S::from_usize(substeps).unwrap();
    let mut t = t0;
    for _ in 0..substeps {
        let k1 = fam.at_time(t).matmul(&p);
        let k2 = fam
            .at_time(t + h * S::real(0.5))
            .matmul(&p.add(&k1.scale(h * S::real(0.5))));
        let k3 = fam
            .at_time(t + h * S::real(0.5))
            .matmul(&p.add(&k2.scale(h * S::real(0.5))));
        let k4 = fam.at_time(t + h).matmul(&p.add(&k3.scale(h)));
        let incr = k1
            .add(&k2.scale(S::real(2.0)))
            .add(&k3.scale(S::real(2.0)))
            .add(&k4)
            .scale(h / S::real(6.0));
        p = p.add(&incr);
        t += h;
    }
    p
}

/// Per-state verdict of the slice criterion `d/dt Gamma_t <= 2 Gamma_{2,t}`:
/// the minimum eigenvalue of `2 B_x(t) - d/dt A_x(t)` over states.
#[derive(Debug, Clone, Serialize)]
pub struct GammaSliceVerdict<S> {
    pub pass: bool,
    pub min_eig: S,
    pub witness_state: usize,
    pub witness_u: Vec<S>,
    /// One-sided time difference was used (first/last grid time).
    pub order1: bool,
}

/// Checks the super-Ricci flow slice criterion at grid time `t_idx`.
pub fn check_srf_gamma<S: Scalar>(
    fam: &GeneratorFamily<S>,
    t_idx: usize,
    tol: S,
) -> Result<GammaSliceVerdict<S>> {
    let m = fam.grid().len();
    let times = fam.grid().times();
    let n = fam.n_states();
    let (lo, hi, order1) = if t_idx == 0 {
        (0, 1, true)
    } else if t_idx + 1 == m {
        (m - 2, m - 1, true)
    } else {
        (t_idx - 1, t_idx + 1, false)
    };
    let a_lo = gamma_form(fam.at_grid(lo));
    let a_hi = gamma_form(fam.at_grid(hi));
    let dt = times[hi] - times[lo];
    let b = gamma2_form(fam.at_grid(t_idx));
    let mut min_eig = S::infinity();
    let mut witness_state = 0;
    let mut witness_u = vec![S::zero(); n];
    for x in 0..n {
        let da = a_hi.forms[x].sub(&a_lo.forms[x]).scale(S::one() / dt);
        let form = b.forms[x].scale(S::real(2.0)).sub(&da);
        let (vals, vecs) = symmetric_eigen(&form.symmetrize());
        if vals[0] < min_eig {
            min_eig = vals[0];
            witness_state = x;
            witness_u = (0..n).map(|r| vecs[(r, 0)]).collect();
        }
    }
    Ok(GammaSliceVerdict { pass: min_eig >= -tol, min_eig, witness_state, witness_u, order1 })
}

/// Slack samples of a gradient-estimate check.
#[derive(Debug, Clone, Serialize)]
pub struct GradientEstimateVerdict<S> {
    pub pass: bool,
    pub min_slack: S,
    pub witness_u: usize,
    pub witness_state: usize,
}

/// Checks `Gamma_t(P u) <= P (Gamma_s u)` for every test function and state.
pub fn check_gradient_estimate<S: Scalar>(
    fam: &GeneratorFamily<S>,
    prop: &Propagator<S>,
    s_idx: usize,
    t_idx: usize,
    test_functions: &[Vec<S>],
    tol: S,
) -> Result<GradientEstimateVerdict<S>> {
    if !fam.markov {
        return Err(Error::NotMarkov { row: 0, col: 0 });
    }
    let mut min_slack = S::infinity();
    let mut witness_u = 0;
    let mut witness_state = 0;
    for (ui, u) in test_functions.iter().enumerate() {
        let g_s = gamma(fam.at_grid(s_idx), u, u);
        let p_gs = prop.apply(s_idx, t_idx, &g_s);
        let pu = prop.apply(s_idx, t_idx, u);
        let g_t = gamma(fam.at_grid(t_idx), &pu, &pu);
        for x in 0..fam.n_states() {
            let slack = p_gs[x] - g_t[x];
            if slack < min_slack {
                min_slack = slack;
                witness_u = ui;
                witness_state = x;
            }
        }
    }
    Ok(GradientEstimateVerdict { pass: min_slack >= -tol, min_slack, witness_u, witness_state })
}

/// N-refined gradient estimate:
/// `Gamma_t(P u) + 2/N int_s^t (P^r_t L_r P^s_r u)^2 dr <= P(Gamma_s u)`.
/// The integral uses Simpson quadrature over the grid times in `[s, t]`.
pub fn check_n_gradient_estimate<S: Scalar>(
    fam: &GeneratorFamily<S>,
    prop: &Propagator<S>,
    s_idx: usize,
    t_idx: usize,
    n_param: S,
    test_functions: &[Vec<S>],
    tol: S,
) -> Result<GradientEstimateVerdict<S>> {
    if !fam.markov {
        return Err(Error::NotMarkov { row: 0, col: 0 });
    }
    if n_param <= S::zero() {
        return Err(Error::BadParameter(format!("N must be positive or infinite, got {}", n_param)));
    }
    let mut min_slack = S::infinity();
    let mut witness_u = 0;
    let mut witness_state = 0;
    for (ui, u) in test_functions.iter().enumerate() {
        let g_s = gamma(fam.at_grid(s_idx), u, u);
        let p_gs = prop.apply(s_idx, t_idx, &g_s);
        let pu = prop.apply(s_idx, t_idx, u);
        let g_t = gamma(fam.at_grid(t_idx), &pu, &pu);
        let integral = n_refinement_integral(fam, prop, s_idx, t_idx, u);
        for x in 0..fam.n_states() {
            let refine = if n_param.is_infinite() {
                S::zero()
            } else {
                S::real(2.0) / n_param * integral[x]
            };
            let slack = p_gs[x] - g_t[x] - refine;
            if slack < min_slack {
                min_slack = slack;
                witness_u = ui;
                witness_state = x;
            }
        }
    }
    Ok(GradientEstimateVerdict { pass: min_slack >= -tol, min_slack, witness_u, witness_state })
}

/// `int_s^t (P^r_t L_r P^s_r u)^2 dr` per state, Simpson over grid times.
pub fn n_refinement_integral<S: Scalar>(
    fam: &GeneratorFamily<S>,
    prop: &Propagator<S>,
    s_idx: usize,
    t_idx: usize,
    u: &[S],
) -> Vec<S> {
    let n = fam.n_states();
    if t_idx == s_idx {
        return vec![S::zero(); n];
    }
    let times = fam.grid().times();
    let mut series: Vec<Vec<S>> = Vec::new();
    for r in s_idx..=t_idx {
        let v = prop.apply(s_idx, r, u);
        let lv = fam.at_grid(r).matvec(&v);
        let plv = prop.apply(r, t_idx, &lv);
        series.push(plv.iter().map(|&a| a * a).collect());
    }
    let h = times[s_idx + 1] - times[s_idx];
    (0..n)
        .map(|x| {
            let ys: Vec<S> = series.iter().map(|row| row[x]).collect();
            crate::quad::simpson_uniform(h, &ys)
        })
        .collect()
}

/// Weighted generator `L = L0 - Gamma0(., f)` built from a base generator
/// and a weight vector.
pub fn weighted_generator<S: Scalar>(l0: &Mat<S>, f: &[S]) -> Mat<S> {
    let n = l0.rows;
    let a = gamma_form(l0);
    let mut out = l0.clone();
    for x in 0..n {
        let af = a.forms[x].matvec(f);
        for j in 0..n {
            out[(x, j)] -= af[j];
        }
    }
    out
}

/// Residuals of the weighted-generator identities `Gamma_L = Gamma0` and
/// `Gamma_{2,L} = Gamma_{2,0} + H f` over the supplied test functions;
/// exact only in the continuum, `O(h)` on finite-difference discretizations.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedIdentityResiduals<S> {
    pub gamma_residual: S,
    pub gamma2_residual: S,
}

pub fn check_weighted_identities<S: Scalar>(
    l0: &Mat<S>,
    f: &[S],
    test_functions: &[Vec<S>],
) -> WeightedIdentityResiduals<S> {
    let lw = weighted_generator(l0, f);
    let mut g_res = S::zero();
    let mut g2_res = S::zero();
    for u in test_functions {
        let g_w = gamma(&lw, u, u);
        let g_0 = gamma(l0, u, u);
        for x in 0..l0.rows {
            g_res = g_res.max((g_w[x] - g_0[x]).abs());
        }
        let g2_w = gamma2(&lw, u, u);
        let g2_0 = gamma2(l0, u, u);
        let hf = hessian_eval(l0, f, u, u);
        for x in 0..l0.rows {
            g2_res = g2_res.max((g2_w[x] - g2_0[x] - hf[x]).abs());
        }
    }
    WeightedIdentityResiduals { gamma_residual: g_res, gamma2_residual: g2_res }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(steps: usize) -> TimeGrid<f64> {
        TimeGrid::uniform(0.0, 0.5, steps).unwrap()
    }

    fn two_point_l() -> Mat<f64> {
        Mat::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]])
    }

    #[test]
    fn gamma_of_constants_vanishes() {
        let l = two_point_l();
        let ones = vec![1.0, 1.0];
        let v = vec![0.3, -0.7];
        for g in gamma(&l, &ones, &v) {
            assert_relative_eq!(g, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_point_gamma_and_gamma2() {
        let l = two_point_l();
        let u = vec![1.0, 0.0];
        let g = gamma(&l, &u, &u);
        assert_relative_eq!(g[0], 0.5);
        assert_relative_eq!(g[1], 0.5);
        let g2 = gamma2(&l, &u, &u);
        assert_relative_eq!(g2[0], 1.0);
        assert_relative_eq!(g2[1], 1.0);
        // Bakry-Emery curvature 2: Gamma_2 = 2 Gamma on this instance
        for x in 0..2 {
            assert_relative_eq!(g2[x], 2.0 * g[x]);
        }
    }

    #[test]
    fn markov_gamma_is_nonnegative_on_random_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // random markov generator on 5 states
        let n = 5;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let r: f64 = rng.gen_range(0.0..2.0);
                    l[(i, j)] = r;
                    l[(i, i)] -= r;
                }
            }
        }
        for _ in 0..32 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for g in gamma(&l, &u, &u) {
                assert!(g >= -1e-12);
            }
        }
    }

    #[test]
    fn form_fields_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = two_point_l();
        let a = gamma_form(&l);
        let b = gamma2_form(&l);
        for _ in 0..16 {
            let u: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let g = gamma(&l, &u, &u);
            let g2 = gamma2(&l, &u, &u);
            for x in 0..2 {
                assert_relative_eq!(a.evaluate(x, &u), g[x], epsilon = 1e-12);
                assert_relative_eq!(b.evaluate(x, &u), g2[x], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn circle_gamma2_nonnegative() {
        // abelian Cayley graph: Bakry-Emery curvature >= 0 exactly
        let fam = GeneratorFamily::circle_laplacian(grid(2), 64, |_| 1.0).unwrap();
        let l = fam.at_grid(0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for v in gamma2(l, &u, &u) {
                assert!(v >= -1e-8, "Gamma2 = {}", v);
            }
        }
    }

    #[test]
    fn hessian_symmetry_and_constant_slot() {
        let l = two_point_l();
        let u = vec![0.7, -0.4];
        let v = vec![1.3, 0.2];
        let w = vec![-0.5, 0.9];
        let hvw = hessian_eval(&l, &u, &v, &w);
        let hwv = hessian_eval(&l, &u, &w, &v);
        for x in 0..2 {
            assert_relative_eq!(hvw[x], hwv[x], epsilon = 1e-13);
        }
        let ones = vec![1.0, 1.0];
        for h in hessian_eval(&l, &u, &ones, &w) {
            assert_relative_eq!(h, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn hessian_matches_continuum_pattern_on_smooth_samples() {
        // 1D circle discretization: H u(v, w) ~ u'' v' w' + O(h)
        let n = 128;
        let fam = GeneratorFamily::circle_laplacian(grid(2), n, |_| 1.0).unwrap();
        let l = fam.at_grid(0);
        let h = std::f64::consts::TAU / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let u: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
        let v: Vec<f64> = xs.iter().map(|&x| (2.0 * x).cos()).collect();
        let w: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
        let hu = hessian_eval(l, &u, &v, &w);
        for (i, &x) in xs.iter().enumerate().step_by(17) {
            let expect = -x.sin() * (-2.0 * (2.0 * x).sin()) * x.cos();
            assert!(
                (hu[i] - expect).abs() < 12.0 * h,
                "H u at {}: {} vs {}",
                x,
                hu[i],
                expect
            );
        }
    }

    #[test]
    fn ricci_form_trivial_constraint_returns_gamma2() {
        let l = two_point_l();
        let u = vec![1.0, 0.0];
        // constraint = identity rows: null space {0}
        let full = Mat::identity(2);
        let r = ricci_form(&l, &u, 0, &full, f64::INFINITY);
        assert!(!r.unbounded);
        assert_relative_eq!(r.value, gamma2(&l, &u, &u)[0], epsilon = 1e-12);
    }

    #[test]
    fn ricci_form_on_flat_circle_is_near_zero() {
        let n = 64;
        let fam = GeneratorFamily::circle_laplacian(grid(2), n, |_| 1.0).unwrap();
        let l = fam.at_grid(0);
        let h = std::f64::consts::TAU / n as f64;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let u: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
        let x0 = 5;
        let constraint = forward_difference_constraint(l, x0);
        let r = ricci_form(&l, &u, x0, &constraint, f64::INFINITY);
        assert!(!r.unbounded);
        // continuum Ricci is 0; the discrete surrogate is O(h) relative to
        // the gradient scale
        assert!(r.value.abs() <= 20.0 * h, "R = {}", r.value);
        // and never exceeds Gamma_2(u)(x)
        assert!(r.value <= gamma2(l, &u, &u)[x0] + 1e-12);
    }

    #[test]
    fn n_ricci_below_plain_ricci() {
        let l = two_point_l();
        let u = vec![1.0, -0.3];
        let c = forward_difference_constraint(&l, 0);
        let r_inf = ricci_form(&l, &u, 0, &c, f64::INFINITY);
        let r_2 = ricci_form(&l, &u, 0, &c, 2.0);
        if !r_inf.unbounded && !r_2.unbounded {
            assert!(r_2.value <= r_inf.value + 1e-12);
        }
    }

    #[test]
    fn propagator_identity_and_closed_form() {
        let fam = GeneratorFamily::two_point(grid(4));
        let prop = Propagator::build(&fam, 20).unwrap();
        let id = prop.slice(2, 2);
        assert!(id.sub(&Mat::identity(2)).max_abs() < 1e-14);
        // static: P(s,t) = exp((t-s) L), eigenvalue -2 on the difference mode
        let dt: f64 = 0.5;
        let p = prop.slice(0, 4);
        let decay = (-2.0 * dt).exp();
        let expect = Mat::from_rows(&[
            vec![(1.0 + decay) / 2.0, (1.0 - decay) / 2.0],
            vec![(1.0 - decay) / 2.0, (1.0 + decay) / 2.0],
        ]);
        assert!(p.sub(&expect).max_abs() < 1e-9, "P = {:?}", p);
    }

    #[test]
    fn chapman_kolmogorov_on_random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let fam = random_markov_family(&mut rng, 5, 8, 1.0);
            let prop = Propagator::build(&fam, 20).unwrap();
            assert!(prop.cocycle_residual() < 1e-8);
            assert!(prop.markov_defect() < 1e-8);
            assert!(prop.backward_residual(&fam) < 0.2); // central-difference order
        }
    }

    #[test]
    fn srf_gamma_static_two_point_passes() {
        let fam = GeneratorFamily::two_point(grid(4));
        let v = check_srf_gamma(&fam, 2, 1e-9).unwrap();
        assert!(v.pass);
        assert!(!v.order1);
    }

    #[test]
    fn srf_gamma_scaling_thresholds() {
        // L_t = e^{2t} L0: 2 e^{4t} Gamma2_0 >= 2 e^{2t} Gamma_0 for t >= 0
        let fam = GeneratorFamily::constant(grid(8), two_point_l(), true)
            .unwrap();
        let mats: Vec<Mat<f64>> = fam
            .grid()
            .times()
            .iter()
            .map(|&t: &f64| two_point_l().scale((2.0 * t).exp()))
            .collect();
        let fam = GeneratorFamily::new(grid(8), mats, true).unwrap();
        for t_idx in 1..7 {
            let v = check_srf_gamma(&fam, t_idx, 1e-6).unwrap();
            assert!(v.pass, "t={} min eig {}", t_idx, v.min_eig);
        }
        // rapid growth e^{10t} violates near t = 0 (threshold ln(2.5)/10)
        let mats: Vec<Mat<f64>> = fam
            .grid()
            .times()
            .iter()
            .map(|&t: &f64| two_point_l().scale((10.0 * t).exp()))
            .collect();
        let fam_bad = GeneratorFamily::new(grid(8), mats, true).unwrap();
        let v = check_srf_gamma(&fam_bad, 1, 1e-9).unwrap();
        assert!(!v.pass, "min eig {}", v.min_eig);
        // decay makes the derivative negative: passes trivially
        let mats: Vec<Mat<f64>> = fam
            .grid()
            .times()
            .iter()
            .map(|&t: &f64| two_point_l().scale((-10.0 * t).exp()))
            .collect();
        let fam_dec = GeneratorFamily::new(grid(8), mats, true).unwrap();
        let v = check_srf_gamma(&fam_dec, 4, 1e-9).unwrap();
        assert!(v.pass);
    }

    #[test]
    fn gradient_estimate_closed_form_two_point() {
        let fam = GeneratorFamily::two_point(grid(4));
        let prop = Propagator::build(&fam, 40).unwrap();
        let u = vec![1.5, 0.5]; // w = u(0) - u(1) = 1
        let v = check_gradient_estimate(&fam, &prop, 0, 4, &[u.clone()], 1e-9).unwrap();
        assert!(v.pass);
        // slack = w^2/2 (1 - e^{-4 dt}) at both states
        let dt: f64 = 0.5;
        let expect = 0.5 * (1.0 - (-4.0 * dt).exp());
        let g_s = gamma(fam.at_grid(0), &u, &u);
        let p_gs = prop.apply(0, 4, &g_s);
        let pu = prop.apply(0, 4, &u);
        let g_t = gamma(fam.at_grid(4), &pu, &pu);
        for x in 0..2 {
            assert_relative_eq!(p_gs[x] - g_t[x], expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn n_gradient_estimate_closed_form() {
        // two-point static: (P^r_t L_r P^s_r u) = w e^{-2(t-s)} (-1, 1),
        // constant in r, so the integral is (t-s) w^2 e^{-4(t-s)}
        let fam = GeneratorFamily::two_point(grid(4));
        let prop = Propagator::build(&fam, 40).unwrap();
        let u = vec![1.0, 0.0];
        let dt: f64 = 0.5;
        let analytic = dt * (-4.0f64 * dt).exp();
        let integral = n_refinement_integral(&fam, &prop, 0, 4, &u);
        for x in 0..2 {
            assert_relative_eq!(integral[x], analytic, epsilon = 1e-7);
        }
        // verdicts for N in {1, 2, inf} match the analytic sign:
        // e^{4 dt} >= 1 + 4 dt / N always holds
        for n_param in [1.0, 2.0, f64::INFINITY] {
            let v =
                check_n_gradient_estimate(&fam, &prop, 0, 4, n_param, &[u.clone()], 1e-9).unwrap();
            assert!(v.pass, "N = {}", n_param);
        }
        // and N = infinity reduces to the plain gradient estimate
        let a = check_n_gradient_estimate(&fam, &prop, 0, 4, f64::INFINITY, &[u.clone()], 1e-9)
            .unwrap();
        let b = check_gradient_estimate(&fam, &prop, 0, 4, &[u], 1e-9).unwrap();
        assert_relative_eq!(a.min_slack, b.min_slack, epsilon = 1e-13);
    }

    #[test]
    fn weighted_generator_constant_weight_is_identity() {
        let l = two_point_l();
        let f = vec![2.5, 2.5];
        let lw = weighted_generator(&l, &f);
        assert!(lw.sub(&l).max_abs() < 1e-14);
        let res = check_weighted_identities(&l, &f, &[vec![1.0, -0.5]]);
        assert!(res.gamma_residual < 1e-14);
        assert!(res.gamma2_residual < 1e-14);
    }

    #[test]
    fn weighted_identity_residual_order_h() {
        // 1D interval FD Laplacian with f(x) = x: residual <= C h
        for &n in &[16usize, 32, 64] {
            let h = 1.0 / n as f64;
            let fam = GeneratorFamily::path_laplacian(grid(2), n, h, |_| 1.0).unwrap();
            let l0 = fam.at_grid(0);
            let f: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
            // smooth interior test function vanishing near the ends
            let u: Vec<f64> = (0..n)
                .map(|i| (std::f64::consts::PI * i as f64 * h).sin().powi(2))
                .collect();
            let res = check_weighted_identities(l0, &f, &[u]);
            // Gamma itself picks up the drift at O(h) relative to 1/h^2 scales
            assert!(
                res.gamma_residual <= 2.0,
                "n = {} gamma residual {}",
                n,
                res.gamma_residual
            );
            assert!(
                res.gamma2_residual <= 60.0 * h + 8.0,
                "n = {} gamma2 residual {}",
                n,
                res.gamma2_residual
            );
        }
    }

    #[test]
    fn weight_scaling_example_saturates_slope_criterion() {
        // Gamma_t = psi_t Gamma0 with weight f_t = psi'/(2 psi^2) |x - z|^2 / 2
        // saturates d/dt Gamma = 2 (Gamma2_0 + H f) on linear test functions
        let n = 64;
        let h = 1.0 / n as f64;
        let psi = |t: f64| 1.0 + 0.5 * t;
        let psi_dot = 0.5;
        let tg = grid(4);
        let t = tg.times()[2];
        let l0_t = {
            let fam = GeneratorFamily::path_laplacian(tg.clone(), n, h, psi).unwrap();
            fam.at_grid(2).clone()
        };
        let z = 0.3;
        let cf = psi_dot / (2.0 * psi(t) * psi(t));
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                cf * (x - z) * (x - z) / 2.0
            })
            .collect();
        // linear test function
        let u: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        // d/dt Gamma_t(u) = psi' |grad u|^2 (= psi' exactly for linear u)
        let dgamma: Vec<f64> = gamma(&l0_t, &u, &u)
            .iter()
            .map(|g| psi_dot * g / psi(t))
            .collect();
        let g2 = gamma2(&l0_t, &u, &u);
        let hf = hessian_eval(&l0_t, &f, &u, &u);
        // interior states only (reflecting ends distort the stencil)
        for x in n / 4..3 * n / 4 {
            let rhs = 2.0 * (g2[x] + hf[x]);
            assert!(
                (dgamma[x] - rhs).abs() <= 30.0 * h,
                "state {}: lhs {} rhs {}",
                x,
                dgamma[x],
                rhs
            );
        }
    }

    pub(super) fn random_markov_family(
        rng: &mut ChaCha8Rng,
        n: usize,
        steps: usize,
        rate: f64,
    ) -> GeneratorFamily<f64> {
        let tg = TimeGrid::uniform(0.0, 0.5, steps).unwrap();
        // random connected rate skeleton, smoothly modulated in time
        let mut base = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && (j == (i + 1) % n || rng.gen_bool(0.4)) {
                    let r: f64 = rng.gen_range(0.2..rate + 0.2);
                    base[(i, j)] = r;
                    base[(i, i)] -= r;
                }
            }
        }
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let amp: f64 = rng.gen_range(0.0..0.4);
        let mats = tg
            .times()
            .iter()
            .map(|&t: &f64| base.scale(1.0 + amp * (2.0 * t + phase).sin()))
            .collect();
        GeneratorFamily::new(tg, mats, true).unwrap()
    }
}

#[cfg(test)]
mod invariant_tests {
    use super::*;
    use crate::space::TimeGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_markov(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && (j == (i + 1) % n || rng.gen_bool(0.4)) {
                    let r: f64 = rng.gen_range(0.2..1.5);
                    l[(i, j)] = r;
                    l[(i, i)] -= r;
                }
            }
        }
        l
    }

    #[test]
    fn gamma_bilinear_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let l = random_markov(&mut rng, 5);
        let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = 0.7;
        // symmetry
        let guv = gamma(&l, &u, &v);
        let gvu = gamma(&l, &v, &u);
        let g2uv = gamma2(&l, &u, &v);
        let g2vu = gamma2(&l, &v, &u);
        for x in 0..5 {
            assert!((guv[x] - gvu[x]).abs() < 1e-13);
            assert!((g2uv[x] - g2vu[x]).abs() < 1e-13);
        }
        // linearity in the first slot
        let au_plus_w: Vec<f64> = u.iter().zip(&w).map(|(&p, &q)| a * p + q).collect();
        let lhs = gamma(&l, &au_plus_w, &v);
        let gu = gamma(&l, &u, &v);
        let gw = gamma(&l, &w, &v);
        for x in 0..5 {
            assert!((lhs[x] - (a * gu[x] + gw[x])).abs() < 1e-12);
        }
    }

    #[test]
    fn propagator_jensen_contraction() {
        // (P u)^2 <= P(u^2) entrywise for markov families
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let grid = TimeGrid::uniform(0.0, 0.5, 4).unwrap();
        let fam = GeneratorFamily::constant(grid, random_markov(&mut rng, 6), true).unwrap();
        let prop = Propagator::build(&fam, 20).unwrap();
        for _ in 0..8 {
            let u: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let u2: Vec<f64> = u.iter().map(|&x| x * x).collect();
            let pu = prop.apply(0, 4, &u);
            let pu2 = prop.apply(0, 4, &u2);
            for x in 0..6 {
                assert!(pu[x] * pu[x] <= pu2[x] + 1e-9);
            }
        }
    }

    #[test]
    fn interchange_identity_by_finite_differences() {
        // d/dr [P(r,t) Gamma_r(P(s,r) u)] = P(r,t)[-2 Gamma2_r(v) + dGamma_r(v)]
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let steps = 8;
        let grid = TimeGrid::uniform(0.0, 0.4, steps).unwrap();
        let base = random_markov(&mut rng, 4);
        let mats: Vec<Mat<f64>> = grid
            .times()
            .iter()
            .map(|&t: &f64| base.scale(1.0 + 0.3 * (2.0 * t).sin()))
            .collect();
        let fam = GeneratorFamily::new(grid, mats, true).unwrap();
        let prop = Propagator::build(&fam, 40).unwrap();
        let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (s_idx, t_idx) = (0usize, steps);
        let dr: f64 = fam.grid().step_before(1);
        let q = |r: usize| -> Vec<f64> {
            let v = prop.apply(s_idx, r, &u);
            let g = gamma(fam.at_grid(r), &v, &v);
            prop.apply(r, t_idx, &g)
        };
        for r in 2..steps - 1 {
            let dq: Vec<f64> = q(r + 1)
                .iter()
                .zip(&q(r - 1))
                .map(|(&a, &b)| (a - b) / (2.0 * dr))
                .collect();
            let v = prop.apply(s_idx, r, &u);
            let g2 = gamma2(fam.at_grid(r), &v, &v);
            let dgamma: Vec<f64> = {
                let hi = gamma(fam.at_grid(r + 1), &v, &v);
                let lo = gamma(fam.at_grid(r - 1), &v, &v);
                hi.iter().zip(&lo).map(|(&a, &b)| (a - b) / (2.0 * dr)).collect()
            };
            let integrand: Vec<f64> =
                (0..4).map(|x| -2.0 * g2[x] + dgamma[x]).collect();
            let rhs = prop.apply(r, t_idx, &integrand);
            for x in 0..4 {
                assert!(
                    (dq[x] - rhs[x]).abs() <= 60.0 * dr * dr + 1e-8,
                    "r={} x={}: {} vs {}",
                    r,
                    x,
                    dq[x],
                    rhs[x]
                );
            }
        }
    }

    #[test]
    fn ricci_chain_r_n_below_r_below_gamma2() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let l = random_markov(&mut rng, 5);
        for _ in 0..8 {
            let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = rng.gen_range(0..5);
            let c = forward_difference_constraint(&l, x);
            let r_inf = ricci_form(&l, &u, x, &c, f64::INFINITY);
            let r_n = ricci_form(&l, &u, x, &c, 3.0);
            let g2 = gamma2(&l, &u, &u)[x];
            if !r_inf.unbounded {
                assert!(r_inf.value <= g2 + 1e-10);
            }
            if !r_n.unbounded && !r_inf.unbounded {
                assert!(r_n.value <= r_inf.value + 1e-10);
            }
        }
    }

    #[test]
    fn reversed_inequalities_on_growing_two_point_family() {
        // d/dt Gamma >= 2 Gamma2 on slices <=> Gamma_t(Pu) >= P(Gamma_s u):
        // two-point family L_t = e^{12 t} L0 on a short window
        let steps = 4;
        let grid = TimeGrid::uniform(0.0, 0.05, steps).unwrap();
        let base = Mat::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]);
        let mats: Vec<Mat<f64>> = grid
            .times()
            .iter()
            .map(|&t: &f64| base.scale((12.0 * t).exp()))
            .collect();
        let fam = GeneratorFamily::new(grid, mats, true).unwrap();
        // (i'): max eigenvalue of 2 B - dA must stay <= 0, i.e. dA - 2B >= 0
        for t_idx in 1..steps {
            let times = fam.grid().times();
            let dt = times[t_idx + 1] - times[t_idx - 1];
            let a_hi = gamma_form(fam.at_grid(t_idx + 1));
            let a_lo = gamma_form(fam.at_grid(t_idx - 1));
            let b = gamma2_form(fam.at_grid(t_idx));
            for x in 0..2 {
                let da = a_hi.forms[x].sub(&a_lo.forms[x]).scale(1.0 / dt);
                let form = da.sub(&b.forms[x].scale(2.0));
                let (vals, _) = crate::linalg::symmetric_eigen(&form.symmetrize());
                assert!(vals[0] >= -1e-9, "slice {} state {} eig {}", t_idx, x, vals[0]);
            }
        }
        // (ii'): the reversed gradient estimate
        let prop = Propagator::build(&fam, 40).unwrap();
        let u = vec![1.0, 0.0];
        let g_s = gamma(fam.at_grid(0), &u, &u);
        let p_gs = prop.apply(0, steps, &g_s);
        let pu = prop.apply(0, steps, &u);
        let g_t = gamma(fam.at_grid(steps), &pu, &pu);
        for x in 0..2 {
            assert!(g_t[x] >= p_gs[x] - 1e-9, "state {}: {} < {}", x, g_t[x], p_gs[x]);
        }
    }
}
