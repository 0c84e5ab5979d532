//! Tensor-level verification on parametric time-dependent weighted
//! Riemannian charts: curvature inequalities for super-/sub-/N-Ricci flows,
//! the weight-evolution identity, gradient flows, EVI and distance expansion.
//!
//! Time dependence is a conformal factor `g_t = c(t) g_base` on a registered
//! base metric (flat box, round sphere chart, hyperbolic half-plane, or a
//! custom static tensor); that family covers every model this crate checks
//! and keeps `d/dt g` exact whenever `c'` is supplied analytically.

use crate::linalg::{generalized_eigen, solve, Mat};
use crate::quad::{d1_central4, d2_central4};
use crate::space::TimeGrid;
use crate::{Error, Result, Scalar};
use serde::Serialize;

type MetricFn<S> = dyn Fn(&[S]) -> Mat<S> + Send + Sync;
type ScalarField<S> = dyn Fn(S, &[S]) -> S + Send + Sync;
type TimeFn<S> = dyn Fn(S) -> S + Send + Sync;

/// Static base metric of the chart.
pub enum ChartMetric<S> {
    /// Euclidean box in dimension `dim <= 3`.
    Flat { dim: usize },
    /// Round sphere of the given radius in (theta, phi) coordinates,
    /// `g = r^2 diag(1, sin^2 theta)`; keep theta away from the poles.
    Sphere { radius: S },
    /// Upper half-plane `y > 0` with `g = y^-2 I` (curvature -1).
    HyperbolicHalfPlane,
    /// Arbitrary static SPD tensor given by a closure.
    Custom { dim: usize, g: Box<MetricFn<S>> },
}

impl<S: Scalar> ChartMetric<S> {
    pub fn dim(&self) -> usize {
        match self {
            ChartMetric::Flat { dim } => *dim,
            ChartMetric::Sphere { .. } => 2,
            ChartMetric::HyperbolicHalfPlane => 2,
            ChartMetric::Custom { dim, .. } => *dim,
        }
    }

    pub fn base(&self, x: &[S]) -> Mat<S> {
        match self {
            ChartMetric::Flat { dim } => Mat::identity(*dim),
            ChartMetric::Sphere { radius } => {
                let mut g = Mat::zeros(2, 2);
                let r2 = *radius * *radius;
                g[(0, 0)] = r2;
                g[(1, 1)] = r2 * x[0].sin() * x[0].sin();
                g
            }
            ChartMetric::HyperbolicHalfPlane => {
                let f = S::one() / (x[1] * x[1]);
                let mut g = Mat::zeros(2, 2);
                g[(0, 0)] = f;
                g[(1, 1)] = f;
                g
            }
            ChartMetric::Custom { g, .. } => g(x),
        }
    }

    /// Closed-form Christoffel symbols `Gamma[k][i][j]` for model metrics.
    pub fn christoffel_closed(&self, x: &[S]) -> Option<Vec<Mat<S>>> {
        match self {
            ChartMetric::Flat { dim } => Some(vec![Mat::zeros(*dim, *dim); *dim]),
            ChartMetric::Sphere { .. } => {
                let theta = x[0];
                let mut g_th = Mat::zeros(2, 2);
                let mut g_ph = Mat::zeros(2, 2);
                g_th[(1, 1)] = -theta.sin() * theta.cos();
                let cot = theta.cos() / theta.sin();
                g_ph[(0, 1)] = cot;
                g_ph[(1, 0)] = cot;
                Some(vec![g_th, g_ph])
            }
            ChartMetric::HyperbolicHalfPlane => {
                let y = x[1];
                let inv = S::one() / y;
                let mut g_x = Mat::zeros(2, 2);
                let mut g_y = Mat::zeros(2, 2);
                g_x[(0, 1)] = -inv;
                g_x[(1, 0)] = -inv;
                g_y[(0, 0)] = inv;
                g_y[(1, 1)] = -inv;
                Some(vec![g_x, g_y])
            }
            ChartMetric::Custom { .. } => None,
        }
    }

    /// Closed-form Ricci tensor for model metrics (scale invariant).
    pub fn ricci_closed(&self, x: &[S]) -> Option<Mat<S>> {
        match self {
            ChartMetric::Flat { dim } => Some(Mat::zeros(*dim, *dim)),
            ChartMetric::Sphere { radius } => {
                // Ric = (n-1)/r^2 g = diag(1, sin^2 theta)
                let mut ric = Mat::zeros(2, 2);
                ric[(0, 0)] = S::one();
                ric[(1, 1)] = x[0].sin() * x[0].sin();
                let _ = radius;
                Some(ric)
            }
            ChartMetric::HyperbolicHalfPlane => {
                // Ric = -g
                let f = -S::one() / (x[1] * x[1]);
                let mut ric = Mat::zeros(2, 2);
                ric[(0, 0)] = f;
                ric[(1, 1)] = f;
                Some(ric)
            }
            ChartMetric::Custom { .. } => None,
        }
    }

    /// Geodesic distance of the base metric for model charts.
    pub fn base_distance(&self, p: &[S], q: &[S]) -> Result<S> {
        match self {
            ChartMetric::Flat { dim } => {
                let mut acc = S::zero();
                for i in 0..*dim {
                    acc += (p[i] - q[i]) * (p[i] - q[i]);
                }
                Ok(acc.sqrt())
            }
            ChartMetric::Sphere { radius } => {
                let cosd = p[0].cos() * q[0].cos() + p[0].sin() * q[0].sin() * (p[1] - q[1]).cos();
                Ok(*radius * cosd.min(S::one()).max(-S::one()).acos())
            }
            ChartMetric::HyperbolicHalfPlane => {
                let num = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
                let arg = S::one() + num / (S::real(2.0) * p[1] * q[1]);
                Ok((arg + (arg * arg - S::one()).max(S::zero()).sqrt()).ln())
            }
            ChartMetric::Custom { .. } => Err(Error::BadParameter(
                "chart distance only available for model metrics".into(),
            )),
        }
    }
}

/// Time-dependent weighted chart `(box, c(t) g_base, f~(t, x))`.
pub struct RiemannianFamily<S> {
    pub metric: ChartMetric<S>,
    pub scale: Box<TimeFn<S>>,
    /// Analytic `c'(t)`; central differences with `fd_step_t` when absent.
    pub scale_dot: Option<Box<TimeFn<S>>>,
    pub weight: Box<ScalarField<S>>,
    pub lo: Vec<S>,
    pub hi: Vec<S>,
    pub grid: TimeGrid<S>,
    pub fd_step: S,
    pub fd_step_t: S,
}

impl<S: Scalar> RiemannianFamily<S> {
    pub fn new(metric: ChartMetric<S>, lo: Vec<S>, hi: Vec<S>, grid: TimeGrid<S>) -> Self {
        RiemannianFamily {
            metric,
            scale: Box::new(|_| S::one()),
            scale_dot: Some(Box::new(|_| S::zero())),
            weight: Box::new(|_, _| S::zero()),
            lo,
            hi,
            grid,
            fd_step: S::real(1e-3),
            fd_step_t: S::real(1e-3),
        }
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn g(&self, t: S, x: &[S]) -> Mat<S> {
        self.metric.base(x).scale((self.scale)(t))
    }

    pub fn scale_rate(&self, t: S) -> S {
        match &self.scale_dot {
            Some(f) => f(t),
            None => {
                let h = self.fd_step_t;
                ((self.scale)(t + h) - (self.scale)(t - h)) / (S::real(2.0) * h)
            }
        }
    }

    pub fn dt_g(&self, t: S, x: &[S]) -> Mat<S> {
        self.metric.base(x).scale(self.scale_rate(t))
    }

    pub fn inside(&self, x: &[S], margin: S) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&lo, &hi))| xi >= lo + margin && xi <= hi - margin)
    }

    /// Chart geodesic distance under `g_t` (model metrics only).
    pub fn distance(&self, t: S, p: &[S], q: &[S]) -> Result<S> {
        Ok((self.scale)(t).sqrt() * self.metric.base_distance(p, q)?)
    }

    /// Uniform interior sample grid (margin keeps finite-difference stencils
    /// inside the chart).
    pub fn default_samples(&self, per_axis: usize) -> Vec<Vec<S>> {
        let dim = self.dim();
        let margin = self.fd_step * S::real(4.0);
        let mut axes: Vec<Vec<S>> = Vec::new();
        for d in 0..dim {
            let lo = self.lo[d] + margin;
            let hi = self.hi[d] - margin;
            axes.push(
                (0..per_axis)
                    .map(|i| {
                        lo + (hi - lo) * S::from_usize(i).unwrap()
                            / S::from_usize(per_axis.max(2) - 1).unwrap()
                    })
                    .collect(),
            );
        }
        let mut out: Vec<Vec<S>> = vec![vec![]];
        for axis in axes {
            let mut next = Vec::new();
            for partial in &out {
                for &v in &axis {
                    let mut p = partial.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

/// Christoffel symbols from 4th-order central differences of the base metric.
pub fn christoffel_fd<S: Scalar>(fam: &RiemannianFamily<S>, x: &[S]) -> Result<Vec<Mat<S>>> {
    let dim = fam.dim();
    let h = fam.fd_step;
    if !fam.inside(x, h * S::real(2.0)) {
        return Err(Error::BadParameter(format!("stencil outside chart at {:?}", x)));
    }
    let base = |x: &[S]| fam.metric.base(x);
    // dg[k] = d g / d x_k
    let mut dg = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut xp = x.to_vec();
        let eval = |xk: S, xp: &mut Vec<S>| {
            xp[k] = xk;
            base(xp)
        };
        let m2 = eval(x[k] - S::real(2.0) * h, &mut xp);
        let m1 = eval(x[k] - h, &mut xp);
        let p1 = eval(x[k] + h, &mut xp);
        let p2 = eval(x[k] + S::real(2.0) * h, &mut xp);
        let mut d = Mat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                d[(i, j)] = d1_central4(h, m2[(i, j)], m1[(i, j)], p1[(i, j)], p2[(i, j)]);
            }
        }
        dg.push(d);
    }
    let g = base(x);
    let ginv = invert(&g)?;
    let half = S::real(0.5);
    let mut out = vec![Mat::zeros(dim, dim); dim];
    for k in 0..dim {
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = S::zero();
                for l in 0..dim {
                    acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out[k][(i, j)] = half * acc;
            }
        }
    }
    Ok(out)
}

/// Ricci tensor from 4th-order differences of the finite-difference
/// Christoffel symbols (fully numerical pipeline).
pub fn ricci_fd<S: Scalar>(fam: &RiemannianFamily<S>, x: &[S]) -> Result<Mat<S>> {
    let dim = fam.dim();
    let h = fam.fd_step;
    if !fam.inside(x, h * S::real(4.0)) {
        return Err(Error::BadParameter(format!("stencil outside chart at {:?}", x)));
    }
    let gamma_at = |x: &[S]| christoffel_fd(fam, x);
    let gamma0 = gamma_at(x)?;
    // dGamma[k] = d Gamma / d x_k (4th order)
    let mut dgamma: Vec<Vec<Mat<S>>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let shift = |off: S| -> Result<Vec<Mat<S>>> {
            let mut xp = x.to_vec();
            xp[k] = x[k] + off;
            gamma_at(&xp)
        };
        let m2 = shift(-S::real(2.0) * h)?;
        let m1 = shift(-h)?;
        let p1 = shift(h)?;
        let p2 = shift(S::real(2.0) * h)?;
        let mut dk = Vec::with_capacity(dim);
        for a in 0..dim {
            let mut d = Mat::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    d[(i, j)] =
                        d1_central4(h, m2[a][(i, j)], m1[a][(i, j)], p1[a][(i, j)], p2[a][(i, j)]);
                }
            }
            dk.push(d);
        }
        dgamma.push(dk);
    }
    // R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
    let mut ric = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = S::zero();
            for k in 0..dim {
                acc += dgamma[k][k][(i, j)] - dgamma[j][k][(i, k)];
                for l in 0..dim {
                    acc += gamma0[k][(k, l)] * gamma0[l][(i, j)]
                        - gamma0[k][(j, l)] * gamma0[l][(i, k)];
                }
            }
            ric[(i, j)] = acc;
        }
    }
    Ok(ric)
}

/// Christoffel symbols, Ricci tensor, weight Hessian and `d/dt g` at `(t, x)`;
/// closed forms are used for registered model metrics.
pub fn curvature_ops<S: Scalar>(
    fam: &RiemannianFamily<S>,
    t: S,
    x: &[S],
) -> Result<(Vec<Mat<S>>, Mat<S>, Mat<S>, Mat<S>)> {
    let gamma = match fam.metric.christoffel_closed(x) {
        Some(g) => g,
        None => christoffel_fd(fam, x)?,
    };
    let ricci = match fam.metric.ricci_closed(x) {
        Some(r) => r,
        None => ricci_fd(fam, x)?,
    };
    let hess = weight_hessian(fam, t, x, &gamma)?;
    let dtg = fam.dt_g(t, x);
    Ok((gamma, ricci, hess, dtg))
}

/// Covariant Hessian of the weight: `d_i d_j f - Gamma^k_ij d_k f`.
fn weight_hessian<S: Scalar>(
    fam: &RiemannianFamily<S>,
    t: S,
    x: &[S],
    gamma: &[Mat<S>],
) -> Result<Mat<S>> {
    let dim = fam.dim();
    let h = fam.fd_step;
    let f = |x: &[S]| (fam.weight)(t, x);
    let mut grad = vec![S::zero(); dim];
    for k in 0..dim {
        let mut xs = [x.to_vec(), x.to_vec(), x.to_vec(), x.to_vec()];
        xs[0][k] = x[k] - S::real(2.0) * h;
        xs[1][k] = x[k] - h;
        xs[2][k] = x[k] + h;
        xs[3][k] = x[k] + S::real(2.0) * h;
        grad[k] = d1_central4(h, f(&xs[0]), f(&xs[1]), f(&xs[2]), f(&xs[3]));
    }
    let mut hess = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let dij = if i == j {
                let mut xp = x.to_vec();
                let mut at = |off: S| {
                    xp[i] = x[i] + off;
                    f(&xp)
                };
                d2_central4(
                    h,
                    at(-S::real(2.0) * h),
                    at(-h),
                    at(S::zero()),
                    at(h),
                    at(S::real(2.0) * h),
                )
            } else {
                // nested 4th-order first derivatives
                let dj_at = |xi: S| {
                    let mut xp = x.to_vec();
                    xp[i] = xi;
                    let at = |off: S| {
                        let mut xq = xp.clone();
                        xq[j] = x[j] + off;
                        f(&xq)
                    };
                    d1_central4(h, at(-S::real(2.0) * h), at(-h), at(h), at(S::real(2.0) * h))
                };
                d1_central4(
                    h,
                    dj_at(x[i] - S::real(2.0) * h),
                    dj_at(x[i] - h),
                    dj_at(x[i] + h),
                    dj_at(x[i] + S::real(2.0) * h),
                )
            };
            let mut corr = S::zero();
            for k in 0..dim {
                corr += gamma[k][(i, j)] * grad[k];
            }
            hess[(i, j)] = dij - corr;
        }
    }
    Ok(hess.symmetrize())
}

fn weight_gradient<S: Scalar>(fam: &RiemannianFamily<S>, t: S, x: &[S]) -> Vec<S> {
    let dim = fam.dim();
    let h = fam.fd_step;
    let f = |x: &[S]| (fam.weight)(t, x);
    (0..dim)
        .map(|k| {
            let mut xp = x.to_vec();
            let mut at = |off: S| {
                xp[k] = x[k] + off;
                f(&xp)
            };
            d1_central4(h, at(-S::real(2.0) * h), at(-h), at(h), at(S::real(2.0) * h))
        })
        .collect()
}

fn invert<S: Scalar>(m: &Mat<S>) -> Result<Mat<S>> {
    let n = m.rows;
    let mut out = Mat::zeros(n, n);
    for col in 0..n {
        let mut e = vec![S::zero(); n];
        e[col] = S::one();
        let x = solve(m, &e).ok_or_else(|| Error::BadParameter("singular metric".into()))?;
        for r in 0..n {
            out[(r, col)] = x[r];
        }
    }
    Ok(out)
}

/// Worst generalized eigenvalue of a tested tensor field over samples.
#[derive(Debug, Clone, Serialize)]
pub struct TensorVerdict<S> {
    pub pass: bool,
    /// Extremal eigenvalue over all samples (min for `>=` forms, max for `<=`).
    pub extreme: S,
    pub witness_t: S,
    pub witness_x: Vec<S>,
    pub witness_vec: Vec<S>,
    pub samples: usize,
    pub notes: Vec<String>,
}

enum Side {
    Min,
    Max,
}

fn tensor_sweep<S: Scalar>(
    fam: &RiemannianFamily<S>,
    samples: &[Vec<S>],
    times: &[S],
    side: Side,
    tol: S,
    extra: impl Fn(S, &[S]) -> Result<Mat<S>>,
) -> Result<TensorVerdict<S>> {
    let mut extreme = match side {
        Side::Min => S::infinity(),
        Side::Max => -S::infinity(),
    };
    let mut witness_t = S::zero();
    let mut witness_x = Vec::new();
    let mut witness_vec = Vec::new();
    let mut count = 0usize;
    for &t in times {
        for x in samples {
            let (_, ricci, hess, dtg) = curvature_ops(fam, t, x)?;
            let mut form = ricci.add(&hess).add(&dtg.scale(S::real(0.5)));
            form = form.add(&extra(t, x)?);
            let g = fam.g(t, x);
            let (vals, vecs) =
                generalized_eigen(&form.symmetrize(), &g).ok_or_else(|| {
                    Error::BadParameter("metric not positive definite at sample".into())
                })?;
            count += 1;
            let (lam, col) = match side {
                Side::Min => (vals[0], 0),
                Side::Max => (*vals.last().unwrap(), vals.len() - 1),
            };
            let better = match side {
                Side::Min => lam < extreme,
                Side::Max => lam > extreme,
            };
            if better {
                extreme = lam;
                witness_t = t;
                witness_x = x.clone();
                witness_vec = (0..fam.dim()).map(|r| vecs[(r, col)]).collect();
            }
        }
    }
    let pass = match side {
        Side::Min => extreme >= -tol,
        Side::Max => extreme <= tol,
    };
    Ok(TensorVerdict {
        pass,
        extreme,
        witness_t,
        witness_x,
        witness_vec,
        samples: count,
        notes: Vec::new(),
    })
}

/// Super-Ricci flow tensor test: min eigenvalue of
/// `Ric + Hess f~ + 1/2 d/dt g` w.r.t. `g_t` must be `>= -tol`.
pub fn check_srf_tensor<S: Scalar>(
    fam: &RiemannianFamily<S>,
    samples: &[Vec<S>],
    tol: S,
) -> Result<TensorVerdict<S>> {
    let times = fam.grid.times().to_vec();
    let dim = fam.dim();
    tensor_sweep(fam, samples, &times, Side::Min, tol, |_, _| Ok(Mat::zeros(dim, dim)))
}

/// Weak sub-Ricci flow tensor test: max eigenvalue of the same form `<= tol`.
pub fn check_sub_rf_tensor<S: Scalar>(
    fam: &RiemannianFamily<S>,
    samples: &[Vec<S>],
    tol: S,
) -> Result<TensorVerdict<S>> {
    let times = fam.grid.times().to_vec();
    let dim = fam.dim();
    tensor_sweep(fam, samples, &times, Side::Max, tol, |_, _| Ok(Mat::zeros(dim, dim)))
}

/// Super-N-Ricci tensor test with the `-(grad f x grad f)/(N - n)` term.
/// `N = n` requires a constant weight; a nonconstant weight fails with a
/// "weight not constant" note.
pub fn check_n_srf_tensor<S: Scalar>(
    fam: &RiemannianFamily<S>,
    n_param: S,
    samples: &[Vec<S>],
    tol: S,
) -> Result<TensorVerdict<S>> {
    let dim = fam.dim();
    let n_dim = S::from_usize(dim).unwrap();
    if n_param < n_dim {
        return Err(Error::NBelowDimension {
            n: n_param.to_f64().unwrap_or(f64::NAN),
            dim,
        });
    }
    let times = fam.grid.times().to_vec();
    if n_param == n_dim {
        // degenerate case: the weight must be spatially constant
        for &t in &times {
            for x in samples {
                let grad = weight_gradient(fam, t, x);
                let norm: S = grad.iter().map(|&g| g * g).sum();
                if norm.sqrt() > tol.max(S::real(1e-8)) {
                    return Ok(TensorVerdict {
                        pass: false,
                        extreme: -norm.sqrt(),
                        witness_t: t,
                        witness_x: x.clone(),
                        witness_vec: grad,
                        samples: samples.len() * times.len(),
                        notes: vec!["weight not constant".into()],
                    });
                }
            }
        }
        return check_srf_tensor(fam, samples, tol);
    }
    tensor_sweep(fam, samples, &times, Side::Min, tol, |t, x| {
        let grad = weight_gradient(fam, t, x);
        let mut outer = Mat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                outer[(i, j)] = -grad[i] * grad[j] / (n_param - n_dim);
            }
        }
        Ok(outer)
    })
}

/// Checks the volume-weight identity `d/dt f^ = -1/2 tr_{g_t} d/dt g_t`
/// with `f^` defined by `vol_{g_t} = e^{-f^_t} vol_{g_0}`; returns the worst
/// absolute residual over samples.
pub fn check_weight_identity<S: Scalar>(
    fam: &RiemannianFamily<S>,
    samples: &[Vec<S>],
    tol: S,
) -> Result<TensorVerdict<S>> {
    let t0 = fam.grid.times()[0];
    let ht = fam.fd_step_t;
    let mut worst = S::zero();
    let mut witness_t = S::zero();
    let mut witness_x = Vec::new();
    let mut count = 0usize;
    let fhat = |t: S, x: &[S]| -> Result<S> {
        let gt = fam.g(t, x);
        let g0 = fam.g(t0, x);
        let ratio = gt.matmul(&invert(&g0)?);
        Ok(-S::real(0.5) * det(&ratio).ln())
    };
    for &t in fam.grid.times() {
        for x in samples {
            let dfhat = (fhat(t + ht, x)? - fhat(t - ht, x)?) / (S::real(2.0) * ht);
            let gt = fam.g(t, x);
            let dtg = fam.dt_g(t, x);
            let tr = trace_of(&invert(&gt)?.matmul(&dtg));
            let resid = (dfhat + S::real(0.5) * tr).abs();
            count += 1;
            if resid > worst {
                worst = resid;
                witness_t = t;
                witness_x = x.clone();
            }
        }
    }
    Ok(TensorVerdict {
        pass: worst <= tol,
        extreme: worst,
        witness_t,
        witness_x,
        witness_vec: vec![],
        samples: count,
        notes: vec![],
    })
}

fn det<S: Scalar>(m: &Mat<S>) -> S {
    match m.rows {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => panic!("determinant only for n <= 3"),
    }
}

fn trace_of<S: Scalar>(m: &Mat<S>) -> S {
    (0..m.rows).map(|i| m[(i, i)]).sum()
}

/// Backward-integrated upward gradient flow trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory<S> {
    /// Grid times covered (suffix of the family grid, ending at the terminal time).
    pub times: Vec<S>,
    pub points: Vec<Vec<S>>,
    pub truncated: bool,
}

/// Integrates `dx/dt = grad_t V_t(x)` backward from the terminal condition
/// with classical RK4 substeps of size at most `dt`.
pub fn gradient_flow<S: Scalar>(
    fam: &RiemannianFamily<S>,
    v: &ScalarField<S>,
    terminal: (S, Vec<S>),
    dt: S,
) -> Result<Trajectory<S>> {
    let (t_terminal, x_terminal) = terminal;
    let margin = fam.fd_step * S::real(4.0);
    if !fam.inside(&x_terminal, margin) {
        return Err(Error::BadParameter("terminal point not interior".into()));
    }
    let grad = |t: S, x: &[S]| -> Result<Vec<S>> {
        let dim = fam.dim();
        let h = fam.fd_step;
        let mut dv = vec![S::zero(); dim];
        for k in 0..dim {
            let mut xp = x.to_vec();
            let mut at = |off: S| {
                xp[k] = x[k] + off;
                v(t, &xp)
            };
            dv[k] = d1_central4(h, at(-S::real(2.0) * h), at(-h), at(h), at(S::real(2.0) * h));
        }
        let g = fam.g(t, x);
        solve(&g, &dv).ok_or_else(|| Error::BadParameter("metric singular on flow".into()))
    };
    let grid_times: Vec<S> = fam
        .grid
        .times()
        .iter()
        .copied()
        .filter(|&t| t <= t_terminal + S::real(1e-12))
        .collect();
    let mut times = vec![t_terminal];
    let mut points = vec![x_terminal.clone()];
    let mut truncated = false;
    let mut t = t_terminal;
    let mut x = x_terminal;
    for &target in grid_times.iter().rev() {
        if (target - t).abs() <= S::real(1e-12) {
            continue;
        }
        let span = t - target;
        let steps = (span / dt).ceil().to_usize().unwrap_or(1).max(1);
        let h = -span / S::from_usize(steps).unwrap();
        let mut exited = false;
        for _ in 0..steps {
            let k1 = grad(t, &x)?;
            let x2: Vec<S> = x.iter().zip(&k1).map(|(&a, &b)| a + b * h * S::real(0.5)).collect();
            let k2 = grad(t + h * S::real(0.5), &x2)?;
            let x3: Vec<S> = x.iter().zip(&k2).map(|(&a, &b)| a + b * h * S::real(0.5)).collect();
            let k3 = grad(t + h * S::real(0.5), &x3)?;
            let x4: Vec<S> = x.iter().zip(&k3).map(|(&a, &b)| a + b * h).collect();
            let k4 = grad(t + h, &x4)?;
            for i in 0..x.len() {
                x[i] += h / S::real(6.0)
                    * (k1[i] + S::real(2.0) * k2[i] + S::real(2.0) * k3[i] + k4[i]);
            }
            t += h;
            if !fam.inside(&x, margin) {
                exited = true;
                break;
            }
        }
        if exited {
            truncated = true;
            break;
        }
        times.push(t);
        points.push(x.clone());
    }
    times.reverse();
    points.reverse();
    Ok(Trajectory { times, points, truncated })
}

/// EVI slack samples for a gradient-flow trajectory against comparison
/// points: `1/2 d/ds^- d_t^2(x_s, z) + 1/2 b0 - V_t(x_t) + V_t(z)` with the
/// conformal-closed-form averaged strain `b0 = (c'/c) d_t^2(x_t, z) / 2`.
pub fn check_evi_riemann<S: Scalar>(
    fam: &RiemannianFamily<S>,
    v: &ScalarField<S>,
    traj: &Trajectory<S>,
    comparisons: &[Vec<S>],
) -> Result<Vec<(S, S)>> {
    let half = S::real(0.5);
    let mut out = Vec::new();
    for i in 1..traj.times.len() {
        let t = traj.times[i];
        let dt = traj.times[i] - traj.times[i - 1];
        let x_now = &traj.points[i];
        let x_prev = &traj.points[i - 1];
        for z in comparisons {
            let dn = fam.distance(t, x_now, z)?;
            let dp = fam.distance(t, x_prev, z)?;
            let d2_rate = (dn * dn - dp * dp) / dt;
            let c = (fam.scale)(t);
            let b0 = fam.scale_rate(t) / c * dn * dn * half;
            let slack = half * d2_rate + half * b0 - v(t, x_now) + v(t, z);
            out.push((t, slack));
        }
    }
    Ok(out)
}

/// Distance-expansion verdict for two gradient-flow trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionVerdict<S> {
    pub distances: Vec<(S, S)>,
    pub nondecreasing: bool,
    pub worst_drop: S,
    pub witness_t: Option<S>,
}

/// Checks `d_t(x_t, y_t) >= d_s(x_s, y_s)` for `s <= t` along two flows of
/// the same potential.
pub fn check_distance_expansion<S: Scalar>(
    fam: &RiemannianFamily<S>,
    a: &Trajectory<S>,
    b: &Trajectory<S>,
    tol: S,
) -> Result<ExpansionVerdict<S>> {
    let n = a.times.len().min(b.times.len());
    let a_off = a.times.len() - n;
    let b_off = b.times.len() - n;
    let mut distances = Vec::with_capacity(n);
    for i in 0..n {
        let t = a.times[a_off + i];
        let d = fam.distance(t, &a.points[a_off + i], &b.points[b_off + i])?;
        distances.push((t, d));
    }
    let mut nondecreasing = true;
    let mut worst_drop = S::zero();
    let mut witness_t = None;
    for w in distances.windows(2) {
        let drop = w[0].1 - w[1].1;
        if drop > tol {
            nondecreasing = false;
            if drop > worst_drop {
                worst_drop = drop;
                witness_t = Some(w[1].0);
            }
        }
    }
    Ok(ExpansionVerdict { distances, nondecreasing, worst_drop, witness_t })
}

/// Time reversal `s -> t0 + t1 - s` of a conformal family given by explicit
/// scale data: the reversed family sees `d/dt g` with the opposite sign.
pub fn reversed_conformal<S: Scalar>(
    metric: ChartMetric<S>,
    scale: impl Fn(S) -> S + Send + Sync + 'static,
    scale_dot: impl Fn(S) -> S + Send + Sync + 'static,
    template: &RiemannianFamily<S>,
) -> RiemannianFamily<S> {
    let t0 = template.grid.times()[0];
    let t1 = *template.grid.times().last().unwrap();
    let total = t0 + t1;
    let mut fam = RiemannianFamily::new(
        metric,
        template.lo.clone(),
        template.hi.clone(),
        template.grid.clone(),
    );
    fam.scale = Box::new(move |s| scale(total - s));
    fam.scale_dot = Some(Box::new(move |s| -scale_dot(total - s)));
    fam.fd_step = template.fd_step;
    fam.fd_step_t = template.fd_step_t;
    fam
}
