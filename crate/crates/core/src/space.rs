//! Discretized time-dependent geodesic spaces.
//!
//! A [`DiscreteGeodesicSpace`] is a finite vertex set with per-time edge
//! lengths; all-pairs shortest-path distances approximate a family of
//! geodesic metrics `d_t`. Geodesics are vertex paths re-parameterized to
//! constant speed; every verdict downstream carries the mesh error `O(h)`
//! with `h` the largest edge length.

use crate::linalg::Mat;
use crate::{Error, Result, Scalar};
use serde::Serialize;

/// Ordered sample times in a left-open interval.
#[derive(Debug, Clone)]
pub struct TimeGrid<S> {
    times: Vec<S>,
    pub left_open: bool,
}

impl<S: Scalar> TimeGrid<S> {
    pub fn new(times: Vec<S>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InsufficientGrid { need: 2, got: times.len() });
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::BadParameter("times must be strictly increasing".into()));
            }
        }
        Ok(TimeGrid { times, left_open: true })
    }

    pub fn uniform(start: S, stop: S, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InsufficientGrid { need: 2, got: 1 });
        }
        let n = steps + 1;
        let times = (0..n)
            .map(|i| {
                start + (stop - start) * S::from_usize(i).unwrap() / S::from_usize(steps).unwrap()
            })
            .collect();
        Self::new(times)
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Step `t_i - t_{i-1}` into grid point `i >= 1`.
    pub fn step_before(&self, i: usize) -> S {
        self.times[i] - self.times[i - 1]
    }

    pub fn span(&self) -> S {
        *self.times.last().unwrap() - self.times[0]
    }

    /// Index of the grid time closest to the interval midpoint.
    pub fn midpoint_index(&self) -> usize {
        let mid = (self.times[0] + *self.times.last().unwrap()) * S::real(0.5);
        let mut best = 0;
        for i in 1..self.times.len() {
            if (self.times[i] - mid).abs() < (self.times[best] - mid).abs() {
                best = i;
            }
        }
        best
    }
}

/// Vertex set plus per-time edge lengths with cached all-pairs distances.
#[derive(Debug, Clone)]
pub struct DiscreteGeodesicSpace<S> {
    grid: TimeGrid<S>,
    names: Vec<String>,
    coords: Vec<Vec<S>>,
    edges: Vec<(usize, usize)>,
    lengths: Vec<Vec<S>>,
    dist: Vec<Mat<S>>,
    adj: Vec<Vec<(usize, usize)>>,
    snap_tol: S,
}

impl<S: Scalar> DiscreteGeodesicSpace<S> {
    /// Builds the space and the per-time distance cache. `lengths` is indexed
    /// `[time][edge]` and must be strictly positive; every time slice must be
    /// connected.
    pub fn new(
        grid: TimeGrid<S>,
        names: Vec<String>,
        coords: Vec<Vec<S>>,
        edges: Vec<(usize, usize)>,
        lengths: Vec<Vec<S>>,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::BadParameter("empty vertex set".into()));
        }
        if !coords.is_empty() && coords.len() != n {
            return Err(Error::BadParameter("coords must match vertex count".into()));
        }
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(Error::BadParameter(format!("bad edge ({}, {})", a, b)));
            }
        }
        if lengths.len() != grid.len() {
            return Err(Error::BadParameter(format!(
                "need one length table per time: {} vs {}",
                lengths.len(),
                grid.len()
            )));
        }
        for table in &lengths {
            if table.len() != edges.len() {
                return Err(Error::BadParameter("length table size mismatch".into()));
            }
            if table.iter().any(|&l| !(l > S::zero()) || !l.is_finite()) {
                return Err(Error::BadParameter("edge lengths must be strictly positive".into()));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for (ei, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, ei));
            adj[b].push((a, ei));
        }
        for list in &mut adj {
            list.sort();
        }
        let mut dist = Vec::with_capacity(grid.len());
        for (ti, table) in lengths.iter().enumerate() {
            let d = all_pairs_shortest(n, &edges, table);
            if d.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::Disconnected { time_index: ti });
            }
            dist.push(d);
        }
        let snap_tol = S::real(1e-9);
        Ok(DiscreteGeodesicSpace { grid, names, coords, edges, lengths, dist, adj, snap_tol })
    }

    pub fn grid(&self) -> &TimeGrid<S> {
        &self.grid
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn coords(&self) -> &[Vec<S>] {
        &self.coords
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn lengths(&self) -> &[Vec<S>] {
        &self.lengths
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All-pairs shortest-path distances at grid time `t_idx`.
    pub fn dist(&self, t_idx: usize) -> &Mat<S> {
        &self.dist[t_idx]
    }

    pub fn d(&self, t_idx: usize, x: usize, y: usize) -> S {
        self.dist[t_idx][(x, y)]
    }

    /// Largest edge length at `t_idx` (the mesh parameter `h`).
    pub fn mesh(&self, t_idx: usize) -> S {
        self.lengths[t_idx].iter().fold(S::zero(), |m, &l| m.max(l))
    }

    /// Backward finite difference of `d^2` at grid time `t_idx >= 1`.
    pub fn d2_backward_diff(&self, t_idx: usize, x: usize, y: usize) -> Result<S> {
        if t_idx == 0 {
            return Err(Error::NoLeftDifference);
        }
        let dt = self.grid.step_before(t_idx);
        let a = self.d(t_idx, x, y);
        let b = self.d(t_idx - 1, x, y);
        Ok((a * a - b * b) / dt)
    }

    /// Forward finite difference of `d^2` at grid time `t_idx <= M-1`.
    pub fn d2_forward_diff(&self, t_idx: usize, x: usize, y: usize) -> Result<S> {
        if t_idx + 1 >= self.grid.len() {
            return Err(Error::BadParameter("no right difference at the last grid time".into()));
        }
        let dt = self.grid.step_before(t_idx + 1);
        let a = self.d(t_idx + 1, x, y);
        let b = self.d(t_idx, x, y);
        Ok((a * a - b * b) / dt)
    }

    /// Rescales every edge length at one time slice.
    pub fn scaled_slice(&self, t_idx: usize, c: S) -> Result<Self> {
        let mut lengths = self.lengths.clone();
        for l in &mut lengths[t_idx] {
            *l = *l * c;
        }
        Self::new(self.grid.clone(), self.names.clone(), self.coords.clone(), self.edges.clone(), lengths)
    }

    /// Path oracle for one time slice.
    pub fn paths(&self, t_idx: usize) -> PathOracle<'_, S> {
        PathOracle { space: self, t_idx }
    }

    /// Same vertex set with every time slice rescaled from the slice at
    /// index 0: `l_t(e) = factor(t) * l_{t_0}(e)`.
    pub fn rescaled_in_time(&self, factor: impl Fn(S) -> S) -> Result<Self> {
        let lengths = self
            .grid
            .times()
            .iter()
            .map(|&t| self.lengths[0].iter().map(|&l| l * factor(t)).collect())
            .collect();
        Self::new(self.grid.clone(), self.names.clone(), self.coords.clone(), self.edges.clone(), lengths)
    }

    /// Uniform cycle with `n` vertices; edge lengths `circumference(t)/n`.
    /// Vertex coordinates store the angle in `[0, 2 pi)`.
    pub fn circle(grid: TimeGrid<S>, n: usize, circumference: impl Fn(S) -> S) -> Result<Self> {
        if n < 3 {
            return Err(Error::BadParameter("circle needs at least 3 vertices".into()));
        }
        let names = (0..n).map(|i| format!("v{}", i)).collect();
        let two_pi = S::real(std::f64::consts::TAU);
        let coords = (0..n)
            .map(|i| vec![two_pi * S::from_usize(i).unwrap() / S::from_usize(n).unwrap()])
            .collect();
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let lengths = grid
            .times()
            .iter()
            .map(|&t| vec![circumference(t) / S::from_usize(n).unwrap(); n])
            .collect();
        Self::new(grid, names, coords, edges, lengths)
    }

    /// Discretized interval `[0, L(t)]` with `n` vertices on a path graph.
    pub fn interval(grid: TimeGrid<S>, n: usize, length: impl Fn(S) -> S) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadParameter("interval needs at least 2 vertices".into()));
        }
        let names = (0..n).map(|i| format!("v{}", i)).collect();
        let l0 = length(grid.times()[0]);
        let coords = (0..n)
            .map(|i| vec![l0 * S::from_usize(i).unwrap() / S::from_usize(n - 1).unwrap()])
            .collect();
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let lengths = grid
            .times()
            .iter()
            .map(|&t| vec![length(t) / S::from_usize(n - 1).unwrap(); n - 1])
            .collect();
        Self::new(grid, names, coords, edges, lengths)
    }
}

fn all_pairs_shortest<S: Scalar>(n: usize, edges: &[(usize, usize)], lengths: &[S]) -> Mat<S> {
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[(i, j)] = S::infinity();
            }
        }
    }
    for (ei, &(a, b)) in edges.iter().enumerate() {
        if lengths[ei] < d[(a, b)] {
            d[(a, b)] = lengths[ei];
            d[(b, a)] = lengths[ei];
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

/// Enumerates shortest paths on one time slice.
pub struct PathOracle<'a, S> {
    space: &'a DiscreteGeodesicSpace<S>,
    t_idx: usize,
}

/// Result of a capped path enumeration; `truncated` reports a cap breach.
#[derive(Debug, Clone)]
pub struct PathEnumeration {
    pub paths: Vec<Vec<usize>>,
    pub truncated: bool,
}

impl<'a, S: Scalar> PathOracle<'a, S> {
    fn on_shortest(&self, x: usize, u: usize, edge: usize, v: usize, y: usize) -> bool {
        let sp = self.space;
        let scale = S::one() + sp.d(self.t_idx, x, y);
        let lhs = sp.d(self.t_idx, x, u) + sp.lengths[self.t_idx][edge] + sp.d(self.t_idx, v, y);
        lhs <= sp.d(self.t_idx, x, y) + sp.snap_tol * scale
    }

    /// Lexicographically smallest shortest vertex path from `x` to `y`.
    pub fn lex_smallest(&self, x: usize, y: usize) -> Vec<usize> {
        let mut path = vec![x];
        let mut cur = x;
        while cur != y {
            // adjacency lists are sorted, so the first admissible neighbor
            // yields the lexicographically smallest continuation
            let mut advanced = false;
            for &(nb, ei) in &self.space.adj[cur] {
                if self.on_shortest(x, cur, ei, nb, y)
                    && self.space.d(self.t_idx, x, cur) + self.space.lengths[self.t_idx][ei]
                        <= self.space.d(self.t_idx, x, nb) + self.space.snap_tol
                {
                    path.push(nb);
                    cur = nb;
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                // distances guarantee progress; defensive break
                break;
            }
        }
        path
    }

    /// All shortest paths from `x` to `y`, capped; deterministic order.
    pub fn enumerate(&self, x: usize, y: usize, cap: usize) -> PathEnumeration {
        let mut paths = Vec::new();
        let mut truncated = false;
        let mut stack = vec![(vec![x], x)];
        while let Some((path, cur)) = stack.pop() {
            if cur == y {
                if paths.len() >= cap {
                    truncated = true;
                    break;
                }
                paths.push(path);
                continue;
            }
            // push in reverse so the smallest neighbor is explored first
            let mut next = Vec::new();
            for &(nb, ei) in &self.space.adj[cur] {
                let progress = self.space.d(self.t_idx, x, cur) + self.space.lengths[self.t_idx][ei]
                    <= self.space.d(self.t_idx, x, nb) + self.space.snap_tol;
                if progress && self.on_shortest(x, cur, ei, nb, y) {
                    let mut p = path.clone();
                    p.push(nb);
                    next.push((p, nb));
                }
            }
            for item in next.into_iter().rev() {
                stack.push(item);
            }
        }
        PathEnumeration { paths, truncated }
    }
}

/// A parameterized vertex curve on one time slice; geodesics are constant
/// speed within mesh tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteGeodesic<S> {
    pub time_index: usize,
    pub params: Vec<S>,
    pub points: Vec<usize>,
}

impl<S: Scalar> DiscreteGeodesic<S> {
    /// Constant-speed parameterization of a vertex path by arc length at
    /// time `t_idx`.
    pub fn from_vertex_path(
        space: &DiscreteGeodesicSpace<S>,
        t_idx: usize,
        path: &[usize],
    ) -> Result<Self> {
        if path.len() < 2 {
            return Err(Error::BadParameter("path needs at least 2 vertices".into()));
        }
        let mut cum = vec![S::zero()];
        for w in path.windows(2) {
            let step = space.d(t_idx, w[0], w[1]);
            if step <= S::zero() {
                return Err(Error::BadParameter("repeated vertex in path".into()));
            }
            cum.push(*cum.last().unwrap() + step);
        }
        let total = *cum.last().unwrap();
        let params = cum.iter().map(|&s| s / total).collect();
        Ok(DiscreteGeodesic { time_index: t_idx, params, points: path.to_vec() })
    }

    /// Curve with explicitly chosen parameters (used for speed-jump tests).
    pub fn with_params(t_idx: usize, params: Vec<S>, points: Vec<usize>) -> Result<Self> {
        if params.len() != points.len() || params.len() < 2 {
            return Err(Error::BadParameter("params/points mismatch".into()));
        }
        for w in params.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::BadParameter("params must be strictly increasing".into()));
            }
        }
        Ok(DiscreteGeodesic { time_index: t_idx, params, points })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn start(&self) -> usize {
        self.points[0]
    }

    pub fn end(&self) -> usize {
        *self.points.last().unwrap()
    }

    /// Vertex at curve parameter `sigma` (nearest sample; ties resolve to the
    /// earlier parameter).
    pub fn point_at(&self, sigma: S) -> usize {
        let mut best = 0;
        let mut best_d = (self.params[0] - sigma).abs();
        for i in 1..self.params.len() {
            let d = (self.params[i] - sigma).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        self.points[best]
    }

    /// True when consecutive-point distances are proportional to parameter
    /// increments and the total length matches the endpoint distance, both
    /// within `tol`.
    pub fn is_constant_speed(&self, space: &DiscreteGeodesicSpace<S>, tol: S) -> bool {
        let total = space.d(self.time_index, self.start(), self.end());
        if total <= S::zero() {
            return false;
        }
        let mut length = S::zero();
        for i in 1..self.len() {
            let step = space.d(self.time_index, self.points[i - 1], self.points[i]);
            let expected = total * (self.params[i] - self.params[i - 1]);
            if (step - expected).abs() > tol {
                return false;
            }
            length += step;
        }
        (length - total).abs() <= tol
    }
}

/// Supremal partition sum `sum d_t^2 / dtau` along the curve; for a
/// constant-speed geodesic this equals `d_t^2(endpoints)` within mesh
/// tolerance. Partitions refine the given parameters, so the supremum is the
/// full partition sum.
pub fn action<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    gamma: &DiscreteGeodesic<S>,
    t_idx: usize,
) -> S {
    let mut acc = S::zero();
    for i in 1..gamma.len() {
        let d = space.d(t_idx, gamma.points[i - 1], gamma.points[i]);
        acc += d * d / (gamma.params[i] - gamma.params[i - 1]);
    }
    acc
}

/// Infimal partition sum of backward time differences of `d^2` along the
/// geodesic; finer partitions decrease the sum, so the infimum over
/// sub-partitions is attained at the full parameter list.
pub fn strain<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    gamma: &DiscreteGeodesic<S>,
    t_idx: usize,
) -> Result<S> {
    strain_restricted(space, gamma, t_idx, S::one())
}

/// Strain of the restriction `gamma|[0, sigma_hi]` (no re-normalization).
pub fn strain_restricted<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    gamma: &DiscreteGeodesic<S>,
    t_idx: usize,
    sigma_hi: S,
) -> Result<S> {
    if t_idx == 0 {
        return Err(Error::NoLeftDifference);
    }
    let mut acc = S::zero();
    for i in 1..gamma.len() {
        if gamma.params[i] > sigma_hi + space.snap_tol {
            break;
        }
        let dd = space.d2_backward_diff(t_idx, gamma.points[i - 1], gamma.points[i])?;
        acc += dd / (gamma.params[i] - gamma.params[i - 1]);
    }
    Ok(acc)
}

/// Strain computed on an explicit sub-partition (indices into `params`).
pub fn strain_on_partition<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    gamma: &DiscreteGeodesic<S>,
    t_idx: usize,
    idx: &[usize],
) -> Result<S> {
    if t_idx == 0 {
        return Err(Error::NoLeftDifference);
    }
    let mut acc = S::zero();
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let dd = space.d2_backward_diff(t_idx, gamma.points[i], gamma.points[j])?;
        acc += dd / (gamma.params[j] - gamma.params[i]);
    }
    Ok(acc)
}

/// Averaged strain `int_0^1 strain(gamma|[0,sigma]) dsigma` by trapezoid
/// quadrature over the curve parameters.
pub fn strain_zero<S: Scalar>(
    space: &DiscreteGeodesicSpace<S>,
    gamma: &DiscreteGeodesic<S>,
    t_idx: usize,
) -> Result<S> {
    let sigmas = gamma.params.clone();
    let mut ys = Vec::with_capacity(sigmas.len());
    for &s in &sigmas {
        ys.push(strain_restricted(space, gamma, t_idx, s)?);
    }
    Ok(crate::quad::trapezoid(&sigmas, &ys))
}

/// Per-interval log-Lipschitz controls estimated from the distance cache.
#[derive(Debug, Clone, Serialize)]
pub struct ControlEstimate<S> {
    /// Upper control per grid interval `(t_{i-1}, t_i]`.
    pub kappa: Vec<S>,
    /// Lower control per grid interval.
    pub lambda: Vec<S>,
}

impl<S: Scalar> ControlEstimate<S> {
    pub fn zero(intervals: usize) -> Self {
        ControlEstimate { kappa: vec![S::zero(); intervals], lambda: vec![S::zero(); intervals] }
    }

    /// Control at the interval ending at grid index `t_idx`.
    pub fn kappa_at(&self, t_idx: usize) -> S {
        self.kappa[t_idx - 1]
    }

    pub fn lambda_at(&self, t_idx: usize) -> S {
        self.lambda[t_idx - 1]
    }
}

/// Per consecutive time pair, the smallest controls satisfying the defining
/// log-Lipschitz inequalities on the grid exactly.
pub fn estimate_controls<S: Scalar>(space: &DiscreteGeodesicSpace<S>) -> Result<ControlEstimate<S>> {
    let m = space.grid().len();
    let n = space.vertex_count();
    let mut kappa = Vec::with_capacity(m - 1);
    let mut lambda = Vec::with_capacity(m - 1);
    for ti in 1..m {
        let dt = space.grid().step_before(ti);
        let mut up = S::zero();
        let mut down = S::zero();
        for x in 0..n {
            for y in x + 1..n {
                let dnew = space.d(ti, x, y);
                let dold = space.d(ti - 1, x, y);
                if dnew <= S::zero() || dold <= S::zero() {
                    return Err(Error::PseudoMetric { x, y });
                }
                let rate = (dnew.ln() - dold.ln()) / dt;
                up = up.max(rate);
                down = down.max(-rate);
            }
        }
        kappa.push(up);
        lambda.push(down);
    }
    Ok(ControlEstimate { kappa, lambda })
}

/// Parses the space description format: one record per line,
/// `time T`, `vertex NAME [COORD..]`, `edge U V`, `length U V TIME_INDEX L`.
pub fn parse_space_file<S: Scalar>(text: &str) -> Result<DiscreteGeodesicSpace<S>> {
    let mut times: Vec<S> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut coords: Vec<Vec<S>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut recs: Vec<(usize, usize, S)> = Vec::new(); // (edge, time, length)

    let lookup = |names: &[String], token: &str, line_no: usize| -> Result<usize> {
        names.iter().position(|n| n == token).ok_or_else(|| {
            Error::Config(format!("line {}: unknown vertex '{}'", line_no, token))
        })
    };
    let parse_num = |tok: &str, line_no: usize| -> Result<S> {
        tok.parse::<f64>()
            .map(S::real)
            .map_err(|_| Error::Config(format!("line {}: bad number '{}'", line_no, tok)))
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "time" if toks.len() == 2 => times.push(parse_num(toks[1], line_no)?),
            "vertex" if toks.len() >= 2 => {
                names.push(toks[1].to_string());
                let mut c = Vec::new();
                for t in &toks[2..] {
                    c.push(parse_num(t, line_no)?);
                }
                coords.push(c);
            }
            "edge" if toks.len() == 3 => {
                let a = lookup(&names, toks[1], line_no)?;
                let b = lookup(&names, toks[2], line_no)?;
                edges.push((a, b));
            }
            "length" if toks.len() == 5 => {
                let a = lookup(&names, toks[1], line_no)?;
                let b = lookup(&names, toks[2], line_no)?;
                let ei = edges.iter().position(|&e| e == (a, b) || e == (b, a)).ok_or_else(
                    || Error::Config(format!("line {}: length before edge {} {}", line_no, toks[1], toks[2])),
                )?;
                let ti = toks[3]
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("line {}: bad time index", line_no)))?;
                recs.push((ei, ti, parse_num(toks[4], line_no)?));
            }
            other => {
                return Err(Error::Config(format!("line {}: unknown record '{}'", line_no, other)))
            }
        }
    }

    let grid = TimeGrid::new(times)?;
    let mut lengths = vec![vec![S::zero(); edges.len()]; grid.len()];
    let mut seen = vec![vec![false; edges.len()]; grid.len()];
    for (ei, ti, l) in recs {
        if ti >= grid.len() {
            return Err(Error::Config(format!("time index {} out of range", ti)));
        }
        lengths[ti][ei] = l;
        seen[ti][ei] = true;
    }
    for (ti, row) in seen.iter().enumerate() {
        for (ei, &s) in row.iter().enumerate() {
            if !s {
                return Err(Error::Config(format!(
                    "missing length for edge {} at time index {}",
                    ei, ti
                )));
            }
        }
    }
    DiscreteGeodesicSpace::new(grid, names, coords, edges, lengths)
}
