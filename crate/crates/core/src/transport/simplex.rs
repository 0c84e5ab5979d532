//! Dense transportation simplex (u-v / MODI method) on a spanning-tree basis.
//!
//! The pivoting uses only ring operations and comparisons, so exact scalar
//! types (e.g. rationals with `zero_tol = 0`) solve the LP exactly; floats
//! use a small tolerance. Entering arcs are chosen by most-negative reduced
//! cost with lexicographic tie-breaking, switching to Bland's rule after a
//! stall threshold so degenerate instances cannot cycle.

use num_traits::Zero;

/// Minimal scalar bound for exact-friendly pivoting.
pub trait FlowNum:
    Clone
    + PartialOrd
    + Zero
    + std::ops::Sub<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::Mul<Output = Self>
{
}

impl<T> FlowNum for T where
    T: Clone
        + PartialOrd
        + Zero
        + std::ops::Sub<Output = Self>
        + std::ops::Neg<Output = Self>
        + std::ops::Mul<Output = Self>
{
}

/// Optimal basic solution of a balanced transportation problem.
#[derive(Debug, Clone)]
pub struct TransportSolution<T> {
    pub cost: T,
    /// Row-major `m x n` flow matrix.
    pub flow: Vec<T>,
    /// Basic cells of the final spanning tree.
    pub basis: Vec<(usize, usize)>,
    pub iterations: usize,
}

struct Tableau<'a, T> {
    m: usize,
    n: usize,
    cost: &'a [T],
    flow: Vec<T>,
    in_basis: Vec<bool>,
    basis: Vec<(usize, usize)>,
}

impl<'a, T: FlowNum> Tableau<'a, T> {
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Northwest-corner initial basis: exactly `m + n - 1` cells, zeros kept
    /// for degenerate steps.
    fn northwest(m: usize, n: usize, supply: &[T], demand: &[T], cost: &'a [T]) -> Self {
        let mut flow = vec![T::zero(); m * n];
        let mut in_basis = vec![false; m * n];
        let mut basis = Vec::with_capacity(m + n - 1);
        let mut a: Vec<T> = supply.to_vec();
        let mut b: Vec<T> = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = if a[i] < b[j] { a[i].clone() } else { b[j].clone() };
            flow[i * n + j] = q.clone();
            in_basis[i * n + j] = true;
            basis.push((i, j));
            a[i] = a[i].clone() - q.clone();
            b[j] = b[j].clone() - q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            // move towards the exhausted side; prefer advancing the column on
            // ties so the walk stays a staircase
            if a[i] <= T::zero() && i < m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Tableau { m, n, cost, flow, in_basis, basis }
    }

    /// Node potentials from the basis tree (`u_0 = 0`).
    fn potentials(&self) -> (Vec<Option<T>>, Vec<Option<T>>) {
        let mut u: Vec<Option<T>> = vec![None; self.m];
        let mut v: Vec<Option<T>> = vec![None; self.n];
        u[0] = Some(T::zero());
        // adjacency over tree nodes: rows 0..m, cols m..m+n
        let mut adj: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); self.m + self.n];
        for &(i, j) in &self.basis {
            adj[i].push((self.m + j, i, j));
            adj[self.m + j].push((i, i, j));
        }
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(0usize);
        while let Some(node) = queue.pop_front() {
            for &(next, i, j) in &adj[node] {
                let c = self.cost[self.at(i, j)].clone();
                if next >= self.m {
                    if v[next - self.m].is_none() {
                        let ui = u[i].clone().expect("row potential known");
                        v[next - self.m] = Some(c - ui);
                        queue.push_back(next);
                    }
                } else if u[next].is_none() {
                    let vj = v[j].clone().expect("col potential known");
                    u[next] = Some(c - vj);
                    queue.push_back(next);
                }
            }
        }
        (u, v)
    }

    /// Tree path from column node `j` back to row node `i` as a list of
    /// basis cells with alternating signs (first cell is a `-` position).
    fn cycle_path(&self, enter: (usize, usize)) -> Vec<(usize, usize)> {
        let total = self.m + self.n;
        let mut adj: Vec<Vec<(usize, (usize, usize))>> = vec![Vec::new(); total];
        for &(i, j) in &self.basis {
            adj[i].push((self.m + j, (i, j)));
            adj[self.m + j].push((i, (i, j)));
        }
        let start = self.m + enter.1;
        let goal = enter.0;
        let mut parent: Vec<Option<(usize, (usize, usize))>> = vec![None; total];
        let mut seen = vec![false; total];
        seen[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(next, cell) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut cur = goal;
        while cur != start {
            let (prev, cell) = parent[cur].expect("basis tree is connected");
            cells.push(cell);
            cur = prev;
        }
        cells.reverse();
        cells
    }

    fn pivot(&mut self, enter: (usize, usize)) {
        let path = self.cycle_path(enter);
        // signs along the cycle: enter +, then -, +, ...
        let mut theta: Option<T> = None;
        let mut leave: Option<(usize, usize)> = None;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = self.flow[self.at(cell.0, cell.1)].clone();
                match &theta {
                    None => {
                        theta = Some(f);
                        leave = Some(cell);
                    }
                    Some(t) => {
                        if f < *t {
                            theta = Some(f);
                            leave = Some(cell);
                        } else if f == *t && cell < leave.unwrap() {
                            leave = Some(cell);
                        }
                    }
                }
            }
        }
        let theta = theta.expect("cycle has at least one minus cell");
        let leave = leave.unwrap();
        let idx = self.at(enter.0, enter.1);
        self.flow[idx] = self.flow[idx].clone() + theta.clone();
        for (k, &cell) in path.iter().enumerate() {
            let id = self.at(cell.0, cell.1);
            if k % 2 == 0 {
                self.flow[id] = self.flow[id].clone() - theta.clone();
            } else {
                self.flow[id] = self.flow[id].clone() + theta.clone();
            }
        }
        let leave_idx = self.at(leave.0, leave.1);
        self.in_basis[leave_idx] = false;
        self.in_basis[idx] = true;
        let pos = self.basis.iter().position(|&c| c == leave).unwrap();
        self.basis[pos] = enter;
    }

    /// Entering cell under the given rule; `None` at optimality.
    fn entering(&self, zero_tol: &T, bland: bool) -> Option<(usize, usize)> {
        let (u, v) = self.potentials();
        let mut best: Option<((usize, usize), T)> = None;
        for i in 0..self.m {
            for j in 0..self.n {
                if self.in_basis[self.at(i, j)] {
                    continue;
                }
                let r = self.cost[self.at(i, j)].clone()
                    - (u[i].clone().unwrap() + v[j].clone().unwrap());
                if r < -zero_tol.clone() {
                    if bland {
                        return Some((i, j));
                    }
                    match &best {
                        None => best = Some(((i, j), r)),
                        Some((_, rb)) => {
                            if r < *rb {
                                best = Some(((i, j), r));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(c, _)| c)
    }
}

/// Solves the balanced transportation problem `min sum c_ij q_ij` with
/// `sum_j q_ij = supply_i`, `sum_i q_ij = demand_j`, `q >= 0`.
///
/// `supply` and `demand` must have equal sums (exact for exact types; the
/// caller pre-balances floats).
pub fn solve_transport<T: FlowNum>(
    supply: &[T],
    demand: &[T],
    cost: &[T],
    zero_tol: T,
) -> TransportSolution<T> {
    let m = supply.len();
    let n = demand.len();
    assert!(m > 0 && n > 0, "empty marginals");
    assert_eq!(cost.len(), m * n);
    let mut t = Tableau::northwest(m, n, supply, demand, cost);
    let mut iterations = 0usize;
    let bland_after = 16 * (m * n + 16);
    let hard_cap = 2000 * (m * n + 16);
    while let Some(enter) = t.entering(&zero_tol, iterations > bland_after) {
        t.pivot(enter);
        iterations += 1;
        assert!(iterations < hard_cap, "transport simplex failed to terminate");
    }
    let mut total = T::zero();
    for i in 0..m {
        for j in 0..n {
            total = total + cost[i * n + j].clone() * t.flow[i * n + j].clone();
        }
    }
    TransportSolution { cost: total, flow: t.flow, basis: t.basis, iterations }
}

/// Alternative optimal vertices reached by pivoting on zero-reduced-cost
/// nonbasic cells, up to `cap` couplings (the returned list includes the
/// initial solution first). Used to realize "there exists a geodesic"
/// searches over optimal couplings.
pub fn alternative_optima<T: FlowNum>(
    supply: &[T],
    demand: &[T],
    cost: &[T],
    zero_tol: T,
    cap: usize,
) -> Vec<Vec<T>> {
    let m = supply.len();
    let n = demand.len();
    let base = solve_transport(supply, demand, cost, zero_tol.clone());
    let mut flows: Vec<Vec<T>> = vec![base.flow.clone()];
    let mut frontier = vec![(base.flow, base.basis)];
    while let Some((flow, basis)) = frontier.pop() {
        if flows.len() >= cap {
            break;
        }
        let in_basis = {
            let mut b = vec![false; m * n];
            for &(i, j) in &basis {
                b[i * n + j] = true;
            }
            b
        };
        let t0 = Tableau { m, n, cost, flow, in_basis, basis };
        let (u, v) = t0.potentials();
        for i in 0..m {
            for j in 0..n {
                if t0.in_basis[i * n + j] {
                    continue;
                }
                let r = cost[i * n + j].clone() - (u[i].clone().unwrap() + v[j].clone().unwrap());
                let r_abs = if r < T::zero() { -r } else { r };
                if r_abs <= zero_tol.clone() {
                    let mut t = Tableau {
                        m,
                        n,
                        cost,
                        flow: t0.flow.clone(),
                        in_basis: t0.in_basis.clone(),
                        basis: t0.basis.clone(),
                    };
                    t.pivot((i, j));
                    let newflow = t.flow.clone();
                    let fresh = !flows.iter().any(|f| {
                        f.iter().zip(&newflow).all(|(a, b)| {
                            let d = a.clone() - b.clone();
                            let d = if d < T::zero() { -d } else { d };
                            d <= zero_tol.clone()
                        })
                    });
                    if fresh {
                        flows.push(newflow.clone());
                        if flows.len() >= cap {
                            return flows;
                        }
                        frontier.push((newflow, t.basis));
                    }
                }
            }
        }
    }
    flows
}
