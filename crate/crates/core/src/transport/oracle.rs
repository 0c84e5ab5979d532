//! Exhaustive extreme-coupling oracle for tiny transport instances.
//!
//! Independent of the simplex path: every vertex of the transportation
//! polytope has forest support, and plucking leaves realizes it as a greedy
//! full-allocation order, so the memoized recursion over all allocation
//! orders visits every extreme point. Mass is carried in integer units to
//! keep the state space exact.

use std::collections::HashMap;

/// Minimal transport cost for integer-unit marginals by exhaustive greedy
/// allocation with memoization. `cost[i][j]` is the unit cost; the returned
/// value is `sum q_ij cost_ij` in mass units (divide by the common
/// denominator afterwards).
pub fn min_cost_exhaustive(supply: &[u64], demand: &[u64], cost: &[Vec<f64>]) -> f64 {
    assert_eq!(supply.iter().sum::<u64>(), demand.iter().sum::<u64>(), "unbalanced marginals");
    let mut memo: HashMap<(Vec<u64>, Vec<u64>), f64> = HashMap::new();
    recurse(&mut memo, supply.to_vec(), demand.to_vec(), cost)
}

fn recurse(
    memo: &mut HashMap<(Vec<u64>, Vec<u64>), f64>,
    supply: Vec<u64>,
    demand: Vec<u64>,
    cost: &[Vec<f64>],
) -> f64 {
    if supply.iter().all(|&a| a == 0) {
        return 0.0;
    }
    let key = (supply.clone(), demand.clone());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = f64::INFINITY;
    for i in 0..supply.len() {
        if supply[i] == 0 {
            continue;
        }
        for j in 0..demand.len() {
            if demand[j] == 0 {
                continue;
            }
            let q = supply[i].min(demand[j]);
            let mut s = supply.clone();
            let mut d = demand.clone();
            s[i] -= q;
            d[j] -= q;
            let v = q as f64 * cost[i][j] + recurse(memo, s, d, cost);
            if v < best {
                best = v;
            }
        }
    }
    memo.insert(key, best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matches_hand_solution_on_two_points() {
        // mu = (1, 0), nu = (1/2, 1/2) in halves: supply (2,0) demand (1,1)
        let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let v = min_cost_exhaustive(&[2, 0], &[1, 1], &cost);
        assert_relative_eq!(v, 1.0); // one half-unit across at cost 1 each unit
    }

    #[test]
    fn diagonal_is_free() {
        let cost = vec![vec![0.0, 5.0], vec![5.0, 0.0]];
        let v = min_cost_exhaustive(&[3, 4], &[3, 4], &cost);
        assert_relative_eq!(v, 0.0);
    }

    #[test]
    fn picks_cheaper_matching() {
        let cost = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let v = min_cost_exhaustive(&[1, 1], &[1, 1], &cost);
        assert_relative_eq!(v, 2.0); // anti-diagonal
    }
}
