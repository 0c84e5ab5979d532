//! Seeded random instance generators for property sweeps and the
//! acceptance suite. Everything is deterministic given the seed.

use crate::ddi::DdiInstance;
use crate::gamma::GeneratorFamily;
use crate::linalg::Mat;
use crate::space::{DiscreteGeodesicSpace, TimeGrid};
use crate::transport::ProbabilityVector;
use crate::{Result, Scalar};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Complete graph on `n` vertices with random static edge lengths in
/// `[0.5, 2]`, repeated over the grid.
pub fn random_complete_space<S: Scalar>(
    rng: &mut ChaCha8Rng,
    n: usize,
    grid: TimeGrid<S>,
) -> Result<DiscreteGeodesicSpace<S>> {
    let names = (0..n).map(|i| format!("v{}", i)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j));
        }
    }
    let base: Vec<S> = edges.iter().map(|_| S::real(rng.gen_range(0.5..2.0))).collect();
    let lengths = vec![base; grid.len()];
    DiscreteGeodesicSpace::new(grid, names, vec![], edges, lengths)
}

/// All probability vectors with denominator exactly `denom` on `n` atoms.
pub fn rational_measures<S: Scalar>(n: usize, denom: u64) -> Vec<ProbabilityVector<S>> {
    let mut out = Vec::new();
    let mut counts = vec![0u64; n];
    fill_compositions(&mut counts, 0, denom, &mut |c| {
        let w: Vec<S> = c
            .iter()
            .map(|&k| S::from_u64(k).unwrap() / S::from_u64(denom).unwrap())
            .collect();
        out.push(ProbabilityVector::new(w).expect("valid rational measure"));
    });
    out
}

fn fill_compositions(counts: &mut Vec<u64>, pos: usize, remaining: u64, visit: &mut impl FnMut(&[u64])) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        fill_compositions(counts, pos + 1, remaining - k, visit);
    }
}

/// Integer mass units of a rational measure with the given denominator.
pub fn measure_units<S: Scalar>(mu: &ProbabilityVector<S>, denom: u64) -> Vec<u64> {
    mu.weights()
        .iter()
        .map(|&w| {
            let units = w * S::from_u64(denom).unwrap();
            units.round().to_u64().expect("rational measure")
        })
        .collect()
}

/// Random markov generator family: connected rate skeleton, smooth sinusoidal
/// modulation in time.
pub fn random_markov_family(
    rng: &mut ChaCha8Rng,
    n_states: usize,
    steps: usize,
    span: f64,
) -> GeneratorFamily<f64> {
    let grid = TimeGrid::uniform(0.0, span, steps).unwrap();
    let mut base = Mat::zeros(n_states, n_states);
    for i in 0..n_states {
        for j in 0..n_states {
            if i != j && (j == (i + 1) % n_states || rng.gen_bool(0.35)) {
                let r: f64 = rng.gen_range(0.2..1.5);
                base[(i, j)] = r;
                base[(i, i)] -= r;
            }
        }
    }
    let amp: f64 = rng.gen_range(0.05..0.35);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mats = grid
        .times()
        .iter()
        .map(|&t: &f64| base.scale(1.0 + amp * (3.0 * t + phase).sin()))
        .collect();
    GeneratorFamily::new(grid, mats, true).unwrap()
}

/// Random connected markov rate matrix (rows sum to zero, off-diagonal
/// nonnegative).
pub fn random_markov_base(rng: &mut ChaCha8Rng, n_states: usize) -> Mat<f64> {
    let mut base = Mat::zeros(n_states, n_states);
    for i in 0..n_states {
        for j in 0..n_states {
            if i != j && (j == (i + 1) % n_states || rng.gen_bool(0.35)) {
                let r: f64 = rng.gen_range(0.2..1.5);
                base[(i, j)] = r;
                base[(i, i)] -= r;
            }
        }
    }
    base
}

/// Family `L_t = exp(theta t) L0` for a given rate skeleton. Fast decay
/// makes the slice criterion hold with margin; fast growth violates it near
/// `t = 0` wherever the square field does not vanish.
pub fn exp_scaled_family(
    base: &Mat<f64>,
    steps: usize,
    span: f64,
    theta: f64,
) -> GeneratorFamily<f64> {
    let grid = TimeGrid::uniform(0.0, span, steps).unwrap();
    let mats = grid
        .times()
        .iter()
        .map(|&t: &f64| base.scale((theta * t).exp()))
        .collect();
    GeneratorFamily::new(grid, mats, true).unwrap()
}

/// Markov family rescaled in time by `exp(theta t)` over a random skeleton.
pub fn scaled_markov_family(
    rng: &mut ChaCha8Rng,
    n_states: usize,
    steps: usize,
    span: f64,
    theta: f64,
) -> GeneratorFamily<f64> {
    let base = random_markov_base(rng, n_states);
    exp_scaled_family(&base, steps, span, theta)
}

/// Random tiny time-dependent mm-instance in `D_I` normal form:
/// up to `max_points` vertices, `steps + 1` times, gently varying metric
/// and bounded weights. Masses are multiples of `1/4` so the mesh oracle
/// stays cheap.
pub fn random_ddi_instance(rng: &mut ChaCha8Rng, max_points: usize, steps: usize) -> DdiInstance<f64> {
    let n = rng.gen_range(1..=max_points);
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let mut dists = Vec::with_capacity(times.len());
    // base metric: random points on a line, all pairwise distances
    let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let drift: f64 = rng.gen_range(-0.3..0.3);
    for (ti, _) in times.iter().enumerate() {
        let scale = 1.0 + drift * ti as f64 / steps as f64;
        let mut d = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    d[(i, j)] = (coords[i] - coords[j]).abs().max(0.2) * scale;
                }
            }
        }
        dists.push(d);
    }
    let f: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| (0..n).map(|i| 0.3 * ((i as f64) + 2.0 * t).sin()).collect())
        .collect();
    // masses in quarters
    let mut units = vec![1u64; n];
    let mut extra = 4u64.saturating_sub(n as u64);
    while extra > 0 {
        let k = rng.gen_range(0..n);
        units[k] += 1;
        extra -= 1;
    }
    let total: u64 = units.iter().sum();
    let m: Vec<f64> = units.iter().map(|&u| u as f64 / total as f64).collect();
    DdiInstance { times, dists, f, m }
}
