//! End-to-end library pipeline: build an instance, estimate controls,
//! transport measures, check a flow inequality, reparametrize, and compare
//! two instances — everything through the public API.

use srf_core::ddi::{ddi_distance, DdiInstance};
use srf_core::dynconv::reparametrize_k;
use srf_core::flowcheck::{check_super_ricci_strong, default_measure_corpus, TdMmSpace};
use srf_core::space::{estimate_controls, DiscreteGeodesicSpace, TimeGrid};
use srf_core::transport::{displacement_interpolation, wasserstein};
use srf_core::Real;

#[test]
fn discrete_instance_end_to_end() {
    // gently shrinking circle, d_t^2 = (1 + t) d^2
    let grid = TimeGrid::uniform(0.0, 0.2, 2).unwrap();
    let space =
        DiscreteGeodesicSpace::circle(grid, 12, |t: Real| 12.0 * (1.0 + t).sqrt()).unwrap();
    let controls = estimate_controls(&space).unwrap();
    assert!(controls.kappa.iter().all(|&k| k > 0.0));
    assert!(controls.lambda.iter().all(|&l| l == 0.0));

    let tdmm = TdMmSpace::unweighted(space);
    let pairs = default_measure_corpus(&tdmm, 1);
    let (w, coupling) = wasserstein(&tdmm.space, 1, &pairs[0].0, &pairs[0].1).unwrap();
    assert!(w > 0.0);
    let mid = displacement_interpolation(&tdmm.space, 1, &coupling, 0.5);
    let (w_half, _) = wasserstein(&tdmm.space, 1, &pairs[0].0, &mid).unwrap();
    let h: Real = tdmm.space.mesh(1);
    assert!((w_half - 0.5 * w).abs() <= h);

    // expanding metric: the defect term helps, the strong check passes
    let verdict = check_super_ricci_strong(&tdmm, 1, &pairs, 17, 5.0 * h).unwrap();
    assert!(verdict.holds, "min slack {}", verdict.min_slack);

    // reparametrization with K = 0 is the identity on distances
    let same = reparametrize_k(&tdmm.space, 0.0).unwrap();
    assert_eq!(same.d(1, 0, 6), tdmm.space.d(1, 0, 6));

    // self-distance of the packaged instance vanishes
    let inst = DdiInstance::from_tdmm(&tdmm, None).unwrap();
    let d = ddi_distance(&inst, &inst, 4, 1e-9).unwrap();
    assert!(d.value <= 1e-6, "self distance {}", d.value);
}
