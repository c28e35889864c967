//! Metric kernels against brute-force references on small instances.

use std::sync::Arc;

use gluelab_core::acceptance::oracles::{exact_disk, floyd_warshall, grid_quotient, run_oracle, scan_d_z, LABEL_STEP};
use gluelab_core::diskmetric::{build_disk, DiskParams, FiniteGeodesicSpace};
use gluelab_core::{Discretization, SeedRecord};

#[test]
fn quotient_equals_floyd_warshall_exactly() {
    for n in [9, 17, 33, 49, 64] {
        for i in 0..5 {
            let disk = Arc::new(exact_disk(n, SeedRecord::new(100 + n as u64, i)).unwrap());
            let reference = grid_quotient(&disk);
            let space = FiniteGeodesicSpace::from_disk(disk.clone()).unwrap();
            let k = disk.len();
            for a in 0..k {
                let d = space.distances_from(disk.class_of(a)).unwrap();
                for b in 0..k {
                    assert_eq!(d[disk.class_of(b)], reference[a * k + b], "n={n} i={i} ({a},{b})");
                }
            }
        }
    }
}

#[test]
fn gaussian_mode_matches_within_rounding() {
    for i in 0..5 {
        let p = DiskParams::fixed(1.0, 1.0, 48, SeedRecord::new(7, i)).with_mode(Discretization::Gaussian);
        let disk = Arc::new(build_disk(&p).unwrap());
        let reference = grid_quotient(&disk);
        let space = FiniteGeodesicSpace::from_disk(disk.clone()).unwrap();
        let k = disk.len();
        for a in 0..k {
            let d = space.distances_from(disk.class_of(a)).unwrap();
            for b in 0..k {
                assert!((d[disk.class_of(b)] - reference[a * k + b]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn quotient_is_the_largest_pseudometric_below_d_z() {
    let disk = Arc::new(exact_disk(49, SeedRecord::new(9, 0)).unwrap());
    let space = FiniteGeodesicSpace::from_disk(disk.clone()).unwrap();
    let z = disk.z();
    let k = disk.len();
    let d: Vec<Vec<f64>> = (0..disk.n_classes()).map(|c| space.distances_from(c).unwrap()).collect();
    let dist = |a: usize, b: usize| d[disk.class_of(a)][disk.class_of(b)];
    for a in 0..k {
        for b in 0..k {
            assert!(dist(a, b) <= scan_d_z(z, a, b));
            // one more relaxation pass changes nothing
            for c in 0..k {
                assert!(dist(a, c) <= dist(a, b) + scan_d_z(z, b, c));
            }
        }
    }
}

#[test]
fn geodesic_chains_realize_distances() {
    let disk = Arc::new(build_disk(&DiskParams::fixed(1.0, 1.0, 1025, SeedRecord::new(3, 3))).unwrap());
    let space = FiniteGeodesicSpace::from_disk(disk.clone()).unwrap();
    for (s, t) in [(0, 17), (5, 400), (100, 101), (3, 3)] {
        let path = space.geodesic(s, t).unwrap().unwrap();
        assert_eq!((path[0], *path.last().unwrap()), (s, t));
        let len = space.chain_length(&path);
        assert!((len - space.distance(s, t).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn glued_quotient_equals_floyd_warshall_on_both_grids() {
    let o = run_oracle("glued-floyd-warshall", 3, 64, SeedRecord::new(11, 0), false).unwrap();
    assert!(o.passed(), "{}", o.detail);
}

#[test]
fn floyd_warshall_reference_is_itself_sane() {
    // a 4-cycle with one chord: distances by hand
    let inf = f64::INFINITY;
    let mut w = vec![
        0.0, 1.0, inf, 4.0, //
        1.0, 0.0, 1.0, inf, //
        inf, 1.0, 0.0, 1.0, //
        4.0, inf, 1.0, 0.0,
    ];
    floyd_warshall(&mut w, 4);
    assert_eq!(w[3], 3.0);
    assert_eq!(w[2], 2.0);
    assert_eq!(LABEL_STEP, 0.015625);
}
