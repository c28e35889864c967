use super::*;
use crate::diskmetric::{build_disk, DiskParams, UNREACHABLE};
use crate::rng::SeedRecord;

fn line(xs: &[f64]) -> FiniteGeodesicSpace {
    let mut s = FiniteGeodesicSpace::new();
    let pts = xs.iter().map(|&x| [x, 0.0]).collect();
    let boundary = (0..xs.len()).map(|i| BoundaryVertex { vertex: i, coord: i as f64 }).collect();
    s.add_piece(Piece::Points(pts), vec![1.0; xs.len()], boundary).unwrap();
    s
}

fn disk(seed: u64, n: usize) -> Arc<DiskInstance> {
    Arc::new(build_disk(&DiskParams::fixed(1.0, 1.0, n, SeedRecord::new(seed, 0))).unwrap())
}

fn point(piece: usize, r: f64) -> ArcRef {
    ArcRef { piece, arc: [r, r] }
}

#[test]
fn no_identifications_is_block_diagonal() {
    let mut s = line(&[0.0, 1.0]);
    let other = line(&[0.0, 2.0]);
    s.add_piece(other.pieces()[0].clone(), vec![1.0; 2], other.boundary(0)).unwrap();
    let g = quotient_space(s, &[]).unwrap();
    let d = g.space.distance_matrix().unwrap();
    assert_eq!(d[1], 1.0);
    assert_eq!(d[2], UNREACHABLE);
    assert_eq!(d[2 * 4 + 3], 2.0);
    assert!(g.interface.is_empty());
}

#[test]
fn single_pair_matches_one_chain_formula() {
    let xs = [0.0, 1.0, 3.0];
    let base = line(&xs);
    let d = base.distance_matrix().unwrap();
    let (p, q) = (0, 2);
    let id = Identification { a: point(0, p as f64), b: point(0, q as f64), orientation: Orientation::Same };
    let g = quotient_space(base, &[id]).unwrap();
    let dd = g.space.distance_matrix().unwrap();
    for x in 0..3 {
        for y in 0..3 {
            let chain = d[x * 3 + y].min(d[x * 3 + p] + d[q * 3 + y]).min(d[x * 3 + q] + d[p * 3 + y]);
            assert_eq!(dd[x * 3 + y], chain, "({x}, {y})");
        }
    }
    assert_eq!(dd[3 + 2], 1.0);
}

#[test]
fn schema_validation() {
    let (a, b) = (disk(1, 257), disk(2, 257));
    assert!(matches!(
        glue_disks(a.clone(), b.clone(), ([0.0, 0.5], [0.0, 0.8]), Orientation::Reversed),
        Err(Error::InvalidSchema(_))
    ));
    assert!(matches!(self_glue(a.clone(), [0.0, 0.6], [0.4, 1.0], Orientation::Reversed), Err(Error::InvalidSchema(_))));
    assert!(matches!(
        glue_disks(a.clone(), b.clone(), ([0.0, 1.5], [0.0, 1.5]), Orientation::Reversed),
        Err(Error::InvalidSchema(_))
    ));
    let twice = [
        Identification { a: ArcRef { piece: 0, arc: [0.0, 0.5] }, b: ArcRef { piece: 1, arc: [0.0, 0.5] }, orientation: Orientation::Same },
        Identification { a: ArcRef { piece: 0, arc: [0.25, 0.75] }, b: ArcRef { piece: 1, arc: [0.5, 1.0] }, orientation: Orientation::Same },
    ];
    assert!(matches!(quotient_space(disk_union([a.clone(), b.clone()]).unwrap(), &twice), Err(Error::InvalidSchema(_))));
    let bad_piece = [Identification { a: point(0, 0.0), b: point(7, 0.0), orientation: Orientation::Same }];
    assert!(quotient_space(disk_union([a]).unwrap(), &bad_piece).is_err());
    assert!(GluingSchema::from_json("{\"pieces\": 3}").is_err());
}

#[test]
fn schema_json_round_trip() {
    let text = r#"{"pieces":[{"file":"a.bdisk"},{"file":"b.bdisk"}],
        "identifications":[{"a":{"piece":0,"arc":[0,1]},"b":{"piece":1,"arc":[0,1]},"orientation":"reversed"}]}"#;
    let s = GluingSchema::from_json(text).unwrap();
    assert_eq!(s.pieces.len(), 2);
    assert_eq!(s.identifications[0].orientation, Orientation::Reversed);
    let back = GluingSchema::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
    assert!(s.load_disks(Path::new("/nonexistent")).is_err());
}

#[test]
fn zero_length_arc_links_one_pair() {
    let (a, b) = (disk(3, 257), disk(4, 257));
    let plain = disk_union([a.clone(), b.clone()]).unwrap();
    let g = glue_disks(a, b, ([0.25, 0.25], [0.5, 0.5]), Orientation::Reversed).unwrap();
    assert_eq!(g.interface.len(), 1);
    let [u, v] = g.interface[0].sides;
    assert_eq!(g.space.distance(u, v).unwrap(), 0.0);
    let k = plain.piece_range(0).len();
    let before = plain.distances_from(3).unwrap();
    let after = g.space.distances_from(3).unwrap();
    assert_eq!(&before[..k], &after[..k]);
}

#[test]
fn full_boundary_gluing_has_a_unit_cycle_interface() {
    let (a, b) = (disk(5, 513), disk(6, 513));
    let g = glue_disks(a.clone(), b.clone(), ([0.0, 1.0], [0.0, 1.0]), Orientation::Reversed).unwrap();
    assert_eq!(g.interface_length(), 1.0);
    assert_eq!(g.interface.first().unwrap().coord, 0.0);
    assert_eq!(g.interface.last().unwrap().coord, 1.0);
    for p in &g.interface {
        assert_eq!(g.piece_of(p.sides[0]), 0);
        assert_eq!(g.piece_of(p.sides[1]), 1);
    }
    // the two ends of the interface are at distance 0 (closed cycle)
    let (s, t) = (g.interface[0].sides[0], g.interface.last().unwrap().sides[0]);
    assert_eq!(g.space.distance(s, t).unwrap(), 0.0);
    // quotient never increases distances
    let plain = disk_union([a, b]).unwrap();
    for src in [0, 17, 400] {
        let d0 = plain.distances_from(src).unwrap();
        let d1 = g.space.distances_from(src).unwrap();
        for (x, y) in d0.iter().zip(&d1) {
            assert!(y <= x);
        }
    }
}

#[test]
fn self_glue_preserves_area() {
    let d = disk(7, 1025);
    let g = self_glue(d.clone(), [0.0, 0.5], [0.5, 1.0], Orientation::Reversed).unwrap();
    assert_eq!(g.space.total_area(), d.class_area().iter().sum::<f64>());
    let pinch = self_glue(d.clone(), [0.25, 0.25], [0.75, 0.75], Orientation::Same).unwrap();
    assert_eq!(pinch.interface.len(), 1);
}

#[test]
fn identification_order_does_not_matter() {
    let (a, b) = (disk(8, 257), disk(9, 257));
    let ids = [
        Identification { a: ArcRef { piece: 0, arc: [0.0, 0.25] }, b: ArcRef { piece: 1, arc: [0.5, 0.75] }, orientation: Orientation::Reversed },
        Identification { a: ArcRef { piece: 1, arc: [0.0, 0.25] }, b: ArcRef { piece: 0, arc: [0.5, 0.75] }, orientation: Orientation::Same },
    ];
    let fwd = quotient_space(disk_union([a.clone(), b.clone()]).unwrap(), &ids).unwrap();
    let rev = quotient_space(disk_union([a, b]).unwrap(), &[ids[1], ids[0]]).unwrap();
    assert_eq!(fwd.space.distance_matrix().unwrap(), rev.space.distance_matrix().unwrap());
}

#[test]
fn interface_segment_counts() {
    let (a, b) = (disk(10, 1025), disk(11, 1025));
    let g = glue_disks(a, b, ([0.0, 1.0], [0.0, 1.0]), Orientation::Reversed).unwrap();
    let delta = 0.25;
    assert_eq!(g.segment_count(delta), 16);
    assert_eq!(g.crossing_count(&[], delta).unwrap(), 0);
    let inner: Vec<usize> = g.interface.iter().filter(|p| p.coord < 0.06).map(|p| p.sides[0]).collect();
    assert_eq!(g.crossing_count(&inner, delta).unwrap(), 1);
    assert!(matches!(g.crossing_count(&inner, 1e-3), Err(Error::InvalidParameter(_))));
    let c = g.interface[0].sides[0];
    assert_eq!(g.ball_segment_count(c, 10.0, 0.3).unwrap(), g.segment_count(10.0));
    let from_c = g.space.distances_from(c).unwrap();
    let far = (0..g.space.len()).max_by(|&x, &y| from_c[x].total_cmp(&from_c[y])).unwrap();
    let dist = g.space.distances_from(far).unwrap();
    let gap = g.interface_vertices().iter().map(|&v| dist[v]).fold(f64::INFINITY, f64::min);
    let delta = (0.9 * gap).powf(1.0 / 1.3);
    if delta * delta >= g.interface_resolution() {
        assert_eq!(g.ball_segment_count(far, delta, 0.3).unwrap(), 0);
    }
}

#[test]
fn flat_counterexample_halves_distances() {
    let m = 32;
    let f = flat_counterexample(m).unwrap();
    let r = f.report(9, 0.25).unwrap();
    let tol = 2.0 / m as f64;
    for p in &r.pairs {
        assert!((p.glued - (p.x - p.y).abs() / 2.0).abs() <= tol, "{p:?}");
        assert!((p.plain - (p.x - p.y).abs()).abs() <= tol, "{p:?}");
    }
    // the segment does not change the internal metric of either half
    for piece in 0..2 {
        let verts: Vec<usize> = f.glued.space.piece_range(piece).collect();
        let a = f.glued.space.internal_metric(&verts).unwrap().distances_from(verts[5]).unwrap();
        let b = f.plain.space.internal_metric(&verts).unwrap().distances_from(verts[5]).unwrap();
        assert_eq!(a[..f.plain.space.len()], b[..]);
    }
    assert!(flat_counterexample(4).is_err());
}

#[test]
fn glued_container_round_trip() {
    let (a, b) = (disk(12, 129), disk(13, 129));
    let g = glue_disks(a, b, ([0.0, 0.5], [0.25, 0.75]), Orientation::Reversed).unwrap();
    let mut buf = Vec::new();
    write_glued(&mut buf, &g).unwrap();
    let back = read_glued(buf.as_slice()).unwrap();
    assert_eq!(back.interface, g.interface);
    assert_eq!(back.space.distance_matrix().unwrap(), g.space.distance_matrix().unwrap());
    let mut again = Vec::new();
    write_glued(&mut again, &back).unwrap();
    assert_eq!(buf, again);
    let flat = flat_counterexample(8).unwrap();
    assert!(write_glued(Vec::new(), &flat.glued).is_err());
}
