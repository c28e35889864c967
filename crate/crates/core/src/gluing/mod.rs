//! Quotients of disjoint unions of finite geodesic spaces.
//!
//! Pieces are glued along boundary arcs matched by boundary length. Every
//! boundary vertex of one arc is linked to the nearest boundary vertex of the
//! partner arc at the corresponding coordinate, in both directions, so the
//! identification is symmetric and independent of which side is listed first.

mod io;

pub use io::{read_glued, write_glued};

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diskmetric::{read_disk, BoundaryVertex, DiskInstance, FiniteGeodesicSpace, Piece, DEFAULT_EDGE_CAP};
use crate::error::ensure;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `a₁ + s ↔ b₁ + s`
    Same,
    /// `a₁ + s ↔ b₂ - s`
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcRef {
    pub piece: usize,
    pub arc: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub a: ArcRef,
    pub b: ArcRef,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceFile {
    pub file: PathBuf,
}

/// JSON schema: `{"pieces": [{"file": ...}], "identifications": [{"a": {"piece": 0, "arc": [r1, r2]}, "b": ..., "orientation": "reversed"}]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GluingSchema {
    pub pieces: Vec<PieceFile>,
    pub identifications: Vec<Identification>,
}

impl GluingSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSchema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidSchema(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Reads the referenced `.bdisk` files; relative paths resolve against `base`.
    pub fn load_disks(&self, base: &Path) -> Result<Vec<DiskInstance>> {
        self.pieces
            .iter()
            .map(|p| {
                let path = if p.file.is_absolute() { p.file.clone() } else { base.join(&p.file) };
                let file = std::fs::File::open(&path)
                    .map_err(|e| Error::InvalidSchema(format!("piece {}: {e}", path.display())))?;
                read_disk(std::io::BufReader::new(file))
            })
            .collect()
    }
}

/// One interface location: its cumulative boundary-length coordinate and the
/// vertices identified there, one per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfacePoint {
    pub coord: f64,
    pub sides: [usize; 2],
}

#[derive(Clone, Debug)]
pub struct GluedSpace {
    pub space: FiniteGeodesicSpace,
    /// Interface points ordered by coordinate; coordinates of successive
    /// identifications are concatenated in schema order.
    pub interface: Vec<InterfacePoint>,
    pub identifications: Vec<Identification>,
}

impl GluedSpace {
    pub fn piece_of(&self, v: usize) -> usize {
        self.space.piece_of(v)
    }

    /// Total boundary length of the interface.
    pub fn interface_length(&self) -> f64 {
        let mut total = 0.0;
        for id in &self.identifications {
            total += id.a.arc[1] - id.a.arc[0];
        }
        total
    }

    /// Largest coordinate gap between consecutive interface points.
    pub fn interface_resolution(&self) -> f64 {
        self.interface.windows(2).map(|w| w[1].coord - w[0].coord).fold(0.0, f64::max)
    }

    pub fn interface_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.interface.iter().flat_map(|p| p.sides).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn segment_index(&self, delta: f64) -> Result<(f64, HashMap<usize, Vec<usize>>)> {
        let seg = delta * delta;
        ensure!(delta > 0.0 && delta.is_finite(), InvalidParameter, "δ must be positive");
        let res = self.interface_resolution();
        ensure!(seg >= res, InvalidParameter, "δ² = {seg} is below the interface resolution {res}");
        let mut map: HashMap<usize, Vec<usize>> = HashMap::new();
        for p in &self.interface {
            let k = (p.coord / seg).floor() as usize;
            for v in p.sides {
                map.entry(v).or_default().push(k);
            }
        }
        Ok((seg, map))
    }

    /// Number of interface segments of length `δ²` (last partial one kept).
    pub fn segment_count(&self, delta: f64) -> usize {
        let seg = delta * delta;
        let l = self.interface_length();
        if l <= 0.0 {
            return usize::from(!self.interface.is_empty());
        }
        (l / seg).ceil().max(1.0) as usize
    }

    /// Number of `δ²`-segments of the interface containing a vertex of `path`.
    pub fn crossing_count(&self, path: &[usize], delta: f64) -> Result<usize> {
        let (_, map) = self.segment_index(delta)?;
        let mut hit: Vec<usize> = path.iter().filter_map(|v| map.get(v)).flatten().copied().collect();
        hit.sort_unstable();
        hit.dedup();
        Ok(hit.len())
    }

    /// Number of `δ²`-segments meeting the ball of radius `δ^{1+v}` around `center`.
    pub fn ball_segment_count(&self, center: usize, delta: f64, v: f64) -> Result<usize> {
        let (_, map) = self.segment_index(delta)?;
        let radius = delta.powf(1.0 + v);
        let sp = self.space.shortest_paths(center, radius)?;
        let mut hit: Vec<usize> = map
            .iter()
            .filter(|(u, _)| sp.dist[**u] < radius)
            .flat_map(|(_, ks)| ks.iter().copied())
            .collect();
        hit.sort_unstable();
        hit.dedup();
        Ok(hit.len())
    }
}

/// Largest coordinate gap along a boundary (one boundary grid cell).
fn cell(boundary: &[BoundaryVertex]) -> f64 {
    boundary.windows(2).map(|w| w[1].coord - w[0].coord).fold(0.0, f64::max)
}

fn nearest(boundary: &[BoundaryVertex], coord: f64) -> BoundaryVertex {
    let i = boundary.partition_point(|b| b.coord < coord);
    match (i.checked_sub(1).map(|j| boundary[j]), boundary.get(i).copied()) {
        (Some(lo), Some(hi)) => {
            if coord - lo.coord <= hi.coord - coord {
                lo
            } else {
                hi
            }
        }
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => unreachable!("empty boundary"),
    }
}

fn overlaps(x: [f64; 2], y: [f64; 2]) -> bool {
    x[0].max(y[0]) < x[1].min(y[1])
}

/// Glues the pieces of `union` according to `ids`; `piece` indices in the
/// identifications refer to pieces of `union`.
pub fn quotient_space(mut space: FiniteGeodesicSpace, ids: &[Identification]) -> Result<GluedSpace> {
    let boundaries: Vec<Vec<BoundaryVertex>> = (0..space.n_pieces()).map(|p| space.boundary(p)).collect();
    for arc in ids.iter().flat_map(|id| [id.a, id.b]) {
        ensure!(arc.piece < boundaries.len(), InvalidSchema, "piece {} does not exist", arc.piece);
        let b = &boundaries[arc.piece];
        ensure!(!b.is_empty(), InvalidSchema, "piece {} has no boundary", arc.piece);
        let tol = cell(b) + 1e-9;
        let [r1, r2] = arc.arc;
        ensure!(r1 <= r2, InvalidSchema, "arc [{r1}, {r2}] is reversed; use the orientation field");
        ensure!(
            r1 >= b[0].coord - tol && r2 <= b[b.len() - 1].coord + tol,
            InvalidSchema,
            "arc [{r1}, {r2}] leaves the boundary of piece {}",
            arc.piece
        );
    }
    for (i, x) in ids.iter().enumerate() {
        ensure!(
            x.a.piece != x.b.piece || !overlaps(x.a.arc, x.b.arc),
            InvalidSchema,
            "arcs {:?} and {:?} of piece {} overlap",
            x.a.arc,
            x.b.arc,
            x.a.piece
        );
        for y in &ids[i + 1..] {
            let same = (x.a == y.a && x.b == y.b) || (x.a == y.b && x.b == y.a);
            for p in [x.a, x.b] {
                for q in [y.a, y.b] {
                    ensure!(
                        same || p.piece != q.piece || !overlaps(p.arc, q.arc),
                        InvalidSchema,
                        "arc {:?} of piece {} is identified twice",
                        p.arc,
                        p.piece
                    );
                }
            }
        }
    }

    let mut interface = Vec::new();
    let mut offset = 0.0;
    for id in ids {
        let (ba, bb) = (&boundaries[id.a.piece], &boundaries[id.b.piece]);
        let (la, lb) = (id.a.arc[1] - id.a.arc[0], id.b.arc[1] - id.b.arc[0]);
        let tol = cell(ba).max(cell(bb)) + 1e-9;
        ensure!((la - lb).abs() <= tol, InvalidSchema, "arc lengths {la} and {lb} differ by more than one boundary cell");
        let map = |s: f64, to: ArcRef, len: f64| match id.orientation {
            Orientation::Same => to.arc[0] + s * len,
            Orientation::Reversed => to.arc[1] - s * len,
        };
        let frac = |c: f64, from: ArcRef, len: f64| if len > 0.0 { ((c - from.arc[0]) / len).clamp(0.0, 1.0) } else { 0.0 };
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        let within = |b: &BoundaryVertex, arc: [f64; 2]| b.coord >= arc[0] - 1e-12 && b.coord <= arc[1] + 1e-12;
        for x in ba.iter().filter(|b| within(b, id.a.arc)) {
            let s = frac(x.coord, id.a, la);
            pairs.push((s, x.vertex, nearest(bb, map(s, id.b, lb)).vertex));
        }
        for y in bb.iter().filter(|b| within(b, id.b.arc)) {
            let s = match id.orientation {
                Orientation::Same => frac(y.coord, id.b, lb),
                Orientation::Reversed => 1.0 - frac(y.coord, id.b, lb),
            };
            pairs.push((s, nearest(ba, id.a.arc[0] + s * la).vertex, y.vertex));
        }
        if pairs.is_empty() {
            let (x, y) = (nearest(ba, id.a.arc[0]), nearest(bb, map(0.0, id.b, lb)));
            pairs.push((0.0, x.vertex, y.vertex));
        }
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
        pairs.dedup_by(|p, q| p.1 == q.1 && p.2 == q.2);
        for &(s, u, v) in &pairs {
            space.link(u, v)?;
            interface.push(InterfacePoint { coord: offset + s * la, sides: [u, v] });
        }
        offset += la;
    }
    space.note(format!("glued along {} identifications, {} interface points", ids.len(), interface.len()));
    Ok(GluedSpace { space, interface, identifications: ids.to_vec() })
}

/// Disjoint union of disks as one space, piece `i` = disk `i`.
pub fn disk_union(disks: impl IntoIterator<Item = Arc<DiskInstance>>) -> Result<FiniteGeodesicSpace> {
    let mut space = FiniteGeodesicSpace::new();
    for d in disks {
        space.add_disk(d, DEFAULT_EDGE_CAP)?;
    }
    Ok(space)
}

/// Glues arc `arcs.0` of `d1` to arc `arcs.1` of `d2`.
pub fn glue_disks(
    d1: Arc<DiskInstance>,
    d2: Arc<DiskInstance>,
    arcs: ([f64; 2], [f64; 2]),
    orientation: Orientation,
) -> Result<GluedSpace> {
    let id = Identification { a: ArcRef { piece: 0, arc: arcs.0 }, b: ArcRef { piece: 1, arc: arcs.1 }, orientation };
    quotient_space(disk_union([d1, d2])?, &[id])
}

/// Identifies two disjoint boundary arcs of one disk.
pub fn self_glue(disk: Arc<DiskInstance>, arc1: [f64; 2], arc2: [f64; 2], orientation: Orientation) -> Result<GluedSpace> {
    ensure!(!overlaps(arc1, arc2), InvalidSchema, "arcs {arc1:?} and {arc2:?} overlap");
    let id = Identification { a: ArcRef { piece: 0, arc: arc1 }, b: ArcRef { piece: 0, arc: arc2 }, orientation };
    quotient_space(disk_union([disk])?, &[id])
}

/// Square `[0,1]×[-1,1]` as two Euclidean halves glued along `y = 0`, with
/// and without the extra segment `[0,1/2]` attached by `t ↦ (2t, 0)`.
#[derive(Clone, Debug)]
pub struct FlatCounterexample {
    pub m: usize,
    /// Halves plus segment.
    pub glued: GluedSpace,
    /// Halves only.
    pub plain: GluedSpace,
    /// Interface vertex of the upper half at `x = i/m`.
    pub axis: Vec<usize>,
    pub segment: std::ops::Range<usize>,
}

/// One `(x, y)` pair on the axis with glued and plain distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPair {
    pub x: f64,
    pub y: f64,
    pub glued: f64,
    pub plain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatReport {
    pub m: usize,
    pub min_separation: f64,
    pub pairs: Vec<FlatPair>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_mean: f64,
}

fn half(m: usize, sign: f64) -> (Piece, Vec<f64>, Vec<BoundaryVertex>) {
    let rows = m / 16 + 1;
    let mut pts = Vec::with_capacity((m + 1) * (rows + 1));
    for j in 0..=rows {
        for i in 0..=m {
            pts.push([i as f64 / m as f64, sign * j as f64 / rows as f64]);
        }
    }
    let area = vec![1.0 / pts.len() as f64; pts.len()];
    let boundary = (0..=m).map(|i| BoundaryVertex { vertex: i, coord: i as f64 / m as f64 }).collect();
    (Piece::Points(pts), area, boundary)
}

/// Builds the flat counterexample on an `m`-column grid.
pub fn flat_counterexample(m: usize) -> Result<FlatCounterexample> {
    ensure!(m >= 8, InvalidParameter, "m must be ≥ 8");
    let mut base = FiniteGeodesicSpace::new();
    for sign in [1.0, -1.0] {
        let (piece, area, boundary) = half(m, sign);
        base.add_piece(piece, area, boundary)?;
    }
    base.note(format!("flat square [0,1]×[-1,1], {m} columns"));
    let axis_id = Identification {
        a: ArcRef { piece: 0, arc: [0.0, 1.0] },
        b: ArcRef { piece: 1, arc: [0.0, 1.0] },
        orientation: Orientation::Same,
    };
    let plain = quotient_space(base.clone(), &[axis_id])?;

    let mut space = plain.space.clone();
    let h = 1.0 / (2 * m) as f64;
    let path: Vec<Vec<(u32, f64)>> = (0..=m)
        .map(|k| {
            let mut e = Vec::new();
            if k > 0 {
                e.push(((k - 1) as u32, h));
            }
            if k < m {
                e.push(((k + 1) as u32, h));
            }
            e
        })
        .collect();
    let boundary = (0..=m).map(|k| BoundaryVertex { vertex: k, coord: k as f64 * h }).collect();
    let sp = space.add_piece(Piece::Graph(path), vec![0.0; m + 1], boundary)?;
    let segment = space.piece_range(sp);
    for k in 0..=m {
        // t = k/(2m) ↦ (k/m, 0)
        space.link(space.vertex(sp, k), space.vertex(0, k))?;
    }
    space.note("segment [0,1/2] attached by t ↦ (2t, 0)");
    let glued = GluedSpace { space, interface: plain.interface.clone(), identifications: plain.identifications.clone() };
    let axis = (0..=m).map(|i| plain.space.vertex(0, i)).collect();
    Ok(FlatCounterexample { m, glued, plain, axis, segment })
}

impl FlatCounterexample {
    /// Axis distances for all pairs among `sources` (as fractions of `m`)
    /// and every axis point at least `min_separation` away.
    pub fn report(&self, sources: usize, min_separation: f64) -> Result<FlatReport> {
        ensure!(sources >= 2, InvalidParameter, "need at least two sources");
        let m = self.m;
        let idx: Vec<usize> = (0..sources).map(|s| s * m / (sources - 1)).collect();
        let src: Vec<usize> = idx.iter().map(|&i| self.axis[i]).collect();
        let glued = self.glued.space.distances_from_many(&src, f64::INFINITY)?;
        let plain = self.plain.space.distances_from_many(&src, f64::INFINITY)?;
        let mut pairs = Vec::new();
        for (k, &i) in idx.iter().enumerate() {
            for &j in &idx {
                let (x, y) = (i as f64 / m as f64, j as f64 / m as f64);
                if j > i && (x - y).abs() >= min_separation - 1e-12 {
                    let v = self.axis[j];
                    pairs.push(FlatPair { x, y, glued: glued[k][v], plain: plain[k][v] });
                }
            }
        }
        ensure!(!pairs.is_empty(), InvalidParameter, "no pairs at separation ≥ {min_separation}");
        let ratios: Vec<f64> = pairs.iter().map(|p| p.glued / p.plain).collect();
        Ok(FlatReport {
            m,
            min_separation,
            ratio_min: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratio_max: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ratio_mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
            pairs,
        })
    }
}

#[cfg(test)]
mod tests;
