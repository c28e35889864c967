use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiskInstance;
use crate::error::ensure;
use crate::Result;

/// Sentinel for "no path" (and for vertices beyond a search cutoff).
pub const UNREACHABLE: f64 = f64::INFINITY;

/// Largest vertex count for which full distance matrices are materialized.
pub const MATRIX_CAP: usize = 1 << 10;

/// Largest class count accepted for the complete contracted graph of a disk.
pub const DEFAULT_EDGE_CAP: usize = 1 << 14;

/// Building block of a [`FiniteGeodesicSpace`]: a finite metric graph with
/// implicit or explicit edges.
#[derive(Clone, Debug)]
pub enum Piece {
    /// Complete graph over zero classes with contracted `d_Z` weights.
    Disk(Arc<DiskInstance>),
    /// Complete graph with Euclidean weights.
    Points(Vec<[f64; 2]>),
    /// Sparse weighted graph, adjacency lists.
    Graph(Vec<Vec<(u32, f64)>>),
    /// Dense symmetric weight matrix, row-major.
    Matrix { n: usize, weights: Vec<f64> },
}

impl Piece {
    pub fn len(&self) -> usize {
        match self {
            Piece::Disk(d) => d.n_classes(),
            Piece::Points(p) => p.len(),
            Piece::Graph(g) => g.len(),
            Piece::Matrix { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Direct edge weight, `UNREACHABLE` when absent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        match self {
            Piece::Disk(d) => d.class_edge(u, v),
            Piece::Points(p) => euclid(p[u], p[v]),
            Piece::Graph(g) => {
                g[u].iter().filter(|e| e.0 as usize == v).map(|e| e.1).fold(UNREACHABLE, f64::min)
            }
            Piece::Matrix { n, weights } => weights[u * n + v],
        }
    }

    fn relax(&self, u: usize, scratch: &mut Vec<f64>, mut visit: impl FnMut(usize, f64)) {
        match self {
            Piece::Disk(d) => d.relax_class(u, scratch, visit),
            Piece::Points(p) => {
                let pu = p[u];
                for (v, &pv) in p.iter().enumerate() {
                    visit(v, euclid(pu, pv));
                }
            }
            Piece::Graph(g) => {
                for &(v, w) in &g[u] {
                    visit(v as usize, w);
                }
            }
            Piece::Matrix { n, weights } => {
                for (v, &w) in weights[u * n..(u + 1) * n].iter().enumerate() {
                    visit(v, w);
                }
            }
        }
    }
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// A vertex on a piece boundary with its boundary-length coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVertex {
    pub vertex: usize,
    pub coord: f64,
}

/// Disjoint union of pieces plus zero-length identification edges; distances
/// are shortest paths, i.e. the chain infimum of the quotient.
#[derive(Clone, Debug, Default)]
pub struct FiniteGeodesicSpace {
    pieces: Vec<Piece>,
    offsets: Vec<usize>,
    links: Vec<Vec<u32>>,
    area: Vec<f64>,
    boundary: Vec<Vec<BoundaryVertex>>,
    mask: Option<Vec<bool>>,
    provenance: Vec<String>,
}

/// Single-source result: distances and shortest-path tree.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortestPaths {
    pub source: usize,
    pub cutoff: f64,
    pub dist: Vec<f64>,
    pred: Vec<u32>,
}

const NO_PRED: u32 = u32::MAX;

impl ShortestPaths {
    /// Vertex chain `source → t`, or `None` if `t` was not reached.
    pub fn path(&self, t: usize) -> Option<Vec<usize>> {
        if self.dist[t] == UNREACHABLE {
            return None;
        }
        let mut out = vec![t];
        let mut v = t;
        while self.pred[v] as usize != v {
            v = self.pred[v] as usize;
            out.push(v);
        }
        out.reverse();
        Some(out)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FiniteGeodesicSpace {
    pub fn new() -> Self {
        Self { offsets: vec![0], ..Default::default() }
    }

    /// Single-disk space over its zero classes, boundary = `{T_r}` classes.
    pub fn from_disk(disk: Arc<DiskInstance>) -> Result<Self> {
        Self::from_disk_capped(disk, DEFAULT_EDGE_CAP)
    }

    pub fn from_disk_capped(disk: Arc<DiskInstance>, cap: usize) -> Result<Self> {
        let mut s = Self::new();
        s.add_disk(disk, cap)?;
        Ok(s)
    }

    /// Appends a disk piece and returns its piece id.
    pub fn add_disk(&mut self, disk: Arc<DiskInstance>, cap: usize) -> Result<usize> {
        let k = disk.n_classes();
        ensure!(k <= cap, ResourceLimit, "{k} classes exceed the all-pairs edge cap {cap}");
        let area = disk.class_area().to_vec();
        let boundary = disk.boundary().iter().map(|b| BoundaryVertex { vertex: disk.class_of(b.index), coord: b.r }).collect();
        let note = format!(
            "disk n={} classes={} a={} ℓ={} seed={}:{}",
            disk.len(),
            k,
            disk.area(),
            disk.perimeter(),
            disk.params().seed.seed,
            disk.params().seed.stream
        );
        let id = self.add_piece(Piece::Disk(disk), area, boundary)?;
        self.provenance.push(note);
        Ok(id)
    }

    /// Appends a piece; `boundary` uses piece-local vertex ids.
    pub fn add_piece(&mut self, piece: Piece, area: Vec<f64>, boundary: Vec<BoundaryVertex>) -> Result<usize> {
        let n = piece.len();
        ensure!(area.len() == n, InvalidParameter, "area weights: {} for {} vertices", area.len(), n);
        ensure!(boundary.iter().all(|b| b.vertex < n), InvalidParameter, "boundary vertex out of range");
        if let Piece::Graph(g) = &piece {
            ensure!(
                g.iter().flatten().all(|&(v, w)| (v as usize) < n && w >= 0.0),
                InvalidParameter,
                "graph edge out of range or negative"
            );
        }
        let base = self.len();
        self.links.resize(base + n, Vec::new());
        self.area.extend(area);
        if let Some(mask) = &mut self.mask {
            mask.resize(base + n, true);
        }
        self.boundary.push(boundary);
        self.pieces.push(piece);
        self.offsets.push(base + n);
        Ok(self.pieces.len() - 1)
    }

    /// Identifies two vertices (zero-length edge).
    pub fn link(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.len();
        ensure!(u < n && v < n, InvalidParameter, "link ({u}, {v}) out of range");
        if u != v && !self.links[u].contains(&(v as u32)) {
            self.links[u].push(v as u32);
            self.links[v].push(u as u32);
        }
        Ok(())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.provenance.push(line.into());
    }

    pub fn len(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Global id of a piece-local vertex.
    pub fn vertex(&self, piece: usize, local: usize) -> usize {
        self.offsets[piece] + local
    }

    pub fn piece_range(&self, piece: usize) -> std::ops::Range<usize> {
        self.offsets[piece]..self.offsets[piece + 1]
    }

    pub fn piece_of(&self, v: usize) -> usize {
        self.offsets.partition_point(|&o| o <= v) - 1
    }

    pub fn area_weight(&self) -> &[f64] {
        &self.area
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    /// Boundary of a piece in global vertex ids, ordered by coordinate.
    pub fn boundary(&self, piece: usize) -> Vec<BoundaryVertex> {
        let off = self.offsets[piece];
        self.boundary[piece].iter().map(|b| BoundaryVertex { vertex: b.vertex + off, coord: b.coord }).collect()
    }

    pub fn links(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.links[v].iter().map(|&u| u as usize)
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    fn allowed(&self, v: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[v])
    }

    /// Direct edge weight between two vertices (0 for identified pairs).
    pub fn edge_weight(&self, u: usize, v: usize) -> f64 {
        if u == v || self.links[u].contains(&(v as u32)) {
            return 0.0;
        }
        let (pu, pv) = (self.piece_of(u), self.piece_of(v));
        if pu != pv {
            return UNREACHABLE;
        }
        let off = self.offsets[pu];
        self.pieces[pu].weight(u - off, v - off)
    }

    /// Same space, but paths may only use vertices of `subset`.
    pub fn internal_metric(&self, subset: &[usize]) -> Result<Self> {
        ensure!(!subset.is_empty(), InvalidParameter, "subset must be nonempty");
        let n = self.len();
        let mut keep = vec![false; n];
        for &v in subset {
            ensure!(v < n, InvalidParameter, "vertex {v} out of range");
            keep[v] = self.allowed(v);
        }
        let mut out = self.clone();
        out.mask = Some(keep);
        out.provenance.push(format!("internal metric on {} vertices", subset.len()));
        Ok(out)
    }

    /// Dijkstra from `source`; vertices farther than `cutoff` stay `UNREACHABLE`.
    ///
    /// Among equal-length paths the predecessor with the smallest index wins.
    pub fn shortest_paths(&self, source: usize, cutoff: f64) -> Result<ShortestPaths> {
        self.shortest_paths_multi(&[source], cutoff)
    }

    /// Distance to the nearest of several sources (e.g. a boundary arc).
    pub fn shortest_paths_multi(&self, sources: &[usize], cutoff: f64) -> Result<ShortestPaths> {
        self.dijkstra(sources, cutoff, None)
    }

    /// `d(s, t)`, stopping as soon as `t` is settled.
    pub fn distance(&self, s: usize, t: usize) -> Result<f64> {
        ensure!(t < self.len(), InvalidParameter, "vertex {t} out of range");
        Ok(self.dijkstra(&[s], UNREACHABLE, Some(t))?.dist[t])
    }

    fn dijkstra(&self, sources: &[usize], cutoff: f64, target: Option<usize>) -> Result<ShortestPaths> {
        let n = self.len();
        ensure!(!sources.is_empty(), InvalidParameter, "no sources");
        let mut dist = vec![UNREACHABLE; n];
        let mut pred = vec![NO_PRED; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let mut scratch = Vec::new();
        for &source in sources {
            ensure!(source < n, InvalidParameter, "source {source} out of range for {n} vertices");
            ensure!(self.allowed(source), InvalidParameter, "source {source} lies outside the subset");
            dist[source] = 0.0;
            pred[source] = source as u32;
            heap.push(Entry(0.0, source as u32));
        }
        let source = sources[0];
        while let Some(Entry(du, u)) = heap.pop() {
            let u = u as usize;
            if done[u] || du > dist[u] {
                continue;
            }
            if du > cutoff {
                break;
            }
            done[u] = true;
            if target == Some(u) {
                break;
            }
            let mut update = |v: usize, w: f64, dist: &mut [f64], heap: &mut BinaryHeap<Entry>| {
                if done[v] || !self.allowed(v) {
                    return;
                }
                let nd = du + w;
                if nd < dist[v] || (nd == dist[v] && (u as u32) < pred[v]) {
                    if nd < dist[v] {
                        heap.push(Entry(nd, v as u32));
                    }
                    dist[v] = nd;
                    pred[v] = u as u32;
                }
            };
            for &v in &self.links[u] {
                update(v as usize, 0.0, &mut dist, &mut heap);
            }
            let p = self.piece_of(u);
            let off = self.offsets[p];
            self.pieces[p].relax(u - off, &mut scratch, |v, w| update(v + off, w, &mut dist, &mut heap));
        }
        for v in 0..n {
            if !done[v] {
                dist[v] = UNREACHABLE;
                pred[v] = NO_PRED;
            }
        }
        Ok(ShortestPaths { source, cutoff, dist, pred })
    }

    pub fn distances_from(&self, source: usize) -> Result<Vec<f64>> {
        Ok(self.shortest_paths(source, UNREACHABLE)?.dist)
    }

    /// Independent single-source runs, in parallel.
    pub fn distances_from_many(&self, sources: &[usize], cutoff: f64) -> Result<Vec<Vec<f64>>> {
        sources.par_iter().map(|&s| self.shortest_paths(s, cutoff).map(|p| p.dist)).collect()
    }

    /// All-pairs distances, row-major; only for small spaces.
    pub fn distance_matrix(&self) -> Result<Vec<f64>> {
        let n = self.len();
        ensure!(n <= MATRIX_CAP, ResourceLimit, "{n} vertices exceed the matrix cap {MATRIX_CAP}");
        let all: Vec<usize> = (0..n).collect();
        Ok(self.distances_from_many(&all, UNREACHABLE)?.concat())
    }

    /// `μ(B_δ(center))`: area weight of vertices at distance `< δ`.
    pub fn ball_area(&self, center: usize, delta: f64) -> Result<f64> {
        if delta <= 0.0 {
            return Ok(0.0);
        }
        let sp = self.shortest_paths(center, delta)?;
        Ok(sp.dist.iter().zip(&self.area).filter(|(d, _)| **d < delta).map(|(_, a)| a).sum())
    }

    /// Geodesic chain `s → t`. Contracted disk edges are expanded into chains
    /// of label-record classes of the same total length.
    pub fn geodesic(&self, s: usize, t: usize) -> Result<Option<Vec<usize>>> {
        ensure!(t < self.len(), InvalidParameter, "vertex {t} out of range");
        let Some(coarse) = self.shortest_paths(s, UNREACHABLE)?.path(t) else {
            return Ok(None);
        };
        let mut out = vec![coarse[0]];
        for w in coarse.windows(2) {
            let (u, v) = (w[0], w[1]);
            let p = self.piece_of(u);
            match &self.pieces[p] {
                Piece::Disk(d) if p == self.piece_of(v) && !self.links[u].contains(&(v as u32)) => {
                    let off = self.offsets[p];
                    out.extend(d.expand_edge(u - off, v - off).into_iter().skip(1).map(|c| c + off));
                }
                _ => out.push(v),
            }
        }
        Ok(Some(out))
    }

    /// Sum of direct edge weights along a chain.
    pub fn chain_length(&self, chain: &[usize]) -> f64 {
        chain.windows(2).map(|w| self.edge_weight(w[0], w[1])).sum()
    }
}
