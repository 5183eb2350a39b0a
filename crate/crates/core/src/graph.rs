//! Yearly directed, weighted venue-transition graphs.
//!
//! An edge `(o, d)` carries the number of transitions from `o` to `d` whose
//! origin timestamp falls in the snapshot's calendar year. Self-loops are
//! kept as edges (they are real trips) but never count as neighbours.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::time::year_start;
use crate::ingest::{TransitionLog, VenueIdx, VenueTable};
use crate::par::{self, Exec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("venue {0:?} is not a node of the {1} snapshot")]
    UnknownNode(VenueIdx, i32),
}

/// Compressed adjacency: `offsets[v]..offsets[v + 1]` indexes `targets`.
#[derive(Debug, Clone, Default)]
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
    weights: Vec<u32>,
}

impl Csr {
    fn row(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v] as usize..self.offsets[v + 1] as usize
    }

    fn targets(&self, v: usize) -> &[u32] {
        &self.targets[self.row(v)]
    }

    fn weights(&self, v: usize) -> &[u32] {
        &self.weights[self.row(v)]
    }

    /// Builds rows from `(row, col, weight)` triples sorted by `(row, col)`.
    fn from_sorted(n: usize, triples: impl Iterator<Item = (u32, u32, u32)>) -> Self {
        let mut offsets = vec![0u32; n + 1];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for (r, c, w) in triples {
            offsets[r as usize + 1] += 1;
            targets.push(c);
            weights.push(w);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, targets, weights }
    }
}

/// Immutable graph for one calendar year. Node ids are venue indices of the
/// [`VenueTable`] the transitions were resolved against.
#[derive(Debug, Clone)]
pub struct SnapshotGraph {
    year: i32,
    nodes: Vec<VenueIdx>,
    present: Vec<bool>,
    out: Csr,
    inc: Csr,
    // Union of in- and out-neighbours, self excluded, sorted.
    nbrs: Csr,
    self_loops: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeDegrees {
    pub in_weight: u64,
    pub out_weight: u64,
    pub neighbor_count: usize,
}

/// Network properties of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphSummary {
    pub year: i32,
    pub nodes: usize,
    /// Distinct directed edges, self-loops excluded.
    pub edges: usize,
    pub mean_clustering: f64,
    pub mean_degree: f64,
}

/// Mean degree `2|E| / |V|`; zero for an empty graph.
pub fn mean_degree(nodes: usize, edges: usize) -> f64 {
    if nodes == 0 {
        0.0
    } else {
        2.0 * edges as f64 / nodes as f64
    }
}

/// Builds the snapshot for `year` from all transitions whose origin
/// timestamp lies in that calendar year.
pub fn build_snapshot(log: &TransitionLog, n_venues: usize, year: i32) -> SnapshotGraph {
    let (lo, hi) = (year_start(year), year_start(year + 1));
    let mut keys: Vec<u64> = log
        .transitions
        .iter()
        .filter(|t| t.t_origin >= lo && t.t_origin < hi)
        .map(|t| ((t.origin.0 as u64) << 32) | t.dest.0 as u64)
        .collect();
    keys.sort_unstable();
    SnapshotGraph::from_sorted_pairs(year, n_venues, &keys)
}

impl SnapshotGraph {
    fn from_sorted_pairs(year: i32, n: usize, keys: &[u64]) -> Self {
        let mut edges: Vec<(u32, u32, u32)> = Vec::new();
        for &k in keys {
            let (o, d) = ((k >> 32) as u32, k as u32);
            match edges.last_mut() {
                Some(e) if e.0 == o && e.1 == d => e.2 += 1,
                _ => edges.push((o, d, 1)),
            }
        }
        let mut present = vec![false; n];
        for &(o, d, _) in &edges {
            present[o as usize] = true;
            present[d as usize] = true;
        }
        let self_loops = edges.iter().filter(|e| e.0 == e.1).count();
        let out = Csr::from_sorted(n, edges.iter().copied());
        let mut rev: Vec<(u32, u32, u32)> = edges.iter().map(|&(o, d, w)| (d, o, w)).collect();
        rev.sort_unstable();
        let inc = Csr::from_sorted(n, rev.into_iter());

        let mut nb_triples = Vec::new();
        let mut merged = Vec::new();
        for v in 0..n {
            if !present[v] {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(out.targets(v));
            merged.extend_from_slice(inc.targets(v));
            merged.sort_unstable();
            merged.dedup();
            nb_triples.extend(merged.iter().filter(|&&u| u as usize != v).map(|&u| (v as u32, u, 0)));
        }
        let nbrs = Csr::from_sorted(n, nb_triples.into_iter());
        let nodes = (0..n).filter(|&v| present[v]).map(|v| VenueIdx(v as u32)).collect();
        SnapshotGraph { year, nodes, present, out, inc, nbrs, self_loops }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// Nodes in ascending venue order.
    pub fn nodes(&self) -> &[VenueIdx] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, v: VenueIdx) -> bool {
        self.present.get(v.get()).copied().unwrap_or(false)
    }

    /// Stored edges including self-loops.
    pub fn stored_edge_count(&self) -> usize {
        self.out.targets.len()
    }

    /// Distinct directed edges between different venues.
    pub fn edge_count(&self) -> usize {
        self.stored_edge_count() - self.self_loops
    }

    pub fn edges(&self) -> impl Iterator<Item = (VenueIdx, VenueIdx, u32)> + '_ {
        self.nodes.iter().flat_map(move |&o| {
            let r = self.out.row(o.get());
            self.out.targets[r.clone()].iter().zip(&self.out.weights[r]).map(move |(&d, &w)| (o, VenueIdx(d), w))
        })
    }

    pub fn weight(&self, origin: VenueIdx, dest: VenueIdx) -> Option<u32> {
        if !self.contains(origin) {
            return None;
        }
        let ts = self.out.targets(origin.get());
        ts.binary_search(&dest.0).ok().map(|i| self.out.weights(origin.get())[i])
    }

    pub fn total_weight(&self) -> u64 {
        self.out.weights.iter().map(|&w| w as u64).sum()
    }

    pub fn out_edges(&self, v: VenueIdx) -> impl Iterator<Item = (VenueIdx, u32)> + '_ {
        let r = if self.contains(v) { self.out.row(v.get()) } else { 0..0 };
        self.out.targets[r.clone()].iter().zip(&self.out.weights[r]).map(|(&d, &w)| (VenueIdx(d), w))
    }

    pub fn in_edges(&self, v: VenueIdx) -> impl Iterator<Item = (VenueIdx, u32)> + '_ {
        let r = if self.contains(v) { self.inc.row(v.get()) } else { 0..0 };
        self.inc.targets[r.clone()].iter().zip(&self.inc.weights[r]).map(|(&o, &w)| (VenueIdx(o), w))
    }

    /// Union of in- and out-neighbours, excluding `v` itself.
    pub fn neighbors(&self, v: VenueIdx) -> Result<impl Iterator<Item = VenueIdx> + '_, GraphError> {
        self.check(v)?;
        Ok(self.nbrs.targets(v.get()).iter().map(|&u| VenueIdx(u)))
    }

    fn check(&self, v: VenueIdx) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(v, self.year))
        }
    }

    pub fn node_degrees(&self, v: VenueIdx) -> Result<NodeDegrees, GraphError> {
        self.check(v)?;
        let i = v.get();
        Ok(NodeDegrees {
            in_weight: self.inc.weights(i).iter().map(|&w| w as u64).sum(),
            out_weight: self.out.weights(i).iter().map(|&w| w as u64).sum(),
            neighbor_count: self.nbrs.targets(i).len(),
        })
    }

    /// `C_i = L_i / (k_i (k_i - 1))` where `k_i` counts distinct neighbours
    /// and `L_i` counts directed edges among them; zero when `k_i < 2`.
    pub fn local_clustering(&self, v: VenueIdx) -> Result<f64, GraphError> {
        self.check(v)?;
        let mut mark = vec![u32::MAX; self.present.len()];
        Ok(self.clustering_with_marks(v.get(), &mut mark))
    }

    fn clustering_with_marks(&self, i: usize, mark: &mut [u32]) -> f64 {
        let nb = self.nbrs.targets(i);
        let k = nb.len();
        if k < 2 {
            return 0.0;
        }
        for &u in nb {
            mark[u as usize] = i as u32;
        }
        let mut links = 0u64;
        for &u in nb {
            for &w in self.out.targets(u as usize) {
                if w != u && mark[w as usize] == i as u32 {
                    links += 1;
                }
            }
        }
        links as f64 / (k as f64 * (k as f64 - 1.0))
    }

    /// Local clustering for every node, aligned with [`Self::nodes`].
    pub fn all_local_clustering(&self) -> Vec<f64> {
        self.all_local_clustering_with(Exec::default())
    }

    pub fn all_local_clustering_with(&self, exec: Exec) -> Vec<f64> {
        let n = self.present.len();
        par::map_range_init(
            exec,
            self.nodes.len(),
            || vec![u32::MAX; n],
            |mark, j| self.clustering_with_marks(self.nodes[j].get(), mark),
        )
    }

    pub fn summarize(&self) -> GraphSummary {
        self.summarize_with(&self.all_local_clustering())
    }

    /// Summary using a precomputed clustering vector (aligned with nodes).
    pub fn summarize_with(&self, clustering: &[f64]) -> GraphSummary {
        let nodes = self.node_count();
        let mean_clustering = if nodes == 0 { 0.0 } else { clustering.iter().sum::<f64>() / nodes as f64 };
        GraphSummary {
            year: self.year,
            nodes,
            edges: self.edge_count(),
            mean_clustering,
            mean_degree: mean_degree(nodes, self.edge_count()),
        }
    }

    /// Edge list as `origin,dest,weight` using venue ids.
    pub fn write_edge_list<W: Write>(&self, out: W, venues: &VenueTable) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["origin", "dest", "weight"])?;
        for (o, d, wt) in self.edges() {
            w.write_record([venues.get(o).id.as_str(), &venues.get(d).id, &wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
