//! All-pairs shortest paths (Floyd-Warshall) with path reconstruction.

use crate::error::SimError;

use super::snapshot::{IslEdge, TopologySnapshot};

#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    n: usize,
    dist: Vec<f64>,
    next_hop: Vec<Option<usize>>,
}

impl PathMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn next_hop(&self, i: usize, j: usize) -> Option<usize> {
        self.next_hop[i * self.n + j]
    }

    /// Vertex sequence of the shortest `i -> j` path, `None` if unreachable.
    pub fn path(&self, i: usize, j: usize) -> Option<Vec<usize>> {
        if i == j {
            return Some(vec![i]);
        }
        self.next_hop(i, j)?;
        let mut out = vec![i];
        let mut v = i;
        while v != j {
            v = self.next_hop(v, j)?;
            out.push(v);
            if out.len() > self.n {
                return None;
            }
        }
        Some(out)
    }
}

/// Floyd-Warshall over `n` vertices. Undirected edges are added in both
/// directions; parallel edges keep the lighter weight.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)], directed: bool) -> Result<PathMatrix, SimError> {
    let mut dist = vec![f64::INFINITY; n * n];
    let mut next_hop = vec![None; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
        next_hop[i * n + i] = Some(i);
    }
    let mut relax = |a: usize, b: usize, w: f64| {
        if w < dist[a * n + b] {
            dist[a * n + b] = w;
            next_hop[a * n + b] = Some(b);
        }
    };
    for &(a, b, w) in edges {
        if a >= n || b >= n {
            return Err(SimError::InvalidInput(format!("edge {a}-{b} outside {n} vertices")));
        }
        if !(w >= 0.0) {
            return Err(SimError::InvalidInput(format!("negative or NaN edge weight {w} on {a}-{b}")));
        }
        if a == b {
            continue;
        }
        relax(a, b, w);
        if !directed {
            relax(b, a, w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + dist[k * n + j];
                if cand < dist[i * n + j] {
                    dist[i * n + j] = cand;
                    next_hop[i * n + j] = next_hop[i * n + k];
                }
            }
        }
    }
    Ok(PathMatrix { n, dist, next_hop })
}

/// Shortest paths over the ISL graph of a snapshot (satellites only, in
/// `(plane, slot)` index order).
pub fn all_pairs_shortest(snap: &TopologySnapshot, weight: impl Fn(&IslEdge) -> f64) -> Result<PathMatrix, SimError> {
    let edges: Vec<(usize, usize, f64)> = snap
        .isl_edges()
        .map(|e| (snap.sat_index(e.a), snap.sat_index(e.b), weight(e)))
        .collect();
    floyd_warshall(snap.sat_count(), &edges, false)
}
