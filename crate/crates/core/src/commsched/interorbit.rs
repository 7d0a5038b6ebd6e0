//! Minimum-latency inter-orbit head aggregation and the reverse broadcast.

use std::collections::BTreeSet;

use crate::constellation::SatId;
use crate::error::SimError;
use crate::linkbudget::SPEED_OF_LIGHT_M_S;
use crate::netgraph::{all_pairs_shortest, TopologySnapshot};

use super::ring::ring_broadcast_time;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub from: SatId,
    pub to: SatId,
    pub distance_m: f64,
    pub rate_bps: f64,
    pub propagation_s: f64,
    pub transmission_s: f64,
}

impl Hop {
    pub fn delay_s(&self) -> f64 {
        self.propagation_s + self.transmission_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterOrbitPath {
    /// Satellites visited, from plane 1 to plane P.
    pub sats: Vec<SatId>,
    pub hops: Vec<Hop>,
    /// Sum of `distance / rate` over the hops (the routing weight).
    pub weight: f64,
    pub total_time_s: f64,
}

impl InterOrbitPath {
    /// Planes touched by the path.
    pub fn planes(&self) -> BTreeSet<usize> {
        self.sats.iter().map(|s| s.plane).collect()
    }

    pub fn propagation_s(&self) -> f64 {
        self.hops.iter().map(|h| h.propagation_s).sum()
    }

    pub fn transmission_s(&self) -> f64 {
        self.hops.iter().map(|h| h.transmission_s).sum()
    }
}

fn hop(snap: &TopologySnapshot, from: SatId, to: SatId, z_bits: f64) -> Result<Hop, SimError> {
    let e = snap
        .isl_between(from, to)
        .ok_or_else(|| SimError::Topology(format!("no ISL between {from} and {to} at step {}", snap.step)))?;
    Ok(Hop {
        from,
        to,
        distance_m: e.distance_m,
        rate_bps: e.rate_bps,
        propagation_s: e.distance_m / SPEED_OF_LIGHT_M_S,
        transmission_s: z_bits / e.rate_bps,
    })
}

/// Planes reachable from plane 1 through the ISL graph.
fn reachable_planes(snap: &TopologySnapshot) -> BTreeSet<usize> {
    let n = snap.sat_count();
    let mut adj = vec![Vec::new(); n];
    for e in snap.isl_edges() {
        let (a, b) = (snap.sat_index(e.a), snap.sat_index(e.b));
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..snap.sats_per_plane).collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).map(|i| snap.sat_at(i).plane).collect()
}

/// Shortest `distance / rate` path from any satellite of plane 1 to any
/// satellite of plane P, with store-and-forward delays `d / c + Z / r` per hop.
pub fn inter_orbit_aggregation_path(snap: &TopologySnapshot, z_bits: f64) -> Result<InterOrbitPath, SimError> {
    if !(z_bits >= 0.0) {
        return Err(SimError::InvalidInput(format!("payload must be non-negative, got {z_bits}")));
    }
    if snap.planes <= 1 {
        return Ok(InterOrbitPath { sats: Vec::new(), hops: Vec::new(), weight: 0.0, total_time_s: 0.0 });
    }
    if let Some(e) = snap.isl_edges().find(|e| !(e.rate_bps > 0.0)) {
        return Err(SimError::Topology(format!("ISL {} - {} has non-positive rate", e.a, e.b)));
    }
    let matrix = all_pairs_shortest(snap, |e| e.distance_m / e.rate_bps)?;
    let n = snap.sats_per_plane;
    let last = (snap.planes - 1) * n;
    let mut best: Option<(f64, usize, usize)> = None;
    for src in 0..n {
        for dst in last..last + n {
            let d = matrix.dist(src, dst);
            if d.is_finite() && best.is_none_or(|(b, _, _)| d < b) {
                best = Some((d, src, dst));
            }
        }
    }
    let missing = |covered: &BTreeSet<usize>| -> Vec<usize> { (1..=snap.planes).filter(|p| !covered.contains(p)).collect() };
    let Some((weight, src, dst)) = best else {
        return Err(SimError::Coverage { missing: missing(&reachable_planes(snap)) });
    };
    let verts = matrix
        .path(src, dst)
        .ok_or_else(|| SimError::Topology("path reconstruction failed".into()))?;
    let sats: Vec<SatId> = verts.iter().map(|&v| snap.sat_at(v)).collect();
    let covered: BTreeSet<usize> = sats.iter().map(|s| s.plane).collect();
    let gaps = missing(&covered);
    if !gaps.is_empty() {
        return Err(SimError::Coverage { missing: gaps });
    }
    let hops = sats
        .windows(2)
        .map(|w| hop(snap, w[0], w[1], z_bits))
        .collect::<Result<Vec<_>, _>>()?;
    let total_time_s = hops.iter().map(Hop::delay_s).sum();
    Ok(InterOrbitPath { sats, hops, weight, total_time_s })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastTime {
    /// Reverse traversal of the aggregation path.
    pub inter_orbit_s: f64,
    /// Slowest per-orbit ring broadcast of the global head.
    pub intra_orbit_s: f64,
}

impl BroadcastTime {
    pub fn total_s(&self) -> f64 {
        self.inter_orbit_s + self.intra_orbit_s
    }
}

/// Sends the global head back along the reversed path, then around every
/// ring in parallel.
pub fn global_broadcast_time(path: &InterOrbitPath, snap: &TopologySnapshot, z_bits: f64) -> Result<BroadcastTime, SimError> {
    let mut inter_orbit_s = 0.0;
    for w in path.sats.windows(2).rev() {
        inter_orbit_s += hop(snap, w[1], w[0], z_bits)?.delay_s();
    }
    let mut intra_orbit_s: f64 = 0.0;
    if snap.sats_per_plane > 1 {
        for plane in 1..=snap.planes {
            let rate = snap
                .ring_rate(plane)
                .ok_or_else(|| SimError::Topology(format!("plane {plane} has no intra-orbit links")))?;
            intra_orbit_s = intra_orbit_s.max(ring_broadcast_time(snap.sats_per_plane, z_bits, rate)?);
        }
    }
    Ok(BroadcastTime { inter_orbit_s, intra_orbit_s })
}
