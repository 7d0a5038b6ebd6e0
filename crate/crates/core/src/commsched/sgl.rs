//! Topology-aware satellite-ground transfer scheduling.
//!
//! Every grid step is a slice. In each slice every unfinished group (an orbit
//! whose satellites all hold the same data, or a single satellite) gets a
//! flow network over its visible SGLs and ships as much of its remaining
//! fraction as the max flow allows.

use crate::constellation::SatId;
use crate::error::SimError;
use crate::netgraph::{build_group_flow_network, SnapshotSource, TopologySnapshot};

/// Residual fraction treated as fully delivered.
pub const COMPLETION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Satellites to the parameter server.
    Up,
    /// Parameter server to satellites.
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferGroup {
    pub label: String,
    pub holders: Vec<SatId>,
    pub bits: f64,
    /// Earliest time (seconds past the epoch) the group may transmit.
    pub start_s: f64,
}

impl TransferGroup {
    /// All satellites of `plane`.
    pub fn orbit(plane: usize, sats_per_plane: usize, bits: f64, start_s: f64) -> Self {
        Self {
            label: format!("orbit {plane}"),
            holders: (1..=sats_per_plane).map(|s| SatId::new(plane, s)).collect(),
            bits,
            start_s,
        }
    }

    pub fn satellite(sat: SatId, bits: f64, start_s: f64) -> Self {
        Self { label: sat.to_string(), holders: vec![sat], bits, start_s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAssignment {
    /// Grid step of the slice.
    pub slice: usize,
    pub group: usize,
    pub sat: SatId,
    pub gs_id: usize,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionPlan {
    pub direction: Direction,
    pub assignments: Vec<LinkAssignment>,
    /// Per group: `(slice, residual fraction after the slice)`.
    pub residual_trace: Vec<Vec<(usize, f64)>>,
    /// Per group: slice in which the last bit was sent.
    pub completion_step: Vec<usize>,
    /// Per group: completion time in seconds past the epoch.
    pub completion_s: Vec<f64>,
}

impl TransmissionPlan {
    /// Latest completion over all groups.
    pub fn finish_s(&self) -> f64 {
        self.completion_s.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Station-to-PS rate available to each group at one slice. A finite station
/// rate is split across groups in proportion to the SGL rate each group has
/// into that station.
fn station_shares(snap: &TopologySnapshot, groups: &[&TransferGroup]) -> Vec<Vec<(usize, Option<f64>)>> {
    let mut shares = vec![Vec::new(); groups.len()];
    for gs in &snap.gs_ps_edges {
        let into: Vec<f64> = groups
            .iter()
            .map(|g| {
                snap.sgl_edges
                    .iter()
                    .filter(|e| e.gs_id == gs.gs_id && g.holders.contains(&e.sat))
                    .map(|e| e.rate_bps)
                    .sum()
            })
            .collect();
        let total: f64 = into.iter().sum();
        for (i, share) in shares.iter_mut().enumerate() {
            let rate = gs.rate_bps.map(|r| if total > 0.0 { r * into[i] / total } else { r });
            share.push((gs.gs_id, rate));
        }
    }
    shares
}

/// Schedules the transfer of every group over the time-varying SGLs.
///
/// A group completes in the first slice where its residual fraction drops
/// to [`COMPLETION_EPS`] or below; its completion time is interpolated
/// inside that slice by the fraction of the slice's capacity it needed.
pub fn sgl_transfer(topology: &impl SnapshotSource, groups: &[TransferGroup], direction: Direction) -> Result<TransmissionPlan, SimError> {
    let grid = topology.grid();
    let step_s = grid.step_s();
    let mut residual = vec![1.0f64; groups.len()];
    let mut done = vec![false; groups.len()];
    let mut completion_s = vec![0.0; groups.len()];
    let mut completion_step = vec![0usize; groups.len()];
    let mut trace = vec![Vec::new(); groups.len()];
    let mut assignments = Vec::new();

    for (i, g) in groups.iter().enumerate() {
        if !(g.bits >= 0.0) || !g.start_s.is_finite() {
            return Err(SimError::InvalidInput(format!("group {} has invalid volume or start", g.label)));
        }
        if g.bits == 0.0 {
            done[i] = true;
            residual[i] = 0.0;
            completion_s[i] = g.start_s;
            completion_step[i] = grid.step_at(g.start_s).unwrap_or(grid.steps());
        }
    }

    let first = groups
        .iter()
        .filter(|g| g.bits > 0.0)
        .map(|g| (g.start_s.max(0.0) / step_s).floor() as usize)
        .min()
        .unwrap_or(grid.steps());

    for step in first..grid.steps() {
        if done.iter().all(|&d| d) {
            break;
        }
        let slice_start = grid.time_of(step);
        let slice_end = slice_start + step_s;
        let active: Vec<usize> = (0..groups.len()).filter(|&i| !done[i] && groups[i].start_s < slice_end).collect();
        if active.is_empty() {
            continue;
        }
        let snap = topology.snapshot(step)?;
        if snap.sgl_edges.is_empty() {
            for &i in &active {
                trace[i].push((step, residual[i]));
            }
            continue;
        }
        let active_groups: Vec<&TransferGroup> = active.iter().map(|&i| &groups[i]).collect();
        let shares = station_shares(snap, &active_groups);
        for (k, &i) in active.iter().enumerate() {
            let g = &groups[i];
            let begin = slice_start.max(g.start_s);
            let duration = slice_end - begin;
            let share = &shares[k];
            let cap = |gs: usize| share.iter().find(|(id, _)| *id == gs).and_then(|(_, r)| *r);
            let fnet = build_group_flow_network(snap, &g.holders, residual[i], duration, g.bits, cap)?;
            let flow = fnet.net.max_flow();
            let sent = flow.max_flow_value.min(residual[i]);
            for &(edge, sat, gs_id) in &fnet.sgl_links {
                let f = flow.edge_flows[edge];
                if f > 0.0 {
                    assignments.push(LinkAssignment { slice: step, group: i, sat, gs_id, bits: f * g.bits });
                }
            }
            if residual[i] - sent <= COMPLETION_EPS {
                let capacity = build_group_flow_network(snap, &g.holders, f64::INFINITY, duration, g.bits, cap)?
                    .net
                    .max_flow()
                    .max_flow_value;
                let used = if capacity > 0.0 { (residual[i] / capacity).min(1.0) } else { 1.0 };
                completion_s[i] = begin + duration * used;
                completion_step[i] = step;
                residual[i] = 0.0;
                done[i] = true;
            } else {
                residual[i] -= sent;
            }
            trace[i].push((step, residual[i]));
        }
    }

    if !done.iter().all(|&d| d) {
        let unfinished = groups
            .iter()
            .zip(&residual)
            .zip(&done)
            .filter(|(_, d)| !**d)
            .map(|((g, r), _)| format!("{} ({:.3}% left)", g.label, r * 100.0))
            .collect();
        return Err(SimError::NonCompletion { horizon_s: grid.horizon_s(), unfinished });
    }
    Ok(TransmissionPlan { direction, assignments, residual_trace: trace, completion_step, completion_s })
}
