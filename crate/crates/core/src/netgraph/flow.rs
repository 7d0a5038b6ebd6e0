//! Maximum flow on small capacitated networks (Edmonds-Karp).

use std::collections::VecDeque;

use crate::constellation::SatId;
use crate::error::SimError;

use super::snapshot::TopologySnapshot;

/// Residual capacities at or below this are treated as saturated.
const RESIDUAL_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

/// What a flow-network vertex stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowVertex {
    SuperSource,
    Source,
    Satellite(SatId),
    GroundStation(usize),
    Sink,
    Plain(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub vertices: Vec<FlowVertex>,
    pub edges: Vec<FlowEdge>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub max_flow_value: f64,
    /// Flow on each edge of the network, same order as `FlowNetwork::edges`.
    pub edge_flows: Vec<f64>,
}

impl FlowNetwork {
    /// Network over `n` unlabeled vertices.
    pub fn with_vertices(n: usize, source: usize, sink: usize) -> Self {
        Self { vertices: (0..n).map(FlowVertex::Plain).collect(), edges: Vec::new(), source, sink }
    }

    pub fn add_vertex(&mut self, v: FlowVertex) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, capacity: f64) -> Result<usize, SimError> {
        if from >= self.vertices.len() || to >= self.vertices.len() {
            return Err(SimError::InvalidInput(format!("edge {from}->{to} references a missing vertex")));
        }
        if !(capacity >= 0.0) {
            return Err(SimError::InvalidInput(format!("negative or NaN capacity {capacity}")));
        }
        self.edges.push(FlowEdge { from, to, capacity });
        Ok(self.edges.len() - 1)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Edmonds-Karp: repeatedly augment along a shortest residual path found
    /// by BFS. Adjacency follows edge insertion order, so results are
    /// deterministic for a given construction order.
    pub fn max_flow(&self) -> FlowResult {
        let n = self.vertices.len();
        // arc 2i is edge i forward, arc 2i+1 its reverse
        let mut residual: Vec<f64> = Vec::with_capacity(self.edges.len() * 2);
        let mut head: Vec<usize> = Vec::with_capacity(self.edges.len() * 2);
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            residual.push(e.capacity);
            head.push(e.to);
            residual.push(0.0);
            head.push(e.from);
            adj[e.from].push(2 * i);
            adj[e.to].push(2 * i + 1);
        }
        let mut value = 0.0;
        if self.source == self.sink {
            return FlowResult { max_flow_value: 0.0, edge_flows: vec![0.0; self.edges.len()] };
        }
        let mut via: Vec<Option<usize>> = vec![None; n];
        loop {
            via.iter_mut().for_each(|v| *v = None);
            let mut seen = vec![false; n];
            seen[self.source] = true;
            let mut queue = VecDeque::from([self.source]);
            while let Some(v) = queue.pop_front() {
                if v == self.sink {
                    break;
                }
                for &arc in &adj[v] {
                    let w = head[arc];
                    if !seen[w] && residual[arc] > RESIDUAL_EPS {
                        seen[w] = true;
                        via[w] = Some(arc);
                        queue.push_back(w);
                    }
                }
            }
            if !seen[self.sink] {
                break;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = self.sink;
            while let Some(arc) = via[v] {
                bottleneck = bottleneck.min(residual[arc]);
                v = head[arc ^ 1];
            }
            if !bottleneck.is_finite() {
                // an all-infinite path; nothing meaningful to report
                value = f64::INFINITY;
                break;
            }
            let mut v = self.sink;
            while let Some(arc) = via[v] {
                residual[arc] -= bottleneck;
                residual[arc ^ 1] += bottleneck;
                v = head[arc ^ 1];
            }
            value += bottleneck;
        }
        let edge_flows = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let f = residual[2 * i + 1];
                if e.capacity.is_finite() { f.min(e.capacity) } else { f }
            })
            .collect();
        FlowResult { max_flow_value: value, edge_flows }
    }

    /// Vertices reachable from the source in the residual graph of `flow`,
    /// and the capacity of the cut they define.
    pub fn min_cut(&self, flow: &FlowResult) -> (Vec<bool>, f64) {
        let n = self.vertices.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (e, f) in self.edges.iter().zip(&flow.edge_flows) {
            adj[e.from].push((e.to, e.capacity - f));
            adj[e.to].push((e.from, *f));
        }
        let mut reach = vec![false; n];
        reach[self.source] = true;
        let mut stack = vec![self.source];
        while let Some(v) = stack.pop() {
            for &(w, r) in &adj[v] {
                if !reach[w] && r > RESIDUAL_EPS {
                    reach[w] = true;
                    stack.push(w);
                }
            }
        }
        let cut = self.edges.iter().filter(|e| reach[e.from] && !reach[e.to]).map(|e| e.capacity).sum();
        (reach, cut)
    }
}

impl FlowResult {
    /// Largest absolute conservation imbalance over interior vertices, and
    /// whether every edge flow lies in `[0, capacity]`.
    pub fn conservation_error(&self, net: &FlowNetwork) -> (f64, bool) {
        let mut balance = vec![0.0; net.vertex_count()];
        let mut within = true;
        for (e, &f) in net.edges.iter().zip(&self.edge_flows) {
            balance[e.from] -= f;
            balance[e.to] += f;
            within &= f >= 0.0 && f <= e.capacity;
        }
        let worst = balance
            .iter()
            .enumerate()
            .filter(|(v, _)| *v != net.source && *v != net.sink)
            .map(|(_, b)| b.abs())
            .fold(0.0, f64::max);
        (worst, within)
    }
}

/// Flow network of one transfer group (an orbit, or a single satellite).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFlowNetwork {
    pub net: FlowNetwork,
    /// `(edge index, satellite, station)` for each satellite-ground link.
    pub sgl_links: Vec<(usize, SatId, usize)>,
    /// `(edge index, station)` for each station-to-sink link.
    pub gs_links: Vec<(usize, usize)>,
}

/// Builds the per-slice flow network for a group of satellites that all hold
/// the group's data.
///
/// The super-source edge caps total outflow at `remaining`; each holder may
/// serve any part of it. A satellite-ground link `l` has capacity
/// `slice_s * r_l / alpha_bits`, the fraction of the group's data it can carry
/// in the slice. `gs_capacity_bps(gs)` gives the station-to-PS rate available
/// to this group, `None` meaning unbounded.
pub fn build_group_flow_network(
    snap: &TopologySnapshot,
    holders: &[SatId],
    remaining: f64,
    slice_s: f64,
    alpha_bits: f64,
    gs_capacity_bps: impl Fn(usize) -> Option<f64>,
) -> Result<GroupFlowNetwork, SimError> {
    if !(alpha_bits > 0.0) {
        return Err(SimError::InvalidInput("group data volume must be positive".into()));
    }
    if !(remaining >= 0.0) {
        return Err(SimError::InvalidInput(format!("remaining fraction {remaining} is negative")));
    }
    let mut holders = holders.to_vec();
    holders.sort();
    let mut net = FlowNetwork { vertices: Vec::new(), edges: Vec::new(), source: 0, sink: 0 };
    let super_source = net.add_vertex(FlowVertex::SuperSource);
    let source = net.add_vertex(FlowVertex::Source);
    net.source = super_source;
    net.add_edge(super_source, source, remaining)?;

    let visible: Vec<SatId> = holders.iter().copied().filter(|h| snap.sgl_edges.iter().any(|e| e.sat == *h)).collect();
    let mut sat_vertex = Vec::with_capacity(visible.len());
    for &sat in &visible {
        let v = net.add_vertex(FlowVertex::Satellite(sat));
        net.add_edge(source, v, remaining)?;
        sat_vertex.push(v);
    }
    let mut gs_ids: Vec<usize> = snap
        .sgl_edges
        .iter()
        .filter(|e| visible.binary_search(&e.sat).is_ok())
        .map(|e| e.gs_id)
        .collect();
    gs_ids.sort_unstable();
    gs_ids.dedup();
    let gs_vertex: Vec<usize> = gs_ids.iter().map(|&g| net.add_vertex(FlowVertex::GroundStation(g))).collect();
    let sink = net.add_vertex(FlowVertex::Sink);
    net.sink = sink;

    let mut sgl_links = Vec::new();
    for (i, &sat) in visible.iter().enumerate() {
        let mut edges: Vec<_> = snap.sgl_edges.iter().filter(|e| e.sat == sat).collect();
        edges.sort_by_key(|e| e.gs_id);
        for e in edges {
            let g = gs_vertex[gs_ids.binary_search(&e.gs_id).expect("station collected above")];
            let idx = net.add_edge(sat_vertex[i], g, slice_s * e.rate_bps / alpha_bits)?;
            sgl_links.push((idx, sat, e.gs_id));
        }
    }
    let mut gs_links = Vec::new();
    for (j, &g) in gs_ids.iter().enumerate() {
        let cap = gs_capacity_bps(g).map_or(f64::INFINITY, |r| slice_s * r / alpha_bits);
        let idx = net.add_edge(gs_vertex[j], sink, cap)?;
        gs_links.push((idx, g));
    }
    Ok(GroupFlowNetwork { net, sgl_links, gs_links })
}

/// Flow network of orbit `plane`, whose satellites all hold the orbit's data.
pub fn build_flow_network(
    snap: &TopologySnapshot,
    plane: usize,
    remaining: f64,
    slice_s: f64,
    alpha_bits: f64,
) -> Result<GroupFlowNetwork, SimError> {
    let holders: Vec<SatId> = (1..=snap.sats_per_plane).map(|s| SatId::new(plane, s)).collect();
    build_group_flow_network(snap, &holders, remaining, slice_s, alpha_bits, |g| snap.gs_ps_rate(g))
}
