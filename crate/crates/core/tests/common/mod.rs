//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use chrono::{TimeZone, Utc};
use orbitfed::constellation::{SatId, TimeGrid};
use orbitfed::netgraph::{FlowNetwork, GsPsEdge, IslEdge, SglEdge, StaticSnapshots, TopologySnapshot};
use rand::Rng;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn bundled_scenarios() -> Vec<PathBuf> {
    ["walker_80_4_1.scn", "walker_160_4_1.scn", "walker_200_10_1.scn"].map(scenario_path).to_vec()
}

#[derive(Debug, Clone, Copy)]
pub struct UniformLinks {
    pub intra_rate: f64,
    pub intra_distance: f64,
    pub inter_rate: f64,
    pub inter_distance: f64,
    /// Rate of the SGL from every satellite to station 1.
    pub sgl_rate: f64,
}

/// Identical snapshots: rings, straight ladders between adjacent planes, and
/// every satellite always connected to one station.
pub fn uniform_snapshots(planes: usize, n: usize, steps: usize, l: UniformLinks) -> StaticSnapshots {
    let grid = TimeGrid::new(Utc.with_ymd_and_hms(2020, 9, 24, 16, 0, 0).unwrap(), 60.0, steps).unwrap();
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    let mut sgl = Vec::new();
    for p in 1..=planes {
        if n > 1 {
            let len = if n == 2 { 1 } else { n };
            for s in 1..=len {
                intra.push(IslEdge {
                    a: SatId::new(p, s),
                    b: SatId::new(p, s % n + 1),
                    distance_m: l.intra_distance,
                    rate_bps: l.intra_rate,
                });
            }
        }
        for s in 1..=n {
            if p < planes {
                inter.push(IslEdge {
                    a: SatId::new(p, s),
                    b: SatId::new(p + 1, s),
                    distance_m: l.inter_distance,
                    rate_bps: l.inter_rate,
                });
            }
            sgl.push(SglEdge { sat: SatId::new(p, s), gs_id: 1, slant_range_m: 1e6, rate_bps: l.sgl_rate });
        }
    }
    let snapshots = (0..steps)
        .map(|step| TopologySnapshot {
            step,
            planes,
            sats_per_plane: n,
            intra_orbit_edges: intra.clone(),
            inter_orbit_edges: inter.clone(),
            sgl_edges: sgl.clone(),
            gs_ps_edges: vec![GsPsEdge { gs_id: 1, rate_bps: None }],
        })
        .collect();
    StaticSnapshots { grid, snapshots }
}

/// Random network on `vertices` nodes with source 0, sink `vertices - 1`,
/// at most `max_edges` edges and integer capacities in `0..=max_cap`.
pub fn random_flow_network(rng: &mut impl Rng, vertices: usize, max_edges: usize, max_cap: u32) -> FlowNetwork {
    let mut net = FlowNetwork::with_vertices(vertices, 0, vertices - 1);
    let edges = rng.random_range(1..=max_edges);
    for _ in 0..edges {
        let from = rng.random_range(0..vertices);
        let mut to = rng.random_range(0..vertices);
        if to == from {
            to = (to + 1) % vertices;
        }
        net.add_edge(from, to, rng.random_range(0..=max_cap) as f64).unwrap();
    }
    net
}

/// Maximum flow by enumerating every integer flow assignment.
pub fn brute_force_max_flow(net: &FlowNetwork) -> f64 {
    let caps: Vec<u32> = net.edges.iter().map(|e| e.capacity as u32).collect();
    let mut flow = vec![0u32; caps.len()];
    let mut best = 0i64;
    loop {
        let mut balance = vec![0i64; net.vertex_count()];
        for (e, &f) in net.edges.iter().zip(&flow) {
            balance[e.from] -= f as i64;
            balance[e.to] += f as i64;
        }
        let conserved = (0..net.vertex_count()).filter(|&v| v != net.source && v != net.sink).all(|v| balance[v] == 0);
        if conserved {
            best = best.max(balance[net.sink]);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == flow.len() {
                return best as f64;
            }
            if flow[i] < caps[i] {
                flow[i] += 1;
                break;
            }
            flow[i] = 0;
            i += 1;
        }
    }
}

/// Minimum s-t cut by enumerating every vertex bipartition.
pub fn brute_force_min_cut(net: &FlowNetwork) -> f64 {
    let inner: Vec<usize> = (0..net.vertex_count()).filter(|&v| v != net.source && v != net.sink).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << inner.len()) {
        let mut side = vec![false; net.vertex_count()];
        side[net.source] = true;
        for (k, &v) in inner.iter().enumerate() {
            side[v] = mask & (1 << k) != 0;
        }
        let cut: f64 = net.edges.iter().filter(|e| side[e.from] && !side[e.to]).map(|e| e.capacity).sum();
        best = best.min(cut);
    }
    best
}

/// Random connected undirected graph with integer weights in `1..=20`.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: usize) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(1..=20) as f64));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a, b, rng.random_range(1..=20) as f64));
        }
    }
    edges
}

/// Dijkstra from every source, via petgraph.
pub fn dijkstra_all(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    use petgraph::graph::{NodeIndex, UnGraph};
    let mut g = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for &(a, b, w) in edges {
        g.add_edge(nodes[a], nodes[b], w);
    }
    (0..n)
        .map(|s| {
            let d = petgraph::algo::dijkstra(&g, nodes[s], None, |e| *e.weight());
            (0..n).map(|t| d.get(&nodes[t]).copied().unwrap_or(f64::INFINITY)).collect()
        })
        .collect()
}

/// Least-squares R^2 of `y` against `x`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Minimal scenario text with one station at Beijing.
pub fn scenario_toml(total_sats: usize, planes: usize, phase_deg: f64, steps: usize) -> String {
    format!(
        r#"
seed = 1

[constellation]
total_sats = {total_sats}
planes = {planes}
phase_offset_deg = {phase_deg:?}
altitude_km = 590.0
inclination_deg = 90.0

[time]
epoch = "2020-09-24T16:00:00Z"
steps = {steps}

[[ground_stations]]
id = 1
latitude_deg = 40.0
longitude_deg = 116.4
min_elevation_deg = 10.0

[sgl]
tx_power_dbm = 50.0
tx_gain_dbi = 35.0
rx_gain_dbi = 35.0
carrier_frequency_hz = 20e9
bandwidth_hz = 250e6
noise_power_w = 1.5e-9
"#
    )
}
