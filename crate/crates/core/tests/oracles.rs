//! Solver outputs checked against independent brute-force and hand-computed
//! references.

mod common;

use approx::assert_relative_eq;
use common::*;
use orbitfed::commsched::{
    chunk_index, execute_allgather, execute_allreduce, inter_orbit_aggregation_path, ring_allreduce_schedule,
};
use orbitfed::constellation::{connection_windows, visible};
use orbitfed::fedsim::{RoundTiming, SimOptions, Simulation, Strategy, WorkloadModel};
use orbitfed::netgraph::{floyd_warshall, SnapshotSource, TopologySnapshot};
use orbitfed::scenario::Scenario;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn max_flow_matches_enumeration(seed in any::<u64>(), vertices in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_flow_network(&mut rng, vertices, 7, 3);
        let flow = net.max_flow();
        prop_assert_eq!(flow.max_flow_value, brute_force_max_flow(&net));
        prop_assert_eq!(flow.max_flow_value, brute_force_min_cut(&net));
        let (_, cut) = net.min_cut(&flow);
        prop_assert_eq!(cut, flow.max_flow_value);
        let (imbalance, within) = flow.conservation_error(&net);
        prop_assert!(imbalance <= 1e-12 && within);
    }

    #[test]
    fn floyd_warshall_matches_dijkstra(seed in any::<u64>(), n in 1usize..=25, extra in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_connected_graph(&mut rng, n, extra);
        let fw = floyd_warshall(n, &edges, false).unwrap();
        let dj = dijkstra_all(n, &edges);
        for (i, row) in dj.iter().enumerate() {
            for (j, &expected) in row.iter().enumerate() {
                prop_assert_eq!(fw.dist(i, j), expected);
                let path = fw.path(i, j).unwrap();
                let walked: f64 = path
                    .windows(2)
                    .map(|w| {
                        edges
                            .iter()
                            .filter(|&&(a, b, _)| (a, b) == (w[0], w[1]) || (b, a) == (w[0], w[1]))
                            .map(|e| e.2)
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum();
                prop_assert_eq!(walked, fw.dist(i, j));
            }
        }
    }

    #[test]
    fn allreduce_of_integers_is_exact(n in 1usize..=24, len_extra in 0usize..30, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = n + len_extra;
        let mut data: Vec<Vec<f64>> =
            (0..n).map(|_| (0..len).map(|_| rng.random_range(-1000..1000) as f64).collect()).collect();
        let sum: Vec<f64> = (0..len).map(|j| data.iter().map(|v| v[j]).sum()).collect();
        execute_allreduce(&mut data).unwrap();
        for v in &data {
            prop_assert_eq!(v, &sum);
        }
    }

    #[test]
    fn ring_schedule_shape(n in 2usize..=40) {
        let (scatter, gather) = ring_allreduce_schedule(n);
        prop_assert_eq!(gather.rounds[0].round, n);
        for sched in [&scatter, &gather] {
            prop_assert_eq!(sched.rounds.len(), n - 1);
            for r in &sched.rounds {
                // every satellite sends exactly once per round, to its successor
                let mut senders: Vec<usize> = r.transfers.iter().map(|t| t.sender).collect();
                senders.sort_unstable();
                prop_assert_eq!(senders, (1..=n).collect::<Vec<_>>());
                for t in &r.transfers {
                    prop_assert_eq!(t.receiver, t.sender % n + 1);
                    prop_assert_eq!(t.chunk, chunk_index(t.sender, r.round, n));
                }
            }
        }
        let held = execute_allgather(&(0..n).collect::<Vec<_>>());
        for h in held {
            prop_assert_eq!(h, (0..n).map(Some).collect::<Vec<_>>());
        }
    }
}

/// Cheapest simple path from plane 1 to plane P by exhaustive search.
fn dfs_best(snap: &TopologySnapshot) -> f64 {
    let n = snap.sat_count();
    let mut adj = vec![Vec::new(); n];
    for e in snap.isl_edges() {
        let (a, b) = (snap.sat_index(e.a), snap.sat_index(e.b));
        let w = e.distance_m / e.rate_bps;
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    fn go(v: usize, acc: f64, seen: &mut [bool], adj: &[Vec<(usize, f64)>], snap: &TopologySnapshot, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if snap.sat_at(v).plane == snap.planes {
            *best = acc;
            return;
        }
        for &(w, c) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                go(w, acc + c, seen, adj, snap, best);
                seen[w] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    for s in 0..snap.sats_per_plane {
        let mut seen = vec![false; n];
        seen[s] = true;
        go(s, 0.0, &mut seen, &adj, snap, &mut best);
    }
    best
}

#[test]
fn inter_orbit_path_matches_exhaustive_search() {
    for (total, planes, phase) in [(12, 3, 30.0), (16, 4, 22.5), (15, 5, 24.0)] {
        let sc = Scenario::from_toml_str(&scenario_toml(total, planes, phase, 120)).unwrap();
        let topo = sc.topology();
        for step in (0..120).step_by(7) {
            let snap = topo.snapshot(step).unwrap();
            let path = inter_orbit_aggregation_path(snap, 1e6).unwrap();
            assert_relative_eq!(path.weight, dfs_best(snap), max_relative = 1e-12);
            assert_eq!(path.planes(), (1..=planes).collect());
        }
    }
}

#[test]
fn windows_match_per_step_visibility() {
    let sc = Scenario::from_toml_str(&scenario_toml(80, 4, 45.0, 360)).unwrap();
    let wins = connection_windows(&sc.spec, &sc.ground_stations, &sc.grid);
    let gs = &sc.ground_stations[0];
    let topo = sc.topology();
    for (i, id) in sc.spec.sat_ids().enumerate() {
        for step in 0..sc.grid.steps() {
            let seen = visible(&topo.positions(step)[i], gs);
            let inside = wins[i].iter().any(|w| w.start_step <= step && step <= w.end_step);
            assert_eq!(seen, inside, "{id} at step {step}");
        }
    }
}

fn toy_workload() -> WorkloadModel {
    WorkloadModel {
        samples_per_satellite: 10.0,
        embedding_bits: 1e6,
        feature_bits: 1e4,
        head_param_bits: 2e6,
        raw_image_bits: 1e8,
        embedding_flops: 1e6,
        block_flops: 1e7,
        blocks: 2.0,
        backbone_flops: 2e7,
        head_flops: 1e5,
        satellite_flops_per_s: 1e9,
        ground_flops_per_s: 1e12,
        local_epochs: 2.0,
        training_pass_multiplier: 3.0,
    }
}

const LINKS: UniformLinks =
    UniformLinks { intra_rate: 1e9, intra_distance: 1e6, inter_rate: 5e8, inter_distance: 2e6, sgl_rate: 1e8 };

fn assert_timing(got: &RoundTiming, want: [f64; 5]) {
    let comps = [got.on_board_s, got.terrestrial_s, got.intra_orbit_s, got.inter_orbit_s, got.sat_ground_s];
    for (g, w) in comps.iter().zip(want) {
        assert_relative_eq!(*g, w, max_relative = 1e-9, epsilon = 1e-15);
    }
    assert_relative_eq!(got.wall_clock_s, want.iter().sum::<f64>(), max_relative = 1e-9);
}

/// Component times written out by hand for P = 3, N = 4 with every link
/// always available.
#[test]
fn round_timing_matches_hand_computation() {
    let (p, n) = (3.0, 4.0);
    let snaps = uniform_snapshots(3, 4, 500, LINKS);
    let w = toy_workload();
    let sim = Simulation::new(&snaps, w, SimOptions::default()).unwrap();
    let m = w.samples_per_satellite;
    let c = 3e8;

    let embed = m * w.embedding_flops / w.satellite_flops_per_s;
    let head = m * w.head_flops * w.local_epochs / w.satellite_flops_per_s;
    let payload = m * w.embedding_bits;
    let features = m * w.feature_bits;
    let z = w.head_param_bits;
    let up = payload / LINKS.sgl_rate;
    let down = features / LINKS.sgl_rate;
    let ground = p * n * m * w.backbone_flops / w.ground_flops_per_s;
    let hop = LINKS.inter_distance / c + z / LINKS.inter_rate;
    let inter = 2.0 * (p - 1.0) * hop;
    let bc = (n - 1.0) * payload / LINKS.intra_rate;
    let fwd = (n - 1.0) * features / LINKS.intra_rate;
    let allreduce = 2.0 * (n - 1.0) * z / (n * LINKS.intra_rate);
    let z_bcast = (n - 1.0) * z / LINKS.intra_rate;

    let proposed = sim.round_timing(Strategy::Proposed, 1, 0.0).unwrap().timing;
    assert_timing(&proposed, [embed + head, ground, bc + fwd + allreduce + z_bcast, inter, up + down]);

    let s1 = sim.round_timing(Strategy::Strategy1, 1, 0.0).unwrap().timing;
    let seq = |bits: f64| 2.0 * n * bits / LINKS.intra_rate;
    assert_timing(&s1, [embed + head, ground, seq(payload) + fwd + seq(z) + z_bcast, inter, up + down]);

    let s2 = sim.round_timing(Strategy::Strategy2, 1, 0.0).unwrap().timing;
    assert_timing(&s2, [embed + head, ground, allreduce + z_bcast, inter, up + down]);

    let full = w.embedding_flops + w.backbone_flops + w.head_flops;
    let tos = sim.round_timing(Strategy::Tos, 1, 0.0).unwrap().timing;
    let train = m * w.local_epochs * w.training_pass_multiplier * full / w.satellite_flops_per_s;
    assert_timing(&tos, [train, 0.0, allreduce + z_bcast, inter, 0.0]);

    let central = sim.round_timing(Strategy::Centralized, 1, 0.0).unwrap().timing;
    let ground_train = p * n * m * w.local_epochs * w.training_pass_multiplier * full / w.ground_flops_per_s;
    assert_timing(&central, [0.0, ground_train, 0.0, 0.0, m * w.raw_image_bits / LINKS.sgl_rate]);
    let central2 = sim.round_timing(Strategy::Centralized, 2, 100.0).unwrap().timing;
    assert_timing(&central2, [0.0, ground_train, 0.0, 0.0, 0.0]);

    let s3 = sim.run_training(Strategy::Strategy3, 2).unwrap();
    assert_eq!(s3.rounds.len(), 4);
}

#[test]
fn uplink_waits_for_the_next_slice_when_idle() {
    // Same rates, but the SGL only exists from step 10 on.
    let mut snaps = uniform_snapshots(2, 3, 200, LINKS);
    for s in &mut snaps.snapshots[..10] {
        s.sgl_edges.clear();
    }
    let w = toy_workload();
    let sim = Simulation::new(&snaps, w, SimOptions::default()).unwrap();
    let d = sim.round_timing(Strategy::Proposed, 1, 0.0).unwrap();
    let up = d.uplink.unwrap();
    assert_relative_eq!(up.finish_s(), 600.0 + w.samples_per_satellite * w.embedding_bits / LINKS.sgl_rate, max_relative = 1e-12);
    assert!(up.assignments.iter().all(|a| a.slice >= 10));
    assert!(d.timing.sat_ground_s > 590.0);
}

#[test]
fn single_satellite_planes_skip_ring_work() {
    let snaps = uniform_snapshots(3, 1, 100, LINKS);
    let sim = Simulation::new(&snaps, toy_workload(), SimOptions::default()).unwrap();
    let t = sim.round_timing(Strategy::Proposed, 1, 0.0).unwrap().timing;
    assert_eq!(t.intra_orbit_s, 0.0);
    assert!(t.inter_orbit_s > 0.0);
}
