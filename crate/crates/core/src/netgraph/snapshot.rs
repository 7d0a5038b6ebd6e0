use std::sync::OnceLock;

use crate::constellation::{self, ConstellationSpec, EcefPosition, GroundStation, SatId, TimeGrid};
use crate::error::SimError;
use crate::linkbudget::{self, IslParams, SglParams};

/// Link-layer configuration shared by every snapshot of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub isl: IslParams,
    pub sgl: SglParams,
    /// `None` means the terrestrial GS→PS links are never a bottleneck.
    pub gs_ps_rate_bps: Option<f64>,
    /// ISLs taken out of service for the whole run.
    pub failed_isls: Vec<(SatId, SatId)>,
}

impl LinkConfig {
    fn is_failed(&self, a: SatId, b: SatId) -> bool {
        self.failed_isls.iter().any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    IntraOrbit,
    InterOrbit,
    Sgl,
    GsPs,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::IntraOrbit => "intra_orbit",
            EdgeKind::InterOrbit => "inter_orbit",
            EdgeKind::Sgl => "sgl",
            EdgeKind::GsPs => "gs_ps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IslEdge {
    pub a: SatId,
    pub b: SatId,
    pub distance_m: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SglEdge {
    pub sat: SatId,
    pub gs_id: usize,
    pub slant_range_m: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsPsEdge {
    pub gs_id: usize,
    pub rate_bps: Option<f64>,
}

/// Network state at one grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySnapshot {
    pub step: usize,
    pub planes: usize,
    pub sats_per_plane: usize,
    pub intra_orbit_edges: Vec<IslEdge>,
    pub inter_orbit_edges: Vec<IslEdge>,
    pub sgl_edges: Vec<SglEdge>,
    pub gs_ps_edges: Vec<GsPsEdge>,
}

impl TopologySnapshot {
    pub fn sat_count(&self) -> usize {
        self.planes * self.sats_per_plane
    }

    pub fn sat_index(&self, id: SatId) -> usize {
        (id.plane - 1) * self.sats_per_plane + (id.slot - 1)
    }

    pub fn sat_at(&self, index: usize) -> SatId {
        SatId::new(index / self.sats_per_plane + 1, index % self.sats_per_plane + 1)
    }

    pub fn isl_edges(&self) -> impl Iterator<Item = &IslEdge> {
        self.intra_orbit_edges.iter().chain(self.inter_orbit_edges.iter())
    }

    pub fn isl_between(&self, a: SatId, b: SatId) -> Option<&IslEdge> {
        self.isl_edges().find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    /// Bottleneck intra-orbit rate of one plane's ring.
    pub fn ring_rate(&self, plane: usize) -> Option<f64> {
        self.intra_orbit_edges
            .iter()
            .filter(|e| e.a.plane == plane)
            .map(|e| e.rate_bps)
            .min_by(f64::total_cmp)
    }

    pub fn gs_ps_rate(&self, gs_id: usize) -> Option<f64> {
        self.gs_ps_edges.iter().find(|e| e.gs_id == gs_id).and_then(|e| e.rate_bps)
    }

    /// Planes whose intra-orbit sub-graph is not a single cycle through all N
    /// satellites. Planes with N < 3 are checked for a simple path instead.
    pub fn broken_rings(&self) -> Vec<usize> {
        let n = self.sats_per_plane;
        let mut broken = Vec::new();
        for plane in 1..=self.planes {
            let mut degree = vec![0usize; n];
            let mut adj = vec![Vec::new(); n];
            let mut count = 0;
            for e in self.intra_orbit_edges.iter().filter(|e| e.a.plane == plane || e.b.plane == plane) {
                if e.a.plane != e.b.plane {
                    broken.push(plane);
                    count = usize::MAX;
                    break;
                }
                degree[e.a.slot - 1] += 1;
                degree[e.b.slot - 1] += 1;
                adj[e.a.slot - 1].push(e.b.slot - 1);
                adj[e.b.slot - 1].push(e.a.slot - 1);
                count += 1;
            }
            if count == usize::MAX {
                continue;
            }
            let expected = match n {
                1 => 0,
                2 => 1,
                _ => n,
            };
            let degrees_ok = match n {
                1 => true,
                2 => degree.iter().all(|&d| d == 1),
                _ => degree.iter().all(|&d| d == 2),
            };
            let connected = {
                let mut seen = vec![false; n];
                let mut stack = vec![0];
                seen[0] = true;
                while let Some(v) = stack.pop() {
                    for &w in &adj[v] {
                        if !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
                seen.iter().all(|&s| s)
            };
            if count != expected || !degrees_ok || !connected {
                broken.push(plane);
            }
        }
        broken
    }

    /// Checks the structural invariants of a snapshot.
    pub fn check_invariants(&self) -> Result<(), SimError> {
        let broken = self.broken_rings();
        if !broken.is_empty() {
            return Err(SimError::Topology(format!(
                "ring invariant: intra-orbit sub-graph of plane(s) {broken:?} is not a single cycle of length {}",
                self.sats_per_plane
            )));
        }
        if self.planes > 2 {
            if let Some(e) = self
                .inter_orbit_edges
                .iter()
                .find(|e| (e.a.plane == 1 && e.b.plane == self.planes) || (e.b.plane == 1 && e.a.plane == self.planes))
            {
                return Err(SimError::Topology(format!("cross-seam invariant: edge {} - {}", e.a, e.b)));
            }
        }
        let mut degree = vec![0usize; self.sat_count()];
        for e in &self.inter_orbit_edges {
            if e.a.plane.abs_diff(e.b.plane) != 1 {
                return Err(SimError::Topology(format!("inter-orbit edge {} - {} skips a plane", e.a, e.b)));
            }
            degree[self.sat_index(e.a)] += 1;
            degree[self.sat_index(e.b)] += 1;
        }
        if let Some(i) = degree.iter().position(|&d| d > 2) {
            return Err(SimError::Topology(format!("satellite {} has more than two inter-orbit links", self.sat_at(i))));
        }
        Ok(())
    }
}

/// Builds the snapshot at `step`.
///
/// Each plane is a ring `n -> n+1 (mod N)`. Adjacent planes `p, p+1` are
/// joined by a one-to-one pairing `n -> n+k (mod N)` whose shift `k` gives the
/// shortest total link length at this step; the first and last planes are
/// never joined. Every visible (satellite, station) pair yields an SGL.
pub fn snapshot(
    spec: &ConstellationSpec,
    gs_list: &[GroundStation],
    grid: &TimeGrid,
    step: usize,
    links: &LinkConfig,
) -> Result<TopologySnapshot, SimError> {
    if step >= grid.steps() {
        return Err(SimError::InvalidInput(format!("step {step} beyond grid of {} steps", grid.steps())));
    }
    let positions = constellation::propagate(spec, grid, step);
    let n = spec.sats_per_plane();
    let planes = spec.planes();
    let pos = |id: SatId| &positions[spec.index_of(id)];
    let isl = |a: SatId, b: SatId| -> Result<IslEdge, SimError> {
        let d = pos(a).distance(pos(b));
        Ok(IslEdge { a, b, distance_m: d, rate_bps: linkbudget::isl_rate(&links.isl, d)? })
    };

    let mut intra = Vec::new();
    for p in 1..=planes {
        let ring_len = match n {
            1 => 0,
            2 => 1,
            _ => n,
        };
        for s in 1..=ring_len {
            let a = SatId::new(p, s);
            let b = SatId::new(p, s % n + 1);
            if !links.is_failed(a, b) {
                intra.push(isl(a, b)?);
            }
        }
    }

    let mut inter = Vec::new();
    for p in 1..planes {
        let shift = best_shift(n, |s, k| pos(SatId::new(p, s)).distance(pos(SatId::new(p + 1, (s - 1 + k) % n + 1))));
        for s in 1..=n {
            let a = SatId::new(p, s);
            let b = SatId::new(p + 1, (s - 1 + shift) % n + 1);
            if !links.is_failed(a, b) {
                inter.push(isl(a, b)?);
            }
        }
    }

    let mut sgl = Vec::new();
    for id in spec.sat_ids() {
        let sp = pos(id);
        for gs in gs_list {
            if constellation::visible(sp, gs) {
                let range = sp.distance(&gs.position());
                sgl.push(SglEdge { sat: id, gs_id: gs.id, slant_range_m: range, rate_bps: linkbudget::sgl_rate(&links.sgl, range)? });
            }
        }
    }

    let gs_ps = gs_list.iter().map(|g| GsPsEdge { gs_id: g.id, rate_bps: links.gs_ps_rate_bps }).collect();
    Ok(TopologySnapshot {
        step,
        planes,
        sats_per_plane: n,
        intra_orbit_edges: intra,
        inter_orbit_edges: inter,
        sgl_edges: sgl,
        gs_ps_edges: gs_ps,
    })
}

fn best_shift(n: usize, dist: impl Fn(usize, usize) -> f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for k in 0..n {
        let total: f64 = (1..=n).map(|s| dist(s, k)).sum();
        if total < best.0 {
            best = (total, k);
        }
    }
    best.1
}

/// Anything that can hand out the snapshot in effect at a grid step.
pub trait SnapshotSource {
    fn grid(&self) -> &TimeGrid;
    fn snapshot(&self, step: usize) -> Result<&TopologySnapshot, SimError>;

    /// Snapshot in effect at time `t` (seconds past the epoch).
    fn snapshot_at(&self, t: f64) -> Result<&TopologySnapshot, SimError> {
        let grid = self.grid();
        let step = grid.step_at(t).ok_or_else(|| SimError::NonCompletion {
            horizon_s: grid.horizon_s(),
            unfinished: vec![format!("topology requested at t = {t:.1} s")],
        })?;
        self.snapshot(step)
    }
}

/// A fixed, precomputed sequence of snapshots (one per grid step).
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSnapshots {
    pub grid: TimeGrid,
    pub snapshots: Vec<TopologySnapshot>,
}

impl SnapshotSource for StaticSnapshots {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn snapshot(&self, step: usize) -> Result<&TopologySnapshot, SimError> {
        self.snapshots
            .get(step)
            .ok_or_else(|| SimError::InvalidInput(format!("step {step} beyond {} snapshots", self.snapshots.len())))
    }
}

/// Lazily evaluated snapshots over a whole grid. Each step is computed at
/// most once and may be requested from several threads.
pub struct Topology {
    spec: ConstellationSpec,
    gs: Vec<GroundStation>,
    grid: TimeGrid,
    links: LinkConfig,
    cache: Vec<OnceLock<Result<TopologySnapshot, SimError>>>,
}

impl Topology {
    pub fn new(spec: ConstellationSpec, gs: Vec<GroundStation>, grid: TimeGrid, links: LinkConfig) -> Self {
        let cache = (0..grid.steps()).map(|_| OnceLock::new()).collect();
        Self { spec, gs, grid, links, cache }
    }

    pub fn spec(&self) -> &ConstellationSpec {
        &self.spec
    }

    pub fn ground_stations(&self) -> &[GroundStation] {
        &self.gs
    }

    pub fn links(&self) -> &LinkConfig {
        &self.links
    }

    pub fn positions(&self, step: usize) -> Vec<EcefPosition> {
        constellation::propagate(&self.spec, &self.grid, step)
    }
}

impl SnapshotSource for Topology {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn snapshot(&self, step: usize) -> Result<&TopologySnapshot, SimError> {
        let cell = self
            .cache
            .get(step)
            .ok_or_else(|| SimError::InvalidInput(format!("step {step} beyond grid of {} steps", self.grid.steps())))?;
        cell.get_or_init(|| snapshot(&self.spec, &self.gs, &self.grid, step, &self.links))
            .as_ref()
            .map_err(Clone::clone)
    }
}
