//! Round-by-round latency accounting of the split training pipeline and of
//! the baselines.
//!
//! Every phase of a round starts when the previous one has finished on all
//! orbits, so the wall clock of a round is exactly the sum of its booked
//! phase durations. Parallel orbits are accounted by their slowest member.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::commsched::{
    baseline_sequential_intra_orbit, global_broadcast_time, gossip_epochs, inter_orbit_aggregation_path,
    ring_allreduce_time, ring_broadcast_time, sgl_transfer, Direction, InterOrbitPath, TransferGroup, TransmissionPlan,
};
use crate::constellation::SatId;
use crate::error::SimError;
use crate::netgraph::{SnapshotSource, TopologySnapshot};

use super::workload::WorkloadModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Ring collectives, max-flow SGL scheduling, shortest inter-orbit path.
    Proposed,
    /// Sequential relay instead of ring collectives.
    Strategy1,
    /// Every satellite uses only its own SGL windows.
    Strategy2,
    /// Gossip between neighbouring orbits, needing more rounds.
    Strategy3,
    /// Whole model trained on board.
    Tos,
    /// Raw imagery downloaded once, model trained on the ground.
    Centralized,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Proposed,
        Strategy::Strategy1,
        Strategy::Strategy2,
        Strategy::Strategy3,
        Strategy::Tos,
        Strategy::Centralized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::Strategy1 => "strategy1",
            Strategy::Strategy2 => "strategy2",
            Strategy::Strategy3 => "strategy3",
            Strategy::Tos => "tos",
            Strategy::Centralized => "centralized",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected one of proposed, strategy1, strategy2, strategy3, tos, centralized)"))
    }
}

/// The five latency components of one round, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundTiming {
    pub round: usize,
    pub on_board_s: f64,
    pub terrestrial_s: f64,
    pub intra_orbit_s: f64,
    pub inter_orbit_s: f64,
    pub sat_ground_s: f64,
    pub wall_clock_s: f64,
}

impl RoundTiming {
    pub fn component_sum(&self) -> f64 {
        self.on_board_s + self.terrestrial_s + self.intra_orbit_s + self.inter_orbit_s + self.sat_ground_s
    }

    fn add(&mut self, other: &RoundTiming) {
        self.on_board_s += other.on_board_s;
        self.terrestrial_s += other.terrestrial_s;
        self.intra_orbit_s += other.intra_orbit_s;
        self.inter_orbit_s += other.inter_orbit_s;
        self.sat_ground_s += other.sat_ground_s;
        self.wall_clock_s += other.wall_clock_s;
    }
}

/// Timing plus the plans that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundDetail {
    pub start_s: f64,
    pub timing: RoundTiming,
    pub uplink: Option<TransmissionPlan>,
    pub downlink: Option<TransmissionPlan>,
    pub path: Option<InterOrbitPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub strategy: Strategy,
    pub rounds: Vec<RoundDetail>,
}

impl TrainingReport {
    pub fn timings(&self) -> Vec<RoundTiming> {
        self.rounds.iter().map(|r| r.timing).collect()
    }

    /// Per-component totals; `round` holds the number of rounds.
    pub fn totals(&self) -> RoundTiming {
        let mut t = RoundTiming { round: self.rounds.len(), ..RoundTiming::default() };
        for r in &self.rounds {
            t.add(&r.timing);
        }
        t
    }

    pub fn total_wall_clock_s(&self) -> f64 {
        self.totals().wall_clock_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Seconds past the grid epoch at which round 1 starts.
    pub start_s: f64,
    /// Epoch multiplier of the gossip baseline.
    pub consensus_factor: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { start_s: 0.0, consensus_factor: 2.0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Variant {
    sequential_ring: bool,
    per_satellite_sgl: bool,
}

/// Round pipeline over a time-varying topology.
pub struct Simulation<'a, S: SnapshotSource> {
    source: &'a S,
    workload: WorkloadModel,
    options: SimOptions,
    planes: usize,
    sats_per_plane: usize,
}

fn ring_rate(snap: &TopologySnapshot, plane: usize) -> Result<f64, SimError> {
    snap.ring_rate(plane)
        .ok_or_else(|| SimError::Topology(format!("plane {plane} has no intra-orbit links at step {}", snap.step)))
}

impl<'a, S: SnapshotSource> Simulation<'a, S> {
    pub fn new(source: &'a S, workload: WorkloadModel, options: SimOptions) -> Result<Self, SimError> {
        if !(options.consensus_factor >= 1.0) {
            return Err(SimError::InvalidInput(format!(
                "consensus factor must be at least 1, got {}",
                options.consensus_factor
            )));
        }
        let first = source.snapshot(0)?;
        Ok(Self { source, workload, options, planes: first.planes, sats_per_plane: first.sats_per_plane })
    }

    pub fn workload(&self) -> &WorkloadModel {
        &self.workload
    }

    fn satellites(&self) -> Vec<SatId> {
        (1..=self.planes)
            .flat_map(|p| (1..=self.sats_per_plane).map(move |n| SatId::new(p, n)))
            .collect()
    }

    /// Slowest per-orbit ring collective at time `t`.
    fn per_orbit_max(&self, t: f64, f: impl Fn(usize, f64) -> Result<f64, SimError>) -> Result<f64, SimError> {
        if self.sats_per_plane <= 1 {
            return Ok(0.0);
        }
        let snap = self.source.snapshot_at(t)?;
        let mut worst: f64 = 0.0;
        for p in 1..=self.planes {
            worst = worst.max(f(self.sats_per_plane, ring_rate(snap, p)?)?);
        }
        Ok(worst)
    }

    fn transfer(&self, t: f64, bits_per_sat: f64, per_satellite: bool, direction: Direction) -> Result<TransmissionPlan, SimError> {
        let groups: Vec<TransferGroup> = if per_satellite {
            self.satellites().into_iter().map(|s| TransferGroup::satellite(s, bits_per_sat, t)).collect()
        } else {
            (1..=self.planes)
                .map(|p| TransferGroup::orbit(p, self.sats_per_plane, bits_per_sat * self.sats_per_plane as f64, t))
                .collect()
        };
        sgl_transfer(self.source, &groups, direction)
    }

    /// Head aggregation inside each orbit, across orbits, and back.
    fn aggregate_heads(&self, t: &mut f64, timing: &mut RoundTiming, sequential: bool) -> Result<InterOrbitPath, SimError> {
        let z = self.workload.head_param_bits;
        let intra = self.per_orbit_max(*t, |n, r| {
            if sequential {
                Ok(baseline_sequential_intra_orbit(n, z / r))
            } else {
                ring_allreduce_time(n, z, r)
            }
        })?;
        timing.intra_orbit_s += intra;
        *t += intra;

        let snap = self.source.snapshot_at(*t)?;
        let path = inter_orbit_aggregation_path(snap, z)?;
        timing.inter_orbit_s += path.total_time_s;
        *t += path.total_time_s;

        let snap = self.source.snapshot_at(*t)?;
        let back = global_broadcast_time(&path, snap, z)?;
        timing.inter_orbit_s += back.inter_orbit_s;
        timing.intra_orbit_s += back.intra_orbit_s;
        *t += back.total_s();
        Ok(path)
    }

    fn split_round(&self, round: usize, t0: f64, v: Variant) -> Result<RoundDetail, SimError> {
        let w = &self.workload;
        let m = w.samples_per_satellite;
        let mut timing = RoundTiming { round, ..RoundTiming::default() };
        let mut t = t0;

        let embed = m * w.embedding_flops / w.satellite_flops_per_s;
        timing.on_board_s += embed;
        t += embed;

        let payload = m * w.embedding_bits;
        if !v.per_satellite_sgl {
            let bc = self.per_orbit_max(t, |n, r| {
                if v.sequential_ring {
                    Ok(baseline_sequential_intra_orbit(n, payload / r))
                } else {
                    ring_broadcast_time(n, payload, r)
                }
            })?;
            timing.intra_orbit_s += bc;
            t += bc;
        }

        let up = self.transfer(t, payload, v.per_satellite_sgl, Direction::Up)?;
        timing.sat_ground_s += up.finish_s() - t;
        t = up.finish_s();

        let ground = (self.planes * self.sats_per_plane) as f64 * m * w.backbone_flops / w.ground_flops_per_s;
        timing.terrestrial_s += ground;
        t += ground;

        let features = m * w.feature_bits;
        let down = self.transfer(t, features, v.per_satellite_sgl, Direction::Down)?;
        timing.sat_ground_s += down.finish_s() - t;
        t = down.finish_s();
        if !v.per_satellite_sgl {
            let fwd = self.per_orbit_max(t, |n, r| ring_broadcast_time(n, features, r))?;
            timing.intra_orbit_s += fwd;
            t += fwd;
        }

        let head = m * w.head_flops * w.local_epochs / w.satellite_flops_per_s;
        timing.on_board_s += head;
        t += head;

        let path = self.aggregate_heads(&mut t, &mut timing, v.sequential_ring)?;
        timing.wall_clock_s = t - t0;
        Ok(RoundDetail { start_s: t0, timing, uplink: Some(up), downlink: Some(down), path: Some(path) })
    }

    fn tos_round(&self, round: usize, t0: f64) -> Result<RoundDetail, SimError> {
        let w = &self.workload;
        let mut timing = RoundTiming { round, ..RoundTiming::default() };
        let train = w.samples_per_satellite * w.local_epochs * w.training_pass_multiplier * w.full_model_flops()
            / w.satellite_flops_per_s;
        timing.on_board_s += train;
        let mut t = t0 + train;
        let path = self.aggregate_heads(&mut t, &mut timing, false)?;
        timing.wall_clock_s = t - t0;
        Ok(RoundDetail { start_s: t0, timing, uplink: None, downlink: None, path: Some(path) })
    }

    fn centralized_round(&self, round: usize, t0: f64) -> Result<RoundDetail, SimError> {
        let w = &self.workload;
        let mut timing = RoundTiming { round, ..RoundTiming::default() };
        let mut t = t0;
        let mut uplink = None;
        if round == 1 {
            let plan = self.transfer(t, w.samples_per_satellite * w.raw_image_bits, true, Direction::Up)?;
            timing.sat_ground_s += plan.finish_s() - t;
            t = plan.finish_s();
            uplink = Some(plan);
        }
        let total_samples = (self.planes * self.sats_per_plane) as f64 * w.samples_per_satellite;
        let train = total_samples * w.local_epochs * w.training_pass_multiplier * w.full_model_flops() / w.ground_flops_per_s;
        timing.terrestrial_s += train;
        t += train;
        timing.wall_clock_s = t - t0;
        Ok(RoundDetail { start_s: t0, timing, uplink, downlink: None, path: None })
    }

    /// One round of `strategy` starting `t0` seconds past the epoch.
    pub fn round_timing(&self, strategy: Strategy, round: usize, t0: f64) -> Result<RoundDetail, SimError> {
        let proposed = Variant { sequential_ring: false, per_satellite_sgl: false };
        match strategy {
            Strategy::Proposed | Strategy::Strategy3 => self.split_round(round, t0, proposed),
            Strategy::Strategy1 => self.split_round(round, t0, Variant { sequential_ring: true, ..proposed }),
            Strategy::Strategy2 => self.split_round(round, t0, Variant { per_satellite_sgl: true, ..proposed }),
            Strategy::Tos => self.tos_round(round, t0),
            Strategy::Centralized => self.centralized_round(round, t0),
        }
    }

    /// Runs `rounds` synchronous rounds back to back. The gossip baseline
    /// runs `consensus_factor` times as many.
    pub fn run_training(&self, strategy: Strategy, rounds: usize) -> Result<TrainingReport, SimError> {
        if rounds == 0 {
            return Err(SimError::InvalidInput("at least one round is required".into()));
        }
        let total = match strategy {
            Strategy::Strategy3 => gossip_epochs(rounds, self.options.consensus_factor),
            _ => rounds,
        };
        let mut t = self.options.start_s;
        let mut out = Vec::with_capacity(total);
        for r in 1..=total {
            let detail = self.round_timing(strategy, r, t)?;
            log::debug!("{strategy} round {r}: {:.1} s", detail.timing.wall_clock_s);
            t += detail.timing.wall_clock_s;
            out.push(detail);
        }
        Ok(TrainingReport { strategy, rounds: out })
    }
}
