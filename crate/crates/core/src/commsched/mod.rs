//! Communication planners: ring collectives inside an orbit, max-flow
//! satellite-ground scheduling, minimum-latency inter-orbit routing, and the
//! baseline strategies they are compared against.

pub mod baselines;
pub mod interorbit;
pub mod ring;
pub mod sgl;

pub use baselines::{
    baseline_gossip_rounds, baseline_no_isc_upload, baseline_sequential_intra_orbit, gossip_epochs,
    gossip_mixing_rounds,
};
pub use interorbit::{global_broadcast_time, inter_orbit_aggregation_path, BroadcastTime, Hop, InterOrbitPath};
pub use ring::{
    chunk_index, execute_allgather, execute_allreduce, ring_allreduce_schedule, ring_allreduce_time,
    ring_broadcast_schedule, ring_broadcast_time, RingPhase, RingRound, RingSchedule, RingTransfer,
};
pub use sgl::{sgl_transfer, Direction, LinkAssignment, TransferGroup, TransmissionPlan, COMPLETION_EPS};
