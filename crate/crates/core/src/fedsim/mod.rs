//! Training-round simulation: workload model, per-component latency
//! accounting, and an exact toy federated-averaging core.

pub mod aggregate;
pub mod overhead;
pub mod timing;
pub mod toy;
pub mod workload;

pub use aggregate::{flat_mean, hierarchical_aggregate};
pub use overhead::{centralized_overhead, dataset_presets, DatasetMeta, OverheadRow};
pub use timing::{RoundDetail, RoundTiming, SimOptions, Simulation, Strategy, TrainingReport};
pub use toy::{gradient, loss, run_toy_fedavg, toy_fedavg_round, FeatureMap, LocalDataset, Loss, ToyProblem, ToyRound};
pub use workload::{workload_from_model, ComputeConfig, ModelConfig, WorkloadModel, DEFAULT_GROUND_FLOPS, DEFAULT_SATELLITE_FLOPS};
