//! Time-stepped simulation of federated fine-tuning split between a Walker
//! LEO constellation and ground infrastructure.
//!
//! The crate is layered bottom-up: [`constellation`] propagates orbits and
//! finds ground contacts, [`linkbudget`] turns geometry into data rates,
//! [`netgraph`] builds per-step topologies with max-flow and shortest-path
//! solvers, [`commsched`] plans the collectives and transfers, and [`fedsim`]
//! assembles them into timed training rounds. [`scenario`], [`report`] and
//! [`app`] are the file formats and commands used by the `orbitfed` binary.

// `!(x > 0.0)` is how inputs are checked throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod commsched;
pub mod constellation;
pub mod error;
pub mod fedsim;
pub mod linkbudget;
pub mod netgraph;
pub mod report;
pub mod scenario;

/// The guide's snippets, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/constellation.md")]
    mod constellation {}
    #[doc = include_str!("../../../book/src/link-budgets.md")]
    mod link_budgets {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/ring-collectives.md")]
    mod ring_collectives {}
    #[doc = include_str!("../../../book/src/sgl-scheduling.md")]
    mod sgl_scheduling {}
    #[doc = include_str!("../../../book/src/inter-orbit.md")]
    mod inter_orbit {}
    #[doc = include_str!("../../../book/src/round-pipeline.md")]
    mod round_pipeline {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
