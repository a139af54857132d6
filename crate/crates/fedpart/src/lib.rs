//! Deterministic simulator for partial-training federated learning with
//! heterogeneous client model capacities.
//!
//! A server holds a dense multilayer perceptron. Each round it samples a
//! cohort of clients, extracts a per-client sub-model (a subset of nodes in
//! every hidden layer, sized by the client's capacity), trains the sub-models
//! locally on non-IID shards, and selectively averages the updates back into
//! the global model: each parameter is averaged only over the clients whose
//! sub-model contained it, and stays untouched otherwise.
//!
//! Three extraction schemes are implemented and comparable head to head:
//!
//! * **rolling** — a contiguous index window that advances every round and
//!   wraps around, so all parts of the model are trained evenly;
//! * **random** — a fresh uniformly drawn index subset per client and round;
//! * **static** — the fixed prefix window, identical in every round.
//!
//! The `collector` module quantifies the difference: the expected number of
//! uniform draws until every index is picked at least `m` times (closed form,
//! adaptive quadrature, and Monte Carlo) versus the exact `m * I` rounds a
//! rolling window needs.
//!
//! Every run is a pure function of its config and seeds: all randomness is
//! drawn from derived ChaCha8 streams, all reductions run in a fixed order,
//! and parallel execution is bit-identical to sequential.

pub mod aggregation;
pub mod cli;
pub mod collector;
pub mod config;
pub mod data;
pub mod error;
pub mod extraction;
pub mod federation;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
