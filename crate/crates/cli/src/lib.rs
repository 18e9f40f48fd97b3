//! Library behind the `rotorsim` binary: throughput benchmarks, task
//! rollouts with CSV recording, and sensor frame dumps.

pub mod bench;
pub mod frames;
pub mod record;
pub mod report;
pub mod setup;
