//! Experiment harness (sweeps, aggregation, export).
