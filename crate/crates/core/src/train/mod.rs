//! Desk-scale split-training engine.
