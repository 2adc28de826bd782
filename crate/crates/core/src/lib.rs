//! Deterministic simulation of a vision-based human-to-robot handover.
//!
//! A kinematic arm with an eye-in-hand depth camera watches a scene of
//! geometric primitives, detects the object offered by a person, computes a
//! grasp that stays clear of the hand, and servos to it. Everything runs on a
//! virtual clock so results are reproducible bit for bit.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod control;
pub mod geometry;
pub mod grasp;
pub mod harness;
pub mod perception;
pub mod pgm;
pub mod pipeline;
pub mod scene;
pub mod time;
pub mod trace;
