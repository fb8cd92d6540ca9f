//! Self-evolving embodied agent engine.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::type_complexity)]

pub mod canon;
pub mod controller;
pub mod diagnosis;
pub mod distill;
pub mod harness;
pub mod model;
pub mod planner;
pub mod recall;
pub mod sim;
pub mod store;
