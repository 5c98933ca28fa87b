//! Energy-aware, decentralized assignment of spatio-temporal sensing tasks to
//! a swarm of drones.
//!
//! The crate covers the whole pipeline: sensing scenarios ([`scenario`]), the
//! quadrotor power model ([`power`]), per-drone plan generation
//! ([`plangen`]), tree-structured collective plan selection
//! ([`coordination`]), comparison methods ([`baselines`]) and evaluation
//! metrics ([`metrics`]).
//!
//! All numerical types are generic over a [`Scalar`] (`f32` or `f64`); the
//! `f64` instantiations are re-exported below under short names.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod coordination;
pub mod metrics;
pub mod plangen;
pub mod power;
pub mod rng;
pub mod scalar;
pub mod scenario;

pub use scalar::Scalar;

pub type DroneSpec = power::DroneSpec<f64>;
pub type Environment = power::Environment<f64>;
pub type PowerProfile = power::PowerProfile<f64>;
pub type Point = scenario::Point<f64>;
pub type SensingMap = scenario::SensingMap<f64>;
pub type MapParams = scenario::MapParams<f64>;
pub type TimeStructure = scenario::TimeStructure<f64>;
pub type CameraGeometry = scenario::CameraGeometry<f64>;
pub type Plan = plangen::Plan<f64>;
pub type PlanGenConfig = plangen::PlanGenConfig<f64>;
pub type AgentState = coordination::AgentState<f64>;
pub type CoordinationConfig = coordination::CoordinationConfig<f64>;
pub type CoordinationOutcome = coordination::CoordinationOutcome<f64>;
pub type DispatchSchedule = baselines::DispatchSchedule<f64>;
pub type MetricRecord = metrics::MetricRecord<f64>;
