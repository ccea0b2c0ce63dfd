//! Steady-state analysis, time evolution and feedback control of an adaptive
//! three-level maser heat engine whose levels are shifted by the position of
//! a charged Brownian controller.
//!
//! The numerical modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the command-line
//! front end and the tolerances quoted in the tests assume.

pub mod controller;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod joint;
pub mod learner;
pub mod linalg;
pub mod optimize;
pub mod scalar;
pub mod units;

pub mod cli;

pub use error::{Error, OperabilityDiagnosis, Result};
pub use scalar::Real;

pub type EngineSpec = engine::EngineSpec<f64>;
pub type BathSet = engine::BathSet<f64>;
pub type WorkSource = engine::WorkSource<f64>;
pub type RateTable = engine::RateTable<f64>;
pub type SteadyReport = engine::SteadyReport<f64>;

pub type DensityMatrix = dynamics::DensityMatrix<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;

pub type ControllerSpec = controller::ControllerSpec<f64>;
pub type QuadraticForm = controller::QuadraticForm<f64>;
pub type LandscapeSample = controller::LandscapeSample<f64>;
pub type Optimum = controller::Optimum<f64>;

pub type Learner = learner::Learner<f64>;
pub type AdaptationRecord = learner::AdaptationRecord<f64>;

pub type JointSpec = joint::JointSpec<f64>;
pub type JointSteadyState = joint::JointSteadyState<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type EngineSpec = crate::engine::EngineSpec<f32>;
    pub type BathSet = crate::engine::BathSet<f32>;
    pub type ControllerSpec = crate::controller::ControllerSpec<f32>;
    pub type DensityMatrix = crate::dynamics::DensityMatrix<f32>;
}
