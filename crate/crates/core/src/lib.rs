//! Fixed-order H-infinity controller synthesis by direct nonsmooth optimization.
//!
//! The closed loop is first stabilized by driving the spectral abscissa
//! negative, then the closed-loop H-infinity norm is locally minimized.
//! Both stages run a BFGS / bundle / gradient-sampling optimizer stack from
//! randomized starting points.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bench;
pub mod error;
pub mod gradients;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod rng;
pub mod statespace;
pub mod synthesis;

pub use error::{Error, Result};
pub use statespace::{
    lft_closed_loop, lft_closed_loop_with_cap, pack, plant_subsystem, transfer_eval, unpack, Channel, Controller,
    ControllerDims, ParamVector, Plant, PlantBlocks, PlantDims, StateSpace,
};
pub use synthesis::{synthesize, SynthesisOptions, SynthesisResult};
