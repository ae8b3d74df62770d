//! Robust joint active/passive beamforming for an IRS-assisted MISO downlink
//! with simultaneous wireless information and power transfer.
//!
//! The crate provides:
//! - a channel/geometry simulator with bounded channel uncertainty
//!   ([`model`]),
//! - a worst-case transmit-power minimization pipeline built on an
//!   S-procedure LMI reformulation and an interior-point conic backend
//!   ([`optimizer`], [`sdp`]),
//! - an optimization-driven DDPG agent whose critic targets are merged with
//!   the model-based lower bound ([`agent`], [`nn`], [`env`]).

pub mod agent;
pub mod env;
pub mod error;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod optimizer;
pub mod sdp;

pub use agent::{Agent, AgentConfig, ReplayBuffer, StepMetrics, TrainMode, Transition};
pub use env::{ChannelMode, Environment, EnvState, EpisodeConfig};
pub use error::{Error, Result};
pub use linalg::{C64, CMat, CVec};
pub use model::{
    BeamformingAction, ChannelRealization, NetworkGeometry, UncertainLink, UncertaintyModel,
};
pub use optimizer::{RobustBeamformingResult, RobustStatus, SdpSolution};
pub use sdp::{BarrierSolver, ConicBackend, ConicProblem, ConicSolution, LmiBlock, SolveStatus};
