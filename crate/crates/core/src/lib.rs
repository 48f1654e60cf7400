//! Downlink multi-carrier NOMA resource allocation.
//!
//! The crate solves one scheduling slot as a joint subchannel assignment and
//! power allocation problem ([`joint::joint_sapa_lcc`]) and wraps it in a
//! Lagrangian-dual opportunistic scheduler that enforces long-term per-user
//! rate floors ([`scheduler`]). The building blocks are exposed separately:
//!
//! * [`model`]: system configuration, channel snapshots, SIC rate evaluation
//!   and feasibility checks.
//! * [`pairwise`]: closed-form power split between two users on a subchannel.
//! * [`subchannel`]: per-subchannel user selection for a fixed budget.
//! * [`master`]: subchannel value functions and budget water-filling.
//! * [`channel`]: Hata / shadowing / Rayleigh channel generation and CSI error.
//! * [`oracle`]: brute-force reference solvers for small instances.
//! * [`config`] and [`harness`]: run configurations and the CLI campaigns.

pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod joint;
pub mod master;
pub mod model;
pub mod oracle;
pub mod pairwise;
pub mod scheduler;
pub mod subchannel;

pub use error::{Error, Result};
pub use joint::{joint_sapa_lcc, JointOptions, JointSolution};
pub use model::{compute_rates, Allocation, ChannelSnapshot, RateReport, RateUnit, SystemConfig};
