//! Cooperative localization of dead-reckoning micro aerial vehicles (BMAVs)
//! by a few well-localized ones (AMAVs) that carry range/bearing sensors.
//!
//! The crate holds the models ([`world`], [`sensing`]), the per-BMAV filter
//! ([`estimation`]), the coordination layer ([`grouping`], [`scheduling`],
//! [`navigation`]) and a deterministic closed-loop simulator ([`sim`]).

pub mod cli;
pub mod error;
pub mod estimation;
pub mod grouping;
pub mod navigation;
pub mod scheduling;
pub mod sensing;
pub mod sim;
pub mod world;

pub use error::{Error, Result};
