//! Quasi-orthogonal space-time block codes: construction, structural
//! analysis, group-constrained transforms, coding-gain search, grouped ML
//! decoding and Rayleigh-fading BER simulation.

pub mod catalog;
pub mod cli;
pub mod decoder;
pub mod error;
pub mod gain;
pub mod gclt;
pub mod modem;
pub mod numerics;
pub mod qo;
pub mod sim;
pub mod verify;

pub use catalog::{build, CodeDefinition, CodeName};
pub use error::{Error, Result};
pub use modem::{make_qam, Constellation};
