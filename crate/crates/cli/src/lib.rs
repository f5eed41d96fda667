//! Command-line driver and local preview service.

pub mod clients;
pub mod commands;
pub mod server;
