//! Compiles robot tour narration, projected visuals and gestures into one
//! timeline, replays it on a virtual clock and solves where projections land.

pub mod asset;
pub mod compile;
pub mod compose;
pub mod config;
pub mod geometry;
pub mod overrides;
pub mod placement;
pub mod script;
pub mod sim;
pub mod timeline;
