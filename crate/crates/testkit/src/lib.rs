//! Random input generators and independent oracles shared by the
//! integration tests and the acceptance suite.
//!
//! The oracles deliberately avoid calling into the code they check: they
//! recompute every law, schedule and geometric predicate from first
//! principles.

pub mod gen;
pub mod oracle;

pub use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a test case.
pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
