//! Seeded random streams.
//!
//! Every random draw in a simulation is taken from a stream identified by
//! `(master seed, replica, agent, purpose)`. Streams are ChaCha8 generators:
//! the master seed and replica index form the 256-bit key, and the agent and
//! purpose select one of the 2^64 independent ChaCha streams under that key.
//! Within a stream, round `t` consumes the `t`-th draw, so the
//! `(agent, round, purpose)` substream is a fixed word position and does not
//! depend on how replicas are scheduled across threads.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream's draws are used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Data = 0,
    DpNoise = 1,
    Graph = 2,
    Assignment = 3,
}

/// Replica index reserved for a topology that stays fixed across replicas.
pub const PINNED_TOPOLOGY_REPLICA: u64 = u64::MAX;

/// A deterministic source of uniform variates.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Stream for a per-agent purpose (data or noise) within one replica.
    pub fn for_agent(master_seed: u64, replica: u64, agent: usize, purpose: Purpose) -> Self {
        Self::keyed(master_seed, replica, ((agent as u64 + 1) << 2) | purpose as u64)
    }

    /// Stream for a replica-wide purpose (graph or class assignment).
    pub fn for_replica(master_seed: u64, replica: u64, purpose: Purpose) -> Self {
        Self::keyed(master_seed, replica, purpose as u64)
    }

    /// A free-standing stream, for tests and one-off sampling.
    pub fn from_seed(seed: u64) -> Self {
        Self::keyed(seed, 0, 0)
    }

    fn keyed(master_seed: u64, replica: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&replica.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Access to the underlying generator for `rand` APIs such as shuffling.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
