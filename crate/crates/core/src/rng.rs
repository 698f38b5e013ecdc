//! Per-agent random streams.
//!
//! Every (seed, agent, day) triple gets its own ChaCha stream whose key is
//! derived by hashing the triple, so draws for one agent never depend on how
//! many other agents ran before it or on which thread.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    agent_id: String,
    day: u32,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, agent_id: &str, day: u32) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"nmob-rng-v1");
        hasher.update(seed.to_le_bytes());
        hasher.update((agent_id.len() as u64).to_le_bytes());
        hasher.update(agent_id.as_bytes());
        hasher.update(day.to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        Self { seed, agent_id: agent_id.to_string(), day, rng: ChaCha8Rng::from_seed(key) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn key(&self) -> (&str, u32) {
        (&self.agent_id, self.day)
    }

    /// Bernoulli draw. `p <= 0` is always false and `p >= 1` always true.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform integer in `low..=high`.
    pub fn int_inclusive(&mut self, low: u32, high: u32) -> u32 {
        self.rng.gen_range(low..=high)
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.rng.gen_range(0..len)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
