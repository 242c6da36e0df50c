//! Counter-based random streams.
//!
//! Every (sweep, site) pair owns an independent ChaCha8 stream addressed by
//! its counter, so the numbers a site sees never depend on update order,
//! thread count, or the labels of other sites. The whole generator state is
//! the seed plus the number of sweeps consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const SITE_BITS: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRng {
    seed: u64,
    key: [u8; 32],
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self::with_counter(seed, 0)
    }

    fn with_counter(seed: u64, counter: u64) -> Self {
        let key = ChaCha8Rng::seed_from_u64(seed).get_seed();
        StreamRng { seed, key, counter }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Reserves the next sweep's block of per-site streams.
    pub fn next_sweep(&mut self) -> SweepStreams {
        let s = SweepStreams {
            key: self.key,
            sweep: self.counter,
        };
        self.counter += 1;
        s
    }

    /// Independent child generator, determined by the current state and `index`.
    pub fn fork(&self, index: u64) -> StreamRng {
        let mixed = splitmix64(
            self.seed ^ splitmix64(self.counter.wrapping_add(0x5851_f42d_4c95_7f2d)) ^ splitmix64(!index),
        );
        StreamRng::new(mixed)
    }

    pub fn advance(&mut self, sweeps: u64) {
        self.counter += sweeps;
    }

    /// Opaque hex encoding used in snapshots.
    pub fn state_hex(&self) -> String {
        format!("{:016x}{:016x}", self.seed, self.counter)
    }

    pub fn from_state_hex(hex: &str) -> Result<Self> {
        if hex.len() != 32 || !hex.is_ascii() {
            return Err(Error::Config(format!("malformed rng state {hex:?}")));
        }
        let parse = |s: &str| {
            u64::from_str_radix(s, 16).map_err(|e| Error::Config(format!("malformed rng state: {e}")))
        };
        Ok(Self::with_counter(parse(&hex[..16])?, parse(&hex[16..])?))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepStreams {
    key: [u8; 32],
    sweep: u64,
}

impl SweepStreams {
    pub fn site(&self, site: usize) -> ChaCha8Rng {
        debug_assert!(site < 1 << SITE_BITS);
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream((self.sweep << SITE_BITS) | site as u64);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
