//! Flip providers.
//!
//! Synthetic coins draw the head count of a whole batch from
//! `Binomial(k, p)` instead of flipping k times. The generator is
//! `ChaCha8Rng`: the master seed is expanded with `seed_from_u64` and each
//! trial gets its own ChaCha stream (`set_stream(trial_index)`), so a
//! trial's flips depend only on `(master_seed, trial_index)`. Changing the
//! generator changes every seeded result, so it stays pinned.
//!
//! Recorded streams are ASCII text of `H`/`T` (aliases `1`/`0`); whitespace
//! is ignored and any other byte is rejected with its offset.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Where flips come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceDescriptor {
    Synthetic { p: f64, seed: u64, stream: u64 },
    Recorded { origin: Origin },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Stdin,
    File(PathBuf),
    Memory,
}

impl fmt::Display for SourceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceDescriptor::Synthetic { p, seed, stream } => {
                write!(f, "synthetic(p={p}, seed={seed}, stream={stream})")
            }
            SourceDescriptor::Recorded { origin } => match origin {
                Origin::Stdin => f.write_str("recorded(stdin)"),
                Origin::File(path) => write!(f, "recorded({})", path.display()),
                Origin::Memory => f.write_str("recorded(memory)"),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipBatch {
    pub heads: u64,
    pub flips_consumed: u64,
}

/// A single-consumer stream of coin flips.
pub trait BernoulliSource {
    /// Flip `k` coins and count heads.
    fn flip_batch(&mut self, k: u64) -> Result<FlipBatch>;

    /// One flip, `true` for heads.
    fn flip(&mut self) -> Result<bool>;

    fn descriptor(&self) -> SourceDescriptor;
}

impl<S: BernoulliSource + ?Sized> BernoulliSource for &mut S {
    fn flip_batch(&mut self, k: u64) -> Result<FlipBatch> {
        (**self).flip_batch(k)
    }

    fn flip(&mut self) -> Result<bool> {
        (**self).flip()
    }

    fn descriptor(&self) -> SourceDescriptor {
        (**self).descriptor()
    }
}

/// Pseudo-random coin with heads probability `p`.
#[derive(Debug, Clone)]
pub struct SyntheticCoin {
    p: f64,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl SyntheticCoin {
    /// Stream 0 of `seed`; identical to `derive_trial_source(seed, 0, p)`.
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        Self::with_stream(p, seed, 0)
    }

    pub fn with_stream(p: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfRange {
                what: "p",
                value: p.to_string(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            p,
            seed,
            stream,
            rng,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `k` individual Bernoulli draws, summed. Slow path kept for checking
    /// the batch sampler.
    pub fn flip_batch_per_flip(&mut self, k: u64) -> FlipBatch {
        let heads = (0..k).filter(|_| self.rng.gen_bool(self.p)).count() as u64;
        FlipBatch {
            heads,
            flips_consumed: k,
        }
    }
}

impl BernoulliSource for SyntheticCoin {
    fn flip_batch(&mut self, k: u64) -> Result<FlipBatch> {
        let dist = Binomial::new(k, self.p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(FlipBatch {
            heads: dist.sample(&mut self.rng),
            flips_consumed: k,
        })
    }

    fn flip(&mut self) -> Result<bool> {
        Ok(self.rng.gen_bool(self.p))
    }

    fn descriptor(&self) -> SourceDescriptor {
        SourceDescriptor::Synthetic {
            p: self.p,
            seed: self.seed,
            stream: self.stream,
        }
    }
}

/// The coin for trial `trial_index` of a Monte Carlo run seeded with `master_seed`.
pub fn derive_trial_source(master_seed: u64, trial_index: u64, p: f64) -> Result<SyntheticCoin> {
    SyntheticCoin::with_stream(p, master_seed, trial_index)
}

/// A finite, pre-recorded flip sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedStream {
    flips: Vec<bool>,
    pos: usize,
    origin: Origin,
}

impl RecordedStream {
    pub fn parse(bytes: &[u8], origin: Origin) -> Result<Self> {
        let mut flips = Vec::with_capacity(bytes.len());
        for (offset, &b) in bytes.iter().enumerate() {
            match b {
                b'H' | b'1' => flips.push(true),
                b'T' | b'0' => flips.push(false),
                b if b.is_ascii_whitespace() => {}
                other => {
                    return Err(Error::StreamFormat {
                        offset,
                        byte: char::from(other),
                    })
                }
            }
        }
        Ok(Self {
            flips,
            pos: 0,
            origin,
        })
    }

    pub fn from_flips(flips: Vec<bool>) -> Self {
        Self {
            flips,
            pos: 0,
            origin: Origin::Memory,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::parse(&bytes, Origin::File(path.to_path_buf()))
    }

    pub fn from_reader(mut reader: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::parse(&bytes, Origin::Stdin)
    }

    pub fn remaining(&self) -> u64 {
        (self.flips.len() - self.pos) as u64
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    /// The same sequence with heads and tails exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            flips: self.flips.iter().map(|h| !h).collect(),
            pos: self.pos,
            origin: self.origin.clone(),
        }
    }
}

impl std::str::FromStr for RecordedStream {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s.as_bytes(), Origin::Memory)
    }
}

impl BernoulliSource for RecordedStream {
    fn flip_batch(&mut self, k: u64) -> Result<FlipBatch> {
        let remaining = self.remaining();
        if remaining < k {
            return Err(Error::SourceExhausted {
                remaining,
                requested: k,
                partial: None,
            });
        }
        let end = self.pos + k as usize;
        let heads = self.flips[self.pos..end].iter().filter(|&&h| h).count() as u64;
        self.pos = end;
        Ok(FlipBatch {
            heads,
            flips_consumed: k,
        })
    }

    fn flip(&mut self) -> Result<bool> {
        let flip = self
            .flips
            .get(self.pos)
            .copied()
            .ok_or(Error::SourceExhausted {
                remaining: 0,
                requested: 1,
                partial: None,
            })?;
        self.pos += 1;
        Ok(flip)
    }

    fn descriptor(&self) -> SourceDescriptor {
        SourceDescriptor::Recorded {
            origin: self.origin.clone(),
        }
    }
}
