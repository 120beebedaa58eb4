//! Seeded generator for toy corpora whose families differ in byte statistics.
//!
//! Used by the integration tests and handy for smoke-testing the pipeline
//! without a real malware collection.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Byte-distribution signature of a synthetic family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Small values with zero-filled stretches, like code with padding.
    LowBytes,
    /// Printable words separated by spaces and newlines.
    Text,
    /// Uniform random bytes, like packed or encrypted content.
    Random,
    /// Long runs of a repeated byte.
    Runs,
    /// Incrementing ramps with random restarts.
    Ramps,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::LowBytes,
        Profile::Text,
        Profile::Random,
        Profile::Runs,
        Profile::Ramps,
    ];

    pub fn family_name(self) -> &'static str {
        match self {
            Profile::LowBytes => "lowbytes",
            Profile::Text => "text",
            Profile::Random => "random",
            Profile::Runs => "runs",
            Profile::Ramps => "ramps",
        }
    }
}

pub fn generate<R: Rng>(profile: Profile, len: usize, rng: &mut R) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    match profile {
        Profile::LowBytes => {
            while out.len() < len {
                if rng.random_bool(0.05) {
                    let n = rng.random_range(16..256);
                    out.extend(std::iter::repeat_n(0u8, n));
                } else {
                    out.push(rng.random_range(0..64));
                }
            }
        }
        Profile::Text => {
            const ALPHABET: &[u8] = b"etaoinshrdlucmfwypvbgkqjxz";
            while out.len() < len {
                let word = rng.random_range(1..10);
                for _ in 0..word {
                    // skewed towards frequent letters
                    let i = rng
                        .random_range(0..ALPHABET.len())
                        .min(rng.random_range(0..ALPHABET.len()));
                    out.push(ALPHABET[i]);
                }
                out.push(if rng.random_bool(0.1) { b'\n' } else { b' ' });
            }
        }
        Profile::Random => {
            out.resize(len, 0);
            rng.fill(&mut out[..]);
        }
        Profile::Runs => {
            while out.len() < len {
                let b: u8 = rng.random();
                let n = rng.random_range(8..128);
                out.extend(std::iter::repeat_n(b, n));
            }
        }
        Profile::Ramps => {
            let mut v: u8 = rng.random();
            while out.len() < len {
                out.push(v);
                v = if rng.random_bool(0.01) {
                    rng.random()
                } else {
                    v.wrapping_add(1)
                };
            }
        }
    }
    out.truncate(len);
    out
}

/// Write `families` x `per_family` files as `<root>/<family>/<nnnn>.bin`.
/// File sizes are drawn from `min_len..=max_len`.
pub fn write_corpus(
    root: &Path,
    families: usize,
    per_family: usize,
    (min_len, max_len): (usize, usize),
    seed: u64,
) -> Result<()> {
    if families == 0 || families > Profile::ALL.len() {
        return Err(Error::InvalidArgument(format!(
            "synthetic corpus supports 1..={} families",
            Profile::ALL.len()
        )));
    }
    if min_len == 0 || min_len > max_len {
        return Err(Error::InvalidArgument(
            "invalid synthetic length range".into(),
        ));
    }
    for profile in &Profile::ALL[..families] {
        let dir = root.join(profile.family_name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut rng = seed::rng_for(seed, profile.family_name().as_bytes());
        for i in 0..per_family {
            let len = rng.random_range(min_len..=max_len);
            let bytes = generate(*profile, len, &mut rng);
            let path = dir.join(format!("{i:04}.bin"));
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}
