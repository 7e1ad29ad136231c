//! Seed splitting.
//!
//! Every random draw in an experiment is keyed by a path
//! `(master, stream, trial, a, b)` hashed through SplitMix64, so each
//! quantity gets its own generator regardless of evaluation order.

/// Independent random streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Dictionary = 1,
    Channel = 2,
    Message = 3,
    Noise = 4,
    Csma = 5,
    Measurement = 6,
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of integers into one 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Seed of `stream` for `trial`, indexed by up to two user ids.
pub fn stream_seed(master: u64, stream: Stream, trial: u64, a: u64, b: u64) -> u64 {
    derive_seed(master, &[stream as u64, trial, a, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference SplitMix64 generator seeded with 0
        let mut state = 0u64;
        let mut next = || {
            let out = splitmix64(state);
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            out
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(next(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn paths_do_not_collide() {
        let mut seen = HashSet::new();
        for stream in [
            Stream::Dictionary,
            Stream::Channel,
            Stream::Message,
            Stream::Noise,
        ] {
            for trial in 0..200 {
                for a in 0..5 {
                    for b in 0..5 {
                        assert!(seen.insert(stream_seed(7, stream, trial, a, b)));
                    }
                }
            }
        }
    }

    #[test]
    fn master_seed_matters() {
        assert_ne!(
            stream_seed(1, Stream::Noise, 0, 0, 0),
            stream_seed(2, Stream::Noise, 0, 0, 0)
        );
        assert_eq!(
            stream_seed(1, Stream::Noise, 3, 1, 2),
            stream_seed(1, Stream::Noise, 3, 1, 2)
        );
    }
}
