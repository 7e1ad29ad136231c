//! Per-trial network instances derived from the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{make_channel, NetworkInstance};
use crate::cwc::{CwcParams, Message};
use crate::error::Result;
use crate::harness::config::{CcsmSection, DictionaryMode};
use crate::harness::seeds::{stream_seed, Stream};
use crate::signaling::{make_dictionary_with, SignatureAlphabet};

/// Everything needed to draw one network realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub users: usize,
    pub params: CwcParams,
    pub frame_len: usize,
    pub taps: usize,
    pub decay: f64,
    pub alphabet: SignatureAlphabet,
    pub dictionaries: DictionaryMode,
}

impl InstanceSpec {
    pub fn from_section(section: &CcsmSection, users: usize, frame_len: usize) -> Result<Self> {
        Ok(Self {
            users,
            params: section.params()?,
            frame_len,
            taps: section.taps,
            decay: section.decay,
            alphabet: section.alphabet,
            dictionaries: section.dictionaries,
        })
    }
}

/// Draws a noiseless instance for `trial`.
///
/// Seeds: dictionary of user `u` from `(Dictionary, trial, u, M)` (trial 0
/// in fixed mode), channel `h_{i,j}` from `(Channel, trial, i, j)`, message
/// of user `u` from `(Message, trial, u, 0)`. Channels and messages do not
/// depend on `M`, so the same trial index sees the same channels and
/// messages at every frame length.
pub fn fresh_instance(spec: &InstanceSpec, master: u64, trial: u64) -> Result<NetworkInstance> {
    let users = spec.users as u64;
    let dict_trial = match spec.dictionaries {
        DictionaryMode::PerTrial => trial,
        DictionaryMode::Fixed => 0,
    };
    let dictionaries = (0..users)
        .map(|u| {
            let seed = stream_seed(
                master,
                Stream::Dictionary,
                dict_trial,
                u,
                spec.frame_len as u64,
            );
            make_dictionary_with(spec.frame_len, &spec.params, spec.alphabet, seed)
                .map(|d| d.with_user(u as usize))
        })
        .collect::<Result<Vec<_>>>()?;
    let messages = (0..users)
        .map(|u| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(stream_seed(master, Stream::Message, trial, u, 0));
            Message::random(&spec.params, &mut rng)
        })
        .collect();
    let channels = (0..users)
        .map(|i| {
            (0..users)
                .map(|j| {
                    let seed = stream_seed(master, Stream::Channel, trial, i, j);
                    make_channel(spec.taps, spec.decay, seed)
                        .map(|h| h.between(i as usize, j as usize))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkInstance::new(spec.params, dictionaries, messages, channels, 0.0)
}

/// Noise seed for receiver `i` in `trial`.
pub fn noise_seed(master: u64, trial: u64, receiver: usize) -> u64 {
    stream_seed(master, Stream::Noise, trial, receiver as u64, 0)
}
