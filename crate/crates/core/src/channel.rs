//! Dispersive multi-user channel: FIR impulse responses, truncated
//! convolution, transmit erasures and the received superposition.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cwc::{encode_message, CwcParams, Message, WeightedCodeword};
use crate::error::{Error, Result};
use crate::signaling::{encode_frame, SignalingDictionary, TransmitFrame};

pub const DEFAULT_TAPS: usize = 32;
pub const DEFAULT_DECAY: f64 = 8.0;

/// Circularly-symmetric complex Gaussian sample with variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// FIR response `h_{i,j}` from transmitter `j` to receiver `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelImpulseResponse {
    pub receiver: usize,
    pub transmitter: usize,
    taps: Vec<Complex64>,
}

impl ChannelImpulseResponse {
    pub fn from_taps(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::param("taps", "need at least one tap"));
        }
        Ok(Self {
            receiver: 0,
            transmitter: 0,
            taps,
        })
    }

    /// Single unit tap.
    pub fn flat() -> Self {
        Self {
            receiver: 0,
            transmitter: 0,
            taps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn between(mut self, receiver: usize, transmitter: usize) -> Self {
        self.receiver = receiver;
        self.transmitter = transmitter;
        self
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// Normalized exponential power profile `p_t ∝ exp(-t / decay)`, `sum p_t = 1`.
pub fn power_profile(taps: usize, decay: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..taps).map(|t| (-(t as f64) / decay).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Rayleigh-fading taps `g_t sqrt(p_t)` with `g_t ~ CN(0, 1)`, so the
/// expected total energy is one.
pub fn make_channel(taps: usize, decay: f64, seed: u64) -> Result<ChannelImpulseResponse> {
    if taps == 0 {
        return Err(Error::param("taps", "need T >= 1"));
    }
    if !(decay > 0.0) {
        return Err(Error::param(
            "decay",
            format!("decay must be positive, got {decay}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = power_profile(taps, decay)
        .into_iter()
        .map(|p| complex_gaussian(&mut rng, 1.0) * p.sqrt())
        .collect();
    Ok(ChannelImpulseResponse {
        receiver: 0,
        transmitter: 0,
        taps,
    })
}

/// `y[m] = sum_{t <= min(m, T-1)} h[t] x[m - t]` for `m < M = x.len()`.
pub fn truncated_convolution(h: &ChannelImpulseResponse, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for (n, &xn) in x.iter().enumerate() {
        if xn == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (t, &ht) in h.taps.iter().enumerate().take(x.len() - n) {
            y[n + t] += ht * xn;
        }
    }
    y
}

/// Truncated convolution of a sparse input given as `(row, value)` pairs,
/// accumulated into `out` (length `M`).
pub fn convolve_sparse_into(
    h: &ChannelImpulseResponse,
    entries: &[(usize, Complex64)],
    out: &mut [Complex64],
) {
    let len = out.len();
    for &(row, value) in entries {
        for (t, &ht) in h.taps.iter().enumerate().take(len.saturating_sub(row)) {
            out[row + t] += ht * value;
        }
    }
}

/// Row selector `E_i`: keeps the slots in which receiver `i` is silent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasurePattern {
    keep_rows: Vec<usize>,
    frame_len: usize,
}

impl ErasurePattern {
    pub fn keep_rows(&self) -> &[usize] {
        &self.keep_rows
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// `M~`
    pub fn kept(&self) -> usize {
        self.keep_rows.len()
    }

    /// `E v`
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.frame_len);
        self.keep_rows.iter().map(|&r| v[r]).collect()
    }

    /// `E^T w`: zero-fills erased slots.
    pub fn expand(&self, w: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(w.len(), self.kept());
        let mut out = vec![Complex64::new(0.0, 0.0); self.frame_len];
        for (&r, &value) in self.keep_rows.iter().zip(w) {
            out[r] = value;
        }
        out
    }
}

/// Keeps exactly the slots where the frame is zero.
pub fn erasure_from_frame(frame: &TransmitFrame) -> ErasurePattern {
    let keep_rows = frame
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Complex64::new(0.0, 0.0))
        .map(|(i, _)| i)
        .collect();
    ErasurePattern {
        keep_rows,
        frame_len: frame.frame_len(),
    }
}

/// One network participant with its encoded transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub dictionary: SignalingDictionary,
    pub message: Message,
    pub codeword: WeightedCodeword,
    pub frame: TransmitFrame,
}

/// `N + 1` users, all `(N + 1)^2` channels (self-channels included) and the
/// per-sample noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    params: CwcParams,
    frame_len: usize,
    users: Vec<UserRecord>,
    /// `channels[i][j]` is `h_{i,j}`.
    channels: Vec<Vec<ChannelImpulseResponse>>,
    noise_variance: f64,
}

impl NetworkInstance {
    /// Encodes every user's message and validates the shared dimensions.
    pub fn new(
        params: CwcParams,
        dictionaries: Vec<SignalingDictionary>,
        messages: Vec<Message>,
        channels: Vec<Vec<ChannelImpulseResponse>>,
        noise_variance: f64,
    ) -> Result<Self> {
        let count = dictionaries.len();
        if count == 0 {
            return Err(Error::param("users", "network needs at least one user"));
        }
        if messages.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "{} messages for {count} users",
                messages.len()
            )));
        }
        if channels.len() != count || channels.iter().any(|row| row.len() != count) {
            return Err(Error::DimensionMismatch(format!(
                "channel matrix must be {count} x {count}"
            )));
        }
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::param(
                "noise_variance",
                format!("must be finite and >= 0, got {noise_variance}"),
            ));
        }
        let frame_len = dictionaries[0].frame_len();
        let mut users = Vec::with_capacity(count);
        for (dictionary, message) in dictionaries.into_iter().zip(messages) {
            if dictionary.frame_len() != frame_len || dictionary.span() != params.span() {
                return Err(Error::DimensionMismatch(format!(
                    "dictionary of user {} is {} x {}, expected {frame_len} x {}",
                    dictionary.user,
                    dictionary.frame_len(),
                    dictionary.span(),
                    params.span()
                )));
            }
            let codeword = encode_message(&message, &params)?;
            let frame = encode_frame(&codeword, &dictionary, &params)?;
            users.push(UserRecord {
                dictionary,
                message,
                codeword,
                frame,
            });
        }
        Ok(Self {
            params,
            frame_len,
            users,
            channels,
            noise_variance,
        })
    }

    pub fn params(&self) -> &CwcParams {
        &self.params
    }

    /// `M`
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// `N + 1`
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn user(&self, id: usize) -> Result<&UserRecord> {
        self.users.get(id).ok_or(Error::UnknownUser(id))
    }

    pub fn channel(&self, receiver: usize, transmitter: usize) -> Result<&ChannelImpulseResponse> {
        self.channels
            .get(receiver)
            .ok_or(Error::UnknownUser(receiver))?
            .get(transmitter)
            .ok_or(Error::UnknownUser(transmitter))
    }

    pub fn channels(&self) -> &[Vec<ChannelImpulseResponse>] {
        &self.channels
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn with_noise_variance(mut self, noise_variance: f64) -> Self {
        self.noise_variance = noise_variance;
        self
    }

    pub fn erasure(&self, receiver: usize) -> Result<ErasurePattern> {
        Ok(erasure_from_frame(&self.user(receiver)?.frame))
    }
}

/// What receiver `i` observes in its off-slots, with the self-echo kept apart
/// so it can be cancelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reception {
    /// `y~_i`
    pub observed: Vec<Complex64>,
    /// `E_i (h_{i,i} * x_i)`
    pub self_term: Vec<Complex64>,
}

/// Assembles `y~_i = E_i(sum_{j != i} h_{i,j} * x_j + z) + E_i(h_{i,i} * x_i)`.
///
/// The noise realization is drawn over all `M` slots from `seed` at unit
/// variance and scaled, so the same seed gives the same noise shape at every
/// noise level.
pub fn receive(instance: &NetworkInstance, receiver: usize, seed: u64) -> Result<Reception> {
    receive_with_noise(instance, receiver, instance.noise_variance(), seed)
}

/// [`receive`] at an explicit noise variance instead of the instance's own.
pub fn receive_with_noise(
    instance: &NetworkInstance,
    receiver: usize,
    noise_variance: f64,
    seed: u64,
) -> Result<Reception> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(Error::param(
            "noise_variance",
            format!("must be finite and >= 0, got {noise_variance}"),
        ));
    }
    let own = instance.user(receiver)?;
    let erasure = erasure_from_frame(&own.frame);
    let frame_len = instance.frame_len();

    let mut superposed = vec![Complex64::new(0.0, 0.0); frame_len];
    for (j, user) in instance.users().iter().enumerate() {
        if j == receiver {
            continue;
        }
        let h = instance.channel(receiver, j)?;
        for (acc, v) in superposed
            .iter_mut()
            .zip(truncated_convolution(h, user.frame.samples()))
        {
            *acc += v;
        }
    }
    let sigma = noise_variance.sqrt();
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for acc in superposed.iter_mut() {
            *acc += complex_gaussian(&mut rng, 1.0) * sigma;
        }
    }

    let echo = truncated_convolution(instance.channel(receiver, receiver)?, own.frame.samples());
    let self_term = erasure.apply(&echo);
    let observed = erasure
        .apply(&superposed)
        .into_iter()
        .zip(&self_term)
        .map(|(a, b)| a + b)
        .collect();
    Ok(Reception {
        observed,
        self_term,
    })
}
