//! Per-user signaling dictionaries and the transmit waveform `x = S c`.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cwc::{CwcParams, WeightedCodeword};
use crate::error::{Error, Result};

/// Unit-modulus alphabet the dictionary's nonzero entries are drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureAlphabet {
    /// `{+1, -1}`
    #[default]
    Antipodal,
    /// `{+1, -1, +i, -i}`
    Quaternary,
}

impl SignatureAlphabet {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            SignatureAlphabet::Antipodal => {
                if rng.gen::<bool>() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                }
            }
            SignatureAlphabet::Quaternary => match rng.gen_range(0..4u8) {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(-1.0, 0.0),
                2 => Complex64::new(0.0, 1.0),
                _ => Complex64::new(0.0, -1.0),
            },
        }
    }
}

/// One sparse dictionary column: `(row, value)` pairs sorted by row.
pub type SparseColumn = Vec<(usize, Complex64)>;

/// `M x L` sparse matrix `S_i` whose columns have disjoint supports of
/// `floor(M / L)` rows each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingDictionary {
    pub user: usize,
    frame_len: usize,
    span: usize,
    columns: Vec<SparseColumn>,
}

impl SignalingDictionary {
    /// Builds a dictionary from explicit columns, checking the structural invariants.
    pub fn from_columns(user: usize, frame_len: usize, columns: Vec<SparseColumn>) -> Result<Self> {
        let span = columns.len();
        if span == 0 || frame_len < span {
            return Err(Error::param(
                "M",
                format!("need M >= L >= 1, got M = {frame_len}, L = {span}"),
            ));
        }
        let per_column = frame_len / span;
        let mut used = vec![false; frame_len];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != per_column {
                return Err(Error::MalformedSupport(format!(
                    "column {j} has {} nonzeros, expected {per_column}",
                    col.len()
                )));
            }
            if col.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::MalformedSupport(format!(
                    "column {j} rows not increasing"
                )));
            }
            for &(row, value) in col {
                if row >= frame_len {
                    return Err(Error::MalformedSupport(format!(
                        "column {j} row {row} >= M"
                    )));
                }
                if used[row] {
                    return Err(Error::MalformedSupport(format!(
                        "row {row} shared by two columns"
                    )));
                }
                if value == Complex64::new(0.0, 0.0) {
                    return Err(Error::MalformedSupport(format!(
                        "column {j} stores an explicit zero"
                    )));
                }
                used[row] = true;
            }
        }
        Ok(Self {
            user,
            frame_len,
            span,
            columns,
        })
    }

    pub fn with_user(mut self, user: usize) -> Self {
        self.user = user;
        self
    }

    /// `M`
    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// `L`
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn per_column_nnz(&self) -> usize {
        self.frame_len / self.span
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &SparseColumn {
        &self.columns[j]
    }

    /// Raw matrix-vector product `S c` without any weight check.
    pub fn synthesize(&self, coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
        if coefficients.len() != self.span {
            return Err(Error::DimensionMismatch(format!(
                "coefficient length {} != L = {}",
                coefficients.len(),
                self.span
            )));
        }
        let mut samples = vec![Complex64::new(0.0, 0.0); self.frame_len];
        for (col, &c) in self.columns.iter().zip(coefficients) {
            for &(row, value) in col {
                samples[row] += value * c;
            }
        }
        Ok(samples)
    }
}

/// Draws a dictionary with random disjoint supports and `{+1, -1}` entries.
pub fn make_dictionary(
    frame_len: usize,
    params: &CwcParams,
    seed: u64,
) -> Result<SignalingDictionary> {
    make_dictionary_with(frame_len, params, SignatureAlphabet::Antipodal, seed)
}

/// Picks `floor(M/L) * L` distinct slots uniformly from `[0, M)`, partitions
/// them at random into `L` equal supports and fills them from `alphabet`.
pub fn make_dictionary_with(
    frame_len: usize,
    params: &CwcParams,
    alphabet: SignatureAlphabet,
    seed: u64,
) -> Result<SignalingDictionary> {
    let span = params.span();
    if frame_len < span {
        return Err(Error::param(
            "M",
            format!("need M >= L, got M = {frame_len}, L = {span}"),
        ));
    }
    let per_column = frame_len / span;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..frame_len).collect();
    slots.shuffle(&mut rng);
    slots.truncate(per_column * span);
    let columns = slots
        .chunks(per_column)
        .map(|rows| {
            let mut rows = rows.to_vec();
            rows.sort_unstable();
            rows.into_iter()
                .map(|r| (r, alphabet.draw(&mut rng)))
                .collect()
        })
        .collect();
    Ok(SignalingDictionary {
        user: 0,
        frame_len,
        span,
        columns,
    })
}

/// Samples of one transmitted frame and the slots in which the user is on air.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitFrame {
    samples: Vec<Complex64>,
    on_slots: Vec<usize>,
}

impl TransmitFrame {
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn on_slots(&self) -> &[usize] {
        &self.on_slots
    }

    pub fn frame_len(&self) -> usize {
        self.samples.len()
    }

    /// Builds a frame from raw samples; on-slots are the nonzero samples.
    pub fn from_samples(samples: Vec<Complex64>) -> Self {
        let on_slots = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != Complex64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect();
        Self { samples, on_slots }
    }

    /// All-silent frame of length `M`.
    pub fn silent(frame_len: usize) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); frame_len],
            on_slots: Vec::new(),
        }
    }
}

/// `x = S c` for a codeword of weight exactly `l`.
pub fn encode_frame(
    codeword: &WeightedCodeword,
    dict: &SignalingDictionary,
    params: &CwcParams,
) -> Result<TransmitFrame> {
    if codeword.len() != dict.span() || params.span() != dict.span() {
        return Err(Error::DimensionMismatch(format!(
            "codeword length {}, dictionary L = {}, params L = {}",
            codeword.len(),
            dict.span(),
            params.span()
        )));
    }
    let chosen = codeword.nonzero_indices();
    if chosen.len() != params.weight() {
        return Err(Error::CodewordWeight {
            expected: params.weight(),
            actual: chosen.len(),
        });
    }
    let samples = dict.synthesize(codeword.values())?;
    let mut on_slots: Vec<usize> = chosen
        .iter()
        .flat_map(|&j| dict.column(j).iter().map(|&(row, _)| row))
        .collect();
    on_slots.sort_unstable();
    Ok(TransmitFrame { samples, on_slots })
}

/// Un-floored information per frame, `log2 C(L, l) + l q`.
pub fn bits_per_frame_exact(params: &CwcParams) -> f64 {
    (params.combinations() as f64).log2() + params.weight_bits() as f64
}

/// Bits actually carried per frame, `floor(log2 C(L, l)) + l q`.
pub fn bits_per_frame(params: &CwcParams) -> usize {
    params.message_bits()
}

/// Information rate `(log2 C(L, l) + l q) / W` in bits per second.
pub fn scheme_rate(params: &CwcParams, frame_duration: f64) -> Result<f64> {
    if !(frame_duration > 0.0) {
        return Err(Error::param(
            "W",
            format!("frame duration must be positive, got {frame_duration}"),
        ));
    }
    Ok(bits_per_frame_exact(params) / frame_duration)
}

/// Number of listening slots `M - l floor(M / L)`.
pub fn off_slot_count(frame_len: usize, params: &CwcParams) -> usize {
    frame_len - params.weight() * (frame_len / params.span())
}
