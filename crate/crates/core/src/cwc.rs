//! Constant-weight coding.
//!
//! Two bijections carry a user's message onto the transmit codeword:
//!
//! * the combination map sends the first `k` message bits to an `l`-subset of
//!   `[0, L)` using the colexicographic combinadic number system, and
//! * the weight map places one Gray-labelled constellation point, selected by
//!   `q` further bits, on each index of that subset.
//!
//! Both have exact inverses; the weight inverse makes a nearest-point hard
//! decision so it can be fed noisy estimates.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest codeword span supported by the exact binomial table.
pub const MAX_SPAN: usize = 128;

/// Largest number of bits carried by one weight symbol.
pub const MAX_BITS_PER_SYMBOL: usize = 16;

fn pascal() -> &'static [Vec<u128>] {
    static TABLE: OnceLock<Vec<Vec<u128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(MAX_SPAN + 1);
        for n in 0..=MAX_SPAN {
            let mut row = vec![0u128; MAX_SPAN + 1];
            row[0] = 1;
            for k in 1..=n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Exact binomial coefficient `C(n, k)` for `n <= MAX_SPAN`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    assert!(
        n <= MAX_SPAN,
        "binomial table covers n <= {MAX_SPAN}, got {n}"
    );
    if k > n {
        0
    } else {
        pascal()[n][k]
    }
}

/// Codeword span `L`, combination weight `l` and bits per weight symbol `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CwcParams {
    span: usize,
    weight: usize,
    bits_per_symbol: usize,
}

impl CwcParams {
    pub fn new(span: usize, weight: usize, bits_per_symbol: usize) -> Result<Self> {
        if span > MAX_SPAN {
            return Err(Error::param("L", format!("L = {span} exceeds {MAX_SPAN}")));
        }
        if weight < 1 || weight >= span {
            return Err(Error::param(
                "l",
                format!("need 1 <= l < L, got l = {weight}, L = {span}"),
            ));
        }
        if bits_per_symbol < 1 || bits_per_symbol > MAX_BITS_PER_SYMBOL {
            return Err(Error::param(
                "q",
                format!("need 1 <= q <= {MAX_BITS_PER_SYMBOL}, got {bits_per_symbol}"),
            ));
        }
        Ok(Self {
            span,
            weight,
            bits_per_symbol,
        })
    }

    /// `L`
    pub fn span(&self) -> usize {
        self.span
    }

    /// `l`
    pub fn weight(&self) -> usize {
        self.weight
    }

    /// `q`
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// `C(L, l)`
    pub fn combinations(&self) -> u128 {
        binomial(self.span, self.weight)
    }

    /// `k = floor(log2 C(L, l))`
    pub fn combination_bits(&self) -> usize {
        (127 - self.combinations().leading_zeros()) as usize
    }

    /// `l * q`
    pub fn weight_bits(&self) -> usize {
        self.weight * self.bits_per_symbol
    }

    /// `k + l * q`
    pub fn message_bits(&self) -> usize {
        self.combination_bits() + self.weight_bits()
    }

    /// Number of ranks that carry a message, `2^k`.
    pub fn addressable_ranks(&self) -> u128 {
        1u128 << self.combination_bits()
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::new(self.bits_per_symbol)
    }
}

/// A user's `k + l*q` bit payload, most significant bit first in each part.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    bits: Vec<bool>,
    combination_bits: usize,
}

impl Message {
    pub fn new(bits: Vec<bool>, params: &CwcParams) -> Result<Self> {
        if bits.len() != params.message_bits() {
            return Err(Error::BitCount {
                expected: params.message_bits(),
                actual: bits.len(),
            });
        }
        let k = params.combination_bits();
        let value = bits_to_u128(&bits[..k]);
        if value >= params.combinations() {
            return Err(Error::RankOutOfRange {
                rank: value,
                bound: params.combinations(),
            });
        }
        Ok(Self {
            bits,
            combination_bits: k,
        })
    }

    pub fn from_parts(combination: u128, weight_bits: &[bool], params: &CwcParams) -> Result<Self> {
        let k = params.combination_bits();
        if k < 128 && combination >> k != 0 {
            return Err(Error::RankOutOfRange {
                rank: combination,
                bound: params.addressable_ranks(),
            });
        }
        let mut bits = u128_to_bits(combination, k);
        bits.extend_from_slice(weight_bits);
        Self::new(bits, params)
    }

    /// Draws a uniformly random message.
    pub fn random<R: Rng + ?Sized>(params: &CwcParams, rng: &mut R) -> Self {
        let bits = (0..params.message_bits())
            .map(|_| rng.gen::<bool>())
            .collect();
        Self {
            bits,
            combination_bits: params.combination_bits(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn combination_part(&self) -> &[bool] {
        &self.bits[..self.combination_bits]
    }

    pub fn weight_part(&self) -> &[bool] {
        &self.bits[self.combination_bits..]
    }

    pub fn combination_value(&self) -> u128 {
        bits_to_u128(self.combination_part())
    }
}

/// Binary word of Hamming weight `l`, stored as its sorted support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstantWeightWord {
    support: Vec<usize>,
}

impl ConstantWeightWord {
    pub fn new(support: Vec<usize>, params: &CwcParams) -> Result<Self> {
        if support.len() != params.weight() {
            return Err(Error::MalformedSupport(format!(
                "expected {} indices, got {}",
                params.weight(),
                support.len()
            )));
        }
        if let Some(&bad) = support.iter().find(|&&s| s >= params.span()) {
            return Err(Error::MalformedSupport(format!(
                "index {bad} outside [0, {})",
                params.span()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedSupport(
                "indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { support })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }
}

/// Length-`L` complex vector with `l` constellation points on its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCodeword {
    values: Vec<Complex64>,
}

impl WeightedCodeword {
    /// Wraps raw values; only the length is checked here; the weight is
    /// checked by the consumers that require it.
    pub fn new(values: Vec<Complex64>, params: &CwcParams) -> Result<Self> {
        if values.len() != params.span() {
            return Err(Error::DimensionMismatch(format!(
                "codeword length {} != L = {}",
                values.len(),
                params.span()
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nonzero_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Complex64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Gray-labelled rectangular QAM with unit average energy.
///
/// The first `floor(q/2)` bits of a label select the quadrature level and the
/// remaining `ceil(q/2)` bits the in-phase level, each Gray coded with bit 0
/// on the positive side. For `q = 2` this is
/// `00 -> (1+i)/√2, 01 -> (-1+i)/√2, 11 -> (-1-i)/√2, 10 -> (1-i)/√2`,
/// and `q = 1` is BPSK on the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constellation {
    imag_bits: usize,
    real_bits: usize,
    scale: f64,
}

impl Constellation {
    pub fn new(bits_per_symbol: usize) -> Self {
        let imag_bits = bits_per_symbol / 2;
        let real_bits = bits_per_symbol - imag_bits;
        let pam_energy = |m: usize| {
            let levels = (1u64 << m) as f64;
            (levels * levels - 1.0) / 3.0
        };
        let energy = pam_energy(imag_bits) + pam_energy(real_bits);
        Self {
            imag_bits,
            real_bits,
            scale: energy.recip().sqrt(),
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.imag_bits + self.real_bits
    }

    pub fn map(&self, bits: &[bool]) -> Complex64 {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        let (im, re) = bits.split_at(self.imag_bits);
        Complex64::new(pam_level(re), pam_level(im)) * self.scale
    }

    /// Nearest-point decision, returning the label bits.
    pub fn decide(&self, value: Complex64) -> Vec<bool> {
        let mut bits = pam_decide(value.im / self.scale, self.imag_bits);
        bits.extend(pam_decide(value.re / self.scale, self.real_bits));
        bits
    }

    /// All `2^q` points, indexed by label read MSB first.
    pub fn points(&self) -> Vec<Complex64> {
        let q = self.bits_per_symbol();
        (0..1u128 << q)
            .map(|label| self.map(&u128_to_bits(label, q)))
            .collect()
    }
}

fn pam_level(bits: &[bool]) -> f64 {
    let m = bits.len();
    if m == 0 {
        return 0.0;
    }
    let gray = bits_to_u128(bits) as u64;
    let mut index = gray;
    let mut shift = gray >> 1;
    while shift != 0 {
        index ^= shift;
        shift >>= 1;
    }
    ((1u64 << m) - 1) as f64 - 2.0 * index as f64
}

fn pam_decide(amplitude: f64, m: usize) -> Vec<bool> {
    if m == 0 {
        return Vec::new();
    }
    let top = ((1u64 << m) - 1) as f64;
    let index = ((top - amplitude) / 2.0).round().clamp(0.0, top) as u128;
    u128_to_bits(index ^ (index >> 1), m)
}

/// Reads bits most significant first.
pub fn bits_to_u128(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}

/// Writes the low `width` bits of `value`, most significant first.
pub fn u128_to_bits(value: u128, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// Colexicographic unranking: the `rank`-th `l`-subset of `[0, L)`.
pub fn combination_rank_to_support(rank: u128, params: &CwcParams) -> Result<ConstantWeightWord> {
    if rank >= params.combinations() {
        return Err(Error::RankOutOfRange {
            rank,
            bound: params.combinations(),
        });
    }
    let mut remaining = rank;
    let mut support = vec![0usize; params.weight()];
    let mut candidate = params.span();
    for i in (1..=params.weight()).rev() {
        // largest c with C(c, i) <= remaining; c >= i - 1 always qualifies
        candidate -= 1;
        while binomial(candidate, i) > remaining {
            candidate -= 1;
        }
        remaining -= binomial(candidate, i);
        support[i - 1] = candidate;
    }
    Ok(ConstantWeightWord { support })
}

/// Colexicographic rank of a support, `sum_i C(c_i, i + 1)`.
pub fn support_to_combination_rank(word: &ConstantWeightWord, params: &CwcParams) -> Result<u128> {
    let word = ConstantWeightWord::new(word.support.clone(), params)?;
    Ok(word
        .support
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c, i + 1))
        .sum())
}

/// Places the `j`-th group of `q` bits on the `j`-th support index.
pub fn weight_map(
    weight_bits: &[bool],
    word: &ConstantWeightWord,
    params: &CwcParams,
) -> Result<WeightedCodeword> {
    if weight_bits.len() != params.weight_bits() {
        return Err(Error::BitCount {
            expected: params.weight_bits(),
            actual: weight_bits.len(),
        });
    }
    let constellation = params.constellation();
    let mut values = vec![Complex64::new(0.0, 0.0); params.span()];
    for (&index, symbol) in word
        .support
        .iter()
        .zip(weight_bits.chunks(params.bits_per_symbol()))
    {
        values[index] = constellation.map(symbol);
    }
    Ok(WeightedCodeword { values })
}

/// Inverse of [`weight_map`] with nearest-point decisions on the nonzeros.
pub fn weight_unmap(
    codeword: &WeightedCodeword,
    params: &CwcParams,
) -> Result<(Vec<bool>, ConstantWeightWord)> {
    if codeword.len() != params.span() {
        return Err(Error::DimensionMismatch(format!(
            "codeword length {} != L = {}",
            codeword.len(),
            params.span()
        )));
    }
    let support = codeword.nonzero_indices();
    if support.len() != params.weight() {
        return Err(Error::CodewordWeight {
            expected: params.weight(),
            actual: support.len(),
        });
    }
    let constellation = params.constellation();
    let bits = support
        .iter()
        .flat_map(|&i| constellation.decide(codeword.values[i]))
        .collect();
    Ok((bits, ConstantWeightWord { support }))
}

/// Full encoder: message bits to the weighted codeword `c`.
pub fn encode_message(message: &Message, params: &CwcParams) -> Result<WeightedCodeword> {
    let word = combination_rank_to_support(message.combination_value(), params)?;
    weight_map(message.weight_part(), &word, params)
}

/// Full decoder. Ranks in the unused tail `[2^k, C(L, l))` are rejected.
pub fn decode_codeword(codeword: &WeightedCodeword, params: &CwcParams) -> Result<Message> {
    let (weight_bits, word) = weight_unmap(codeword, params)?;
    let rank = support_to_combination_rank(&word, params)?;
    if rank >= params.addressable_ranks() {
        return Err(Error::RankOutOfRange {
            rank,
            bound: params.addressable_ranks(),
        });
    }
    Message::from_parts(rank, &weight_bits, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn p(span: usize, weight: usize, q: usize) -> CwcParams {
        CwcParams::new(span, weight, q).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// All l-subsets of [0, n) sorted in colex order: compare largest element first.
    fn colex_enumeration(n: usize, l: usize) -> Vec<Vec<usize>> {
        let mut all = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == l {
                all.push((0..n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>());
            }
        }
        all.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        all
    }

    #[test]
    fn binomials_match_known_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(64, 12), 3_284_214_703_056);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(
            binomial(128, 64),
            23_951_146_041_928_082_866_135_587_776_380_551_750
        );
    }

    #[test]
    fn full_size_message_length() {
        let params = p(64, 12, 2);
        assert_eq!(params.combination_bits(), 41);
        assert_eq!(params.message_bits(), 65);
    }

    #[test]
    fn params_reject_bad_weight() {
        assert!(matches!(
            CwcParams::new(64, 70, 2),
            Err(Error::InvalidParameter { ref field, .. }) if field == "l"
        ));
        assert!(CwcParams::new(4, 0, 2).is_err());
        assert!(CwcParams::new(4, 4, 2).is_err());
        assert!(CwcParams::new(4, 2, 0).is_err());
        assert!(CwcParams::new(129, 2, 2).is_err());
    }

    #[test]
    fn unrank_first_and_last() {
        let params = p(4, 2, 1);
        assert_eq!(
            combination_rank_to_support(0, &params).unwrap().support(),
            &[0, 1]
        );
        assert_eq!(
            combination_rank_to_support(5, &params).unwrap().support(),
            &[2, 3]
        );
        assert!(matches!(
            combination_rank_to_support(6, &params),
            Err(Error::RankOutOfRange { rank: 6, bound: 6 })
        ));
    }

    #[test]
    fn rank_first_and_last() {
        let params = p(4, 2, 1);
        let w = |s: Vec<usize>| ConstantWeightWord::new(s, &params).unwrap();
        assert_eq!(
            support_to_combination_rank(&w(vec![0, 1]), &params).unwrap(),
            0
        );
        assert_eq!(
            support_to_combination_rank(&w(vec![2, 3]), &params).unwrap(),
            5
        );
    }

    #[test]
    fn ranking_matches_enumeration_oracle() {
        for (n, l) in [(4, 2), (6, 3), (7, 1), (8, 5), (10, 4)] {
            let params = p(n, l, 1);
            for (rank, subset) in colex_enumeration(n, l).into_iter().enumerate() {
                let word = combination_rank_to_support(rank as u128, &params).unwrap();
                assert_eq!(word.support(), subset.as_slice(), "n={n} l={l} rank={rank}");
            }
        }
    }

    #[test]
    fn round_trip_six_choose_three() {
        let params = p(6, 3, 1);
        for r in 0..binomial(6, 3) {
            let word = combination_rank_to_support(r, &params).unwrap();
            assert_eq!(support_to_combination_rank(&word, &params).unwrap(), r);
        }
    }

    #[test]
    fn malformed_supports_rejected() {
        let params = p(6, 2, 1);
        assert!(ConstantWeightWord::new(vec![1], &params).is_err());
        assert!(ConstantWeightWord::new(vec![3, 1], &params).is_err());
        assert!(ConstantWeightWord::new(vec![2, 2], &params).is_err());
        assert!(ConstantWeightWord::new(vec![1, 6], &params).is_err());
    }

    #[test]
    fn qpsk_gray_labels() {
        let k = Constellation::new(2);
        assert_eq!(k.map(&[false, false]), c(H, H));
        assert_eq!(k.map(&[false, true]), c(-H, H));
        assert_eq!(k.map(&[true, true]), c(-H, -H));
        assert_eq!(k.map(&[true, false]), c(H, -H));
    }

    #[test]
    fn bpsk_and_qam16_energy() {
        assert_eq!(
            Constellation::new(1).points(),
            vec![c(1.0, 0.0), c(-1.0, 0.0)]
        );
        for q in 1..=6 {
            let pts = Constellation::new(q).points();
            let energy: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((energy - 1.0).abs() < 1e-12, "q={q} energy={energy}");
            let mut distinct = pts.clone();
            distinct.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
            distinct.dedup();
            assert_eq!(distinct.len(), pts.len());
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let k = Constellation::new(4);
        let q = 4;
        let pts = k.points();
        let min_dist = 2.0 / 10f64.sqrt();
        for (a, pa) in pts.iter().enumerate() {
            for (b, pb) in pts.iter().enumerate() {
                if ((pa - pb).norm() - min_dist).abs() < 1e-9 {
                    assert_eq!(((a ^ b) as u32).count_ones(), 1, "q={q} labels {a} {b}");
                }
            }
        }
    }

    #[test]
    fn decide_inverts_map_and_picks_nearest() {
        for q in 1..=6 {
            let k = Constellation::new(q);
            for label in 0..1u128 << q {
                let bits = u128_to_bits(label, q);
                assert_eq!(k.decide(k.map(&bits)), bits);
            }
        }
        let k = Constellation::new(2);
        assert_eq!(k.decide(c(0.9, 1.1)), vec![false, false]);
    }

    #[test]
    fn weight_map_single_and_pair() {
        let params = p(4, 1, 2);
        let word = ConstantWeightWord::new(vec![3], &params).unwrap();
        let cw = weight_map(&[false, false], &word, &params).unwrap();
        assert_eq!(
            cw.values(),
            &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(H, H)]
        );

        let params = p(4, 2, 2);
        let word = ConstantWeightWord::new(vec![0, 2], &params).unwrap();
        let cw = weight_map(&[false, false, true, true], &word, &params).unwrap();
        assert_eq!(cw.values()[0], c(H, H));
        assert_eq!(cw.values()[2], c(-H, -H));
        assert_eq!(cw.nonzero_indices(), vec![0, 2]);
    }

    #[test]
    fn weight_map_rejects_bit_count() {
        let params = p(4, 2, 2);
        let word = ConstantWeightWord::new(vec![0, 2], &params).unwrap();
        assert_eq!(
            weight_map(&[true; 3], &word, &params),
            Err(Error::BitCount {
                expected: 4,
                actual: 3
            })
        );
    }

    #[test]
    fn weight_unmap_exhaustive_small() {
        let params = p(6, 2, 2);
        for rank in 0..params.combinations() {
            let word = combination_rank_to_support(rank, &params).unwrap();
            for label in 0..1u128 << params.weight_bits() {
                let bits = u128_to_bits(label, params.weight_bits());
                let cw = weight_map(&bits, &word, &params).unwrap();
                assert_eq!(weight_unmap(&cw, &params).unwrap(), (bits, word.clone()));
            }
        }
    }

    #[test]
    fn weight_unmap_rejects_wrong_weight() {
        let params = p(4, 2, 2);
        let extra =
            WeightedCodeword::new(vec![c(H, H), c(H, H), c(H, -H), c(0.0, 0.0)], &params).unwrap();
        assert_eq!(
            weight_unmap(&extra, &params),
            Err(Error::CodewordWeight {
                expected: 2,
                actual: 3
            })
        );
    }

    #[test]
    fn message_round_trip_through_codec() {
        let params = p(64, 12, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let msg = Message::random(&params, &mut rng);
            let cw = encode_message(&msg, &params).unwrap();
            assert_eq!(cw.nonzero_indices().len(), 12);
            assert_eq!(decode_codeword(&cw, &params).unwrap(), msg);
        }
    }

    #[test]
    fn decode_rejects_unaddressable_rank() {
        // C(4,2) = 6, k = 2, so ranks 4 and 5 carry no message
        let params = p(4, 2, 1);
        let word = combination_rank_to_support(5, &params).unwrap();
        let cw = weight_map(&[false, true], &word, &params).unwrap();
        assert_eq!(
            decode_codeword(&cw, &params),
            Err(Error::RankOutOfRange { rank: 5, bound: 4 })
        );
    }

    #[test]
    fn message_parts() {
        let params = p(4, 2, 1);
        let msg = Message::new(vec![true, false, false, true], &params).unwrap();
        assert_eq!(msg.combination_value(), 2);
        assert_eq!(msg.weight_part(), &[false, true]);
        assert!(Message::new(vec![true; 3], &params).is_err());
    }
}
