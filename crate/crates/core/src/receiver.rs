//! Receiver side: self-echo cancellation, the offline system matrix
//! `A_{-i}` and the decode pipeline from measurements back to messages.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::channel::{
    convolve_sparse_into, receive, ChannelImpulseResponse, ErasurePattern, NetworkInstance,
};
use crate::cwc::{decode_codeword, CwcParams, Message, WeightedCodeword};
use crate::error::{Error, Result};
use crate::signaling::SignalingDictionary;
use crate::solvers::{solve, GroupShape, SolverReport, SolverSettings, StopReason};

/// `A_{-i}`: `M~ x N L`, one width-`L` column group per transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    receiver: usize,
    transmitters: Vec<usize>,
    span: usize,
    entries: Mat<Complex64>,
}

impl SystemMatrix {
    pub fn receiver(&self) -> usize {
        self.receiver
    }

    /// Transmitter ids in column-group order (ascending, receiver skipped).
    pub fn transmitters(&self) -> &[usize] {
        &self.transmitters
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Column range of transmitter `transmitters()[g]`.
    pub fn group_columns(&self, g: usize) -> std::ops::Range<usize> {
        g * self.span..(g + 1) * self.span
    }

    pub fn as_ref(&self) -> MatRef<'_, Complex64> {
        self.entries.as_ref()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }
}

/// `y_i = y~_i - E_i(h_{i,i} * x_i)`
pub fn cancel_self_interference(
    observed: &[Complex64],
    self_term: &[Complex64],
) -> Result<Vec<Complex64>> {
    if observed.len() != self_term.len() {
        return Err(Error::DimensionMismatch(format!(
            "observation has {} samples, self term has {}",
            observed.len(),
            self_term.len()
        )));
    }
    Ok(observed.iter().zip(self_term).map(|(y, s)| y - s).collect())
}

/// Builds `E [h_0 * S_0 | h_1 * S_1 | ...]` from explicit parts.
pub fn system_matrix_from_parts(
    receiver: usize,
    transmitters: &[(usize, &ChannelImpulseResponse, &SignalingDictionary)],
    erasure: &ErasurePattern,
) -> Result<SystemMatrix> {
    let span = transmitters.first().map_or(0, |(_, _, d)| d.span());
    let frame_len = erasure.frame_len();
    for (j, _, dict) in transmitters {
        if dict.span() != span || dict.frame_len() != frame_len {
            return Err(Error::DimensionMismatch(format!(
                "dictionary of user {j} is {} x {}, expected {frame_len} x {span}",
                dict.frame_len(),
                dict.span()
            )));
        }
    }
    let mut entries = Mat::<Complex64>::zeros(erasure.kept(), transmitters.len() * span);
    let mut column = vec![Complex64::new(0.0, 0.0); frame_len];
    for (g, (_, h, dict)) in transmitters.iter().enumerate() {
        for (m, entries_m) in dict.columns().iter().enumerate() {
            column
                .iter_mut()
                .for_each(|v| *v = Complex64::new(0.0, 0.0));
            convolve_sparse_into(h, entries_m, &mut column);
            let col = g * span + m;
            for (r, &row) in erasure.keep_rows().iter().enumerate() {
                entries[(r, col)] = column[row];
            }
        }
    }
    Ok(SystemMatrix {
        receiver,
        transmitters: transmitters.iter().map(|(j, _, _)| *j).collect(),
        span,
        entries,
    })
}

/// `A_{-i}` for receiver `i` of `instance`.
pub fn build_system_matrix(instance: &NetworkInstance, receiver: usize) -> Result<SystemMatrix> {
    let erasure = instance.erasure(receiver)?;
    let mut parts = Vec::with_capacity(instance.user_count().saturating_sub(1));
    for (j, user) in instance.users().iter().enumerate() {
        if j != receiver {
            parts.push((j, instance.channel(receiver, j)?, &user.dictionary));
        }
    }
    system_matrix_from_parts(receiver, &parts, &erasure)
}

/// `v_{-i}`: the other users' codewords stacked in transmitter order.
pub fn stacked_codewords(instance: &NetworkInstance, receiver: usize) -> Result<Vec<Complex64>> {
    instance.user(receiver)?;
    Ok(instance
        .users()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != receiver)
        .flat_map(|(_, u)| u.codeword.values().iter().copied())
        .collect())
}

/// Decision for one transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub transmitter: usize,
    /// The decoded message, or why the group was rejected.
    pub message: std::result::Result<Message, Error>,
}

impl Decision {
    pub fn failed(&self) -> bool {
        self.message.is_err()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    pub decisions: Vec<Decision>,
    /// Absent when there is nobody to decode.
    pub solver: Option<SolverReport>,
}

impl DecodeReport {
    /// Errors against the true messages, counting failed groups as errors.
    pub fn message_errors(&self, instance: &NetworkInstance) -> usize {
        self.decisions
            .iter()
            .filter(|d| match (&d.message, instance.user(d.transmitter)) {
                (Ok(m), Ok(u)) => *m != u.message,
                _ => true,
            })
            .count()
    }
}

/// Solves for `v_{-i}` and inverts the codeword maps group by group.
pub fn decode(
    y: &[Complex64],
    a: &SystemMatrix,
    params: &CwcParams,
    settings: &SolverSettings,
) -> Result<DecodeReport> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "measurement has {} samples, system matrix has {} rows",
            y.len(),
            a.rows()
        )));
    }
    if a.span() != params.span() && !a.transmitters().is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "system matrix groups have width {}, L = {}",
            a.span(),
            params.span()
        )));
    }
    if a.transmitters().is_empty() {
        return Ok(DecodeReport {
            decisions: Vec::new(),
            solver: None,
        });
    }
    let shape = GroupShape::new(a.transmitters().len(), params.span(), params.weight())?;
    let report = match solve(y, a.as_ref(), shape, settings) {
        Ok(r) if r.stop != StopReason::NonFinite => r,
        Ok(r) => {
            return Ok(all_failed(a, "non-finite solver state".into(), Some(r)));
        }
        Err(e) => return Ok(all_failed(a, e.to_string(), None)),
    };
    let decisions = a
        .transmitters()
        .iter()
        .enumerate()
        .map(|(g, &transmitter)| {
            let message = WeightedCodeword::new(report.estimate.group(g).to_vec(), params)
                .and_then(|c| decode_codeword(&c, params));
            Decision {
                transmitter,
                message,
            }
        })
        .collect();
    Ok(DecodeReport {
        decisions,
        solver: Some(report),
    })
}

fn all_failed(a: &SystemMatrix, reason: String, solver: Option<SolverReport>) -> DecodeReport {
    DecodeReport {
        decisions: a
            .transmitters()
            .iter()
            .map(|&transmitter| Decision {
                transmitter,
                message: Err(Error::SolverFailure(reason.clone())),
            })
            .collect(),
        solver,
    }
}

/// Receive, cancel, build `A_{-i}` and decode, for receiver `i`.
pub fn receive_and_decode(
    instance: &NetworkInstance,
    receiver: usize,
    noise_seed: u64,
    settings: &SolverSettings,
) -> Result<DecodeReport> {
    let reception = receive(instance, receiver, noise_seed)?;
    let y = cancel_self_interference(&reception.observed, &reception.self_term)?;
    let a = build_system_matrix(instance, receiver)?;
    decode(&y, &a, instance.params(), settings)
}
