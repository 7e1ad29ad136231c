//! MAC-layer baselines: centralized TDMA with guard intervals and an
//! idealized CSMA/CA (DCF basic access, broadcast) simulator.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::seeds::{stream_seed, Stream};

/// Symbol intervals spent in each medium state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakdown {
    pub success: u64,
    pub collision: u64,
    pub idle: u64,
}

impl Breakdown {
    pub fn total(&self) -> u64 {
        self.success + self.collision + self.idle
    }

    fn add(self, other: Breakdown) -> Breakdown {
        Breakdown {
            success: self.success + other.success,
            collision: self.collision + other.collision,
            idle: self.idle + other.idle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub users: usize,
    /// Delivered bits over elapsed symbol intervals, pooled over trials.
    pub bits_per_symbol_interval: f64,
    /// Summed over all trials.
    pub breakdown: Breakdown,
    pub trials: usize,
    /// Standard error of the per-trial throughput mean; zero for closed forms.
    pub std_error: f64,
    /// False when some trial hit its interval budget or no error-free frame length was found.
    pub achieved: bool,
}

/// `ceil(x)` that absorbs representation error when `x` is an integer in exact arithmetic.
fn ceil_tolerant(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

/// Symbol intervals per TDMA message: `ceil((bits / q) / (1 - guard))`.
pub fn tdma_slots(message_bits: usize, bits_per_symbol: usize, guard_overhead: f64) -> Result<u64> {
    if message_bits == 0 || bits_per_symbol == 0 {
        return Err(Error::param(
            "message_bits",
            "message and symbol sizes must be positive",
        ));
    }
    if !(0.0..1.0).contains(&guard_overhead) {
        return Err(Error::param(
            "guard_overhead",
            format!("must lie in [0, 1), got {guard_overhead}"),
        ));
    }
    Ok(ceil_tolerant(
        message_bits as f64 / bits_per_symbol as f64 / (1.0 - guard_overhead),
    ))
}

/// Idealized TDMA: every user gets one guarded slot per round.
pub fn tdma_throughput(
    message_bits: usize,
    bits_per_symbol: usize,
    guard_overhead: f64,
    users: usize,
) -> Result<ThroughputReport> {
    if users == 0 {
        return Err(Error::param("users", "need at least one user"));
    }
    let slots = tdma_slots(message_bits, bits_per_symbol, guard_overhead)?;
    Ok(ThroughputReport {
        users,
        bits_per_symbol_interval: message_bits as f64 / slots as f64,
        breakdown: Breakdown {
            success: slots * users as u64,
            ..Breakdown::default()
        },
        trials: 1,
        std_error: 0.0,
        achieved: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsmaConfig {
    pub users: usize,
    pub message_bits: usize,
    /// Symbol intervals per transmission, guard included.
    pub message_duration: u64,
    pub cw_min: u64,
    pub cw_max: u64,
    pub trials: usize,
    pub seed: u64,
    /// Per-trial cap on simulated intervals.
    pub interval_budget: u64,
}

impl Default for CsmaConfig {
    fn default() -> Self {
        Self {
            users: 20,
            message_bits: 65,
            message_duration: 41,
            cw_min: 16,
            cw_max: 1024,
            trials: 1000,
            seed: 0,
            interval_budget: 10_000_000,
        }
    }
}

impl CsmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::param("users", "need at least one user"));
        }
        if self.message_duration == 0 || self.message_bits == 0 {
            return Err(Error::param(
                "message_duration",
                "message size and duration must be positive",
            ));
        }
        if !self.cw_min.is_power_of_two() || !self.cw_max.is_power_of_two() {
            return Err(Error::param(
                "cw_min",
                "contention windows must be powers of two",
            ));
        }
        if self.cw_min > self.cw_max {
            return Err(Error::param(
                "cw_min",
                format!("cw_min = {} exceeds cw_max = {}", self.cw_min, self.cw_max),
            ));
        }
        if self.trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        Ok(())
    }
}

/// One contention episode until every user has delivered its message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsmaTrial {
    pub breakdown: Breakdown,
    pub completed: bool,
}

/// Runs one episode. Counters decrement once per idle interval and freeze
/// while the medium is busy; simultaneous expiries collide, double their
/// window and redraw.
pub fn csma_trial<R: Rng + ?Sized>(config: &CsmaConfig, rng: &mut R) -> CsmaTrial {
    let duration = config.message_duration;
    let mut windows = vec![config.cw_min; config.users];
    let mut counters: Vec<u64> = windows.iter().map(|&w| rng.gen_range(0..w)).collect();
    let mut pending: Vec<usize> = (0..config.users).collect();
    let mut breakdown = Breakdown::default();

    while !pending.is_empty() {
        let elapsed = breakdown.total();
        let wait = pending.iter().map(|&u| counters[u]).min().unwrap_or(0);
        if wait > 0 {
            if elapsed + wait > config.interval_budget {
                breakdown.idle += config.interval_budget.saturating_sub(elapsed);
                return CsmaTrial {
                    breakdown,
                    completed: false,
                };
            }
            breakdown.idle += wait;
            for &u in &pending {
                counters[u] -= wait;
            }
        }
        if breakdown.total() + duration > config.interval_budget {
            return CsmaTrial {
                breakdown,
                completed: false,
            };
        }
        let starters: Vec<usize> = pending
            .iter()
            .copied()
            .filter(|&u| counters[u] == 0)
            .collect();
        if let [winner] = starters[..] {
            breakdown.success += duration;
            pending.retain(|&u| u != winner);
        } else {
            breakdown.collision += duration;
            for u in starters {
                windows[u] = (windows[u] * 2).min(config.cw_max);
                counters[u] = rng.gen_range(0..windows[u]);
            }
        }
    }
    CsmaTrial {
        breakdown,
        completed: true,
    }
}

/// Monte-Carlo CSMA/CA throughput: total delivered bits over total
/// intervals across trials.
pub fn csma_simulate(config: &CsmaConfig) -> Result<ThroughputReport> {
    config.validate()?;
    let outcomes: Vec<CsmaTrial> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
                config.seed,
                Stream::Csma,
                t,
                config.users as u64,
                0,
            ));
            csma_trial(config, &mut rng)
        })
        .collect();
    let breakdown = outcomes
        .iter()
        .fold(Breakdown::default(), |acc, o| acc.add(o.breakdown));
    let achieved = outcomes.iter().all(|o| o.completed);
    let delivered = (config.users * config.message_bits) as f64;
    let per_trial: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            if o.completed {
                delivered / o.breakdown.total() as f64
            } else {
                0.0
            }
        })
        .collect();
    let bits_per_symbol_interval = if achieved {
        delivered * config.trials as f64 / breakdown.total() as f64
    } else {
        0.0
    };
    Ok(ThroughputReport {
        users: config.users,
        bits_per_symbol_interval,
        breakdown,
        trials: config.trials,
        std_error: std_error_of_mean(&per_trial),
        achieved,
    })
}

fn std_error_of_mean(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// CCSM throughput `(N + 1) * bits / M_min`; not achieved when no frame
/// length in the searched grid was error-free.
pub fn ccsm_throughput(
    users: usize,
    message_bits: usize,
    m_min: Option<usize>,
    trials: usize,
) -> ThroughputReport {
    let (bits_per_symbol_interval, success) = match m_min {
        Some(m) if m > 0 => (
            (users * message_bits) as f64 / m as f64,
            (m * trials) as u64,
        ),
        _ => (0.0, 0),
    };
    ThroughputReport {
        users,
        bits_per_symbol_interval,
        breakdown: Breakdown {
            success,
            ..Breakdown::default()
        },
        trials,
        std_error: 0.0,
        achieved: bits_per_symbol_interval > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tdma_closed_form() {
        assert_eq!(tdma_slots(65, 2, 0.20).unwrap(), 41);
        let r = tdma_throughput(65, 2, 0.20, 7).unwrap();
        assert_eq!(r.bits_per_symbol_interval, 65.0 / 41.0);
        assert_eq!(
            tdma_throughput(65, 2, 0.20, 1)
                .unwrap()
                .bits_per_symbol_interval,
            65.0 / 41.0
        );
        assert_eq!(tdma_slots(65, 2, 0.0).unwrap(), 33);
        assert_eq!(tdma_slots(64, 2, 0.20).unwrap(), 40);
        assert_eq!(
            tdma_throughput(64, 2, 0.20, 3)
                .unwrap()
                .bits_per_symbol_interval,
            1.6
        );
        assert!(tdma_slots(65, 2, 1.0).is_err());
    }

    #[test]
    fn single_user_waits_only_for_backoff() {
        let config = CsmaConfig {
            users: 1,
            ..CsmaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = csma_trial(&config, &mut rng);
            assert!(t.completed);
            assert_eq!(t.breakdown.collision, 0);
            assert_eq!(t.breakdown.success, 41);
            assert!(t.breakdown.idle < 16);
        }
    }

    #[test]
    fn time_is_conserved() {
        let config = CsmaConfig {
            users: 12,
            ..CsmaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let t = csma_trial(&config, &mut rng);
            assert!(t.completed);
            assert_eq!(t.breakdown.success, 12 * 41);
            assert_eq!(t.breakdown.collision % 41, 0);
        }
    }

    #[test]
    fn unit_window_never_resolves() {
        let config = CsmaConfig {
            users: 2,
            cw_min: 1,
            cw_max: 1,
            trials: 3,
            interval_budget: 10_000,
            ..CsmaConfig::default()
        };
        let report = csma_simulate(&config).unwrap();
        assert!(!report.achieved);
        assert_eq!(report.breakdown.success, 0);
        assert!(report.breakdown.total() <= 3 * 10_000);
    }

    #[test]
    fn config_validation() {
        assert!(CsmaConfig {
            cw_min: 12,
            ..CsmaConfig::default()
        }
        .validate()
        .is_err());
        assert!(CsmaConfig {
            cw_min: 2048,
            ..CsmaConfig::default()
        }
        .validate()
        .is_err());
        assert!(CsmaConfig {
            users: 0,
            ..CsmaConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn simulation_is_reproducible() {
        let config = CsmaConfig {
            users: 5,
            trials: 50,
            seed: 9,
            ..CsmaConfig::default()
        };
        assert_eq!(
            csma_simulate(&config).unwrap(),
            csma_simulate(&config).unwrap()
        );
    }

    #[test]
    fn ccsm_formula() {
        let a = ccsm_throughput(5, 65, Some(400), 10);
        let b = ccsm_throughput(5, 65, Some(200), 10);
        assert_eq!(b.bits_per_symbol_interval, 2.0 * a.bits_per_symbol_interval);
        assert!(!ccsm_throughput(5, 65, None, 10).achieved);
    }
}
