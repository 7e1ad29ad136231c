//! Scenario runners. Every trial is an independently seeded unit of work;
//! per-trial counts are collected in trial order and summed, so results do
//! not depend on how many threads ran them.

use faer::Mat;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{complex_gaussian, receive_with_noise, NetworkInstance, Reception};
use crate::cwc::{Constellation, CwcParams};
use crate::error::Result;
use crate::harness::config::{noise_variance_for_snr, ExperimentConfig, ScenarioKind};
use crate::harness::instance::{fresh_instance, noise_seed, InstanceSpec};
use crate::harness::seeds::{stream_seed, Stream};
use crate::harness::table::{fmt_point, proportion_stderr, ResultTable};
use crate::macbench::{csma_simulate, tdma_slots, tdma_throughput, CsmaConfig};
use crate::receiver::{
    build_system_matrix, cancel_self_interference, decode, stacked_codewords, SystemMatrix,
};
use crate::signaling::bits_per_frame;
use crate::solvers::{
    gsp_solve, mat_vec, solve, GroupShape, GroupSparseEstimate, GspConfig, IterationTrace,
    SolverSettings,
};

/// Receives progress lines; `&|_| {}` discards them.
pub type Progress<'a> = &'a (dyn Fn(&str) + Sync);

/// Runs the scenario named in `config`.
pub fn run_scenario(config: &ExperimentConfig, progress: Progress<'_>) -> Result<ResultTable> {
    config.validate()?;
    match config.scenario {
        ScenarioKind::MerSweep => run_mer_sweep(config, progress),
        ScenarioKind::MminSearch => run_mmin_search(config, progress),
        ScenarioKind::SolverStudy => run_solver_study(config, progress),
        ScenarioKind::MacCompare => run_mac_compare(config, progress),
    }
}

fn decode_errors(
    instance: &NetworkInstance,
    reception: &Reception,
    a: &SystemMatrix,
    solver: &SolverSettings,
) -> Result<usize> {
    let y = cancel_self_interference(&reception.observed, &reception.self_term)?;
    Ok(decode(&y, a, instance.params(), solver)?.message_errors(instance))
}

/// Message errors of one trial at every noise level, summed over receivers.
fn mer_trial(
    spec: &InstanceSpec,
    master: u64,
    trial: u64,
    noise: &[f64],
    solver: &SolverSettings,
) -> Result<Vec<usize>> {
    let instance = fresh_instance(spec, master, trial)?;
    let mut errors = vec![0; noise.len()];
    for i in 0..instance.user_count() {
        let a = build_system_matrix(&instance, i)?;
        for (slot, &var) in noise.iter().enumerate() {
            let reception = receive_with_noise(&instance, i, var, noise_seed(master, trial, i))?;
            errors[slot] += decode_errors(&instance, &reception, &a, solver)?;
        }
    }
    Ok(errors)
}

/// Message error rate over the `(M, SNR)` grid. Each trial draws one
/// network and reuses it, and its noise shape, at every SNR.
pub fn run_mer_sweep(config: &ExperimentConfig, progress: Progress<'_>) -> Result<ResultTable> {
    config.validate()?;
    let users = config.ccsm.users;
    let noise: Vec<f64> = config
        .mer
        .snr_db
        .iter()
        .map(|&s| noise_variance_for_snr(s))
        .collect();
    let mut table = ResultTable::new(ScenarioKind::MerSweep.name(), &["users", "M", "snr_db"]);
    let decisions = config.trials * users * users.saturating_sub(1);
    for &frame_len in &config.ccsm.frame_lengths {
        let spec = InstanceSpec::from_section(&config.ccsm, users, frame_len)?;
        let per_trial = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| mer_trial(&spec, config.seed, t, &noise, &config.solver))
            .collect::<Result<Vec<_>>>()?;
        for (slot, &snr) in config.mer.snr_db.iter().enumerate() {
            let errors: usize = per_trial.iter().map(|e| e[slot]).sum();
            let mer = if decisions == 0 {
                0.0
            } else {
                errors as f64 / decisions as f64
            };
            let point = vec![users.to_string(), frame_len.to_string(), fmt_point(snr)];
            table.push(
                point.clone(),
                "mer",
                mer,
                config.trials,
                proportion_stderr(mer, decisions),
            );
            table.push(
                point.clone(),
                "message_errors",
                errors as f64,
                config.trials,
                0.0,
            );
            table.push(point, "decisions", decisions as f64, config.trials, 0.0);
            progress(&format!(
                "mer users={users} M={frame_len} snr_db={snr}: {errors}/{decisions}"
            ));
        }
    }
    Ok(table)
}

/// One frame length tried during an `M_min` search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MminAttempt {
    pub frame_len: usize,
    pub trials_run: usize,
    pub message_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MminOutcome {
    pub users: usize,
    pub m_min: Option<usize>,
    pub trials: usize,
    pub attempts: Vec<MminAttempt>,
}

/// Errors of one trial at a fixed noise level; stops at the first failing receiver.
fn first_failure_trial(
    spec: &InstanceSpec,
    master: u64,
    trial: u64,
    var: f64,
    solver: &SolverSettings,
) -> Result<usize> {
    let instance = fresh_instance(spec, master, trial)?;
    for i in 0..instance.user_count() {
        let a = build_system_matrix(&instance, i)?;
        let reception = receive_with_noise(&instance, i, var, noise_seed(master, trial, i))?;
        let errors = decode_errors(&instance, &reception, &a, solver)?;
        if errors > 0 {
            return Ok(errors);
        }
    }
    Ok(0)
}

/// Smallest frame length on the ascending grid `ceil(users * x)` with no
/// message error in `config.trials` trials. Trials run in chunks of
/// `mmin.chunk`; a frame length is abandoned after the first chunk that
/// contains an error.
pub fn mmin_search(
    config: &ExperimentConfig,
    users: usize,
    progress: Progress<'_>,
) -> Result<MminOutcome> {
    config.validate()?;
    let var = noise_variance_for_snr(config.mmin.snr_db);
    let params = config.ccsm.params()?;
    let mut grid: Vec<usize> = config
        .mmin
        .m_per_user
        .iter()
        .map(|x| ((users as f64 * x).ceil() as usize).max(params.span()))
        .collect();
    grid.dedup();
    let mut attempts = Vec::new();
    for frame_len in grid {
        let spec = InstanceSpec::from_section(&config.ccsm, users, frame_len)?;
        let mut trials_run = 0;
        let mut message_errors = 0;
        while trials_run < config.trials && message_errors == 0 {
            let end = (trials_run + config.mmin.chunk).min(config.trials);
            message_errors = (trials_run as u64..end as u64)
                .into_par_iter()
                .map(|t| first_failure_trial(&spec, config.seed, t, var, &config.solver))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            trials_run = end;
        }
        progress(&format!(
            "mmin users={users} M={frame_len}: {message_errors} errors in {trials_run} trials"
        ));
        attempts.push(MminAttempt {
            frame_len,
            trials_run,
            message_errors,
        });
        if message_errors == 0 {
            return Ok(MminOutcome {
                users,
                m_min: Some(frame_len),
                trials: config.trials,
                attempts,
            });
        }
    }
    Ok(MminOutcome {
        users,
        m_min: None,
        trials: config.trials,
        attempts,
    })
}

fn push_mmin_rows(table: &mut ResultTable, outcome: &MminOutcome, message_bits: usize) {
    let users = outcome.users.to_string();
    for a in &outcome.attempts {
        let point = vec![users.clone(), a.frame_len.to_string()];
        table.push(
            point,
            "message_errors",
            a.message_errors as f64,
            a.trials_run,
            0.0,
        );
    }
    match outcome.m_min {
        Some(m) => {
            let point = vec![users.clone(), m.to_string()];
            table.push(point.clone(), "m_min", m as f64, outcome.trials, 0.0);
            let throughput = (outcome.users * message_bits) as f64 / m as f64;
            table.push(point, "throughput", throughput, outcome.trials, 0.0);
        }
        None => {
            let point = vec![users, "none".into()];
            table.push(point.clone(), "m_min", f64::NAN, outcome.trials, 0.0);
            table.push(point, "throughput", f64::NAN, outcome.trials, 0.0);
        }
    }
}

/// `M_min` and the resulting throughput for every network size in `[mmin]`.
pub fn run_mmin_search(config: &ExperimentConfig, progress: Progress<'_>) -> Result<ResultTable> {
    config.validate()?;
    let message_bits = bits_per_frame(&config.ccsm.params()?);
    let mut table = ResultTable::new(ScenarioKind::MminSearch.name(), &["users", "M"]);
    for &users in &config.mmin.users {
        let outcome = mmin_search(config, users, progress)?;
        push_mmin_rows(&mut table, &outcome, message_bits);
    }
    Ok(table)
}

/// A planted group-sparse problem with a dense complex Gaussian matrix.
struct SyntheticProblem {
    a: Mat<Complex64>,
    clean: Vec<Complex64>,
    noise: Vec<Complex64>,
    truth: GroupSparseEstimate,
}

fn synthetic_problem(shape: &GroupShape, rows: usize, master: u64, trial: u64) -> SyntheticProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(
        master,
        Stream::Measurement,
        trial,
        rows as u64,
        0,
    ));
    let var = 1.0 / rows as f64;
    let a = Mat::from_fn(rows, shape.len(), |_, _| complex_gaussian(&mut rng, var));
    let qpsk = Constellation::new(2).points();
    let supports: Vec<Vec<usize>> = (0..shape.groups)
        .map(|_| {
            let mut s = sample(&mut rng, shape.span, shape.weight).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let coefficients: Vec<Complex64> = (0..shape.active())
        .map(|_| qpsk[rng.gen_range(0..qpsk.len())])
        .collect();
    let truth = GroupSparseEstimate::from_supports(shape, supports, &coefficients);
    let clean = mat_vec(a.as_ref(), truth.values());
    let mut noise_rng =
        ChaCha8Rng::seed_from_u64(stream_seed(master, Stream::Noise, trial, rows as u64, 0));
    let noise = (0..rows)
        .map(|_| complex_gaussian(&mut noise_rng, 1.0))
        .collect();
    SyntheticProblem {
        a,
        clean,
        noise,
        truth,
    }
}

/// A group is correct when its support and every symbol decision match.
fn group_errors(
    estimate: &GroupSparseEstimate,
    truth: &GroupSparseEstimate,
    constellation: &Constellation,
) -> usize {
    (0..truth.group_count())
        .filter(|&g| {
            estimate.supports()[g] != truth.supports()[g]
                || truth.supports()[g].iter().any(|&k| {
                    constellation.decide(estimate.group(g)[k])
                        != constellation.decide(truth.group(g)[k])
                })
        })
        .count()
}

/// Group and whole-vector error rates of each solver on synthetic problems.
/// The SNR is per measurement: `E|(A v)_m|^2 / sigma^2` with `A` entries of
/// variance `1 / rows`.
pub fn run_solver_study(config: &ExperimentConfig, progress: Progress<'_>) -> Result<ResultTable> {
    config.validate()?;
    let study = &config.solver_study;
    let shape = GroupShape::new(study.groups, study.span, study.weight)?;
    let constellation = Constellation::new(2);
    let mut table = ResultTable::new(
        ScenarioKind::SolverStudy.name(),
        &["rows", "snr_db", "solver"],
    );
    for &rows in &study.rows {
        let signal_power = shape.active() as f64 / rows as f64;
        let per_trial = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| -> Result<Vec<(usize, usize)>> {
                let p = synthetic_problem(&shape, rows, config.seed, t);
                let mut counts = Vec::with_capacity(study.snr_db.len() * study.solvers.len());
                for &snr in &study.snr_db {
                    let sigma = (signal_power * noise_variance_for_snr(snr)).sqrt();
                    let y: Vec<Complex64> = p
                        .clean
                        .iter()
                        .zip(&p.noise)
                        .map(|(c, z)| c + z * sigma)
                        .collect();
                    for solver in &study.solvers {
                        let report = solve(&y, p.a.as_ref(), shape, solver)?;
                        let wrong = group_errors(&report.estimate, &p.truth, &constellation);
                        counts.push((wrong, usize::from(wrong > 0)));
                    }
                }
                Ok(counts)
            })
            .collect::<Result<Vec<_>>>()?;
        for (si, &snr) in study.snr_db.iter().enumerate() {
            for (ki, solver) in study.solvers.iter().enumerate() {
                let slot = si * study.solvers.len() + ki;
                let groups: usize = per_trial.iter().map(|c| c[slot].0).sum();
                let trials_wrong: usize = per_trial.iter().map(|c| c[slot].1).sum();
                let n_groups = config.trials * shape.groups;
                let ger = groups as f64 / n_groups as f64;
                let ter = trials_wrong as f64 / config.trials as f64;
                let point = vec![rows.to_string(), fmt_point(snr), solver.name().to_string()];
                table.push(
                    point.clone(),
                    "group_error_rate",
                    ger,
                    config.trials,
                    proportion_stderr(ger, n_groups),
                );
                table.push(
                    point,
                    "trial_error_rate",
                    ter,
                    config.trials,
                    proportion_stderr(ter, config.trials),
                );
                progress(&format!(
                    "solvers rows={rows} snr_db={snr} {}: group error rate {ger}",
                    solver.name()
                ));
            }
        }
    }
    Ok(table)
}

/// Throughput of TDMA, CSMA/CA and (optionally) CCSM per network size.
pub fn run_mac_compare(config: &ExperimentConfig, progress: Progress<'_>) -> Result<ResultTable> {
    config.validate()?;
    let params = config.ccsm.params()?;
    let message_bits = bits_per_frame(&params);
    let mac = &config.mac;
    let duration = tdma_slots(message_bits, params.bits_per_symbol(), mac.guard_overhead)?;
    let mut table = ResultTable::new(ScenarioKind::MacCompare.name(), &["users", "scheme"]);
    for &users in &mac.users {
        let tdma = tdma_throughput(
            message_bits,
            params.bits_per_symbol(),
            mac.guard_overhead,
            users,
        )?;
        table.push(
            vec![users.to_string(), "tdma".into()],
            "throughput",
            tdma.bits_per_symbol_interval,
            1,
            0.0,
        );

        let csma = csma_simulate(&CsmaConfig {
            users,
            message_bits,
            message_duration: duration,
            cw_min: mac.cw_min,
            cw_max: mac.cw_max,
            trials: mac.csma_trials,
            seed: config.seed,
            interval_budget: mac.interval_budget,
        })?;
        let value = if csma.achieved {
            csma.bits_per_symbol_interval
        } else {
            f64::NAN
        };
        table.push(
            vec![users.to_string(), "csma".into()],
            "throughput",
            value,
            csma.trials,
            csma.std_error,
        );
        progress(&format!(
            "mac users={users}: tdma {} csma {value}",
            tdma.bits_per_symbol_interval
        ));

        if mac.ccsm {
            let outcome = mmin_search(config, users, progress)?;
            let value = outcome
                .m_min
                .map_or(f64::NAN, |m| (users * message_bits) as f64 / m as f64);
            table.push(
                vec![users.to_string(), "ccsm".into()],
                "throughput",
                value,
                outcome.trials,
                0.0,
            );
        }
    }
    Ok(table)
}

/// Everything needed to replay one decode by hand.
#[derive(Debug, Clone, Serialize)]
pub struct DebugBundle {
    pub params: CwcParams,
    pub frame_len: usize,
    pub noise_variance: f64,
    pub receiver: usize,
    pub instance: NetworkInstance,
    pub observed: Vec<Complex64>,
    pub self_term: Vec<Complex64>,
    pub cancelled: Vec<Complex64>,
    /// `v_{-i}` of the instance.
    pub truth: Vec<Complex64>,
    pub estimate: Vec<Complex64>,
    pub trace: Vec<String>,
}

/// Trial 0 of the first grid point, seen from receiver 0.
pub fn debug_bundle(config: &ExperimentConfig) -> Result<DebugBundle> {
    config.validate()?;
    let frame_len = config.ccsm.frame_lengths[0];
    let spec = InstanceSpec::from_section(&config.ccsm, config.ccsm.users, frame_len)?;
    let instance = fresh_instance(&spec, config.seed, 0)?;
    let noise_variance = noise_variance_for_snr(config.mer.snr_db[0]);
    let receiver = 0;
    let reception = receive_with_noise(
        &instance,
        receiver,
        noise_variance,
        noise_seed(config.seed, 0, receiver),
    )?;
    let cancelled = cancel_self_interference(&reception.observed, &reception.self_term)?;
    let a = build_system_matrix(&instance, receiver)?;
    let (estimate, trace) = if a.transmitters().is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let shape = GroupShape::new(
            a.transmitters().len(),
            spec.params.span(),
            spec.params.weight(),
        )?;
        let report = match &config.solver {
            SolverSettings::Gsp(settings) => gsp_solve(
                &cancelled,
                a.as_ref(),
                &GspConfig {
                    shape,
                    settings: *settings,
                    trace: true,
                },
            )?,
            other => solve(&cancelled, a.as_ref(), shape, other)?,
        };
        (
            report.estimate.values().to_vec(),
            report.trace.iter().map(IterationTrace::to_string).collect(),
        )
    };
    Ok(DebugBundle {
        params: spec.params,
        frame_len,
        noise_variance,
        receiver,
        truth: stacked_codewords(&instance, receiver)?,
        instance,
        observed: reception.observed,
        self_term: reception.self_term,
        cancelled,
        estimate,
        trace,
    })
}
