use ccsm::channel::{
    complex_gaussian, erasure_from_frame, make_channel, power_profile, receive,
    truncated_convolution,
};
use ccsm::cwc::{
    combination_rank_to_support, decode_codeword, encode_message, support_to_combination_rank,
    CwcParams, Message,
};
use ccsm::harness::config::DictionaryMode;
use ccsm::harness::{fresh_instance, InstanceSpec};
use ccsm::macbench::{csma_trial, CsmaConfig};
use ccsm::receiver::{build_system_matrix, cancel_self_interference, decode, stacked_codewords};
use ccsm::signaling::{encode_frame, make_dictionary, off_slot_count, SignatureAlphabet};
use ccsm::solvers::{gsp_solve, mat_vec, GroupShape, GspConfig, SolverSettings};
use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn energy(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn params() -> impl Strategy<Value = CwcParams> {
    (2usize..40, 1usize..=3).prop_flat_map(|(span, q)| {
        (1..span).prop_map(move |weight| CwcParams::new(span, weight, q).unwrap())
    })
}

fn small_spec() -> impl Strategy<Value = InstanceSpec> {
    (1usize..=5, 4usize..=32, 1usize..=32, any::<bool>()).prop_flat_map(
        |(users, span, taps, quaternary)| {
            (1..span.min(6), span..=256).prop_map(move |(weight, frame_len)| InstanceSpec {
                users,
                params: CwcParams::new(span, weight, 2).unwrap(),
                frame_len,
                taps,
                decay: 8.0,
                alphabet: if quaternary {
                    SignatureAlphabet::Quaternary
                } else {
                    SignatureAlphabet::Antipodal
                },
                dictionaries: DictionaryMode::PerTrial,
            })
        },
    )
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn codec_round_trip(p in params(), seed in any::<u64>()) {
        let message = Message::random(&p, &mut ChaCha8Rng::seed_from_u64(seed));
        let codeword = encode_message(&message, &p).unwrap();
        prop_assert_eq!(codeword.nonzero_indices().len(), p.weight());
        if p.bits_per_symbol() <= 2 {
            for &k in &codeword.nonzero_indices() {
                prop_assert!((codeword.values()[k].norm() - 1.0).abs() < 1e-12);
            }
        }
        prop_assert_eq!(decode_codeword(&codeword, &p).unwrap(), message);
    }

    #[test]
    fn ranking_is_colex_monotone(p in params(), frac in 0.0f64..1.0) {
        let bound = p.combinations();
        prop_assume!(bound >= 2);
        let r = ((bound - 1) as f64 * frac) as u128;
        let r = r.min(bound - 2);
        let a = combination_rank_to_support(r, &p).unwrap();
        let b = combination_rank_to_support(r + 1, &p).unwrap();
        let mut ra = a.support().to_vec();
        let mut rb = b.support().to_vec();
        ra.reverse();
        rb.reverse();
        prop_assert!(ra < rb);
        prop_assert_eq!(support_to_combination_rank(&b, &p).unwrap(), r + 1);
    }

    #[test]
    fn dictionary_supports_are_disjoint(span in 2usize..48, extra in 0usize..200, weight in 1usize..4, seed in any::<u64>()) {
        prop_assume!(weight < span);
        let p = CwcParams::new(span, weight, 2).unwrap();
        let frame_len = span + extra;
        let d = make_dictionary(frame_len, &p, seed).unwrap();
        let mut seen = vec![false; frame_len];
        for col in d.columns() {
            prop_assert_eq!(col.len(), frame_len / span);
            for &(row, v) in col {
                prop_assert!(!seen[row]);
                seen[row] = true;
                prop_assert!((v.norm() - 1.0).abs() < 1e-15);
            }
        }
        let message = Message::random(&p, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let frame = encode_frame(&encode_message(&message, &p).unwrap(), &d, &p).unwrap();
        prop_assert_eq!(erasure_from_frame(&frame).kept(), off_slot_count(frame_len, &p));
    }

    #[test]
    fn convolution_is_linear(taps in 1usize..40, len in 1usize..120, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = make_channel(taps, 8.0, seed).unwrap();
        let x: Vec<_> = (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let z: Vec<_> = (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let a = complex_gaussian(&mut rng, 1.0);
        let b = complex_gaussian(&mut rng, 1.0);
        let mixed: Vec<_> = x.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
        let lhs = truncated_convolution(&h, &mixed);
        let cx = truncated_convolution(&h, &x);
        let cz = truncated_convolution(&h, &z);
        let rhs: Vec<_> = cx.iter().zip(&cz).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * energy(&rhs).max(1e-300));
        prop_assert_eq!(lhs.len(), len);
    }

    #[test]
    fn power_profile_sums_to_one(taps in 1usize..200, decay in 0.1f64..100.0) {
        let p = power_profile(taps, decay);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn erasure_is_idempotent(spec in small_spec(), seed in any::<u64>()) {
        let inst = fresh_instance(&spec, seed, 0).unwrap();
        let e = inst.erasure(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<_> = (0..spec.frame_len).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let once = e.apply(&v);
        prop_assert_eq!(e.apply(&e.expand(&once)), once);
    }

    #[test]
    fn linear_model_and_cancellation(spec in small_spec(), seed in any::<u64>(), trial in 0u64..1000) {
        let inst = fresh_instance(&spec, seed, trial).unwrap();
        for i in 0..spec.users {
            let rx = receive(&inst, i, seed).unwrap();
            let y = cancel_self_interference(&rx.observed, &rx.self_term).unwrap();
            let a = build_system_matrix(&inst, i).unwrap();
            let v = stacked_codewords(&inst, i).unwrap();
            let model = mat_vec(a.as_ref(), &v);
            let scale = energy(&y).max(energy(&rx.self_term)).max(1e-300);
            prop_assert!(dist(&y, &model) <= 1e-10 * scale);
            prop_assert_eq!(&build_system_matrix(&inst, i).unwrap(), &a);
        }
    }

    #[test]
    fn decode_is_deterministic(spec in small_spec(), seed in any::<u64>()) {
        let inst = fresh_instance(&spec, seed, 0).unwrap().with_noise_variance(0.1);
        let rx = receive(&inst, 0, seed).unwrap();
        let y = cancel_self_interference(&rx.observed, &rx.self_term).unwrap();
        let a = build_system_matrix(&inst, 0).unwrap();
        let s = SolverSettings::default();
        prop_assert_eq!(decode(&y, &a, inst.params(), &s).unwrap(), decode(&y, &a, inst.params(), &s).unwrap());
    }

    #[test]
    fn gsp_keeps_group_cardinality(groups in 1usize..5, span in 4usize..20, rows in 4usize..60, seed in any::<u64>()) {
        let weight = 1 + (seed as usize) % (span / 2);
        let shape = GroupShape::new(groups, span, weight).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(rows, shape.len(), |_, _| complex_gaussian(&mut rng, 1.0));
        let y: Vec<_> = (0..rows).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let report = gsp_solve(&y, a.as_ref(), &GspConfig { trace: true, ..GspConfig::new(shape) }).unwrap();
        for g in report.estimate.supports() {
            prop_assert_eq!(g.len(), weight);
        }
        let best = report.trace.iter().map(|t| t.residual).fold(f64::INFINITY, f64::min);
        prop_assert!((report.residual_norm - best).abs() <= 1e-9 * best.max(1.0));
    }

    #[test]
    fn gsp_is_permutation_equivariant(seed in any::<u64>()) {
        let shape = GroupShape::new(3, 12, 2).unwrap();
        let rows = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(rows, shape.len(), |_, _| complex_gaussian(&mut rng, 1.0 / rows as f64));
        let mut v = vec![Complex64::new(0.0, 0.0); shape.len()];
        for g in 0..3 {
            let mut idx: Vec<usize> = (0..12).collect();
            idx.shuffle(&mut rng);
            for &k in &idx[..2] {
                v[g * 12 + k] = Complex64::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 1.0) / 2f64.sqrt();
            }
        }
        let y = mat_vec(a.as_ref(), &v);
        let perm: Vec<usize> = (0..3).flat_map(|g| {
            let mut p: Vec<usize> = (0..12).collect();
            p.shuffle(&mut rng);
            p.into_iter().map(move |k| g * 12 + k)
        }).collect();
        // column c of the permuted matrix is column perm[c] of the original
        let ap = Mat::from_fn(rows, shape.len(), |r, c| a[(r, perm[c])]);
        let base = gsp_solve(&y, a.as_ref(), &GspConfig::new(shape)).unwrap();
        let permuted = gsp_solve(&y, ap.as_ref(), &GspConfig::new(shape)).unwrap();
        for c in 0..shape.len() {
            prop_assert!((permuted.estimate.values()[c] - base.estimate.values()[perm[c]]).norm() < 1e-9);
        }
    }

    #[test]
    fn csma_conserves_time(users in 1usize..30, seed in any::<u64>()) {
        let config = CsmaConfig { users, ..CsmaConfig::default() };
        let t = csma_trial(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(t.completed);
        prop_assert_eq!(t.breakdown.success, users as u64 * 41);
        prop_assert_eq!(t.breakdown.collision % 41, 0);
    }
}
