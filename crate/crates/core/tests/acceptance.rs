//! End-to-end acceptance checks. Each criterion prints one verdict line;
//! the process exits non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use kexprint::calibration::{sample_symbol_baseline, sample_uniform_baseline, threshold_at, Baseline, CalibrationTable, DEFAULT_SAMPLES, DEFAULT_SEED};
use kexprint::detector::{expand_runs, filter_noise, run_length, Detector, DetectorConfig, LabelSequence, Stage};
use kexprint::entropy::{exact_truncated_entropy, prob_all_distinct, sample_entropy, split_symbols, window_scan, TauMeasure};
use kexprint::fingerprint::{builtin_fingerprints, Matcher};
use kexprint::ingest::pcap::LINKTYPE_ETHERNET;
use kexprint::ingest::{reassemble, ReassemblyOptions};
use kexprint::synth::{gen_ascii_text, gen_filler, gen_nugache_like, gen_tls_like};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn detector(confidence: f64) -> Detector {
    let config = DetectorConfig {
        confidence,
        ..DetectorConfig::default()
    };
    let table = CalibrationTable::compute(&[config.window], &config.measures, DEFAULT_SAMPLES, DEFAULT_SEED, confidence).unwrap();
    Detector::new(config, &table).unwrap()
}

fn matchers() -> Vec<Matcher> {
    builtin_fingerprints().iter().map(|f| f.compile()).collect()
}

fn index_of(matchers: &[Matcher], name: &str) -> usize {
    matchers.iter().position(|m| m.name() == name).unwrap()
}

fn uniform(window: usize, tau: TauMeasure) -> Baseline {
    sample_uniform_baseline(window, tau, DEFAULT_SAMPLES, DEFAULT_SEED).unwrap()
}

fn criterion_1() -> Outcome {
    let reference = [
        (16, 3.94199, 0.08290),
        (32, 4.88171, 0.08134),
        (64, 5.76562, 0.07664),
        (128, 6.55003, 0.06733),
        (256, 7.17518, 0.05240),
        (512, 7.59073, 0.03364),
        (1024, 7.80894, 0.01726),
        (2048, 7.90804, 0.00814),
    ];
    let start = Instant::now();
    let mut worst_mu = 0.0f64;
    let mut worst_sigma = 0.0f64;
    let mut bad = Vec::new();
    for (n, mu, sigma) in reference {
        let b = uniform(n, TauMeasure::EIGHT);
        let dmu = (b.mu - mu).abs();
        let dsigma = (b.sigma - sigma).abs() / sigma;
        worst_mu = worst_mu.max(dmu);
        worst_sigma = worst_sigma.max(dsigma);
        if dmu > 0.002 || dsigma > 0.10 {
            bad.push(format!("N={n} mu={:.5} sigma={:.5}", b.mu, b.sigma));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        bad.is_empty() && secs <= 300.0,
        format!("max |dmu| {worst_mu:.5}, max sigma rel err {:.1}%, {secs:.1}s {}", worst_sigma * 100.0, bad.join("; ")),
    )
}

fn criterion_2() -> Outcome {
    let reference = [(TauMeasure::ONE, 0.9971), (TauMeasure::TWO, 1.9829), (TauMeasure::FOUR, 3.8196), (TauMeasure::EIGHT, 4.8817)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (tau, mu) in reference {
        let b = uniform(32, tau);
        ok &= (b.mu - mu).abs() <= 0.002;
        parts.push(format!("tau={tau} mu={:.4}", b.mu));
    }
    check(ok, parts.join(", "))
}

fn criterion_3() -> Outcome {
    let p16 = prob_all_distinct(16, 256).unwrap();
    let p32 = prob_all_distinct(32, 256).unwrap();
    let num: BigUint = (0..32u32).map(|i| BigUint::from(256 - i)).product();
    let den = BigUint::from(256u32).pow(32);
    let exact = num.to_f64().unwrap() / den.to_f64().unwrap();
    let rel = (p32 - exact).abs() / exact;
    check(
        (p16 - 0.6197).abs() <= 1e-4 && rel <= 1e-9,
        format!("P(16,256)={p16:.5}, P(32,256)={p32:.6} (exact {exact:.6}, rel err {rel:.1e})"),
    )
}

fn criterion_4() -> Outcome {
    // only mu and sigma feed the cutoff
    let mut b = uniform(64, TauMeasure::EIGHT);
    b.mu = 5.76562;
    b.sigma = 0.07664;
    let theta = threshold_at(&b, 3.0).theta;
    check((theta - 5.53570).abs() <= 2e-5, format!("theta={theta:.5}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, n) in [2usize, 4, 8].into_iter().enumerate() {
        let b = sample_symbol_baseline(n, TauMeasure::ONE, 1_000_000, DEFAULT_SEED + i as u64).unwrap();
        let exact = exact_truncated_entropy(n, &[0.5, 0.5]).unwrap();
        let z = (b.mu - exact).abs() / b.standard_error();
        ok &= z <= 3.0;
        parts.push(format!("N={n} mc={:.5} exact={exact:.5} z={z:.2}", b.mu));
    }
    let secs = start.elapsed().as_secs_f64();
    check(ok && secs <= 60.0, format!("{}, {secs:.1}s", parts.join(", ")))
}

fn criterion_6(det: &Detector) -> Outcome {
    let pattern: Vec<u8> = [0x55u8, 0x55, 0xAA, 0xAA].repeat(32);
    let report = det.scan_bytes("balanced", &pattern);
    let one_bit = report.per_measure.iter().position(|s| s.measures == [TauMeasure::ONE]).unwrap();
    let high = report.per_measure[one_bit].high_fraction();
    let runs = report.high_runs().count();
    let bb = det.scan_bytes("bb", &[0x55u8, 0x55, 0xBB, 0xBB].repeat(32));
    let bb_high = bb.per_measure[one_bit].high_fraction();
    check(
        high > 0.5 && runs == 0,
        format!("55 55 aa aa: 1-bit high on {:.0}% of windows, {runs} high run(s) after voting and filtering (55 55 bb bb: 1-bit high on {:.0}%)", high * 100.0, bb_high * 100.0),
    )
}

fn recall_sweep(confidence: f64, ms: &[Matcher]) -> String {
    let det = detector(confidence);
    let tls = index_of(ms, "tls-dhe-rsa");
    let nug = index_of(ms, "nugache");
    let tls_hits = (0..1000).filter(|&s| det.scan(&gen_tls_like(s).0).with_matches(ms).matches[tls].matched).count();
    let nug_hits = (0..200u64)
        .filter(|&s| {
            let bits = [512, 1024, 2048][s as usize % 3];
            det.scan(&gen_nugache_like(s, bits).unwrap().0).with_matches(ms).matches[nug].matched
        })
        .count();
    format!("rho {confidence}: tls {:.1}%, nugache {:.1}%", tls_hits as f64 / 10.0, nug_hits as f64 / 2.0)
}

fn criterion_7(det: &Detector, ms: &[Matcher]) -> Outcome {
    let tls = index_of(ms, "tls-dhe-rsa");
    let refined = index_of(ms, "tls-dhe-rsa-refined");
    let mut hits = [0usize; 2];
    for seed in 0..1000 {
        let r = det.scan(&gen_tls_like(seed).0).with_matches(ms);
        hits[0] += r.matches[tls].matched as usize;
        hits[1] += r.matches[refined].matched as usize;
    }
    let false_matches = (0..1000)
        .filter(|&s| {
            let r = det.scan(&gen_filler(s, 2048).0).with_matches(ms);
            r.matches[tls].matched || r.matches[refined].matched
        })
        .count();
    let recall = hits[0] as f64 / 1000.0;
    check(
        recall >= 0.95 && false_matches == 0,
        format!(
            "recall {:.1}% (refined {:.1}%), filler matches {false_matches}",
            recall * 100.0,
            hits[1] as f64 / 10.0
        ),
    )
}

fn criterion_8(det: &Detector, ms: &[Matcher]) -> Outcome {
    let nug = index_of(ms, "nugache");
    let hits = (0..200u64)
        .filter(|&s| {
            let bits = [512, 1024, 2048][s as usize % 3];
            det.scan(&gen_nugache_like(s, bits).unwrap().0).with_matches(ms).matches[nug].matched
        })
        .count();
    let false_matches = (0..200u64)
        .filter(|&s| {
            det.scan(&gen_ascii_text(s, 2048).0).with_matches(ms).matches[nug].matched
                || det.scan(&gen_tls_like(10_000 + s).0).with_matches(ms).matches[nug].matched
        })
        .count();
    let recall = hits as f64 / 200.0;
    check(
        recall >= 0.95 && false_matches == 0,
        format!("recall {:.1}%, ascii/tls matches {false_matches}", recall * 100.0),
    )
}

const CASES: usize = 10_000;

fn incremental_matches_naive(rng: &mut ChaCha8Rng) -> usize {
    let mut windows = 0;
    while windows < CASES {
        let window = rng.random_range(16..80);
        let width = rng.random_range(1..=256u32);
        let len = window + rng.random_range(0..64);
        let stream: Vec<u8> = (0..len).map(|_| (rng.random_range(0..width)) as u8).collect();
        for tau in TauMeasure::ALL {
            let series = window_scan(&stream, window, tau).unwrap();
            for (i, &v) in series.values.iter().enumerate() {
                let naive = sample_entropy(&split_symbols(&stream[i..i + window], tau), tau.alphabet_size()).unwrap();
                assert_eq!(v.to_bits(), naive.to_bits(), "tau={tau} N={window} offset {i}");
            }
        }
        windows += series_len(len, window);
    }
    windows
}

fn series_len(len: usize, window: usize) -> usize {
    len - window + 1
}

fn filter_laws(rng: &mut ChaCha8Rng) {
    for _ in 0..CASES {
        let labels = common::random_labels(rng, 200);
        let xi = rng.random_range(0..16);
        let bits: String = labels.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let seq = LabelSequence::from_bits("p", 32, &bits, Stage::Voted);
        let once = filter_noise(&seq, xi);
        let twice = filter_noise(&once, xi);
        assert_eq!(once.labels, twice.labels);
        assert!(run_length(&once.labels).iter().all(|r| !r.sign.is_high() || r.len > xi));
        // only highs are ever dropped
        assert!(once.labels.iter().zip(&labels).all(|(&a, &b)| !a || b));
    }
}

fn run_length_round_trip(rng: &mut ChaCha8Rng) {
    for _ in 0..CASES {
        let labels: Vec<bool> = (0..rng.random_range(0..200)).map(|_| rng.random_bool(0.5)).collect();
        let runs = run_length(&labels);
        assert_eq!(expand_runs(&runs), labels);
        assert!(runs.windows(2).all(|w| w[0].sign != w[1].sign && w[0].end() == w[1].start));
    }
}

fn matcher_agrees_with_oracle(rng: &mut ChaCha8Rng) -> usize {
    let mut matched = 0;
    for _ in 0..CASES {
        let fp = common::random_fingerprint(rng);
        let labels = common::random_labels(rng, 64);
        let got = fp.compile().match_slice(&labels).span.map(|s| (s.start, s.end));
        let want = common::oracle_match(&fp, &labels);
        assert_eq!(got, want, "{} on {labels:?}", kexprint::fingerprint::render(&fp));
        matched += want.is_some() as usize;
    }
    matched
}

fn reassembly_order_invariant(rng: &mut ChaCha8Rng) -> usize {
    let mut orderings = 0;
    for case in 0..200 {
        let payload: Vec<u8> = (0..rng.random_range(8..300)).map(|_| rng.random()).collect();
        let mut frames = common::client_segments(&payload, rng.random_range(1..=4), rng);
        if case % 2 == 1 {
            frames.remove(0);
        }
        frames.shuffle(rng);
        for order in common::permutations(frames.len()) {
            let shuffled = common::records(order.iter().map(|&i| frames[i].clone()).collect());
            let out = reassemble(&shuffled, LINKTYPE_ETHERNET, &ReassemblyOptions::default());
            assert_eq!(out.streams.len(), 1);
            assert_eq!(out.streams[0].payload, payload);
            orderings += 1;
        }
    }
    orderings
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let windows = incremental_matches_naive(&mut rng);
    filter_laws(&mut rng);
    run_length_round_trip(&mut rng);
    let matched = matcher_agrees_with_oracle(&mut rng);
    let orderings = reassembly_order_invariant(&mut rng);
    Ok(format!(
        "{windows} windows, {CASES} filter and run-length cases, {CASES} matcher pairs ({matched} matching), {orderings} segment orderings"
    ))
}

fn criterion_10(det: &Detector) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let payload: Vec<u8> = (0..8usize << 20).map(|_| rng.random()).collect();
    let best = (0..3)
        .map(|_| {
            let start = Instant::now();
            let report = det.scan_bytes("bulk", &payload);
            assert!(!report.filtered.is_empty());
            payload.len() as f64 / 1e6 / start.elapsed().as_secs_f64()
        })
        .fold(0.0, f64::max);
    check(best >= 10.0, format!("{best:.1} MB/s single-threaded"))
}

fn main() {
    let det = detector(DetectorConfig::default().confidence);
    let ms = matchers();
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(|| criterion_6(&det))),
        (7, Box::new(|| criterion_7(&det, &ms))),
        (8, Box::new(|| criterion_8(&det, &ms))),
        (9, Box::new(criterion_9)),
        (10, Box::new(|| criterion_10(&det))),
    ];
    let mut failed = Vec::new();
    for (n, run) in &criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS {detail}"),
            Err(detail) => {
                println!("criterion {n}: FAIL {detail}");
                failed.push(*n);
            }
        }
        if *n == 8 && failed.iter().any(|&f| f == 7 || f == 8) {
            for rho in [0.9985, 0.9999] {
                println!("    recall at a stricter confidence floor, {}", recall_sweep(rho, &ms));
            }
        }
    }
    if !failed.is_empty() {
        println!("{} of {} criteria failed: {failed:?}", failed.len(), criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
