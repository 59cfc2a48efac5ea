mod common;

use kexprint::ingest::pcap::LINKTYPE_ETHERNET;
use kexprint::ingest::{parse_pcap, reassemble, write_pcap, Endianness, ReassemblyOptions, TimestampPrecision};
use kexprint::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn payload_of(frames: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let out = reassemble(&common::records(frames.to_vec()), LINKTYPE_ETHERNET, &ReassemblyOptions::default());
    out.streams.into_iter().map(|s| s.payload).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_direction_is_order_invariant(seed in any::<u64>(), with_syn in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.random_range(8..200);
        let payload: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let pieces = rng.random_range(1..=4);
        let mut frames = common::client_segments(&payload, pieces, &mut rng);
        if !with_syn {
            frames.remove(0);
        }
        for order in common::permutations(frames.len()) {
            let shuffled: Vec<Vec<u8>> = order.iter().map(|&i| frames[i].clone()).collect();
            prop_assert_eq!(payload_of(&shuffled), vec![payload.clone()]);
        }
    }
}

#[test]
fn pcap_round_trip_keeps_flows() {
    let a = common::simple_flow(common::addr(1, 50_001), common::addr(9, 443), b"hello", b"world!");
    let b = common::simple_flow(common::addr(2, 50_002), common::addr(9, 443), b"abc", b"defg");
    let mut frames = a;
    frames.extend(b);
    for (endianness, precision) in [
        (Endianness::Little, TimestampPrecision::Micro),
        (Endianness::Big, TimestampPrecision::Nano),
    ] {
        let bytes = write_pcap(&common::records(frames.clone()), LINKTYPE_ETHERNET, endianness, precision);
        let capture = parse_pcap(&bytes).unwrap();
        let out = reassemble(&capture.records, capture.linktype, &ReassemblyOptions::default());
        let payloads: Vec<Vec<u8>> = out.streams.iter().map(|s| s.payload.clone()).collect();
        assert_eq!(payloads, vec![b"helloworld!bye".to_vec(), b"abcdefgbye".to_vec()]);
        assert_eq!(out.stats.emitted, 2);
    }
}

#[test]
fn oversized_record_reports_offset() {
    let frames = common::simple_flow(common::addr(1, 50_001), common::addr(9, 443), b"hello", b"world");
    let mut bytes = write_pcap(&common::records(frames), LINKTYPE_ETHERNET, Endianness::Little, TimestampPrecision::Micro);
    bytes[32..36].copy_from_slice(&1_000_000u32.to_le_bytes());
    match parse_pcap(&bytes) {
        Err(Error::CorruptCapture { offset, .. }) => assert_eq!(offset, 24),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn truncated_tail_keeps_complete_records() {
    let frames = common::simple_flow(common::addr(1, 50_001), common::addr(9, 443), b"hello", b"world");
    let bytes = write_pcap(&common::records(frames), LINKTYPE_ETHERNET, Endianness::Little, TimestampPrecision::Micro);
    let capture = parse_pcap(&bytes[..bytes.len() - 5]).unwrap();
    assert_eq!(capture.records.len(), 5);
    assert_eq!(capture.warnings.len(), 1);
}

#[test]
fn bad_magic_is_unsupported() {
    assert!(matches!(parse_pcap(&[0u8; 40]), Err(Error::UnsupportedFormat(_))));
}
