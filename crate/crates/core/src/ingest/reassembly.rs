//! TCP flow grouping and in-order payload reassembly.
//!
//! Segments are grouped by their unordered endpoint pair. Each direction
//! is ordered by sequence number, exact retransmissions are dropped and
//! overlapping bytes must agree. The two directions are then interleaved
//! by the arrival order of the segments that first carried each chunk.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddrV4;

use serde::Serialize;

use super::packet::{decode_frame, Skip, TcpSegment};
use super::pcap::PcapRecord;
use super::{StreamRecord, StreamSource};

#[derive(Debug, Clone, Default)]
pub struct ReassemblyOptions {
    /// Keep only flows with either endpoint on one of these ports.
    pub ports: Option<BTreeSet<u16>>,
    /// Emit flows with sequence gaps (missing bytes are simply absent).
    pub keep_incomplete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReassemblyStats {
    pub frames: usize,
    pub unsupported_link: usize,
    pub non_ipv4: usize,
    pub non_tcp: usize,
    pub fragments: usize,
    pub malformed: usize,
    pub flows: usize,
    pub filtered_out: usize,
    pub incomplete: usize,
    pub inconsistent: usize,
    pub retransmissions: usize,
    pub without_syn: usize,
    pub emitted: usize,
}

#[derive(Debug, Clone)]
pub struct Reassembly {
    pub streams: Vec<StreamRecord>,
    pub stats: ReassemblyStats,
}

type Endpoint = SocketAddrV4;

struct Seg {
    seq: u32,
    syn: bool,
    syn_only: bool,
    payload: Vec<u8>,
    arrival: usize,
}

struct Flow {
    first_arrival: usize,
    first_timestamp_ns: u64,
    first_sender: Endpoint,
    segments: Vec<(Endpoint, Seg)>,
}

/// Overlapping bytes disagree.
struct Conflict;

struct Direction {
    /// (arrival index, newly contributed bytes), in sequence order.
    chunks: Vec<(usize, Vec<u8>)>,
    retransmissions: usize,
    gap: bool,
}

fn canonical(a: Endpoint, b: Endpoint) -> (Endpoint, Endpoint) {
    if (a.ip(), a.port()) <= (b.ip(), b.port()) {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn reassemble(records: &[PcapRecord], linktype: u32, options: &ReassemblyOptions) -> Reassembly {
    let mut stats = ReassemblyStats {
        frames: records.len(),
        ..Default::default()
    };
    let mut flows: HashMap<(Endpoint, Endpoint), Flow> = HashMap::new();
    for (arrival, record) in records.iter().enumerate() {
        let seg: TcpSegment<'_> = match decode_frame(linktype, &record.data) {
            Ok(seg) => seg,
            Err(skip) => {
                match skip {
                    Skip::UnsupportedLink => stats.unsupported_link += 1,
                    Skip::NonIpv4 => stats.non_ipv4 += 1,
                    Skip::NonTcp => stats.non_tcp += 1,
                    Skip::Fragment => stats.fragments += 1,
                    Skip::Malformed => stats.malformed += 1,
                }
                continue;
            }
        };
        let flow = flows.entry(canonical(seg.src, seg.dst)).or_insert_with(|| Flow {
            first_arrival: arrival,
            first_timestamp_ns: record.timestamp_ns,
            first_sender: seg.src,
            segments: Vec::new(),
        });
        flow.segments.push((
            seg.src,
            Seg {
                seq: seg.seq,
                syn: seg.syn(),
                syn_only: seg.syn() && !seg.ack(),
                payload: seg.payload.to_vec(),
                arrival,
            },
        ));
    }
    stats.flows = flows.len();

    let mut flows: Vec<((Endpoint, Endpoint), Flow)> = flows.into_iter().collect();
    flows.sort_by_key(|(_, f)| f.first_arrival);

    let mut streams = Vec::new();
    for ((a, b), flow) in flows {
        if let Some(ports) = &options.ports {
            if !ports.contains(&a.port()) && !ports.contains(&b.port()) {
                stats.filtered_out += 1;
                continue;
            }
        }
        let client = flow
            .segments
            .iter()
            .find(|(_, s)| s.syn_only)
            .map(|(src, _)| *src)
            .unwrap_or(flow.first_sender);
        let server = if client == a { b } else { a };
        let saw_syn = flow.segments.iter().any(|(_, s)| s.syn);

        let mut directions = Vec::with_capacity(2);
        let mut failed = None;
        for sender in [client, server] {
            let segs: Vec<&Seg> = flow
                .segments
                .iter()
                .filter(|(src, _)| *src == sender)
                .map(|(_, s)| s)
                .collect();
            match assemble_direction(&segs) {
                Ok(dir) => directions.push(dir),
                Err(Conflict) => failed = Some(Conflict),
            }
        }
        if failed.is_some() {
            stats.inconsistent += 1;
            continue;
        }
        let gap = directions.iter().any(|d| d.gap);
        if gap {
            stats.incomplete += 1;
            if !options.keep_incomplete {
                continue;
            }
        }
        if !saw_syn {
            stats.without_syn += 1;
        }
        stats.retransmissions += directions.iter().map(|d| d.retransmissions).sum::<usize>();

        let client_bytes = directions[0].chunks.iter().map(|(_, c)| c.len()).sum();
        let server_bytes = directions[1].chunks.iter().map(|(_, c)| c.len()).sum();
        let payload = merge_by_arrival(&directions[0].chunks, &directions[1].chunks);
        streams.push(StreamRecord {
            id: format!(
                "tcp_{}_{}_{}_{}_{}",
                client.ip(),
                client.port(),
                server.ip(),
                server.port(),
                flow.first_timestamp_ns
            ),
            payload,
            endpoints: Some((client, server)),
            client_bytes,
            server_bytes,
            first_timestamp_ns: Some(flow.first_timestamp_ns),
            saw_syn,
            complete: !gap,
            source: StreamSource::Capture,
        });
    }
    stats.emitted = streams.len();
    Reassembly { streams, stats }
}

fn assemble_direction(segs: &[&Seg]) -> Result<Direction, Conflict> {
    let mut dir = Direction {
        chunks: Vec::new(),
        retransmissions: 0,
        gap: false,
    };
    // Sequence origin: first data byte after the SYN when one was seen,
    // otherwise the lowest sequence number among data segments.
    let origin = match segs.iter().find(|s| s.syn) {
        Some(syn) => syn.seq.wrapping_add(1),
        None => {
            let Some(first) = segs.iter().find(|s| !s.payload.is_empty()) else {
                return Ok(dir);
            };
            segs.iter()
                .filter(|s| !s.payload.is_empty())
                .map(|s| s.seq)
                .min_by_key(|&seq| seq.wrapping_sub(first.seq) as i32)
                .unwrap_or(first.seq)
        }
    };
    let mut data: Vec<(u64, usize, &[u8])> = segs
        .iter()
        .filter(|s| !s.payload.is_empty())
        .map(|s| {
            // SYN segments carrying data start at seq + 1.
            let start = if s.syn { s.seq.wrapping_add(1) } else { s.seq };
            (start.wrapping_sub(origin) as u64, s.arrival, s.payload.as_slice())
        })
        .collect();
    data.sort_by_key(|&(rel, arrival, _)| (rel, arrival));

    let mut assembled: Vec<u8> = Vec::new();
    for (rel, arrival, bytes) in data {
        let rel = rel as usize;
        let expected = assembled.len();
        if rel > expected {
            dir.gap = true;
            // Bytes after a hole keep their relative order but lose their
            // position; only emitted when incomplete flows are requested.
            assembled.extend_from_slice(bytes);
            dir.chunks.push((arrival, bytes.to_vec()));
            continue;
        }
        let overlap = (expected - rel).min(bytes.len());
        if assembled[rel..rel + overlap] != bytes[..overlap] {
            return Err(Conflict);
        }
        if overlap == bytes.len() {
            dir.retransmissions += 1;
            continue;
        }
        let fresh = &bytes[overlap..];
        assembled.extend_from_slice(fresh);
        dir.chunks.push((arrival, fresh.to_vec()));
    }
    Ok(dir)
}

fn merge_by_arrival(a: &[(usize, Vec<u8>)], b: &[(usize, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::with_capacity(a.iter().chain(b).map(|(_, c)| c.len()).sum());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 <= b[j].0);
        if take_a {
            out.extend(&a[i].1);
            i += 1;
        } else {
            out.extend(&b[j].1);
            j += 1;
        }
    }
    out
}
