#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::net::{Ipv4Addr, SocketAddrV4};
use std::rc::Rc;

use kexprint::fingerprint::{AnchorMode, Element, Fingerprint};
use kexprint::ingest::packet::{build_tcp_frame, TCP_ACK, TCP_PSH, TCP_SYN};
use kexprint::ingest::PcapRecord;
use rand::Rng;

type Memo = HashMap<(usize, usize, usize), Rc<BTreeSet<usize>>>;

/// Every label offset at which `elements` can finish when started at
/// `pos`, by plain backtracking over repetition counts.
fn ends(elements: &[Element], labels: &[bool], pos: usize, memo: &mut Memo) -> Rc<BTreeSet<usize>> {
    let key = (elements.as_ptr() as usize, elements.len(), pos);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let mut out = BTreeSet::new();
    match elements.split_first() {
        None => {
            out.insert(pos);
        }
        Some((Element::Unit(unit), rest)) => {
            let want = unit.sign.is_high();
            let mut k = 0;
            loop {
                if k >= unit.lo {
                    out.extend(ends(rest, labels, pos + k, memo).iter());
                }
                if k == unit.hi || pos + k == labels.len() || labels[pos + k] != want {
                    break;
                }
                k += 1;
            }
        }
        Some((Element::Group(group), rest)) => {
            let mut mids = BTreeSet::new();
            if group.optional {
                mids.insert(pos);
            }
            for alt in &group.alternatives {
                mids.extend(ends(alt, labels, pos, memo).iter());
            }
            for mid in mids {
                out.extend(ends(rest, labels, mid, memo).iter());
            }
        }
    }
    let out = Rc::new(out);
    memo.insert(key, out.clone());
    out
}

/// Reference verdict: leftmost start, longest end. Half-open span.
pub fn oracle_match(fp: &Fingerprint, labels: &[bool]) -> Option<(usize, usize)> {
    let elements = &fp.pattern.elements;
    let mut memo = Memo::new();
    match fp.anchor {
        AnchorMode::Prefix => ends(elements, labels, 0, &mut memo).last().map(|&e| (0, e)),
        AnchorMode::Exact => ends(elements, labels, 0, &mut memo)
            .contains(&labels.len())
            .then_some((0, labels.len())),
        AnchorMode::Search => (0..=labels.len()).find_map(|start| {
            ends(elements, labels, start, &mut memo).last().map(|&e| (start, e))
        }),
    }
}

fn random_unit(rng: &mut impl Rng, sign: char) -> String {
    let lo = rng.random_range(0..4);
    let hi = if rng.random_bool(0.05) {
        1_000_000
    } else {
        rng.random_range(lo.max(1)..lo + 6)
    };
    format!("{sign}{{{lo},{hi}}}")
}

fn random_seq(rng: &mut impl Rng, depth: usize, budget: &mut usize) -> String {
    let mut out = String::new();
    let mut sign = if rng.random_bool(0.5) { '1' } else { '0' };
    let count = rng.random_range(1..4);
    for _ in 0..count {
        if *budget == 0 {
            break;
        }
        if depth < 2 && rng.random_bool(0.25) {
            out.push('(');
            let alts = rng.random_range(1..4);
            for a in 0..alts {
                if a > 0 {
                    out.push('|');
                }
                out.push_str(&random_seq(rng, depth + 1, budget));
            }
            out.push(')');
            if rng.random_bool(0.5) {
                out.push('?');
            }
            sign = if rng.random_bool(0.5) { '1' } else { '0' };
        } else {
            *budget -= 1;
            out.push_str(&random_unit(rng, sign));
            sign = if sign == '1' { '0' } else { '1' };
        }
    }
    if out.is_empty() {
        out.push_str(&random_unit(rng, sign));
    }
    out
}

/// A random valid fingerprint with at most eight units.
pub fn random_fingerprint(rng: &mut impl Rng) -> Fingerprint {
    loop {
        let mut budget = 8;
        let text = random_seq(rng, 0, &mut budget);
        let anchor = match rng.random_range(0..3) {
            0 => AnchorMode::Prefix,
            1 => AnchorMode::Exact,
            _ => AnchorMode::Search,
        };
        if let Ok(fp) = Fingerprint::parse("random", anchor, &text) {
            return fp;
        }
    }
}

/// Runs of random length so that interval units have something to bite.
pub fn random_labels(rng: &mut impl Rng, max_len: usize) -> Vec<bool> {
    let len = rng.random_range(0..=max_len);
    let mut out = Vec::with_capacity(len);
    let mut sign = rng.random_bool(0.5);
    while out.len() < len {
        let run = rng.random_range(1..9).min(len - out.len());
        out.extend(std::iter::repeat_n(sign, run));
        sign = !sign;
    }
    out
}

pub fn addr(last: u8, port: u16) -> SocketAddrV4 {
    SocketAddrV4::new(Ipv4Addr::new(10, 1, 0, last), port)
}

pub fn records(frames: Vec<Vec<u8>>) -> Vec<PcapRecord> {
    frames
        .into_iter()
        .enumerate()
        .map(|(i, data)| PcapRecord {
            timestamp_ns: 1_700_000_000_000_000_000 + i as u64 * 1_000,
            orig_len: data.len() as u32,
            data,
        })
        .collect()
}

/// Handshake, a client request, a server reply and a second client
/// message.
pub fn simple_flow(client: SocketAddrV4, server: SocketAddrV4, request: &[u8], reply: &[u8]) -> Vec<Vec<u8>> {
    let (c_isn, s_isn) = (1_000u32, 9_000u32);
    let c1 = c_isn + 1;
    let s1 = s_isn + 1;
    vec![
        build_tcp_frame(client, server, c_isn, 0, TCP_SYN, b""),
        build_tcp_frame(server, client, s_isn, c1, TCP_SYN | TCP_ACK, b""),
        build_tcp_frame(client, server, c1, s1, TCP_ACK, b""),
        build_tcp_frame(client, server, c1, s1, TCP_PSH | TCP_ACK, request),
        build_tcp_frame(server, client, s1, c1 + request.len() as u32, TCP_PSH | TCP_ACK, reply),
        build_tcp_frame(client, server, c1 + request.len() as u32, s1 + reply.len() as u32, TCP_PSH | TCP_ACK, b"bye"),
    ]
}

/// All orderings of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            go(prefix, left, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Client segments for a payload split into `k` pieces, some overlapping
/// the previous piece, plus the SYN. Index 0 is the SYN.
pub fn client_segments(payload: &[u8], k: usize, rng: &mut impl Rng) -> Vec<Vec<u8>> {
    let (client, server) = (addr(1, 40_000), addr(2, 443));
    let isn = rng.random::<u32>();
    let mut frames = vec![build_tcp_frame(client, server, isn, 0, TCP_SYN, b"")];
    let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.random_range(1..payload.len())).collect();
    cuts.sort();
    cuts.dedup();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(payload.len());
    for w in bounds.windows(2) {
        // back up into the previous piece to exercise overlap trimming
        let start = if w[0] > 0 && rng.random_bool(0.3) { w[0] - rng.random_range(1..=w[0].min(3)) } else { w[0] };
        let seq = isn.wrapping_add(1).wrapping_add(start as u32);
        frames.push(build_tcp_frame(client, server, seq, 0, TCP_PSH | TCP_ACK, &payload[start..w[1]]));
    }
    frames
}
