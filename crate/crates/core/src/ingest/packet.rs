//! Ethernet / IPv4 / TCP decoding, and a frame builder for fixtures.

use std::net::{Ipv4Addr, SocketAddrV4};

use super::pcap::{LINKTYPE_ETHERNET, LINKTYPE_IPV4, LINKTYPE_RAW};

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_VLAN: u16 = 0x8100;
const IPPROTO_TCP: u8 = 6;

pub const TCP_FIN: u8 = 0x01;
pub const TCP_SYN: u8 = 0x02;
pub const TCP_RST: u8 = 0x04;
pub const TCP_PSH: u8 = 0x08;
pub const TCP_ACK: u8 = 0x10;

/// Why a frame contributed nothing to reassembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    UnsupportedLink,
    NonIpv4,
    NonTcp,
    Fragment,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcpSegment<'a> {
    pub src: SocketAddrV4,
    pub dst: SocketAddrV4,
    pub seq: u32,
    pub flags: u8,
    pub payload: &'a [u8],
}

impl TcpSegment<'_> {
    pub fn syn(&self) -> bool {
        self.flags & TCP_SYN != 0
    }

    pub fn ack(&self) -> bool {
        self.flags & TCP_ACK != 0
    }
}

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn be32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn decode_frame(linktype: u32, frame: &[u8]) -> Result<TcpSegment<'_>, Skip> {
    let ip = match linktype {
        LINKTYPE_ETHERNET => {
            if frame.len() < 14 {
                return Err(Skip::Malformed);
            }
            let mut ethertype = be16(frame, 12);
            let mut offset = 14;
            if ethertype == ETHERTYPE_VLAN {
                if frame.len() < 18 {
                    return Err(Skip::Malformed);
                }
                ethertype = be16(frame, 16);
                offset = 18;
            }
            if ethertype != ETHERTYPE_IPV4 {
                return Err(Skip::NonIpv4);
            }
            &frame[offset..]
        }
        LINKTYPE_RAW | LINKTYPE_IPV4 => frame,
        _ => return Err(Skip::UnsupportedLink),
    };
    decode_ipv4(ip)
}

fn decode_ipv4(ip: &[u8]) -> Result<TcpSegment<'_>, Skip> {
    if ip.is_empty() {
        return Err(Skip::Malformed);
    }
    if ip[0] >> 4 != 4 {
        return Err(Skip::NonIpv4);
    }
    let ihl = (ip[0] & 0x0F) as usize * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err(Skip::Malformed);
    }
    let total_len = be16(ip, 2) as usize;
    if total_len < ihl || total_len > ip.len() {
        return Err(Skip::Malformed);
    }
    let frag = be16(ip, 6);
    if frag & 0x2000 != 0 || frag & 0x1FFF != 0 {
        return Err(Skip::Fragment);
    }
    if ip[9] != IPPROTO_TCP {
        return Err(Skip::NonTcp);
    }
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    // Ethernet padding beyond the IP total length is dropped here.
    let tcp = &ip[ihl..total_len];
    if tcp.len() < 20 {
        return Err(Skip::Malformed);
    }
    let data_offset = (tcp[12] >> 4) as usize * 4;
    if data_offset < 20 || tcp.len() < data_offset {
        return Err(Skip::Malformed);
    }
    Ok(TcpSegment {
        src: SocketAddrV4::new(src_ip, be16(tcp, 0)),
        dst: SocketAddrV4::new(dst_ip, be16(tcp, 2)),
        seq: be32(tcp, 4),
        flags: tcp[13],
        payload: &tcp[data_offset..],
    })
}

fn checksum(chunks: &[&[u8]]) -> u16 {
    let mut sum = 0u32;
    for chunk in chunks {
        for pair in chunk.chunks(2) {
            let word = if pair.len() == 2 {
                u16::from_be_bytes([pair[0], pair[1]])
            } else {
                u16::from_be_bytes([pair[0], 0])
            };
            sum += word as u32;
        }
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// Builds an Ethernet II / IPv4 / TCP frame with valid checksums.
pub fn build_tcp_frame(src: SocketAddrV4, dst: SocketAddrV4, seq: u32, ack: u32, flags: u8, payload: &[u8]) -> Vec<u8> {
    let mut tcp = Vec::with_capacity(20 + payload.len());
    tcp.extend(src.port().to_be_bytes());
    tcp.extend(dst.port().to_be_bytes());
    tcp.extend(seq.to_be_bytes());
    tcp.extend(ack.to_be_bytes());
    tcp.push(5 << 4);
    tcp.push(flags);
    tcp.extend(65_535u16.to_be_bytes());
    tcp.extend([0, 0, 0, 0]);
    tcp.extend(payload);
    // odd-length segments are padded for the checksum only
    let tcp_len = tcp.len() as u16;
    let mut pseudo = Vec::with_capacity(12);
    pseudo.extend(src.ip().octets());
    pseudo.extend(dst.ip().octets());
    pseudo.extend([0, IPPROTO_TCP]);
    pseudo.extend(tcp_len.to_be_bytes());
    let tcp_sum = checksum(&[&pseudo, &tcp]);
    tcp[16..18].copy_from_slice(&tcp_sum.to_be_bytes());

    let mut ip = Vec::with_capacity(20);
    ip.extend([0x45, 0]);
    ip.extend((20 + tcp.len() as u16).to_be_bytes());
    ip.extend([0, 0, 0x40, 0, 64, IPPROTO_TCP, 0, 0]);
    ip.extend(src.ip().octets());
    ip.extend(dst.ip().octets());
    let ip_sum = checksum(&[&ip]);
    ip[10..12].copy_from_slice(&ip_sum.to_be_bytes());

    let mut frame = Vec::with_capacity(14 + ip.len() + tcp.len());
    frame.extend([0x02, 0, 0, 0, 0, 2]);
    frame.extend([0x02, 0, 0, 0, 0, 1]);
    frame.extend(ETHERTYPE_IPV4.to_be_bytes());
    frame.extend(ip);
    frame.extend(tcp);
    frame
}
