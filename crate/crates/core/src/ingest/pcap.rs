//! Classic libpcap capture files, both byte orders, microsecond and
//! nanosecond timestamps.

use crate::{Error, Result};

pub const LINKTYPE_ETHERNET: u32 = 1;
pub const LINKTYPE_RAW: u32 = 101;
pub const LINKTYPE_IPV4: u32 = 228;

const MAGIC_USEC: u32 = 0xA1B2_C3D4;
const MAGIC_NSEC: u32 = 0xA1B2_3C4D;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
/// Records longer than this (or the snap length, if larger) are rejected
/// as corrupt.
const MAX_RECORD_LEN: u32 = 262_144;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampPrecision {
    Micro,
    Nano,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcapRecord {
    /// Nanoseconds since the Unix epoch.
    pub timestamp_ns: u64,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    pub linktype: u32,
    pub snaplen: u32,
    pub endianness: Endianness,
    pub precision: TimestampPrecision,
    pub records: Vec<PcapRecord>,
    pub warnings: Vec<String>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    endianness: Endianness,
}

impl Reader<'_> {
    fn u32_at(&self, offset: usize) -> u32 {
        let raw: [u8; 4] = self.bytes[offset..offset + 4].try_into().unwrap();
        match self.endianness {
            Endianness::Little => u32::from_le_bytes(raw),
            Endianness::Big => u32::from_be_bytes(raw),
        }
    }
}

pub fn parse_pcap(bytes: &[u8]) -> Result<Capture> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(Error::UnsupportedFormat(format!(
            "{} bytes is too short for a pcap header",
            bytes.len()
        )));
    }
    let magic_le = u32::from_le_bytes(bytes[..4].try_into().unwrap());
    let (endianness, precision) = match magic_le {
        MAGIC_USEC => (Endianness::Little, TimestampPrecision::Micro),
        MAGIC_NSEC => (Endianness::Little, TimestampPrecision::Nano),
        m if m.swap_bytes() == MAGIC_USEC => (Endianness::Big, TimestampPrecision::Micro),
        m if m.swap_bytes() == MAGIC_NSEC => (Endianness::Big, TimestampPrecision::Nano),
        m => {
            return Err(Error::UnsupportedFormat(format!(
                "unknown magic 0x{:08x}",
                m.swap_bytes()
            )))
        }
    };
    let reader = Reader { bytes, endianness };
    let snaplen = reader.u32_at(16);
    let linktype = reader.u32_at(20);
    let limit = snaplen.max(MAX_RECORD_LEN);

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut offset = GLOBAL_HEADER_LEN;
    while offset < bytes.len() {
        if bytes.len() - offset < RECORD_HEADER_LEN {
            warnings.push(format!(
                "truncated record header at byte {offset} ({} trailing bytes ignored)",
                bytes.len() - offset
            ));
            break;
        }
        let ts_sec = reader.u32_at(offset) as u64;
        let ts_frac = reader.u32_at(offset + 4) as u64;
        let incl_len = reader.u32_at(offset + 8);
        let orig_len = reader.u32_at(offset + 12);
        if incl_len > limit {
            return Err(Error::CorruptCapture {
                offset,
                message: format!("record length {incl_len} exceeds limit {limit}"),
            });
        }
        let data_start = offset + RECORD_HEADER_LEN;
        let data_end = data_start + incl_len as usize;
        if data_end > bytes.len() {
            warnings.push(format!(
                "truncated record at byte {offset}: {incl_len} bytes declared, {} present",
                bytes.len() - data_start
            ));
            break;
        }
        let frac_ns = match precision {
            TimestampPrecision::Micro => ts_frac * 1_000,
            TimestampPrecision::Nano => ts_frac,
        };
        records.push(PcapRecord {
            timestamp_ns: ts_sec * 1_000_000_000 + frac_ns,
            orig_len,
            data: bytes[data_start..data_end].to_vec(),
        });
        offset = data_end;
    }
    Ok(Capture {
        linktype,
        snaplen,
        endianness,
        precision,
        records,
        warnings,
    })
}

/// Serializes records as a classic pcap file.
pub fn write_pcap(records: &[PcapRecord], linktype: u32, endianness: Endianness, precision: TimestampPrecision) -> Vec<u8> {
    let put = |out: &mut Vec<u8>, v: u32| match endianness {
        Endianness::Little => out.extend(v.to_le_bytes()),
        Endianness::Big => out.extend(v.to_be_bytes()),
    };
    let put16 = |out: &mut Vec<u8>, v: u16| match endianness {
        Endianness::Little => out.extend(v.to_le_bytes()),
        Endianness::Big => out.extend(v.to_be_bytes()),
    };
    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + records.iter().map(|r| r.data.len() + 16).sum::<usize>());
    put(&mut out, match precision {
        TimestampPrecision::Micro => MAGIC_USEC,
        TimestampPrecision::Nano => MAGIC_NSEC,
    });
    put16(&mut out, 2);
    put16(&mut out, 4);
    put(&mut out, 0);
    put(&mut out, 0);
    put(&mut out, 65_535);
    put(&mut out, linktype);
    for r in records {
        let secs = r.timestamp_ns / 1_000_000_000;
        let frac = r.timestamp_ns % 1_000_000_000;
        put(&mut out, secs as u32);
        put(&mut out, match precision {
            TimestampPrecision::Micro => (frac / 1_000) as u32,
            TimestampPrecision::Nano => frac as u32,
        });
        put(&mut out, r.data.len() as u32);
        put(&mut out, r.orig_len);
        out.extend(&r.data);
    }
    out
}
