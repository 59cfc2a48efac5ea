//! Fingerprint files.
//!
//! ```text
//! # comment
//! name: nugache
//! anchor: exact
//! pattern: 1{1,1000000}
//! ```
//!
//! Blank lines separate fingerprints. `anchor` defaults to `prefix`.

use std::fmt::Write as _;

use super::{AnchorMode, Fingerprint};
use crate::{Error, Result};

pub const BUILTIN_TLS: &str = include_str!("../../fingerprints/tls-dhe-rsa.fp");
pub const BUILTIN_NUGACHE: &str = include_str!("../../fingerprints/nugache.fp");

/// The fingerprints shipped with the crate: `tls-dhe-rsa`,
/// `tls-dhe-rsa-refined` and `nugache`.
pub fn builtin_fingerprints() -> Vec<Fingerprint> {
    [BUILTIN_TLS, BUILTIN_NUGACHE]
        .iter()
        .flat_map(|text| parse_fingerprint_file(text).expect("shipped fingerprints parse"))
        .collect()
}

#[derive(Default)]
struct Pending {
    first_line: usize,
    name: Option<String>,
    anchor: Option<AnchorMode>,
    pattern: Option<(usize, String)>,
}

impl Pending {
    fn is_empty(&self) -> bool {
        self.name.is_none() && self.anchor.is_none() && self.pattern.is_none()
    }

    fn finish(self) -> Result<Fingerprint> {
        let name = self.name.ok_or_else(|| Error::FingerprintFile {
            line: self.first_line,
            message: "fingerprint without `name:`".into(),
        })?;
        let (line, text) = self.pattern.ok_or_else(|| Error::FingerprintFile {
            line: self.first_line,
            message: format!("fingerprint `{name}` has no `pattern:`"),
        })?;
        Fingerprint::parse(&name, self.anchor.unwrap_or_default(), &text).map_err(|e| {
            Error::FingerprintFile {
                line,
                message: format!("pattern of `{name}`: {e}"),
            }
        })
    }
}

pub fn parse_fingerprint_file(text: &str) -> Result<Vec<Fingerprint>> {
    let mut out = Vec::new();
    let mut pending = Pending::default();
    for (index, raw) in text.lines().enumerate() {
        let lineno = index + 1;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !pending.is_empty() {
                out.push(std::mem::take(&mut pending).finish()?);
            }
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| Error::FingerprintFile {
            line: lineno,
            message: format!("expected `key: value`, found `{line}`"),
        })?;
        let value = value.trim();
        if pending.is_empty() {
            pending.first_line = lineno;
        }
        let duplicate = |field: &str| Error::FingerprintFile {
            line: lineno,
            message: format!("duplicate `{field}:`"),
        };
        match key.trim() {
            "name" => {
                if pending.name.replace(value.to_string()).is_some() {
                    return Err(duplicate("name"));
                }
            }
            "anchor" => {
                let anchor = value.parse().map_err(|e: Error| Error::FingerprintFile {
                    line: lineno,
                    message: e.to_string(),
                })?;
                if pending.anchor.replace(anchor).is_some() {
                    return Err(duplicate("anchor"));
                }
            }
            "pattern" => {
                if pending.pattern.replace((lineno, value.to_string())).is_some() {
                    return Err(duplicate("pattern"));
                }
            }
            other => {
                return Err(Error::FingerprintFile {
                    line: lineno,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    if !pending.is_empty() {
        out.push(pending.finish()?);
    }
    Ok(out)
}

pub fn render_fingerprint_file(fingerprints: &[Fingerprint]) -> String {
    let mut out = String::new();
    for (i, fp) in fingerprints.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(out, "name: {}", fp.name).unwrap();
        writeln!(out, "anchor: {}", fp.anchor).unwrap();
        writeln!(out, "pattern: {}", fp.pattern).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        let fps = builtin_fingerprints();
        let names: Vec<_> = fps.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["tls-dhe-rsa", "tls-dhe-rsa-refined", "nugache"]);
        assert_eq!(fps[2].anchor, AnchorMode::Exact);
        assert_eq!(fps[0].pattern.to_string(), "1{8,54}0{20,1024}1{8,54}0{30,800}1{80,260}");
    }

    #[test]
    fn file_round_trip() {
        let fps = builtin_fingerprints();
        let text = render_fingerprint_file(&fps);
        assert_eq!(parse_fingerprint_file(&text).unwrap(), fps);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "name: a\npattern: 1{1,2}\n\nname: b\npattern: 1{3,2}\n";
        match parse_fingerprint_file(text) {
            Err(Error::FingerprintFile { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("inverted"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_fingerprint_file("pattern: 1{1,1}").is_err());
        assert!(parse_fingerprint_file("name: x\nbogus: 1").is_err());
        assert!(parse_fingerprint_file("name: x\nanchor: sideways\npattern: 1{1,1}").is_err());
        assert_eq!(parse_fingerprint_file("# only comments\n\n").unwrap(), vec![]);
    }
}
