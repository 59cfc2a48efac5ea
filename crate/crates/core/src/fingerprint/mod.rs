//! Interval-quantified fingerprints over 0/1 label strings.
//!
//! A fingerprint is a sequence of units `s{lo,hi}` (a run of between `lo`
//! and `hi` labels equal to `s`) and alternation groups
//! `(alt|alt|...)`, optionally followed by `?`:
//!
//! ```text
//! Seq     := Element+
//! Element := Sign '{' Int ',' Int '}' | '(' Seq ('|' Seq)* ')' '?'?
//! Sign    := '0' | '1'
//! ```
//!
//! Whitespace is insignificant. Adjacent plain units must alternate sign;
//! the same condition across group boundaries is only reported by
//! [`Pattern::lints`].

mod file;
mod matcher;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::file::{builtin_fingerprints, parse_fingerprint_file, render_fingerprint_file, BUILTIN_NUGACHE, BUILTIN_TLS};
pub use self::matcher::{MatchResult, MatchSpan, Matcher};
use crate::detector::Sign;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub sign: Sign,
    pub lo: usize,
    pub hi: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub alternatives: Vec<Vec<Element>>,
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Unit(Unit),
    Group(Group),
}

/// A parsed and validated fingerprint expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub elements: Vec<Element>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorMode {
    /// The match starts at the first label; anything may follow it.
    #[default]
    Prefix,
    /// The match may start anywhere.
    Search,
    /// The match covers the whole label string.
    Exact,
}

impl FromStr for AnchorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "prefix" => Ok(AnchorMode::Prefix),
            "search" => Ok(AnchorMode::Search),
            "exact" => Ok(AnchorMode::Exact),
            other => Err(Error::Validation(format!("unknown anchor mode `{other}`"))),
        }
    }
}

impl fmt::Display for AnchorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnchorMode::Prefix => "prefix",
            AnchorMode::Search => "search",
            AnchorMode::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub name: String,
    pub anchor: AnchorMode,
    pub pattern: Pattern,
}

impl Fingerprint {
    pub fn parse(name: &str, anchor: AnchorMode, text: &str) -> Result<Self> {
        Ok(Fingerprint {
            name: name.to_string(),
            anchor,
            pattern: text.parse()?,
        })
    }

    pub fn compile(&self) -> Matcher {
        Matcher::new(self)
    }
}

/// Parses a pattern with the default (prefix) anchor and an empty name.
pub fn parse_fingerprint(text: &str) -> Result<Fingerprint> {
    Fingerprint::parse("", AnchorMode::default(), text)
}

/// A non-fatal finding about a pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lint {
    pub message: String,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Same-sign adjacencies at group seams. These merge into a single run
    /// at match time.
    pub fn lints(&self) -> Vec<Lint> {
        let mut lints = Vec::new();
        lint_seq(&self.elements, &mut lints);
        lints
    }
}

fn first_signs(elements: &[Element], out: &mut Vec<Sign>) {
    match elements.first() {
        Some(Element::Unit(u)) => out.push(u.sign),
        Some(Element::Group(g)) => g.alternatives.iter().for_each(|alt| first_signs(alt, out)),
        None => {}
    }
}

fn last_signs(elements: &[Element], out: &mut Vec<Sign>) {
    match elements.last() {
        Some(Element::Unit(u)) => out.push(u.sign),
        Some(Element::Group(g)) => g.alternatives.iter().for_each(|alt| last_signs(alt, out)),
        None => {}
    }
}

fn lint_seq(elements: &[Element], lints: &mut Vec<Lint>) {
    for pair in elements.windows(2) {
        if let [Element::Unit(_), Element::Unit(_)] = pair {
            continue;
        }
        let (mut left, mut right) = (Vec::new(), Vec::new());
        last_signs(&pair[..1], &mut left);
        first_signs(&pair[1..], &mut right);
        if let Some(sign) = left.iter().find(|s| right.contains(s)) {
            lints.push(Lint {
                message: format!(
                    "`{}` followed by `{}` can place two `{}` units side by side",
                    DisplayElement(&pair[0]),
                    DisplayElement(&pair[1]),
                    sign.symbol()
                ),
            });
        }
    }
    for element in elements {
        if let Element::Group(g) = element {
            g.alternatives.iter().for_each(|alt| lint_seq(alt, lints));
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let elements = parser.seq()?;
        parser.skip_ws();
        if let Some(c) = parser.peek() {
            return Err(parser.syntax(format!("unexpected `{}`", c as char)));
        }
        Ok(Pattern { elements })
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: String) -> Error {
        Error::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        match self.peek() {
            Some(b) if b == byte => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.syntax(format!("expected `{}`, found `{}`", byte as char, b as char))),
            None => Err(self.syntax(format!("expected `{}`, found end of input", byte as char))),
        }
    }

    fn seq(&mut self) -> Result<Vec<Element>> {
        let mut elements = Vec::new();
        loop {
            match self.peek() {
                Some(b'0' | b'1' | b'(') => {
                    let element = self.element()?;
                    if let (Some(Element::Unit(prev)), Element::Unit(cur)) = (elements.last(), &element) {
                        if prev.sign == cur.sign {
                            return Err(Error::Validation(format!(
                                "adjacent units `{}` and `{}` share sign {} (byte {})",
                                DisplayUnit(prev),
                                DisplayUnit(cur),
                                cur.sign.symbol(),
                                self.pos
                            )));
                        }
                    }
                    elements.push(element);
                }
                Some(b'|' | b')') | None => break,
                Some(b) => return Err(self.syntax(format!("unexpected `{}`", b as char))),
            }
        }
        if elements.is_empty() {
            return Err(self.syntax("expected a unit or group".into()));
        }
        Ok(elements)
    }

    fn element(&mut self) -> Result<Element> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let mut alternatives = vec![self.seq()?];
                while self.peek() == Some(b'|') {
                    self.pos += 1;
                    alternatives.push(self.seq()?);
                }
                self.expect(b')')?;
                let optional = self.peek() == Some(b'?');
                if optional {
                    self.pos += 1;
                }
                Ok(Element::Group(Group {
                    alternatives,
                    optional,
                }))
            }
            Some(sign @ (b'0' | b'1')) => {
                self.pos += 1;
                let sign = Sign::from_label(sign == b'1');
                self.expect(b'{')?;
                let lo = self.bound(b',')?;
                let hi = self.bound(b'}')?;
                if hi < lo {
                    return Err(Error::Validation(format!(
                        "inverted bounds {{{lo},{hi}}} before byte {}",
                        self.pos
                    )));
                }
                if hi == 0 {
                    return Err(Error::Validation(format!(
                        "unit with upper bound 0 before byte {}",
                        self.pos
                    )));
                }
                Ok(Element::Unit(Unit { sign, lo, hi }))
            }
            _ => Err(self.syntax("expected `0`, `1` or `(`".into())),
        }
    }

    /// Reads an integer terminated by `terminator`.
    fn bound(&mut self, terminator: u8) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|&b| b != terminator && b != b'}' && b != b',')
        {
            self.pos += 1;
        }
        let token = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap_or("")
            .trim();
        let value = if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
            token.parse::<usize>().map_err(|_| {
                Error::Validation(format!("quantifier bound `{token}` at byte {start} is too large"))
            })?
        } else {
            return Err(Error::Validation(format!(
                "quantifier bound `{token}` at byte {start} is not a non-negative integer"
            )));
        };
        self.expect(terminator)?;
        Ok(value)
    }
}

struct DisplayUnit<'a>(&'a Unit);

impl fmt::Display for DisplayUnit<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{},{}}}", self.0.sign.symbol(), self.0.lo, self.0.hi)
    }
}

struct DisplayElement<'a>(&'a Element);

impl fmt::Display for DisplayElement<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Element::Unit(u) => DisplayUnit(u).fmt(f),
            Element::Group(g) => {
                f.write_str("(")?;
                for (i, alt) in g.alternatives.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    alt.iter().try_for_each(|e| DisplayElement(e).fmt(f))?;
                }
                f.write_str(")")?;
                if g.optional {
                    f.write_str("?")?;
                }
                Ok(())
            }
        }
    }
}

/// Canonical text: no whitespace, groups in parentheses.
impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.elements.iter().try_for_each(|e| DisplayElement(e).fmt(f))
    }
}

pub fn render(fp: &Fingerprint) -> String {
    fp.pattern.to_string()
}
