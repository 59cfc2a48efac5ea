//! Position-set evaluation of fingerprint patterns.
//!
//! Matching tracks the set of label offsets reachable after each element.
//! A unit `s{lo,hi}` moves every reachable offset `p` to the interval
//! `[p + lo, p + min(hi, run_s(p))]`, where `run_s(p)` is the number of
//! consecutive `s` labels starting at `p`; intervals are merged with a
//! difference array, so each unit costs `O(n)` whatever its bounds. The
//! verdict is the one a backtracking regex engine gives for the same
//! interval quantifiers. Spans are leftmost-longest.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AnchorMode, Element, Fingerprint, Unit};
use crate::detector::LabelSequence;

/// Half-open range of window indices covered by a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSpan {
    pub start: usize,
    pub end: usize,
}

impl MatchSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub fingerprint: String,
    pub matched: bool,
    pub span: Option<MatchSpan>,
}

/// A compiled fingerprint. Cheap to clone and safe to share.
#[derive(Debug, Clone)]
pub struct Matcher {
    name: Arc<str>,
    anchor: AnchorMode,
    program: Arc<[Element]>,
}

type PosSet = Vec<bool>;

struct Runs {
    /// `ahead[s][p]`: consecutive labels equal to `s` starting at `p`.
    ahead: [Vec<usize>; 2],
    /// `behind[s][e]`: consecutive labels equal to `s` ending at `e - 1`.
    behind: [Vec<usize>; 2],
}

impl Runs {
    fn new(labels: &[bool]) -> Self {
        let n = labels.len();
        let mut ahead = [vec![0; n + 1], vec![0; n + 1]];
        let mut behind = [vec![0; n + 1], vec![0; n + 1]];
        for p in (0..n).rev() {
            let s = labels[p] as usize;
            ahead[s][p] = ahead[s][p + 1] + 1;
        }
        for e in 1..=n {
            let s = labels[e - 1] as usize;
            behind[s][e] = behind[s][e - 1] + 1;
        }
        Runs { ahead, behind }
    }
}

impl Matcher {
    pub fn new(fp: &Fingerprint) -> Self {
        Matcher {
            name: fp.name.as_str().into(),
            anchor: fp.anchor,
            program: fp.pattern.elements.clone().into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn anchor(&self) -> AnchorMode {
        self.anchor
    }

    pub fn match_labels(&self, labels: &LabelSequence) -> MatchResult {
        self.match_slice(&labels.labels)
    }

    pub fn is_match(&self, labels: &[bool]) -> bool {
        self.match_slice(labels).matched
    }

    pub fn match_slice(&self, labels: &[bool]) -> MatchResult {
        let n = labels.len();
        let runs = Runs::new(labels);
        let forward_from = |start: usize| {
            let mut set = vec![false; n + 1];
            set[start] = true;
            forward_seq(&self.program, set, &runs)
        };
        let span = match self.anchor {
            AnchorMode::Prefix => longest_end(&forward_from(0)).map(|end| MatchSpan { start: 0, end }),
            AnchorMode::Exact => forward_from(0)[n].then_some(MatchSpan { start: 0, end: n }),
            AnchorMode::Search => {
                let starts = backward_seq(&self.program, vec![true; n + 1], &runs);
                starts.iter().position(|&s| s).and_then(|start| {
                    longest_end(&forward_from(start)).map(|end| MatchSpan { start, end })
                })
            }
        };
        MatchResult {
            fingerprint: self.name.to_string(),
            matched: span.is_some(),
            span,
        }
    }
}

fn longest_end(set: &PosSet) -> Option<usize> {
    set.iter().rposition(|&s| s)
}

fn forward_seq(elements: &[Element], mut set: PosSet, runs: &Runs) -> PosSet {
    for element in elements {
        if !set.contains(&true) {
            break;
        }
        set = match element {
            Element::Unit(unit) => forward_unit(unit, &set, runs),
            Element::Group(group) => {
                let mut out = if group.optional { set.clone() } else { vec![false; set.len()] };
                for alt in &group.alternatives {
                    union(&mut out, &forward_seq(alt, set.clone(), runs));
                }
                out
            }
        };
    }
    set
}

fn backward_seq(elements: &[Element], mut set: PosSet, runs: &Runs) -> PosSet {
    for element in elements.iter().rev() {
        if !set.contains(&true) {
            break;
        }
        set = match element {
            Element::Unit(unit) => backward_unit(unit, &set, runs),
            Element::Group(group) => {
                let mut out = if group.optional { set.clone() } else { vec![false; set.len()] };
                for alt in &group.alternatives {
                    union(&mut out, &backward_seq(alt, set.clone(), runs));
                }
                out
            }
        };
    }
    set
}

fn union(into: &mut PosSet, other: &PosSet) {
    into.iter_mut().zip(other).for_each(|(a, &b)| *a |= b);
}

fn sweep(diff: &[i32], len: usize) -> PosSet {
    let mut acc = 0;
    diff[..len]
        .iter()
        .map(|&d| {
            acc += d;
            acc > 0
        })
        .collect()
}

fn forward_unit(unit: &Unit, set: &PosSet, runs: &Runs) -> PosSet {
    let ahead = &runs.ahead[unit.sign.is_high() as usize];
    let mut diff = vec![0i32; set.len() + 1];
    for (p, _) in set.iter().enumerate().filter(|(_, &s)| s) {
        let available = ahead[p];
        if available < unit.lo {
            continue;
        }
        diff[p + unit.lo] += 1;
        diff[p + unit.hi.min(available) + 1] -= 1;
    }
    sweep(&diff, set.len())
}

fn backward_unit(unit: &Unit, set: &PosSet, runs: &Runs) -> PosSet {
    let behind = &runs.behind[unit.sign.is_high() as usize];
    let mut diff = vec![0i32; set.len() + 1];
    for (e, _) in set.iter().enumerate().filter(|(_, &s)| s) {
        let available = behind[e];
        if available < unit.lo {
            continue;
        }
        diff[e - unit.hi.min(available)] += 1;
        diff[e - unit.lo + 1] -= 1;
    }
    sweep(&diff, set.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::Fingerprint;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn matcher(pattern: &str, anchor: AnchorMode) -> Matcher {
        Fingerprint::parse("t", anchor, pattern).unwrap().compile()
    }

    #[test]
    fn prefix_interval_spans() {
        let m = matcher("1{2,3}", AnchorMode::Prefix);
        assert_eq!(m.match_slice(&bits("110")).span, Some(MatchSpan { start: 0, end: 2 }));
        assert_eq!(m.match_slice(&bits("1111")).span, Some(MatchSpan { start: 0, end: 3 }));
        assert!(!m.is_match(&bits("100")));
        assert!(!m.is_match(&bits("011")));
    }

    #[test]
    fn exact_and_search_modes() {
        assert!(matcher("1{1,2}0{1,1}", AnchorMode::Exact).is_match(&bits("110")));
        assert!(!matcher("1{1,2}0{1,1}", AnchorMode::Exact).is_match(&bits("1100")));
        let search = matcher("1{2,2}0{1,3}", AnchorMode::Search);
        assert_eq!(
            search.match_slice(&bits("0001100001")).span,
            Some(MatchSpan { start: 3, end: 8 })
        );
        assert!(!search.is_match(&bits("0101010")));
    }

    #[test]
    fn optional_group_matches_empty() {
        let m = matcher("(1{1,1}|0{1,1})?", AnchorMode::Exact);
        assert!(m.is_match(&[]));
        let m = matcher("(1{1,1}|0{1,1})?", AnchorMode::Search);
        assert_eq!(m.match_slice(&bits("000")).span, Some(MatchSpan { start: 0, end: 1 }));
    }

    #[test]
    fn zero_length_units_join_runs() {
        let m = matcher("1{2,2}0{0,3}1{2,2}", AnchorMode::Exact);
        assert!(m.is_match(&bits("1111")));
        assert!(m.is_match(&bits("110011")));
        assert!(!m.is_match(&bits("11000011")));
    }

    #[test]
    fn nugache_whole_stream() {
        let m = matcher("1{1,1000000}", AnchorMode::Exact);
        assert!(m.is_match(&vec![true; 500]));
        assert!(!m.is_match(&[]));
        let mut one_dip = vec![true; 500];
        one_dip[250] = false;
        assert!(!m.is_match(&one_dip));
    }
}
