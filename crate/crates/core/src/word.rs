//! Words in the universal game group.
//!
//! The group is a direct product of two free products of order-two cyclic
//! groups: one factor per question for each party. Alice generators commute
//! with Bob generators, so every element has a canonical form as a pair of
//! reduced single-party words. Reduction only ever cancels equal adjacent
//! letters, since each generator is an involution.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Question counts for the two parties.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Alphabet {
    pub x_count: u32,
    pub y_count: u32,
}

impl Alphabet {
    pub fn new(x_count: u32, y_count: u32) -> Self {
        Alphabet { x_count, y_count }
    }
}

/// Reduced word over one party's involutive generators.
///
/// Invariant: no two adjacent letters are equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct PartyWord {
    letters: Vec<u32>,
}

impl PartyWord {
    pub fn identity() -> Self {
        PartyWord { letters: Vec::new() }
    }

    pub fn generator(q: u32) -> Self {
        PartyWord { letters: vec![q] }
    }

    /// Builds a word from a letter sequence, cancelling as it goes.
    pub fn from_letters<I: IntoIterator<Item = u32>>(letters: I) -> Self {
        let mut out = Vec::new();
        for l in letters {
            if out.last() == Some(&l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        PartyWord { letters: out }
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Group product: concatenation followed by cancellation at the seam.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.letters.clone();
        for &l in &other.letters {
            if out.last() == Some(&l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        PartyWord { letters: out }
    }

    /// Inverse, which for involutive generators is letter reversal.
    pub fn reversed(&self) -> Self {
        let mut letters = self.letters.clone();
        letters.reverse();
        PartyWord { letters }
    }

    fn max_letter(&self) -> Option<u32> {
        self.letters.iter().copied().max()
    }
}

/// Canonical group element: a reduced Alice word and a reduced Bob word.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct GroupWord {
    pub alice: PartyWord,
    pub bob: PartyWord,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord::default()
    }

    pub fn generator_a(x: u32) -> Self {
        GroupWord {
            alice: PartyWord::generator(x),
            bob: PartyWord::identity(),
        }
    }

    pub fn generator_b(y: u32) -> Self {
        GroupWord {
            alice: PartyWord::identity(),
            bob: PartyWord::generator(y),
        }
    }

    pub fn new(alice: PartyWord, bob: PartyWord) -> Self {
        GroupWord { alice, bob }
    }

    pub fn is_identity(&self) -> bool {
        self.alice.is_empty() && self.bob.is_empty()
    }

    /// Total letter count of the canonical form.
    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn mul(&self, other: &Self) -> Self {
        GroupWord {
            alice: self.alice.mul(&other.alice),
            bob: self.bob.mul(&other.bob),
        }
    }

    /// The involution on group elements: inverse, i.e. per-party reversal.
    pub fn star(&self) -> Self {
        GroupWord {
            alice: self.alice.reversed(),
            bob: self.bob.reversed(),
        }
    }

    /// Whether every letter names a question inside `alphabet`.
    pub fn fits(&self, alphabet: Alphabet) -> bool {
        self.alice.max_letter().is_none_or(|m| m < alphabet.x_count)
            && self.bob.max_letter().is_none_or(|m| m < alphabet.y_count)
    }

    /// Renders as space-separated letters, Alice first: `A0 A1 B0`.
    /// The identity renders as `1`.
    pub fn render(&self) -> String {
        if self.is_identity() {
            return "1".to_string();
        }
        let mut parts = Vec::with_capacity(self.len());
        for &x in self.alice.letters() {
            parts.push(format!("A{x}"));
        }
        for &y in self.bob.letters() {
            parts.push(format!("B{y}"));
        }
        parts.join(" ")
    }

    /// Parses the output of [`GroupWord::render`]. Rejects words that are
    /// not in canonical form (unreduced or with Bob letters before Alice
    /// letters) so that rendering and parsing are mutually inverse.
    pub fn parse(s: &str, alphabet: Alphabet) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(GroupWord::identity());
        }
        let mut alice = Vec::new();
        let mut bob = Vec::new();
        for tok in s.split_whitespace() {
            let (party, idx) = tok.split_at(1);
            let q: u32 = idx
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad word token {tok:?} in {s:?}")))?;
            match party {
                "A" => {
                    if !bob.is_empty() {
                        return Err(Error::InvalidInput(format!(
                            "word {s:?} is not canonical: Alice letter after Bob letter"
                        )));
                    }
                    if q >= alphabet.x_count {
                        return Err(Error::IndexOutOfRange {
                            what: "alice question",
                            index: q as usize,
                            bound: alphabet.x_count as usize,
                        });
                    }
                    alice.push(q);
                }
                "B" => {
                    if q >= alphabet.y_count {
                        return Err(Error::IndexOutOfRange {
                            what: "bob question",
                            index: q as usize,
                            bound: alphabet.y_count as usize,
                        });
                    }
                    bob.push(q);
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "bad word token {tok:?} in {s:?}"
                    )))
                }
            }
        }
        let word = GroupWord::new(
            PartyWord::from_letters(alice.iter().copied()),
            PartyWord::from_letters(bob.iter().copied()),
        );
        if word.alice.letters() != alice.as_slice() || word.bob.letters() != bob.as_slice() {
            return Err(Error::InvalidInput(format!(
                "word {s:?} is not reduced"
            )));
        }
        Ok(word)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Graded order: shorter words first, ties broken lexicographically with
/// Alice letters before Bob letters.
impl Ord for GroupWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| {
                let a = self
                    .alice
                    .letters()
                    .iter()
                    .map(|&l| (0u8, l))
                    .chain(self.bob.letters().iter().map(|&l| (1u8, l)));
                let b = other
                    .alice
                    .letters()
                    .iter()
                    .map(|&l| (0u8, l))
                    .chain(other.bob.letters().iter().map(|&l| (1u8, l)));
                a.cmp(b)
            })
    }
}

impl PartialOrd for GroupWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reduced single-party words of length at most `max_len` over `n` letters,
/// in graded lexicographic order.
fn party_words_up_to(n: u32, max_len: usize) -> Vec<PartyWord> {
    let mut out = vec![PartyWord::identity()];
    let mut frontier: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..n {
                if w.last() == Some(&l) {
                    continue;
                }
                let mut ext = w.clone();
                ext.push(l);
                next.push(ext);
            }
        }
        out.extend(next.iter().map(|w| PartyWord {
            letters: w.clone(),
        }));
        frontier = next;
    }
    out
}

/// All canonical words of total length at most `degree`, sorted.
pub fn words_up_to(alphabet: Alphabet, degree: usize) -> Vec<GroupWord> {
    let alice = party_words_up_to(alphabet.x_count, degree);
    let bob = party_words_up_to(alphabet.y_count, degree);
    let mut out = Vec::new();
    for a in &alice {
        for b in &bob {
            if a.len() + b.len() <= degree {
                out.push(GroupWord::new(a.clone(), b.clone()));
            }
        }
    }
    out.sort();
    out
}
