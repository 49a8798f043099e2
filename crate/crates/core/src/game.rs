//! Two-answer nonlocal games and deterministic classical strategies.
//!
//! A game fixes question sets for two players and a table marking each
//! tuple (x, y, a, b) as allowed or forbidden. Both players answer a single
//! bit. The forbidden tuples generate the game's invalid set: products of
//! answer projectors that a winning strategy must annihilate.

use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::element::{AlgebraElement, Party};
use crate::error::{Error, Result};
use crate::scalar::{Coefficient, Exact};
use crate::word::{Alphabet, GroupWord};

/// Exhaustive search refuses games with more total questions than this.
pub const DEFAULT_SEARCH_BOUND: u32 = 24;

/// A two-player binary-answer game given by its winning predicate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GameSpec {
    alphabet: Alphabet,
    /// Row-major over (x, y, a, b): true means the tuple wins.
    allowed: Vec<bool>,
}

impl GameSpec {
    /// Builds a game from the full predicate table, row-major over
    /// (x, y, a, b) with b fastest.
    pub fn from_allowed(x_count: u32, y_count: u32, allowed: Vec<bool>) -> Result<Self> {
        let expect = (x_count as usize) * (y_count as usize) * 4;
        if allowed.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "allowed table has {} entries, expected {}",
                allowed.len(),
                expect
            )));
        }
        Ok(GameSpec {
            alphabet: Alphabet::new(x_count, y_count),
            allowed,
        })
    }

    /// Builds a game from its forbidden tuples; everything else wins.
    pub fn from_forbidden(x_count: u32, y_count: u32, forbidden: &[(u32, u32, u8, u8)]) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut allowed = vec![true; (x_count as usize) * (y_count as usize) * 4];
        for &(x, y, a, b) in forbidden {
            if x >= x_count {
                return Err(Error::IndexOutOfRange {
                    what: "alice question",
                    index: x as usize,
                    bound: x_count as usize,
                });
            }
            if y >= y_count {
                return Err(Error::IndexOutOfRange {
                    what: "bob question",
                    index: y as usize,
                    bound: y_count as usize,
                });
            }
            if a > 1 || b > 1 {
                return Err(Error::InvalidInput(format!(
                    "answers must be bits, got ({a}, {b})"
                )));
            }
            if !seen.insert((x, y, a, b)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate forbidden tuple ({x}, {y}, {a}, {b})"
                )));
            }
            let idx = tuple_index(Alphabet::new(x_count, y_count), x, y, a, b);
            allowed[idx] = false;
        }
        Ok(GameSpec {
            alphabet: Alphabet::new(x_count, y_count),
            allowed,
        })
    }

    /// The parity game on two questions per player: answers must have even
    /// XOR unless both questions are 1, where odd XOR is required.
    pub fn chsh() -> Self {
        let mut forbidden = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        let want_odd = x == 1 && y == 1;
                        if ((a ^ b) == 1) != want_odd {
                            forbidden.push((x, y, a, b));
                        }
                    }
                }
            }
        }
        GameSpec::from_forbidden(2, 2, &forbidden).expect("static game")
    }

    /// Both players see the same question set and must agree.
    pub fn equality(n: u32) -> Self {
        let mut forbidden = Vec::new();
        for x in 0..n {
            for y in 0..n {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        if x == y && a != b {
                            forbidden.push((x, y, a, b));
                        }
                    }
                }
            }
        }
        GameSpec::from_forbidden(n, n, &forbidden).expect("static game")
    }

    /// Every tuple loses; no strategy of any kind can win.
    pub fn all_forbidden(x_count: u32, y_count: u32) -> Self {
        let len = (x_count as usize) * (y_count as usize) * 4;
        GameSpec {
            alphabet: Alphabet::new(x_count, y_count),
            allowed: vec![false; len],
        }
    }

    /// Samples a game by forbidding each tuple independently.
    pub fn random<R: Rng>(x_count: u32, y_count: u32, forbid_prob: f64, rng: &mut R) -> Self {
        let len = (x_count as usize) * (y_count as usize) * 4;
        let allowed = (0..len).map(|_| !rng.random_bool(forbid_prob)).collect();
        GameSpec {
            alphabet: Alphabet::new(x_count, y_count),
            allowed,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn x_count(&self) -> u32 {
        self.alphabet.x_count
    }

    pub fn y_count(&self) -> u32 {
        self.alphabet.y_count
    }

    pub fn is_allowed(&self, x: u32, y: u32, a: u8, b: u8) -> bool {
        self.allowed[tuple_index(self.alphabet, x, y, a, b)]
    }

    /// Forbidden tuples in lexicographic (x, y, a, b) order. This order
    /// also indexes the invalid set and certificate multipliers.
    pub fn forbidden(&self) -> Vec<(u32, u32, u8, u8)> {
        let mut out = Vec::new();
        for x in 0..self.alphabet.x_count {
            for y in 0..self.alphabet.y_count {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        if !self.is_allowed(x, y, a, b) {
                            out.push((x, y, a, b));
                        }
                    }
                }
            }
        }
        out
    }

    /// The invalid set: one projector product e_a^x f_b^y per forbidden
    /// tuple, in [`GameSpec::forbidden`] order. Each element has four terms
    /// with coefficients of modulus 1/4.
    pub fn invalid_set(&self) -> Vec<AlgebraElement<Exact>> {
        self.forbidden()
            .iter()
            .map(|&(x, y, a, b)| self.invalid_element(x, y, a, b))
            .collect()
    }

    /// The single projector product for one forbidden tuple.
    pub fn invalid_element(&self, x: u32, y: u32, a: u8, b: u8) -> AlgebraElement<Exact> {
        let e: AlgebraElement<Exact> = AlgebraElement::projector(self.alphabet, Party::Alice, x, a);
        let f: AlgebraElement<Exact> = AlgebraElement::projector(self.alphabet, Party::Bob, y, b);
        e.mul(&f)
    }

    /// Whether the deterministic strategy wins every question pair.
    pub fn is_perfect(&self, strategy: &ClassicalStrategy) -> Result<bool> {
        self.check_strategy_shape(strategy)?;
        for x in 0..self.alphabet.x_count {
            for y in 0..self.alphabet.y_count {
                if !self.is_allowed(x, y, strategy.u[x as usize], strategy.v[y as usize]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn check_strategy_shape(&self, strategy: &ClassicalStrategy) -> Result<()> {
        if strategy.u.len() != self.alphabet.x_count as usize
            || strategy.v.len() != self.alphabet.y_count as usize
        {
            return Err(Error::ShapeMismatch(format!(
                "strategy answers ({}, {}) questions, game has ({}, {})",
                strategy.u.len(),
                strategy.v.len(),
                self.alphabet.x_count,
                self.alphabet.y_count
            )));
        }
        Ok(())
    }

    fn check_search_bound(&self, bound: u32) -> Result<()> {
        let total = self.alphabet.x_count + self.alphabet.y_count;
        if total > bound {
            return Err(Error::SearchBoundExceeded { total, bound });
        }
        Ok(())
    }

    /// For a fixed Alice answer table, the Bob answers winning against it
    /// at question `y`. Empty means no perfect completion exists.
    fn viable_bob_answers(&self, u: &[u8], y: u32) -> Vec<u8> {
        (0..2u8)
            .filter(|&b| (0..self.alphabet.x_count).all(|x| self.is_allowed(x, y, u[x as usize], b)))
            .collect()
    }

    /// Finds the first perfect deterministic strategy in enumeration order,
    /// if any. Strategies are ordered by their answer tables read as binary
    /// counters (question 0 the least significant bit, Alice's counter
    /// more significant than Bob's).
    pub fn search_perfect(&self) -> Result<Option<ClassicalStrategy>> {
        self.search_perfect_bounded(DEFAULT_SEARCH_BOUND)
    }

    pub fn search_perfect_bounded(&self, bound: u32) -> Result<Option<ClassicalStrategy>> {
        self.check_search_bound(bound)?;
        let xc = self.alphabet.x_count;
        let yc = self.alphabet.y_count;
        let hit = (0u64..1u64 << xc).into_par_iter().find_map_first(|bits| {
            let u = answers_from_counter(bits, xc);
            let mut v = Vec::with_capacity(yc as usize);
            for y in 0..yc {
                match self.viable_bob_answers(&u, y).first() {
                    Some(&b) => v.push(b),
                    None => return None,
                }
            }
            Some(ClassicalStrategy { u, v })
        });
        Ok(hit)
    }

    /// Every perfect deterministic strategy, in enumeration order.
    pub fn enumerate_perfect(&self) -> Result<Vec<ClassicalStrategy>> {
        self.check_search_bound(DEFAULT_SEARCH_BOUND)?;
        let xc = self.alphabet.x_count;
        let yc = self.alphabet.y_count;
        let mut out = Vec::new();
        for u_bits in 0u64..1u64 << xc {
            let u = answers_from_counter(u_bits, xc);
            let choices: Vec<Vec<u8>> = (0..yc).map(|y| self.viable_bob_answers(&u, y)).collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            for v_bits in 0u64..1u64 << yc {
                let v = answers_from_counter(v_bits, yc);
                if v.iter().zip(&choices).all(|(b, c)| c.contains(b)) {
                    out.push(ClassicalStrategy { u: u.clone(), v });
                }
            }
        }
        Ok(out)
    }

    /// The best winning probability over deterministic strategies under
    /// uniformly random questions, as an exact rational.
    pub fn classical_value(&self) -> Result<Rational64> {
        self.check_search_bound(DEFAULT_SEARCH_BOUND)?;
        let xc = self.alphabet.x_count;
        let yc = self.alphabet.y_count;
        if xc == 0 || yc == 0 {
            return Ok(Rational64::from_integer(1));
        }
        let best = (0u64..1u64 << xc)
            .into_par_iter()
            .map(|bits| {
                let u = answers_from_counter(bits, xc);
                (0..yc)
                    .map(|y| {
                        (0..2u8)
                            .map(|b| {
                                (0..xc)
                                    .filter(|&x| self.is_allowed(x, y, u[x as usize], b))
                                    .count() as i64
                            })
                            .max()
                            .unwrap_or(0)
                    })
                    .sum::<i64>()
            })
            .max()
            .unwrap_or(0);
        Ok(Rational64::new(best, (xc as i64) * (yc as i64)))
    }
}

fn tuple_index(alphabet: Alphabet, x: u32, y: u32, a: u8, b: u8) -> usize {
    debug_assert!(x < alphabet.x_count && y < alphabet.y_count && a < 2 && b < 2);
    (((x as usize) * (alphabet.y_count as usize) + y as usize) * 2 + a as usize) * 2 + b as usize
}

fn answers_from_counter(bits: u64, count: u32) -> Vec<u8> {
    (0..count).map(|q| ((bits >> q) & 1) as u8).collect()
}

/// Deterministic answers: one bit per question for each party.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub u: Vec<u8>,
    pub v: Vec<u8>,
}

impl ClassicalStrategy {
    pub fn new(u: Vec<u8>, v: Vec<u8>) -> Self {
        assert!(
            u.iter().chain(&v).all(|&bit| bit < 2),
            "answers must be bits"
        );
        ClassicalStrategy { u, v }
    }

    /// The one-dimensional representation this strategy induces: each
    /// Alice generator maps to (-1)^u(x), each Bob generator to (-1)^v(y).
    pub fn word_sign(&self, word: &GroupWord) -> i64 {
        let mut parity = 0u32;
        for &x in word.alice.letters() {
            parity ^= self.u[x as usize] as u32;
        }
        for &y in word.bob.letters() {
            parity ^= self.v[y as usize] as u32;
        }
        if parity == 0 {
            1
        } else {
            -1
        }
    }

    /// Evaluates an algebra element under the induced representation.
    pub fn evaluate<C: Coefficient>(&self, el: &AlgebraElement<C>) -> C {
        assert_eq!(
            (el.alphabet().x_count as usize, el.alphabet().y_count as usize),
            (self.u.len(), self.v.len()),
            "alphabet mismatch"
        );
        let mut acc = C::zero();
        for (w, c) in el.iter() {
            acc = acc.add(&c.mul(&C::from_int(self.word_sign(w))));
        }
        acc
    }
}
