//! Elements of the universal game algebra: finite linear combinations of
//! group words with coefficients in a chosen scalar field.

use num_rational::BigRational;
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{Coefficient, Exact};
use crate::word::{Alphabet, GroupWord};

/// A finitely supported function from canonical words to coefficients.
///
/// Terms are kept in word order, so iteration, equality, and rendering are
/// all deterministic. Zero coefficients are pruned eagerly; for the float
/// scalar "zero" means magnitude below the pruning threshold.
#[derive(Clone, PartialEq, Debug)]
pub struct AlgebraElement<C: Coefficient> {
    alphabet: Alphabet,
    terms: BTreeMap<GroupWord, C>,
}

impl<C: Coefficient> AlgebraElement<C> {
    pub fn zero(alphabet: Alphabet) -> Self {
        AlgebraElement {
            alphabet,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(alphabet: Alphabet) -> Self {
        AlgebraElement::term(alphabet, GroupWord::identity(), C::one())
    }

    pub fn term(alphabet: Alphabet, word: GroupWord, coeff: C) -> Self {
        assert!(word.fits(alphabet), "word uses letters outside the alphabet");
        let mut terms = BTreeMap::new();
        if !coeff.is_negligible() {
            terms.insert(word, coeff);
        }
        AlgebraElement { alphabet, terms }
    }

    /// The order-two generator observable for an Alice question.
    pub fn gen_a(alphabet: Alphabet, x: u32) -> Self {
        AlgebraElement::term(alphabet, GroupWord::generator_a(x), C::one())
    }

    /// The order-two generator observable for a Bob question.
    pub fn gen_b(alphabet: Alphabet, y: u32) -> Self {
        AlgebraElement::term(alphabet, GroupWord::generator_b(y), C::one())
    }

    /// The projector onto answer `answer` for the given party question:
    /// (1 + (-1)^answer * g)/2 with g the question's generator.
    pub fn projector(alphabet: Alphabet, party: Party, question: u32, answer: u8) -> Self {
        let g = match party {
            Party::Alice => GroupWord::generator_a(question),
            Party::Bob => GroupWord::generator_b(question),
        };
        let sign = if answer.is_multiple_of(2) { 1 } else { -1 };
        let mut el = AlgebraElement::term(alphabet, GroupWord::identity(), C::from_ratio(1, 2));
        el.add_term(g, C::from_ratio(sign, 2));
        el
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn coeff(&self, word: &GroupWord) -> C {
        self.terms.get(word).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupWord, &C)> {
        self.terms.iter()
    }

    /// Adds `coeff * word` in place, pruning if the result cancels.
    pub fn add_term(&mut self, word: GroupWord, coeff: C) {
        assert!(word.fits(self.alphabet), "word uses letters outside the alphabet");
        let updated = match self.terms.get(&word) {
            Some(existing) => existing.add(&coeff),
            None => coeff,
        };
        if updated.is_negligible() {
            self.terms.remove(&word);
        } else {
            self.terms.insert(word, updated);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeff(|c| c.neg())
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = AlgebraElement::zero(self.alphabet);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.mul(s));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.alphabet, other.alphabet, "alphabet mismatch");
        let mut out = AlgebraElement::zero(self.alphabet);
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                out.add_term(wa.mul(wb), ca.mul(cb));
            }
        }
        out
    }

    /// The involution: conjugates coefficients and inverts words.
    pub fn star(&self) -> Self {
        let mut out = AlgebraElement::zero(self.alphabet);
        for (w, c) in &self.terms {
            out.add_term(w.star(), c.conj());
        }
        out
    }

    pub fn is_self_adjoint(&self) -> bool {
        *self == self.star()
    }

    /// Sum of coefficient moduli, as a float.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.modulus()).sum()
    }

    fn map_coeff(&self, f: impl Fn(&C) -> C) -> Self {
        let mut out = AlgebraElement::zero(self.alphabet);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), f(c));
        }
        out
    }
}

impl AlgebraElement<Exact> {
    /// Sum of coefficient moduli as an exact rational. `None` when some
    /// coefficient has irrational modulus (a general complex rational
    /// does); callers needing a float bound should use [`Self::l1_norm`].
    pub fn l1_norm_exact(&self) -> Option<BigRational> {
        let mut total = BigRational::zero();
        for c in self.terms.values() {
            total += c.modulus_exact()?;
        }
        Some(total)
    }

    pub fn to_float(&self) -> AlgebraElement<num_complex::Complex64> {
        let mut out = AlgebraElement::zero(self.alphabet);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c.to_c64());
        }
        out
    }
}

/// Which player a question or projector belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Party {
    Alice,
    Bob,
}

impl<C: Coefficient> fmt::Display for AlgebraElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            let body = format!("{}*{}", c.render(), w.render());
            if first {
                f.write_str(&body)?;
                first = false;
            } else if let Some(rest) = body.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn ab() -> Alphabet {
        Alphabet::new(2, 2)
    }

    type ExactEl = AlgebraElement<Exact>;

    #[test]
    fn projector_is_idempotent_and_self_adjoint() {
        for party in [Party::Alice, Party::Bob] {
            for answer in 0..2u8 {
                let p: ExactEl = AlgebraElement::projector(ab(), party, 1, answer);
                assert_eq!(p.mul(&p), p);
                assert!(p.is_self_adjoint());
            }
        }
    }

    #[test]
    fn complementary_projectors_sum_to_one() {
        let p0: ExactEl = AlgebraElement::projector(ab(), Party::Alice, 0, 0);
        let p1: ExactEl = AlgebraElement::projector(ab(), Party::Alice, 0, 1);
        assert_eq!(p0.add(&p1), AlgebraElement::one(ab()));
        assert!(p0.mul(&p1).is_zero());
    }

    #[test]
    fn generator_squares_to_one() {
        let a: ExactEl = AlgebraElement::gen_a(ab(), 0);
        assert_eq!(a.mul(&a), AlgebraElement::one(ab()));
    }

    #[test]
    fn cross_party_projectors_commute() {
        let p: ExactEl = AlgebraElement::projector(ab(), Party::Alice, 0, 1);
        let q: ExactEl = AlgebraElement::projector(ab(), Party::Bob, 1, 0);
        assert_eq!(p.mul(&q), q.mul(&p));
    }

    #[test]
    fn l1_norm_exact_and_float() {
        let mut el = ExactEl::term(ab(), GroupWord::identity(), Exact::int(3));
        el.add_term(
            GroupWord::generator_a(0).mul(&GroupWord::generator_b(1)),
            Exact::i().mul(&Exact::int(-4)),
        );
        assert_eq!(el.l1_norm_exact(), Some(BigRational::from_integer(7.into())));
        assert_eq!(el.l1_norm(), 7.0);

        let irr = ExactEl::term(
            ab(),
            GroupWord::identity(),
            Exact::new(BigRational::from_integer(1.into()), BigRational::from_integer(1.into())),
        );
        assert_eq!(irr.l1_norm_exact(), None);
    }

    #[test]
    fn float_pruning_drops_tiny_terms() {
        let mut el = AlgebraElement::<Complex64>::one(ab());
        el.add_term(GroupWord::identity(), Complex64::new(-1.0, 0.0));
        assert!(el.is_zero());
        let tiny = AlgebraElement::<Complex64>::term(
            ab(),
            GroupWord::generator_a(0),
            Complex64::new(1e-15, 0.0),
        );
        assert!(tiny.is_zero());
    }

    #[test]
    fn rendering_orders_terms() {
        let p: AlgebraElement<Complex64> = AlgebraElement::projector(ab(), Party::Alice, 0, 0);
        assert_eq!(p.to_string(), "0.5*1 + 0.5*A0");
        let m: ExactEl = AlgebraElement::projector(ab(), Party::Alice, 0, 1);
        assert_eq!(m.to_string(), "1/2*1 - 1/2*A0");
        assert_eq!(ExactEl::zero(ab()).to_string(), "0");
    }

    fn arb_exact_element() -> impl Strategy<Value = ExactEl> {
        proptest::collection::vec(
            (
                proptest::collection::vec(0u32..2, 0..3),
                proptest::collection::vec(0u32..2, 0..3),
                -3i64..4,
                -3i64..4,
            ),
            0..5,
        )
        .prop_map(|terms| {
            let mut el = ExactEl::zero(ab());
            for (a, b, re, im) in terms {
                let w = GroupWord::new(
                    crate::word::PartyWord::from_letters(a),
                    crate::word::PartyWord::from_letters(b),
                );
                el.add_term(
                    w,
                    Exact::new(
                        BigRational::from_integer(re.into()),
                        BigRational::from_integer(im.into()),
                    ),
                );
            }
            el
        })
    }

    proptest! {
        #[test]
        fn star_is_involutive_antihomomorphism(
            a in arb_exact_element(),
            b in arb_exact_element(),
        ) {
            prop_assert_eq!(a.star().star(), a.clone());
            prop_assert_eq!(a.mul(&b).star(), b.star().mul(&a.star()));
        }

        #[test]
        fn multiplication_distributes(
            a in arb_exact_element(),
            b in arb_exact_element(),
            c in arb_exact_element(),
        ) {
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }

        #[test]
        fn l1_norm_is_subadditive_and_submultiplicative(
            a in arb_exact_element(),
            b in arb_exact_element(),
        ) {
            let tol = 1e-9;
            prop_assert!(a.add(&b).l1_norm() <= a.l1_norm() + b.l1_norm() + tol);
            prop_assert!(a.mul(&b).l1_norm() <= a.l1_norm() * b.l1_norm() + tol);
        }
    }
}
