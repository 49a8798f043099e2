//! Refutation certificates: sum-of-squares identities proving that a game
//! has no winning strategy in any dimension.
//!
//! A certificate consists of a symmetric gram matrix Z over the degree-d
//! word basis and multipliers m_(w,i) over truncated left-ideal
//! generators, asserting
//!
//! ```text
//! -1 = sum_{u,v} Z[u,v] star(u) v
//!    + sum_{w,i} m_(w,i) (w n_i + (w n_i)*)
//! ```
//!
//! with Z positive semidefinite and n_i the invalid-set elements. Applying
//! any unital representation that kills the invalid set to both sides
//! yields -1 >= 0, so no such representation exists, and with it no
//! winning strategy of any dimension. Verification comes in two strengths:
//! floating point with an explicit soundness margin, and exact rational
//! arithmetic whose acceptance is proof-grade.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;

use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::exact::{check_psd, round_to_rational, solve_linear, PsdOutcome};
use crate::game::GameSpec;
use crate::moment::MomentProblem;
use crate::scalar::{Coefficient, Exact};
use crate::solver::{sos_decompose, DualRay, SolveOptions};
use crate::word::{words_up_to, Alphabet, GroupWord};

/// Denominator bounds tried during exact rounding, capped by the caller.
const DENOMINATOR_LADDER: [u64; 6] = [1, 10, 100, 1_000, 10_000, 1_000_000];

/// One ideal multiplier: `coeff` times (word n_i + (word n_i)*).
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    pub word: GroupWord,
    pub invalid_index: usize,
    pub coeff: f64,
}

/// A floating-point refutation certificate for one game.
#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    alphabet: Alphabet,
    degree: usize,
    basis: Vec<GroupWord>,
    gram: DMatrix<f64>,
    multipliers: Vec<Multiplier>,
    forbidden: Vec<(u32, u32, u8, u8)>,
}

impl SosCertificate {
    pub fn from_parts(
        alphabet: Alphabet,
        degree: usize,
        gram: DMatrix<f64>,
        multipliers: Vec<Multiplier>,
        forbidden: Vec<(u32, u32, u8, u8)>,
    ) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("certificate degree must be at least 1".into()));
        }
        let basis = words_up_to(alphabet, degree);
        if gram.nrows() != basis.len() || gram.ncols() != basis.len() {
            return Err(Error::ShapeMismatch(format!(
                "gram is {}x{}, basis has {} words",
                gram.nrows(),
                gram.ncols(),
                basis.len()
            )));
        }
        for &(x, y, a, b) in &forbidden {
            if x >= alphabet.x_count || y >= alphabet.y_count || a > 1 || b > 1 {
                return Err(Error::InvalidInput(format!(
                    "forbidden tuple ({x}, {y}, {a}, {b}) outside the alphabet"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for m in &multipliers {
            if m.invalid_index >= forbidden.len() {
                return Err(Error::IndexOutOfRange {
                    what: "invalid-set index",
                    index: m.invalid_index,
                    bound: forbidden.len(),
                });
            }
            if !m.word.fits(alphabet) || m.word.len() + 2 > 2 * degree {
                return Err(Error::InvalidInput(format!(
                    "multiplier word {} does not fit degree {degree}",
                    m.word
                )));
            }
            if !seen.insert((m.word.clone(), m.invalid_index)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate multiplier ({}, {})",
                    m.word, m.invalid_index
                )));
            }
        }
        Ok(SosCertificate {
            alphabet,
            degree,
            basis,
            gram,
            multipliers,
            forbidden,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &[GroupWord] {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn multipliers(&self) -> &[Multiplier] {
        &self.multipliers
    }

    pub fn forbidden(&self) -> &[(u32, u32, u8, u8)] {
        &self.forbidden
    }

    fn invalid_element(&self, index: usize) -> AlgebraElement<Exact> {
        let (x, y, a, b) = self.forbidden[index];
        invalid_product(self.alphabet, x, y, a, b)
    }

    /// Expands the right-hand side of the certificate identity. A valid
    /// certificate expands to the constant -1.
    pub fn expand(&self) -> AlgebraElement<Complex64> {
        let mut acc = AlgebraElement::zero(self.alphabet);
        for (i, u) in self.basis.iter().enumerate() {
            let u_star = u.star();
            for (j, v) in self.basis.iter().enumerate() {
                acc.add_term(u_star.mul(v), Complex64::new(self.gram[(i, j)], 0.0));
            }
        }
        for m in &self.multipliers {
            let shifted = AlgebraElement::<Exact>::term(self.alphabet, m.word.clone(), Exact::int(1))
                .mul(&self.invalid_element(m.invalid_index));
            let h = shifted.add(&shifted.star()).to_float();
            acc = acc.add(&h.scale(&Complex64::new(m.coeff, 0.0)));
        }
        acc
    }

    /// Floating-point verification with a soundness margin.
    ///
    /// Writing D for the deviation of the expansion from -1 and v for the
    /// negative part of the smallest gram eigenvalue, any unital
    /// representation killing the invalid set sends the identity to
    /// 0 <= -(1 - v m) + |D|_1, so the certificate is sound whenever
    /// `1 - |D|_1 - v m > 0` with m the basis size.
    pub fn verify_float(&self, game: &GameSpec) -> Result<FloatVerification> {
        self.check_game(game)?;
        let deviation = self
            .expand()
            .add(&AlgebraElement::one(self.alphabet));
        let l1_deviation = deviation.l1_norm();
        let max_deviation = deviation
            .iter()
            .map(|(_, c)| c.modulus())
            .fold(0.0f64, f64::max);
        let min_gram_eigenvalue = crate::moment::min_symmetric_eigenvalue(&self.gram);
        let sound_margin =
            1.0 - l1_deviation - (-min_gram_eigenvalue).max(0.0) * self.basis.len() as f64;
        Ok(FloatVerification {
            l1_deviation,
            max_deviation,
            min_gram_eigenvalue,
            sound_margin,
        })
    }

    /// Exact verification: rounds the gram matrix through a denominator
    /// ladder, absorbs the rounding error into a class-wise correction,
    /// re-derives the multipliers exactly, and checks positive
    /// semidefiniteness in rational arithmetic. Success is proof-grade;
    /// the returned object re-verifies independently.
    pub fn verify_exact(&self, game: &GameSpec, max_denominator: u64) -> Result<ExactCertificate> {
        self.check_game(game)?;
        let problem = MomentProblem::with_cap(game, self.degree, usize::MAX)?;
        let k = problem.class_count();

        // Exact ideal rows: class sums of w n_i per generator.
        let mut q_rows: Vec<Vec<BigRational>> = Vec::with_capacity(problem.generators().len());
        for (i, w) in problem.generators() {
            let shifted = AlgebraElement::<Exact>::term(self.alphabet, w.clone(), Exact::int(1))
                .mul(&self.invalid_element(*i));
            let mut row = vec![BigRational::zero(); k];
            for (t, c) in shifted.iter() {
                assert!(c.is_real());
                let class = problem.class_of(t).expect("generator word in range");
                row[class] += c.re.clone();
            }
            q_rows.push(row);
        }
        let sizes: Vec<BigRational> = (0..k)
            .map(|c| BigRational::from_integer(BigInt::from(problem.class_size(c))))
            .collect();

        let mut last_failure = String::new();
        for den in DENOMINATOR_LADDER
            .iter()
            .copied()
            .filter(|&d| d <= max_denominator)
            .chain(
                (!DENOMINATOR_LADDER.contains(&max_denominator))
                    .then_some(max_denominator),
            )
        {
            match self.try_exactify(&problem, &q_rows, &sizes, den) {
                Ok(cert) => return Ok(cert),
                Err(e) => last_failure = format!("denominator {den}: {e}"),
            }
        }
        Err(Error::Exactification(last_failure))
    }

    fn try_exactify(
        &self,
        problem: &MomentProblem,
        q_rows: &[Vec<BigRational>],
        sizes: &[BigRational],
        den: u64,
    ) -> Result<ExactCertificate> {
        #![allow(clippy::needless_range_loop)]
        let m = self.basis.len();
        let k = problem.class_count();
        let r = q_rows.len();

        let mut gram_q = vec![vec![BigRational::zero(); m]; m];
        for i in 0..m {
            for j in i..m {
                let v = round_to_rational((self.gram[(i, j)] + self.gram[(j, i)]) / 2.0, den);
                gram_q[i][j] = v.clone();
                gram_q[j][i] = v;
            }
        }

        // b = -indicator(identity) - classsum(gram), the defect the
        // multipliers and the class correction must cover.
        let mut b = vec![BigRational::zero(); k];
        b[problem.identity_class()] = -BigRational::from_integer(1.into());
        for i in 0..m {
            for j in 0..m {
                let c = problem.cell_class(i, j);
                b[c] -= &gram_q[i][j];
            }
        }

        // Least squares in the class-size weighted norm: pick multipliers
        // minimizing the correction, then absorb what remains.
        let mut normal = vec![vec![BigRational::zero(); r]; r];
        let mut rhs = vec![BigRational::zero(); r];
        for c in 0..k {
            let w_inv = BigRational::from_integer(1.into()) / &sizes[c];
            for (ri, qi) in q_rows.iter().enumerate() {
                if qi[c].is_zero() {
                    continue;
                }
                let scaled = &qi[c] * &w_inv;
                for (rj, qj) in q_rows.iter().enumerate() {
                    if !qj[c].is_zero() {
                        normal[ri][rj] += &scaled * &qj[c];
                    }
                }
                rhs[ri] += &scaled * &b[c] / BigRational::from_integer(2.into());
            }
        }
        let mult = solve_linear(&normal, &rhs)
            .ok_or_else(|| Error::Exactification("normal equations inconsistent".into()))?;

        let mut gamma = b;
        for c in 0..k {
            for (ri, qi) in q_rows.iter().enumerate() {
                if !qi[c].is_zero() {
                    gamma[c] -= BigRational::from_integer(2.into()) * &qi[c] * &mult[ri];
                }
            }
            gamma[c] /= &sizes[c];
        }
        for i in 0..m {
            for j in 0..m {
                let c = problem.cell_class(i, j);
                gram_q[i][j] += &gamma[c];
            }
        }

        match check_psd(&gram_q) {
            PsdOutcome::Psd { rank } => {
                let multipliers: Vec<(GroupWord, usize, BigRational)> = problem
                    .generators()
                    .iter()
                    .zip(&mult)
                    .filter(|(_, c)| !c.is_zero())
                    .map(|((i, w), c)| (w.clone(), *i, c.clone()))
                    .collect();
                let cert = ExactCertificate {
                    alphabet: self.alphabet,
                    degree: self.degree,
                    forbidden: self.forbidden.clone(),
                    denominator_bound: den,
                    gram: gram_q,
                    multipliers,
                    gram_rank: rank,
                };
                cert.recheck()?;
                Ok(cert)
            }
            PsdOutcome::NotPsd { pivot } => Err(Error::Exactification(format!(
                "rounded gram is not positive semidefinite (pivot {pivot})"
            ))),
        }
    }

    fn check_game(&self, game: &GameSpec) -> Result<()> {
        if game.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch(
                self.alphabet.x_count,
                self.alphabet.y_count,
                game.x_count(),
                game.y_count(),
            ));
        }
        if game.forbidden() != self.forbidden {
            return Err(Error::InvalidInput(
                "certificate forbidden set does not match the game".into(),
            ));
        }
        Ok(())
    }

    /// Re-expresses the certificate over a larger degree. The word basis
    /// at the old degree is a prefix of the new one, so the gram matrix
    /// embeds as a leading block.
    pub fn embed(&self, degree: usize) -> Result<SosCertificate> {
        if degree < self.degree {
            return Err(Error::InvalidInput(format!(
                "cannot embed degree {} into degree {degree}",
                self.degree
            )));
        }
        let basis = words_up_to(self.alphabet, degree);
        let mut gram = DMatrix::zeros(basis.len(), basis.len());
        gram.view_mut((0, 0), (self.basis.len(), self.basis.len()))
            .copy_from(&self.gram);
        SosCertificate::from_parts(
            self.alphabet,
            degree,
            gram,
            self.multipliers.clone(),
            self.forbidden.clone(),
        )
    }
}

/// Builds the invalid-set element for one forbidden tuple.
pub fn invalid_product(
    alphabet: Alphabet,
    x: u32,
    y: u32,
    a: u8,
    b: u8,
) -> AlgebraElement<Exact> {
    let e: AlgebraElement<Exact> =
        AlgebraElement::projector(alphabet, crate::element::Party::Alice, x, a);
    let f: AlgebraElement<Exact> =
        AlgebraElement::projector(alphabet, crate::element::Party::Bob, y, b);
    e.mul(&f)
}

/// Turns a converged dual ray into a certificate, verifying on the way
/// that its expansion stays within `tol` of the constant -1 in l1 norm.
pub fn extract_certificate(
    ray: &DualRay,
    problem: &MomentProblem,
    tol: f64,
) -> Result<SosCertificate> {
    let multipliers = problem
        .generators()
        .iter()
        .zip(&ray.mu)
        .filter(|(_, mu)| mu.abs() > 1e-12)
        .map(|((i, w), mu)| Multiplier {
            word: w.clone(),
            invalid_index: *i,
            coeff: mu / 2.0,
        })
        .collect();
    let cert = SosCertificate::from_parts(
        problem.alphabet(),
        problem.degree(),
        ray.z.clone(),
        multipliers,
        problem.game().forbidden(),
    )?;
    let verification = cert.verify_float(problem.game())?;
    if verification.l1_deviation > tol {
        return Err(Error::ExtractionFailure(format!(
            "expansion deviates from -1 by {:.3e} in l1, tolerance {tol:.3e}",
            verification.l1_deviation
        )));
    }
    Ok(cert)
}

/// Result of floating-point certificate verification.
#[derive(Clone, Copy, Debug)]
pub struct FloatVerification {
    /// l1 distance between the expansion and the constant -1.
    pub l1_deviation: f64,
    /// Largest single coefficient deviation.
    pub max_deviation: f64,
    /// Smallest eigenvalue of the gram matrix.
    pub min_gram_eigenvalue: f64,
    /// Positive means the certificate soundly refutes all strategies even
    /// after accounting for the floating-point slack.
    pub sound_margin: f64,
}

impl FloatVerification {
    pub fn is_sound(&self) -> bool {
        self.sound_margin > 0.0
    }
}

/// A certificate in exact rational arithmetic. Constructed only after the
/// identity has been checked exactly and the gram matrix proven positive
/// semidefinite, so possession of a value of this type that passes
/// [`ExactCertificate::recheck`] is a complete proof.
#[derive(Clone, Debug)]
pub struct ExactCertificate {
    pub alphabet: Alphabet,
    pub degree: usize,
    pub forbidden: Vec<(u32, u32, u8, u8)>,
    /// The denominator bound at which rounding succeeded.
    pub denominator_bound: u64,
    pub gram: Vec<Vec<BigRational>>,
    pub multipliers: Vec<(GroupWord, usize, BigRational)>,
    pub gram_rank: usize,
}

impl ExactCertificate {
    /// Recomputes the certificate identity and the semidefiniteness check
    /// from scratch in exact arithmetic.
    pub fn recheck(&self) -> Result<()> {
        let basis = words_up_to(self.alphabet, self.degree);
        if self.gram.len() != basis.len() {
            return Err(Error::ShapeMismatch(format!(
                "gram side {} vs basis {}",
                self.gram.len(),
                basis.len()
            )));
        }
        let mut acc = AlgebraElement::<Exact>::one(self.alphabet);
        for (i, u) in basis.iter().enumerate() {
            let u_star = u.star();
            for (j, v) in basis.iter().enumerate() {
                if self.gram[i][j] != self.gram[j][i] {
                    return Err(Error::ShapeMismatch("gram not symmetric".into()));
                }
                acc.add_term(u_star.mul(v), Exact::real(self.gram[i][j].clone()));
            }
        }
        for (w, i, c) in &self.multipliers {
            if *i >= self.forbidden.len() {
                return Err(Error::IndexOutOfRange {
                    what: "invalid-set index",
                    index: *i,
                    bound: self.forbidden.len(),
                });
            }
            let (x, y, a, b) = self.forbidden[*i];
            let shifted = AlgebraElement::<Exact>::term(self.alphabet, w.clone(), Exact::int(1))
                .mul(&invalid_product(self.alphabet, x, y, a, b));
            let h = shifted.add(&shifted.star());
            acc = acc.add(&h.scale(&Exact::real(c.clone())));
        }
        if !acc.is_zero() {
            return Err(Error::Exactification(format!(
                "identity residual has {} nonzero terms",
                acc.support_size()
            )));
        }
        if !check_psd(&self.gram).is_psd() {
            return Err(Error::Exactification(
                "gram matrix is not positive semidefinite".into(),
            ));
        }
        Ok(())
    }

    /// The gram matrix as floats, for reporting.
    pub fn gram_f64(&self) -> DMatrix<f64> {
        let n = self.gram.len();
        DMatrix::from_fn(n, n, |i, j| self.gram[i][j].to_f64().unwrap_or(f64::NAN))
    }
}

/// A sum-of-squares decomposition of `bound - element*element` over the
/// degree-d word basis, witnessing that the element's spectrum is bounded
/// by its l1 norm in every representation.
#[derive(Clone, Debug)]
pub struct SosWitness {
    pub alphabet: Alphabet,
    pub degree: usize,
    /// The squared l1 norm of the witnessed element.
    pub bound: f64,
    pub gram: DMatrix<f64>,
}

impl SosWitness {
    /// l1 distance between the gram expansion and
    /// `bound - element*element`.
    pub fn residual(&self, element: &AlgebraElement<Complex64>) -> f64 {
        let basis = words_up_to(self.alphabet, self.degree);
        let mut acc = AlgebraElement::zero(self.alphabet);
        for (i, u) in basis.iter().enumerate() {
            let u_star = u.star();
            for (j, v) in basis.iter().enumerate() {
                acc.add_term(u_star.mul(v), Complex64::new(self.gram[(i, j)], 0.0));
            }
        }
        acc.sub(&witness_target(element, self.bound)).l1_norm()
    }
}

fn witness_target(element: &AlgebraElement<Complex64>, bound: f64) -> AlgebraElement<Complex64> {
    AlgebraElement::one(element.alphabet())
        .scale(&Complex64::new(bound, 0.0))
        .sub(&element.star().mul(element))
}

/// Searches for a sum-of-squares witness that
/// `l1(element)^2 - element*element` is a sum of hermitian squares over
/// words of length at most `degree`. Such an identity always exists at
/// some degree; at a fixed degree the search may come back empty.
///
/// The element must have real coefficients, and its square must involve
/// only words of length at most twice the degree.
pub fn archimedean_witness(
    element: &AlgebraElement<Complex64>,
    degree: usize,
    options: &SolveOptions,
) -> Result<Option<SosWitness>> {
    let alphabet = element.alphabet();
    for (w, c) in element.iter() {
        if c.im.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "coefficient of {w} has imaginary part {:.3e}",
                c.im
            )));
        }
    }
    let bound = element.l1_norm().powi(2);
    let free_game = GameSpec::from_forbidden(alphabet.x_count, alphabet.y_count, &[])
        .expect("empty forbidden set");
    let problem = MomentProblem::new(&free_game, degree)?;
    let mut target = vec![0.0; problem.class_count()];
    for (w, c) in witness_target(element, bound).iter() {
        debug_assert!(c.im.abs() < 1e-12);
        let Some(class) = problem.class_of(w) else {
            return Err(Error::InvalidInput(format!(
                "squared element has the word {w}, beyond degree {degree}",
            )));
        };
        let rep = &problem.classes()[class];
        let self_adjoint = *rep == rep.star();
        if self_adjoint {
            target[class] += c.re;
        } else if w == rep {
            // Star partners carry equal coefficients; count the pair once
            // via its representative.
            target[class] += 2.0 * c.re;
        }
    }
    let witness = sos_decompose(&problem, &target, options).map(|z| SosWitness {
        alphabet,
        degree,
        bound,
        gram: z,
    });
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Party;
    use crate::solver::{solve, SolveStatus};

    fn refute(game: &GameSpec, degree: usize) -> (MomentProblem, SosCertificate) {
        let problem = MomentProblem::new(game, degree).unwrap();
        let result = solve(&problem, &SolveOptions::default());
        match result.status {
            SolveStatus::Infeasible(ray) => {
                let cert = extract_certificate(&ray, &problem, 1e-6).unwrap();
                (problem, cert)
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn parity_game_certificate_verifies_in_float_and_exact() {
        let g = GameSpec::chsh();
        let (_, cert) = refute(&g, 1);
        let v = cert.verify_float(&g).unwrap();
        assert!(v.l1_deviation < 1e-7, "{v:?}");
        assert!(v.min_gram_eigenvalue > 1e-4, "{v:?}");
        assert!(v.is_sound(), "{v:?}");
        assert!(v.sound_margin > 0.9, "{v:?}");

        let exact = cert.verify_exact(&g, 1_000_000).unwrap();
        exact.recheck().unwrap();
        assert!(exact.gram_rank >= 1);
        assert!(exact.denominator_bound <= 1_000_000);
    }

    #[test]
    fn fully_forbidden_game_certificate_is_exact() {
        let g = GameSpec::all_forbidden(1, 1);
        let (_, cert) = refute(&g, 1);
        let v = cert.verify_float(&g).unwrap();
        assert!(v.is_sound());
        let exact = cert.verify_exact(&g, 10_000).unwrap();
        exact.recheck().unwrap();
    }

    #[test]
    fn hand_built_certificate_for_fully_forbidden_game() {
        // The four invalid elements of the one-question fully forbidden
        // game sum to the identity, so multipliers of -1/2 alone already
        // expand to -1 with a zero gram matrix.
        let g = GameSpec::all_forbidden(1, 1);
        let basis_len = words_up_to(g.alphabet(), 1).len();
        let multipliers = (0..4)
            .map(|i| Multiplier {
                word: GroupWord::identity(),
                invalid_index: i,
                coeff: -0.5,
            })
            .collect();
        let cert = SosCertificate::from_parts(
            g.alphabet(),
            1,
            DMatrix::zeros(basis_len, basis_len),
            multipliers,
            g.forbidden(),
        )
        .unwrap();
        let v = cert.verify_float(&g).unwrap();
        assert_eq!(v.l1_deviation, 0.0);
        assert_eq!(v.max_deviation, 0.0);
        assert!(v.is_sound());
        let exact = cert.verify_exact(&g, 1).unwrap();
        assert_eq!(exact.denominator_bound, 1);

        // Same identity with the unit square moved into the gram matrix.
        let mut gram = DMatrix::zeros(basis_len, basis_len);
        gram[(0, 0)] = 1.0;
        let multipliers = (0..4)
            .map(|i| Multiplier {
                word: GroupWord::identity(),
                invalid_index: i,
                coeff: -1.0,
            })
            .collect();
        let cert2 =
            SosCertificate::from_parts(g.alphabet(), 1, gram, multipliers, g.forbidden()).unwrap();
        assert_eq!(cert2.verify_float(&g).unwrap().l1_deviation, 0.0);
        cert2.verify_exact(&g, 1).unwrap().recheck().unwrap();
    }

    #[test]
    fn tampering_breaks_verification() {
        let g = GameSpec::chsh();
        let (_, cert) = refute(&g, 1);

        let mut damaged = cert.clone();
        for m in &mut damaged.multipliers {
            m.coeff = -m.coeff;
        }
        let v = damaged.verify_float(&g).unwrap();
        assert!(!v.is_sound(), "{v:?}");

        // An indefinite gram matrix must fail the exact path even though
        // multipliers are re-derived there.
        let mut indefinite = cert.clone();
        indefinite.gram = -indefinite.gram;
        assert!(matches!(
            indefinite.verify_exact(&g, 1_000_000),
            Err(Error::Exactification(_))
        ));

        let wrong_game = GameSpec::equality(2);
        assert!(cert.verify_float(&wrong_game).is_err());
    }

    #[test]
    fn embedding_preserves_validity() {
        let g = GameSpec::chsh();
        let (_, cert) = refute(&g, 1);
        let lifted = cert.embed(2).unwrap();
        assert_eq!(lifted.degree(), 2);
        let v = lifted.verify_float(&g).unwrap();
        assert!(v.l1_deviation < 1e-7);
        assert!(v.is_sound());
        lifted.verify_exact(&g, 1_000_000).unwrap().recheck().unwrap();
        assert!(cert.embed(0).is_err() || cert.degree() == 0);
    }

    #[test]
    fn single_tampered_multiplier_shows_up_as_coefficient_residual() {
        let g = GameSpec::chsh();
        let (_, mut cert) = refute(&g, 1);
        cert.multipliers[0].coeff += 0.01;
        let v = cert.verify_float(&g).unwrap();
        // The damaged row has l1 norm at most 2, so the bump leaks a
        // deviation between 0.01 and 0.02 across its words.
        assert!(v.l1_deviation > 0.004, "{v:?}");
        assert!(v.l1_deviation < 0.021, "{v:?}");
        assert!(v.max_deviation > 0.002, "{v:?}");
        assert!(v.max_deviation < 0.011, "{v:?}");
    }

    #[test]
    fn feasibility_is_monotone_across_degrees() {
        let chsh = GameSpec::chsh();
        let (_, cert) = refute(&chsh, 1);
        for degree in [2, 3] {
            let lifted = cert.embed(degree).unwrap();
            let v = lifted.verify_float(&chsh).unwrap();
            assert!(v.is_sound(), "degree {degree}: {v:?}");
        }
        let (_, direct) = refute(&chsh, 2);
        assert!(direct.verify_float(&chsh).unwrap().is_sound());

        let eq = GameSpec::equality(2);
        let problem = MomentProblem::new(&eq, 2).unwrap();
        let result = solve(&problem, &SolveOptions::default());
        let SolveStatus::Feasible(moments) = result.status else {
            panic!("equality game is satisfiable, got {:?}", result.status);
        };
        let restricted = moments.restrict(1);
        let low = MomentProblem::new(&eq, 1).unwrap();
        let report = low.check(&restricted).unwrap();
        assert!(report.passes(1e-6), "{report:?}");
    }

    #[test]
    fn extraction_rejects_garbage_rays() {
        let g = GameSpec::chsh();
        let problem = MomentProblem::new(&g, 1).unwrap();
        let ray = DualRay {
            z: DMatrix::identity(problem.side(), problem.side()),
            mu: vec![0.0; problem.rows().len()],
            min_eigenvalue: 1.0,
            affine_residual: 1.0,
            shift: 0.0,
        };
        assert!(matches!(
            extract_certificate(&ray, &problem, 1e-6),
            Err(Error::ExtractionFailure(_))
        ));
    }

    #[test]
    fn archimedean_witness_for_single_generator() {
        let alphabet = Alphabet::new(2, 2);
        let a0: AlgebraElement<Complex64> = AlgebraElement::gen_a(alphabet, 0);
        let w = archimedean_witness(&a0, 1, &SolveOptions::default())
            .unwrap()
            .expect("1 - A0^2 vanishes");
        assert_eq!(w.bound, 1.0);
        assert!(w.residual(&a0) < 1e-7);
        assert!(w.gram.norm() < 1e-6, "square of an involution is 1");
    }

    #[test]
    fn archimedean_witness_for_projector() {
        let alphabet = Alphabet::new(2, 2);
        let e0 = AlgebraElement::<Complex64>::projector(alphabet, Party::Alice, 0, 0);
        let w = archimedean_witness(&e0, 1, &SolveOptions::default())
            .unwrap()
            .expect("1 - e0 is the complementary projector");
        assert_eq!(w.bound, 1.0);
        assert!(w.residual(&e0) < 1e-7);
        let positive = w
            .gram
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&v| v > 1e-6)
            .count();
        assert_eq!(positive, 1);
    }

    #[test]
    fn archimedean_witness_for_generator_sum() {
        let alphabet = Alphabet::new(2, 2);
        let sum = AlgebraElement::<Complex64>::gen_a(alphabet, 0)
            .add(&AlgebraElement::gen_a(alphabet, 1));
        let w = archimedean_witness(&sum, 2, &SolveOptions::default())
            .unwrap()
            .expect("4 - (A0 + A1)^2 is a hermitian square");
        assert_eq!(w.bound, 4.0);
        assert!(w.residual(&sum) < 1e-7);
    }

    #[test]
    fn archimedean_witness_rejects_bad_inputs() {
        let alphabet = Alphabet::new(2, 2);
        let skew = AlgebraElement::<Complex64>::term(
            alphabet,
            GroupWord::generator_a(0),
            Complex64::new(0.0, 1.0),
        );
        assert!(archimedean_witness(&skew, 1, &SolveOptions::default()).is_err());

        // The cross terms of the square reach length four.
        let spread = AlgebraElement::<Complex64>::gen_a(alphabet, 0).add(
            &AlgebraElement::term(
                alphabet,
                GroupWord::parse("A1 A0 A1", alphabet).unwrap(),
                Complex64::ONE,
            ),
        );
        assert!(archimedean_witness(&spread, 1, &SolveOptions::default()).is_err());
        assert!(archimedean_witness(&spread, 2, &SolveOptions::default())
            .unwrap()
            .is_some());
    }
}
