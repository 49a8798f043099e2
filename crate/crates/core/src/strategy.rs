//! Finite-dimensional commuting-projector strategies and the extraction of
//! deterministic strategies from perfect ones.
//!
//! A strategy assigns each question a two-outcome projective measurement,
//! with Alice's projectors commuting with Bob's, plus a shared unit state.
//! When such a strategy wins a game with certainty, a deterministic perfect
//! strategy can be read off from it: complete the state to an orthonormal
//! basis, find for each question observable the first basis vector its
//! state image touches, and answer according to the argument of that
//! coefficient. The winning probability of the resulting answer pair is
//! strictly positive pair by pair, which forces it onto allowed tuples.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;

use crate::element::Party;
use crate::error::{Error, Result};
use crate::game::{ClassicalStrategy, GameSpec};
use crate::word::{Alphabet, GroupWord};

/// Residual below which a candidate basis vector counts as dependent.
const BASIS_RESIDUAL_FLOOR: f64 = 1e-10;

/// Default coefficient threshold for extraction decisions.
pub const DEFAULT_EXTRACTION_THRESHOLD: f64 = 1e-8;

/// Default residual tolerance for strategy validation.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-6;

type CMatrix = DMatrix<Complex64>;
type CVector = DVector<Complex64>;

/// A commuting-projector strategy: answer-0 projectors per question for
/// each party, and a shared state.
#[derive(Clone, Debug)]
pub struct FiniteStrategy {
    alphabet: Alphabet,
    dim: usize,
    e0: Vec<CMatrix>,
    f0: Vec<CMatrix>,
    psi: CVector,
}

impl FiniteStrategy {
    pub fn new(
        alphabet: Alphabet,
        e0: Vec<CMatrix>,
        f0: Vec<CMatrix>,
        psi: CVector,
    ) -> Result<Self> {
        let dim = psi.len();
        if dim == 0 {
            return Err(Error::ShapeMismatch("state has dimension 0".into()));
        }
        if e0.len() != alphabet.x_count as usize || f0.len() != alphabet.y_count as usize {
            return Err(Error::ShapeMismatch(format!(
                "strategy has ({}, {}) measurements, alphabet needs ({}, {})",
                e0.len(),
                f0.len(),
                alphabet.x_count,
                alphabet.y_count
            )));
        }
        for m in e0.iter().chain(f0.iter()) {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "projector is {}x{}, state has dimension {}",
                    m.nrows(),
                    m.ncols(),
                    dim
                )));
            }
        }
        Ok(FiniteStrategy {
            alphabet,
            dim,
            e0,
            f0,
            psi,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn psi(&self) -> &CVector {
        &self.psi
    }

    pub fn e0(&self, x: u32) -> &CMatrix {
        &self.e0[x as usize]
    }

    pub fn f0(&self, y: u32) -> &CMatrix {
        &self.f0[y as usize]
    }

    /// The projector for a given party, question, and answer bit.
    pub fn projector(&self, party: Party, question: u32, answer: u8) -> CMatrix {
        let p = match party {
            Party::Alice => &self.e0[question as usize],
            Party::Bob => &self.f0[question as usize],
        };
        if answer == 0 {
            p.clone()
        } else {
            CMatrix::identity(self.dim, self.dim) - p
        }
    }

    /// The order-two observable 2E - I for an Alice question.
    pub fn operator_a(&self, x: u32) -> CMatrix {
        self.e0[x as usize].scale(2.0) - CMatrix::identity(self.dim, self.dim)
    }

    /// The order-two observable 2F - I for a Bob question.
    pub fn operator_b(&self, y: u32) -> CMatrix {
        self.f0[y as usize].scale(2.0) - CMatrix::identity(self.dim, self.dim)
    }

    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        self.psi.dotc(&(op * &self.psi))
    }

    /// The joint answer amplitude <psi, e_a^x f_b^y psi>. Real and equal to
    /// the probability of the answer pair when the strategy is valid.
    pub fn correlation(&self, x: u32, y: u32, a: u8, b: u8) -> Complex64 {
        let ea = self.projector(Party::Alice, x, a);
        let fb = self.projector(Party::Bob, y, b);
        self.psi.dotc(&(&ea * (&fb * &self.psi)))
    }

    /// Probability of winning under uniformly random questions.
    pub fn winning_probability(&self, game: &GameSpec) -> f64 {
        let (xc, yc) = (self.alphabet.x_count, self.alphabet.y_count);
        let mut total = 0.0;
        for x in 0..xc {
            for y in 0..yc {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        if game.is_allowed(x, y, a, b) {
                            total += self.correlation(x, y, a, b).re;
                        }
                    }
                }
            }
        }
        total / ((xc as f64) * (yc as f64))
    }

    /// Residual of the correlation decomposition for one question pair:
    /// each joint amplitude must match the observable expansion
    /// (1 + (-1)^a <A> + (-1)^b <B> + (-1)^{a+b} <AB>)/4.
    pub fn decomposition_residual(&self, x: u32, y: u32) -> f64 {
        let ea_mean = self.expectation(&self.operator_a(x));
        let fb_mean = self.expectation(&self.operator_b(y));
        let ab_mean = self.expectation(&(self.operator_a(x) * self.operator_b(y)));
        let mut worst: f64 = 0.0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                let sa = if a == 0 { 1.0 } else { -1.0 };
                let sb = if b == 0 { 1.0 } else { -1.0 };
                let expanded =
                    (Complex64::ONE + ea_mean.scale(sa) + fb_mean.scale(sb) + ab_mean.scale(sa * sb))
                        .scale(0.25);
                worst = worst.max((self.correlation(x, y, a, b) - expanded).norm());
            }
        }
        worst
    }

    /// Answer tuples with amplitude above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<(u32, u32, u8, u8)> {
        let mut out = Vec::new();
        for x in 0..self.alphabet.x_count {
            for y in 0..self.alphabet.y_count {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        if self.correlation(x, y, a, b).norm() > threshold {
                            out.push((x, y, a, b));
                        }
                    }
                }
            }
        }
        out
    }

    /// Measures how far the strategy is from a valid perfect strategy for
    /// `game`. All matrix norms are Frobenius scaled by 1/sqrt(dim).
    pub fn validate(&self, game: &GameSpec) -> Result<ValidationReport> {
        if game.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch(
                self.alphabet.x_count,
                self.alphabet.y_count,
                game.x_count(),
                game.y_count(),
            ));
        }
        let mut projection: f64 = 0.0;
        for p in self.e0.iter().chain(self.f0.iter()) {
            projection = projection
                .max(self.mat_norm(&(p * p - p)))
                .max(self.mat_norm(&(p.adjoint() - p)));
        }
        let mut commutation: f64 = 0.0;
        for e in &self.e0 {
            for f in &self.f0 {
                commutation = commutation.max(self.mat_norm(&(e * f - f * e)));
            }
        }
        let mut perfectness: f64 = 0.0;
        for (x, y, a, b) in game.forbidden() {
            perfectness = perfectness.max(self.correlation(x, y, a, b).norm());
        }
        let norm_residual = (self.psi.norm() - 1.0).abs();
        Ok(ValidationReport {
            projection_residual: projection,
            commutation_residual: commutation,
            perfectness_residual: perfectness,
            norm_residual,
        })
    }

    fn mat_norm(&self, m: &CMatrix) -> f64 {
        m.norm() / (self.dim as f64).sqrt()
    }
}

/// Residuals from checking a strategy against a game.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    /// Worst deviation of any measurement from a self-adjoint idempotent.
    pub projection_residual: f64,
    /// Worst commutator norm between Alice and Bob projectors.
    pub commutation_residual: f64,
    /// Largest amplitude assigned to a forbidden answer tuple.
    pub perfectness_residual: f64,
    /// Deviation of the state from unit norm.
    pub norm_residual: f64,
}

impl ValidationReport {
    /// Projectors, commutation, and state norm within tolerance.
    pub fn well_formed(&self, tol: f64) -> bool {
        self.projection_residual <= tol
            && self.commutation_residual <= tol
            && self.norm_residual <= tol
    }

    /// Well-formed and winning with certainty, within tolerance.
    pub fn passes(&self, tol: f64) -> bool {
        self.well_formed(tol) && self.perfectness_residual <= tol
    }

    pub fn summary(&self) -> String {
        format!(
            "projection {:.3e}, commutation {:.3e}, perfectness {:.3e}, norm {:.3e}",
            self.projection_residual,
            self.commutation_residual,
            self.perfectness_residual,
            self.norm_residual
        )
    }
}

/// Completes `seed` to an orthonormal basis. The first basis vector is the
/// normalized seed; the rest come from orthogonalizing standard basis
/// vectors in index order, skipping near-dependent candidates. Every
/// completion vector is rotated so its first nonzero coordinate is positive
/// real, making the output deterministic.
pub fn complete_basis(seed: &CVector) -> Result<Vec<CVector>> {
    let dim = seed.len();
    let norm = seed.norm();
    if norm < BASIS_RESIDUAL_FLOOR {
        return Err(Error::ZeroVector);
    }
    let mut basis: Vec<CVector> = vec![seed.unscale(norm)];
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut cand = CVector::zeros(dim);
        cand[i] = Complex64::ONE;
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&cand);
                cand -= b * overlap;
            }
        }
        let res = cand.norm();
        if res < BASIS_RESIDUAL_FLOOR {
            continue;
        }
        cand.unscale_mut(res);
        let lead = cand
            .iter()
            .find(|c| c.norm() > BASIS_RESIDUAL_FLOOR)
            .copied()
            .unwrap_or(Complex64::ONE);
        let phase = lead.conj().unscale(lead.norm());
        basis.push(cand.scale_mut_phase(phase));
    }
    if basis.len() != dim {
        return Err(Error::ExtractionInconsistent(format!(
            "basis completion produced {} of {} vectors",
            basis.len(),
            dim
        )));
    }
    Ok(basis)
}

trait PhaseScale {
    fn scale_mut_phase(self, phase: Complex64) -> Self;
}

impl PhaseScale for CVector {
    fn scale_mut_phase(mut self, phase: Complex64) -> Self {
        for c in self.iter_mut() {
            *c *= phase;
        }
        self
    }
}

/// Knobs for [`extract_classical`].
#[derive(Clone, Copy, Debug)]
pub struct ExtractionOptions {
    /// Residual tolerance for the validation gate.
    pub validation_tol: f64,
    /// Coefficient magnitudes at or below this are treated as zero.
    pub threshold: f64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions {
            validation_tol: DEFAULT_VALIDATION_TOL,
            threshold: DEFAULT_EXTRACTION_THRESHOLD,
        }
    }
}

/// One question pair's winning amplitude under the extracted answers.
#[derive(Clone, Debug)]
pub struct PairCorrelation {
    pub x: u32,
    pub y: u32,
    pub a: u8,
    pub b: u8,
    pub value: f64,
    pub imag: f64,
}

/// Result of turning a perfect commuting-projector strategy into a
/// deterministic one, with the evidence used along the way.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub strategy: ClassicalStrategy,
    /// For each Alice question, the basis index whose coefficient decided
    /// the answer (zero-based).
    pub k: Vec<usize>,
    /// Likewise for Bob questions.
    pub l: Vec<usize>,
    /// Winning amplitude for every question pair under the answers.
    pub correlations: Vec<PairCorrelation>,
}

/// Extracts a perfect deterministic strategy from a perfect
/// commuting-projector strategy.
///
/// Fails if the input does not validate against the game, if some question
/// observable has no basis coefficient above the threshold (numerical
/// degeneracy), or if the extracted answers land on a forbidden tuple or a
/// vanishing amplitude (inconsistency, impossible for exact inputs).
pub fn extract_classical(
    strategy: &FiniteStrategy,
    game: &GameSpec,
    options: &ExtractionOptions,
) -> Result<Extraction> {
    let report = strategy.validate(game)?;
    if !report.passes(options.validation_tol) {
        return Err(Error::ValidationFailed {
            tolerance: options.validation_tol,
            summary: report.summary(),
        });
    }
    let psi = strategy.psi().unscale(strategy.psi().norm());
    let basis = complete_basis(&psi)?;

    let pick = |party: Party, q: u32| -> Result<(usize, u8)> {
        let op = match party {
            Party::Alice => strategy.operator_a(q),
            Party::Bob => strategy.operator_b(q),
        };
        let image = &op * &psi;
        for (j, b) in basis.iter().enumerate() {
            let c = b.dotc(&image);
            if c.norm() <= options.threshold {
                continue;
            }
            // Zero answer exactly when arg(c) lies in [0, pi): the open
            // upper half-plane plus the positive real axis.
            let answer = if c.im.abs() <= options.threshold {
                u8::from(c.re <= 0.0)
            } else {
                u8::from(c.im < 0.0)
            };
            return Ok((j, answer));
        }
        Err(Error::Degenerate {
            party: match party {
                Party::Alice => "alice",
                Party::Bob => "bob",
            },
            question: q,
            tolerance: options.threshold,
        })
    };

    let mut k = Vec::new();
    let mut u = Vec::new();
    for x in 0..game.x_count() {
        let (j, a) = pick(Party::Alice, x)?;
        k.push(j);
        u.push(a);
    }
    let mut l = Vec::new();
    let mut v = Vec::new();
    for y in 0..game.y_count() {
        let (j, b) = pick(Party::Bob, y)?;
        l.push(j);
        v.push(b);
    }
    let classical = ClassicalStrategy::new(u, v);

    let mut correlations = Vec::new();
    for x in 0..game.x_count() {
        for y in 0..game.y_count() {
            let a = classical.u[x as usize];
            let b = classical.v[y as usize];
            let c = strategy.correlation(x, y, a, b);
            if c.re <= options.threshold {
                return Err(Error::ExtractionInconsistent(format!(
                    "answer pair ({a}, {b}) for questions ({x}, {y}) has amplitude {:.3e}, expected positive",
                    c.re
                )));
            }
            if !game.is_allowed(x, y, a, b) {
                return Err(Error::ExtractionInconsistent(format!(
                    "extracted answers hit forbidden tuple ({x}, {y}, {a}, {b})"
                )));
            }
            correlations.push(PairCorrelation {
                x,
                y,
                a,
                b,
                value: c.re,
                imag: c.im,
            });
        }
    }
    Ok(Extraction {
        strategy: classical,
        k,
        l,
        correlations,
    })
}

/// A Haar-distributed random unitary.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im).unscale(std::f64::consts::SQRT_2)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d.unscale(d.norm());
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Builds a random perfect commuting-projector strategy for `game` as a
/// rotated direct sum of deterministic perfect strategies: up to 16
/// one-dimensional blocks sampled with replacement, a state with nonzero
/// mass on every block, and a Haar-random change of basis on top.
///
/// Fails with [`Error::NoPerfectStrategy`] when the game admits none.
pub fn generate_perfect_strategy<R: Rng + ?Sized>(
    game: &GameSpec,
    dim_budget: usize,
    rng: &mut R,
) -> Result<FiniteStrategy> {
    let witnesses = game.enumerate_perfect()?;
    if witnesses.is_empty() {
        return Err(Error::NoPerfectStrategy);
    }
    let dim = dim_budget.clamp(1, 16);
    let blocks: Vec<&ClassicalStrategy> = (0..dim)
        .map(|_| &witnesses[rng.random_range(0..witnesses.len())])
        .collect();
    let mut psi = CVector::from_fn(dim, |_, _| {
        let mag: f64 = rng.random_range(0.5..1.0);
        let angle: f64 = rng.random_range(0.0..TAU);
        Complex64::from_polar(mag, angle)
    });
    psi.unscale_mut(psi.norm());

    let diag_projector = |bits: Vec<u8>| -> CMatrix {
        CMatrix::from_fn(dim, dim, |i, j| {
            if i == j && bits[i] == 0 {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        })
    };
    let e0: Vec<CMatrix> = (0..game.x_count())
        .map(|x| diag_projector(blocks.iter().map(|s| s.u[x as usize]).collect()))
        .collect();
    let f0: Vec<CMatrix> = (0..game.y_count())
        .map(|y| diag_projector(blocks.iter().map(|s| s.v[y as usize]).collect()))
        .collect();

    let basis = random_unitary(dim, rng);
    let rotate = |m: &CMatrix| &basis * m * basis.adjoint();
    FiniteStrategy::new(
        game.alphabet(),
        e0.iter().map(&rotate).collect(),
        f0.iter().map(&rotate).collect(),
        &basis * psi,
    )
}

/// The textbook optimal (but imperfect) strategy for the parity game:
/// a maximally entangled state on two qubits with rotated measurements,
/// winning each question pair with probability cos^2(pi/8).
pub fn chsh_optimal() -> FiniteStrategy {
    let kron = |a: &CMatrix, b: &CMatrix| a.kronecker(b);
    let id2 = CMatrix::identity(2, 2);
    let z = CMatrix::from_row_slice(2, 2, &[
        Complex64::ONE,
        Complex64::ZERO,
        Complex64::ZERO,
        -Complex64::ONE,
    ]);
    let x = CMatrix::from_row_slice(2, 2, &[
        Complex64::ZERO,
        Complex64::ONE,
        Complex64::ONE,
        Complex64::ZERO,
    ]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a_ops = [kron(&z, &id2), kron(&x, &id2)];
    let b_ops = [
        kron(&id2, &(&z + &x).scale(s)),
        kron(&id2, &(&z - &x).scale(s)),
    ];
    let to_projector = |op: &CMatrix| (op + CMatrix::identity(4, 4)).scale(0.5);
    let mut psi = CVector::zeros(4);
    psi[0] = Complex64::new(s, 0.0);
    psi[3] = Complex64::new(s, 0.0);
    FiniteStrategy::new(
        Alphabet::new(2, 2),
        a_ops.iter().map(to_projector).collect(),
        b_ops.iter().map(to_projector).collect(),
        psi,
    )
    .expect("static strategy")
}

/// Hook for turning a strategy into moment data: evaluates <psi, w psi>
/// for a single word.
pub fn word_expectation(strategy: &FiniteStrategy, word: &GroupWord) -> Complex64 {
    let mut v = strategy.psi().clone();
    for &y in word.bob.letters().iter().rev() {
        v = strategy.operator_b(y) * v;
    }
    for &x in word.alice.letters().iter().rev() {
        v = strategy.operator_a(x) * v;
    }
    strategy.psi().dotc(&v)
}
