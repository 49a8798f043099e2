//! Truncated moment problems for the game algebra.
//!
//! Degree-d relaxation: a unital linear functional on words of length at
//! most 2d that is symmetric under the involution, vanishes on every
//! truncated left-ideal element w * n (n in the invalid set, |w| <= 2d-2),
//! and makes the moment matrix over words of length at most d positive
//! semidefinite. Any winning strategy in any dimension induces such a
//! functional, so infeasibility here rules them all out.
//!
//! Words related by the involution share one real unknown; the problem
//! tracks those classes explicitly and all constraints are expressed over
//! class values.

use nalgebra::DMatrix;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::game::{ClassicalStrategy, GameSpec};
use crate::scalar::Coefficient;
use crate::strategy::{word_expectation, FiniteStrategy};
use crate::word::{words_up_to, Alphabet, GroupWord};

/// Largest moment matrix side the solver will accept.
pub const MAX_MOMENT_SIDE: usize = 400;

/// A sparse linear form over class values.
pub type SparseRow = Vec<(usize, f64)>;

/// The structure of a degree-d moment problem for one game.
#[derive(Clone, Debug)]
pub struct MomentProblem {
    game: GameSpec,
    degree: usize,
    basis: Vec<GroupWord>,
    classes: Vec<GroupWord>,
    class_index: BTreeMap<GroupWord, usize>,
    /// Row-major class id per moment matrix cell.
    cell_class: Vec<usize>,
    class_size: Vec<usize>,
    /// One row per (invalid element, shift word) pair, in that order.
    generators: Vec<(usize, GroupWord)>,
    rows: Vec<SparseRow>,
}

impl MomentProblem {
    pub fn new(game: &GameSpec, degree: usize) -> Result<Self> {
        Self::with_cap(game, degree, MAX_MOMENT_SIDE)
    }

    pub fn with_cap(game: &GameSpec, degree: usize, cap: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidInput("moment degree must be at least 1".into()));
        }
        let alphabet = game.alphabet();
        let basis = words_up_to(alphabet, degree);
        if basis.len() > cap {
            return Err(Error::SolverCap {
                side: basis.len(),
                cap,
            });
        }

        let long_words = words_up_to(alphabet, 2 * degree);
        let mut classes = Vec::new();
        let mut class_index = BTreeMap::new();
        for w in &long_words {
            let rep = canonical_rep(w);
            if rep == *w && !class_index.contains_key(w) {
                class_index.insert(w.clone(), classes.len());
                classes.push(w.clone());
            }
        }
        for w in &long_words {
            if !class_index.contains_key(w) {
                let id = class_index[&canonical_rep(w)];
                class_index.insert(w.clone(), id);
            }
        }

        let m = basis.len();
        let mut cell_class = Vec::with_capacity(m * m);
        let mut class_size = vec![0usize; classes.len()];
        for u in &basis {
            let u_star = u.star();
            for v in &basis {
                let id = class_index[&u_star.mul(v)];
                cell_class.push(id);
                class_size[id] += 1;
            }
        }
        debug_assert!(class_size.iter().all(|&s| s > 0));

        let mut generators = Vec::new();
        let mut rows = Vec::new();
        let shifts = words_up_to(alphabet, 2 * degree - 2);
        for (i, n) in game.invalid_set().iter().enumerate() {
            for w in &shifts {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for (t, c) in n.iter() {
                    assert!(c.is_real(), "invalid-set coefficients are real");
                    let id = class_index[&w.mul(t)];
                    *acc.entry(id).or_insert(0.0) += c.to_c64().re;
                }
                let row: SparseRow = acc
                    .into_iter()
                    .filter(|(_, c)| c.abs() > 0.0)
                    .collect();
                generators.push((i, w.clone()));
                rows.push(row);
            }
        }

        Ok(MomentProblem {
            game: game.clone(),
            degree,
            basis,
            classes,
            class_index,
            cell_class,
            class_size,
            generators,
            rows,
        })
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn alphabet(&self) -> Alphabet {
        self.game.alphabet()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Words indexing the moment matrix.
    pub fn basis(&self) -> &[GroupWord] {
        &self.basis
    }

    pub fn side(&self) -> usize {
        self.basis.len()
    }

    /// Involution-class representatives of all words up to twice the degree.
    pub fn classes(&self) -> &[GroupWord] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, w: &GroupWord) -> Option<usize> {
        self.class_index.get(w).copied()
    }

    pub fn identity_class(&self) -> usize {
        0
    }

    pub fn class_size(&self, c: usize) -> usize {
        self.class_size[c]
    }

    pub fn cell_class(&self, i: usize, j: usize) -> usize {
        self.cell_class[i * self.basis.len() + j]
    }

    /// Labels of the ideal constraint rows: (invalid index, shift word).
    pub fn generators(&self) -> &[(usize, GroupWord)] {
        &self.generators
    }

    /// Ideal constraint rows as sparse forms over class values.
    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    /// Assembles the moment matrix from class values.
    pub fn matrix_from(&self, y: &[f64]) -> DMatrix<f64> {
        let m = self.basis.len();
        DMatrix::from_fn(m, m, |i, j| y[self.cell_class[i * m + j]])
    }

    /// Sums a symmetric matrix over each class's cells.
    pub fn class_sums(&self, z: &DMatrix<f64>) -> Vec<f64> {
        let m = self.basis.len();
        let mut out = vec![0.0; self.classes.len()];
        for i in 0..m {
            for j in 0..m {
                out[self.cell_class[i * m + j]] += z[(i, j)];
            }
        }
        out
    }

    /// Packages class values into a moment vector.
    pub fn vector_from(&self, y: &[f64]) -> MomentVector {
        let values = self
            .classes
            .iter()
            .cloned()
            .zip(y.iter().copied())
            .collect();
        MomentVector {
            alphabet: self.alphabet(),
            degree: self.degree,
            values,
        }
    }

    /// Flattens a moment vector into class values, requiring full coverage.
    pub fn values_of(&self, mv: &MomentVector) -> Result<Vec<f64>> {
        if mv.alphabet != self.alphabet() {
            return Err(Error::AlphabetMismatch(
                mv.alphabet.x_count,
                mv.alphabet.y_count,
                self.alphabet().x_count,
                self.alphabet().y_count,
            ));
        }
        self.classes
            .iter()
            .map(|w| {
                mv.get(w).ok_or_else(|| {
                    Error::InvalidInput(format!("moment vector missing word {w}"))
                })
            })
            .collect()
    }

    /// Residuals of a candidate moment vector against this problem.
    pub fn check(&self, mv: &MomentVector) -> Result<MomentCheck> {
        let y = self.values_of(mv)?;
        let unit_residual = (y[self.identity_class()] - 1.0).abs();
        let mut ideal_residual: f64 = 0.0;
        for row in &self.rows {
            let v: f64 = row.iter().map(|&(c, coeff)| coeff * y[c]).sum();
            ideal_residual = ideal_residual.max(v.abs());
        }
        let matrix = self.matrix_from(&y);
        let min_eigenvalue = min_symmetric_eigenvalue(&matrix);
        Ok(MomentCheck {
            unit_residual,
            ideal_residual,
            min_eigenvalue,
        })
    }
}

fn canonical_rep(w: &GroupWord) -> GroupWord {
    let s = w.star();
    if s < *w {
        s
    } else {
        w.clone()
    }
}

pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()).scale(0.5);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Residuals of a moment vector against a moment problem.
#[derive(Clone, Copy, Debug)]
pub struct MomentCheck {
    pub unit_residual: f64,
    pub ideal_residual: f64,
    pub min_eigenvalue: f64,
}

impl MomentCheck {
    pub fn psd_violation(&self) -> f64 {
        (-self.min_eigenvalue).max(0.0)
    }

    pub fn passes(&self, eps: f64) -> bool {
        self.unit_residual <= eps && self.ideal_residual <= eps && self.psd_violation() <= eps
    }
}

/// A real symmetric functional on words up to twice a degree, stored on
/// involution-class representatives.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    alphabet: Alphabet,
    degree: usize,
    values: BTreeMap<GroupWord, f64>,
}

impl MomentVector {
    pub fn from_values(
        alphabet: Alphabet,
        degree: usize,
        entries: impl IntoIterator<Item = (GroupWord, f64)>,
    ) -> Self {
        let mut values = BTreeMap::new();
        for (w, v) in entries {
            values.insert(canonical_rep(&w), v);
        }
        MomentVector {
            alphabet,
            degree,
            values,
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, w: &GroupWord) -> Option<f64> {
        self.values.get(&canonical_rep(w)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupWord, f64)> {
        self.values.iter().map(|(w, &v)| (w, v))
    }

    /// Moments of a deterministic strategy: f(w) is the word's sign under
    /// the induced one-dimensional representation.
    pub fn from_classical(strategy: &ClassicalStrategy, alphabet: Alphabet, degree: usize) -> Self {
        let entries = words_up_to(alphabet, 2 * degree)
            .into_iter()
            .map(|w| {
                let sign = strategy.word_sign(&w) as f64;
                (w, sign)
            });
        MomentVector::from_values(alphabet, degree, entries)
    }

    /// Moments of a convex mixture of deterministic strategies.
    pub fn from_mixture(
        parts: &[(f64, ClassicalStrategy)],
        alphabet: Alphabet,
        degree: usize,
    ) -> Self {
        let entries = words_up_to(alphabet, 2 * degree).into_iter().map(|w| {
            let v = parts
                .iter()
                .map(|(p, s)| p * s.word_sign(&w) as f64)
                .sum::<f64>();
            (w, v)
        });
        MomentVector::from_values(alphabet, degree, entries)
    }

    /// Moments of a finite-dimensional strategy: the real part of the
    /// state expectation of each word.
    pub fn from_finite(strategy: &FiniteStrategy, degree: usize) -> Self {
        let alphabet = strategy.alphabet();
        let entries = words_up_to(alphabet, 2 * degree)
            .into_iter()
            .map(|w| {
                let v = word_expectation(strategy, &w).re;
                (w, v)
            });
        MomentVector::from_values(alphabet, degree, entries)
    }

    /// The functional that is 1 at the identity and 0 elsewhere.
    pub fn identity_only(alphabet: Alphabet, degree: usize) -> Self {
        let entries = words_up_to(alphabet, 2 * degree)
            .into_iter()
            .map(|w| {
                let v = if w.is_identity() { 1.0 } else { 0.0 };
                (w, v)
            });
        MomentVector::from_values(alphabet, degree, entries)
    }

    /// Restriction to a smaller degree, dropping unreachable words.
    pub fn restrict(&self, degree: usize) -> Self {
        assert!(degree <= self.degree, "can only restrict downward");
        let values = self
            .values
            .iter()
            .filter(|(w, _)| w.len() <= 2 * degree)
            .map(|(w, &v)| (w.clone(), v))
            .collect();
        MomentVector {
            alphabet: self.alphabet,
            degree,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use crate::game::GameSpec;
    use crate::strategy::generate_perfect_strategy;

    #[test]
    fn class_registry_counts() {
        let g = GameSpec::chsh();
        let p = MomentProblem::new(&g, 1).unwrap();
        assert_eq!(p.side(), 5);
        // Words up to length 2: identity, 4 generators, 4 mixed pairs (all
        // self-adjoint), and two star-paired families A0A1/A1A0, B0B1/B1B0.
        assert_eq!(p.class_count(), 11);
        assert_eq!(p.identity_class(), 0);
        assert_eq!(p.classes()[0], GroupWord::identity());
    }

    #[test]
    fn cells_respect_transpose_symmetry() {
        let g = GameSpec::chsh();
        let p = MomentProblem::new(&g, 2).unwrap();
        for i in 0..p.side() {
            for j in 0..p.side() {
                assert_eq!(p.cell_class(i, j), p.cell_class(j, i));
            }
        }
        let total: usize = (0..p.class_count()).map(|c| p.class_size(c)).sum();
        assert_eq!(total, p.side() * p.side());
    }

    #[test]
    fn every_class_is_reachable_from_cells() {
        for degree in [1usize, 2] {
            let g = GameSpec::equality(2);
            let p = MomentProblem::new(&g, degree).unwrap();
            let mut seen = vec![false; p.class_count()];
            for i in 0..p.side() {
                for j in 0..p.side() {
                    seen[p.cell_class(i, j)] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "degree {degree}");
        }
    }

    #[test]
    fn ideal_row_count_and_shape() {
        let g = GameSpec::chsh();
        let p = MomentProblem::new(&g, 2).unwrap();
        // 13 shift words (length <= 2) per invalid element, 8 elements.
        assert_eq!(p.rows().len(), 104);
        assert_eq!(p.generators().len(), 104);
        for row in p.rows() {
            assert!(!row.is_empty());
            for &(c, coeff) in row {
                assert!(c < p.class_count());
                assert!(coeff.abs() >= 0.25 - 1e-12);
            }
        }
    }

    #[test]
    fn perfect_classical_moments_are_feasible() {
        let g = GameSpec::equality(2);
        let s = g.search_perfect().unwrap().unwrap();
        for degree in [1usize, 2] {
            let p = MomentProblem::new(&g, degree).unwrap();
            let mv = MomentVector::from_classical(&s, g.alphabet(), degree);
            let check = p.check(&mv).unwrap();
            assert!(check.passes(1e-12), "degree {degree}: {check:?}");
        }
    }

    #[test]
    fn imperfect_classical_moments_violate_the_ideal() {
        let g = GameSpec::chsh();
        let s = ClassicalStrategy::new(vec![0, 0], vec![0, 0]);
        let p = MomentProblem::new(&g, 1).unwrap();
        let mv = MomentVector::from_classical(&s, g.alphabet(), 1);
        let check = p.check(&mv).unwrap();
        assert!(check.ideal_residual > 0.9);
        assert!(check.psd_violation() <= 1e-12);
    }

    #[test]
    fn finite_strategy_moments_are_feasible() {
        let g = GameSpec::equality(2);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let s = generate_perfect_strategy(&g, 6, &mut rng).unwrap();
        let p = MomentProblem::new(&g, 2).unwrap();
        let mv = MomentVector::from_finite(&s, 2);
        let check = p.check(&mv).unwrap();
        assert!(check.passes(1e-9), "{check:?}");
    }

    #[test]
    fn identity_only_moments_fail_exactly_on_the_ideal() {
        let g = GameSpec::equality(2);
        let p = MomentProblem::new(&g, 2).unwrap();
        let mv = MomentVector::identity_only(g.alphabet(), 2);
        let check = p.check(&mv).unwrap();
        assert!(check.unit_residual <= 1e-15);
        assert!(check.psd_violation() <= 1e-12);
        assert!((check.ideal_residual - 0.25).abs() < 1e-12);

        let free = GameSpec::from_forbidden(2, 2, &[]).unwrap();
        let pf = MomentProblem::new(&free, 2).unwrap();
        let cf = pf.check(&mv).unwrap();
        assert!(cf.passes(1e-12), "{cf:?}");
    }

    #[test]
    fn free_game_has_no_ideal_rows_and_accepts_all_ones() {
        let free = GameSpec::from_forbidden(2, 2, &[]).unwrap();
        let p = MomentProblem::new(&free, 2).unwrap();
        assert!(p.rows().is_empty());
        let ones = ClassicalStrategy::new(vec![0, 0], vec![0, 0]);
        let mv = MomentVector::from_classical(&ones, free.alphabet(), 2);
        assert!(mv.iter().all(|(_, v)| v == 1.0));
        let check = p.check(&mv).unwrap();
        assert!(check.passes(1e-12), "{check:?}");
    }

    #[test]
    fn mixtures_stay_feasible() {
        let g = GameSpec::equality(2);
        let all = g.enumerate_perfect().unwrap();
        let parts: Vec<(f64, ClassicalStrategy)> = all
            .iter()
            .cloned()
            .map(|s| (1.0 / all.len() as f64, s))
            .collect();
        let p = MomentProblem::new(&g, 2).unwrap();
        let mv = MomentVector::from_mixture(&parts, g.alphabet(), 2);
        assert!(p.check(&mv).unwrap().passes(1e-12));
    }

    #[test]
    fn moment_vector_accessor_canonicalizes() {
        let g = GameSpec::chsh();
        let s = ClassicalStrategy::new(vec![0, 1], vec![1, 0]);
        let mv = MomentVector::from_classical(&s, g.alphabet(), 1);
        let w = GroupWord::parse("A0 A1", g.alphabet()).unwrap();
        assert_eq!(mv.get(&w), mv.get(&w.star()));
        assert_eq!(mv.get(&GroupWord::identity()), Some(1.0));
        let long = GroupWord::parse("A0 A1 A0", g.alphabet()).unwrap();
        assert_eq!(mv.get(&long), None);
    }

    #[test]
    fn side_cap_is_enforced() {
        let g = GameSpec::equality(5);
        assert!(matches!(
            MomentProblem::new(&g, 3),
            Err(Error::SolverCap { side: 436, cap: MAX_MOMENT_SIDE })
        ));
        assert!(MomentProblem::new(&g, 2).is_ok());
    }

    #[test]
    fn restriction_drops_long_words() {
        let g = GameSpec::chsh();
        let s = ClassicalStrategy::new(vec![0, 0], vec![0, 0]);
        let mv = MomentVector::from_classical(&s, g.alphabet(), 2);
        let r = mv.restrict(1);
        assert_eq!(r.degree(), 1);
        let p1 = MomentProblem::new(&g, 1).unwrap();
        assert!(p1.values_of(&r).is_ok());
        let long = GroupWord::parse("A0 A1 A0", g.alphabet()).unwrap();
        assert_eq!(r.get(&long), None);
        assert!(mv.get(&long).is_some());
    }
}
