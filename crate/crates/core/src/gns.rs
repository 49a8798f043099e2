//! Truncated GNS reconstruction: turns a feasible moment vector back into
//! a concrete finite-dimensional strategy.
//!
//! The moment matrix M[u, v] = f(star(u) v) over the degree-d word basis
//! factors as V^T V. Columns of V model the vectors w|psi>, so each
//! involutive generator acts by mapping the column of w to the column of
//! g w wherever both stay inside the truncation. That determines the
//! operator completely exactly when the moment matrix is flat, i.e. the
//! degree-(d-1) block already has full rank; otherwise the least-squares
//! completion is reported with honest residuals.

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::moment::MomentVector;
use crate::strategy::FiniteStrategy;
use crate::word::{words_up_to, GroupWord};

/// Relative eigenvalue and singular-value cutoff for rank decisions.
const RANK_CUTOFF: f64 = 1e-9;
/// Acceptable drift of f(1) from one.
const UNIT_TOLERANCE: f64 = 1e-6;

/// Residuals of a reconstruction, all in operator or max-entry norm.
#[derive(Clone, Copy, Debug)]
pub struct GnsReport {
    /// Largest entry of V^T V - M after rank truncation.
    pub factor_residual: f64,
    /// Largest deviation of a reconstructed generator from symmetry.
    pub self_adjoint_residual: f64,
    /// Largest deviation of a squared generator from the identity.
    pub involution_residual: f64,
    /// Largest commutator norm between the two parties' generators.
    pub commutation_residual: f64,
    /// Largest forbidden-tuple probability of the reconstructed strategy.
    pub invalid_mass: f64,
}

/// A reconstructed strategy together with rank and flatness data.
#[derive(Clone, Debug)]
pub struct GnsResult {
    pub strategy: FiniteStrategy,
    /// Rank of the truncated moment matrix, the reconstruction dimension.
    pub rank: usize,
    /// Whether the degree-(d-1) block already attains the full rank. Flat
    /// reconstructions represent the generators exactly up to rounding.
    pub flat: bool,
    pub report: GnsReport,
}

fn symmetric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    let eigen = m.clone().symmetric_eigen();
    let top = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = RANK_CUTOFF * top.max(1.0);
    eigen.eigenvalues.iter().filter(|&&l| l > cutoff).count()
}

/// Reconstructs a strategy from moments of degree at least two. Fails
/// when the unit moment drifts from one or when required moments are
/// missing; all other defects are reported as residuals rather than
/// errors.
pub fn truncated_gns(moments: &MomentVector, game: &GameSpec) -> Result<GnsResult> {
    let alphabet = moments.alphabet();
    if alphabet != game.alphabet() {
        return Err(Error::AlphabetMismatch(
            alphabet.x_count,
            alphabet.y_count,
            game.x_count(),
            game.y_count(),
        ));
    }
    let degree = moments.degree();
    if degree < 2 {
        return Err(Error::InvalidInput(
            "reconstruction needs moments of degree at least 2".into(),
        ));
    }
    let unit = moments
        .get(&GroupWord::identity())
        .ok_or_else(|| Error::InvalidInput("moment vector lacks the unit moment".into()))?;
    if (unit - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::MomentIdentity(unit));
    }

    let basis = words_up_to(alphabet, degree);
    let m = basis.len();
    let index: BTreeMap<&GroupWord, usize> = basis.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let short = basis.iter().filter(|w| w.len() < degree).count();

    let mut moment_matrix = DMatrix::zeros(m, m);
    for (i, u) in basis.iter().enumerate() {
        let u_star = u.star();
        for (j, v) in basis.iter().enumerate() {
            let w = u_star.mul(v);
            let value = moments.get(&w).ok_or_else(|| {
                Error::InvalidInput(format!("moment vector lacks the word {w}"))
            })?;
            moment_matrix[(i, j)] = value;
        }
    }

    let eigen = moment_matrix.clone().symmetric_eigen();
    let top = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = RANK_CUTOFF * top.max(1.0);
    let kept: Vec<usize> = (0..m)
        .filter(|&i| eigen.eigenvalues[i] > cutoff)
        .collect();
    let rank = kept.len();
    if rank == 0 {
        return Err(Error::MomentIdentity(unit));
    }
    let mut factor = DMatrix::zeros(rank, m);
    for (row, &i) in kept.iter().enumerate() {
        let scale = eigen.eigenvalues[i].sqrt();
        for col in 0..m {
            factor[(row, col)] = scale * eigen.eigenvectors[(col, i)];
        }
    }
    let factor_residual = (factor.transpose() * &factor - &moment_matrix)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));

    let flat = symmetric_rank(&moment_matrix.view((0, 0), (short, short)).into_owned()) == rank;

    let short_block = factor.columns(0, short).into_owned();
    let svd = short_block.clone().svd(true, true);
    let sigma_top = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let pinv = svd
        .pseudo_inverse(RANK_CUTOFF * sigma_top.max(1.0))
        .map_err(|e| Error::ExtractionFailure(format!("factor pseudo-inverse: {e}")))?;

    let represent = |letter: &GroupWord| -> DMatrix<f64> {
        let mut targets = DMatrix::zeros(rank, short);
        for (col, w) in basis.iter().take(short).enumerate() {
            let shifted = letter.mul(w);
            let j = index[&shifted];
            targets.set_column(col, &factor.column(j));
        }
        targets * &pinv
    };

    let alice: Vec<DMatrix<f64>> = (0..alphabet.x_count)
        .map(|x| represent(&GroupWord::generator_a(x)))
        .collect();
    let bob: Vec<DMatrix<f64>> = (0..alphabet.y_count)
        .map(|y| represent(&GroupWord::generator_b(y)))
        .collect();

    let max_abs = |m: &DMatrix<f64>| m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let identity = DMatrix::<f64>::identity(rank, rank);
    let mut self_adjoint_residual = 0.0f64;
    let mut involution_residual = 0.0f64;
    let mut commutation_residual = 0.0f64;
    for t in alice.iter().chain(bob.iter()) {
        self_adjoint_residual = self_adjoint_residual.max(max_abs(&(t - t.transpose())));
        involution_residual = involution_residual.max(max_abs(&(t * t - &identity)));
    }
    for a in &alice {
        for b in &bob {
            commutation_residual = commutation_residual.max(max_abs(&(a * b - b * a)));
        }
    }

    let complexify = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
    let half = Complex64::new(0.5, 0.0);
    let e0: Vec<DMatrix<Complex64>> = alice
        .iter()
        .map(|t| (complexify(t) + complexify(&identity)) * half)
        .collect();
    let f0: Vec<DMatrix<Complex64>> = bob
        .iter()
        .map(|t| (complexify(t) + complexify(&identity)) * half)
        .collect();
    let psi = DVector::from_iterator(
        rank,
        factor.column(0).iter().map(|&v| Complex64::new(v, 0.0)),
    );
    let strategy = FiniteStrategy::new(alphabet, e0, f0, psi)?;

    let mut invalid_mass = 0.0f64;
    for (x, y, a, b) in game.forbidden() {
        invalid_mass = invalid_mass.max(strategy.correlation(x, y, a, b).norm());
    }

    Ok(GnsResult {
        strategy,
        rank,
        flat,
        report: GnsReport {
            factor_residual,
            self_adjoint_residual,
            involution_residual,
            commutation_residual,
            invalid_mass,
        },
    })
}
