//! Exact rational linear algebra for certificate verification.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via continued-fraction convergents and the closing semiconvergent.
/// Ties prefer the smaller denominator, so the result is deterministic.
pub fn round_to_rational(x: f64, max_den: u64) -> BigRational {
    assert!(x.is_finite(), "cannot round {x}");
    assert!(max_den >= 1);
    let exact = BigRational::from_float(x).expect("finite float");
    if exact.denom() <= &BigInt::from(max_den) {
        return exact;
    }
    let neg = x < 0.0;
    let target = exact.abs();
    let bound = BigInt::from(max_den);

    let mut candidates: Vec<BigRational> = Vec::new();
    let (mut pm1, mut qm1) = (BigInt::one(), BigInt::zero());
    let mut t = x.abs();
    let a0 = t.floor();
    let (mut p, mut q) = (BigInt::from(a0 as u64), BigInt::one());
    candidates.push(BigRational::new(p.clone(), q.clone()));
    let mut frac = t - a0;
    for _ in 0..64 {
        if frac.abs() < 1e-18 {
            break;
        }
        t = 1.0 / frac;
        let a = t.floor();
        if !a.is_finite() || a >= 1e18 {
            break;
        }
        let a_big = BigInt::from(a as u64);
        let p_next = &a_big * &p + &pm1;
        let q_next = &a_big * &q + &qm1;
        if q_next > bound {
            // The last useful semiconvergent under the bound.
            let k = (&bound - &qm1) / &q;
            if k > BigInt::zero() {
                candidates.push(BigRational::new(&k * &p + &pm1, &k * &q + &qm1));
            }
            break;
        }
        candidates.push(BigRational::new(p_next.clone(), q_next.clone()));
        pm1 = p;
        qm1 = q;
        p = p_next;
        q = q_next;
        frac = t - a;
    }

    let mut best: Option<(BigRational, BigRational)> = None;
    for cand in candidates {
        let err = (&cand - &target).abs();
        let better = match &best {
            None => true,
            Some((_, best_err)) => {
                err < *best_err
                    || (err == *best_err
                        && cand.denom() < best.as_ref().unwrap().0.denom())
            }
        };
        if better {
            best = Some((cand, err));
        }
    }
    let out = best.expect("at least one convergent").0;
    if neg {
        -out
    } else {
        out
    }
}

/// Outcome of the exact semidefiniteness check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PsdOutcome {
    /// Positive semidefinite, with the rank (number of positive pivots).
    Psd { rank: usize },
    /// A principal direction of strictly negative curvature exists.
    NotPsd { pivot: usize },
}

impl PsdOutcome {
    pub fn is_psd(&self) -> bool {
        matches!(self, PsdOutcome::Psd { .. })
    }
}

/// Exact LDL^T-style check that a symmetric rational matrix is positive
/// semidefinite, using diagonal pivoting. A zero diagonal entry whose row
/// is not entirely zero refutes semidefiniteness.
pub fn check_psd(matrix: &[Vec<BigRational>]) -> PsdOutcome {
    let n = matrix.len();
    for (i, row) in matrix.iter().enumerate() {
        assert_eq!(row.len(), n, "matrix must be square");
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, matrix[j][i], "matrix must be symmetric");
        }
    }
    let mut a = matrix.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while !active.is_empty() {
        let pivot = active
            .iter()
            .copied()
            .max_by(|&i, &j| a[i][i].cmp(&a[j][j]))
            .unwrap();
        let d = a[pivot][pivot].clone();
        if d.is_negative() {
            return PsdOutcome::NotPsd { pivot };
        }
        if d.is_zero() {
            // All remaining diagonal entries are <= 0, hence 0 or negative;
            // negative ones were caught above, so they are all zero. The
            // block is PSD iff it is identically zero.
            for &i in &active {
                if a[i][i].is_negative() {
                    return PsdOutcome::NotPsd { pivot: i };
                }
                for &j in &active {
                    if !a[i][j].is_zero() {
                        return PsdOutcome::NotPsd { pivot: i.min(j) };
                    }
                }
            }
            return PsdOutcome::Psd { rank };
        }
        active.retain(|&i| i != pivot);
        for &i in &active {
            if a[i][pivot].is_zero() {
                continue;
            }
            let factor = &a[i][pivot] / &d;
            for &j in &active {
                let delta = &factor * &a[pivot][j];
                a[i][j] -= delta;
            }
        }
        rank += 1;
    }
    PsdOutcome::Psd { rank }
}

/// Solves A x = b exactly by Gaussian elimination. Returns any solution
/// (free variables set to zero), or `None` when the system is
/// inconsistent. A has one row per equation.
#[allow(clippy::needless_range_loop)]
pub fn solve_linear(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let rows = a.len();
    assert_eq!(b.len(), rows);
    let cols = a.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            assert_eq!(row.len(), cols);
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();

    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut next_row = 0;
    for col in 0..cols {
        let Some(pr) = (next_row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(next_row, pr);
        let inv = m[next_row][col].clone();
        for j in col..=cols {
            m[next_row][j] = &m[next_row][j] / &inv;
        }
        for r in 0..rows {
            if r != next_row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in col..=cols {
                    let delta = &factor * &m[next_row][j];
                    m[r][j] -= delta;
                }
            }
        }
        pivot_of_col[col] = next_row;
        next_row += 1;
        if next_row == rows {
            break;
        }
    }
    for row in &m[next_row..rows] {
        if !row[cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigRational::zero(); cols];
    for col in 0..cols {
        if pivot_of_col[col] != usize::MAX {
            x[col] = m[pivot_of_col[col]][cols].clone();
        }
    }
    Some(x)
}
