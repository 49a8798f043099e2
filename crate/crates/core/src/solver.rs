//! Feasibility solver for truncated moment problems.
//!
//! Both sides of the problem are attacked at once by alternating
//! projections. The primal side looks for class values y with the moment
//! matrix positive semidefinite, f(1) = 1, and the ideal rows zeroed; its
//! iteration alternates between the affine set (a weighted least-squares
//! projection, well-defined even when the affine set is empty) and the
//! cone (an eigenvalue clip). The dual side looks for a ray (Z, mu) with
//! Z >= 0 and classsum(Z) + Q mu = -indicator(identity); any such ray
//! expands into a sum-of-squares refutation of the primal, so it certifies
//! that no winning strategy exists in any dimension.
//!
//! To help downstream exact rounding, the dual cone is first fattened:
//! early phases demand Z >= sigma I for a ladder of shrinking sigma, and
//! the largest sigma that converges wins. Everything is deterministic; the
//! seed is only echoed into the result.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::moment::{MomentProblem, MomentVector, SparseRow};

/// Shrinking interior margins tried by the dual side, ending at the bare
/// cone.
pub const FATTEN_LADDER: [f64; 4] = [1e-2, 1e-3, 1e-4, 0.0];

/// Knobs for [`solve`].
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Residual level at which a side counts as converged.
    pub eps: f64,
    /// Total iteration budget, shared between the two sides.
    pub max_iterations: usize,
    /// Echoed into the result for reporting.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eps: 1e-9,
            max_iterations: 20_000,
            seed: 0,
        }
    }
}

/// Outcome of a moment-problem solve.
#[derive(Clone, Debug)]
pub enum SolveStatus {
    /// A moment vector satisfying all constraints to within eps.
    Feasible(MomentVector),
    /// A numerically converged refutation ray. Sound rejection of the game
    /// still requires certificate verification downstream.
    Infeasible(DualRay),
    /// Budget exhausted with neither side converged.
    Undetermined,
}

/// A converged dual iterate.
#[derive(Clone, Debug)]
pub struct DualRay {
    /// Positive semidefinite matrix over the degree-d word basis.
    pub z: DMatrix<f64>,
    /// Ideal-row multipliers, aligned with the problem's generators.
    pub mu: Vec<f64>,
    /// Smallest eigenvalue of `z` before the final clip.
    pub min_eigenvalue: f64,
    /// Largest violation of the dual affine constraint after the clip.
    pub affine_residual: f64,
    /// Interior margin achieved: `z` is at least `shift` times identity.
    pub shift: f64,
}

/// Residual pair for one side of the solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SideDiagnostics {
    pub affine_residual: f64,
    pub psd_violation: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal: SideDiagnostics,
    pub dual: SideDiagnostics,
    pub seed: u64,
}

/// Runs both sides until one converges or the budget runs out.
pub fn solve(problem: &MomentProblem, options: &SolveOptions) -> SolveResult {
    let mut primal = PrimalState::new(problem);
    let mut dual = DualState::new(problem, problem.rows(), unit_refutation_target(problem));
    let phase_len = (options.max_iterations / FATTEN_LADDER.len()).max(1);

    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        if let Some(vector) = primal.step(problem, options.eps) {
            return SolveResult {
                status: SolveStatus::Feasible(vector),
                iterations,
                primal: primal.diagnostics,
                dual: dual.diagnostics,
                seed: options.seed,
            };
        }
        let shift = FATTEN_LADDER[((iterations - 1) / phase_len).min(FATTEN_LADDER.len() - 1)];
        if let Some(ray) = dual.step(problem, shift, options.eps) {
            return SolveResult {
                status: SolveStatus::Infeasible(ray),
                iterations,
                primal: primal.diagnostics,
                dual: dual.diagnostics,
                seed: options.seed,
            };
        }
    }
    SolveResult {
        status: SolveStatus::Undetermined,
        iterations,
        primal: primal.diagnostics,
        dual: dual.diagnostics,
        seed: options.seed,
    }
}

/// Searches for Z >= shift with class sums matching `target`, using the
/// dual iteration alone. Used for sum-of-squares decompositions of
/// self-adjoint elements; no ideal rows take part.
pub fn sos_decompose(
    problem: &MomentProblem,
    target: &[f64],
    options: &SolveOptions,
) -> Option<DMatrix<f64>> {
    static NO_ROWS: &[SparseRow] = &[];
    let mut dual = DualState::new(problem, NO_ROWS, target.to_vec());
    let phase_len = (options.max_iterations / FATTEN_LADDER.len()).max(1);
    for iteration in 0..options.max_iterations {
        let shift = FATTEN_LADDER[(iteration / phase_len).min(FATTEN_LADDER.len() - 1)];
        if let Some(ray) = dual.step(problem, shift, options.eps) {
            return Some(ray.z);
        }
    }
    None
}

/// The right-hand side forcing the dual expansion to equal -1.
fn unit_refutation_target(problem: &MomentProblem) -> Vec<f64> {
    let mut target = vec![0.0; problem.class_count()];
    target[problem.identity_class()] = -1.0;
    target
}

struct PrimalState {
    /// Current symmetric iterate over the word basis.
    matrix: DMatrix<f64>,
    /// Constraint rows: the unit row followed by the ideal rows.
    rows: Vec<SparseRow>,
    targets: Vec<f64>,
    /// Eigendecomposition of C W^-1 C^T for the weighted projection.
    normal_vectors: DMatrix<f64>,
    normal_inv_eigs: DVector<f64>,
    diagnostics: SideDiagnostics,
}

impl PrimalState {
    fn new(problem: &MomentProblem) -> Self {
        let mut rows: Vec<SparseRow> = vec![vec![(problem.identity_class(), 1.0)]];
        rows.extend(problem.rows().iter().cloned());
        let mut targets = vec![0.0; rows.len()];
        targets[0] = 1.0;

        let r = rows.len();
        let mut normal = DMatrix::zeros(r, r);
        for (i, ri) in rows.iter().enumerate() {
            for (j, rj) in rows.iter().enumerate().skip(i) {
                let mut acc = 0.0;
                let mut pi = ri.iter().peekable();
                let mut pj = rj.iter().peekable();
                while let (Some(&&(ci, vi)), Some(&&(cj, vj))) = (pi.peek(), pj.peek()) {
                    match ci.cmp(&cj) {
                        std::cmp::Ordering::Less => {
                            pi.next();
                        }
                        std::cmp::Ordering::Greater => {
                            pj.next();
                        }
                        std::cmp::Ordering::Equal => {
                            acc += vi * vj / problem.class_size(ci) as f64;
                            pi.next();
                            pj.next();
                        }
                    }
                }
                normal[(i, j)] = acc;
                normal[(j, i)] = acc;
            }
        }
        let eig = normal.symmetric_eigen();
        let max_eig = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = max_eig * 1e-12;
        let inv = eig
            .eigenvalues
            .map(|l| if l > cutoff { 1.0 / l } else { 0.0 });

        PrimalState {
            matrix: DMatrix::identity(problem.side(), problem.side()),
            rows,
            targets,
            normal_vectors: eig.eigenvectors,
            normal_inv_eigs: inv,
            diagnostics: SideDiagnostics::default(),
        }
    }

    /// One affine-then-cone sweep; returns a moment vector on convergence.
    fn step(&mut self, problem: &MomentProblem, eps: f64) -> Option<MomentVector> {
        // Project the matrix onto class-consistent form.
        let mut y = vec![0.0; problem.class_count()];
        let m = problem.side();
        for i in 0..m {
            for j in 0..m {
                y[problem.cell_class(i, j)] += self.matrix[(i, j)];
            }
        }
        for (c, v) in y.iter_mut().enumerate() {
            *v /= problem.class_size(c) as f64;
        }

        // Weighted projection onto the affine constraints (least squares
        // when they are inconsistent).
        let residual = DVector::from_fn(self.rows.len(), |r, _| {
            row_dot(&self.rows[r], &y) - self.targets[r]
        });
        let rotated = self.normal_vectors.transpose() * &residual;
        let scaled = rotated.component_mul(&self.normal_inv_eigs);
        let nu = &self.normal_vectors * scaled;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, coeff) in row {
                y[c] -= coeff * nu[r] / problem.class_size(c) as f64;
            }
        }

        let affine_residual = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(row, t)| (row_dot(row, &y) - t).abs())
            .fold(0.0f64, f64::max);

        let candidate = problem.matrix_from(&y);
        let eig = candidate.symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        self.diagnostics = SideDiagnostics {
            affine_residual,
            psd_violation: (-min_eig).max(0.0),
        };
        if affine_residual <= eps && min_eig >= -eps {
            return Some(problem.vector_from(&y));
        }

        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        self.matrix = &eig.eigenvectors
            * DMatrix::from_diagonal(&clipped)
            * eig.eigenvectors.transpose();
        None
    }
}

struct DualState<'a> {
    z: DMatrix<f64>,
    mu: Vec<f64>,
    rows: &'a [SparseRow],
    target: Vec<f64>,
    /// Cholesky factor of diag(class sizes) + Q Q^T.
    normal: Cholesky<f64, Dyn>,
    diagnostics: SideDiagnostics,
}

impl<'a> DualState<'a> {
    fn new(problem: &MomentProblem, rows: &'a [SparseRow], target: Vec<f64>) -> Self {
        let k = problem.class_count();
        let mut normal = DMatrix::zeros(k, k);
        for c in 0..k {
            normal[(c, c)] = problem.class_size(c) as f64;
        }
        for row in rows {
            for &(ci, vi) in row {
                for &(cj, vj) in row {
                    normal[(ci, cj)] += vi * vj;
                }
            }
        }
        let chol = Cholesky::new(normal).expect("diag(sizes) + QQ^T is positive definite");
        DualState {
            z: DMatrix::zeros(problem.side(), problem.side()),
            mu: vec![0.0; rows.len()],
            rows,
            target,
            normal: chol,
            diagnostics: SideDiagnostics::default(),
        }
    }

    /// One affine-then-cone sweep at interior margin `shift`; returns the
    /// clipped ray on convergence.
    fn step(&mut self, problem: &MomentProblem, shift: f64, eps: f64) -> Option<DualRay> {
        let m = problem.side();

        // Project (z, mu) onto the affine set classsum(z) + Q mu = target.
        let mut g = DVector::from_vec(problem.class_sums(&self.z));
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, coeff) in row {
                g[c] += coeff * self.mu[r];
            }
        }
        for c in 0..g.len() {
            g[c] -= self.target[c];
        }
        let nu = self.normal.solve(&g);
        for i in 0..m {
            for j in 0..m {
                self.z[(i, j)] -= nu[problem.cell_class(i, j)];
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            self.mu[r] -= row.iter().map(|&(c, coeff)| coeff * nu[c]).sum::<f64>();
        }

        let eig = self.z.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let converged = min_eig >= shift - eps;

        // Cone step: clip onto {Z >= shift I}.
        let clipped_eigs = eig.eigenvalues.map(|l| l.max(shift));
        let clipped = &eig.eigenvectors
            * DMatrix::from_diagonal(&clipped_eigs)
            * eig.eigenvectors.transpose();

        let affine_residual = {
            let mut s = DVector::from_vec(problem.class_sums(&clipped));
            for (r, row) in self.rows.iter().enumerate() {
                for &(c, coeff) in row {
                    s[c] += coeff * self.mu[r];
                }
            }
            (0..s.len())
                .map(|c| (s[c] - self.target[c]).abs())
                .fold(0.0f64, f64::max)
        };
        self.diagnostics = SideDiagnostics {
            affine_residual,
            psd_violation: (shift - min_eig).max(0.0),
        };

        if converged {
            return Some(DualRay {
                z: symmetrize(&clipped),
                mu: self.mu.clone(),
                min_eigenvalue: min_eig,
                affine_residual,
                shift: shift.min(min_eig.max(0.0)),
            });
        }
        self.z = clipped;
        None
    }
}

fn row_dot(row: &SparseRow, y: &[f64]) -> f64 {
    row.iter().map(|&(c, coeff)| coeff * y[c]).sum()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()).scale(0.5)
}
