//! Continuous-time Lyapunov and algebraic Riccati solvers used for LQI gain
//! synthesis.
//!
//! Method: the Riccati equation `AᵀP + PA - P B R⁻¹ Bᵀ P + Q = 0` is solved
//! by Newton iteration on the gain (Kleinman's method). Each iterate solves
//! one Lyapunov equation for the current closed-loop matrix; the iteration
//! converges quadratically from any stabilizing initial gain. The initial
//! gain comes from the Bass shifted-Lyapunov construction when `A` itself is
//! not already Hurwitz. Lyapunov equations are solved directly through the
//! Kronecker-product linear system — the state dimensions here are single
//! digits, so the dense n²xn² solve is exact, simple, and fast.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RiccatiError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("weight matrix invalid: {0}")]
    InvalidWeight(String),
    #[error("Lyapunov operator is singular (eigenvalue pair summing to zero)")]
    SingularLyapunov,
    #[error("system is not stabilizable: {0}")]
    NotStabilizable(String),
    #[error("Riccati iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Relative residual tolerance for an accepted Riccati solution.
pub const CARE_TOL: f64 = 1e-9;
/// Newton iteration budget.
pub const CARE_MAX_ITER: usize = 100;

/// Solution of the continuous algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct CareSolution {
    /// Symmetric positive-semidefinite cost matrix.
    pub p: DMatrix<f64>,
    /// Optimal state-feedback gain `K = R⁻¹ Bᵀ P`; `A - B K` is Hurwitz.
    pub k: DMatrix<f64>,
    /// Frobenius norm of the Riccati residual at `p`.
    pub residual: f64,
    /// Newton steps taken.
    pub iterations: usize,
}

/// Solves the continuous Lyapunov equation `Aᵀ X + X A + Q = 0`.
///
/// A unique solution exists iff no two eigenvalues of `A` sum to zero (in
/// particular whenever `A` is Hurwitz, or whenever `-A` is). The equation is
/// vectorized column-major into `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec X = -vec Q` and
/// solved by LU factorization.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, RiccatiError> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(RiccatiError::Dimension(format!(
            "Lyapunov operands must be square and matched: A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let mut m = DMatrix::<f64>::zeros(n * n, n * n);
    for bi in 0..n {
        for bj in 0..n {
            for ii in 0..n {
                for ij in 0..n {
                    let mut v = 0.0;
                    if bi == bj {
                        v += a[(ij, ii)]; // (I ⊗ Aᵀ) block diagonal
                    }
                    if ii == ij {
                        v += a[(bj, bi)]; // (Aᵀ ⊗ I) scaled identity blocks
                    }
                    m[(bi * n + ii, bj * n + ij)] = v;
                }
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, q.iter().map(|&x| -x));
    let x = m.lu().solve(&rhs).ok_or(RiccatiError::SingularLyapunov)?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    // symmetrize: the exact solution is symmetric for symmetric Q
    Ok((&x + x.transpose()) * 0.5)
}

fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .all(|l| l.re < 0.0)
}

/// Bass construction of a stabilizing gain: shift `A` fully into the right
/// half plane, solve the shifted Lyapunov equation
/// `(A + sI) W + W (A + sI)ᵀ = 2 B Bᵀ`, and take `K = Bᵀ W⁻¹`. `W` is
/// invertible iff the pair is controllable.
fn stabilizing_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, RiccatiError> {
    let n = a.nrows();
    let m = b.ncols();
    if is_hurwitz(a) {
        return Ok(DMatrix::zeros(m, n));
    }
    let sigma = a.norm() + 0.5;
    let shifted = a + DMatrix::identity(n, n) * sigma;
    // M W + W Mᵀ = 2BBᵀ  rewritten as  (Mᵀ)ᵀ W + W Mᵀ + (-2BBᵀ) = 0
    let w = solve_lyapunov(&shifted.transpose(), &(b * b.transpose() * -2.0))?;
    let w_inv = w.clone().try_inverse().ok_or_else(|| {
        RiccatiError::NotStabilizable("pair (A, B) is not controllable".into())
    })?;
    let k = b.transpose() * w_inv;
    if !is_hurwitz(&(a - b * &k)) {
        return Err(RiccatiError::NotStabilizable(
            "no stabilizing initial gain found".into(),
        ));
    }
    Ok(k)
}

fn riccati_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).norm()
}

/// Solves `Aᵀ P + P A - P B R⁻¹ Bᵀ P + Q = 0` and returns `P`, the gain
/// `K = R⁻¹ Bᵀ P`, and the achieved residual.
///
/// `Q` must be symmetric positive semidefinite and `R` symmetric positive
/// definite. Errors if the pair is not stabilizable or the iteration budget
/// ([`CARE_MAX_ITER`]) is exhausted before the residual falls below
/// [`CARE_TOL`]`· (1 + ‖P‖)`.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<CareSolution, RiccatiError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.nrows() != n || q.ncols() != n {
        return Err(RiccatiError::Dimension(format!(
            "A {}x{}, B {}x{}, Q {}x{} are inconsistent",
            a.nrows(), a.ncols(), b.nrows(), b.ncols(), q.nrows(), q.ncols()
        )));
    }
    if r.nrows() != m || r.ncols() != m {
        return Err(RiccatiError::Dimension(format!(
            "R must be {}x{}, got {}x{}",
            m, m, r.nrows(), r.ncols()
        )));
    }
    let q = (q + q.transpose()) * 0.5;
    let min_q_eig = q.clone().symmetric_eigenvalues().min();
    if min_q_eig < -1e-9 * (1.0 + q.norm()) {
        return Err(RiccatiError::InvalidWeight(format!(
            "Q must be positive semidefinite (min eigenvalue {min_q_eig:.3e})"
        )));
    }
    let r_sym = (r + r.transpose()) * 0.5;
    let chol = r_sym
        .clone()
        .cholesky()
        .ok_or_else(|| RiccatiError::InvalidWeight("R must be positive definite".into()))?;
    let r_inv = chol.inverse();

    let mut k = stabilizing_gain(a, b)?;
    let mut residual = f64::INFINITY;
    for iteration in 1..=CARE_MAX_ITER {
        let a_cl = a - b * &k;
        let q_newton = &q + k.transpose() * &r_sym * &k;
        let p = solve_lyapunov(&a_cl, &q_newton)?;
        k = &r_inv * b.transpose() * &p;
        residual = riccati_residual(a, b, &q, &r_inv, &p);
        if residual < CARE_TOL * (1.0 + p.norm()) {
            if !is_hurwitz(&(a - b * &k)) {
                return Err(RiccatiError::NotStabilizable(
                    "converged cost matrix does not stabilize the plant".into(),
                ));
            }
            return Ok(CareSolution { p, k, residual, iterations: iteration });
        }
    }
    Err(RiccatiError::NoConvergence { iterations: CARE_MAX_ITER, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lyapunov_solution_satisfies_equation() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let q = DMatrix::identity(2, 2);
        let x = solve_lyapunov(&a, &q).unwrap();
        let res = a.transpose() * &x + &x * &a + &q;
        assert!(res.norm() < 1e-12, "residual {}", res.norm());
        // solution of a Lyapunov equation with Hurwitz A and Q > 0 is PD
        assert!(x.clone().symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn lyapunov_rejects_singular_pairing() {
        // eigenvalues +1 and -1 sum to zero: no unique solution
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let q = DMatrix::identity(2, 2);
        assert!(matches!(
            solve_lyapunov(&a, &q),
            Err(RiccatiError::SingularLyapunov)
        ));
    }

    #[test]
    fn scalar_care_has_unit_solution() {
        let a = DMatrix::from_row_slice(1, 1, &[0.0]);
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let q = DMatrix::from_row_slice(1, 1, &[1.0]);
        let r = DMatrix::from_row_slice(1, 1, &[1.0]);
        let sol = solve_care(&a, &b, &q, &r).unwrap();
        assert_abs_diff_eq!(sol.p[(0, 0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.k[(0, 0)], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn double_integrator_care_matches_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_row_slice(1, 1, &[1.0]);
        let sol = solve_care(&a, &b, &q, &r).unwrap();
        let s3 = 3.0f64.sqrt();
        assert_abs_diff_eq!(sol.k[(0, 0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.k[(0, 1)], s3, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.p[(0, 0)], s3, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.p[(0, 1)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.p[(1, 1)], s3, epsilon = 1e-9);
    }

    #[test]
    fn unstable_uncontrollable_pair_errors() {
        // second state is unstable and unreachable
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(solve_care(&a, &b, &q, &r).is_err());
    }

    #[test]
    fn indefinite_q_is_rejected() {
        let a = DMatrix::from_row_slice(1, 1, &[0.0]);
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        let q = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let r = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(
            solve_care(&a, &b, &q, &r),
            Err(RiccatiError::InvalidWeight(_))
        ));
    }

    #[test]
    fn unstable_but_controllable_system_is_stabilized() {
        // inverted-pendulum-like: pole pair at +/- 2
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 4.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_row_slice(1, 1, &[0.1]);
        let sol = solve_care(&a, &b, &q, &r).unwrap();
        assert!(sol.residual < CARE_TOL * (1.0 + sol.p.norm()));
        let a_cl = &a - &b * &sol.k;
        assert!(a_cl.complex_eigenvalues().iter().all(|l| l.re < 0.0));
    }
}
