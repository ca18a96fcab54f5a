//! Dense linear-algebra helpers shared by the mixing, norm, and analysis modules.
//!
//! Everything here targets desk-scale matrices (n up to a few hundred), so we
//! prefer exact dense factorizations over iterative schemes wherever feasible.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Iteration budget handed to the dense eigen/Schur/SVD routines.
pub(crate) const EIG_MAX_ITER: usize = 100_000;

/// Spectral radius of a general square matrix via real Schur form.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NonConvergence("Schur decomposition"))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Eigen-decomposition of a symmetric matrix; the input is symmetrized first
/// to shed rounding asymmetry.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NonConvergence("symmetric eigen-decomposition"))
}

/// Largest singular value (the induced 2-norm).
pub fn two_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NonConvergence("singular value decomposition"))?;
    Ok(svd.singular_values.max())
}

/// Solves the discrete Lyapunov equation `SᵀPS − P = −Q` for symmetric
/// positive-definite `Q`, assuming `ρ(S) < 1`.
///
/// Direct Kronecker vectorization up to `n = 64`; Smith doubling (partial sums
/// of `Σ (Sᵀ)ᵏ Q Sᵏ` with squared propagators) above that.
pub(crate) fn solve_discrete_lyapunov(s: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    if s.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.nrows(),
        });
    }
    let p = if n <= 64 {
        let kron = s.transpose().kronecker(&s.transpose());
        let system = kron - DMatrix::<f64>::identity(n * n, n * n);
        let rhs = DVector::from_column_slice(q.as_slice()) * -1.0;
        let sol = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalFailure("Lyapunov Kronecker system is singular".into()))?;
        DMatrix::from_column_slice(n, n, sol.as_slice())
    } else {
        let mut p = q.clone();
        let mut t = s.clone();
        for _ in 0..200 {
            p = &p + t.transpose() * &p * &t;
            t = &t * &t;
            if t.norm() < 1e-18 {
                break;
            }
        }
        p
    };
    // symmetry is exact in the fixed point; restore it after rounding
    Ok((&p + p.transpose()) * 0.5)
}

/// Largest generalized eigenvalue and eigenvector of the SPD pencil
/// `A x = λ B x`, given `B = L Lᵀ` through its Cholesky factor.
///
/// Reduces to the ordinary symmetric problem `L⁻¹ A L⁻ᵀ y = λ y`, then maps
/// the eigenvector back through `x = L⁻ᵀ y`.
pub(crate) fn generalized_eig_max(
    a: &DMatrix<f64>,
    chol_l: &DMatrix<f64>,
) -> Result<(f64, DVector<f64>)> {
    let inner = chol_l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let reduced = chol_l
        .solve_lower_triangular(&inner.transpose())
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let eig = symmetric_eigen(&reduced)?;
    let (mut max_idx, mut max_val) = (0, f64::NEG_INFINITY);
    for (i, &val) in eig.eigenvalues.iter().enumerate() {
        if val > max_val {
            max_val = val;
            max_idx = i;
        }
    }
    let y = eig.eigenvectors.column(max_idx).into_owned();
    let x = chol_l
        .tr_solve_lower_triangular(&y)
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    Ok((max_val, x))
}

/// Null vector of `M` (unit 2-norm) via SVD, with a simplicity check: errors
/// with `EigenvectorNotUnique` when the nullspace dimension exceeds one.
pub(crate) fn simple_null_vector(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    let svd = SVD::try_new(m.clone(), false, true, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NonConvergence("singular value decomposition"))?;
    let sv = &svd.singular_values;
    if sv[n - 1] > 1e-9 {
        return Err(Error::NumericalFailure(format!(
            "no null vector: smallest singular value {:.3e}",
            sv[n - 1]
        )));
    }
    if n >= 2 && sv[n - 2] < 1e-12 {
        return Err(Error::EigenvectorNotUnique);
    }
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::NumericalFailure("SVD did not return V".into()))?;
    Ok(v_t.row(n - 1).transpose())
}
