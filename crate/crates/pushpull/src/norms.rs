//! Weighted ellipsoidal norms realizing the contraction norms for the
//! consensus and tracking residual matrices, plus the equivalence constants
//! that couple them.
//!
//! For a residual matrix `B` with `ρ(B) < γ < 1`, the discrete Lyapunov
//! equation `(B/γ)ᵀ P (B/γ) − P = −I` has a unique SPD solution
//! `P = I + (B/γ)ᵀP(B/γ) ⪰ I`, and under `‖x‖_P = √(xᵀPx)` the induced norm
//! of `B` is exactly `σ = γ·√(1 − 1/λ_max(P)) < γ`. Since `P ⪰ I`, the plain
//! 2-norm never exceeds the weighted norm, which the coupled convergence
//! analysis relies on.
//!
//! Norms lift from vectors to `n×p` blocks column-wise: apply the vector
//! norm to each column and take the 2-norm of the `p` results.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mixing::MixingPair;

/// Default placement of the contraction target inside `(ρ, 1)`.
pub const DEFAULT_GAMMA_FRACTION: f64 = 0.25;

const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-9;

/// An ellipsoidal vector norm `‖x‖ = √(xᵀPx)` with `P ⪰ I`, carrying the
/// certified induced norm `sigma` of the residual matrix it was built for.
#[derive(Debug, Clone)]
pub struct WeightedNorm {
    weight: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    sigma: f64,
    gamma: f64,
}

impl WeightedNorm {
    /// The trivial weighting `P = I` (plain 2-norm; `sigma = gamma = 0`).
    pub fn euclidean(n: usize) -> Self {
        Self {
            weight: DMatrix::identity(n, n),
            chol_l: DMatrix::identity(n, n),
            sigma: 0.0,
            gamma: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    /// Certified induced norm of the matrix this weighting was built for.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Contraction target used during construction.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `√(wᵀPw)` for a single vector.
    pub fn vector_norm(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.weight * w)).max(0.0).sqrt()
    }

    /// Column-wise lift to an `n×p` block.
    pub fn block_norm(&self, x: &DMatrix<f64>) -> f64 {
        // Σ_j x_jᵀ P x_j = ⟨X, PX⟩
        let px = &self.weight * x;
        x.iter().zip(px.iter()).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// `sup_{x≠0} ‖Wx‖_P / ‖x‖_P`, via the symmetric eigenproblem obtained
    /// from the Cholesky congruence of `P`.
    pub fn induced_matrix_norm(&self, w: &DMatrix<f64>) -> Result<f64> {
        if w.nrows() != self.dim() || w.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: w.nrows(),
            });
        }
        let inner = w.transpose() * &self.weight * w;
        let (lambda, _) = linalg::generalized_eig_max(&inner, &self.chol_l)?;
        Ok(lambda.max(0.0).sqrt())
    }
}

/// Builds the Lyapunov-weighted norm certifying `‖B‖_P = σ < γ`.
///
/// Requires `ρ(B) < γ < 1`; the certified `σ` always satisfies
/// `ρ(B) ≤ σ < γ`, so choosing `γ` close to `ρ(B)` yields a norm whose
/// contraction factor is arbitrarily close to the spectral radius.
pub fn build_contraction_norm(b: &DMatrix<f64>, gamma: f64) -> Result<WeightedNorm> {
    if b.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: b.nrows(),
            got: b.ncols(),
        });
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "contraction target must lie in (0, 1), got {gamma}"
        )));
    }
    let rho = linalg::spectral_radius(b)?;
    if rho >= gamma {
        return Err(Error::SpectralRadiusTooLarge { rho, gamma });
    }
    let n = b.nrows();
    let s = b / gamma;
    let p = linalg::solve_discrete_lyapunov(&s, &DMatrix::identity(n, n))?;
    let residual = (s.transpose() * &p * &s - &p + DMatrix::<f64>::identity(n, n)).amax();
    if residual > LYAPUNOV_RESIDUAL_TOL {
        return Err(Error::NumericalFailure(format!(
            "Lyapunov residual {residual:.3e} above tolerance"
        )));
    }
    let eig = linalg::symmetric_eigen(&p)?;
    let lambda_max = eig.eigenvalues.max();
    let lambda_min = eig.eigenvalues.min();
    if lambda_min < 1.0 - 1e-10 {
        return Err(Error::NumericalFailure(format!(
            "Lyapunov weight lost the P ⪰ I structure: lambda_min = {lambda_min}"
        )));
    }
    let sigma = gamma * (1.0 - 1.0 / lambda_max).max(0.0).sqrt();
    let chol_l = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("Lyapunov weight is not positive definite".into()))?
        .l();
    Ok(WeightedNorm {
        weight: p,
        chol_l,
        sigma,
        gamma,
    })
}

/// Plain 2-norm lifted column-wise; coincides with the Frobenius norm.
pub fn euclidean_block_norm(x: &DMatrix<f64>) -> f64 {
    x.norm()
}

/// Tight norm-equivalence constants between the two weighted norms and the
/// 2-norm, named by the inequality they certify.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DeltaConstants {
    /// `‖x‖_C ≤ δ_cr ‖x‖_R`
    pub cr: f64,
    /// `‖x‖_C ≤ δ_c2 ‖x‖₂`
    pub c2: f64,
    /// `‖x‖_R ≤ δ_rc ‖x‖_C`
    pub rc: f64,
    /// `‖x‖_R ≤ δ_r2 ‖x‖₂`
    pub r2: f64,
}

/// `sup_{x≠0} ‖x‖_num / ‖x‖_den` with the maximizing direction. The supremum
/// is the largest generalized eigenvalue of the SPD pencil
/// `P_num x = λ P_den x`.
pub fn extremal_ratio(num: &WeightedNorm, den: &WeightedNorm) -> Result<(f64, DVector<f64>)> {
    if num.dim() != den.dim() {
        return Err(Error::DimensionMismatch {
            expected: den.dim(),
            got: num.dim(),
        });
    }
    let (lambda, x) = linalg::generalized_eig_max(&num.weight, &den.chol_l)?;
    Ok((lambda.max(0.0).sqrt(), x))
}

/// Computes all four tight equivalence constants for a norm pair.
pub fn equivalence_constants(
    norm_r: &WeightedNorm,
    norm_c: &WeightedNorm,
) -> Result<DeltaConstants> {
    let euclid = WeightedNorm::euclidean(norm_r.dim());
    Ok(DeltaConstants {
        cr: extremal_ratio(norm_c, norm_r)?.0,
        c2: extremal_ratio(norm_c, &euclid)?.0,
        rc: extremal_ratio(norm_r, norm_c)?.0,
        r2: extremal_ratio(norm_r, &euclid)?.0,
    })
}

/// The pair of contraction norms for a validated mixing pair, with their
/// equivalence constants.
#[derive(Debug, Clone)]
pub struct NormSystem {
    norm_r: WeightedNorm,
    norm_c: WeightedNorm,
    delta: DeltaConstants,
}

impl NormSystem {
    /// Builds both norms with `γ = ρ + fraction·(1 − ρ)` on each side.
    pub fn build(pair: &MixingPair, gamma_fraction: f64) -> Result<Self> {
        if !(gamma_fraction > 0.0 && gamma_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma fraction must lie in (0, 1), got {gamma_fraction}"
            )));
        }
        let gamma_r = pair.rho_r() + gamma_fraction * (1.0 - pair.rho_r());
        let gamma_c = pair.rho_c() + gamma_fraction * (1.0 - pair.rho_c());
        let norm_r = build_contraction_norm(&pair.residual_r(), gamma_r)?;
        let norm_c = build_contraction_norm(&pair.residual_c(), gamma_c)?;
        let delta = equivalence_constants(&norm_r, &norm_c)?;
        Ok(Self { norm_r, norm_c, delta })
    }

    pub fn norm_r(&self) -> &WeightedNorm {
        &self.norm_r
    }

    pub fn norm_c(&self) -> &WeightedNorm {
        &self.norm_c
    }

    pub fn delta(&self) -> DeltaConstants {
        self.delta
    }

    pub fn sigma_r(&self) -> f64 {
        self.norm_r.sigma()
    }

    pub fn sigma_c(&self) -> f64 {
        self.norm_c.sigma()
    }
}
