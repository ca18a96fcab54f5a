//! Agent objective ensembles with exact gradients, certified strong-convexity
//! and smoothness constants, and a global-optimum oracle.
//!
//! Two families are provided: quadratics (analytically tractable, closed-form
//! optimum) and Huber-typed losses. A plain Huber loss has linear tails and
//! hence no strong convexity, so the Huber agents carry a small quadratic
//! regularizer `reg_mu`, giving exact constants `μ = reg_mu` and
//! `L = 1 + reg_mu` (the scalar Huber kernel has curvature at most 1).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_indices;

const OPTIMUM_GRAD_TOL: f64 = 1e-13;
const NEWTON_BUDGET: usize = 1_000;
const RESAMPLE_BUDGET: usize = 100;

/// `f(x) = ½ xᵀAx − bᵀx` with symmetric positive-semidefinite `A`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticAgent {
    curvature: DMatrix<f64>,
    linear: DVector<f64>,
}

impl QuadraticAgent {
    pub fn new(curvature: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let p = curvature.nrows();
        if curvature.ncols() != p || linear.len() != p {
            return Err(Error::ShapeMismatch {
                expected_rows: p,
                expected_cols: p,
                rows: curvature.nrows(),
                cols: curvature.ncols().max(linear.len()),
            });
        }
        if (&curvature - curvature.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter("quadratic curvature must be symmetric".into()));
        }
        Ok(Self { curvature, linear })
    }

    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.curvature
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.curvature * x)) - self.linear.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.curvature * x - &self.linear
    }
}

/// Coordinate-separable Huber loss around a private center, plus a quadratic
/// regularizer restoring global strong convexity:
/// `f(x) = Σ_d h_δ(x_d − c_d) + (reg_mu/2)‖x − c‖²`.
#[derive(Debug, Clone, Serialize)]
pub struct HuberAgent {
    center: DVector<f64>,
    huber_delta: f64,
    reg_mu: f64,
}

impl HuberAgent {
    pub fn new(center: DVector<f64>, huber_delta: f64, reg_mu: f64) -> Result<Self> {
        if !(huber_delta > 0.0) || !(reg_mu > 0.0) {
            return Err(Error::InvalidParameter(
                "huber_delta and reg_mu must be positive".into(),
            ));
        }
        Ok(Self { center, huber_delta, reg_mu })
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// True iff coordinate `d` of `x` sits in the quadratic zone
    /// (`|x_d − c_d| ≤ δ`; the boundary belongs to the quadratic branch).
    pub fn in_quadratic_zone(&self, x: &DVector<f64>, d: usize) -> bool {
        (x[d] - self.center[d]).abs() <= self.huber_delta
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let d = self.huber_delta;
        let mut total = 0.0;
        for i in 0..x.len() {
            let t = x[i] - self.center[i];
            total += if t.abs() <= d { 0.5 * t * t } else { d * (t.abs() - 0.5 * d) };
            total += 0.5 * self.reg_mu * t * t;
        }
        total
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.huber_delta;
        DVector::from_fn(x.len(), |i, _| {
            let t = x[i] - self.center[i];
            let huber = if t.abs() <= d { t } else { d * t.signum() };
            huber + self.reg_mu * t
        })
    }

    fn hessian_diagonal(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.huber_delta;
        DVector::from_fn(x.len(), |i, _| {
            let t = x[i] - self.center[i];
            (if t.abs() <= d { 1.0 } else { 0.0 }) + self.reg_mu
        })
    }
}

/// One agent objective of a homogeneous ensemble.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Quadratic(QuadraticAgent),
    Huber(HuberAgent),
}

impl Agent {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Agent::Quadratic(a) => a.value(x),
            Agent::Huber(a) => a.value(x),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Agent::Quadratic(a) => a.gradient(x),
            Agent::Huber(a) => a.gradient(x),
        }
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Agent::Quadratic(a) => a.curvature.clone(),
            Agent::Huber(a) => DMatrix::from_diagonal(&a.hessian_diagonal(x)),
        }
    }
}

/// A homogeneous family of `n` agent objectives with certified uniform
/// constants `μ` (strong convexity) and `L` (gradient Lipschitz).
#[derive(Debug, Clone, Serialize)]
pub struct ObjectiveEnsemble {
    agents: Vec<Agent>,
    mu: f64,
    lipschitz: f64,
    dim: usize,
}

impl ObjectiveEnsemble {
    /// Wraps quadratic agents, certifying `μ = min_i λ_min(A_i)` and
    /// `L = max_i λ_max(A_i)` by dense eigensolves.
    pub fn from_quadratics(agents: Vec<QuadraticAgent>) -> Result<Self> {
        let dim = common_dim(agents.iter().map(|a| a.linear.len()))?;
        let mut mu = f64::INFINITY;
        let mut lipschitz: f64 = 0.0;
        for agent in &agents {
            let eig = crate::linalg::symmetric_eigen(&agent.curvature)?;
            mu = mu.min(eig.eigenvalues.min());
            lipschitz = lipschitz.max(eig.eigenvalues.max().abs());
        }
        Ok(Self {
            agents: agents.into_iter().map(Agent::Quadratic).collect(),
            mu,
            lipschitz,
            dim,
        })
    }

    /// Wraps Huber agents sharing one `(δ, reg_mu)`; the constants are exact:
    /// `μ = reg_mu`, `L = 1 + reg_mu`.
    pub fn from_hubers(agents: Vec<HuberAgent>) -> Result<Self> {
        let dim = common_dim(agents.iter().map(|a| a.center.len()))?;
        let delta = agents[0].huber_delta;
        let reg_mu = agents[0].reg_mu;
        if agents.iter().any(|a| a.huber_delta != delta || a.reg_mu != reg_mu) {
            return Err(Error::InvalidParameter(
                "huber ensemble must share one (delta, reg_mu)".into(),
            ));
        }
        Ok(Self {
            agents: agents.into_iter().map(Agent::Huber).collect(),
            mu: reg_mu,
            lipschitz: 1.0 + reg_mu,
            dim,
        })
    }

    /// Random quadratic ensemble: per-agent spectra drawn uniformly from
    /// `[1, 3]` under random orthogonal frames. Deterministic per seed.
    pub fn random_quadratic(n: usize, p: usize, seed: u64) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidParameter("need n >= 1 and p >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agents = Vec::with_capacity(n);
        for _ in 0..n {
            let gauss = DMatrix::from_fn(p, p, |_, _| standard_normal(&mut rng));
            let q = gauss.qr().q();
            let spectrum =
                DVector::from_fn(p, |_, _| 1.0 + 2.0 * rng.random::<f64>());
            let a = &q * DMatrix::from_diagonal(&spectrum) * q.transpose();
            let a = (&a + a.transpose()) * 0.5;
            let b = DVector::from_fn(p, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            agents.push(QuadraticAgent::new(a, b)?);
        }
        Self::from_quadratics(agents)
    }

    /// Random Huber ensemble with the experiment zone layout: the summed
    /// objective's optimizer has every Huber term quadratic, while the origin
    /// sees at least one linear term. Resamples until both conditions verify
    /// (post-hoc, against the Newton optimum oracle).
    pub fn random_huber(n: usize, p: usize, seed: u64, huber_delta: f64, reg_mu: f64) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidParameter("need n >= 1 and p >= 1".into()));
        }
        if !(huber_delta > 0.0) || !(reg_mu > 0.0) {
            return Err(Error::InvalidParameter(
                "huber_delta and reg_mu must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RESAMPLE_BUDGET {
            // common base point at least 2δ from the origin per coordinate,
            // agent centers within δ/2 of it
            let base = DVector::from_fn(p, |_, _| {
                let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                sign * huber_delta * (2.0 + 2.0 * rng.random::<f64>())
            });
            let agents: Vec<HuberAgent> = (0..n)
                .map(|_| {
                    let center = DVector::from_fn(p, |d, _| {
                        base[d] + huber_delta * (rng.random::<f64>() - 0.5)
                    });
                    HuberAgent::new(center, huber_delta, reg_mu)
                })
                .collect::<Result<_>>()?;
            let ensemble = Self::from_hubers(agents)?;
            if ensemble.huber_zone_conditions_hold()? {
                return Ok(ensemble);
            }
        }
        Err(Error::GenerationFailure(RESAMPLE_BUDGET))
    }

    fn huber_zone_conditions_hold(&self) -> Result<bool> {
        let x_star = self.global_optimum()?;
        let origin = DVector::zeros(self.dim);
        let mut origin_sees_linear = false;
        for agent in &self.agents {
            let Agent::Huber(h) = agent else { return Ok(false) };
            for d in 0..self.dim {
                if !h.in_quadratic_zone(&x_star, d) {
                    return Ok(false);
                }
                if !h.in_quadratic_zone(&origin, d) {
                    origin_sees_linear = true;
                }
            }
        }
        Ok(origin_sees_linear)
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn value(&self, agent: usize, x: &DVector<f64>) -> f64 {
        self.agents[agent].value(x)
    }

    pub fn gradient(&self, agent: usize, x: &DVector<f64>) -> DVector<f64> {
        self.agents[agent].gradient(x)
    }

    /// Row `i` of the result is `∇f_i(row_i(X))ᵀ`. Rows evaluate independently
    /// (in parallel under the `parallel` feature).
    pub fn stacked_gradient(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.n() || x.ncols() != self.dim {
            return Err(Error::ShapeMismatch {
                expected_rows: self.n(),
                expected_cols: self.dim,
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        let rows = map_indices(self.n(), |i| {
            self.agents[i].gradient(&x.row(i).transpose())
        });
        let mut out = DMatrix::zeros(self.n(), self.dim);
        for (i, grad) in rows.iter().enumerate() {
            out.set_row(i, &grad.transpose());
        }
        Ok(out)
    }

    /// `Σ_i ∇f_i(x)` at a common point.
    pub fn sum_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.agents
            .iter()
            .fold(DVector::zeros(self.dim), |acc, a| acc + a.gradient(x))
    }

    /// `Σ_i f_i(x)`.
    pub fn sum_value(&self, x: &DVector<f64>) -> f64 {
        self.agents.iter().map(|a| a.value(x)).sum()
    }

    fn sum_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.agents
            .iter()
            .fold(DMatrix::zeros(self.dim, self.dim), |acc, a| acc + a.hessian(x))
    }

    /// Minimizer of `Σ_i f_i`: closed-form solve for all-quadratic ensembles,
    /// damped Newton to gradient norm `1e-13` otherwise.
    pub fn global_optimum(&self) -> Result<DVector<f64>> {
        let all_quadratic = self.agents.iter().all(|a| matches!(a, Agent::Quadratic(_)));
        if all_quadratic {
            let mut a_sum = DMatrix::<f64>::zeros(self.dim, self.dim);
            let mut b_sum = DVector::<f64>::zeros(self.dim);
            for agent in &self.agents {
                if let Agent::Quadratic(q) = agent {
                    a_sum += &q.curvature;
                    b_sum += &q.linear;
                }
            }
            return a_sum.cholesky().ok_or(Error::SingularSystem).map(|ch| ch.solve(&b_sum));
        }
        let mut x = DVector::<f64>::zeros(self.dim);
        for _ in 0..NEWTON_BUDGET {
            let grad = self.sum_gradient(&x);
            if grad.norm() <= OPTIMUM_GRAD_TOL {
                return Ok(x);
            }
            let hess = self.sum_hessian(&x);
            let direction = hess
                .cholesky()
                .ok_or(Error::SingularSystem)?
                .solve(&(-&grad));
            // Armijo backtracking
            let f0 = self.sum_value(&x);
            let slope = grad.dot(&direction);
            let mut t = 1.0;
            while t > 1e-12 && self.sum_value(&(&x + &direction * t)) > f0 + 1e-4 * t * slope {
                t *= 0.5;
            }
            x += direction * t;
        }
        Err(Error::NonConvergence("Newton iteration for the global optimum"))
    }
}

fn common_dim(dims: impl IntoIterator<Item = usize>) -> Result<usize> {
    let mut iter = dims.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidParameter("ensemble needs at least one agent".into()))?;
    if first == 0 {
        return Err(Error::InvalidParameter("agent dimension must be positive".into()));
    }
    for d in iter {
        if d != first {
            return Err(Error::ShapeMismatch {
                expected_rows: 1,
                expected_cols: first,
                rows: 1,
                cols: d,
            });
        }
    }
    Ok(first)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 bounded away from 0
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Central finite differences of the analytic value; the independent
    /// oracle for every gradient implementation.
    pub(crate) fn fd_gradient(ens: &ObjectiveEnsemble, agent: usize, x: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6;
        DVector::from_fn(x.len(), |d, _| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[d] += h;
            minus[d] -= h;
            (ens.value(agent, &plus) - ens.value(agent, &minus)) / (2.0 * h)
        })
    }

    fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a - b).norm() / (1.0 + b.norm())
    }

    #[test]
    fn quadratic_gradient_vanishes_at_stationary_point() {
        let ens = ObjectiveEnsemble::random_quadratic(3, 4, 0).unwrap();
        let Agent::Quadratic(q) = &ens.agents()[1] else { panic!() };
        let x = q.curvature.clone().lu().solve(&q.linear).unwrap();
        assert!(ens.gradient(1, &x).norm() < 1e-10);
    }

    #[test]
    fn huber_gradient_vanishes_at_center() {
        let center = DVector::from_vec(vec![3.0, -2.0]);
        let agent = HuberAgent::new(center.clone(), 1.0, 0.1).unwrap();
        let ens = ObjectiveEnsemble::from_hubers(vec![agent]).unwrap();
        assert_eq!(ens.gradient(0, &center).norm(), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let quad = ObjectiveEnsemble::random_quadratic(4, 3, 1).unwrap();
        let hub = ObjectiveEnsemble::random_huber(4, 3, 1, 1.0, 0.1).unwrap();
        for ens in [&quad, &hub] {
            for trial in 0..100 {
                let agent = trial % ens.n();
                let x = DVector::from_fn(3, |_, _| 8.0 * rng.random::<f64>() - 4.0);
                let err = rel_err(&ens.gradient(agent, &x), &fd_gradient(ens, agent, &x));
                assert!(err < 1e-6, "trial {trial}: rel err {err}");
            }
        }
        // straddle the kink: coordinate exactly δ away from the center ± tiny
        let Agent::Huber(h) = &hub.agents()[0] else { panic!() };
        for offset in [-1e-7, 0.0, 1e-7] {
            let mut x = h.center().clone();
            x[0] += 1.0 + offset;
            let err = rel_err(&hub.gradient(0, &x), &fd_gradient(&hub, 0, &x));
            assert!(err < 1e-5, "kink offset {offset}: rel err {err}");
        }
    }

    #[test]
    fn stacked_gradient_rows_and_shape() {
        let ens = ObjectiveEnsemble::random_quadratic(3, 2, 5).unwrap();
        // rows at the per-agent minima → zero matrix
        let mut x = DMatrix::zeros(3, 2);
        for i in 0..3 {
            let Agent::Quadratic(q) = &ens.agents()[i] else { panic!() };
            let xi = q.curvature.clone().lu().solve(&q.linear).unwrap();
            x.set_row(i, &xi.transpose());
        }
        assert!(ens.stacked_gradient(&x).unwrap().amax() < 1e-10);

        assert!(matches!(
            ens.stacked_gradient(&DMatrix::zeros(2, 2)),
            Err(Error::ShapeMismatch { .. })
        ));

        let single = ObjectiveEnsemble::random_quadratic(1, 2, 6).unwrap();
        let x0 = DMatrix::from_row_slice(1, 2, &[0.3, -0.7]);
        let stacked = single.stacked_gradient(&x0).unwrap();
        assert_eq!(stacked.row(0).transpose(), single.gradient(0, &x0.row(0).transpose()));
    }

    #[test]
    fn consensual_column_sums_equal_summed_gradient() {
        let ens = ObjectiveEnsemble::random_huber(5, 3, 9, 1.0, 0.1).unwrap();
        let xbar = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let consensual = DMatrix::from_fn(5, 3, |_, d| xbar[d]);
        let stacked = ens.stacked_gradient(&consensual).unwrap();
        let colsums = stacked.row_sum().transpose();
        assert_relative_eq!(colsums, ens.sum_gradient(&xbar), epsilon = 1e-12);
    }

    #[test]
    fn quadratic_optimum_closed_forms() {
        // identical agents A = I, b: optimum at b
        let b = DVector::from_vec(vec![1.0, -2.0]);
        let agents: Vec<QuadraticAgent> = (0..3)
            .map(|_| QuadraticAgent::new(DMatrix::identity(2, 2), b.clone()).unwrap())
            .collect();
        let ens = ObjectiveEnsemble::from_quadratics(agents).unwrap();
        assert_relative_eq!(ens.global_optimum().unwrap(), b, epsilon = 1e-12);

        // two agents: A₁ = A₂ = I, b₁ = 0, b₂ = 2e₁ → x* = e₁
        let a1 = QuadraticAgent::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let a2 =
            QuadraticAgent::new(DMatrix::identity(2, 2), DVector::from_vec(vec![2.0, 0.0])).unwrap();
        let ens = ObjectiveEnsemble::from_quadratics(vec![a1, a2]).unwrap();
        assert_relative_eq!(
            ens.global_optimum().unwrap(),
            DVector::from_vec(vec![1.0, 0.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn singular_quadratic_sum_is_rejected() {
        let flat = QuadraticAgent::new(DMatrix::zeros(2, 2), DVector::zeros(2)).unwrap();
        let ens = ObjectiveEnsemble::from_quadratics(vec![flat]).unwrap();
        assert!(matches!(ens.global_optimum(), Err(Error::SingularSystem)));
    }

    #[test]
    fn huber_optimum_zeroes_summed_gradient() {
        let ens = ObjectiveEnsemble::random_huber(12, 2, 1, 1.0, 0.1).unwrap();
        let x_star = ens.global_optimum().unwrap();
        assert!(ens.sum_gradient(&x_star).norm() <= 1e-12);
    }

    #[test]
    fn huber_generator_certifies_constants_and_zones() {
        let ens = ObjectiveEnsemble::random_huber(12, 2, 1, 1.0, 0.1).unwrap();
        assert_eq!(ens.mu(), 0.1);
        assert_eq!(ens.lipschitz(), 1.1);
        assert!(ens.huber_zone_conditions_hold().unwrap());

        // degenerate single scalar agent: optimum at the center
        let tiny = ObjectiveEnsemble::random_huber(1, 1, 3, 1.0, 0.1).unwrap();
        let Agent::Huber(h) = &tiny.agents()[0] else { panic!() };
        assert_relative_eq!(tiny.global_optimum().unwrap(), h.center().clone(), epsilon = 1e-10);
    }

    #[test]
    fn assumption_inequalities_hold_with_certified_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let quad = ObjectiveEnsemble::random_quadratic(4, 3, 2).unwrap();
        let hub = ObjectiveEnsemble::random_huber(4, 3, 2, 1.0, 0.1).unwrap();
        for ens in [&quad, &hub] {
            for trial in 0..2_000 {
                let i = trial % ens.n();
                let x = DVector::from_fn(3, |_, _| 10.0 * rng.random::<f64>() - 5.0);
                let y = DVector::from_fn(3, |_, _| 10.0 * rng.random::<f64>() - 5.0);
                let dg = ens.gradient(i, &x) - ens.gradient(i, &y);
                let dx = &x - &y;
                assert!(dg.dot(&dx) >= ens.mu() * dx.norm_squared() - 1e-9);
                assert!(dg.norm() <= ens.lipschitz() * dx.norm() + 1e-9);
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = ObjectiveEnsemble::random_huber(6, 2, 42, 1.0, 0.1).unwrap();
        let b = ObjectiveEnsemble::random_huber(6, 2, 42, 1.0, 0.1).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
