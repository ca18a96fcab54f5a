//! The push-pull iteration, its half-communication variant, a centralized
//! gradient-descent baseline, and per-iteration trace recording.
//!
//! One step of the full method:
//!
//! ```text
//! X⁺ = R (X − α Y)
//! Y⁺ = C (Y + ∇F(X⁺) − ∇F(X))
//! ```
//!
//! initialized with any `X₀` and `Y₀ = ∇F(X₀)`. The half variant skips the
//! combine stage on the tracker update (`Y⁺ = C·Y + ∇F(X⁺) − ∇F(X)`), which
//! costs one communication round per iteration instead of two. Gradients are
//! cached and differenced, so each step evaluates every agent's gradient
//! exactly once.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSequence;
use crate::mixing::{self, MixingPair};
use crate::norms::{NormSystem, DEFAULT_GAMMA_FRACTION};
use crate::objectives::ObjectiveEnsemble;

/// Residual level treated as divergence by [`run`].
pub const DIVERGENCE_RESIDUAL: f64 = 1e6;

/// Which update rule a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    PushPull,
    PushPullHalf,
    Centralized,
}

/// Mixing source for a run: one fixed pair, or a per-iteration sequence.
#[derive(Debug, Clone)]
pub enum Topology {
    Static(MixingPair),
    Sequence(GraphSequence),
}

impl Topology {
    pub fn n(&self) -> usize {
        match self {
            Topology::Static(pair) => pair.n(),
            Topology::Sequence(seq) => seq.base().vertex_count(),
        }
    }
}

/// Validated run parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub alpha: f64,
    pub variant: Variant,
    pub max_iters: usize,
    pub stop_tolerance: f64,
    pub topology: Topology,
}

impl SolverConfig {
    pub fn new(
        alpha: f64,
        variant: Variant,
        max_iters: usize,
        stop_tolerance: f64,
        topology: Topology,
    ) -> Result<Self> {
        let config = Self { alpha, variant, max_iters, stop_tolerance, topology };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive and finite, got {}",
                self.alpha
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("stop tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Mutable per-iteration state: decision stack `X`, tracker stack `Y`, and
/// the cached gradient `∇F(X)` kept in lockstep with `X`.
#[derive(Debug, Clone)]
pub struct IterateState {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    cached_grad: DMatrix<f64>,
    k: usize,
}

/// Builds the state at `k = 0` with `Y₀ = ∇F(X₀)`.
pub fn init(ensemble: &ObjectiveEnsemble, x0: DMatrix<f64>) -> Result<IterateState> {
    let grad = ensemble.stacked_gradient(&x0)?;
    Ok(IterateState { x: x0, y: grad.clone(), cached_grad: grad, k: 0 })
}

impl IterateState {
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn cached_grad(&self) -> &DMatrix<f64> {
        &self.cached_grad
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn check_mixing_dims(&self, r: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<()> {
        let n = self.x.nrows();
        for m in [r, c] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
            }
        }
        Ok(())
    }

    fn apply(
        &mut self,
        ensemble: &ObjectiveEnsemble,
        x_next: DMatrix<f64>,
        y_next: DMatrix<f64>,
        grad_next: DMatrix<f64>,
    ) -> Result<()> {
        self.x = x_next;
        self.y = y_next;
        self.cached_grad = grad_next;
        self.k += 1;
        debug_assert!({
            let fresh = ensemble.stacked_gradient(&self.x);
            fresh.map_or(true, |g| {
                !g.iter().all(|v| v.is_finite()) || (&g - &self.cached_grad).amax() <= 1e-12
            })
        });
        if self.x.iter().chain(self.y.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteIterate(self.k))
        }
    }

    /// Full push-pull step (adapt-then-combine on both updates).
    pub fn step_push_pull(
        &mut self,
        r: &DMatrix<f64>,
        c: &DMatrix<f64>,
        alpha: f64,
        ensemble: &ObjectiveEnsemble,
    ) -> Result<()> {
        self.check_mixing_dims(r, c)?;
        let x_next = r * (&self.x - &self.y * alpha);
        let grad_next = ensemble.stacked_gradient(&x_next)?;
        let y_next = c * (&self.y + &grad_next - &self.cached_grad);
        self.apply(ensemble, x_next, y_next, grad_next)
    }

    /// Half-communication variant: the fresh gradient difference is not
    /// mixed on the tracker update.
    pub fn step_push_pull_half(
        &mut self,
        r: &DMatrix<f64>,
        c: &DMatrix<f64>,
        alpha: f64,
        ensemble: &ObjectiveEnsemble,
    ) -> Result<()> {
        self.check_mixing_dims(r, c)?;
        let x_next = r * (&self.x - &self.y * alpha);
        let grad_next = ensemble.stacked_gradient(&x_next)?;
        let y_next = c * &self.y + &grad_next - &self.cached_grad;
        self.apply(ensemble, x_next, y_next, grad_next)
    }
}

/// One recorded iteration of a run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRecord {
    /// `‖X_k − 𝟙x*ᵀ‖²_F / ‖X₀ − 𝟙x*ᵀ‖²_F`
    pub residual: f64,
    /// `‖X_k − 𝟙x̄_k‖` in the weighted R-norm
    pub consensus_r: f64,
    /// the same deviation in the plain 2-norm
    pub consensus_2: f64,
    /// `‖Y_k − v ȳ_k‖` in the weighted C-norm
    pub tracking_c: f64,
    /// `‖x̄_k − x*‖₂`
    pub optgap: f64,
}

impl TraceRecord {
    /// The three coupled error coordinates of the contraction system.
    pub fn composite(&self) -> [f64; 3] {
        [self.optgap, self.consensus_r, self.tracking_c]
    }
}

/// Full per-iteration diagnostics of a run; index = iteration.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub alpha: f64,
    pub variant: Variant,
    pub static_topology: bool,
    /// True when `x̄` uses the Perron-weighted average; time-varying runs
    /// substitute the plain average and clear this flag.
    pub weighted_average: bool,
    /// False when no reference mixing pair was available for the weighted
    /// trace norms (plain 2-norms are reported instead).
    pub reference_norms: bool,
    /// `(γ_R, γ_C)` of the norm realization behind `consensus_r` and
    /// `tracking_c`, when weighted norms were used.
    pub norm_gammas: Option<(f64, f64)>,
    pub records: Vec<TraceRecord>,
    pub diverged: bool,
    pub converged: bool,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    /// First iteration whose residual drops to `tol` or below.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().position(|r| r.residual <= tol)
    }

    /// Writes the CSV schema
    /// `k,residual,consensus_R,consensus_2,tracking_C,optgap,comp1,comp2,comp3,divergence_flag`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "k,residual,consensus_R,consensus_2,tracking_C,optgap,comp1,comp2,comp3,divergence_flag"
        )?;
        let last = self.records.len().saturating_sub(1);
        for (k, rec) in self.records.iter().enumerate() {
            let flag = u8::from(self.diverged && k == last);
            let comps = rec.composite();
            writeln!(
                w,
                "{k},{},{},{},{},{},{},{},{},{flag}",
                rec.residual,
                rec.consensus_r,
                rec.consensus_2,
                rec.tracking_c,
                rec.optgap,
                comps[0],
                comps[1],
                comps[2],
            )?;
        }
        Ok(())
    }
}

struct TraceRecorder {
    x_star: DVector<f64>,
    denom: f64,
    norms: Option<NormSystem>,
    weight_u: Option<DVector<f64>>,
    weight_v: Option<DVector<f64>>,
}

impl TraceRecorder {
    fn record(&self, state: &IterateState) -> TraceRecord {
        let (n, p) = (state.x.nrows(), state.x.ncols());
        let nf = n as f64;
        let ones = DVector::<f64>::repeat(n, 1.0);
        let xbar = match &self.weight_u {
            Some(u) => state.x.transpose() * u / nf,
            None => state.x.transpose() * &ones / nf,
        };
        let ybar = state.y.transpose() * &ones / nf;
        let x_dev = &state.x - &ones * xbar.transpose();
        let v = self.weight_v.clone().unwrap_or_else(|| ones.clone());
        let y_dev = &state.y - v * ybar.transpose();
        let x_to_opt = &state.x - &ones * self.x_star.transpose();
        let residual = if self.denom == 0.0 {
            0.0
        } else {
            x_to_opt.norm_squared() / self.denom
        };
        let _ = p;
        TraceRecord {
            residual,
            consensus_r: match &self.norms {
                Some(ns) => ns.norm_r().block_norm(&x_dev),
                None => x_dev.norm(),
            },
            consensus_2: x_dev.norm(),
            tracking_c: match &self.norms {
                Some(ns) => ns.norm_c().block_norm(&y_dev),
                None => y_dev.norm(),
            },
            optgap: (&xbar - &self.x_star).norm(),
        }
    }
}

/// Runs the configured variant from `X₀` until the normalized residual hits
/// the stop tolerance, divergence is detected (non-finite entries or residual
/// above [`DIVERGENCE_RESIDUAL`] — reported in the trace, not an error), or
/// the iteration budget runs out.
pub fn run(
    config: &SolverConfig,
    ensemble: &ObjectiveEnsemble,
    x0: DMatrix<f64>,
) -> Result<SolverTrace> {
    config.validate()?;
    let n = config.topology.n();
    if ensemble.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ensemble.n() });
    }
    if config.variant == Variant::Centralized {
        return Err(Error::InvalidParameter(
            "run() drives the distributed variants; use centralized_gd".into(),
        ));
    }
    let x_star = ensemble.global_optimum()?;
    let (norms, weight_u, weight_v, static_topology, reference_norms) = match &config.topology {
        Topology::Static(pair) => {
            let norms = NormSystem::build(pair, DEFAULT_GAMMA_FRACTION)?;
            (Some(norms), Some(pair.u().clone()), Some(pair.v().clone()), true, true)
        }
        Topology::Sequence(seq) => match MixingPair::from_graph(seq.base()) {
            // reference norms come from the base topology; the running
            // average stays unweighted because u_k varies with the sequence
            Ok(pair) => {
                let norms = NormSystem::build(&pair, DEFAULT_GAMMA_FRACTION)?;
                (Some(norms), None, Some(pair.v().clone()), false, true)
            }
            Err(_) => (None, None, None, false, false),
        },
    };
    let recorder = TraceRecorder {
        denom: (&x0 - DVector::<f64>::repeat(n, 1.0) * x_star.transpose()).norm_squared(),
        x_star,
        norms,
        weight_u,
        weight_v,
    };

    let mut state = init(ensemble, x0)?;
    let mut records = vec![recorder.record(&state)];
    let mut diverged = false;
    let mut converged = records[0].residual <= config.stop_tolerance;

    while !converged && !diverged && state.k() < config.max_iters {
        let step_result = match &config.topology {
            Topology::Static(pair) => match config.variant {
                Variant::PushPull => {
                    state.step_push_pull(pair.r(), pair.c(), config.alpha, ensemble)
                }
                Variant::PushPullHalf => {
                    state.step_push_pull_half(pair.r(), pair.c(), config.alpha, ensemble)
                }
                Variant::Centralized => unreachable!(),
            },
            Topology::Sequence(seq) => {
                let (g_row, g_col) = seq.masked_graphs(state.k());
                let r = mixing::row_stochastic_from_graph(&g_row);
                let c = mixing::column_stochastic_from_graph(&g_col);
                match config.variant {
                    Variant::PushPull => state.step_push_pull(&r, &c, config.alpha, ensemble),
                    Variant::PushPullHalf => {
                        state.step_push_pull_half(&r, &c, config.alpha, ensemble)
                    }
                    Variant::Centralized => unreachable!(),
                }
            }
        };
        match step_result {
            Ok(()) => {
                let record = recorder.record(&state);
                let bad = !record.residual.is_finite() || record.residual > DIVERGENCE_RESIDUAL;
                converged = record.residual <= config.stop_tolerance;
                records.push(record);
                if bad {
                    diverged = true;
                    converged = false;
                }
            }
            Err(Error::NonFiniteIterate(_)) => {
                records.push(recorder.record(&state));
                diverged = true;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(SolverTrace {
        alpha: config.alpha,
        variant: config.variant,
        static_topology,
        weighted_average: matches!(config.topology, Topology::Static(_)),
        reference_norms,
        norm_gammas: recorder
            .norms
            .as_ref()
            .map(|ns| (ns.norm_r().gamma(), ns.norm_c().gamma())),
        records,
        diverged,
        converged,
    })
}

/// Centralized gradient descent on the averaged objective,
/// `x⁺ = x − α′·(1/n)Σ∇f_i(x)`, traced as `‖x_k − x*‖₂` for
/// `k = 0..=iters`. Requires `0 < α′ ≤ 2/(μ+L)`, the range with per-step
/// contraction factor `1 − α′μ`.
pub fn centralized_gd(
    ensemble: &ObjectiveEnsemble,
    x0: &DVector<f64>,
    alpha_prime: f64,
    iters: usize,
) -> Result<Vec<f64>> {
    let limit = 2.0 / (ensemble.mu() + ensemble.lipschitz());
    if !(alpha_prime > 0.0 && alpha_prime <= limit) {
        return Err(Error::StepSizeOutOfRange(format!(
            "centralized step size must lie in (0, {limit}], got {alpha_prime}"
        )));
    }
    let x_star = ensemble.global_optimum()?;
    let nf = ensemble.n() as f64;
    let mut x = x0.clone();
    let mut distances = Vec::with_capacity(iters + 1);
    distances.push((&x - &x_star).norm());
    for _ in 0..iters {
        x -= ensemble.sum_gradient(&x) * (alpha_prime / nf);
        distances.push((&x - &x_star).norm());
    }
    Ok(distances)
}
