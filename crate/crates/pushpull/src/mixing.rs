//! Row/column-stochastic mixing matrices induced by directed graphs, their
//! Perron vectors, and the standing-assumption checks.
//!
//! Weights are uniform: an agent averages equally over itself and its
//! in-neighbors (row side), and splits its mass equally over itself and its
//! out-neighbors (column side). The diagonal is always positive, so the
//! builders satisfy the positive-diagonal assumption for any input graph.

use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::linalg;

/// Stochasticity tolerance used by the assumption checks.
pub const ASSUMPTION_TOL: f64 = 1e-12;
/// Looser tolerance applied to matrices round-tripped through CSV files.
pub const CSV_STOCHASTIC_TOL: f64 = 1e-9;
/// Threshold on `uᵀv` separating intersecting from disjoint root sets.
pub const ROOT_DOT_TOL: f64 = 1e-8;

const PERRON_CLAMP: f64 = 1e-12;
const PERRON_RESIDUAL_TOL: f64 = 1e-9;
const POWER_ITER_BUDGET: usize = 100_000;
/// Dense eigensolve below this size, power iteration above.
const DENSE_PERRON_LIMIT: usize = 64;

/// `R_ij = 1/(1 + indeg(i))` for every in-neighbor `j` of `i` and for `j = i`.
pub fn row_stochastic_from_graph(g: &DirectedGraph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let neighbors = g.in_neighbors(i);
        let w = 1.0 / (1.0 + neighbors.len() as f64);
        m[(i, i)] = w;
        for j in neighbors {
            m[(i, j)] = w;
        }
    }
    m
}

/// `C_ij = 1/(1 + outdeg(j))` for every out-neighbor `i` of `j` and for `i = j`.
pub fn column_stochastic_from_graph(g: &DirectedGraph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let neighbors = g.out_neighbors(j);
        let w = 1.0 / (1.0 + neighbors.len() as f64);
        m[(j, j)] = w;
        for i in neighbors {
            m[(i, j)] = w;
        }
    }
    m
}

/// Graph induced by the off-diagonal support of `m`: edge `(j, i)` iff
/// `m[(i, j)] > 0` and `i ≠ j`.
pub fn induced_graph(m: &DMatrix<f64>) -> Result<DirectedGraph> {
    let n = square_dim(m)?;
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && m[(i, j)] > 0.0)
        .map(|(i, j)| (j, i));
    DirectedGraph::new(n, edges)
}

fn square_dim(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Nonnegative left eigenvector of a row-stochastic `R` at eigenvalue 1,
/// scaled so its entries sum to `n`. Entries with magnitude below `1e-12`
/// are clamped to exactly zero, which makes the support match the root set
/// of the induced graph.
pub fn left_perron_u(r: &DMatrix<f64>) -> Result<DVector<f64>> {
    let rt = r.transpose();
    let raw = perron_direction(&rt)?;
    finish_perron(raw, &rt)
}

/// Nonnegative right eigenvector of a column-stochastic `C` at eigenvalue 1,
/// scaled so its entries sum to `n`.
pub fn right_perron_v(c: &DMatrix<f64>) -> Result<DVector<f64>> {
    let raw = perron_direction(c)?;
    finish_perron(raw, c)
}

/// Unnormalized fixed vector of `m` (i.e. `m x = x`), via SVD nullspace for
/// small matrices and fixed-point iteration above [`DENSE_PERRON_LIMIT`].
fn perron_direction(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = square_dim(m)?;
    if n <= DENSE_PERRON_LIMIT {
        linalg::simple_null_vector(&(m - DMatrix::<f64>::identity(n, n)))
    } else {
        let mut x = DVector::<f64>::repeat(n, 1.0);
        for _ in 0..POWER_ITER_BUDGET {
            let next = m * &x;
            let diff = (&next - &x).amax();
            x = next;
            if diff <= 1e-12 {
                return Ok(x);
            }
        }
        Err(Error::NonConvergence("Perron fixed-point iteration"))
    }
}

fn finish_perron(mut x: DVector<f64>, m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    if sum.abs() < 1e-9 * x.amax().max(1e-300) {
        // a fixed vector with vanishing sum cannot be rescaled to a
        // nonnegative one; eigenvalue 1 is defective for our purposes
        return Err(Error::EigenvectorNotUnique);
    }
    x *= n / sum;
    for entry in x.iter_mut() {
        if entry.abs() < PERRON_CLAMP {
            *entry = 0.0;
        } else if *entry < 0.0 {
            return Err(Error::EigenvectorNotUnique);
        }
    }
    let clamped_sum: f64 = x.iter().sum();
    x *= n / clamped_sum;
    let residual = (m * &x - &x).amax();
    if residual > PERRON_RESIDUAL_TOL {
        return Err(Error::NonConvergence("Perron residual above tolerance"));
    }
    Ok(x)
}

/// Spectral radius of `m − outer`, where `outer` is the rank-1 Perron
/// projection being removed.
pub fn residual_spectral_radius(m: &DMatrix<f64>, outer: &DMatrix<f64>) -> Result<f64> {
    let n = square_dim(m)?;
    if outer.nrows() != n || outer.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: outer.nrows(),
        });
    }
    linalg::spectral_radius(&(m - outer))
}

/// Clause-by-clause verdict on the standing assumptions for a candidate
/// `(R, C)` pair, with the root-set/eigenvector cross-check computed along
/// two independent routes (graph reachability vs. Perron vectors).
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub row_stochastic: bool,
    pub column_stochastic: bool,
    pub positive_diagonal_r: bool,
    pub positive_diagonal_c: bool,
    pub spanning_tree_r: bool,
    pub spanning_tree_ct: bool,
    pub roots_intersect: bool,
    /// `uᵀv`; NaN when either Perron vector is undefined.
    pub u_dot_v: f64,
    /// Whether the two routes agree: roots intersect ⟺ `uᵀv` > 1e-8.
    pub routes_consistent: bool,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.row_stochastic
            && self.column_stochastic
            && self.positive_diagonal_r
            && self.positive_diagonal_c
            && self.spanning_tree_r
            && self.spanning_tree_ct
            && self.roots_intersect
            && self.routes_consistent
    }

    fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.row_stochastic {
            out.push("R is not row-stochastic");
        }
        if !self.column_stochastic {
            out.push("C is not column-stochastic");
        }
        if !self.positive_diagonal_r {
            out.push("R has a non-positive diagonal entry");
        }
        if !self.positive_diagonal_c {
            out.push("C has a non-positive diagonal entry");
        }
        if !self.spanning_tree_r {
            out.push("graph of R has no spanning tree");
        }
        if !self.spanning_tree_ct {
            out.push("graph of Cᵀ has no spanning tree");
        }
        if !self.roots_intersect {
            out.push("root sets of R and Cᵀ do not intersect");
        }
        if !self.routes_consistent {
            out.push("graph and eigenvector routes disagree");
        }
        out
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "ok" } else { "FAIL" };
        writeln!(f, "row-stochastic R:        {}", mark(self.row_stochastic))?;
        writeln!(f, "column-stochastic C:     {}", mark(self.column_stochastic))?;
        writeln!(f, "positive diagonal R:     {}", mark(self.positive_diagonal_r))?;
        writeln!(f, "positive diagonal C:     {}", mark(self.positive_diagonal_c))?;
        writeln!(f, "spanning tree in G_R:    {}", mark(self.spanning_tree_r))?;
        writeln!(f, "spanning tree in G_Ct:   {}", mark(self.spanning_tree_ct))?;
        writeln!(f, "root sets intersect:     {}", mark(self.roots_intersect))?;
        writeln!(f, "u'v:                     {}", self.u_dot_v)?;
        write!(f, "routes consistent:       {}", mark(self.routes_consistent))
    }
}

fn is_row_stochastic(m: &DMatrix<f64>, tol: f64) -> bool {
    m.iter().all(|&x| x >= -tol) && (0..m.nrows()).all(|i| (m.row(i).sum() - 1.0).abs() <= tol)
}

fn is_column_stochastic(m: &DMatrix<f64>, tol: f64) -> bool {
    m.iter().all(|&x| x >= -tol) && (0..m.ncols()).all(|j| (m.column(j).sum() - 1.0).abs() <= tol)
}

/// Validates Assumptions 2-4 for the pair `(R, C)`.
pub fn check_assumptions(r: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<AssumptionReport> {
    let n = square_dim(r)?;
    if square_dim(c)? != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.nrows(),
        });
    }
    let g_r = induced_graph(r)?;
    let g_ct = induced_graph(c)?.reverse();
    let roots_r = g_r.root_set();
    let roots_ct = g_ct.root_set();
    let spanning_tree_r = !roots_r.is_empty();
    let spanning_tree_ct = !roots_ct.is_empty();
    let roots_intersect = roots_r.intersection(&roots_ct).next().is_some();

    let u_dot_v = if spanning_tree_r && spanning_tree_ct {
        let u = left_perron_u(r)?;
        let v = right_perron_v(c)?;
        u.dot(&v)
    } else {
        f64::NAN
    };
    let routes_consistent = if u_dot_v.is_nan() {
        true
    } else {
        roots_intersect == (u_dot_v > ROOT_DOT_TOL)
    };

    Ok(AssumptionReport {
        row_stochastic: is_row_stochastic(r, ASSUMPTION_TOL),
        column_stochastic: is_column_stochastic(c, ASSUMPTION_TOL),
        positive_diagonal_r: (0..n).all(|i| r[(i, i)] > 0.0),
        positive_diagonal_c: (0..n).all(|i| c[(i, i)] > 0.0),
        spanning_tree_r,
        spanning_tree_ct,
        roots_intersect,
        u_dot_v,
        routes_consistent,
    })
}

/// A validated `(R, C)` pair together with its Perron vectors and the
/// spectral radii of the rank-1-deflated residuals.
#[derive(Debug, Clone)]
pub struct MixingPair {
    r: DMatrix<f64>,
    c: DMatrix<f64>,
    u: DVector<f64>,
    v: DVector<f64>,
    rho_r: f64,
    rho_c: f64,
}

impl MixingPair {
    /// Validates the matrices against the standing assumptions and computes
    /// `u`, `v`, `ρ_R`, `ρ_C`.
    pub fn from_matrices(r: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let report = check_assumptions(&r, &c)?;
        if !report.pass() {
            return Err(Error::AssumptionViolation(report.failures().join("; ")));
        }
        let n = r.nrows();
        let u = left_perron_u(&r)?;
        let v = right_perron_v(&c)?;
        let ones = DVector::<f64>::repeat(n, 1.0);
        let rho_r = residual_spectral_radius(&r, &(&ones * u.transpose() / n as f64))?;
        let rho_c = residual_spectral_radius(&c, &(&v * ones.transpose() / n as f64))?;
        if !(rho_r < 1.0 && rho_c < 1.0) {
            return Err(Error::NumericalFailure(format!(
                "residual spectral radius not below 1: rho_R={rho_r}, rho_C={rho_c}"
            )));
        }
        Ok(Self { r, c, u, v, rho_r, rho_c })
    }

    /// Builds `R` and `C` from separate graphs with uniform weights.
    pub fn from_graphs(g_r: &DirectedGraph, g_c: &DirectedGraph) -> Result<Self> {
        Self::from_matrices(row_stochastic_from_graph(g_r), column_stochastic_from_graph(g_c))
    }

    /// Builds both matrices over the same communication graph.
    pub fn from_graph(g: &DirectedGraph) -> Result<Self> {
        Self::from_graphs(g, g)
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn rho_r(&self) -> f64 {
        self.rho_r
    }

    pub fn rho_c(&self) -> f64 {
        self.rho_c
    }

    /// `R − 𝟙uᵀ/n`, the consensus residual on the row side.
    pub fn residual_r(&self) -> DMatrix<f64> {
        let n = self.n() as f64;
        &self.r - DVector::<f64>::repeat(self.n(), 1.0) * self.u.transpose() / n
    }

    /// `C − v𝟙ᵀ/n`, the tracking residual on the column side.
    pub fn residual_c(&self) -> DMatrix<f64> {
        let n = self.n() as f64;
        &self.c - &self.v * DVector::<f64>::repeat(self.n(), 1.0).transpose() / n
    }
}

/// Writes a dense matrix as CSV, one row per line. `f64` values are printed
/// in shortest round-trip form, so write → read is lossless.
pub fn write_matrix_csv(m: &DMatrix<f64>, w: &mut impl Write) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a dense CSV matrix; all rows must have equal length.
pub fn read_matrix_csv(r: &mut impl BufRead) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Parse(format!("bad CSV entry: {e}")))?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse("ragged CSV rows".into()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV matrix".into()));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Loads a CSV matrix expected to be row-stochastic (tolerance 1e-9).
pub fn load_row_stochastic(r: &mut impl BufRead) -> Result<DMatrix<f64>> {
    let m = read_matrix_csv(r)?;
    square_dim(&m)?;
    if !is_row_stochastic(&m, CSV_STOCHASTIC_TOL) {
        return Err(Error::AssumptionViolation(
            "loaded matrix is not row-stochastic within 1e-9".into(),
        ));
    }
    Ok(m)
}

/// Loads a CSV matrix expected to be column-stochastic (tolerance 1e-9).
pub fn load_column_stochastic(r: &mut impl BufRead) -> Result<DMatrix<f64>> {
    let m = read_matrix_csv(r)?;
    square_dim(&m)?;
    if !is_column_stochastic(&m, CSV_STOCHASTIC_TOL) {
        return Err(Error::AssumptionViolation(
            "loaded matrix is not column-stochastic within 1e-9".into(),
        ));
    }
    Ok(m)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::GraphSequence;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn star_r() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.5, 0.5, 0.0, 0.0, //
                0.5, 0.0, 0.5, 0.0, //
                0.5, 0.0, 0.0, 0.5,
            ],
        )
    }

    pub(crate) fn star_c() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.5, 0.5, 0.5, //
                0.0, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.5, 0.0, //
                0.0, 0.0, 0.0, 0.5,
            ],
        )
    }

    fn random_rooted_graph(seed: u64) -> DirectedGraph {
        // random graph with a guaranteed spanning tree from vertex 0
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3 + (rng.random::<u32>() % 8) as usize;
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| ((v - 1), v)).collect();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.random::<f64>() < 0.2 {
                    edges.push((a, b));
                }
            }
        }
        DirectedGraph::new(n, edges).unwrap()
    }

    #[test]
    fn builders_reproduce_star_matrices() {
        let g_r = DirectedGraph::star_broadcast(4).unwrap();
        let g_c = DirectedGraph::star_gather(4).unwrap();
        assert_eq!(row_stochastic_from_graph(&g_r), star_r());
        assert_eq!(column_stochastic_from_graph(&g_c), star_c());
    }

    #[test]
    fn builders_on_isolated_vertices_give_identity() {
        let g = DirectedGraph::new(3, []).unwrap();
        assert_eq!(row_stochastic_from_graph(&g), DMatrix::identity(3, 3));
        assert_eq!(column_stochastic_from_graph(&g), DMatrix::identity(3, 3));
    }

    #[test]
    fn builder_sums_are_exact() {
        for seed in 0..20 {
            let g = random_rooted_graph(seed);
            let r = row_stochastic_from_graph(&g);
            let c = column_stochastic_from_graph(&g);
            for i in 0..g.vertex_count() {
                assert!((r.row(i).sum() - 1.0).abs() <= 1e-15);
                assert!((c.column(i).sum() - 1.0).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn builder_support_matches_graph_plus_diagonal() {
        for seed in 0..20 {
            let g = random_rooted_graph(seed + 100);
            let r = row_stochastic_from_graph(&g);
            assert_eq!(induced_graph(&r).unwrap(), g);
            let c = column_stochastic_from_graph(&g);
            assert_eq!(induced_graph(&c).unwrap(), g);
        }
    }

    #[test]
    fn perron_vectors_on_reference_matrices() {
        let u = left_perron_u(&star_r()).unwrap();
        assert_relative_eq!(u, DVector::from_vec(vec![4.0, 0.0, 0.0, 0.0]), epsilon = 1e-10);
        let v = right_perron_v(&star_c()).unwrap();
        assert_relative_eq!(v, DVector::from_vec(vec![4.0, 0.0, 0.0, 0.0]), epsilon = 1e-10);

        // doubly stochastic → all-ones
        let ds = DMatrix::from_row_slice(3, 3, &[0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5]);
        assert_relative_eq!(left_perron_u(&ds).unwrap(), DVector::repeat(3, 1.0), epsilon = 1e-10);
        assert_relative_eq!(right_perron_v(&ds).unwrap(), DVector::repeat(3, 1.0), epsilon = 1e-10);

        let one = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(left_perron_u(&one).unwrap(), DVector::from_vec(vec![1.0]));
    }

    #[test]
    fn perron_rejects_multiple_eigenvalue_one() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(left_perron_u(&id), Err(Error::EigenvectorNotUnique)));
    }

    #[test]
    fn power_iteration_branch_agrees_with_dense() {
        // ring of 70 vertices exceeds the dense limit
        let n = 70;
        let g = DirectedGraph::new(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap();
        let r = row_stochastic_from_graph(&g);
        let u = left_perron_u(&r).unwrap();
        assert!((&r.transpose() * &u - &u).amax() < 1e-9);
        assert_relative_eq!(u.sum(), n as f64, epsilon = 1e-9);
    }

    #[test]
    fn perron_support_equals_root_set() {
        for seed in 0..100 {
            let g = random_rooted_graph(seed + 2000);
            let r = row_stochastic_from_graph(&g);
            let u = left_perron_u(&r).unwrap();
            let support: std::collections::BTreeSet<usize> =
                (0..g.vertex_count()).filter(|&i| u[i] > 0.0).collect();
            assert_eq!(support, g.root_set(), "seed {seed}");
        }
    }

    #[test]
    fn residual_radius_examples() {
        let one = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(residual_spectral_radius(&one, &one).unwrap(), 0.0);

        // symmetric doubly stochastic: residual radius is the second-largest |eigenvalue|
        let ds = DMatrix::from_row_slice(3, 3, &[0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5]);
        let ones = DVector::<f64>::repeat(3, 1.0);
        let rho = residual_spectral_radius(&ds, &(&ones * ones.transpose() / 3.0)).unwrap();
        let eigs = crate::linalg::symmetric_eigen(&ds).unwrap().eigenvalues;
        let mut mags: Vec<f64> = eigs.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_relative_eq!(rho, mags[1], epsilon = 1e-12);

        let u = DVector::from_vec(vec![4.0, 0.0, 0.0, 0.0]);
        let ones = DVector::<f64>::repeat(4, 1.0);
        let rho = residual_spectral_radius(&star_r(), &(&ones * u.transpose() / 4.0)).unwrap();
        assert_relative_eq!(rho, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn check_assumptions_on_star_pair() {
        let report = check_assumptions(&star_r(), &star_c()).unwrap();
        assert!(report.pass(), "{report}");
        assert_relative_eq!(report.u_dot_v, 16.0, epsilon = 1e-9);
    }

    #[test]
    fn check_assumptions_disjoint_roots() {
        // R rooted only at 0, Cᵀ rooted only at 1
        let g_r = DirectedGraph::new(2, [(0, 1)]).unwrap();
        let g_c = DirectedGraph::new(2, [(0, 1)]).unwrap(); // Cᵀ graph = (1, 0), rooted at 1
        let report =
            check_assumptions(&row_stochastic_from_graph(&g_r), &column_stochastic_from_graph(&g_c))
                .unwrap();
        assert!(!report.roots_intersect);
        assert!(report.u_dot_v.abs() <= ROOT_DOT_TOL);
        assert!(report.routes_consistent);
        assert!(!report.pass());
    }

    #[test]
    fn check_assumptions_identity_fails_spanning_tree() {
        let id = DMatrix::<f64>::identity(2, 2);
        let report = check_assumptions(&id, &id).unwrap();
        assert!(!report.spanning_tree_r);
        assert!(!report.spanning_tree_ct);
        assert!(!report.pass());
    }

    #[test]
    fn lemma3_equivalence_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..100 {
            let g_r = random_rooted_graph(rng.random::<u64>());
            let n = g_r.vertex_count();
            // C's graph: chain pushing toward a random vertex, plus noise
            let root: usize = rng.random_range(0..n);
            let mut edges: Vec<(usize, usize)> = (0..n)
                .filter(|&v| v != root)
                .map(|v| (v, if v < root { v + 1 } else { v - 1 }))
                .collect();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.random::<f64>() < 0.1 {
                        edges.push((a, b));
                    }
                }
            }
            let g_c = DirectedGraph::new(n, edges).unwrap();
            let r = row_stochastic_from_graph(&g_r);
            let c = column_stochastic_from_graph(&g_c);
            let report = check_assumptions(&r, &c).unwrap();
            if report.u_dot_v.is_nan() {
                continue;
            }
            assert!(report.routes_consistent, "trial {trial}");
        }
    }

    #[test]
    fn mixing_pair_from_random_graph() {
        let g = DirectedGraph::random_strongly_connected(12, 24, 7).unwrap();
        let pair = MixingPair::from_graph(&g).unwrap();
        assert!(pair.rho_r() < 1.0 && pair.rho_c() < 1.0);
        assert!(
            (pair.r() * DVector::<f64>::repeat(12, 1.0) - DVector::repeat(12, 1.0)).amax() < 1e-12
        );
        assert_relative_eq!(pair.u().sum(), 12.0, epsilon = 1e-9);
        assert_relative_eq!(pair.v().sum(), 12.0, epsilon = 1e-9);
    }

    #[test]
    fn mixing_pair_rejects_bad_input() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            MixingPair::from_matrices(id.clone(), id),
            Err(Error::AssumptionViolation(_))
        ));
    }

    #[test]
    fn masked_sequence_matrices_stay_stochastic() {
        let base = DirectedGraph::random_strongly_connected(8, 20, 5).unwrap();
        let base = {
            // make {0, 1} a valid leader pair
            let mut edges: Vec<_> = base.edges().collect();
            edges.push((0, 1));
            edges.push((1, 0));
            DirectedGraph::new(8, edges).unwrap()
        };
        let seq = GraphSequence::new(base, 0.5, [0, 1], 9).unwrap();
        for k in 0..10 {
            let (gr, gc) = seq.masked_graphs(k);
            let r = row_stochastic_from_graph(&gr);
            let c = column_stochastic_from_graph(&gc);
            assert!(is_row_stochastic(&r, 1e-15));
            assert!(is_column_stochastic(&c, 1e-15));
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let m = star_r() * 0.9999999999 + DMatrix::from_element(4, 4, 1.0 / 3.0) * 1e-10;
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let back = read_matrix_csv(&mut buf.as_slice()).unwrap();
        assert_eq!(m, back);

        let mut buf = Vec::new();
        write_matrix_csv(&star_r(), &mut buf).unwrap();
        assert!(load_row_stochastic(&mut buf.as_slice()).is_ok());
        assert!(load_column_stochastic(&mut buf.as_slice()).is_err());

        assert!(read_matrix_csv(&mut "1.0,2.0\n3.0\n".as_bytes()).is_err());
        assert!(read_matrix_csv(&mut "a,b\n".as_bytes()).is_err());
    }
}
