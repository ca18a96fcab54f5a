//! Directed communication graphs: reachability, root sets, spanning trees,
//! and the topology generators used by the experiment suite.
//!
//! An edge `(j, i)` means information flows from `j` to `i`, matching the
//! convention that the induced mixing matrix has a positive entry at row `i`,
//! column `j`. Self-loops are never stored; the mixing builders always add
//! diagonal weight.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Immutable directed graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    /// Builds a graph, validating endpoints and rejecting self-loops.
    /// Duplicate edges collapse silently.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({from}, {to}) out of range for n={n}"
                )));
            }
            if from == to {
                return Err(Error::InvalidParameter(format!(
                    "self-loop ({from}, {from}) not allowed; diagonals are implicit"
                )));
            }
            set.insert((from, to));
        }
        Ok(Self { n, edges: set })
    }

    /// Complete digraph: every ordered pair of distinct vertices.
    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)));
        Self::new(n, edges)
    }

    /// Star where the hub (vertex 0) pushes to every leaf: edges `(0, k)`.
    pub fn star_broadcast(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|k| (0, k)))
    }

    /// Star where every leaf pushes into the hub (vertex 0): edges `(k, 0)`.
    pub fn star_gather(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|k| (k, 0)))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Edges in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Vertices `w` with an edge `(v, w)`, ascending.
    pub fn out_neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .range((v, 0)..=(v, self.n.saturating_sub(1)))
            .map(|&(_, w)| w)
            .collect()
    }

    /// Vertices `u` with an edge `(u, v)`, ascending.
    pub fn in_neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, w)| w == v)
            .map(|&(u, _)| u)
            .collect()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(_, w)| w == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_neighbors(v).len()
    }

    fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(from, to) in &self.edges {
            adj[from].push(to);
        }
        adj
    }

    fn reachable_from(&self, start: usize, adj: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// True iff every vertex reaches every other vertex along directed edges.
    pub fn is_strongly_connected(&self) -> bool {
        let adj = self.out_adjacency();
        if !self.reachable_from(0, &adj).iter().all(|&r| r) {
            return false;
        }
        let rev = self.reverse().out_adjacency();
        self.reachable_from(0, &rev).iter().all(|&r| r)
    }

    /// Vertices from which every other vertex is reachable (spanning-tree
    /// roots). May be empty.
    pub fn root_set(&self) -> BTreeSet<usize> {
        let adj = self.out_adjacency();
        (0..self.n)
            .filter(|&r| self.reachable_from(r, &adj).iter().all(|&x| x))
            .collect()
    }

    /// Graph with every edge flipped.
    pub fn reverse(&self) -> Self {
        Self {
            n: self.n,
            edges: self.edges.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    /// Breadth-first spanning tree rooted at `root`, lowest-index-first
    /// tie-breaking. Errors unless `root` reaches every vertex.
    pub fn spanning_tree_from_root(&self, root: usize) -> Result<Self> {
        if root >= self.n {
            return Err(Error::NotARoot(root));
        }
        let adj = self.out_adjacency();
        let mut seen = vec![false; self.n];
        let mut tree = BTreeSet::new();
        let mut queue = std::collections::VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    tree.insert((v, w));
                    queue.push_back(w);
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::NotARoot(root));
        }
        Ok(Self { n: self.n, edges: tree })
    }

    /// Strongly connected random digraph with exactly `m` edges: a random
    /// directed Hamiltonian cycle plus `m − n` distinct non-cycle edges.
    /// Deterministic for a fixed seed.
    pub fn random_strongly_connected(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
        }
        let max = n * (n - 1);
        if m < n || m > max {
            return Err(Error::InfeasibleEdgeCount { n, m, max });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        for i in 0..n {
            edges.insert((order[i], order[(i + 1) % n]));
        }
        let mut pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| a != b && !edges.contains(&(a, b)))
            .collect();
        pool.shuffle(&mut rng);
        edges.extend(pool.into_iter().take(m - n));
        Ok(Self { n, edges })
    }

    /// Writes the edge-list format: first line `n m`, then one `from to`
    /// line per edge in sorted order.
    pub fn write_edge_list(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.edges.len())?;
        for &(from, to) in &self.edges {
            writeln!(w, "{from} {to}")?;
        }
        Ok(())
    }

    /// Parses the edge-list format produced by [`write_edge_list`](Self::write_edge_list).
    pub fn read_edge_list(r: &mut impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))??;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), "vertex count")?;
        let m: usize = parse_field(it.next(), "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("graph file ended before all edges were read".into()))??;
            let mut it = line.split_whitespace();
            let from: usize = parse_field(it.next(), "edge source")?;
            let to: usize = parse_field(it.next(), "edge target")?;
            edges.push((from, to));
        }
        let g = Self::new(n, edges)?;
        if g.edge_count() != m {
            return Err(Error::Parse(format!(
                "header declares {m} edges but {} distinct edges were read",
                g.edge_count()
            )));
        }
        Ok(g)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("invalid {what}")))
}

/// Source of a time-varying graph sequence: a base topology whose edges are
/// activated independently each iteration, with optional leader-subnet
/// masking.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    base: DirectedGraph,
    activation_probability: f64,
    leader_set: BTreeSet<usize>,
    seed: u64,
}

impl GraphSequence {
    pub fn new(
        base: DirectedGraph,
        activation_probability: f64,
        leader_set: impl IntoIterator<Item = usize>,
        seed: u64,
    ) -> Result<Self> {
        if !(activation_probability > 0.0 && activation_probability <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "activation probability must lie in (0, 1], got {activation_probability}"
            )));
        }
        let leader_set: BTreeSet<usize> = leader_set.into_iter().collect();
        if let Some(&max) = leader_set.iter().max() {
            if max >= base.vertex_count() {
                return Err(Error::InvalidParameter(format!(
                    "leader {max} out of range for n={}",
                    base.vertex_count()
                )));
            }
        }
        if !leader_set.is_empty() {
            let leaders: Vec<usize> = leader_set.iter().copied().collect();
            let index_of = |v: usize| leaders.iter().position(|&l| l == v).unwrap();
            let sub_edges: Vec<(usize, usize)> = base
                .edges()
                .filter(|&(a, b)| leader_set.contains(&a) && leader_set.contains(&b))
                .map(|(a, b)| (index_of(a), index_of(b)))
                .collect();
            let sub = DirectedGraph::new(leaders.len(), sub_edges)?;
            if !sub.is_strongly_connected() {
                return Err(Error::InvalidParameter(
                    "leader-induced subgraph must be strongly connected".into(),
                ));
            }
        }
        Ok(Self {
            base,
            activation_probability,
            leader_set,
            seed,
        })
    }

    pub fn base(&self) -> &DirectedGraph {
        &self.base
    }

    pub fn leader_set(&self) -> &BTreeSet<usize> {
        &self.leader_set
    }

    pub fn activation_probability(&self) -> f64 {
        self.activation_probability
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Topology pair for iteration `k`: one activation sample of the base
    /// edges, then leader masking. The graph feeding the row-stochastic
    /// matrix drops follower→leader edges; the one feeding the
    /// column-stochastic matrix drops leader→follower edges. Deterministic
    /// for fixed `(seed, k)`.
    pub fn masked_graphs(&self, k: usize) -> (DirectedGraph, DirectedGraph) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        let n = self.base.vertex_count();
        let active: Vec<(usize, usize)> = self
            .base
            .edges()
            .filter(|_| rng.random::<f64>() < self.activation_probability)
            .collect();
        let is_leader = |v: usize| self.leader_set.contains(&v);
        let row_edges = active
            .iter()
            .copied()
            .filter(|&(from, to)| !(is_leader(to) && !is_leader(from)));
        let col_edges = active
            .iter()
            .copied()
            .filter(|&(from, to)| !(is_leader(from) && !is_leader(to)));
        let g_row = DirectedGraph::new(n, row_edges).expect("masked edges stay in range");
        let g_col = DirectedGraph::new(n, col_edges).expect("masked edges stay in range");
        (g_row, g_col)
    }
}
