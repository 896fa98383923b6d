//! Exact weighted-matching machinery.
//!
//! Service selection under a fixed connectivity is a max-weight matching in
//! a hypergraph whose hyperedges are the request classes; the bipartite
//! special case reduces to classical max-weight matching, and the
//! memory-capped variant is solved by augmenting the graph with virtual
//! vertices and solving unconstrained.
//!
//! All weights are integer queue backlogs and all arithmetic is exact.
//! Every optimizer breaks ties identically: fewest edges first, then the
//! lexicographically smallest sorted edge list (for service vectors, the
//! lexicographically smallest binary vector). That makes runs reproducible
//! and lets independent oracles compare results for equality.

use crate::error::{Error, Result};
use crate::model::{
    connectivity_support, ClientSet, Connectivity, MemoryAllocation, QueueState, ServiceVector,
    SwitchConfig,
};

/// Subset-DP limit; tables are O(2^n), so anything larger needs a different
/// algorithm entirely.
pub const MAX_DP_VERTICES: usize = 22;

/// Limit for the exhaustive matching oracle.
const MAX_BRUTE_FORCE_VERTICES: usize = 12;

/// Complete graph with nonnegative integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<u64>,
}

impl WeightedGraph {
    /// A graph on `n` vertices with all weights zero.
    pub fn new(n: usize) -> Self {
        WeightedGraph { n, weights: vec![0; n * n] }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: u64) {
        assert!(i != j && i < self.n && j < self.n, "edge must join two distinct vertices");
        self.weights[i * self.n + j] = w;
        self.weights[j * self.n + i] = w;
    }

    pub fn weight(&self, i: usize, j: usize) -> u64 {
        self.weights[i * self.n + j]
    }

    fn total_weight(&self) -> u64 {
        let mut sum = 0u64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                sum += self.weight(i, j);
            }
        }
        sum
    }
}

/// A set of vertex-disjoint edges with its total weight. Edges are stored
/// sorted, each as `(low, high)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub edges: Vec<(usize, usize)>,
    pub total_weight: u64,
}

impl Matching {
    pub fn empty() -> Self {
        Matching { edges: Vec::new(), total_weight: 0 }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Vertices covered by the matching.
    pub fn covered(&self) -> ClientSet {
        let mut s = ClientSet::EMPTY;
        for &(i, j) in &self.edges {
            s.insert(i);
            s.insert(j);
        }
        s
    }
}

/// Ranks candidate matchings: higher weight wins, then fewer edges, then the
/// lexicographically smaller sorted edge list.
fn better(candidate: &Matching, incumbent: &Matching) -> bool {
    (candidate.total_weight, std::cmp::Reverse(candidate.n_edges()), std::cmp::Reverse(&candidate.edges))
        > (incumbent.total_weight, std::cmp::Reverse(incumbent.n_edges()), std::cmp::Reverse(&incumbent.edges))
}

/// Maximum-weight matching, exact, by dynamic programming over vertex
/// subsets. Deterministic tie-break as described in the module docs.
pub fn max_weight_matching(g: &WeightedGraph) -> Matching {
    let n = g.n_vertices();
    assert!(
        n <= MAX_DP_VERTICES,
        "max_weight_matching supports at most {MAX_DP_VERTICES} vertices, got {n}"
    );
    if n < 2 {
        return Matching::empty();
    }
    let size = 1usize << n;
    // best[s]: max weight of a matching inside subset s
    // count[s]: min edge count among weight-optimal matchings of s
    let mut best = vec![0u64; size];
    let mut count = vec![0u32; size];
    for s in 1..size {
        let v = s.trailing_zeros() as usize;
        let without_v = s & !(1 << v);
        let mut b = best[without_v];
        let mut c = count[without_v];
        let mut rest = without_v;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let sub = without_v & !(1 << u);
            let w = g.weight(v, u) + best[sub];
            let k = 1 + count[sub];
            if w > b || (w == b && k < c) {
                b = w;
                c = k;
            }
        }
        best[s] = b;
        count[s] = c;
    }

    // Reconstruct the (count, lex)-minimal optimum: at each step the lowest
    // live vertex is matched to the smallest partner that preserves
    // optimality, or skipped when no partner does.
    let mut edges = Vec::new();
    let mut s = size - 1;
    while s != 0 {
        let v = s.trailing_zeros() as usize;
        let without_v = s & !(1 << v);
        let mut matched = false;
        let mut rest = without_v;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let sub = without_v & !(1 << u);
            if g.weight(v, u) + best[sub] == best[s] && 1 + count[sub] == count[s] {
                edges.push((v, u));
                s = sub;
                matched = true;
                break;
            }
        }
        if !matched {
            s = without_v;
        }
    }
    let total_weight = edges.iter().map(|&(i, j)| g.weight(i, j)).sum();
    Matching { edges, total_weight }
}

/// Maximum-weight matching using at most `max_edges` edges.
///
/// Realized by augmentation: `n - 2·max_edges` virtual vertices join the
/// graph, adjacent to every real vertex with a surrogate weight exceeding
/// any real matching's total. Every optimum then matches all virtual
/// vertices, which soaks up exactly the vertices a capped matching must
/// leave uncovered; stripping the virtual edges yields the capped optimum.
pub fn capped_matching(g: &WeightedGraph, max_edges: usize) -> Matching {
    assert!(max_edges >= 1, "edge cap must be at least 1");
    let n = g.n_vertices();
    if n <= 2 * max_edges {
        // cap is vacuous
        return max_weight_matching(g);
    }
    let virtuals = n - 2 * max_edges;
    let total = g.total_weight();
    let surrogate = 1 + total;
    // DP sums must stay exact: virtuals·surrogate + total < 2^64.
    assert!(
        (virtuals as u128 + 1) * surrogate as u128 + total as u128 <= u64::MAX as u128,
        "edge weights too large for exact capped matching"
    );
    let mut aug = WeightedGraph::new(n + virtuals);
    for i in 0..n {
        for j in i + 1..n {
            aug.set_weight(i, j, g.weight(i, j));
        }
        for v in n..n + virtuals {
            aug.set_weight(i, v, surrogate);
        }
    }
    let solved = max_weight_matching(&aug);
    let edges: Vec<(usize, usize)> = solved.edges.into_iter().filter(|&(i, j)| i < n && j < n).collect();
    let total_weight = edges.iter().map(|&(i, j)| g.weight(i, j)).sum();
    debug_assert!(edges.len() <= max_edges);
    Matching { edges, total_weight }
}

/// Exhaustive matching oracle: enumerates every matching (optionally only
/// those within an edge cap) and keeps the best under the shared tie-break.
/// Intentionally independent of the DP path.
pub fn brute_force_matching(g: &WeightedGraph, max_edges: Option<usize>) -> Result<Matching> {
    let n = g.n_vertices();
    if n > MAX_BRUTE_FORCE_VERTICES {
        return Err(Error::GraphTooLarge {
            context: "brute_force_matching",
            vertices: n,
            max: MAX_BRUTE_FORCE_VERTICES,
        });
    }
    let mut best = Matching::empty();
    let mut current = Vec::new();
    fn explore(
        g: &WeightedGraph,
        free: u64,
        weight: u64,
        current: &mut Vec<(usize, usize)>,
        max_edges: Option<usize>,
        best: &mut Matching,
    ) {
        let candidate = Matching { edges: current.clone(), total_weight: weight };
        if better(&candidate, best) {
            *best = candidate;
        }
        if free == 0 || max_edges.is_some_and(|cap| current.len() >= cap) {
            return;
        }
        let v = free.trailing_zeros() as usize;
        let rest = free & !(1 << v);
        // v unmatched
        explore(g, rest, weight, current, max_edges, best);
        // v matched to each later partner
        let mut partners = rest;
        while partners != 0 {
            let u = partners.trailing_zeros() as usize;
            partners &= partners - 1;
            current.push((v, u));
            explore(g, rest & !(1 << u), weight + g.weight(v, u), current, max_edges, best);
            current.pop();
        }
    }
    if n > 0 {
        explore(g, (1u64 << n) - 1, 0, &mut current, max_edges, &mut best);
    }
    Ok(best)
}

/// Max-weight admissible service under connectivity `k`: a vector attaining
/// `max_b Σ_r Q_r b_r` with the lexicographically smallest `b` among the
/// optima, plus the attained weight.
///
/// Depth-first branch and bound over the classes feasible under `k`,
/// pruning branches whose optimistic remainder cannot beat the incumbent.
/// Node visits count against the config's service cap.
pub fn max_weight_service(
    k: Connectivity,
    q: &QueueState,
    config: &SwitchConfig,
) -> Result<(ServiceVector, u64)> {
    assert_eq!(q.backlog.len(), config.n_classes());
    let live = k.clients();
    // Classes with zero backlog never appear in the lex-smallest optimum.
    let feasible: Vec<(usize, ClientSet, u64)> = (0..config.n_classes())
        .filter_map(|r| {
            let set = config.class(r);
            (q.backlog[r] > 0 && set.is_subset_of(live)).then_some((r, set, q.backlog[r]))
        })
        .collect();
    let mut remaining = vec![0u64; feasible.len() + 1];
    for i in (0..feasible.len()).rev() {
        remaining[i] = remaining[i + 1] + feasible[i].2;
    }

    struct Search<'a> {
        feasible: &'a [(usize, ClientSet, u64)],
        remaining: &'a [u64],
        best: Vec<usize>,
        best_weight: u64,
        chosen: Vec<usize>,
        nodes: usize,
        cap: usize,
    }
    impl Search<'_> {
        fn dfs(&mut self, idx: usize, used: ClientSet, weight: u64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::ServiceCapExceeded { cap: self.cap });
            }
            if idx == self.feasible.len() {
                if weight > self.best_weight {
                    self.best_weight = weight;
                    self.best = self.chosen.clone();
                }
                return Ok(());
            }
            // The incumbent starts as the idle vector (the lex-first leaf),
            // so pruning anything that cannot strictly beat it keeps the
            // first (and therefore lex-smallest) optimum.
            if weight + self.remaining[idx] <= self.best_weight {
                return Ok(());
            }
            // skip first: visit order is lexicographic
            self.dfs(idx + 1, used, weight)?;
            let (r, set, w) = self.feasible[idx];
            if !set.intersects(used) {
                self.chosen.push(r);
                self.dfs(idx + 1, used.union(set), weight + w)?;
                self.chosen.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        feasible: &feasible,
        remaining: &remaining,
        best: Vec::new(),
        best_weight: 0,
        chosen: Vec::new(),
        nodes: 0,
        cap: config.service_cap(),
    };
    search.dfs(0, ClientSet::EMPTY, 0)?;
    let vector = ServiceVector::from_served_classes(&search.best, config);
    Ok((vector, search.best_weight))
}

/// Connectivity-averaged service of the max-weight rule under allocation
/// `m`: `μ_r = Σ_k ℙ(k; m) · w_r(k, Q)`, one entry per class, each in [0, 1].
pub fn expected_service(
    m: MemoryAllocation,
    q: &QueueState,
    config: &SwitchConfig,
) -> Result<Vec<f64>> {
    let mut mu = vec![0.0; config.n_classes()];
    for outcome in connectivity_support(m, config) {
        let (vector, _) = max_weight_service(outcome.connectivity, q, config)?;
        for r in vector.served_classes() {
            mu[r] += outcome.probability;
        }
    }
    Ok(mu)
}
