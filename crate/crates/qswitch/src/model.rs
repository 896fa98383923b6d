//! Switch model: clients, memories, request classes, memory allocations,
//! link-level entanglement (LLE) outcomes and admissible service vectors.
//!
//! A switch with `M` quantum memories serves `N` clients in slotted time.
//! Each slot it assigns memories to clients, attempts one LLE per assigned
//! client (success probability `p_n`), and spends the successful LLEs to
//! serve queued end-to-end entanglement requests. A request class is a set
//! of clients that must all hold a live LLE in the same slot; each LLE can
//! be consumed by at most one request.
//!
//! Clients are 1-indexed in file formats and CLI output, 0-indexed here.

use crate::error::{Error, Result};
use rand::Rng;

/// Upper limit on the number of clients; sets are stored as `u64` bitmasks.
pub const MAX_CLIENTS: usize = 64;

/// Default cap on the number of admissible service vectors materialized (or
/// search nodes visited) per connectivity. Beyond this the operation fails
/// rather than silently truncating.
pub const DEFAULT_SERVICE_CAP: usize = 1 << 20;

/// A set of clients, stored as a bitmask (client `i` ↔ bit `i`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClientSet(u64);

impl ClientSet {
    pub const EMPTY: ClientSet = ClientSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ClientSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn from_clients(clients: &[usize]) -> Self {
        let mut s = ClientSet(0);
        for &c in clients {
            s.insert(c);
        }
        s
    }

    pub fn insert(&mut self, client: usize) {
        debug_assert!(client < MAX_CLIENTS);
        self.0 |= 1 << client;
    }

    pub fn contains(self, client: usize) -> bool {
        self.0 >> client & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: ClientSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: ClientSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: ClientSet) -> ClientSet {
        ClientSet(self.0 | other.0)
    }

    /// Iterates the member clients in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let c = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(c)
            }
        })
    }

    /// Member clients as 1-indexed ids, for file formats and display.
    pub fn to_one_indexed(self) -> Vec<usize> {
        self.iter().map(|c| c + 1).collect()
    }
}

/// Binary memory-assignment vector `m`: which clients hold a memory this slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemoryAllocation(ClientSet);

impl MemoryAllocation {
    pub fn new(clients: ClientSet) -> Self {
        MemoryAllocation(clients)
    }

    pub fn clients(self) -> ClientSet {
        self.0
    }
}

/// Binary connectivity vector `k`: allocated clients whose LLE attempt
/// succeeded this slot. Always a subset of the allocation it was drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Connectivity(ClientSet);

impl Connectivity {
    pub fn new(clients: ClientSet) -> Self {
        Connectivity(clients)
    }

    pub fn clients(self) -> ClientSet {
        self.0
    }
}

/// One point of the connectivity distribution under a fixed allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedOutcome {
    pub connectivity: Connectivity,
    pub probability: f64,
}

/// Static switch instance: client count, memory count, per-client LLE success
/// probabilities and the request classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchConfig {
    n_clients: usize,
    n_memories: usize,
    lle_success: Vec<f64>,
    request_classes: Vec<ClientSet>,
    service_cap: usize,
}

impl SwitchConfig {
    /// Builds and validates a configuration. `request_classes` are 0-indexed
    /// client sets; they are canonicalized (sorted, deduplicated members) and
    /// duplicate classes are rejected.
    pub fn new(
        n_clients: usize,
        n_memories: usize,
        lle_success: Vec<f64>,
        request_classes: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if n_clients == 0 || n_clients > MAX_CLIENTS {
            return Err(Error::Config(format!(
                "n_clients must be in 1..={MAX_CLIENTS}, got {n_clients}"
            )));
        }
        if n_memories == 0 || n_memories > n_clients {
            return Err(Error::Config(format!(
                "n_memories must be in 1..={n_clients}, got {n_memories}"
            )));
        }
        if lle_success.len() != n_clients {
            return Err(Error::Config(format!(
                "expected {} LLE success probabilities, got {}",
                n_clients,
                lle_success.len()
            )));
        }
        for (n, &p) in lle_success.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::Config(format!(
                    "LLE success probability of client {} must be in [0, 1], got {p}",
                    n + 1
                )));
            }
        }
        if request_classes.is_empty() {
            return Err(Error::Config("at least one request class required".into()));
        }
        let mut classes = Vec::with_capacity(request_classes.len());
        for (r, members) in request_classes.iter().enumerate() {
            let set = ClientSet::from_clients(members);
            if members.iter().any(|&c| c >= n_clients) {
                return Err(Error::Config(format!(
                    "request class {} names a client outside 1..={}",
                    r + 1,
                    n_clients
                )));
            }
            if set.len() < 2 {
                return Err(Error::Config(format!(
                    "request class {} must involve at least 2 distinct clients",
                    r + 1
                )));
            }
            if classes.contains(&set) {
                return Err(Error::Config(format!("request class {} is a duplicate", r + 1)));
            }
            classes.push(set);
        }
        Ok(SwitchConfig {
            n_clients,
            n_memories,
            lle_success,
            request_classes: classes,
            service_cap: DEFAULT_SERVICE_CAP,
        })
    }

    /// Overrides the admissible-service materialization cap.
    pub fn with_service_cap(mut self, cap: usize) -> Self {
        self.service_cap = cap;
        self
    }

    pub fn n_clients(&self) -> usize {
        self.n_clients
    }

    pub fn n_memories(&self) -> usize {
        self.n_memories
    }

    pub fn n_classes(&self) -> usize {
        self.request_classes.len()
    }

    pub fn lle_success(&self) -> &[f64] {
        &self.lle_success
    }

    pub fn class(&self, r: usize) -> ClientSet {
        self.request_classes[r]
    }

    pub fn classes(&self) -> &[ClientSet] {
        &self.request_classes
    }

    pub fn service_cap(&self) -> usize {
        self.service_cap
    }

    /// True when every request class involves exactly two clients.
    pub fn all_bipartite(&self) -> bool {
        self.request_classes.iter().all(|c| c.len() == 2)
    }

    /// Index of the class with exactly this client set, if registered.
    pub fn class_index(&self, set: ClientSet) -> Option<usize> {
        self.request_classes.iter().position(|&c| c == set)
    }
}

/// Per-class backlog of unserved requests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    pub backlog: Vec<u64>,
}

impl QueueState {
    pub fn zero(n_classes: usize) -> Self {
        QueueState { backlog: vec![0; n_classes] }
    }

    pub fn total(&self) -> u64 {
        self.backlog.iter().sum()
    }
}

/// Binary per-class arrival indicator for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalVector {
    pub arrivals: Vec<bool>,
}

impl ArrivalVector {
    pub fn none(n_classes: usize) -> Self {
        ArrivalVector { arrivals: vec![false; n_classes] }
    }
}

/// LLE assignment witness: row `r` lists the clients whose LLEs class `r`
/// consumes (its full client set when served, empty otherwise).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub rows: Vec<ClientSet>,
}

/// Binary per-class service indicator for one slot, optionally carrying the
/// LLE assignment witness it was validated with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceVector {
    served: Vec<bool>,
    witness: Option<Witness>,
}

impl ServiceVector {
    pub fn idle(n_classes: usize) -> Self {
        ServiceVector { served: vec![false; n_classes], witness: None }
    }

    pub fn new(served: Vec<bool>) -> Self {
        ServiceVector { served, witness: None }
    }

    /// Builds the vector serving exactly `classes`, with the canonical
    /// witness assigning each served class its own client set.
    pub fn from_served_classes(classes: &[usize], config: &SwitchConfig) -> Self {
        let mut served = vec![false; config.n_classes()];
        let mut rows = vec![ClientSet::EMPTY; config.n_classes()];
        for &r in classes {
            served[r] = true;
            rows[r] = config.class(r);
        }
        ServiceVector { served, witness: Some(Witness { rows }) }
    }

    pub fn served(&self) -> &[bool] {
        &self.served
    }

    pub fn is_served(&self, r: usize) -> bool {
        self.served[r]
    }

    pub fn served_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.served.iter().enumerate().filter(|(_, &s)| s).map(|(r, _)| r)
    }

    pub fn is_idle(&self) -> bool {
        self.served.iter().all(|&s| !s)
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.witness.as_ref()
    }

    /// Total queue weight `Σ_r Q_r b_r` of this vector.
    pub fn weight(&self, q: &QueueState) -> u64 {
        self.served_classes().map(|r| q.backlog[r]).sum()
    }

    /// Checks the witness against a connectivity: every served class's
    /// clients are fully assigned, no client's LLE is consumed twice, and
    /// nothing is assigned to a client without a live LLE.
    pub fn verify_witness(&self, k: Connectivity, config: &SwitchConfig) -> bool {
        let Some(witness) = &self.witness else { return false };
        if witness.rows.len() != self.served.len() || self.served.len() != config.n_classes() {
            return false;
        }
        let mut consumed = ClientSet::EMPTY;
        for (r, &served) in self.served.iter().enumerate() {
            let row = witness.rows[r];
            // "row covers the class" must hold exactly when the class is served.
            if config.class(r).is_subset_of(row) != served {
                return false;
            }
            if !row.is_subset_of(k.clients()) {
                return false;
            }
            if row.intersects(consumed) {
                return false;
            }
            consumed = consumed.union(row);
        }
        true
    }
}

/// All memory allocations, in lexicographic order of their sorted client
/// lists. With `full_only` exactly the C(N, M) allocations using every
/// memory; otherwise every allocation of at most M memories, grouped by
/// ascending memory count.
pub fn enumerate_allocations(config: &SwitchConfig, full_only: bool) -> Vec<MemoryAllocation> {
    let n = config.n_clients();
    let m = config.n_memories();
    let mut out = Vec::new();
    if full_only {
        push_combinations(n, m, &mut out);
    } else {
        for size in 0..=m {
            push_combinations(n, size, &mut out);
        }
    }
    out
}

fn push_combinations(n: usize, size: usize, out: &mut Vec<MemoryAllocation>) {
    let mut current = ClientSet::EMPTY;
    fn rec(n: usize, size: usize, start: usize, current: &mut ClientSet, out: &mut Vec<MemoryAllocation>) {
        if current.len() == size {
            out.push(MemoryAllocation::new(*current));
            return;
        }
        let remaining = size - current.len();
        for c in start..=n.saturating_sub(remaining) {
            current.insert(c);
            rec(n, size, c + 1, current, out);
            *current = ClientSet::from_bits(current.bits() & !(1 << c));
        }
    }
    rec(n, size, 0, &mut current, out);
}

/// Exact distribution of the connectivity under allocation `m`: every
/// `k ⊆ m` with probability `Π p_n^{k_n} (1-p_n)^{1-k_n}` over the allocated
/// clients. Outcomes of probability zero (clients with `p ∈ {0, 1}`) are
/// pruned, so the support has `2^u` points where `u` counts allocated
/// clients with `0 < p < 1`.
pub fn connectivity_support(m: MemoryAllocation, config: &SwitchConfig) -> Vec<WeightedOutcome> {
    let mut certain = ClientSet::EMPTY;
    let mut uncertain = Vec::new();
    for c in m.clients().iter() {
        let p = config.lle_success()[c];
        if p == 1.0 {
            certain.insert(c);
        } else if p > 0.0 {
            uncertain.push((c, p));
        }
    }
    let u = uncertain.len();
    let mut out = Vec::with_capacity(1 << u);
    for pattern in 0u64..(1 << u) {
        let mut k = certain;
        let mut prob = 1.0;
        for (i, &(c, p)) in uncertain.iter().enumerate() {
            if pattern >> i & 1 == 1 {
                k.insert(c);
                prob *= p;
            } else {
                prob *= 1.0 - p;
            }
        }
        out.push(WeightedOutcome { connectivity: Connectivity::new(k), probability: prob });
    }
    out
}

/// Draws one connectivity: an independent Bernoulli(p_n) trial per allocated
/// client, in ascending client order.
pub fn sample_connectivity<R: Rng + ?Sized>(
    m: MemoryAllocation,
    config: &SwitchConfig,
    rng: &mut R,
) -> Connectivity {
    let mut k = ClientSet::EMPTY;
    for c in m.clients().iter() {
        if rng.gen::<f64>() < config.lle_success()[c] {
            k.insert(c);
        }
    }
    Connectivity::new(k)
}

/// Every admissible service vector under connectivity `k`: each served class
/// must have all its clients live and no two served classes may share a
/// client. Vectors come in ascending lexicographic order (the idle vector
/// first) and each carries its witness. Fails once the set would exceed the
/// config's service cap.
pub fn admissible_services(k: Connectivity, config: &SwitchConfig) -> Result<Vec<ServiceVector>> {
    let live = k.clients();
    let feasible: Vec<(usize, ClientSet)> = (0..config.n_classes())
        .map(|r| (r, config.class(r)))
        .filter(|(_, set)| set.is_subset_of(live))
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    collect_services(config, &feasible, 0, ClientSet::EMPTY, &mut chosen, &mut out)?;
    Ok(out)
}

fn collect_services(
    config: &SwitchConfig,
    feasible: &[(usize, ClientSet)],
    idx: usize,
    used: ClientSet,
    chosen: &mut Vec<usize>,
    out: &mut Vec<ServiceVector>,
) -> Result<()> {
    if idx == feasible.len() {
        if out.len() >= config.service_cap() {
            return Err(Error::ServiceCapExceeded { cap: config.service_cap() });
        }
        out.push(ServiceVector::from_served_classes(chosen, config));
        return Ok(());
    }
    let (r, set) = feasible[idx];
    collect_services(config, feasible, idx + 1, used, chosen, out)?;
    if !set.intersects(used) {
        chosen.push(r);
        collect_services(config, feasible, idx + 1, used.union(set), chosen, out)?;
        chosen.pop();
    }
    Ok(())
}

/// One queue recursion step: `Q' = max(Q - b, 0) + A`, componentwise.
pub fn queue_step(q: &QueueState, b: &ServiceVector, a: &ArrivalVector) -> QueueState {
    assert_eq!(q.backlog.len(), b.served().len());
    assert_eq!(q.backlog.len(), a.arrivals.len());
    let backlog = q
        .backlog
        .iter()
        .zip(b.served())
        .zip(&a.arrivals)
        .map(|((&q, &b), &a)| q.saturating_sub(b as u64) + a as u64)
        .collect();
    QueueState { backlog }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pairs_config(n: usize, m: usize, p: f64, classes: &[&[usize]]) -> SwitchConfig {
        SwitchConfig::new(n, m, vec![p; n], classes.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        assert!(SwitchConfig::new(0, 1, vec![], vec![vec![0, 1]]).is_err());
        assert!(SwitchConfig::new(3, 4, vec![0.9; 3], vec![vec![0, 1]]).is_err());
        assert!(SwitchConfig::new(3, 2, vec![0.9; 2], vec![vec![0, 1]]).is_err());
        assert!(SwitchConfig::new(3, 2, vec![0.9, 1.5, 0.9], vec![vec![0, 1]]).is_err());
        // singleton class
        assert!(SwitchConfig::new(3, 2, vec![0.9; 3], vec![vec![1]]).is_err());
        // duplicate class (order-insensitive)
        assert!(SwitchConfig::new(3, 2, vec![0.9; 3], vec![vec![0, 1], vec![1, 0]]).is_err());
        // out-of-range client
        assert!(SwitchConfig::new(3, 2, vec![0.9; 3], vec![vec![0, 3]]).is_err());
        assert!(SwitchConfig::new(3, 2, vec![0.9; 3], vec![]).is_err());
    }

    #[test]
    fn allocation_counts_match_binomials() {
        // C(6,3) = 20
        let c = pairs_config(6, 3, 0.9, &[&[0, 1]]);
        assert_eq!(enumerate_allocations(&c, true).len(), 20);
        // C(16,8) = 12,870
        let c = SwitchConfig::new(16, 8, vec![0.9; 16], vec![vec![0, 1]]).unwrap();
        assert_eq!(enumerate_allocations(&c, true).len(), 12_870);
        // M = N forces the all-ones allocation
        let c = pairs_config(3, 3, 0.9, &[&[0, 1]]);
        let all = enumerate_allocations(&c, true);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].clients().len(), 3);
    }

    #[test]
    fn allocations_are_lexicographic_and_distinct() {
        let c = pairs_config(5, 2, 0.9, &[&[0, 1]]);
        let full = enumerate_allocations(&c, true);
        assert_eq!(full.len(), 10);
        assert_eq!(full[0].clients().to_one_indexed(), vec![1, 2]);
        assert_eq!(full[1].clients().to_one_indexed(), vec![1, 3]);
        assert_eq!(full[9].clients().to_one_indexed(), vec![4, 5]);
        let lists: Vec<Vec<usize>> = full.iter().map(|m| m.clients().to_one_indexed()).collect();
        let mut sorted = lists.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(lists, sorted);

        // sum over j<=M of C(5,j) = 1 + 5 + 10 = 16
        let partial = enumerate_allocations(&c, false);
        assert_eq!(partial.len(), 16);
        assert!(partial[0].clients().is_empty());
    }

    #[test]
    fn connectivity_support_two_clients() {
        let c = pairs_config(3, 2, 0.9, &[&[0, 1]]);
        let m = MemoryAllocation::new(ClientSet::from_clients(&[0, 1]));
        let support = connectivity_support(m, &c);
        assert_eq!(support.len(), 4);
        let prob_of = |clients: &[usize]| {
            let want = ClientSet::from_clients(clients);
            support
                .iter()
                .find(|o| o.connectivity.clients() == want)
                .map(|o| o.probability)
                .unwrap()
        };
        assert!((prob_of(&[0, 1]) - 0.81).abs() < 1e-12);
        assert!((prob_of(&[0]) - 0.09).abs() < 1e-12);
        assert!((prob_of(&[1]) - 0.09).abs() < 1e-12);
        assert!((prob_of(&[]) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn connectivity_support_degenerate_probabilities() {
        let c = pairs_config(3, 3, 1.0, &[&[0, 1]]);
        let m = MemoryAllocation::new(ClientSet::from_clients(&[0, 1, 2]));
        let support = connectivity_support(m, &c);
        assert_eq!(support.len(), 1);
        assert_eq!(support[0].connectivity.clients(), m.clients());
        assert_eq!(support[0].probability, 1.0);

        let zero = MemoryAllocation::new(ClientSet::EMPTY);
        let support = connectivity_support(zero, &c);
        assert_eq!(support.len(), 1);
        assert!(support[0].connectivity.clients().is_empty());

        // p = 0 prunes to the all-fail outcome
        let c = pairs_config(2, 2, 0.0, &[&[0, 1]]);
        let m = MemoryAllocation::new(ClientSet::from_clients(&[0, 1]));
        let support = connectivity_support(m, &c);
        assert_eq!(support.len(), 1);
        assert!(support[0].connectivity.clients().is_empty());
        assert_eq!(support[0].probability, 1.0);
    }

    #[test]
    fn sampling_respects_degenerate_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ones = pairs_config(3, 3, 1.0, &[&[0, 1]]);
        let m = MemoryAllocation::new(ClientSet::from_clients(&[0, 2]));
        for _ in 0..50 {
            assert_eq!(sample_connectivity(m, &ones, &mut rng).clients(), m.clients());
        }
        let zeros = pairs_config(3, 3, 0.0, &[&[0, 1]]);
        for _ in 0..50 {
            assert!(sample_connectivity(m, &zeros, &mut rng).clients().is_empty());
        }
    }

    #[test]
    fn sampling_matches_support_within_3_sigma() {
        let c = SwitchConfig::new(2, 2, vec![0.9, 0.6], vec![vec![0, 1]]).unwrap();
        let m = MemoryAllocation::new(ClientSet::from_clients(&[0, 1]));
        let support = connectivity_support(m, &c);
        let trials = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..trials {
            let k = sample_connectivity(m, &c, &mut rng);
            *counts.entry(k.clients().bits()).or_insert(0usize) += 1;
        }
        for o in &support {
            let seen = *counts.get(&o.connectivity.clients().bits()).unwrap_or(&0) as f64;
            let expect = o.probability * trials as f64;
            let sigma = (trials as f64 * o.probability * (1.0 - o.probability)).sqrt();
            assert!(
                (seen - expect).abs() <= 3.0 * sigma,
                "outcome {:b}: saw {seen}, expected {expect} ± {sigma}",
                o.connectivity.clients().bits()
            );
        }
    }

    #[test]
    fn admissible_services_zero_connectivity() {
        let c = pairs_config(3, 2, 0.9, &[&[0, 1], &[1, 2]]);
        let out = admissible_services(Connectivity::new(ClientSet::EMPTY), &c).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].is_idle());
        assert!(out[0].verify_witness(Connectivity::new(ClientSet::EMPTY), &c));
    }

    #[test]
    fn admissible_services_disjointness() {
        // clients 1..4 (1-indexed), k = {1,2,3}; classes {1,4}, {1,2}, {2,3}
        let c = pairs_config(4, 3, 0.9, &[&[0, 3], &[0, 1], &[1, 2]]);
        let k = Connectivity::new(ClientSet::from_clients(&[0, 1, 2]));
        let out = admissible_services(k, &c).unwrap();
        let served: Vec<Vec<bool>> = out.iter().map(|s| s.served().to_vec()).collect();
        assert!(served.contains(&vec![false, false, false]));
        assert!(served.contains(&vec![false, true, false]));
        assert!(served.contains(&vec![false, false, true]));
        assert_eq!(served.len(), 3, "class 1 needs client 4; classes 2,3 share client 2");
        for s in &out {
            assert!(s.verify_witness(k, &c));
        }
    }

    #[test]
    fn admissible_services_exact_pair_only() {
        let c = pairs_config(4, 2, 0.9, &[&[0, 1], &[0, 2], &[2, 3]]);
        let k = Connectivity::new(ClientSet::from_clients(&[2, 3]));
        let out = admissible_services(k, &c).unwrap();
        let nonzero: Vec<_> = out.iter().filter(|s| !s.is_idle()).collect();
        assert_eq!(nonzero.len(), 1);
        assert!(nonzero[0].is_served(2));
    }

    #[test]
    fn admissible_services_ordering_is_lexicographic() {
        let c = pairs_config(4, 4, 1.0, &[&[0, 1], &[2, 3]]);
        let k = Connectivity::new(ClientSet::from_clients(&[0, 1, 2, 3]));
        let out = admissible_services(k, &c).unwrap();
        let served: Vec<Vec<bool>> = out.iter().map(|s| s.served().to_vec()).collect();
        assert_eq!(
            served,
            vec![
                vec![false, false],
                vec![false, true],
                vec![true, false],
                vec![true, true],
            ]
        );
    }

    #[test]
    fn service_cap_is_enforced() {
        let c = pairs_config(8, 8, 1.0, &[&[0, 1], &[2, 3], &[4, 5], &[6, 7]]).with_service_cap(3);
        let k = Connectivity::new(ClientSet::from_clients(&[0, 1, 2, 3, 4, 5, 6, 7]));
        match admissible_services(k, &c) {
            Err(Error::ServiceCapExceeded { cap: 3 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn queue_step_examples() {
        let c = pairs_config(3, 2, 0.9, &[&[0, 1], &[1, 2]]);
        let q = QueueState { backlog: vec![2, 0] };
        let b = ServiceVector::from_served_classes(&[0, 1], &c);
        let a = ArrivalVector { arrivals: vec![false, true] };
        assert_eq!(queue_step(&q, &b, &a).backlog, vec![1, 1]);

        let q = QueueState::zero(2);
        let b = ServiceVector::idle(2);
        let a = ArrivalVector::none(2);
        assert_eq!(queue_step(&q, &b, &a).backlog, vec![0, 0]);

        let q = QueueState { backlog: vec![5, 0] };
        let b = ServiceVector::from_served_classes(&[0], &c);
        let a = ArrivalVector { arrivals: vec![true, false] };
        assert_eq!(queue_step(&q, &b, &a).backlog, vec![5, 0]);
    }

    #[test]
    fn witness_rejects_tampering() {
        let c = pairs_config(4, 4, 1.0, &[&[0, 1], &[1, 2]]);
        let k = Connectivity::new(ClientSet::from_clients(&[0, 1, 2]));
        // both classes share client 2 (1-indexed), so serving both is invalid
        let both = ServiceVector::from_served_classes(&[0, 1], &c);
        assert!(!both.verify_witness(k, &c));
        // witness must stay inside the live set
        let one = ServiceVector::from_served_classes(&[0], &c);
        assert!(one.verify_witness(k, &c));
        assert!(!one.verify_witness(Connectivity::new(ClientSet::from_clients(&[0])), &c));
        // a vector without witness never validates
        assert!(!ServiceVector::new(vec![true, false]).verify_witness(k, &c));
    }
}
