//! Scheduling policies.
//!
//! MEW picks, every slot, the memory allocation maximizing the expected
//! queue-weighted service `Σ_r Q_r μ_r(m, Q)`, realizes the LLEs, then
//! serves the max-weight admissible vector under the realized connectivity.
//! The l-approximate variant restricts the allocation search to `l`
//! allocations sampled fresh each slot. MEW2, valid for bipartite classes,
//! even memory count and certain LLE success, replaces the allocation
//! search with one capped max-weight matching on the complete client graph
//! and serves exactly the matched pairs.

use crate::error::{Error, Result};
use crate::matching::{capped_matching, max_weight_service, WeightedGraph};
use crate::model::{
    connectivity_support, enumerate_allocations, queue_step, sample_connectivity, ArrivalVector,
    Connectivity, MemoryAllocation, QueueState, ServiceVector, SwitchConfig,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Mew,
    Mew2,
    ApproxMew,
}

/// Which policy to run, with the search budget `l` for the approximate
/// variant and the seed feeding the policy's random choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx_budget: Option<usize>,
    /// Approximate MEW only: keep the previous slot's allocation in the
    /// candidate set alongside the fresh samples. Off by default; the
    /// stateless variant resamples from scratch every slot.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub carry_over: bool,
    #[serde(default)]
    pub rng_seed: u64,
}

impl PolicySpec {
    pub fn mew() -> Self {
        PolicySpec { kind: PolicyKind::Mew, approx_budget: None, carry_over: false, rng_seed: 0 }
    }

    pub fn mew2() -> Self {
        PolicySpec { kind: PolicyKind::Mew2, approx_budget: None, carry_over: false, rng_seed: 0 }
    }

    pub fn approx_mew(budget: usize) -> Self {
        PolicySpec {
            kind: PolicyKind::ApproxMew,
            approx_budget: Some(budget),
            carry_over: false,
            rng_seed: 0,
        }
    }

    /// Short label for file names and chart legends.
    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::Mew => "mew".into(),
            PolicyKind::Mew2 => "mew2".into(),
            PolicyKind::ApproxMew => format!("approx{}", self.approx_budget.unwrap_or(0)),
        }
    }
}

/// Everything a policy decided in one slot.
#[derive(Debug, Clone)]
pub struct SlotDecision {
    pub allocation: MemoryAllocation,
    pub connectivity: Connectivity,
    pub service: ServiceVector,
    /// The allocation-step objective `Σ_r Q_r μ_r` attained by `allocation`.
    pub objective: f64,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// Validates a policy spec against a config: budget presence and range for
/// the approximate variant, and the MEW2 regime (bipartite classes, even
/// memory count, certain LLE success).
pub fn validate_policy(config: &SwitchConfig, spec: &PolicySpec) -> Result<()> {
    match spec.kind {
        PolicyKind::ApproxMew => {
            let Some(l) = spec.approx_budget else {
                return Err(Error::PolicyPrecondition(
                    "approximate MEW needs an allocation budget".into(),
                ));
            };
            let max = binomial(config.n_clients(), config.n_memories());
            if l < 1 || l > max {
                return Err(Error::PolicyPrecondition(format!(
                    "allocation budget {l} outside 1..={max}"
                )));
            }
        }
        PolicyKind::Mew | PolicyKind::Mew2 => {
            if spec.approx_budget.is_some() {
                return Err(Error::PolicyPrecondition(
                    "allocation budget only applies to approximate MEW".into(),
                ));
            }
            if spec.carry_over {
                return Err(Error::PolicyPrecondition(
                    "carry_over only applies to approximate MEW".into(),
                ));
            }
            if spec.kind == PolicyKind::Mew2 {
                validate_mew2(config)?;
            }
        }
    }
    Ok(())
}

fn validate_mew2(config: &SwitchConfig) -> Result<()> {
    if !config.all_bipartite() {
        return Err(Error::PolicyPrecondition(
            "MEW2 requires every request class to be bipartite".into(),
        ));
    }
    if config.n_memories() % 2 != 0 {
        return Err(Error::PolicyPrecondition(format!(
            "MEW2 requires an even number of memories, got {}",
            config.n_memories()
        )));
    }
    if config.lle_success().iter().any(|&p| p != 1.0) {
        return Err(Error::PolicyPrecondition(
            "MEW2 requires every LLE attempt to succeed (p = 1)".into(),
        ));
    }
    Ok(())
}

/// `Σ_k ℙ(k; m) · w(k, Q)` for one allocation, memoizing the max-weight
/// value per connectivity: distinct allocations share many connectivities.
fn expected_weight(
    m: MemoryAllocation,
    q: &QueueState,
    config: &SwitchConfig,
    memo: &mut HashMap<u64, u64>,
) -> Result<f64> {
    let mut objective = 0.0;
    for outcome in connectivity_support(m, config) {
        let bits = outcome.connectivity.clients().bits();
        let weight = match memo.get(&bits) {
            Some(&w) => w,
            None => {
                let (_, w) = max_weight_service(outcome.connectivity, q, config)?;
                memo.insert(bits, w);
                w
            }
        };
        objective += outcome.probability * weight as f64;
    }
    Ok(objective)
}

fn argmax_allocation(
    allocations: &[MemoryAllocation],
    q: &QueueState,
    config: &SwitchConfig,
) -> Result<(MemoryAllocation, f64)> {
    let mut memo = HashMap::new();
    let mut best = allocations[0];
    let mut best_objective = expected_weight(best, q, config, &mut memo)?;
    for &m in &allocations[1..] {
        let objective = expected_weight(m, q, config, &mut memo)?;
        if objective > best_objective {
            best = m;
            best_objective = objective;
        }
    }
    Ok((best, best_objective))
}

/// MEW allocation step: the full-allocation argmax of `Σ_r Q_r μ_r(m, Q)`,
/// ties resolved to the lexicographically first allocation.
pub fn mew_allocate(q: &QueueState, config: &SwitchConfig) -> Result<(MemoryAllocation, f64)> {
    let allocations = enumerate_allocations(config, true);
    argmax_allocation(&allocations, q, config)
}

/// The same argmax restricted to `l` allocations sampled uniformly without
/// replacement, fresh on every call.
pub fn approx_mew_allocate<R: Rng + ?Sized>(
    q: &QueueState,
    config: &SwitchConfig,
    l: usize,
    rng: &mut R,
) -> Result<(MemoryAllocation, f64)> {
    approx_allocate_inner(q, config, l, rng, None)
}

fn approx_allocate_inner<R: Rng + ?Sized>(
    q: &QueueState,
    config: &SwitchConfig,
    l: usize,
    rng: &mut R,
    carry: Option<MemoryAllocation>,
) -> Result<(MemoryAllocation, f64)> {
    let allocations = enumerate_allocations(config, true);
    if l < 1 || l > allocations.len() {
        return Err(Error::PolicyPrecondition(format!(
            "allocation budget {l} outside 1..={}",
            allocations.len()
        )));
    }
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, allocations.len(), l).into_vec();
    picked.sort_unstable();
    let mut sampled: Vec<MemoryAllocation> = picked.into_iter().map(|i| allocations[i]).collect();
    if let Some(m) = carry {
        if !sampled.contains(&m) {
            sampled.push(m);
        }
    }
    argmax_allocation(&sampled, q, config)
}

/// One MEW (or approximate-MEW) slot: allocate, realize LLEs, serve the
/// max-weight admissible vector, update queues.
pub fn mew_step<R: Rng + ?Sized>(
    q: &QueueState,
    a: &ArrivalVector,
    config: &SwitchConfig,
    spec: &PolicySpec,
    rng: &mut R,
) -> Result<(SlotDecision, QueueState)> {
    let (allocation, objective) = match spec.kind {
        PolicyKind::Mew => mew_allocate(q, config)?,
        PolicyKind::ApproxMew => {
            let l = spec.approx_budget.ok_or_else(|| {
                Error::PolicyPrecondition("approximate MEW needs an allocation budget".into())
            })?;
            approx_mew_allocate(q, config, l, rng)?
        }
        PolicyKind::Mew2 => {
            return Err(Error::PolicyPrecondition(
                "mew_step drives MEW or approximate MEW; use mew2_step".into(),
            ))
        }
    };
    let connectivity = sample_connectivity(allocation, config, rng);
    let (service, _) = max_weight_service(connectivity, q, config)?;
    let next = queue_step(q, &service, a);
    Ok((SlotDecision { allocation, connectivity, service, objective }, next))
}

/// One MEW2 slot: a max-weight matching with at most M/2 edges on the
/// complete client graph (edge weights are the backlogs of the registered
/// pair classes), memories to exactly the matched clients, service equal to
/// the matching.
pub fn mew2_step<R: Rng + ?Sized>(
    q: &QueueState,
    a: &ArrivalVector,
    config: &SwitchConfig,
    _rng: &mut R,
) -> Result<(SlotDecision, QueueState)> {
    validate_mew2(config)?;
    let n = config.n_clients();
    // the capped matching augments to 2n - M vertices
    let augmented = if n > config.n_memories() { 2 * n - config.n_memories() } else { n };
    if augmented > crate::matching::MAX_DP_VERTICES {
        return Err(Error::GraphTooLarge {
            context: "mew2_step capped matching",
            vertices: augmented,
            max: crate::matching::MAX_DP_VERTICES,
        });
    }
    let mut graph = WeightedGraph::new(n);
    let mut class_of_pair: HashMap<(usize, usize), usize> = HashMap::new();
    for (r, &set) in config.classes().iter().enumerate() {
        let mut it = set.iter();
        let (i, j) = (it.next().unwrap(), it.next().unwrap());
        graph.set_weight(i, j, q.backlog[r]);
        class_of_pair.insert((i, j), r);
    }
    let matching = capped_matching(&graph, config.n_memories() / 2);
    // Zero-weight edges never survive the tie-break, so every matched edge
    // is a registered class with positive backlog.
    let served: Vec<usize> = matching
        .edges
        .iter()
        .map(|&(i, j)| class_of_pair[&(i, j)])
        .collect();
    let service = ServiceVector::from_served_classes(&served, config);
    let clients = matching.covered();
    let allocation = MemoryAllocation::new(clients);
    let connectivity = Connectivity::new(clients);
    let objective = matching.total_weight as f64;
    let next = queue_step(q, &service, a);
    Ok((SlotDecision { allocation, connectivity, service, objective }, next))
}

/// Owns the queue state and random source of one policy run; one `step` per
/// slot. Movable across threads, not shared.
#[derive(Debug, Clone)]
pub struct PolicyStepper {
    config: SwitchConfig,
    spec: PolicySpec,
    queues: QueueState,
    rng: ChaCha8Rng,
    last_allocation: Option<MemoryAllocation>,
}

impl PolicyStepper {
    /// Stepper seeded from the policy's own seed.
    pub fn new(config: SwitchConfig, spec: PolicySpec) -> Result<Self> {
        use rand::SeedableRng;
        let rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        Self::with_rng(config, spec, rng)
    }

    /// Stepper with an externally derived random source (the simulation
    /// harness splits one base seed across replications).
    pub fn with_rng(config: SwitchConfig, spec: PolicySpec, rng: ChaCha8Rng) -> Result<Self> {
        validate_policy(&config, &spec)?;
        let queues = QueueState::zero(config.n_classes());
        Ok(PolicyStepper { config, spec, queues, rng, last_allocation: None })
    }

    pub fn queues(&self) -> &QueueState {
        &self.queues
    }

    pub fn step(&mut self, arrivals: &ArrivalVector) -> Result<SlotDecision> {
        let (decision, next) = match self.spec.kind {
            PolicyKind::ApproxMew if self.spec.carry_over => {
                let l = self.spec.approx_budget.expect("validated");
                let (allocation, objective) = approx_allocate_inner(
                    &self.queues,
                    &self.config,
                    l,
                    &mut self.rng,
                    self.last_allocation,
                )?;
                let connectivity = sample_connectivity(allocation, &self.config, &mut self.rng);
                let (service, _) = max_weight_service(connectivity, &self.queues, &self.config)?;
                let next = queue_step(&self.queues, &service, arrivals);
                (SlotDecision { allocation, connectivity, service, objective }, next)
            }
            PolicyKind::Mew | PolicyKind::ApproxMew => {
                mew_step(&self.queues, arrivals, &self.config, &self.spec, &mut self.rng)?
            }
            PolicyKind::Mew2 => mew2_step(&self.queues, arrivals, &self.config, &mut self.rng)?,
        };
        self.last_allocation = Some(decision.allocation);
        self.queues = next;
        Ok(decision)
    }
}
