//! Replication harness: Bernoulli traffic, seeded policy runs, averaged
//! backlog trajectories and the canned scenarios behind the three stock
//! experiments.
//!
//! Randomness is fully determined by a scenario's 64-bit `base_seed`.
//! Replication `i` uses seed `base_seed + i`; within a replication the
//! arrival process draws from stream 1 of a ChaCha8 generator seeded with
//! the replication seed, and the policy (LLE realization, allocation
//! sampling) draws from stream 2 of a generator seeded with the replication
//! seed XOR the policy's own seed. Replications are independent, so the
//! harness may run them in parallel and still produce identical results for
//! every degree of parallelism.

use crate::capacity::{build_lp, max_intensity_on, membership_on, ArrivalDirection, CapacityCertificate};
use crate::error::{Error, Result};
use crate::model::{ArrivalVector, SwitchConfig};
use crate::policies::{validate_policy, PolicySpec, PolicyStepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const ARRIVAL_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;

pub const DEFAULT_HORIZON: usize = 20_000;
pub const DEFAULT_REPLICATIONS: usize = 10;

/// A fully specified experiment: switch instance, arrival direction and
/// intensity (as a fraction of the capacity boundary ρ*), policy, horizon,
/// replication count and base seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SwitchConfig,
    pub direction: ArrivalDirection,
    pub intensity: f64,
    pub policy: PolicySpec,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
}

impl Scenario {
    /// Calibrates the scenario: solves the capacity LP for ρ* along the
    /// direction, scales the per-class rates to `intensity · ρ* · direction`
    /// and computes the stability margin of the scaled rates. Fails when a
    /// scaled rate exceeds 1 (Bernoulli arrivals cannot realize it) instead
    /// of clamping, which would silently change the intensity.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        validate_policy(&self.config, &self.policy)?;
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::Scenario(format!("intensity must be positive, got {}", self.intensity)));
        }
        if self.horizon == 0 || self.replications == 0 {
            return Err(Error::Scenario("horizon and replications must be at least 1".into()));
        }
        if self.direction.rates().len() != self.config.n_classes() {
            return Err(Error::Scenario(format!(
                "direction has {} entries for {} request classes",
                self.direction.rates().len(),
                self.config.n_classes()
            )));
        }
        let lp = build_lp(&self.config)?;
        let (rho_star, certificate) = max_intensity_on(&lp, &self.direction)?;
        let rates: Vec<f64> =
            self.direction.rates().iter().map(|d| self.intensity * rho_star * d).collect();
        for (r, &rate) in rates.iter().enumerate() {
            if rate > 1.0 {
                return Err(Error::Scenario(format!(
                    "scaled arrival rate of class {} is {rate:.6} > 1; \
                     intensity {} is not Bernoulli-feasible",
                    r + 1,
                    self.intensity
                )));
            }
        }
        let (_, margin) = membership_on(&lp, &rates)?;
        Ok(ResolvedScenario { scenario: self.clone(), rho_star, rates, margin, certificate })
    }
}

/// A scenario with its capacity calibration attached.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    /// Maximum intensity along the scenario direction.
    pub rho_star: f64,
    /// Scaled per-class Bernoulli arrival rates actually simulated.
    pub rates: Vec<f64>,
    /// Largest uniform slack ε with `rates + ε·1` still in the region
    /// (negative above capacity).
    pub margin: f64,
    /// Certificate realizing ρ* along the direction.
    pub certificate: CapacityCertificate,
}

impl ResolvedScenario {
    pub fn replication_seeds(&self) -> Vec<u64> {
        let base = self.scenario.base_seed;
        (0..self.scenario.replications).map(|i| base.wrapping_add(i as u64)).collect()
    }
}

/// Independent Bernoulli arrival draw, one per class in class order.
pub fn generate_arrivals<R: Rng + ?Sized>(rates: &[f64], rng: &mut R) -> ArrivalVector {
    ArrivalVector { arrivals: rates.iter().map(|&p| rng.gen::<f64>() < p).collect() }
}

/// Everything recorded from one replication.
#[derive(Debug, Clone)]
pub struct ReplicationTrace {
    /// `Σ_r Q_r(t)` for t = 1..=horizon (state after each slot).
    pub total_backlog: Vec<u64>,
    pub final_queues: Vec<u64>,
    pub cumulative_arrivals: Vec<u64>,
    /// Requests actually removed from queues (service clipped at the backlog).
    pub cumulative_service: Vec<u64>,
}

/// Runs one replication from empty queues. Deterministic in `seed`.
pub fn run_replication(rs: &ResolvedScenario, seed: u64) -> Result<ReplicationTrace> {
    let sc = &rs.scenario;
    let mut arrivals_rng = ChaCha8Rng::seed_from_u64(seed);
    arrivals_rng.set_stream(ARRIVAL_STREAM);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed ^ sc.policy.rng_seed);
    policy_rng.set_stream(POLICY_STREAM);
    let mut stepper = PolicyStepper::with_rng(sc.config.clone(), sc.policy, policy_rng)?;

    let n_classes = sc.config.n_classes();
    let mut trace = ReplicationTrace {
        total_backlog: Vec::with_capacity(sc.horizon),
        final_queues: vec![0; n_classes],
        cumulative_arrivals: vec![0; n_classes],
        cumulative_service: vec![0; n_classes],
    };
    for slot in 1..=sc.horizon {
        let arrivals = generate_arrivals(&rs.rates, &mut arrivals_rng);
        let before = stepper.queues().clone();
        let decision = stepper
            .step(&arrivals)
            .map_err(|e| Error::Slot { slot, source: Box::new(e) })?;
        for r in 0..n_classes {
            trace.cumulative_arrivals[r] += arrivals.arrivals[r] as u64;
            if decision.service.is_served(r) && before.backlog[r] > 0 {
                trace.cumulative_service[r] += 1;
            }
        }
        trace.total_backlog.push(stepper.queues().total());
    }
    trace.final_queues.copy_from_slice(&stepper.queues().backlog);
    Ok(trace)
}

/// Pointwise statistics of the averaged total-backlog trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    pub mean_total_backlog: Vec<f64>,
    /// Cross-replication standard error per slot (0 with one replication).
    pub stderr: Vec<f64>,
    /// Mean over the final quarter of the horizon.
    pub final_window_mean: f64,
    /// Least-squares slope of the mean curve over the last half.
    pub trend_slope: f64,
    /// Fit quality of that trend line.
    pub trend_r2: f64,
}

impl TrajectoryStats {
    pub fn horizon(&self) -> usize {
        self.mean_total_backlog.len()
    }

    /// Mean of the mean curve over `[start, end)`; 0 for an empty window.
    pub fn window_mean(&self, start: usize, end: usize) -> f64 {
        let end = end.min(self.mean_total_backlog.len());
        if start >= end {
            return 0.0;
        }
        self.mean_total_backlog[start..end].iter().sum::<f64>() / (end - start) as f64
    }

    /// Mean over the second quarter of the horizon.
    pub fn second_quarter_mean(&self) -> f64 {
        let t = self.horizon();
        self.window_mean(t / 4, t / 2)
    }

    /// Mean over the final quarter of the horizon.
    pub fn final_quarter_mean(&self) -> f64 {
        let t = self.horizon();
        self.window_mean(3 * t / 4, t)
    }

    /// Empirical stability proxy: the final-quarter mean does not exceed
    /// 1.5× the second-quarter mean. A stable queue saturates (ratio → 1)
    /// while linear growth pushes the ratio toward 7/3.
    pub fn stable_proxy(&self) -> bool {
        self.final_quarter_mean() <= 1.5 * self.second_quarter_mean()
    }

    fn from_traces(traces: &[ReplicationTrace]) -> Self {
        let reps = traces.len();
        let horizon = traces[0].total_backlog.len();
        let mut mean = vec![0.0; horizon];
        let mut stderr = vec![0.0; horizon];
        for t in 0..horizon {
            let sum: f64 = traces.iter().map(|tr| tr.total_backlog[t] as f64).sum();
            mean[t] = sum / reps as f64;
            if reps > 1 {
                let var: f64 = traces
                    .iter()
                    .map(|tr| {
                        let d = tr.total_backlog[t] as f64 - mean[t];
                        d * d
                    })
                    .sum::<f64>()
                    / (reps - 1) as f64;
                stderr[t] = (var / reps as f64).sqrt();
            }
        }
        let (trend_slope, trend_r2) = linear_trend(&mean[horizon / 2..]);
        let mut stats = TrajectoryStats {
            mean_total_backlog: mean,
            stderr,
            final_window_mean: 0.0,
            trend_slope,
            trend_r2,
        };
        stats.final_window_mean = stats.final_quarter_mean();
        stats
    }
}

/// Least-squares line through `(i, y_i)`: slope and R².
fn linear_trend(y: &[f64]) -> (f64, f64) {
    let n = y.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        let dy = v - y_mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    if syy <= f64::EPSILON {
        return (slope, 0.0);
    }
    let r2 = (sxy * sxy) / (sxx * syy);
    (slope, r2)
}

/// Runs every replication (in parallel) and aggregates. The aggregation
/// consumes traces in replication order, so results do not depend on the
/// thread count.
pub fn run_experiment(rs: &ResolvedScenario) -> Result<TrajectoryStats> {
    let seeds = rs.replication_seeds();
    let traces: Vec<ReplicationTrace> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            run_replication(rs, seed)
                .map_err(|e| Error::Replication { replication: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryStats::from_traces(&traces))
}

/// The three stock experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 6 clients, 3 memories, 8 tripartite classes, p = 0.9; MEW at 70%,
    /// 99% and 120% intensity.
    Sim1,
    /// 6 clients, 3 memories, all 35 pair and triple classes, p = 0.9; MEW
    /// and {1,10}-approximate MEW at 70% and 99% of a popularity-skewed
    /// direction (see [`popularity_direction`]).
    Sim2,
    /// 7 clients, 4 memories, all 21 pair classes, p = 1; MEW, MEW2 and
    /// 1-approximate MEW at 99% of a popularity-skewed direction.
    Sim3,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sim1" => Ok(Preset::Sim1),
            "sim2" => Ok(Preset::Sim2),
            "sim3" => Ok(Preset::Sim3),
            other => Err(Error::Scenario(format!("unknown preset '{other}'"))),
        }
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Sim1 => "sim1",
            Preset::Sim2 => "sim2",
            Preset::Sim3 => "sim3",
        }
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(c + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Client-asymmetric arrival direction: a class's rate share is
/// `Σ_{n ∈ class} (1 + skew / n)` over its 1-indexed members, so
/// low-numbered clients are more popular.
///
/// The allocation-budget comparisons need this asymmetry: under a direction
/// invariant to client relabeling, uniformly sampling a single allocation
/// already realizes the optimal allocation mixture, so restricting the
/// search space costs no capacity and every budget stabilizes the same
/// rates. Skewed popularity separates the budgets.
pub fn popularity_direction(config: &SwitchConfig, skew: f64) -> ArrivalDirection {
    let rates = config
        .classes()
        .iter()
        .map(|c| c.iter().map(|n| 1.0 + skew / (n + 1) as f64).sum())
        .collect();
    ArrivalDirection::new(rates).expect("positive rates")
}

/// Scenario list for a preset. Scenarios within a preset share the base
/// seed, so policies facing the same rates see identical arrival streams
/// (paired comparison).
pub fn preset(which: Preset) -> Vec<Scenario> {
    match which {
        Preset::Sim1 => {
            // the 8 lexicographically first triples of 6 clients
            let classes: Vec<Vec<usize>> = subsets_of_size(6, 3).into_iter().take(8).collect();
            let config = SwitchConfig::new(6, 3, vec![0.9; 6], classes).unwrap();
            [0.70, 0.99, 1.20]
                .iter()
                .map(|&intensity| Scenario {
                    config: config.clone(),
                    direction: ArrivalDirection::uniform(8),
                    intensity,
                    policy: PolicySpec::mew(),
                    horizon: DEFAULT_HORIZON,
                    replications: DEFAULT_REPLICATIONS,
                    base_seed: 7101,
                })
                .collect()
        }
        Preset::Sim2 => {
            let mut classes = subsets_of_size(6, 2);
            classes.extend(subsets_of_size(6, 3));
            let config = SwitchConfig::new(6, 3, vec![0.9; 6], classes).unwrap();
            let direction = popularity_direction(&config, 2.0);
            let mut out = Vec::new();
            for &intensity in &[0.70, 0.99] {
                for policy in [PolicySpec::mew(), PolicySpec::approx_mew(1), PolicySpec::approx_mew(10)] {
                    out.push(Scenario {
                        config: config.clone(),
                        direction: direction.clone(),
                        intensity,
                        policy,
                        horizon: DEFAULT_HORIZON,
                        replications: DEFAULT_REPLICATIONS,
                        base_seed: 7201,
                    });
                }
            }
            out
        }
        Preset::Sim3 => {
            let classes = subsets_of_size(7, 2);
            let config = SwitchConfig::new(7, 4, vec![1.0; 7], classes).unwrap();
            let direction = popularity_direction(&config, 1.0);
            [PolicySpec::mew(), PolicySpec::mew2(), PolicySpec::approx_mew(1)]
                .into_iter()
                .map(|policy| Scenario {
                    config: config.clone(),
                    direction: direction.clone(),
                    intensity: 0.99,
                    policy,
                    horizon: DEFAULT_HORIZON,
                    replications: DEFAULT_REPLICATIONS,
                    base_seed: 7301,
                })
                .collect()
        }
    }
}

// ---------------------------------------------------------------------------
// File formats (clients 1-indexed)

/// Switch configuration as serialized in scenario files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub n_clients: usize,
    pub n_memories: usize,
    pub lle_success: Vec<f64>,
    /// Request classes as 1-indexed client lists.
    pub request_classes: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_cap: Option<usize>,
}

impl ConfigFile {
    pub fn from_config(config: &SwitchConfig) -> Self {
        ConfigFile {
            n_clients: config.n_clients(),
            n_memories: config.n_memories(),
            lle_success: config.lle_success().to_vec(),
            request_classes: config.classes().iter().map(|c| c.to_one_indexed()).collect(),
            service_cap: None,
        }
    }

    pub fn to_config(&self) -> Result<SwitchConfig> {
        let mut classes = Vec::with_capacity(self.request_classes.len());
        for (r, members) in self.request_classes.iter().enumerate() {
            let mut internal = Vec::with_capacity(members.len());
            for &c in members {
                if c == 0 {
                    return Err(Error::Config(format!(
                        "request class {}: clients are 1-indexed, got 0",
                        r + 1
                    )));
                }
                internal.push(c - 1);
            }
            classes.push(internal);
        }
        let config =
            SwitchConfig::new(self.n_clients, self.n_memories, self.lle_success.clone(), classes)?;
        Ok(match self.service_cap {
            Some(cap) => config.with_service_cap(cap),
            None => config,
        })
    }
}

/// Scenario as serialized on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub config: ConfigFile,
    /// Arrival direction; omitted means uniform across classes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    pub intensity: f64,
    pub policy: PolicySpec,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            config: ConfigFile::from_config(&s.config),
            direction: Some(s.direction.rates().to_vec()),
            intensity: s.intensity,
            policy: s.policy,
            horizon: s.horizon,
            replications: s.replications,
            base_seed: s.base_seed,
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let config = self.config.to_config()?;
        let direction = match &self.direction {
            Some(rates) => ArrivalDirection::new(rates.clone())?,
            None => ArrivalDirection::uniform(config.n_classes()),
        };
        Ok(Scenario {
            config,
            direction,
            intensity: self.intensity,
            policy: self.policy,
            horizon: self.horizon,
            replications: self.replications,
            base_seed: self.base_seed,
        })
    }
}

/// Canonical CSV rendering: `slot,mean_total_backlog,stderr`, slots 1-based.
pub fn stats_to_csv(stats: &TrajectoryStats) -> String {
    let mut out = String::with_capacity(stats.horizon() * 24 + 32);
    out.push_str("slot,mean_total_backlog,stderr\n");
    for (t, (mean, se)) in stats.mean_total_backlog.iter().zip(&stats.stderr).enumerate() {
        out.push_str(&format!("{},{},{}\n", t + 1, mean, se));
    }
    out
}

/// Sidecar metadata: every resolved parameter needed to re-run the
/// experiment bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub config: ConfigFile,
    pub config_sha256: String,
    pub policy: PolicySpec,
    pub direction: Vec<f64>,
    pub intensity: f64,
    pub rho_star: f64,
    /// Scaled Bernoulli arrival rates actually simulated.
    pub rates: Vec<f64>,
    /// Uniform stability margin ε of the scaled rates.
    pub stability_margin: f64,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub replication_seeds: Vec<u64>,
}

impl RunMetadata {
    pub fn from_resolved(rs: &ResolvedScenario) -> Self {
        let config = ConfigFile::from_config(&rs.scenario.config);
        let canonical = serde_json::to_string(&config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            config_sha256,
            policy: rs.scenario.policy,
            direction: rs.scenario.direction.rates().to_vec(),
            intensity: rs.scenario.intensity,
            rho_star: rs.rho_star,
            rates: rs.rates.clone(),
            stability_margin: rs.margin,
            horizon: rs.scenario.horizon,
            replications: rs.scenario.replications,
            base_seed: rs.scenario.base_seed,
            replication_seeds: rs.replication_seeds(),
        }
    }
}
