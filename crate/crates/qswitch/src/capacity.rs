//! Capacity region of the switch as an explicit linear program.
//!
//! The region is the set of long-run service-rate vectors reachable by
//! mixing over memory allocations (weights `θ_m`), connectivity outcomes
//! (fixed probabilities `ℙ(k; m)`) and admissible service vectors
//! (conditional weights `δ^{m,k}_b`). The bilinear products `θ_m·δ^{m,k}_b`
//! are replaced by joint variables `γ^{m,k}_b` with `Σ_b γ^{m,k}_b = θ_m`,
//! which linearizes the system exactly: the region is the projection of the
//! resulting polytope.
//!
//! Two queries are supported: the maximum intensity `ρ*` along an arrival
//! direction (calibrating traffic at a fraction of capacity) and membership
//! with a uniform slack margin (the `ε` that drives queue-stability bounds).

use crate::error::{Error, Result};
use crate::lp::{Constraint, LpInstance, Relation};
use crate::model::{
    admissible_services, connectivity_support, enumerate_allocations, Connectivity,
    MemoryAllocation, ServiceVector, SwitchConfig, WeightedOutcome,
};
use serde::{Deserialize, Serialize};

/// Default cap on LP columns.
pub const DEFAULT_COLUMN_CAP: usize = 1_000_000;

/// Direction of arrival rates: nonnegative, at least one positive entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalDirection(Vec<f64>);

impl ArrivalDirection {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() || rates.iter().all(|&r| r == 0.0) {
            return Err(Error::Config("arrival direction needs a positive entry".into()));
        }
        if rates.iter().any(|&r| r < 0.0 || !r.is_finite()) {
            return Err(Error::Config("arrival direction entries must be finite and ≥ 0".into()));
        }
        Ok(ArrivalDirection(rates))
    }

    pub fn uniform(n_classes: usize) -> Self {
        ArrivalDirection(vec![1.0; n_classes])
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }
}

/// One admissible action column: allocation, connectivity outcome and
/// service vector, with the outcome probability baked in.
#[derive(Debug, Clone)]
struct Column {
    conn: Connectivity,
    probability: f64,
    service: ServiceVector,
}

/// The assembled capacity LP: all `θ` and `γ` columns plus the coupling and
/// normalization rows. Arrival-direction–specific parts are added per query.
#[derive(Debug, Clone)]
pub struct CapacityLp {
    config: SwitchConfig,
    allocations: Vec<MemoryAllocation>,
    columns: Vec<Column>,
    /// column index ranges, one per (allocation, connectivity) block
    blocks: Vec<(usize, std::ops::Range<usize>)>,
}

/// Builds the LP column structure for a config: one `θ` variable per
/// allocation and one `γ` variable per (allocation, connectivity, service)
/// triple. Fails if the column count would exceed `column_cap`.
///
/// Only full allocations generate columns: with the idle service vector
/// always admissible, leaving a memory unused can never enlarge the region.
pub fn build_lp(config: &SwitchConfig) -> Result<CapacityLp> {
    build_lp_with(config, DEFAULT_COLUMN_CAP, true)
}

/// `build_lp` with an explicit column cap and allocation mode.
pub fn build_lp_with(config: &SwitchConfig, column_cap: usize, full_only: bool) -> Result<CapacityLp> {
    let allocations = enumerate_allocations(config, full_only);
    let mut columns = Vec::new();
    let mut blocks = Vec::new();
    // the cap counts service columns (Σ over (m,k) of |admissible sets|)
    let mut count = 0;
    for (alloc_idx, &m) in allocations.iter().enumerate() {
        for WeightedOutcome { connectivity, probability } in connectivity_support(m, config) {
            let services = admissible_services(connectivity, config)?;
            count += services.len();
            if count > column_cap {
                return Err(Error::LpColumnCap { columns: count, cap: column_cap });
            }
            let start = columns.len();
            for service in services {
                columns.push(Column { conn: connectivity, probability, service });
            }
            blocks.push((alloc_idx, start..columns.len()));
        }
    }
    Ok(CapacityLp { config: config.clone(), allocations, columns, blocks })
}

impl CapacityLp {
    /// Total number of LP variables (θ columns plus γ columns).
    pub fn n_columns(&self) -> usize {
        self.allocations.len() + self.columns.len()
    }

    pub fn config(&self) -> &SwitchConfig {
        &self.config
    }

    fn theta_col(&self, alloc_idx: usize) -> usize {
        alloc_idx
    }

    fn gamma_col(&self, column_idx: usize) -> usize {
        self.allocations.len() + column_idx
    }

    /// Structural rows shared by every query: γ blocks summing to their θ
    /// and the θ normalization.
    fn base_constraints(&self) -> Vec<Constraint> {
        let mut rows = Vec::with_capacity(self.blocks.len() + 1);
        for (alloc_idx, range) in &self.blocks {
            let mut coeffs: Vec<(usize, f64)> =
                range.clone().map(|c| (self.gamma_col(c), 1.0)).collect();
            coeffs.push((self.theta_col(*alloc_idx), -1.0));
            rows.push(Constraint { coeffs, relation: Relation::Eq, rhs: 0.0 });
        }
        rows.push(Constraint {
            coeffs: (0..self.allocations.len()).map(|a| (self.theta_col(a), 1.0)).collect(),
            relation: Relation::Ge,
            rhs: 1.0,
        });
        // Σθ = 1 as two inequalities would also work; keep the equality.
        let last = rows.len() - 1;
        rows[last].relation = Relation::Eq;
        rows
    }

    /// Per-class achieved-rate coefficients over the γ columns.
    fn rate_coeffs(&self, r: usize) -> Vec<(usize, f64)> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, col)| col.service.is_served(r))
            .map(|(c, col)| (self.gamma_col(c), col.probability))
            .collect()
    }

    /// `maximize ρ  s.t.  achieved_rate_r ≥ ρ·direction_r`, mixture rows.
    pub fn intensity_lp(&self, direction: &ArrivalDirection) -> LpInstance {
        let n_classes = self.config.n_classes();
        assert_eq!(direction.rates().len(), n_classes);
        let rho = self.n_columns();
        let n_vars = rho + 1;
        let mut constraints = self.base_constraints();
        for r in 0..n_classes {
            let mut coeffs = self.rate_coeffs(r);
            coeffs.push((rho, -direction.rates()[r]));
            constraints.push(Constraint { coeffs, relation: Relation::Ge, rhs: 0.0 });
        }
        let mut objective = vec![0.0; n_vars];
        objective[rho] = 1.0;
        LpInstance { n_vars, objective, constraints }
    }

    /// `maximize ε  s.t.  achieved_rate_r ≥ rates_r + ε`. The slack is free
    /// (negative outside the region), split as `ε = ε⁺ − ε⁻`.
    pub fn slack_lp(&self, rates: &[f64]) -> LpInstance {
        let n_classes = self.config.n_classes();
        assert_eq!(rates.len(), n_classes);
        let plus = self.n_columns();
        let minus = plus + 1;
        let n_vars = plus + 2;
        let mut constraints = self.base_constraints();
        for (r, &rate) in rates.iter().enumerate() {
            let mut coeffs = self.rate_coeffs(r);
            coeffs.push((plus, -1.0));
            coeffs.push((minus, 1.0));
            constraints.push(Constraint { coeffs, relation: Relation::Ge, rhs: rate });
        }
        let mut objective = vec![0.0; n_vars];
        objective[plus] = 1.0;
        objective[minus] = -1.0;
        LpInstance { n_vars, objective, constraints }
    }

    /// Reconstructs the certificate from a solved variable vector.
    fn certificate(&self, x: &[f64], intensity: f64, stability_margin: f64) -> CapacityCertificate {
        let n_classes = self.config.n_classes();
        let mut achieved_rate = vec![0.0; n_classes];
        for (c, col) in self.columns.iter().enumerate() {
            let gamma = x[self.gamma_col(c)];
            if gamma <= 0.0 {
                continue;
            }
            for r in col.service.served_classes() {
                achieved_rate[r] += col.probability * gamma;
            }
        }
        let theta: Vec<(MemoryAllocation, f64)> = self
            .allocations
            .iter()
            .enumerate()
            .map(|(a, &m)| (m, x[self.theta_col(a)].max(0.0)))
            .filter(|&(_, w)| w > CERT_EPS)
            .collect();
        // δ = γ/θ where θ > 0; blocks under unused allocations are dropped
        // (any conditional mix there is vacuous).
        let mut delta = Vec::new();
        for (alloc_idx, range) in &self.blocks {
            let theta_val = x[self.theta_col(*alloc_idx)];
            if theta_val <= CERT_EPS {
                continue;
            }
            for c in range.clone() {
                let gamma = x[self.gamma_col(c)];
                let weight = gamma / theta_val;
                if weight > CERT_EPS {
                    let col = &self.columns[c];
                    delta.push(DeltaEntry {
                        allocation: self.allocations[*alloc_idx],
                        connectivity: col.conn,
                        service: col.service.clone(),
                        weight,
                    });
                }
            }
        }
        CapacityCertificate { theta, delta, achieved_rate, intensity, stability_margin }
    }
}

const CERT_EPS: f64 = 1e-12;

/// A solved point of the capacity region: allocation mixture, conditional
/// service mixtures, the achieved rate vector, the intensity along the query
/// direction and the uniform slack margin.
#[derive(Debug, Clone)]
pub struct CapacityCertificate {
    pub theta: Vec<(MemoryAllocation, f64)>,
    pub delta: Vec<DeltaEntry>,
    pub achieved_rate: Vec<f64>,
    pub intensity: f64,
    pub stability_margin: f64,
}

#[derive(Debug, Clone)]
pub struct DeltaEntry {
    pub allocation: MemoryAllocation,
    pub connectivity: Connectivity,
    pub service: ServiceVector,
    pub weight: f64,
}

/// Serialized certificate (clients and classes 1-indexed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub intensity: f64,
    pub stability_margin: f64,
    pub achieved_rate: Vec<f64>,
    pub theta: Vec<ThetaFileEntry>,
    pub delta: Vec<DeltaFileEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaFileEntry {
    pub allocation: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaFileEntry {
    pub allocation: Vec<usize>,
    pub connectivity: Vec<usize>,
    pub served_classes: Vec<usize>,
    pub weight: f64,
}

impl CapacityCertificate {
    pub fn to_file(&self) -> CertificateFile {
        CertificateFile {
            intensity: self.intensity,
            stability_margin: self.stability_margin,
            achieved_rate: self.achieved_rate.clone(),
            theta: self
                .theta
                .iter()
                .map(|(m, w)| ThetaFileEntry {
                    allocation: m.clients().to_one_indexed(),
                    weight: *w,
                })
                .collect(),
            delta: self
                .delta
                .iter()
                .map(|d| DeltaFileEntry {
                    allocation: d.allocation.clients().to_one_indexed(),
                    connectivity: d.connectivity.clients().to_one_indexed(),
                    served_classes: d.service.served_classes().map(|r| r + 1).collect(),
                    weight: d.weight,
                })
                .collect(),
        }
    }
}

/// Maximum intensity `ρ* = max{ρ : ρ·direction ∈ Λ}` with a realizing
/// certificate.
pub fn max_intensity(
    config: &SwitchConfig,
    direction: &ArrivalDirection,
) -> Result<(f64, CapacityCertificate)> {
    let lp = build_lp(config)?;
    max_intensity_on(&lp, direction)
}

/// `max_intensity` on a pre-built LP (the build is the expensive part).
pub fn max_intensity_on(
    lp: &CapacityLp,
    direction: &ArrivalDirection,
) -> Result<(f64, CapacityCertificate)> {
    let instance = lp.intensity_lp(direction);
    let sol = crate::lp::solve(&instance)?;
    let rho = sol.objective;
    let boundary: Vec<f64> = direction.rates().iter().map(|d| d * rho).collect();
    let margin_sol = crate::lp::solve(&lp.slack_lp(&boundary))?;
    Ok((rho, lp.certificate(&sol.x, rho, margin_sol.objective)))
}

/// Whether `rates` lies in the capacity region, plus the largest uniform
/// slack `ε` with `rates + ε·1` still achievable (negative outside).
pub fn membership(config: &SwitchConfig, rates: &[f64]) -> Result<(bool, f64)> {
    let lp = build_lp(config)?;
    membership_on(&lp, rates)
}

pub fn membership_on(lp: &CapacityLp, rates: &[f64]) -> Result<(bool, f64)> {
    let sol = crate::lp::solve(&lp.slack_lp(rates))?;
    let margin = sol.objective;
    Ok((margin >= -1e-9, margin))
}
