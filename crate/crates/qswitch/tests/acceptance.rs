//! Acceptance suite: every release criterion, one test per criterion, each
//! printing a PASS/FAIL line (run with `--nocapture` to see them on
//! success). Tolerances and thresholds are pinned here, not configurable.

use qswitch::capacity::{max_intensity, ArrivalDirection};
use qswitch::matching::{
    brute_force_matching, capped_matching, max_weight_matching, max_weight_service, WeightedGraph,
};
use qswitch::model::{
    admissible_services, connectivity_support, ClientSet, Connectivity, QueueState, SwitchConfig,
};
use qswitch::policies::{mew2_step, mew_allocate};
use qswitch::sim::{preset, run_experiment, stats_to_csv, Preset, TrajectoryStats};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, failures: Vec<String>, detail: String) {
    if failures.is_empty() {
        println!("ACCEPTANCE {criterion}: PASS - {detail}");
    } else {
        println!("ACCEPTANCE {criterion}: FAIL - {}", failures.join("; "));
        panic!("{criterion} failed:\n  {}", failures.join("\n  "));
    }
}

fn proxy_line(label: &str, stats: &TrajectoryStats) -> String {
    format!(
        "{label}: q2 {:.1}, q4 {:.1}, slope {:.4}, r2 {:.3}",
        stats.second_quarter_mean(),
        stats.final_quarter_mean(),
        stats.trend_slope,
        stats.trend_r2
    )
}

/// Criterion 1: three intensities on the tripartite instance: bounded
/// backlog inside the region, linear growth above it.
#[test]
fn criterion_1_sim1_stability_and_overload_growth() {
    let scenarios = preset(Preset::Sim1);
    let mut failures = Vec::new();
    let mut details = Vec::new();
    let mut stats = Vec::new();
    for s in &scenarios {
        let rs = s.resolve().expect("sim1 resolves");
        let st = run_experiment(&rs).expect("sim1 runs");
        details.push(proxy_line(&format!("{:.0}%", s.intensity * 100.0), &st));
        stats.push(st);
    }
    if !stats[0].stable_proxy() {
        failures.push(format!("70% failed the stability proxy ({})", details[0]));
    }
    if !stats[1].stable_proxy() {
        failures.push(format!("99% failed the stability proxy ({})", details[1]));
    }
    if !(stats[2].trend_slope > 0.0 && stats[2].trend_r2 > 0.9) {
        failures.push(format!(
            "120% does not grow linearly: slope {:.5}, r2 {:.3}",
            stats[2].trend_slope, stats[2].trend_r2
        ));
    }
    report("criterion 1 (sim1 reproduction)", failures, details.join(" | "));
}

/// Criterion 2: the long-run average backlog at 70% load stays below the
/// N²/ε drift bound computed from the capacity certificate's margin.
#[test]
fn criterion_2_drift_bound_sanity() {
    let s = &preset(Preset::Sim1)[0];
    assert_eq!(s.intensity, 0.70);
    let rs = s.resolve().expect("resolves");
    let stats = run_experiment(&rs).expect("runs");
    let epsilon = rs.margin;
    let n = s.config.n_clients() as f64;
    let bound = n * n / epsilon;
    let time_avg = stats.window_mean(0, stats.horizon());
    let mut failures = Vec::new();
    if epsilon <= 0.0 {
        failures.push(format!("margin ε = {epsilon} is not positive"));
    }
    if time_avg > bound {
        failures.push(format!("time-averaged backlog {time_avg:.2} exceeds N²/ε = {bound:.2}"));
    }
    report(
        "criterion 2 (drift bound)",
        failures,
        format!("time-avg backlog {time_avg:.2} ≤ N²/ε = {bound:.1} (ε = {epsilon:.4})"),
    );
}

/// Criterion 3: allocation search budgets: a budget of 1 holds at 70% but
/// not at 99%; a budget of 10 and the full search hold at 99%.
#[test]
fn criterion_3_sim2_budgeted_search() {
    let scenarios = preset(Preset::Sim2);
    let mut stats = Vec::new();
    for s in &scenarios {
        let rs = s.resolve().expect("sim2 resolves");
        stats.push(run_experiment(&rs).expect("sim2 runs"));
    }
    // preset order: (70, mew), (70, a1), (70, a10), (99, mew), (99, a1), (99, a10)
    let labels = ["mew@70", "approx1@70", "approx10@70", "mew@99", "approx1@99", "approx10@99"];
    let details: Vec<String> =
        labels.iter().zip(&stats).map(|(l, s)| proxy_line(l, s)).collect();
    let mut failures = Vec::new();
    if !stats[1].stable_proxy() {
        failures.push(format!("approx1 must pass the proxy at 70% ({})", details[1]));
    }
    if stats[4].stable_proxy() {
        failures.push(format!("approx1 must fail the proxy at 99% ({})", details[4]));
    }
    if !stats[5].stable_proxy() {
        failures.push(format!("approx10 must pass the proxy at 99% ({})", details[5]));
    }
    if !stats[3].stable_proxy() {
        failures.push(format!("full search must pass the proxy at 99% ({})", details[3]));
    }
    report("criterion 3 (sim2 reproduction)", failures, details.join(" | "));
}

/// Criterion 4: the polynomial variant tracks the full policy (mean curves
/// inside each other's ±2·SE bands over the final quarter) while the
/// 1-budget search destabilizes.
#[test]
fn criterion_4_sim3_mew2_equivalence_in_simulation() {
    let scenarios = preset(Preset::Sim3);
    let mut stats = Vec::new();
    for s in &scenarios {
        let rs = s.resolve().expect("sim3 resolves");
        stats.push(run_experiment(&rs).expect("sim3 runs"));
    }
    let (mew, mew2, approx1) = (&stats[0], &stats[1], &stats[2]);
    let horizon = mew.horizon();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for t in 3 * horizon / 4..horizon {
        let diff = (mew.mean_total_backlog[t] - mew2.mean_total_backlog[t]).abs();
        let band = 2.0 * mew.stderr[t].min(mew2.stderr[t]);
        worst = worst.max(diff - band);
        if diff > 2.0 * mew.stderr[t] || diff > 2.0 * mew2.stderr[t] {
            failures.push(format!(
                "slot {}: |mew - mew2| = {diff:.2} outside 2·SE bands ({:.2}, {:.2})",
                t + 1,
                2.0 * mew.stderr[t],
                2.0 * mew2.stderr[t]
            ));
            break;
        }
    }
    if approx1.stable_proxy() {
        failures.push(format!(
            "approx1 must fail the proxy at 99% ({})",
            proxy_line("approx1@99", approx1)
        ));
    }
    report(
        "criterion 4 (sim3 reproduction)",
        failures,
        format!(
            "final-quarter means: mew {:.1}, mew2 {:.1} (worst band excess {:.3}); {}",
            mew.final_quarter_mean(),
            mew2.final_quarter_mean(),
            worst,
            proxy_line("approx1@99", approx1)
        ),
    );
}

/// Criterion 5: the allocation-step objective of the full policy equals the
/// capped-matching weight of the polynomial variant, exactly, over random
/// queue states in the variant's validity regime.
#[test]
fn criterion_5_objective_equivalence_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0c0);
    let mut compared = 0usize;
    let mut failures = Vec::new();
    'outer: for n in 2..=8usize {
        for m in [2usize, 4, 6] {
            if m > n {
                continue;
            }
            let classes: Vec<Vec<usize>> =
                (0..n).flat_map(|i| ((i + 1)..n).map(move |j| vec![i, j])).collect();
            let config = SwitchConfig::new(n, m, vec![1.0; n], classes).unwrap();
            for _ in 0..500 {
                let q = QueueState {
                    backlog: (0..config.n_classes()).map(|_| rng.gen_range(0..1000)).collect(),
                };
                let (_, objective) = mew_allocate(&q, &config).unwrap();
                let arrivals = qswitch::model::ArrivalVector::none(config.n_classes());
                let mut policy_rng = ChaCha8Rng::seed_from_u64(0);
                let (decision, _) = mew2_step(&q, &arrivals, &config, &mut policy_rng).unwrap();
                if objective != decision.objective {
                    failures.push(format!(
                        "N={n} M={m} Q={:?}: objective {objective} vs matching weight {}",
                        q.backlog, decision.objective
                    ));
                    break 'outer;
                }
                compared += 1;
            }
        }
    }
    report(
        "criterion 5 (objective equivalence)",
        failures,
        format!("{compared} random queue states, exact integer equality"),
    );
}

/// Criterion 6: optimizers against brute force: graph matchings (plain and
/// capped) and hypergraph service selection.
#[test]
fn criterion_6_matching_oracles() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0bac1e);
    let mut graph_cases = 0usize;
    for trial in 0..200 {
        let n = rng.gen_range(2..=8usize);
        let mut g = WeightedGraph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_weight(i, j, rng.gen_range(0..=if trial % 2 == 0 { 4 } else { 800 }));
            }
        }
        let want = brute_force_matching(&g, None).unwrap();
        let got = max_weight_matching(&g);
        if got != want {
            failures.push(format!("matching mismatch on trial {trial}: {got:?} vs {want:?}"));
            break;
        }
        graph_cases += 1;
        for cap in 1..=n / 2 {
            let want = brute_force_matching(&g, Some(cap)).unwrap();
            let got = capped_matching(&g, cap);
            if got != want {
                failures.push(format!(
                    "capped mismatch (cap {cap}) on trial {trial}: {got:?} vs {want:?}"
                ));
                break;
            }
            graph_cases += 1;
        }
    }

    let mut service_cases = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e11ec);
    while service_cases < 200 {
        let n = rng.gen_range(2..=8usize);
        let max_classes = 10usize;
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for _ in 0..rng.gen_range(1..=max_classes) {
            let size = rng.gen_range(2..=n.min(4));
            let mut members: Vec<usize> = (0..n).collect();
            members.shuffle(&mut rng);
            members.truncate(size);
            members.sort_unstable();
            if !classes.contains(&members) {
                classes.push(members);
            }
        }
        if classes.is_empty() {
            continue;
        }
        let config = SwitchConfig::new(n, n, vec![1.0; n], classes).unwrap();
        let q = QueueState {
            backlog: (0..config.n_classes()).map(|_| rng.gen_range(0..50)).collect(),
        };
        let live: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        let k = Connectivity::new(ClientSet::from_clients(&live));
        let (vector, weight) = max_weight_service(k, &q, &config).unwrap();
        let exhaustive = admissible_services(k, &config)
            .unwrap()
            .iter()
            .map(|s| s.weight(&q))
            .max()
            .unwrap();
        if weight != exhaustive || vector.weight(&q) != weight {
            failures.push(format!(
                "service mismatch: N={n}, classes {:?}, Q {:?}, live {:?}: {weight} vs {exhaustive}",
                config.classes().iter().map(|c| c.to_one_indexed()).collect::<Vec<_>>(),
                q.backlog,
                live
            ));
            break;
        }
        service_cases += 1;
    }
    report(
        "criterion 6 (matching oracles)",
        failures,
        format!("{graph_cases} graph comparisons, {service_cases} hypergraph comparisons, all exact"),
    );
}

/// Criterion 7: closed-form capacity values for the two-client instance and
/// exact certificate reconstruction.
#[test]
fn criterion_7_capacity_closed_forms() {
    let mut failures = Vec::new();
    let direction = ArrivalDirection::new(vec![1.0]).unwrap();

    let certain = SwitchConfig::new(2, 2, vec![1.0, 1.0], vec![vec![0, 1]]).unwrap();
    let (rho_certain, _) = max_intensity(&certain, &direction).unwrap();
    if (rho_certain - 1.0).abs() > 1e-6 {
        failures.push(format!("p=1 boundary should be 1, got {rho_certain}"));
    }

    let lossy = SwitchConfig::new(2, 2, vec![0.9, 0.9], vec![vec![0, 1]]).unwrap();
    let (rho_lossy, cert) = max_intensity(&lossy, &direction).unwrap();
    if (rho_lossy - 0.81).abs() > 1e-6 {
        failures.push(format!("p=0.9 boundary should be 0.81, got {rho_lossy}"));
    }

    // reconstruction: f from (θ, δ) must match the reported rate vector
    let mut recomputed = [0.0; 1];
    for d in &cert.delta {
        let theta = cert
            .theta
            .iter()
            .find(|(m, _)| *m == d.allocation)
            .map(|(_, w)| *w)
            .unwrap_or(0.0);
        let prob = connectivity_support(d.allocation, &lossy)
            .into_iter()
            .find(|o| o.connectivity == d.connectivity)
            .map(|o| o.probability)
            .unwrap();
        for r in d.service.served_classes() {
            recomputed[r] += theta * prob * d.weight;
        }
    }
    let residual = (recomputed[0] - cert.achieved_rate[0]).abs();
    if residual > 1e-9 {
        failures.push(format!("certificate reconstruction residual {residual:e} > 1e-9"));
    }
    report(
        "criterion 7 (capacity closed forms)",
        failures,
        format!("ρ*(p=1) = {rho_certain:.6}, ρ*(p=0.9) = {rho_lossy:.6}, residual {residual:.1e}"),
    );
}

/// Criterion 8: repeated runs with a fixed base seed emit byte-identical
/// CSV, whatever the parallelism.
#[test]
fn criterion_8_deterministic_output() {
    let s = &preset(Preset::Sim1)[0];
    let rs = s.resolve().expect("resolves");
    let first = stats_to_csv(&run_experiment(&rs).expect("runs"));
    let second = stats_to_csv(&run_experiment(&rs).expect("runs"));
    let single = {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        pool.install(|| stats_to_csv(&run_experiment(&rs).expect("runs")))
    };
    let quad = {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        pool.install(|| stats_to_csv(&run_experiment(&rs).expect("runs")))
    };
    let mut failures = Vec::new();
    if first != second {
        failures.push("two identical runs differ".into());
    }
    if first != single {
        failures.push("single-threaded run differs".into());
    }
    if first != quad {
        failures.push("four-thread run differs".into());
    }
    report(
        "criterion 8 (determinism)",
        failures,
        format!("{} CSV bytes identical across 4 runs and 3 pool sizes", first.len()),
    );
}
