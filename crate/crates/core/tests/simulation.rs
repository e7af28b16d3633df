mod common;

use common::scenario_path;
use trustnum_core::interference::{build_conflict_graph, CapacityRegion};
use trustnum_core::oracle::{brute_force, check_feasible, OracleConfig};
use trustnum_core::sim::{self, load_scenario, trust_trajectory, Scenario, SimError};

fn fig5() -> Scenario {
    load_scenario(scenario_path("paper_fig5.json")).unwrap()
}

#[test]
fn bundled_fixture_shape() {
    let s = fig5();
    assert_eq!(s.network.node_count(), 8);
    assert_eq!(s.network.link_count(), 11);
    assert_eq!(s.flows.len(), 1);
    assert_eq!(s.flows[0].paths.len(), 5);
    assert_eq!(s.periods(), 4);
    assert!(s.network.links().iter().all(|l| l.capacity == 10.0));
    assert_eq!(s.rate_sweep, vec![10.0, 14.0]);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(
        load_scenario(scenario_path("nope.json")),
        Err(SimError::Io(_))
    ));
}

#[test]
fn trust_follows_ewma_from_raw_first_row() {
    let s = fig5();
    let traj = trust_trajectory(&s).unwrap();
    assert_eq!(traj[0].values(), s.trust_schedule[0].as_slice());
    // node "5": 0.2 * 0.7 + 0.8 * 0.2
    assert!((traj[1].values()[5] - 0.3).abs() < 1e-12);
    assert!((traj[2].values()[5] - (0.2 * 0.3 + 0.8 * 0.1)).abs() < 1e-12);
}

#[test]
fn bundled_run_trace() {
    let s = fig5().with_max_rate(10.0).unwrap();
    let trace = sim::run(&s).unwrap();
    assert_eq!(trace.records.len(), 160);
    assert!(trace.all_converged());
    let mut distinct: Vec<&Vec<Vec<f64>>> = trace.records.iter().map(|r| &r.x).collect();
    distinct.dedup();
    assert_eq!(distinct.len(), 4);
    for (i, r) in trace.records.iter().enumerate() {
        assert_eq!(r.slot, i as u64 + 1);
        assert_eq!(r.period, i / 40 + 1);
        for path in &s.flows[0].paths {
            let delay: f64 = path.links().iter().map(|l| s.kappa / r.sigma[l.0]).sum();
            assert!(
                delay <= s.flows[0].delay_bound + 1e-3,
                "slot {}: delay {delay}",
                r.slot
            );
        }
    }
    let rerun = sim::run(&s).unwrap();
    assert_eq!(trace.records, rerun.records);
}

#[test]
fn constant_trust_single_period() {
    let mut s = fig5().with_max_rate(10.0).unwrap();
    s.trust_schedule.truncate(1);
    s.slots = 40;
    let trace = sim::run(&s).unwrap();
    assert_eq!(trace.records.len(), 40);
    assert!(trace
        .records
        .windows(2)
        .all(|w| w[0].x == w[1].x && w[0].sigma == w[1].sigma));
}

#[test]
fn csv_and_charts_layout() {
    let s = fig5().with_max_rate(10.0).unwrap();
    let trace = sim::run(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    sim::emit_csv(&trace, dir.path()).unwrap();
    sim::emit_charts(&trace, dir.path()).unwrap();
    let rates = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 161);
    assert_eq!(
        rates.lines().next().unwrap(),
        "slot,period,x_s1,x_s2,x_s3,x_s4,x_s5"
    );
    assert!(!rates.contains('\r'));
    let margins = std::fs::read_to_string(dir.path().join("margins.csv")).unwrap();
    assert!(margins.starts_with("slot,period,sigma_s-1,sigma_1-2,sigma_2-d,"));
    let svg = std::fs::read_to_string(dir.path().join("rates.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
    let labels: Vec<usize> = (1..=5)
        .map(|k| svg.find(&format!(">x_s{k}<")).unwrap())
        .collect();
    assert!(labels.windows(2).all(|w| w[0] < w[1]));
    let svg = std::fs::read_to_string(dir.path().join("margins.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 11);
}

#[test]
fn tiny_scenarios_agree_with_oracle() {
    for name in [
        "tiny_single_link.json",
        "tiny_two_paths.json",
        "tiny_one_conflict.json",
    ] {
        let s = load_scenario(scenario_path(name)).unwrap();
        let trace = sim::run(&s).unwrap();
        let sol = trace.periods[0].solution.as_ref().unwrap();
        assert!(sol.convergence.is_some(), "{name}");

        let cg = build_conflict_graph(&s.network, &s.interference).unwrap();
        let region = CapacityRegion::enumerate(&s.network, &cg, s.enumeration_cap).unwrap();
        let trust = &trust_trajectory(&s).unwrap()[0];
        let cfg = OracleConfig::for_network(&s.network, s.kappa);
        let oracle = brute_force(&s.network, &s.flows, trust, &region, &cfg).unwrap();
        let u = sol.diagnostics.primal;
        assert!(
            (u - oracle.objective).abs() <= 1e-2 * oracle.objective.abs(),
            "{name}: {u} vs {}",
            oracle.objective
        );

        // The solver's point passes the oracle's independent feasibility check.
        let beta = sol.schedule_weights.clone();
        let v = check_feasible(
            &s.network,
            &s.flows,
            trust,
            &region,
            &sol.primal.x,
            &sol.primal.sigma,
            &beta,
            &cfg,
            1e-6,
        );
        assert!(v.is_empty(), "{name}: {v:?}");
    }
}
