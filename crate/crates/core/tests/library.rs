mod common;

use std::sync::Arc;
use std::time::Duration;

use common::*;
use pairgen::bench::{gen_instances, run_bench, BenchConfig, InstanceSpec};
use pairgen::interactions::build_universe;
use pairgen::milp::write_lp;
use pairgen::monolithic::{build_monolithic, minimal_suite, MonolithicConfig};
use pairgen::pipeline::{run, PipelineConfig};
use pairgen::{io, FactorSystem};

fn constrained_spec(seed: u64) -> InstanceSpec {
    InstanceSpec {
        count: 4,
        n_factors: 5,
        levels: (2, 4),
        num_avoid: 2,
        num_must: 2,
        must_arity: (2, 3),
        seed,
        ..InstanceSpec::desk()
    }
}

#[test]
fn emitted_models_parse_back_identically() {
    for inst in gen_instances(&constrained_spec(1)).unwrap() {
        let text = io::emit_model(&inst.system, &inst.constraints).unwrap();
        let (sys, cs) = io::parse_model(&text).unwrap();
        assert_eq!(&sys, inst.system.as_ref());
        assert_eq!(cs, inst.constraints);
    }
}

#[test]
fn generated_suites_survive_a_csv_round_trip_and_verify() {
    for inst in gen_instances(&constrained_spec(2)).unwrap() {
        let r = run(&inst.system, &inst.constraints, &PipelineConfig::default(), None).unwrap();
        let csv = io::write_suite_csv(&r.final_suite).unwrap();
        let back = io::read_suite_csv(&csv, &inst.system).unwrap();
        assert_eq!(back, r.final_suite);
        let rows = rows_of(&back);
        verify_rows(
            &inst.system.level_counts(),
            &tuples_of(inst.constraints.avoid()),
            &tuples_of(inst.constraints.must()),
            &rows,
        )
        .unwrap();
    }
}

#[test]
fn minimal_sizes_match_exhaustive_search() {
    for levels in [vec![2, 2], vec![2, 2, 2], vec![3, 2, 2], vec![3, 3]] {
        let sys = Arc::new(FactorSystem::from_level_counts(&levels).unwrap());
        let cs = constraint_set(&sys, &[], &[]);
        let u = build_universe(&sys, &cs, false);
        let ms = minimal_suite(&sys, &u, &cs, Duration::from_secs(60)).unwrap();
        assert!(ms.proven_minimal);
        assert_eq!(ms.suite.len(), brute_min_suite(&levels, &[], &[]), "{levels:?}");
    }
}

#[test]
fn monolithic_lp_export_names_every_variable() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/5g.model")).unwrap();
    let (sys, cs) = io::parse_model(&text).unwrap();
    let sys = Arc::new(sys);
    let u = build_universe(&sys, &cs, false);
    let mm = build_monolithic(&sys, &u, &cs, &MonolithicConfig::new(2)).unwrap();
    let lp = write_lp(&mm.model);
    for name in mm.model.var_names() {
        assert!(lp.contains(name.as_str()), "{name} missing");
    }
    assert!(lp.trim_end().ends_with("End"));
}

#[test]
fn bench_sizes_are_consistent() {
    let instances = gen_instances(&constrained_spec(3)).unwrap();
    let cfg = BenchConfig {
        unweighted: true,
        ..BenchConfig::default()
    };
    let res = run_bench(&instances, &cfg).unwrap();
    assert_eq!(res.methods, ["seqtg", "seqtg_nw", "greedy"]);
    for (inst, r) in instances.iter().zip(&res.instances) {
        assert_eq!(r.pairs, inst.pair_count());
        assert!(r.sizes.iter().all(|&s| s > 0));
        assert!((0.0..=1.0).contains(&r.greedy_tail));
    }
    let ranks = res.ranks_csv();
    assert_eq!(ranks.lines().count(), 4);
}
