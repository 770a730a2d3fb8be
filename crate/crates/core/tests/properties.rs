// SPDX-License-Identifier: Apache-2.0

//! Properties over randomly generated programs and stimulus.

use std::collections::BTreeMap;
use std::sync::Arc;

use hgdbg_core::conformance::*;
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::{compile, Compiled};
use hgdbg_core::simbackends::{parse_vcd, CycleSim, EdgeControl, SimRead, Simulator, VcdReplay};
use hgdbg_core::testgen::{random_program, random_stimulus, GenConfig};
use proptest::prelude::*;
use rand::SeedableRng;

struct Case {
    source: String,
    stimulus: Vec<BTreeMap<String, u64>>,
}

fn case(seed: u64, cycles: usize) -> Case {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let g = random_program(&mut rng, &GenConfig::default());
    let stimulus = random_stimulus(&mut rng, &g.inputs, cycles);
    Case {
        source: g.source,
        stimulus,
    }
}

fn compiled(c: &Case, level: OptLevel) -> Compiled {
    compile(&c.source, "gen.mh", level).unwrap_or_else(|e| panic!("{e}\n{}", c.source))
}

fn check(r: Result<Report, String>, c: &Case) -> Result<(), TestCaseError> {
    let r = r.map_err(TestCaseError::fail)?;
    prop_assert!(r.ok(), "{}\n{}", r.mismatches.join("\n"), c.source);
    Ok(())
}

/// Value of every net at every edge.
fn edge_log(sim: &mut dyn Simulator, names: &[String]) -> Vec<(u64, Vec<String>)> {
    let mut log = Vec::new();
    while let Some(t) = sim.advance_to_next_edge().unwrap() {
        log.push((t, names.iter().map(|n| sim.get_value(n).unwrap().to_string()).collect()));
    }
    log
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stops_match_interpreter_log(seed in any::<u64>()) {
        let c = case(seed, 12);
        check(oracle_check(&compiled(&c, OptLevel::Debug), &c.stimulus), &c)?;
    }

    #[test]
    fn lowering_preserves_semantics(seed in any::<u64>()) {
        let c = case(seed, 12);
        check(semantic_check(&compiled(&c, OptLevel::Debug), &c.stimulus), &c)?;
        check(semantic_check(&compiled(&c, OptLevel::Optimized), &c.stimulus), &c)?;
    }

    #[test]
    fn replay_matches_cycle_sim(seed in any::<u64>()) {
        let c = case(seed, 12);
        check(backend_check(&compiled(&c, OptLevel::Debug), &c.stimulus), &c)?;
        check(backend_check(&compiled(&c, OptLevel::Optimized), &c.stimulus), &c)?;
    }

    #[test]
    fn reverse_retraces_forward(seed in any::<u64>()) {
        let c = case(seed, 8);
        check(reverse_check(&compiled(&c, OptLevel::Debug), &c.stimulus), &c)?;
    }

    #[test]
    fn optimized_variables_are_a_subset(seed in any::<u64>()) {
        let c = case(seed, 0);
        let debug = variable_set(&compiled(&c, OptLevel::Debug));
        let opt = variable_set(&compiled(&c, OptLevel::Optimized));
        prop_assert!(opt.is_subset(&debug), "{:?}", opt.difference(&debug).collect::<Vec<_>>());
        let d = compiled(&c, OptLevel::Debug);
        let o = compiled(&c, OptLevel::Optimized);
        prop_assert!(o.table.breakpoints.len() <= d.table.breakpoints.len());
        prop_assert!(o.netlist.nets.len() <= d.netlist.nets.len());
    }

    #[test]
    fn dump_reparses_to_recorded_changes(seed in any::<u64>()) {
        let c = case(seed, 6);
        let d = compiled(&c, OptLevel::Debug);
        let mut sim = CycleSim::new(d.netlist.clone(), &c.stimulus).unwrap();
        sim.enable_recording();
        sim.run_to_end().unwrap();
        let mut buf = Vec::new();
        sim.write_vcd(&mut buf).unwrap();
        let store = parse_vcd(std::str::from_utf8(&buf).unwrap()).unwrap();
        let mut want: BTreeMap<String, Vec<(u64, u64)>> = BTreeMap::new();
        for (t, changes) in sim.recorded_changes() {
            for (n, v) in changes {
                want.entry(n).or_default().push((t, v));
            }
        }
        for (name, changes) in want {
            let id = store.signal(&name).unwrap();
            let got: Vec<(u64, u64)> = store.changes(id).iter().map(|(t, v)| (*t, v.bits().unwrap())).collect();
            prop_assert_eq!(got, changes, "{}", name);
        }
    }

    #[test]
    fn replay_is_deterministic_and_seekable(seed in any::<u64>(), mid in 0u64..=75) {
        let c = case(seed, 8);
        let d = compiled(&c, OptLevel::Debug);
        let store = Arc::new(parse_vcd(&dump(&d, &c.stimulus).unwrap()).unwrap());
        let names: Vec<String> = d.netlist.nets.iter().map(|n| n.name.clone()).collect();
        let full = edge_log(&mut VcdReplay::new(store.clone()), &names);
        prop_assert_eq!(&edge_log(&mut VcdReplay::new(store.clone()), &names), &full);

        let mut seek = VcdReplay::new(store.clone());
        seek.advance_to_next_edge().unwrap();
        seek.advance_to_next_edge().unwrap();
        seek.set_time(mid).unwrap();
        let suffix: Vec<_> = full.iter().filter(|(t, _)| *t > mid).cloned().collect();
        prop_assert_eq!(edge_log(&mut seek, &names), suffix);
    }

    #[test]
    fn values_are_stable_within_an_edge(seed in any::<u64>()) {
        let c = case(seed, 6);
        let d = compiled(&c, OptLevel::Debug);
        let mut sim = CycleSim::new(d.netlist.clone(), &c.stimulus).unwrap();
        let names: Vec<String> = d.netlist.nets.iter().map(|n| n.name.clone()).collect();
        let mut stable = true;
        let edges = sim.on_clock_edge(&mut |s: &dyn SimRead, _t| {
            let a: Vec<_> = names.iter().map(|n| s.get_value(n).unwrap()).collect();
            let b: Vec<_> = names.iter().map(|n| s.get_value(n).unwrap()).collect();
            stable &= a == b;
            EdgeControl::Continue
        }).unwrap();
        prop_assert!(stable);
        prop_assert_eq!(edges, 6);
    }
}
