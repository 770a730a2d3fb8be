// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test -p hgdbg-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hgdbg_cli::bench::{self, BenchConfig};
use hgdbg_core::conformance::{backend_check, oracle_check, replay, reverse_check, variable_set, Report};
use hgdbg_core::expr::{eval, parse_expr, truthy, Value};
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::{compile, Compiled};
use hgdbg_core::runtime::Debugger;
use hgdbg_core::simbackends::{CycleSim, Simulator};
use hgdbg_core::stimulus::parse_stimulus;
use hgdbg_core::symtab::SymbolSource;
use hgdbg_core::testgen::{random_program, random_stimulus, GenConfig};
use hgdbg_server::protocol::Envelope;
use hgdbg_server::transcript::two_client_session;
use hgdbg_server::{serve, Client, Session};
use rand::SeedableRng;
use serde_json::{json, Value as Json};

const PROGRAMS: u64 = 200;
const CYCLES: usize = 20;
const OVERHEAD_EDGES: usize = 100_000;
const OVERHEAD_TARGET: f64 = 1.05;
const OVERHEAD_GATE: f64 = 1.10;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(root().join("fixtures").join(name)).unwrap()
}

fn accumulator_fixture() -> Outcome {
    let start = Instant::now();
    let c = compile(&fixture("sum.mh"), "sum.mh", OptLevel::Debug).map_err(|e| e.to_string())?;
    let rows = c.table.breakpoints_at("sum.mh", 9, None).map_err(|e| e.to_string())?;
    if rows.len() != 2 {
        return Err(format!("{} breakpoints on the accumulation line, expected 2", rows.len()));
    }
    let enables: Vec<_> = rows.iter().map(|r| parse_expr(&r.enable)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    for d0 in [2u64, 3] {
        for d1 in [4u64, 5] {
            let env = BTreeMap::from([("top.data_0", Value::new(8, d0)), ("top.data_1", Value::new(8, d1))]);
            let holds = |k: usize| {
                eval(&enables[k], &mut |n: &str| env.get(n).copied())
                    .map(|v| truthy(&v))
                    .map_err(|e| e.to_string())
            };
            if holds(0)? != (d0 % 2 == 1) || holds(1)? != (d1 % 2 == 1) {
                return Err(format!("enables disagree with parity at data = [{d0}, {d1}]"));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("2 breakpoints, 4/4 parities, {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

struct Case {
    debug: Compiled,
    optimized: Compiled,
    stimulus: Vec<BTreeMap<String, u64>>,
}

fn corpus() -> Result<Vec<Case>, String> {
    (0..PROGRAMS)
        .map(|seed| {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let g = random_program(&mut rng, &GenConfig::default());
            let stimulus = random_stimulus(&mut rng, &g.inputs, CYCLES);
            let build = |level| compile(&g.source, "gen.mh", level).map_err(|e| format!("seed {seed}: {e}"));
            Ok(Case {
                debug: build(OptLevel::Debug)?,
                optimized: build(OptLevel::Optimized)?,
                stimulus,
            })
        })
        .collect()
}

fn over_corpus(cases: &[Case], check: fn(&Compiled, &[BTreeMap<String, u64>]) -> Result<Report, String>) -> Outcome {
    let start = Instant::now();
    let mut compared = 0;
    let mut mismatches = 0;
    let mut first = None;
    for (seed, c) in cases.iter().enumerate() {
        let r = check(&c.debug, &c.stimulus).map_err(|e| format!("seed {seed}: {e}"))?;
        compared += r.compared;
        mismatches += r.mismatches.len();
        if first.is_none() {
            first = r.mismatches.first().map(|m| format!("seed {seed}: {m}"));
        }
    }
    let detail = format!(
        "{} programs x {CYCLES} cycles, {compared} comparisons, {mismatches} mismatches, {:.1} s",
        cases.len(),
        start.elapsed().as_secs_f64()
    );
    match first {
        None if compared > 0 => Ok(detail),
        None => Err(format!("{detail}; nothing compared")),
        Some(m) => Err(format!("{detail}; first: {m}")),
    }
}

fn oracle(cases: &[Case], generation: Duration) -> Outcome {
    let start = Instant::now();
    let out = over_corpus(cases, oracle_check)?;
    let total = start.elapsed() + generation;
    if total >= Duration::from_secs(120) {
        return Err(format!("{out}; took {total:?} including generation"));
    }
    Ok(out)
}

fn overhead() -> Outcome {
    let w = bench::synthetic(OVERHEAD_EDGES).map_err(|e| e.to_string())?;
    let r = bench::run(&w, BenchConfig { runs: 5, breakpoints: 16 }).map_err(|e| e.to_string())?;
    let paired = r.paired_ratio();
    let target = if paired < OVERHEAD_TARGET { "within" } else { "above" };
    let detail = format!(
        "{} edges, 5 runs: attached/bare median paired ratio {paired:.4} (ratio of medians {:.4}), {target} the 5% target, gate 10%; {} never-firing breakpoints: ratio {:.3}, {} stops",
        r.edges,
        r.attached_ratio(),
        r.breakpoints,
        r.conditional_ratio(),
        r.conditional_stops
    );
    if r.conditional_stops != 0 {
        return Err(detail);
    }
    if paired < OVERHEAD_GATE {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn optimization(cases: &[Case]) -> Outcome {
    let src = fixture("dead_temp.mh");
    let has = |level| -> Result<bool, String> {
        let c = compile(&src, "dead_temp.mh", level).map_err(|e| e.to_string())?;
        Ok(c.table.variables.iter().any(|v| v.source_name == "scratch"))
    };
    if !has(OptLevel::Debug)? {
        return Err("dead temporary missing from the debug table".into());
    }
    if has(OptLevel::Optimized)? {
        return Err("dead temporary present in the optimized table".into());
    }
    let (mut debug_vars, mut opt_vars) = (0, 0);
    for (seed, c) in cases.iter().enumerate() {
        let d = variable_set(&c.debug);
        let o = variable_set(&c.optimized);
        if let Some(extra) = o.difference(&d).next() {
            return Err(format!("seed {seed}: optimized table has {extra:?} not in the debug table"));
        }
        debug_vars += d.len();
        opt_vars += o.len();
    }
    Ok(format!(
        "dead temporary debug-only; debug ⊇ optimized on {} programs ({debug_vars} vs {opt_vars} variables)",
        cases.len()
    ))
}

fn sum_session(live: bool) -> Result<Session, String> {
    let c = compile(&fixture("sum.mh"), "sum.mh", OptLevel::Debug).map_err(|e| e.to_string())?;
    let stim = parse_stimulus(&fixture("sum.stim")).map_err(|e| e.to_string())?.expand(&[], 4);
    let (sim, name): (Box<dyn Simulator + Send>, _) = if live {
        (Box::new(CycleSim::new(c.netlist.clone(), &stim).map_err(|e| e.to_string())?), "cycle-sim")
    } else {
        (Box::new(replay(&c, &stim)?), "vcd-replay")
    };
    let dbg = Debugger::attach(sim, c.table.clone(), None).map_err(|e| e.to_string())?;
    Ok(Session::new(dbg, name, Some(root().join("fixtures"))))
}

fn transcript() -> Result<String, String> {
    let server = serve(sum_session(false)?, "127.0.0.1:0").map_err(|e| e.to_string())?;
    let t = two_client_session(&server.url()).map_err(|e| e.to_string());
    server.shutdown();
    t
}

/// A capability-class error response must carry exactly the documented
/// envelope fields.
fn schema_error(r: &Envelope, reason: &str) -> Result<(), String> {
    let v: Json = serde_json::from_str(&r.to_text()).map_err(|e| e.to_string())?;
    let keys: Vec<&str> = v.as_object().map(|o| o.keys().map(String::as_str).collect()).unwrap_or_default();
    let ok = v["type"] == "response"
        && v["status"] == "error"
        && v["reason"] == reason
        && v["token"].is_string()
        && v["payload"]["message"].is_string()
        && keys == ["command", "payload", "reason", "status", "token", "type"];
    ok.then_some(()).ok_or_else(|| format!("{} does not match the error schema", r.to_text()))
}

fn protocol() -> Outcome {
    let first = transcript()?;
    let second = transcript()?;
    if first != second {
        return Err("two runs of the scripted session differ".into());
    }
    let golden_path = root().join("crates/server/tests/golden/two_clients.txt");
    let golden = std::fs::read_to_string(&golden_path).map_err(|e| format!("{}: {e}", golden_path.display()))?;
    if first != golden {
        return Err("scripted session differs from the golden transcript".into());
    }

    let mut checks = Vec::new();
    for (live, cmd, payload, reason) in [
        (false, "set-value", json!({"name": "data[0]", "value": 1}), "capability"),
        (true, "set-time", json!({"t": 10}), "capability"),
        (false, "set-time", json!({"t": 100000}), "time-range"),
    ] {
        let server = serve(sum_session(live)?, "127.0.0.1:0").map_err(|e| e.to_string())?;
        let mut c = Client::connect(&server.url()).map_err(|e| e.to_string())?;
        let r = c.request(cmd, payload).map_err(|e| e.to_string());
        c.close();
        server.shutdown();
        schema_error(&r?, reason)?;
        let backend = if live { "cycle-sim" } else { "replay" };
        checks.push(format!("{cmd} on {backend} -> {reason}"));
    }
    Ok(format!(
        "transcript of {} lines byte-stable and equal to golden; {}",
        first.lines().count(),
        checks.join(", ")
    ))
}

fn main() {
    let mut failed = Vec::new();
    let mut run = |name: &str, r: Outcome| {
        match &r {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                println!("FAIL {name}: {d}");
                failed.push(name.to_string());
            }
        }
    };
    run("accumulator-fixture", accumulator_fixture());

    let start = Instant::now();
    let cases = corpus();
    let generation = start.elapsed();
    match &cases {
        Ok(cases) => {
            run("oracle-soundness-completeness", oracle(cases, generation));
            run("backend-equivalence", over_corpus(cases, backend_check));
            run("reverse-debugging", over_corpus(cases, reverse_check));
            run("overhead", overhead());
            run("optimization", optimization(cases));
        }
        Err(e) => {
            for name in ["oracle-soundness-completeness", "backend-equivalence", "reverse-debugging", "optimization"] {
                run(name, Err(format!("corpus: {e}")));
            }
            run("overhead", overhead());
        }
    }
    run("protocol-goldens", protocol());

    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
