// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use hgdbg_core::conformance::replay;
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::compile;
use hgdbg_core::runtime::Debugger;
use hgdbg_core::simbackends::{CycleSim, Simulator};
use hgdbg_core::stimulus::parse_stimulus;
use hgdbg_server::protocol::{reason, Envelope, Kind};
use hgdbg_server::transcript::two_client_session;
use hgdbg_server::{serve, Client, ServerHandle, Session};
use serde_json::{json, Value as Json};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn sum_server(live: bool, stimulus: Vec<BTreeMap<String, u64>>) -> ServerHandle {
    let src = std::fs::read_to_string(fixtures().join("sum.mh")).unwrap();
    let c = compile(&src, "sum.mh", OptLevel::Debug).unwrap();
    let (sim, name): (Box<dyn Simulator + Send>, _) = if live {
        (Box::new(CycleSim::new(c.netlist.clone(), &stimulus).unwrap()), "cycle-sim")
    } else {
        (Box::new(replay(&c, &stimulus).unwrap()), "vcd-replay")
    };
    let dbg = Debugger::attach(sim, c.table.clone(), None).unwrap();
    serve(Session::new(dbg, name, Some(fixtures())), "127.0.0.1:0").unwrap()
}

fn sum_stimulus() -> Vec<BTreeMap<String, u64>> {
    let text = std::fs::read_to_string(fixtures().join("sum.stim")).unwrap();
    parse_stimulus(&text).unwrap().expand(&[], 4)
}

#[test]
fn two_client_golden_transcript() {
    let server = sum_server(false, sum_stimulus());
    let text = two_client_session(&server.url()).unwrap();
    server.shutdown();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/two_clients.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden missing; run with UPDATE_GOLDEN=1");
    assert_eq!(text, want, "transcript differs from {}", path.display());

    let responses: Vec<Envelope> = text
        .lines()
        .filter_map(|l| l.split_once(" < "))
        .map(|(_, j)| serde_json::from_str(j).unwrap())
        .collect();
    let find = |cmd: &str| responses.iter().find(|r| r.command == cmd).unwrap();
    assert_eq!(find("set-breakpoint").field("ids").as_array().unwrap().len(), 2);
    assert_eq!(find("evaluate").field("value"), "1");
    assert_eq!(find("set-value").reason.as_deref(), Some(reason::CAPABILITY));
    assert_eq!(find("set-time").reason.as_deref(), Some(reason::TIME_RANGE));
    // Both clients see every stop.
    let stops = |who: &str| text.lines().filter(|l| l.starts_with(who) && l.contains(r#""command":"stopped""#)).count();
    assert_eq!(stops("A <"), 4);
    assert_eq!(stops("B <"), 4);
}

#[test]
fn capability_errors_follow_schema() {
    for (live, cmd, payload) in [
        (false, "set-value", json!({"name": "data[0]", "value": 1})),
        (true, "set-time", json!({"t": 10})),
    ] {
        let server = sum_server(live, sum_stimulus());
        let mut c = Client::connect(&server.url()).unwrap();
        let caps = c.request("info", json!({"what": "capabilities"})).unwrap();
        let flag = if cmd == "set-value" { "can-set-value" } else { "can-set-time" };
        assert_eq!(caps.field(flag), false);
        let r = c.request(cmd, payload).unwrap();
        let v: Json = serde_json::from_str(&r.to_text()).unwrap();
        assert_eq!(v["type"], "response");
        assert_eq!(v["token"], "2");
        assert_eq!(v["command"], cmd);
        assert_eq!(v["status"], "error");
        assert_eq!(v["reason"], "capability");
        assert!(v["payload"]["message"].is_string());
        assert_eq!(v.as_object().unwrap().len(), 6);
        server.shutdown();
    }
}

#[test]
fn every_token_answered_exactly_once() {
    let server = sum_server(false, sum_stimulus());
    let url = server.url();
    let workers: Vec<_> = (0..2)
        .map(|k| {
            let url = url.clone();
            std::thread::spawn(move || {
                let mut c = Client::connect(&url).unwrap();
                let cmds = [
                    ("info", json!({"what": "time"})),
                    ("list-breakpoints", json!({})),
                    ("evaluate", json!({"expr": "data[1]"})),
                    ("bogus", json!({})),
                    ("set-breakpoint", json!({"file": "sum.mh", "line": 6})),
                    ("info", json!({"what": "threads"})),
                ];
                let mut sent = Vec::new();
                for i in 0..60 {
                    let (cmd, p) = &cmds[(i * 7 + k) % cmds.len()];
                    let token = format!("c{k}-{i}");
                    c.send_raw(&Envelope::request(&token, cmd, p.clone()).to_text()).unwrap();
                    sent.push(token);
                }
                c.send_raw("{not json").unwrap();
                let mut got = BTreeMap::<String, usize>::new();
                for _ in 0..=sent.len() {
                    let r = c.next_response().unwrap();
                    assert_eq!(r.kind, Kind::Response);
                    *got.entry(r.token.clone().unwrap_or_default()).or_default() += 1;
                }
                assert_eq!(got.remove(""), Some(1), "parse error carries no token");
                assert_eq!(got.len(), sent.len());
                assert!(sent.iter().all(|t| got.get(t) == Some(&1)));
                assert!(c.drain_events(Duration::from_millis(50)).unwrap().is_empty());
            })
        })
        .collect();
    for w in workers {
        w.join().unwrap();
    }
    server.shutdown();
}

#[test]
fn malformed_json_keeps_connection() {
    let server = sum_server(false, sum_stimulus());
    let mut c = Client::connect(&server.url()).unwrap();
    c.send_raw(r#"{"type": "request", "token": "x1", "command": 5}"#).unwrap();
    let r = c.next_response().unwrap();
    assert_eq!(r.reason.as_deref(), Some(reason::PARSE));
    assert_eq!(r.token.as_deref(), Some("x1"));
    c.send_raw("]]").unwrap();
    assert_eq!(c.next_response().unwrap().reason.as_deref(), Some(reason::PARSE));
    assert!(c.request("info", json!({"what": "time"})).unwrap().is_success());
    server.shutdown();
}

#[test]
fn disconnect_while_paused() {
    let server = sum_server(false, sum_stimulus());
    let mut a = Client::connect(&server.url()).unwrap();
    let mut b = Client::connect(&server.url()).unwrap();
    a.request("set-breakpoint", json!({"file": "sum.mh", "line": 9})).unwrap();
    a.request("continue", json!({})).unwrap();
    let first = a.wait_outcome().unwrap();
    assert_eq!(first.command, "stopped");
    a.close();
    assert_eq!(b.wait_outcome().unwrap(), first);
    let t = b.request("info", json!({"what": "time"})).unwrap();
    assert_eq!(t.field("state"), "paused");
    b.request("continue", json!({})).unwrap();
    let next = b.wait_outcome().unwrap();
    assert_eq!(next.command, "stopped");
    assert!(next.field("stop-id").as_u64() > first.field("stop-id").as_u64());
    server.shutdown();
}

#[test]
fn stopped_never_follows_its_own_resumed() {
    let server = sum_server(false, sum_stimulus());
    let mut a = Client::connect(&server.url()).unwrap();
    let mut watcher = Client::connect(&server.url()).unwrap();
    a.request("set-breakpoint", json!({"file": "sum.mh", "line": 9})).unwrap();
    for cmd in ["continue", "continue", "step-over", "reverse-step", "reverse-continue", "continue", "continue"] {
        a.request(cmd, json!({})).unwrap();
        a.wait_outcome().unwrap();
    }
    let events = watcher.drain_events(Duration::from_millis(200)).unwrap();
    assert_eq!(events.iter().filter(|e| e.command == "resumed").count(), 7);
    let mut left = std::collections::BTreeSet::new();
    for e in &events {
        match e.command.as_str() {
            "resumed" => {
                if let Some(id) = e.field("from").as_u64() {
                    left.insert(id);
                }
            }
            "stopped" => assert!(!left.contains(&e.field("stop-id").as_u64().unwrap()), "{e:?}"),
            _ => {}
        }
    }
    server.shutdown();
}

#[test]
fn pause_interrupts_a_long_run() {
    let mut stim = vec![BTreeMap::new(); 200_000];
    stim[0].insert("data[0]".to_string(), 2u64);
    let server = sum_server(true, stim);
    let mut a = Client::connect(&server.url()).unwrap();
    let mut b = Client::connect(&server.url()).unwrap();
    let idle = b.request("pause", json!({})).unwrap();
    assert_eq!(idle.field("interrupted"), false);
    a.request("set-breakpoint", json!({"file": "sum.mh", "line": 9, "condition": "data[0] > 200"}))
        .unwrap();
    a.request("continue", json!({})).unwrap();
    b.wait_event("resumed").unwrap();
    std::thread::sleep(Duration::from_millis(50));
    let p = b.request("pause", json!({})).unwrap();
    let o = b.wait_outcome().unwrap();
    assert_eq!(p.field("interrupted"), true);
    assert_eq!(o.command, "stopped", "{o:?}");
    assert_eq!(o.field("reason"), "pause");
    assert!(o.field("time").as_u64().unwrap() < 2_000_000);
    server.shutdown();
}
