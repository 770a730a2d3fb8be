// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use super::HierNode;

/// Prefix rewrite from the generated top (`top`) to its location in the
/// backend (`tb.dut`).
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct HierarchyMap {
    pub from: String,
    pub to: String,
}

impl HierarchyMap {
    pub fn identity(top: &str) -> Self {
        HierarchyMap {
            from: top.to_string(),
            to: top.to_string(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.from == self.to
    }

    /// Rewrite a symbol-table name into a backend name. Names outside the
    /// mapped subtree are returned unchanged.
    pub fn map(&self, name: &str) -> String {
        swap_prefix(name, &self.from, &self.to)
    }

    pub fn unmap(&self, name: &str) -> String {
        swap_prefix(name, &self.to, &self.from)
    }
}

fn swap_prefix(name: &str, from: &str, to: &str) -> String {
    if name == from {
        return to.to_string();
    }
    match name.strip_prefix(from).and_then(|r| r.strip_prefix('.')) {
        Some(rest) => format!("{to}.{rest}"),
        None => name.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapResult {
    pub map: HierarchyMap,
    /// Set when several subtrees matched equally well.
    pub warning: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("no instance paths given")]
    Empty,
    #[error("no scope in the trace matches the design hierarchy under `{0}`")]
    NoCandidate(String),
}

/// Locate the generated design inside a backend hierarchy.
///
/// `instances` lists instance paths (`top`, `top.u`, ...) with the leaf
/// signal names expected in each. A backend scope is a candidate when every
/// child instance path exists beneath it; candidates are ranked by the
/// number of expected signal leaves found, then by path.
pub fn map_hierarchy(instances: &[(String, Vec<String>)], backend: &HierNode) -> Result<MapResult, MapError> {
    let top = instances
        .iter()
        .map(|(p, _)| p.as_str())
        .min_by_key(|p| p.matches('.').count())
        .ok_or(MapError::Empty)?
        .to_string();
    let relative: Vec<(&str, &[String])> = instances
        .iter()
        .map(|(p, s)| {
            let r = if *p == top { "" } else { p.strip_prefix(&format!("{top}.")).unwrap_or(p) };
            (r, s.as_slice())
        })
        .collect();
    let want_signals = relative.iter().any(|(_, s)| !s.is_empty());

    let mut best: Vec<(usize, &str)> = Vec::new();
    let mut best_score = 0;
    for node in backend.walk() {
        if node.name.is_empty() {
            continue;
        }
        let mut score = 0;
        let mut fits = true;
        for (rel, signals) in &relative {
            let path = if rel.is_empty() { node.name.clone() } else { format!("{}.{rel}", node.name) };
            match backend.find(&path) {
                Some(scope) => score += signals.iter().filter(|s| scope.signals.contains(s)).count(),
                None => {
                    fits = false;
                    break;
                }
            }
        }
        if !fits || (want_signals && score == 0) {
            continue;
        }
        if best.is_empty() || score > best_score {
            best_score = score;
            best = vec![(score, node.name.as_str())];
        } else if score == best_score {
            best.push((score, node.name.as_str()));
        }
    }
    best.sort_by(|a, b| a.1.cmp(b.1));
    let Some(&(_, first)) = best.first() else {
        return Err(MapError::NoCandidate(top));
    };
    // The generated design itself is never ambiguous.
    let chosen = if best.iter().any(|(_, n)| *n == top) { top.as_str() } else { first };
    let warning = (best.len() > 1 && chosen != top).then(|| {
        let names: Vec<&str> = best.iter().map(|(_, n)| *n).collect();
        format!("design matches several scopes ({}); using `{chosen}`", names.join(", "))
    });
    Ok(MapResult {
        map: HierarchyMap {
            from: top.clone(),
            to: chosen.to_string(),
        },
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(p: &str, s: &[&str]) -> (String, Vec<String>) {
        (p.to_string(), s.iter().map(|x| x.to_string()).collect())
    }

    #[test]
    fn finds_dut_under_testbench() {
        let backend = HierNode::from_signals(["tb.clk", "tb.dut.a", "tb.dut.child.b", "tb.other.a"]);
        let r = map_hierarchy(&[inst("mod", &["a"]), inst("mod.child", &["b"])], &backend).unwrap();
        assert_eq!(r.map.to, "tb.dut");
        assert_eq!(r.map.map("mod.child.b"), "tb.dut.child.b");
        assert_eq!(r.map.unmap("tb.dut.a"), "mod.a");
        assert_eq!(r.map.map("model.x"), "model.x");
        assert!(r.warning.is_none());
    }

    #[test]
    fn identity_without_testbench() {
        let backend = HierNode::from_signals(["top.clk", "top.sum__0"]);
        let r = map_hierarchy(&[inst("top", &["clk", "sum__0"])], &backend).unwrap();
        assert!(r.map.is_identity());
    }

    #[test]
    fn twin_duts_pick_first_with_warning() {
        let backend = HierNode::from_signals(["tb.b.x", "tb.a.x"]);
        let r = map_hierarchy(&[inst("top", &["x"])], &backend).unwrap();
        assert_eq!(r.map.to, "tb.a");
        assert!(r.warning.unwrap().contains("tb.b"));
    }

    #[test]
    fn more_matching_signals_wins() {
        let backend = HierNode::from_signals(["tb.a.x", "tb.b.x", "tb.b.y"]);
        let r = map_hierarchy(&[inst("top", &["x", "y"])], &backend).unwrap();
        assert_eq!(r.map.to, "tb.b");
        assert!(r.warning.is_none());
    }

    #[test]
    fn no_candidate() {
        let backend = HierNode::from_signals(["tb.a.x"]);
        assert_eq!(
            map_hierarchy(&[inst("top", &["x"]), inst("top.u", &["y"])], &backend),
            Err(MapError::NoCandidate("top".into()))
        );
        assert_eq!(map_hierarchy(&[], &backend), Err(MapError::Empty));
    }
}
