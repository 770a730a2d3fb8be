// SPDX-License-Identifier: Apache-2.0

use crate::expr::Value;
use crate::symtab::SourceKey;

/// A variable in a frame. Flattened element names (`io.a`, `data[1]`) are
/// regrouped into records and arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarNode {
    /// `None` when the net cannot be read from the backend.
    Leaf { value: Option<Value> },
    Record { fields: Vec<(String, VarNode)> },
    Array { items: Vec<VarNode> },
}

impl VarNode {
    pub fn value(&self) -> Option<Value> {
        match self {
            VarNode::Leaf { value } => *value,
            _ => None,
        }
    }

    /// Member by relative path, e.g. `a` or `[1]` or `io.a`.
    pub fn get(&self, path: &str) -> Option<&VarNode> {
        let mut node = self;
        for seg in segments(path) {
            node = match (node, seg) {
                (VarNode::Record { fields }, Seg::Field(f)) => fields.iter().find(|(n, _)| n == f).map(|(_, v)| v)?,
                (VarNode::Array { items }, Seg::Index(i)) => items.get(i)?,
                _ => return None,
            };
        }
        Some(node)
    }
}

impl std::fmt::Display for VarNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarNode::Leaf { value: Some(v) } => write!(f, "{v}"),
            VarNode::Leaf { value: None } => f.write_str("<unavailable>"),
            VarNode::Record { fields } => {
                f.write_str("{")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {v}")?;
                }
                f.write_str("}")
            }
            VarNode::Array { items } => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Seg<'a> {
    Field(&'a str),
    Index(usize),
}

fn segments(name: &str) -> Vec<Seg<'_>> {
    let mut out = Vec::new();
    for part in name.split('.') {
        let (head, rest) = match part.find('[') {
            Some(p) => part.split_at(p),
            None => (part, ""),
        };
        if !head.is_empty() {
            out.push(Seg::Field(head));
        }
        for idx in rest.split('[').filter(|s| !s.is_empty()) {
            match idx.trim_end_matches(']').parse() {
                Ok(i) => out.push(Seg::Index(i)),
                Err(_) => out.push(Seg::Field(idx)),
            }
        }
    }
    out
}

enum Build {
    Leaf(Option<Value>),
    Inner(Vec<(String, Option<usize>, Build)>),
}

fn insert(children: &mut Vec<(String, Option<usize>, Build)>, segs: &[Seg], value: Option<Value>) {
    let (label, index) = match segs[0] {
        Seg::Field(f) => (f.to_string(), None),
        Seg::Index(i) => (format!("[{i}]"), Some(i)),
    };
    let pos = match children.iter().position(|(n, _, _)| *n == label) {
        Some(p) => p,
        None => {
            children.push((label, index, Build::Inner(Vec::new())));
            children.len() - 1
        }
    };
    if segs.len() == 1 {
        children[pos].2 = Build::Leaf(value);
    } else if let Build::Inner(c) = &mut children[pos].2 {
        insert(c, &segs[1..], value);
    } else {
        // Name is both a leaf and a prefix; keep the leaf.
    }
}

fn finish(children: Vec<(String, Option<usize>, Build)>) -> VarNode {
    let dense = !children.is_empty()
        && children.iter().all(|(_, i, _)| i.is_some())
        && {
            let mut idx: Vec<usize> = children.iter().map(|(_, i, _)| i.unwrap()).collect();
            idx.sort_unstable();
            idx.iter().enumerate().all(|(k, i)| k == *i)
        };
    let conv = |b: Build| match b {
        Build::Leaf(v) => VarNode::Leaf { value: v },
        Build::Inner(c) => finish(c),
    };
    if dense {
        let mut c = children;
        c.sort_by_key(|(_, i, _)| i.unwrap());
        VarNode::Array {
            items: c.into_iter().map(|(_, _, b)| conv(b)).collect(),
        }
    } else {
        VarNode::Record {
            fields: children.into_iter().map(|(n, _, b)| (n, conv(b))).collect(),
        }
    }
}

/// Regroup flattened element names into a tree, keeping first-appearance
/// order of top-level names.
pub fn regroup(vars: &[(String, Option<Value>)]) -> Vec<(String, VarNode)> {
    let mut root = Vec::new();
    for (name, v) in vars {
        let segs = segments(name);
        if segs.is_empty() {
            continue;
        }
        insert(&mut root, &segs, *v);
    }
    match finish(root) {
        VarNode::Record { fields } => fields,
        VarNode::Array { items } => items.into_iter().enumerate().map(|(i, v)| (format!("[{i}]"), v)).collect(),
        VarNode::Leaf { .. } => Vec::new(),
    }
}

/// Reconstructed source-level scope of one hardware thread at a stop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSnapshot {
    /// Instance path.
    pub thread: String,
    pub breakpoint_id: i64,
    pub key: SourceKey,
    pub time: u64,
    /// Whether the enable and user conditions held. Always true for stops
    /// made by `continue`.
    pub fired: bool,
    pub locals: Vec<(String, VarNode)>,
    pub instance_vars: Vec<(String, VarNode)>,
}

impl FrameSnapshot {
    pub fn local(&self, path: &str) -> Option<&VarNode> {
        lookup(&self.locals, path)
    }

    pub fn instance_var(&self, path: &str) -> Option<&VarNode> {
        lookup(&self.instance_vars, path)
    }
}

fn lookup<'a>(vars: &'a [(String, VarNode)], path: &str) -> Option<&'a VarNode> {
    let segs = segments(path);
    let Some(Seg::Field(first)) = segs.first() else {
        return None;
    };
    let (_, node) = vars.iter().find(|(n, _)| n == first)?;
    let rest_start = path.find(['.', '[']).unwrap_or(path.len());
    let rest = path[rest_start..].trim_start_matches('.');
    if rest.is_empty() {
        Some(node)
    } else {
        node.get(rest)
    }
}
